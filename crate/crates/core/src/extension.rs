//! Boundary-average extension of lattice fields across bad components, and
//! piecewise-constant embeddings of lattice and cloud fields into `L^q`.

use rayon::prelude::*;

use crate::bad_boxes::ComponentGraph;
use crate::energy::{lattice_energy, lattice_norm, pow_abs, NeighborMode};
use crate::error::{Error, Result};
use crate::field::{CloudField, LatticeField};
use crate::geometry::Region;
use crate::lattice::LatticePartition;
use crate::regularity::{RasterGrid, VoronoiRaster};

/// Mean of `v` over the boundary layer of every component, in component order.
pub fn boundary_means(v: &LatticeField, graph: &ComponentGraph, partition: &LatticePartition) -> Result<Vec<f64>> {
    v.check(partition)?;
    graph
        .boundary
        .iter()
        .enumerate()
        .map(|(id, layer)| {
            if layer.is_empty() {
                return Err(Error::EmptyBoundary { component: id });
            }
            let mut sum = 0.0;
            for &j in layer {
                sum += v.get(j).ok_or_else(|| Error::Undefined(partition.box_at(j)))?;
            }
            Ok(sum / layer.len() as f64)
        })
        .collect()
}

/// Keeps `v` on the good boxes and fills each bad component with the mean of
/// `v` over its boundary layer. `v` must be defined on every good box.
pub fn extend(v: &LatticeField, graph: &ComponentGraph, partition: &LatticePartition) -> Result<LatticeField> {
    v.check(partition)?;
    if graph.component_of.len() != partition.len() {
        return Err(Error::FieldLength { expected: partition.len(), got: graph.component_of.len() });
    }
    let means = boundary_means(v, graph, partition)?;
    let mut out = LatticeField::undefined(partition);
    for (i, comp) in graph.component_of.iter().enumerate() {
        match comp {
            Some(id) => out.set(i, means[*id]),
            None => out.set(i, v.get(i).ok_or_else(|| Error::Undefined(partition.box_at(i)))?),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionReport {
    /// Face-pair `q`-energy of the extended field.
    pub energy_q: f64,
    /// Face-pair `q`-energy of `v` over pairs of good boxes.
    pub good_pair_q: f64,
    /// `sum_U sum_{J in dU} |v(J) - mean_U|^q s^(d-q)`.
    pub correction_q: f64,
    /// `sum |Tv|^q s^d`.
    pub norm_q: f64,
    /// `energy_q / (good_pair_q + correction_q)`, the constant the pair and
    /// correction terms need to dominate the extended energy. Zero when all
    /// three vanish.
    pub domination_ratio: f64,
}

pub fn extension_energy_report(
    v: &LatticeField,
    tv: &LatticeField,
    graph: &ComponentGraph,
    partition: &LatticePartition,
    q: f64,
) -> Result<ExtensionReport> {
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::InvalidParams(format!("q must be >= 1, got {q}")));
    }
    tv.check(partition)?;
    if !tv.is_total() {
        return Err(Error::InvalidParams("extended field must be defined on every box".into()));
    }
    let energy_q = lattice_energy(tv, partition, q, NeighborMode::Face)?;
    let good_pair_q = if v.domain_len() == 0 { 0.0 } else { lattice_energy(v, partition, q, NeighborMode::Face)? };
    let means = boundary_means(v, graph, partition)?;
    let scale = partition.s().powf(partition.dim() as f64 - q);
    let mut correction = 0.0;
    for (layer, mean) in graph.boundary.iter().zip(&means) {
        for &j in layer {
            correction += pow_abs(v.get(j).expect("checked by boundary_means") - mean, q);
        }
    }
    let correction_q = correction * scale;
    let norm_q = lattice_norm(tv, partition, q)?;
    let denom = good_pair_q + correction_q;
    let domination_ratio = if energy_q == 0.0 {
        0.0
    } else if denom == 0.0 {
        f64::INFINITY
    } else {
        energy_q / denom
    };
    Ok(ExtensionReport { energy_q, good_pair_q, correction_q, norm_q, domination_ratio })
}

/// A function constant on the boxes of a partition or on the raster cells of
/// a Voronoi labeling.
#[derive(Debug, Clone)]
pub enum PiecewiseConstant<'a> {
    Boxes { partition: &'a LatticePartition, values: Vec<f64> },
    /// Value per cloud point; `None` leaves that point's cell out of the support.
    Cells { raster: &'a VoronoiRaster, values: Vec<Option<f64>> },
}

pub fn embed_lattice<'a>(v: &LatticeField, partition: &'a LatticePartition) -> Result<PiecewiseConstant<'a>> {
    v.check(partition)?;
    let values = (0..partition.len())
        .map(|i| v.get(i).ok_or_else(|| Error::Undefined(partition.box_at(i))))
        .collect::<Result<Vec<_>>>()?;
    Ok(PiecewiseConstant::Boxes { partition, values })
}

/// The Voronoi step function of `u`, restricted to the cells of points with
/// `active[i]` set (all points when `active` is `None`).
pub fn embed_cloud<'a>(u: &CloudField, raster: &'a VoronoiRaster, active: Option<&[bool]>) -> Result<PiecewiseConstant<'a>> {
    if u.len() != raster.seed_count() {
        return Err(Error::FieldLength { expected: raster.seed_count(), got: u.len() });
    }
    if let Some(a) = active {
        if a.len() != u.len() {
            return Err(Error::FieldLength { expected: u.len(), got: a.len() });
        }
    }
    let values = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &x)| active.is_none_or(|a| a[i]).then_some(x))
        .collect();
    Ok(PiecewiseConstant::Cells { raster, values })
}

impl PiecewiseConstant<'_> {
    pub fn value_at(&self, x: &[f64]) -> Option<f64> {
        match self {
            PiecewiseConstant::Boxes { partition, values } => partition.index_of_point(x).map(|i| values[i]),
            PiecewiseConstant::Cells { raster, values } => {
                raster.grid().cell_of(x).and_then(|c| values[raster.labels()[c] as usize])
            }
        }
    }

    /// `(int_region |f|^q)^(1/q)`.
    pub fn lq_norm(&self, region: &Region, q: f64) -> Result<f64> {
        lq_distance(self, Target::Smooth(&|_| 0.0), region, q, None)
    }
}

/// Second argument of [`lq_distance`].
#[derive(Clone, Copy)]
pub enum Target<'a> {
    Step(&'a PiecewiseConstant<'a>),
    Smooth(&'a (dyn Fn(&[f64]) -> f64 + Sync)),
}

/// Restricts an integral to part of the domain.
#[derive(Debug, Clone, Copy)]
pub enum Mask<'a> {
    /// Per-box flags of the partition of a `Boxes` embedding.
    Boxes(&'a [bool]),
    /// Raster cells with the flag set; the integral becomes a raster sum.
    Raster(&'a RasterGrid, &'a [bool]),
}

const REL_TOL: f64 = 1e-4;
const MAX_REFINE: usize = 512;
/// Cap on midpoint sub-boxes per box, so high dimensions stop refining earlier.
const MAX_SUBCELLS: usize = 1 << 20;

fn check_q(q: f64) -> Result<()> {
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::InvalidParams(format!("q must be >= 1, got {q}")));
    }
    Ok(())
}

/// `(int_{region ∩ mask} |a - b|^q dx)^(1/q)`.
///
/// Box step functions against box step functions are integrated exactly over
/// the common refinement of both partitions. Against a smooth target each box
/// uses the midpoint rule on `n^d` sub-boxes with `n` doubled until the total
/// changes by less than `1e-4` relative. Voronoi embeddings and raster masks
/// reduce to raster sums; cells where either side is undefined are skipped.
pub fn lq_distance(a: &PiecewiseConstant, b: Target, region: &Region, q: f64, mask: Option<Mask>) -> Result<f64> {
    check_q(q)?;
    let integral = match (a, mask) {
        (_, Some(Mask::Raster(grid, flags))) => {
            if flags.len() != grid.len() {
                return Err(Error::FieldLength { expected: grid.len(), got: flags.len() });
            }
            raster_sum(grid, Some(flags), a, b, region, q)
        }
        (PiecewiseConstant::Cells { raster, .. }, None) => raster_sum(raster.grid(), None, a, b, region, q),
        (PiecewiseConstant::Cells { .. }, Some(Mask::Boxes(_))) => {
            return Err(Error::InvalidParams("box masks apply to box embeddings only".into()))
        }
        (PiecewiseConstant::Boxes { partition, values }, box_mask) => {
            let flags = match box_mask {
                Some(Mask::Boxes(f)) => {
                    if f.len() != partition.len() {
                        return Err(Error::FieldLength { expected: partition.len(), got: f.len() });
                    }
                    Some(f)
                }
                _ => None,
            };
            if region.dim() != partition.dim() {
                return Err(Error::DimensionMismatch { expected: partition.dim(), got: region.dim() });
            }
            if !partition.covered_region().contains_region(region) {
                return Err(Error::NotContained);
            }
            match b {
                Target::Step(PiecewiseConstant::Boxes { partition: other, values: other_values }) => {
                    if !other.covered_region().contains_region(region) {
                        return Err(Error::NotContained);
                    }
                    overlay_sum(partition, values, flags, other, other_values, region, q)
                }
                Target::Step(PiecewiseConstant::Cells { raster, .. }) => raster_sum(raster.grid(), None, a, b, region, q),
                Target::Smooth(f) => midpoint_sum(partition, values, flags, f, region, q)?,
            }
        }
    };
    Ok(integral.powf(1.0 / q))
}

fn raster_sum(grid: &RasterGrid, flags: Option<&[bool]>, a: &PiecewiseConstant, b: Target, region: &Region, q: f64) -> f64 {
    let vol = grid.cell_volume();
    let mut total = 0.0;
    let mut y = vec![0.0; grid.dim()];
    for c in 0..grid.len() {
        if flags.is_some_and(|f| !f[c]) {
            continue;
        }
        grid.center_into(c, &mut y);
        if !region.contains(&y) {
            continue;
        }
        let Some(va) = a.value_at(&y) else { continue };
        let vb = match b {
            Target::Step(s) => match s.value_at(&y) {
                Some(v) => v,
                None => continue,
            },
            Target::Smooth(f) => f(&y),
        };
        total += pow_abs(va - vb, q) * vol;
    }
    total
}

/// Sorted breakpoints of a partition along one axis, clipped to `[lo, hi]`.
fn axis_breaks(partition: &LatticePartition, axis: usize, lo: f64, hi: f64, out: &mut Vec<f64>) {
    let n = partition.extent()[axis] as i64;
    let s = partition.s();
    let first = partition.box_at(0).0[axis];
    for k in 0..=n {
        // Same arithmetic as the lattice faces, so midpoints land in the right box.
        let t = s * ((first + k) as f64 - 0.5);
        if t > lo && t < hi {
            out.push(t);
        }
    }
}

fn overlay_sum(
    pa: &LatticePartition,
    va: &[f64],
    flags: Option<&[bool]>,
    pb: &LatticePartition,
    vb: &[f64],
    region: &Region,
    q: f64,
) -> f64 {
    let dim = region.dim();
    let mut breaks: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for k in 0..dim {
        let (lo, hi) = (region.lo()[k], region.hi()[k]);
        let mut b = vec![lo, hi];
        axis_breaks(pa, k, lo, hi, &mut b);
        axis_breaks(pb, k, lo, hi, &mut b);
        b.sort_by(f64::total_cmp);
        b.dedup();
        breaks.push(b);
    }
    let counts: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
    let mut idx = vec![0usize; dim];
    let mut mid = vec![0.0; dim];
    let mut total = 0.0;
    'cells: loop {
        let mut vol = 1.0;
        for k in 0..dim {
            let (l, h) = (breaks[k][idx[k]], breaks[k][idx[k] + 1]);
            mid[k] = 0.5 * (l + h);
            vol *= h - l;
        }
        if let (Some(i), Some(j)) = (pa.index_of_point(&mid), pb.index_of_point(&mid)) {
            if flags.is_none_or(|f| f[i]) {
                total += pow_abs(va[i] - vb[j], q) * vol;
            }
        }
        for k in (0..dim).rev() {
            idx[k] += 1;
            if idx[k] < counts[k] {
                continue 'cells;
            }
            idx[k] = 0;
        }
        break;
    }
    total
}

fn midpoint_sum(
    partition: &LatticePartition,
    values: &[f64],
    flags: Option<&[bool]>,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    region: &Region,
    q: f64,
) -> Result<f64> {
    let dim = partition.dim();
    // Pieces of boxes inside the region: (value, lo, hi).
    let mut pieces = Vec::new();
    for i in 0..partition.len() {
        if flags.is_some_and(|fl| !fl[i]) {
            continue;
        }
        if let Some(clip) = partition.box_region(&partition.box_at(i)).intersection(region) {
            pieces.push((values[i], clip));
        }
    }
    let eval = |n: usize| -> f64 {
        let per_piece: Vec<f64> = pieces
            .par_iter()
            .map_init(
                || (vec![0.0; dim], vec![0usize; dim]),
                |(y, idx), (v, clip)| {
                    let mut sub = 0.0;
                    idx.iter_mut().for_each(|t| *t = 0);
                    'sub: loop {
                        for k in 0..dim {
                            let w = clip.side(k) / n as f64;
                            y[k] = clip.lo()[k] + w * (idx[k] as f64 + 0.5);
                        }
                        sub += pow_abs(v - f(y), q);
                        for k in (0..dim).rev() {
                            idx[k] += 1;
                            if idx[k] < n {
                                continue 'sub;
                            }
                            idx[k] = 0;
                        }
                        break;
                    }
                    sub * clip.volume() / (n as f64).powi(dim as i32)
                },
            )
            .collect();
        per_piece.iter().sum()
    };
    let mut n = 1;
    let mut prev = eval(n);
    let mut rel = f64::INFINITY;
    while n < MAX_REFINE && (2 * n).pow(dim as u32) <= MAX_SUBCELLS {
        n *= 2;
        let next = eval(n);
        let change = (next - prev).abs();
        if change <= REL_TOL * next.abs() || (next == 0.0 && prev == 0.0) {
            return Ok(next);
        }
        rel = change / next.abs();
        prev = next;
    }
    Err(Error::QuadratureNotConverged(rel))
}
