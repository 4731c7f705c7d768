//! Raster approximation of the Voronoi tessellation of a cloud, the regular
//! subcloud, and the convergence distance on the regular cells.
//!
//! A raster cell is labeled by the seed nearest to its center (lowest index on
//! ties). Its clearance is the distance from the center to the nearest
//! bisector between the label and any other seed, capped by the distance to
//! the raster boundary, so Voronoi cells are clipped to the raster region.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extension::{embed_cloud, lq_distance, Target};
use crate::field::CloudField;
use crate::geometry::{distance_sq, Region, MAX_DIM};
use crate::point_process::PointCloud;

/// Upper bound on raster size.
pub const MAX_RASTER_CELLS: usize = 1 << 28;

/// A regular grid over a region. Each axis is split into `ceil(side / h)`
/// equal cells, so the pitch along every axis is at most `h`. Cells are
/// numbered with axis 0 varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    region: Region,
    pitch: [f64; MAX_DIM],
    extent: [usize; MAX_DIM],
}

impl RasterGrid {
    pub fn new(region: &Region, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParams(format!("raster pitch must be positive, got {h}")));
        }
        let dim = region.dim();
        let mut pitch = [0.0; MAX_DIM];
        let mut extent = [1usize; MAX_DIM];
        let mut total: u128 = 1;
        for k in 0..dim {
            let n = (region.side(k) / h).ceil();
            if n.is_nan() || n > MAX_RASTER_CELLS as f64 {
                return Err(Error::TooManyBoxes { count: u128::MAX, cap: MAX_RASTER_CELLS as u128 });
            }
            let n = (n as usize).max(1);
            total = total.saturating_mul(n as u128);
            if total > MAX_RASTER_CELLS as u128 {
                return Err(Error::TooManyBoxes { count: total, cap: MAX_RASTER_CELLS as u128 });
            }
            extent[k] = n;
            pitch[k] = region.side(k) / n as f64;
        }
        Ok(RasterGrid { region: region.clone(), pitch, extent })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent[..self.dim()]
    }

    pub fn pitch(&self) -> &[f64] {
        &self.pitch[..self.dim()]
    }

    pub fn len(&self) -> usize {
        self.extent().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.pitch().iter().product()
    }

    fn coords(&self, c: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        let mut rest = c;
        for (k, o) in out.iter_mut().enumerate().take(self.dim()) {
            *o = rest % self.extent[k];
            rest /= self.extent[k];
        }
        out
    }

    pub fn center_into(&self, c: usize, y: &mut [f64]) {
        let ix = self.coords(c);
        for k in 0..self.dim() {
            y[k] = self.region.lo()[k] + self.pitch[k] * (ix[k] as f64 + 0.5);
        }
    }

    pub fn center(&self, c: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.center_into(c, &mut y);
        y
    }

    /// Cell containing `x`, if `x` lies in the region.
    pub fn cell_of(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim() || !self.region.contains(x) {
            return None;
        }
        let mut c = 0;
        for k in (0..self.dim()).rev() {
            let t = ((x[k] - self.region.lo()[k]) / self.pitch[k]).floor();
            let i = if t <= 0.0 { 0 } else { (t as usize).min(self.extent[k] - 1) };
            c = c * self.extent[k] + i;
        }
        Some(c)
    }

    /// Whether cell `c` lies in the outer layer of the grid.
    pub fn is_border(&self, c: usize) -> bool {
        let ix = self.coords(c);
        (0..self.dim()).any(|k| ix[k] == 0 || ix[k] + 1 == self.extent[k])
    }

    /// Lower and upper corner of cell `c`.
    fn cell_bounds(&self, c: usize) -> ([f64; MAX_DIM], [f64; MAX_DIM]) {
        let ix = self.coords(c);
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for k in 0..self.dim() {
            lo[k] = self.region.lo()[k] + self.pitch[k] * ix[k] as f64;
            hi[k] = self.region.lo()[k] + self.pitch[k] * (ix[k] + 1) as f64;
        }
        (lo, hi)
    }
}

/// Seeds bucketed for nearest-neighbor ring searches.
struct SeedGrid<'a> {
    cloud: &'a PointCloud,
    dim: usize,
    origin: [f64; MAX_DIM],
    side: f64,
    extent: [usize; MAX_DIM],
    start: Vec<usize>,
    items: Vec<usize>,
}

const MAX_SEED_CELLS: usize = 1 << 22;

impl<'a> SeedGrid<'a> {
    fn build(cloud: &'a PointCloud) -> Self {
        let dim = cloud.dim();
        let region = cloud.region();
        // About two seeds per bucket.
        let mut side = (2.0 * region.volume() / cloud.len() as f64).powf(1.0 / dim as f64);
        let mut extent = [1usize; MAX_DIM];
        loop {
            let mut total = 1usize;
            for (k, e) in extent.iter_mut().enumerate().take(dim) {
                *e = ((region.side(k) / side).ceil() as usize).max(1);
                total = total.saturating_mul(*e);
            }
            if total <= MAX_SEED_CELLS {
                break;
            }
            side *= 2.0;
        }
        let mut origin = [0.0; MAX_DIM];
        origin[..dim].copy_from_slice(region.lo());
        let mut grid = SeedGrid { cloud, dim, origin, side, extent, start: Vec::new(), items: Vec::new() };
        let cells: usize = extent[..dim].iter().product();
        let cell_of: Vec<usize> = cloud.points().map(|x| grid.linear(&grid.home(x))).collect();
        let mut start = vec![0usize; cells + 1];
        for &c in &cell_of {
            start[c + 1] += 1;
        }
        for c in 0..cells {
            start[c + 1] += start[c];
        }
        let mut fill = start.clone();
        let mut items = vec![0; cell_of.len()];
        for (i, &c) in cell_of.iter().enumerate() {
            items[fill[c]] = i;
            fill[c] += 1;
        }
        grid.start = start;
        grid.items = items;
        grid
    }

    fn home(&self, y: &[f64]) -> [usize; MAX_DIM] {
        let mut h = [0usize; MAX_DIM];
        for k in 0..self.dim {
            let t = ((y[k] - self.origin[k]) / self.side).floor();
            h[k] = if t <= 0.0 || t.is_nan() { 0 } else { (t as usize).min(self.extent[k] - 1) };
        }
        h
    }

    fn linear(&self, c: &[usize; MAX_DIM]) -> usize {
        (0..self.dim).fold(0, |acc, k| acc * self.extent[k] + c[k])
    }

    /// Distance from `y` to the complement of the ring-`r` block around
    /// `home`; infinite once the block covers the whole grid.
    fn unexplored_distance(&self, y: &[f64], home: &[usize; MAX_DIM], r: usize) -> f64 {
        let mut lb = f64::INFINITY;
        for k in 0..self.dim {
            if home[k] > r {
                let face = self.origin[k] + self.side * (home[k] - r) as f64;
                lb = lb.min(y[k] - face);
            }
            if home[k] + r + 1 < self.extent[k] {
                let face = self.origin[k] + self.side * (home[k] + r + 1) as f64;
                lb = lb.min(face - y[k]);
            }
        }
        lb.max(0.0)
    }

    /// Calls `f` for every seed in cells at Chebyshev distance exactly `r`.
    fn visit_ring(&self, home: &[usize; MAX_DIM], r: usize, mut f: impl FnMut(usize)) {
        let mut lo = [0usize; MAX_DIM];
        let mut hi = [0usize; MAX_DIM];
        for k in 0..self.dim {
            lo[k] = home[k].saturating_sub(r);
            hi[k] = (home[k] + r).min(self.extent[k] - 1);
        }
        let mut c = lo;
        loop {
            let on_ring = (0..self.dim).any(|k| c[k].abs_diff(home[k]) == r);
            if on_ring {
                let cell = self.linear(&c);
                for &j in &self.items[self.start[cell]..self.start[cell + 1]] {
                    f(j);
                }
            }
            let mut k = self.dim;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if c[k] < hi[k] {
                    c[k] += 1;
                    break;
                }
                c[k] = lo[k];
            }
        }
    }

    /// Label and clearance of the point `y`. `wall` is the distance from `y`
    /// to the raster boundary.
    fn label(&self, y: &[f64], wall: f64, buf: &mut Vec<(usize, f64)>) -> (usize, f64) {
        buf.clear();
        let home = self.home(y);
        let mut best = (usize::MAX, f64::INFINITY);
        let mut r = 0;
        let mut exhausted = false;
        // Nearest seed: stop once no unexplored seed can be as close.
        loop {
            self.visit_ring(&home, r, |j| {
                let d2 = distance_sq(y, self.cloud.point(j));
                buf.push((j, d2));
                if d2 < best.1 || (d2 == best.1 && j < best.0) {
                    best = (j, d2);
                }
            });
            let lb = self.unexplored_distance(y, &home, r);
            if lb.is_infinite() {
                exhausted = true;
                break;
            }
            if lb * lb > best.1 {
                break;
            }
            r += 1;
        }
        let (x, dx2) = best;
        let dx = dx2.sqrt();
        let xp = self.cloud.point(x);
        let bisector = |z: usize, dz2: f64| {
            let sep = distance_sq(xp, self.cloud.point(z)).sqrt();
            (dz2 - dx2) / (2.0 * sep)
        };
        let mut clear = wall;
        for &(z, dz2) in buf.iter() {
            if z != x {
                clear = clear.min(bisector(z, dz2));
            }
        }
        // Bisectors of seeds at distance >= dx + 2 * clear cannot come closer.
        while !exhausted {
            let lb = self.unexplored_distance(y, &home, r);
            exhausted = lb.is_infinite() || lb >= dx + 2.0 * clear;
            if exhausted {
                break;
            }
            r += 1;
            self.visit_ring(&home, r, |z| {
                let dz2 = distance_sq(y, self.cloud.point(z));
                clear = clear.min(bisector(z, dz2));
            });
        }
        (x, clear.max(0.0))
    }
}

/// Nearest-seed labels and clearances on a raster.
#[derive(Debug, Clone)]
pub struct VoronoiRaster {
    grid: RasterGrid,
    labels: Vec<u32>,
    clearance: Vec<f64>,
    seeds: usize,
}

impl VoronoiRaster {
    pub fn grid(&self) -> &RasterGrid {
        &self.grid
    }

    /// Seed index per raster cell, axis 0 fastest.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn clearance(&self) -> &[f64] {
        &self.clearance
    }

    pub fn seed_count(&self) -> usize {
        self.seeds
    }

    /// Raster cells labeled by a point with `flags[label]` set.
    pub fn cell_mask(&self, flags: &[bool]) -> Vec<bool> {
        self.labels.iter().map(|&l| flags[l as usize]).collect()
    }
}

/// Labels a raster of pitch at most `h` over `region` with the nearest seeds
/// of `cloud`.
pub fn rasterize(cloud: &PointCloud, region: &Region, h: f64) -> Result<VoronoiRaster> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if region.dim() != cloud.dim() {
        return Err(Error::DimensionMismatch { expected: cloud.dim(), got: region.dim() });
    }
    if cloud.len() > u32::MAX as usize {
        return Err(Error::InvalidParams("too many seeds for 32-bit labels".into()));
    }
    let grid = RasterGrid::new(region, h)?;
    let seeds = SeedGrid::build(cloud);
    let dim = grid.dim();
    let cells: Vec<(u32, f64)> = (0..grid.len())
        .into_par_iter()
        .map_init(
            || (vec![0.0; dim], Vec::new()),
            |(y, buf), c| {
                grid.center_into(c, y);
                let wall = (0..dim)
                    .map(|k| (y[k] - region.lo()[k]).min(region.hi()[k] - y[k]))
                    .fold(f64::INFINITY, f64::min);
                let (label, clear) = seeds.label(y, wall, buf);
                (label as u32, clear)
            },
        )
        .collect();
    let (labels, clearance) = cells.into_iter().unzip();
    Ok(VoronoiRaster { grid, labels, clearance, seeds: cloud.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub alpha: f64,
    pub epsilon: f64,
    /// Largest clearance over the raster cells of each point; 0 without cells.
    pub inradius_est: Vec<f64>,
    /// Diagonal of the bounding box of each point's raster cells.
    pub diam_est: Vec<f64>,
    /// `inradius_est > alpha * eps` and `diam_est < eps / alpha`.
    pub regular: Vec<bool>,
    /// Some raster cell of the point lies on the raster border.
    pub touches_boundary: Vec<bool>,
}

impl RegularityReport {
    pub fn regular_count(&self) -> usize {
        self.regular.iter().filter(|&&r| r).count()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CellShape {
    pub inradius: f64,
    pub diam: f64,
    pub touches_boundary: bool,
}

/// Per-point inradius and diameter estimates, independent of any threshold.
pub fn cell_shapes(raster: &VoronoiRaster) -> Vec<CellShape> {
    let grid = &raster.grid;
    let dim = grid.dim();
    let n = raster.seeds;
    let mut inradius = vec![0.0f64; n];
    let mut lo = vec![[f64::INFINITY; MAX_DIM]; n];
    let mut hi = vec![[f64::NEG_INFINITY; MAX_DIM]; n];
    let mut touches = vec![false; n];
    let mut seen = vec![false; n];
    for (c, (&l, &clear)) in raster.labels.iter().zip(&raster.clearance).enumerate() {
        let l = l as usize;
        seen[l] = true;
        inradius[l] = inradius[l].max(clear);
        let (a, b) = grid.cell_bounds(c);
        for k in 0..dim {
            lo[l][k] = lo[l][k].min(a[k]);
            hi[l][k] = hi[l][k].max(b[k]);
        }
        if grid.is_border(c) {
            touches[l] = true;
        }
    }
    (0..n)
        .map(|i| CellShape {
            inradius: inradius[i],
            diam: if seen[i] {
                (0..dim).map(|k| (hi[i][k] - lo[i][k]).powi(2)).sum::<f64>().sqrt()
            } else {
                0.0
            },
            touches_boundary: touches[i],
        })
        .collect()
}

pub fn regular_from_shapes(shapes: &[CellShape], epsilon: f64, alpha: f64) -> Result<RegularityReport> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParams(format!("alpha must be positive, got {alpha}")));
    }
    let lower = alpha * epsilon;
    let upper = epsilon / alpha;
    Ok(RegularityReport {
        alpha,
        epsilon,
        inradius_est: shapes.iter().map(|s| s.inradius).collect(),
        diam_est: shapes.iter().map(|s| s.diam).collect(),
        regular: shapes.iter().map(|s| s.inradius > lower && s.diam < upper).collect(),
        touches_boundary: shapes.iter().map(|s| s.touches_boundary).collect(),
    })
}

/// Applies the thresholds `alpha * eps` (inradius) and `eps / alpha`
/// (diameter) with `eps` taken from the cloud.
pub fn regular_subcloud(raster: &VoronoiRaster, cloud: &PointCloud, alpha: f64) -> Result<RegularityReport> {
    if cloud.len() != raster.seeds {
        return Err(Error::FieldLength { expected: raster.seeds, got: cloud.len() });
    }
    regular_from_shapes(&cell_shapes(raster), cloud.params().epsilon, alpha)
}

/// `(int |u_hat - target|^q)^(1/q)` over the raster cells in `region` whose
/// label is regular, with `u_hat` the Voronoi step function of `u`.
pub fn convergence_distance(
    u: &CloudField,
    target: &(dyn Fn(&[f64]) -> f64 + Sync),
    raster: &VoronoiRaster,
    report: &RegularityReport,
    region: &Region,
    q: f64,
) -> Result<f64> {
    if report.regular.len() != raster.seeds {
        return Err(Error::FieldLength { expected: raster.seeds, got: report.regular.len() });
    }
    let embedded = embed_cloud(u, raster, Some(&report.regular))?;
    lq_distance(&embedded, Target::Smooth(target), region, q, None)
}
