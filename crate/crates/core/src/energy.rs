//! Nonlocal p-Dirichlet energies on clouds and finite-difference energies on
//! lattices.
//!
//! On a cloud at scale `eps` with interaction radius `s`,
//!
//! ```text
//! F(u; A) = eps^d * sum_{x in A} |grad u(x)|^p
//! |grad u(x)|^p = (eps^d / s^d) * sum_{|y - x| <= s} (|u(y) - u(x)| / s)^p
//! ```
//!
//! where `y` ranges over the whole cloud, not only over `A`.

use rayon::prelude::*;

use crate::cell_index::CellIndex;
use crate::error::{Error, Result};
use crate::field::{CloudField, LatticeField};
use crate::geometry::Region;
use crate::lattice::LatticePartition;
use crate::point_process::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    pub p: f64,
    pub s: f64,
    pub epsilon: f64,
    /// Compactness exponent, `1 <= q < p`, for the lattice estimates.
    pub q: Option<f64>,
}

impl EnergyParams {
    pub fn new(p: f64, s: f64, epsilon: f64) -> Result<Self> {
        let params = EnergyParams { p, s, epsilon, q: None };
        params.validate()?;
        Ok(params)
    }

    pub fn with_q(mut self, q: f64) -> Result<Self> {
        self.q = Some(q);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(Error::InvalidParams(format!("p must be >= 1, got {}", self.p)));
        }
        if !(self.s.is_finite() && self.s > 0.0) {
            return Err(Error::InvalidParams(format!("s must be positive, got {}", self.s)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParams(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if let Some(q) = self.q {
            if !(q >= 1.0 && q < self.p) {
                return Err(Error::InvalidParams(format!("need 1 <= q < p, got q = {q}, p = {}", self.p)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    pub total: f64,
    /// `(point index, |grad u(x)|^p)` for every cloud point in the region,
    /// in increasing index order.
    pub per_point: Vec<(usize, f64)>,
    /// `eps^d * sum_{x in region} |u(x)|^p`.
    pub norm_p: f64,
}

/// `|t|^e` with exact shortcuts for the common exponents.
#[inline]
pub fn pow_abs(t: f64, e: f64) -> f64 {
    let a = t.abs();
    if e == 1.0 {
        a
    } else if e == 2.0 {
        a * a
    } else if e == 1.5 {
        a * a.sqrt()
    } else {
        a.powf(e)
    }
}

/// Evaluates `F(u; region)` with a cell list of side `s`.
pub fn cloud_energy(
    cloud: &PointCloud,
    u: &CloudField,
    region: &Region,
    params: &EnergyParams,
) -> Result<EnergyBreakdown> {
    params.validate()?;
    u.check(cloud)?;
    if !cloud.region().contains_region(region) {
        return Err(Error::RegionExceedsCloud);
    }
    let d = cloud.dim() as i32;
    let (s, p) = (params.s, params.p);
    let eps_d = params.epsilon.powi(d);
    let weight = eps_d / s.powi(d);
    let values = u.values();

    let index = CellIndex::build(cloud, s)?;
    let members: Vec<usize> = (0..cloud.len()).filter(|&i| region.contains(cloud.point(i))).collect();

    let per_point = members
        .par_iter()
        .map(|&i| {
            let x = cloud.point(i);
            let ux = values[i];
            let mut acc = 0.0;
            index.for_each_within(cloud, x, s, |j, _| {
                acc += pow_abs((values[j] - ux) / s, p);
            })?;
            Ok((i, weight * acc))
        })
        .collect::<Result<Vec<_>>>()?;

    let total = eps_d * per_point.iter().map(|(_, g)| g).sum::<f64>();
    let norm_p = eps_d * members.iter().map(|&i| pow_abs(values[i], p)).sum::<f64>();
    Ok(EnergyBreakdown { total, per_point, norm_p })
}

/// `eps^d * sum_{x in region} |u(x)|^p`.
pub fn cloud_norm(cloud: &PointCloud, u: &CloudField, region: &Region, p: f64, epsilon: f64) -> Result<f64> {
    u.check(cloud)?;
    let eps_d = epsilon.powi(cloud.dim() as i32);
    Ok(eps_d
        * cloud
            .points()
            .zip(u.values())
            .filter(|(x, _)| region.contains(x))
            .map(|(_, v)| pow_abs(*v, p))
            .sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborMode {
    Face,
    Diagonal,
}

/// `sum |v(J) - v(J')|^e s^(d-e)` over ordered adjacent pairs with both
/// endpoints defined.
pub fn lattice_energy(
    v: &LatticeField,
    partition: &LatticePartition,
    exponent: f64,
    mode: NeighborMode,
) -> Result<f64> {
    v.check(partition)?;
    if v.domain_len() == 0 {
        return Err(Error::EmptyDomain);
    }
    let s = partition.s();
    let scale = s.powf(partition.dim() as f64 - exponent);
    let diagonal = mode == NeighborMode::Diagonal;
    let mut total = 0.0;
    for i in v.domain() {
        let vi = v.get(i).expect("domain index");
        partition.for_each_neighbor(i, diagonal, |j| {
            if let Some(vj) = v.get(j) {
                total += pow_abs(vi - vj, exponent);
            }
        });
    }
    Ok(total * scale)
}

/// `sum |v(J)|^e s^d` over the domain of `v`.
pub fn lattice_norm(v: &LatticeField, partition: &LatticePartition, exponent: f64) -> Result<f64> {
    v.check(partition)?;
    if v.domain_len() == 0 {
        return Err(Error::EmptyDomain);
    }
    Ok(partition.box_volume() * v.raw().iter().flatten().map(|x| pow_abs(*x, exponent)).sum::<f64>())
}

/// Averages `u` over the cloud points of every box not flagged in `exclude`.
pub fn coarse_field(
    cloud: &PointCloud,
    u: &CloudField,
    partition: &LatticePartition,
    exclude: &[bool],
) -> Result<LatticeField> {
    u.check(cloud)?;
    if exclude.len() != partition.len() {
        return Err(Error::FieldLength { expected: partition.len(), got: exclude.len() });
    }
    let mut sum = vec![0.0; partition.len()];
    let mut count = vec![0usize; partition.len()];
    for (x, &ux) in cloud.points().zip(u.values()) {
        if let Some(i) = partition.index_of_point(x) {
            sum[i] += ux;
            count[i] += 1;
        }
    }
    let mut field = LatticeField::undefined(partition);
    for i in 0..partition.len() {
        if exclude[i] {
            continue;
        }
        if count[i] == 0 {
            return Err(Error::EmptyBox(partition.box_at(i)));
        }
        field.set(i, sum[i] / count[i] as f64);
    }
    Ok(field)
}
