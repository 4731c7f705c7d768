//! Seeded homogeneous Poisson point clouds on bounded boxes.
//!
//! A cloud at scale `epsilon` has intensity `gamma * epsilon^-dim`. Sampling
//! draws the total count from a Poisson law and then places that many
//! i.i.d. uniform points, which realizes both the count law on every Borel
//! subset and independence over disjoint subsets.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Region, MAX_DIM};
use crate::rng;

/// Refuse to sample clouds whose expected size exceeds this.
pub const DEFAULT_MAX_EXPECTED: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    pub gamma: f64,
    pub epsilon: f64,
    pub dim: usize,
    pub seed: u64,
}

impl ProcessParams {
    pub fn new(gamma: f64, epsilon: f64, dim: usize, seed: u64) -> Result<Self> {
        let p = ProcessParams { gamma, epsilon, dim, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::InvalidParams(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParams(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(Error::InvalidParams(format!("dim must be in 1..={MAX_DIM}, got {}", self.dim)));
        }
        let rate = self.intensity();
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::InvalidParams(format!("intensity {rate} is not representable")));
        }
        Ok(())
    }

    /// `gamma * epsilon^-dim`.
    pub fn intensity(&self) -> f64 {
        self.gamma * self.epsilon.powi(-(self.dim as i32))
    }

    pub fn expected_count(&self, region: &Region) -> f64 {
        self.intensity() * region.volume()
    }
}

/// One realization of the process restricted to `region`.
///
/// Points are stored flat, `dim` coordinates per point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    params: ProcessParams,
    region: Region,
}

impl PointCloud {
    /// Builds a cloud from explicit points. Every point must lie in `region`
    /// and no two points may coincide.
    pub fn from_points(points: Vec<Vec<f64>>, params: ProcessParams, region: Region) -> Result<Self> {
        let dim = region.dim();
        if params.dim != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: params.dim });
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            if !region.contains(p) {
                return Err(Error::InvalidParams(format!("point {i} lies outside the region")));
            }
            coords.extend_from_slice(p);
        }
        if first_duplicate(&coords, dim).is_some() {
            return Err(Error::InvalidParams("cloud contains coincident points".into()));
        }
        Ok(PointCloud { coords, params, region })
    }

    pub fn empty(params: ProcessParams, region: Region) -> Self {
        PointCloud { coords: Vec::new(), params, region }
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn params(&self) -> &ProcessParams {
        &self.params
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// Multiplies every coordinate (and the region) by `factor`. The scale
    /// parameter is multiplied too, so `epsilon * spt(eta)` keeps intensity
    /// `gamma * epsilon^-d`.
    pub fn scaled(&self, factor: f64) -> Result<PointCloud> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidParams(format!("scale factor must be positive, got {factor}")));
        }
        let region = self.region.scale(factor)?;
        let mut coords: Vec<f64> = self.coords.iter().map(|c| c * factor).collect();
        // Rounding can push a coordinate onto the open upper face.
        let d = self.dim();
        for p in coords.chunks_exact_mut(d) {
            for (k, v) in p.iter_mut().enumerate() {
                if *v >= region.hi()[k] {
                    *v = region.hi()[k].next_down();
                }
                if *v < region.lo()[k] {
                    *v = region.lo()[k];
                }
            }
        }
        let params = ProcessParams { epsilon: self.params.epsilon * factor, ..self.params };
        Ok(PointCloud { coords, params, region })
    }
}

/// Samples the process with the default expected-count cap.
pub fn sample(params: &ProcessParams, region: &Region) -> Result<PointCloud> {
    sample_with_cap(params, region, DEFAULT_MAX_EXPECTED)
}

pub fn sample_with_cap(params: &ProcessParams, region: &Region, cap: f64) -> Result<PointCloud> {
    params.validate()?;
    if params.dim != region.dim() {
        return Err(Error::DimensionMismatch { expected: params.dim, got: region.dim() });
    }
    let lambda = params.expected_count(region);
    if !lambda.is_finite() || lambda > cap {
        return Err(Error::ExpectedCountTooLarge { expected: lambda, cap });
    }
    let mut rng = rng::stream(params.seed);
    let n = poisson_count(lambda, &mut rng);
    let dim = region.dim();
    let mut coords = vec![0.0; n * dim];
    for p in coords.chunks_exact_mut(dim) {
        uniform_point(region, &mut rng, p);
    }
    while let Some(i) = first_duplicate(&coords, dim) {
        uniform_point(region, &mut rng, &mut coords[i * dim..(i + 1) * dim]);
    }
    Ok(PointCloud { coords, params: *params, region: region.clone() })
}

fn poisson_count(lambda: f64, rng: &mut ChaCha8Rng) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    let law = Poisson::new(lambda).expect("lambda is positive and finite");
    law.sample(rng) as usize
}

fn uniform_point(region: &Region, rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for (k, v) in out.iter_mut().enumerate() {
        let (a, b) = (region.lo()[k], region.hi()[k]);
        loop {
            let x = a + (b - a) * rng.random::<f64>();
            if x >= a && x < b {
                *v = x;
                break;
            }
        }
    }
}

/// Index of the later member of some pair of identical points, if any.
fn first_duplicate(coords: &[f64], dim: usize) -> Option<usize> {
    let n = coords.len() / dim;
    let key = |i: usize| -> [u64; MAX_DIM] {
        let mut k = [0u64; MAX_DIM];
        for (slot, v) in k.iter_mut().zip(&coords[i * dim..(i + 1) * dim]) {
            // +0.0 and -0.0 are the same location.
            *slot = if *v == 0.0 { 0 } else { v.to_bits() };
        }
        k
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by_key(|&i| (key(i), i));
    order.windows(2).find(|w| key(w[0]) == key(w[1])).map(|w| w[1])
}

/// Number of cloud points in `sub` under the half-open convention.
pub fn count_in(cloud: &PointCloud, sub: &Region) -> usize {
    cloud.points().filter(|p| sub.contains(p)).count()
}

/// The sub-cloud of points inside `sub`, which must lie within the cloud region.
pub fn restrict(cloud: &PointCloud, sub: &Region) -> Result<PointCloud> {
    if !cloud.region.contains_region(sub) {
        return Err(Error::NotContained);
    }
    let coords = cloud.points().filter(|p| sub.contains(p)).flatten().copied().collect();
    Ok(PointCloud { coords, params: cloud.params, region: sub.clone() })
}
