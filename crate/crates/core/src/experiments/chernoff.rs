//! Empirical bad-box probabilities against the concentration bound.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Discrete, Poisson};

use super::config::{ExperimentConfig, Scenario};
use crate::bad_boxes::{bad_probability_bound, classify, is_bad_count};
use crate::error::{Error, Result};
use crate::lattice::LatticePartition;
use crate::point_process::{sample, ProcessParams};
use crate::rng::derive_seed;

/// Tiles hold about this many boxes.
const TILE_BOXES: f64 = 1e4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChernoffRow {
    pub ratio: f64,
    pub kappa: f64,
    pub expected: f64,
    pub boxes: usize,
    pub bad: usize,
    pub empirical: f64,
    pub bound: f64,
    /// `P(|N - E| >= kappa E)` for `N ~ Poisson(E)`.
    pub exact: f64,
    /// Four binomial standard errors at the bound, `4 sqrt(b (1 - b) / boxes)`.
    pub slack: f64,
    pub within_bound: bool,
}

/// Exact probability that a Poisson(`expected`) count is bad at `kappa`.
pub fn exact_bad_probability(expected: f64, kappa: f64) -> Result<f64> {
    let dist = Poisson::new(expected).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let top = (expected + 40.0 * expected.sqrt() + 100.0).ceil() as u64;
    let mut good = 0.0;
    for n in 0..=top {
        if !is_bad_count(n as usize, expected, kappa) {
            good += dist.pmf(n);
        }
    }
    Ok((1.0 - good).max(0.0))
}

/// Samples tiles of about `TILE_BOXES` boxes at spacing `eps = 1` and box
/// side `ratio` until at least `config.boxes` boxes are classified. Each
/// tile is shared by all kappas of the grid.
pub fn run_chernoff(config: &ExperimentConfig) -> Result<Vec<ChernoffRow>> {
    let d = config.d;
    let per_axis = TILE_BOXES.powf(1.0 / d as f64).round().max(1.0) as i64;
    let tile_boxes = (per_axis as usize).pow(d as u32);
    let tiles = config.boxes.div_ceil(tile_boxes);
    let mut rows = Vec::new();
    for (ri, &ratio) in config.ratios.iter().enumerate() {
        let partition = LatticePartition::from_ranges(ratio, d, &vec![0; d], &vec![per_axis - 1; d])?;
        let region = partition.covered_region();
        let bad_counts = (0..tiles)
            .into_par_iter()
            .map(|tile| {
                let seed = derive_seed(config.seed, &[Scenario::Chernoff.tag(), ri as u64, tile as u64]);
                let cloud = sample(&ProcessParams::new(config.gamma, 1.0, d, seed)?, &region)?;
                config
                    .kappas
                    .iter()
                    .map(|&kappa| Ok(classify(&cloud, &partition, kappa, config.gamma)?.bad_count()))
                    .collect::<Result<Vec<usize>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let expected = config.gamma * ratio.powi(d as i32);
        let boxes = tiles * tile_boxes;
        for (ki, &kappa) in config.kappas.iter().enumerate() {
            let bad: usize = bad_counts.iter().map(|c| c[ki]).sum();
            let empirical = bad as f64 / boxes as f64;
            let bound = bad_probability_bound(expected, kappa);
            let slack = 4.0 * (bound * (1.0 - bound) / boxes as f64).sqrt();
            rows.push(ChernoffRow {
                ratio,
                kappa,
                expected,
                boxes,
                bad,
                empirical,
                bound,
                exact: exact_bad_probability(expected, kappa)?,
                slack,
                within_bound: empirical <= bound + slack,
            });
        }
    }
    Ok(rows)
}
