//! Bad-box counts along a scale sweep.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Scenario};
use super::schedule::ScaleSchedule;
use crate::bad_boxes::{classify, rho};
use crate::error::Result;
use crate::geometry::Region;
use crate::lattice::LatticePartition;
use crate::point_process::{sample, PointCloud, ProcessParams};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub beta: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub s: f64,
    pub trial: usize,
    pub seed: u64,
    pub expected: f64,
    pub boxes: usize,
    pub mean_count: f64,
    pub bad_count: usize,
    /// `bad_count * s^d`.
    pub bad_volume: f64,
    /// Half the decay exponent at this beta and kappa.
    pub rho0: f64,
    pub eps_rho0: f64,
    pub below_eps_rho0: bool,
    pub s_rho0: f64,
    pub below_s_rho0: bool,
    pub zero_bad: bool,
}

/// One realization on the partition of the centered observation cube at
/// scale `s`, sampled on exactly the boxes of the partition.
pub(crate) fn partition_trial(
    config: &ExperimentConfig,
    scenario: Scenario,
    indices: [usize; 2],
    trial: usize,
    epsilon: f64,
    s: f64,
) -> Result<(u64, LatticePartition, PointCloud)> {
    let q = Region::centered_cube(config.d, config.region_side)?;
    let partition = LatticePartition::build(&q, s)?;
    let seed = derive_seed(config.seed, &[scenario.tag(), indices[0] as u64, indices[1] as u64, trial as u64]);
    let cloud = sample(&ProcessParams::new(config.gamma, epsilon, config.d, seed)?, &partition.covered_region())?;
    Ok((seed, partition, cloud))
}

pub fn run_decay(config: &ExperimentConfig) -> Result<Vec<DecayRow>> {
    let d = config.d;
    let mut rows = Vec::new();
    for (bi, beta) in config.betas().into_iter().enumerate() {
        let sched = ScaleSchedule::new(beta, d, config.epsilons.clone());
        let per_trial = (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let mut out = Vec::new();
                for (ei, &epsilon) in config.epsilons.iter().enumerate() {
                    let s = sched.s(epsilon);
                    let (seed, partition, cloud) =
                        partition_trial(config, Scenario::Decay, [bi, ei], trial, epsilon, s)?;
                    for &kappa in &config.kappas {
                        let cls = classify(&cloud, &partition, kappa, config.gamma)?;
                        let bad_count = cls.bad_count();
                        let rho0 = rho(beta, d, config.gamma, kappa) / 2.0;
                        let bad_volume = bad_count as f64 * s.powi(d as i32);
                        let eps_rho0 = epsilon.powf(rho0);
                        let s_rho0 = s.powf(rho0);
                        out.push(DecayRow {
                            beta,
                            kappa,
                            epsilon,
                            s,
                            trial,
                            seed,
                            expected: cls.expected,
                            boxes: partition.len(),
                            mean_count: cls.counts.iter().sum::<usize>() as f64 / partition.len() as f64,
                            bad_count,
                            bad_volume,
                            rho0,
                            eps_rho0,
                            below_eps_rho0: bad_volume <= eps_rho0,
                            s_rho0,
                            below_s_rho0: bad_volume <= s_rho0,
                            zero_bad: bad_count == 0,
                        });
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(per_trial.into_iter().flatten());
    }
    Ok(rows)
}
