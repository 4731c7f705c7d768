//! Largest bad component and good-set connectivity along a scale sweep.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Scenario};
use super::decay::partition_trial;
use super::schedule::ScaleSchedule;
use crate::bad_boxes::{boundary_stats, certify, classify, components, rho};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentsRow {
    pub beta: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub s: f64,
    pub trial: usize,
    pub seed: u64,
    pub boxes: usize,
    pub bad_count: usize,
    pub bad_fraction: f64,
    pub subcritical: bool,
    pub component_count: usize,
    pub max_component: usize,
    /// `max_component / ln(1/s)`.
    pub lambda_hat: f64,
    pub good_connected: bool,
    /// Components whose boundary layer is not diagonally connected.
    pub boundary_disconnected: usize,
    pub max_boundary_path: usize,
    pub volume_ok: bool,
}

pub fn run_components(config: &ExperimentConfig) -> Result<Vec<ComponentsRow>> {
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
                        partition_trial(config, Scenario::Components, [bi, ei], trial, epsilon, s)?;
                    for &kappa in &config.kappas {
                        let cls = classify(&cloud, &partition, kappa, config.gamma)?;
                        let graph = components(&cls, &partition)?;
                        let cert = certify(&cls, &graph, &partition, rho(beta, d, config.gamma, kappa) / 2.0);
                        let mut boundary_disconnected = 0;
                        let mut max_boundary_path = 0;
                        for id in 0..graph.len() {
                            let st = boundary_stats(&graph, &partition, id);
                            boundary_disconnected += usize::from(!st.connected);
                            max_boundary_path = max_boundary_path.max(st.max_path_len);
                        }
                        out.push(ComponentsRow {
                            beta,
                            kappa,
                            epsilon,
                            s,
                            trial,
                            seed,
                            boxes: partition.len(),
                            bad_count: cert.bad_count,
                            bad_fraction: cert.bad_fraction,
                            subcritical: cert.subcritical,
                            component_count: graph.len(),
                            max_component: cert.max_component,
                            lambda_hat: cert.lambda_hat,
                            good_connected: cert.n0_ok,
                            boundary_disconnected,
                            max_boundary_path,
                            volume_ok: cert.volume_ok,
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

/// `max over rows of lambda_hat`, the fitted component constant of a sweep.
pub fn fitted_lambda(rows: &[ComponentsRow]) -> f64 {
    rows.iter().map(|r| r.lambda_hat).fold(0.0, f64::max)
}
