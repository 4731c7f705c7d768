//! The full pipeline along a coupled scale sweep: energy, coarsening,
//! extension, embedding, and the distances that track convergence.
//!
//! All scales of one trial come from a single unit-intensity realization on
//! the largest rescaled window, restricted and shrunk to each `eps`, so the
//! clouds along a sweep are nested rescalings of one another.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Scenario};
use super::schedule::ScaleSchedule;
use crate::bad_boxes::{classify, components};
use crate::energy::{cloud_energy, coarse_field, lattice_energy, EnergyParams, NeighborMode};
use crate::error::{Error, Result};
use crate::extension::{embed_lattice, extend, extension_energy_report, lq_distance, Mask, Target};
use crate::field::{CloudField, LatticeField};
use crate::geometry::Region;
use crate::lattice::LatticePartition;
use crate::point_process::{restrict, sample, PointCloud, ProcessParams};
use crate::regularity::{cell_shapes, convergence_distance, rasterize, regular_from_shapes};
use crate::rng::{derive_seed, stream};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompactnessRow {
    pub epsilon: f64,
    pub trial: usize,
    pub seed: u64,
    pub s: f64,
    pub s_coarse: f64,
    pub kappa: f64,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub points: usize,
    pub boxes: usize,
    pub bad_count: Option<usize>,
    pub energy_p: f64,
    pub norm_p: f64,
    pub lattice_energy_p: Option<f64>,
    pub energy_q_tu: Option<f64>,
    pub good_pair_q: Option<f64>,
    pub correction_q: Option<f64>,
    pub norm_q: Option<f64>,
    pub regular_count: usize,
    pub regular_cell_distance: f64,
    pub good_region_distance: Option<f64>,
    /// `s_coarse^p * energy_p`.
    pub energy_scale_bound: f64,
    /// `L^q` distance between the extended embeddings at this and the
    /// previous `eps` of the same trial.
    pub cauchy_lq: Option<f64>,
    pub status: &'static str,
}

/// Reason code for a trial that cannot run the lattice part of the pipeline.
fn reason(err: &Error) -> Option<&'static str> {
    match err {
        Error::EmptyBox(_) => Some("empty_good_box"),
        Error::EmptyBoundary { .. } => Some("spanning_component"),
        Error::ExpectedCountBelowOne { .. } => Some("expected_below_one"),
        Error::PartitionNotCovered => Some("partition_not_covered"),
        Error::QuadratureNotConverged(_) => Some("quadrature_not_converged"),
        Error::EmptyDomain => Some("no_good_boxes"),
        _ => None,
    }
}

struct LatticeOutcome {
    bad_count: usize,
    lattice_energy_p: Option<f64>,
    /// Per q: (energy_q, good_pair_q, correction_q, norm_q, good_region_distance, cauchy).
    per_q: Vec<[Option<f64>; 6]>,
    extended: LatticeField,
    partition: LatticePartition,
}

#[allow(clippy::too_many_arguments)]
fn lattice_part(
    config: &ExperimentConfig,
    cloud: &PointCloud,
    u: &CloudField,
    q_region: &Region,
    s_coarse: f64,
    kappa: f64,
    target: &(dyn Fn(&[f64]) -> f64 + Sync),
    previous: Option<&(LatticePartition, LatticeField)>,
) -> Result<LatticeOutcome> {
    let partition = LatticePartition::build(q_region, s_coarse)?;
    let cls = classify(cloud, &partition, kappa, config.gamma)?;
    let graph = components(&cls, &partition)?;
    let coarse = coarse_field(cloud, u, &partition, &cls.bad)?;
    let lattice_energy_p = if coarse.domain_len() > 0 {
        Some(lattice_energy(&coarse, &partition, config.p, NeighborMode::Face)?)
    } else {
        None
    };
    let extended = extend(&coarse, &graph, &partition)?;
    let embedded = embed_lattice(&extended, &partition)?;
    let region = q_region
        .intersection(&partition.covered_region())
        .ok_or(Error::EmptyDomain)?;
    let good: Vec<bool> = cls.bad.iter().map(|b| !b).collect();
    let prev_embedded = match previous {
        Some((pp, pf)) => Some((embed_lattice(pf, pp)?, pp.covered_region())),
        None => None,
    };
    let mut per_q = Vec::new();
    for q in config.qs() {
        let rep = extension_energy_report(&coarse, &extended, &graph, &partition, q)?;
        let good_dist = lq_distance(&embedded, Target::Smooth(target), &region, q, Some(Mask::Boxes(&good)))?;
        let cauchy = match &prev_embedded {
            Some((pe, cover)) => match region.intersection(cover) {
                Some(common) => Some(lq_distance(&embedded, Target::Step(pe), &common, q, None)?),
                None => None,
            },
            None => None,
        };
        per_q.push([
            Some(rep.energy_q),
            Some(rep.good_pair_q),
            Some(rep.correction_q),
            Some(rep.norm_q),
            Some(good_dist),
            cauchy,
        ]);
    }
    Ok(LatticeOutcome { bad_count: cls.bad_count(), lattice_energy_p, per_q, extended, partition })
}

fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<Vec<CompactnessRow>> {
    let d = config.d;
    let beta = config.betas()[0];
    let sched = ScaleSchedule::new(beta, d, config.epsilons.clone());
    let q_region = Region::centered_cube(d, config.region_side)?;
    let margin = 2.0 * sched.largest_s();
    let window = q_region.dilate(margin)?;
    let energy_region = q_region.dilate(margin / 2.0)?;
    let eps_min = *config.epsilons.last().expect("validated nonempty");
    let seed = derive_seed(config.seed, &[Scenario::Compactness.tag(), trial as u64]);
    let base = sample(&ProcessParams::new(config.gamma, 1.0, d, seed)?, &window.scale(1.0 / eps_min)?)?;
    let target = |x: &[f64]| config.target.eval(x);

    let mut rows = Vec::new();
    let mut previous: Vec<Option<(LatticePartition, LatticeField)>> = vec![None; config.kappas.len()];
    for (ei, &epsilon) in config.epsilons.iter().enumerate() {
        let s = sched.s(epsilon);
        let s_coarse = sched.s_coarse(epsilon);
        let cloud = restrict(&base, &window.scale(1.0 / epsilon)?)?.scaled(epsilon)?;
        let mut noise_rng = stream(derive_seed(seed, &[ei as u64]));
        let u = CloudField::new(
            &cloud,
            cloud
                .points()
                .map(|x| target(x) + config.noise * s * noise_rng.random_range(-1.0..=1.0))
                .collect(),
        )?;
        let energy = cloud_energy(&cloud, &u, &energy_region, &EnergyParams::new(config.p, s, epsilon)?)?;
        let energy_scale_bound = s_coarse.powf(config.p) * energy.total;

        let raster = rasterize(&cloud, &q_region, epsilon / config.raster_divisions)?;
        let shapes = cell_shapes(&raster);
        let reports = config
            .alphas
            .iter()
            .map(|&alpha| regular_from_shapes(&shapes, epsilon, alpha))
            .collect::<Result<Vec<_>>>()?;

        for (ki, &kappa) in config.kappas.iter().enumerate() {
            let outcome = lattice_part(config, &cloud, &u, &q_region, s_coarse, kappa, &target, previous[ki].as_ref());
            let (status, lattice) = match outcome {
                Ok(o) => ("ok", Some(o)),
                Err(e) => match reason(&e) {
                    Some(code) => (code, None),
                    None => return Err(e),
                },
            };
            let boxes = lattice.as_ref().map_or(0, |o| o.partition.len());
            for (qi, q) in config.qs().into_iter().enumerate() {
                let lq = lattice.as_ref().map(|o| o.per_q[qi]).unwrap_or([None; 6]);
                for (ai, &alpha) in config.alphas.iter().enumerate() {
                    let rep = &reports[ai];
                    rows.push(CompactnessRow {
                        epsilon,
                        trial,
                        seed,
                        s,
                        s_coarse,
                        kappa,
                        p: config.p,
                        q,
                        alpha,
                        points: cloud.len(),
                        boxes,
                        bad_count: lattice.as_ref().map(|o| o.bad_count),
                        energy_p: energy.total,
                        norm_p: energy.norm_p,
                        lattice_energy_p: lattice.as_ref().and_then(|o| o.lattice_energy_p),
                        energy_q_tu: lq[0],
                        good_pair_q: lq[1],
                        correction_q: lq[2],
                        norm_q: lq[3],
                        regular_count: rep.regular_count(),
                        regular_cell_distance: convergence_distance(&u, &target, &raster, rep, &q_region, q)?,
                        good_region_distance: lq[4],
                        energy_scale_bound,
                        cauchy_lq: lq[5],
                        status,
                    });
                }
            }
            previous[ki] = lattice.map(|o| (o.partition, o.extended));
        }
    }
    Ok(rows)
}

pub fn run_compactness(config: &ExperimentConfig) -> Result<Vec<CompactnessRow>> {
    let per_trial = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, trial))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}
