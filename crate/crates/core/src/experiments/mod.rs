//! Config-driven Monte Carlo sweeps.
//!
//! Each scenario writes `<outdir>/<scenario>.csv` with a fixed header, rows in
//! deterministic order, and records the config hash in `<outdir>/manifest.json`.
//! Wall-clock times go to `<outdir>/<scenario>.timing.json` so the CSVs and the
//! manifest stay byte-identical across runs and thread counts.

pub mod chernoff;
pub mod compactness;
pub mod components;
pub mod config;
pub mod decay;
pub mod schedule;
pub mod stats;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use chernoff::{run_chernoff, ChernoffRow};
pub use compactness::{run_compactness, CompactnessRow};
pub use components::{fitted_lambda, run_components, ComponentsRow};
pub use config::{ExperimentConfig, OneOrMany, Scenario, TargetKind};
pub use decay::{run_decay, DecayRow};
pub use schedule::{sigma, ScaleSchedule};

use crate::bad_boxes::rho;
use crate::error::{Error, Result};

/// Rows of one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub enum Rows {
    Chernoff(Vec<ChernoffRow>),
    Decay(Vec<DecayRow>),
    Components(Vec<ComponentsRow>),
    Compactness(Vec<CompactnessRow>),
}

impl Rows {
    pub fn len(&self) -> usize {
        match self {
            Rows::Chernoff(r) => r.len(),
            Rows::Decay(r) => r.len(),
            Rows::Components(r) => r.len(),
            Rows::Compactness(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        fn ser<T: Serialize>(rows: &[T], header: &[&str]) -> Result<Vec<u8>> {
            let mut w = csv::WriterBuilder::new().has_headers(!rows.is_empty()).from_writer(Vec::new());
            if rows.is_empty() {
                w.write_record(header)?;
            }
            for r in rows {
                w.serialize(r)?;
            }
            w.into_inner().map_err(|e| Error::Io(e.into_error()))
        }
        match self {
            Rows::Chernoff(r) => ser(r, CHERNOFF_HEADER),
            Rows::Decay(r) => ser(r, DECAY_HEADER),
            Rows::Components(r) => ser(r, COMPONENTS_HEADER),
            Rows::Compactness(r) => ser(r, COMPACTNESS_HEADER),
        }
    }
}

pub const CHERNOFF_HEADER: &[&str] =
    &["ratio", "kappa", "expected", "boxes", "bad", "empirical", "bound", "exact", "slack", "within_bound"];
pub const DECAY_HEADER: &[&str] = &[
    "beta", "kappa", "epsilon", "s", "trial", "seed", "expected", "boxes", "mean_count", "bad_count", "bad_volume",
    "rho0", "eps_rho0", "below_eps_rho0", "s_rho0", "below_s_rho0", "zero_bad",
];
pub const COMPONENTS_HEADER: &[&str] = &[
    "beta", "kappa", "epsilon", "s", "trial", "seed", "boxes", "bad_count", "bad_fraction", "subcritical",
    "component_count", "max_component", "lambda_hat", "good_connected", "boundary_disconnected",
    "max_boundary_path", "volume_ok",
];
pub const COMPACTNESS_HEADER: &[&str] = &[
    "epsilon", "trial", "seed", "s", "s_coarse", "kappa", "p", "q", "alpha", "points", "boxes", "bad_count",
    "energy_p", "norm_p", "lattice_energy_p", "energy_q_tu", "good_pair_q", "correction_q", "norm_q",
    "regular_count", "regular_cell_distance", "good_region_distance", "energy_scale_bound", "cauchy_lq", "status",
];

/// Computes the rows of `config.scenario`, in the pool sized by
/// `config.threads` when set.
pub fn compute(config: &ExperimentConfig) -> Result<Rows> {
    config.validate()?;
    let job = || -> Result<Rows> {
        Ok(match config.scenario {
            Scenario::Chernoff => Rows::Chernoff(run_chernoff(config)?),
            Scenario::Decay => Rows::Decay(run_decay(config)?),
            Scenario::Components => Rows::Components(run_components(config)?),
            Scenario::Compactness => Rows::Compactness(run_compactness(config)?),
        })
    };
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(job),
        None => job(),
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Rows,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

fn scenario_extras(config: &ExperimentConfig, rows: &Rows) -> Value {
    match rows {
        Rows::Decay(_) | Rows::Components(_) => {
            let mut rho0 = Vec::new();
            for beta in config.betas() {
                for &kappa in &config.kappas {
                    rho0.push(json!({
                        "beta": beta,
                        "kappa": kappa,
                        "rho0": rho(beta, config.d, config.gamma, kappa) / 2.0,
                    }));
                }
            }
            let mut extra = json!({ "rho0": rho0 });
            if let Rows::Components(r) = rows {
                let mut fits = Vec::new();
                for beta in config.betas() {
                    for &kappa in &config.kappas {
                        let subset: Vec<ComponentsRow> =
                            r.iter().filter(|x| x.beta == beta && x.kappa == kappa).cloned().collect();
                        fits.push(json!({ "beta": beta, "kappa": kappa, "lambda_hat": fitted_lambda(&subset) }));
                    }
                }
                extra["lambda_hat"] = Value::Array(fits);
            }
            extra
        }
        Rows::Compactness(r) => {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for row in r {
                *counts.entry(row.status).or_default() += 1;
            }
            json!({ "status_counts": counts })
        }
        Rows::Chernoff(_) => json!({}),
    }
}

/// Runs the scenario and writes the CSV, the manifest entry and the timing
/// file under `config.outdir`.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    let started = Instant::now();
    let rows = compute(config)?;
    let elapsed = started.elapsed().as_secs_f64();
    let outdir = Path::new(&config.outdir);
    fs::create_dir_all(outdir)?;
    let name = config.scenario.name();
    let csv = rows.to_csv()?;
    let csv_path = outdir.join(format!("{name}.csv"));
    fs::write(&csv_path, &csv)?;

    let manifest_path = outdir.join("manifest.json");
    let mut manifest: Value = match fs::read(&manifest_path) {
        Ok(bytes) => serde_json::from_slice(&bytes).unwrap_or_else(|_| json!({})),
        Err(_) => json!({}),
    };
    if !manifest.is_object() {
        manifest = json!({});
    }
    manifest["tool"] = json!(env!("CARGO_PKG_NAME"));
    manifest["version"] = json!(env!("CARGO_PKG_VERSION"));
    if !manifest["scenarios"].is_object() {
        manifest["scenarios"] = json!({});
    }
    manifest["scenarios"][name] = json!({
        "csv": format!("{name}.csv"),
        "csv_sha256": hex::encode(Sha256::digest(&csv)),
        "rows": rows.len(),
        "config_sha256": config.hash(),
        "config": config.content(),
        "extras": scenario_extras(config, &rows),
    });
    fs::write(&manifest_path, serde_json::to_vec_pretty(&manifest)?)?;
    let timing = json!({ "scenario": name, "seconds": elapsed, "rows": rows.len() });
    fs::write(outdir.join(format!("{name}.timing.json")), serde_json::to_vec_pretty(&timing)?)?;
    Ok(RunOutput { rows, csv_path, manifest_path })
}
