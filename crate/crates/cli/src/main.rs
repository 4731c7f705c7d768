use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cloudcompact::bad_boxes::{boundary_stats, classify, components_from_mask};
use cloudcompact::energy::{cloud_energy, EnergyParams};
use cloudcompact::experiments::{self, ExperimentConfig, TargetKind};
use cloudcompact::extension::extend;
use cloudcompact::field::{CloudField, LatticeField};
use cloudcompact::io::{self as cio, CloudMeta};
use cloudcompact::point_process::{sample, ProcessParams};
use cloudcompact::regularity::{rasterize, regular_subcloud};
use cloudcompact::{Error, LatticePartition, PointCloud, Region, Result};

#[derive(Parser)]
#[command(name = "cloudcompact", version, about = "Poisson clouds, nonlocal energies, bad boxes and extensions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Overrides for cloud files without a metadata line.
#[derive(clap::Args, Clone)]
struct CloudArgs {
    /// Cloud CSV (`-` for stdin).
    #[arg(long)]
    cloud: PathBuf,
    /// Spacing scale, when the cloud file does not record it.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Sampling region `lo...,hi...`, when the cloud file does not record it.
    #[arg(long = "cloud-region", allow_hyphen_values = true)]
    cloud_region: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Constant,
    Linear,
    Sin,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a Poisson cloud with intensity gamma * eps^-d.
    Sample {
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long)]
        epsilon: f64,
        /// `lo...,hi...`, e.g. `0,0,1,1`.
        #[arg(long, allow_hyphen_values = true)]
        region: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Nonlocal p-Dirichlet energy of a field on a cloud.
    Energy {
        #[command(flatten)]
        cloud: CloudArgs,
        /// `point_index,value` CSV; mutually exclusive with --target.
        #[arg(long, conflicts_with = "target")]
        field: Option<PathBuf>,
        #[arg(long, value_enum)]
        target: Option<TargetArg>,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Points whose gradient terms are summed; the whole cloud region by default.
        #[arg(long, allow_hyphen_values = true)]
        region: Option<String>,
        /// Per-point `point_index,value` CSV of the gradient terms.
        #[arg(long)]
        per_point: Option<PathBuf>,
    },
    /// Count points per box and flag the bad boxes.
    Classify {
        #[command(flatten)]
        cloud: CloudArgs,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Region whose box centers form the partition; by default the boxes
        /// that fit inside the cloud region.
        #[arg(long, allow_hyphen_values = true)]
        region: Option<String>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Components of the bad boxes of a classification CSV.
    Components {
        #[arg(long)]
        classification: PathBuf,
        #[arg(long)]
        s: f64,
        /// Also write `component_id,J1..Jd` member rows here.
        #[arg(long)]
        members: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Fill bad components of a lattice field by boundary averages.
    Extend {
        /// `J1..Jd,value` on the good boxes.
        #[arg(long)]
        field: PathBuf,
        /// `component_id,J1..Jd` member rows.
        #[arg(long)]
        components: PathBuf,
        #[arg(long)]
        s: f64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Voronoi regularity of every cloud point.
    Regularity {
        #[command(flatten)]
        cloud: CloudArgs,
        #[arg(long)]
        alpha: f64,
        /// Raster pitch; at most eps/8 by default.
        #[arg(long)]
        h: Option<f64>,
        /// Raster region; the cloud region by default.
        #[arg(long, allow_hyphen_values = true)]
        region: Option<String>,
        /// Write the raster labels (u32 LE, axis 0 fastest) here.
        #[arg(long)]
        raster_dump: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Experiment runner.
    Experiment {
        #[command(subcommand)]
        action: ExperimentAction,
    },
}

#[derive(Subcommand)]
enum ExperimentAction {
    /// Run the scenario described by a JSON config.
    Run {
        config: PathBuf,
        /// Replaces the config's outdir.
        #[arg(long)]
        outdir: Option<String>,
        /// Replaces the config's thread count.
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn open_in(path: &Path) -> Result<Box<dyn Read>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(io::stdin().lock()))
    } else {
        Ok(Box::new(File::open(path)?))
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) if p.as_os_str() != "-" => Ok(Box::new(File::create(p)?)),
        _ => Ok(Box::new(io::stdout().lock())),
    }
}

fn load_cloud(args: &CloudArgs) -> Result<PointCloud> {
    let fallback = CloudMeta {
        epsilon: args.epsilon,
        region: args.cloud_region.as_deref().map(Region::parse).transpose()?,
        ..Default::default()
    };
    cio::read_cloud(open_in(&args.cloud)?, fallback)
}

fn target_kind(t: TargetArg) -> TargetKind {
    match t {
        TargetArg::Constant => TargetKind::Constant,
        TargetArg::Linear => TargetKind::Linear,
        TargetArg::Sin => TargetKind::Sin,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sample { gamma, epsilon, region, seed, out } => {
            let region = Region::parse(&region)?;
            let cloud = sample(&ProcessParams::new(gamma, epsilon, region.dim(), seed)?, &region)?;
            cio::write_cloud(&cloud, open_out(out.as_deref())?)
        }
        Command::Energy { cloud, field, target, s, p, region, per_point } => {
            let cloud = load_cloud(&cloud)?;
            let u = match (field, target) {
                (Some(path), _) => cio::read_cloud_field(open_in(&path)?, &cloud)?,
                (None, Some(t)) => CloudField::from_fn(&cloud, |x| target_kind(t).eval(x))?,
                (None, None) => return Err(Error::Config("one of --field or --target is required".into())),
            };
            let region = match region {
                Some(r) => Region::parse(&r)?,
                None => cloud.region().clone(),
            };
            let params = EnergyParams::new(p, s, cloud.params().epsilon)?;
            let e = cloud_energy(&cloud, &u, &region, &params)?;
            if let Some(path) = per_point {
                let mut w = File::create(path)?;
                writeln!(w, "point_index,value")?;
                for (i, g) in &e.per_point {
                    writeln!(w, "{i},{}", cio::fmt_f64(*g))?;
                }
            }
            let mut out = io::stdout().lock();
            writeln!(out, "energy,{}", cio::fmt_f64(e.total))?;
            writeln!(out, "norm_p,{}", cio::fmt_f64(e.norm_p))?;
            writeln!(out, "points,{}", e.per_point.len())?;
            Ok(())
        }
        Command::Classify { cloud, s, kappa, gamma, region, out } => {
            let cloud = load_cloud(&cloud)?;
            let region = match region {
                Some(r) => Region::parse(&r)?,
                None => cloud.region().dilate(-s / 2.0)?,
            };
            let partition = LatticePartition::build(&region, s)?;
            let cls = classify(&cloud, &partition, kappa, gamma)?;
            cio::write_classification(&cls, &partition, open_out(out.as_deref())?)
        }
        Command::Components { classification, s, members, out } => {
            let (dim, rows) = cio::read_classification(open_in(&classification)?)?;
            let partition = cio::bounding_partition(s, dim, rows.iter().map(|r| r.id))?;
            let mut bad = vec![false; partition.len()];
            let mut seen = vec![false; partition.len()];
            for r in &rows {
                let i = partition.index_of(&r.id).expect("inside bounding partition");
                if seen[i] {
                    return Err(Error::Parse { line: 0, msg: format!("box {:?} listed twice", r.id) });
                }
                seen[i] = true;
                bad[i] = r.is_bad;
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::Config("classification does not cover a rectangular block of boxes".into()));
            }
            let graph = components_from_mask(&bad, &partition)?;
            let stats: Vec<_> = (0..graph.len()).map(|id| boundary_stats(&graph, &partition, id)).collect();
            if let Some(path) = members {
                cio::write_members(&graph, &partition, File::create(path)?)?;
            }
            cio::write_component_summary(&graph, &stats, open_out(out.as_deref())?)
        }
        Command::Extend { field, components, s, out } => {
            let (dim, entries) = cio::read_lattice_entries(open_in(&field)?)?;
            let (mdim, members) = cio::read_members(open_in(&components)?)?;
            if !members.is_empty() && mdim != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: mdim });
            }
            let partition = cio::bounding_partition(
                s,
                dim,
                entries.iter().map(|e| e.0).chain(members.iter().map(|m| m.1)),
            )?;
            let mut bad = vec![false; partition.len()];
            for (_, id) in &members {
                bad[partition.index_of(id).expect("inside bounding partition")] = true;
            }
            let mut v = LatticeField::from_entries(&partition, &entries)?;
            for (i, &b) in bad.iter().enumerate() {
                if b {
                    v.clear(i);
                }
            }
            let graph = components_from_mask(&bad, &partition)?;
            let tv = extend(&v, &graph, &partition)?;
            cio::write_lattice_field(&tv, &partition, open_out(out.as_deref())?)
        }
        Command::Regularity { cloud, alpha, h, region, raster_dump, out } => {
            let cloud = load_cloud(&cloud)?;
            let region = match region {
                Some(r) => Region::parse(&r)?,
                None => cloud.region().clone(),
            };
            let h = h.unwrap_or(cloud.params().epsilon / 8.0);
            let raster = rasterize(&cloud, &region, h)?;
            let report = regular_subcloud(&raster, &cloud, alpha)?;
            if let Some(path) = raster_dump {
                cio::write_raster_labels(&raster, File::create(path)?)?;
            }
            cio::write_regularity(&report, open_out(out.as_deref())?)
        }
        Command::Experiment { action: ExperimentAction::Run { config, outdir, threads } } => {
            let mut text = String::new();
            open_in(&config)?.read_to_string(&mut text)?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            if let Some(dir) = outdir {
                cfg.outdir = dir;
            }
            if threads.is_some() {
                cfg.threads = threads;
            }
            let out = experiments::run(&cfg)?;
            eprintln!("{} rows -> {}", out.rows.len(), out.csv_path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
