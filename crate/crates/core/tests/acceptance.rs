//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p cloudcompact --test acceptance`; pass criterion
//! numbers as arguments (`-- 1 7`) to run a subset. Exits nonzero when any
//! selected criterion fails.

use std::collections::VecDeque;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use cloudcompact::bad_boxes::components_from_mask;
use cloudcompact::energy::{cloud_energy, EnergyParams};
use cloudcompact::experiments::stats::{mann_kendall_up, mean, median, strict_decreases, strict_increases, variance};
use cloudcompact::experiments::{
    compute, run, run_chernoff, run_compactness, run_components, run_decay, CompactnessRow, ExperimentConfig, Rows,
};
use cloudcompact::extension::extend;
use cloudcompact::field::{CloudField, LatticeField};
use cloudcompact::point_process::sample;
use cloudcompact::rng::stream;
use cloudcompact::{LatticePartition, PointCloud, ProcessParams, Region};

const EPSILONS: [f64; 6] = [0.1, 0.07, 0.05, 0.03, 0.02, 0.01];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).expect("acceptance config is valid")
}

fn per_epsilon<T>(rows: &[T], eps: impl Fn(&T) -> f64, value: impl Fn(&T) -> Option<f64>) -> Vec<f64> {
    EPSILONS
        .iter()
        .map(|&e| {
            let xs: Vec<f64> = rows.iter().filter(|r| eps(r) == e).filter_map(&value).collect();
            mean(&xs)
        })
        .collect()
}

fn fmt_list(items: &[String]) -> String {
    if items.is_empty() {
        "none".into()
    } else {
        items.join("; ")
    }
}

fn fmt_series(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn poisson_law() -> Outcome {
    let region = Region::unit_cube(2).unwrap();
    let counts: Vec<f64> = (0..10_000u64)
        .map(|seed| sample(&ProcessParams::new(1.0, 0.05, 2, seed).unwrap(), &region).unwrap().len() as f64)
        .collect();
    let m = mean(&counts);
    let ratio = variance(&counts) / m;
    let pass = (m - 400.0).abs() <= 4.0 * (400.0f64 / 1e4).sqrt() && (0.9..=1.1).contains(&ratio);
    outcome(pass, format!("mean={m:.3} (|dev| <= 0.8) var/mean={ratio:.4} (in [0.9, 1.1])"))
}

/// Direct double sum over all pairs.
fn brute_energy(points: &[Vec<f64>], u: &[f64], region: &Region, p: f64, s: f64, eps: f64) -> f64 {
    let d = points[0].len() as i32;
    let mut total = 0.0;
    for (i, x) in points.iter().enumerate() {
        if !region.contains(x) {
            continue;
        }
        let mut grad = 0.0;
        for (j, y) in points.iter().enumerate() {
            let dist2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            if dist2 <= s * s {
                grad += ((u[j] - u[i]).abs() / s).powf(p);
            }
        }
        total += grad * eps.powi(d) / s.powi(d);
    }
    total * eps.powi(d)
}

fn energy_oracle() -> Outcome {
    let mut rng = stream(0xE0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let d = rng.random_range(1..=3usize);
        let n = rng.random_range(2..=200usize);
        let q = Region::new(vec![0.0; d], vec![1.0; d]).unwrap();
        let params = ProcessParams::new(1.0, 0.05, d, 0).unwrap();
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
        let cloud = PointCloud::from_points(points.clone(), params, q).unwrap();
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let field = CloudField::new(&cloud, u.clone()).unwrap();
        let p = [1.0, 1.5, 2.0, 3.0][rng.random_range(0..4)];
        let s = rng.random_range(0.05..0.6);
        let eps = rng.random_range(0.01..0.2);
        let lo: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..0.4)).collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.3..0.6)).collect();
        let region = Region::new(lo, hi).unwrap();
        let fast = cloud_energy(&cloud, &field, &region, &EnergyParams::new(p, s, eps).unwrap()).unwrap().total;
        let slow = brute_energy(&points, &u, &region, p, s, eps);
        let rel = if slow == 0.0 { fast.abs() } else { (fast - slow).abs() / slow.abs() };
        worst = worst.max(rel);
    }
    let q = Region::new(vec![-1.0, -1.0], vec![2.0, 2.0]).unwrap();
    let params = ProcessParams::new(1.0, 1.0, 2, 0).unwrap();
    let cloud = PointCloud::from_points(vec![vec![0.0, 0.0], vec![1.0, 0.0]], params, q.clone()).unwrap();
    let u = CloudField::new(&cloud, vec![0.0, 1.0]).unwrap();
    let hand = cloud_energy(&cloud, &u, &q, &EnergyParams::new(2.0, 1.0, 1.0).unwrap()).unwrap().total;
    let pass = worst <= 1e-10 && (hand - 2.0).abs() <= 1e-12;
    outcome(pass, format!("max rel err over 1000 clouds={worst:.2e} two-point={hand}"))
}

fn chernoff_domination() -> Outcome {
    let cfg = config(r#"{"scenario":"chernoff","beta":1,"ratios":[4,6,8],"kappas":[0.3,0.5,0.7],"boxes":1000000,"seed":20240301}"#);
    let rows = run_chernoff(&cfg).unwrap();
    let violations: Vec<String> = rows
        .iter()
        .filter(|r| !r.within_bound)
        .map(|r| format!("s/eps={} kappa={} emp={:.3e} bound={:.3e}", r.ratio, r.kappa, r.empirical, r.bound))
        .collect();
    let pass = rows.len() == 9 && violations.is_empty() && rows.iter().all(|r| r.boxes >= 1_000_000);
    outcome(pass, format!("{}/9 grid points within bound + 4 s.e.; violations: {}", 9 - violations.len(), fmt_list(&violations)))
}

fn regime_a_vanishing() -> Outcome {
    let cfg = config(r#"{"scenario":"decay","beta":2.0,"kappas":[0.7],"trials":50,"seed":20240302}"#);
    let rows = run_decay(&cfg).unwrap();
    let zero = per_epsilon(&rows, |r| r.epsilon, |r| Some(f64::from(u8::from(r.zero_bad))));
    let last = *zero.last().unwrap();
    let pass = strict_decreases(&zero) <= 1 && last >= 0.9;
    outcome(pass, format!("zero-bad fraction by eps {} (inversions={}, final >= 0.9)", fmt_series(&zero), strict_decreases(&zero)))
}

fn regime_b_decay() -> Outcome {
    let cfg = config(r#"{"scenario":"decay","beta":0.5,"kappas":[0.5],"trials":50,"seed":20240303}"#);
    let rows = run_decay(&cfg).unwrap();
    let below = per_epsilon(&rows, |r| r.epsilon, |r| Some(f64::from(u8::from(r.below_eps_rho0))));
    let rho0 = rows[0].rho0;
    let pass = below[3..].iter().all(|&f| f >= 0.9);
    outcome(pass, format!("rho0={rho0:.6} fraction with bad*s^d <= eps^rho0 by eps {}", fmt_series(&below)))
}

fn component_bound() -> Outcome {
    let cfg = config(r#"{"scenario":"components","beta":0.5,"kappas":[0.5],"trials":50,"seed":20240304}"#);
    let rows = run_components(&cfg).unwrap();
    let lambda = per_epsilon(&rows, |r| r.epsilon, |r| Some(r.lambda_hat));
    let connected = per_epsilon(&rows, |r| r.epsilon, |r| Some(f64::from(u8::from(r.good_connected))));
    let trend = mann_kendall_up(&lambda);
    let pass = trend.p_up >= 0.05 && connected[4..].iter().all(|&f| f >= 0.99);
    outcome(
        pass,
        format!(
            "mean max_component/ln(1/s) {} MK S={} p_up={:.4}; good connected {}",
            fmt_series(&lambda),
            trend.s,
            trend.p_up,
            fmt_series(&connected)
        ),
    )
}

/// Face components of the bad mask and their good diagonal layers by breadth-first search.
fn bfs_components(bad: &[bool], part: &LatticePartition) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let mut seen = vec![false; bad.len()];
    let mut comps = Vec::new();
    let mut layers = Vec::new();
    for start in 0..bad.len() {
        if !bad[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut members = Vec::new();
        while let Some(i) = queue.pop_front() {
            members.push(i);
            part.for_each_neighbor(i, false, |j| {
                if bad[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            });
        }
        members.sort_unstable();
        let mut layer = Vec::new();
        for &i in &members {
            part.for_each_neighbor(i, true, |j| {
                if !bad[j] {
                    layer.push(j);
                }
            });
        }
        layer.sort_unstable();
        layer.dedup();
        comps.push(members);
        layers.push(layer);
    }
    (comps, layers)
}

fn extension_correctness() -> Outcome {
    let mut rng = stream(0xE7);
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut tries = 0;
    while checked < 1000 && tries < 5000 {
        tries += 1;
        let d = rng.random_range(1..=3usize);
        let side = match d {
            1 => 40,
            2 => 12,
            _ => 6,
        };
        let part = LatticePartition::from_ranges(0.5, d, &vec![0; d], &vec![side - 1; d]).unwrap();
        let density = rng.random_range(0.05..0.55);
        let bad: Vec<bool> = (0..part.len()).map(|_| rng.random::<f64>() < density).collect();
        let graph = components_from_mask(&bad, &part).unwrap();
        let (comps, layers) = bfs_components(&bad, &part);
        if comps != graph.components || layers != graph.boundary {
            failures.push(format!("component mismatch (d={d})"));
        }
        if graph.boundary.iter().any(Vec::is_empty) {
            continue;
        }
        let mut v = LatticeField::undefined(&part);
        for (i, &b) in bad.iter().enumerate() {
            if !b {
                v.set(i, rng.random_range(-5.0..5.0));
            }
        }
        let tv = extend(&v, &graph, &part).unwrap();
        let (lo, hi) = v.min_max().unwrap();
        for (i, &is_bad) in bad.iter().enumerate() {
            let t = tv.get(i).unwrap();
            if !is_bad && t != v.get(i).unwrap() {
                failures.push("good value changed".into());
            }
            if t < lo || t > hi {
                failures.push(format!("range violated: {t} not in [{lo}, {hi}]"));
            }
        }
        let c = rng.random_range(-3.0..3.0);
        let mut constant = LatticeField::undefined(&part);
        for (i, &b) in bad.iter().enumerate() {
            if !b {
                constant.set(i, c);
            }
        }
        let tc = extend(&constant, &graph, &part).unwrap();
        if (0..part.len()).any(|i| (tc.get(i).unwrap() - c).abs() > 1e-12 * c.abs().max(1.0)) {
            failures.push("constant not preserved".into());
        }
        checked += 1;
    }
    failures.dedup();
    let pass = checked == 1000 && failures.is_empty();
    outcome(pass, format!("{checked} random fields, {tries} masks checked against BFS; failures: {}", fmt_list(&failures)))
}

fn compactness_rows() -> Vec<CompactnessRow> {
    // Energy scale chosen so the coarse boxes s/(4 sqrt 2) are exactly the boxes of the beta = 0.5 sweep.
    let beta = 0.5 * 4.0 * 2f64.sqrt();
    let cfg = config(&format!(
        r#"{{"scenario":"compactness","beta":{beta},"kappas":[0.5],"alphas":[0.05,0.1,0.2],"p":2,"q":[1,1.5],"trials":50,"target":"linear","seed":20240305}}"#
    ));
    run_compactness(&cfg).unwrap()
}

fn abort_summary(rows: &[CompactnessRow]) -> String {
    let total = rows.len();
    let aborted = rows.iter().filter(|r| r.status != "ok").count();
    format!("aborted rows {aborted}/{total}")
}

fn extension_energy_control(rows: &[CompactnessRow]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for q in [1.0, 1.5] {
        let sel: Vec<&CompactnessRow> = rows.iter().filter(|r| r.q == q && r.alpha == 0.05 && r.status == "ok").collect();
        let energy = per_epsilon(&sel, |r| r.epsilon, |r| r.energy_q_tu);
        let norm = per_epsilon(&sel, |r| r.epsilon, |r| r.norm_q);
        let corr = per_epsilon(&sel, |r| r.epsilon, |r| r.correction_q);
        let e_ok = energy.iter().all(|&x| x <= 3.0 * median(&energy));
        let n_ok = norm.iter().all(|&x| x <= 3.0 * median(&norm));
        let c_ok = corr[5] <= 0.5 * corr[0];
        pass &= e_ok && n_ok && c_ok;
        parts.push(format!(
            "q={q}: energy {} ({}) norm {} ({}) correction {} ({})",
            fmt_series(&energy),
            if e_ok { "bounded" } else { "exceeds 3x median" },
            fmt_series(&norm),
            if n_ok { "bounded" } else { "exceeds 3x median" },
            fmt_series(&corr),
            if c_ok { "halved" } else { "not halved" },
        ));
    }
    outcome(pass, format!("{}; {}", parts.join("; "), abort_summary(rows)))
}

fn convergence_metric(rows: &[CompactnessRow]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [0.05, 0.1, 0.2] {
        let sel: Vec<&CompactnessRow> = rows.iter().filter(|r| r.q == 1.5 && r.alpha == alpha).collect();
        let dist = per_epsilon(&sel, |r| r.epsilon, |r| Some(r.regular_cell_distance));
        let ok = strict_increases(&dist) <= 1 && dist[5] <= 0.25 * dist[0];
        pass &= ok;
        parts.push(format!("alpha={alpha}: {} final/initial={:.3}", fmt_series(&dist), dist[5] / dist[0]));
    }
    outcome(pass, parts.join("; "))
}

fn determinism() -> Outcome {
    let configs = [
        r#"{"scenario":"chernoff","beta":1,"ratios":[4,6],"kappas":[0.5],"boxes":30000,"seed":11}"#,
        r#"{"scenario":"decay","beta":[2,0.5],"kappas":[0.5,0.7],"epsilons":[0.1,0.05],"trials":6,"seed":12}"#,
        r#"{"scenario":"components","beta":0.5,"epsilons":[0.1,0.05],"trials":6,"seed":13}"#,
        r#"{"scenario":"compactness","beta":2.8,"epsilons":[0.1,0.07],"trials":3,"noise":0.5,"seed":14}"#,
    ];
    let mut failures = Vec::new();
    for text in configs {
        let base = config(text);
        let name = base.scenario.name();
        let bytes = |threads: usize| -> Vec<u8> {
            let cfg = ExperimentConfig { threads: Some(threads), ..base.clone() };
            let rows: Rows = compute(&cfg).unwrap();
            rows.to_csv().unwrap()
        };
        let one = bytes(1);
        if one != bytes(4) || one != bytes(1) {
            failures.push(format!("{name}: thread count changes the CSV"));
        }
        let written: Vec<(Vec<u8>, Vec<u8>)> = (0..2)
            .map(|k| {
                let dir = tempfile::tempdir().unwrap();
                let cfg = ExperimentConfig {
                    outdir: dir.path().to_string_lossy().into_owned(),
                    threads: Some(1 + 2 * k),
                    ..base.clone()
                };
                let out = run(&cfg).unwrap();
                let csv = std::fs::read(&out.csv_path).unwrap();
                let manifest: serde_json::Value =
                    serde_json::from_slice(&std::fs::read(&out.manifest_path).unwrap()).unwrap();
                (csv, serde_json::to_vec(&manifest["scenarios"][name]).unwrap())
            })
            .collect();
        if written[0] != written[1] {
            failures.push(format!("{name}: written CSV or manifest entry differs between runs"));
        }
        if written[0].0 != one {
            failures.push(format!("{name}: written CSV differs from computed rows"));
        }
    }
    outcome(failures.is_empty(), format!("4 scenarios, threads 1 vs 4 and repeated runs; failures: {}", fmt_list(&failures)))
}

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: usize| selected.is_empty() || selected.contains(&n);
    let mut compactness: Option<Vec<CompactnessRow>> = None;
    let mut failed = 0;
    let mut ran = 0;
    for n in 1..=10usize {
        if !wanted(n) {
            continue;
        }
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| match n {
            1 => poisson_law(),
            2 => energy_oracle(),
            3 => chernoff_domination(),
            4 => regime_a_vanishing(),
            5 => regime_b_decay(),
            6 => component_bound(),
            7 => extension_correctness(),
            8 => extension_energy_control(compactness.get_or_insert_with(compactness_rows)),
            9 => convergence_metric(compactness.get_or_insert_with(compactness_rows)),
            _ => determinism(),
        }));
        let o = result.unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        ran += 1;
        failed += usize::from(!o.pass);
        println!(
            "criterion {n:>2}: {} ({:.1}s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
