use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cloudcompact"))
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn run_in(dir: &Path, args: &[&str]) -> String {
    ok(bin().current_dir(dir).args(args).output().unwrap())
}

#[test]
fn sample_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_in(dir.path(), &["sample", "--epsilon", "0.1", "--region", "0,0,1,1", "--seed", "9"]);
    let b = run_in(dir.path(), &["sample", "--epsilon", "0.1", "--region", "0,0,1,1", "--seed", "9"]);
    let c = run_in(dir.path(), &["sample", "--epsilon", "0.1", "--region", "0,0,1,1", "--seed", "10"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    let mut lines = a.lines();
    assert!(lines.next().unwrap().starts_with("# gamma=1 epsilon=0.1 seed=9"));
    assert_eq!(lines.next().unwrap(), "x1,x2");
    for line in lines {
        let xs: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        assert!(xs.iter().all(|&x| (0.0..1.0).contains(&x)));
    }
}

#[test]
fn pipeline_from_cloud_to_extension() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_in(d, &["sample", "--epsilon", "0.05", "--region", "0,0,1,1", "--seed", "3", "-o", "cloud.csv"]);

    let energy = run_in(d, &["energy", "--cloud", "cloud.csv", "--target", "constant", "--s", "0.2"]);
    assert!(energy.starts_with("energy,0\n"), "{energy}");

    run_in(d, &["classify", "--cloud", "cloud.csv", "--s", "0.2", "--kappa", "0.25", "-o", "cls.csv"]);
    let cls = fs::read_to_string(d.join("cls.csv")).unwrap();
    assert!(cls.starts_with("J1,J2,count,is_bad\n"));
    assert_eq!(cls.lines().count(), 1 + 16);

    let summary = run_in(d, &["components", "--classification", "cls.csv", "--s", "0.2", "--members", "mem.csv"]);
    assert!(summary.starts_with("component_id,size,boundary_size,max_path_len,boundary_connected\n"));
    let members = fs::read_to_string(d.join("mem.csv")).unwrap();
    let bad_rows = cls.lines().skip(1).filter(|l| l.ends_with(",1")).count();
    assert_eq!(members.lines().count() - 1, bad_rows);

    // Affine data on the good boxes; every extended value stays inside its range.
    let mut field = String::from("J1,J2,value\n");
    for line in cls.lines().skip(1).filter(|l| l.ends_with(",0")) {
        let t: Vec<i64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        field.push_str(&format!("{},{},{}\n", t[0], t[1], t[0] + 2 * t[1]));
    }
    fs::write(d.join("field.csv"), field).unwrap();
    let ext = run_in(d, &["extend", "--field", "field.csv", "--components", "mem.csv", "--s", "0.2"]);
    let rows: Vec<Vec<f64>> = ext.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 16);
    for r in rows {
        assert!((3.0..=12.0).contains(&r[2]), "{r:?}");
    }
}

#[test]
fn regularity_and_raster_dump() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_in(d, &["sample", "--epsilon", "0.1", "--region", "0,0,1,1", "--seed", "1", "-o", "cloud.csv"]);
    let points = fs::read_to_string(d.join("cloud.csv")).unwrap().lines().count() - 2;
    let out = run_in(d, &["regularity", "--cloud", "cloud.csv", "--alpha", "0.1", "--h", "0.01", "--raster-dump", "r.bin"]);
    assert!(out.starts_with("point_index,inradius_est,diam_est,is_regular,touches_boundary\n"));
    assert_eq!(out.lines().count() - 1, points);
    let bytes = fs::read(d.join("r.bin")).unwrap();
    assert_eq!(bytes.len(), 100 * 100 * 4);
    let labels: Vec<u32> = bytes.chunks(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
    assert!(labels.iter().all(|&l| (l as usize) < points));
}

#[test]
fn experiment_run_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = r#"{"scenario":"decay","beta":2.0,"kappas":[0.7],"epsilons":[0.1,0.05],"trials":2,"seed":5,"outdir":"ignored"}"#;
    fs::write(d.join("cfg.json"), cfg).unwrap();
    run_in(d, &["experiment", "run", "cfg.json", "--outdir", "out", "--threads", "1"]);
    let csv = fs::read_to_string(d.join("out/decay.csv")).unwrap();
    assert!(csv.starts_with("beta,kappa,epsilon,s,trial,seed,"));
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(d.join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenarios"]["decay"]["rows"], 4);
    assert!(d.join("out/decay.timing.json").exists());
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().current_dir(dir.path()).args(["sample", "--epsilon", "0.1", "--region", "0,0,1"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = bin().current_dir(dir.path()).args(["energy", "--cloud", "missing.csv", "--target", "linear", "--s", "1"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn negative_region_coordinates_parse() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["sample", "--epsilon", "0.2", "--region", "-1,1", "--seed", "5"]);
    assert!(out.starts_with("# gamma=1 epsilon=0.2 seed=5 region=-1,1\nx1\n"), "{out}");
}
