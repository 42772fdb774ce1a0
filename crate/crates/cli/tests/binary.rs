use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_axibilayer"));
    c.env_remove("AXIBILAYER_OUT").env_remove("RUST_LOG");
    c
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.cfg");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const SPHEROID: &str = "junction=c1\nJ1=24\nJ2=24\ndt=1e-3\nt_end=0.05\nshape=spheroid\nv_r=0.9\n\
kbar1=-1\nkbar2=-1\nmode=area_volume\nstationarity_tol=0\nsnapshot_every=25\n";

#[test]
fn spheroid_conserves_area_and_volume() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SPHEROID);
    let out = tmp.path().join("o");
    let o = bin()
        .args(["--quiet", "run", "--config", &cfg, "--override"])
        .arg(format!("output_dir={}", out.display()))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    assert!(csv.starts_with("t,E,A1,A2,V,vr,rM1,rM2,lamA1,lamA2,lamV,beta,newton_iters,junction_r,junction_z\n"));
    for name in ["A1", "A2", "V"] {
        let c = column(&csv, name);
        assert_eq!(c.len(), 51);
        for x in &c {
            assert!((x - c[0]).abs() <= 1e-8 * c[0].abs(), "{name}: {x} vs {}", c[0]);
        }
    }
    for s in ["step_00000000.txt", "step_00000025.txt", "step_00000050.txt"] {
        assert!(out.join("snapshots").join(s).exists(), "{s}");
    }
    assert!(out.join("final.txt").exists());
    assert!(!out.join(".axibilayer.lock").exists());
}

/// On a sphere the area and volume constraints are dependent and the
/// flattened first step cannot keep both, so the run stops with a solver
/// failure.
#[test]
fn sphere_with_area_and_volume_fails_cleanly() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &SPHEROID.replace("shape=spheroid", "shape=sphere\nradius=2"));
    let out = tmp.path().join("o");
    let o = bin().args(["run", "--config", &cfg]).env("AXIBILAYER_OUT", &out).output().unwrap();
    assert_eq!(code(&o), 4);
    let csv = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let o = bin()
        .args(["--quiet", "run", "--config", &cfg, "--override", "mode=area"])
        .env("AXIBILAYER_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "J1=8\nJ2=6\ndt=1e-3\nt_end=0.02\nshape=perturbed_sphere\nkbar1=-1\nkbar2=-1\n");
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("o{k}"));
        let o = bin()
            .args(["--quiet", "run", "--config", &cfg])
            .env("AXIBILAYER_OUT", &out)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        outputs.push(fs::read(out.join("timeseries.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    for body in ["dt=1e-3\nt_end=1\nalpha1=0\n", "dt=1e-3\nt_end=1\njunction=c2\n", "dt=1\nbogus=3\n"] {
        let cfg = write_config(tmp.path(), body);
        let o = bin().args(["run", "--config", &cfg]).env("AXIBILAYER_OUT", &out).output().unwrap();
        assert_eq!(code(&o), 1, "{body}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    }
    let o = bin()
        .args(["run", "--config", tmp.path().join("missing.cfg").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn busy_output_directory_is_refused() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "J1=6\nJ2=6\ndt=1e-3\nt_end=0.002\n");
    let out = tmp.path().join("o");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join(".axibilayer.lock"), "").unwrap();
    let o = bin().args(["run", "--config", &cfg]).env("AXIBILAYER_OUT", &out).output().unwrap();
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("in use"));
}

#[test]
fn export3d_of_unit_sphere_is_closed() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "J1=32\nJ2=32\ndt=1\nt_end=1\nshape=sphere\n");
    let obj = tmp.path().join("s.obj");
    let o = bin()
        .args(["export3d", "--config", &cfg, "--azimuthal", "64", "--output", obj.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&obj).unwrap();
    let nv = text.lines().filter(|l| l.starts_with("v ")).count() as i64;
    let faces: Vec<Vec<usize>> = text
        .lines()
        .filter(|l| l.starts_with("f "))
        .map(|l| l[2..].split_whitespace().map(|t| t.parse().unwrap()).collect())
        .collect();
    let mut edges = std::collections::HashMap::new();
    for f in &faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    assert!(edges.values().all(|&n| n == 2));
    assert_eq!(nv - edges.len() as i64 + faces.len() as i64, 2);
}

#[test]
fn export3d_reads_snapshots() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "J1=6\nJ2=5\ndt=1e-3\nt_end=0.003\nshape=spheroid\nv_r=0.8\n");
    let out = tmp.path().join("o");
    assert_eq!(code(&bin().args(["-q"]).output().unwrap()), 2);
    let o = bin().args(["--quiet", "run", "--config", &cfg]).env("AXIBILAYER_OUT", &out).output().unwrap();
    assert_eq!(code(&o), 0);
    let obj = tmp.path().join("f.obj");
    let o = bin()
        .args(["export3d", "--snapshot"])
        .arg(out.join("final.txt"))
        .args(["--azimuthal", "8", "--output"])
        .arg(&obj)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&obj).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 2 + 10 * 8);
    assert!(text.contains("g phase1") && text.contains("g phase2"));
}

#[test]
fn converge_writes_eoc_columns() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("c");
    let o = bin()
        .args(["--quiet", "converge", "--rows", "8x4,16x8", "--t-end", "0.05", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    let eoc: Vec<&str> = lines.iter().map(|l| l.split(',').nth(6).unwrap()).collect();
    assert_eq!(eoc[1], "");
    let e: f64 = eoc[2].parse().unwrap();
    assert!(e > 0.5, "{e}");
    assert_eq!(code(&bin().args(["converge", "--rows", "8by4"]).output().unwrap()), 1);
}

#[test]
fn compare_and_residuals_write_tables() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "J1=12\nJ2=6\ndt=1e-3\nt_end=0.01\nshape=quarter_pair\nstationarity_tol=0\n");
    let out = tmp.path().join("cmp");
    let o = bin().args(["--quiet", "compare", "--config", &cfg]).env("AXIBILAYER_OUT", &out).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("compare_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    let energy = fs::read_to_string(out.join("compare_energy.csv")).unwrap();
    assert_eq!(energy.lines().count(), 12);

    let out = tmp.path().join("res");
    let o = bin().args(["--quiet", "residuals", "--config", &cfg]).env("AXIBILAYER_OUT", &out).output().unwrap();
    assert_eq!(code(&o), 0);
    let res = fs::read_to_string(out.join("residuals.csv")).unwrap();
    assert!(res.contains("K_jump,") && res.contains("c1_tension,"));

    let c0 = tmp.path().join("res0");
    let o = bin()
        .args(["--quiet", "compare", "--config", &cfg, "--override", "junction=c0"])
        .env("AXIBILAYER_OUT", &c0)
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}
