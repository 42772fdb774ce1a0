//! Text output formats: time series CSV, snapshots, convergence and comparison
//! tables, junction residuals and revolved OBJ surfaces.
//!
//! Floating-point values are written with 17 significant digits so that they
//! read back to the same `f64`.

use std::fmt::Write as _;
use std::io::{self, Write};

use axibilayer::assembly::SchemeState;
use axibilayer::driver::Termination;
use axibilayer::functionals::Diagnostics;
use axibilayer::mesh::TwoPhaseMesh;
use axibilayer::verification::{ConvergenceRow, DriftComparison, JunctionDiagnostics};
use axibilayer::{Mesh, Point};

/// Formats `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const TIMESERIES_HEADER: &str =
    "t,E,A1,A2,V,vr,rM1,rM2,lamA1,lamA2,lamV,beta,newton_iters,junction_r,junction_z";

pub fn timeseries_row(d: &Diagnostics<f64>) -> String {
    let floats = [
        d.t,
        d.energy,
        d.area[0],
        d.area[1],
        d.volume,
        d.reduced_volume,
        d.element_ratio[0],
        d.element_ratio[1],
        d.lambda_a[0],
        d.lambda_a[1],
        d.lambda_v,
        d.beta,
    ];
    let mut s: Vec<String> = floats.iter().map(|&x| fmt_f64(x)).collect();
    s.push(d.newton_iters.to_string());
    s.push(fmt_f64(d.junction.r));
    s.push(fmt_f64(d.junction.z));
    s.join(",")
}

/// A state as read back from a snapshot file.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub nodes: [Vec<Point>; 2],
    pub kappa: [Vec<f64>; 2],
    pub y: [Vec<Point>; 2],
}

impl Snapshot {
    pub fn mesh(&self) -> axibilayer::Result<Mesh> {
        TwoPhaseMesh::new(self.nodes[0].clone(), self.nodes[1].clone())
    }
}

/// Writes `J1 J2 t` followed by one `j r z kappa Y1 Y2` line per node, phase 1
/// first; the phases are separated by a blank line.
pub fn write_snapshot(w: &mut impl Write, state: &SchemeState<f64>) -> io::Result<()> {
    let (j1, j2) = state.mesh.element_counts();
    writeln!(w, "{j1} {j2} {}", fmt_f64(state.t))?;
    for i in 0..2 {
        if i == 1 {
            writeln!(w)?;
        }
        let c = &state.mesh.curves[i];
        for (j, p) in c.nodes.iter().enumerate() {
            let y = state.y[i][j];
            writeln!(
                w,
                "{j} {} {} {} {} {}",
                fmt_f64(p.r),
                fmt_f64(p.z),
                fmt_f64(state.kappa.kappa[i][j]),
                fmt_f64(y.r),
                fmt_f64(y.z)
            )?;
        }
    }
    Ok(())
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

fn num<T: std::str::FromStr>(tok: Option<&str>, what: &str, line: usize) -> io::Result<T> {
    tok.and_then(|s| s.parse().ok())
        .ok_or_else(|| bad(format!("line {line}: missing or malformed {what}")))
}

pub fn read_snapshot(text: &str) -> io::Result<Snapshot> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or_else(|| bad("empty snapshot"))?;
    let mut h = header.split_whitespace();
    let j1: usize = num(h.next(), "J1", ln)?;
    let j2: usize = num(h.next(), "J2", ln)?;
    let t: f64 = num(h.next(), "t", ln)?;
    let mut snap = Snapshot {
        t,
        nodes: [Vec::new(), Vec::new()],
        kappa: [Vec::new(), Vec::new()],
        y: [Vec::new(), Vec::new()],
    };
    for (i, n) in [j1 + 1, j2 + 1].into_iter().enumerate() {
        for expect in 0..n {
            let (ln, l) = lines.next().ok_or_else(|| bad("snapshot truncated"))?;
            let mut tok = l.split_whitespace();
            let j: usize = num(tok.next(), "node index", ln)?;
            if j != expect {
                return Err(bad(format!("line {ln}: expected node {expect}, found {j}")));
            }
            let mut f = || num::<f64>(tok.next(), "value", ln);
            let (r, z, k, y1, y2) = (f()?, f()?, f()?, f()?, f()?);
            snap.nodes[i].push(Point::new(r, z));
            snap.kappa[i].push(k);
            snap.y[i].push(Point::new(y1, y2));
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(bad(format!("line {ln}: trailing data")));
    }
    Ok(snap)
}

/// Surface of revolution of the generating curve as OBJ text with `n`
/// azimuthal segments. The poles become single vertices, so the result is a
/// closed triangulated sphere.
pub fn revolve_obj(mesh: &Mesh, n: usize) -> String {
    let c1 = &mesh.curves[0].nodes;
    let c2 = &mesh.curves[1].nodes;
    let ring: Vec<(Point, usize)> = c1[1..]
        .iter()
        .map(|&p| (p, 1))
        .chain(c2[1..c2.len() - 1].iter().map(|&p| (p, 2)))
        .collect();
    let rings = ring.len();
    let mut s = String::new();
    let _ = writeln!(s, "# surface of revolution: {} rings x {n} segments", rings);
    let _ = writeln!(s, "v 0 0 {}", fmt_f64(c1[0].z));
    for (p, _) in &ring {
        for k in 0..n {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let _ = writeln!(
                s,
                "v {} {} {}",
                fmt_f64(p.r * th.cos()),
                fmt_f64(p.r * th.sin()),
                fmt_f64(p.z)
            );
        }
    }
    let _ = writeln!(s, "v 0 0 {}", fmt_f64(c2[c2.len() - 1].z));
    let bottom = 2 + rings * n;
    let v = |ring: usize, k: usize| 2 + ring * n + k % n;
    let mut group = 0;
    let mut set_group = |s: &mut String, g: usize| {
        if g != group {
            let _ = writeln!(s, "g phase{g}");
            group = g;
        }
    };
    set_group(&mut s, 1);
    for k in 0..n {
        let _ = writeln!(s, "f 1 {} {}", v(0, k + 1), v(0, k));
    }
    for r in 0..rings - 1 {
        set_group(&mut s, ring[r + 1].1);
        for k in 0..n {
            let (a, b, c, d) = (v(r, k), v(r, k + 1), v(r + 1, k + 1), v(r + 1, k));
            let _ = writeln!(s, "f {a} {b} {c}");
            let _ = writeln!(s, "f {a} {c} {d}");
        }
    }
    set_group(&mut s, 2);
    for k in 0..n {
        let _ = writeln!(s, "f {} {} {}", v(rings - 1, k), v(rings - 1, k + 1), bottom);
    }
    s
}

/// Comma-free label of how a run ended.
pub fn termination_label(t: &Termination) -> String {
    match t {
        Termination::EndTime => "end_time".into(),
        Termination::Stationary => "stationary".into(),
        Termination::Degenerated { step, .. } => format!("degenerated_at_{step}"),
        Termination::Failed { step, .. } => format!("failed_at_{step}"),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn convergence_csv(rows: &[ConvergenceRow<f64>]) -> String {
    let mut s = String::from("J1,J2,h0,dt,steps,error,error_eoc,drift,drift_eoc,rM1,rM2,termination\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.j.0,
            r.j.1,
            fmt_f64(r.h0),
            fmt_f64(r.dt),
            r.steps,
            fmt_f64(r.error),
            opt(r.error_eoc),
            fmt_f64(r.drift),
            opt(r.drift_eoc),
            fmt_f64(r.element_ratio[0]),
            fmt_f64(r.element_ratio[1]),
            termination_label(&r.termination)
        );
    }
    s
}

pub fn compare_summary_csv(c: &DriftComparison<f64>) -> String {
    let mut s = String::from(
        "variant,junction_displacement,pole_shift1,pole_shift2,energy_increases,max_relative_increase,termination\n",
    );
    for (name, r) in [("with_beta", &c.with_beta), ("sideh", &c.sideh)] {
        let _ = writeln!(
            s,
            "{name},{},{},{},{},{},{}",
            fmt_f64(r.junction_displacement),
            fmt_f64(r.pole_shift[0]),
            fmt_f64(r.pole_shift[1]),
            r.energy_increases,
            fmt_f64(r.max_relative_increase),
            termination_label(&r.termination)
        );
    }
    s
}

/// Energies of both variants per step; a variant that stopped early leaves
/// its later cells empty.
pub fn compare_energy_csv(c: &DriftComparison<f64>, dt: f64) -> String {
    let mut s = String::from("step,t,E_with_beta,E_sideh\n");
    let (a, b) = (&c.with_beta.energies, &c.sideh.energies);
    for m in 0..a.len().max(b.len()) {
        let cell = |v: &Vec<f64>| v.get(m).copied().map(fmt_f64).unwrap_or_default();
        let _ = writeln!(s, "{m},{},{},{}", fmt_f64(m as f64 * dt), cell(a), cell(b));
    }
    s
}

pub fn residuals_csv(t: f64, d: &JunctionDiagnostics<f64>) -> String {
    let mut rows: Vec<(&str, f64)> = vec![
        ("t", t),
        ("K1", d.mean_curvature[0]),
        ("K2", d.mean_curvature[1]),
        ("K_jump", d.curvature_jump),
        ("K1_s", d.mean_curvature_s[0]),
        ("K2_s", d.mean_curvature_s[1]),
        ("k_normal1", d.k_normal[0]),
        ("k_normal2", d.k_normal[1]),
        ("k_geodesic1", d.k_geodesic[0]),
        ("k_geodesic2", d.k_geodesic[1]),
    ];
    if let Some((scalars, v)) = d.c0_residuals {
        rows.extend([
            ("c0_phase1", scalars[0]),
            ("c0_phase2", scalars[1]),
            ("c0_force_r", v.r),
            ("c0_force_z", v.z),
        ]);
    }
    if let Some(r) = d.c1_residuals {
        rows.extend([("c1_bending", r[0]), ("c1_moment", r[1]), ("c1_tension", r[2])]);
    }
    let mut s = String::from("quantity,value\n");
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{}", fmt_f64(v));
    }
    s
}
