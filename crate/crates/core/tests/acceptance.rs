//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported, not hidden. The process exits non-zero on a
//! failure only when `ACCEPTANCE_STRICT` is set, so that the report can run as
//! part of the regular test suite.

use std::f64::consts::PI;
use std::thread;
use std::time::Instant;

use axibilayer::assembly::{assemble, ConservationMode, SchemeState, Variant};
use axibilayer::driver::{make_initial_data, run, FlowConfig, OdeReference, Termination};
use axibilayer::linalg::linear_solve;
use axibilayer::mesh::TwoPhaseMesh;
use axibilayer::newton::MultiplierState;
use axibilayer::shapes::{capped_cylinder, perturbed_sphere, split_sphere, spheroid};
use axibilayer::verification::{
    compare_junction_drift, convergence_ladder, drift_run, energy_increases, gauss_bonnet_check,
    compare_variants, junction_residuals, ConvergenceRow, DriftComparison, LadderOptions,
};
use axibilayer::{validate_assumptions, Assumption, Error, Mesh, Params, Vec2};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

// Reference rows (J1, J2): L∞ radius error and junction drift.
const REF_ROWS: [(usize, usize); 3] = [(16, 8), (32, 16), (64, 32)];
const REF_ERROR: [f64; 3] = [4.4399e-2, 1.3277e-2, 3.8599e-3];
const REF_DRIFT: [f64; 3] = [3.9101e-2, 1.8489e-2, 9.1529e-3];
const REF_ERROR_EOC: [f64; 2] = [1.75, 1.79];
const REF_DRIFT_EOC: [f64; 2] = [1.09, 1.02];
const REF_REL_TOL: f64 = 0.05;
const REF_EOC_TOL: f64 = 0.2;

const EQUIDISTRIBUTION_TOL: f64 = 1e-6;
const CONSERVATION_TOL: f64 = 1e-8;
const CONSERVATION_STEPS: usize = 1000;
const ENERGY_TOL: f64 = 1e-10;
const SIDEH_INCREASE: f64 = 1e-6;
const STEADY_SPEED_REDUCTION: f64 = 3.0;
const ODE_RK4_STEP: f64 = 1e-6;
const ODE_TOL: f64 = 1e-9;
const JUMP_TARGET: f64 = 3.5;
const JUMP_REL_TOL: f64 = 0.05;
const JUMP_COMPARE_T: f64 = 0.1;
const JUMP_STATIONARY_T: f64 = 0.5;
const DRIFT_RATIO_MAX: f64 = 0.2;
const GAUSS_BONNET_TOL: f64 = 0.02;
const GAUSS_BONNET_RATE: f64 = 3.0;
const RANDOM_MESHES: usize = 50;
const SOLVE_TOL: f64 = 1e-10;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        name,
        pass,
        detail: detail.into(),
    }
}

fn failed(name: &'static str, e: &Error) -> Outcome {
    outcome(name, false, format!("error: {e}"))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn reference_rows(rows: &[ConvergenceRow<f64>]) -> Outcome {
    let name = "sphere convergence matches the reference errors";
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, r) in rows.iter().enumerate() {
        let e = rel(r.error, REF_ERROR[k]);
        let d = rel(r.drift, REF_DRIFT[k]);
        ok &= e <= REF_REL_TOL && d <= REF_REL_TOL && r.termination == Termination::EndTime;
        parts.push(format!(
            "({},{}) err {:.4e} ({:+.1}%) drift {:.4e} ({:+.1}%)",
            r.j.0,
            r.j.1,
            r.error,
            100.0 * (r.error / REF_ERROR[k] - 1.0),
            r.drift,
            100.0 * (r.drift / REF_DRIFT[k] - 1.0)
        ));
        if k > 0 {
            let ee = r.error_eoc.unwrap_or(f64::NAN);
            let de = r.drift_eoc.unwrap_or(f64::NAN);
            ok &= (ee - REF_ERROR_EOC[k - 1]).abs() <= REF_EOC_TOL;
            ok &= (de - REF_DRIFT_EOC[k - 1]).abs() <= REF_EOC_TOL;
            parts.push(format!("eoc {ee:.2}/{de:.2}"));
        }
    }
    outcome(name, ok, parts.join("; "))
}

fn equidistribution(rows: &[ConvergenceRow<f64>]) -> Outcome {
    let worst = rows
        .iter()
        .flat_map(|r| r.element_ratio)
        .map(|x| (x - 1.0).abs())
        .fold(0.0, f64::max);
    outcome(
        "final element ratios equal 1",
        worst <= EQUIDISTRIBUTION_TOL,
        format!("max |r^M - 1| = {worst:.3e} (tol {EQUIDISTRIBUTION_TOL:e})"),
    )
}

fn conservation() -> Outcome {
    let name = "area and volume conserved in area_volume mode";
    let params = Params {
        kbar: [-1.0, -1.0],
        ..Default::default()
    };
    let cases: Vec<(&str, axibilayer::Result<Mesh>)> = vec![
        ("spheroid", spheroid(32, 32, 0.9, 0.5)),
        ("cylinder", capped_cylinder(24, 24, 1.0, 2.0)),
        ("flat spheroid", spheroid(40, 20, 0.75, 0.3)),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, mesh) in cases {
        let mesh = match mesh {
            Ok(m) => m,
            Err(e) => return failed(name, &e),
        };
        let mut config = FlowConfig::new(1e-3, 1.0);
        config.mode = ConservationMode::AreaVolume;
        config.stationarity_tol = 0.0;
        config.max_steps = Some(CONSERVATION_STEPS);
        let traj = match run(&config, &params, &mesh) {
            Ok(t) => t,
            Err(e) => return failed(name, &e),
        };
        let tg = traj.targets;
        let worst = traj
            .diagnostics
            .iter()
            .map(|d| {
                rel(d.area[0], tg.area[0])
                    .max(rel(d.area[1], tg.area[1]))
                    .max(rel(d.volume, tg.volume))
            })
            .fold(0.0, f64::max);
        let complete = traj.steps == CONSERVATION_STEPS;
        ok &= complete && worst <= CONSERVATION_TOL;
        parts.push(format!("{label}: {} steps, max drift {worst:.2e}", traj.steps));
    }
    outcome(name, ok, parts.join("; "))
}

fn energy_decay(comparison: Option<&DriftComparison<f64>>) -> Outcome {
    let name = "energy decreases for the scheme with beta";
    let mesh = match perturbed_sphere::<f64>(16, 8) {
        Ok(m) => m,
        Err(e) => return failed(name, &e),
    };
    let h0 = mesh.max_edge();
    let params = Params {
        kbar: [-1.0, -1.0],
        ..Default::default()
    };
    let free = match drift_run(&mesh, &params, 1e-3 * h0 * h0, 1.0, ConservationMode::Free, Variant::WithBeta) {
        Ok(r) => r,
        Err(e) => return failed(name, &e),
    };
    let (n_free, w_free) = energy_increases(&free.energies, ENERGY_TOL);
    let Some(c) = comparison else {
        return outcome(name, false, "conserving comparison unavailable");
    };
    let (n_cons, w_cons) = energy_increases(&c.with_beta.energies, ENERGY_TOL);
    let sideh = c.sideh.max_relative_increase;
    let ok = n_free == 0 && n_cons == 0 && sideh > SIDEH_INCREASE;
    outcome(
        name,
        ok,
        format!(
            "free perturbed sphere: {n_free} increases (worst {w_free:.2e}); area-conserving J = 65 run to t = {JUMP_COMPARE_T}: {n_cons} increases (worst {w_cons:.2e}); sideh worst increase {sideh:.2e} (needs > {SIDEH_INCREASE:e})"
        ),
    )
}

fn steady_sphere() -> Outcome {
    let name = "steady sphere speed decays like h^2";
    let params = Params {
        kbar: [-1.0, -1.0],
        ..Default::default()
    };
    let mut speeds = Vec::new();
    for j in [16, 32, 64] {
        let mesh: Mesh = match split_sphere(j, j, 2.0, 0.5) {
            Ok(m) => m,
            Err(e) => return failed(name, &e),
        };
        let mut config = FlowConfig::new(1e-3, 0.1);
        config.stationarity_tol = 0.0;
        match run(&config, &params, &mesh) {
            Ok(t) => speeds.push(t.diagnostics.last().map_or(f64::NAN, |d| d.max_speed)),
            Err(e) => return failed(name, &e),
        }
    }
    let ratios: Vec<f64> = speeds.windows(2).map(|w| w[0] / w[1]).collect();
    let ok = ratios.iter().all(|&r| r >= STEADY_SPEED_REDUCTION);
    outcome(
        name,
        ok,
        format!(
            "speeds at t = 0.1: {:.3e} / {:.3e} / {:.3e} for J = 16/32/64, reductions {:.2} and {:.2} (need >= {STEADY_SPEED_REDUCTION})",
            speeds[0], speeds[1], speeds[2], ratios[0], ratios[1]
        ),
    )
}

fn ode_oracle() -> Outcome {
    let name = "implicit sphere radius agrees with RK4";
    let kbar = -1.0;
    let ode = match OdeReference::new(kbar) {
        Ok(o) => o,
        Err(e) => return failed(name, &e),
    };
    let f = |r: f64| -(kbar / r) * (2.0 / r + kbar);
    let h = ODE_RK4_STEP;
    let n = (1.0 / h).round() as usize;
    let mut r = 1.0;
    let mut worst: f64 = 0.0;
    for m in 1..=n {
        let k1 = f(r);
        let k2 = f(r + 0.5 * h * k1);
        let k3 = f(r + 0.5 * h * k2);
        let k4 = f(r + h * k3);
        r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if m % 1000 == 0 {
            match ode.radius(m as f64 * h) {
                Ok(x) => worst = worst.max((x - r).abs()),
                Err(e) => return failed(name, &e),
            }
        }
    }
    outcome(name, worst <= ODE_TOL, format!("max difference {worst:.2e} on [0, 1]"))
}

fn jump_params() -> Params {
    Params {
        kbar: [-0.5, -4.0],
        ..Default::default()
    }
}

fn curvature_jump(state: Option<&SchemeState<f64>>, multipliers: &MultiplierState<f64>) -> Outcome {
    let name = "junction curvature jump";
    let Some(state) = state else {
        return outcome(name, false, "run unavailable");
    };
    match junction_residuals(state, &jump_params(), multipliers) {
        Ok(d) => outcome(
            name,
            rel(d.curvature_jump, JUMP_TARGET) <= JUMP_REL_TOL,
            format!("K1 - K2 = {:.4} at t = {:.2} (target {JUMP_TARGET})", d.curvature_jump, state.t),
        ),
        Err(e) => failed(name, &e),
    }
}

fn gauss_bonnet() -> Outcome {
    let name = "discrete Gauss-Bonnet identity";
    let mut defects: Vec<f64> = Vec::new();
    for j in [64, 128] {
        let mesh: Mesh = match split_sphere(j, j, 1.0, 0.5) {
            Ok(m) => m,
            Err(e) => return failed(name, &e),
        };
        match gauss_bonnet_check(&mesh) {
            Ok(d) => defects.push(d.abs()),
            Err(e) => return failed(name, &e),
        }
    }
    let relative = defects[1] / (4.0 * PI);
    let rate = defects[0] / defects[1];
    outcome(
        name,
        relative <= GAUSS_BONNET_TOL && rate >= GAUSS_BONNET_RATE,
        format!("J = 128 defect {relative:.2e} of 4pi; halving h reduces it {rate:.2}x"),
    )
}

fn random_mesh(rng: &mut StdRng) -> Mesh {
    let j1 = rng.gen_range(4..40);
    let j2 = rng.gen_range(4..40);
    let ratio = rng.gen_range(0.15..0.85);
    let aspect = rng.gen_range(0.6..1.6);
    let base = split_sphere::<f64>(j1, j2, 1.0, ratio).expect("valid sphere");
    let mut m = base.map_nodes(|p| Vec2::new(p.r, aspect * p.z));
    for c in m.curves.iter_mut() {
        let n = c.nodes.len();
        for j in 0..n {
            if c.is_pole(j) || c.is_junction(j) {
                continue;
            }
            let s = 1.0 + rng.gen_range(-0.05..0.05);
            c.nodes[j] = c.nodes[j] * s;
        }
    }
    m
}

fn violators() -> Vec<(Assumption, Mesh, bool)> {
    let sphere = split_sphere::<f64>(8, 8, 1.0, 0.5).expect("valid sphere");
    let mut positivity = sphere.clone();
    positivity.curves[0].nodes[3].r = -0.1;
    let mut distinct = sphere.clone();
    distinct.curves[1].nodes[3] = distinct.curves[1].nodes[2];
    let mut folded = sphere.clone();
    folded.curves[1].nodes[4] = folded.curves[1].nodes[2];
    let mut cusp = sphere.clone();
    cusp.curves[1].nodes[1] = cusp.curves[0].nodes[7];
    let a: Vec<Vec2<f64>> = (0..=4).map(|k| Vec2::new(k as f64 / 4.0, 1.0 - k as f64 / 4.0)).collect();
    let b: Vec<Vec2<f64>> = (0..=4).map(|k| Vec2::new(1.0 - k as f64 / 4.0, -(k as f64) / 4.0)).collect();
    let cone = TwoPhaseMesh::new(a, b).expect("valid cone");
    vec![
        (Assumption::InteriorPositivity, positivity, false),
        (Assumption::NodeDistinctness, distinct, false),
        (Assumption::NextNearestDistinctness, folded, false),
        (Assumption::JunctionNeighbours, cusp, true),
        (Assumption::NormalSpan, cone, true),
    ]
}

fn well_posedness() -> Outcome {
    let name = "well-posedness gate";
    let mut rng = StdRng::seed_from_u64(20240601);
    let mut worst: f64 = 0.0;
    let mut solved = 0;
    let mut problems = Vec::new();
    while solved < RANDOM_MESHES {
        let mesh = random_mesh(&mut rng);
        let c1 = rng.gen_bool(0.5);
        if !validate_assumptions(&mesh, c1).all_passed() {
            continue;
        }
        let params = Params {
            alpha: [rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)],
            alpha_g: [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)],
            kbar: [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
            varsigma: rng.gen_range(0.0..1.0),
            c1,
        };
        let res = make_initial_data(&mesh, &params)
            .and_then(|s| assemble(&s, &params, 1e-3, ConservationMode::AreaVolume))
            .and_then(|sys| {
                let cols = sys.area_columns.clone().expect("area columns");
                let vol = sys.volume_column.clone().expect("volume column");
                linear_solve(&sys.matrix, &[sys.rhs.clone(), cols[0].clone(), cols[1].clone(), vol])
            });
        match res {
            Ok(sol) => worst = sol.residuals.iter().fold(worst, |m, &r| m.max(r)),
            Err(e) => problems.push(format!("random mesh {solved}: {e}")),
        }
        solved += 1;
    }
    for (expected, mesh, c1) in violators() {
        let p = Params { c1, ..Params::default() };
        let (j1, j2) = mesh.element_counts();
        let valid = split_sphere(j1, j2, 1.0, 0.5).and_then(|m| make_initial_data(&m, &p));
        let state = SchemeState {
            mesh,
            ..valid.expect("initial data")
        };
        match assemble(&state, &p, 1e-3, ConservationMode::Free) {
            Err(Error::AssumptionViolated { assumption, .. }) if assumption == expected => {}
            Err(e) => problems.push(format!("{expected}: rejected as {e}")),
            Ok(_) => problems.push(format!("{expected}: not rejected")),
        }
    }
    let ok = problems.is_empty() && worst <= SOLVE_TOL;
    let mut detail = format!("{RANDOM_MESHES} random meshes, max residual {worst:.2e}; 5 violators checked");
    if !problems.is_empty() {
        detail.push_str(&format!("; problems: {}", problems.join(", ")));
    }
    outcome(name, ok, detail)
}

fn main() {
    let start = Instant::now();
    let (ladder, drift, jump, jump_cmp) = thread::scope(|s| {
        let ladder = s.spawn(|| convergence_ladder(&REF_ROWS, &LadderOptions::default()));
        let drift = s.spawn(|| compare_junction_drift::<f64>(65, 9, 1e-4, 1.0));
        let jump = s.spawn(|| {
            let mesh = split_sphere(65, 65, 1.0, 0.5)?;
            drift_run(&mesh, &jump_params(), 1e-4, JUMP_STATIONARY_T, ConservationMode::Area, Variant::WithBeta)
        });
        let jump_cmp = s.spawn(|| {
            let mesh = split_sphere(65, 65, 1.0, 0.5)?;
            compare_variants(&mesh, &jump_params(), 1e-4, JUMP_COMPARE_T, ConservationMode::Area)
        });
        (ladder.join(), drift.join(), jump.join(), jump_cmp.join())
    });
    let ladder = ladder.expect("ladder thread");
    let drift = drift.expect("drift thread");
    let jump = jump.expect("jump thread");
    let jump_cmp = jump_cmp.expect("comparison thread");

    let mut results = Vec::new();
    match &ladder {
        Ok(rows) => {
            results.push(reference_rows(rows));
            results.push(equidistribution(rows));
        }
        Err(e) => {
            results.push(failed("sphere convergence matches the reference errors", e));
            results.push(failed("final element ratios equal 1", e));
        }
    }
    results.push(conservation());
    results.push(energy_decay(jump_cmp.as_ref().ok()));
    results.push(steady_sphere());
    results.push(ode_oracle());
    let mult = MultiplierState::zeros(ConservationMode::Area);
    results.push(curvature_jump(jump.as_ref().ok().map(|r| &r.final_state), &mult));
    results.push(match &drift {
        Ok(c) => {
            let ratio = c.displacement_ratio();
            outcome(
                "junction drift with beta below a fifth of sideh",
                ratio < DRIFT_RATIO_MAX,
                format!(
                    "(65,9): displacement {:.3e} vs {:.3e}, ratio {ratio:.3} (need < {DRIFT_RATIO_MAX})",
                    c.with_beta.junction_displacement, c.sideh.junction_displacement
                ),
            )
        }
        Err(e) => failed("junction drift with beta below a fifth of sideh", e),
    });
    results.push(gauss_bonnet());
    results.push(well_posedness());

    let mut failures = 0;
    for r in &results {
        if !r.pass {
            failures += 1;
        }
        println!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    println!(
        "{} of {} criteria pass ({:.0} s)",
        results.len() - failures,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failures > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
