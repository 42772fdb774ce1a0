//! Error norms against the exact sphere solution, the convergence ladder,
//! Gauss–Bonnet and junction-condition diagnostics, and the comparison of
//! the two side-constraint discretisations.

use std::thread;

use crate::assembly::{ConservationMode, SchemeState, Variant};
use crate::driver::{run_observed, FlowConfig, OdeReference, Termination};
use crate::error::{Error, Result};
use crate::functionals::{junction_conormal, PhysicalParams};
use crate::mesh::{
    mean_curvature_nodes, mesh_geometry, smooth_curvature, CurvatureState, TwoPhaseMesh,
};
use crate::newton::MultiplierState;
use crate::scalar::Real;
use crate::shapes::{perturbed_sphere, quarter_pair};
use crate::vec2::Vec2;

/// Largest deviation `| |X(q_j)| - R(t) |` over all nodes of one state.
pub fn radius_error<T: Real>(mesh: &TwoPhaseMesh<T>, radius: T) -> T {
    mesh.curves
        .iter()
        .flat_map(|c| c.nodes.iter())
        .map(|p| (p.norm() - radius).abs())
        .fold(T::zero(), T::max)
}

/// Running maximum of [`radius_error`] over time levels `m ≥ 1`.
#[derive(Clone, Copy, Debug)]
pub struct RadiusErrorTracker<T> {
    pub ode: OdeReference<T>,
    pub max_error: T,
    pub worst_time: T,
}

impl<T: Real> RadiusErrorTracker<T> {
    pub fn new(ode: OdeReference<T>) -> Self {
        Self {
            ode,
            max_error: T::zero(),
            worst_time: T::zero(),
        }
    }

    pub fn observe(&mut self, state: &SchemeState<T>) -> Result<()> {
        if state.t == T::zero() {
            return Ok(());
        }
        let e = radius_error(&state.mesh, self.ode.radius(state.t)?);
        if e > self.max_error {
            self.max_error = e;
            self.worst_time = state.t;
        }
        Ok(())
    }
}

/// `L∞` radius error over a list of recorded states. States at `t = 0` are
/// skipped.
pub fn linf_radius_error<T: Real>(states: &[SchemeState<T>], ode: &OdeReference<T>) -> Result<T> {
    let mut tr = RadiusErrorTracker::new(*ode);
    for s in states {
        tr.observe(s)?;
    }
    Ok(tr.max_error)
}

/// Experimental order of convergence between two refinement levels.
pub fn eoc<T: Real>(e_coarse: T, e_fine: T, h_coarse: T, h_fine: T) -> T {
    (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln()
}

/// One row of the convergence table.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow<T> {
    pub j: (usize, usize),
    pub h0: T,
    pub dt: T,
    pub steps: usize,
    pub error: T,
    pub error_eoc: Option<T>,
    /// `|X^M(1/2) - R(t_M) e1|`.
    pub drift: T,
    pub drift_eoc: Option<T>,
    pub element_ratio: [T; 2],
    pub termination: Termination,
}

/// Options for the sphere convergence study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderOptions<T> {
    pub kbar: T,
    pub t_end: T,
    /// Time step as a multiple of `h0²`.
    pub dt_factor: T,
    pub c1: bool,
    pub variant: Variant,
}

impl<T: Real> Default for LadderOptions<T> {
    fn default() -> Self {
        Self {
            kbar: -T::one(),
            t_end: T::one(),
            dt_factor: T::lit(1e-3),
            c1: true,
            variant: Variant::WithBeta,
        }
    }
}

/// Runs one resolution of the convergence study.
pub fn convergence_row<T: Real>(j1: usize, j2: usize, opts: &LadderOptions<T>) -> Result<ConvergenceRow<T>> {
    let mesh = perturbed_sphere(j1, j2)?;
    let h0 = mesh.max_edge();
    let params = PhysicalParams {
        kbar: [opts.kbar; 2],
        c1: opts.c1,
        ..Default::default()
    };
    let mut config = FlowConfig::new(opts.dt_factor * h0 * h0, opts.t_end);
    config.variant = opts.variant;
    config.stationarity_tol = T::zero();
    let ode = OdeReference::new(opts.kbar)?;
    let mut tracker = RadiusErrorTracker::new(ode);
    let mut failure = None;
    let traj = run_observed(&config, &params, &mesh, &mut |s, _| {
        if let Err(e) = tracker.observe(s) {
            failure.get_or_insert(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let last = &traj.final_state;
    let drift = (last.mesh.junction() - Vec2::e1() * ode.radius(last.t)?).norm();
    Ok(ConvergenceRow {
        j: (j1, j2),
        h0,
        dt: config.dt,
        steps: traj.steps,
        error: tracker.max_error,
        error_eoc: None,
        drift,
        drift_eoc: None,
        element_ratio: traj.diagnostics.last().map_or([T::one(); 2], |d| d.element_ratio),
        termination: traj.termination,
    })
}

/// Runs all resolutions concurrently and fills in the EOC columns.
pub fn convergence_ladder<T: Real>(
    resolutions: &[(usize, usize)],
    opts: &LadderOptions<T>,
) -> Result<Vec<ConvergenceRow<T>>> {
    let results: Vec<Result<ConvergenceRow<T>>> = thread::scope(|s| {
        let handles: Vec<_> = resolutions
            .iter()
            .map(|&(a, b)| s.spawn(move || convergence_row(a, b, opts)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::InvalidParameter("worker panicked".into()))))
            .collect()
    });
    let mut rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    for k in 1..rows.len() {
        let (prev, cur) = (&rows[k - 1], &rows[k]);
        let e = eoc(prev.error, cur.error, prev.h0, cur.h0);
        let d = eoc(prev.drift, cur.drift, prev.h0, cur.h0);
        rows[k].error_eoc = Some(e);
        rows[k].drift_eoc = Some(d);
    }
    Ok(rows)
}

/// Defect of the discrete Gauss–Bonnet identity: the lumped integral of the
/// Gaussian curvature `κ (𝔎 - κ)` over both phases plus the geodesic
/// curvature of the junction circle, minus `4π`.
///
/// The conormals are those of a state at rest (`X^{m+1} = X^m`, `β = 0`).
pub fn gauss_bonnet_defect<T: Real>(mesh: &TwoPhaseMesh<T>, kappa: &CurvatureState<T>) -> Result<T> {
    let geom = mesh_geometry(mesh)?;
    let tp = T::two_pi();
    let mut total = T::zero();
    for i in 0..2 {
        let c = &mesh.curves[i];
        let big_k = mean_curvature_nodes(c, &geom[i].vertices, &kappa.kappa[i])?;
        for (j, p) in c.nodes.iter().enumerate() {
            let k = kappa.kappa[i][j];
            total += tp * k * (big_k[j] - k) * p.r * geom[i].vertices[j].weight;
        }
    }
    let m = junction_conormal(mesh, &geom, &kappa.kappa, T::zero(), mesh);
    total += tp * (m.m[0].r + m.m[1].r);
    Ok(total - T::lit(2.0) * tp)
}

/// [`gauss_bonnet_defect`] with curvatures taken from the geometry alone.
pub fn gauss_bonnet_check<T: Real>(mesh: &TwoPhaseMesh<T>) -> Result<T> {
    gauss_bonnet_defect(mesh, &smooth_curvature(mesh)?)
}

/// Discrete quantities at the junction and the residuals of the junction
/// conditions. Jumps are `[f] = f_2 - f_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct JunctionDiagnostics<T> {
    /// `𝔎_i` at the junction, evaluated from each side.
    pub mean_curvature: [T; 2],
    /// `𝔎_1 - 𝔎_2`.
    pub curvature_jump: T,
    /// One-sided arclength derivatives `(𝔎_i)_s`.
    pub mean_curvature_s: [T; 2],
    /// Normal curvature of the junction circle, `-ν_i·e1 / r`.
    pub k_normal: [T; 2],
    /// Geodesic curvature of the junction circle, `-μ_i·e1 / r`.
    pub k_geodesic: [T; 2],
    /// Residuals of the C⁰ conditions: two scalar ones and one vector one.
    pub c0_residuals: Option<([T; 2], Vec2<T>)>,
    /// Residuals of the three scalar C¹ conditions.
    pub c1_residuals: Option<[T; 3]>,
}

/// Evaluates [`JunctionDiagnostics`] for a state. Derivatives are two-node
/// differences in arclength.
pub fn junction_residuals<T: Real>(
    state: &SchemeState<T>,
    params: &PhysicalParams<T>,
    multipliers: &MultiplierState<T>,
) -> Result<JunctionDiagnostics<T>> {
    let mesh = &state.mesh;
    let geom = mesh_geometry(mesh)?;
    let (j1, _) = mesh.element_counts();
    let x = mesh.junction();
    if !(x.r > T::zero()) {
        return Err(Error::DegenerateMesh("junction on the axis".into()));
    }
    let big_k = [
        mean_curvature_nodes(&mesh.curves[0], &geom[0].vertices, &state.kappa.kappa[0])?,
        mean_curvature_nodes(&mesh.curves[1], &geom[1].vertices, &state.kappa.kappa[1])?,
    ];
    let e1 = geom[0].elements[j1 - 1];
    let e2 = geom[1].elements[0];
    let kj = [big_k[0][j1], big_k[1][0]];
    let ks = [
        (big_k[0][j1] - big_k[0][j1 - 1]) / e1.length,
        (big_k[1][1] - big_k[1][0]) / e2.length,
    ];
    let kap = [state.kappa.kappa[0][j1], state.kappa.kappa[1][0]];
    let nu = [e1.nu, e2.nu];
    let mu = [e1.tau, -e2.tau];
    let k_normal = [-nu[0].r / x.r, -nu[1].r / x.r];
    let k_geodesic = [-mu[0].r / x.r, -mu[1].r / x.r];
    let a = params.alpha;
    let ag = params.alpha_g;
    let kb = params.kbar;
    let la = multipliers.lambda_a;
    let half = T::lit(0.5);

    let (c0, c1) = if params.c1 {
        let n = (nu[0] + nu[1]).normalized();
        let m = (mu[1] - mu[0]).normalized();
        let r1 = a[1] * (kj[1] - kb[1]) - a[0] * (kj[0] - kb[0]) - (ag[1] - ag[0]) * n.r / x.r;
        let r2 = -(a[1] * ks[1] - a[0] * ks[0]) - params.varsigma * n.r / x.r;
        let g = |i: usize| {
            -half * a[i] * (kj[i] - kb[i]) * (kj[i] - kb[i]) + a[i] * (kj[i] - kb[i]) * kap[i] - la[i]
        };
        let r3 = g(1) - g(0) - params.varsigma * m.r / x.r;
        (None, Some([r1, r2, r3]))
    } else {
        let r = |i: usize| a[i] * (kj[i] - kb[i]) - ag[i] * nu[i].r / x.r;
        let mut v = Vec2::e1() * (-params.varsigma / x.r);
        for i in 0..2 {
            let sign = if i == 0 { T::one() } else { -T::one() };
            let gauss = kap[i] * (kj[i] - kap[i]);
            let w = half * a[i] * (kj[i] - kb[i]) * (kj[i] - kb[i]) + ag[i] * gauss + la[i];
            v += nu[i] * (sign * a[i] * ks[i]) - mu[i] * w;
        }
        (Some(([r(0), r(1)], v)), None)
    };

    Ok(JunctionDiagnostics {
        mean_curvature: kj,
        curvature_jump: kj[0] - kj[1],
        mean_curvature_s: ks,
        k_normal,
        k_geodesic,
        c0_residuals: c0,
        c1_residuals: c1,
    })
}

/// Outcome of one side of the drift comparison.
#[derive(Clone, Debug)]
pub struct DriftReport<T> {
    pub variant: Variant,
    /// `|X^M(1/2) - X^0(1/2)|`.
    pub junction_displacement: T,
    /// Vertical displacement of the two poles.
    pub pole_shift: [T; 2],
    pub energies: Vec<T>,
    /// Number of steps `m ≥ 1` with `Ê^{m+1} > Ê^m + tol |Ê^m|`.
    pub energy_increases: usize,
    /// Largest relative energy increase over steps `m ≥ 1`.
    pub max_relative_increase: T,
    pub final_state: SchemeState<T>,
    pub termination: Termination,
}

/// Counts energy increases beyond `tol` relative and returns the largest
/// relative increase. The first entry (initial data) is not compared.
pub fn energy_increases<T: Real>(energies: &[T], tol: T) -> (usize, T) {
    let mut count = 0;
    let mut worst = T::neg_infinity();
    for w in energies.windows(2).skip(1) {
        let rel = (w[1] - w[0]) / w[0].abs().max(T::min_positive_value());
        worst = worst.max(rel);
        if rel > tol {
            count += 1;
        }
    }
    (count, worst)
}

/// Runs one variant from the given mesh and reports junction motion and
/// energy monotonicity.
pub fn drift_run<T: Real>(
    mesh: &TwoPhaseMesh<T>,
    params: &PhysicalParams<T>,
    dt: T,
    t_end: T,
    mode: ConservationMode,
    variant: Variant,
) -> Result<DriftReport<T>> {
    let mut config = FlowConfig::new(dt, t_end);
    config.mode = mode;
    config.variant = variant;
    config.stationarity_tol = T::zero();
    let mut energies = Vec::new();
    let traj = run_observed(&config, params, mesh, &mut |_, d| energies.push(d.energy))?;
    let (energy_increases, max_relative_increase) = energy_increases(&energies, T::lit(1e-10));
    let fin = &traj.final_state.mesh;
    let pole = |m: &TwoPhaseMesh<T>, i: usize| m.curves[i].nodes[m.curves[i].pole_index()].z;
    Ok(DriftReport {
        variant,
        junction_displacement: (fin.junction() - mesh.junction()).norm(),
        pole_shift: [pole(fin, 0) - pole(mesh, 0), pole(fin, 1) - pole(mesh, 1)],
        energies,
        energy_increases,
        max_relative_increase,
        final_state: traj.final_state,
        termination: traj.termination,
    })
}

/// Both variants of a comparison run.
#[derive(Clone, Debug)]
pub struct DriftComparison<T> {
    pub with_beta: DriftReport<T>,
    pub sideh: DriftReport<T>,
}

impl<T: Real> DriftComparison<T> {
    /// Junction displacement of the scheme with β over that of the variant
    /// without it.
    pub fn displacement_ratio(&self) -> T {
        self.with_beta.junction_displacement / self.sideh.junction_displacement
    }
}

/// Runs both variants concurrently from the same mesh.
pub fn compare_variants<T: Real>(
    mesh: &TwoPhaseMesh<T>,
    params: &PhysicalParams<T>,
    dt: T,
    t_end: T,
    mode: ConservationMode,
) -> Result<DriftComparison<T>> {
    if !params.c1 {
        return Err(Error::InvalidParameter("the variant comparison needs a C1 junction".into()));
    }
    let (a, b) = thread::scope(|s| {
        let h = s.spawn(|| drift_run(mesh, params, dt, t_end, mode, Variant::Sideh));
        let a = drift_run(mesh, params, dt, t_end, mode, Variant::WithBeta);
        let b = h
            .join()
            .unwrap_or_else(|_| Err(Error::InvalidParameter("worker panicked".into())));
        (a, b)
    });
    Ok(DriftComparison {
        with_beta: a?,
        sideh: b?,
    })
}

/// The steady quarter-circle pair with default physical parameters.
pub fn compare_junction_drift<T: Real>(
    j1: usize,
    j2: usize,
    dt: T,
    t_end: T,
) -> Result<DriftComparison<T>> {
    let mesh = quarter_pair(j1, j2, T::one())?;
    compare_variants(&mesh, &PhysicalParams::default(), dt, t_end, ConservationMode::Free)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::split_sphere;
    use approx::assert_abs_diff_eq;

    #[test]
    fn radius_error_of_exact_circle() {
        let m: TwoPhaseMesh<f64> = split_sphere(12, 9, 1.5, 0.4).unwrap();
        assert!(radius_error(&m, 1.5) < 1e-14);
        let mut moved = m.clone();
        moved.curves[0].nodes[4] = moved.curves[0].nodes[4] * (1.0 + 1e-3 / 1.5);
        assert_abs_diff_eq!(radius_error(&moved, 1.5), 1e-3, epsilon = 1e-12);
    }

    #[test]
    fn eoc_of_power_law() {
        let e = |h: f64| 3.0 * h.powf(1.7);
        assert_abs_diff_eq!(eoc(e(0.2), e(0.1), 0.2, 0.1), 1.7, epsilon = 1e-12);
    }

    #[test]
    fn gauss_bonnet_sphere() {
        let mut d = Vec::new();
        for j in [32, 64, 128] {
            let m: TwoPhaseMesh<f64> = split_sphere(j, j, 1.0, 0.5).unwrap();
            d.push(gauss_bonnet_check(&m).unwrap().abs());
        }
        let four_pi = 4.0 * std::f64::consts::PI;
        assert!(d[2] < 0.02 * four_pi, "{d:?}");
        assert!(d[0] / d[1] > 3.0 && d[1] / d[2] > 3.0, "{d:?}");
    }

    #[test]
    fn gauss_bonnet_scale_free() {
        let m: TwoPhaseMesh<f64> = split_sphere(40, 24, 1.0, 0.3).unwrap();
        let a = gauss_bonnet_check(&m).unwrap();
        let b = gauss_bonnet_check(&m.scaled(2.0)).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-10 * a.abs().max(1e-3));
    }

    #[test]
    fn energy_increase_counting() {
        let e = [5.0, 6.0, 4.0, 3.0, 3.0 + 1e-6, 2.0];
        let (n, worst) = energy_increases(&e, 1e-10);
        assert_eq!(n, 1);
        assert_abs_diff_eq!(worst, 1e-6 / 3.0, epsilon = 1e-15);
    }
}
