//! Initial data, the time loop and the exact radius of the shrinking or
//! growing sphere.

use log::{debug, info, warn};

use crate::assembly::{ConservationMode, SchemeState, Variant};
use crate::error::{Error, Result};
use crate::functionals::{
    discrete_energy, element_ratio, enclosed_volume, junction_conormal, reduced_volume,
    surface_area, Diagnostics, JunctionConormal, PhysicalParams,
};
use crate::mesh::{curvature_vectors, mean_curvature_nodes, mesh_geometry, CurvatureState, TwoPhaseMesh};
use crate::newton::{
    max_displacement, newton_conserve, ConservationTargets, MultiplierState, NewtonOptions,
};
use crate::scalar::{from_usize, Real};
use crate::vec2::Vec2;

/// Builds `κ^0`, `Y^0` and `β^0 = 0` from the initial curves.
pub fn make_initial_data<T: Real>(
    mesh: &TwoPhaseMesh<T>,
    params: &PhysicalParams<T>,
) -> Result<SchemeState<T>> {
    params.validate()?;
    let geom = mesh_geometry(mesh)?;
    let mut kappa = CurvatureState::zeros(mesh);
    for i in 0..2 {
        let kv = curvature_vectors(&geom[i]);
        for (j, k) in kv.iter().enumerate() {
            kappa.kappa[i][j] = k.dot(geom[i].vertices[j].v);
        }
    }
    kappa.pin_poles(mesh);

    let tp = T::two_pi();
    let mut y: [Vec<Vec2<T>>; 2] = [Vec::new(), Vec::new()];
    for i in 0..2 {
        let c = &mesh.curves[i];
        let k = mean_curvature_nodes(c, &geom[i].vertices, &kappa.kappa[i])?;
        y[i] = (0..c.nodes.len())
            .map(|j| {
                let vf = &geom[i].vertices[j];
                let mut v = vf.v
                    * (tp * params.alpha[i] * c.nodes[j].r * (k[j] - params.kbar[i])
                        / vf.omega.norm());
                if c.is_pole(j) {
                    v.r = T::zero();
                }
                if c.is_junction(j) {
                    v = Vec2::e1() * (tp * params.alpha_g[i]);
                }
                v
            })
            .collect();
    }
    Ok(SchemeState {
        mesh: mesh.clone(),
        kappa,
        y,
        beta: T::zero(),
        t: T::zero(),
    })
}

/// Time-stepping parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowConfig<T> {
    pub dt: T,
    pub t_end: T,
    pub mode: ConservationMode,
    pub variant: Variant,
    /// Stop once the largest nodal speed drops below this multiple of the
    /// initial diameter. Non-positive disables the check.
    pub stationarity_tol: T,
    pub max_steps: Option<usize>,
    /// Keep every `n`-th state in the trajectory (0 keeps none).
    pub snapshot_every: usize,
    /// Pinch-off threshold as a fraction of the initial diameter.
    pub pinch_fraction: T,
    pub newton: NewtonOptions<T>,
}

impl<T: Real> FlowConfig<T> {
    pub fn new(dt: T, t_end: T) -> Self {
        Self {
            dt,
            t_end,
            mode: ConservationMode::Free,
            variant: Variant::WithBeta,
            stationarity_tol: T::lit(1e-6),
            max_steps: None,
            snapshot_every: 0,
            pinch_fraction: T::lit(1e-4),
            newton: NewtonOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > T::zero()) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        Ok(())
    }

    /// Number of uniform steps needed to reach `t_end`.
    pub fn step_count(&self) -> usize {
        let m = (self.t_end / self.dt - T::lit(1e-9)).ceil();
        let m = m.to_usize().unwrap_or(usize::MAX).max(1);
        self.max_steps.map_or(m, |cap| m.min(cap))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    EndTime,
    Stationary,
    Degenerated { step: usize, reason: String },
    Failed { step: usize, error: Error },
}

impl Termination {
    pub fn is_success(&self) -> bool {
        matches!(self, Termination::EndTime | Termination::Stationary)
    }
}

/// Everything produced by a run.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    /// One row per time level, starting with `t = 0`.
    pub diagnostics: Vec<Diagnostics<T>>,
    pub snapshots: Vec<SchemeState<T>>,
    pub final_state: SchemeState<T>,
    pub final_conormal: JunctionConormal<T>,
    pub targets: ConservationTargets<T>,
    pub steps: usize,
    pub termination: Termination,
}

fn diagnostics_row<T: Real>(
    t: T,
    energy: T,
    mesh: &TwoPhaseMesh<T>,
    mult: &MultiplierState<T>,
    beta: T,
    newton_iters: usize,
    max_speed: T,
) -> Diagnostics<T> {
    let area = [surface_area(&mesh.curves[0]), surface_area(&mesh.curves[1])];
    let volume = enclosed_volume(mesh);
    Diagnostics {
        t,
        energy,
        area,
        volume,
        reduced_volume: reduced_volume(area[0] + area[1], volume),
        element_ratio: [element_ratio(&mesh.curves[0]), element_ratio(&mesh.curves[1])],
        lambda_a: mult.lambda_a,
        lambda_v: mult.lambda_v,
        beta,
        newton_iters,
        junction: mesh.junction(),
        max_speed,
    }
}

/// Energy and conormals of a state without a preceding step
/// (`X^{m+1} = X^m`, `β = 0`).
pub fn static_energy<T: Real>(
    state: &SchemeState<T>,
    params: &PhysicalParams<T>,
) -> Result<(T, JunctionConormal<T>)> {
    let geom = mesh_geometry(&state.mesh)?;
    let cn = junction_conormal(&state.mesh, &geom, &state.kappa.kappa, T::zero(), &state.mesh);
    let e = discrete_energy(&state.mesh, &geom, &state.kappa.kappa, &cn, &state.mesh, params)?;
    Ok((e, cn))
}

fn pinch_check<T: Real>(mesh: &TwoPhaseMesh<T>, r_min: T) -> Option<String> {
    for (i, c) in mesh.curves.iter().enumerate() {
        for (j, p) in c.nodes.iter().enumerate() {
            if !p.is_finite() {
                return Some(format!("non-finite node at phase {} node {}", i + 1, j));
            }
            if !c.is_pole(j) && p.r < r_min {
                return Some(format!(
                    "pinch-off: phase {} node {} at r = {}",
                    i + 1,
                    j,
                    p.r
                ));
            }
        }
    }
    None
}

/// `true` if every node lies on the sphere through both poles.
fn nodes_on_one_sphere<T: Real>(mesh: &TwoPhaseMesh<T>) -> bool {
    let top = mesh.curves[0].nodes[0];
    let bottom = mesh.curves[1].nodes[mesh.curves[1].pole_index()];
    let centre = (top + bottom) * T::lit(0.5);
    let radius = (top - centre).norm();
    let tol = T::lit(1e-9) * radius.max(T::min_positive_value());
    mesh.curves
        .iter()
        .flat_map(|c| c.nodes.iter())
        .all(|&p| ((p - centre).norm() - radius).abs() <= tol)
}

/// Runs the flow from `mesh`, calling `observer` with every new state.
pub fn run_observed<T: Real>(
    config: &FlowConfig<T>,
    params: &PhysicalParams<T>,
    mesh: &TwoPhaseMesh<T>,
    observer: &mut dyn FnMut(&SchemeState<T>, &Diagnostics<T>),
) -> Result<Trajectory<T>> {
    config.validate()?;
    let mut state = make_initial_data(mesh, params)?;
    let targets = ConservationTargets::from_mesh(mesh);
    if config.mode == ConservationMode::AreaVolume && nodes_on_one_sphere(mesh) {
        warn!("all nodes lie on one sphere: the area and volume constraints are dependent and a step may not satisfy both");
    }
    let diam = mesh.diameter();
    let r_min = config.pinch_fraction * diam;
    let speed_tol = config.stationarity_tol * diam;
    let steps = config.step_count();

    let (e0, mut conormal) = static_energy(&state, params)?;
    let mut mult = MultiplierState::zeros(config.mode);
    let row0 = diagnostics_row(T::zero(), e0, &state.mesh, &mult, T::zero(), 0, T::zero());
    observer(&state, &row0);
    let mut diagnostics = vec![row0];
    let mut snapshots = Vec::new();
    if config.snapshot_every > 0 {
        snapshots.push(state.clone());
    }
    info!(
        "starting run: {} steps of {} ({} mode, {:?})",
        steps,
        config.dt,
        config.mode.name(),
        config.variant
    );

    let mut termination = Termination::EndTime;
    let mut done = 0;
    for m in 0..steps {
        let sol = match newton_conserve(
            &state,
            params,
            config.dt,
            config.mode,
            config.variant,
            &targets,
            &mult,
            &config.newton,
        ) {
            Ok(s) => s,
            Err(error) => {
                termination = Termination::Failed { step: m + 1, error };
                break;
            }
        };
        let geom = mesh_geometry(&state.mesh)?;
        conormal = junction_conormal(&state.mesh, &geom, &sol.kappa.kappa, sol.beta, &sol.mesh);
        let energy = discrete_energy(&state.mesh, &geom, &sol.kappa.kappa, &conormal, &sol.mesh, params)?;
        let speed = max_displacement(&sol.dx) / config.dt;
        mult = sol.multipliers;
        state = SchemeState {
            mesh: sol.mesh,
            kappa: sol.kappa,
            y: sol.y,
            beta: sol.beta,
            t: from_usize::<T>(m + 1) * config.dt,
        };
        let row = diagnostics_row(state.t, energy, &state.mesh, &mult, state.beta, sol.newton_iters, speed);
        observer(&state, &row);
        diagnostics.push(row);
        done = m + 1;
        if config.snapshot_every > 0 && done % config.snapshot_every == 0 {
            snapshots.push(state.clone());
        }
        if let Some(reason) = pinch_check(&state.mesh, r_min) {
            termination = Termination::Degenerated { step: done, reason };
            break;
        }
        if speed_tol > T::zero() && speed < speed_tol {
            termination = Termination::Stationary;
            break;
        }
        if done % 10000 == 0 {
            debug!("step {done}: t = {}, E = {}", state.t, energy);
        }
    }
    info!("run finished after {done} steps: {termination:?}");
    Ok(Trajectory {
        diagnostics,
        snapshots,
        final_state: state,
        final_conormal: conormal,
        targets,
        steps: done,
        termination,
    })
}

pub fn run<T: Real>(
    config: &FlowConfig<T>,
    params: &PhysicalParams<T>,
    mesh: &TwoPhaseMesh<T>,
) -> Result<Trajectory<T>> {
    run_observed(config, params, mesh, &mut |_, _| {})
}

/// Radius of the sphere solving `R' = -(κ̄/R)(2/R + κ̄)`, `R(0) = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeReference<T> {
    pub kbar: T,
    pub z0: T,
}

impl<T: Real> OdeReference<T> {
    pub fn new(kbar: T) -> Result<Self> {
        if kbar == T::zero() || !kbar.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "spontaneous curvature must be finite and nonzero, got {kbar}"
            )));
        }
        Ok(Self {
            kbar,
            z0: T::one() + T::lit(2.0) / kbar,
        })
    }

    /// Right-hand side of the ODE.
    pub fn velocity(&self, r: T) -> T {
        -(self.kbar / r) * (T::lit(2.0) / r + self.kbar)
    }

    fn implicit(&self, z: T, t: T) -> T {
        let k = self.kbar;
        let four = T::lit(4.0);
        T::lit(0.5) * (z * z - self.z0 * self.z0) - four / k * (z - self.z0)
            + four / (k * k) * (z / self.z0).ln()
            + k * k * t
    }

    /// `R(t)` from the implicit relation for `z(t) = R(t) + 2/κ̄`.
    pub fn radius(&self, t: T) -> Result<T> {
        if !(t >= T::zero()) {
            return Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")));
        }
        let two_k = T::lit(2.0) / self.kbar;
        if t == T::zero() || self.z0 == T::zero() {
            return Ok(T::one());
        }
        // z moves monotonically from z0 towards 0 (κ̄ < 0) or towards 2/κ̄
        // where the sphere vanishes (κ̄ > 0); it never crosses either value.
        let end = if self.kbar < T::zero() { T::zero() } else { two_k };
        let (mut lo, mut hi) = if self.z0 < end { (self.z0, end) } else { (end, self.z0) };
        let f = |z: T| self.implicit(z, t);
        let at_end = if end == T::zero() { None } else { Some(f(end)) };
        if let Some(fe) = at_end {
            if fe * f(self.z0) > T::zero() {
                return Err(Error::RootNotBracketed(format!(
                    "sphere has vanished before t = {t}"
                )));
            }
        }
        // f(z0) = κ̄² t > 0; find the sign of f on the side of `lo`.
        let f_lo_positive = if lo == self.z0 {
            true
        } else {
            at_end.map_or(f(lo + (hi - lo) * T::epsilon()) > T::zero(), |v| v > T::zero())
        };
        let mut z = (lo + hi) * T::lit(0.5);
        for _ in 0..300 {
            let fz = f(z);
            if fz == T::zero() {
                break;
            }
            if (fz > T::zero()) == f_lo_positive {
                lo = z;
            } else {
                hi = z;
            }
            let dz = fz * z / ((z - two_k) * (z - two_k));
            let cand = z - dz;
            let next = if cand > lo && cand < hi { cand } else { (lo + hi) * T::lit(0.5) };
            if (next - z).abs() <= T::epsilon() * z.abs().max(T::min_positive_value()) {
                z = next;
                break;
            }
            z = next;
        }
        Ok(z - two_k)
    }
}

/// Convenience wrapper for [`OdeReference::radius`].
pub fn ode_reference<T: Real>(kbar: T, t: T) -> Result<T> {
    OdeReference::new(kbar)?.radius(t)
}
