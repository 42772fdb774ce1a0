//! Solution of one time step: a direct solve of the assembled system and, for
//! the conserving flows, a Newton iteration on the Lagrange multipliers.

use crate::assembly::{
    assemble_variant, AssembledSystem, ConservationMode, SchemeState, Variant, VectorField,
};
use crate::error::{Error, Result};
use crate::functionals::{
    enclosed_volume, first_variation_area, first_variation_volume, surface_area, PhysicalParams,
};
use crate::linalg::{dense_solve, linear_solve};
use crate::mesh::{CurvatureState, PhaseCurve, TwoPhaseMesh};
use crate::scalar::Real;
use crate::vec2::Vec2;

/// Lagrange multipliers of the area and volume constraints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplierState<T> {
    pub lambda_a: [T; 2],
    pub lambda_v: T,
    pub mode: ConservationMode,
}

impl<T: Real> MultiplierState<T> {
    pub fn zeros(mode: ConservationMode) -> Self {
        Self {
            lambda_a: [T::zero(); 2],
            lambda_v: T::zero(),
            mode,
        }
    }

    /// Copy with the multipliers of inactive constraints set to zero.
    pub fn masked(&self, mode: ConservationMode) -> Self {
        let a = mode.conserves_area();
        let v = mode.conserves_volume();
        Self {
            lambda_a: if a { self.lambda_a } else { [T::zero(); 2] },
            lambda_v: if v { self.lambda_v } else { T::zero() },
            mode,
        }
    }
}

/// Values of the conserved quantities to be maintained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservationTargets<T> {
    pub area: [T; 2],
    pub volume: T,
}

impl<T: Real> ConservationTargets<T> {
    pub fn from_mesh(mesh: &TwoPhaseMesh<T>) -> Self {
        Self {
            area: [surface_area(&mesh.curves[0]), surface_area(&mesh.curves[1])],
            volume: enclosed_volume(mesh),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions<T> {
    /// Relative tolerance on every active constraint.
    pub tol: T,
    pub max_iters: usize,
}

impl<T: Real> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10),
            max_iters: 20,
        }
    }
}

/// Result of one time step.
#[derive(Clone, Debug)]
pub struct StepSolution<T> {
    /// `X^{m+1}`.
    pub mesh: TwoPhaseMesh<T>,
    pub dx: VectorField<T>,
    pub kappa: CurvatureState<T>,
    pub y: VectorField<T>,
    pub beta: T,
    pub multipliers: MultiplierState<T>,
    pub newton_iters: usize,
    /// Relative residuals of the active constraints, in the order A_1, A_2, V.
    pub constraint_residuals: Vec<T>,
    /// Largest relative residual of the linear solves.
    pub solve_residual: T,
}

/// `X + δX`, keeping the junction shared and the poles on the axis.
pub fn displaced<T: Real>(mesh: &TwoPhaseMesh<T>, dx: &VectorField<T>) -> TwoPhaseMesh<T> {
    let c = |i: usize| PhaseCurve {
        phase: mesh.curves[i].phase,
        nodes: mesh.curves[i]
            .nodes
            .iter()
            .zip(&dx[i])
            .map(|(&p, &d)| p + d)
            .collect(),
    };
    TwoPhaseMesh {
        curves: [c(0), c(1)],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Constraint {
    Area(usize),
    Volume,
}

fn evaluate<T: Real>(mesh: &TwoPhaseMesh<T>, c: Constraint) -> T {
    match c {
        Constraint::Area(i) => surface_area(&mesh.curves[i]),
        Constraint::Volume => enclosed_volume(mesh),
    }
}

fn variation<T: Real>(mesh: &TwoPhaseMesh<T>, c: Constraint, dir: &VectorField<T>) -> Result<T> {
    match c {
        Constraint::Area(i) => first_variation_area(&mesh.curves[i], &dir[i]),
        Constraint::Volume => first_variation_volume(mesh, [&dir[0], &dir[1]]),
    }
}

fn combine<T: Real>(base: &[T], cols: &[Vec<T>], lambda: &[T]) -> Vec<T> {
    let mut x = base.to_vec();
    for (col, &l) in cols.iter().zip(lambda) {
        for (xi, &ci) in x.iter_mut().zip(col) {
            *xi += l * ci;
        }
    }
    x
}

fn finish<T: Real>(
    system: &AssembledSystem<T>,
    mesh: &TwoPhaseMesh<T>,
    x: &[T],
    multipliers: MultiplierState<T>,
    newton_iters: usize,
    constraint_residuals: Vec<T>,
    solve_residual: T,
) -> StepSolution<T> {
    let u = system.unpack(x);
    StepSolution {
        mesh: displaced(mesh, &u.dx),
        dx: u.dx,
        kappa: u.kappa,
        y: u.y,
        beta: u.beta,
        multipliers,
        newton_iters,
        constraint_residuals,
        solve_residual,
    }
}

/// Solves the system with the multipliers held fixed at `lambda`.
pub fn solve_with_multipliers<T: Real>(
    system: &AssembledSystem<T>,
    mesh: &TwoPhaseMesh<T>,
    lambda: &MultiplierState<T>,
) -> Result<StepSolution<T>> {
    let mut b = system.rhs.clone();
    let mut add = |col: &[T], l: T| {
        for (bi, &ci) in b.iter_mut().zip(col) {
            *bi += l * ci;
        }
    };
    if let Some(cols) = &system.area_columns {
        add(&cols[0], lambda.lambda_a[0]);
        add(&cols[1], lambda.lambda_a[1]);
    }
    if let Some(col) = &system.volume_column {
        add(col, lambda.lambda_v);
    }
    let sol = linear_solve(&system.matrix, &[b])?;
    let res = sol.residuals[0];
    Ok(finish(system, mesh, &sol.columns[0], *lambda, 0, Vec::new(), res))
}

/// Solves an assembled step, running the multiplier Newton iteration for the
/// constraints whose response columns are present in `system`.
pub fn solve_step<T: Real>(
    system: &AssembledSystem<T>,
    mesh: &TwoPhaseMesh<T>,
    targets: &ConservationTargets<T>,
    warm: &MultiplierState<T>,
    mode: ConservationMode,
    opts: &NewtonOptions<T>,
) -> Result<StepSolution<T>> {
    let mut active = Vec::new();
    let mut rhs = vec![system.rhs.clone()];
    if mode.conserves_area() {
        let cols = system.area_columns.as_ref().ok_or_else(|| {
            Error::ShapeMismatch("system assembled without area columns".into())
        })?;
        active.push(Constraint::Area(0));
        active.push(Constraint::Area(1));
        rhs.push(cols[0].clone());
        rhs.push(cols[1].clone());
    }
    if mode.conserves_volume() {
        let col = system.volume_column.as_ref().ok_or_else(|| {
            Error::ShapeMismatch("system assembled without the volume column".into())
        })?;
        active.push(Constraint::Volume);
        rhs.push(col.clone());
    }
    let sol = linear_solve(&system.matrix, &rhs)?;
    let solve_residual = sol.residuals.iter().fold(T::zero(), |m, &r| m.max(r));
    let base = &sol.columns[0];
    if active.is_empty() {
        return Ok(finish(
            system,
            mesh,
            base,
            MultiplierState::zeros(mode),
            0,
            Vec::new(),
            solve_residual,
        ));
    }
    let responses = &sol.columns[1..];
    let response_dx: Vec<VectorField<T>> = responses.iter().map(|c| system.unpack_dx(c)).collect();
    let target = |c: Constraint| match c {
        Constraint::Area(i) => targets.area[i],
        Constraint::Volume => targets.volume,
    };
    let scale: Vec<T> = active
        .iter()
        .map(|&c| target(c).abs().max(T::min_positive_value()))
        .collect();

    let warm = warm.masked(mode);
    let mut lambda: Vec<T> = active
        .iter()
        .map(|&c| match c {
            Constraint::Area(i) => warm.lambda_a[i],
            Constraint::Volume => warm.lambda_v,
        })
        .collect();

    let mut prev = T::infinity();
    let mut growth = 0usize;
    let mut iters = 0usize;
    loop {
        let x = combine(base, responses, &lambda);
        let trial = displaced(mesh, &system.unpack_dx(&x));
        let res: Vec<T> = active.iter().map(|&c| evaluate(&trial, c) - target(c)).collect();
        let rel: Vec<T> = res.iter().zip(&scale).map(|(r, s)| r.abs() / *s).collect();
        let worst = rel.iter().fold(T::zero(), |m, &r| m.max(r));
        if !worst.is_finite() {
            return Err(Error::NewtonDiverged {
                iterations: iters,
                residual: worst.to_f64_lossy(),
            });
        }
        if worst <= opts.tol {
            let mut m = MultiplierState::zeros(mode);
            for (&c, &l) in active.iter().zip(&lambda) {
                match c {
                    Constraint::Area(i) => m.lambda_a[i] = l,
                    Constraint::Volume => m.lambda_v = l,
                }
            }
            return Ok(finish(system, mesh, &x, m, iters, rel, solve_residual));
        }
        if worst > prev {
            growth += 1;
        } else {
            growth = 0;
        }
        if iters >= opts.max_iters || growth >= 3 {
            return Err(Error::NewtonDiverged {
                iterations: iters,
                residual: worst.to_f64_lossy(),
            });
        }
        prev = worst;
        let mut jac = vec![vec![T::zero(); active.len()]; active.len()];
        for (r, &c) in active.iter().enumerate() {
            for (l, dir) in response_dx.iter().enumerate() {
                jac[r][l] = variation(&trial, c, dir)?;
            }
        }
        let delta = scaled_newton_step(&jac, &res, &scale)?;
        for (l, d) in lambda.iter_mut().zip(delta) {
            *l += d;
        }
        iters += 1;
    }
}

/// Newton update `δλ` for `J δλ = -res`, solved after scaling rows by the
/// targets and columns to unit norm.
fn scaled_newton_step<T: Real>(jac: &[Vec<T>], res: &[T], scale: &[T]) -> Result<Vec<T>> {
    let n = res.len();
    let rows: Vec<Vec<T>> = (0..n).map(|r| jac[r].iter().map(|&v| v / scale[r]).collect()).collect();
    let col_norm: Vec<T> = (0..n)
        .map(|c| {
            let s: T = rows.iter().map(|row| row[c] * row[c]).sum();
            if s > T::zero() {
                s.sqrt()
            } else {
                T::one()
            }
        })
        .collect();
    let a: Vec<Vec<T>> = rows
        .iter()
        .map(|row| row.iter().zip(&col_norm).map(|(&v, &c)| v / c).collect())
        .collect();
    let b: Vec<T> = res.iter().zip(scale).map(|(&r, &s)| -r / s).collect();
    let y = dense_solve(&a, &b).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::SingularJacobian,
        other => other,
    })?;
    Ok(y.iter().zip(&col_norm).map(|(&v, &c)| v / c).collect())
}

/// Assembles and solves one step of the (possibly conserving) scheme.
#[allow(clippy::too_many_arguments)]
pub fn newton_conserve<T: Real>(
    state: &SchemeState<T>,
    params: &PhysicalParams<T>,
    dt: T,
    mode: ConservationMode,
    variant: Variant,
    targets: &ConservationTargets<T>,
    warm: &MultiplierState<T>,
    opts: &NewtonOptions<T>,
) -> Result<StepSolution<T>> {
    let system = assemble_variant(state, params, dt, mode, variant)?;
    solve_step(&system, &state.mesh, targets, warm, mode, opts)
}

/// Largest nodal displacement of a step.
pub fn max_displacement<T: Real>(dx: &VectorField<T>) -> T {
    dx.iter()
        .flatten()
        .map(|d: &Vec2<T>| d.norm())
        .fold(T::zero(), T::max)
}
