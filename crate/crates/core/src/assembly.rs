//! Assembly of the linear system of one time step of the fully discrete
//! scheme, in both junction modes and in the β-free comparison variant.
//!
//! Unknowns and test functions are ordered node by node along the combined
//! curve (phase 1 from the top pole to the junction, then phase 2 down to the
//! bottom pole), which keeps the matrix banded. Row `k` holds the equation
//! tested with the basis function that belongs to unknown `k`; the β unknown
//! carries the orthogonality row.

use crate::assumptions::validate_assumptions;
use crate::error::{Error, Result};
use crate::functionals::PhysicalParams;
use crate::linalg::BandMatrix;
use crate::mesh::{mean_curvature_nodes, mesh_geometry, CurvatureState, PhaseCurve, TwoPhaseMesh};
use crate::scalar::Real;
use crate::vec2::Vec2;

/// Which discretisation of the curvature side constraint to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// The scheme with the extra junction unknown β (C¹ only).
    WithBeta,
    /// The comparison scheme without β and without the orthogonality row.
    Sideh,
}

/// Which conserved quantities are enforced by Lagrange multipliers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum ConservationMode {
    #[default]
    Free,
    Area,
    Volume,
    AreaVolume,
}

impl ConservationMode {
    pub fn conserves_area(self) -> bool {
        matches!(self, ConservationMode::Area | ConservationMode::AreaVolume)
    }

    pub fn conserves_volume(self) -> bool {
        matches!(self, ConservationMode::Volume | ConservationMode::AreaVolume)
    }

    pub fn name(self) -> &'static str {
        match self {
            ConservationMode::Free => "free",
            ConservationMode::Area => "area",
            ConservationMode::Volume => "volume",
            ConservationMode::AreaVolume => "area_volume",
        }
    }
}

/// Number of unknowns in each block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockCounts {
    pub x: usize,
    pub kappa: usize,
    pub y: usize,
    pub beta: usize,
}

impl BlockCounts {
    pub fn total(&self) -> usize {
        self.x + self.kappa + self.y + self.beta
    }
}

/// Index maps from `(phase, node, component)` to unknowns. `None` marks a
/// value fixed by the function spaces: pole `e1` components of δX and Y, pole
/// curvatures and, for C⁰, the junction values of Y.
#[derive(Clone, Debug, PartialEq)]
pub struct DofLayout {
    pub elements: [usize; 2],
    pub c1: bool,
    x: [Vec<[Option<usize>; 2]>; 2],
    kappa: [Vec<Option<usize>>; 2],
    y: [Vec<[Option<usize>; 2]>; 2],
    pub beta: Option<usize>,
    pub counts: BlockCounts,
}

impl DofLayout {
    pub fn new(j1: usize, j2: usize, c1: bool, variant: Variant) -> Self {
        let mut x = [vec![[None; 2]; j1 + 1], vec![[None; 2]; j2 + 1]];
        let mut kappa = [vec![None; j1 + 1], vec![None; j2 + 1]];
        let mut y = [vec![[None; 2]; j1 + 1], vec![[None; 2]; j2 + 1]];
        let mut beta = None;
        let mut counts = BlockCounts {
            x: 0,
            kappa: 0,
            y: 0,
            beta: 0,
        };
        let mut next = 0usize;
        let mut take = |block: &mut usize| {
            *block += 1;
            next += 1;
            next - 1
        };
        let with_beta = c1 && variant == Variant::WithBeta;

        for j in 0..=j1 {
            let pole = j == 0;
            let junction = j == j1;
            for c in 0..2 {
                if !(pole && c == 0) {
                    let k = take(&mut counts.x);
                    x[0][j][c] = Some(k);
                    if junction {
                        x[1][0][c] = Some(k);
                    }
                }
            }
            if !pole {
                kappa[0][j] = Some(take(&mut counts.kappa));
            }
            if junction {
                kappa[1][0] = Some(take(&mut counts.kappa));
            }
            if !junction || c1 {
                for c in 0..2 {
                    if !(pole && c == 0) {
                        let k = take(&mut counts.y);
                        y[0][j][c] = Some(k);
                        if junction {
                            y[1][0][c] = Some(k);
                        }
                    }
                }
            }
            if junction && with_beta {
                beta = Some(take(&mut counts.beta));
            }
        }
        for j in 1..=j2 {
            let pole = j == j2;
            for c in 0..2 {
                if !(pole && c == 0) {
                    x[1][j][c] = Some(take(&mut counts.x));
                }
            }
            if !pole {
                kappa[1][j] = Some(take(&mut counts.kappa));
            }
            for c in 0..2 {
                if !(pole && c == 0) {
                    y[1][j][c] = Some(take(&mut counts.y));
                }
            }
        }
        Self {
            elements: [j1, j2],
            c1,
            x,
            kappa,
            y,
            beta,
            counts,
        }
    }

    pub fn dim(&self) -> usize {
        self.counts.total()
    }

    #[inline]
    pub fn x_index(&self, phase: usize, node: usize, comp: usize) -> Option<usize> {
        self.x[phase][node][comp]
    }

    #[inline]
    pub fn kappa_index(&self, phase: usize, node: usize) -> Option<usize> {
        self.kappa[phase][node]
    }

    #[inline]
    pub fn y_index(&self, phase: usize, node: usize, comp: usize) -> Option<usize> {
        self.y[phase][node][comp]
    }
}

/// Nodal vector potential `Y` of both phases.
pub type VectorField<T> = [Vec<Vec2<T>>; 2];

/// State of the scheme at time level `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeState<T> {
    pub mesh: TwoPhaseMesh<T>,
    pub kappa: CurvatureState<T>,
    pub y: VectorField<T>,
    /// Junction unknown β (zero when unused).
    pub beta: T,
    pub t: T,
}

impl<T: Real> SchemeState<T> {
    fn check_finite(&self) -> Result<()> {
        let ok = self.kappa.kappa.iter().flatten().all(|v| v.is_finite())
            && self.y.iter().flatten().all(|v| v.is_finite())
            && self.beta.is_finite()
            && self.t.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::NonFiniteInput("scheme state".into()))
        }
    }

    fn check_shapes(&self) -> Result<()> {
        for i in 0..2 {
            let n = self.mesh.curves[i].nodes.len();
            if self.kappa.kappa[i].len() != n || self.y[i].len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "phase {} fields do not match its {} nodes",
                    i + 1,
                    n
                )));
            }
        }
        Ok(())
    }
}

/// Value of `Y` at the junction in terms of the unknowns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JunctionY<T> {
    /// C⁰: both values fixed.
    Fixed([Vec2<T>; 2]),
    /// C¹: `Y_1 = Ỹ`, `Y_2 = Ỹ - jump`.
    Jump(Vec2<T>),
}

impl<T: Real> JunctionY<T> {
    pub fn from_params(params: &PhysicalParams<T>) -> Self {
        let tp = T::two_pi();
        if params.c1 {
            JunctionY::Jump(Vec2::e1() * (tp * (params.alpha_g[0] - params.alpha_g[1])))
        } else {
            JunctionY::Fixed([
                Vec2::e1() * (tp * params.alpha_g[0]),
                Vec2::e1() * (tp * params.alpha_g[1]),
            ])
        }
    }
}

/// Linear system `T x = g + Σ λ_{A,ℓ} K_ℓ + λ_V N` of one time step.
#[derive(Clone, Debug)]
pub struct AssembledSystem<T> {
    pub layout: DofLayout,
    pub matrix: BandMatrix<T>,
    pub rhs: Vec<T>,
    /// Area response columns `K_1, K_2`, present when areas are conserved.
    pub area_columns: Option<[Vec<T>; 2]>,
    /// Volume response column `N`, present when the volume is conserved.
    pub volume_column: Option<Vec<T>>,
    pub junction_y: JunctionY<T>,
}

/// Unknowns of one step, mapped back to nodal fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Unpacked<T> {
    pub dx: VectorField<T>,
    pub kappa: CurvatureState<T>,
    pub y: VectorField<T>,
    pub beta: T,
}

impl<T: Real> AssembledSystem<T> {
    /// Nodal displacement field of a solution vector.
    pub fn unpack_dx(&self, x: &[T]) -> VectorField<T> {
        let l = &self.layout;
        let f = |i: usize| -> Vec<Vec2<T>> {
            (0..=l.elements[i])
                .map(|j| {
                    let g = |c| l.x_index(i, j, c).map_or(T::zero(), |k| x[k]);
                    Vec2::new(g(0), g(1))
                })
                .collect()
        };
        [f(0), f(1)]
    }

    /// Full nodal fields of a solution vector of the inhomogeneous system.
    pub fn unpack(&self, x: &[T]) -> Unpacked<T> {
        let l = &self.layout;
        let dx = self.unpack_dx(x);
        let kappa = CurvatureState {
            kappa: [0, 1].map(|i| {
                (0..=l.elements[i])
                    .map(|j| l.kappa_index(i, j).map_or(T::zero(), |k| x[k]))
                    .collect()
            }),
        };
        let y = [0, 1].map(|i| {
            (0..=l.elements[i])
                .map(|j| {
                    let mut v = Vec2::zero();
                    for c in 0..2 {
                        let (idx, off) = y_entry(l, &self.junction_y, i, j, c);
                        *v.comp_mut(c) = idx.map_or(T::zero(), |k| x[k]) + off;
                    }
                    v
                })
                .collect()
        });
        let beta = l.beta.map_or(T::zero(), |k| x[k]);
        Unpacked { dx, kappa, y, beta }
    }
}

/// Index and constant offset of `Y_i(q_{i,j})·e_c`.
fn y_entry<T: Real>(
    l: &DofLayout,
    jy: &JunctionY<T>,
    i: usize,
    j: usize,
    c: usize,
) -> (Option<usize>, T) {
    let junction = (i == 0 && j == l.elements[0]) || (i == 1 && j == 0);
    if !junction {
        return (l.y_index(i, j, c), T::zero());
    }
    match jy {
        JunctionY::Fixed(v) => (None, v[i].comp(c)),
        JunctionY::Jump(d) => {
            let off = if i == 1 { -d.comp(c) } else { T::zero() };
            (l.y_index(i, j, c), off)
        }
    }
}

struct Builder<'a, T> {
    layout: &'a DofLayout,
    jy: JunctionY<T>,
    triplets: Vec<(usize, usize, T)>,
    rhs: Vec<T>,
}

impl<'a, T: Real> Builder<'a, T> {
    fn entry(&mut self, row: Option<usize>, col: Option<usize>, v: T) {
        if let (Some(r), Some(c)) = (row, col) {
            self.triplets.push((r, c, v));
        }
    }

    /// Adds `coeff · Y_i(q_{i,j})·e_c` to equation `row`.
    fn y_term(&mut self, row: Option<usize>, i: usize, j: usize, c: usize, coeff: T) {
        let Some(r) = row else { return };
        let (idx, off) = y_entry(self.layout, &self.jy, i, j, c);
        if let Some(k) = idx {
            self.triplets.push((r, k, coeff));
        }
        if off != T::zero() {
            self.rhs[r] -= coeff * off;
        }
    }
}

/// Adds the element functional `g_a·χ_a + g_b·χ_b + g_Δ·(χ_b - χ_a)` to the
/// X-rows of a vector.
fn scatter_x<T: Real>(
    l: &DofLayout,
    out: &mut [T],
    i: usize,
    e: usize,
    ga: Vec2<T>,
    gb: Vec2<T>,
    gd: Vec2<T>,
) {
    for c in 0..2 {
        if let Some(r) = l.x_index(i, e, c) {
            out[r] += ga.comp(c) - gd.comp(c);
        }
        if let Some(r) = l.x_index(i, e + 1, c) {
            out[r] += gb.comp(c) + gd.comp(c);
        }
    }
}

/// Assembles the scheme with β (C¹) or the plain C⁰ scheme, per `params.c1`.
pub fn assemble<T: Real>(
    state: &SchemeState<T>,
    params: &PhysicalParams<T>,
    dt: T,
    mode: ConservationMode,
) -> Result<AssembledSystem<T>> {
    assemble_variant(state, params, dt, mode, Variant::WithBeta)
}

/// Assembles the comparison scheme without β. Only defined for C¹ junctions.
pub fn assemble_sideh_variant<T: Real>(
    state: &SchemeState<T>,
    params: &PhysicalParams<T>,
    dt: T,
    mode: ConservationMode,
) -> Result<AssembledSystem<T>> {
    if !params.c1 {
        return Err(Error::InvalidParameter(
            "the variant without beta differs only for C1 junctions".into(),
        ));
    }
    assemble_variant(state, params, dt, mode, Variant::Sideh)
}

pub fn assemble_variant<T: Real>(
    state: &SchemeState<T>,
    params: &PhysicalParams<T>,
    dt: T,
    mode: ConservationMode,
    variant: Variant,
) -> Result<AssembledSystem<T>> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    state.check_shapes()?;
    state.check_finite()?;
    validate_assumptions(&state.mesh, params.c1).into_result()?;

    let mesh = &state.mesh;
    let (j1, j2) = mesh.element_counts();
    let layout = DofLayout::new(j1, j2, params.c1, variant);
    let n = layout.dim();
    let geom = mesh_geometry(mesh)?;
    let jy = JunctionY::from_params(params);
    let mut b = Builder {
        layout: &layout,
        jy,
        triplets: Vec::with_capacity(40 * n),
        rhs: vec![T::zero(); n],
    };

    let half = T::lit(0.5);
    let pi = T::PI();
    let two_pi = T::two_pi();
    let two = T::lit(2.0);

    for i in 0..2 {
        let curve: &PhaseCurve<T> = &mesh.curves[i];
        let g = &geom[i];
        let kap = &state.kappa.kappa[i];
        let ym = &state.y[i];
        let big_k = mean_curvature_nodes(curve, &g.vertices, kap)?;
        let alpha = params.alpha[i];
        let kbar = params.kbar[i];
        let nn = curve.nodes.len();

        // F = α (𝔎 - κ̄)², G = α (𝔎 - κ̄)(𝔷 - 2).
        let f: Vec<T> = big_k.iter().map(|&k| alpha * (k - kbar) * (k - kbar)).collect();
        let gz: Vec<T> = big_k
            .iter()
            .zip(&g.vertices)
            .map(|(&k, vf)| alpha * (k - kbar) * (vf.zeta - two))
            .collect();

        // Nodal terms.
        for k in 0..nn {
            let vf = &g.vertices[k];
            let p = curve.nodes[k];
            let mass = two_pi / dt * p.r * vf.weight;
            for c in 0..2 {
                let row = layout.x_index(i, k, c);
                for d in 0..2 {
                    let col = layout.x_index(i, k, d);
                    b.entry(row, col, mass * vf.q[c][d]);
                }
            }
            if !curve.is_pole(k) {
                if let Some(r) = layout.x_index(i, k, 0) {
                    b.rhs[r] += two_pi * gz[k] * vf.omega.r / p.r * vf.weight;
                }
            }

            // Curvature equation.
            if let Some(r) = layout.kappa_index(i, k) {
                b.entry(Some(r), Some(r), two_pi * alpha * p.r * vf.weight);
                for c in 0..2 {
                    b.y_term(Some(r), i, k, c, -vf.weight * vf.omega.comp(c));
                }
                b.rhs[r] += two_pi * alpha * vf.weight * (vf.omega.r + kbar * p.r);
            }

            // Curvature part of the side constraint.
            if let Some(col) = layout.kappa_index(i, k) {
                for c in 0..2 {
                    let row = layout.y_index(i, k, c);
                    b.entry(row, Some(col), vf.weight * vf.omega.comp(c));
                }
            }
        }

        // Element terms.
        for e in 0..curve.elements() {
            let (a, bb) = (e, e + 1);
            let ef = &g.elements[e];
            let len = ef.length;
            let (tau, nu) = (ef.tau, ef.nu);
            let (pa, pb) = (curve.nodes[a], curve.nodes[bb]);
            let inv = T::one() / len;

            for c in 0..2 {
                let ra = layout.x_index(i, a, c);
                let rb = layout.x_index(i, bb, c);
                b.y_term(rb, i, bb, c, -inv);
                b.y_term(rb, i, a, c, inv);
                b.y_term(ra, i, bb, c, inv);
                b.y_term(ra, i, a, c, -inv);

                let ya = layout.y_index(i, a, c);
                let yb = layout.y_index(i, bb, c);
                let xa = layout.x_index(i, a, c);
                let xb = layout.x_index(i, bb, c);
                b.entry(yb, xb, inv);
                b.entry(yb, xa, -inv);
                b.entry(ya, xb, -inv);
                b.entry(ya, xa, inv);
                let dxm = (pb - pa).comp(c) * inv;
                if let Some(r) = yb {
                    b.rhs[r] -= dxm;
                }
                if let Some(r) = ya {
                    b.rhs[r] += dxm;
                }
            }

            let dym = ym[bb] - ym[a];
            let mut gd = tau * (-(dym.dot(tau)) * inv);
            let mut ga = Vec2::zero();
            let mut gb = Vec2::zero();

            ga.r -= pi * half * f[a] * len;
            gb.r -= pi * half * f[bb] * len;
            gd -= tau * (pi * half * (f[bb] * pb.r + f[a] * pa.r));

            for &node in &[a, bb] {
                let om = g.vertices[node].omega;
                gd += (nu * tau.r + tau * (om.r - nu.r)) * (pi * gz[node]);
            }

            gd += (ym[bb].perp() * kap[bb] + ym[a].perp() * kap[a]) * half;

            scatter_x(&layout, &mut b.rhs, i, e, ga, gb, gd);
        }
    }

    // Junction terms.
    if let Some(r) = layout.x_index(1, 0, 0) {
        b.rhs[r] -= two_pi * params.varsigma;
    }
    if params.c1 && state.beta != T::zero() {
        let bm = state.beta * half;
        let (y1, y2) = (state.y[0][j1], state.y[1][0]);
        scatter_x(&layout, &mut b.rhs, 0, j1 - 1, Vec2::zero(), Vec2::zero(), y1 * bm);
        scatter_x(&layout, &mut b.rhs, 1, 0, Vec2::zero(), Vec2::zero(), y2 * bm);
    }
    if let Some(kb) = layout.beta {
        let d = [mesh.curves[0].edge(j1 - 1), mesh.curves[1].edge(0)];
        for (i, jj) in [(0, j1), (1, 0)] {
            for c in 0..2 {
                let coeff = half * d[i].comp(c);
                b.entry(layout.y_index(i, jj, c), Some(kb), coeff);
                b.y_term(Some(kb), i, jj, c, coeff);
            }
        }
    }

    // Conservation columns.
    let area_columns = if mode.conserves_area() {
        let mut cols = [vec![T::zero(); n], vec![T::zero(); n]];
        for i in 0..2 {
            let curve = &mesh.curves[i];
            for e in 0..curve.elements() {
                let ef = &geom[i].elements[e];
                let (pa, pb) = (curve.nodes[e], curve.nodes[e + 1]);
                let ga = Vec2::e1() * (pi * ef.length);
                let gd = ef.tau * (pi * (pa.r + pb.r));
                scatter_x(&layout, &mut cols[i], i, e, -ga, -ga, -gd);
            }
        }
        Some(cols)
    } else {
        None
    };
    let volume_column = if mode.conserves_volume() {
        let mut col = vec![T::zero(); n];
        let six = T::lit(6.0);
        for i in 0..2 {
            let curve = &mesh.curves[i];
            for e in 0..curve.elements() {
                let (pa, pb) = (curve.nodes[e], curve.nodes[e + 1]);
                let dp = (pb - pa).perp();
                let ga = dp * (two_pi * (two * pa.r + pb.r) / six);
                let gb = dp * (two_pi * (pa.r + two * pb.r) / six);
                scatter_x(&layout, &mut col, i, e, ga, gb, Vec2::zero());
            }
        }
        Some(col)
    } else {
        None
    };

    let matrix = BandMatrix::from_triplets(n, &b.triplets);
    let rhs = b.rhs;
    Ok(AssembledSystem {
        layout,
        matrix,
        rhs,
        area_columns,
        volume_column,
        junction_y: jy,
    })
}
