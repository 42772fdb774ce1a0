//! Polygonal generating curves, element and vertex frames, mass-lumped
//! quadrature and the discrete mean curvature field.
//!
//! Phase 1 runs from the top pole (parameter 0) to the junction (parameter
//! 1/2), phase 2 from the junction to the bottom pole (parameter 1). With the
//! clockwise perp `(a, b)^⊥ = (b, -a)` the element normal `ν = -τ^⊥` is the
//! outer normal of the revolved surface.

use crate::error::{Error, Result};
use crate::scalar::{from_usize, Real};
use crate::vec2::Vec2;

/// Relative threshold (w.r.t. the curve diameter) below which two nodes count
/// as coincident.
pub const DISTINCTNESS_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    One,
    Two,
}

impl Phase {
    pub fn index(self) -> usize {
        match self {
            Phase::One => 0,
            Phase::Two => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Phase::One
        } else {
            Phase::Two
        }
    }
}

/// One polygonal generating curve with `J + 1` nodes on an equipartitioned
/// parameter interval of length 1/2.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseCurve<T> {
    pub phase: Phase,
    pub nodes: Vec<Vec2<T>>,
}

impl<T: Real> PhaseCurve<T> {
    pub fn new(phase: Phase, nodes: Vec<Vec2<T>>) -> Result<Self> {
        if nodes.len() < 4 {
            return Err(Error::DegenerateMesh(format!(
                "phase {} needs at least 3 elements, got {}",
                phase.index() + 1,
                nodes.len().saturating_sub(1)
            )));
        }
        if nodes.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteInput(format!(
                "phase {} node coordinates",
                phase.index() + 1
            )));
        }
        Ok(Self { phase, nodes })
    }

    /// Element count `J`.
    #[inline]
    pub fn elements(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Parameter spacing `h = 1 / (2 J)`.
    #[inline]
    pub fn h(&self) -> T {
        T::one() / from_usize::<T>(2 * self.elements())
    }

    #[inline]
    pub fn pole_index(&self) -> usize {
        match self.phase {
            Phase::One => 0,
            Phase::Two => self.elements(),
        }
    }

    #[inline]
    pub fn junction_index(&self) -> usize {
        match self.phase {
            Phase::One => self.elements(),
            Phase::Two => 0,
        }
    }

    #[inline]
    pub fn is_pole(&self, j: usize) -> bool {
        j == self.pole_index()
    }

    #[inline]
    pub fn is_junction(&self, j: usize) -> bool {
        j == self.junction_index()
    }

    /// Parameter value of node `j`.
    pub fn parameter(&self, j: usize) -> T {
        let offset = match self.phase {
            Phase::One => T::zero(),
            Phase::Two => T::lit(0.5),
        };
        offset + from_usize::<T>(j) * self.h()
    }

    pub fn edge(&self, e: usize) -> Vec2<T> {
        self.nodes[e + 1] - self.nodes[e]
    }

    pub fn edge_lengths(&self) -> Vec<T> {
        (0..self.elements()).map(|e| self.edge(e).norm()).collect()
    }

    /// Diagonal of the bounding box of the nodes.
    pub fn diameter(&self) -> T {
        bbox_diagonal(self.nodes.iter().copied())
    }

    /// Polygonal length.
    pub fn length(&self) -> T {
        self.edge_lengths().into_iter().sum()
    }
}

pub(crate) fn bbox_diagonal<T: Real>(pts: impl Iterator<Item = Vec2<T>>) -> T {
    let mut lo = Vec2::new(T::infinity(), T::infinity());
    let mut hi = Vec2::new(T::neg_infinity(), T::neg_infinity());
    for p in pts {
        lo.r = lo.r.min(p.r);
        lo.z = lo.z.min(p.z);
        hi.r = hi.r.max(p.r);
        hi.z = hi.z.max(p.z);
    }
    (hi - lo).norm()
}

/// Two generating curves sharing the junction node.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPhaseMesh<T> {
    pub curves: [PhaseCurve<T>; 2],
}

impl<T: Real> TwoPhaseMesh<T> {
    /// Builds a mesh from raw node lists. Pole nodes are snapped to `r = 0`
    /// only if they already are exactly on the axis; anything else is an error.
    pub fn new(nodes1: Vec<Vec2<T>>, nodes2: Vec<Vec2<T>>) -> Result<Self> {
        let c1 = PhaseCurve::new(Phase::One, nodes1)?;
        let c2 = PhaseCurve::new(Phase::Two, nodes2)?;
        let mesh = Self { curves: [c1, c2] };
        mesh.check_topology()?;
        Ok(mesh)
    }

    fn check_topology(&self) -> Result<()> {
        let j1 = self.curves[0].junction_index();
        let a = self.curves[0].nodes[j1];
        let b = self.curves[1].nodes[0];
        if a != b {
            return Err(Error::DegenerateMesh(format!(
                "junction mismatch: phase 1 ends at ({}, {}), phase 2 starts at ({}, {})",
                a.r, a.z, b.r, b.z
            )));
        }
        for c in &self.curves {
            let p = c.nodes[c.pole_index()];
            if p.r != T::zero() {
                return Err(Error::DegenerateMesh(format!(
                    "pole node of phase {} is off the axis (r = {})",
                    c.phase.index() + 1,
                    p.r
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn curve(&self, i: usize) -> &PhaseCurve<T> {
        &self.curves[i]
    }

    pub fn junction(&self) -> Vec2<T> {
        self.curves[1].nodes[0]
    }

    pub fn element_counts(&self) -> (usize, usize) {
        (self.curves[0].elements(), self.curves[1].elements())
    }

    pub fn diameter(&self) -> T {
        bbox_diagonal(self.curves.iter().flat_map(|c| c.nodes.iter().copied()))
    }

    /// Largest edge length over both phases.
    pub fn max_edge(&self) -> T {
        self.curves
            .iter()
            .flat_map(|c| c.edge_lengths())
            .fold(T::zero(), T::max)
    }

    /// Applies `f` to every node (junction kept consistent).
    pub fn map_nodes(&self, f: impl Fn(Vec2<T>) -> Vec2<T>) -> Self {
        let c = |k: usize| PhaseCurve {
            phase: self.curves[k].phase,
            nodes: self.curves[k].nodes.iter().map(|&p| f(p)).collect(),
        };
        Self {
            curves: [c(0), c(1)],
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        self.map_nodes(|p| p * s)
    }

    pub fn cast<U: Real>(&self) -> TwoPhaseMesh<U> {
        let c = |k: usize| PhaseCurve {
            phase: self.curves[k].phase,
            nodes: self.curves[k].nodes.iter().map(|p| p.cast()).collect(),
        };
        TwoPhaseMesh {
            curves: [c(0), c(1)],
        }
    }
}

/// Per-element tangent, normal and length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementFrame<T> {
    pub tau: Vec2<T>,
    pub nu: Vec2<T>,
    /// Euclidean element length `|X_j - X_{j-1}|`.
    pub length: T,
    /// `|X_ρ|` on the element, i.e. `length / h`.
    pub speed: T,
}

pub fn element_frames<T: Real>(curve: &PhaseCurve<T>) -> Result<Vec<ElementFrame<T>>> {
    let tol = T::lit(DISTINCTNESS_TOL) * curve.diameter().max(T::min_positive_value());
    let h = curve.h();
    (0..curve.elements())
        .map(|e| {
            let d = curve.edge(e);
            let length = d.norm();
            if !(length > tol) {
                return Err(Error::DegenerateMesh(format!(
                    "phase {} element {} has zero length",
                    curve.phase.index() + 1,
                    e + 1
                )));
            }
            let tau = d / length;
            Ok(ElementFrame {
                tau,
                nu: -tau.perp(),
                length,
                speed: length / h,
            })
        })
        .collect()
}

/// Nodal frame data: lumped normal `ω`, its normalisation `v`, the motion
/// projection `Q`, the pole indicator `𝔷` and the lumped mass weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertexFrame<T> {
    pub omega: Vec2<T>,
    pub v: Vec2<T>,
    pub q: [[T; 2]; 2],
    /// 2 at poles, 1 elsewhere.
    pub zeta: T,
    /// Lumped weight `(χ_j, |X_ρ|)^h` = half the length of the adjacent elements.
    pub weight: T,
}

impl<T: Real> VertexFrame<T> {
    pub fn apply_q(&self, w: Vec2<T>) -> Vec2<T> {
        Vec2::new(
            self.q[0][0] * w.r + self.q[0][1] * w.z,
            self.q[1][0] * w.r + self.q[1][1] * w.z,
        )
    }
}

fn vertex_frames_from<T: Real>(
    curve: &PhaseCurve<T>,
    frames: &[ElementFrame<T>],
) -> Result<Vec<VertexFrame<T>>> {
    let n = curve.nodes.len();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut weight = T::zero();
        let mut acc = Vec2::zero();
        if j > 0 {
            let f = &frames[j - 1];
            weight += f.length * T::lit(0.5);
            acc += f.nu * (f.length * T::lit(0.5));
        }
        if j + 1 < n {
            let f = &frames[j];
            weight += f.length * T::lit(0.5);
            acc += f.nu * (f.length * T::lit(0.5));
        }
        let omega = acc / weight;
        let norm = omega.norm();
        if !(norm > T::lit(DISTINCTNESS_TOL)) {
            return Err(Error::DegenerateMesh(format!(
                "phase {} node {}: averaged normal vanishes",
                curve.phase.index() + 1,
                j
            )));
        }
        let v = omega / norm;
        let q = if curve.is_junction(j) {
            [[T::one(), T::zero()], [T::zero(), T::one()]]
        } else {
            [[v.r * v.r, v.r * v.z], [v.z * v.r, v.z * v.z]]
        };
        let zeta = if curve.is_pole(j) { T::lit(2.0) } else { T::one() };
        out.push(VertexFrame {
            omega,
            v,
            q,
            zeta,
            weight,
        });
    }
    Ok(out)
}

pub fn vertex_normals<T: Real>(curve: &PhaseCurve<T>) -> Result<Vec<VertexFrame<T>>> {
    let frames = element_frames(curve)?;
    vertex_frames_from(curve, &frames)
}

/// Element and vertex frames of one curve, computed together.
#[derive(Clone, Debug)]
pub struct CurveGeometry<T> {
    pub elements: Vec<ElementFrame<T>>,
    pub vertices: Vec<VertexFrame<T>>,
    pub h: T,
}

impl<T: Real> CurveGeometry<T> {
    pub fn new(curve: &PhaseCurve<T>) -> Result<Self> {
        let elements = element_frames(curve)?;
        let vertices = vertex_frames_from(curve, &elements)?;
        Ok(Self {
            elements,
            vertices,
            h: curve.h(),
        })
    }
}

pub fn mesh_geometry<T: Real>(mesh: &TwoPhaseMesh<T>) -> Result<[CurveGeometry<T>; 2]> {
    Ok([
        CurveGeometry::new(&mesh.curves[0])?,
        CurveGeometry::new(&mesh.curves[1])?,
    ])
}

/// Scalar field with independent one-sided values at the two ends of every
/// element: `values[e] = [f(q_{e}^+), f(q_{e+1}^-)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseField<T> {
    pub values: Vec<[T; 2]>,
}

impl<T: Real> PiecewiseField<T> {
    /// Continuous piecewise linear field from nodal values.
    pub fn from_nodal(nodal: &[T]) -> Self {
        Self {
            values: nodal.windows(2).map(|w| [w[0], w[1]]).collect(),
        }
    }

    /// Field constant on each element.
    pub fn from_element_constants(c: &[T]) -> Self {
        Self {
            values: c.iter().map(|&x| [x, x]).collect(),
        }
    }

    pub fn constant(value: T, elements: usize) -> Self {
        Self {
            values: vec![[value, value]; elements],
        }
    }
}

/// Mass-lumped inner product `½ h Σ_j [(fg)(q_j^-) + (fg)(q_{j-1}^+)]`.
pub fn mass_lumped_ip<T: Real>(
    f: &PiecewiseField<T>,
    g: &PiecewiseField<T>,
    curve: &PhaseCurve<T>,
) -> Result<T> {
    let j = curve.elements();
    if f.values.len() != j || g.values.len() != j {
        return Err(Error::ShapeMismatch(format!(
            "expected {} element values, got {} and {}",
            j,
            f.values.len(),
            g.values.len()
        )));
    }
    lumped_ip_with_spacing(f, g, curve.h())
}

/// [`mass_lumped_ip`] for an arbitrary equipartition spacing `h`.
pub fn lumped_ip_with_spacing<T: Real>(
    f: &PiecewiseField<T>,
    g: &PiecewiseField<T>,
    h: T,
) -> Result<T> {
    if f.values.len() != g.values.len() {
        return Err(Error::ShapeMismatch(format!(
            "fields have {} and {} elements",
            f.values.len(),
            g.values.len()
        )));
    }
    let sum: T = f
        .values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| a[0] * b[0] + a[1] * b[1])
        .sum();
    Ok(T::lit(0.5) * h * sum)
}

/// Componentwise extension of [`mass_lumped_ip`] to vector fields.
pub fn mass_lumped_ip_vec<T: Real>(
    f: &[PiecewiseField<T>; 2],
    g: &[PiecewiseField<T>; 2],
    curve: &PhaseCurve<T>,
) -> Result<T> {
    Ok(mass_lumped_ip(&f[0], &g[0], curve)? + mass_lumped_ip(&f[1], &g[1], curve)?)
}

/// Nodal curvature per phase. Pole values are pinned to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureState<T> {
    pub kappa: [Vec<T>; 2],
}

impl<T: Real> CurvatureState<T> {
    pub fn zeros(mesh: &TwoPhaseMesh<T>) -> Self {
        Self {
            kappa: [
                vec![T::zero(); mesh.curves[0].nodes.len()],
                vec![T::zero(); mesh.curves[1].nodes.len()],
            ],
        }
    }

    /// Zeroes the pole values.
    pub fn pin_poles(&mut self, mesh: &TwoPhaseMesh<T>) {
        for i in 0..2 {
            let p = mesh.curves[i].pole_index();
            self.kappa[i][p] = T::zero();
        }
    }
}

/// Discrete mean curvature of one phase: `κ - (ω·e1)/(X·e1)` away from the
/// pole and `2κ` at the pole.
pub fn mean_curvature_nodes<T: Real>(
    curve: &PhaseCurve<T>,
    vertices: &[VertexFrame<T>],
    kappa: &[T],
) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(kappa.len());
    for (j, (&k, vf)) in kappa.iter().zip(vertices).enumerate() {
        if curve.is_pole(j) {
            out.push(k + k);
        } else {
            let r = curve.nodes[j].r;
            if !(r > T::zero()) {
                return Err(Error::DegenerateMesh(format!(
                    "phase {} node {} lies on the axis",
                    curve.phase.index() + 1,
                    j
                )));
            }
            out.push(k - vf.omega.r / r);
        }
    }
    Ok(out)
}

pub fn discrete_mean_curvature<T: Real>(
    mesh: &TwoPhaseMesh<T>,
    kappa: &CurvatureState<T>,
) -> Result<[Vec<T>; 2]> {
    let g = mesh_geometry(mesh)?;
    Ok([
        mean_curvature_nodes(&mesh.curves[0], &g[0].vertices, &kappa.kappa[0])?,
        mean_curvature_nodes(&mesh.curves[1], &g[1].vertices, &kappa.kappa[1])?,
    ])
}

/// Vertex curvature vector of a curve from the lumped relation
/// `(κ⃗, η|X_ρ|)^h + (τ, η_ρ) = 0`, i.e. `κ⃗_j = (τ_{j+1} - τ_j) / w_j`, with
/// the one-sided boundary terms at the curve ends.
pub fn curvature_vectors<T: Real>(geom: &CurveGeometry<T>) -> Vec<Vec2<T>> {
    let n = geom.vertices.len();
    (0..n)
        .map(|j| {
            let mut d = Vec2::zero();
            if j + 1 < n {
                d += geom.elements[j].tau;
            }
            if j > 0 {
                d -= geom.elements[j - 1].tau;
            }
            d / geom.vertices[j].weight
        })
        .collect()
}

/// Nodal curvature that treats the junction as an interior node of the
/// combined curve. Useful for building curvature fields on smooth test
/// geometries; the scheme itself never calls this.
pub fn smooth_curvature<T: Real>(mesh: &TwoPhaseMesh<T>) -> Result<CurvatureState<T>> {
    let g = mesh_geometry(mesh)?;
    let mut st = CurvatureState::zeros(mesh);
    for i in 0..2 {
        let kv = curvature_vectors(&g[i]);
        for (j, k) in kv.iter().enumerate() {
            st.kappa[i][j] = k.dot(g[i].vertices[j].v);
        }
    }
    let j1 = mesh.curves[0].elements();
    let e1 = g[0].elements[j1 - 1];
    let e2 = g[1].elements[0];
    let w = (e1.length + e2.length) * T::lit(0.5);
    let omega = (e1.nu * e1.length + e2.nu * e2.length) * T::lit(0.5) / w;
    let kv = (e2.tau - e1.tau) / w;
    let kj = kv.dot(omega / omega.norm());
    st.kappa[0][j1] = kj;
    st.kappa[1][0] = kj;
    st.pin_poles(mesh);
    Ok(st)
}
