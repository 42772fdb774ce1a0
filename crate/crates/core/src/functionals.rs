//! Geometric functionals of the two-phase mesh: phase areas, enclosed volume,
//! their first variations, the reconstructed junction conormals and the
//! discrete bending energy.

use crate::error::{Error, Result};
use crate::mesh::{mean_curvature_nodes, CurveGeometry, PhaseCurve, TwoPhaseMesh};
use crate::scalar::Real;
use crate::vec2::Vec2;

/// Energy coefficients of both phases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams<T> {
    /// Mean bending rigidities, strictly positive.
    pub alpha: [T; 2],
    /// Gaussian bending rigidities.
    pub alpha_g: [T; 2],
    /// Spontaneous curvatures.
    pub kbar: [T; 2],
    /// Line tension of the phase boundary.
    pub varsigma: T,
    /// `true` for a C¹ junction (continuous normal), `false` for C⁰.
    pub c1: bool,
}

impl<T: Real> Default for PhysicalParams<T> {
    fn default() -> Self {
        Self {
            alpha: [T::one(); 2],
            alpha_g: [T::zero(); 2],
            kbar: [T::zero(); 2],
            varsigma: T::zero(),
            c1: true,
        }
    }
}

impl<T: Real> PhysicalParams<T> {
    /// Checks hard invariants and returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        for (i, a) in self.alpha.iter().enumerate() {
            if !(*a > T::zero()) || !a.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "alpha{} must be positive, got {}",
                    i + 1,
                    a
                )));
            }
        }
        let finite = self.alpha_g.iter().chain(&self.kbar).all(|x| x.is_finite())
            && self.varsigma.is_finite();
        if !finite {
            return Err(Error::NonFiniteInput("physical parameters".into()));
        }
        if self.varsigma < T::zero() {
            return Err(Error::InvalidParameter(format!(
                "varsigma must be non-negative, got {}",
                self.varsigma
            )));
        }
        let mut warnings = Vec::new();
        let bound = (self.alpha_g[0] - self.alpha_g[1]).abs() * T::lit(0.5);
        if self.alpha[0].min(self.alpha[1]) < bound {
            warnings.push(format!(
                "energy not bounded from below: min(alpha) = {} < |alphaG1 - alphaG2|/2 = {}",
                self.alpha[0].min(self.alpha[1]),
                bound
            ));
        }
        Ok(warnings)
    }
}

/// Surface area of the revolved phase, `2π ∫ X·e1 |X_ρ|`, integrated exactly.
pub fn surface_area<T: Real>(curve: &PhaseCurve<T>) -> T {
    let s: T = curve
        .nodes
        .windows(2)
        .map(|w| (w[1] - w[0]).norm() * (w[0].r + w[1].r))
        .sum();
    T::PI() * s
}

fn curve_volume<T: Real>(curve: &PhaseCurve<T>) -> T {
    curve
        .nodes
        .windows(2)
        .map(|w| (w[1].z - w[0].z) * (w[0].r * w[0].r + w[0].r * w[1].r + w[1].r * w[1].r))
        .sum()
}

/// Enclosed volume `-π Σ_i ((X·e1)², [X_ρ]^⊥·e1)`.
pub fn enclosed_volume<T: Real>(mesh: &TwoPhaseMesh<T>) -> T {
    let s = curve_volume(&mesh.curves[0]) + curve_volume(&mesh.curves[1]);
    -T::PI() * s / T::lit(3.0)
}

/// Directional derivative of [`surface_area`] along the nodal field `dir`.
pub fn first_variation_area<T: Real>(curve: &PhaseCurve<T>, dir: &[Vec2<T>]) -> Result<T> {
    if dir.len() != curve.nodes.len() {
        return Err(Error::ShapeMismatch(format!(
            "direction has {} nodes, curve has {}",
            dir.len(),
            curve.nodes.len()
        )));
    }
    let mut s = T::zero();
    for e in 0..curve.elements() {
        let d = curve.edge(e);
        let len = d.norm();
        let tau = d / len;
        let (a, b) = (curve.nodes[e], curve.nodes[e + 1]);
        s += len * (dir[e].r + dir[e + 1].r) + (a.r + b.r) * tau.dot(dir[e + 1] - dir[e]);
    }
    Ok(T::PI() * s)
}

fn curve_volume_variation<T: Real>(curve: &PhaseCurve<T>, dir: &[Vec2<T>]) -> T {
    let six = T::lit(6.0);
    let two = T::lit(2.0);
    let mut s = T::zero();
    for e in 0..curve.elements() {
        let (a, b) = (curve.nodes[e], curve.nodes[e + 1]);
        let dp = (b - a).perp();
        let (ea, eb) = (dir[e], dir[e + 1]);
        let m = (ea * (two * a.r + b.r) + eb * (a.r + two * b.r)) / six;
        s += dp.dot(m);
    }
    s
}

/// Directional derivative of [`enclosed_volume`] along `dirs` (one nodal field
/// per phase, equal at the junction).
pub fn first_variation_volume<T: Real>(
    mesh: &TwoPhaseMesh<T>,
    dirs: [&[Vec2<T>]; 2],
) -> Result<T> {
    for i in 0..2 {
        if dirs[i].len() != mesh.curves[i].nodes.len() {
            return Err(Error::ShapeMismatch(format!(
                "phase {} direction has {} nodes, curve has {}",
                i + 1,
                dirs[i].len(),
                mesh.curves[i].nodes.len()
            )));
        }
    }
    let s = curve_volume_variation(&mesh.curves[0], dirs[0])
        + curve_volume_variation(&mesh.curves[1], dirs[1]);
    Ok(-T::two_pi() * s)
}

/// Reduced volume `6 √π V / (A_1 + A_2)^{3/2}`.
pub fn reduced_volume<T: Real>(total_area: T, volume: T) -> T {
    T::lit(6.0) * T::PI().sqrt() * volume / total_area.powf(T::lit(1.5))
}

/// Ratio of the longest to the shortest element of a curve.
pub fn element_ratio<T: Real>(curve: &PhaseCurve<T>) -> T {
    let l = curve.edge_lengths();
    let mx = l.iter().copied().fold(T::zero(), T::max);
    let mn = l.iter().copied().fold(T::infinity(), T::min);
    mx / mn
}

/// Discrete conormals `𝐦_1, 𝐦_2` at the junction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JunctionConormal<T> {
    pub m: [Vec2<T>; 2],
}

/// Reconstructs the junction conormals after a step.
///
/// `geom_old` holds the frames at `X^m`, `mesh_new` is `X^{m+1}`, `kappa` is
/// `κ^{m+1}` and `beta` is `β^{m+1}` (zero when the scheme carries no β).
/// The phase 1 formula mirrors the phase 2 one, using the last element of
/// phase 1 with the opposite sign of the basis-function derivative.
pub fn junction_conormal<T: Real>(
    mesh_old: &TwoPhaseMesh<T>,
    geom_old: &[CurveGeometry<T>; 2],
    kappa: &[Vec<T>; 2],
    beta: T,
    mesh_new: &TwoPhaseMesh<T>,
) -> JunctionConormal<T> {
    let half = T::lit(0.5);
    let j1 = mesh_old.curves[0].elements();

    let e1 = &geom_old[0].elements[j1 - 1];
    let d1_old = mesh_old.curves[0].edge(j1 - 1);
    let d1_new = mesh_new.curves[0].edge(j1 - 1);
    let m1 = geom_old[0].vertices[j1].omega * (e1.length * half * kappa[0][j1])
        + d1_old * (beta * half)
        + d1_new / e1.length;

    let e2 = &geom_old[1].elements[0];
    let d2_old = mesh_old.curves[1].edge(0);
    let d2_new = mesh_new.curves[1].edge(0);
    let m2 = geom_old[1].vertices[0].omega * (e2.length * half * kappa[1][0])
        + d2_old * (beta * half)
        - d2_new / e2.length;

    JunctionConormal { m: [m1, m2] }
}

/// Discrete energy
/// `π Σ_i (α_i [𝔎_i - κ̄_i]², X·e1 |X_ρ|)^h - 2π Σ_i α^G_i 𝐦_i·e1 + π ς Σ_i X_i(1/2)·e1`,
/// with the bending term evaluated on the old geometry.
pub fn discrete_energy<T: Real>(
    mesh_old: &TwoPhaseMesh<T>,
    geom_old: &[CurveGeometry<T>; 2],
    kappa: &[Vec<T>; 2],
    conormal: &JunctionConormal<T>,
    mesh_new: &TwoPhaseMesh<T>,
    params: &PhysicalParams<T>,
) -> Result<T> {
    let mut bending = T::zero();
    for i in 0..2 {
        let c = &mesh_old.curves[i];
        let k = mean_curvature_nodes(c, &geom_old[i].vertices, &kappa[i])?;
        let s: T = k
            .iter()
            .zip(&c.nodes)
            .zip(&geom_old[i].vertices)
            .map(|((&kk, p), vf)| {
                let d = kk - params.kbar[i];
                d * d * p.r * vf.weight
            })
            .sum();
        bending += params.alpha[i] * s;
    }
    let gauss: T = (0..2)
        .map(|i| params.alpha_g[i] * conormal.m[i].r)
        .sum();
    let line = params.varsigma * (mesh_new.curves[0].nodes[mesh_new.curves[0].elements()].r
        + mesh_new.curves[1].nodes[0].r);
    Ok(T::PI() * bending - T::two_pi() * gauss + T::PI() * line)
}

/// Per-step record of the monitored quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics<T> {
    pub t: T,
    pub energy: T,
    pub area: [T; 2],
    pub volume: T,
    pub reduced_volume: T,
    pub element_ratio: [T; 2],
    pub lambda_a: [T; 2],
    pub lambda_v: T,
    pub beta: T,
    pub newton_iters: usize,
    pub junction: Vec2<T>,
    /// Largest nodal speed `|δX| / Δt` of the step leading to this row.
    pub max_speed: T,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{mesh_geometry, smooth_curvature, Phase};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn v(r: f64, z: f64) -> Vec2<f64> {
        Vec2::new(r, z)
    }

    pub(crate) fn sphere(j: usize, radius: f64) -> TwoPhaseMesh<f64> {
        let pts = |from: f64, to: f64| -> Vec<Vec2<f64>> {
            (0..=j)
                .map(|k| {
                    let t = from + (to - from) * k as f64 / j as f64;
                    v(radius * t.cos(), radius * t.sin())
                })
                .collect()
        };
        let mut a = pts(PI / 2.0, 0.0);
        let mut b = pts(0.0, -PI / 2.0);
        a[0].r = 0.0;
        b[j].r = 0.0;
        b[0] = a[j];
        TwoPhaseMesh::new(a, b).unwrap()
    }

    /// Closed cylinder radius `r`, height `hgt`: top cap, side split at
    /// mid-height, bottom cap.
    fn cylinder(r: f64, hgt: f64) -> TwoPhaseMesh<f64> {
        let a = vec![v(0.0, hgt), v(r / 2.0, hgt), v(r, hgt), v(r, 3.0 * hgt / 4.0), v(r, hgt / 2.0)];
        let b = vec![v(r, hgt / 2.0), v(r, hgt / 4.0), v(r, 0.0), v(r / 2.0, 0.0), v(0.0, 0.0)];
        TwoPhaseMesh::new(a, b).unwrap()
    }

    #[test]
    fn unit_cylinder_lateral_area() {
        for j in [3, 5, 17] {
            let nodes: Vec<_> = (0..=j).map(|k| v(1.0, 1.0 - k as f64 / j as f64)).collect();
            let c = PhaseCurve::new(Phase::One, nodes).unwrap();
            assert_abs_diff_eq!(surface_area(&c), 2.0 * PI, epsilon = 1e-13);
        }
    }

    #[test]
    fn single_chord_area() {
        // Three collinear elements on the chord (0,1)->(1,0).
        let nodes: Vec<_> = (0..=3).map(|k| v(k as f64 / 3.0, 1.0 - k as f64 / 3.0)).collect();
        let c = PhaseCurve::new(Phase::One, nodes).unwrap();
        assert_abs_diff_eq!(surface_area(&c), PI * 2f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn sphere_area_and_volume() {
        let m = sphere(64, 1.0);
        let a = surface_area(&m.curves[0]) + surface_area(&m.curves[1]);
        assert!((a - 4.0 * PI).abs() <= 4e-2);
        assert!((enclosed_volume(&m) - 4.0 * PI / 3.0).abs() <= 2e-2);
        assert_abs_diff_eq!(
            surface_area(&m.curves[0]) / a,
            0.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn cylinder_volume_and_mirror() {
        let m = cylinder(0.7, 1.3);
        assert_abs_diff_eq!(enclosed_volume(&m), PI * 0.49 * 1.3, epsilon = 1e-13);
        let mirrored = m.map_nodes(|p| v(p.r, -p.z));
        assert_abs_diff_eq!(enclosed_volume(&mirrored), -enclosed_volume(&m), epsilon = 1e-13);
    }

    #[test]
    fn homogeneity_of_variations() {
        let m = sphere(16, 1.3);
        let dirs = [m.curves[0].nodes.clone(), m.curves[1].nodes.clone()];
        let da = first_variation_area(&m.curves[0], &dirs[0]).unwrap();
        assert_abs_diff_eq!(da, 2.0 * surface_area(&m.curves[0]), epsilon = 1e-12);
        let dv = first_variation_volume(&m, [&dirs[0], &dirs[1]]).unwrap();
        assert_abs_diff_eq!(dv, 3.0 * enclosed_volume(&m), epsilon = 1e-12);
    }

    #[test]
    fn vertical_sliding_keeps_area() {
        let nodes: Vec<_> = (0..=6).map(|k| v(2.0, 3.0 - k as f64 * 0.5)).collect();
        let c = PhaseCurve::new(Phase::One, nodes).unwrap();
        let dir = vec![v(0.0, 1.0); 7];
        assert_abs_diff_eq!(first_variation_area(&c, &dir).unwrap(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn sphere_energy() {
        let m = sphere(64, 1.0);
        let g = mesh_geometry(&m).unwrap();
        let k = smooth_curvature(&m).unwrap();
        let mut p = PhysicalParams::<f64>::default();
        let cn = junction_conormal(&m, &g, &k.kappa, 0.0, &m);
        let e = discrete_energy(&m, &g, &k.kappa, &cn, &m, &p).unwrap();
        assert!((8.0 * PI * 0.99..=8.0 * PI * 1.01).contains(&e), "E = {e}");

        p.varsigma = 0.02;
        let e2 = discrete_energy(&m, &g, &k.kappa, &cn, &m, &p).unwrap();
        assert_abs_diff_eq!(e2 - e, 2.0 * PI * 0.02, epsilon = 1e-13);

        p.alpha_g = [3.0, -1.5];
        let e3 = discrete_energy(&m, &g, &k.kappa, &cn, &m, &p).unwrap();
        assert_abs_diff_eq!(e3, e2, epsilon = 1e-2);
    }

    #[test]
    fn equatorial_conormals() {
        let m = sphere(48, 1.0);
        let g = mesh_geometry(&m).unwrap();
        let k = smooth_curvature(&m).unwrap();
        let cn = junction_conormal(&m, &g, &k.kappa, 0.0, &m);
        let h = m.max_edge();
        assert!((cn.m[0] - v(0.0, -1.0)).norm() < h);
        assert!((cn.m[1] - v(0.0, 1.0)).norm() < h);
    }

    #[test]
    fn flat_disk_conormal_in_plane() {
        // Upper disk at z = 0 out to r = 1, lower phase a hemisphere below.
        let j = 8;
        let a: Vec<_> = (0..=j).map(|k| v(k as f64 / j as f64, 0.0)).collect();
        let mut b: Vec<_> = (0..=j)
            .map(|k| {
                let t = -PI / 2.0 * k as f64 / j as f64;
                v(t.cos(), t.sin())
            })
            .collect();
        b[0] = a[j];
        b[j].r = 0.0;
        let m = TwoPhaseMesh::new(a, b).unwrap();
        let g = mesh_geometry(&m).unwrap();
        let k = crate::mesh::CurvatureState::zeros(&m);
        let cn = junction_conormal(&m, &g, &k.kappa, 0.0, &m);
        assert_abs_diff_eq!(cn.m[0].z, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn params_validation() {
        let mut p = PhysicalParams::<f64>::default();
        assert!(p.validate().unwrap().is_empty());
        p.alpha_g = [4.0, 0.0];
        assert_eq!(p.validate().unwrap().len(), 1);
        p.alpha[0] = 0.0;
        assert!(p.validate().is_err());
    }
}
