//! Initial generating curves.

use crate::error::{Error, Result};
use crate::functionals::{enclosed_volume, reduced_volume, surface_area};
use crate::mesh::TwoPhaseMesh;
use crate::scalar::{from_usize, Real};
use crate::vec2::Vec2;

fn on_axis<T: Real>(mut p: Vec2<T>) -> Vec2<T> {
    p.r = T::zero();
    p
}

fn check_counts(j1: usize, j2: usize) -> Result<()> {
    if j1 < 3 || j2 < 3 {
        return Err(Error::InvalidParameter(format!(
            "each phase needs at least 3 elements, got ({j1}, {j2})"
        )));
    }
    Ok(())
}

/// Joins two node lists into a mesh, copying the junction node of phase 1 into
/// phase 2 and putting the poles exactly on the axis.
fn assemble_mesh<T: Real>(mut a: Vec<Vec2<T>>, mut b: Vec<Vec2<T>>) -> Result<TwoPhaseMesh<T>> {
    a[0] = on_axis(a[0]);
    let last = b.len() - 1;
    b[last] = on_axis(b[last]);
    b[0] = a[a.len() - 1];
    TwoPhaseMesh::new(a, b)
}

/// Perturbed unit sphere
/// `X(q) = (cos φ(q), sin φ(q))`, `φ(q) = (1/2 - q)π + 0.1 cos((1/2 - 2q)π)`,
/// sampled at `q_{1,j} = j h_1` and `q_{2,j} = 1/2 + j h_2`.
pub fn perturbed_sphere<T: Real>(j1: usize, j2: usize) -> Result<TwoPhaseMesh<T>> {
    check_counts(j1, j2)?;
    let half = T::lit(0.5);
    let point = |q: T| {
        let phi = (half - q) * T::PI() + T::lit(0.1) * ((half - q - q) * T::PI()).cos();
        Vec2::new(phi.cos(), phi.sin())
    };
    let a = (0..=j1)
        .map(|j| point(from_usize::<T>(j) / from_usize::<T>(2 * j1)))
        .collect();
    let b = (0..=j2)
        .map(|j| point(half + from_usize::<T>(j) / from_usize::<T>(2 * j2)))
        .collect();
    assemble_mesh(a, b)
}

/// Sphere of radius `radius` with uniform polar-angle spacing in each phase,
/// split at the latitude where phase 1 holds `area_ratio` of the total area.
pub fn split_sphere<T: Real>(j1: usize, j2: usize, radius: T, area_ratio: T) -> Result<TwoPhaseMesh<T>> {
    check_counts(j1, j2)?;
    if !(area_ratio > T::zero() && area_ratio < T::one()) {
        return Err(Error::Infeasible(format!("area ratio {area_ratio} outside (0, 1)")));
    }
    if !(radius > T::zero()) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let theta0 = (T::one() - area_ratio - area_ratio).acos();
    let point = |th: T| Vec2::new(radius * th.sin(), radius * th.cos());
    let a = (0..=j1)
        .map(|j| point(theta0 * from_usize::<T>(j) / from_usize::<T>(j1)))
        .collect();
    let b = (0..=j2)
        .map(|j| point(theta0 + (T::PI() - theta0) * from_usize::<T>(j) / from_usize::<T>(j2)))
        .collect();
    assemble_mesh(a, b)
}

/// Two quarter circles of radius `radius` meeting at the equator.
pub fn quarter_pair<T: Real>(j1: usize, j2: usize, radius: T) -> Result<TwoPhaseMesh<T>> {
    split_sphere(j1, j2, radius, T::lit(0.5))
}

/// Closed cylinder of the given radius and height: phase 1 is the top cap and
/// the upper half of the side, phase 2 the rest. Corners are nodes.
pub fn capped_cylinder<T: Real>(j1: usize, j2: usize, radius: T, height: T) -> Result<TwoPhaseMesh<T>> {
    check_counts(j1, j2)?;
    if !(radius > T::zero() && height > T::zero()) {
        return Err(Error::InvalidParameter("cylinder dimensions must be positive".into()));
    }
    let half_h = height * T::lit(0.5);
    let split = |j: usize| -> (usize, usize) {
        let frac = radius / (radius + half_h);
        let n_cap = (frac * from_usize::<T>(j)).round().to_usize().unwrap_or(1).clamp(1, j - 1);
        (n_cap, j - n_cap)
    };
    let seg = |from: Vec2<T>, to: Vec2<T>, n: usize, out: &mut Vec<Vec2<T>>| {
        for k in 0..n {
            let s = from_usize::<T>(k) / from_usize::<T>(n);
            out.push(from + (to - from) * s);
        }
    };
    let top = Vec2::new(T::zero(), height);
    let corner_top = Vec2::new(radius, height);
    let mid = Vec2::new(radius, half_h);
    let corner_bot = Vec2::new(radius, T::zero());
    let bottom = Vec2::new(T::zero(), T::zero());

    let (c1, s1) = split(j1);
    let mut a = Vec::with_capacity(j1 + 1);
    seg(top, corner_top, c1, &mut a);
    seg(corner_top, mid, s1, &mut a);
    a.push(mid);

    let (c2, s2) = split(j2);
    let mut b = Vec::with_capacity(j2 + 1);
    seg(mid, corner_bot, s2, &mut b);
    seg(corner_bot, bottom, c2, &mut b);
    b.push(bottom);
    assemble_mesh(a, b)
}

fn spheroid_with_split<T: Real>(j1: usize, j2: usize, aspect: T, theta0: T) -> Result<TwoPhaseMesh<T>> {
    let point = |th: T| Vec2::new(th.sin(), aspect * th.cos());
    let a = (0..=j1)
        .map(|j| point(theta0 * from_usize::<T>(j) / from_usize::<T>(j1)))
        .collect();
    let b = (0..=j2)
        .map(|j| point(theta0 + (T::PI() - theta0) * from_usize::<T>(j) / from_usize::<T>(j2)))
        .collect();
    assemble_mesh(a, b)
}

fn bisect<T: Real>(mut lo: T, mut hi: T, f: impl Fn(T) -> Result<T>) -> Result<T> {
    let flo = f(lo)?;
    let fhi = f(hi)?;
    if flo * fhi > T::zero() {
        return Err(Error::RootNotBracketed(format!("no sign change on [{lo}, {hi}]")));
    }
    let rising = fhi > flo;
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if (fm > T::zero()) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}

/// Prolate spheroid with reduced volume `v_r`, phase 1 holding `area_ratio` of
/// the discrete surface area, scaled to total area 4π.
pub fn spheroid<T: Real>(j1: usize, j2: usize, v_r: T, area_ratio: T) -> Result<TwoPhaseMesh<T>> {
    check_counts(j1, j2)?;
    if !(v_r > T::zero() && v_r < T::one()) {
        return Err(Error::Infeasible(format!("reduced volume {v_r} outside (0, 1)")));
    }
    if !(area_ratio > T::zero() && area_ratio < T::one()) {
        return Err(Error::Infeasible(format!("area ratio {area_ratio} outside (0, 1)")));
    }
    let split_for = |aspect: T| -> Result<T> {
        bisect(T::lit(1e-3), T::PI() - T::lit(1e-3), |th| {
            let m = spheroid_with_split(j1, j2, aspect, th)?;
            let a1 = surface_area(&m.curves[0]);
            let a2 = surface_area(&m.curves[1]);
            Ok(a1 / (a1 + a2) - area_ratio)
        })
    };
    let vr_of = |aspect: T| -> Result<T> {
        let m = spheroid_with_split(j1, j2, aspect, split_for(aspect)?)?;
        let a = surface_area(&m.curves[0]) + surface_area(&m.curves[1]);
        Ok(reduced_volume(a, enclosed_volume(&m)))
    };
    let target = |aspect: T| -> Result<T> { Ok(vr_of(aspect)? - v_r) };
    let aspect = bisect(T::one(), T::lit(50.0), target)?;
    let mesh = spheroid_with_split(j1, j2, aspect, split_for(aspect)?)?;
    let a = surface_area(&mesh.curves[0]) + surface_area(&mesh.curves[1]);
    let s = (T::lit(4.0) * T::PI() / a).sqrt();
    Ok(mesh.scaled(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn perturbed_sphere_endpoints() {
        let m = perturbed_sphere::<f64>(17, 9).unwrap();
        assert_eq!(m.curves[0].nodes[0], Vec2::new(0.0, 1.0));
        let j = m.junction();
        assert_abs_diff_eq!(j.r, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j.z, 0.0, epsilon = 1e-15);
        assert_eq!(m.curves[1].nodes[9].r, 0.0);
        assert_abs_diff_eq!(m.curves[1].nodes[9].z, -1.0, epsilon = 1e-15);
        // Node 1 of phase 1: q = 1/34.
        let q = 1.0 / 34.0;
        let phi = (0.5 - q) * std::f64::consts::PI + 0.1 * ((0.5 - 2.0 * q) * std::f64::consts::PI).cos();
        assert_abs_diff_eq!(m.curves[0].nodes[1].r, phi.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(m.curves[0].nodes[1].z, phi.sin(), epsilon = 1e-15);
    }

    #[test]
    fn initial_mesh_sizes() {
        // Largest initial edge for the three coarsest convergence meshes.
        for (j, h) in [((16, 8), 2.3408e-1), ((32, 16), 1.1762e-1), ((64, 32), 5.8881e-2)] {
            let m = perturbed_sphere::<f64>(j.0, j.1).unwrap();
            assert!((m.max_edge() - h).abs() < 1e-5, "{j:?}: {}", m.max_edge());
        }
    }

    #[test]
    fn equatorial_split_halves_area() {
        let m = split_sphere::<f64>(12, 12, 1.0, 0.5).unwrap();
        let a1 = surface_area(&m.curves[0]);
        let a2 = surface_area(&m.curves[1]);
        assert_abs_diff_eq!(a1 / (a1 + a2), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn cylinder_volume() {
        let m = capped_cylinder::<f64>(9, 7, 0.8, 2.0).unwrap();
        assert_abs_diff_eq!(enclosed_volume(&m), std::f64::consts::PI * 0.64 * 2.0, epsilon = 1e-12);
        assert!(crate::assumptions::validate_assumptions(&m, false).all_passed());
    }

    #[test]
    fn spheroid_hits_reduced_volume() {
        let m = spheroid::<f64>(32, 32, 0.9, 0.3).unwrap();
        let a1 = surface_area(&m.curves[0]);
        let a2 = surface_area(&m.curves[1]);
        let vr = reduced_volume(a1 + a2, enclosed_volume(&m));
        assert!((vr - 0.9).abs() < 1e-3);
        assert_abs_diff_eq!(a1 / (a1 + a2), 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(a1 + a2, 4.0 * std::f64::consts::PI, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_requests() {
        assert!(matches!(spheroid::<f64>(8, 8, 1.2, 0.5), Err(Error::Infeasible(_))));
        assert!(matches!(split_sphere::<f64>(8, 8, 1.0, 1.5), Err(Error::Infeasible(_))));
    }
}
