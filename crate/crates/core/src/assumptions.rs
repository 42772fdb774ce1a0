//! Mesh validity conditions required for the scheme to be well posed.

use std::fmt;

use crate::error::{Error, Result};
use crate::mesh::{vertex_normals, TwoPhaseMesh, DISTINCTNESS_TOL};
use crate::scalar::Real;
use crate::vec2::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Assumption {
    /// Interior and junction nodes have `r > 0`.
    InteriorPositivity,
    /// Consecutive nodes are distinct.
    NodeDistinctness,
    /// Next-nearest nodes are distinct, so that every averaged normal is nonzero.
    NextNearestDistinctness,
    /// C¹ only: the two nodes adjacent to the junction are distinct.
    JunctionNeighbours,
    /// C¹ only: the averaged normals of one phase (junction included, pole
    /// excluded) span the plane.
    NormalSpan,
}

impl Assumption {
    pub fn name(self) -> &'static str {
        match self {
            Assumption::InteriorPositivity => "interior positivity",
            Assumption::NodeDistinctness => "node distinctness",
            Assumption::NextNearestDistinctness => "next-nearest node distinctness",
            Assumption::JunctionNeighbours => "distinct junction neighbours",
            Assumption::NormalSpan => "normal span",
        }
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionCheck {
    pub assumption: Assumption,
    pub passed: bool,
    /// First offending location, if any.
    pub location: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn get(&self, a: Assumption) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.assumption == a)
    }

    /// Converts the first failure into [`Error::AssumptionViolated`].
    pub fn into_result(self) -> Result<()> {
        match self.first_failure() {
            None => Ok(()),
            Some(c) => Err(Error::AssumptionViolated {
                assumption: c.assumption,
                location: c.location.clone().unwrap_or_default(),
            }),
        }
    }

    fn push(&mut self, assumption: Assumption, failure: Option<String>) {
        self.checks.push(AssumptionCheck {
            assumption,
            passed: failure.is_none(),
            location: failure,
        });
    }
}

fn node_label(phase: usize, j: usize) -> String {
    format!("phase {} node {}", phase + 1, j)
}

/// Checks the conditions on `mesh` for a C⁰ (`c1 == false`) or C¹ junction.
pub fn validate_assumptions<T: Real>(mesh: &TwoPhaseMesh<T>, c1: bool) -> AssumptionReport {
    let mut report = AssumptionReport::default();
    let tol = T::lit(DISTINCTNESS_TOL) * mesh.diameter().max(T::min_positive_value());

    let mut positivity = None;
    'outer: for (i, c) in mesh.curves.iter().enumerate() {
        for (j, p) in c.nodes.iter().enumerate() {
            if !c.is_pole(j) && !(p.r > T::zero()) {
                positivity = Some(node_label(i, j));
                break 'outer;
            }
        }
    }
    report.push(Assumption::InteriorPositivity, positivity);

    let mut distinct = None;
    'outer: for (i, c) in mesh.curves.iter().enumerate() {
        for e in 0..c.elements() {
            if !(c.edge(e).norm() > tol) {
                distinct = Some(format!("phase {} element {}", i + 1, e + 1));
                break 'outer;
            }
        }
    }
    report.push(Assumption::NodeDistinctness, distinct);

    let mut next = None;
    'outer: for (i, c) in mesh.curves.iter().enumerate() {
        for j in 1..c.elements() {
            if !((c.nodes[j + 1] - c.nodes[j - 1]).norm() > tol) {
                next = Some(node_label(i, j));
                break 'outer;
            }
        }
    }
    report.push(Assumption::NextNearestDistinctness, next);

    if c1 {
        let j1 = mesh.curves[0].elements();
        let a = mesh.curves[0].nodes[j1 - 1];
        let b = mesh.curves[1].nodes[1];
        let fail = if (a - b).norm() > tol {
            None
        } else {
            Some(format!("{} and {}", node_label(0, j1 - 1), node_label(1, 1)))
        };
        report.push(Assumption::JunctionNeighbours, fail);

        let span = if report.get(Assumption::NodeDistinctness).is_some_and(|c| c.passed)
            && report
                .get(Assumption::NextNearestDistinctness)
                .is_some_and(|c| c.passed)
        {
            let spans = |i: usize| -> bool {
                let c = &mesh.curves[i];
                let Ok(vf) = vertex_normals(c) else {
                    return false;
                };
                let vs: Vec<Vec2<T>> = (0..c.nodes.len())
                    .filter(|&j| !c.is_pole(j))
                    .map(|j| vf[j].v)
                    .collect();
                has_rank_two(&vs)
            };
            if spans(0) || spans(1) {
                None
            } else {
                Some("averaged normals of both phases are parallel".to_string())
            }
        } else {
            Some("normals undefined".to_string())
        };
        report.push(Assumption::NormalSpan, span);
    }
    report
}

fn has_rank_two<T: Real>(vs: &[Vec2<T>]) -> bool {
    let Some(first) = vs.first() else {
        return false;
    };
    let tol = T::lit(DISTINCTNESS_TOL).max(T::epsilon() * T::lit(16.0));
    vs.iter().any(|w| first.cross(*w).abs() > tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(r: f64, z: f64) -> Vec2<f64> {
        Vec2::new(r, z)
    }

    fn sphere(j: usize) -> TwoPhaseMesh<f64> {
        let pts = |from: f64, to: f64| -> Vec<Vec2<f64>> {
            (0..=j)
                .map(|k| {
                    let t = from + (to - from) * k as f64 / j as f64;
                    v(t.cos(), t.sin())
                })
                .collect()
        };
        let mut a = pts(std::f64::consts::FRAC_PI_2, 0.0);
        let mut b = pts(0.0, -std::f64::consts::FRAC_PI_2);
        a[0].r = 0.0;
        b[j].r = 0.0;
        b[0] = a[j];
        TwoPhaseMesh::new(a, b).unwrap()
    }

    #[test]
    fn sphere_passes_everything() {
        let r = validate_assumptions(&sphere(8), true);
        assert!(r.all_passed(), "{r:?}");
        assert_eq!(r.checks.len(), 5);
        assert_eq!(validate_assumptions(&sphere(8), false).checks.len(), 3);
    }

    #[test]
    fn interior_axis_node_fails_positivity() {
        let mut m = sphere(8);
        m.curves[0].nodes[3].r = 0.0;
        let r = validate_assumptions(&m, false);
        let c = r.first_failure().unwrap();
        assert_eq!(c.assumption, Assumption::InteriorPositivity);
        assert_eq!(c.location.as_deref(), Some("phase 1 node 3"));
    }

    #[test]
    fn folded_node_fails_next_nearest() {
        let mut m = sphere(8);
        m.curves[1].nodes[4] = m.curves[1].nodes[2];
        let r = validate_assumptions(&m, false);
        assert_eq!(
            r.first_failure().unwrap().assumption,
            Assumption::NextNearestDistinctness
        );
    }

    #[test]
    fn straight_phases_fail_span() {
        // Double cone: each phase is one straight segment.
        let a: Vec<_> = (0..=4).map(|k| v(k as f64 / 4.0, 1.0 - k as f64 / 4.0)).collect();
        let b: Vec<_> = (0..=4).map(|k| v(1.0 - k as f64 / 4.0, -(k as f64) / 4.0)).collect();
        let m = TwoPhaseMesh::new(a, b).unwrap();
        let r = validate_assumptions(&m, true);
        assert!(!r.get(Assumption::NormalSpan).unwrap().passed);
        let err = r.into_result().unwrap_err();
        assert!(matches!(
            err,
            Error::AssumptionViolated {
                assumption: Assumption::NormalSpan,
                ..
            }
        ));
    }

    #[test]
    fn cusp_fails_junction_neighbours() {
        let mut m = sphere(6);
        let p = m.curves[0].nodes[5];
        m.curves[1].nodes[1] = p;
        let r = validate_assumptions(&m, true);
        assert!(!r.get(Assumption::JunctionNeighbours).unwrap().passed);
        assert!(validate_assumptions(&m, false).all_passed());
    }
}
