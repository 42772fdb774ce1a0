//! Direct solvers: a banded LU with partial pivoting for the scheme matrix and
//! a small dense LU.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative pivot threshold for singularity detection.
pub const PIVOT_TOL: f64 = 1e-14;

fn pivot_tol<T: Real>() -> T {
    T::lit(PIVOT_TOL).max(T::epsilon() * T::lit(10.0))
}

/// Square matrix with `kl` sub- and `ku` super-diagonals. Every row keeps a
/// window of `2 kl + ku + 1` columns starting at `i - kl`, which leaves room
/// for the fill-in of row pivoting.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![T::zero(); n * width],
        }
    }

    /// Builds a band matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut kl = 0;
        let mut ku = 0;
        for &(i, j, _) in triplets {
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        let mut m = Self::zeros(n, kl, ku);
        for &(i, j, v) in triplets {
            m.add(i, j, v);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let lo = i as isize - self.kl as isize;
        let off = j as isize - lo;
        if off < 0 || off >= self.width as isize {
            None
        } else {
            Some(i * self.width + off as usize)
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i > j + self.kl || j > i + self.ku {
            return T::zero();
        }
        self.slot(i, j).map_or(T::zero(), |s| self.data[s])
    }

    /// Adds `v` at `(i, j)`. Panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(
            i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku,
            "entry ({i}, {j}) outside band ({}, {})",
            self.kl,
            self.ku
        );
        let s = self.idx(i, j);
        self.data[s] += v;
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.idx(i, j)] * x[j]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Largest absolute entry of each row.
    fn row_scales(&self) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).fold(T::zero(), |m, j| m.max(self.data[self.idx(i, j)].abs()))
            })
            .collect()
    }

    /// LU factorisation with row equilibration and partial pivoting.
    pub fn factor(&self) -> Result<BandLu<T>> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let scales = self.row_scales();
        let mut a = self.clone();
        for (i, &s) in scales.iter().enumerate() {
            if !(s > T::zero()) || !s.is_finite() {
                return Err(if s.is_finite() {
                    Error::SingularMatrix {
                        row: i,
                        pivot: 0.0,
                        threshold: PIVOT_TOL,
                    }
                } else {
                    Error::NonFiniteInput(format!("matrix row {i}"))
                });
            }
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(n - 1);
            for j in lo..=hi {
                let k = a.idx(i, j);
                a.data[k] /= s;
            }
        }
        let tol = pivot_tol::<T>();
        let mut piv = vec![0usize; n];
        let w = a.width;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a.data[a.idx(k, k)].abs();
            for i in k + 1..=last {
                let v = a.data[a.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tol) {
                return Err(Error::SingularMatrix {
                    row: k,
                    pivot: best.to_f64_lossy(),
                    threshold: tol.to_f64_lossy(),
                });
            }
            piv[k] = p;
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (s1, s2) = (a.idx(k, j), a.idx(p, j));
                    a.data.swap(s1, s2);
                }
            }
            let d = a.data[a.idx(k, k)];
            let krow = k * w;
            for i in k + 1..=last {
                let ik = a.idx(i, k);
                let l = a.data[ik] / d;
                a.data[ik] = l;
                if l == T::zero() {
                    continue;
                }
                let irow = i * w;
                let ioff = kl + k + 1 - i;
                let koff = kl + 1;
                for t in 0..(jmax - k) {
                    let u = a.data[krow + koff + t];
                    a.data[irow + ioff + t] -= l * u;
                }
            }
        }
        Ok(BandLu {
            lu: a,
            piv,
            scales,
        })
    }
}

/// Factors produced by [`BandMatrix::factor`].
#[derive(Clone, Debug)]
pub struct BandLu<T> {
    lu: BandMatrix<T>,
    piv: Vec<usize>,
    scales: Vec<T>,
}

impl<T: Real> BandLu<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let a = &self.lu;
        let n = a.n;
        let (kl, ku) = (a.kl, a.ku);
        let mut x: Vec<T> = b.iter().zip(&self.scales).map(|(&v, &s)| v / s).collect();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk == T::zero() {
                continue;
            }
            for i in k + 1..=(k + kl).min(n - 1) {
                x[i] -= a.data[a.idx(i, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            let jmax = (k + kl + ku).min(n - 1);
            let mut s = x[k];
            for j in k + 1..=jmax {
                s -= a.data[a.idx(k, j)] * x[j];
            }
            x[k] = s / a.data[a.idx(k, k)];
        }
        x
    }
}

/// Relative residual `‖A x - b‖_∞ / ‖b‖_∞` (absolute when `b = 0`).
pub fn relative_residual<T: Real>(a: &BandMatrix<T>, x: &[T], b: &[T]) -> T {
    let ax = a.matvec(x);
    let r = ax
        .iter()
        .zip(b)
        .fold(T::zero(), |m, (&u, &v)| m.max((u - v).abs()));
    let nb = b.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if nb > T::zero() {
        r / nb
    } else {
        r
    }
}

/// Solutions of a banded system for several right-hand sides.
#[derive(Clone, Debug)]
pub struct LinearSolution<T> {
    pub columns: Vec<Vec<T>>,
    /// Relative residual of each column.
    pub residuals: Vec<T>,
}

/// Factors `a` once and solves for every column of `rhs`.
pub fn linear_solve<T: Real>(a: &BandMatrix<T>, rhs: &[Vec<T>]) -> Result<LinearSolution<T>> {
    for b in rhs {
        if b.len() != a.dim() {
            return Err(Error::ShapeMismatch(format!(
                "right-hand side has length {}, matrix has dimension {}",
                b.len(),
                a.dim()
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("right-hand side".into()));
        }
    }
    let lu = a.factor()?;
    let columns: Vec<Vec<T>> = rhs.iter().map(|b| lu.solve(b)).collect();
    let residuals = columns
        .iter()
        .zip(rhs)
        .map(|(x, b)| relative_residual(a, x, b))
        .collect();
    Ok(LinearSolution { columns, residuals })
}

/// Dense LU with partial pivoting, for small systems.
pub fn dense_solve<T: Real>(a: &[Vec<T>], b: &[T]) -> Result<Vec<T>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::ShapeMismatch(format!("dense system of size {n}")));
    }
    let mut m: Vec<Vec<T>> = a.to_vec();
    let mut x = b.to_vec();
    let scale = m
        .iter()
        .flatten()
        .fold(T::zero(), |s, v| s.max(v.abs()));
    let tol = pivot_tol::<T>() * scale;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().partial_cmp(&m[j][k].abs()).unwrap())
            .unwrap_or(k);
        if !(m[p][k].abs() > tol) {
            return Err(Error::SingularMatrix {
                row: k,
                pivot: m[p][k].abs().to_f64_lossy(),
                threshold: tol.to_f64_lossy(),
            });
        }
        m.swap(k, p);
        x.swap(k, p);
        for i in k + 1..n {
            let l = m[i][k] / m[k][k];
            if l == T::zero() {
                continue;
            }
            for j in k..n {
                let u = m[k][j];
                m[i][j] -= l * u;
            }
            let xk = x[k];
            x[i] -= l * xk;
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s -= m[k][j] * x[j];
        }
        x[k] = s / m[k][k];
    }
    Ok(x)
}
