//! Minimal 2-vector in the meridian half plane, components `(r, z)`.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2<T> {
    pub r: T,
    pub z: T,
}

impl<T: Real> Vec2<T> {
    #[inline]
    pub fn new(r: T, z: T) -> Self {
        Self { r, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    #[inline]
    pub fn e1() -> Self {
        Self::new(T::one(), T::zero())
    }

    #[inline]
    pub fn e2() -> Self {
        Self::new(T::zero(), T::one())
    }

    /// Unit vector along axis `c` (0 = r, 1 = z).
    #[inline]
    pub fn unit(c: usize) -> Self {
        if c == 0 {
            Self::e1()
        } else {
            Self::e2()
        }
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.r * o.r + self.z * o.z
    }

    #[inline]
    pub fn norm(self) -> T {
        self.r.hypot(self.z)
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    /// Clockwise rotation by a right angle: `(a, b) -> (b, -a)`.
    #[inline]
    /// Unit vector in the same direction.
    pub fn normalized(self) -> Self {
        self / self.norm()
    }

    pub fn perp(self) -> Self {
        Self::new(self.z, -self.r)
    }

    /// 2D cross product `a.r * b.z - a.z * b.r`.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.r * o.z - self.z * o.r
    }

    #[inline]
    pub fn comp(self, c: usize) -> T {
        if c == 0 {
            self.r
        } else {
            self.z
        }
    }

    #[inline]
    pub fn comp_mut(&mut self, c: usize) -> &mut T {
        if c == 0 {
            &mut self.r
        } else {
            &mut self.z
        }
    }

    pub fn is_finite(self) -> bool {
        self.r.is_finite() && self.z.is_finite()
    }

    pub fn cast<U: Real>(self) -> Vec2<U> {
        Vec2::new(U::lit(self.r.to_f64_lossy()), U::lit(self.z.to_f64_lossy()))
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.r + o.r, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec2<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.r += o.r;
        self.z += o.z;
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.r - o.r, self.z - o.z)
    }
}

impl<T: Real> SubAssign for Vec2<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        self.r -= o.r;
        self.z -= o.z;
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.r, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.r * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.r / s, self.z / s)
    }
}
