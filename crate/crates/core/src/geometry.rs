//! Planar vector algebra.
//!
//! All quantities in this crate are dimensionless: the pursuer moves at unit
//! speed, which fixes the unit of velocity, and lengths and times are measured
//! in whatever unit makes that true.
//!
//! The perpendicular operator is fixed to the counter-clockwise quarter turn,
//! `(x, y) -> (-y, x)`. The signs of the transverse relative velocity and of
//! every steering law depend on it.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("cannot normalize a zero-length vector")]
    ZeroVector,
}

/// A vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarVector {
    pub x: f64,
    pub y: f64,
}

impl PlanarVector {
    pub const ZERO: PlanarVector = PlanarVector { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `angle` radians from the +x axis.
    #[inline]
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c, s)
    }

    /// Counter-clockwise rotation by a quarter turn.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    #[inline]
    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product, `self.x * other.y - self.y * other.x`.
    #[inline]
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    /// `self / |self|`, or [`GeometryError::ZeroVector`] when the norm is zero.
    pub fn unit(self) -> Result<Self, GeometryError> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(GeometryError::ZeroVector);
        }
        Ok(Self::new(self.x / n, self.y / n))
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Angle from the +x axis in `(-pi, pi]`.
    #[inline]
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

/// Free-function form of [`PlanarVector::perp`].
#[inline]
pub fn perp(v: PlanarVector) -> PlanarVector {
    v.perp()
}

#[inline]
pub fn dot(a: PlanarVector, b: PlanarVector) -> f64 {
    a.dot(b)
}

#[inline]
pub fn norm(v: PlanarVector) -> f64 {
    v.norm()
}

#[inline]
pub fn unit(v: PlanarVector) -> Result<PlanarVector, GeometryError> {
    v.unit()
}

impl Add for PlanarVector {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for PlanarVector {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for PlanarVector {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for PlanarVector {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl Mul<f64> for PlanarVector {
    type Output = Self;
    #[inline]
    fn mul(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

impl Mul<PlanarVector> for f64 {
    type Output = PlanarVector;
    #[inline]
    fn mul(self, v: PlanarVector) -> PlanarVector {
        v * self
    }
}
