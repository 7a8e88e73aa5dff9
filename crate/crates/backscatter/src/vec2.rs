//! Plain 2D vectors/points.
//!
//! Everything in this crate lives in the plane, so a tiny `Copy` vector type
//! keeps call sites free of linear-algebra machinery.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A 2D vector, also used for points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector at angle `theta` (radians, counterclockwise from +x).
    #[inline]
    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// 2D cross product (z-component of the 3D cross product).
    #[inline]
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Angle in radians via `atan2`, in (−π, π].
    #[inline]
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Rotation by +90° (counterclockwise).
    #[inline]
    pub fn rot90_ccw(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// Rotation by −90° (clockwise). For a counterclockwise polygon this
    /// turns an edge direction into the outward normal direction.
    #[inline]
    pub fn rot90_cw(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    /// Unit vector with the same direction, or `None` for (near-)zero input.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        if n <= f64::EPSILON {
            None
        } else {
            Some(self / n)
        }
    }

    /// Euclidean reflection across the line through the origin with unit
    /// normal `unit_normal`: v − 2(v·ν)ν.
    #[inline]
    pub fn reflect(self, unit_normal: Vec2) -> Vec2 {
        self - unit_normal * (2.0 * self.dot(unit_normal))
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Angle between two vectors in [0, π].
    pub fn angle_between(self, other: Vec2) -> f64 {
        let denom = self.norm() * other.norm();
        if denom == 0.0 {
            return 0.0;
        }
        (self.dot(other) / denom).clamp(-1.0, 1.0).acos()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn div(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x / rhs, self.y / rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_across_vertical_mirror() {
        let d = Vec2::new(1.0, 0.0);
        let nu = Vec2::new(-1.0, 0.0);
        let r = d.reflect(nu);
        assert!((r.x + 1.0).abs() < 1e-15 && r.y.abs() < 1e-15);
    }

    #[test]
    fn reflect_preserves_norm() {
        let v = Vec2::new(0.3, -1.7);
        let nu = Vec2::new(2.0, 1.0).normalized().unwrap();
        assert!((v.reflect(nu).norm() - v.norm()).abs() < 1e-14);
    }

    #[test]
    fn rotations_are_perpendicular_and_inverse() {
        let v = Vec2::new(1.5, -0.5);
        assert_eq!(v.rot90_cw().dot(v), 0.0);
        assert_eq!(v.rot90_ccw().rot90_cw(), v);
    }
}
