//! Planar points and scalar fields on the cross-section.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, s)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

/// Step used by the default finite-difference gradient.
pub const FD_STEP: f64 = 1e-7;

/// A scalar field on the plane, possibly defined only on part of it.
pub trait PlanarField {
    fn value(&self, p: Point2) -> Option<f64>;

    fn gradient(&self, p: Point2) -> Option<[f64; 2]> {
        let h = FD_STEP * (1.0 + p.norm());
        let gx = (self.value(p + Point2::new(h, 0.0))? - self.value(p - Point2::new(h, 0.0))?)
            / (2.0 * h);
        let gy = (self.value(p + Point2::new(0.0, h))? - self.value(p - Point2::new(0.0, h))?)
            / (2.0 * h);
        Some([gx, gy])
    }
}

impl<T: PlanarField + ?Sized> PlanarField for &T {
    fn value(&self, p: Point2) -> Option<f64> {
        (**self).value(p)
    }
    fn gradient(&self, p: Point2) -> Option<[f64; 2]> {
        (**self).gradient(p)
    }
}

/// Closure-backed field; gradients by finite differences.
pub struct FnField<F>(pub F);

impl<F: Fn(Point2) -> Option<f64>> PlanarField for FnField<F> {
    fn value(&self, p: Point2) -> Option<f64> {
        (self.0)(p)
    }
}

/// Closure-backed field with an analytic gradient.
pub struct AnalyticField<F, G> {
    pub value: F,
    pub gradient: G,
}

impl<F, G> PlanarField for AnalyticField<F, G>
where
    F: Fn(Point2) -> f64,
    G: Fn(Point2) -> [f64; 2],
{
    fn value(&self, p: Point2) -> Option<f64> {
        Some((self.value)(p))
    }
    fn gradient(&self, p: Point2) -> Option<[f64; 2]> {
        Some((self.gradient)(p))
    }
}

/// `λ (X·ν − offset)⁺` with `ν` a unit vector pointing into the positive set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub lambda: f64,
    pub normal: Point2,
    pub offset: f64,
}

impl HalfPlane {
    pub fn new(lambda: f64, normal_angle: f64) -> Self {
        Self {
            lambda,
            normal: Point2::from_angle(normal_angle),
            offset: 0.0,
        }
    }
}

impl PlanarField for HalfPlane {
    fn value(&self, p: Point2) -> Option<f64> {
        Some(self.lambda * (p.dot(self.normal) - self.offset).max(0.0))
    }

    fn gradient(&self, p: Point2) -> Option<[f64; 2]> {
        if p.dot(self.normal) - self.offset > 0.0 {
            Some([self.lambda * self.normal.x, self.lambda * self.normal.y])
        } else {
            Some([0.0, 0.0])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_gradient_of_linear_field() {
        let f = FnField(|p: Point2| Some(3.0 * p.x - 2.0 * p.y + 1.0));
        let g = f.gradient(Point2::new(0.4, -0.2)).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-7 && (g[1] + 2.0).abs() < 1e-7);
    }

    #[test]
    fn half_plane_values() {
        let hp = HalfPlane::new(2.0, 0.0);
        assert_eq!(hp.value(Point2::new(0.5, 7.0)), Some(1.0));
        assert_eq!(hp.value(Point2::new(-0.5, 7.0)), Some(0.0));
        assert_eq!(hp.gradient(Point2::new(0.5, 0.0)), Some([2.0, 0.0]));
    }
}
