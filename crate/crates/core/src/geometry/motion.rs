//! Time-dependent deformations `psi_t` of the scanned object.

use std::f64::consts::TAU;
use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{rot90, rotation, rotation_derivative, Mat2, Point, Vector};
use crate::error::{Error, Result};

/// A smooth family of orientation-preserving diffeomorphisms of the plane.
///
/// `forward` maps material coordinates `z` to spatial coordinates
/// `x = psi_t(z)`. Only `forward`, `inverse`, `jacobian` and `dt_forward`
/// are required; the inverse-side derivatives have generic fallbacks.
pub trait Motion: Send + Sync + Debug {
    fn forward(&self, t: f64, z: &Point) -> Point;
    fn inverse(&self, t: f64, x: &Point) -> Point;

    /// Spatial Jacobian matrix `D psi_t(z)`.
    fn jacobian(&self, t: f64, z: &Point) -> Mat2;

    /// `d/dt psi_t(z)` at fixed `z`.
    fn dt_forward(&self, t: f64, z: &Point) -> Vector;

    fn jac_det(&self, t: f64, z: &Point) -> f64 {
        self.jacobian(t, z).determinant()
    }

    /// `d/dt psi_t^{-1}(x)` at fixed `x`.
    fn dt_inverse(&self, t: f64, x: &Point) -> Vector {
        let z = self.inverse(t, x);
        let jac = self.jacobian(t, &z);
        -(jac.try_inverse().unwrap_or_else(Mat2::zeros) * self.dt_forward(t, &z))
    }

    /// `D(psi_t^{-1})(x)`.
    fn inverse_jacobian(&self, t: f64, x: &Point) -> Mat2 {
        let z = self.inverse(t, x);
        self.jacobian(t, &z)
            .try_inverse()
            .unwrap_or_else(Mat2::zeros)
    }

    /// `psi_t^{-1}(x)` together with `D(psi_t^{-1})(x)`, sharing the inversion.
    fn inverse_with_jacobian(&self, t: f64, x: &Point) -> (Point, Mat2) {
        let z = self.inverse(t, x);
        let jac = self.jacobian(t, &z);
        (z, jac.try_inverse().unwrap_or_else(Mat2::zeros))
    }

    /// `d/dt D(psi_t^{-1})(x)` when available in closed form.
    fn dt_inverse_jacobian(&self, _t: f64, _x: &Point) -> Option<Mat2> {
        None
    }

    /// Model-specific motion scale.
    fn amplitude(&self) -> f64;

    /// Radius outside of which the motion is the identity, if any.
    fn support_radius(&self) -> Option<f64> {
        None
    }

    /// Period in `t` of the induced phase function, if it has one.
    fn period(&self) -> Option<f64> {
        Some(TAU)
    }

    fn name(&self) -> &'static str;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Motion for Identity {
    fn forward(&self, _t: f64, z: &Point) -> Point {
        *z
    }
    fn inverse(&self, _t: f64, x: &Point) -> Point {
        *x
    }
    fn jacobian(&self, _t: f64, _z: &Point) -> Mat2 {
        Mat2::identity()
    }
    fn dt_forward(&self, _t: f64, _z: &Point) -> Vector {
        Vector::zeros()
    }
    fn dt_inverse(&self, _t: f64, _x: &Point) -> Vector {
        Vector::zeros()
    }
    fn inverse_jacobian(&self, _t: f64, _x: &Point) -> Mat2 {
        Mat2::identity()
    }
    fn dt_inverse_jacobian(&self, _t: f64, _x: &Point) -> Option<Mat2> {
        Some(Mat2::zeros())
    }
    fn amplitude(&self) -> f64 {
        0.0
    }
    fn support_radius(&self) -> Option<f64> {
        Some(0.0)
    }
    fn name(&self) -> &'static str {
        "identity"
    }
}

/// Rigid rotation about the origin, `psi_t = R(rate * t)`.
///
/// `rate = -1` turns the object with the scanner, so every projection sees
/// the same family of parallel lines.
#[derive(Debug, Clone, Copy)]
pub struct Rotation {
    pub rate: f64,
}

impl Rotation {
    pub fn new(rate: f64) -> Self {
        Rotation { rate }
    }

    pub fn synchronized() -> Self {
        Rotation { rate: -1.0 }
    }
}

impl Motion for Rotation {
    fn forward(&self, t: f64, z: &Point) -> Point {
        rotation(self.rate * t) * z
    }
    fn inverse(&self, t: f64, x: &Point) -> Point {
        rotation(-self.rate * t) * x
    }
    fn jacobian(&self, t: f64, _z: &Point) -> Mat2 {
        rotation(self.rate * t)
    }
    fn jac_det(&self, _t: f64, _z: &Point) -> f64 {
        1.0
    }
    fn dt_forward(&self, t: f64, z: &Point) -> Vector {
        self.rate * rot90(&(rotation(self.rate * t) * z))
    }
    fn dt_inverse(&self, t: f64, x: &Point) -> Vector {
        -self.rate * rot90(&(rotation(-self.rate * t) * x))
    }
    fn inverse_jacobian(&self, t: f64, _x: &Point) -> Mat2 {
        rotation(-self.rate * t)
    }
    fn dt_inverse_jacobian(&self, t: f64, _x: &Point) -> Option<Mat2> {
        Some(-self.rate * rotation_derivative(-self.rate * t))
    }
    fn amplitude(&self) -> f64 {
        self.rate.abs()
    }
    fn period(&self) -> Option<f64> {
        let k = 1.0 + self.rate;
        (k.round() - k).abs().lt(&1e-12).then_some(TAU)
    }
    fn name(&self) -> &'static str {
        "rotation"
    }
}

/// Time-affine motion `psi_t(z) = A(t) z + b(t)` with `A(0)` close to the
/// identity for small amplitude.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub amplitude: f64,
}

impl Affine {
    pub fn new(amplitude: f64) -> Result<Self> {
        if !(amplitude.abs() < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "affine amplitude {amplitude} must satisfy |a| < 0.5"
            )));
        }
        Ok(Affine { amplitude })
    }

    fn matrix(&self, t: f64) -> Mat2 {
        let a = self.amplitude;
        Mat2::new(
            1.0 + a * t.sin(),
            0.5 * a * t.cos(),
            -0.3 * a * (2.0 * t).sin(),
            1.0 + 0.6 * a * (2.0 * t).cos(),
        )
    }

    fn matrix_dt(&self, t: f64) -> Mat2 {
        let a = self.amplitude;
        Mat2::new(
            a * t.cos(),
            -0.5 * a * t.sin(),
            -0.6 * a * (2.0 * t).cos(),
            -1.2 * a * (2.0 * t).sin(),
        )
    }

    fn shift(&self, t: f64) -> Vector {
        self.amplitude * Vector::new(0.3 * t.cos(), 0.2 * t.sin())
    }

    fn shift_dt(&self, t: f64) -> Vector {
        self.amplitude * Vector::new(-0.3 * t.sin(), 0.2 * t.cos())
    }

    fn matrix_inv(&self, t: f64) -> Mat2 {
        self.matrix(t)
            .try_inverse()
            .expect("affine matrix is invertible for |a| < 0.5")
    }
}

impl Motion for Affine {
    fn forward(&self, t: f64, z: &Point) -> Point {
        self.matrix(t) * z + self.shift(t)
    }
    fn inverse(&self, t: f64, x: &Point) -> Point {
        self.matrix_inv(t) * (x - self.shift(t))
    }
    fn jacobian(&self, t: f64, _z: &Point) -> Mat2 {
        self.matrix(t)
    }
    fn dt_forward(&self, t: f64, z: &Point) -> Vector {
        self.matrix_dt(t) * z + self.shift_dt(t)
    }
    fn inverse_jacobian(&self, t: f64, _x: &Point) -> Mat2 {
        self.matrix_inv(t)
    }
    fn dt_inverse_jacobian(&self, t: f64, _x: &Point) -> Option<Mat2> {
        let inv = self.matrix_inv(t);
        Some(-(inv * self.matrix_dt(t) * inv))
    }
    fn amplitude(&self) -> f64 {
        self.amplitude
    }
    fn name(&self) -> &'static str {
        "affine"
    }
}

/// Radial breathing `psi_t(z) = (1 + a sin t * eta(|z|)) z` with the taper
/// `eta(r) = (1 - (r/R)^2)^3` on `r < R` and zero outside, so the motion is
/// the identity outside the disk of radius `R`.
#[derive(Debug, Clone, Copy)]
pub struct Breathing {
    pub amplitude: f64,
    pub radius: f64,
}

impl Breathing {
    /// Largest value of `r |eta'(r)|` over `[0, R]`.
    const MAX_R_DETA: f64 = 8.0 / 9.0;

    pub fn new(amplitude: f64, radius: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "breathing radius {radius} must be positive"
            )));
        }
        if !(amplitude.abs() * (1.0 + Self::MAX_R_DETA) < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "breathing amplitude {amplitude} does not give a diffeomorphism"
            )));
        }
        Ok(Breathing { amplitude, radius })
    }

    #[inline]
    fn eta(&self, r: f64) -> f64 {
        let q = r / self.radius;
        if q >= 1.0 {
            0.0
        } else {
            let u = 1.0 - q * q;
            u * u * u
        }
    }

    /// `eta'(r) / r`, smooth through `r = 0`.
    #[inline]
    fn eta_prime_over_r(&self, r: f64) -> f64 {
        let q = r / self.radius;
        if q >= 1.0 {
            0.0
        } else {
            let u = 1.0 - q * q;
            -6.0 * u * u / (self.radius * self.radius)
        }
    }

    /// Solves `r (1 + c eta(r)) = rho` for `r`.
    fn inverse_radius(&self, c: f64, rho: f64) -> f64 {
        if rho >= self.radius || c == 0.0 {
            return rho;
        }
        let mut r = rho;
        for _ in 0..50 {
            let e = self.eta(r);
            let f = r * (1.0 + c * e) - rho;
            let df = 1.0 + c * (e + r * r * self.eta_prime_over_r(r));
            let dr = f / df;
            r -= dr;
            if dr.abs() <= 1e-15 * (1.0 + rho) {
                break;
            }
        }
        r
    }
}

impl Motion for Breathing {
    fn forward(&self, t: f64, z: &Point) -> Point {
        let c = self.amplitude * t.sin();
        z * (1.0 + c * self.eta(z.norm()))
    }

    fn inverse(&self, t: f64, x: &Point) -> Point {
        let rho = x.norm();
        if rho == 0.0 {
            return *x;
        }
        let c = self.amplitude * t.sin();
        x * (self.inverse_radius(c, rho) / rho)
    }

    fn jacobian(&self, t: f64, z: &Point) -> Mat2 {
        let c = self.amplitude * t.sin();
        let r = z.norm();
        let scale = 1.0 + c * self.eta(r);
        Mat2::identity() * scale + (z * z.transpose()) * (c * self.eta_prime_over_r(r))
    }

    fn jac_det(&self, t: f64, z: &Point) -> f64 {
        let c = self.amplitude * t.sin();
        let r = z.norm();
        let scale = 1.0 + c * self.eta(r);
        scale * (scale + c * r * r * self.eta_prime_over_r(r))
    }

    fn dt_forward(&self, t: f64, z: &Point) -> Vector {
        z * (self.amplitude * t.cos() * self.eta(z.norm()))
    }

    fn amplitude(&self) -> f64 {
        self.amplitude
    }

    fn support_radius(&self) -> Option<f64> {
        Some(self.radius)
    }

    fn name(&self) -> &'static str {
        "breathing"
    }
}

/// Serializable selection of a builtin motion.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "motion", rename_all = "lowercase", deny_unknown_fields)]
pub enum MotionSpec {
    #[default]
    Identity,
    Rotation {
        rate: f64,
    },
    Affine {
        amplitude: f64,
    },
    Breathing {
        amplitude: f64,
        #[serde(default = "default_breathing_radius")]
        radius: f64,
    },
}

fn default_breathing_radius() -> f64 {
    1.0
}

impl MotionSpec {
    pub fn build(&self) -> Result<Arc<dyn Motion>> {
        Ok(match *self {
            MotionSpec::Identity => Arc::new(Identity),
            MotionSpec::Rotation { rate } => Arc::new(Rotation::new(rate)),
            MotionSpec::Affine { amplitude } => Arc::new(Affine::new(amplitude)?),
            MotionSpec::Breathing { amplitude, radius } => {
                Arc::new(Breathing::new(amplitude, radius)?)
            }
        })
    }
}
