//! Curve families, motion models and fan-beam geometry.

pub mod fan;
pub mod motion;
pub mod phase;
pub mod trace;
pub mod weight;

use std::f64::consts::TAU;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

pub use fan::{fan_to_parallel, parallel_to_fan, FanParallel};
pub use motion::{Affine, Breathing, Identity, Motion, MotionSpec, Rotation};
pub use phase::{
    fd_derivatives, homogeneous_extension, make_dynamic_phase, make_fanbeam_phase,
    make_static_phase, DynamicPhase, FanBeamPhase, FdPhase, LevelCurveFrame, Phase, StaticPhase,
};
pub use trace::{trace_level_curve, LevelCurve, Region, TraceOptions};
pub use weight::{BumpWeight, ConstantWeight, FnWeight, Weight};

pub type Point = Vector2<f64>;
pub type Vector = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Unit vector `(cos t, sin t)`.
#[inline]
pub fn omega(t: f64) -> Vector {
    let (s, c) = t.sin_cos();
    Vector::new(c, s)
}

/// `omega(t)` rotated by +pi/2, i.e. `(-sin t, cos t)`.
#[inline]
pub fn omega_perp(t: f64) -> Vector {
    let (s, c) = t.sin_cos();
    Vector::new(-s, c)
}

/// Counter-clockwise rotation by a quarter turn.
#[inline]
pub fn rot90(v: &Vector) -> Vector {
    Vector::new(-v[1], v[0])
}

#[inline]
pub fn rotation(angle: f64) -> Mat2 {
    let (s, c) = angle.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// Derivative of [`rotation`] with respect to the angle.
#[inline]
pub fn rotation_derivative(angle: f64) -> Mat2 {
    let (s, c) = angle.sin_cos();
    Mat2::new(-s, -c, c, -s)
}

/// Determinant of the 2x2 matrix with columns `a` and `b`.
#[inline]
pub fn det_columns(a: &Vector, b: &Vector) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Axis-aligned rectangle on which a phase function is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Domain {
    pub fn square(half_width: f64) -> Self {
        Domain {
            min: [-half_width, -half_width],
            max: [half_width, half_width],
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        x[0] >= self.min[0] && x[0] <= self.max[0] && x[1] >= self.min[1] && x[1] <= self.max[1]
    }

    /// True if `x` is at least `margin` away from every edge.
    pub fn contains_interior(&self, x: &Point, margin: f64) -> bool {
        x[0] >= self.min[0] + margin
            && x[0] <= self.max[0] - margin
            && x[1] >= self.min[1] + margin
            && x[1] <= self.max[1] - margin
    }

    pub fn diameter(&self) -> f64 {
        (self.max[0] - self.min[0]).hypot(self.max[1] - self.min[1])
    }

    /// Largest distance from the origin to a point of the rectangle.
    pub fn max_radius(&self) -> f64 {
        let fx = self.min[0].abs().max(self.max[0].abs());
        let fy = self.min[1].abs().max(self.max[1].abs());
        fx.hypot(fy)
    }
}

impl Default for Domain {
    fn default() -> Self {
        Domain::square(1.25)
    }
}

/// Acquisition interval `[start, end]`; `periodic` marks a full turn with the
/// end point identified with the start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeRange {
    pub start: f64,
    pub end: f64,
}

impl TimeRange {
    pub fn full() -> Self {
        TimeRange {
            start: 0.0,
            end: TAU,
        }
    }

    pub fn new(start: f64, end: f64) -> Self {
        TimeRange { start, end }
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    /// A range covering a whole turn is treated as periodic.
    pub fn is_full_turn(&self) -> bool {
        (self.length() - TAU).abs() < 1e-9
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }

    /// Maps an angle into `[start, start + 2 pi)`.
    pub fn wrap(&self, t: f64) -> f64 {
        self.start + (t - self.start).rem_euclid(TAU)
    }
}

impl Default for TimeRange {
    fn default() -> Self {
        TimeRange::full()
    }
}
