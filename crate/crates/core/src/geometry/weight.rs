use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use super::Point;

/// Nowhere-vanishing weight `mu(t, x)` in the curve integrals.
pub trait Weight: Send + Sync + Debug {
    fn eval(&self, t: f64, x: &Point) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantWeight(pub f64);

impl Default for ConstantWeight {
    fn default() -> Self {
        ConstantWeight(1.0)
    }
}

impl Weight for ConstantWeight {
    #[inline]
    fn eval(&self, _t: f64, _x: &Point) -> f64 {
        self.0
    }
}

/// `base + amplitude * exp(-|x - center|^2 / (2 width^2)) * (1 + 0.5 sin t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpWeight {
    pub base: f64,
    pub amplitude: f64,
    pub center: [f64; 2],
    pub width: f64,
}

impl Weight for BumpWeight {
    fn eval(&self, t: f64, x: &Point) -> f64 {
        let d2 = (x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2);
        self.base
            + self.amplitude
                * (-d2 / (2.0 * self.width * self.width)).exp()
                * (1.0 + 0.5 * t.sin())
    }
}

/// Weight given by a closure.
pub struct FnWeight<F>(pub F);

impl<F> Debug for FnWeight<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("FnWeight")
    }
}

impl<F> Weight for FnWeight<F>
where
    F: Fn(f64, &Point) -> f64 + Send + Sync,
{
    #[inline]
    fn eval(&self, t: f64, x: &Point) -> f64 {
        (self.0)(t, x)
    }
}

/// Pointwise scaled weight, used for linearity checks.
#[derive(Debug)]
pub struct Scaled<'a, W: ?Sized>(pub f64, pub &'a W);

impl<W: Weight + ?Sized> Weight for Scaled<'_, W> {
    fn eval(&self, t: f64, x: &Point) -> f64 {
        self.0 * self.1.eval(t, x)
    }
}
