//! Straight-line integrals of the moving object, and the weight that turns
//! them into level-curve integrals.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{omega, omega_perp, Motion, Point, Weight};
use crate::operators::grid::{ImageGrid, Interpolation, SinoSpec, Sinogram};
use crate::par::{self, Exec};

/// Samples of the motion boundary used to bound the preimage of the support.
const BOUNDARY_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy)]
pub struct LineOptions {
    pub interp: Interpolation,
    pub exec: Exec,
    /// Arc-length step in units of the pixel spacing.
    pub step_factor: f64,
}

impl Default for LineOptions {
    fn default() -> Self {
        LineOptions {
            interp: Interpolation::Bilinear,
            exec: Exec::default(),
            step_factor: 0.5,
        }
    }
}

/// `g(s, t) = int_{z . omega(t) = s} mu(t, z) f(psi_t(z)) dS_z`.
pub fn forward_lagrangian(
    motion: &dyn Motion,
    mu: &dyn Weight,
    f: &ImageGrid,
    sino_spec: SinoSpec,
) -> Result<Sinogram> {
    forward_lagrangian_with(motion, mu, f, sino_spec, &LineOptions::default())
}

pub fn forward_lagrangian_with(
    motion: &dyn Motion,
    mu: &dyn Weight,
    f: &ImageGrid,
    sino_spec: SinoSpec,
    opts: &LineOptions,
) -> Result<Sinogram> {
    sino_spec.validate()?;
    let spec = f.spec;
    let h = spec.spacing;
    let ns = sino_spec.ns;
    let radii: Vec<f64> = (0..sino_spec.nt)
        .map(|k| preimage_radius(motion, sino_spec.t(k), spec.support_radius) + h)
        .collect();
    let rows = par::map_collect(opts.exec, sino_spec.nt, |k| -> Result<Vec<f64>> {
        let t = sino_spec.t(k);
        let w = omega(t);
        let wp = omega_perp(t);
        (0..ns)
            .map(|i| {
                let s = sino_spec.s(i);
                line_integral(f, s, &w, &wp, radii[k], opts, |z| {
                    (motion.forward(t, z), mu.eval(t, z))
                })
                .map_err(|x| Error::Domain { t, x })
            })
            .collect()
    });
    let mut g = Sinogram::zeros(sino_spec);
    for (k, row) in rows.into_iter().enumerate() {
        g.values[k * ns..(k + 1) * ns].copy_from_slice(&row?);
    }
    Ok(g)
}

/// Largest `|psi_t^{-1}(x)|` over the support circle.
fn preimage_radius(motion: &dyn Motion, t: f64, radius: f64) -> f64 {
    (0..BOUNDARY_SAMPLES)
        .map(|k| {
            let x = omega(std::f64::consts::TAU * k as f64 / BOUNDARY_SAMPLES as f64) * radius;
            motion.inverse(t, &x).norm()
        })
        .fold(radius, f64::max)
}

/// Trapezoid rule along `z = s w + u wp`, `|z| <= radius`. `map` returns the
/// image point sampled for `z` and the weight there. Fails with the first
/// image point that falls outside the grid padded by three pixels.
pub(crate) fn line_integral<M>(
    f: &ImageGrid,
    s: f64,
    w: &crate::geometry::Vector,
    wp: &crate::geometry::Vector,
    radius: f64,
    opts: &LineOptions,
    map: M,
) -> std::result::Result<f64, Point>
where
    M: Fn(&Point) -> (Point, f64),
{
    if s.abs() >= radius {
        return Ok(0.0);
    }
    let spec = f.spec;
    let h = spec.spacing;
    let half = (radius * radius - s * s).sqrt();
    let n = ((2.0 * half / (opts.step_factor * h)).ceil() as usize).max(1);
    let du = 2.0 * half / n as f64;
    let (lo, hi) = spec.extent();
    let pad = 3.0 * h;
    let mut acc = 0.0;
    for q in 0..=n {
        let u = -half + q as f64 * du;
        let z = w * s + wp * u;
        let (x, m) = map(&z);
        if x[0] < lo[0] - pad || x[0] > hi[0] + pad || x[1] < lo[1] - pad || x[1] > hi[1] + pad {
            return Err(x);
        }
        let v = m * f.sample(&x, opts.interp);
        acc += if q == 0 || q == n { 0.5 * v } else { v };
    }
    Ok(acc * du)
}

/// `mu_hat(t, x) = mu(t, z) / (det D psi_t(z) |d_x phi(t, x)|)` with
/// `z = psi_t^{-1}(x)`: the weight for which the level-curve integral over
/// `phi(t, x) = psi_t^{-1}(x) . omega(t)` reproduces the Lagrangian line
/// integral with material weight `mu`.
#[derive(Debug, Clone)]
pub struct ChangeOfVariablesWeight {
    pub motion: Arc<dyn Motion>,
    pub material: Arc<dyn Weight>,
}

impl ChangeOfVariablesWeight {
    pub fn new(motion: Arc<dyn Motion>, material: Arc<dyn Weight>) -> Self {
        ChangeOfVariablesWeight { motion, material }
    }
}

impl Weight for ChangeOfVariablesWeight {
    fn eval(&self, t: f64, x: &Point) -> f64 {
        let (z, dinv) = self.motion.inverse_with_jacobian(t, x);
        let grad = dinv.transpose() * omega(t);
        self.material.eval(t, &z) * dinv.determinant().abs() / grad.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_dynamic_phase, Breathing, ConstantWeight, Identity, Rotation};
    use crate::operators::forward::LevelSetOperator;
    use crate::operators::grid::{rel_l2, GridSpec};

    fn blob(x: &Point) -> f64 {
        let d = (x - Point::new(0.2, -0.1)).norm_squared();
        (-d / 0.05).exp() + 0.5 * (-(x - Point::new(-0.3, 0.3)).norm_squared() / 0.02).exp()
    }

    #[test]
    fn identity_is_radon_of_gaussian() {
        let grid = GridSpec::square(128, 1.0, 1.0);
        let sigma2 = 0.02;
        let f = ImageGrid::from_fn(grid, |x| (-x.norm_squared() / (2.0 * sigma2)).exp());
        let spec = SinoSpec::new(41, 8, -1.0, 1.0, Default::default()).unwrap();
        let g = forward_lagrangian(&Identity, &ConstantWeight(1.0), &f, spec).unwrap();
        let exact = Sinogram::from_fn(spec, |s, _| {
            (2.0 * std::f64::consts::PI * sigma2).sqrt() * (-s * s / (2.0 * sigma2)).exp()
        });
        assert!(rel_l2(&g.values, &exact.values) < 5e-3);
    }

    #[test]
    fn rotation_rotates_the_data() {
        let grid = GridSpec::square(64, 1.0, 1.0);
        let f = ImageGrid::from_fn(grid, blob);
        let spec = SinoSpec::new(33, 16, -1.1, 1.1, Default::default()).unwrap();
        let still = forward_lagrangian(&Identity, &ConstantWeight(1.0), &f, spec).unwrap();
        // rate -1 freezes the object in the detector frame
        let sync = forward_lagrangian(&Rotation::synchronized(), &ConstantWeight(1.0), &f, spec)
            .unwrap();
        for k in 0..spec.nt {
            for i in 0..spec.ns {
                assert!((sync.get(i, k) - still.get(i, 0)).abs() < 2e-3);
            }
        }
    }

    #[test]
    fn change_of_variables_matches_level_set_form() {
        let grid = GridSpec::square(128, 1.0, 1.0);
        let f = ImageGrid::from_fn(grid, blob);
        let motion: Arc<dyn Motion> = Arc::new(Breathing::new(0.2, 1.0).unwrap());
        let pf = Arc::new(make_dynamic_phase(motion.clone()));
        let spec = SinoSpec::new(97, 24, -1.1, 1.1, Default::default()).unwrap();
        let lag = forward_lagrangian(&*motion, &ConstantWeight(1.0), &f, spec).unwrap();
        let mu_hat = Arc::new(ChangeOfVariablesWeight::new(
            motion,
            Arc::new(ConstantWeight(1.0)),
        ));
        let op = LevelSetOperator::new(pf, mu_hat, grid, spec).unwrap();
        let lvl = op.forward(&f).unwrap();
        assert!(rel_l2(&lvl.values, &lag.values) < 0.02);
    }
}
