//! Fan-beam acquisition and rebinning to parallel coordinates.
//!
//! Fan data are stored as a [`Sinogram`] whose `s` axis is the fan angle
//! `gamma` and whose `t` axis is the source angle; the source sits at
//! `R omega(t)`.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fan_to_parallel, omega, omega_perp, parallel_to_fan, TimeRange, Weight};
use crate::operators::grid::{ImageGrid, SinoSpec, Sinogram};
use crate::operators::lagrangian::{line_integral, LineOptions};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanSpec {
    pub radius: f64,
    pub n_t: usize,
    pub n_gamma: usize,
    pub gamma_max: f64,
}

impl FanSpec {
    /// Fan wide enough to cover the disk of radius `support` with a margin.
    pub fn covering(radius: f64, support: f64, n_t: usize, n_gamma: usize) -> Result<Self> {
        if !(support < radius) {
            return Err(Error::InvalidArgument(format!(
                "source radius {radius} must exceed the support radius {support}"
            )));
        }
        let gamma_max = ((1.05 * support).min(radius) / radius).asin().min(1.5);
        let spec = FanSpec {
            radius,
            n_t,
            n_gamma,
            gamma_max,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::InvalidArgument("fan radius must be positive".into()));
        }
        if !(self.gamma_max > 0.0 && self.gamma_max < FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!(
                "fan half-angle {} must lie in (0, pi/2)",
                self.gamma_max
            )));
        }
        if self.n_t < 2 || self.n_gamma < 2 {
            return Err(Error::InvalidArgument("fan grid needs at least 2x2 samples".into()));
        }
        Ok(())
    }

    /// Grid over `(gamma, t)` with the source on a full circle.
    pub fn sino_spec(&self) -> Result<SinoSpec> {
        self.validate()?;
        SinoSpec::new(
            self.n_gamma,
            self.n_t,
            -self.gamma_max,
            self.gamma_max,
            TimeRange::full(),
        )
    }

    /// Largest parallel offset `|s| = R sin gamma_max` the fan reaches.
    pub fn s_max(&self) -> f64 {
        self.radius * self.gamma_max.sin()
    }
}

/// Integrates `mu f` along the fan rays `R omega(t) - u omega(t + gamma)`.
pub fn forward_fanbeam(f: &ImageGrid, mu: &dyn Weight, fan: &FanSpec) -> Result<Sinogram> {
    let spec = fan.sino_spec()?;
    let opts = LineOptions::default();
    let r = f.spec.support_radius + f.spec.spacing;
    let ng = spec.ns;
    let rows = par::map_collect(opts.exec, spec.nt, |k| {
        let t = spec.t(k);
        (0..ng)
            .map(|i| {
                let p = fan_to_parallel(t, spec.s(i), fan.radius);
                let (w, wp) = (omega(p.beta), omega_perp(p.beta));
                line_integral(f, p.s, &w, &wp, r, &opts, |z| (*z, mu.eval(t, z)))
                    .map_err(|x| Error::Domain { t, x })
            })
            .collect::<Result<Vec<f64>>>()
    });
    let mut g = Sinogram::zeros(spec);
    for (k, row) in rows.into_iter().enumerate() {
        g.values[k * ng..(k + 1) * ng].copy_from_slice(&row?);
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvertReport {
    pub out_of_range: usize,
    pub total: usize,
    /// Range of `R cos gamma` over the target cells that were filled.
    pub jacobian_min: f64,
    pub jacobian_max: f64,
}

/// Parallel grid over the full turn reachable by `fan`, with `ns` offsets.
pub fn parallel_spec_for(fan: &FanSpec, ns: usize, nt: usize) -> Result<SinoSpec> {
    let s = 0.98 * fan.s_max();
    SinoSpec::new(ns, nt, -s, s, TimeRange::full())
}

/// Rebins fan data onto `target`, a parallel `(s, beta)` grid, using
/// `gamma = asin(s / R)` and `t = beta - gamma + pi/2` with bilinear
/// interpolation in `(gamma, t)`. Cells the fan does not reach are NaN and
/// counted in the report.
pub fn fanbeam_convert_lenient(
    g_fan: &Sinogram,
    radius: f64,
    target: SinoSpec,
) -> Result<(Sinogram, ConvertReport)> {
    let src = g_fan.spec;
    if !src.periodic() {
        return Err(Error::InvalidArgument(
            "fan data must cover a full source turn".into(),
        ));
    }
    if !(src.s_max < FRAC_PI_2 && src.s_min > -FRAC_PI_2) {
        return Err(Error::InvalidArgument("fan angles must lie in (-pi/2, pi/2)".into()));
    }
    target.validate()?;
    let mut out = Sinogram::zeros(target);
    let dg = src.ds();
    let dt = src.dt();
    let mut report = ConvertReport {
        out_of_range: 0,
        total: target.len(),
        jacobian_min: f64::INFINITY,
        jacobian_max: 0.0,
    };
    for k in 0..target.nt {
        let beta = target.t(k);
        for i in 0..target.ns {
            let r = k * target.ns + i;
            let Some((t, gamma)) = parallel_to_fan(target.s(i), beta, radius) else {
                out.values[r] = f64::NAN;
                report.out_of_range += 1;
                continue;
            };
            let u = (gamma - src.s_min) / dg;
            if !(u >= 0.0 && u <= (src.ns - 1) as f64) {
                out.values[r] = f64::NAN;
                report.out_of_range += 1;
                continue;
            }
            let i0 = (u.floor() as usize).min(src.ns - 2);
            let a = u - i0 as f64;
            let v = ((t - src.t_range.start).rem_euclid(TAU)) / dt;
            let k0 = v.floor() as usize % src.nt;
            let k1 = (k0 + 1) % src.nt;
            let b = v - v.floor();
            let at = |kk: usize| (1.0 - a) * g_fan.get(i0, kk) + a * g_fan.get(i0 + 1, kk);
            out.values[r] = (1.0 - b) * at(k0) + b * at(k1);
            let jac = radius * gamma.cos();
            report.jacobian_min = report.jacobian_min.min(jac);
            report.jacobian_max = report.jacobian_max.max(jac);
        }
    }
    Ok((out, report))
}

/// As [`fanbeam_convert_lenient`], but any cell without fan coverage is an
/// [`Error::OutOfRange`].
pub fn fanbeam_convert(
    g_fan: &Sinogram,
    radius: f64,
    target: SinoSpec,
) -> Result<(Sinogram, ConvertReport)> {
    let (g, report) = fanbeam_convert_lenient(g_fan, radius, target)?;
    if report.out_of_range > 0 {
        return Err(Error::OutOfRange {
            count: report.out_of_range,
            total: report.total,
        });
    }
    Ok((g, report))
}
