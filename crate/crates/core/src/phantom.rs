//! Ellipse phantoms with known edges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Phase, Point, TimeRange, Vector};
use crate::microlocal::{solve_time_for_direction, CovectorSample};
use crate::operators::grid::{GridSpec, ImageGrid};
use crate::par::{self, Exec};

/// Supersamples per pixel axis.
pub const SUPERSAMPLE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipseSpec {
    pub center: [f64; 2],
    pub semi_axes: [f64; 2],
    /// Counterclockwise rotation of the first semi-axis, in radians.
    #[serde(default)]
    pub angle: f64,
    pub density: f64,
}

impl EllipseSpec {
    pub fn disk(center: [f64; 2], radius: f64, density: f64) -> Self {
        EllipseSpec {
            center,
            semi_axes: [radius, radius],
            angle: 0.0,
            density,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.semi_axes[0] > 0.0 && self.semi_axes[1] > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ellipse semi-axes {:?} must be positive",
                self.semi_axes
            )));
        }
        Ok(())
    }

    /// `(u/a)^2 + (v/b)^2` in the ellipse frame.
    pub fn level(&self, x: &Point) -> f64 {
        let (sin, cos) = self.angle.sin_cos();
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        let u = cos * dx + sin * dy;
        let v = -sin * dx + cos * dy;
        (u / self.semi_axes[0]).powi(2) + (v / self.semi_axes[1]).powi(2)
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.level(x) <= 1.0
    }

    /// Boundary point at parameter `theta` and its outward unit normal.
    pub fn boundary(&self, theta: f64) -> (Point, Vector) {
        let (sa, ca) = self.angle.sin_cos();
        let (st, ct) = theta.sin_cos();
        let [a, b] = self.semi_axes;
        let rot = |u: f64, v: f64| Vector::new(ca * u - sa * v, sa * u + ca * v);
        let p = Point::new(self.center[0], self.center[1]) + rot(a * ct, b * st);
        let n = rot(ct / a, st / b).normalize();
        (p, n)
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.semi_axes[0] * self.semi_axes[1]
    }
}

/// The fixed three-ellipse fixture: a large disk, a tilted thin ellipse and
/// a small dense disk, all inside radius 0.9.
pub fn default_phantom() -> Vec<EllipseSpec> {
    vec![
        EllipseSpec::disk([0.0, 0.0], 0.7, 1.0),
        EllipseSpec {
            center: [0.15, -0.2],
            semi_axes: [0.35, 0.08],
            angle: 0.6,
            density: 0.5,
        },
        EllipseSpec::disk([-0.3, 0.3], 0.12, 1.5),
    ]
}

/// Sum of ellipse indicators times densities, each pixel averaged over a
/// 4x4 subgrid. Pixels outside the support disk are zero.
pub fn render_phantom(specs: &[EllipseSpec], grid: GridSpec) -> Result<ImageGrid> {
    grid.validate()?;
    for e in specs {
        e.validate()?;
    }
    let h = grid.spacing;
    let n = SUPERSAMPLE;
    let mut img = ImageGrid::zeros(grid);
    par::fill(Exec::default(), &mut img.values, |k| {
        let c = grid.point_at(k);
        if !grid.in_support(&c) {
            return 0.0;
        }
        let mut acc = 0.0;
        for b in 0..n {
            for a in 0..n {
                let x = Point::new(
                    c[0] + h * ((a as f64 + 0.5) / n as f64 - 0.5),
                    c[1] + h * ((b as f64 + 0.5) / n as f64 - 0.5),
                );
                for e in specs {
                    if e.contains(&x) {
                        acc += e.density;
                    }
                }
            }
        }
        acc / (n * n) as f64
    });
    Ok(img)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WavefrontSampleSet {
    pub samples: Vec<CovectorSample>,
    /// Index of the ellipse each sample lies on.
    pub ellipse: Vec<usize>,
}

/// `n_per_ellipse` boundary points per ellipse, uniform in the ellipse
/// parameter, with outward unit normals as covectors.
pub fn boundary_wavefront(specs: &[EllipseSpec], n_per_ellipse: usize) -> Result<WavefrontSampleSet> {
    if n_per_ellipse < 8 {
        return Err(Error::InvalidArgument(format!(
            "need at least 8 samples per ellipse, got {n_per_ellipse}"
        )));
    }
    let mut set = WavefrontSampleSet {
        samples: Vec::with_capacity(specs.len() * n_per_ellipse),
        ellipse: Vec::with_capacity(specs.len() * n_per_ellipse),
    };
    for (i, e) in specs.iter().enumerate() {
        e.validate()?;
        for k in 0..n_per_ellipse {
            let theta = std::f64::consts::TAU * k as f64 / n_per_ellipse as f64;
            let (p, n) = e.boundary(theta);
            set.samples.push(CovectorSample::new(p, n)?);
            set.ellipse.push(i);
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VisibilityAudit {
    pub visible: Vec<bool>,
    /// Times at which each sample is seen; empty when invisible.
    pub witness_times: Vec<Vec<f64>>,
    pub fraction_visible: f64,
}

/// Whether each wavefront sample is conormal to some acquired curve.
pub fn visibility_audit<P: Phase + ?Sized>(
    pf: &P,
    wfs: &WavefrontSampleSet,
    t_range: &TimeRange,
) -> VisibilityAudit {
    let witness_times: Vec<Vec<f64>> = par::map_collect(Exec::default(), wfs.samples.len(), |k| {
        let s = &wfs.samples[k];
        solve_time_for_direction(pf, &s.point(), &s.covector(), t_range)
            .into_iter()
            .map(|r| r.t)
            .collect()
    });
    let visible: Vec<bool> = witness_times.iter().map(|w| !w.is_empty()).collect();
    let n = visible.iter().filter(|&&v| v).count();
    VisibilityAudit {
        fraction_visible: if visible.is_empty() { 1.0 } else { n as f64 / visible.len() as f64 },
        visible,
        witness_times,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_dynamic_phase, make_static_phase, Rotation};
    use std::f64::consts::{FRAC_PI_2, PI};
    use std::sync::Arc;

    #[test]
    fn unit_disk_mass() {
        let grid = GridSpec::square(128, 1.1, 1.1);
        let img = render_phantom(&[EllipseSpec::disk([0.0, 0.0], 1.0, 1.0)], grid).unwrap();
        assert!((img.mass() - PI).abs() < 0.005 * PI);
        assert!(render_phantom(&[], grid).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn disjoint_ellipses_add() {
        let grid = GridSpec::square(64, 1.0, 1.0);
        let a = EllipseSpec::disk([0.4, 0.0], 0.2, 2.0);
        let b = EllipseSpec { center: [-0.4, 0.0], semi_axes: [0.2, 0.1], angle: 0.3, density: 3.0 };
        let both = render_phantom(&[a, b], grid).unwrap();
        let sa = render_phantom(&[a], grid).unwrap();
        let sb = render_phantom(&[b], grid).unwrap();
        for k in 0..both.values.len() {
            assert!((both.values[k] - sa.values[k] - sb.values[k]).abs() < 1e-15);
        }
        assert_eq!(both.values.iter().cloned().fold(0.0, f64::max), 3.0);
    }

    #[test]
    fn normals_match_implicit_gradient() {
        let e = EllipseSpec { center: [0.1, -0.2], semi_axes: [0.5, 0.2], angle: 0.7, density: 1.0 };
        let wf = boundary_wavefront(&[e], 32).unwrap();
        let d = 1e-6;
        for s in &wf.samples {
            let p = s.point();
            assert!((e.level(&p) - 1.0).abs() < 1e-10);
            let gx = (e.level(&(p + Vector::new(d, 0.0))) - e.level(&(p - Vector::new(d, 0.0)))) / (2.0 * d);
            let gy = (e.level(&(p + Vector::new(0.0, d))) - e.level(&(p - Vector::new(0.0, d)))) / (2.0 * d);
            let g = Vector::new(gx, gy).normalize();
            assert!((g - s.direction()).norm() < 1e-6);
        }
        let c = EllipseSpec::disk([0.2, 0.1], 0.3, 1.0);
        for s in &boundary_wavefront(&[c], 16).unwrap().samples {
            let expect = (s.point() - Point::new(0.2, 0.1)) / 0.3;
            assert!((expect - s.direction()).norm() < 1e-12);
        }
        let (p, n) = EllipseSpec { center: [0.0, 0.0], semi_axes: [0.5, 0.2], angle: 0.0, density: 1.0 }.boundary(0.0);
        assert_eq!((p, n), (Point::new(0.5, 0.0), Vector::new(1.0, 0.0)));
    }

    #[test]
    fn audit_fractions() {
        let specs = default_phantom();
        let wf = boundary_wavefront(&specs, 90).unwrap();
        let full = visibility_audit(&make_static_phase(), &wf, &TimeRange::full());
        assert_eq!(full.fraction_visible, 1.0);

        let quarter = TimeRange::new(0.0, FRAC_PI_2);
        let pf = make_static_phase().with_t_range(quarter);
        let audit = visibility_audit(&pf, &wf, &quarter);
        let expected = wf
            .samples
            .iter()
            .filter(|s| {
                let a = s.direction()[1].atan2(s.direction()[0]).rem_euclid(PI);
                a <= FRAC_PI_2 + 1e-9
            })
            .count() as f64
            / wf.samples.len() as f64;
        assert!((audit.fraction_visible - expected).abs() < 0.02);

        let sync = make_dynamic_phase(Arc::new(Rotation::synchronized()));
        let audit = visibility_audit(&sync, &wf, &TimeRange::full());
        for (s, v) in wf.samples.iter().zip(&audit.visible) {
            assert_eq!(*v, s.direction()[1].abs() < 1e-9, "{:?}", s.direction());
        }
    }
}
