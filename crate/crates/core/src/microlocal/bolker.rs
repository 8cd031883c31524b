//! Local and semi-global Bolker checks.

use serde::Serialize;

use crate::error::Result;
use crate::geometry::trace::{project_to_level, trace_level_curve};
use crate::geometry::{
    fd_derivatives, homogeneous_extension, omega, LevelCurveFrame, Phase, Point, Vector,
};

/// `h(t, x) = det[d_x phi, d_t d_x phi]`.
pub fn bolker_determinant<P: Phase + ?Sized>(pf: &P, t: f64, x: &Point) -> Result<f64> {
    Ok(fd_derivatives(pf, t, x)?.h)
}

/// Determinant with both columns scaled to unit size. Columns much smaller
/// than `|d_x phi|` are measured against `|d_x phi|` rather than inflated.
pub fn normalized_bolker(frame: &LevelCurveFrame) -> f64 {
    let g = Vector::new(frame.g[0], frame.g[1]);
    let m = Vector::new(frame.m[0], frame.m[1]);
    normalized_det(&g, &m, frame.j)
}

fn normalized_det(a: &Vector, b: &Vector, scale: f64) -> f64 {
    let na = a.norm().max(scale);
    let nb = b.norm().max(scale);
    (a[0] * b[1] - a[1] * b[0]) / (na * nb)
}

/// Zero threshold for normalized determinants.
pub const ZERO_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop31Report {
    pub n_samples: usize,
    pub agreements: usize,
    pub agreement_fraction: f64,
    /// Largest `|h - det|`, both measured against the column scale of `h`.
    pub worst_discrepancy: f64,
    /// Samples at which both determinants vanish.
    pub zero_count: usize,
}

/// Compares the zero pattern of `h` with that of the mixed Hessian of the
/// homogeneous extension at `theta = omega(t)`.
pub fn prop31_equivalence_check<P: Phase + ?Sized>(
    pf: &P,
    samples: &[(f64, Point)],
) -> Result<Prop31Report> {
    let mut agreements = 0;
    let mut zero_count = 0;
    let mut worst: f64 = 0.0;
    for (t, x) in samples {
        let frame = fd_derivatives(pf, *t, x)?;
        let h = normalized_bolker(&frame);
        let theta = omega(*t);
        let hv = homogeneous_extension(pf, &theta, x)?;
        let g = Vector::new(frame.g[0], frame.g[1]);
        let m = Vector::new(frame.m[0], frame.m[1]);
        let (sin, cos) = hv.t.sin_cos();
        let r1 = g * cos - m * sin;
        let r2 = g * sin + m * cos;
        let scale = frame.j;
        let raw = hv.hessian_det / (r1.norm().max(scale) * r2.norm().max(scale));
        let hz = h.abs() < ZERO_THRESHOLD;
        let dz = raw.abs() < ZERO_THRESHOLD;
        if hz == dz {
            agreements += 1;
            if hz {
                zero_count += 1;
            }
        }
        let common = g.norm().max(scale) * m.norm().max(scale);
        worst = worst.max((frame.h - hv.hessian_det).abs() / common);
    }
    let n = samples.len();
    Ok(Prop31Report {
        n_samples: n,
        agreements,
        agreement_fraction: if n == 0 { 1.0 } else { agreements as f64 / n as f64 },
        worst_discrepancy: worst,
        zero_count,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SemiGlobalOptions {
    pub n_samples: usize,
    /// Relative tolerance on `|d_t phi(x) - d_t phi(y)|`.
    pub rel_tol: f64,
    pub max_doublings: usize,
}

impl Default for SemiGlobalOptions {
    fn default() -> Self {
        SemiGlobalOptions {
            n_samples: 512,
            rel_tol: 1e-6,
            max_doublings: 3,
        }
    }
}

/// Points `y != x` on the level curve through `x` at which `d_t phi`
/// takes the same value as at `x`.
pub fn semiglobal_bolker_check<P: Phase + ?Sized>(
    pf: &P,
    t: f64,
    x: &Point,
    n_curve_samples: usize,
) -> Result<Vec<Point>> {
    semiglobal_bolker_check_with(
        pf,
        t,
        x,
        &SemiGlobalOptions {
            n_samples: n_curve_samples,
            ..Default::default()
        },
    )
}

pub fn semiglobal_bolker_check_with<P: Phase + ?Sized>(
    pf: &P,
    t: f64,
    x: &Point,
    opts: &SemiGlobalOptions,
) -> Result<Vec<Point>> {
    pf.check(t, x)?;
    let s = pf.value(t, x);
    let dx = pf.dt(t, x);
    let mut n = opts.n_samples.max(8);
    let mut doublings = 0;
    loop {
        let step = pf.domain().diameter() / (2.0 * n as f64);
        let curve = trace_level_curve(pf, s, t, x, step)?;
        let length = curve.length();
        let spacing = length / n as f64;
        let samples = resample(pf, s, t, &curve, n);
        let dts: Vec<f64> = samples.iter().map(|y| pf.dt(t, y)).collect();
        let mut scale = dts.iter().fold(dx.abs(), |a, v| a.max(v.abs()));
        if scale == 0.0 {
            scale = 1.0;
        }
        let tol = opts.rel_tol * scale;
        let min_gap = dts
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(f64::INFINITY, f64::min);
        if min_gap < 10.0 * tol && doublings < opts.max_doublings {
            n *= 2;
            doublings += 1;
            continue;
        }
        return Ok(samples
            .iter()
            .zip(&dts)
            .filter(|(y, d)| (*y - x).norm() > 0.5 * spacing && (*d - dx).abs() < tol)
            .map(|(y, _)| *y)
            .collect());
    }
}

/// `n` points spread uniformly in arc length over a traced curve.
fn resample<P: Phase + ?Sized>(
    pf: &P,
    s: f64,
    t: f64,
    curve: &crate::geometry::LevelCurve,
    n: usize,
) -> Vec<Point> {
    let pts = &curve.points;
    if pts.len() < 2 {
        return pts.clone();
    }
    let mut arcs = curve.arc_lengths.clone();
    let mut verts = pts.clone();
    if curve.closed {
        arcs.push(curve.length());
        verts.push(pts[0]);
    }
    let total = *arcs.last().unwrap();
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let a = if curve.closed {
            total * k as f64 / n as f64
        } else {
            total * k as f64 / (n - 1).max(1) as f64
        };
        while seg + 2 < arcs.len() && arcs[seg + 1] < a {
            seg += 1;
        }
        let d = arcs[seg + 1] - arcs[seg];
        let u = if d > 0.0 { ((a - arcs[seg]) / d).clamp(0.0, 1.0) } else { 0.0 };
        let p = verts[seg] + (verts[seg + 1] - verts[seg]) * u;
        out.push(project_to_level(pf, s, t, &p, 20).unwrap_or(p));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        make_dynamic_phase, make_fanbeam_phase, make_static_phase, Affine, Breathing, FdPhase,
        Rotation,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn samples(n: usize) -> Vec<(f64, Point)> {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        (0..n)
            .map(|_| {
                (
                    rng.random_range(0.01..6.27),
                    Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                )
            })
            .collect()
    }

    #[test]
    fn bolker_examples() {
        let p = make_static_phase();
        for (t, x) in samples(100) {
            assert!((bolker_determinant(&p, t, &x).unwrap() - 1.0).abs() < 1e-10);
        }
        let sync = make_dynamic_phase(Arc::new(Rotation::synchronized()));
        let sync_fd = FdPhase(sync.clone());
        let co = make_dynamic_phase(Arc::new(Rotation::new(1.0)));
        for (t, x) in samples(100) {
            assert!(bolker_determinant(&sync, t, &x).unwrap().abs() < 1e-12);
            assert!(bolker_determinant(&sync_fd, t, &x).unwrap().abs() < 1e-6);
            assert!((bolker_determinant(&co, t, &x).unwrap() - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn prop31_agrees_on_builtin_families() {
        let s = samples(2000);
        let families: Vec<(Box<dyn Phase>, bool)> = vec![
            (Box::new(make_static_phase()), false),
            (Box::new(make_dynamic_phase(Arc::new(Rotation::synchronized()))), true),
            (Box::new(FdPhase(make_dynamic_phase(Arc::new(Rotation::synchronized())))), true),
            (Box::new(make_dynamic_phase(Arc::new(Breathing::new(0.1, 1.0).unwrap()))), false),
            (Box::new(make_dynamic_phase(Arc::new(Affine::new(0.1).unwrap()))), false),
            (Box::new(make_fanbeam_phase(3.0).unwrap()), false),
        ];
        for (p, zero) in families {
            let r = prop31_equivalence_check(&p, &s).unwrap();
            assert_eq!(r.agreement_fraction, 1.0, "{}", p.name());
            assert_eq!(r.zero_count == r.n_samples, zero, "{}", p.name());
            assert!(r.worst_discrepancy < 1e-8, "{} {}", p.name(), r.worst_discrepancy);
        }
    }

    #[test]
    fn hessian_determinant_matches_difference_oracle() {
        let p = make_dynamic_phase(Arc::new(Breathing::new(0.1, 1.0).unwrap()));
        let value = |th: &Vector, x: &Point| homogeneous_extension(&p, th, x).unwrap().value;
        let e = 1e-4;
        for (t, x) in samples(30) {
            let th = omega(t) * 1.3;
            let hv = homogeneous_extension(&p, &th, &x).unwrap();
            let mut m = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    let mut di = Vector::zeros();
                    di[i] = e;
                    let mut dj = Point::zeros();
                    dj[j] = e;
                    m[i][j] = (value(&(th + di), &(x + dj)) - value(&(th + di), &(x - dj))
                        - value(&(th - di), &(x + dj))
                        + value(&(th - di), &(x - dj)))
                        / (4.0 * e * e);
                }
            }
            let fd = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            assert!((fd - hv.hessian_det).abs() < 1e-4 * hv.hessian_det.abs().max(1e-3));
        }
    }

    #[test]
    fn semiglobal_examples() {
        let p = make_static_phase();
        let w = semiglobal_bolker_check(&p, 0.4, &Point::new(0.1, 0.2), 512).unwrap();
        assert!(w.is_empty());
        let sync = make_dynamic_phase(Arc::new(Rotation::synchronized()));
        let w = semiglobal_bolker_check(&sync, 0.4, &Point::new(0.1, 0.2), 256).unwrap();
        assert!(w.len() > 1000);
        let b = make_dynamic_phase(Arc::new(Breathing::new(0.02, 1.0).unwrap()));
        for (t, x) in samples(5) {
            let w = semiglobal_bolker_check(&b, t, &x, 512).unwrap();
            assert!(w.is_empty(), "{t} {x}");
        }
    }
}
