//! Predictor-corrector marching along a level curve `{phi(t, .) = s}`.

use super::{phase::Phase, rot90, Domain, Point, Vector};
use crate::error::{Error, Result};

/// Region in which a trace is kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Rect(Domain),
    Disk { center: [f64; 2], radius: f64 },
}

impl Region {
    pub fn contains(&self, x: &Point) -> bool {
        match self {
            Region::Rect(d) => d.contains(x),
            Region::Disk { center, radius } => {
                (x[0] - center[0]).hypot(x[1] - center[1]) <= *radius
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    pub step: f64,
    /// Defaults to the phase domain.
    pub region: Option<Region>,
    pub max_vertices: usize,
    pub newton_iters: usize,
}

impl TraceOptions {
    pub fn new(step: f64) -> Self {
        TraceOptions {
            step,
            region: None,
            max_vertices: 200_000,
            newton_iters: 20,
        }
    }

    pub fn in_region(mut self, region: Region) -> Self {
        self.region = Some(region);
        self
    }
}

/// Polyline approximation of one connected component of a level curve.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCurve {
    pub s: f64,
    pub t: f64,
    pub points: Vec<Point>,
    pub arc_lengths: Vec<f64>,
    /// The last vertex connects back to the first.
    pub closed: bool,
}

impl LevelCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total length, including the closing segment of a closed curve.
    pub fn length(&self) -> f64 {
        let open = self.arc_lengths.last().copied().unwrap_or(0.0);
        if self.closed && self.points.len() > 1 {
            open + (self.points[0] - self.points[self.points.len() - 1]).norm()
        } else {
            open
        }
    }

    /// Trapezoid-rule weights per vertex for integrating over arc length.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.points.len();
        let mut w = vec![0.0; n];
        for i in 1..n {
            let d = self.arc_lengths[i] - self.arc_lengths[i - 1];
            w[i - 1] += 0.5 * d;
            w[i] += 0.5 * d;
        }
        if self.closed && n > 1 {
            let d = (self.points[0] - self.points[n - 1]).norm();
            w[0] += 0.5 * d;
            w[n - 1] += 0.5 * d;
        }
        w
    }

    /// Distance from `x` to the polyline.
    pub fn distance_to(&self, x: &Point) -> f64 {
        let n = self.points.len();
        if n == 1 {
            return (x - self.points[0]).norm();
        }
        let mut best = f64::INFINITY;
        let segs = if self.closed { n } else { n - 1 };
        for i in 0..segs {
            best = best.min(segment_distance(x, &self.points[i], &self.points[(i + 1) % n]));
        }
        best
    }
}

pub(crate) fn segment_distance(x: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (x - a).norm();
    }
    let u = ((x - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (x - (a + ab * u)).norm()
}

/// Tolerance on `|phi - s|` for traced vertices.
pub fn curve_tol(domain: &Domain) -> f64 {
    1e-8 * domain.diameter()
}

/// Newton iteration along the gradient onto `{phi(t, .) = s}`.
///
/// Returns the projected point, or `None` if it fails to converge within
/// `iters` steps or leaves the phase domain.
pub fn project_to_level<P: Phase + ?Sized>(
    pf: &P,
    s: f64,
    t: f64,
    start: &Point,
    iters: usize,
) -> Option<Point> {
    let domain = pf.domain();
    let tol = curve_tol(&domain);
    let mut x = *start;
    for _ in 0..iters {
        let (v, g) = pf.value_grad(t, &x);
        let r = v - s;
        if r.abs() < tol {
            return domain.contains(&x).then_some(x);
        }
        let g2 = g.norm_squared();
        if !(g2 > 0.0) || !domain.contains(&x) {
            return None;
        }
        x -= g * (r / g2);
    }
    let r = pf.value(t, &x) - s;
    (r.abs() < tol && domain.contains(&x)).then_some(x)
}

fn tangent<P: Phase + ?Sized>(pf: &P, t: f64, x: &Point, sign: f64) -> Vector {
    let g = pf.grad_x(t, x);
    rot90(&g) * (sign / g.norm())
}

pub fn trace_level_curve<P: Phase + ?Sized>(
    pf: &P,
    s: f64,
    t: f64,
    seed: &Point,
    step: f64,
) -> Result<LevelCurve> {
    trace_level_curve_with(pf, s, t, seed, &TraceOptions::new(step))
}

pub fn trace_level_curve_with<P: Phase + ?Sized>(
    pf: &P,
    s: f64,
    t: f64,
    seed: &Point,
    opts: &TraceOptions,
) -> Result<LevelCurve> {
    if !(opts.step > 0.0) {
        return Err(Error::InvalidArgument("trace step must be positive".into()));
    }
    let region = opts.region.unwrap_or(Region::Rect(pf.domain()));
    let start = project_to_level(pf, s, t, seed, opts.newton_iters).ok_or(
        Error::SeedProjection {
            seed: *seed,
            s,
            iterations: opts.newton_iters,
        },
    )?;
    if !region.contains(&start) {
        return Ok(LevelCurve {
            s,
            t,
            points: Vec::new(),
            arc_lengths: Vec::new(),
            closed: false,
        });
    }

    let (ahead, closed) = march(pf, s, t, &start, 1.0, &region, opts)?;
    let mut points = if closed {
        ahead
    } else {
        let (mut behind, _) = march(pf, s, t, &start, -1.0, &region, opts)?;
        behind.reverse();
        behind.pop();
        behind.extend(ahead);
        behind
    };
    points.shrink_to_fit();
    let mut arc_lengths = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            acc += (p - points[i - 1]).norm();
        }
        arc_lengths.push(acc);
    }
    Ok(LevelCurve {
        s,
        t,
        points,
        arc_lengths,
        closed,
    })
}

/// Pulls a corrected vertex back if the corrector pushed it beyond one step.
fn shorten<P: Phase + ?Sized>(
    pf: &P,
    s: f64,
    t: f64,
    x: &Point,
    mut next: Point,
    h: f64,
    iters: usize,
) -> Point {
    for _ in 0..4 {
        let d = (next - x).norm();
        if d <= h {
            break;
        }
        let pred = x + (next - x) * (h / d * (1.0 - 1e-6));
        match project_to_level(pf, s, t, &pred, iters) {
            Some(p) => next = p,
            None => break,
        }
    }
    next
}

/// Marches from `start` in one direction. Returns the vertices, starting
/// with `start`, and whether the curve closed on itself.
fn march<P: Phase + ?Sized>(
    pf: &P,
    s: f64,
    t: f64,
    start: &Point,
    sign: f64,
    region: &Region,
    opts: &TraceOptions,
) -> Result<(Vec<Point>, bool)> {
    let h = opts.step;
    let mut pts = vec![*start];
    let mut x = *start;
    loop {
        let k1 = tangent(pf, t, &x, sign);
        let mid = x + k1 * (0.5 * h);
        let k2 = tangent(pf, t, &mid, sign);
        let pred = x + k2 * h;
        let next = match project_to_level(pf, s, t, &pred, opts.newton_iters) {
            Some(p) => shorten(pf, s, t, &x, p, h, opts.newton_iters),
            None => {
                if !region.contains(&pred) || !pf.domain().contains(&pred) {
                    return Ok((pts, false));
                }
                return Err(Error::Stall {
                    at: pred,
                    residual: pf.value(t, &pred) - s,
                });
            }
        };
        if !region.contains(&next) {
            return Ok((pts, false));
        }
        if pts.len() >= 3 && segment_distance(start, &x, &next) < 0.5 * h {
            return Ok((pts, true));
        }
        pts.push(next);
        x = next;
        if pts.len() > opts.max_vertices {
            return Err(Error::Stall {
                at: x,
                residual: pf.value(t, &x) - s,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        fd_derivatives, make_dynamic_phase, make_fanbeam_phase, make_static_phase, Breathing,
        FdPhase, Rotation, StaticPhase,
    };
    use std::sync::Arc;

    fn check_curve<P: Phase + ?Sized>(pf: &P, c: &LevelCurve, step: f64) {
        let tol = curve_tol(&pf.domain());
        for p in &c.points {
            assert!((pf.value(c.t, p) - c.s).abs() < tol);
        }
        for w in c.arc_lengths.windows(2) {
            let d = w[1] - w[0];
            assert!(d > 0.0);
            assert!(d >= 0.25 * step && d <= step * (1.0 + 1e-9), "step {d}");
        }
    }

    #[test]
    fn static_zero_level_is_vertical_line() {
        let p = make_static_phase();
        let c = trace_level_curve(&p, 0.0, 0.0, &Point::new(0.3, 0.1), 0.01).unwrap();
        check_curve(&p, &c, 0.01);
        assert!(c.points.iter().all(|q| q[0].abs() < 1e-8));
        assert!(!c.closed);
        // spans the domain height
        assert!(c.length() <= 2.5 && c.length() > 2.5 - 0.021, "{}", c.length());
    }

    #[test]
    fn fanbeam_levels_are_rays_through_the_source() {
        let p = make_fanbeam_phase(3.0).unwrap();
        let t = 1.1;
        let seed = Point::new(0.2, -0.4);
        let s = p.value(t, &seed);
        let c = trace_level_curve(&p, s, t, &seed, 0.01).unwrap();
        check_curve(&p, &c, 0.01);
        let src = p.source(t);
        let dir = (seed - src).normalize();
        for q in &c.points {
            let r = q - src;
            assert!((r[0] * dir[1] - r[1] * dir[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn tangent_is_normal_to_gradient() {
        let p = make_dynamic_phase(Arc::new(Breathing::new(0.1, 1.0).unwrap()));
        let t = 0.8;
        let c = trace_level_curve(&p, 0.2, t, &Point::new(0.2, 0.0), 0.02).unwrap();
        check_curve(&p, &c, 0.02);
        for w in c.points.windows(3) {
            let tan = (w[2] - w[0]).normalize();
            let f = fd_derivatives(&p, t, &w[1]).unwrap();
            assert!(f.normal().dot(&tan).abs() < 1e-3);
        }
    }

    #[test]
    fn closed_curves_close() {
        // level sets of |x|^2 are circles
        #[derive(Debug)]
        struct Radial;
        impl Phase for Radial {
            fn domain(&self) -> Domain {
                Domain::default()
            }
            fn t_range(&self) -> crate::geometry::TimeRange {
                Default::default()
            }
            fn value(&self, _t: f64, x: &Point) -> f64 {
                x.norm_squared()
            }
            fn name(&self) -> String {
                "radial".into()
            }
        }
        let c = trace_level_curve(&Radial, 0.25, 0.0, &Point::new(0.5, 0.0), 0.01).unwrap();
        assert!(c.closed);
        assert!((c.length() - std::f64::consts::PI).abs() < 1e-3);
        let w: f64 = c.trapezoid_weights().iter().sum();
        assert!((w - c.length()).abs() < 1e-12);
    }

    #[test]
    fn disk_region_clips() {
        let p = StaticPhase::default();
        let opts = TraceOptions::new(0.01).in_region(Region::Disk {
            center: [0.0, 0.0],
            radius: 0.5,
        });
        let c = trace_level_curve_with(&p, 0.3, 0.0, &Point::new(0.3, 0.0), &opts).unwrap();
        assert!((c.length() - 0.8).abs() < 0.02);
        let miss = trace_level_curve_with(&p, 0.7, 0.0, &Point::new(0.7, 0.0), &opts).unwrap();
        assert!(miss.is_empty());
    }

    #[test]
    fn synchronized_rotation_traces_through_fd_path() {
        let p = FdPhase(make_dynamic_phase(Arc::new(Rotation::synchronized())));
        let c = trace_level_curve(&p, 0.4, 2.0, &Point::new(0.1, 0.3), 0.02).unwrap();
        assert!(c.points.iter().all(|q| (q[0] - 0.4).abs() < 1e-8));
    }

    #[test]
    fn bad_seed_reports_projection_error() {
        let p = make_static_phase();
        let r = trace_level_curve(&p, 5.0, 0.0, &Point::zeros(), 0.01);
        assert!(matches!(r, Err(Error::SeedProjection { .. })));
    }
}
