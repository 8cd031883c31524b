//! Phase functions `phi(t, x)` whose level sets `{phi(t, .) = s}` are the
//! curves integrated over by the forward operator.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt::Debug;
use std::sync::Arc;

use super::motion::{Identity, Motion};
use super::{det_columns, omega, omega_perp, Domain, Point, TimeRange, Vector};
use crate::error::{Error, Result};

/// A curve family given as the level sets of `phi(t, .)`.
///
/// Implementors supply `value`; the derivative methods default to central
/// differences with step [`Phase::fd_step`] and are overridden where a closed
/// form exists. The unchecked methods are the hot-path API; [`Phase::eval`]
/// validates the point first.
pub trait Phase: Send + Sync + Debug {
    fn domain(&self) -> Domain;
    fn t_range(&self) -> TimeRange;
    fn value(&self, t: f64, x: &Point) -> f64;

    fn grad_x(&self, t: f64, x: &Point) -> Vector {
        fd_grad_x(self, t, x)
    }

    fn value_grad(&self, t: f64, x: &Point) -> (f64, Vector) {
        (self.value(t, x), self.grad_x(t, x))
    }

    fn dt(&self, t: f64, x: &Point) -> f64 {
        fd_dt(self, t, x)
    }

    /// Mixed derivative `d_t d_x phi`.
    fn dt_grad_x(&self, t: f64, x: &Point) -> Vector {
        let e = self.fd_step();
        (self.grad_x(t + e, x) - self.grad_x(t - e, x)) / (2.0 * e)
    }

    fn dtt(&self, t: f64, x: &Point) -> f64 {
        let e = self.fd_step();
        (self.dt(t + e, x) - self.dt(t - e, x)) / (2.0 * e)
    }

    /// True when every derivative above has a closed form.
    fn analytic_derivatives(&self) -> bool {
        false
    }

    fn fd_step(&self) -> f64 {
        1e-4 * self.domain().diameter()
    }

    /// Period of `phi` in `t`, when `phi(t + p, .) = phi(t, .)`.
    fn t_period(&self) -> Option<f64> {
        None
    }

    fn check(&self, t: f64, x: &Point) -> Result<()> {
        if self.domain().contains(x) {
            Ok(())
        } else {
            Err(Error::Domain { t, x: *x })
        }
    }

    fn eval(&self, t: f64, x: &Point) -> Result<f64> {
        self.check(t, x)?;
        Ok(self.value(t, x))
    }

    fn name(&self) -> String;
}

macro_rules! forward_phase {
    ($($ty:ty),*) => {$(
        impl<P: Phase + ?Sized> Phase for $ty {
            fn domain(&self) -> Domain {
                (**self).domain()
            }
            fn t_range(&self) -> TimeRange {
                (**self).t_range()
            }
            fn value(&self, t: f64, x: &Point) -> f64 {
                (**self).value(t, x)
            }
            fn grad_x(&self, t: f64, x: &Point) -> Vector {
                (**self).grad_x(t, x)
            }
            fn value_grad(&self, t: f64, x: &Point) -> (f64, Vector) {
                (**self).value_grad(t, x)
            }
            fn dt(&self, t: f64, x: &Point) -> f64 {
                (**self).dt(t, x)
            }
            fn dt_grad_x(&self, t: f64, x: &Point) -> Vector {
                (**self).dt_grad_x(t, x)
            }
            fn dtt(&self, t: f64, x: &Point) -> f64 {
                (**self).dtt(t, x)
            }
            fn analytic_derivatives(&self) -> bool {
                (**self).analytic_derivatives()
            }
            fn fd_step(&self) -> f64 {
                (**self).fd_step()
            }
            fn t_period(&self) -> Option<f64> {
                (**self).t_period()
            }
            fn check(&self, t: f64, x: &Point) -> Result<()> {
                (**self).check(t, x)
            }
            fn name(&self) -> String {
                (**self).name()
            }
        }
    )*};
}

forward_phase!(Arc<P>, Box<P>, &P);

fn fd_grad_x<P: Phase + ?Sized>(p: &P, t: f64, x: &Point) -> Vector {
    let e = p.fd_step();
    let dx = Vector::new(e, 0.0);
    let dy = Vector::new(0.0, e);
    Vector::new(
        (p.value(t, &(x + dx)) - p.value(t, &(x - dx))) / (2.0 * e),
        (p.value(t, &(x + dy)) - p.value(t, &(x - dy))) / (2.0 * e),
    )
}

fn fd_dt<P: Phase + ?Sized>(p: &P, t: f64, x: &Point) -> f64 {
    let e = p.fd_step();
    (p.value(t + e, x) - p.value(t - e, x)) / (2.0 * e)
}

/// Wraps a phase and evaluates every derivative by central differences.
#[derive(Debug, Clone)]
pub struct FdPhase<P>(pub P);

impl<P: Phase> Phase for FdPhase<P> {
    fn domain(&self) -> Domain {
        self.0.domain()
    }
    fn t_range(&self) -> TimeRange {
        self.0.t_range()
    }
    fn value(&self, t: f64, x: &Point) -> f64 {
        self.0.value(t, x)
    }
    fn t_period(&self) -> Option<f64> {
        self.0.t_period()
    }
    fn check(&self, t: f64, x: &Point) -> Result<()> {
        self.0.check(t, x)
    }
    fn name(&self) -> String {
        format!("fd({})", self.0.name())
    }
}

/// `phi(t, x) = x . omega(t)`: the classical Radon transform.
#[derive(Debug, Clone, Copy, Default)]
pub struct StaticPhase {
    pub domain: Domain,
    pub t_range: TimeRange,
}

impl StaticPhase {
    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }
    pub fn with_t_range(mut self, t_range: TimeRange) -> Self {
        self.t_range = t_range;
        self
    }
}

impl Phase for StaticPhase {
    fn domain(&self) -> Domain {
        self.domain
    }
    fn t_range(&self) -> TimeRange {
        self.t_range
    }
    #[inline]
    fn value(&self, t: f64, x: &Point) -> f64 {
        x.dot(&omega(t))
    }
    #[inline]
    fn grad_x(&self, t: f64, _x: &Point) -> Vector {
        omega(t)
    }
    #[inline]
    fn value_grad(&self, t: f64, x: &Point) -> (f64, Vector) {
        let w = omega(t);
        (x.dot(&w), w)
    }
    fn dt(&self, t: f64, x: &Point) -> f64 {
        x.dot(&omega_perp(t))
    }
    fn dt_grad_x(&self, t: f64, _x: &Point) -> Vector {
        omega_perp(t)
    }
    fn dtt(&self, t: f64, x: &Point) -> f64 {
        -x.dot(&omega(t))
    }
    fn analytic_derivatives(&self) -> bool {
        true
    }
    fn t_period(&self) -> Option<f64> {
        Some(TAU)
    }
    fn name(&self) -> String {
        "static".into()
    }
}

/// `phi(t, x) = psi_t^{-1}(x) . omega(t)` for a moving object.
#[derive(Debug, Clone)]
pub struct DynamicPhase {
    pub motion: Arc<dyn Motion>,
    pub domain: Domain,
    pub t_range: TimeRange,
    analytic: bool,
}

impl DynamicPhase {
    pub fn new(motion: Arc<dyn Motion>) -> Self {
        let analytic = motion.dt_inverse_jacobian(0.0, &Point::zeros()).is_some();
        DynamicPhase {
            motion,
            domain: Domain::default(),
            t_range: TimeRange::full(),
            analytic,
        }
    }
    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }
    pub fn with_t_range(mut self, t_range: TimeRange) -> Self {
        self.t_range = t_range;
        self
    }
}

impl Default for DynamicPhase {
    fn default() -> Self {
        DynamicPhase::new(Arc::new(Identity))
    }
}

impl Phase for DynamicPhase {
    fn domain(&self) -> Domain {
        self.domain
    }
    fn t_range(&self) -> TimeRange {
        self.t_range
    }
    fn value(&self, t: f64, x: &Point) -> f64 {
        self.motion.inverse(t, x).dot(&omega(t))
    }
    fn grad_x(&self, t: f64, x: &Point) -> Vector {
        self.motion.inverse_jacobian(t, x).transpose() * omega(t)
    }
    fn value_grad(&self, t: f64, x: &Point) -> (f64, Vector) {
        let (z, dinv) = self.motion.inverse_with_jacobian(t, x);
        let w = omega(t);
        (z.dot(&w), dinv.transpose() * w)
    }
    fn dt(&self, t: f64, x: &Point) -> f64 {
        let z = self.motion.inverse(t, x);
        self.motion.dt_inverse(t, x).dot(&omega(t)) + z.dot(&omega_perp(t))
    }
    fn dt_grad_x(&self, t: f64, x: &Point) -> Vector {
        match self.motion.dt_inverse_jacobian(t, x) {
            Some(rate) => {
                let dinv = self.motion.inverse_jacobian(t, x);
                rate.transpose() * omega(t) + dinv.transpose() * omega_perp(t)
            }
            None => {
                let e = self.fd_step();
                (self.grad_x(t + e, x) - self.grad_x(t - e, x)) / (2.0 * e)
            }
        }
    }
    fn analytic_derivatives(&self) -> bool {
        self.analytic
    }
    fn t_period(&self) -> Option<f64> {
        self.motion.period()
    }
    fn name(&self) -> String {
        format!("dynamic({})", self.motion.name())
    }
}

/// Fan-beam curve family: the rays from the source `S(t) = R omega(t)`.
///
/// The level value is the polar angle of the ray normal,
/// `phi = t + gamma - pi/2`, where `gamma in (-pi/2, pi/2)` is the fan angle
/// of the ray through `x`. On the half-plane `x1 > R cos t` this agrees with
/// `atan((x1 - R cos t) / (R sin t - x2))` up to an integer multiple of pi,
/// and it stays smooth for every source position.
#[derive(Debug, Clone, Copy)]
pub struct FanBeamPhase {
    pub radius: f64,
    pub domain: Domain,
    pub t_range: TimeRange,
}

impl FanBeamPhase {
    pub fn new(radius: f64) -> Result<Self> {
        Self::with_domain(radius, Domain::default())
    }

    pub fn with_domain(radius: f64, domain: Domain) -> Result<Self> {
        if !(radius > domain.max_radius()) {
            return Err(Error::InvalidArgument(format!(
                "source radius {radius} must exceed the domain radius {}",
                domain.max_radius()
            )));
        }
        Ok(FanBeamPhase {
            radius,
            domain,
            t_range: TimeRange::full(),
        })
    }

    pub fn with_t_range(mut self, t_range: TimeRange) -> Self {
        self.t_range = t_range;
        self
    }

    /// Source position `S(t)`.
    pub fn source(&self, t: f64) -> Point {
        omega(t) * self.radius
    }

    /// Fan angle of the ray from `S(t)` through `x`.
    pub fn fan_angle(&self, t: f64, x: &Point) -> f64 {
        let (u, v) = self.uv(t, x);
        u.atan2(v)
    }

    #[inline]
    fn uv(&self, t: f64, x: &Point) -> (f64, f64) {
        (-x.dot(&omega_perp(t)), self.radius - x.dot(&omega(t)))
    }
}

impl Phase for FanBeamPhase {
    fn domain(&self) -> Domain {
        self.domain
    }
    fn t_range(&self) -> TimeRange {
        self.t_range
    }
    fn value(&self, t: f64, x: &Point) -> f64 {
        t + self.fan_angle(t, x) - FRAC_PI_2
    }
    fn grad_x(&self, t: f64, x: &Point) -> Vector {
        let (u, v) = self.uv(t, x);
        (omega(t) * u - omega_perp(t) * v) / (u * u + v * v)
    }
    fn value_grad(&self, t: f64, x: &Point) -> (f64, Vector) {
        let (u, v) = self.uv(t, x);
        let w = omega(t);
        let wp = omega_perp(t);
        (
            t + u.atan2(v) - FRAC_PI_2,
            (w * u - wp * v) / (u * u + v * v),
        )
    }
    fn dt(&self, t: f64, x: &Point) -> f64 {
        let p = x.dot(&omega(t));
        let q = x.dot(&omega_perp(t));
        let v = self.radius - p;
        1.0 + (v * p - q * q) / (q * q + v * v)
    }
    fn dt_grad_x(&self, t: f64, x: &Point) -> Vector {
        let (u, v) = self.uv(t, x);
        let q = -u;
        let d = u * u + v * v;
        let numer = omega(t) * u - omega_perp(t) * v;
        (omega(t) * d + numer * (2.0 * q)) * (self.radius / (d * d))
    }
    fn dtt(&self, t: f64, x: &Point) -> f64 {
        let p = x.dot(&omega(t));
        let q = x.dot(&omega_perp(t));
        let v = self.radius - p;
        let d = q * q + v * v;
        q * self.radius * (d + 2.0 * (v * p - q * q)) / (d * d)
    }
    fn analytic_derivatives(&self) -> bool {
        true
    }
    fn check(&self, t: f64, x: &Point) -> Result<()> {
        if x.dot(&omega(t)) >= self.radius {
            return Err(Error::Branch {
                t,
                x: *x,
                reason: "point is not in front of the source".into(),
            });
        }
        if !self.domain.contains(x) {
            return Err(Error::Domain { t, x: *x });
        }
        Ok(())
    }
    fn name(&self) -> String {
        format!("fanbeam(R={})", self.radius)
    }
}

pub fn make_static_phase() -> StaticPhase {
    StaticPhase::default()
}

pub fn make_dynamic_phase(motion: Arc<dyn Motion>) -> DynamicPhase {
    DynamicPhase::new(motion)
}

pub fn make_fanbeam_phase(radius: f64) -> Result<FanBeamPhase> {
    FanBeamPhase::new(radius)
}

/// All first derivatives of `phi` at one point, plus the local Bolker
/// determinant `h = det[d_x phi, d_t d_x phi]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LevelCurveFrame {
    pub t: f64,
    pub x: [f64; 2],
    pub s: f64,
    pub g: [f64; 2],
    pub dt_phi: f64,
    pub m: [f64; 2],
    pub nu: [f64; 2],
    pub j: f64,
    pub h: f64,
}

impl LevelCurveFrame {
    pub fn normal(&self) -> Vector {
        Vector::new(self.nu[0], self.nu[1])
    }
}

pub fn fd_derivatives<P: Phase + ?Sized>(pf: &P, t: f64, x: &Point) -> Result<LevelCurveFrame> {
    pf.check(t, x)?;
    if !pf.analytic_derivatives() && !pf.domain().contains_interior(x, pf.fd_step()) {
        return Err(Error::Domain { t, x: *x });
    }
    let (s, g) = pf.value_grad(t, x);
    let m = pf.dt_grad_x(t, x);
    let j = g.norm();
    let nu = g / j;
    Ok(LevelCurveFrame {
        t,
        x: [x[0], x[1]],
        s,
        g: [g[0], g[1]],
        dt_phi: pf.dt(t, x),
        m: [m[0], m[1]],
        nu: [nu[0], nu[1]],
        j,
        h: det_columns(&g, &m),
    })
}

/// Value and mixed-Hessian determinant of the order-one homogeneous
/// extension `|theta| phi(arg theta, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousValue {
    pub value: f64,
    pub hessian_det: f64,
    /// `arg theta` as mapped into the phase's time range.
    pub t: f64,
}

/// Width of the band around a branch cut in which `arg theta` is rejected.
const BRANCH_GUARD: f64 = 1e-9;

/// Maps `arg theta` into the phase's time range, failing where the choice
/// of branch would be ambiguous.
pub fn branch_time<P: Phase + ?Sized>(pf: &P, theta: &Vector, x: &Point) -> Result<f64> {
    let raw = theta[1].atan2(theta[0]);
    let range = pf.t_range();
    if pf.t_period().is_some() {
        return Ok(range.wrap(raw));
    }
    let t = range.wrap(raw);
    let near_cut = (t - range.start).abs() < BRANCH_GUARD
        || (range.start + TAU - t).abs() < BRANCH_GUARD;
    if near_cut && range.length() >= TAU - BRANCH_GUARD {
        return Err(Error::Branch {
            t,
            x: *x,
            reason: "arg(theta) is at the cut of a non-periodic phase".into(),
        });
    }
    if !range.contains(t) {
        return Err(Error::Branch {
            t,
            x: *x,
            reason: "arg(theta) is outside the time range".into(),
        });
    }
    Ok(t)
}

pub fn homogeneous_extension<P: Phase + ?Sized>(
    pf: &P,
    theta: &Vector,
    x: &Point,
) -> Result<HomogeneousValue> {
    let norm = theta.norm();
    if !(norm > 0.0) {
        return Err(Error::InvalidArgument("theta must be nonzero".into()));
    }
    let t = branch_time(pf, theta, x)?;
    pf.check(t, x)?;
    let (value, g) = pf.value_grad(t, x);
    let m = pf.dt_grad_x(t, x);
    let (sin, cos) = t.sin_cos();
    let row1 = g * cos - m * sin;
    let row2 = g * sin + m * cos;
    Ok(HomogeneousValue {
        value: norm * value,
        hessian_det: det_columns(&row1, &row2),
        t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::motion::{Breathing, Rotation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn samples(n: usize, half: f64) -> Vec<(f64, Point)> {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        (0..n)
            .map(|_| {
                (
                    rng.random_range(0.0..TAU),
                    Point::new(rng.random_range(-half..half), rng.random_range(-half..half)),
                )
            })
            .collect()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-12)
    }

    #[test]
    fn static_phase_examples() {
        let p = make_static_phase();
        assert_eq!(p.eval(0.0, &Point::new(1.0, 0.0)).unwrap(), 1.0);
        assert_eq!(p.grad_x(0.0, &Point::new(1.0, 0.0)), Vector::new(1.0, 0.0));
        assert!((p.value(FRAC_PI_2, &Point::new(3.0, 2.0)) - 2.0).abs() < 1e-15);
        assert!((p.value(FRAC_PI_4, &Point::new(1.0, 1.0)) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let phases: Vec<Box<dyn Phase>> = vec![
            Box::new(make_static_phase()),
            Box::new(make_fanbeam_phase(3.0).unwrap()),
            Box::new(make_dynamic_phase(Arc::new(Rotation::new(0.3)))),
            Box::new(make_dynamic_phase(Arc::new(
                crate::geometry::Affine::new(0.1).unwrap(),
            ))),
        ];
        for p in &phases {
            assert!(p.analytic_derivatives(), "{}", p.name());
            let fd = FdPhase(p);
            for (t, x) in samples(100, 1.0) {
                let tol = |a: f64, b: f64| (a - b).abs() <= 1e-6 * b.abs().max(1e-2);
                let (g, gf) = (p.grad_x(t, &x), fd.grad_x(t, &x));
                assert!(tol(g[0], gf[0]) && tol(g[1], gf[1]), "{} grad", p.name());
                assert!(tol(p.dt(t, &x), fd.dt(t, &x)), "{} dt", p.name());
                let (m, mf) = (p.dt_grad_x(t, &x), fd.dt_grad_x(t, &x));
                assert!(
                    (m - mf).norm() <= 1e-6 * m.norm().max(1e-2),
                    "{} mixed {m} {mf}",
                    p.name()
                );
                let e = 1e-5;
                let dtt = (p.dt(t + e, &x) - p.dt(t - e, &x)) / (2.0 * e);
                assert!((p.dtt(t, &x) - dtt).abs() < 1e-6 * dtt.abs().max(1.0), "{}", p.name());
            }
        }
    }

    #[test]
    fn gradient_never_vanishes_on_builtins() {
        let phases: Vec<Box<dyn Phase>> = vec![
            Box::new(make_static_phase()),
            Box::new(make_fanbeam_phase(3.0).unwrap()),
            Box::new(make_dynamic_phase(Arc::new(Breathing::new(0.1, 1.0).unwrap()))),
        ];
        for p in &phases {
            for (t, x) in samples(500, 1.2) {
                assert!(p.grad_x(t, &x).norm() > 0.1, "{}", p.name());
            }
        }
    }

    #[test]
    fn identity_motion_reproduces_static_phase() {
        let s = make_static_phase();
        let d = make_dynamic_phase(Arc::new(Identity));
        for (t, x) in samples(200, 1.2) {
            assert!((s.value(t, &x) - d.value(t, &x)).abs() < 1e-14);
            assert!((s.dt(t, &x) - d.dt(t, &x)).abs() < 1e-14);
            assert!((s.dt_grad_x(t, &x) - d.dt_grad_x(t, &x)).norm() < 1e-14);
        }
    }

    #[test]
    fn synchronized_rotation_freezes_the_phase() {
        let d = make_dynamic_phase(Arc::new(Rotation::synchronized()));
        for (t, x) in samples(100, 1.2) {
            assert!((d.value(t, &x) - x[0]).abs() < 1e-14);
            let f = fd_derivatives(&d, t, &x).unwrap();
            assert!(f.m[0].abs() < 1e-12 && f.m[1].abs() < 1e-12);
            assert!(f.h.abs() < 1e-12);
        }
    }

    #[test]
    fn co_rotation_doubles_the_angle() {
        let d = make_dynamic_phase(Arc::new(Rotation::new(1.0)));
        for (t, x) in samples(100, 1.2) {
            assert!((d.value(t, &x) - x.dot(&omega(2.0 * t))).abs() < 1e-14);
            let f = fd_derivatives(&d, t, &x).unwrap();
            assert!((f.h - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn static_frame_has_unit_jacobian_and_bolker() {
        let p = make_static_phase();
        for (t, x) in samples(100, 1.0) {
            let f = fd_derivatives(&p, t, &x).unwrap();
            assert!((f.j - 1.0).abs() < 1e-14);
            assert!((f.h - 1.0).abs() < 1e-14);
            assert!((f.normal().norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn fd_frame_requires_interior_points() {
        let p = FdPhase(make_static_phase());
        assert!(fd_derivatives(&p, 0.0, &Point::new(1.25, 0.0)).is_err());
        assert!(fd_derivatives(&p, 0.0, &Point::new(1.3, 0.0)).is_err());
        assert!(fd_derivatives(&p, 0.0, &Point::new(1.0, 0.0)).is_ok());
    }

    #[test]
    fn fanbeam_example_and_rays() {
        let p = make_fanbeam_phase(2.0).unwrap();
        assert!(p.value(FRAC_PI_2, &Point::zeros()).abs() < 1e-15);
        // constant along the ray from the source
        let t = 0.7;
        let dir = (Point::new(0.3, -0.2) - p.source(t)).normalize();
        let v0 = p.value(t, &Point::new(0.3, -0.2));
        for k in 0..10 {
            let x = p.source(t) + dir * (1.0 + 0.2 * k as f64);
            if p.domain.contains(&x) {
                assert!((p.value(t, &x) - v0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn fanbeam_matches_arctangent_form_on_its_branch() {
        let p = make_fanbeam_phase(3.0).unwrap();
        for (t, x) in samples(2000, 1.2) {
            let a1 = x[0] - 3.0 * t.cos();
            let den = 3.0 * t.sin() - x[1];
            if a1 <= 0.0 || den.abs() < 1e-6 {
                continue;
            }
            let reference = (a1 / den).atan();
            let k = (p.value(t, &x) - reference) / PI;
            assert!((k - k.round()).abs() < 1e-10, "offset {k}");
        }
    }

    #[test]
    fn fanbeam_branch_and_domain_errors() {
        let p = FanBeamPhase::with_domain(3.0, Domain::square(5.0));
        assert!(p.is_err());
        let p = make_fanbeam_phase(3.0).unwrap();
        assert!(matches!(
            p.check(0.0, &Point::new(3.5, 0.0)),
            Err(Error::Branch { .. })
        ));
        assert!(matches!(
            p.check(PI, &Point::new(1.5, 0.0)),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn homogeneous_extension_is_order_one() {
        let p = make_dynamic_phase(Arc::new(Breathing::new(0.1, 1.0).unwrap()));
        for (t, x) in samples(50, 0.9) {
            let theta = omega(t) * 0.7;
            let base = homogeneous_extension(&p, &theta, &x).unwrap();
            for lambda in [2.0, 10.0] {
                let scaled = homogeneous_extension(&p, &(theta * lambda), &x).unwrap();
                assert!(rel(scaled.value, lambda * base.value) < 1e-12 || base.value.abs() < 1e-14);
                assert!((scaled.hessian_det - base.hessian_det).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn static_homogeneous_hessian_is_one() {
        let p = make_static_phase();
        for (t, x) in samples(50, 1.0) {
            let hv = homogeneous_extension(&p, &omega(t), &x).unwrap();
            assert!((hv.hessian_det - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn branch_cut_of_non_periodic_phase_is_rejected() {
        let p = make_fanbeam_phase(3.0).unwrap();
        let r = homogeneous_extension(&p, &Vector::new(1.0, 0.0), &Point::new(0.1, 0.2));
        assert!(matches!(r, Err(Error::Branch { .. })));
        assert!(homogeneous_extension(&p, &Vector::new(1.0, 0.3), &Point::new(0.1, 0.2)).is_ok());
        let limited = make_static_phase().with_t_range(TimeRange::new(0.0, 1.0));
        assert!(homogeneous_extension(&limited, &Vector::new(-1.0, 0.1), &Point::zeros()).is_ok());
        assert!(homogeneous_extension(&make_static_phase(), &Vector::zeros(), &Point::zeros())
            .is_err());
    }
}
