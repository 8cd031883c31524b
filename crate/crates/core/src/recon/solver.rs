//! Iterative solvers for the localized normal equations.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::atlas::CutoffAtlas;
use crate::operators::forward::LevelSetOperator;
use crate::operators::grid::{ImageGrid, Sinogram};
use crate::operators::normal::NormalOperator;

/// Consecutive residual increases tolerated before giving up.
pub const DIVERGENCE_STREAK: usize = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Conjugate residuals: Krylov iteration with monotone residual norm.
    #[default]
    Cr,
    /// Classical conjugate gradients.
    Cg,
    /// Landweber with step `1 / |N|`.
    Landweber,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Stop when `|r| / |b|` drops below this.
    pub tol: f64,
    /// Tikhonov weight `lambda` in `(N + lambda) f = b`.
    #[serde(default)]
    pub tikhonov: f64,
    #[serde(default)]
    pub method: Method,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iter: 50,
            tol: 1e-6,
            tikhonov: 0.0,
            method: Method::Cr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub method: Method,
    pub iterations: usize,
    /// Relative residual `|b - N f| / |b|`, starting with the initial guess.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub rel_error_vs_truth: Option<f64>,
    #[serde(skip)]
    pub runtime: Duration,
}

impl SolveReport {
    /// Records the relative error against `truth` inside the disk `radius`.
    pub fn with_truth(mut self, rec: &ImageGrid, truth: &ImageGrid, radius: f64) -> Self {
        self.rel_error_vs_truth = Some(rel_error_in_disk(rec, truth, radius));
        self
    }
}

/// `|rec - truth| / |truth|` over pixels with `|x| <= radius`.
pub fn rel_error_in_disk(rec: &ImageGrid, truth: &ImageGrid, radius: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, (a, b)) in rec.values.iter().zip(&truth.values).enumerate() {
        if truth.spec.point_at(k).norm() <= radius {
            num += (a - b) * (a - b);
            den += b * b;
        }
    }
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// Solves `(N_sym + lambda) f = sum_i sqrt(chi_iX) A^T chi_iY g` with the
/// symmetric localization and the exact transpose.
pub fn cg_normal_solve(
    op: &LevelSetOperator,
    atlas: &CutoffAtlas,
    g: &Sinogram,
    opts: &SolveOptions,
) -> Result<(ImageGrid, SolveReport)> {
    op.prepare()?;
    if g.nan_count() > 0 {
        return Err(Error::NanBudget {
            failed: g.nan_count(),
            total: g.values.len(),
            budget: 0.0,
        });
    }
    let n = NormalOperator::symmetric(op, atlas);
    let b = n.rhs(g)?;
    let lambda = opts.tikhonov;
    solve(|f| {
        let mut y = n.apply(f)?;
        if lambda != 0.0 {
            y.axpy(lambda, f);
        }
        Ok(y)
    }, &b, opts)
}

/// Solves `apply(f) = b` for a symmetric nonnegative `apply`.
pub fn solve<F>(apply: F, b: &ImageGrid, opts: &SolveOptions) -> Result<(ImageGrid, SolveReport)>
where
    F: Fn(&ImageGrid) -> Result<ImageGrid>,
{
    let start = Instant::now();
    let mut report = SolveReport {
        method: opts.method,
        iterations: 0,
        residual_history: vec![1.0],
        converged: false,
        rel_error_vs_truth: None,
        runtime: Duration::ZERO,
    };
    let bnorm = b.norm();
    let mut x = ImageGrid::zeros(b.spec);
    if bnorm == 0.0 {
        report.residual_history = vec![0.0];
        report.converged = true;
        return Ok((x, report));
    }
    let mut tracker = Tracker::default();
    match opts.method {
        Method::Cr => {
            let mut r = b.clone();
            let mut ar = apply(&r)?;
            let mut p = r.clone();
            let mut ap = ar.clone();
            let mut rar = r.inner(&ar);
            for it in 1..=opts.max_iter {
                let apap = ap.inner(&ap);
                if !(apap > 0.0) || rar == 0.0 {
                    break;
                }
                let alpha = rar / apap;
                x.axpy(alpha, &p);
                r.axpy(-alpha, &ap);
                let rel = r.norm() / bnorm;
                report.iterations = it;
                report.residual_history.push(rel);
                tracker.push(rel, it)?;
                if rel < opts.tol {
                    report.converged = true;
                    break;
                }
                ar = apply(&r)?;
                let rar_new = r.inner(&ar);
                let beta = rar_new / rar;
                rar = rar_new;
                p = combine(&r, beta, &p);
                ap = combine(&ar, beta, &ap);
            }
        }
        Method::Cg => {
            let mut r = b.clone();
            let mut p = r.clone();
            let mut rr = r.inner(&r);
            for it in 1..=opts.max_iter {
                let ap = apply(&p)?;
                let pap = p.inner(&ap);
                if !(pap > 0.0) {
                    break;
                }
                let alpha = rr / pap;
                x.axpy(alpha, &p);
                r.axpy(-alpha, &ap);
                let rr_new = r.inner(&r);
                let rel = rr_new.sqrt() / bnorm;
                report.iterations = it;
                report.residual_history.push(rel);
                tracker.push(rel, it)?;
                if rel < opts.tol {
                    report.converged = true;
                    break;
                }
                p = combine(&r, rr_new / rr, &p);
                rr = rr_new;
            }
        }
        Method::Landweber => {
            let step = 1.0 / power_norm(&apply, b, 12)?;
            let mut r = b.clone();
            for it in 1..=opts.max_iter {
                x.axpy(step, &r);
                let nx = apply(&x)?;
                r = combine(b, -1.0, &nx);
                let rel = r.norm() / bnorm;
                report.iterations = it;
                report.residual_history.push(rel);
                tracker.push(rel, it)?;
                if rel < opts.tol {
                    report.converged = true;
                    break;
                }
            }
        }
    }
    report.runtime = start.elapsed();
    Ok((x, report))
}

#[derive(Default)]
struct Tracker {
    last: Option<f64>,
    streak: usize,
}

impl Tracker {
    fn push(&mut self, rel: f64, it: usize) -> Result<()> {
        if !rel.is_finite() {
            return Err(Error::Divergence(it));
        }
        if let Some(last) = self.last {
            if rel > last {
                self.streak += 1;
                if self.streak >= DIVERGENCE_STREAK {
                    return Err(Error::Divergence(it));
                }
            } else {
                self.streak = 0;
            }
        }
        self.last = Some(rel);
        Ok(())
    }
}

/// `a + beta b`.
fn combine(a: &ImageGrid, beta: f64, b: &ImageGrid) -> ImageGrid {
    let mut out = a.clone();
    out.axpy(beta, b);
    out
}

/// Power-iteration estimate of the largest eigenvalue, padded by 5%.
fn power_norm<F>(apply: &F, start: &ImageGrid, iters: usize) -> Result<f64>
where
    F: Fn(&ImageGrid) -> Result<ImageGrid>,
{
    let mut v = start.scaled(1.0 / start.norm());
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = apply(&v)?;
        lambda = v.inner(&w);
        let n = w.norm();
        if n == 0.0 {
            break;
        }
        v = w.scaled(1.0 / n);
    }
    Ok(1.05 * lambda.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::grid::GridSpec;

    /// Diagonal SPD operator with a known solution.
    fn diag(spec: GridSpec) -> impl Fn(&ImageGrid) -> Result<ImageGrid> {
        move |f: &ImageGrid| {
            let mut out = f.clone();
            for (k, v) in out.values.iter_mut().enumerate() {
                *v *= 1.0 + (k % 7) as f64;
            }
            let _ = spec;
            Ok(out)
        }
    }

    #[test]
    fn all_methods_solve_a_diagonal_system() {
        let spec = GridSpec::square(8, 1.0, 2.0);
        let truth = ImageGrid::from_fn(spec, |x| x[0] + 2.0 * x[1]);
        let b = diag(spec)(&truth).unwrap();
        for method in [Method::Cr, Method::Cg, Method::Landweber] {
            let opts = SolveOptions { max_iter: 400, tol: 1e-10, method, ..Default::default() };
            let (x, rep) = solve(diag(spec), &b, &opts).unwrap();
            assert!(rep.converged, "{method:?}");
            assert!(crate::operators::grid::rel_l2(&x.values, &truth.values) < 1e-8, "{method:?}");
        }
    }

    #[test]
    fn cr_residuals_are_monotone() {
        let spec = GridSpec::square(8, 1.0, 2.0);
        let b = ImageGrid::from_fn(spec, |x| (3.0 * x[0]).cos());
        let opts = SolveOptions { max_iter: 20, tol: 0.0, ..Default::default() };
        let (_, rep) = solve(diag(spec), &b, &opts).unwrap();
        for w in rep.residual_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
    }

    #[test]
    fn zero_data_stops_immediately() {
        let spec = GridSpec::square(8, 1.0, 2.0);
        let (x, rep) = solve(diag(spec), &ImageGrid::zeros(spec), &SolveOptions::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(x.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn indefinite_operator_is_reported() {
        let spec = GridSpec::square(8, 1.0, 2.0);
        let b = ImageGrid::from_fn(spec, |x| 1.0 + x[0]);
        let grow = |f: &ImageGrid| Ok(f.scaled(-1.0));
        let opts = SolveOptions { method: Method::Landweber, ..Default::default() };
        // negative definite: power estimate is negative, steps blow up
        let r = solve(grow, &b, &opts);
        assert!(matches!(r, Err(Error::Divergence(_))));
    }
}
