//! Solving `nu(t, x) || xi` for `t`: which times see a given covector.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{omega, rot90, Phase, Point, TimeRange, Vector};
use crate::par::{self, Exec};

pub const DEFAULT_SCAN_POINTS: usize = 720;

/// Grid values below this are treated as exact zeros of the residual.
const ZERO_TOL: f64 = 1e-12;

/// A time at which the level curve through `x` is conormal to `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeRoot {
    pub t: f64,
    /// Sign of `nu(t, x) . xi`.
    pub sign: f64,
    /// The residual vanishes on a whole interval of times around `t`.
    pub degenerate: bool,
}

/// Signed angle residual `nu(t, x) . rot90(u)`.
fn residual<P: Phase + ?Sized>(pf: &P, t: f64, x: &Point, up: &Vector) -> f64 {
    let g = pf.grad_x(t, x);
    g.dot(up) / g.norm()
}

pub fn solve_time_for_direction<P: Phase + ?Sized>(
    pf: &P,
    x: &Point,
    xi: &Vector,
    t_range: &TimeRange,
) -> Vec<TimeRoot> {
    solve_time_for_direction_with(pf, x, xi, t_range, DEFAULT_SCAN_POINTS)
}

pub fn solve_time_for_direction_with<P: Phase + ?Sized>(
    pf: &P,
    x: &Point,
    xi: &Vector,
    t_range: &TimeRange,
    n_scan: usize,
) -> Vec<TimeRoot> {
    let norm = xi.norm();
    if !(norm > 0.0) || n_scan == 0 {
        return Vec::new();
    }
    let u = xi / norm;
    let up = rot90(&u);
    let len = t_range.length();
    let time = |k: usize| t_range.start + len * (k as f64) / (n_scan as f64);
    let res = |t: f64| residual(pf, t, x, &up);
    let tag = |t: f64, degenerate: bool| {
        let g = pf.grad_x(t, x);
        TimeRoot {
            t,
            sign: if g.dot(&u) >= 0.0 { 1.0 } else { -1.0 },
            degenerate,
        }
    };

    let wrap = t_range.is_full_turn() && {
        let a = pf.grad_x(t_range.start, x).normalize();
        let b = pf.grad_x(t_range.end, x).normalize();
        (a - b).norm() < 1e-9
    };
    let n_pts = if wrap { n_scan } else { n_scan + 1 };
    let values: Vec<f64> = (0..n_pts).map(|k| res(time(k))).collect();
    let zero: Vec<bool> = values.iter().map(|v| v.abs() <= ZERO_TOL).collect();

    let mut roots = Vec::new();
    if zero.iter().all(|&z| z) {
        roots.push(tag(time(0), true));
        return roots;
    }
    // In the periodic case start the sweep at a nonzero sample so that a run
    // of zeros is never split across the seam.
    let first = if wrap {
        zero.iter().position(|&z| !z).unwrap_or(0)
    } else {
        0
    };
    let idx = |i: usize| (first + i) % n_pts;
    // Times along the sweep, unwrapped so that they increase.
    let sweep_t = |i: usize| time(first + i);
    let n_intervals = if wrap { n_pts } else { n_pts - 1 };

    let mut run: Option<(usize, usize)> = None;
    let flush = |run: &mut Option<(usize, usize)>, roots: &mut Vec<TimeRoot>| {
        if let Some((start, count)) = run.take() {
            let t = t_range.wrap_into(sweep_t(start), wrap);
            roots.push(tag(t, count > 1));
        }
    };
    for i in 0..n_pts {
        let k = idx(i);
        if zero[k] {
            run = match run {
                Some((s, c)) => Some((s, c + 1)),
                None => Some((i, 1)),
            };
            continue;
        }
        flush(&mut run, &mut roots);
        if i >= n_intervals {
            continue;
        }
        let k1 = idx(i + 1);
        let (v0, v1) = (values[k], values[k1]);
        if zero[k1] || v0 * v1 >= 0.0 {
            continue;
        }
        let (mut a, mut b) = (sweep_t(i), sweep_t(i + 1));
        let mut fa = v0;
        for _ in 0..64 {
            let m = 0.5 * (a + b);
            let fm = res(m);
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if (fm < 0.0) == (fa < 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
            if b - a <= 1e-15 * (1.0 + a.abs()) {
                break;
            }
        }
        roots.push(tag(t_range.wrap_into(0.5 * (a + b), wrap), false));
    }
    flush(&mut run, &mut roots);
    roots.sort_by(|a, b| a.t.total_cmp(&b.t));
    roots
}

impl TimeRange {
    /// Wraps into the range when it is periodic, otherwise clamps.
    pub(crate) fn wrap_into(&self, t: f64, periodic: bool) -> f64 {
        if periodic {
            self.wrap(t)
        } else {
            t.clamp(self.start, self.end)
        }
    }
}

/// Visible directions at one point on a uniform angular grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VisibilityMap {
    pub x: [f64; 2],
    /// Direction angles in `[0, 2 pi)`.
    pub directions: Vec<f64>,
    pub count: Vec<usize>,
    pub t_witness: Vec<Vec<f64>>,
}

impl VisibilityMap {
    pub fn visible(&self, k: usize) -> bool {
        self.count[k] > 0
    }

    pub fn visible_fraction(&self) -> f64 {
        let n = self.count.iter().filter(|&&c| c > 0).count();
        n as f64 / self.count.len() as f64
    }

    pub fn invisible_directions(&self) -> Vec<f64> {
        self.directions
            .iter()
            .zip(&self.count)
            .filter(|(_, &c)| c == 0)
            .map(|(d, _)| *d)
            .collect()
    }
}

pub fn visibility_map<P: Phase + ?Sized>(
    pf: &P,
    x: &Point,
    n_dirs: usize,
    t_range: &TimeRange,
) -> Result<VisibilityMap> {
    if n_dirs < 8 {
        return Err(Error::InvalidArgument(format!(
            "need at least 8 directions, got {n_dirs}"
        )));
    }
    pf.check(t_range.start, x)?;
    let directions: Vec<f64> = (0..n_dirs)
        .map(|k| std::f64::consts::TAU * k as f64 / n_dirs as f64)
        .collect();
    let roots = par::map_collect(Exec::default(), n_dirs, |k| {
        solve_time_for_direction(pf, x, &omega(directions[k]), t_range)
    });
    Ok(VisibilityMap {
        x: [x[0], x[1]],
        count: roots.iter().map(Vec::len).collect(),
        t_witness: roots
            .into_iter()
            .map(|r| r.into_iter().map(|root| root.t).collect())
            .collect(),
        directions,
    })
}
