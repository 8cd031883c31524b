//! Smooth cutoffs `chi_X(x)`, `chi_Y(s, t)` and a chart atlas covering a
//! compact target set.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{CoverageReport, Error, Result};
use crate::geometry::{omega, Phase, Point};
use crate::microlocal::solve_time_for_direction;

/// C^2 cosine taper: 1 on `[0, R/2]`, 0 on `[R, inf)`.
#[inline]
pub fn cosine_taper(r: f64, radius: f64) -> f64 {
    if radius.is_infinite() {
        return 1.0;
    }
    let half = 0.5 * radius;
    if r <= half {
        1.0
    } else if r >= radius {
        0.0
    } else {
        let u = (r - half) / half;
        1.0 - (u - (TAU * u).sin() / TAU)
    }
}

/// One localization: a disk in the object plane and a box in data space.
/// Infinite radii switch the corresponding cutoff off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub x_center: [f64; 2],
    pub x_radius: f64,
    pub s_center: f64,
    pub s_radius: f64,
    pub t_center: f64,
    pub t_radius: f64,
}

impl Chart {
    pub fn everywhere() -> Self {
        Chart {
            x_center: [0.0, 0.0],
            x_radius: f64::INFINITY,
            s_center: 0.0,
            s_radius: f64::INFINITY,
            t_center: 0.0,
            t_radius: f64::INFINITY,
        }
    }

    pub fn chi_x(&self, x: &Point) -> f64 {
        let r = (x[0] - self.x_center[0]).hypot(x[1] - self.x_center[1]);
        cosine_taper(r, self.x_radius)
    }

    /// Time distance is measured around the circle.
    pub fn chi_y(&self, s: f64, t: f64) -> f64 {
        let dt = (t - self.t_center + PI).rem_euclid(TAU) - PI;
        cosine_taper((s - self.s_center).abs(), self.s_radius)
            * cosine_taper(dt.abs(), self.t_radius)
    }

    pub fn is_trivial_y(&self) -> bool {
        self.s_radius.is_infinite() && self.t_radius.is_infinite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffAtlas {
    pub charts: Vec<Chart>,
}

impl CutoffAtlas {
    /// A single chart with `chi = 1` everywhere.
    pub fn trivial() -> Self {
        CutoffAtlas {
            charts: vec![Chart::everywhere()],
        }
    }

    pub fn len(&self) -> usize {
        self.charts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charts.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.charts.len() == 1
            && self.charts[0].x_radius.is_infinite()
            && self.charts[0].is_trivial_y()
    }

    pub fn sum_chi_x(&self, x: &Point) -> f64 {
        self.charts.iter().map(|c| c.chi_x(x)).sum()
    }
}

/// Disk-shaped target set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSet {
    pub center: [f64; 2],
    pub radius: f64,
}

impl TargetSet {
    pub fn contains(&self, x: &Point) -> bool {
        (x[0] - self.center[0]).hypot(x[1] - self.center[1]) <= self.radius
    }
}

/// Directions sampled by the visibility part of the coverage check.
const COVERAGE_DIRECTIONS: usize = 72;
const COVER_THRESHOLD: f64 = 0.5;

/// Builds `n_charts` object-side charts on a square grid over `k` with 50%
/// overlap and checks that they cover `k` and that every direction is seen
/// by some time in the phase's range.
pub fn build_default_atlas<P: Phase + ?Sized>(
    pf: &P,
    k: &TargetSet,
    n_charts: usize,
) -> Result<CutoffAtlas> {
    let atlas = default_charts(k, n_charts)?;
    let report = coverage_report(pf, &atlas, k);
    if report.uncovered_points.is_empty() && report.invisible_directions.is_empty() {
        Ok(atlas)
    } else {
        Err(Error::Coverage(report))
    }
}

/// The charts of [`build_default_atlas`] without the covering check.
pub fn default_charts(k: &TargetSet, n_charts: usize) -> Result<CutoffAtlas> {
    if n_charts == 0 {
        return Err(Error::InvalidArgument("n_charts must be at least 1".into()));
    }
    let atlas = if n_charts == 1 {
        CutoffAtlas::trivial()
    } else {
        let g = (n_charts as f64).sqrt().round() as usize;
        if g * g != n_charts {
            return Err(Error::InvalidArgument(format!(
                "n_charts = {n_charts} is not a square number"
            )));
        }
        let d = 2.0 * k.radius / g as f64;
        let mut charts = Vec::with_capacity(n_charts);
        for j in 0..g {
            for i in 0..g {
                charts.push(Chart {
                    x_center: [
                        k.center[0] - k.radius + (i as f64 + 0.5) * d,
                        k.center[1] - k.radius + (j as f64 + 0.5) * d,
                    ],
                    x_radius: d,
                    ..Chart::everywhere()
                });
            }
        }
        CutoffAtlas { charts }
    };
    Ok(atlas)
}

/// Samples `sum chi_X` on a grid over `k` and visibility at a few points.
pub fn coverage_report<P: Phase + ?Sized>(
    pf: &P,
    atlas: &CutoffAtlas,
    k: &TargetSet,
) -> CoverageReport {
    let n = 41;
    let mut report = CoverageReport {
        min_cover: f64::INFINITY,
        ..Default::default()
    };
    for j in 0..n {
        for i in 0..n {
            let x = Point::new(
                k.center[0] + k.radius * (2.0 * i as f64 / (n - 1) as f64 - 1.0),
                k.center[1] + k.radius * (2.0 * j as f64 / (n - 1) as f64 - 1.0),
            );
            if !k.contains(&x) {
                continue;
            }
            let cover = atlas.sum_chi_x(&x);
            report.min_cover = report.min_cover.min(cover);
            if cover < COVER_THRESHOLD {
                report.uncovered_points.push([x[0], x[1]]);
            }
        }
    }
    let c = Point::new(k.center[0], k.center[1]);
    let probes = [
        c,
        c + Point::new(0.5 * k.radius, 0.0),
        c + Point::new(0.0, 0.5 * k.radius),
        c - Point::new(0.5 * k.radius, 0.0),
        c - Point::new(0.0, 0.5 * k.radius),
    ];
    let range = pf.t_range();
    for d in 0..COVERAGE_DIRECTIONS {
        let angle = TAU * d as f64 / COVERAGE_DIRECTIONS as f64;
        let dir = omega(angle);
        let seen = probes.iter().all(|x| {
            !solve_time_for_direction(pf, x, &dir, &range).is_empty()
        });
        if !seen {
            report.invisible_directions.push(angle);
        }
    }
    report
}
