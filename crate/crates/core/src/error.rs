use thiserror::Error;

use crate::geometry::Point;

/// Errors raised by geometry, operator and solver routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({}, {}) at t = {t} lies outside the phase domain", .x[0], .x[1])]
    Domain { t: f64, x: Point },

    #[error("branch condition fails at t = {t}, x = ({}, {}): {reason}", .x[0], .x[1])]
    Branch { t: f64, x: Point, reason: String },

    #[error("Newton projection of seed ({}, {}) onto level s = {s} did not converge in {iterations} iterations", .seed[0], .seed[1])]
    SeedProjection { seed: Point, s: f64, iterations: usize },

    #[error("level-curve corrector stalled near ({}, {}) (residual {residual:e})", .at[0], .at[1])]
    Stall { at: Point, residual: f64 },

    #[error("degenerate symbol at x = ({}, {}): |h~| = {h_tilde:e}", .x[0], .x[1])]
    DegenerateSymbol { x: Point, h_tilde: f64 },

    #[error("cutoff atlas does not cover the target set: {0}")]
    Coverage(CoverageReport),

    #[error("solver residual increased for {0} consecutive iterations")]
    Divergence(usize),

    #[error("{count} of {total} target cells have no data coverage")]
    OutOfRange { count: usize, total: usize },

    #[error("{failed} of {total} sinogram samples failed (budget {budget:.3}%)")]
    NanBudget {
        failed: usize,
        total: usize,
        budget: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Where a cutoff atlas fails its covering requirement.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct CoverageReport {
    /// Sampled points whose summed object-side cutoff falls below the threshold.
    pub uncovered_points: Vec<[f64; 2]>,
    /// Unit directions (as angles in radians) that no sampled time can see.
    pub invisible_directions: Vec<f64>,
    pub min_cover: f64,
}

impl std::fmt::Display for CoverageReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} uncovered points (min sum {:.3}), {} invisible directions",
            self.uncovered_points.len(),
            self.min_cover,
            self.invisible_directions.len()
        )?;
        if let (Some(first), Some(last)) = (
            self.invisible_directions.first(),
            self.invisible_directions.last(),
        ) {
            write!(f, " spanning [{first:.4}, {last:.4}] rad")?;
        }
        Ok(())
    }
}
