//! Numerical checks of visibility and the local and semi-global Bolker
//! conditions, the canonical relation, and the principal symbol of the
//! normal operator.

pub mod bolker;
pub mod canonical;
pub mod symbol;
pub mod visibility;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point, Vector};

pub use bolker::{
    bolker_determinant, normalized_bolker, prop31_equivalence_check, semiglobal_bolker_check,
    Prop31Report, SemiGlobalOptions,
};
pub use canonical::{canonical_point, dpiy_matrix, dpiy_rank, CanonicalPoint};
pub use symbol::{principal_symbol, SymbolValue};
pub use visibility::{
    solve_time_for_direction, solve_time_for_direction_with, visibility_map, TimeRoot,
    VisibilityMap, DEFAULT_SCAN_POINTS,
};

/// A point with a nonzero cotangent direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovectorSample {
    pub x: [f64; 2],
    pub xi: [f64; 2],
    pub unit_dir: [f64; 2],
}

impl CovectorSample {
    pub fn new(x: Point, xi: Vector) -> Result<Self> {
        let n = xi.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument("covector must be nonzero".into()));
        }
        let u = xi / n;
        Ok(CovectorSample {
            x: [x[0], x[1]],
            xi: [xi[0], xi[1]],
            unit_dir: [u[0], u[1]],
        })
    }

    pub fn point(&self) -> Point {
        Point::new(self.x[0], self.x[1])
    }

    pub fn covector(&self) -> Vector {
        Vector::new(self.xi[0], self.xi[1])
    }

    pub fn direction(&self) -> Vector {
        Vector::new(self.unit_dir[0], self.unit_dir[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covector_is_normalized() {
        let c = CovectorSample::new(Point::new(0.1, 0.2), Vector::new(3.0, 4.0)).unwrap();
        assert!((c.direction().norm() - 1.0).abs() < 1e-12);
        assert!(CovectorSample::new(Point::zeros(), Vector::zeros()).is_err());
    }
}
