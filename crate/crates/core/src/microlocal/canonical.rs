//! Points of the canonical relation and the differential of its projection
//! to the data side.

use nalgebra::{Matrix4, SVD};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{fd_derivatives, Phase, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CanonicalPoint {
    pub s: f64,
    pub t: f64,
    pub sigma: f64,
    pub tau: f64,
    pub x: [f64; 2],
    pub xi: [f64; 2],
}

/// `(phi, t, sigma, -sigma d_t phi; x, sigma d_x phi)`.
pub fn canonical_point<P: Phase + ?Sized>(
    pf: &P,
    t: f64,
    x: &Point,
    sigma: f64,
) -> Result<CanonicalPoint> {
    if sigma == 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidArgument("sigma must be nonzero".into()));
    }
    let f = fd_derivatives(pf, t, x)?;
    Ok(CanonicalPoint {
        s: f.s,
        t,
        sigma,
        tau: -sigma * f.dt_phi,
        x: f.x,
        xi: [sigma * f.g[0], sigma * f.g[1]],
    })
}

/// Differential of the data-side projection in the coordinates
/// `(t, x1, x2, sigma)`.
pub fn dpiy_matrix<P: Phase + ?Sized>(
    pf: &P,
    t: f64,
    x: &Point,
    sigma: f64,
) -> Result<Matrix4<f64>> {
    let f = fd_derivatives(pf, t, x)?;
    let dtt = pf.dtt(t, x);
    #[rustfmt::skip]
    let m = Matrix4::new(
        f.dt_phi, f.g[0], f.g[1], 0.0,
        1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        -sigma * dtt, -sigma * f.m[0], -sigma * f.m[1], f.dt_phi,
    );
    Ok(m)
}

/// Numerical rank (relative SVD cutoff 1e-10) and determinant.
pub fn dpiy_rank<P: Phase + ?Sized>(
    pf: &P,
    t: f64,
    x: &Point,
    sigma: f64,
) -> Result<(usize, f64)> {
    if sigma == 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidArgument("sigma must be nonzero".into()));
    }
    let m = dpiy_matrix(pf, t, x, sigma)?;
    let sv = SVD::new(m, false, false).singular_values;
    let top = sv.max();
    let rank = sv.iter().filter(|&&v| v > 1e-10 * top).count();
    Ok((rank, m.determinant()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_dynamic_phase, make_static_phase, Breathing, Rotation};
    use crate::microlocal::bolker_determinant;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn static_canonical_point() {
        let p = make_static_phase();
        let c = canonical_point(&p, 0.0, &Point::new(0.3, -0.2), 1.0).unwrap();
        assert_eq!((c.s, c.tau, c.xi), (0.3, 0.2, [1.0, 0.0]));
        let d = canonical_point(&p, 0.0, &Point::new(0.3, -0.2), -1.0).unwrap();
        assert_eq!((d.tau, d.xi), (-0.2, [-1.0, -0.0]));
        assert!(canonical_point(&p, 0.0, &Point::zeros(), 0.0).is_err());
    }

    #[test]
    fn rank_examples() {
        let p = make_static_phase();
        let (rank, det) = dpiy_rank(&p, 0.7, &Point::new(0.2, 0.1), 2.5).unwrap();
        assert_eq!(rank, 4);
        assert!((det.abs() - 2.5).abs() < 1e-12);
        let sync = make_dynamic_phase(Arc::new(Rotation::synchronized()));
        let (rank, det) = dpiy_rank(&sync, 0.7, &Point::new(0.2, 0.1), 2.5).unwrap();
        assert_eq!(rank, 3);
        assert!(det.abs() < 1e-12);
    }

    #[test]
    fn determinant_is_sigma_times_h() {
        let p = make_dynamic_phase(Arc::new(Breathing::new(0.1, 1.0).unwrap()));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            let x = Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let sigma = rng.random_range(0.1..5.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            let (_, det) = dpiy_rank(&p, t, &x, sigma).unwrap();
            let h = bolker_determinant(&p, t, &x).unwrap();
            assert!((det.abs() - (sigma * h).abs()).abs() < 1e-8 * (sigma * h).abs());
        }
    }
}
