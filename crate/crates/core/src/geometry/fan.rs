use std::f64::consts::{FRAC_PI_2, TAU};

/// Parallel-beam coordinates of one fan-beam ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanParallel {
    pub s: f64,
    pub beta: f64,
    /// `ds/dgamma = R cos gamma`.
    pub jacobian: f64,
}

/// Maps source angle `t` and fan angle `gamma` to `(s, beta)`.
///
/// Requires `|gamma| < pi/2`; the Jacobian vanishes at the ends.
pub fn fan_to_parallel(t: f64, gamma: f64, r: f64) -> FanParallel {
    let (sin, cos) = gamma.sin_cos();
    FanParallel {
        s: r * sin,
        beta: t + gamma - FRAC_PI_2,
        jacobian: r * cos,
    }
}

/// Inverse of [`fan_to_parallel`]: `(t, gamma)` with `t` wrapped into
/// `[0, 2 pi)`, or `None` when `|s| >= R`.
pub fn parallel_to_fan(s: f64, beta: f64, r: f64) -> Option<(f64, f64)> {
    if !(s.abs() < r) {
        return None;
    }
    let gamma = (s / r).asin();
    Some(((beta - gamma + FRAC_PI_2).rem_euclid(TAU), gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_6, PI};

    #[test]
    fn examples() {
        let a = fan_to_parallel(FRAC_PI_2, 0.0, 1.0);
        assert_eq!((a.s, a.beta, a.jacobian), (0.0, 0.0, 1.0));
        let b = fan_to_parallel(0.0, FRAC_PI_6, 2.0);
        assert!((b.s - 1.0).abs() < 1e-15);
        assert!((b.beta - (FRAC_PI_6 - FRAC_PI_2)).abs() < 1e-15);
        assert!((b.jacobian - 2.0 * FRAC_PI_6.cos()).abs() < 1e-15);
        assert!(fan_to_parallel(0.3, FRAC_PI_2 - 1e-9, 1.0).jacobian < 1e-8);
    }

    #[test]
    fn round_trip() {
        for k in 0..50 {
            let t = 0.12 * k as f64;
            let gamma = -1.2 + 0.05 * k as f64;
            let p = fan_to_parallel(t, gamma, 3.0);
            let (t2, g2) = parallel_to_fan(p.s, p.beta, 3.0).unwrap();
            assert!((g2 - gamma).abs() < 1e-12);
            let dt = (t2 - t).rem_euclid(TAU);
            assert!(dt < 1e-12 || (TAU - dt) < 1e-12);
        }
        assert!(parallel_to_fan(3.0, PI, 3.0).is_none());
    }
}
