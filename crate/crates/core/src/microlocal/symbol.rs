//! Principal symbol of the localized normal operator.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{fd_derivatives, Phase, Point, Vector, Weight};
use crate::microlocal::solve_time_for_direction;
use crate::operators::atlas::CutoffAtlas;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolValue {
    pub x: [f64; 2],
    pub xi: [f64; 2],
    /// All roots `t(x, xi)` that contributed.
    pub t_used: Vec<f64>,
    /// Cutoff-weighted `chi_Y mu^2 J^2` over roots with `nu . xi > 0`.
    pub w_plus: f64,
    pub w_minus: f64,
    /// Smallest `|h~|` over the roots.
    pub h_tilde: f64,
    /// Summed object-side cutoff `chi_X(x)`.
    pub chi_x: f64,
    pub p: f64,
    pub visible: bool,
}

/// `p(x, xi) = (2 pi)^-1 sum_i chi_iX(x) sum_roots W_i / |h~|`, with
/// `W_i = chi_iY mu^2 J^2` and `h~ = |xi| h / |d_x phi|` at each root.
pub fn principal_symbol<P, W>(
    pf: &P,
    mu: &W,
    atlas: &CutoffAtlas,
    x: &Point,
    xi: &Vector,
) -> Result<SymbolValue>
where
    P: Phase + ?Sized,
    W: Weight + ?Sized,
{
    let norm = xi.norm();
    if !(norm > 0.0) {
        return Err(Error::InvalidArgument("xi must be nonzero".into()));
    }
    pf.check(pf.t_range().start, x)?;
    let chi_x: Vec<f64> = atlas.charts.iter().map(|c| c.chi_x(x)).collect();
    let chi_sum: f64 = chi_x.iter().sum();
    let roots = solve_time_for_direction(pf, x, xi, &pf.t_range());
    let mut out = SymbolValue {
        x: [x[0], x[1]],
        xi: [xi[0], xi[1]],
        t_used: Vec::with_capacity(roots.len()),
        w_plus: 0.0,
        w_minus: 0.0,
        h_tilde: f64::INFINITY,
        chi_x: chi_sum,
        p: 0.0,
        visible: false,
    };
    let mut p = 0.0;
    for root in &roots {
        let f = fd_derivatives(pf, root.t, x)?;
        let h_tilde = norm / f.j * f.h;
        if root.degenerate || h_tilde.abs() < 1e-12 * norm {
            return Err(Error::DegenerateSymbol { x: *x, h_tilde });
        }
        let m = mu.eval(root.t, x);
        let base = m * m * f.j * f.j;
        let weighted: f64 = atlas
            .charts
            .iter()
            .zip(&chi_x)
            .map(|(c, cx)| cx * c.chi_y(f.s, root.t))
            .sum::<f64>()
            * base;
        if weighted == 0.0 {
            continue;
        }
        out.t_used.push(root.t);
        out.h_tilde = out.h_tilde.min(h_tilde.abs());
        let w = if chi_sum > 0.0 { weighted / chi_sum } else { 0.0 };
        if root.sign > 0.0 {
            out.w_plus += w;
        } else {
            out.w_minus += w;
        }
        p += weighted / h_tilde.abs();
    }
    out.visible = !out.t_used.is_empty();
    out.p = p / TAU;
    if !out.visible {
        out.h_tilde = 0.0;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_dynamic_phase, make_static_phase, BumpWeight, ConstantWeight, Rotation, TimeRange, Breathing};
    use crate::operators::atlas::Chart;
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn static_symbol_value() {
        let p = make_static_phase();
        let a = CutoffAtlas::trivial();
        let xi = Vector::new(3.0, 4.0);
        let s = principal_symbol(&p, &ConstantWeight(1.0), &a, &Point::new(0.1, 0.2), &xi).unwrap();
        assert!(s.visible);
        assert_eq!(s.t_used.len(), 2);
        assert!((s.p - 1.0 / (PI * 5.0)).abs() < 1e-14);
        assert!((s.w_plus - 1.0).abs() < 1e-12 && (s.w_minus - 1.0).abs() < 1e-12);
        let inv = s.chi_x * (s.w_plus + s.w_minus) / (TAU * s.h_tilde);
        assert!((inv - s.p).abs() < 1e-14);
    }

    #[test]
    fn homogeneous_of_order_minus_one() {
        let p = make_dynamic_phase(Arc::new(Breathing::new(0.05, 1.0).unwrap()));
        let mu = BumpWeight { base: 1.0, amplitude: 0.2, center: [0.1, 0.0], width: 0.3 };
        let a = CutoffAtlas::trivial();
        let x = Point::new(0.3, -0.2);
        let xi = Vector::new(0.6, -1.1);
        let base = principal_symbol(&p, &mu, &a, &x, &xi).unwrap();
        assert!(base.p > 0.0);
        for lambda in [0.5, 2.0, 10.0] {
            let s = principal_symbol(&p, &mu, &a, &x, &(xi * lambda)).unwrap();
            assert!((s.p * lambda - base.p).abs() <= 1e-12 * base.p);
        }
    }

    #[test]
    fn invisible_and_degenerate_covectors() {
        let sync = make_dynamic_phase(Arc::new(Rotation::synchronized()));
        let a = CutoffAtlas::trivial();
        let s = principal_symbol(&sync, &ConstantWeight(1.0), &a, &Point::new(0.2, 0.1), &Vector::new(0.0, 1.0)).unwrap();
        assert!(!s.visible);
        assert_eq!(s.p, 0.0);
        let r = principal_symbol(&sync, &ConstantWeight(1.0), &a, &Point::new(0.2, 0.1), &Vector::new(1.0, 0.0));
        assert!(matches!(r, Err(Error::DegenerateSymbol { .. })));
    }

    #[test]
    fn data_cutoff_removes_roots() {
        let p = make_static_phase().with_t_range(TimeRange::full());
        let a = CutoffAtlas {
            charts: vec![Chart { t_center: 0.0, t_radius: 0.5, ..Chart::everywhere() }],
        };
        let s = principal_symbol(&p, &ConstantWeight(1.0), &a, &Point::zeros(), &Vector::new(1.0, 0.0)).unwrap();
        assert_eq!(s.t_used.len(), 1);
        assert!((s.p - 1.0 / TAU).abs() < 1e-12);
        let s = principal_symbol(&p, &ConstantWeight(1.0), &a, &Point::zeros(), &Vector::new(0.0, 1.0)).unwrap();
        assert!(!s.visible);
    }
}
