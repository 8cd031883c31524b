use std::sync::{Arc, OnceLock};

use curvetomo::geometry::*;
use curvetomo::io::{GeometryConfig, PhaseSpec, WeightSpec};
use curvetomo::operators::*;
use curvetomo::par::Exec;
use curvetomo::phantom::{boundary_wavefront, EllipseSpec};
use curvetomo::recon::{band_limited_field, solve, Method, SolveOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: usize = 24;

fn grid() -> GridSpec {
    GridSpec::square(N, 1.0, 1.0)
}

fn operator(exec: Exec) -> LevelSetOperator {
    let pf: Arc<dyn Phase> = Arc::new(make_dynamic_phase(Arc::new(Breathing::new(0.1, 1.0).unwrap())));
    let sino = SinoSpec::fitted(&*pf, &grid(), 30, 1.0).unwrap();
    let mu = BumpWeight { base: 1.0, amplitude: 0.3, center: [0.2, -0.1], width: 0.4 };
    let opts = OperatorOptions { exec, ..Default::default() };
    LevelSetOperator::with_options(pf, Arc::new(mu), grid(), sino, opts).unwrap()
}

fn shared() -> &'static LevelSetOperator {
    static OP: OnceLock<LevelSetOperator> = OnceLock::new();
    OP.get_or_init(|| operator(Exec::Parallel))
}

fn field(seed: u64) -> ImageGrid {
    band_limited_field(grid(), 4, 0.95, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn data(seed: u64) -> Sinogram {
    let op = shared();
    let f = field(seed ^ 0x5555);
    Sinogram::from_fn(op.sino, |s, t| (3.0 * s + (seed % 7) as f64 * t).sin()).scaled(1.0 + f.values[N * N / 2])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn forward_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, s1 in any::<u64>(), s2 in any::<u64>()) {
        let op = shared();
        let (f, g) = (field(s1), field(s2));
        let mut combo = f.scaled(a);
        combo.axpy(b, &g);
        let lhs = op.forward(&combo).unwrap();
        let (af, ag) = (op.forward(&f).unwrap(), op.forward(&g).unwrap());
        let scale = a.abs() * af.norm() + b.abs() * ag.norm() + 1e-12;
        let err: f64 = lhs.values.iter().zip(af.values.iter().zip(&ag.values))
            .map(|(l, (x, y))| (l - a * x - b * y).powi(2)).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-10 * scale.max(lhs.norm()) * (lhs.values.len() as f64).sqrt());
    }

    #[test]
    fn transpose_is_exact_and_formula_is_close(s1 in any::<u64>(), s2 in any::<u64>()) {
        let op = shared();
        let f = field(s1);
        let g = data(s2);
        let af = op.forward(&f).unwrap();
        let denom = af.norm() * g.norm();
        let exact = (af.inner(&g) - f.inner(&op.forward_adjoint(&g).unwrap())).abs() / denom;
        prop_assert!(exact < 1e-12, "transpose {exact:e}");
        let formula = (af.inner(&g) - f.inner(&op.adjoint(&g).unwrap())).abs() / denom;
        prop_assert!(formula < 2e-2, "formula {formula:e}");
    }

    #[test]
    fn wavefront_samples_lie_on_boundaries(
        cx in -0.4f64..0.4, cy in -0.4f64..0.4,
        a in 0.05f64..0.5, b in 0.05f64..0.5, angle in -3.0f64..3.0,
    ) {
        let e = EllipseSpec { center: [cx, cy], semi_axes: [a, b], angle, density: 1.0 };
        let wf = boundary_wavefront(&[e], 32).unwrap();
        prop_assert_eq!(wf.samples.len(), 32);
        for s in &wf.samples {
            let x = s.point();
            prop_assert!((e.level(&x) - 1.0).abs() < 1e-9);
            prop_assert!((s.direction().norm() - 1.0).abs() < 1e-12);
            // outward: stepping along the normal leaves the ellipse
            prop_assert!(!e.contains(&(x + s.direction() * 1e-6)));
            prop_assert!(e.contains(&(x - s.direction() * 1e-6)));
        }
    }

    #[test]
    fn config_round_trips(
        n in 8usize..256, nt in 4usize..720, radius in 1.5f64..10.0, amp in 0.0f64..0.3,
        which in 0usize..3, bump in any::<bool>(),
    ) {
        let mut cfg = GeometryConfig::default();
        cfg.grid.n = n;
        cfg.sinogram.nt = nt;
        cfg.phase = match which {
            0 => PhaseSpec::Static,
            1 => PhaseSpec::Dynamic,
            _ => PhaseSpec::Fanbeam { radius },
        };
        if which == 1 {
            cfg.motion = MotionSpec::Breathing { amplitude: amp, radius: 1.0 };
        }
        if bump {
            cfg.weight = WeightSpec::Bump { base: 1.0, amplitude: amp, center: [0.1, 0.2], width: 0.3 };
        }
        let text = cfg.to_json();
        let back = GeometryConfig::from_json(&text).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn solver_residuals_are_monotone(s in any::<u64>(), tikhonov in 0.0f64..1e-2) {
        let op = shared();
        let atlas = CutoffAtlas::trivial();
        let normal = NormalOperator::symmetric(op, &atlas);
        let truth = field(s);
        let g = op.forward(&truth).unwrap();
        let b = normal.rhs(&g).unwrap();
        let opts = SolveOptions { max_iter: 12, tol: 1e-12, tikhonov, method: Method::Cr };
        let (_, report) = solve(|x| normal.apply(x), &b, &opts).unwrap();
        for w in report.residual_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-9), "{:?}", report.residual_history);
        }
    }
}

#[test]
fn sequential_matches_parallel_bitwise() {
    let seq = operator(Exec::Sequential);
    let par = shared();
    for seed in 0..3 {
        let f = field(seed);
        assert_eq!(seq.forward(&f).unwrap().values, par.forward(&f).unwrap().values);
        let g = data(seed);
        assert_eq!(seq.adjoint(&g).unwrap().values, par.adjoint(&g).unwrap().values);
        assert_eq!(seq.forward_adjoint(&g).unwrap().values, par.forward_adjoint(&g).unwrap().values);
    }
}
