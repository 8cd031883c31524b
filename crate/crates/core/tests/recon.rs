use std::sync::Arc;

use curvetomo::geometry::*;
use curvetomo::microlocal::CovectorSample;
use curvetomo::operators::*;
use curvetomo::phantom::{default_phantom, render_phantom, EllipseSpec};
use curvetomo::recon::*;

fn static_operator(n: usize, nt: usize) -> LevelSetOperator {
    let grid = GridSpec::square(n, 1.0, 1.0);
    let pf: Arc<dyn Phase> = Arc::new(make_static_phase());
    let sino = SinoSpec::fitted(&*pf, &grid, nt, 1.0).unwrap();
    LevelSetOperator::new(pf, Arc::new(ConstantWeight(1.0)), grid, sino).unwrap()
}

#[test]
fn data_residual_is_bounded_by_the_normal_residual() {
    let op = static_operator(64, 90);
    let truth = render_phantom(&default_phantom(), op.grid).unwrap();
    let g = op.forward(&truth).unwrap();
    for iters in [5, 20] {
        let opts = SolveOptions { max_iter: iters, tol: 1e-10, ..Default::default() };
        let (rec, report) = cg_normal_solve(&op, &CutoffAtlas::trivial(), &g, &opts).unwrap();
        let ag = op.forward(&rec).unwrap();
        let data = rel_l2(&ag.values, &g.values);
        let proxy = report.residual_history.last().unwrap().sqrt();
        assert!(data <= 1.5 * proxy, "{iters}: data {data:e} proxy {proxy:e}");
    }
}

#[test]
fn zero_data_gives_zero_image() {
    let op = static_operator(32, 30);
    let g = Sinogram::zeros(op.sino);
    let (rec, report) = cg_normal_solve(&op, &CutoffAtlas::trivial(), &g, &SolveOptions::default()).unwrap();
    assert_eq!(report.iterations, 0);
    assert!(rec.values.iter().all(|&v| v == 0.0));
}

#[test]
fn static_disk_edge_is_recovered() {
    let op = static_operator(128, 360);
    let truth = render_phantom(&[EllipseSpec::disk([0.0, 0.0], 0.6, 1.0)], op.grid).unwrap();
    let g = op.forward(&truth).unwrap();
    let opts = SolveOptions { max_iter: 50, tol: 1e-8, ..Default::default() };
    let (rec, report) = cg_normal_solve(&op, &CutoffAtlas::trivial(), &g, &opts).unwrap();
    assert!(report.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10)));
    for (x, xi) in [([0.6, 0.0], [1.0, 0.0]), ([0.0, -0.6], [0.0, -1.0])] {
        let cov = CovectorSample::new(Point::new(x[0], x[1]), Vector::new(xi[0], xi[1])).unwrap();
        let r = edge_response(&rec, &truth, &cov).unwrap();
        assert!(r > 0.6, "{x:?}: {r}");
    }
}

#[test]
fn breathing_stability_stays_near_static() {
    let grid = GridSpec::square(64, 1.0, 1.0);
    let family = MotionFamily::Breathing { radius: 1.0 };
    let opts = ProbeOptions { lanczos_steps: 0, ..Default::default() };
    let r = stability_probe(&family, &[0.0, 0.02, 0.05], 50, grid, &opts).unwrap();
    assert!(r.ratios.iter().flatten().all(|v| v.is_finite() && *v > 0.0));
    assert!(r.max_ratio[0] / r.min_ratio[0] < 20.0);
    for m in &r.median_ratio {
        assert!(*m < 2.0 * r.static_median && *m > 0.5 * r.static_median);
    }
    assert!(r.degenerate.iter().all(|d| !d));
    assert_eq!(r.seed, DEFAULT_SEED);
}
