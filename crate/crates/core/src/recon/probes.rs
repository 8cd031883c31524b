//! Empirical stability and perturbation probes of the normal operator.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    make_dynamic_phase, make_static_phase, Breathing, BumpWeight, ConstantWeight, Motion, Phase,
    Rotation, Weight,
};
use crate::operators::atlas::{cosine_taper, CutoffAtlas};
use crate::operators::forward::LevelSetOperator;
use crate::operators::grid::{GridSpec, ImageGrid, SinoSpec};
use crate::operators::normal::NormalOperator;
use crate::operators::spectrum::fit_slope;
use crate::recon::norms::{h1_gram, h1_norm};

/// Seed of every random ensemble unless overridden.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

/// Ratio of a probe to the static median above which the normal operator
/// is flagged as degenerate.
pub const BLOWUP_FACTOR: f64 = 1e3;

/// One-parameter motion families indexed by an amplitude `delta`; `delta = 0`
/// is the static geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum MotionFamily {
    /// Radial breathing with amplitude `delta`.
    Breathing { radius: f64 },
    /// Rotation at rate `-delta`; `delta = 1` turns with the scanner.
    Rotation,
}

impl MotionFamily {
    pub fn motion(&self, delta: f64) -> Result<Arc<dyn Motion>> {
        Ok(match *self {
            MotionFamily::Breathing { radius } => Arc::new(Breathing::new(delta, radius)?),
            MotionFamily::Rotation => Arc::new(Rotation::new(-delta)),
        })
    }

    pub fn phase(&self, delta: f64) -> Result<Arc<dyn Phase>> {
        if delta == 0.0 {
            return Ok(Arc::new(make_static_phase()));
        }
        Ok(Arc::new(make_dynamic_phase(self.motion(delta)?)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeOptions {
    pub nt: usize,
    /// Highest frequency of the random fields, in cycles per grid width;
    /// `0` means `nx / 8`.
    #[serde(default)]
    pub band_max: usize,
    /// Lanczos steps for the worst-case search; `0` disables it.
    pub lanczos_steps: usize,
    /// Radius of the target set `K`.
    pub target_radius: f64,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            nt: 90,
            band_max: 0,
            lanczos_steps: 12,
            target_radius: 0.8,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub amplitudes: Vec<f64>,
    /// `|f|_{L2(K)} / |N f|_{H1}` per amplitude and sample.
    pub ratios: Vec<Vec<f64>>,
    pub min_ratio: Vec<f64>,
    pub max_ratio: Vec<f64>,
    pub median_ratio: Vec<f64>,
    /// Largest ratio found by a Lanczos search, per amplitude.
    pub worst_case_ratio: Vec<f64>,
    pub static_median: f64,
    /// Amplitudes whose ratios exceed `BLOWUP_FACTOR` times the static median.
    pub degenerate: Vec<bool>,
    pub seed: u64,
}

/// Random field with Fourier modes in `1..=band_max` cycles per grid width,
/// tapered to the disk `radius`.
pub fn band_limited_field(grid: GridSpec, band_max: usize, radius: f64, rng: &mut ChaCha8Rng) -> ImageGrid {
    let (lo, hi) = grid.extent();
    let width = [hi[0] - lo[0] + grid.spacing, hi[1] - lo[1] + grid.spacing];
    let mut modes = Vec::new();
    let b = band_max as isize;
    for ky in -b..=b {
        for kx in 0..=b {
            let k2 = kx * kx + ky * ky;
            if k2 == 0 || k2 > b * b || (kx == 0 && ky < 0) {
                continue;
            }
            let amp: f64 = rng.random_range(-1.0..1.0);
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            modes.push((kx as f64, ky as f64, amp, phase));
        }
    }
    let mut f = ImageGrid::from_fn(grid, |x| {
        let taper = cosine_taper(x.norm(), radius);
        if taper == 0.0 {
            return 0.0;
        }
        let tau = std::f64::consts::TAU;
        let mut v = 0.0;
        for &(kx, ky, a, p) in &modes {
            v += a * (tau * (kx * x[0] / width[0] + ky * x[1] / width[1]) + p).cos();
        }
        taper * v
    });
    let n = f.norm();
    if n > 0.0 {
        f = f.scaled(1.0 / n);
    }
    f
}

fn masked(f: &ImageGrid, radius: f64) -> ImageGrid {
    let mut out = f.clone();
    for (k, v) in out.values.iter_mut().enumerate() {
        if f.spec.point_at(k).norm() > radius {
            *v = 0.0;
        }
    }
    out
}

/// Ratio `|f|_{L2(K)} / |N f|_{H1}` for every amplitude of `family`.
pub fn stability_probe(
    family: &MotionFamily,
    amplitudes: &[f64],
    n_samples: usize,
    grid: GridSpec,
    opts: &ProbeOptions,
) -> Result<StabilityReport> {
    if !amplitudes.contains(&0.0) {
        return Err(Error::InvalidArgument(
            "stability probe needs the static amplitude 0".into(),
        ));
    }
    let band = if opts.band_max == 0 { (grid.nx / 8).max(1) } else { opts.band_max };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let fields: Vec<ImageGrid> = (0..n_samples)
        .map(|_| band_limited_field(grid, band, opts.target_radius, &mut rng))
        .collect();
    let mu: Arc<dyn Weight> = Arc::new(ConstantWeight(1.0));
    let atlas = CutoffAtlas::trivial();
    let mut report = StabilityReport {
        amplitudes: amplitudes.to_vec(),
        ratios: Vec::new(),
        min_ratio: Vec::new(),
        max_ratio: Vec::new(),
        median_ratio: Vec::new(),
        worst_case_ratio: Vec::new(),
        static_median: f64::NAN,
        degenerate: Vec::new(),
        seed: opts.seed,
    };
    for &delta in amplitudes {
        let pf = family.phase(delta)?;
        let sino = SinoSpec::fitted(&*pf, &grid, opts.nt, 1.0)?;
        let op = LevelSetOperator::new(pf, mu.clone(), grid, sino)?;
        op.prepare()?;
        let n = NormalOperator::symmetric(&op, &atlas);
        // sequential over samples: each application is already parallel
        let ratios: Vec<f64> = fields
            .iter()
            .map(|f| Ok(masked(f, opts.target_radius).norm() / h1_norm(&n.apply(f)?)))
            .collect::<Result<_>>()?;
        let worst = if opts.lanczos_steps > 0 {
            let start = fields.first().cloned().unwrap_or_else(|| {
                band_limited_field(grid, band, opts.target_radius, &mut rng)
            });
            lanczos_worst_ratio(&n, &start, opts.target_radius, opts.lanczos_steps)?
        } else {
            f64::NAN
        };
        let mut sorted = ratios.clone();
        sorted.sort_by(f64::total_cmp);
        report.min_ratio.push(sorted.first().copied().unwrap_or(f64::NAN));
        report.max_ratio.push(sorted.last().copied().unwrap_or(f64::NAN));
        report.median_ratio.push(median(&sorted));
        report.worst_case_ratio.push(worst);
        report.ratios.push(ratios);
    }
    let i0 = amplitudes.iter().position(|&a| a == 0.0).unwrap();
    report.static_median = report.median_ratio[i0];
    let limit = BLOWUP_FACTOR * report.static_median;
    report.degenerate = (0..amplitudes.len())
        .map(|i| {
            let worst = report.worst_case_ratio[i];
            report.max_ratio[i] > limit || !(worst <= limit) && !worst.is_nan()
        })
        .collect();
    Ok(report)
}

fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => sorted[n / 2],
        n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    }
}

/// Largest `|f|_{L2(K)} / |N f|_{H1}` over a Krylov space: Lanczos on
/// `Q N G N Q`, with `Q` the restriction to `K` and `G` the `H1` Gram
/// operator, gives the smallest Rayleigh quotient `|N f|_{H1}^2 / |f|^2`.
fn lanczos_worst_ratio(n: &NormalOperator, start: &ImageGrid, radius: f64, steps: usize) -> Result<f64> {
    let apply = |f: &ImageGrid| -> Result<ImageGrid> {
        let nf = n.apply(f)?;
        Ok(masked(&n.apply(&h1_gram(&nf))?, radius))
    };
    let mut q = masked(start, radius);
    let norm = q.norm();
    if norm == 0.0 {
        return Ok(f64::NAN);
    }
    q = q.scaled(1.0 / norm);
    let mut basis: Vec<ImageGrid> = vec![q.clone()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for k in 0..steps {
        let mut w = apply(&basis[k])?;
        let a = w.inner(&basis[k]);
        alpha.push(a);
        // full reorthogonalization: the spectrum spans many decades
        for _ in 0..2 {
            for b in &basis {
                let c = w.inner(b);
                w.axpy(-c, b);
            }
        }
        let bnorm = w.norm();
        if k + 1 == steps || bnorm <= 1e-14 * a.abs().max(1e-300) {
            break;
        }
        beta.push(bnorm);
        basis.push(w.scaled(1.0 / bnorm));
    }
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(1.0 / lmin.max(f64::MIN_POSITIVE).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationTable {
    pub deltas: Vec<f64>,
    /// `|(N - N~) f|_{H1} / |f|`.
    pub ratios: Vec<f64>,
    /// Slope of `log ratio` against `log delta` over the positive deltas.
    pub slope: f64,
    /// Whether the ratios are nondecreasing in `delta`.
    pub monotone: bool,
}

/// A perturbed geometry for amplitude `delta`.
pub type Perturbation<'a> = dyn Fn(f64) -> Result<(Arc<dyn Phase>, Arc<dyn Weight>)> + 'a;

/// Breathing of amplitude `delta` together with the weight
/// `1 + delta * bump`.
pub fn breathing_perturbation(delta: f64) -> Result<(Arc<dyn Phase>, Arc<dyn Weight>)> {
    let pf: Arc<dyn Phase> = if delta == 0.0 {
        Arc::new(make_static_phase())
    } else {
        Arc::new(make_dynamic_phase(Arc::new(Breathing::new(delta, 1.0)?)))
    };
    let mu = BumpWeight {
        base: 1.0,
        amplitude: delta,
        center: [0.2, 0.1],
        width: 0.3,
    };
    Ok((pf, Arc::new(mu)))
}

/// `|(N - N~) f|_{H1} / |f|` for each `delta`, all operators sharing
/// `grid` and `sino`.
pub fn perturbation_sweep(
    base: (Arc<dyn Phase>, Arc<dyn Weight>),
    perturb: &Perturbation,
    deltas: &[f64],
    probe_f: &ImageGrid,
    sino: SinoSpec,
) -> Result<PerturbationTable> {
    let grid = probe_f.spec;
    let atlas = CutoffAtlas::trivial();
    let base_op = LevelSetOperator::new(base.0, base.1, grid, sino)?;
    let nf = NormalOperator::symmetric(&base_op, &atlas).apply(probe_f)?;
    let fnorm = probe_f.norm();
    let mut ratios = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        if delta == 0.0 {
            ratios.push(0.0);
            continue;
        }
        let (pf, mu) = perturb(delta)?;
        let op = LevelSetOperator::new(pf, mu, grid, sino)?;
        let mut diff = NormalOperator::symmetric(&op, &atlas).apply(probe_f)?;
        diff.axpy(-1.0, &nf);
        ratios.push(h1_norm(&diff) / fnorm);
    }
    let pts: Vec<(f64, f64)> = deltas
        .iter()
        .zip(&ratios)
        .filter(|(d, r)| **d > 0.0 && **r > 0.0)
        .map(|(d, r)| (d.ln(), r.ln()))
        .collect();
    let slope = if pts.len() >= 2 { fit_slope(&pts)? } else { f64::NAN };
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&a, &b| deltas[a].total_cmp(&deltas[b]));
    let monotone = order.windows(2).all(|w| ratios[w[1]] >= ratios[w[0]]);
    Ok(PerturbationTable {
        deltas: deltas.to_vec(),
        ratios,
        slope,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fields_are_normalized_and_supported() {
        let grid = GridSpec::square(32, 1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
        let f = band_limited_field(grid, 4, 0.8, &mut rng);
        assert!((f.norm() - 1.0).abs() < 1e-12);
        for (k, v) in f.values.iter().enumerate() {
            if grid.point_at(k).norm() >= 0.8 {
                assert_eq!(*v, 0.0);
            }
        }
        let mut rng2 = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
        assert_eq!(f, band_limited_field(grid, 4, 0.8, &mut rng2));
    }

    #[test]
    fn zero_delta_gives_zero_ratio() {
        let grid = GridSpec::square(24, 1.0, 1.0);
        let (pf, mu) = breathing_perturbation(0.0).unwrap();
        let sino = SinoSpec::fitted(&*pf, &grid, 24, 1.0).unwrap();
        let f = ImageGrid::from_fn(grid, |x| (-x.norm_squared() / 0.1).exp());
        let t = perturbation_sweep((pf, mu), &breathing_perturbation, &[0.0], &f, sino).unwrap();
        assert_eq!(t.ratios, vec![0.0]);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[1.0, 2.0, 10.0]), 2.0);
        assert_eq!(median(&[1.0, 3.0]), 2.0);
    }
}
