//! Level-set forward operator and pixel-driven adjoint, both precomputed as
//! sparse plans.
//!
//! The forward plan stores, for every ray `(s, t)`, the traced curve
//! samples as interpolation stencils with quadrature weights. The adjoint
//! plan stores, for every pixel, the `(s, t)` cell hit by `phi(t, x)` and
//! the weight `dt mu J`. Both can also be applied transposed, which gives
//! the exact discrete adjoint of the other direction.

use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::trace::{project_to_level, segment_distance, trace_level_curve_with};
use crate::geometry::{LevelCurve, Phase, Point, Region, TraceOptions, Weight};
use crate::operators::grid::{GridSpec, ImageGrid, Interpolation, SinoSpec, Sinogram};
use crate::par::{self, Exec};

/// Largest tolerated fraction of failed rays.
pub const NAN_BUDGET: f64 = 1e-3;

/// Pixels of zero padding around the image in the forward plan.
const PAD: usize = 3;

/// Coarse seed grid spacing in pixels.
const SEED_SPACING: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForwardReport {
    pub total_rays: usize,
    pub failed_rays: usize,
    pub curves: usize,
    pub samples: usize,
}

#[derive(Debug, Default)]
struct ForwardPlan {
    /// `offsets[r]..offsets[r + 1]` are the samples of ray `r = k * ns + i`.
    offsets: Vec<usize>,
    /// Stencil origin in the padded image.
    base: Vec<u32>,
    fx: Vec<f32>,
    fy: Vec<f32>,
    w: Vec<f32>,
    failed: Vec<usize>,
    curves: usize,
}

#[derive(Debug, Default)]
struct AdjointPlan {
    /// Pixels inside the support and the start of their entries.
    pixels: Vec<u32>,
    offsets: Vec<usize>,
    /// `k * ns + i` of the lower `s` node.
    cell: Vec<u32>,
    frac: Vec<f32>,
    w: Vec<f32>,
}

/// The operator `f -> int_{phi(t, .) = s} mu f dS` on fixed grids.
#[derive(Debug)]
pub struct LevelSetOperator {
    pub phase: Arc<dyn Phase>,
    pub weight: Arc<dyn Weight>,
    pub grid: GridSpec,
    pub sino: SinoSpec,
    pub interp: Interpolation,
    pub exec: Exec,
    /// Curve marching step in units of the pixel spacing.
    pub step_factor: f64,
    forward: OnceLock<ForwardPlan>,
    adjoint: OnceLock<AdjointPlan>,
}

#[derive(Debug, Clone, Copy)]
pub struct OperatorOptions {
    pub interp: Interpolation,
    pub exec: Exec,
    pub step_factor: f64,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        OperatorOptions {
            interp: Interpolation::Bilinear,
            exec: Exec::default(),
            step_factor: 0.5,
        }
    }
}

impl LevelSetOperator {
    pub fn new(
        phase: Arc<dyn Phase>,
        weight: Arc<dyn Weight>,
        grid: GridSpec,
        sino: SinoSpec,
    ) -> Result<Self> {
        Self::with_options(phase, weight, grid, sino, OperatorOptions::default())
    }

    pub fn with_options(
        phase: Arc<dyn Phase>,
        weight: Arc<dyn Weight>,
        grid: GridSpec,
        sino: SinoSpec,
        opts: OperatorOptions,
    ) -> Result<Self> {
        grid.validate()?;
        sino.validate()?;
        if !(opts.step_factor > 0.0) {
            return Err(Error::InvalidArgument("step factor must be positive".into()));
        }
        Ok(LevelSetOperator {
            phase,
            weight,
            grid,
            sino,
            interp: opts.interp,
            exec: opts.exec,
            step_factor: opts.step_factor,
            forward: OnceLock::new(),
            adjoint: OnceLock::new(),
        })
    }

    /// Traces every ray now. Fails if more than [`NAN_BUDGET`] of the rays
    /// could not be traced.
    pub fn prepare(&self) -> Result<ForwardReport> {
        let plan = self.forward_plan();
        let report = self.report_of(plan);
        if report.failed_rays as f64 > NAN_BUDGET * report.total_rays as f64 {
            return Err(Error::NanBudget {
                failed: report.failed_rays,
                total: report.total_rays,
                budget: 100.0 * NAN_BUDGET,
            });
        }
        Ok(report)
    }

    pub fn report(&self) -> ForwardReport {
        self.report_of(self.forward_plan())
    }

    fn report_of(&self, plan: &ForwardPlan) -> ForwardReport {
        ForwardReport {
            total_rays: self.sino.len(),
            failed_rays: plan.failed.len(),
            curves: plan.curves,
            samples: plan.w.len(),
        }
    }

    fn padded_nx(&self) -> usize {
        self.grid.nx + 2 * PAD
    }

    fn padded_len(&self) -> usize {
        self.padded_nx() * (self.grid.ny + 2 * PAD)
    }

    fn forward_plan(&self) -> &ForwardPlan {
        self.forward.get_or_init(|| self.build_forward_plan())
    }

    fn adjoint_plan(&self) -> &AdjointPlan {
        self.adjoint.get_or_init(|| self.build_adjoint_plan())
    }

    /// Applies the forward operator. Rays that failed to trace are NaN.
    pub fn forward(&self, f: &ImageGrid) -> Result<Sinogram> {
        self.check_image(f)?;
        self.prepare()?;
        Ok(self.forward_unchecked(f))
    }

    pub(crate) fn forward_unchecked(&self, f: &ImageGrid) -> Sinogram {
        let plan = self.forward_plan();
        let padded = self.pad(f);
        let mut g = Sinogram::zeros(self.sino);
        let interp = self.interp;
        let pnx = self.padded_nx();
        par::fill(self.exec, &mut g.values, |r| {
            let mut acc = 0.0;
            for q in plan.offsets[r]..plan.offsets[r + 1] {
                acc += plan.w[q] as f64
                    * stencil_value(&padded, pnx, interp, plan.base[q], plan.fx[q], plan.fy[q]);
            }
            acc
        });
        for &r in &plan.failed {
            g.values[r] = f64::NAN;
        }
        g
    }

    /// Raw transpose of the forward plan matrix (no measure weights).
    fn forward_plan_transpose(&self, g: &[f64]) -> ImageGrid {
        let plan = self.forward_plan();
        let pnx = self.padded_nx();
        let interp = self.interp;
        let nt = self.sino.nt;
        let ns = self.sino.ns;
        let chunk = 8;
        let n_chunks = nt.div_ceil(chunk);
        let partials = par::map_collect(self.exec, n_chunks, |c| {
            let mut acc = vec![0.0; self.padded_len()];
            for k in c * chunk..((c + 1) * chunk).min(nt) {
                for r in k * ns..(k + 1) * ns {
                    let v = g[r];
                    if v == 0.0 || v.is_nan() {
                        continue;
                    }
                    for q in plan.offsets[r]..plan.offsets[r + 1] {
                        stencil_scatter(
                            &mut acc,
                            pnx,
                            interp,
                            plan.base[q],
                            plan.fx[q],
                            plan.fy[q],
                            v * plan.w[q] as f64,
                        );
                    }
                }
            }
            acc
        });
        let mut sum = vec![0.0; self.padded_len()];
        for p in &partials {
            for (s, v) in sum.iter_mut().zip(p) {
                *s += v;
            }
        }
        self.crop(&sum)
    }

    /// Exact adjoint of [`forward`](Self::forward) in the weighted inner
    /// products `h^2` (image) and `ds dt` (data).
    pub fn forward_adjoint(&self, g: &Sinogram) -> Result<ImageGrid> {
        self.check_sino(g)?;
        let weighted = self.measure_weighted(g);
        let mut img = self.forward_plan_transpose(&weighted);
        let h2 = self.grid.spacing * self.grid.spacing;
        for v in &mut img.values {
            *v /= h2;
        }
        Ok(img)
    }

    fn measure_weighted(&self, g: &Sinogram) -> Vec<f64> {
        let ns = self.sino.ns;
        let ds = self.sino.ds();
        g.values
            .iter()
            .enumerate()
            .map(|(r, v)| v * ds * self.sino.t_weight(r / ns))
            .collect()
    }

    /// Pixel-driven backprojection
    /// `A* g(x) = sum_t w_t mu(t, x) |d_x phi(t, x)| g(phi(t, x), t)`
    /// with linear interpolation in `s`; `s` outside the grid contributes 0.
    pub fn adjoint(&self, g: &Sinogram) -> Result<ImageGrid> {
        self.check_sino(g)?;
        Ok(self.adjoint_unchecked(g))
    }

    pub(crate) fn adjoint_unchecked(&self, g: &Sinogram) -> ImageGrid {
        let plan = self.adjoint_plan();
        let vals: Vec<f64> = par::map_collect(self.exec, plan.pixels.len(), |p| {
            let mut acc = 0.0;
            for q in plan.offsets[p]..plan.offsets[p + 1] {
                let c = plan.cell[q] as usize;
                let a = plan.frac[q] as f64;
                let v = (1.0 - a) * g.values[c] + if a > 0.0 { a * g.values[c + 1] } else { 0.0 };
                acc += plan.w[q] as f64 * v;
            }
            acc
        });
        let mut img = ImageGrid::zeros(self.grid);
        for (p, v) in plan.pixels.iter().zip(vals) {
            img.values[*p as usize] = v;
        }
        img
    }

    /// Exact adjoint of [`adjoint`](Self::adjoint) in the weighted inner
    /// products.
    pub fn adjoint_adjoint(&self, f: &ImageGrid) -> Result<Sinogram> {
        self.check_image(f)?;
        let plan = self.adjoint_plan();
        let n = plan.pixels.len();
        let len = self.sino.len();
        let chunk = 1024;
        let partials = par::map_collect(self.exec, n.div_ceil(chunk), |c| {
            let mut acc = vec![0.0; len];
            for p in c * chunk..((c + 1) * chunk).min(n) {
                let v = f.values[plan.pixels[p] as usize];
                if v == 0.0 {
                    continue;
                }
                for q in plan.offsets[p]..plan.offsets[p + 1] {
                    let cell = plan.cell[q] as usize;
                    let a = plan.frac[q] as f64;
                    let w = plan.w[q] as f64 * v;
                    acc[cell] += (1.0 - a) * w;
                    if a > 0.0 {
                        acc[cell + 1] += a * w;
                    }
                }
            }
            acc
        });
        let mut out = Sinogram::zeros(self.sino);
        for p in &partials {
            for (s, v) in out.values.iter_mut().zip(p) {
                *s += v;
            }
        }
        let h2 = self.grid.spacing * self.grid.spacing;
        let ds = self.sino.ds();
        let ns = self.sino.ns;
        for (r, v) in out.values.iter_mut().enumerate() {
            *v *= h2 / (ds * self.sino.t_weight(r / ns));
        }
        Ok(out)
    }

    fn check_image(&self, f: &ImageGrid) -> Result<()> {
        if f.spec != self.grid {
            return Err(Error::InvalidArgument("image grid does not match operator".into()));
        }
        Ok(())
    }

    fn check_sino(&self, g: &Sinogram) -> Result<()> {
        if g.spec != self.sino {
            return Err(Error::InvalidArgument("sinogram grid does not match operator".into()));
        }
        Ok(())
    }

    fn pad(&self, f: &ImageGrid) -> Vec<f64> {
        let pnx = self.padded_nx();
        let mut out = vec![0.0; self.padded_len()];
        for j in 0..self.grid.ny {
            let row = &f.values[j * self.grid.nx..(j + 1) * self.grid.nx];
            out[(j + PAD) * pnx + PAD..(j + PAD) * pnx + PAD + self.grid.nx].copy_from_slice(row);
        }
        out
    }

    fn crop(&self, padded: &[f64]) -> ImageGrid {
        let pnx = self.padded_nx();
        let mut img = ImageGrid::zeros(self.grid);
        for j in 0..self.grid.ny {
            let src = &padded[(j + PAD) * pnx + PAD..(j + PAD) * pnx + PAD + self.grid.nx];
            img.values[j * self.grid.nx..(j + 1) * self.grid.nx].copy_from_slice(src);
        }
        img.mask_support();
        img
    }

    fn build_forward_plan(&self) -> ForwardPlan {
        let nt = self.sino.nt;
        let per_t = par::map_collect(self.exec, nt, |k| self.plan_angle(k));
        let total: usize = per_t.iter().map(|a| a.w.len()).sum();
        let mut plan = ForwardPlan {
            offsets: Vec::with_capacity(self.sino.len() + 1),
            base: Vec::with_capacity(total),
            fx: Vec::with_capacity(total),
            fy: Vec::with_capacity(total),
            w: Vec::with_capacity(total),
            failed: Vec::new(),
            curves: 0,
        };
        plan.offsets.push(0);
        for (k, a) in per_t.into_iter().enumerate() {
            let start = plan.w.len();
            for o in &a.offsets[1..] {
                plan.offsets.push(start + o);
            }
            plan.base.extend(a.base);
            plan.fx.extend(a.fx);
            plan.fy.extend(a.fy);
            plan.w.extend(a.w);
            plan.failed.extend(a.failed.iter().map(|i| k * self.sino.ns + i));
            plan.curves += a.curves;
        }
        plan
    }

    /// Traces all rays of angle `k`.
    fn plan_angle(&self, k: usize) -> ForwardPlan {
        let t = self.sino.t(k);
        let pf = &*self.phase;
        let h = self.grid.spacing;
        let step = self.step_factor * h;
        let radius = self.grid.support_radius + 2.0 * h;
        let region = Region::Disk {
            center: [0.0, 0.0],
            radius,
        };
        let opts = TraceOptions::new(step).in_region(region);

        // coarse grid for seeds and for the range of phi at this angle
        let c = SEED_SPACING * h;
        let nc = (2.0 * (radius + c) / c).ceil() as usize + 1;
        let c0 = -(radius + c);
        let node = |a: usize, b: usize| Point::new(c0 + a as f64 * c, c0 + b as f64 * c);
        let mut phi = vec![f64::NAN; nc * nc];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut gmax: f64 = 0.0;
        for b in 0..nc {
            for a in 0..nc {
                let x = node(a, b);
                if x.norm() > radius + 1.5 * c || !pf.domain().contains(&x) {
                    continue;
                }
                let (v, g) = pf.value_grad(t, &x);
                phi[b * nc + a] = v;
                if x.norm() <= radius + c {
                    lo = lo.min(v);
                    hi = hi.max(v);
                    gmax = gmax.max(g.norm());
                }
            }
        }
        let pad = gmax * c;
        let (lo, hi) = (lo - pad, hi + pad);

        let ns = self.sino.ns;
        let mut out = ForwardPlan {
            offsets: vec![0],
            ..Default::default()
        };
        let mut cells: Vec<Vec<(u32, u32)>> = vec![Vec::new(); nc * nc];
        let mut touched: Vec<usize> = Vec::new();
        let cell_of = |x: &Point| -> Option<usize> {
            let a = ((x[0] - c0) / c).floor();
            let b = ((x[1] - c0) / c).floor();
            (a >= 0.0 && b >= 0.0 && (a as usize) < nc && (b as usize) < nc)
                .then(|| b as usize * nc + a as usize)
        };
        for i in 0..ns {
            let s = self.sino.s(i);
            if s < lo || s > hi {
                out.offsets.push(out.w.len());
                continue;
            }
            for &cidx in &touched {
                cells[cidx].clear();
            }
            touched.clear();
            let mut curves: Vec<LevelCurve> = Vec::new();
            let mut failed = false;
            for b in 0..nc {
                for a in 0..nc {
                    let v0 = phi[b * nc + a];
                    if v0.is_nan() {
                        continue;
                    }
                    for (a1, b1) in [(a + 1, b), (a, b + 1)] {
                        if a1 >= nc || b1 >= nc {
                            continue;
                        }
                        let v1 = phi[b1 * nc + a1];
                        if v1.is_nan() || (v0 - s) * (v1 - s) > 0.0 || v0 == v1 {
                            continue;
                        }
                        let u = (s - v0) / (v1 - v0);
                        let guess = node(a, b) + (node(a1, b1) - node(a, b)) * u;
                        let Some(seed) = project_to_level(pf, s, t, &guess, 20) else {
                            continue;
                        };
                        if !region.contains(&seed) {
                            continue;
                        }
                        if near_existing(&seed, &curves, &cells, cell_of, nc, 0.25 * step, step) {
                            continue;
                        }
                        match trace_level_curve_with(pf, s, t, &seed, &opts) {
                            Ok(curve) if !curve.is_empty() => {
                                let id = curves.len() as u32;
                                let n = curve.points.len();
                                let segs = if curve.closed { n } else { n.saturating_sub(1) };
                                for q in 0..segs.max(1) {
                                    let p0 = curve.points[q];
                                    let p1 = curve.points[(q + 1) % n];
                                    if let Some(ci) = cell_of(&((p0 + p1) * 0.5)) {
                                        if cells[ci].is_empty() {
                                            touched.push(ci);
                                        }
                                        cells[ci].push((id, q as u32));
                                    }
                                }
                                curves.push(curve);
                            }
                            Ok(_) => {}
                            Err(_) => failed = true,
                        }
                    }
                }
            }
            if failed {
                out.failed.push(i);
            } else {
                out.curves += curves.len();
                for curve in &curves {
                    self.push_samples(&mut out, curve, t);
                }
            }
            out.offsets.push(out.w.len());
        }
        out
    }

    fn push_samples(&self, out: &mut ForwardPlan, curve: &LevelCurve, t: f64) {
        let h = self.grid.spacing;
        let keep = self.grid.support_radius + 2.0 * h;
        let weights = curve.trapezoid_weights();
        let lead = self.interp.lead();
        let width = self.interp.width() as isize;
        let pnx = self.padded_nx() as isize;
        let pny = (self.grid.ny + 2 * PAD) as isize;
        for (x, wq) in curve.points.iter().zip(weights) {
            if x.norm() > keep {
                continue;
            }
            let fx = (x[0] - self.grid.origin[0]) / h;
            let fy = (x[1] - self.grid.origin[1]) / h;
            let (i0, j0) = (fx.floor(), fy.floor());
            let bi = i0 as isize + lead + PAD as isize;
            let bj = j0 as isize + lead + PAD as isize;
            if bi < 0 || bj < 0 || bi + width > pnx || bj + width > pny {
                continue;
            }
            out.base.push((bj * pnx + bi) as u32);
            out.fx.push((fx - i0) as f32);
            out.fy.push((fy - j0) as f32);
            out.w.push((wq * self.weight.eval(t, x)) as f32);
        }
    }

    fn build_adjoint_plan(&self) -> AdjointPlan {
        let spec = self.grid;
        let pixels: Vec<u32> = (0..spec.len())
            .filter(|&p| spec.in_support(&spec.point_at(p)))
            .map(|p| p as u32)
            .collect();
        let sino = self.sino;
        let pf = &*self.phase;
        let per_pixel = par::map_collect(self.exec, pixels.len(), |p| {
            let x = spec.point_at(pixels[p] as usize);
            let mut entries = Vec::with_capacity(sino.nt);
            let ds = sino.ds();
            for k in 0..sino.nt {
                let t = sino.t(k);
                let (s, g) = pf.value_grad(t, &x);
                let u = (s - sino.s_min) / ds;
                if !(u >= 0.0) || u > (sino.ns - 1) as f64 {
                    continue;
                }
                let mut i0 = u.floor() as usize;
                let mut a = u - i0 as f64;
                if i0 == sino.ns - 1 {
                    i0 -= 1;
                    a = 1.0;
                }
                let w = sino.t_weight(k) * self.weight.eval(t, &x) * g.norm();
                entries.push(((k * sino.ns + i0) as u32, a as f32, w as f32));
            }
            entries
        });
        let mut plan = AdjointPlan {
            offsets: Vec::with_capacity(pixels.len() + 1),
            pixels,
            ..Default::default()
        };
        plan.offsets.push(0);
        for e in per_pixel {
            for (c, a, w) in e {
                plan.cell.push(c);
                plan.frac.push(a);
                plan.w.push(w);
            }
            plan.offsets.push(plan.cell.len());
        }
        plan
    }
}

fn near_existing(
    x: &Point,
    curves: &[LevelCurve],
    cells: &[Vec<(u32, u32)>],
    cell_of: impl Fn(&Point) -> Option<usize>,
    nc: usize,
    tol: f64,
    end_tol: f64,
) -> bool {
    let Some(ci) = cell_of(x) else {
        return false;
    };
    let (a, b) = ((ci % nc) as isize, (ci / nc) as isize);
    for db in -1..=1 {
        for da in -1..=1 {
            let (na, nb) = (a + da, b + db);
            if na < 0 || nb < 0 || na >= nc as isize || nb >= nc as isize {
                continue;
            }
            for &(id, q) in &cells[nb as usize * nc + na as usize] {
                let c = &curves[id as usize];
                let n = c.points.len();
                let q = q as usize;
                let d = if n == 1 {
                    (x - c.points[0]).norm()
                } else {
                    segment_distance(x, &c.points[q], &c.points[(q + 1) % n])
                };
                if d < tol {
                    return true;
                }
                // tracing stops up to one step short of the region boundary
                if !c.closed {
                    let first = c.points[0];
                    let last = c.points[n - 1];
                    if (x - first).norm() < end_tol || (x - last).norm() < end_tol {
                        return true;
                    }
                }
            }
        }
    }
    false
}

#[inline]
fn stencil_value(img: &[f64], pnx: usize, interp: Interpolation, base: u32, fx: f32, fy: f32) -> f64 {
    let base = base as usize;
    match interp {
        Interpolation::Bilinear => {
            let (u, v) = (fx as f64, fy as f64);
            let r0 = &img[base..base + 2];
            let r1 = &img[base + pnx..base + pnx + 2];
            (1.0 - v) * ((1.0 - u) * r0[0] + u * r0[1]) + v * ((1.0 - u) * r1[0] + u * r1[1])
        }
        Interpolation::Cubic => {
            let wx = interp.weights(fx as f64);
            let wy = interp.weights(fy as f64);
            let mut acc = 0.0;
            for (b, wyb) in wy.iter().enumerate() {
                let row = &img[base + b * pnx..base + b * pnx + 4];
                acc += wyb * (wx[0] * row[0] + wx[1] * row[1] + wx[2] * row[2] + wx[3] * row[3]);
            }
            acc
        }
    }
}

#[inline]
fn stencil_scatter(
    img: &mut [f64],
    pnx: usize,
    interp: Interpolation,
    base: u32,
    fx: f32,
    fy: f32,
    v: f64,
) {
    let base = base as usize;
    let wx = interp.weights(fx as f64);
    let wy = interp.weights(fy as f64);
    let w = interp.width();
    for b in 0..w {
        for a in 0..w {
            img[base + b * pnx + a] += v * wx[a] * wy[b];
        }
    }
}

/// One-off forward evaluation: builds an operator for the image grid and
/// `sino_spec` and applies it.
pub fn forward_levelset(
    pf: Arc<dyn Phase>,
    mu: Arc<dyn Weight>,
    f: &ImageGrid,
    sino_spec: SinoSpec,
) -> Result<(Sinogram, ForwardReport)> {
    let op = LevelSetOperator::new(pf, mu, f.spec, sino_spec)?;
    let g = op.forward(f)?;
    Ok((g, op.report()))
}

/// One-off pixel-driven backprojection onto `grid`.
pub fn adjoint(
    pf: Arc<dyn Phase>,
    mu: Arc<dyn Weight>,
    g: &Sinogram,
    grid: GridSpec,
) -> Result<ImageGrid> {
    let op = LevelSetOperator::new(pf, mu, grid, g.spec)?;
    op.adjoint(g)
}
