//! Subcommand implementations. Each writes its artifacts and a
//! `manifest.json` into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use curvetomo::geometry::{omega, Phase, Point, Vector};
use curvetomo::io::{
    read_image, read_sinogram, write_grid, write_pgm, FileEntry, GeometryConfig, GridData,
    Manifest, PhaseSpec,
};
use curvetomo::microlocal::{
    bolker_determinant, dpiy_rank, prop31_equivalence_check, principal_symbol,
    semiglobal_bolker_check, visibility_map,
};
use curvetomo::operators::{
    fanbeam_convert, fanbeam_convert_lenient, forward_fanbeam, forward_lagrangian,
    parallel_spec_for, Backprojector, Localization, NormalOperator,
    SinoSpec, Sinogram,
};
use curvetomo::phantom::{boundary_wavefront, default_phantom, render_phantom, visibility_audit, EllipseSpec};
use curvetomo::recon::{
    band_limited_field, breathing_perturbation, cg_normal_solve, perturbation_sweep,
    stability_probe, Method, MotionFamily, ProbeOptions, SolveOptions,
};
use curvetomo::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::args::*;

/// Failure of a run, carrying its exit status.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    /// A numeric check did not pass (exit 3).
    Check(String),
    /// Some requested singularity or direction is not visible (exit 4).
    Invisible(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Core(Error::Json(e))
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Check(m) | Failure::Invisible(m) => f.write_str(m),
        }
    }
}

impl Failure {
    /// 2 config, 3 numeric, 4 coverage or visibility.
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Check(_) => 3,
            Failure::Invisible(_) => 4,
            Failure::Core(e) => match e {
                Error::Config(_)
                | Error::Json(_)
                | Error::Io(_)
                | Error::Format(_)
                | Error::InvalidArgument(_) => 2,
                Error::Coverage(_) | Error::OutOfRange { .. } => 4,
                Error::Domain { .. }
                | Error::Branch { .. }
                | Error::SeedProjection { .. }
                | Error::Stall { .. }
                | Error::DegenerateSymbol { .. }
                | Error::Divergence(_)
                | Error::NanBudget { .. } => 3,
            },
        }
    }
}

pub type Outcome = Result<Manifest, Failure>;

struct Run {
    out: PathBuf,
    manifest: Manifest,
}

impl Run {
    fn new(command: &str, out: &Path, config: Option<&GeometryConfig>, seed: u64) -> Result<Self, Failure> {
        fs::create_dir_all(out)?;
        Ok(Run {
            out: out.to_owned(),
            manifest: Manifest::new(command, config.map(GeometryConfig::hash), seed),
        })
    }

    fn input(&mut self, path: &Path) -> Result<(), Failure> {
        self.manifest
            .inputs
            .push(FileEntry::of(path, &path.display().to_string())?);
        for side in [curvetomo::io::sidecar_path(path)] {
            if side.exists() {
                self.manifest
                    .inputs
                    .push(FileEntry::of(&side, &side.display().to_string())?);
            }
        }
        Ok(())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn output(&mut self, name: &str) -> Result<(), Failure> {
        let p = self.path(name);
        self.manifest.outputs.push(FileEntry::of(&p, name)?);
        Ok(())
    }

    fn grid(&mut self, name: &str, data: &GridData, hash: Option<&str>) -> Result<(), Failure> {
        write_grid(&self.path(name), data, hash)?;
        self.output(name)?;
        self.output(&format!("{name}.json"))
    }

    fn text(&mut self, name: &str, text: &str) -> Result<(), Failure> {
        fs::write(self.path(name), text)?;
        self.output(name)
    }

    fn json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.text(name, &s)
    }

    fn pgm(&mut self, name: &str, values: &[f64], dims: [usize; 2]) -> Result<(), Failure> {
        write_pgm(&self.path(name), values, dims)?;
        self.output(name)
    }

    fn finish(mut self, results: serde_json::Value) -> Outcome {
        self.manifest.results = results;
        self.manifest.write(&self.out.join("manifest.json"))?;
        Ok(self.manifest)
    }
}

fn load_config(path: &Path) -> Result<GeometryConfig, Failure> {
    Ok(GeometryConfig::load(path)?)
}

pub fn run(cli: &Cli) -> Outcome {
    let seed = cli.seed;
    match &cli.command {
        Command::Phantom(a) => phantom(a, seed),
        Command::Forward(a) => forward(a, seed),
        Command::AdjointTest(a) => adjoint_test(a, seed),
        Command::CheckBolker(a) => check_bolker(a, seed),
        Command::Visibility(a) => visibility(a, seed),
        Command::Symbol(a) => symbol(a, seed),
        Command::Normal(a) => normal(a, seed),
        Command::Reconstruct(a) => reconstruct(a, seed),
        Command::Stability(a) => stability(a, seed),
        Command::PerturbSweep(a) => perturb(a, seed),
        Command::FanbeamConvert(a) => fan_convert(a, seed),
    }
}

fn load_ellipses(path: &Path) -> Result<Vec<EllipseSpec>, Failure> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Core(Error::Config(format!("{}: {e}", path.display()))))
}

fn phantom(a: &PhantomArgs, seed: u64) -> Outcome {
    let cfg = match &a.config {
        Some(p) => load_config(p)?,
        None => GeometryConfig::default(),
    };
    let specs = match &a.spec {
        Some(p) => load_ellipses(p)?,
        None => default_phantom(),
    };
    let mut run = Run::new("phantom", &a.common.out, Some(&cfg), seed)?;
    if let Some(p) = &a.config {
        run.input(p)?;
    }
    if let Some(p) = &a.spec {
        run.input(p)?;
    }
    let grid = cfg.grid_spec();
    let img = render_phantom(&specs, grid)?;
    let wf = boundary_wavefront(&specs, a.n_per_ellipse)?;
    let hash = cfg.hash();
    run.grid("phantom.bin", &GridData::Image(img.clone()), Some(&hash))?;
    run.pgm("phantom.pgm", &img.values, [grid.nx, grid.ny])?;
    let mut csv = String::from("ellipse,x,y,xi_x,xi_y\n");
    for (s, e) in wf.samples.iter().zip(&wf.ellipse) {
        writeln!(csv, "{e},{},{},{},{}", s.x[0], s.x[1], s.xi[0], s.xi[1]).unwrap();
    }
    run.text("wavefront.csv", &csv)?;
    run.json("ellipses.json", &specs)?;
    run.finish(json!({
        "ellipses": specs.len(),
        "mass": img.mass(),
        "wavefront_samples": wf.samples.len(),
    }))
}

fn forward(a: &ForwardArgs, seed: u64) -> Outcome {
    let cfg = load_config(&a.config)?;
    let mut run = Run::new("forward", &a.common.out, Some(&cfg), seed)?;
    run.input(&a.config)?;
    run.input(&a.image)?;
    let f = read_image(&a.image)?;
    if f.spec != cfg.grid_spec() {
        return Err(Error::Config("image grid does not match the config grid".into()).into());
    }
    let hash = cfg.hash();
    let (g, results) = match a.mode {
        ForwardMode::Levelset => {
            let op = cfg.operator()?;
            let g = op.forward(&f)?;
            let report = op.report();
            (g, json!({ "mode": "levelset", "report": report }))
        }
        ForwardMode::Lagrangian => {
            if matches!(cfg.phase, PhaseSpec::Fanbeam { .. }) {
                return Err(Error::Config("the Lagrangian forward needs a static or dynamic phase".into()).into());
            }
            let motion = cfg.motion.build()?;
            let pf = cfg.phase()?;
            let sino = cfg.sino_spec(&*pf)?;
            let g = forward_lagrangian(&*motion, &*cfg.weight(), &f, sino)?;
            (g, json!({ "mode": "lagrangian" }))
        }
        ForwardMode::Fanbeam => {
            let fan = cfg.fan_spec()?;
            let g = forward_fanbeam(&f, &*cfg.weight(), &fan)?;
            (g, json!({ "mode": "fanbeam", "fan": fan }))
        }
    };
    run.grid("sinogram.bin", &GridData::Sinogram(g.clone()), Some(&hash))?;
    run.pgm("sinogram.pgm", &g.values, [g.spec.ns, g.spec.nt])?;
    run.finish(results)
}

fn random_sinogram(spec: SinoSpec, rng: &mut ChaCha8Rng) -> Sinogram {
    let values = (0..spec.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    Sinogram::from_values(spec, values).expect("length matches")
}

fn adjoint_test(a: &AdjointTestArgs, seed: u64) -> Outcome {
    let cfg = load_config(&a.config)?;
    let mut run = Run::new("adjoint-test", &a.common.out, Some(&cfg), seed)?;
    run.input(&a.config)?;
    let op = cfg.operator()?;
    let report = op.prepare()?;
    let grid = op.grid;
    let mut pairs = Vec::new();
    if let Some(p) = &a.image {
        run.input(p)?;
        let f = read_image(p)?;
        let g = match &a.data {
            Some(d) => {
                run.input(d)?;
                read_sinogram(d)?
            }
            None => op.forward(&f)?,
        };
        pairs.push((f, g));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..a.pairs {
        let f = band_limited_field(grid, (grid.nx / 8).max(1), grid.support_radius * 0.95, &mut rng);
        let g = random_sinogram(op.sino, &mut rng);
        pairs.push((f, g));
    }
    let mut discrepancies = Vec::new();
    for (f, g) in &pairs {
        if g.spec != op.sino {
            return Err(Error::Config("data grid does not match the config sinogram".into()).into());
        }
        let af = op.forward(f)?;
        let back = match a.backprojector {
            BackprojectorArg::Formula => op.adjoint(g)?,
            BackprojectorArg::Transpose => op.forward_adjoint(g)?,
        };
        let denom = af.norm() * g.norm();
        let d = if denom > 0.0 { (af.inner(g) - f.inner(&back)).abs() / denom } else { 0.0 };
        discrepancies.push(d);
    }
    let max = discrepancies.iter().cloned().fold(0.0, f64::max);
    let passed = max < a.threshold;
    run.json("adjoint_test.json", &json!({ "discrepancies": discrepancies }))?;
    let manifest = run.finish(json!({
        "pairs": discrepancies.len(),
        "max_discrepancy": max,
        "threshold": a.threshold,
        "passed": passed,
        "forward_report": report,
    }))?;
    if !passed {
        return Err(Failure::Check(format!(
            "adjoint discrepancy {max:e} exceeds {:e}",
            a.threshold
        )));
    }
    Ok(manifest)
}

/// Uniform samples of `(t, x)` over the time range and the support disk.
fn sample_points(pf: &dyn Phase, radius: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, Point)> {
    let range = pf.t_range();
    (0..n)
        .map(|_| {
            let t = rng.random_range(range.start..range.end);
            let r = radius * rng.random_range(0.0f64..1.0).sqrt();
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            (t, omega(a) * r)
        })
        .collect()
}

fn check_bolker(a: &CheckBolkerArgs, seed: u64) -> Outcome {
    let cfg = load_config(&a.config)?;
    let mut run = Run::new("check-bolker", &a.common.out, Some(&cfg), seed)?;
    run.input(&a.config)?;
    let pf = cfg.phase()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = sample_points(&*pf, 0.95 * cfg.grid.support_radius, a.samples, &mut rng);
    let mut rows = Vec::with_capacity(samples.len());
    let mut dpiy_err: f64 = 0.0;
    let mut full_rank = 0;
    for (t, x) in &samples {
        let h = bolker_determinant(&*pf, *t, x)?;
        let sigma = 1.0 + rng.random_range(0.0..2.0);
        let (rank, det) = dpiy_rank(&*pf, *t, x, sigma)?;
        if rank == 4 {
            full_rank += 1;
        }
        let expect = sigma * h;
        dpiy_err = dpiy_err.max((det.abs() - expect.abs()).abs() / expect.abs().max(1e-300));
        rows.push((h, rank, det));
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let min_h = hs.iter().map(|h| h.abs()).fold(f64::INFINITY, f64::min);
    let max_h = hs.iter().map(|h| h.abs()).fold(0.0, f64::max);
    let prop31 = prop31_equivalence_check(&*pf, &samples)?;
    let mut semiglobal = Vec::new();
    for (t, x) in samples.iter().take(a.curve_points) {
        let witnesses = semiglobal_bolker_check(&*pf, *t, x, 512)?;
        semiglobal.push(json!({
            "t": t,
            "x": [x[0], x[1]],
            "witnesses": witnesses.len(),
        }));
    }
    let mut csv = String::from("t,x,y,h,rank,det\n");
    for ((t, x), (h, rank, det)) in samples.iter().zip(&rows) {
        writeln!(csv, "{t},{},{},{h},{rank},{det}", x[0], x[1]).unwrap();
    }
    run.text("bolker.csv", &csv)?;
    if a.map_n > 0 {
        let t0 = pf.t_range().start;
        let map = heatmap(&cfg, a.map_n, |x| bolker_determinant(&*pf, t0, x).map(f64::abs).ok());
        run.pgm("h_abs.pgm", &map, [a.map_n, a.map_n])?;
    }
    let results = json!({
        "phase": pf.name(),
        "samples": samples.len(),
        "min_abs_h": min_h,
        "max_abs_h": max_h,
        "dpiy_full_rank": full_rank,
        "dpiy_det_rel_err": dpiy_err,
        "prop31": prop31,
        "semiglobal": semiglobal,
    });
    run.json("bolker.json", &results)?;
    run.finish(results)
}

/// `value` on an `n x n` grid over the configured support disk; NaN where
/// it is undefined or outside the disk.
fn heatmap<F>(cfg: &GeometryConfig, n: usize, value: F) -> Vec<f64>
where
    F: Fn(&Point) -> Option<f64>,
{
    let spec = curvetomo::operators::GridSpec::square(n, cfg.grid.half_width, cfg.grid.support_radius);
    (0..spec.len())
        .map(|k| {
            let x = spec.point_at(k);
            if spec.in_support(&x) {
                value(&x).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            }
        })
        .collect()
}

fn visibility(a: &VisibilityArgs, seed: u64) -> Outcome {
    let cfg = load_config(&a.config)?;
    let mut run = Run::new("visibility", &a.common.out, Some(&cfg), seed)?;
    run.input(&a.config)?;
    let pf = cfg.phase()?;
    let range = cfg.t_range;
    let mut maps = Vec::new();
    let mut csv = String::from("x,y,direction,count\n");
    let mut invisible = 0usize;
    for p in &a.points {
        let m = visibility_map(&*pf, &Point::new(p[0], p[1]), a.directions, &range)?;
        for (d, c) in m.directions.iter().zip(&m.count) {
            writeln!(csv, "{},{},{d},{c}", p[0], p[1]).unwrap();
        }
        invisible += m.invisible_directions().len();
        maps.push(m);
    }
    run.text("visibility.csv", &csv)?;
    if a.map_n > 0 {
        let map = heatmap(&cfg, a.map_n, |x| {
            visibility_map(&*pf, x, a.map_directions, &range)
                .ok()
                .map(|m| m.count.iter().filter(|&&c| c > 0).count() as f64)
        });
        run.pgm("visibility_count.pgm", &map, [a.map_n, a.map_n])?;
    }
    let specs = match (&a.phantom, a.default_phantom) {
        (Some(p), _) => {
            run.input(p)?;
            Some(load_ellipses(p)?)
        }
        (None, true) => Some(default_phantom()),
        (None, false) => None,
    };
    let audit = match specs {
        Some(specs) => {
            let wf = boundary_wavefront(&specs, a.n_per_ellipse)?;
            let audit = visibility_audit(&*pf, &wf, &range);
            let mut csv = String::from("ellipse,x,y,xi_x,xi_y,visible\n");
            for ((s, e), v) in wf.samples.iter().zip(&wf.ellipse).zip(&audit.visible) {
                writeln!(csv, "{e},{},{},{},{},{}", s.x[0], s.x[1], s.xi[0], s.xi[1], *v as u8).unwrap();
            }
            run.text("audit.csv", &csv)?;
            invisible += audit.visible.iter().filter(|v| !**v).count();
            Some(audit.fraction_visible)
        }
        None => None,
    };
    run.json("visibility.json", &maps)?;
    let manifest = run.finish(json!({
        "points": maps.iter().map(|m| json!({
            "x": m.x,
            "visible_fraction": m.visible_fraction(),
            "invisible_directions": m.invisible_directions(),
        })).collect::<Vec<_>>(),
        "edge_fraction_visible": audit,
        "invisible": invisible,
    }))?;
    if a.strict && invisible > 0 {
        return Err(Failure::Invisible(format!("{invisible} invisible directions or edge samples")));
    }
    Ok(manifest)
}

fn symbol(a: &SymbolArgs, seed: u64) -> Outcome {
    let cfg = load_config(&a.config)?;
    let mut run = Run::new("symbol", &a.common.out, Some(&cfg), seed)?;
    run.input(&a.config)?;
    let pf = cfg.phase()?;
    let atlas = cfg.charts()?;
    let value = principal_symbol(
        &*pf,
        &*cfg.weight(),
        &atlas,
        &Point::new(a.x[0], a.x[1]),
        &Vector::new(a.xi[0], a.xi[1]),
    )?;
    run.json("symbol.json", &value)?;
    run.finish(serde_json::to_value(&value)?)
}

fn normal(a: &NormalArgs, seed: u64) -> Outcome {
    let cfg = load_config(&a.config)?;
    let mut run = Run::new("normal", &a.common.out, Some(&cfg), seed)?;
    run.input(&a.config)?;
    run.input(&a.image)?;
    let op = cfg.operator()?;
    let atlas = cfg.atlas(&*op.phase)?;
    let f = read_image(&a.image)?;
    if f.spec != op.grid {
        return Err(Error::Config("image grid does not match the config grid".into()).into());
    }
    let localization = match a.localization {
        LocalizationArg::Paper => Localization::Paper,
        LocalizationArg::Symmetric => Localization::Symmetric,
    };
    let backprojector = match a.backprojector {
        BackprojectorArg::Formula => Backprojector::Formula,
        BackprojectorArg::Transpose => Backprojector::Transpose,
    };
    let nf = NormalOperator::new(&op, &atlas, localization, backprojector).apply(&f)?;
    let hash = cfg.hash();
    run.grid("normal.bin", &GridData::Image(nf.clone()), Some(&hash))?;
    run.pgm("normal.pgm", &nf.values, [nf.spec.nx, nf.spec.ny])?;
    run.finish(json!({
        "charts": atlas.len(),
        "localization": localization,
        "backprojector": backprojector,
        "norm": nf.norm(),
    }))
}

fn reconstruct(a: &ReconstructArgs, seed: u64) -> Outcome {
    let cfg = load_config(&a.config)?;
    let mut run = Run::new("reconstruct", &a.common.out, Some(&cfg), seed)?;
    run.input(&a.config)?;
    run.input(&a.data)?;
    let op = cfg.operator()?;
    let atlas = cfg.atlas(&*op.phase)?;
    let g = read_sinogram(&a.data)?;
    if g.spec != op.sino {
        return Err(Error::Config("data grid does not match the config sinogram".into()).into());
    }
    let opts = SolveOptions {
        max_iter: a.iters,
        tol: a.tol,
        tikhonov: a.tikhonov,
        method: match a.method {
            MethodArg::Cr => Method::Cr,
            MethodArg::Cg => Method::Cg,
            MethodArg::Landweber => Method::Landweber,
        },
    };
    let (rec, mut report) = cg_normal_solve(&op, &atlas, &g, &opts)?;
    if let Some(p) = &a.truth {
        run.input(p)?;
        let truth = read_image(p)?;
        report = report.with_truth(&rec, &truth, 0.9 * cfg.grid.support_radius);
    }
    let data_residual = {
        let mut r = op.forward(&rec)?;
        for (v, w) in r.values.iter_mut().zip(&g.values) {
            *v -= w;
        }
        r.norm() / g.norm().max(f64::MIN_POSITIVE)
    };
    eprintln!("reconstruct: {} iterations in {:.2?}", report.iterations, report.runtime);
    let hash = cfg.hash();
    run.grid("recon.bin", &GridData::Image(rec.clone()), Some(&hash))?;
    run.pgm("recon.pgm", &rec.values, [rec.spec.nx, rec.spec.ny])?;
    let mut csv = String::from("iteration,relative_residual\n");
    for (i, r) in report.residual_history.iter().enumerate() {
        writeln!(csv, "{i},{r}").unwrap();
    }
    run.text("residuals.csv", &csv)?;
    run.json("report.json", &report)?;
    run.finish(json!({
        "iterations": report.iterations,
        "converged": report.converged,
        "final_residual": report.residual_history.last(),
        "data_residual": data_residual,
        "rel_error_vs_truth": report.rel_error_vs_truth,
        "options": opts,
    }))
}

fn stability(a: &StabilityArgs, seed: u64) -> Outcome {
    let mut run = Run::new("stability", &a.common.out, None, seed)?;
    let family = match a.family {
        FamilyArg::Breathing => MotionFamily::Breathing { radius: 1.0 },
        FamilyArg::Rotation => MotionFamily::Rotation,
    };
    let grid = curvetomo::operators::GridSpec::square(a.n, 1.0, 1.0);
    let opts = ProbeOptions {
        nt: a.nt,
        lanczos_steps: a.lanczos,
        seed,
        ..Default::default()
    };
    let report = stability_probe(&family, &a.amplitudes, a.samples, grid, &opts)?;
    let mut csv = String::from("amplitude,sample,ratio\n");
    for (amp, ratios) in report.amplitudes.iter().zip(&report.ratios) {
        for (k, r) in ratios.iter().enumerate() {
            writeln!(csv, "{amp},{k},{r}").unwrap();
        }
    }
    run.text("stability.csv", &csv)?;
    run.json("stability.json", &report)?;
    run.finish(json!({
        "family": family,
        "amplitudes": report.amplitudes,
        "median_ratio": report.median_ratio,
        "worst_case_ratio": report.worst_case_ratio,
        "degenerate": report.degenerate,
    }))
}

fn perturb(a: &PerturbArgs, seed: u64) -> Outcome {
    let mut run = Run::new("perturb-sweep", &a.common.out, None, seed)?;
    let grid = curvetomo::operators::GridSpec::square(a.n, 1.0, 1.0);
    let (pf, mu) = breathing_perturbation(0.0)?;
    let sino = SinoSpec::fitted(&*pf, &grid, a.nt, 1.0)?;
    let f = curvetomo::operators::ImageGrid::from_fn(grid, |x| {
        (-(x - Point::new(0.1, -0.2)).norm_squared() / 0.08).exp()
    });
    let table = perturbation_sweep((pf, mu), &breathing_perturbation, &a.deltas, &f, sino)?;
    let mut csv = String::from("delta,ratio\n");
    for (d, r) in table.deltas.iter().zip(&table.ratios) {
        writeln!(csv, "{d},{r}").unwrap();
    }
    run.text("perturbation.csv", &csv)?;
    run.json("perturbation.json", &table)?;
    run.finish(serde_json::to_value(&table)?)
}

fn fan_convert(a: &FanConvertArgs, seed: u64) -> Outcome {
    let cfg = load_config(&a.config)?;
    let mut run = Run::new("fanbeam-convert", &a.common.out, Some(&cfg), seed)?;
    run.input(&a.config)?;
    run.input(&a.data)?;
    let fan = cfg.fan_spec()?;
    let g_fan = read_sinogram(&a.data)?;
    let target = match a.s_range {
        Some([lo, hi]) => SinoSpec::new(a.ns, a.nt, lo, hi, curvetomo::geometry::TimeRange::full())?,
        None => parallel_spec_for(&fan, a.ns, a.nt)?,
    };
    let (g, report) = if a.lenient {
        fanbeam_convert_lenient(&g_fan, fan.radius, target)?
    } else {
        fanbeam_convert(&g_fan, fan.radius, target)?
    };
    let hash = cfg.hash();
    run.grid("parallel.bin", &GridData::Sinogram(g.clone()), Some(&hash))?;
    run.finish(json!({
        "radius": fan.radius,
        "report": report,
        "density_weighting": false,
    }))
}
