//! Discrete images `f(x)` and sinograms `g(s, t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Phase, Point, TimeRange};
use crate::par::{self, Exec, DEFAULT_CHUNK};

/// Square pixel grid. Pixel `(i, j)` has center
/// `origin + (i * spacing, j * spacing)`; values are stored row by row
/// (`j * nx + i`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub origin: [f64; 2],
    pub support_radius: f64,
}

impl GridSpec {
    /// `n x n` pixels covering `[-half_width, half_width]^2`.
    pub fn square(n: usize, half_width: f64, support_radius: f64) -> Self {
        let spacing = 2.0 * half_width / n as f64;
        let o = -half_width + 0.5 * spacing;
        GridSpec {
            nx: n,
            ny: n,
            spacing,
            origin: [o, o],
            support_radius,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin[0] + i as f64 * self.spacing,
            self.origin[1] + j as f64 * self.spacing,
        )
    }

    #[inline]
    pub fn point_at(&self, idx: usize) -> Point {
        self.point(idx % self.nx, idx / self.nx)
    }

    pub fn in_support(&self, x: &Point) -> bool {
        x.norm() <= self.support_radius
    }

    /// Half-width of the square spanned by the pixel edges.
    pub fn extent(&self) -> ([f64; 2], [f64; 2]) {
        let h = 0.5 * self.spacing;
        (
            [self.origin[0] - h, self.origin[1] - h],
            [
                self.origin[0] + (self.nx as f64 - 0.5) * self.spacing,
                self.origin[1] + (self.ny as f64 - 0.5) * self.spacing,
            ],
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 || !(self.spacing > 0.0) || !(self.support_radius > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid grid {self:?}")));
        }
        Ok(())
    }
}

/// Image interpolation used when sampling `f` along curves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Bilinear,
    /// Keys cubic convolution, `a = -1/2`.
    Cubic,
}

impl Interpolation {
    /// Stencil width in pixels.
    pub fn width(self) -> usize {
        match self {
            Interpolation::Bilinear => 2,
            Interpolation::Cubic => 4,
        }
    }

    /// Per-axis weights at fractional offset `u` from the stencil's second
    /// (bilinear: first) node.
    #[inline]
    pub fn weights(self, u: f64) -> [f64; 4] {
        match self {
            Interpolation::Bilinear => [1.0 - u, u, 0.0, 0.0],
            Interpolation::Cubic => {
                let a = -0.5;
                let k1 = |d: f64| ((a + 2.0) * d - (a + 3.0)) * d * d + 1.0;
                let k2 = |d: f64| ((a * d - 5.0 * a) * d + 8.0 * a) * d - 4.0 * a;
                [k2(1.0 + u), k1(u), k1(1.0 - u), k2(2.0 - u)]
            }
        }
    }

    /// Offset of the stencil's first node from `floor(position)`.
    pub fn lead(self) -> isize {
        match self {
            Interpolation::Bilinear => 0,
            Interpolation::Cubic => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl ImageGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        ImageGrid {
            values: vec![0.0; spec.len()],
            spec,
        }
    }

    /// Samples `f` at pixel centers; zero outside the support disk.
    pub fn from_fn<F>(spec: GridSpec, f: F) -> Self
    where
        F: Fn(&Point) -> f64 + Sync + Send,
    {
        let mut img = ImageGrid::zeros(spec);
        par::fill(Exec::default(), &mut img.values, |k| {
            let x = spec.point_at(k);
            if spec.in_support(&x) {
                f(&x)
            } else {
                0.0
            }
        });
        img
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        Ok(ImageGrid { spec, values })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.spec.nx + i]
    }

    /// Zeroes every pixel outside the support disk.
    pub fn mask_support(&mut self) {
        let spec = self.spec;
        for (k, v) in self.values.iter_mut().enumerate() {
            if !spec.in_support(&spec.point_at(k)) {
                *v = 0.0;
            }
        }
    }

    /// Interpolated value at `x`; pixels beyond the grid count as zero.
    pub fn sample(&self, x: &Point, interp: Interpolation) -> f64 {
        let h = self.spec.spacing;
        let fx = (x[0] - self.spec.origin[0]) / h;
        let fy = (x[1] - self.spec.origin[1]) / h;
        let (i0, j0) = (fx.floor(), fy.floor());
        let wx = interp.weights(fx - i0);
        let wy = interp.weights(fy - j0);
        let lead = interp.lead();
        let mut acc = 0.0;
        for b in 0..interp.width() {
            let j = j0 as isize + lead + b as isize;
            if j < 0 || j >= self.spec.ny as isize {
                continue;
            }
            for a in 0..interp.width() {
                let i = i0 as isize + lead + a as isize;
                if i < 0 || i >= self.spec.nx as isize {
                    continue;
                }
                acc += wx[a] * wy[b] * self.values[j as usize * self.spec.nx + i as usize];
            }
        }
        acc
    }

    /// `sum f g h^2`.
    pub fn inner(&self, other: &ImageGrid) -> f64 {
        let h2 = self.spec.spacing * self.spec.spacing;
        h2 * par::dot(Exec::default(), &self.values, &other.values, DEFAULT_CHUNK)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Integral `sum f h^2`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.spacing * self.spec.spacing
    }

    pub fn scaled(&self, a: f64) -> ImageGrid {
        ImageGrid {
            spec: self.spec,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &ImageGrid) {
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += a * o;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Data grid. `s` is uniform on `[s_min, s_max]` with `ns` nodes; `t` is
/// uniform over the time range: `nt` periodic nodes for a full turn,
/// otherwise `nt` nodes including both ends. Values are stored angle by
/// angle (`k * ns + i`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinoSpec {
    pub ns: usize,
    pub nt: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub t_range: TimeRange,
}

impl SinoSpec {
    pub fn new(ns: usize, nt: usize, s_min: f64, s_max: f64, t_range: TimeRange) -> Result<Self> {
        let spec = SinoSpec {
            ns,
            nt,
            s_min,
            s_max,
            t_range,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ns < 2 || self.nt < 2 || !(self.s_max > self.s_min) || !(self.t_range.length() > 0.0)
        {
            return Err(Error::InvalidArgument(format!("invalid sinogram grid {self:?}")));
        }
        Ok(())
    }

    /// Grid fitted to the range of `phi` over the support disk.
    ///
    /// The `s` range is padded by 5% of its half-width; `ds` is the pixel
    /// spacing times the median `|d_x phi|`, divided by `oversample`.
    pub fn fitted<P: Phase + ?Sized>(
        pf: &P,
        grid: &GridSpec,
        nt: usize,
        oversample: f64,
    ) -> Result<Self> {
        let t_range = pf.t_range();
        let probe = 48;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut grads = Vec::new();
        let r = grid.support_radius;
        for k in 0..nt.min(180) {
            let t = t_range.start + t_range.length() * k as f64 / nt.min(180) as f64;
            for j in 0..=probe {
                for i in 0..=probe {
                    let x = Point::new(
                        r * (2.0 * i as f64 / probe as f64 - 1.0),
                        r * (2.0 * j as f64 / probe as f64 - 1.0),
                    );
                    if x.norm() > r {
                        continue;
                    }
                    let (v, g) = pf.value_grad(t, &x);
                    lo = lo.min(v);
                    hi = hi.max(v);
                    if (i + j) % 7 == 0 {
                        grads.push(g.norm());
                    }
                }
            }
        }
        grads.sort_by(f64::total_cmp);
        let median = grads[grads.len() / 2];
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo) * 1.05;
        let ds = grid.spacing * median / oversample;
        let ns = ((2.0 * half / ds).ceil() as usize + 1).max(2);
        SinoSpec::new(ns, nt, mid - half, mid + half, t_range)
    }

    pub fn len(&self) -> usize {
        self.ns * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ds(&self) -> f64 {
        (self.s_max - self.s_min) / (self.ns - 1) as f64
    }

    pub fn periodic(&self) -> bool {
        self.t_range.is_full_turn()
    }

    pub fn dt(&self) -> f64 {
        if self.periodic() {
            self.t_range.length() / self.nt as f64
        } else {
            self.t_range.length() / (self.nt - 1) as f64
        }
    }

    #[inline]
    pub fn s(&self, i: usize) -> f64 {
        self.s_min + i as f64 * self.ds()
    }

    #[inline]
    pub fn t(&self, k: usize) -> f64 {
        self.t_range.start + k as f64 * self.dt()
    }

    /// Trapezoid weights over the `t` nodes.
    pub fn t_weight(&self, k: usize) -> f64 {
        let dt = self.dt();
        if !self.periodic() && (k == 0 || k + 1 == self.nt) {
            0.5 * dt
        } else {
            dt
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub spec: SinoSpec,
    pub values: Vec<f64>,
}

impl Sinogram {
    pub fn zeros(spec: SinoSpec) -> Self {
        Sinogram {
            values: vec![0.0; spec.len()],
            spec,
        }
    }

    pub fn from_fn<F>(spec: SinoSpec, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        let mut g = Sinogram::zeros(spec);
        par::fill(Exec::default(), &mut g.values, |idx| {
            f(spec.s(idx % spec.ns), spec.t(idx / spec.ns))
        });
        g
    }

    pub fn from_values(spec: SinoSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        Ok(Sinogram { spec, values })
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[k * self.spec.ns + i]
    }

    /// Linear interpolation in `s` on angle `k`; zero outside the grid.
    pub fn sample_s(&self, s: f64, k: usize) -> f64 {
        let u = (s - self.spec.s_min) / self.spec.ds();
        let i0 = u.floor();
        if i0 < 0.0 || i0 as usize + 1 >= self.spec.ns {
            if u == (self.spec.ns - 1) as f64 {
                return self.get(self.spec.ns - 1, k);
            }
            return 0.0;
        }
        let i = i0 as usize;
        let a = u - i0;
        (1.0 - a) * self.get(i, k) + a * self.get(i + 1, k)
    }

    /// `sum g1 g2 ds w_t`.
    pub fn inner(&self, other: &Sinogram) -> f64 {
        let spec = self.spec;
        let ns = spec.ns;
        par::sum_by(Exec::default(), spec.nt, 1, |k| {
            let row: f64 = (0..ns)
                .map(|i| self.values[k * ns + i] * other.values[k * ns + i])
                .sum();
            row * spec.t_weight(k)
        }) * spec.ds()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn scaled(&self, a: f64) -> Sinogram {
        Sinogram {
            spec: self.spec,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    pub fn nan_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }
}

/// `||a - b|| / ||b||` over raw values.
pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_static_phase;

    #[test]
    fn grid_geometry() {
        let g = GridSpec::square(128, 1.0, 1.0);
        assert!((g.spacing - 1.0 / 64.0).abs() < 1e-15);
        assert!((g.point(0, 0)[0] + 1.0 - 0.5 * g.spacing).abs() < 1e-15);
        assert!((g.point(127, 127)[1] - 1.0 + 0.5 * g.spacing).abs() < 1e-15);
        let (lo, hi) = g.extent();
        assert!((lo[0] + 1.0).abs() < 1e-15 && (hi[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interpolation_reproduces_linear_functions() {
        let spec = GridSpec::square(32, 1.0, 10.0);
        let img = ImageGrid::from_fn(spec, |x| 0.3 + 2.0 * x[0] - x[1]);
        for interp in [Interpolation::Bilinear, Interpolation::Cubic] {
            let x = Point::new(0.123, -0.377);
            assert!((img.sample(&x, interp) - (0.3 + 0.246 + 0.377)).abs() < 1e-12);
        }
        let q = ImageGrid::from_fn(spec, |x| x[0] * x[0]);
        let x = Point::new(0.1234, 0.2);
        assert!((q.sample(&x, Interpolation::Cubic) - 0.1234f64.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn cubic_weights_partition_unity() {
        for k in 0..10 {
            let u = k as f64 / 10.0;
            let w = Interpolation::Cubic.weights(u);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn support_is_enforced() {
        let spec = GridSpec::square(16, 1.0, 0.5);
        let img = ImageGrid::from_fn(spec, |_| 1.0);
        for k in 0..spec.len() {
            if spec.point_at(k).norm() > 0.5 {
                assert_eq!(img.values[k], 0.0);
            }
        }
    }

    #[test]
    fn sinogram_grid_and_weights() {
        let s = SinoSpec::new(11, 4, -1.0, 1.0, TimeRange::full()).unwrap();
        assert!((s.ds() - 0.2).abs() < 1e-15);
        assert!((s.t(2) - std::f64::consts::PI).abs() < 1e-15);
        let total: f64 = (0..4).map(|k| s.t_weight(k)).sum();
        assert!((total - std::f64::consts::TAU).abs() < 1e-14);
        let l = SinoSpec::new(11, 5, -1.0, 1.0, TimeRange::new(0.0, 1.0)).unwrap();
        let total: f64 = (0..5).map(|k| l.t_weight(k)).sum();
        assert!((total - 1.0).abs() < 1e-14);
        let g = Sinogram::from_fn(s, |s, _| s);
        assert!((g.sample_s(0.33, 1) - 0.33).abs() < 1e-14);
        assert_eq!(g.sample_s(1.5, 1), 0.0);
    }

    #[test]
    fn fitted_range_covers_static_support() {
        let grid = GridSpec::square(64, 1.0, 1.0);
        let s = SinoSpec::fitted(&make_static_phase(), &grid, 90, 1.0).unwrap();
        assert!(s.s_min < -1.0 && s.s_max > 1.0);
        assert!((s.ds() - grid.spacing).abs() < 0.05 * grid.spacing);
    }
}
