//! Radially averaged frequency response of an image-to-image operator.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::grid::ImageGrid;

/// Centered 2D DFT magnitudes, indexed `ky * nx + kx` with frequencies
/// wrapped as usual (`k >= n/2` means `k - n`).
pub fn fft_magnitude(img: &ImageGrid) -> Vec<f64> {
    let (nx, ny) = (img.spec.nx, img.spec.ny);
    let mut data: Vec<Complex<f64>> = img.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    let row = planner.plan_fft_forward(nx);
    for r in data.chunks_mut(nx) {
        row.process(r);
    }
    let col = planner.plan_fft_forward(ny);
    let mut buf = vec![Complex::new(0.0, 0.0); ny];
    for i in 0..nx {
        for j in 0..ny {
            buf[j] = data[j * nx + i];
        }
        col.process(&mut buf);
        for j in 0..ny {
            data[j * nx + i] = buf[j];
        }
    }
    data.iter().map(|c| c.norm()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialResponse {
    /// Radius in cycles per grid width.
    pub frequency: Vec<f64>,
    /// Mean of `|F out| / |F input|` over each unit-width ring.
    pub ratio: Vec<f64>,
}

/// Ring-averaged `|F out / F input|` for rings `1..=max_radius`. Bins where
/// the input spectrum is below `1e-12` of its peak are dropped.
pub fn radial_response(input: &ImageGrid, output: &ImageGrid, max_radius: usize) -> RadialResponse {
    let a = fft_magnitude(input);
    let b = fft_magnitude(output);
    let (nx, ny) = (input.spec.nx, input.spec.ny);
    let peak = a.iter().cloned().fold(0.0, f64::max);
    let mut sum = vec![0.0; max_radius + 1];
    let mut count = vec![0usize; max_radius + 1];
    let signed = |k: usize, n: usize| if k >= n / 2 { k as f64 - n as f64 } else { k as f64 };
    for j in 0..ny {
        for i in 0..nx {
            let r = signed(i, nx).hypot(signed(j, ny)).round() as usize;
            let q = j * nx + i;
            if r == 0 || r > max_radius || a[q] < 1e-12 * peak {
                continue;
            }
            sum[r] += b[q] / a[q];
            count[r] += 1;
        }
    }
    let mut out = RadialResponse {
        frequency: Vec::new(),
        ratio: Vec::new(),
    };
    for r in 1..=max_radius {
        if count[r] > 0 {
            out.frequency.push(r as f64);
            out.ratio.push(sum[r] / count[r] as f64);
        }
    }
    out
}

/// Least-squares slope of `log ratio` against `log frequency` over
/// `lo <= frequency <= hi`.
pub fn loglog_slope(resp: &RadialResponse, lo: f64, hi: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = resp
        .frequency
        .iter()
        .zip(&resp.ratio)
        .filter(|(f, r)| **f >= lo && **f <= hi && **r > 0.0)
        .map(|(f, r)| (f.ln(), r.ln()))
        .collect();
    fit_slope(&pts)
}

/// Ordinary least-squares slope through `(x, y)` pairs.
pub fn fit_slope(pts: &[(f64, f64)]) -> Result<f64> {
    if pts.len() < 2 {
        return Err(Error::InvalidArgument("slope fit needs two points".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("slope fit needs distinct abscissae".into()));
    }
    Ok(sxy / sxx)
}

/// Multiplies `img` by `exp(-|x|^2 / (2 l^2))`.
pub fn gaussian_window(img: &ImageGrid, l: f64) -> ImageGrid {
    let mut out = img.clone();
    for (k, v) in out.values.iter_mut().enumerate() {
        let x = img.spec.point_at(k);
        *v *= (-x.norm_squared() / (2.0 * l * l)).exp();
    }
    out
}
