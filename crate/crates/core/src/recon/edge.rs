use crate::error::{Error, Result};
use crate::microlocal::CovectorSample;
use crate::operators::grid::{ImageGrid, Interpolation};

/// Half-width of the sampling window along the edge normal, in pixels.
const HALF_WINDOW: i32 = 2;

/// Ratio of the mean `|d f / d n|` of `recon` to that of `truth` over five
/// points spaced one pixel apart along the normal of `cov`.
pub fn edge_response(recon: &ImageGrid, truth: &ImageGrid, cov: &CovectorSample) -> Result<f64> {
    if recon.spec != truth.spec {
        return Err(Error::InvalidArgument("edge response needs matching grids".into()));
    }
    let spec = truth.spec;
    let h = spec.spacing;
    let n = cov.direction();
    let x = cov.point();
    let (lo, hi) = spec.extent();
    let reach = (HALF_WINDOW + 1) as f64 * h;
    for p in [x - n * reach, x + n * reach] {
        if p[0] < lo[0] || p[0] > hi[0] || p[1] < lo[1] || p[1] > hi[1] {
            return Err(Error::Domain { t: f64::NAN, x: p });
        }
    }
    let slope = |img: &ImageGrid| -> f64 {
        (-HALF_WINDOW..=HALF_WINDOW)
            .map(|k| {
                let c = x + n * (k as f64 * h);
                let a = img.sample(&(c + n * h), Interpolation::Bilinear);
                let b = img.sample(&(c - n * h), Interpolation::Bilinear);
                ((a - b) / (2.0 * h)).abs()
            })
            .sum()
    };
    let denom = slope(truth);
    if denom == 0.0 {
        return Err(Error::InvalidArgument("truth has no edge at the sample".into()));
    }
    Ok(slope(recon) / denom)
}
