//! Normal operator `N = sum_i chi_iX B chi_iY A` over a cutoff atlas.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::operators::atlas::CutoffAtlas;
use crate::operators::forward::LevelSetOperator;
use crate::operators::grid::{ImageGrid, Sinogram};

/// Where the object-side cutoffs act.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Localization {
    /// `chi_iX B chi_iY A`, sharing one evaluation of `A f`.
    #[default]
    Paper,
    /// `sqrt(chi_iX) B chi_iY A sqrt(chi_iX)`, self-adjoint when `B = A^T`.
    Symmetric,
}

/// The backprojection `B` standing in for `A*`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backprojector {
    /// Pixel-driven quadrature of the adjoint formula.
    #[default]
    Formula,
    /// Exact transpose of the discrete forward operator.
    Transpose,
}

#[derive(Debug)]
struct ChartData {
    /// `chi_iX` (or its square root) on the image grid; `None` when 1.
    x_weight: Option<Vec<f64>>,
    /// `chi_iY` on the sinogram grid; `None` when 1.
    y_weight: Option<Vec<f64>>,
}

#[derive(Debug)]
pub struct NormalOperator<'a> {
    pub op: &'a LevelSetOperator,
    pub localization: Localization,
    pub backprojector: Backprojector,
    charts: Vec<ChartData>,
}

impl<'a> NormalOperator<'a> {
    pub fn new(
        op: &'a LevelSetOperator,
        atlas: &CutoffAtlas,
        localization: Localization,
        backprojector: Backprojector,
    ) -> Self {
        let grid = op.grid;
        let sino = op.sino;
        let charts = atlas
            .charts
            .iter()
            .map(|c| {
                let x_weight = (c.x_radius.is_finite()).then(|| {
                    (0..grid.len())
                        .map(|p| {
                            let v = c.chi_x(&grid.point_at(p));
                            match localization {
                                Localization::Paper => v,
                                Localization::Symmetric => v.sqrt(),
                            }
                        })
                        .collect()
                });
                let y_weight = (!c.is_trivial_y()).then(|| {
                    (0..sino.len())
                        .map(|r| c.chi_y(sino.s(r % sino.ns), sino.t(r / sino.ns)))
                        .collect()
                });
                ChartData { x_weight, y_weight }
            })
            .collect();
        NormalOperator {
            op,
            localization,
            backprojector,
            charts,
        }
    }

    /// The solver's operator: symmetric cutoffs with the exact transpose.
    pub fn symmetric(op: &'a LevelSetOperator, atlas: &CutoffAtlas) -> Self {
        Self::new(op, atlas, Localization::Symmetric, Backprojector::Transpose)
    }

    pub fn back(&self, g: &Sinogram) -> Result<ImageGrid> {
        match self.backprojector {
            Backprojector::Formula => self.op.adjoint(g),
            Backprojector::Transpose => self.op.forward_adjoint(g),
        }
    }

    pub fn apply(&self, f: &ImageGrid) -> Result<ImageGrid> {
        let mut out = ImageGrid::zeros(self.op.grid);
        match self.localization {
            Localization::Paper => {
                let af = self.op.forward(f)?;
                for c in &self.charts {
                    let b = self.back(&cut_sino(&af, c.y_weight.as_deref()))?;
                    accumulate(&mut out, &b, c.x_weight.as_deref());
                }
            }
            Localization::Symmetric => {
                let mut shared = None;
                for c in &self.charts {
                    let af = match &c.x_weight {
                        None => {
                            if shared.is_none() {
                                shared = Some(self.op.forward(f)?);
                            }
                            shared.clone().unwrap()
                        }
                        Some(w) => self.op.forward(&cut_image(f, w))?,
                    };
                    let b = self.back(&cut_sino(&af, c.y_weight.as_deref()))?;
                    accumulate(&mut out, &b, c.x_weight.as_deref());
                }
            }
        }
        Ok(out)
    }

    /// `sum_i w_i B chi_iY g`: the right-hand side matching [`apply`](Self::apply).
    pub fn rhs(&self, g: &Sinogram) -> Result<ImageGrid> {
        let mut out = ImageGrid::zeros(self.op.grid);
        let mut shared = None;
        for c in &self.charts {
            let b = match &c.y_weight {
                None => {
                    if shared.is_none() {
                        shared = Some(self.back(g)?);
                    }
                    shared.clone().unwrap()
                }
                Some(_) => self.back(&cut_sino(g, c.y_weight.as_deref()))?,
            };
            accumulate(&mut out, &b, c.x_weight.as_deref());
        }
        Ok(out)
    }
}

fn cut_sino(g: &Sinogram, w: Option<&[f64]>) -> Sinogram {
    match w {
        None => g.clone(),
        Some(w) => {
            let mut out = g.clone();
            for (v, c) in out.values.iter_mut().zip(w) {
                *v *= c;
            }
            out
        }
    }
}

fn cut_image(f: &ImageGrid, w: &[f64]) -> ImageGrid {
    let mut out = f.clone();
    for (v, c) in out.values.iter_mut().zip(w) {
        *v *= c;
    }
    out
}

fn accumulate(out: &mut ImageGrid, b: &ImageGrid, w: Option<&[f64]>) {
    match w {
        None => {
            for (o, v) in out.values.iter_mut().zip(&b.values) {
                *o += v;
            }
        }
        Some(w) => {
            for ((o, v), c) in out.values.iter_mut().zip(&b.values).zip(w) {
                *o += c * v;
            }
        }
    }
}

/// `sum_i chi_iX A*(chi_iY A f)` with the pixel-driven adjoint.
pub fn apply_normal(op: &LevelSetOperator, atlas: &CutoffAtlas, f: &ImageGrid) -> Result<ImageGrid> {
    NormalOperator::new(op, atlas, Localization::Paper, Backprojector::Formula).apply(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_static_phase, ConstantWeight, Phase, Point};
    use crate::operators::atlas::{build_default_atlas, TargetSet};
    use crate::operators::grid::{GridSpec, SinoSpec};
    use std::sync::Arc;

    fn op(n: usize, nt: usize) -> LevelSetOperator {
        let grid = GridSpec::square(n, 1.0, 1.0);
        let pf: Arc<dyn Phase> = Arc::new(make_static_phase());
        let sino = SinoSpec::fitted(&*pf, &grid, nt, 1.0).unwrap();
        LevelSetOperator::new(pf, Arc::new(ConstantWeight(1.0)), grid, sino).unwrap()
    }

    fn bumps(grid: GridSpec, c: [f64; 2]) -> ImageGrid {
        ImageGrid::from_fn(grid, |x| (-(x - Point::new(c[0], c[1])).norm_squared() / 0.05).exp())
    }

    #[test]
    fn trivial_atlas_is_adjoint_times_forward() {
        let op = op(32, 45);
        let f = bumps(op.grid, [0.1, 0.2]);
        let n = apply_normal(&op, &CutoffAtlas::trivial(), &f).unwrap();
        let direct = op.adjoint(&op.forward(&f).unwrap()).unwrap();
        assert_eq!(n.values, direct.values);
    }

    #[test]
    fn symmetric_variant_is_self_adjoint_and_nonnegative() {
        let op = op(32, 45);
        let pf = make_static_phase();
        let atlas = build_default_atlas(&pf, &TargetSet { center: [0.0, 0.0], radius: 0.9 }, 4)
            .unwrap();
        let n = NormalOperator::symmetric(&op, &atlas);
        let f1 = bumps(op.grid, [0.1, 0.2]);
        let f2 = bumps(op.grid, [-0.3, 0.0]);
        let a = n.apply(&f1).unwrap().inner(&f2);
        let b = f1.inner(&n.apply(&f2).unwrap());
        assert!((a - b).abs() < 1e-10 * a.abs());
        assert!(n.apply(&f1).unwrap().inner(&f1) >= 0.0);
    }
}
