//! Experiment geometry configuration.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    make_dynamic_phase, make_fanbeam_phase, make_static_phase, BumpWeight, ConstantWeight,
    MotionSpec, Phase, TimeRange, Weight,
};
use crate::io::sha256_hex;
use crate::operators::atlas::{build_default_atlas, default_charts, CutoffAtlas, TargetSet};
use crate::operators::fanbeam::FanSpec;
use crate::operators::forward::{LevelSetOperator, OperatorOptions};
use crate::operators::grid::{GridSpec, Interpolation, SinoSpec};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum PhaseSpec {
    #[default]
    Static,
    /// Moving object; the motion comes from the top-level `motion` entry.
    Dynamic,
    Fanbeam {
        radius: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "weight", rename_all = "lowercase", deny_unknown_fields)]
pub enum WeightSpec {
    Constant {
        value: f64,
    },
    Bump {
        base: f64,
        amplitude: f64,
        center: [f64; 2],
        width: f64,
    },
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::Constant { value: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub half_width: f64,
    pub support_radius: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n: 128,
            half_width: 1.0,
            support_radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SinogramConfig {
    pub nt: usize,
    /// Offsets per pixel width of a level curve.
    pub oversample: f64,
    pub interpolation: Interpolation,
}

impl Default for SinogramConfig {
    fn default() -> Self {
        SinogramConfig {
            nt: 360,
            oversample: 1.0,
            interpolation: Interpolation::Bilinear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtlasConfig {
    pub n_charts: usize,
    pub target_radius: f64,
}

impl Default for AtlasConfig {
    fn default() -> Self {
        AtlasConfig {
            n_charts: 1,
            target_radius: 0.9,
        }
    }
}

/// Fan acquisition grid; the source radius comes from the fan-beam phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FanConfig {
    pub n_t: usize,
    pub n_gamma: usize,
}

impl Default for FanConfig {
    fn default() -> Self {
        FanConfig {
            n_t: 360,
            n_gamma: 257,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default)]
    pub phase: PhaseSpec,
    #[serde(default)]
    pub motion: MotionSpec,
    #[serde(default)]
    pub weight: WeightSpec,
    #[serde(default)]
    pub t_range: TimeRange,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub sinogram: SinogramConfig,
    #[serde(default)]
    pub atlas: AtlasConfig,
    #[serde(default)]
    pub fan: FanConfig,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            phase: PhaseSpec::Static,
            motion: MotionSpec::Identity,
            weight: WeightSpec::default(),
            t_range: TimeRange::full(),
            grid: GridConfig::default(),
            sinogram: SinogramConfig::default(),
            atlas: AtlasConfig::default(),
            fan: FanConfig::default(),
        }
    }
}

impl GeometryConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: GeometryConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Config(format!("{}: {j}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.grid.n < 4 {
            return bad(format!("grid.n = {} is too small", self.grid.n));
        }
        if !(self.grid.half_width > 0.0 && self.grid.support_radius > 0.0) {
            return bad("grid extents must be positive".into());
        }
        if self.sinogram.nt < 2 || !(self.sinogram.oversample > 0.0) {
            return bad("sinogram needs nt >= 2 and a positive oversample".into());
        }
        if !(self.t_range.length() > 0.0) || self.t_range.length() > std::f64::consts::TAU + 1e-9 {
            return bad(format!(
                "t_range [{}, {}] must have length in (0, 2 pi]",
                self.t_range.start, self.t_range.end
            ));
        }
        if self.atlas.n_charts == 0 || !(self.atlas.target_radius > 0.0) {
            return bad("atlas needs n_charts >= 1 and a positive target radius".into());
        }
        if let PhaseSpec::Fanbeam { radius } = self.phase {
            if !(radius > self.grid.support_radius) {
                return bad(format!(
                    "fan radius {radius} must exceed the support radius {}",
                    self.grid.support_radius
                ));
            }
        }
        if self.phase != PhaseSpec::Dynamic && self.motion != MotionSpec::Identity {
            return bad("a motion is only meaningful with the dynamic phase".into());
        }
        Ok(())
    }

    pub fn phase(&self) -> Result<Arc<dyn Phase>> {
        Ok(match self.phase {
            PhaseSpec::Static => Arc::new(make_static_phase().with_t_range(self.t_range)),
            PhaseSpec::Dynamic => {
                Arc::new(make_dynamic_phase(self.motion.build()?).with_t_range(self.t_range))
            }
            PhaseSpec::Fanbeam { radius } => {
                Arc::new(make_fanbeam_phase(radius)?.with_t_range(self.t_range))
            }
        })
    }

    pub fn weight(&self) -> Arc<dyn Weight> {
        match self.weight {
            WeightSpec::Constant { value } => Arc::new(ConstantWeight(value)),
            WeightSpec::Bump {
                base,
                amplitude,
                center,
                width,
            } => Arc::new(BumpWeight {
                base,
                amplitude,
                center,
                width,
            }),
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec::square(self.grid.n, self.grid.half_width, self.grid.support_radius)
    }

    pub fn sino_spec(&self, pf: &dyn Phase) -> Result<SinoSpec> {
        SinoSpec::fitted(pf, &self.grid_spec(), self.sinogram.nt, self.sinogram.oversample)
    }

    pub fn operator(&self) -> Result<LevelSetOperator> {
        let pf = self.phase()?;
        let sino = self.sino_spec(&*pf)?;
        LevelSetOperator::with_options(
            pf,
            self.weight(),
            self.grid_spec(),
            sino,
            OperatorOptions {
                interp: self.sinogram.interpolation,
                ..Default::default()
            },
        )
    }

    pub fn target(&self) -> TargetSet {
        TargetSet {
            center: [0.0, 0.0],
            radius: self.atlas.target_radius,
        }
    }

    pub fn atlas(&self, pf: &dyn Phase) -> Result<CutoffAtlas> {
        build_default_atlas(pf, &self.target(), self.atlas.n_charts)
    }

    /// Charts without the covering check, for pointwise queries.
    pub fn charts(&self) -> Result<CutoffAtlas> {
        default_charts(&self.target(), self.atlas.n_charts)
    }

    pub fn fan_spec(&self) -> Result<FanSpec> {
        match self.phase {
            PhaseSpec::Fanbeam { radius } => FanSpec::covering(
                radius,
                self.grid.support_radius,
                self.fan.n_t,
                self.fan.n_gamma,
            ),
            _ => Err(Error::Config("fan acquisition needs the fanbeam phase".into())),
        }
    }
}
