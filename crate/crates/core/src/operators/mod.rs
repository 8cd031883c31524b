//! Discrete operators: grids, cutoff atlases, forward and adjoint
//! transforms, and the normal operator.

pub mod atlas;
pub mod fanbeam;
pub mod forward;
pub mod grid;
pub mod lagrangian;
pub mod normal;
pub mod spectrum;

pub use atlas::{build_default_atlas, cosine_taper, default_charts, coverage_report, Chart, CutoffAtlas, TargetSet};
pub use fanbeam::{
    fanbeam_convert, fanbeam_convert_lenient, forward_fanbeam, parallel_spec_for, ConvertReport,
    FanSpec,
};
pub use forward::{adjoint, forward_levelset, ForwardReport, LevelSetOperator, OperatorOptions, NAN_BUDGET};
pub use grid::{rel_l2, GridSpec, ImageGrid, Interpolation, SinoSpec, Sinogram};
pub use lagrangian::{forward_lagrangian, forward_lagrangian_with, ChangeOfVariablesWeight, LineOptions};
pub use normal::{apply_normal, Backprojector, Localization, NormalOperator};
