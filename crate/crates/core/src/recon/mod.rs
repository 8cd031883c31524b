//! Normal-equation reconstruction and empirical probes of stability.

pub mod edge;
pub mod norms;
pub mod probes;
pub mod solver;

pub use edge::edge_response;
pub use norms::{h1_gram, h1_norm};
pub use probes::{
    band_limited_field, breathing_perturbation, perturbation_sweep, stability_probe, MotionFamily,
    PerturbationTable, ProbeOptions, StabilityReport, BLOWUP_FACTOR, DEFAULT_SEED,
};
pub use solver::{cg_normal_solve, rel_error_in_disk, solve, Method, SolveOptions, SolveReport};
