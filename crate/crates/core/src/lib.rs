//! Two-mode transient stimulated Raman scattering: shaped-pump propagation,
//! time-frequency diagnostics, Monte Carlo ensembles over random initial
//! coherences, and closed-loop evolutionary pulse optimization.
//!
//! The model: a shaped pump envelope drives two Raman-active vibrational
//! modes. A double-lobed pump spectrum whose lobe separation matches the mode
//! spacing produces an intensity beat; the relative phase of the lobes steers
//! which Stokes mode receives the gain. Everything is integrated in reduced
//! coordinates (dimensionless propagation distance `x`, retarded time `tau`).

pub mod envelope;
pub mod error;
pub mod experiments;
pub mod optimizer;
pub mod shaping;
pub mod solver;
pub mod special;
pub mod tf;

pub use envelope::{pulse_energy, to_frequency, to_time, ComplexEnvelope, Domain, GridSpec};
pub use error::{Error, Result};
pub use experiments::{
    fresnel_number, mode_asymmetry, phase_scan, run_trial, FresnelParams, PhaseScanResult,
    ScanOptions, TrialResult, TrialSeed,
};
pub use optimizer::{
    evaluate_objective, optimize, GAConfig, GenerationStats, Genome, GenomeSpace, Objective,
    OptimizeResult,
};
pub use shaping::{apply_mask, make_double_blob, DoubleBlobSpec, ShaperMask};
pub use solver::{
    conservation_residual, integrate_single_mode, integrate_two_mode, FieldState, MediumState,
    ModeSeeds, SimConfig, SolverGrid,
};
pub use tf::{husimi, wigner, TFDistribution};
