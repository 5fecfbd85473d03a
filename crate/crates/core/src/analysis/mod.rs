//! Inverse problems on transmission traces: dip detection and fitting, tuning
//! slopes, mode assignment and strain calibration.

use thiserror::Error;

use crate::error::WgmError;

pub mod assign;
pub mod calibrate;
pub mod detect;
pub mod fit;
pub mod slope;

pub use assign::{assign_modes, AssignOptions, ModeAssignment};
pub use calibrate::{calibrate_device, CalibrateOptions, Calibration, Track};
pub use detect::{detect_dips, median};
pub use fit::{fit_lorentzian, fit_trace, DipFit};
pub use slope::{fit_tuning_slope, PolarizationGuess, SlopeFit, TM_TE_CYLINDER_RATIO};

/// Failures of the inverse routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] WgmError),

    /// The window holds no dip distinguishable from noise.
    #[error("no dip in samples {start}..{end}: {reason}")]
    NoDip { start: usize, end: usize, reason: String },

    /// The optimizer stopped without meeting its convergence test.
    #[error("fit did not converge after {iterations} iterations (residual rms {})", .last.residual_rms)]
    NotConverged { last: Box<DipFit<f64>>, iterations: usize },

    /// No labelling reaches the acceptance threshold.
    #[error("no mode assignment below threshold; best rms interval residual {best_rms_ghz} GHz")]
    Unassigned { best_rms_ghz: f64, candidates: Vec<ModeAssignment<f64>> },
}

pub type AnalysisResult<T> = std::result::Result<T, AnalysisError>;
