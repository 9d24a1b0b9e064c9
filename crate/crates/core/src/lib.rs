//! Robust M-estimation for fixed-effects panel regressions.
//!
//! The within transformation removes unit effects; Huber, Tukey and
//! exponential squared loss (ESL) M-estimators are then fitted by iteratively
//! reweighted least squares with data-driven tuning constants. A Monte Carlo
//! harness generates contaminated panels and compares the estimators.

pub mod error;
pub mod estimator;
pub mod io;
mod linalg;
pub mod losses;
pub mod panel;
pub mod scale;
pub mod simulation;
pub mod tuning;

pub use error::{Error, Result};
pub use estimator::{
    fit_esl, fit_esl_with, fit_estimator, fit_mestimator, fit_mestimator_with, high_breakdown_init,
    irls_fit, sandwich_se, CMode, EslOptions, IrlsConfig, MFitOptions, SandwichCovariance,
};
pub use losses::{LossFamily, LossSpec};
pub use panel::{
    fixed_effects, predict, within_ls, within_ls_centered, within_transform, AlphaPolicy,
    CenteredPanel, EstimatorKind, FitResult, PanelData,
};
pub use scale::{initial_scale, mad_scale, median, ScaleEstimate, ScaleMethod};
pub use tuning::{
    efficiency_factor, esl_cov, esl_select_c, pseudo_outlier_set, select_c_grid, xi,
    EfficiencyCurve, EfficiencyFactor, EslCov, EslGrid, EslTuningState,
};
