//! Data-driven tuning constants.
//!
//! Huber and Tukey constants maximize the plug-in efficiency factor
//! `τ̂(c) = (Σψ')² / (n Σψ²)` over a fixed grid. The ESL constant is chosen
//! among grid values whose contamination index `ξ(c)` lies in `(0, 1]`, by
//! minimizing the determinant of the sandwich covariance `V̂(c)`.
//!
//! ESL computations here work on raw (unstandardized) residuals, so grid
//! values and `c_selected` of [`EslTuningState`] live on the raw residual
//! scale. Dividing by `σ̂_MAD²` converts them to the standardized scale.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::losses::{LossFamily, LossSpec};
use crate::panel::CenteredPanel;
use crate::scale::mad_scale;

/// Pseudo-outlier threshold in units of `σ̂_MAD`.
pub const OUTLIER_CUTOFF: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyFactor {
    pub value: f64,
    /// False when every ψ vanished and the ratio was 0/0 (value is then 0).
    pub defined: bool,
}

/// `τ̂(c)` on residuals already divided by the current scale.
pub fn efficiency_factor(std_residuals: &[f64], spec: LossSpec) -> EfficiencyFactor {
    let mut sum_dpsi = 0.0;
    let mut sum_psi2 = 0.0;
    for &u in std_residuals {
        sum_dpsi += spec.psi_prime(u);
        sum_psi2 += spec.psi(u).powi(2);
    }
    efficiency_ratio(sum_dpsi, sum_psi2, std_residuals.len())
}

/// `τ̂` from precomputed ψ and ψ' values.
pub fn efficiency_from_values(psi: &[f64], psi_prime: &[f64]) -> EfficiencyFactor {
    let sum_dpsi: f64 = psi_prime.iter().sum();
    let sum_psi2: f64 = psi.iter().map(|p| p * p).sum();
    efficiency_ratio(sum_dpsi, sum_psi2, psi.len())
}

fn efficiency_ratio(sum_dpsi: f64, sum_psi2: f64, n: usize) -> EfficiencyFactor {
    if !(sum_psi2 > 0.0) || n == 0 {
        return EfficiencyFactor {
            value: 0.0,
            defined: false,
        };
    }
    EfficiencyFactor {
        value: sum_dpsi * sum_dpsi / (n as f64 * sum_psi2),
        defined: true,
    }
}

/// `{0.05, 0.10, …, 3.00}`.
pub fn huber_grid() -> Vec<f64> {
    (1..=60).map(|k| k as f64 * 0.05).collect()
}

/// `{1.0, 1.2, …, 10.0}`.
pub fn tukey_grid() -> Vec<f64> {
    (0..46).map(|k| 1.0 + k as f64 * 0.2).collect()
}

pub fn default_grid(family: LossFamily) -> Result<Vec<f64>> {
    match family {
        LossFamily::Huber => Ok(huber_grid()),
        LossFamily::Tukey => Ok(tukey_grid()),
        LossFamily::Esl => Err(Error::InvalidLoss(
            "ESL has no fixed efficiency grid; use esl_select_c".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyCurve {
    pub grid: Vec<f64>,
    pub tau_hat: Vec<f64>,
    pub defined: Vec<bool>,
    pub c_star: f64,
    pub tau_star: f64,
}

/// Grid search of `τ̂(c)` on `(ÿ - ẍᵀβ)/σ`.
pub fn select_c_grid(
    panel: &CenteredPanel,
    family: LossFamily,
    beta_current: &[f64],
    sigma: f64,
    grid: &[f64],
) -> Result<EfficiencyCurve> {
    if beta_current.len() != panel.n_regressors() {
        return Err(Error::ShapeMismatch(format!(
            "beta has length {}, panel has {} regressors",
            beta_current.len(),
            panel.n_regressors()
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::ZeroScale);
    }
    let u: Vec<f64> = panel.residuals(beta_current).iter().map(|e| e / sigma).collect();
    select_c_residuals(&u, family, grid)
}

/// Grid search of `τ̂(c)` on already standardized residuals.
pub fn select_c_residuals(
    std_residuals: &[f64],
    family: LossFamily,
    grid: &[f64],
) -> Result<EfficiencyCurve> {
    if family == LossFamily::Esl {
        return Err(Error::InvalidLoss(
            "efficiency grid search applies to Huber and Tukey".into(),
        ));
    }
    if grid.is_empty() {
        return Err(Error::NoValidTuning("empty grid".into()));
    }
    let mut tau_hat = Vec::with_capacity(grid.len());
    let mut defined = Vec::with_capacity(grid.len());
    let mut best: Option<usize> = None;
    for (j, &c) in grid.iter().enumerate() {
        let tau = efficiency_factor(std_residuals, LossSpec::new(family, c)?);
        if tau.defined && best.is_none_or(|b| tau.value > tau_hat[b]) {
            best = Some(j);
        }
        tau_hat.push(tau.value);
        defined.push(tau.defined);
    }
    let b = best.ok_or_else(|| {
        Error::NoValidTuning(format!(
            "efficiency factor undefined at all {} grid points",
            grid.len()
        ))
    })?;
    Ok(EfficiencyCurve {
        grid: grid.to_vec(),
        c_star: grid[b],
        tau_star: tau_hat[b],
        tau_hat,
        defined,
    })
}

/// Flat indices with `|e| ≥ 2.5 σ̂_MAD`, in increasing order.
pub fn pseudo_outlier_set(residuals: &[f64], sigma_mad: f64) -> Vec<usize> {
    let cut = OUTLIER_CUTOFF * sigma_mad;
    residuals
        .iter()
        .enumerate()
        .filter(|(_, e)| e.abs() >= cut)
        .map(|(j, _)| j)
        .collect()
}

/// `ξ(c) = 2m/NT + (2/NT) Σ ρ_c(e)` over the retained residuals.
pub fn xi(c: f64, residuals_good: &[f64], m: usize, nt: usize) -> f64 {
    let ntf = nt as f64;
    let loss: f64 = residuals_good.iter().map(|e| 1.0 - (-e * e / c).exp()).sum();
    2.0 * m as f64 / ntf + 2.0 / ntf * loss
}

#[derive(Debug, Clone, PartialEq)]
pub struct EslCov {
    /// `V̂ = Î⁻¹ Σ̃ Î⁻¹`; zeros when undefined.
    pub matrix: DMatrix<f64>,
    pub i_hat: DMatrix<f64>,
    pub sigma_tilde: DMatrix<f64>,
    pub defined: bool,
}

impl EslCov {
    pub fn det(&self) -> Option<f64> {
        self.defined.then(|| self.matrix.determinant())
    }
}

/// Sandwich covariance of the ESL score at `beta0` and raw-scale constant `c`.
pub fn esl_cov(panel: &CenteredPanel, beta0: &[f64], c: f64) -> Result<EslCov> {
    let k = panel.n_regressors();
    if beta0.len() != k {
        return Err(Error::ShapeMismatch(format!(
            "beta has length {}, panel has {k} regressors",
            beta0.len()
        )));
    }
    let e = panel.residuals(beta0);
    Ok(esl_cov_from_residuals(panel, &e, c))
}

fn esl_cov_from_residuals(panel: &CenteredPanel, e: &[f64], c: f64) -> EslCov {
    let k = panel.n_regressors();
    let nt = e.len() as f64;

    let mut curvature = 0.0;
    let mut magnitude = 0.0;
    for r in e {
        let w = (-r * r / c).exp();
        curvature += w * (2.0 * r * r / c - 1.0);
        magnitude += w * (2.0 * r * r / c + 1.0);
    }
    curvature /= nt;
    magnitude /= nt;
    let gram = linalg::cross_product(panel.x(), None, k) / nt;
    let i_hat = gram * (2.0 / c * curvature);

    let score_w: Vec<f64> = e.iter().map(|r| (-r * r / c).exp() * 2.0 * r / c).collect();
    let mut mean = vec![0.0; k];
    for (j, w) in score_w.iter().enumerate() {
        for (m, x) in mean.iter_mut().zip(panel.x_row(j)) {
            *m += w * x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= nt);
    let mut sigma_tilde = DMatrix::zeros(k, k);
    let mut d = vec![0.0; k];
    for (j, w) in score_w.iter().enumerate() {
        for ((dv, x), m) in d.iter_mut().zip(panel.x_row(j)).zip(&mean) {
            *dv = w * x - m;
        }
        for a in 0..k {
            for b in 0..k {
                sigma_tilde[(a, b)] += d[a] * d[b];
            }
        }
    }
    sigma_tilde /= nt;

    let zero = DMatrix::zeros(k, k);
    if curvature.abs() <= 1e-12 * magnitude || !well_conditioned(&i_hat) {
        return EslCov {
            matrix: zero,
            i_hat,
            sigma_tilde,
            defined: false,
        };
    }
    match i_hat.clone().try_inverse() {
        Some(inv) => EslCov {
            matrix: linalg::symmetrize(&inv * &sigma_tilde * &inv),
            i_hat,
            sigma_tilde,
            defined: true,
        },
        None => EslCov {
            matrix: zero,
            i_hat,
            sigma_tilde,
            defined: false,
        },
    }
}

/// `|det| ≥ 1e-12 (|trace|/K)^K`.
fn well_conditioned(m: &DMatrix<f64>) -> bool {
    let k = m.nrows() as i32;
    let det = m.determinant();
    let scale = (m.trace().abs() / k as f64).powi(k);
    det.is_finite() && scale > 0.0 && det.abs() >= 1e-12 * scale
}

/// Candidate constants for the ESL search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EslGrid {
    /// `points` log-spaced values in `[lo·σ̂_MAD², hi·σ̂_MAD²]`.
    LogSpaced { points: usize, lo: f64, hi: f64 },
    /// Explicit raw-scale values.
    Fixed(Vec<f64>),
}

impl Default for EslGrid {
    fn default() -> Self {
        EslGrid::LogSpaced {
            points: 50,
            lo: 0.1,
            hi: 100.0,
        }
    }
}

impl EslGrid {
    pub fn values(&self, sigma_mad: f64) -> Vec<f64> {
        match self {
            EslGrid::Fixed(v) => v.clone(),
            EslGrid::LogSpaced { points, lo, hi } => {
                let s2 = sigma_mad * sigma_mad;
                let (a, b) = ((lo * s2).ln(), (hi * s2).ln());
                match *points {
                    0 => Vec::new(),
                    1 => vec![lo * s2],
                    p => (0..p)
                        .map(|j| (a + (b - a) * j as f64 / (p - 1) as f64).exp())
                        .collect(),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EslTuningState {
    pub beta0: Vec<f64>,
    pub sigma_mad: f64,
    pub outlier_count: usize,
    /// `(unit, period)` pairs of the pseudo-outliers.
    pub outlier_indices: Vec<(usize, usize)>,
    /// Raw-scale candidate constants.
    pub grid: Vec<f64>,
    pub xi_values: Vec<f64>,
    /// `det V̂(c)`; `None` off the feasible set or where `Î` is singular.
    pub det_v_values: Vec<Option<f64>>,
    /// Raw-scale constant minimizing `det V̂` over the feasible set.
    pub c_selected: f64,
}

impl EslTuningState {
    /// `c_selected / σ̂_MAD²`, the constant for standardized residuals.
    pub fn c_standardized(&self) -> f64 {
        self.c_selected / (self.sigma_mad * self.sigma_mad)
    }
}

pub fn esl_select_c(panel: &CenteredPanel, beta0: &[f64], grid: &EslGrid) -> Result<EslTuningState> {
    let k = panel.n_regressors();
    if beta0.len() != k {
        return Err(Error::ShapeMismatch(format!(
            "beta has length {}, panel has {k} regressors",
            beta0.len()
        )));
    }
    let e = panel.residuals(beta0);
    let sigma_mad = mad_scale(&e)?.value;
    let grid = grid.values(sigma_mad);
    if grid.is_empty() {
        return Err(Error::NoValidTuning("empty ESL grid".into()));
    }
    if let Some(bad) = grid.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(Error::InvalidLoss(format!("ESL grid value {bad} is not positive")));
    }

    let outliers = pseudo_outlier_set(&e, sigma_mad);
    let m = outliers.len();
    let mut is_outlier = vec![false; e.len()];
    outliers.iter().for_each(|&j| is_outlier[j] = true);
    let good: Vec<f64> = e
        .iter()
        .zip(&is_outlier)
        .filter(|(_, o)| !**o)
        .map(|(r, _)| *r)
        .collect();

    let nt = e.len();
    let mut xi_values = Vec::with_capacity(grid.len());
    let mut det_v_values = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64)> = None;
    for (j, &c) in grid.iter().enumerate() {
        let x = xi(c, &good, m, nt);
        xi_values.push(x);
        let det = if x > 0.0 && x <= 1.0 {
            esl_cov_from_residuals(panel, &e, c).det().filter(|d| d.is_finite())
        } else {
            None
        };
        if let Some(d) = det {
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        det_v_values.push(det);
    }

    let Some((b, _)) = best else {
        let lo = xi_values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xi_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::NoValidTuning(format!(
            "no ESL grid constant has xi in (0, 1] with a defined covariance; xi ranges over [{lo:.6}, {hi:.6}]"
        )));
    };
    let t = panel.n_periods();
    Ok(EslTuningState {
        beta0: beta0.to_vec(),
        sigma_mad,
        outlier_count: m,
        outlier_indices: outliers.iter().map(|&j| (j / t, j % t)).collect(),
        c_selected: grid[b],
        grid,
        xi_values,
        det_v_values,
    })
}
