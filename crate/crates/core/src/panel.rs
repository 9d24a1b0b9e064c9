//! Balanced panels, the within-group transformation and within-group least squares.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// A balanced panel of `n_units × n_periods` cells with `n_regressors` covariates.
///
/// Cells are stored unit-major: cell `(i, t)` lives at flat index `i * T + t`,
/// and its regressors at `x[(i * T + t) * K ..][..K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelData {
    n_units: usize,
    n_periods: usize,
    n_regressors: usize,
    y: Vec<f64>,
    x: Vec<f64>,
    unit_labels: Vec<String>,
    period_labels: Vec<String>,
}

impl PanelData {
    pub fn new(
        unit_labels: Vec<String>,
        period_labels: Vec<String>,
        n_regressors: usize,
        y: Vec<f64>,
        x: Vec<f64>,
    ) -> Result<Self> {
        let n = unit_labels.len();
        let t = period_labels.len();
        let k = n_regressors;
        if n < 2 {
            return Err(Error::InvalidPanel(format!("need at least 2 units, got {n}")));
        }
        if t < 1 {
            return Err(Error::InvalidPanel("need at least 1 period".into()));
        }
        if k < 1 {
            return Err(Error::InvalidPanel("need at least 1 regressor".into()));
        }
        if y.len() != n * t {
            return Err(Error::ShapeMismatch(format!(
                "y has {} cells, expected {n} x {t}",
                y.len()
            )));
        }
        if x.len() != n * t * k {
            return Err(Error::ShapeMismatch(format!(
                "x has {} entries, expected {n} x {t} x {k}",
                x.len()
            )));
        }
        if let Some(j) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPanel(format!(
                "non-finite y at unit {}, period {}",
                unit_labels[j / t],
                period_labels[j % t]
            )));
        }
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            let cell = j / k;
            return Err(Error::InvalidPanel(format!(
                "non-finite x{} at unit {}, period {}",
                j % k + 1,
                unit_labels[cell / t],
                period_labels[cell % t]
            )));
        }
        ensure_distinct(&unit_labels, "unit")?;
        ensure_distinct(&period_labels, "period")?;
        Ok(Self {
            n_units: n,
            n_periods: t,
            n_regressors: k,
            y,
            x,
            unit_labels,
            period_labels,
        })
    }

    /// Panel with generated labels `u1..uN` and `t1..tT`.
    pub fn from_values(
        n_units: usize,
        n_periods: usize,
        n_regressors: usize,
        y: Vec<f64>,
        x: Vec<f64>,
    ) -> Result<Self> {
        let units = (1..=n_units).map(|i| format!("u{i}")).collect();
        let periods = (1..=n_periods).map(|t| format!("t{t}")).collect();
        Self::new(units, periods, n_regressors, y, x)
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn n_periods(&self) -> usize {
        self.n_periods
    }

    pub fn n_regressors(&self) -> usize {
        self.n_regressors
    }

    pub fn n_obs(&self) -> usize {
        self.n_units * self.n_periods
    }

    pub fn y(&self, unit: usize, period: usize) -> f64 {
        self.y[unit * self.n_periods + period]
    }

    pub fn x(&self, unit: usize, period: usize, regressor: usize) -> f64 {
        self.x[(unit * self.n_periods + period) * self.n_regressors + regressor]
    }

    pub fn x_row(&self, unit: usize, period: usize) -> &[f64] {
        let k = self.n_regressors;
        let j = unit * self.n_periods + period;
        &self.x[j * k..(j + 1) * k]
    }

    /// Responses in unit-major order.
    pub fn y_values(&self) -> &[f64] {
        &self.y
    }

    /// Regressors, row-major over unit-major cells.
    pub fn x_values(&self) -> &[f64] {
        &self.x
    }

    pub fn unit_labels(&self) -> &[String] {
        &self.unit_labels
    }

    pub fn period_labels(&self) -> &[String] {
        &self.period_labels
    }

    /// Same panel with responses replaced.
    pub fn with_y(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(
            self.unit_labels.clone(),
            self.period_labels.clone(),
            self.n_regressors,
            y,
            self.x.clone(),
        )
    }

    /// Same panel with regressors replaced (possibly with a different K).
    pub fn with_x(&self, n_regressors: usize, x: Vec<f64>) -> Result<Self> {
        Self::new(
            self.unit_labels.clone(),
            self.period_labels.clone(),
            n_regressors,
            self.y.clone(),
            x,
        )
    }
}

fn ensure_distinct(labels: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::InvalidPanel(format!("duplicate {what} label `{l}`")));
        }
    }
    Ok(())
}

/// Within-transformed panel: unit means removed from `y` and every regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredPanel {
    n_units: usize,
    n_periods: usize,
    n_regressors: usize,
    y: Vec<f64>,
    x: Vec<f64>,
    y_means: Vec<f64>,
    x_means: Vec<f64>,
}

impl CenteredPanel {
    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn n_periods(&self) -> usize {
        self.n_periods
    }

    pub fn n_regressors(&self) -> usize {
        self.n_regressors
    }

    pub fn n_obs(&self) -> usize {
        self.n_units * self.n_periods
    }

    /// Centered responses `ÿ`, unit-major.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Centered regressors `ẍ`, row-major over unit-major cells.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn x_row(&self, obs: usize) -> &[f64] {
        let k = self.n_regressors;
        &self.x[obs * k..(obs + 1) * k]
    }

    pub fn y_means(&self) -> &[f64] {
        &self.y_means
    }

    pub fn x_mean(&self, unit: usize) -> &[f64] {
        let k = self.n_regressors;
        &self.x_means[unit * k..(unit + 1) * k]
    }

    /// `ÿ - ẍᵀβ` for every cell.
    pub fn residuals(&self, beta: &[f64]) -> Vec<f64> {
        self.y
            .iter()
            .enumerate()
            .map(|(j, &y)| y - dot(self.x_row(j), beta))
            .collect()
    }
}

/// Subtracts per-unit time means from `y` and every regressor.
pub fn within_transform(panel: &PanelData) -> Result<CenteredPanel> {
    let (n, t, k) = (panel.n_units, panel.n_periods, panel.n_regressors);
    if t < 2 {
        return Err(Error::DegeneratePanel(format!(
            "within transform needs T >= 2, got T = {t}"
        )));
    }
    let tf = t as f64;
    let mut y = Vec::with_capacity(n * t);
    let mut x = Vec::with_capacity(n * t * k);
    let mut y_means = Vec::with_capacity(n);
    let mut x_means = Vec::with_capacity(n * k);
    for i in 0..n {
        let cells = i * t..(i + 1) * t;
        let ym = panel.y[cells.clone()].iter().sum::<f64>() / tf;
        y_means.push(ym);
        y.extend(panel.y[cells.clone()].iter().map(|v| v - ym));

        let xm: Vec<f64> = (0..k)
            .map(|c| cells.clone().map(|j| panel.x[j * k + c]).sum::<f64>() / tf)
            .collect();
        for j in cells {
            x.extend((0..k).map(|c| panel.x[j * k + c] - xm[c]));
        }
        x_means.extend(xm);
    }
    Ok(CenteredPanel {
        n_units: n,
        n_periods: t,
        n_regressors: k,
        y,
        x,
        y_means,
        x_means,
    })
}

/// Estimator identity carried by a [`FitResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "LS")]
    Ls,
    Huber,
    Tukey,
    #[serde(rename = "ESL")]
    Esl,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::Ls,
        EstimatorKind::Huber,
        EstimatorKind::Tukey,
        EstimatorKind::Esl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Ls => "LS",
            EstimatorKind::Huber => "Huber",
            EstimatorKind::Tukey => "Tukey",
            EstimatorKind::Esl => "ESL",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ls" => Ok(EstimatorKind::Ls),
            "huber" => Ok(EstimatorKind::Huber),
            "tukey" => Ok(EstimatorKind::Tukey),
            "esl" | "exponential" => Ok(EstimatorKind::Esl),
            other => Err(format!(
                "unknown estimator `{other}` (expected ls, huber, tukey or esl)"
            )),
        }
    }
}

/// Outcome of a within-group fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub estimator: EstimatorKind,
    pub beta: Vec<f64>,
    pub std_errors: Option<Vec<f64>>,
    /// Residual scale used to standardize residuals (LS: df-corrected RMS).
    pub sigma_hat: f64,
    /// Tuning constant on the standardized-residual scale; `None` for LS.
    pub c_selected: Option<f64>,
    /// Final IRLS weights, unit-major; `None` for LS.
    pub weights: Option<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// Loss objective `Σ ρ(ê)` at the start and after every IRLS iteration.
    pub objective_trace: Vec<f64>,
}

/// Within-group least squares on the centered panel.
pub fn within_ls(panel: &PanelData) -> Result<FitResult> {
    let centered = within_transform(panel)?;
    within_ls_centered(&centered)
}

pub fn within_ls_centered(centered: &CenteredPanel) -> Result<FitResult> {
    let k = centered.n_regressors;
    let beta = linalg::weighted_lstsq(&centered.x, &centered.y, None, k)
        .map_err(|s| Error::SingularDesign {
            null_direction: s.null_direction,
        })?;
    let resid = centered.residuals(&beta);
    let rss: f64 = resid.iter().map(|e| e * e).sum();
    let nt = centered.n_obs();
    let df = nt as i64 - centered.n_units as i64 - k as i64;
    let (sigma_hat, std_errors) = if df > 0 {
        let sigma = (rss / df as f64).sqrt();
        let se = linalg::spd_inverse(&linalg::cross_product(&centered.x, None, k))
            .map(|inv| (0..k).map(|a| (sigma * sigma * inv[(a, a)]).max(0.0).sqrt()).collect());
        (sigma, se)
    } else {
        (0.0, None)
    };
    Ok(FitResult {
        estimator: EstimatorKind::Ls,
        beta,
        std_errors,
        sigma_hat,
        c_selected: None,
        weights: None,
        iterations: 0,
        converged: true,
        objective_trace: vec![rss / 2.0],
    })
}

/// `α̂_i = ȳ_i· - x̄_i·ᵀβ` for every unit.
pub fn fixed_effects(panel: &PanelData, beta: &[f64]) -> Result<Vec<f64>> {
    check_beta(panel, beta)?;
    let (n, t, k) = (panel.n_units, panel.n_periods, panel.n_regressors);
    let tf = t as f64;
    Ok((0..n)
        .map(|i| {
            let ybar = (0..t).map(|s| panel.y(i, s)).sum::<f64>() / tf;
            let xb = (0..k)
                .map(|c| beta[c] * (0..t).map(|s| panel.x(i, s, c)).sum::<f64>() / tf)
                .sum::<f64>();
            ybar - xb
        })
        .collect())
}

/// How fixed effects of units unseen during fitting are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AlphaPolicy {
    /// From the test unit's own sample means with the fitted slope.
    #[default]
    OwnMeans,
}

/// Predictions `ŷ_it = x_itᵀβ + α̂_i`, unit-major.
pub fn predict(test_panel: &PanelData, beta: &[f64], policy: AlphaPolicy) -> Result<Vec<f64>> {
    let alpha = match policy {
        AlphaPolicy::OwnMeans => fixed_effects(test_panel, beta)?,
    };
    let t = test_panel.n_periods;
    Ok((0..test_panel.n_obs())
        .map(|j| dot(test_panel.x_row(j / t, j % t), beta) + alpha[j / t])
        .collect())
}

fn check_beta(panel: &PanelData, beta: &[f64]) -> Result<()> {
    if beta.len() != panel.n_regressors {
        return Err(Error::ShapeMismatch(format!(
            "beta has length {}, panel has {} regressors",
            beta.len(),
            panel.n_regressors
        )));
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}
