//! IRLS and the end-to-end Huber, Tukey and ESL fitting procedures.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::losses::{LossFamily, LossSpec};
use crate::panel::{within_ls_centered, within_transform, CenteredPanel, EstimatorKind, FitResult, PanelData};
use crate::scale::{initial_scale, mad_value};
use crate::tuning::{default_grid, esl_select_c, select_c_grid, EslGrid};

/// Tukey constant used to refine the high-breakdown start.
pub const TUKEY_REFINE_C: f64 = 4.685;
pub const DEFAULT_SUBSAMPLES: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrlsConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Recompute `median|e|/0.6745` before every reweighting step.
    pub rescale_each_iter: bool,
}

impl Default for IrlsConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            rescale_each_iter: false,
        }
    }
}

impl IrlsConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config(format!(
                "IRLS needs tol > 0 and max_iter >= 1, got tol = {}, max_iter = {}",
                self.tol, self.max_iter
            )));
        }
        Ok(())
    }
}

fn kind_of(family: LossFamily) -> EstimatorKind {
    match family {
        LossFamily::Huber => EstimatorKind::Huber,
        LossFamily::Tukey => EstimatorKind::Tukey,
        LossFamily::Esl => EstimatorKind::Esl,
    }
}

fn objective(spec: &LossSpec, resid: &[f64], sigma: f64) -> f64 {
    resid.iter().map(|e| spec.rho(e / sigma)).sum()
}

/// Iteratively reweighted least squares at a fixed loss and (by default) fixed scale.
pub fn irls_fit(
    panel: &CenteredPanel,
    spec: LossSpec,
    beta_init: &[f64],
    sigma: f64,
    config: IrlsConfig,
) -> Result<FitResult> {
    config.validate()?;
    let k = panel.n_regressors();
    if beta_init.len() != k {
        return Err(Error::ShapeMismatch(format!(
            "beta_init has length {}, panel has {k} regressors",
            beta_init.len()
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::ZeroScale);
    }

    let mut sigma = sigma;
    let mut beta = beta_init.to_vec();
    let mut resid = panel.residuals(&beta);
    let mut trace = vec![objective(&spec, &resid, sigma)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        if config.rescale_each_iter {
            sigma = initial_scale(&resid)?.value;
        }
        let w: Vec<f64> = resid.iter().map(|e| spec.weight(e / sigma)).collect();
        let next = linalg::weighted_lstsq(panel.x(), panel.y(), Some(&w), k)
            .map_err(|_| Error::SingularWeightedDesign { iteration: iterations })?;
        let step = linalg::max_abs_diff(&next, &beta);
        beta = next;
        resid = panel.residuals(&beta);
        trace.push(objective(&spec, &resid, sigma));
        if step < config.tol {
            converged = true;
            break;
        }
    }
    let weights = resid.iter().map(|e| spec.weight(e / sigma)).collect();
    Ok(FitResult {
        estimator: kind_of(spec.family()),
        beta,
        std_errors: None,
        sigma_hat: sigma,
        c_selected: Some(spec.c()),
        weights: Some(weights),
        iterations,
        converged,
        objective_trace: trace,
    })
}

/// How the Huber/Tukey constant is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CMode {
    /// Maximize the efficiency factor over the family's default grid.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MFitOptions {
    pub c_mode: CMode,
    pub irls: IrlsConfig,
    /// Starting coefficients; within-group LS when `None`.
    pub beta_init: Option<Vec<f64>>,
    /// Grid for [`CMode::Auto`]; the family default when `None`.
    pub grid: Option<Vec<f64>>,
}

impl Default for MFitOptions {
    fn default() -> Self {
        Self {
            c_mode: CMode::Auto,
            irls: IrlsConfig::default(),
            beta_init: None,
            grid: None,
        }
    }
}

/// Huber or Tukey fit: LS start, median scale, tuned constant, IRLS.
pub fn fit_mestimator(panel: &PanelData, family: LossFamily, c_mode: CMode) -> Result<FitResult> {
    fit_mestimator_with(
        panel,
        family,
        &MFitOptions {
            c_mode,
            ..MFitOptions::default()
        },
    )
}

pub fn fit_mestimator_with(panel: &PanelData, family: LossFamily, opts: &MFitOptions) -> Result<FitResult> {
    if family == LossFamily::Esl {
        return Err(Error::InvalidLoss("use fit_esl for the ESL estimator".into()));
    }
    let centered = within_transform(panel)?;
    fit_mestimator_centered(&centered, family, opts)
}

pub(crate) fn fit_mestimator_centered(
    centered: &CenteredPanel,
    family: LossFamily,
    opts: &MFitOptions,
) -> Result<FitResult> {
    let beta0 = match &opts.beta_init {
        Some(b) => b.clone(),
        None => within_ls_centered(centered)?.beta,
    };
    if beta0.len() != centered.n_regressors() {
        return Err(Error::ShapeMismatch(format!(
            "beta_init has length {}, panel has {} regressors",
            beta0.len(),
            centered.n_regressors()
        )));
    }
    let sigma = initial_scale(&centered.residuals(&beta0))?.value;
    let c = match opts.c_mode {
        CMode::Fixed(c) => c,
        CMode::Auto => {
            let grid = match &opts.grid {
                Some(g) => g.clone(),
                None => default_grid(family)?,
            };
            select_c_grid(centered, family, &beta0, sigma, &grid)?.c_star
        }
    };
    let spec = LossSpec::new(family, c)?;
    let mut fit = irls_fit(centered, spec, &beta0, sigma, opts.irls)?;
    fit.std_errors = sandwich_se(centered, &fit, spec).ok().map(|s| s.std_errors());
    Ok(fit)
}

/// Elemental-subset start: the exact fit through `K` random observations whose
/// residual MAD is smallest, refined by Tukey IRLS at `c = 4.685`.
pub fn high_breakdown_init(panel: &CenteredPanel, n_subsamples: usize, seed: u64) -> Result<Vec<f64>> {
    let k = panel.n_regressors();
    let nt = panel.n_obs();
    if nt < k + 1 {
        return Err(Error::DegeneratePanel(format!(
            "high-breakdown start needs NT >= K + 1, got NT = {nt}, K = {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..n_subsamples {
        let idx = rand::seq::index::sample(&mut rng, nt, k);
        let a = DMatrix::from_fn(k, k, |r, c| panel.x_row(idx.index(r))[c]);
        let b = DVector::from_fn(k, |r, _| panel.y()[idx.index(r)]);
        let Some(sol) = linalg::solve_square(a, b) else {
            continue;
        };
        let cand: Vec<f64> = sol.iter().copied().collect();
        let score = mad_value(&panel.residuals(&cand));
        if best.as_ref().is_none_or(|(_, s)| score < *s) {
            best = Some((cand, score));
        }
    }
    let (cand, score) = best.ok_or(Error::DegenerateDesign)?;
    if !(score > 0.0) {
        // exact fit to more than half the data
        return Ok(cand);
    }
    let spec = LossSpec::tukey(TUKEY_REFINE_C)?;
    match irls_fit(panel, spec, &cand, score, IrlsConfig::default()) {
        Ok(fit) => Ok(fit.beta),
        Err(Error::SingularWeightedDesign { .. }) => Ok(cand),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EslOptions {
    pub irls: IrlsConfig,
    pub seed: u64,
    pub n_subsamples: usize,
    /// Upper bound on tune-then-refit rounds.
    pub max_outer: usize,
    pub grid: EslGrid,
    /// Standardized constant; skips the tuning search when set.
    pub fixed_c: Option<f64>,
}

impl Default for EslOptions {
    fn default() -> Self {
        Self {
            irls: IrlsConfig::default(),
            seed: 0,
            n_subsamples: DEFAULT_SUBSAMPLES,
            max_outer: 3,
            grid: EslGrid::default(),
            fixed_c: None,
        }
    }
}

/// ESL fit from a high-breakdown start with alternating tuning and IRLS.
pub fn fit_esl(panel: &PanelData, config: IrlsConfig, seed: u64) -> Result<FitResult> {
    fit_esl_with(
        panel,
        &EslOptions {
            irls: config,
            seed,
            ..EslOptions::default()
        },
    )
}

pub fn fit_esl_with(panel: &PanelData, opts: &EslOptions) -> Result<FitResult> {
    let centered = within_transform(panel)?;
    fit_esl_centered(&centered, opts)
}

pub(crate) fn fit_esl_centered(centered: &CenteredPanel, opts: &EslOptions) -> Result<FitResult> {
    opts.irls.validate()?;
    let mut beta = high_breakdown_init(centered, opts.n_subsamples, opts.seed)?;

    if let Some(c) = opts.fixed_c {
        let sigma = crate::scale::mad_scale(&centered.residuals(&beta))?.value;
        let spec = LossSpec::esl(c)?;
        let mut fit = irls_fit(centered, spec, &beta, sigma, opts.irls)?;
        fit.std_errors = sandwich_se(centered, &fit, spec).ok().map(|s| s.std_errors());
        return Ok(fit);
    }

    // The candidate set is fixed by the first round so that later rounds
    // compare like with like.
    let mut grid = opts.grid.clone();
    let mut last: Option<(FitResult, f64)> = None;
    let mut total_iter = 0;
    for _ in 0..opts.max_outer.max(1) {
        let state = esl_select_c(centered, &beta, &grid)?;
        grid = EslGrid::Fixed(state.grid.clone());
        let spec = LossSpec::esl(state.c_standardized())?;
        let fit = irls_fit(centered, spec, &beta, state.sigma_mad, opts.irls)?;
        total_iter += fit.iterations;
        let c_raw = state.c_selected;
        let settled = last.as_ref().is_some_and(|(_, c_prev)| {
            linalg::max_abs_diff(&fit.beta, &beta) < opts.irls.tol && (c_raw - c_prev).abs() / c_raw < 0.01
        });
        beta = fit.beta.clone();
        last = Some((fit, c_raw));
        if settled {
            break;
        }
    }
    let (mut fit, _) = last.expect("at least one outer round");
    fit.iterations = total_iter;
    let spec = LossSpec::esl(fit.c_selected.expect("ESL fit carries c"))?;
    fit.std_errors = sandwich_se(centered, &fit, spec).ok().map(|s| s.std_errors());
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichCovariance {
    pub matrix: DMatrix<f64>,
    pub psi_sq_mean: f64,
    pub psi_prime_mean: f64,
    pub sigma: f64,
}

impl SandwichCovariance {
    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.matrix.nrows())
            .map(|a| self.matrix[(a, a)].max(0.0).sqrt())
            .collect()
    }

    /// Plug-in efficiency factor `(mean ψ')² / mean ψ²`.
    pub fn tau(&self) -> f64 {
        self.psi_prime_mean * self.psi_prime_mean / self.psi_sq_mean
    }
}

/// `(mean ψ² / (mean ψ')²) σ̂² (Σ ẍẍᵀ)⁻¹` at the fitted coefficients.
pub fn sandwich_se(panel: &CenteredPanel, fit: &FitResult, spec: LossSpec) -> Result<SandwichCovariance> {
    let k = panel.n_regressors();
    let sigma = fit.sigma_hat;
    if !(sigma > 0.0) {
        return Err(Error::ZeroScale);
    }
    let resid = panel.residuals(&fit.beta);
    let n = resid.len() as f64;
    let mut psi_sq = 0.0;
    let mut psi_prime = 0.0;
    for e in &resid {
        let u = e / sigma;
        psi_sq += spec.psi(u).powi(2);
        psi_prime += spec.psi_prime(u);
    }
    let psi_sq_mean = psi_sq / n;
    let psi_prime_mean = psi_prime / n;
    if !(psi_prime_mean > 0.0) {
        return Err(Error::UnstableCurvature(psi_prime_mean));
    }
    let gram = linalg::cross_product(panel.x(), None, k);
    let inv = linalg::spd_inverse(&gram).ok_or_else(|| Error::SingularDesign {
        null_direction: Vec::new(),
    })?;
    let factor = psi_sq_mean / (psi_prime_mean * psi_prime_mean) * sigma * sigma;
    Ok(SandwichCovariance {
        matrix: linalg::symmetrize(inv * factor),
        psi_sq_mean,
        psi_prime_mean,
        sigma,
    })
}

/// Fits `kind` with its default settings; `seed` drives the ESL start.
pub fn fit_estimator(panel: &PanelData, kind: EstimatorKind, seed: u64) -> Result<FitResult> {
    let centered = within_transform(panel)?;
    fit_estimator_centered(&centered, kind, seed)
}

pub(crate) fn fit_estimator_centered(centered: &CenteredPanel, kind: EstimatorKind, seed: u64) -> Result<FitResult> {
    match kind {
        EstimatorKind::Ls => within_ls_centered(centered),
        EstimatorKind::Huber => fit_mestimator_centered(centered, LossFamily::Huber, &MFitOptions::default()),
        EstimatorKind::Tukey => fit_mestimator_centered(centered, LossFamily::Tukey, &MFitOptions::default()),
        EstimatorKind::Esl => fit_esl_centered(
            centered,
            &EslOptions {
                seed,
                ..EslOptions::default()
            },
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::within_ls;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn synthetic(n: usize, t: usize, seed: u64) -> PanelData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let alpha = rng.random_range(0.0..12.0);
            for _ in 0..t {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                let e: f64 = StandardNormal.sample(&mut rng);
                x.extend([a + 0.1 * i as f64, b]);
                y.push(2.4 * a - 1.2 * b + alpha + e);
            }
        }
        PanelData::from_values(n, t, 2, y, x).unwrap()
    }

    #[test]
    fn fixed_point_at_exact_fit() {
        let p = synthetic(10, 3, 1);
        let ls = within_ls(&p).unwrap();
        let c = within_transform(&p).unwrap();
        // make the data noiseless at the LS beta
        let fitted: Vec<f64> = c.y().iter().zip(c.residuals(&ls.beta)).map(|(y, e)| y - e).collect();
        let exact = PanelData::from_values(10, 3, 2, fitted, c.x().to_vec()).unwrap();
        let ce = within_transform(&exact).unwrap();
        let fit = irls_fit(&ce, LossSpec::tukey(4.685).unwrap(), &ls.beta, 1.0, IrlsConfig::default()).unwrap();
        assert_eq!(fit.iterations, 1);
        assert!(fit.converged);
        assert!(linalg::max_abs_diff(&fit.beta, &ls.beta) < 1e-12);
    }

    #[test]
    fn huber_without_trimming_is_ls() {
        let p = synthetic(20, 4, 2);
        let ls = within_ls(&p).unwrap();
        let c = within_transform(&p).unwrap();
        let fit = irls_fit(&c, LossSpec::huber(1e6).unwrap(), &[0.0, 0.0], 1.0, IrlsConfig::default()).unwrap();
        assert!(linalg::max_abs_diff(&fit.beta, &ls.beta) < 1e-10);
    }

    #[test]
    fn tukey_rejects_single_vertical_outlier() {
        let p = synthetic(40, 3, 3);
        let clean = within_ls(&p).unwrap();
        let mut y = p.y_values().to_vec();
        y[17] += 1000.0;
        let dirty = p.with_y(y).unwrap();
        let c = within_transform(&dirty).unwrap();
        let fit = fit_mestimator(&dirty, LossFamily::Tukey, CMode::Auto).unwrap();
        let w = fit.weights.as_ref().unwrap();
        assert_eq!(w[17], 0.0);
        assert!(linalg::max_abs_diff(&fit.beta, &clean.beta) < 0.05, "{:?} vs {:?}", fit.beta, clean.beta);
        assert!(c.n_obs() == 120);
    }

    #[test]
    fn fixed_mode_matches_irls_at_same_constant() {
        let p = synthetic(30, 3, 4);
        let fixed = fit_mestimator(&p, LossFamily::Tukey, CMode::Fixed(4.685)).unwrap();
        let c = within_transform(&p).unwrap();
        let ls = within_ls(&p).unwrap();
        let sigma = initial_scale(&c.residuals(&ls.beta)).unwrap().value;
        let direct = irls_fit(&c, LossSpec::tukey(4.685).unwrap(), &ls.beta, sigma, IrlsConfig::default()).unwrap();
        assert_eq!(fixed.beta, direct.beta);
        assert_eq!(fixed.c_selected, Some(4.685));
    }

    #[test]
    fn singular_weighted_design_is_reported() {
        let p = synthetic(10, 2, 5);
        let c = within_transform(&p).unwrap();
        // tiny scale rejects everything under Tukey
        let r = irls_fit(&c, LossSpec::tukey(1.0).unwrap(), &[50.0, 50.0], 1e-6, IrlsConfig::default());
        assert!(matches!(r, Err(Error::SingularWeightedDesign { iteration: 1 })));
    }

    #[test]
    fn rescaling_option_runs() {
        let p = synthetic(30, 3, 6);
        let c = within_transform(&p).unwrap();
        let cfg = IrlsConfig {
            rescale_each_iter: true,
            ..IrlsConfig::default()
        };
        let fit = irls_fit(&c, LossSpec::huber(1.345).unwrap(), &[0.0, 0.0], 1.0, cfg).unwrap();
        assert!(fit.converged);
        let ls = within_ls(&p).unwrap();
        assert!(linalg::max_abs_diff(&fit.beta, &ls.beta) < 0.05, "{:?} vs {:?}", fit.beta, ls.beta);
    }

    #[test]
    fn high_breakdown_start_is_deterministic_and_close_on_clean_data() {
        let p = synthetic(60, 3, 7);
        let c = within_transform(&p).unwrap();
        let a = high_breakdown_init(&c, 500, 9).unwrap();
        let b = high_breakdown_init(&c, 500, 9).unwrap();
        assert_eq!(a, b);
        let ls = within_ls(&p).unwrap();
        assert!(linalg::max_abs_diff(&a, &ls.beta) < 0.1, "{a:?} vs {:?}", ls.beta);
    }

    #[test]
    fn high_breakdown_start_survives_forty_percent_outliers() {
        // With T = 2 one shifted cell contaminates both centered observations of
        // its unit, so shifting one cell in 40% of units contaminates 40% of the
        // within-transformed sample.
        let p = synthetic(100, 2, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut y = p.y_values().to_vec();
        for i in rand::seq::index::sample(&mut rng, 100, 40).iter() {
            y[2 * i + rng.random_range(0..2)] += 1000.0;
        }
        let dirty = p.with_y(y).unwrap();
        let c = within_transform(&dirty).unwrap();
        let b0 = high_breakdown_init(&c, 500, 3).unwrap();
        let ls = within_ls(&dirty).unwrap();
        let truth = [2.4, -1.2];
        assert!(linalg::max_abs_diff(&b0, &truth) < 1.0, "{b0:?}");
        assert!(linalg::max_abs_diff(&ls.beta, &truth) > 10.0, "{:?}", ls.beta);
    }

    #[test]
    fn all_singular_subsets_are_degenerate() {
        // x2 = 2 x1 everywhere: every 2x2 elemental system is singular
        let x: Vec<f64> = (0..12).flat_map(|j| [j as f64, 2.0 * j as f64]).collect();
        let y: Vec<f64> = (0..12).map(|j| (j * j) as f64).collect();
        let c = within_transform(&PanelData::from_values(4, 3, 2, y, x).unwrap()).unwrap();
        assert!(matches!(high_breakdown_init(&c, 50, 1), Err(Error::DegenerateDesign)));
    }

    #[test]
    fn esl_on_clean_data_is_close_to_ls() {
        let p = synthetic(200, 3, 10);
        let fit = fit_esl(&p, IrlsConfig::default(), 4).unwrap();
        let ls = within_ls(&p).unwrap();
        assert!(linalg::max_abs_diff(&fit.beta, &ls.beta) < 0.05);
        assert!(fit.c_selected.unwrap() > 0.0);
        assert!(fit.std_errors.is_some());
    }

    #[test]
    fn sandwich_reduces_to_ls_form_without_trimming() {
        let p = synthetic(25, 3, 11);
        let c = within_transform(&p).unwrap();
        let ls = within_ls(&p).unwrap();
        let spec = LossSpec::huber(1e9).unwrap();
        let mut fit = irls_fit(&c, spec, &ls.beta, 1.0, IrlsConfig::default()).unwrap();
        fit.sigma_hat = ls.sigma_hat;
        let cov = sandwich_se(&c, &fit, spec).unwrap();
        let inv = linalg::spd_inverse(&linalg::cross_product(c.x(), None, 2)).unwrap();
        let n = c.n_obs() as f64;
        let mean_e2 = c.residuals(&fit.beta).iter().map(|e| e * e).sum::<f64>() / n;
        // mean ψ² / (mean ψ')² = mean(e²)/σ² here, so cov = mean(e²)·(Σẍẍᵀ)⁻¹
        for a in 0..2 {
            for b in 0..2 {
                assert!((cov.matrix[(a, b)] - mean_e2 * inv[(a, b)]).abs() < 1e-12);
            }
        }
        assert_eq!(cov.psi_prime_mean, 1.0);
    }

    #[test]
    fn sandwich_matches_scalar_recomputation() {
        let p = synthetic(30, 3, 12).with_x(1, (0..90).map(|j| ((j * 37 % 11) as f64).sin()).collect()).unwrap();
        let c = within_transform(&p).unwrap();
        let spec = LossSpec::tukey(3.0).unwrap();
        let fit = fit_mestimator(&p, LossFamily::Tukey, CMode::Fixed(3.0)).unwrap();
        let cov = sandwich_se(&c, &fit, spec).unwrap();
        let (mut s2, mut s1, mut xx) = (0.0, 0.0, 0.0);
        for j in 0..c.n_obs() {
            let u = (c.y()[j] - c.x()[j] * fit.beta[0]) / fit.sigma_hat;
            if u.abs() <= 3.0 {
                let v = 1.0 - (u / 3.0).powi(2);
                s2 += (u * v * v).powi(2);
                s1 += v * (1.0 - 5.0 * (u / 3.0).powi(2));
            }
            xx += c.x()[j] * c.x()[j];
        }
        let n = c.n_obs() as f64;
        let expected = (s2 / n) / (s1 / n).powi(2) * fit.sigma_hat.powi(2) / xx;
        assert!((cov.matrix[(0, 0)] - expected).abs() < 1e-10 * expected.max(1.0));
        assert!((cov.psi_sq_mean - s2 / n).abs() < 1e-12);
    }

    #[test]
    fn negative_curvature_is_unstable() {
        let p = synthetic(10, 3, 13);
        let c = within_transform(&p).unwrap();
        let spec = LossSpec::tukey(1.0).unwrap();
        let fit = FitResult {
            estimator: EstimatorKind::Tukey,
            beta: vec![0.0, 0.0],
            std_errors: None,
            sigma_hat: 1e-3,
            c_selected: Some(1.0),
            weights: None,
            iterations: 0,
            converged: true,
            objective_trace: vec![],
        };
        assert!(matches!(sandwich_se(&c, &fit, spec), Err(Error::UnstableCurvature(_))));
    }

    #[test]
    fn huber_objective_never_increases() {
        let p = synthetic(40, 3, 14);
        let mut y = p.y_values().to_vec();
        y[3] += 30.0;
        y[50] -= 40.0;
        let p = p.with_y(y).unwrap();
        let fit = fit_mestimator(&p, LossFamily::Huber, CMode::Fixed(1.0)).unwrap();
        for w in fit.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{:?}", fit.objective_trace);
        }
    }
}
