//! Panel data generation, outlier contamination and Monte Carlo studies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Cauchy, Distribution, Normal, StandardNormal, StudentT, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::fit_estimator_centered;
use crate::panel::{predict, within_transform, AlphaPolicy, EstimatorKind, PanelData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorDist {
    Normal01,
    StudentT5,
    /// Chi-squared with 4 degrees of freedom, not centered.
    ChiSq4,
    Cauchy01,
    /// No noise at all.
    Zero,
}

impl ErrorDist {
    pub const STUDY: [ErrorDist; 4] = [
        ErrorDist::Normal01,
        ErrorDist::StudentT5,
        ErrorDist::ChiSq4,
        ErrorDist::Cauchy01,
    ];

    fn sampler(self) -> Box<dyn Fn(&mut ChaCha8Rng) -> f64 + Send + Sync> {
        match self {
            ErrorDist::Normal01 => Box::new(|r| StandardNormal.sample(r)),
            ErrorDist::StudentT5 => {
                let d = StudentT::new(5.0).expect("valid dof");
                Box::new(move |r| d.sample(r))
            }
            ErrorDist::ChiSq4 => {
                let d = ChiSquared::new(4.0).expect("valid dof");
                Box::new(move |r| d.sample(r))
            }
            ErrorDist::Cauchy01 => {
                let d = Cauchy::new(0.0, 1.0).expect("valid scale");
                Box::new(move |r| d.sample(r))
            }
            ErrorDist::Zero => Box::new(|_| 0.0),
        }
    }
}

/// How unit effects are laid onto the stacked cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FixedEffectLayout {
    /// Cell `(i, t)` carries `α_i`.
    #[default]
    PerUnit,
    /// Cell `(i, t)` carries `α_{(iT + t) mod N}`: the effect vector is repeated
    /// over the unit-major stacking, so effects vary within units.
    Recycled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpConfig {
    pub n_units: usize,
    pub n_periods: usize,
    #[serde(default = "default_beta")]
    pub beta: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: Vec<f64>,
    #[serde(default = "default_error")]
    pub error_dist: ErrorDist,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub fe_layout: FixedEffectLayout,
}

fn default_beta() -> Vec<f64> {
    vec![2.4, -1.2]
}

fn default_gamma() -> Vec<f64> {
    vec![2.0, 4.0]
}

fn default_error() -> ErrorDist {
    ErrorDist::Normal01
}

impl DgpConfig {
    pub fn new(n_units: usize, n_periods: usize) -> Self {
        Self {
            n_units,
            n_periods,
            beta: default_beta(),
            gamma: default_gamma(),
            error_dist: default_error(),
            seed: 0,
            fe_layout: FixedEffectLayout::PerUnit,
        }
    }

    pub fn with_error(mut self, dist: ErrorDist) -> Self {
        self.error_dist = dist;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_layout(mut self, layout: FixedEffectLayout) -> Self {
        self.fe_layout = layout;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.beta.is_empty() || self.beta.len() != self.gamma.len() {
            return Err(Error::Config(format!(
                "beta and gamma must be nonempty and of equal length, got {} and {}",
                self.beta.len(),
                self.gamma.len()
            )));
        }
        if self.n_units < 2 || self.n_periods < 1 {
            return Err(Error::Config(format!(
                "need n_units >= 2 and n_periods >= 1, got {} x {}",
                self.n_units, self.n_periods
            )));
        }
        Ok(())
    }
}

/// Draws a panel: `x₁ ~ χ²₂ - 2`, further regressors `N(0, 1)`,
/// `α_i = Σ_t x_itᵀγ/√T + η_i` with `η_i ~ U(0, 12)`, `y = xᵀβ + α + ε`.
pub fn gen_panel(config: &DgpConfig) -> Result<PanelData> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    gen_panel_rng(config, &mut rng)
}

fn gen_panel_rng(config: &DgpConfig, rng: &mut ChaCha8Rng) -> Result<PanelData> {
    let (n, t, k) = (config.n_units, config.n_periods, config.beta.len());
    let chi2 = ChiSquared::new(2.0).expect("valid dof");
    let eta = Uniform::new(0.0, 12.0).expect("valid range");
    let noise = config.error_dist.sampler();

    let mut x = Vec::with_capacity(n * t * k);
    for _ in 0..n * t {
        x.push(chi2.sample(rng) - 2.0);
        for _ in 1..k {
            x.push(StandardNormal.sample(rng));
        }
    }
    let sqrt_t = (t as f64).sqrt();
    let alpha: Vec<f64> = (0..n)
        .map(|i| {
            let s: f64 = (0..t)
                .map(|s| dot(&x[(i * t + s) * k..(i * t + s + 1) * k], &config.gamma))
                .sum();
            s / sqrt_t + eta.sample(rng)
        })
        .collect();
    let y = (0..n * t)
        .map(|j| {
            let a = match config.fe_layout {
                FixedEffectLayout::PerUnit => alpha[j / t],
                FixedEffectLayout::Recycled => alpha[j % n],
            };
            dot(&x[j * k..(j + 1) * k], &config.beta) + a + noise(rng)
        })
        .collect();
    PanelData::from_values(n, t, k, y, x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContaminationKind {
    RandomVertical,
    RandomLeverage,
    ConcentratedVertical,
    ConcentratedLeverage,
}

impl ContaminationKind {
    pub const ALL: [ContaminationKind; 4] = [
        ContaminationKind::RandomVertical,
        ContaminationKind::RandomLeverage,
        ContaminationKind::ConcentratedVertical,
        ContaminationKind::ConcentratedLeverage,
    ];

    pub fn is_concentrated(self) -> bool {
        matches!(
            self,
            ContaminationKind::ConcentratedVertical | ContaminationKind::ConcentratedLeverage
        )
    }

    pub fn is_leverage(self) -> bool {
        matches!(
            self,
            ContaminationKind::RandomLeverage | ContaminationKind::ConcentratedLeverage
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContaminationScheme {
    pub kind: ContaminationKind,
    /// Number of contaminated cells.
    pub m: usize,
    pub seed: u64,
}

/// Length of a concentrated block: `⌈T/2⌉` consecutive periods.
pub fn block_len(n_periods: usize) -> usize {
    n_periods.div_ceil(2)
}

/// Checks that `scheme` fits an `n × t` panel.
pub fn validate_scheme(kind: ContaminationKind, m: usize, n: usize, t: usize) -> Result<()> {
    if m > n * t {
        return Err(Error::InvalidScheme(format!(
            "m = {m} exceeds the {} cells of the panel",
            n * t
        )));
    }
    if kind.is_concentrated() {
        let b = block_len(t);
        if m % b != 0 {
            let lower = m / b * b;
            let nearest = if m - lower <= lower + b - m { lower } else { lower + b };
            return Err(Error::BlockPolicy { m, block: b, nearest });
        }
        if m / b > n {
            return Err(Error::InvalidScheme(format!(
                "m = {m} needs {} units of {b}-period blocks, panel has {n}",
                m / b
            )));
        }
    }
    Ok(())
}

/// Inserts outliers.
///
/// Random kinds replace `y` at `m` distinct cells by `U(20, 80)` draws. Concentrated
/// kinds pick `m / ⌈T/2⌉` distinct units and, in each, a run of `⌈T/2⌉`
/// consecutive periods at a random offset, whose `y` becomes `U(79, 80)`.
/// Leverage kinds also redraw every regressor of the affected cells from `N(8, 2²)`.
pub fn contaminate(panel: &PanelData, scheme: &ContaminationScheme) -> Result<PanelData> {
    let mut rng = ChaCha8Rng::seed_from_u64(scheme.seed);
    contaminate_rng(panel, scheme.kind, scheme.m, &mut rng)
}

fn contaminate_rng(
    panel: &PanelData,
    kind: ContaminationKind,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PanelData> {
    let (n, t, k) = (panel.n_units(), panel.n_periods(), panel.n_regressors());
    validate_scheme(kind, m, n, t)?;
    if m == 0 {
        return Ok(panel.clone());
    }
    let cells: Vec<usize> = if kind.is_concentrated() {
        let b = block_len(t);
        let units = rand::seq::index::sample(rng, n, m / b);
        let mut cells = Vec::with_capacity(m);
        for i in units.iter() {
            let start = rng.random_range(0..=t - b);
            cells.extend((start..start + b).map(|s| i * t + s));
        }
        cells
    } else {
        rand::seq::index::sample(rng, n * t, m).into_vec()
    };

    let y_law = if kind.is_concentrated() {
        Uniform::new(79.0, 80.0)
    } else {
        Uniform::new(20.0, 80.0)
    }
    .expect("valid range");
    let lev = Normal::new(8.0, 2.0).expect("valid sd");

    let mut y = panel.y_values().to_vec();
    let mut x = panel.x_values().to_vec();
    for &j in &cells {
        y[j] = y_law.sample(rng);
        if kind.is_leverage() {
            for v in &mut x[j * k..(j + 1) * k] {
                *v = lev.sample(rng);
            }
        }
    }
    PanelData::new(
        panel.unit_labels().to_vec(),
        panel.period_labels().to_vec(),
        k,
        y,
        x,
    )
}

const STREAM_DATA: u64 = 1;
const STREAM_CONTAM: u64 = 2;
const STREAM_TEST: u64 = 3;
const STREAM_FIT: u64 = 4;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for `stream` of replication `rep`; independent of the replication count.
pub fn derive_seed(master: u64, rep: u64, stream: u64) -> u64 {
    splitmix(splitmix(splitmix(master) ^ rep) ^ stream)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub replication: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: EstimatorKind,
    /// Mean of `se_samples`.
    pub mse: f64,
    /// `‖β̂ˢ - β‖²` for every successful replication, in replication order.
    pub se_samples: Vec<f64>,
    pub rmse: Option<f64>,
    pub rmse_samples: Option<Vec<f64>>,
    pub failures: Vec<FailureRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyEcho {
    pub dgp: DgpConfig,
    pub contamination: Option<(ContaminationKind, usize)>,
    pub replications: usize,
    pub master_seed: u64,
    pub n_test: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: StudyEcho,
    pub estimators: Vec<EstimatorSummary>,
    /// Some estimator failed in more than 5% of replications.
    pub degraded: bool,
}

impl SimulationReport {
    pub fn summary(&self, kind: EstimatorKind) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|e| e.estimator == kind)
    }

    pub fn mse(&self, kind: EstimatorKind) -> Option<f64> {
        self.summary(kind).map(|s| s.mse)
    }

    pub fn rmse(&self, kind: EstimatorKind) -> Option<f64> {
        self.summary(kind).and_then(|s| s.rmse)
    }
}

type RepOutcome = Vec<std::result::Result<(f64, Option<f64>), String>>;

/// Monte Carlo MSE study. The seeds inside `dgp` and `scheme` are replaced by
/// per-replication seeds derived from `master_seed`.
pub fn run_mc(
    dgp: &DgpConfig,
    scheme: Option<&ContaminationScheme>,
    estimators: &[EstimatorKind],
    replications: usize,
    master_seed: u64,
) -> Result<SimulationReport> {
    run_study(dgp, scheme, estimators, replications, master_seed, None)
}

/// Like [`run_mc`], also scoring out-of-sample prediction on a clean panel of
/// `n_test` units per replication.
pub fn rmse_prediction_study(
    dgp: &DgpConfig,
    scheme: Option<&ContaminationScheme>,
    estimators: &[EstimatorKind],
    replications: usize,
    n_test: usize,
    master_seed: u64,
) -> Result<SimulationReport> {
    if n_test == 0 {
        return Err(Error::Config("n_test must be at least 1".into()));
    }
    run_study(dgp, scheme, estimators, replications, master_seed, Some(n_test))
}

fn run_study(
    dgp: &DgpConfig,
    scheme: Option<&ContaminationScheme>,
    estimators: &[EstimatorKind],
    replications: usize,
    master_seed: u64,
    n_test: Option<usize>,
) -> Result<SimulationReport> {
    dgp.validate()?;
    if estimators.is_empty() {
        return Err(Error::Config("no estimators requested".into()));
    }
    if replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    if let Some(s) = scheme {
        validate_scheme(s.kind, s.m, dgp.n_units, dgp.n_periods)?;
    }
    let test_cfg = n_test.map(|nt| DgpConfig {
        n_units: nt,
        ..dgp.clone()
    });

    let outcomes: Vec<RepOutcome> = (0..replications)
        .into_par_iter()
        .map(|s| replicate(dgp, scheme, estimators, test_cfg.as_ref(), master_seed, s))
        .collect();

    let mut summaries = Vec::with_capacity(estimators.len());
    let mut degraded = false;
    for (e, &kind) in estimators.iter().enumerate() {
        let mut se = Vec::with_capacity(replications);
        let mut rm = Vec::with_capacity(replications);
        let mut failures = Vec::new();
        for (s, out) in outcomes.iter().enumerate() {
            match &out[e] {
                Ok((v, r)) => {
                    se.push(*v);
                    if let Some(r) = r {
                        rm.push(*r);
                    }
                }
                Err(msg) => {
                    log::warn!("replication {s}, {kind}: {msg}");
                    failures.push(FailureRecord {
                        replication: s,
                        error: msg.clone(),
                    });
                }
            }
        }
        if failures.len() as f64 > 0.05 * replications as f64 {
            degraded = true;
        }
        let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
        summaries.push(EstimatorSummary {
            estimator: kind,
            mse: mean(&se),
            se_samples: se,
            rmse: n_test.map(|_| mean(&rm)),
            rmse_samples: n_test.map(|_| rm),
            failures,
        });
    }
    Ok(SimulationReport {
        config: StudyEcho {
            dgp: dgp.clone(),
            contamination: scheme.map(|s| (s.kind, s.m)),
            replications,
            master_seed,
            n_test,
        },
        estimators: summaries,
        degraded,
    })
}

fn replicate(
    dgp: &DgpConfig,
    scheme: Option<&ContaminationScheme>,
    estimators: &[EstimatorKind],
    test_cfg: Option<&DgpConfig>,
    master: u64,
    s: usize,
) -> RepOutcome {
    let fail_all = |msg: String| vec![Err(msg); estimators.len()];
    let rep = s as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master, rep, STREAM_DATA));
    let mut panel = match gen_panel_rng(dgp, &mut rng) {
        Ok(p) => p,
        Err(e) => return fail_all(e.to_string()),
    };
    if let Some(sc) = scheme {
        let mut crng = ChaCha8Rng::seed_from_u64(derive_seed(master, rep, STREAM_CONTAM));
        panel = match contaminate_rng(&panel, sc.kind, sc.m, &mut crng) {
            Ok(p) => p,
            Err(e) => return fail_all(e.to_string()),
        };
    }
    let test = match test_cfg {
        Some(cfg) => {
            let mut trng = ChaCha8Rng::seed_from_u64(derive_seed(master, rep, STREAM_TEST));
            match gen_panel_rng(cfg, &mut trng) {
                Ok(p) => Some(p),
                Err(e) => return fail_all(e.to_string()),
            }
        }
        None => None,
    };
    let centered = match within_transform(&panel) {
        Ok(c) => c,
        Err(e) => return fail_all(e.to_string()),
    };
    let fit_seed = derive_seed(master, rep, STREAM_FIT);
    estimators
        .iter()
        .map(|&kind| {
            let fit = fit_estimator_centered(&centered, kind, fit_seed).map_err(|e| e.to_string())?;
            let se: f64 = fit.beta.iter().zip(&dgp.beta).map(|(b, t)| (b - t).powi(2)).sum();
            if !se.is_finite() {
                return Err("non-finite coefficient estimate".to_string());
            }
            let rmse = match &test {
                Some(tp) => {
                    let yhat = predict(tp, &fit.beta, AlphaPolicy::OwnMeans).map_err(|e| e.to_string())?;
                    let n = yhat.len() as f64;
                    let ss: f64 = yhat.iter().zip(tp.y_values()).map(|(p, y)| (y - p).powi(2)).sum();
                    Some((ss / n).sqrt())
                }
                None => None,
            };
            Ok((se, rmse))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeSeries {
    pub error_dist: ErrorDist,
    pub n_units: usize,
    pub n_periods: usize,
    pub estimator: EstimatorKind,
    pub se_samples: Vec<f64>,
    pub n_failed: usize,
}

/// Squared-error samples for every error law and `(N, T)` pair.
pub fn error_dist_study(
    pairs: &[(usize, usize)],
    dists: &[ErrorDist],
    estimators: &[EstimatorKind],
    replications: usize,
    master_seed: u64,
    layout: FixedEffectLayout,
) -> Result<Vec<SeSeries>> {
    if pairs.is_empty() {
        return Err(Error::Config("no (N, T) pairs requested".into()));
    }
    let mut out = Vec::new();
    for (d, &dist) in dists.iter().enumerate() {
        for (p, &(n, t)) in pairs.iter().enumerate() {
            let dgp = DgpConfig::new(n, t).with_error(dist).with_layout(layout);
            let seed = derive_seed(master_seed, (d * 1000 + p) as u64, 0);
            let report = run_mc(&dgp, None, estimators, replications, seed)?;
            for s in report.estimators {
                out.push(SeSeries {
                    error_dist: dist,
                    n_units: n,
                    n_periods: t,
                    estimator: s.estimator,
                    n_failed: s.failures.len(),
                    se_samples: s.se_samples,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyPoint {
    pub n_units: usize,
    pub n_periods: usize,
    pub estimator: EstimatorKind,
    pub mse: f64,
    pub n_failed: usize,
}

/// MSE against `N` at fixed `T` under normal errors.
pub fn consistency_study(
    n_units: &[usize],
    n_periods: usize,
    estimators: &[EstimatorKind],
    replications: usize,
    master_seed: u64,
    layout: FixedEffectLayout,
) -> Result<Vec<ConsistencyPoint>> {
    let mut out = Vec::new();
    for (j, &n) in n_units.iter().enumerate() {
        let dgp = DgpConfig::new(n, n_periods).with_layout(layout);
        let report = run_mc(&dgp, None, estimators, replications, derive_seed(master_seed, j as u64, 0))?;
        for s in report.estimators {
            out.push(ConsistencyPoint {
                n_units: n,
                n_periods,
                estimator: s.estimator,
                mse: s.mse,
                n_failed: s.failures.len(),
            });
        }
    }
    Ok(out)
}
