//! CSV panels, fit reports, experiment configuration and study tables.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{EstimatorKind, FitResult, PanelData};
use crate::simulation::{
    consistency_study, error_dist_study, rmse_prediction_study, ContaminationKind, ContaminationScheme,
    DgpConfig, ErrorDist, FixedEffectLayout,
};

/// Reads a balanced panel with columns `unit,time,y,x1..xK`.
///
/// Units and periods keep their order of first appearance. Extra columns are
/// ignored. Row numbers in diagnostics are 1-based file lines (header = 1).
pub fn read_panel_csv(path: impl AsRef<Path>) -> Result<PanelData> {
    let file = fs::File::open(path.as_ref())?;
    read_panel(file)
}

pub fn read_panel<R: Read>(reader: R) -> Result<PanelData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (cu, ct, cy) = (col("unit")?, col("time")?, col("y")?);
    let mut cx = vec![col("x1")?];
    while let Some(p) = headers.iter().position(|h| h == format!("x{}", cx.len() + 1)) {
        cx.push(p);
    }
    let k = cx.len();

    let mut units: Vec<String> = Vec::new();
    let mut periods: Vec<String> = Vec::new();
    let mut unit_idx: HashMap<String, usize> = HashMap::new();
    let mut period_idx: HashMap<String, usize> = HashMap::new();
    let mut cells: HashMap<(usize, usize), (f64, Vec<f64>)> = HashMap::new();

    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = r + 2;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let number = |c: usize| -> Result<f64> {
            let s = field(c);
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::NonNumeric {
                    row,
                    column: headers[c].to_string(),
                    value: s.to_string(),
                }),
            }
        };
        let (u, t) = (field(cu).to_string(), field(ct).to_string());
        let y = number(cy)?;
        let x = cx.iter().map(|&c| number(c)).collect::<Result<Vec<f64>>>()?;
        let ui = *unit_idx.entry(u.clone()).or_insert_with(|| {
            units.push(u.clone());
            units.len() - 1
        });
        let ti = *period_idx.entry(t.clone()).or_insert_with(|| {
            periods.push(t.clone());
            periods.len() - 1
        });
        if cells.insert((ui, ti), (y, x)).is_some() {
            return Err(Error::DuplicateCell { row, unit: u, time: t });
        }
    }
    if units.is_empty() {
        return Err(Error::InvalidPanel("no data rows".into()));
    }

    let (n, t) = (units.len(), periods.len());
    let mut y = Vec::with_capacity(n * t);
    let mut x = Vec::with_capacity(n * t * k);
    for (i, u) in units.iter().enumerate() {
        for (s, p) in periods.iter().enumerate() {
            let (yv, xv) = cells.remove(&(i, s)).ok_or_else(|| Error::Unbalanced {
                unit: u.clone(),
                time: p.clone(),
            })?;
            y.push(yv);
            x.extend(xv);
        }
    }
    PanelData::new(units, periods, k, y, x)
}

/// Writes `unit,time,y,x1..xK` with shortest round-trip number formatting.
pub fn write_panel_csv(panel: &PanelData, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let k = panel.n_regressors();
    let mut header = vec!["unit".to_string(), "time".into(), "y".into()];
    header.extend((1..=k).map(|c| format!("x{c}")));
    w.write_record(&header)?;
    for (i, u) in panel.unit_labels().iter().enumerate() {
        for (s, p) in panel.period_labels().iter().enumerate() {
            let mut rec = vec![u.clone(), p.clone(), panel.y(i, s).to_string()];
            rec.extend(panel.x_row(i, s).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// JSON summary of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub estimator: EstimatorKind,
    pub beta: Vec<f64>,
    pub std_errors: Option<Vec<f64>>,
    pub sigma_hat: f64,
    pub c_selected: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&FitResult> for FitReport {
    fn from(f: &FitResult) -> Self {
        Self {
            estimator: f.estimator,
            beta: f.beta.clone(),
            std_errors: f.std_errors.clone(),
            sigma_hat: f.sigma_hat,
            c_selected: f.c_selected,
            iterations: f.iterations,
            converged: f.converged,
        }
    }
}

pub fn fit_report_json(fit: &FitResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(&FitReport::from(fit))?)
}

/// `unit,time,weight` per observation; LS fits get weight 1 everywhere.
pub fn write_weights_csv(panel: &PanelData, fit: &FitResult, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["unit", "time", "weight"])?;
    let t = panel.n_periods();
    for j in 0..panel.n_obs() {
        let wt = fit.weights.as_ref().map_or(1.0, |v| v[j]);
        w.write_record([
            panel.unit_labels()[j / t].as_str(),
            panel.period_labels()[j % t].as_str(),
            &wt.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn all_estimators() -> Vec<EstimatorKind> {
    EstimatorKind::ALL.to_vec()
}

fn all_schemes() -> Vec<ContaminationKind> {
    ContaminationKind::ALL.to_vec()
}

fn default_levels() -> Vec<f64> {
    vec![0.05, 0.10]
}

fn default_n_test() -> usize {
    50
}

fn study_dists() -> Vec<ErrorDist> {
    ErrorDist::STUDY.to_vec()
}

fn default_beta() -> Vec<f64> {
    vec![2.4, -1.2]
}

fn default_gamma() -> Vec<f64> {
    vec![2.0, 4.0]
}

/// Monte Carlo experiment description (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub replications: usize,
    #[serde(default = "all_estimators")]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default = "default_beta")]
    pub beta: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub fe_layout: FixedEffectLayout,
    /// Contaminated MSE and RMSE tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tables: Option<TablesConfig>,
    /// Squared-error samples under several error laws.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_dists: Option<ErrorDistConfig>,
    /// Clean-data MSE against `N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencyConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TablesConfig {
    /// `(N, T)` pairs.
    pub panels: Vec<(usize, usize)>,
    #[serde(default = "all_schemes")]
    pub schemes: Vec<ContaminationKind>,
    /// Contaminated fractions of the `NT` cells.
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorDistConfig {
    pub panels: Vec<(usize, usize)>,
    #[serde(default = "study_dists")]
    pub distributions: Vec<ErrorDist>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencyConfig {
    pub n_units: Vec<usize>,
    pub n_periods: usize,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().replace('\n', " ")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    fn dgp(&self, n: usize, t: usize) -> DgpConfig {
        DgpConfig {
            beta: self.beta.clone(),
            gamma: self.gamma.clone(),
            ..DgpConfig::new(n, t).with_layout(self.fe_layout)
        }
    }
}

/// Number of contaminated cells for a fraction of an `n × t` panel.
pub fn outlier_count(level: f64, n: usize, t: usize) -> usize {
    (level * (n * t) as f64).round() as usize
}

fn num(v: f64) -> String {
    v.to_string()
}

/// Runs every configured study and writes its CSV tables into `out_dir`.
/// Returns the paths written.
pub fn run_experiment(config: &ExperimentConfig, out_dir: impl AsRef<Path>) -> Result<Vec<std::path::PathBuf>> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let ks = &config.estimators;
    let s = config.replications;

    if let Some(tc) = &config.tables {
        for &(n, t) in &tc.panels {
            for &kind in &tc.schemes {
                for &lvl in &tc.levels {
                    crate::simulation::validate_scheme(kind, outlier_count(lvl, n, t), n, t)?;
                }
            }
        }
        let mut cols = Vec::new();
        for &kind in &tc.schemes {
            for &lvl in &tc.levels {
                cols.push((kind, lvl));
            }
        }
        let header = {
            let mut h = String::from("n,t,estimator");
            for (kind, lvl) in &cols {
                write!(h, ",{kind:?}_{lvl}").expect("string write");
            }
            h
        };
        let mut mse_csv = header.clone() + "\n";
        let mut rmse_csv = header + "\n";
        for (p, &(n, t)) in tc.panels.iter().enumerate() {
            let mut mse = vec![vec![String::new(); cols.len()]; ks.len()];
            let mut rmse = mse.clone();
            for (c, &(kind, lvl)) in cols.iter().enumerate() {
                let scheme = ContaminationScheme {
                    kind,
                    m: outlier_count(lvl, n, t),
                    seed: 0,
                };
                let seed = crate::simulation::derive_seed(config.master_seed, (p * 1000 + c) as u64, 17);
                let report = rmse_prediction_study(&config.dgp(n, t), Some(&scheme), ks, s, tc.n_test, seed)?;
                if report.degraded {
                    log::warn!("({n},{t}) {kind:?} {lvl}: more than 5% failed replications");
                }
                for (e, sum) in report.estimators.iter().enumerate() {
                    mse[e][c] = num(sum.mse);
                    rmse[e][c] = num(sum.rmse.unwrap_or(f64::NAN));
                }
            }
            for (e, k) in ks.iter().enumerate() {
                writeln!(mse_csv, "{n},{t},{k},{}", mse[e].join(",")).expect("string write");
                writeln!(rmse_csv, "{n},{t},{k},{}", rmse[e].join(",")).expect("string write");
            }
        }
        written.push(write_file(out_dir, "mse_table.csv", &mse_csv)?);
        written.push(write_file(out_dir, "rmse_table.csv", &rmse_csv)?);
    }

    if let Some(ec) = &config.error_dists {
        let series = error_dist_study(&ec.panels, &ec.distributions, ks, s, config.master_seed, config.fe_layout)?;
        let mut csv = String::from("error_dist,n,t,estimator,sample,se\n");
        for sr in series {
            for (j, v) in sr.se_samples.iter().enumerate() {
                writeln!(
                    csv,
                    "{:?},{},{},{},{j},{}",
                    sr.error_dist,
                    sr.n_units,
                    sr.n_periods,
                    sr.estimator,
                    num(*v)
                )
                .expect("string write");
            }
        }
        written.push(write_file(out_dir, "se_samples.csv", &csv)?);
    }

    if let Some(cc) = &config.consistency {
        let pts = consistency_study(&cc.n_units, cc.n_periods, ks, s, config.master_seed, config.fe_layout)?;
        let mut csv = String::from("n,t,estimator,mse\n");
        for p in pts {
            writeln!(csv, "{},{},{},{}", p.n_units, p.n_periods, p.estimator, num(p.mse)).expect("string write");
        }
        written.push(write_file(out_dir, "consistency_curves.csv", &csv)?);
    }
    Ok(written)
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<std::path::PathBuf> {
    let path = dir.join(name);
    let mut f = fs::File::create(&path)?;
    f.write_all(body.as_bytes())?;
    Ok(path)
}
