use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{CommandFactory, Parser, Subcommand};

use robust_panel::estimator::{fit_esl_with, fit_mestimator, CMode, EslOptions};
use robust_panel::io::{fit_report_json, read_panel_csv, run_experiment, write_weights_csv, ExperimentConfig};
use robust_panel::{within_ls, EstimatorKind, Error, FitResult, LossFamily, PanelData};

#[derive(Parser)]
#[command(name = "robust-panel", version, about = "Robust M-estimation for fixed-effects panels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one estimator to a CSV panel (columns unit,time,y,x1..xK).
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// ls, huber, tukey or esl
        #[arg(long)]
        estimator: EstimatorKind,
        /// Tuning constant on the standardized scale, or `auto`.
        #[arg(long, default_value = "auto")]
        c: CArg,
        /// Seed for the ESL high-breakdown start.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON report path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-observation weights CSV (defaults next to --out).
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Run the Monte Carlo studies described by a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, Debug)]
enum CArg {
    Auto,
    Value(f64),
}

impl FromStr for CArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(CArg::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(CArg::Value(v)),
            _ => Err(format!("expected a positive number or `auto`, got `{s}`")),
        }
    }
}

fn single_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let msg = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("error: {}", single_line(msg));
            eprintln!("{}", Cli::command().render_usage());
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", single_line(&e.to_string()));
            ExitCode::from(if e.is_data_error() { 2 } else { 3 })
        }
    }
}

fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Fit {
            input,
            estimator,
            c,
            seed,
            out,
            weights,
        } => {
            let panel = read_panel_csv(&input)?;
            let fit = fit(&panel, estimator, c, seed)?;
            let json = fit_report_json(&fit)?;
            match &out {
                Some(path) => std::fs::write(path, json + "\n")?,
                None => println!("{json}"),
            }
            let weights = weights.or_else(|| out.as_deref().map(weights_path));
            if let Some(w) = weights {
                write_weights_csv(&panel, &fit, w)?;
            }
            Ok(())
        }
        Command::Simulate { config, out_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            for p in run_experiment(&cfg, &out_dir)? {
                log::info!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

fn weights_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_weights.csv"))
}

fn fit(panel: &PanelData, kind: EstimatorKind, c: CArg, seed: u64) -> Result<FitResult, Error> {
    let mode = match c {
        CArg::Auto => CMode::Auto,
        CArg::Value(v) => CMode::Fixed(v),
    };
    match kind {
        EstimatorKind::Ls => {
            if let CArg::Value(_) = c {
                log::warn!("--c is ignored for least squares");
            }
            within_ls(panel)
        }
        EstimatorKind::Huber => fit_mestimator(panel, LossFamily::Huber, mode),
        EstimatorKind::Tukey => fit_mestimator(panel, LossFamily::Tukey, mode),
        EstimatorKind::Esl => fit_esl_with(
            panel,
            &EslOptions {
                seed,
                fixed_c: match c {
                    CArg::Auto => None,
                    CArg::Value(v) => Some(v),
                },
                ..EslOptions::default()
            },
        ),
    }
}
