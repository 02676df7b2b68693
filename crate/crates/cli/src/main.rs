//! `barx`: simulate data, fit the Bayesian ARX model, predict and report.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 bad input or config,
//! 3 sampler abort.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use barx_core::data::{self, Dataset};
use barx_core::diagnostics::{diagnose, DiagnosticsReport};
use barx_core::inference::{
    coefficient_summaries, hpd_modes, hpd_region, ls_arx_baseline, model_fit,
    noise_density_estimate, noise_grid, predictive_densities, predictive_grid, predictive_means,
    BaselineFit, CoefficientSummary, Mode, OrderGrid, DEFAULT_GRID_POINTS,
};
use barx_core::model::{build_regression, build_regression_rows};
use barx_core::sampler::{run_chains, RNG_DESCRIPTION};
use barx_core::PosteriorDraws;
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use config::RunConfig;
use output::{draws_to_ndjson, read_draws, read_json, write_atomic, write_json, ChainInfo};

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            code: 1,
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn other(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    /// Any failure while reading user-supplied input is a bad-input error.
    fn reading(e: barx_core::Error) -> Self {
        match e {
            barx_core::Error::SamplerAbort(_) => e.into(),
            e => Self::input(e.to_string()),
        }
    }
}

impl From<barx_core::Error> for CliError {
    fn from(e: barx_core::Error) -> Self {
        let code = match e {
            barx_core::Error::SamplerAbort(_) => 3,
            barx_core::Error::Io(_) => 1,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "barx",
    version,
    about = "Bayesian ARX identification with Gaussian-mixture noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Simulate {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        experiment: u8,
        /// Number of observations.
        #[arg(long = "T", visible_alias = "t", default_value_t = 1000)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "data.csv")]
        out: PathBuf,
    },
    /// Sample the posterior on the estimation part of a dataset.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// JSON file with model and sampler settings; every field optional.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Fraction of the series used for estimation.
        #[arg(long, default_value_t = 0.667)]
        split: f64,
        /// Overrides the seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// One-step-ahead predictive densities on the validation part.
    Predict {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Defaults to the split used by `fit`.
        #[arg(long)]
        split: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        grid_points: usize,
        /// Draws used for the densities (evenly thinned); means use all draws.
        #[arg(long, default_value_t = 1000)]
        max_density_draws: usize,
    },
    /// Print fit quality and sampler diagnostics of a run.
    Report {
        #[arg(long)]
        run: PathBuf,
        /// Directory written by `predict`.
        #[arg(long)]
        pred: Option<PathBuf>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct DataInfo {
    path: String,
    length: usize,
    has_input: bool,
    split: f64,
    boundary: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct FitQuality {
    validation_points: usize,
    barx: f64,
    baseline: f64,
    baseline_n_a: usize,
    baseline_n_b: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Summary {
    settings: RunConfig,
    rng: String,
    data: DataInfo,
    chains: Vec<ChainInfo>,
    diagnostics: DiagnosticsReport,
    coefficients: Vec<CoefficientSummary>,
    model_fit: FitQuality,
}

#[derive(Debug, Serialize, Deserialize)]
struct Metrics {
    split: f64,
    boundary: usize,
    validation_points: usize,
    mf_barx: f64,
    mf_baseline: f64,
    baseline: BaselineFit,
    hpd_level: f64,
    hpd_truncated: usize,
    density_draws: usize,
    noise_modes: Vec<Mode>,
}

fn load(path: &Path) -> Result<Dataset, CliError> {
    data::load_csv(path).map_err(|e| match e {
        barx_core::Error::Io(e) => CliError::input(format!("{}: {e}", path.display())),
        e => CliError::reading(e),
    })
}

fn simulate(experiment: u8, t: usize, seed: u64, out: &Path) -> Result<(), CliError> {
    let ds = match experiment {
        1 => data::generate_experiment1(t, seed),
        _ => data::generate_experiment2(t, seed),
    }
    .map_err(CliError::reading)?;
    let mut text = String::new();
    data::write_csv(&ds, &mut text);
    write_atomic(out, text.as_bytes())?;
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    write_json(&out.with_file_name(format!("{stem}.meta.json")), &ds.meta)?;
    Ok(())
}

/// Least-squares baseline and BARX predictive-mean fit on the validation part.
fn validation_fit(
    ds: &Dataset,
    draws: &PosteriorDraws,
    boundary: usize,
) -> Result<(FitQuality, BaselineFit, Vec<f64>), CliError> {
    let m = &draws.model;
    let rows = build_regression_rows(&ds.y, ds.u(), m.n_a, m.n_b, boundary..ds.len())?;
    let means = predictive_means(draws, &rows)?;
    let barx = model_fit(&rows.y_target, &means)?;
    let grid = OrderGrid {
        n_b: if m.n_b == 0 { 0..=0 } else { 1..=5 },
        ..OrderGrid::default()
    };
    let u_est = if m.n_b == 0 {
        None
    } else {
        ds.u().map(|u| &u[..boundary])
    };
    let u_full = if m.n_b == 0 { None } else { ds.u() };
    let baseline = ls_arx_baseline(&ds.y[..boundary], u_est, &grid)?;
    let base_pred = baseline.predict(&ds.y, u_full, boundary..ds.len())?;
    let quality = FitQuality {
        validation_points: rows.n_rows(),
        barx,
        baseline: model_fit(&rows.y_target, &base_pred)?,
        baseline_n_a: baseline.n_a,
        baseline_n_b: baseline.n_b,
    };
    Ok((quality, baseline, means))
}

fn fit(
    data_path: &Path,
    config: Option<&Path>,
    out: &Path,
    split: f64,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let mut settings: RunConfig = match config {
        Some(p) => read_json(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        settings.seed = s;
    }
    let model = settings.model();
    let hmc = settings.hmc();
    model.validate()?;
    hmc.validate()?;

    let ds = load(data_path)?;
    let boundary = data::split_index(ds.len(), split, model.max_lag())?;
    let u_est = if model.n_b == 0 {
        None
    } else {
        ds.u().map(|u| &u[..boundary])
    };
    let regression = build_regression(&ds.y[..boundary], u_est, &model)?;

    let draws = run_chains(&regression, &model, &hmc)?;
    let (quality, _, _) = validation_fit(&ds, &draws, boundary)?;
    let summary = Summary {
        settings,
        rng: RNG_DESCRIPTION.into(),
        data: DataInfo {
            path: data_path.display().to_string(),
            length: ds.len(),
            has_input: ds.u.is_some(),
            split,
            boundary,
        },
        chains: draws
            .chains
            .iter()
            .map(|c| ChainInfo {
                chain: c.chain,
                step_size: c.step_size,
                mass_diag: c.mass_diag.clone(),
                warmup_divergences: c.warmup_divergences,
            })
            .collect(),
        diagnostics: diagnose(&draws)?,
        coefficients: coefficient_summaries(&draws)?,
        model_fit: quality,
    };
    write_atomic(
        &out.join("draws.ndjson"),
        draws_to_ndjson(&draws)?.as_bytes(),
    )?;
    write_json(&out.join("summary.json"), &summary)?;
    eprintln!(
        "fit: {} chains x {} draws, {} divergences, R-hat max {}",
        draws.n_chains(),
        hmc.n_kept(),
        summary.diagnostics.divergences,
        summary
            .diagnostics
            .rhat_max
            .map_or("n/a".into(), |r| format!("{r:.3}")),
    );
    Ok(())
}

fn load_run(run: &Path) -> Result<(Summary, PosteriorDraws), CliError> {
    let summary: Summary = read_json(&run.join("summary.json"))?;
    let model = summary.settings.model();
    let draws = read_draws(&run.join("draws.ndjson"), &model, &summary.chains)?;
    if draws.is_empty() {
        return Err(CliError::input(format!("{}: no draws", run.display())));
    }
    Ok((summary, draws))
}

struct PredictArgs<'a> {
    run: &'a Path,
    data: &'a Path,
    split: Option<f64>,
    out: &'a Path,
    level: f64,
    grid_points: usize,
    max_density_draws: usize,
}

fn predict(args: PredictArgs<'_>) -> Result<(), CliError> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::input(format!(
            "HPD level {} must lie in (0, 1)",
            args.level
        )));
    }
    if args.grid_points < 2 {
        return Err(CliError::input("grid needs at least 2 points"));
    }
    let (summary, draws) = load_run(args.run)?;
    let model = &draws.model;
    let ds = load(args.data)?;
    let split = args.split.unwrap_or(summary.data.split);
    let boundary = data::split_index(ds.len(), split, model.max_lag())?;
    let (quality, baseline, means) = validation_fit(&ds, &draws, boundary)?;

    let u = if model.n_b == 0 { None } else { ds.u() };
    let rows = build_regression_rows(&ds.y, u, model.n_a, model.n_b, boundary..ds.len())?;
    let train = &ds.y[..boundary];
    let y_min = train.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = train.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let grid = predictive_grid(&draws, y_min, y_max, args.grid_points)?;
    let thinned = draws.thinned(args.max_density_draws);
    let densities = predictive_densities(&thinned, &rows, &grid)?;

    let mut csv = String::from("t,mean,hpd\n");
    let mut truncated = 0;
    for (pd, mean) in densities.iter().zip(&means) {
        let region = hpd_region(pd, args.level)?;
        truncated += usize::from(region.truncated);
        let _ = writeln!(
            csv,
            "{},{mean:?},{}",
            pd.t.unwrap_or(0),
            region.to_compact_string()
        );
    }

    let ngrid = noise_grid(&draws, args.grid_points)?;
    let noise = noise_density_estimate(draws.iter(), &ngrid)?;
    let mut ncsv = String::from("grid,density\n");
    for (g, d) in noise.grid.iter().zip(&noise.density) {
        let _ = writeln!(ncsv, "{g:?},{d:?}");
    }

    let metrics = Metrics {
        split,
        boundary,
        validation_points: quality.validation_points,
        mf_barx: quality.barx,
        mf_baseline: quality.baseline,
        baseline,
        hpd_level: args.level,
        hpd_truncated: truncated,
        density_draws: thinned.len(),
        noise_modes: hpd_modes(&noise, args.level)?,
    };
    write_atomic(&args.out.join("predictive.csv"), csv.as_bytes())?;
    write_atomic(&args.out.join("noise_density.csv"), ncsv.as_bytes())?;
    write_json(&args.out.join("metrics.json"), &metrics)?;
    if truncated > 0 {
        eprintln!("warning: {truncated} HPD regions reach the edge of the grid");
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.digits$}"))
}

fn report(run: &Path, pred: Option<&Path>) -> Result<(), CliError> {
    let summary: Summary = read_json(&run.join("summary.json"))?;
    let d = &summary.diagnostics;
    let (mf_barx, mf_base, orders) = match pred {
        Some(p) => {
            let m: Metrics = read_json(&p.join("metrics.json"))?;
            (m.mf_barx, m.mf_baseline, (m.baseline.n_a, m.baseline.n_b))
        }
        None => {
            let q = &summary.model_fit;
            (q.barx, q.baseline, (q.baseline_n_a, q.baseline_n_b))
        }
    };
    let mut out = String::new();
    let _ = writeln!(out, "run                 {}", run.display());
    let _ = writeln!(
        out,
        "draws               {} chains x {}",
        summary.settings.n_chains,
        summary.settings.n_iterations - summary.settings.n_warmup
    );
    let _ = writeln!(out, "MF (BARX)           {mf_barx:.2} %");
    let _ = writeln!(
        out,
        "MF (least squares)  {mf_base:.2} %  (n_a = {}, n_b = {})",
        orders.0, orders.1
    );
    let _ = writeln!(out, "R-hat max           {}", fmt_opt(d.rhat_max, 3));
    let _ = writeln!(out, "ESS min             {}", fmt_opt(d.ess_min, 0));
    let _ = writeln!(
        out,
        "divergences         {} (warmup {})",
        d.divergences, d.warmup_divergences
    );
    let _ = writeln!(out, "mean accept stat    {:.3}", d.mean_accept_stat);
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<6} {:>9} {:>8} {:>9} {:>9} {:>7} {:>7}  nonzero",
        "coef", "mean", "sd", "2.5%", "97.5%", "R-hat", "ESS"
    );
    for c in &summary.coefficients {
        let q = d.quantities.iter().find(|q| q.name == c.name);
        let _ = writeln!(
            out,
            "{:<6} {:>9.4} {:>8.4} {:>9.4} {:>9.4} {:>7} {:>7}  {}",
            c.name,
            c.mean,
            c.sd,
            c.lower,
            c.upper,
            fmt_opt(q.and_then(|q| q.rhat), 3),
            fmt_opt(q.and_then(|q| q.ess), 0),
            if c.excludes_zero { "*" } else { "" }
        );
    }
    print!("{out}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            experiment,
            t,
            seed,
            out,
        } => simulate(experiment, t, seed, &out),
        Command::Fit {
            data,
            config,
            out,
            split,
            seed,
        } => fit(&data, config.as_deref(), &out, split, seed),
        Command::Predict {
            run,
            data,
            split,
            out,
            level,
            grid_points,
            max_density_draws,
        } => predict(PredictArgs {
            run: &run,
            data: &data,
            split,
            out: &out,
            level,
            grid_points,
            max_density_draws,
        }),
        Command::Report { run, pred } => report(&run, pred.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
