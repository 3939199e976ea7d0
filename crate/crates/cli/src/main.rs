use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use oce_core::bounds::{
    cvar_excess_risk_bracket, rademacher_mc, BoundInputs, BoundReport, FiniteClassLosses,
};
use oce_core::influence::{
    closed_form_influence, empirical_influence, influence_bound, ContaminationQuery, DistSummary,
    DEFAULT_EPSILON,
};
use oce_core::trainer::{stylized_experiment, train, ExperimentConfig};
use oce_core::{inverted_oce_empirical, oce_empirical, Disutility, LossVector};

mod input;

use input::{create_output, read_loss_matrix, read_losses, InputError};

/// Optimized certainty equivalent risks from the command line.
#[derive(Debug, Parser)]
#[command(name = "oce", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the OCE and inverted OCE of a loss sample.
    Eval {
        /// Disutility, e.g. `cvar:0.5` or `entropic:1`.
        #[arg(long)]
        phi: String,
        /// CSV with one loss per line and an optional `loss` header.
        #[arg(long)]
        losses: PathBuf,
        /// Loss bound M [default: largest loss]
        #[arg(long)]
        bound_m: Option<f64>,
        /// Also write the result as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Influence of a contaminating loss on the inverted OCE.
    Influence {
        /// Disutility, e.g. `entropic:1`.
        #[arg(long)]
        phi: String,
        /// CSV with one loss per line and an optional `loss` header.
        #[arg(long)]
        losses: PathBuf,
        /// Loss of the contaminating point.
        #[arg(long)]
        z_loss: f64,
        /// Contamination mass.
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generalization bounds from a loss matrix (one hypothesis per row).
    Bounds {
        /// CSV of losses, rows are hypotheses and columns are samples.
        #[arg(long)]
        loss_matrix: PathBuf,
        /// Lipschitz constant of the disutility on [-M, M].
        #[arg(long)]
        lip: f64,
        /// Failure probability.
        #[arg(long)]
        delta: f64,
        /// Monte Carlo draws for the Rademacher average.
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        /// Seed for the sign draws.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Loss bound M [default: largest loss]
        #[arg(long)]
        bound_m: Option<f64>,
        /// Sample size n [default: number of columns]
        #[arg(long)]
        n: Option<u64>,
        /// Disutility used to pick the inverted-OCE minimizer row [default: identity]
        #[arg(long)]
        phi: Option<String>,
        /// Expected loss of the comparator [default: smallest row mean]
        #[arg(long)]
        r_avg: Option<f64>,
        /// Loss deviation of the comparator [default: deviation of the smallest-mean row]
        #[arg(long)]
        sigma_avg: Option<f64>,
        /// Empirical loss deviation of the inverted-OCE minimizer [default: from the matrix]
        #[arg(long)]
        sigma_eim: Option<f64>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Probability that empirical CVaR picks the worse of two hypotheses.
    Bracket {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        alpha: f64,
        /// Also write the result as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a logistic model on synthetic data from a JSON config.
    Train {
        /// JSON file with `task` and `train` sections.
        #[arg(long)]
        config: PathBuf,
        /// Trajectory CSV, one row per epoch.
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate the two-hypothesis CVaR experiment.
    Stylized {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        /// Also write the result as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_phi(flag: &str, s: &str) -> Result<Disutility> {
    s.parse().with_context(|| format!("invalid {flag} {s:?}"))
}

fn loss_vector(values: Vec<f64>, bound_m: Option<f64>) -> Result<LossVector> {
    Ok(match bound_m {
        Some(m) => LossVector::new(values, m).context("invalid --bound-m")?,
        None => LossVector::with_observed_bound(values)?,
    })
}

fn na(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn write_csv(file: Option<File>, header: &str, row: &str) -> Result<()> {
    let text = format!("{header}\n{row}\n");
    match file {
        Some(mut f) => f.write_all(text.as_bytes()).context("writing output")?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn eval(phi: &str, losses: &Path, bound_m: Option<f64>, out: Option<&Path>) -> Result<()> {
    let spec = parse_phi("--phi", phi)?;
    let out = create_output(out)?;
    let lv = loss_vector(read_losses(losses)?, bound_m)?;
    let oce = oce_empirical(&lv, &spec)?;
    let roce = inverted_oce_empirical(&lv, &spec)?;
    println!(
        "oce={} lambda_star={} roce={}",
        oce.value, oce.lambda_star, roce.value
    );
    if let Some(f) = out {
        write_csv(
            Some(f),
            "oce,lambda_star,roce,roce_lambda_star",
            &format!(
                "{},{},{},{}",
                oce.value, oce.lambda_star, roce.value, roce.lambda_star
            ),
        )?;
    }
    Ok(())
}

fn influence(
    phi: &str,
    losses: &Path,
    z_loss: f64,
    epsilon: f64,
    out: Option<&Path>,
) -> Result<()> {
    let spec = parse_phi("--phi", phi)?;
    let query = ContaminationQuery::new(z_loss, epsilon)?;
    let out = create_output(out)?;
    let lv = LossVector::with_observed_bound(read_losses(losses)?)?;
    let empirical = empirical_influence(&lv, &spec, &query)?;
    let dist = DistSummary::from_losses(&lv, &spec);
    let closed = closed_form_influence(&spec, &dist, z_loss).ok();
    let bound = influence_bound(&spec, &dist).ok();
    write_csv(
        out,
        "empirical,closed_form,upper_bound",
        &format!("{empirical},{},{}", na(closed), na(bound)),
    )
}

/// Plug-in comparator statistics from the loss matrix: the smallest-mean row
/// stands in for the expected-loss minimizer, and the row with the largest
/// empirical inverted OCE under `spec` for the inverted-OCE minimizer.
fn plug_in(rows: &[Vec<f64>], m: f64, spec: &Disutility) -> Result<(f64, f64, f64)> {
    let moments = |row: &[f64]| {
        let n = row.len() as f64;
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    let (r_avg, sigma_avg) = rows
        .iter()
        .map(|r| moments(r))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("nonempty matrix");
    let mut best = (f64::INFINITY, 0.0);
    for row in rows {
        let risk = inverted_oce_empirical(&LossVector::new(row.clone(), m)?, spec)?.value;
        if risk < best.0 {
            best = (risk, moments(row).1);
        }
    }
    Ok((r_avg, sigma_avg, best.1))
}

struct BoundsArgs {
    loss_matrix: PathBuf,
    lip: f64,
    delta: f64,
    draws: usize,
    seed: u64,
    bound_m: Option<f64>,
    n: Option<u64>,
    phi: Option<String>,
    r_avg: Option<f64>,
    sigma_avg: Option<f64>,
    sigma_eim: Option<f64>,
    out: Option<PathBuf>,
}

fn bounds(a: BoundsArgs) -> Result<()> {
    let spec = match &a.phi {
        Some(s) => parse_phi("--phi", s)?,
        None => Disutility::Identity,
    };
    let out = create_output(a.out.as_deref())?;
    let rows = read_loss_matrix(&a.loss_matrix)?;
    let class = match a.bound_m {
        Some(m) => FiniteClassLosses::new(rows, m).context("invalid --bound-m")?,
        None => FiniteClassLosses::with_observed_bound(rows)?,
    };
    let m = class.bound_m();
    let rad = rademacher_mc(&class, a.draws, a.seed)?;
    let (r_avg, sigma_avg, sigma_eim) = plug_in(class.rows(), m, &spec)?;
    let n = a.n.unwrap_or(class.samples() as u64);
    let inputs = BoundInputs::new(a.lip, rad.estimate, m, n, a.delta)?
        .with_comparator(a.r_avg.unwrap_or(r_avg), a.sigma_avg.unwrap_or(sigma_avg))
        .with_eim_deviation(a.sigma_eim.unwrap_or(sigma_eim));
    let report = BoundReport::evaluate(&inputs)?;
    eprintln!(
        "rad={} (+/- {}) over {} draws",
        rad.estimate, rad.mc_std_error, a.draws
    );
    write_csv(
        out,
        "uniform_conv,excess_oce,naive_expected_loss,eom_expected_loss,eim_expected_loss,rad,mc_std_error",
        &format!(
            "{},{},{},{},{},{},{}",
            report.uniform_conv,
            report.excess_oce,
            report.naive_expected_loss,
            report.eom_expected_loss,
            report.eim_expected_loss,
            rad.estimate,
            rad.mc_std_error
        ),
    )
}

fn bracket(n: u64, epsilon: f64, alpha: f64, out: Option<&Path>) -> Result<()> {
    let out = create_output(out)?;
    let b = cvar_excess_risk_bracket(n, epsilon, alpha)?;
    println!("lower={} exact={} upper={}", b.lower, b.exact, b.upper);
    if let Some(f) = out {
        write_csv(
            Some(f),
            "lower,exact,upper",
            &format!("{},{},{}", b.lower, b.exact, b.upper),
        )?;
    }
    Ok(())
}

fn run_train(config: &Path, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| InputError(format!("cannot read {}: {e}", config.display())))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| InputError(format!("{}: {e}", config.display())))?;
    let mut file = create_output(Some(out))?.expect("path given");
    let traj = train(&cfg.task, &cfg.train)?;
    file.write_all(traj.to_csv().as_bytes())
        .context("writing trajectory")?;
    let last = traj.rows.last().expect("epoch 0 is always recorded");
    println!(
        "epoch {}: objective={} train_mean={} test_mean={} test_cvar({})={}",
        last.epoch,
        last.objective_value,
        last.train_mean,
        last.test_mean,
        traj.eval_alpha,
        last.test_cvar
    );
    Ok(())
}

fn stylized(
    n: usize,
    epsilon: f64,
    alpha: f64,
    trials: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let out = create_output(out)?;
    let freq = stylized_experiment(n, epsilon, alpha, trials, seed)?;
    let exact = cvar_excess_risk_bracket(n as u64, epsilon, alpha)
        .map(|b| b.exact)
        .ok();
    println!("frequency={freq} exact={} trials={trials}", na(exact));
    if let Some(f) = out {
        write_csv(
            Some(f),
            "frequency,exact,trials",
            &format!("{freq},{},{trials}", na(exact)),
        )?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval {
            phi,
            losses,
            bound_m,
            out,
        } => eval(&phi, &losses, bound_m, out.as_deref()),
        Command::Influence {
            phi,
            losses,
            z_loss,
            epsilon,
            out,
        } => influence(&phi, &losses, z_loss, epsilon, out.as_deref()),
        Command::Bounds {
            loss_matrix,
            lip,
            delta,
            draws,
            seed,
            bound_m,
            n,
            phi,
            r_avg,
            sigma_avg,
            sigma_eim,
            out,
        } => bounds(BoundsArgs {
            loss_matrix,
            lip,
            delta,
            draws,
            seed,
            bound_m,
            n,
            phi,
            r_avg,
            sigma_avg,
            sigma_eim,
            out,
        }),
        Command::Bracket {
            n,
            epsilon,
            alpha,
            out,
        } => bracket(n, epsilon, alpha, out.as_deref()),
        Command::Train { config, out } => run_train(&config, &out),
        Command::Stylized {
            n,
            epsilon,
            alpha,
            trials,
            seed,
            out,
        } => stylized(n, epsilon, alpha, trials, seed, out.as_deref()),
    }
}

/// 2 for unreadable or malformed input and failed writes, 1 otherwise.
fn exit_status(err: &anyhow::Error) -> u8 {
    let io_like = err.chain().any(|e| {
        e.is::<InputError>()
            || e.is::<io::Error>()
            || e.is::<csv::Error>()
            || e.is::<serde_json::Error>()
    });
    if io_like {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_status(&e))
        }
    }
}
