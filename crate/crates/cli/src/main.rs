//! Command-line front end for the densest K-subgraph laboratory.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use dkslab::asymptotics::{curve_increment, estimates, first_moment_curve, gaussian_first_moment_curve, FormulaValue};
use dkslab::bounds::{
    binomial_lower_tail, gaussian_tail, ln_rademacher_tail, normal_sf, rademacher_gaussian_domination,
    second_moment_report,
};
use dkslab::disorder::{plant_clique, sample_disorder, DisorderMatrix, DistributionSpec};
use dkslab::harness::{format_float, run_sweep, summarize, ExperimentConfig, ExperimentKind, Table, WORKERS_ENV};
use dkslab::lindeberg::{
    aggregated_multiplicity_check, default_beta, gibbs_sum_identity, interpolation_path, universality_gap,
    InterpolationPlan,
};
use dkslab::ogp::dip_locator;
use dkslab::solver::{psi_exact, psi_overlap, psi_profile, SolverConfig};
use dkslab::LabError;
use serde_json::json;

#[derive(Parser)]
#[command(name = "dkslab", version, about = "Densest K-subgraph experiments on weighted random graphs")]
struct Cli {
    /// Worker threads for parallel trials.
    #[arg(long, global = true, env = WORKERS_ENV)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Instance {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "gaussian")]
    dist: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a disorder matrix and write it as JSON.
    Sample {
        #[command(flatten)]
        instance: Instance,
        /// Plant a clique on vertices 0..K.
        #[arg(long)]
        plant: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact densest K-subgraph, optionally at a fixed overlap with the plant.
    Solve {
        /// Matrix JSON written by `sample`.
        #[arg(long, conflicts_with_all = ["n", "dist", "seed"])]
        input: Option<PathBuf>,
        #[arg(long, required_unless_present = "input")]
        n: Option<usize>,
        #[arg(long)]
        dist: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        overlap: Option<usize>,
        /// Solve every overlap and print the profile.
        #[arg(long, conflicts_with = "overlap")]
        profile: bool,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// First moment curve as CSV: z, gamma, gaussian_gamma, increment.
    Curve {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also report the dip interval.
        #[arg(long)]
        dip: bool,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = dkslab::ogp::DEFAULT_C0)]
        c0: f64,
    },
    /// V, L, U and the leading asymptotic for (n, K).
    Formulas {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
    },
    /// First and second moment report for U_γ.
    Moments {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value = "rademacher")]
        dist: String,
    },
    /// Quick self-check of the tail bounds against exact tails.
    BoundsCheck,
    /// Overlap gap experiment; writes the profile CSV and JSON summary.
    Ogp(SweepArgs),
    /// Smooth-max interpolation checks and the paired universality gap.
    #[command(subcommand)]
    Lindeberg(LindebergCommand),
    /// Seeded sweep from a JSON config.
    Sweep(SweepArgs),
    /// Summary statistics of a results CSV.
    Summarize {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_summary: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LindebergCommand {
    /// f_β along the edge-by-edge interpolation path.
    Path {
        #[command(flatten)]
        instance: Instance,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Gibbs sum identity, plus the all-orders multiplicity check when small.
    Identity {
        #[command(flatten)]
        instance: Instance,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Paired Monte Carlo estimate of |E Ψ(Gaussian) - E Ψ(target)|.
    Gap {
        #[command(flatten)]
        instance: Instance,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

/// Exit status 2 for bad input, 1 for everything else.
fn usage_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(
            c.downcast_ref::<LabError>(),
            Some(
                LabError::InvalidArgument(_) | LabError::InvalidDimension(_) | LabError::Json(_) | LabError::Schema(_)
            )
        ) || c.downcast_ref::<serde_json::Error>().is_some()
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if usage_error(&e) { 2 } else { 1 })
        }
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn print_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    emit(None, &serde_json::to_string_pretty(value)?)
}

fn draw(instance: &Instance) -> anyhow::Result<DisorderMatrix> {
    Ok(sample_disorder(instance.n, &DistributionSpec::from_name(&instance.dist)?, instance.seed)?)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Sample { instance, plant, mu, out } => {
            let mut m = draw(&instance)?;
            if let Some(k) = plant {
                m = plant_clique(&m, k, mu)?;
            }
            let mut buf = Vec::new();
            m.write_json(&mut buf)?;
            emit(out.as_ref(), std::str::from_utf8(&buf)?)?;
        }
        Command::Solve { input, n, dist, seed, k, overlap, profile, budget } => {
            let m = match (input, n) {
                (Some(path), _) => DisorderMatrix::read_json(BufReader::new(
                    File::open(&path).with_context(|| format!("opening {}", path.display()))?,
                ))?,
                (None, Some(n)) => {
                    draw(&Instance { n, dist: dist.unwrap_or_else(|| "gaussian".into()), seed: seed.unwrap_or(0) })?
                }
                (None, None) => bail!(LabError::InvalidArgument("give --input or --n".into())),
            };
            let cfg = SolverConfig { node_budget: budget, ..SolverConfig::default() };
            if profile {
                print_json(&psi_profile(&m, k, &cfg)?)?;
            } else if let Some(z) = overlap {
                print_json(&psi_overlap(&m, k, z, &cfg)?)?;
            } else {
                print_json(&psi_exact(&m, k, &cfg)?)?;
            }
        }
        Command::Curve { n, k, out, dip, epsilon, c0 } => {
            let mut table = Table::new(&["z", "gamma", "gaussian_gamma", "increment"]);
            let cell = |v: dkslab::Result<FormulaValue>| match v.ok().and_then(FormulaValue::value) {
                Some(x) => dkslab::harness::Cell::Float(x),
                None => dkslab::harness::Cell::Missing,
            };
            for z in k * k / n..=k {
                table.push(vec![
                    dkslab::harness::Cell::Int(z as i64),
                    cell(first_moment_curve(n, k, z)),
                    cell(gaussian_first_moment_curve(n, k, z)),
                    cell(curve_increment(n, k, z)),
                ]);
            }
            emit(out.as_ref(), std::str::from_utf8(&table.to_csv_bytes()?)?)?;
            if dip {
                let report = dip_locator(n, k, epsilon, c0)?;
                eprintln!("{}", serde_json::to_string_pretty(&report)?);
            }
        }
        Command::Formulas { n, k } => print_json(&estimates(n, k)?)?,
        Command::Moments { n, k, gamma, dist } => {
            print_json(&second_moment_report(n, k, gamma, &DistributionSpec::from_name(&dist)?)?)?
        }
        Command::BoundsCheck => return bounds_check(),
        Command::Ogp(args) => return sweep(args, cli.threads, Some(ExperimentKind::Ogp)),
        Command::Sweep(args) => return sweep(args, cli.threads, None),
        Command::Lindeberg(cmd) => lindeberg(cmd, cli.threads)?,
        Command::Summarize { path, out } => {
            let summary = summarize(&path)?;
            emit(out.as_ref(), &serde_json::to_string_pretty(&summary)?)?;
        }
    }
    Ok(true)
}

fn sweep(args: SweepArgs, threads: Option<usize>, kind: Option<ExperimentKind>) -> anyhow::Result<bool> {
    let mut config =
        ExperimentConfig::read(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    if let Some(kind) = kind {
        if config.experiment != kind {
            bail!(LabError::InvalidArgument(format!(
                "config experiment is {:?}, expected {kind:?}",
                config.experiment
            )));
        }
    }
    config.threads = threads.or(config.threads);
    config.output_csv = args.out_csv.or(config.output_csv);
    config.output_summary = args.out_summary.or(config.output_summary);
    let out = run_sweep(&config)?;
    if config.output_csv.is_none() {
        emit(None, std::str::from_utf8(&out.table.to_csv_bytes()?)?)?;
    }
    if config.output_summary.is_none() {
        eprintln!("{}", serde_json::to_string_pretty(&out.summary)?);
    }
    Ok(out.summary.failed_trials == 0)
}

fn lindeberg(cmd: LindebergCommand, threads: Option<usize>) -> anyhow::Result<()> {
    let beta_for = |beta: Option<f64>, n: usize, k: usize| beta.unwrap_or_else(|| default_beta(n as u64, k as u64));
    match cmd {
        LindebergCommand::Path { instance, k, beta } => {
            let beta = beta_for(beta, instance.n, k);
            let plan =
                InterpolationPlan::sample(instance.n, &DistributionSpec::from_name(&instance.dist)?, instance.seed)?;
            let path = interpolation_path(&plan, k, beta)?;
            print_json(&json!({
                "n": instance.n,
                "k": k,
                "dist": instance.dist,
                "seed": instance.seed,
                "beta": beta,
                "path": path,
            }))?;
        }
        LindebergCommand::Identity { instance, k, beta } => {
            let beta = beta_for(beta, instance.n, k);
            let m = draw(&instance)?;
            let residual = gibbs_sum_identity(&m, k, beta)?;
            let plan =
                InterpolationPlan::sample(instance.n, &DistributionSpec::from_name(&instance.dist)?, instance.seed)?;
            let multiplicity =
                aggregated_multiplicity_check(instance.n, k, beta, &plan.x_weights, &plan.y_weights).ok();
            print_json(&json!({
                "n": instance.n,
                "k": k,
                "dist": instance.dist,
                "seed": instance.seed,
                "beta": beta,
                "gibbs_residual": residual,
                "multiplicity": multiplicity,
            }))?;
        }
        LindebergCommand::Gap { instance, k, beta, trials } => {
            let beta = beta_for(beta, instance.n, k);
            let dist = DistributionSpec::from_name(&instance.dist)?;
            let gap = dkslab::harness::with_pool(threads, || {
                universality_gap(instance.n, k, beta, &dist, trials, instance.seed)
            })??;
            let mut value = serde_json::to_value(&gap)?;
            value["dist"] = json!(instance.dist);
            print_json(&value)?;
        }
    }
    Ok(())
}

/// Mills bounds, Gaussian domination of Rademacher tails and the binomial
/// lower tail, each against an exact value on a fixed grid.
fn bounds_check() -> anyhow::Result<bool> {
    let mut rows = Vec::new();
    let mut mills = 0;
    for i in 1..=60 {
        let x = 0.1 * i as f64;
        let b = gaussian_tail(x)?;
        let sf = normal_sf(x);
        mills += usize::from(!(b.lower <= sf && sf <= b.upper));
    }
    rows.push(json!({ "check": "mills", "cases": 60, "violations": mills }));
    let (mut dom, mut dom_cases) = (0, 0);
    for n in [1u64, 2, 5, 10, 50, 200, 1000] {
        for i in 0..=40 {
            let x = 1.0 + 0.1 * i as f64;
            dom_cases += 1;
            let exact = ln_rademacher_tail(n, x * (n as f64).sqrt()).exp();
            dom += usize::from(exact > rademacher_gaussian_domination(n, x)?);
        }
    }
    rows.push(json!({ "check": "rademacher_domination", "cases": dom_cases, "violations": dom }));
    let (mut low, mut low_cases) = (0, 0);
    for n in [10u64, 20, 50, 100, 400] {
        for i in 1..=30 {
            let gamma = 0.1 * i as f64;
            let Ok(b) = binomial_lower_tail(n, gamma) else { continue };
            low_cases += 1;
            let exact = ln_rademacher_tail(n, gamma * (n as f64).sqrt()).exp();
            low += usize::from(b.kl_exact > exact);
        }
    }
    rows.push(json!({ "check": "binomial_lower_tail", "cases": low_cases, "violations": low }));
    let total: u64 = rows.iter().map(|r| r["violations"].as_u64().unwrap_or(0)).sum();
    for r in &rows {
        println!("{},{},{}", r["check"].as_str().unwrap_or(""), r["cases"], r["violations"]);
    }
    eprintln!("total violations: {}", format_float(total as f64));
    Ok(total == 0)
}
