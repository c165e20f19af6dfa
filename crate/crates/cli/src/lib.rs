//! The `ppmlab` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ppmlab::analytics::{expected_disruptions_exact, expected_location_exact};
use ppmlab::harness::{
    emit_reports, run_experiment, simulate, write_order_curves, write_order_table,
    ExperimentConfig, PolicyKind, Workers,
};
use ppmlab::oracles::{
    alg1_success_exact, disruption_expectation_bruteforce, enumerate_orderings,
    location_expectation_bruteforce,
};
use ppmlab::policy::{ss_stop_count, swka_stop_count};
use ppmlab::AttackModel;

#[derive(Debug, Parser)]
#[command(
    name = "ppmlab",
    about = "Packet-marking traceback simulator",
    disable_version_flag = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte-Carlo campaign and write table/figure CSVs.
    Simulate(SimulateArgs),
    /// Exact and limiting per-edge order statistics, with a Monte-Carlo overlay.
    OrderStats(OrderStatsArgs),
    /// Exhaustive enumeration of arrival orders for a short path (n <= 8).
    Oracle(OracleArgs),
    /// Print the SWKA and S&S fixed packet counts.
    StopCounts(ModelArgs),
    /// Print the version.
    Version,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Path length in hops.
    #[arg(long)]
    n: u32,
    /// Marking probability; defaults to 1/n.
    #[arg(long)]
    p: Option<f64>,
}

impl ModelArgs {
    fn model(&self) -> Result<AttackModel> {
        let p = self.p.unwrap_or(1.0 / f64::from(self.n.max(1)));
        Ok(AttackModel::new(self.n, p)?)
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// key=value file applied before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Epsilon for the timed policy; repeat for several.
    #[arg(long = "epsilon")]
    epsilons: Vec<f64>,
    /// When the timed policy checks its wait: on-formation or every-packet.
    #[arg(long)]
    timed_check: Option<String>,
    /// basic, epsilon, swka or ss; repeat for several. Default: all.
    #[arg(long = "policy")]
    policies: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, or "auto".
    #[arg(long)]
    workers: Option<String>,
    /// Give each policy its own stream instead of sharing one.
    #[arg(long)]
    independent_streams: bool,
    /// Skip per-edge location and disruption accumulation.
    #[arg(long)]
    no_order_stats: bool,
}

impl SimulateArgs {
    fn to_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if let Some(n) = self.n {
            cfg.n = n;
            if self.p.is_none() && self.config.is_none() {
                cfg.p = 1.0 / f64::from(n.max(1));
            }
        }
        if let Some(p) = self.p {
            cfg.p = p;
        }
        if let Some(it) = self.iterations {
            cfg.iterations = it;
        }
        if let Some(seed) = self.seed {
            cfg.base_seed = seed;
        }
        if !self.epsilons.is_empty() {
            cfg.epsilons = self.epsilons.clone();
        }
        if let Some(check) = &self.timed_check {
            cfg.timed_check = check.parse()?;
        }
        if !self.policies.is_empty() {
            cfg.policies = self
                .policies
                .iter()
                .map(|s| s.parse::<PolicyKind>())
                .collect::<Result<_, _>>()?;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(w) = &self.workers {
            cfg.workers = w.parse()?;
        }
        if self.independent_streams {
            cfg.shared_stream = false;
        }
        if self.no_order_stats {
            cfg.order_stats = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct OrderStatsArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Simulated orderings for the overlay; 0 skips the simulation.
    #[arg(long, default_value_t = 100_000)]
    iterations: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "auto")]
    workers: String,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Print every ordering with its probability.
    #[arg(long)]
    list: bool,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_output(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`cli_main`] with explicit output streams.
pub fn run_with_output<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Simulate(args) => {
            let cfg = args.to_config()?;
            let report = run_experiment(&cfg)?;
            let files = emit_reports(&report, &cfg.output_dir)?;
            writeln!(
                out,
                "{} iterations, n={} p={}",
                report.iterations, cfg.n, cfg.p
            )?;
            writeln!(
                out,
                "{:<22} {:>12} {:>10}",
                "policy", "mean_packets", "success"
            )?;
            for p in &report.policies {
                writeln!(
                    out,
                    "{:<22} {:>12.2} {:>10.4}",
                    p.label, p.mean_packets, p.success_rate
                )?;
            }
            writeln!(
                out,
                "mean full collection time: {:.2}",
                report.mean_full_collection_time
            )?;
            for f in files {
                writeln!(out, "wrote {}", f.display())?;
            }
        }
        Command::OrderStats(args) => {
            let model = args.model.model()?;
            let mut written = vec![write_order_table(&model, &args.out)?];
            let (locations, disruptions) = if args.iterations > 0 {
                let cfg = ExperimentConfig {
                    n: model.n(),
                    p: model.p(),
                    iterations: args.iterations,
                    base_seed: args.seed,
                    policies: Vec::new(),
                    workers: args.workers.parse::<Workers>()?,
                    output_dir: args.out.clone(),
                    ..ExperimentConfig::default()
                };
                let report = simulate(&cfg)?;
                (report.location_means, report.disruption_means)
            } else {
                (None, None)
            };
            written.extend(write_order_curves(
                &model,
                locations.as_deref(),
                disruptions.as_deref(),
                &args.out,
            )?);
            writeln!(
                out,
                "{:>4} {:>12} {:>12}",
                "edge", "E[location]", "E[disrupt]"
            )?;
            for i in 1..=model.n() {
                writeln!(
                    out,
                    "{:>4} {:>12.4} {:>12.4}",
                    i,
                    expected_location_exact(&model, i)?,
                    expected_disruptions_exact(&model, i)?
                )?;
            }
            for f in written {
                writeln!(out, "wrote {}", f.display())?;
            }
        }
        Command::Oracle(args) => {
            let model = args.model.model()?;
            let report = enumerate_orderings(&model).context("enumerating orderings")?;
            let join = |perm: &[u32]| {
                perm.iter()
                    .map(u32::to_string)
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            writeln!(out, "n={} p={}", model.n(), model.p())?;
            writeln!(
                out,
                "orderings: {}  total probability: {:.12}",
                report.per_permutation.len(),
                report.total_probability
            )?;
            writeln!(
                out,
                "alg1 exact success: {:.6}",
                alg1_success_exact(&model)?
            )?;
            writeln!(out, "most likely order: {}", join(report.argmax()))?;
            writeln!(out, "least likely order: {}", join(report.argmin()))?;
            writeln!(
                out,
                "{:>4} {:>14} {:>14} {:>14} {:>14}",
                "edge", "loc_enum", "loc_formula", "disr_enum", "disr_formula"
            )?;
            for i in 1..=model.n() {
                writeln!(
                    out,
                    "{:>4} {:>14.10} {:>14.10} {:>14.10} {:>14.10}",
                    i,
                    location_expectation_bruteforce(&model, i)?,
                    expected_location_exact(&model, i)?,
                    disruption_expectation_bruteforce(&model, i)?,
                    expected_disruptions_exact(&model, i)?
                )?;
            }
            if args.list {
                for (perm, prob) in &report.per_permutation {
                    writeln!(out, "{} {:.12e}", join(perm), prob)?;
                }
            }
        }
        Command::StopCounts(args) => {
            let model = args.model()?;
            writeln!(out, "swka {}", swka_stop_count(&model))?;
            writeln!(out, "ss {}", ss_stop_count(&model))?;
        }
        Command::Version => {
            writeln!(out, "ppmlab {}", env!("CARGO_PKG_VERSION"))?;
        }
    }
    Ok(())
}
