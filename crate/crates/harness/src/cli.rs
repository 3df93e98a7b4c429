use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sngm_core::theory::{
    corollary1_plan, corollary2_plan, corollary3_plan, estimate_l, estimate_sigma,
    fit_relaxed_smoothness, BudgetPlan, Regime, SampleBox, SmoothnessParams,
};
use sngm_core::{ParamVector, SeededRng};

use crate::check::{check_bounds, GapSource};
use crate::compare::run_comparison;
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::run::run_experiment;
use crate::setup::{build_problem, initial_point};
use crate::trace::{emit_plot_data, format_float, write_trace, PlotMetric};

#[derive(Debug, Parser)]
#[command(
    name = "sngm",
    about = "Normalized-momentum optimizer experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its trace.
    Run(RunArgs),
    /// Run several experiments at an equal gradient budget.
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Budget every config must match; defaults to the first config's.
        #[arg(long)]
        c: Option<u64>,
    },
    /// Print a batch size / learning rate / iteration plan.
    #[command(subcommand)]
    Plan(PlanCommand),
    /// Estimate problem constants.
    #[command(subcommand)]
    Estimate(EstimateCommand),
    /// Run and compare against a convergence bound.
    #[command(subcommand)]
    Check(CheckCommand),
}

#[derive(Debug, Args)]
struct RunArgs {
    config: PathBuf,
    /// Overrides the config's output path.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Metric for --plot-out (full_loss, batch_loss, grad_norm, momentum_norm, lr, ...).
    #[arg(long, default_value = "full_loss")]
    plot_metric: String,
    #[arg(long)]
    plot_out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum PlanCommand {
    Corollary1 {
        #[arg(long)]
        c: u64,
        #[arg(long, default_value_t = 0.9)]
        beta: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        l: f64,
        #[arg(long)]
        gap: f64,
    },
    Corollary2 {
        #[arg(long)]
        c: u64,
    },
    Corollary3 {
        #[arg(long)]
        c: u64,
        #[arg(long, default_value_t = 0.9)]
        beta: f64,
        #[arg(long)]
        lambda: f64,
    },
}

#[derive(Debug, Args)]
struct DomainArgs {
    config: PathBuf,
    /// Half-width of the sampling box around the starting point.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum EstimateCommand {
    /// Gradient Lipschitz constant from random pairs.
    #[command(name = "L")]
    L {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Gradient noise level at random points.
    Sigma {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, default_value_t = 10)]
        points: usize,
    },
    /// Relaxed-smoothness line fit of Hessian norm against gradient norm.
    Relaxed {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
}

#[derive(Debug, Subcommand)]
enum CheckCommand {
    Bounds { config: PathBuf },
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status: 0 success, 1 usage or validation error, 2 divergence or
/// a violated runtime invariant.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn print_plan(plan: &BudgetPlan) {
    println!(
        "B={} η={} T={}",
        plan.batch,
        format_float(plan.eta),
        plan.steps
    );
    if let Some(b) = plan.guaranteed_bound {
        println!("bound={}", format_float(b));
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Run(args) => run(args),
        Command::Compare { configs, c } => {
            let cfgs = configs
                .iter()
                .map(ExperimentConfig::load)
                .collect::<Result<Vec<_>>>()?;
            let cmp = run_comparison(&cfgs, c)?;
            for w in &cmp.warnings {
                eprintln!("warning: {w}");
            }
            for (cfg, o) in cfgs.iter().zip(&cmp.outcomes) {
                if let Some(path) = &cfg.output {
                    write_trace(&o.records, path)?;
                }
            }
            print!("{}", cmp.render());
            Ok(if cmp.outcomes.iter().any(|o| o.diverged_at.is_some()) {
                2
            } else {
                0
            })
        }
        Command::Plan(p) => {
            let plan = match p {
                PlanCommand::Corollary1 {
                    c,
                    beta,
                    sigma,
                    l,
                    gap,
                } => corollary1_plan(c, beta, &SmoothnessParams::known(l, 0.0, sigma), gap)?,
                PlanCommand::Corollary2 { c } => corollary2_plan(c)?,
                PlanCommand::Corollary3 { c, beta, lambda } => corollary3_plan(c, beta, lambda)?,
            };
            print_plan(&plan);
            Ok(0)
        }
        Command::Estimate(e) => estimate(e),
        Command::Check(CheckCommand::Bounds { config }) => {
            let cfg = ExperimentConfig::load(&config)?;
            let check = check_bounds(&cfg)?;
            let o = &check.outcome;
            if let Some(t) = o.diverged_at {
                println!("diverged at t={t}");
                return Ok(2);
            }
            println!("{}={}", check.lhs_name, format_float(check.lhs));
            let bound = match check.regime {
                Some(Regime::Smooth) => "sngm smooth",
                Some(Regime::Relaxed) => "sngm relaxed",
                None => "msgd",
            };
            let gap_label = match check.gap_source {
                GapSource::Given => "given",
                GapSource::Known => "known",
                GapSource::Optimistic => "optimistic estimate",
            };
            println!(
                "constants: L={} lambda={} sigma={} ({:?}) gap={} ({gap_label})",
                format_float(check.params.l),
                format_float(check.params.lambda),
                format_float(check.params.sigma),
                check.sigma_source,
                format_float(check.gap),
            );
            match &check.rhs {
                Ok(r) => {
                    println!("bound_rhs={} ({bound})", format_float(*r));
                    println!("{}", if check.passed() { "PASS" } else { "FAIL" });
                }
                Err(reason) => println!("bound inapplicable: {reason}"),
            }
            Ok(0)
        }
    }
}

fn run(args: RunArgs) -> Result<i32> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let metric: PlotMetric = args.plot_metric.parse()?;
    let outcome = run_experiment(&cfg)?;
    let output = args.output.or(cfg.output.clone());
    if let Some(path) = &output {
        write_trace(&outcome.records, path)?;
    }
    if let Some(path) = &args.plot_out {
        emit_plot_data(&outcome.records, metric, cfg.display_name(), path)?;
    }
    println!(
        "{}: {} B={} η={} T={} grads={}",
        outcome.name,
        outcome.method,
        outcome.plan.batch,
        format_float(outcome.plan.eta),
        outcome.plan.steps,
        outcome.total_grads
    );
    println!(
        "loss {} -> {}  avg_grad_norm={} min_grad_norm={}",
        format_float(outcome.initial_loss),
        format_float(outcome.final_loss),
        format_float(outcome.report.avg_grad_norm),
        format_float(outcome.report.min_grad_norm),
    );
    if let Some(path) = output {
        println!("trace: {}", path.display());
    }
    match outcome.diverged_at {
        Some(t) => {
            println!("diverged at t={t}");
            Ok(2)
        }
        None => Ok(0),
    }
}

fn estimate(cmd: EstimateCommand) -> Result<i32> {
    let domain_args = match &cmd {
        EstimateCommand::L { domain, .. }
        | EstimateCommand::Sigma { domain, .. }
        | EstimateCommand::Relaxed { domain, .. } => domain,
    };
    if !(domain_args.radius >= 0.0 && domain_args.radius.is_finite()) {
        return Err(HarnessError::Invalid(
            "radius must be finite and nonnegative".into(),
        ));
    }
    let cfg = ExperimentConfig::load(&domain_args.config)?;
    let problem = build_problem(&cfg)?.train;
    let w0 = initial_point(&cfg, problem.as_ref());
    let domain = SampleBox {
        center: w0.as_slice().to_vec(),
        radius: domain_args.radius,
    };
    let mut rng = SeededRng::new(domain_args.seed);
    let known = problem.constants();
    match cmd {
        EstimateCommand::L { trials, .. } => {
            let l = estimate_l(problem.as_ref(), &mut rng, trials, &domain);
            println!(
                "L_estimate={} (lower bound over {trials} pairs)",
                format_float(l)
            );
            if let Some(k) = known.smoothness {
                let kind = if known.smoothness_is_upper_bound {
                    "upper bound"
                } else {
                    "exact"
                };
                println!("L_known={} ({kind})", format_float(k));
            }
        }
        EstimateCommand::Sigma { points, .. } => {
            let mut pts: Vec<ParamVector> = vec![w0.clone()];
            pts.extend((1..points).map(|_| domain.sample(&mut rng)));
            let s = estimate_sigma(problem.as_ref(), &pts);
            println!(
                "sigma_estimate={} (max over {} points)",
                format_float(s),
                pts.len()
            );
        }
        EstimateCommand::Relaxed { points, .. } => {
            if !problem.twice_differentiable() {
                eprintln!(
                    "warning: {} is not twice differentiable everywhere",
                    problem.name()
                );
            }
            let fit = fit_relaxed_smoothness(problem.as_ref(), &mut rng, &domain, points);
            println!(
                "L={} lambda={} points={} nonconverged={}",
                format_float(fit.l),
                format_float(fit.lambda),
                fit.samples.len(),
                fit.nonconverged
            );
            if let Some((l, lam)) = known.relaxed {
                println!("known L={} lambda={}", format_float(l), format_float(lam));
            }
        }
    }
    Ok(0)
}
