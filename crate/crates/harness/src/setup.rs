//! Turns a parsed config into a problem instance, starting point, plan and
//! optimizer state.

use sngm_core::optimizers::{LarsParams, LrSchedule, Method, OptimizerConfig};
use sngm_core::problems::{
    load_cifar10_binary, load_csv, log_spaced, make_exp_family, make_logistic, make_mlp,
    make_quadratic, Activation, DatasetMatrix, Problem,
};
use sngm_core::theory::{
    corollary1_plan, corollary2_plan, corollary3_plan, estimate_sigma, BudgetPlan, SmoothnessParams,
};
use sngm_core::{ParamVector, SeededRng};

use crate::config::{DataFormat, ExperimentConfig, InitKind, PlanMode, ProblemSpec, ScheduleKind};
use crate::error::{HarnessError, Result};

/// RNG streams derived from the problem seed.
const CONSTRUCTION_STREAM: u64 = 1;
const INIT_STREAM: u64 = 2;

pub struct BuiltProblem {
    pub train: Box<dyn Problem>,
    pub heldout: Option<Box<dyn Problem>>,
}

/// Everything a run needs, fully resolved.
pub struct Setup {
    pub problem: Box<dyn Problem>,
    pub heldout: Option<Box<dyn Problem>>,
    pub w0: ParamVector,
    pub optimizer: OptimizerConfig,
    pub schedule: LrSchedule,
    pub plan: BudgetPlan,
    pub plan_mode: PlanMode,
    pub micro_batch: usize,
    pub steps_per_epoch: u64,
}

fn load_data(
    cfg: &ExperimentConfig,
    path: &std::path::Path,
    format: DataFormat,
    limit: Option<usize>,
) -> Result<DatasetMatrix> {
    let path = cfg.resolve_data(path);
    let data = match format {
        DataFormat::Csv => load_csv(&path)?,
        DataFormat::Cifar10 => load_cifar10_binary(&path, limit)?,
    };
    match (format, limit) {
        (DataFormat::Csv, Some(k)) if k < data.n() => {
            let rows: Vec<usize> = (0..k).collect();
            Ok(data.select(&rows)?)
        }
        _ => Ok(data),
    }
}

fn split(
    data: DatasetMatrix,
    holdout: Option<f64>,
    rng: &mut SeededRng,
) -> Result<(DatasetMatrix, Option<DatasetMatrix>)> {
    match holdout {
        Some(f) => {
            let (train, held) = data.split_holdout(f, rng)?;
            Ok((train, Some(held)))
        }
        None => Ok((data, None)),
    }
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<BuiltProblem> {
    let mut rng = SeededRng::with_stream(cfg.problem.seed(), CONSTRUCTION_STREAM);
    match &cfg.problem {
        ProblemSpec::Quadratic {
            dim,
            n,
            spectrum,
            spectrum_min,
            spectrum_max,
            center_spread,
            ..
        } => {
            let spectrum = match (spectrum, spectrum_min, spectrum_max) {
                (Some(s), None, None) => s.clone(),
                (None, Some(lo), Some(hi)) => log_spaced(*dim, *lo, *hi),
                _ => {
                    return Err(HarnessError::Config(
                        "quadratic needs spectrum or both spectrum_min and spectrum_max".into(),
                    ))
                }
            };
            let q = make_quadratic(*dim, &spectrum, *n, *center_spread, &mut rng)?;
            Ok(BuiltProblem {
                train: Box::new(q),
                heldout: None,
            })
        }
        ProblemSpec::Exp { a } => Ok(BuiltProblem {
            train: Box::new(make_exp_family(*a)?),
            heldout: None,
        }),
        ProblemSpec::Logistic {
            data,
            format,
            limit,
            l2,
            holdout_fraction,
            ..
        } => {
            let d = load_data(cfg, data, *format, *limit)?;
            let (train, held) = split(d, *holdout_fraction, &mut rng)?;
            Ok(BuiltProblem {
                train: Box::new(make_logistic(train, *l2)?),
                heldout: match held {
                    Some(h) => Some(Box::new(make_logistic(h, *l2)?)),
                    None => None,
                },
            })
        }
        ProblemSpec::Mlp {
            data,
            format,
            limit,
            layout,
            activation,
            holdout_fraction,
            ..
        } => {
            let act: Activation = activation.parse()?;
            let d = load_data(cfg, data, *format, *limit)?;
            let (train, held) = split(d, *holdout_fraction, &mut rng)?;
            Ok(BuiltProblem {
                train: Box::new(make_mlp(layout, act, train)?),
                heldout: match held {
                    Some(h) => Some(Box::new(make_mlp(layout, act, h)?)),
                    None => None,
                },
            })
        }
    }
}

pub fn initial_point(cfg: &ExperimentConfig, problem: &dyn Problem) -> ParamVector {
    let mut rng = SeededRng::with_stream(cfg.problem.seed(), INIT_STREAM);
    let dim = problem.dim();
    match cfg.init.kind {
        InitKind::Default => problem.initial_point(&mut rng),
        InitKind::Zeros => problem.shape(ParamVector::zeros(dim)),
        InitKind::Uniform => {
            let s = cfg.init.scale.unwrap_or(1.0);
            problem.shape(ParamVector::new(
                (0..dim).map(|_| rng.uniform_in(-s, s)).collect(),
            ))
        }
        InitKind::Constant => {
            problem.shape(ParamVector::new(vec![cfg.init.value.unwrap_or(0.0); dim]))
        }
    }
}

/// `F(w0) − F*` when the optimum value is known in closed form.
pub fn known_gap(problem: &dyn Problem, w0: &ParamVector) -> Option<f64> {
    problem
        .constants()
        .f_star
        .map(|f| (problem.loss(w0.as_slice()) - f).max(0.0))
}

/// Largest divisor of `batch` that is at most `n`.
pub fn default_micro_batch(batch: usize, n: usize) -> usize {
    if batch <= n {
        return batch;
    }
    (1..=n)
        .rev()
        .find(|m| batch.is_multiple_of(*m))
        .unwrap_or(1)
}

fn plan(cfg: &ExperimentConfig, problem: &dyn Problem, w0: &ParamVector) -> Result<BudgetPlan> {
    let b = &cfg.budget;
    let beta = cfg.optimizer.beta;
    match b.plan {
        PlanMode::Manual => {
            let batch = cfg.optimizer.batch_size.expect("validated");
            let lr = cfg.schedule.lr.expect("validated");
            let c = match (b.c, b.t) {
                (Some(c), None) => c,
                (None, Some(t)) => t * batch as u64,
                _ => unreachable!("validated"),
            };
            Ok(BudgetPlan::new(c, batch, lr))
        }
        PlanMode::Corollary1 => {
            let l = b
                .smoothness
                .or(problem.constants().smoothness)
                .ok_or_else(|| HarnessError::Config("corollary1 needs budget.smoothness".into()))?;
            let sigma = match b.sigma {
                Some(s) => s,
                None => estimate_sigma(problem, std::slice::from_ref(w0)),
            };
            let gap = b
                .gap
                .or_else(|| known_gap(problem, w0))
                .ok_or_else(|| HarnessError::Config("corollary1 needs budget.gap".into()))?;
            Ok(corollary1_plan(
                b.c.expect("validated"),
                beta,
                &SmoothnessParams::known(l, 0.0, sigma),
                gap,
            )?)
        }
        PlanMode::Corollary2 => Ok(corollary2_plan(b.c.expect("validated"))?),
        PlanMode::Corollary3 => {
            let lambda = b
                .lambda
                .or(problem.constants().relaxed.map(|r| r.1))
                .ok_or_else(|| HarnessError::Config("corollary3 needs budget.lambda".into()))?;
            Ok(corollary3_plan(b.c.expect("validated"), beta, lambda)?)
        }
    }
}

fn schedule(cfg: &ExperimentConfig, plan: &BudgetPlan, steps_per_epoch: u64) -> Result<LrSchedule> {
    let s = &cfg.schedule;
    let warmup = s
        .warmup_steps
        .or(s.warmup_epochs.map(|e| e * steps_per_epoch))
        .unwrap_or(0);
    if warmup >= plan.steps && warmup > 0 {
        return Err(HarnessError::Config(format!(
            "warmup of {warmup} steps leaves nothing of T={}",
            plan.steps
        )));
    }
    let inner = match s.kind {
        ScheduleKind::Constant => LrSchedule::constant(plan.eta)?,
        ScheduleKind::Poly => LrSchedule::poly_power(plan.eta, plan.steps - warmup, s.power)?,
        ScheduleKind::Step => LrSchedule::step_decay(
            plan.eta,
            s.milestones.iter().map(|e| e * steps_per_epoch).collect(),
            s.factor,
        )?,
    };
    if warmup == 0 {
        return Ok(inner);
    }
    Ok(LrSchedule::warmup(
        warmup,
        s.warmup_from.expect("validated"),
        inner,
    )?)
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Setup> {
    cfg.validate()?;
    let built = build_problem(cfg)?;
    let problem = built.train;
    let w0 = initial_point(cfg, problem.as_ref());
    let plan = plan(cfg, problem.as_ref(), &w0)?;
    if plan.steps == 0 {
        return Err(HarnessError::EmptyBudget);
    }
    let n = problem.n_samples();
    let micro_batch = match cfg.optimizer.micro_batch {
        Some(m) if m > n => {
            return Err(HarnessError::Config(format!(
                "micro_batch {m} exceeds the {n} available samples"
            )))
        }
        Some(m) if plan.batch % m != 0 => {
            return Err(HarnessError::Config(format!(
                "micro_batch {m} must divide batch size {}",
                plan.batch
            )))
        }
        Some(m) => m,
        None => default_micro_batch(plan.batch, n),
    };
    let steps_per_epoch = n.div_ceil(plan.batch).max(1) as u64;
    let method: Method = cfg.optimizer.method.parse()?;
    let defaults = LarsParams::default();
    let optimizer = OptimizerConfig {
        method,
        beta: cfg.optimizer.beta,
        weight_decay: cfg.optimizer.weight_decay,
        batch_size: plan.batch,
        decay_before_norm: cfg.optimizer.decay_before_norm,
        lars: LarsParams {
            trust: cfg.optimizer.trust.unwrap_or(defaults.trust),
            eps: cfg.optimizer.lars_eps.unwrap_or(defaults.eps),
        },
    };
    optimizer.validate()?;
    let schedule = schedule(cfg, &plan, steps_per_epoch)?;
    Ok(Setup {
        problem,
        heldout: built.heldout,
        w0,
        optimizer,
        schedule,
        plan,
        plan_mode: cfg.budget.plan,
        micro_batch,
        steps_per_epoch,
    })
}
