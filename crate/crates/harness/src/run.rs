use serde::Serialize;
use sngm_core::optimizers::{GradAccumulator, Method, OptimizerState};
use sngm_core::problems::Problem;
use sngm_core::theory::{BudgetPlan, StationarityReport};
use sngm_core::{Error as CoreError, ParamVector, SeededRng};

use crate::config::{ExperimentConfig, PlanMode};
use crate::error::{HarnessError, Result};
use crate::setup::{prepare, Setup};

/// One row of the trace. Full-batch metrics are evaluated at `w_t` before
/// the update; `momentum_norm` is read after it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub t: u64,
    pub epoch: u64,
    pub lr: f64,
    pub batch_loss: f64,
    pub full_loss: f64,
    pub grad_norm: f64,
    pub momentum_norm: f64,
    /// `(t+1)·B`.
    pub cum_grads: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heldout_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heldout_accuracy: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub name: String,
    pub method: Method,
    pub plan_mode: PlanMode,
    pub plan: BudgetPlan,
    pub micro_batch: usize,
    pub final_w: ParamVector,
    pub records: Vec<TrajectoryRecord>,
    /// Over the recorded iterates.
    pub report: StationarityReport,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Per-sample gradient evaluations spent on training steps.
    pub total_grads: u64,
    pub diverged_at: Option<u64>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let setup = prepare(cfg)?;
    run_prepared(&setup, cfg.seed, cfg.record_every, cfg.display_name())
}

fn heldout_metrics(heldout: Option<&dyn Problem>, w: &[f64]) -> (Option<f64>, Option<f64>) {
    let Some(h) = heldout else {
        return (None, None);
    };
    let n = h.n_samples();
    let correct: Option<usize> = (0..n)
        .map(|i| h.sample_correct(i, w).map(usize::from))
        .sum();
    (Some(h.loss(w)), correct.map(|c| c as f64 / n as f64))
}

/// Runs `setup.plan.steps` iterations. Batch sampling uses stream 0 of `seed`.
pub fn run_prepared(setup: &Setup, seed: u64, record_every: u64, name: &str) -> Result<RunOutcome> {
    let problem = setup.problem.as_ref();
    let heldout = setup.heldout.as_deref();
    let plan = &setup.plan;
    let (n, batch, m) = (problem.n_samples(), plan.batch, setup.micro_batch);
    let steps = plan.steps;
    let normalized = setup.optimizer.method.is_normalized();

    let mut rng = SeededRng::new(seed);
    let mut opt = OptimizerState::new(
        setup.optimizer.clone(),
        setup.schedule.clone(),
        problem.dim(),
    )?;
    let mut acc = GradAccumulator::new(m, batch)?;
    let mut w = setup.w0.clone();
    let initial_loss = problem.loss(w.as_slice());
    let mut records = Vec::new();
    let mut diverged_at = None;
    let mut steps_done = 0;

    for t in 0..steps {
        let recording = t == 0 || t % record_every == 0 || t + 1 == steps;
        let mut batch_loss = 0.0;
        let mut g = None;
        for _ in 0..batch / m {
            let idx = rng.sample_indices(n, m)?;
            if recording {
                batch_loss += problem.batch_loss(&idx, w.as_slice()) / (batch / m) as f64;
            }
            g = acc.accumulate(&problem.batch_gradient(&idx, w.as_slice()))?;
        }
        let g = g.expect("accumulator emits after B/m micro-batches");
        let (full_loss, grad_norm) = if recording {
            (
                problem.loss(w.as_slice()),
                problem.full_gradient(w.as_slice()).norm(),
            )
        } else {
            (f64::NAN, f64::NAN)
        };
        let (heldout_loss, heldout_accuracy) = if recording {
            heldout_metrics(heldout, w.as_slice())
        } else {
            (None, None)
        };
        let lr = opt.current_lr()?;
        let mut diverged = recording && !full_loss.is_finite();
        let momentum_norm = if diverged {
            opt.momentum().norm()
        } else {
            match opt.step(&mut w, &g) {
                Ok(r) => {
                    steps_done += 1;
                    if normalized && r.momentum_norm > opt.momentum_bound() + 1e-9 {
                        return Err(HarnessError::MomentumBound {
                            t,
                            norm: r.momentum_norm,
                            bound: opt.momentum_bound(),
                        });
                    }
                    diverged = !w.is_finite();
                    r.momentum_norm
                }
                Err(CoreError::NonFinite { .. }) => {
                    diverged = true;
                    opt.momentum().norm()
                }
                Err(e) => return Err(e.into()),
            }
        };
        if recording || diverged {
            let (full_loss, grad_norm) = if recording {
                (full_loss, grad_norm)
            } else {
                (
                    problem.loss(w.as_slice()),
                    problem.full_gradient(w.as_slice()).norm(),
                )
            };
            records.push(TrajectoryRecord {
                t,
                epoch: t / setup.steps_per_epoch,
                lr,
                batch_loss,
                full_loss,
                grad_norm,
                momentum_norm,
                cum_grads: (t + 1) * batch as u64,
                heldout_loss,
                heldout_accuracy,
            });
        }
        if diverged {
            diverged_at = Some(t);
            break;
        }
    }

    let norms: Vec<f64> = records.iter().map(|r| r.grad_norm).collect();
    let report = StationarityReport::from_grad_norms(&norms).ok_or(HarnessError::EmptyBudget)?;
    Ok(RunOutcome {
        name: name.to_string(),
        method: setup.optimizer.method,
        plan_mode: setup.plan_mode,
        plan: plan.clone(),
        micro_batch: m,
        final_loss: problem.loss(w.as_slice()),
        final_w: w,
        records,
        report,
        initial_loss,
        total_grads: steps_done * batch as u64,
        diverged_at,
    })
}
