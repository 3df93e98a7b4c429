//! Compares a run's stationarity measure against the matching bound.

use sngm_core::optimizers::Method;
use sngm_core::theory::{
    estimate_sigma, msgd_bound_rhs, sngm_bound_rhs, ConstantSource, Regime, SmoothnessParams,
};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::run::{run_prepared, RunOutcome};
use crate::setup::{known_gap, prepare};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapSource {
    Given,
    Known,
    /// `F(w0)` minus the best full loss observed on the trajectory.
    Optimistic,
}

#[derive(Clone, Debug)]
pub struct BoundCheck {
    /// `avg_grad_norm` for normalized methods, `avg_sq_grad_norm` otherwise.
    pub lhs_name: &'static str,
    pub lhs: f64,
    /// `Err` carries the reason the bound does not apply.
    pub rhs: std::result::Result<f64, String>,
    pub regime: Option<Regime>,
    pub params: SmoothnessParams,
    pub sigma_source: ConstantSource,
    pub gap: f64,
    pub gap_source: GapSource,
    pub outcome: RunOutcome,
}

impl BoundCheck {
    pub fn passed(&self) -> bool {
        matches!(self.rhs, Ok(r) if self.lhs <= r)
    }
}

/// Runs `cfg` recording every step and evaluates the bound with the
/// configured or closed-form constants. `σ` is estimated at the start and
/// end points unless given.
pub fn check_bounds(cfg: &ExperimentConfig) -> Result<BoundCheck> {
    let setup = prepare(cfg)?;
    let outcome = run_prepared(&setup, cfg.seed, 1, cfg.display_name())?;
    let problem = setup.problem.as_ref();
    let constants = problem.constants();
    let b = &cfg.budget;

    let (sigma, sigma_source) = match b.sigma {
        Some(s) => (s, ConstantSource::Known),
        None => (
            estimate_sigma(problem, &[setup.w0.clone(), outcome.final_w.clone()]),
            ConstantSource::Estimated,
        ),
    };
    let (gap, gap_source) = match (b.gap, known_gap(problem, &setup.w0)) {
        (Some(g), _) => (g, GapSource::Given),
        (None, Some(g)) => (g, GapSource::Known),
        (None, None) => {
            let best = outcome
                .records
                .iter()
                .map(|r| r.full_loss)
                .chain([outcome.final_loss])
                .fold(f64::INFINITY, f64::min);
            (
                (outcome.initial_loss - best).max(0.0),
                GapSource::Optimistic,
            )
        }
    };
    let smooth_l = b.smoothness.or(constants.smoothness);
    let relaxed = match (b.lambda, constants.relaxed) {
        (Some(lam), Some((l, _))) => Some((l, lam)),
        (Some(lam), None) => Some((smooth_l.unwrap_or(0.0), lam)),
        (None, r) => r,
    };

    let plan = &setup.plan;
    let steps = outcome.records.len() as u64;
    let method = setup.optimizer.method;
    let beta = match method {
        Method::Sgd | Method::Sngd => 0.0,
        _ => setup.optimizer.beta,
    };
    let (lhs_name, lhs, regime, l, lambda) = match method {
        Method::Sngm | Method::Sngd => {
            let (regime, l, lambda) = match (smooth_l, relaxed) {
                (Some(l), _) => (Regime::Smooth, l, 0.0),
                (None, Some((l, lam))) => (Regime::Relaxed, l, lam),
                (None, None) => {
                    return Err(HarnessError::Config(
                        "bound check needs budget.smoothness or budget.lambda".into(),
                    ))
                }
            };
            (
                "avg_grad_norm",
                outcome.report.avg_grad_norm,
                Some(regime),
                l,
                lambda,
            )
        }
        Method::Msgd | Method::Sgd => {
            let l = smooth_l.ok_or_else(|| {
                HarnessError::Config("bound check needs budget.smoothness".into())
            })?;
            (
                "avg_sq_grad_norm",
                outcome.report.avg_sq_grad_norm,
                None,
                l,
                0.0,
            )
        }
        Method::Lars => {
            return Err(HarnessError::Invalid(
                "no convergence bound is available for lars".into(),
            ))
        }
    };
    let params = SmoothnessParams {
        l,
        lambda,
        sigma,
        source: ConstantSource::Known,
    };
    let rhs = match regime {
        Some(r) => sngm_bound_rhs(&params, beta, plan.eta, plan.batch, steps, gap, r),
        None => msgd_bound_rhs(&params, beta, plan.eta, plan.batch, steps, gap),
    }
    .map_err(|e| e.to_string());
    let mut outcome = outcome;
    outcome.report.bound_rhs = rhs.as_ref().ok().copied();
    Ok(BoundCheck {
        lhs_name,
        lhs,
        rhs,
        regime,
        params,
        sigma_source,
        gap,
        gap_source,
        outcome,
    })
}
