//! Right-hand sides of the convergence bounds and the batch/learning-rate
//! prescriptions derived from them.
//!
//! MSGD's bound controls the average of SQUARED gradient norms; the SNGM
//! bounds control the average of un-squared norms. Callers must compare
//! against the matching column of a [`StationarityReport`](super::StationarityReport).

use crate::error::{Error, Result};

/// Where a constant came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstantSource {
    /// Closed form for the problem instance.
    Known,
    /// Empirical estimate; for `L` and `σ` this is a lower bound on the true
    /// supremum and never a certificate.
    Estimated,
}

/// Smoothness `L`, relaxed-smoothness slope `λ` and gradient-noise level `σ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothnessParams {
    pub l: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub source: ConstantSource,
}

impl SmoothnessParams {
    pub fn known(l: f64, lambda: f64, sigma: f64) -> Self {
        Self {
            l,
            lambda,
            sigma,
            source: ConstantSource::Known,
        }
    }

    pub fn kappa(beta: f64) -> f64 {
        kappa(beta)
    }
}

/// `κ = (1+β)/(1−β)²`.
pub fn kappa(beta: f64) -> f64 {
    (1.0 + beta) / ((1.0 - beta) * (1.0 - beta))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `L`-smooth objective.
    Smooth,
    /// `(L, λ)`-relaxed-smooth objective; needs `η ≤ 1/(8κλ)`.
    Relaxed,
}

fn check_common(beta: f64, eta: f64, batch: f64, steps: f64, gap: f64) -> Result<()> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!(
            "beta must lie in [0,1), got {beta}"
        )));
    }
    if !(eta > 0.0 && batch > 0.0 && steps > 0.0) {
        return Err(Error::InvalidArgument(
            "eta, batch size and iteration count must be positive".into(),
        ));
    }
    if !(gap >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gap must be nonnegative, got {gap}"
        )));
    }
    Ok(())
}

/// Largest learning rate for which the MSGD bound is valid,
/// `(1−β)²/((1+β)L)`.
pub fn msgd_max_eta(beta: f64, l: f64) -> f64 {
    (1.0 - beta) * (1.0 - beta) / ((1.0 + beta) * l)
}

/// MSGD bound on `(1/T) Σ E‖∇F(w_t)‖²`:
/// `2(1−β)·gap/(ηT) + Lησ²/((1−β)²B) + 4L²η²σ²/(1−β)²`.
pub fn msgd_bound_rhs(
    params: &SmoothnessParams,
    beta: f64,
    eta: f64,
    batch: usize,
    steps: u64,
    gap: f64,
) -> Result<f64> {
    let (b, t) = (batch as f64, steps as f64);
    check_common(beta, eta, b, t, gap)?;
    let max_eta = msgd_max_eta(beta, params.l);
    if eta > max_eta {
        return Err(Error::MsgdBoundInapplicable { eta, max_eta });
    }
    let (l, s2) = (params.l, params.sigma * params.sigma);
    let omb2 = (1.0 - beta) * (1.0 - beta);
    Ok(2.0 * (1.0 - beta) * gap / (eta * t)
        + l * eta * s2 / (omb2 * b)
        + 4.0 * l * l * eta * eta * s2 / omb2)
}

/// MSGD batch-size scaling rule `floor(min(√C/L, C^{1/4}))` with unit
/// constants (a trend rule, not a certified cap).
pub fn msgd_max_batch(c: f64, l: f64) -> Result<u64> {
    if !(c >= 1.0 && l > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need C >= 1 and L > 0, got C={c}, L={l}"
        )));
    }
    let root = c.sqrt();
    Ok((root / l).min(root.sqrt()).floor() as u64)
}

/// SNGM bound on `(1/T) Σ E‖∇F(w_t)‖`.
///
/// Smooth: `2(1−β)·gap/(ηT) + Lκη + 2σ/√B`.
/// Relaxed: `2(1−β)·gap/(ηT) + 8Lκη + 4σ/√B`, requiring `η ≤ 1/(8κλ)`.
pub fn sngm_bound_rhs(
    params: &SmoothnessParams,
    beta: f64,
    eta: f64,
    batch: usize,
    steps: u64,
    gap: f64,
    regime: Regime,
) -> Result<f64> {
    let (b, t) = (batch as f64, steps as f64);
    check_common(beta, eta, b, t, gap)?;
    let k = kappa(beta);
    let opt_term = 2.0 * (1.0 - beta) * gap / (eta * t);
    match regime {
        Regime::Smooth => Ok(opt_term + params.l * k * eta + 2.0 * params.sigma / b.sqrt()),
        Regime::Relaxed => {
            if params.lambda > 0.0 {
                let max_eta = 1.0 / (8.0 * k * params.lambda);
                if eta > max_eta {
                    return Err(Error::RelaxedBoundInapplicable { eta, max_eta });
                }
            }
            Ok(opt_term + 8.0 * params.l * k * eta + 4.0 * params.sigma / b.sqrt())
        }
    }
}

/// Batch size, learning rate and iteration count for a budget of `C`
/// per-sample gradient computations.
#[derive(Clone, Debug, PartialEq)]
pub struct BudgetPlan {
    pub c: u64,
    pub batch: usize,
    pub steps: u64,
    pub eta: f64,
    pub gap_estimate: Option<f64>,
    /// Bound guaranteed by the plan, when it provides one in closed form.
    pub guaranteed_bound: Option<f64>,
}

impl BudgetPlan {
    /// `T = ⌈C/B⌉`.
    pub fn new(c: u64, batch: usize, eta: f64) -> Self {
        Self {
            c,
            batch,
            steps: c.div_ceil(batch as u64),
            eta,
            gap_estimate: None,
            guaranteed_bound: None,
        }
    }

    /// Total per-sample gradient evaluations actually spent, `T·B`.
    pub fn gradient_computations(&self) -> u64 {
        self.steps * self.batch as u64
    }
}

fn round_batch(b: f64) -> usize {
    (b.round() as usize).max(1)
}

/// Budget-optimal SNGM plan for an L-smooth objective:
/// `B = sqrt(C(1−β)σ²/(2L(1+β)·gap))`,
/// `η = sqrt(2(1−β)³·gap·B/((1+β)LC))` (evaluated with the rounded `B`),
/// guaranteeing `2√2·(8L(1+β)·gap·σ²/((1−β)C))^{1/4}`.
pub fn corollary1_plan(
    c: u64,
    beta: f64,
    params: &SmoothnessParams,
    gap: f64,
) -> Result<BudgetPlan> {
    let (l, sigma) = (params.l, params.sigma);
    if !(l > 0.0 && sigma > 0.0 && gap > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "budget-optimal plan needs positive L, sigma and gap (got L={l}, sigma={sigma}, gap={gap})"
        )));
    }
    if c == 0 || !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidArgument(
            "need C >= 1 and beta in [0,1)".into(),
        ));
    }
    let cf = c as f64;
    let b_real = (cf * (1.0 - beta) * sigma * sigma / (2.0 * l * (1.0 + beta) * gap)).sqrt();
    let batch = round_batch(b_real);
    let omb = 1.0 - beta;
    let eta = (2.0 * omb * omb * omb * gap * batch as f64 / ((1.0 + beta) * l * cf)).sqrt();
    let bound = 2.0
        * std::f64::consts::SQRT_2
        * (8.0 * l * (1.0 + beta) * gap * sigma * sigma / (omb * cf)).powf(0.25);
    let mut plan = BudgetPlan::new(c, batch, eta);
    plan.gap_estimate = Some(gap);
    plan.guaranteed_bound = Some(bound);
    Ok(plan)
}

/// Constant-free SNGM plan: `B = √C`, `η = √(B/C)`.
pub fn corollary2_plan(c: u64) -> Result<BudgetPlan> {
    if c == 0 {
        return Err(Error::InvalidArgument("C must be at least 1".into()));
    }
    let batch = round_batch((c as f64).sqrt());
    let eta = (batch as f64 / c as f64).sqrt();
    Ok(BudgetPlan::new(c, batch, eta))
}

/// Relaxed-smooth SNGM plan: `B = √C`, `η = C^{−1/4}`, valid when
/// `η ≤ 1/(8κλ)`; otherwise reports the smallest admissible `C = (8κλ)⁴`.
pub fn corollary3_plan(c: u64, beta: f64, lambda: f64) -> Result<BudgetPlan> {
    if c == 0 || !(0.0..1.0).contains(&beta) || !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(
            "need C >= 1, beta in [0,1) and lambda >= 0".into(),
        ));
    }
    let cf = c as f64;
    let eta = 1.0 / cf.sqrt().sqrt();
    let scale = 8.0 * kappa(beta) * lambda;
    if eta * scale > 1.0 {
        return Err(Error::BudgetTooSmall {
            eta,
            min_c: scale.powi(4),
        });
    }
    let batch = round_batch(cf.sqrt());
    Ok(BudgetPlan::new(c, batch, eta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(0.0), 1.0);
        assert!((kappa(0.9) - 190.0).abs() < 1e-9);
        let mut prev = 0.0;
        for k in 0..100 {
            let v = kappa(k as f64 / 100.0);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn msgd_rhs_direct_formula() {
        let p = SmoothnessParams::known(1.0, 0.0, 1.0);
        // validity requires η ≤ 1 here
        let v = msgd_bound_rhs(&p, 0.0, 0.1, 10, 100, 1.0).unwrap();
        assert!(rel(v, 0.25) < 1e-12);
    }

    #[test]
    fn msgd_rhs_zero_variance() {
        let p = SmoothnessParams::known(2.0, 0.0, 0.0);
        let v = msgd_bound_rhs(&p, 0.5, 0.01, 4, 50, 3.0).unwrap();
        assert!(rel(v, 2.0 * 0.5 * 3.0 / (0.01 * 50.0)) < 1e-12);
    }

    #[test]
    fn msgd_validity_boundary() {
        let (beta, l) = (0.9, 10.0);
        let max = msgd_max_eta(beta, l);
        let p = SmoothnessParams::known(l, 0.0, 1.0);
        assert!(msgd_bound_rhs(&p, beta, 0.9 * max, 8, 10, 1.0).is_ok());
        assert!(matches!(
            msgd_bound_rhs(&p, beta, 1.1 * max, 8, 10, 1.0),
            Err(Error::MsgdBoundInapplicable { .. })
        ));
    }

    #[test]
    fn msgd_batch_rule() {
        assert_eq!(msgd_max_batch(65536.0, 1.0).unwrap(), 16);
        assert_eq!(msgd_max_batch(65536.0, 32.0).unwrap(), 8);
        assert_eq!(msgd_max_batch(16.0, 1.0).unwrap(), 2);
        assert!(msgd_max_batch(0.5, 1.0).is_err());
    }

    #[test]
    fn sngm_rhs_direct_formula() {
        let p = SmoothnessParams::known(1.0, 0.0, 1.0);
        let v = sngm_bound_rhs(&p, 0.0, 0.1, 100, 100, 1.0, Regime::Smooth).unwrap();
        assert!(rel(v, 0.5) < 1e-12);
        let r = sngm_bound_rhs(&p, 0.0, 0.1, 100, 100, 1.0, Regime::Relaxed).unwrap();
        assert!(rel(r, 0.2 + 0.8 + 0.4) < 1e-12);
    }

    #[test]
    fn sngm_relaxed_boundary() {
        let p = SmoothnessParams::known(1.0, 1.0, 1.0);
        assert!(matches!(
            sngm_bound_rhs(&p, 0.0, 0.2, 100, 100, 1.0, Regime::Relaxed),
            Err(Error::RelaxedBoundInapplicable { .. })
        ));
        assert!(sngm_bound_rhs(&p, 0.0, 0.125, 100, 100, 1.0, Regime::Relaxed).is_ok());
        // the smooth regime has no learning-rate condition
        assert!(sngm_bound_rhs(&p, 0.0, 0.2, 100, 100, 1.0, Regime::Smooth).is_ok());
    }

    #[test]
    fn corollary1_example() {
        let p = SmoothnessParams::known(1.0, 0.0, 1.0);
        let plan = corollary1_plan(100, 0.0, &p, 0.5).unwrap();
        assert_eq!(plan.batch, 10);
        assert_eq!(plan.steps, 10);
        assert!(rel(plan.eta, 0.1f64.sqrt()) < 1e-12);
        let bound = plan.guaranteed_bound.unwrap();
        assert!(rel(bound, 2.0 * 2f64.sqrt() * 0.04f64.powf(0.25)) < 1e-12);
        assert!((bound - 1.26491).abs() < 1e-5);
    }

    #[test]
    fn corollary1_batch_scales_with_sqrt_c() {
        let p = SmoothnessParams::known(1.0, 0.0, 1.0);
        let a = corollary1_plan(400, 0.0, &p, 0.5).unwrap();
        let b = corollary1_plan(1600, 0.0, &p, 0.5).unwrap();
        assert_eq!((a.batch, b.batch), (20, 40));
    }

    #[test]
    fn corollary1_rejects_degenerate_constants() {
        let p = SmoothnessParams::known(1.0, 0.0, 0.0);
        assert!(corollary1_plan(100, 0.0, &p, 0.5).is_err());
        let p = SmoothnessParams::known(1.0, 0.0, 1.0);
        assert!(corollary1_plan(100, 0.0, &p, 0.0).is_err());
    }

    #[test]
    fn corollary2_examples() {
        let p = corollary2_plan(65536).unwrap();
        assert_eq!((p.batch, p.steps, p.eta), (256, 256, 0.0625));
        let p = corollary2_plan(16).unwrap();
        assert_eq!((p.batch, p.steps, p.eta), (4, 4, 0.5));
        let p = corollary2_plan(1).unwrap();
        assert_eq!((p.batch, p.steps, p.eta), (1, 1, 1.0));
    }

    #[test]
    fn corollary3_examples() {
        let p = corollary3_plan(256, 0.0, 0.5).unwrap();
        assert_eq!(p.eta, 0.25);
        match corollary3_plan(256, 0.0, 1.0) {
            Err(Error::BudgetTooSmall { min_c, .. }) => assert_eq!(min_c, 4096.0),
            other => panic!("expected BudgetTooSmall, got {other:?}"),
        }
        let p = corollary3_plan(4096, 0.0, 1.0).unwrap();
        assert_eq!((p.batch, p.steps, p.eta), (64, 64, 0.125));
    }

    #[test]
    fn corollary_plans_agree_on_constructed_case() {
        // the budget-optimal batch equals √C when (1−β)σ²/(2L(1+β)gap) = 1
        let p = SmoothnessParams::known(1.0, 0.0, 1.0);
        for c in [100u64, 4096, 65536] {
            let c1 = corollary1_plan(c, 0.0, &p, 0.5).unwrap();
            let c2 = corollary2_plan(c).unwrap();
            assert_eq!(c1.batch, c2.batch);
        }
    }
}
