//! Update rules: SNGM, its `β = 0` special case SNGD, heavy-ball MSGD (and
//! plain SGD), and LARS.
//!
//! Each step mutates the parameter vector in place and advances the step
//! counter by one. A non-finite gradient is reported as
//! [`Error::NonFinite`] and leaves both state and parameters untouched.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{euclidean_norm, ParamVector};

mod accumulate;
mod schedule;

pub use accumulate::GradAccumulator;
pub use schedule::LrSchedule;

/// Gradients with norm at or below this are treated as exactly zero by the
/// normalized methods: the momentum decays and the normalized term vanishes.
pub const ZERO_GRADIENT_NORM: f64 = 1e-30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Sgd,
    Msgd,
    Sngd,
    Sngm,
    Lars,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sgd => "sgd",
            Self::Msgd => "msgd",
            Self::Sngd => "sngd",
            Self::Sngm => "sngm",
            Self::Lars => "lars",
        }
    }

    pub fn is_normalized(self) -> bool {
        matches!(self, Self::Sngd | Self::Sngm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Self::Sgd),
            "msgd" => Ok(Self::Msgd),
            "sngd" => Ok(Self::Sngd),
            "sngm" => Ok(Self::Sngm),
            "lars" => Ok(Self::Lars),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LarsParams {
    pub trust: f64,
    pub eps: f64,
}

impl Default for LarsParams {
    fn default() -> Self {
        Self {
            trust: 0.001,
            eps: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub method: Method,
    pub beta: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    /// SNGM/SNGD only: add `weight_decay·w` to the gradient before
    /// normalizing (`true`), or apply it as a separate decoupled term
    /// `w ← w − η·wd·w` after the normalized step (`false`).
    pub decay_before_norm: bool,
    pub lars: LarsParams,
}

impl OptimizerConfig {
    pub fn new(method: Method, beta: f64) -> Self {
        Self {
            method,
            beta,
            weight_decay: 0.0,
            batch_size: 1,
            decay_before_norm: true,
            lars: LarsParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::InvalidArgument(format!(
                "beta must lie in [0, 1), got {}",
                self.beta
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weight_decay must be nonnegative, got {}",
                self.weight_decay
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        if !(self.lars.trust > 0.0 && self.lars.eps >= 0.0) {
            return Err(Error::InvalidArgument(
                "LARS trust must be positive and eps nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Per-step diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    /// Step index this update was applied at (before increment).
    pub t: u64,
    pub lr: f64,
    /// `‖w_{t+1} − w_t‖`.
    pub displacement: f64,
    /// Norm of the momentum buffer after the update.
    pub momentum_norm: f64,
}

/// Momentum buffer, step counter and hyperparameters of one trajectory.
#[derive(Clone, Debug)]
pub struct OptimizerState {
    config: OptimizerConfig,
    schedule: LrSchedule,
    momentum: ParamVector,
    t: u64,
}

impl OptimizerState {
    /// Fresh state with a zero momentum buffer of dimension `dim`.
    pub fn new(config: OptimizerConfig, schedule: LrSchedule, dim: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            schedule,
            momentum: ParamVector::zeros(dim),
            t: 0,
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn schedule(&self) -> &LrSchedule {
        &self.schedule
    }

    pub fn momentum(&self) -> &ParamVector {
        &self.momentum
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn beta(&self) -> f64 {
        self.config.beta
    }

    /// `1/(1−β)`, the bound on the SNGM momentum norm.
    pub fn momentum_bound(&self) -> f64 {
        1.0 / (1.0 - self.config.beta)
    }

    pub fn current_lr(&self) -> Result<f64> {
        self.schedule.lr_at(self.t)
    }

    /// Applies the configured method.
    pub fn step(&mut self, w: &mut ParamVector, g: &ParamVector) -> Result<StepReport> {
        match self.config.method {
            Method::Sgd => self.sgd_step(w, g),
            Method::Msgd => self.msgd_step(w, g),
            Method::Sngd => self.sngd_step(w, g),
            Method::Sngm => self.sngm_step(w, g),
            Method::Lars => self.lars_step(w, g),
        }
    }

    fn precheck(&self, w: &ParamVector, g: &ParamVector) -> Result<f64> {
        if g.len() != w.len() {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                got: g.len(),
            });
        }
        if self.momentum.len() != w.len() {
            return Err(Error::DimensionMismatch {
                expected: self.momentum.len(),
                got: w.len(),
            });
        }
        if !g.is_finite() {
            return Err(Error::NonFinite { step: self.t });
        }
        self.schedule.lr_at(self.t)
    }

    fn finish(&mut self, lr: f64, displacement: f64) -> StepReport {
        let report = StepReport {
            t: self.t,
            lr,
            displacement,
            momentum_norm: self.momentum.norm(),
        };
        self.t += 1;
        report
    }

    /// Gradient with weight decay folded in, `g + wd·w`.
    fn decayed(&self, w: &ParamVector, g: &ParamVector) -> ParamVector {
        let mut g = g.clone();
        if self.config.weight_decay > 0.0 {
            for (gi, wi) in g.as_mut_slice().iter_mut().zip(w.as_slice()) {
                *gi += self.config.weight_decay * wi;
            }
        }
        g
    }

    /// Plain SGD: `w ← w − η(t)(g + wd·w)`. The momentum buffer is unused.
    pub fn sgd_step(&mut self, w: &mut ParamVector, g: &ParamVector) -> Result<StepReport> {
        let lr = self.precheck(w, g)?;
        let g = self.decayed(w, g);
        let mut sq = 0.0;
        for (wi, gi) in w.as_mut_slice().iter_mut().zip(g.as_slice()) {
            let delta = lr * gi;
            *wi -= delta;
            sq += delta * delta;
        }
        Ok(self.finish(lr, sq.sqrt()))
    }

    /// Heavy-ball momentum: `v ← βv + g`, `w ← w − η(t)·v`.
    pub fn msgd_step(&mut self, w: &mut ParamVector, g: &ParamVector) -> Result<StepReport> {
        let lr = self.precheck(w, g)?;
        let g = self.decayed(w, g);
        let beta = self.config.beta;
        let mut sq = 0.0;
        for ((vi, wi), gi) in self
            .momentum
            .as_mut_slice()
            .iter_mut()
            .zip(w.as_mut_slice())
            .zip(g.as_slice())
        {
            *vi = beta * *vi + gi;
            let delta = lr * *vi;
            *wi -= delta;
            sq += delta * delta;
        }
        Ok(self.finish(lr, sq.sqrt()))
    }

    /// Normalized momentum: `u ← βu + g/‖g‖`, `w ← w − η(t)·u`.
    ///
    /// With `‖g‖ ≤ ZERO_GRADIENT_NORM` the normalized term is taken as zero.
    /// The normalization is global over the whole vector.
    pub fn sngm_step(&mut self, w: &mut ParamVector, g: &ParamVector) -> Result<StepReport> {
        let beta = self.config.beta;
        self.normalized_step(w, g, beta)
    }

    /// SNGM with `β` forced to 0: every step has length exactly `η(t)`.
    pub fn sngd_step(&mut self, w: &mut ParamVector, g: &ParamVector) -> Result<StepReport> {
        self.normalized_step(w, g, 0.0)
    }

    fn normalized_step(
        &mut self,
        w: &mut ParamVector,
        g: &ParamVector,
        beta: f64,
    ) -> Result<StepReport> {
        let lr = self.precheck(w, g)?;
        let wd = self.config.weight_decay;
        let decoupled = wd > 0.0 && !self.config.decay_before_norm;
        let g = if decoupled {
            g.clone()
        } else {
            self.decayed(w, g)
        };
        let norm = g.norm();
        let inv = if norm > ZERO_GRADIENT_NORM {
            1.0 / norm
        } else {
            0.0
        };
        let mut sq = 0.0;
        for ((ui, wi), gi) in self
            .momentum
            .as_mut_slice()
            .iter_mut()
            .zip(w.as_mut_slice())
            .zip(g.as_slice())
        {
            *ui = beta * *ui + gi * inv;
            let mut delta = lr * *ui;
            if decoupled {
                delta += lr * wd * *wi;
            }
            *wi -= delta;
            sq += delta * delta;
        }
        let report = self.finish(lr, sq.sqrt());
        debug_assert!(
            report.momentum_norm <= 1.0 / (1.0 - beta) + 1e-9,
            "momentum norm {} exceeds 1/(1-beta)",
            report.momentum_norm
        );
        Ok(report)
    }

    /// Layer-wise adaptive rate scaling. Per layer `ℓ`:
    /// `local = trust·‖w_ℓ‖/(‖g_ℓ‖ + wd·‖w_ℓ‖ + eps)`,
    /// `v_ℓ ← βv_ℓ + local·(g_ℓ + wd·w_ℓ)`, `w_ℓ ← w_ℓ − η(t)·v_ℓ`.
    pub fn lars_step(&mut self, w: &mut ParamVector, g: &ParamVector) -> Result<StepReport> {
        let layers = w.layer_bounds().ok_or(Error::MissingLayerBounds)?.to_vec();
        let lr = self.precheck(w, g)?;
        let LarsParams { trust, eps } = self.config.lars;
        let (beta, wd) = (self.config.beta, self.config.weight_decay);
        let mut sq = 0.0;
        for range in layers {
            let w_l = &mut w.as_mut_slice()[range.clone()];
            let g_l = &g.as_slice()[range.clone()];
            let w_norm = euclidean_norm(w_l);
            let g_norm = euclidean_norm(g_l);
            let local = trust * w_norm / (g_norm + wd * w_norm + eps);
            let v_l = &mut self.momentum.as_mut_slice()[range];
            for ((vi, wi), gi) in v_l.iter_mut().zip(w_l.iter_mut()).zip(g_l) {
                *vi = beta * *vi + local * (gi + wd * *wi);
                let delta = lr * *vi;
                *wi -= delta;
                sq += delta * delta;
            }
        }
        Ok(self.finish(lr, sq.sqrt()))
    }
}
