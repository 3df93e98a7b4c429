use crate::error::{Error, Result};

/// Learning rate as a function of the step counter.
#[derive(Clone, Debug, PartialEq)]
pub enum LrSchedule {
    Constant {
        lr: f64,
    },
    /// `lr·(1 − t/T)^power`, defined for `t < T`.
    PolyPower {
        lr: f64,
        total_steps: u64,
        power: f64,
    },
    /// `lr·factor^k` where `k` counts the milestones (in steps) `≤ t`.
    StepDecay {
        lr: f64,
        milestones: Vec<u64>,
        factor: f64,
    },
    /// Linear ramp from `from` to the inner schedule's base rate over
    /// `steps`, then the inner schedule evaluated at `t − steps`.
    Warmup {
        steps: u64,
        from: f64,
        inner: Box<LrSchedule>,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

impl LrSchedule {
    pub fn constant(lr: f64) -> Result<Self> {
        positive("learning rate", lr)?;
        Ok(Self::Constant { lr })
    }

    pub fn poly_power(lr: f64, total_steps: u64, power: f64) -> Result<Self> {
        positive("learning rate", lr)?;
        if total_steps == 0 {
            return Err(Error::InvalidArgument("poly schedule needs T > 0".into()));
        }
        if !(power >= 0.0 && power.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "poly power must be nonnegative, got {power}"
            )));
        }
        Ok(Self::PolyPower {
            lr,
            total_steps,
            power,
        })
    }

    pub fn step_decay(lr: f64, mut milestones: Vec<u64>, factor: f64) -> Result<Self> {
        positive("learning rate", lr)?;
        positive("decay factor", factor)?;
        milestones.sort_unstable();
        Ok(Self::StepDecay {
            lr,
            milestones,
            factor,
        })
    }

    pub fn warmup(steps: u64, from: f64, inner: LrSchedule) -> Result<Self> {
        positive("warmup start rate", from)?;
        Ok(Self::Warmup {
            steps,
            from,
            inner: Box::new(inner),
        })
    }

    /// The rate at `t = 0` of the post-warmup schedule.
    pub fn base_lr(&self) -> f64 {
        match self {
            Self::Constant { lr } | Self::PolyPower { lr, .. } | Self::StepDecay { lr, .. } => *lr,
            Self::Warmup { inner, .. } => inner.base_lr(),
        }
    }

    pub fn lr_at(&self, t: u64) -> Result<f64> {
        match self {
            Self::Constant { lr } => Ok(*lr),
            Self::PolyPower {
                lr,
                total_steps,
                power,
            } => {
                if t >= *total_steps {
                    return Err(Error::ScheduleExhausted {
                        t,
                        total: *total_steps,
                    });
                }
                Ok(lr * (1.0 - t as f64 / *total_steps as f64).powf(*power))
            }
            Self::StepDecay {
                lr,
                milestones,
                factor,
            } => {
                let passed = milestones.iter().take_while(|&&m| m <= t).count();
                Ok(lr * factor.powi(passed as i32))
            }
            Self::Warmup { steps, from, inner } => {
                if t < *steps {
                    let target = inner.base_lr();
                    Ok(from + (target - from) * t as f64 / *steps as f64)
                } else {
                    inner.lr_at(t - steps)
                }
            }
        }
    }
}
