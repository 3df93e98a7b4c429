//! Experiment configuration, read from TOML. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label used in comparison tables; defaults to the file stem.
    pub name: Option<String>,
    /// Drives mini-batch sampling.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    /// Trace destination, relative to the working directory. A `.jsonl`
    /// extension selects JSON lines, anything else CSV.
    pub output: Option<PathBuf>,
    pub problem: ProblemSpec,
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub init: InitSpec,
    pub budget: BudgetSpec,
    /// Directory data paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_record_every() -> u64 {
    1
}

fn default_center_spread() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    #[default]
    Csv,
    Cifar10,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemSpec {
    Quadratic {
        dim: usize,
        n: usize,
        /// Explicit eigenvalues; otherwise log-spaced between the bounds.
        spectrum: Option<Vec<f64>>,
        spectrum_min: Option<f64>,
        spectrum_max: Option<f64>,
        #[serde(default = "default_center_spread")]
        center_spread: f64,
        #[serde(default)]
        seed: u64,
    },
    Exp {
        a: f64,
    },
    Logistic {
        data: PathBuf,
        #[serde(default)]
        format: DataFormat,
        limit: Option<usize>,
        #[serde(default)]
        l2: f64,
        holdout_fraction: Option<f64>,
        #[serde(default)]
        seed: u64,
    },
    Mlp {
        data: PathBuf,
        #[serde(default)]
        format: DataFormat,
        limit: Option<usize>,
        layout: Vec<usize>,
        #[serde(default = "default_activation")]
        activation: String,
        holdout_fraction: Option<f64>,
        #[serde(default)]
        seed: u64,
    },
}

fn default_activation() -> String {
    "tanh".into()
}

impl ProblemSpec {
    /// Seed for problem construction and the initial point.
    pub fn seed(&self) -> u64 {
        match self {
            Self::Quadratic { seed, .. } | Self::Logistic { seed, .. } | Self::Mlp { seed, .. } => {
                *seed
            }
            Self::Exp { .. } => 0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    pub method: String,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub weight_decay: f64,
    /// Required for manual plans; set by the plan otherwise.
    pub batch_size: Option<usize>,
    pub micro_batch: Option<usize>,
    #[serde(default = "default_true")]
    pub decay_before_norm: bool,
    pub trust: Option<f64>,
    pub lars_eps: Option<f64>,
}

fn default_beta() -> f64 {
    0.9
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    #[default]
    Constant,
    Poly,
    Step,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default)]
    pub kind: ScheduleKind,
    /// Base rate; required for manual plans, set by the plan otherwise.
    pub lr: Option<f64>,
    #[serde(default = "default_power")]
    pub power: f64,
    /// Step-decay milestones in epochs.
    #[serde(default)]
    pub milestones: Vec<u64>,
    #[serde(default = "default_factor")]
    pub factor: f64,
    pub warmup_epochs: Option<u64>,
    pub warmup_steps: Option<u64>,
    pub warmup_from: Option<f64>,
}

fn default_power() -> f64 {
    2.0
}

fn default_factor() -> f64 {
    0.1
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            kind: ScheduleKind::Constant,
            lr: None,
            power: default_power(),
            milestones: Vec::new(),
            factor: default_factor(),
            warmup_epochs: None,
            warmup_steps: None,
            warmup_from: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    /// The problem's own initializer (zeros, or fan-in scaled for MLPs).
    #[default]
    Default,
    Zeros,
    /// Uniform in `[−scale, scale]` per coordinate.
    Uniform,
    /// Every coordinate equal to `value`.
    Constant,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    #[serde(default)]
    pub kind: InitKind,
    pub scale: Option<f64>,
    pub value: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum PlanMode {
    #[default]
    Manual,
    Corollary1,
    Corollary2,
    Corollary3,
}

impl PlanMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Manual => "manual",
            Self::Corollary1 => "corollary1",
            Self::Corollary2 => "corollary2",
            Self::Corollary3 => "corollary3",
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    /// Total per-sample gradient computations.
    pub c: Option<u64>,
    /// Iteration count.
    pub t: Option<u64>,
    #[serde(default)]
    pub plan: PlanMode,
    /// Overrides for the constants a plan or bound check needs.
    pub sigma: Option<f64>,
    pub smoothness: Option<f64>,
    pub gap: Option<f64>,
    pub lambda: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            HarnessError::Config(message) => HarnessError::ConfigParse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if cfg.name.is_none() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    /// Parses and validates TOML text; relative data paths resolve against
    /// the working directory.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn display_name(&self) -> &str {
        self.name.as_deref().unwrap_or("run")
    }

    pub fn resolve_data(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Checks that do not need the problem instance.
    pub fn validate(&self) -> Result<()> {
        let b = &self.budget;
        match (b.c, b.t) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(HarnessError::Config(
                    "budget needs exactly one of c and t".into(),
                ))
            }
            (Some(0), _) | (_, Some(0)) => return Err(HarnessError::EmptyBudget),
            _ => {}
        }
        if self.record_every == 0 {
            return Err(HarnessError::Config("record_every must be positive".into()));
        }
        let planned = b.plan != PlanMode::Manual;
        if planned {
            if b.c.is_none() {
                return Err(HarnessError::Config(format!(
                    "plan {} needs budget.c",
                    b.plan.as_str()
                )));
            }
            if self.optimizer.batch_size.is_some() || self.schedule.lr.is_some() {
                return Err(HarnessError::Config(format!(
                    "plan {} sets batch_size and lr; remove them",
                    b.plan.as_str()
                )));
            }
        } else {
            if self.optimizer.batch_size.is_none() {
                return Err(HarnessError::Config(
                    "optimizer.batch_size is required".into(),
                ));
            }
            if self.schedule.lr.is_none() {
                return Err(HarnessError::Config("schedule.lr is required".into()));
            }
        }
        if let (Some(bs), Some(m)) = (self.optimizer.batch_size, self.optimizer.micro_batch) {
            if m == 0 || bs % m != 0 {
                return Err(HarnessError::Config(format!(
                    "micro_batch {m} must divide batch_size {bs}"
                )));
            }
        }
        let s = &self.schedule;
        if s.warmup_epochs.is_some() && s.warmup_steps.is_some() {
            return Err(HarnessError::Config(
                "give at most one of warmup_epochs and warmup_steps".into(),
            ));
        }
        if (s.warmup_epochs.is_some() || s.warmup_steps.is_some()) && s.warmup_from.is_none() {
            return Err(HarnessError::Config("warmup needs warmup_from".into()));
        }
        match self.init.kind {
            InitKind::Uniform if self.init.scale.is_none() => {
                Err(HarnessError::Config("uniform init needs scale".into()))
            }
            InitKind::Constant if self.init.value.is_none() => {
                Err(HarnessError::Config("constant init needs value".into()))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 3
[problem]
kind = "exp"
a = 1.0
[optimizer]
method = "sngm"
batch_size = 1
[schedule]
lr = 0.005
[budget]
t = 100
"#;

    #[test]
    fn parses_minimal() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.problem, ProblemSpec::Exp { a: 1.0 });
        assert_eq!(cfg.optimizer.beta, 0.9);
        assert_eq!(cfg.record_every, 1);
        assert_eq!(cfg.schedule.kind, ScheduleKind::Constant);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let bad = MINIMAL.replace("seed = 3", "seed = 3\nlearning_rate = 0.1");
        assert!(ExperimentConfig::parse(&bad).is_err());
        let bad = MINIMAL.replace("a = 1.0", "a = 1.0\nb = 2.0");
        assert!(ExperimentConfig::parse(&bad).is_err());
        let bad = MINIMAL.replace("kind = \"exp\"", "kind = \"cubic\"");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn budget_needs_exactly_one() {
        let both = MINIMAL.replace("t = 100", "t = 100\nc = 100");
        assert!(matches!(
            ExperimentConfig::parse(&both),
            Err(HarnessError::Config(_))
        ));
        let zero = MINIMAL.replace("t = 100", "t = 0");
        assert!(matches!(
            ExperimentConfig::parse(&zero),
            Err(HarnessError::EmptyBudget)
        ));
        let zero_c = MINIMAL.replace("t = 100", "c = 0");
        assert_eq!(
            ExperimentConfig::parse(&zero_c).unwrap_err().to_string(),
            "empty budget"
        );
    }

    #[test]
    fn plan_owns_batch_and_lr() {
        let planned = MINIMAL.replace("t = 100", "c = 4096\nplan = \"corollary2\"");
        assert!(ExperimentConfig::parse(&planned).is_err());
        let ok = planned
            .replace("batch_size = 1\n", "")
            .replace("lr = 0.005\n", "");
        assert_eq!(
            ExperimentConfig::parse(&ok).unwrap().budget.plan,
            PlanMode::Corollary2
        );
    }

    #[test]
    fn micro_batch_must_divide() {
        let bad = MINIMAL.replace("batch_size = 1", "batch_size = 8\nmicro_batch = 3");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }
}
