use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::run::{run_prepared, RunOutcome};
use crate::setup::prepare;
use crate::trace::format_float;

#[derive(Clone, Debug)]
pub struct Comparison {
    pub c: u64,
    pub outcomes: Vec<RunOutcome>,
    pub warnings: Vec<String>,
}

/// Runs every config concurrently after checking they share the budget `C`
/// (`shared_c` if given, else the first config's).
pub fn run_comparison(configs: &[ExperimentConfig], shared_c: Option<u64>) -> Result<Comparison> {
    if configs.is_empty() {
        return Err(HarnessError::Invalid("nothing to compare".into()));
    }
    let mut warnings = Vec::new();
    if configs.len() == 1 {
        warnings.push("comparison of a single config".to_string());
    }
    let setups = configs.iter().map(prepare).collect::<Result<Vec<_>>>()?;
    let c = shared_c.unwrap_or(setups[0].plan.c);
    for (cfg, s) in configs.iter().zip(&setups) {
        if s.plan.c != c {
            return Err(HarnessError::BudgetMismatch {
                name: cfg.display_name().to_string(),
                c: s.plan.c,
                expected: c,
            });
        }
    }
    let outcomes = configs
        .par_iter()
        .zip(setups.par_iter())
        .map(|(cfg, s)| run_prepared(s, cfg.seed, cfg.record_every, cfg.display_name()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        c,
        outcomes,
        warnings,
    })
}

impl Comparison {
    /// Whitespace-aligned table, one row per run.
    pub fn render(&self) -> String {
        let header = [
            "name",
            "method",
            "B",
            "eta_rule",
            "eta",
            "T",
            "final_loss",
            "avg_grad_norm",
            "min_grad_norm",
            "status",
        ];
        let rows: Vec<Vec<String>> = self
            .outcomes
            .iter()
            .map(|o| {
                vec![
                    o.name.clone(),
                    o.method.to_string(),
                    o.plan.batch.to_string(),
                    o.plan_mode.as_str().to_string(),
                    format_float(o.plan.eta),
                    o.plan.steps.to_string(),
                    format_float(o.final_loss),
                    format_float(o.report.avg_grad_norm),
                    format_float(o.report.min_grad_norm),
                    match o.diverged_at {
                        Some(t) => format!("diverged at t={t}"),
                        None => "ok".into(),
                    },
                ]
            })
            .collect();
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: Vec<String>| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = format!("C={}\n", self.c);
        out.push_str(&line(header.iter().map(|s| s.to_string()).collect()));
        out.push('\n');
        for row in rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}
