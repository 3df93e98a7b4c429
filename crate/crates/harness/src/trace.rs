//! Trace and plot-data writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{HarnessError, Result};
use crate::run::TrajectoryRecord;

pub const TRACE_COLUMNS: [&str; 8] = [
    "t",
    "epoch",
    "lr",
    "batch_loss",
    "full_loss",
    "grad_norm",
    "momentum_norm",
    "cum_grads",
];
pub const HELDOUT_COLUMNS: [&str; 2] = ["heldout_loss", "heldout_accuracy"];

/// Shortest round-trip text; exponent form outside `[1e-4, 1e15)`.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

pub fn write_trace_csv<W: Write>(records: &[TrajectoryRecord], out: W) -> Result<()> {
    let heldout = records.iter().any(|r| r.heldout_loss.is_some());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header: Vec<&str> = TRACE_COLUMNS.to_vec();
    if heldout {
        header.extend(HELDOUT_COLUMNS);
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.t.to_string(),
            r.epoch.to_string(),
            format_float(r.lr),
            format_float(r.batch_loss),
            format_float(r.full_loss),
            format_float(r.grad_norm),
            format_float(r.momentum_norm),
            r.cum_grads.to_string(),
        ];
        if heldout {
            row.push(opt(r.heldout_loss));
            row.push(opt(r.heldout_accuracy));
        }
        w.write_record(&row)?;
    }
    w.flush()
        .map_err(|e| HarnessError::Invalid(format!("flush failed: {e}")))?;
    Ok(())
}

pub fn write_trace_jsonl<W: Write>(records: &[TrajectoryRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")
            .map_err(|e| HarnessError::Invalid(format!("write failed: {e}")))?;
    }
    Ok(())
}

/// Writes CSV, or JSON lines when the path ends in `.jsonl`.
pub fn write_trace(records: &[TrajectoryRecord], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let out = BufWriter::new(file);
    if path.extension().is_some_and(|e| e == "jsonl") {
        write_trace_jsonl(records, out)
    } else {
        write_trace_csv(records, out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotMetric {
    FullLoss,
    BatchLoss,
    GradNorm,
    MomentumNorm,
    Lr,
    HeldoutLoss,
    HeldoutAccuracy,
}

impl PlotMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::FullLoss => "full_loss",
            Self::BatchLoss => "batch_loss",
            Self::GradNorm => "grad_norm",
            Self::MomentumNorm => "momentum_norm",
            Self::Lr => "lr",
            Self::HeldoutLoss => "heldout_loss",
            Self::HeldoutAccuracy => "heldout_accuracy",
        }
    }

    fn value(self, r: &TrajectoryRecord) -> Option<f64> {
        match self {
            Self::FullLoss => Some(r.full_loss),
            Self::BatchLoss => Some(r.batch_loss),
            Self::GradNorm => Some(r.grad_norm),
            Self::MomentumNorm => Some(r.momentum_norm),
            Self::Lr => Some(r.lr),
            Self::HeldoutLoss => r.heldout_loss,
            Self::HeldoutAccuracy => r.heldout_accuracy,
        }
    }
}

impl FromStr for PlotMetric {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        [
            Self::FullLoss,
            Self::BatchLoss,
            Self::GradNorm,
            Self::MomentumNorm,
            Self::Lr,
            Self::HeldoutLoss,
            Self::HeldoutAccuracy,
        ]
        .into_iter()
        .find(|m| m.as_str() == s)
        .ok_or_else(|| HarnessError::Invalid(format!("unknown plot metric {s:?}")))
    }
}

/// Two whitespace-separated columns, `cum_grads` and the metric, under a
/// `# series: <name>` header.
pub fn write_plot_data<W: Write>(
    records: &[TrajectoryRecord],
    metric: PlotMetric,
    series: &str,
    mut out: W,
) -> Result<()> {
    if records.is_empty() {
        return Err(HarnessError::Invalid("no records to plot".into()));
    }
    let mut text = format!("# series: {series}\n");
    for r in records {
        let y = metric.value(r).ok_or_else(|| {
            HarnessError::Invalid(format!("metric {} not recorded", metric.as_str()))
        })?;
        text.push_str(&format!("{} {}\n", r.cum_grads, format_float(y)));
    }
    out.write_all(text.as_bytes())
        .map_err(|e| HarnessError::Invalid(format!("write failed: {e}")))
}

pub fn emit_plot_data(
    records: &[TrajectoryRecord],
    metric: PlotMetric,
    series: &str,
    path: &Path,
) -> Result<()> {
    let mut buf = Vec::new();
    write_plot_data(records, metric, series, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: u64, g: f64) -> TrajectoryRecord {
        TrajectoryRecord {
            t,
            epoch: t / 2,
            lr: 0.0625,
            batch_loss: 1.5,
            full_loss: 2.0 / (t + 1) as f64,
            grad_norm: g,
            momentum_norm: 1.0,
            cum_grads: (t + 1) * 16,
            heldout_loss: None,
            heldout_accuracy: None,
        }
    }

    #[test]
    fn csv_header_and_line_endings() {
        let mut buf = Vec::new();
        write_trace_csv(&[rec(0, 3.0), rec(1, 2.5)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains('\r'));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "t,epoch,lr,batch_loss,full_loss,grad_norm,momentum_norm,cum_grads"
        );
        assert_eq!(lines[1], "0,0,0.0625,1.5,2,3,1,16");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn heldout_columns_only_when_present() {
        let mut r = rec(0, 1.0);
        r.heldout_loss = Some(0.5);
        r.heldout_accuracy = Some(0.75);
        let mut buf = Vec::new();
        write_trace_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,epoch,lr,batch_loss,full_loss,grad_norm,momentum_norm,cum_grads,heldout_loss,heldout_accuracy\n"));
        assert!(text.ends_with(",16,0.5,0.75\n"));
    }

    #[test]
    fn plot_data_three_records() {
        let recs = [rec(0, 3.0), rec(1, 0.1234567890123), rec(2, 1e-7)];
        let mut buf = Vec::new();
        write_plot_data(&recs, PlotMetric::GradNorm, "sngm", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "# series: sngm");
        for (line, r) in lines[1..].iter().zip(&recs) {
            let mut cols = line.split_whitespace();
            assert_eq!(cols.next().unwrap().parse::<u64>().unwrap(), r.cum_grads);
            assert_eq!(cols.next().unwrap().parse::<f64>().unwrap(), r.grad_norm);
        }
    }

    #[test]
    fn plot_data_rejects_empty() {
        assert!(write_plot_data(&[], PlotMetric::FullLoss, "x", Vec::new()).is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.0, 1.0, 0.1, 1e-7, 6.02e23, -3.5e-12, 123456.789] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(1e-7), "1e-7");
    }
}
