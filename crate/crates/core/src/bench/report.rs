use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{simulate_folder_time, BenchError, ExecutionMode, TimingModel};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub mode: ExecutionMode,
    pub n_images: usize,
    pub folder_time_s: f64,
    pub avg_per_image_s: f64,
    pub overhead_fraction: f64,
    pub inference_fraction: f64,
    /// `folder_time(baseline) / folder_time(self)` for every mode in the run.
    pub speedups: BTreeMap<ExecutionMode, f64>,
    pub measured: bool,
    /// Model loads observed during a measured run.
    pub load_events: Option<u64>,
}

impl BenchReport {
    pub fn new(mode: ExecutionMode, n_images: usize, folder_time_s: f64, tm: &TimingModel) -> Self {
        let avg_per_image_s = if n_images == 0 {
            0.0
        } else {
            folder_time_s / n_images as f64
        };
        let (overhead_fraction, inference_fraction) =
            overhead_split(folder_time_s, n_images, tm.infer_s);
        Self {
            mode,
            n_images,
            folder_time_s,
            avg_per_image_s,
            overhead_fraction,
            inference_fraction,
            speedups: BTreeMap::new(),
            measured: false,
            load_events: None,
        }
    }
}

fn overhead_split(folder_time_s: f64, n: usize, infer_s: f64) -> (f64, f64) {
    if folder_time_s <= 0.0 {
        return (0.0, 1.0);
    }
    let overhead = ((folder_time_s - n as f64 * infer_s) / folder_time_s).clamp(0.0, 1.0);
    (overhead, 1.0 - overhead)
}

/// `(overhead_fraction, inference_fraction)` of a report under `tm`.
pub fn decompose_overhead(report: &BenchReport, tm: &TimingModel) -> (f64, f64) {
    overhead_split(report.folder_time_s, report.n_images, tm.infer_s)
}

/// Fill `speedups` on every report from the folder times of the others.
pub fn attach_speedups(reports: &mut [BenchReport]) {
    let times: Vec<(ExecutionMode, f64)> = reports.iter().map(|r| (r.mode, r.folder_time_s)).collect();
    for r in reports.iter_mut() {
        r.speedups = times
            .iter()
            .filter(|(_, t)| r.folder_time_s > 0.0 && t.is_finite())
            .map(|&(m, t)| (m, t / r.folder_time_s))
            .collect();
    }
}

/// Closed-form reports for `modes`, with speedups against each other.
pub fn simulate_reports(
    modes: &[ExecutionMode],
    n: usize,
    tm: &TimingModel,
    batch_size: usize,
) -> Vec<BenchReport> {
    let mut reports: Vec<_> = modes
        .iter()
        .map(|&m| BenchReport::new(m, n, simulate_folder_time(m, n, tm, batch_size), tm))
        .collect();
    attach_speedups(&mut reports);
    reports
}

pub const REPORT_COLUMNS: [&str; 6] = [
    "mode",
    "n_images",
    "folder_time_s",
    "avg_per_image_s",
    "overhead_fraction",
    "speedup_vs_uipath",
];

/// Tab-separated report with a header row. `speedup_vs_uipath` is `NA`
/// when the UiPath-style mode was not part of the run.
pub fn report_table(reports: &[BenchReport]) -> String {
    let mut out = REPORT_COLUMNS.join("\t");
    out.push('\n');
    for r in reports {
        let speedup = r
            .speedups
            .get(&ExecutionMode::RpaUipath)
            .map(|v| v.to_string())
            .unwrap_or_else(|| "NA".to_string());
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.mode, r.n_images, r.folder_time_s, r.avg_per_image_s, r.overhead_fraction, speedup
        );
    }
    out
}

pub fn write_report(path: &Path, reports: &[BenchReport]) -> Result<(), BenchError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, report_table(reports))?;
    Ok(())
}

/// Printed summary: one column per mode.
pub fn render_summary(reports: &[BenchReport]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<28}", "Metric");
    for r in reports {
        let _ = write!(out, "{:>22}", r.mode.display_name());
    }
    out.push('\n');
    let n = reports.first().map(|r| r.n_images).unwrap_or(0);
    let row = |out: &mut String, label: String, f: &dyn Fn(&BenchReport) -> String| {
        let _ = write!(out, "{label:<28}");
        for r in reports {
            let _ = write!(out, "{:>22}", f(r));
        }
        out.push('\n');
    };
    row(&mut out, format!("Folder Time ({n} Images)"), &|r| {
        format!("{} s", trim_float(r.folder_time_s, 2))
    });
    row(&mut out, "Avg Time per Image".into(), &|r| {
        format!("{:.2} s", r.avg_per_image_s)
    });
    row(&mut out, "Overhead Fraction".into(), &|r| {
        format!("{:.3}", r.overhead_fraction)
    });
    row(&mut out, "Speedup vs UiPath".into(), &|r| {
        r.speedups
            .get(&ExecutionMode::RpaUipath)
            .map(|v| format!("{v:.1}x"))
            .unwrap_or_else(|| "-".into())
    });
    out
}

/// Round to `decimals` and drop trailing zeros (`80.00` → `80`, `8.650` → `8.65`).
pub fn trim_float(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::Preset;

    #[test]
    fn fractions_at_extremes() {
        let tm = TimingModel {
            load_s: 0.0,
            rpa_overhead_uipath_s: 0.0,
            rpa_overhead_aa_s: 0.0,
            call_overhead_s: 0.0,
            batch_overhead_s: 0.0,
            infer_s: 0.5,
        };
        let r = BenchReport::new(ExecutionMode::SingletonSequential, 10, 5.0, &tm);
        assert_eq!(decompose_overhead(&r, &tm), (0.0, 1.0));
        let zero = TimingModel { infer_s: 0.0, ..tm };
        assert_eq!(decompose_overhead(&r, &zero), (1.0, 0.0));
    }

    #[test]
    fn single_mode_speedup_is_self() {
        let tm = Preset::FolderExact.timing_model();
        let r = simulate_reports(&[ExecutionMode::SingletonBatch], 31, &tm, 32);
        assert_eq!(r[0].speedups.len(), 1);
        assert_eq!(r[0].speedups[&ExecutionMode::SingletonBatch], 1.0);
        assert!(report_table(&r).lines().nth(1).unwrap().ends_with("\tNA"));
    }

    #[test]
    fn summary_uses_trimmed_folder_times() {
        let tm = Preset::FolderExact.timing_model();
        let r = simulate_reports(&ExecutionMode::ALL, 31, &tm, 32);
        let s = render_summary(&r);
        for needle in ["80 s", "75 s", "8.65 s", "1.96 s", "2.58 s", "2.42 s", "0.28 s", "0.06 s"] {
            assert!(s.contains(needle), "{needle} missing from\n{s}");
        }
        assert_eq!(trim_float(8.650000001, 2), "8.65");
        assert_eq!(trim_float(80.0, 2), "80");
    }
}
