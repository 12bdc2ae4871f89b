//! Accessibility versus per-image time for the four variants.

use std::fmt::Write as _;

use super::{BenchError, ExecutionMode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoPoint {
    pub mode: ExecutionMode,
    /// Ease of use for non-programmers, 1–5.
    pub accessibility: f64,
    pub avg_per_image_s: f64,
}

pub fn emit_pareto() -> Vec<ParetoPoint> {
    let p = |mode, accessibility, avg_per_image_s| ParetoPoint {
        mode,
        accessibility,
        avg_per_image_s,
    };
    vec![
        p(ExecutionMode::RpaUipath, 5.0, 2.58),
        p(ExecutionMode::RpaAutomationAnywhere, 4.7, 2.42),
        p(ExecutionMode::SingletonSequential, 3.0, 0.28),
        p(ExecutionMode::SingletonBatch, 1.5, 0.06),
    ]
}

/// True when, sorted by accessibility descending, per-image time strictly
/// decreases.
pub fn is_monotone_frontier(points: &[ParetoPoint]) -> bool {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| b.accessibility.total_cmp(&a.accessibility));
    sorted
        .windows(2)
        .all(|w| w[0].accessibility > w[1].accessibility && w[0].avg_per_image_s > w[1].avg_per_image_s)
}

/// Points not dominated by another point that is at least as accessible and
/// at least as fast, and strictly better in one of the two.
pub fn non_dominated(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    points
        .iter()
        .filter(|p| {
            !points.iter().any(|q| {
                q.accessibility >= p.accessibility
                    && q.avg_per_image_s <= p.avg_per_image_s
                    && (q.accessibility > p.accessibility || q.avg_per_image_s < p.avg_per_image_s)
            })
        })
        .copied()
        .collect()
}

pub const PARETO_HEADER: &str = "mode\taccessibility\tavg_per_image_s";

/// Tab-separated table with a header row.
pub fn pareto_table(points: &[ParetoPoint]) -> String {
    let mut out = format!("{PARETO_HEADER}\n");
    for p in points {
        let _ = writeln!(out, "{}\t{}\t{}", p.mode, p.accessibility, p.avg_per_image_s);
    }
    out
}

pub fn parse_pareto_table(text: &str) -> Result<Vec<ParetoPoint>, BenchError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == PARETO_HEADER => {}
        other => {
            return Err(BenchError::Parse(format!(
                "expected header `{PARETO_HEADER}`, got {other:?}"
            )))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(BenchError::Parse(format!("row {}: expected 3 columns", i + 1)));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| BenchError::Parse(format!("row {}: {e}", i + 1)))
            };
            Ok(ParetoPoint {
                mode: cols[0].parse()?,
                accessibility: num(cols[1])?,
                avg_per_image_s: num(cols[2])?,
            })
        })
        .collect()
}
