use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::classifier::SimulatedLatency;

/// The four benchmarked pipeline variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExecutionMode {
    /// UiPath-style: reload per image, per-image activity overhead.
    #[serde(rename = "rpa-uipath-emulated")]
    RpaUipath,
    /// Automation Anywhere-style: reload per image, per-image activity overhead.
    #[serde(rename = "rpa-aa-emulated")]
    RpaAutomationAnywhere,
    /// Load once, one image per prediction call.
    #[serde(rename = "v1-singleton-sequential")]
    SingletonSequential,
    /// Load once, images predicted in batches.
    #[serde(rename = "v2-singleton-batch")]
    SingletonBatch,
}

impl ExecutionMode {
    pub const ALL: [ExecutionMode; 4] = [
        Self::RpaUipath,
        Self::RpaAutomationAnywhere,
        Self::SingletonSequential,
        Self::SingletonBatch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::RpaUipath => "rpa-uipath-emulated",
            Self::RpaAutomationAnywhere => "rpa-aa-emulated",
            Self::SingletonSequential => "v1-singleton-sequential",
            Self::SingletonBatch => "v2-singleton-batch",
        }
    }

    /// Column heading used in printed tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Self::RpaUipath => "UiPath",
            Self::RpaAutomationAnywhere => "Automation Anywhere",
            Self::SingletonSequential => "Singleton v1",
            Self::SingletonBatch => "Singleton v2",
        }
    }

    pub fn is_rpa(self) -> bool {
        matches!(self, Self::RpaUipath | Self::RpaAutomationAnywhere)
    }

    /// Images handed to the backend per call.
    pub fn chunk_size(self, batch_size: usize) -> usize {
        match self {
            Self::SingletonBatch => batch_size.max(1),
            _ => 1,
        }
    }

    /// Parse a comma-separated list; `all` expands to every mode.
    pub fn parse_list(s: &str) -> Result<Vec<ExecutionMode>, BenchError> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(Self::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl FromStr for ExecutionMode {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "rpa-uipath-emulated" | "uipath" => Self::RpaUipath,
            "rpa-aa-emulated" | "aa" => Self::RpaAutomationAnywhere,
            "v1-singleton-sequential" | "v1" => Self::SingletonSequential,
            "v2-singleton-batch" | "v2" => Self::SingletonBatch,
            other => return Err(BenchError::UnknownMode(other.to_string())),
        })
    }
}

impl fmt::Display for ExecutionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parametric cost model, all values in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingModel {
    pub load_s: f64,
    /// Activity transitions plus data serialization per image, UiPath-style.
    pub rpa_overhead_uipath_s: f64,
    /// Same, Automation Anywhere-style.
    pub rpa_overhead_aa_s: f64,
    pub call_overhead_s: f64,
    pub batch_overhead_s: f64,
    pub infer_s: f64,
}

impl TimingModel {
    pub fn validate(&self) -> Result<(), BenchError> {
        for (name, v) in self.fields() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(BenchError::InvalidParameter(format!(
                    "{name} must be a non-negative number, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn fields(&self) -> [(&'static str, f64); 6] {
        [
            ("load_s", self.load_s),
            ("rpa_overhead_uipath_s", self.rpa_overhead_uipath_s),
            ("rpa_overhead_aa_s", self.rpa_overhead_aa_s),
            ("call_overhead_s", self.call_overhead_s),
            ("batch_overhead_s", self.batch_overhead_s),
            ("infer_s", self.infer_s),
        ]
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            load_s: self.load_s * k,
            rpa_overhead_uipath_s: self.rpa_overhead_uipath_s * k,
            rpa_overhead_aa_s: self.rpa_overhead_aa_s * k,
            call_overhead_s: self.call_overhead_s * k,
            batch_overhead_s: self.batch_overhead_s * k,
            infer_s: self.infer_s * k,
        }
    }

    /// Per-image platform overhead; zero outside the RPA modes.
    pub fn rpa_overhead_s(&self, mode: ExecutionMode) -> f64 {
        match mode {
            ExecutionMode::RpaUipath => self.rpa_overhead_uipath_s,
            ExecutionMode::RpaAutomationAnywhere => self.rpa_overhead_aa_s,
            _ => 0.0,
        }
    }

    /// Latencies the simulated backend realizes for `mode`.
    pub fn latency_profile(&self, mode: ExecutionMode) -> SimulatedLatency {
        SimulatedLatency {
            load_s: self.load_s,
            single_call_s: self.call_overhead_s,
            batch_call_s: self.batch_overhead_s,
            activity_s: self.rpa_overhead_s(mode),
            infer_s: self.infer_s,
        }
    }
}

/// Closed-form folder time.
///
/// ```text
/// rpa-*: n · (load + rpa_overhead + infer)
/// v1:    load + n · (call_overhead + infer)
/// v2:    load + ⌈n / batch⌉ · batch_overhead + n · infer
/// ```
///
/// A `batch_size` of zero is treated as one.
pub fn simulate_folder_time(mode: ExecutionMode, n: usize, tm: &TimingModel, batch_size: usize) -> f64 {
    let nf = n as f64;
    match mode {
        ExecutionMode::RpaUipath | ExecutionMode::RpaAutomationAnywhere => {
            nf * (tm.load_s + tm.rpa_overhead_s(mode) + tm.infer_s)
        }
        ExecutionMode::SingletonSequential => tm.load_s + nf * (tm.call_overhead_s + tm.infer_s),
        ExecutionMode::SingletonBatch => {
            let batches = n.div_ceil(batch_size.max(1)) as f64;
            tm.load_s + batches * tm.batch_overhead_s + nf * tm.infer_s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tm() -> TimingModel {
        TimingModel {
            load_s: 1.0,
            rpa_overhead_uipath_s: 2.0,
            rpa_overhead_aa_s: 1.5,
            call_overhead_s: 0.3,
            batch_overhead_s: 0.1,
            infer_s: 0.05,
        }
    }

    #[test]
    fn empty_folder() {
        for mode in ExecutionMode::ALL {
            let t = simulate_folder_time(mode, 0, &tm(), 32);
            let expect = if mode.is_rpa() { 0.0 } else { 1.0 };
            assert_eq!(t, expect, "{mode}");
        }
    }

    #[test]
    fn batch_count_rounds_up() {
        let t = simulate_folder_time(ExecutionMode::SingletonBatch, 33, &tm(), 32);
        assert!((t - (1.0 + 0.2 + 33.0 * 0.05)).abs() < 1e-12);
        let t = simulate_folder_time(ExecutionMode::SingletonBatch, 5, &tm(), 0);
        assert!((t - (1.0 + 0.5 + 0.25)).abs() < 1e-12);
    }

    #[test]
    fn one_image_v1_minus_v2_is_overhead_gap() {
        let v1 = simulate_folder_time(ExecutionMode::SingletonSequential, 1, &tm(), 32);
        let v2 = simulate_folder_time(ExecutionMode::SingletonBatch, 1, &tm(), 32);
        assert!((v1 - v2 - (0.3 - 0.1)).abs() < 1e-12);
    }

    #[test]
    fn mode_names_roundtrip() {
        for m in ExecutionMode::ALL {
            assert_eq!(m.as_str().parse::<ExecutionMode>().unwrap(), m);
        }
        assert_eq!("v2".parse::<ExecutionMode>().unwrap(), ExecutionMode::SingletonBatch);
        assert!("v3".parse::<ExecutionMode>().is_err());
        assert_eq!(ExecutionMode::parse_list("all").unwrap().len(), 4);
        assert_eq!(
            ExecutionMode::parse_list("v2, uipath,v2").unwrap(),
            vec![ExecutionMode::RpaUipath, ExecutionMode::SingletonBatch]
        );
    }

    #[test]
    fn negative_fields_rejected() {
        let bad = TimingModel {
            infer_s: -0.1,
            ..tm()
        };
        assert!(bad.validate().is_err());
        assert!(tm().validate().is_ok());
    }
}
