//! Fitting a [`TimingModel`] to observed folder times.
//!
//! Four folder times cannot pin six parameters, so calibration fixes the
//! per-image inference time first and then splits what remains:
//!
//! 1. Try the overhead-split route: `infer_s = 0.22 · uipath / n`, i.e. RPA
//!    runs spend 22% of their time in inference.
//! 2. If that leaves a negative budget for the load-once modes, fall back to
//!    the anchored route: inference takes the same share of the v2 folder
//!    time as in the reference solution (`31 · 0.05 / 1.96`).
//!
//! In both routes the v2 fixed cost `target_v2 − n · infer_s` is divided
//! between model load and per-batch overhead in the reference ratio 40 : 1,
//! v1's per-call overhead absorbs the rest of its target, and each RPA
//! platform's per-image overhead absorbs the rest of its own.
//!
//! The published folder times take route 2 and give the reference solution
//! `infer 0.05, load 0.40, batch 0.01, call 0.2161…, uipath 2.1306…,
//! aa 1.9694…`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{simulate_folder_time, BenchError, ExecutionMode, TimingModel};

pub const REFERENCE_IMAGES: usize = 31;
pub const REFERENCE_BATCH_SIZE: usize = 32;
/// Share of RPA run time attributed to inference.
pub const RPA_INFERENCE_SHARE: f64 = 0.22;

const REFERENCE_INFER_S: f64 = 0.05;
const REFERENCE_LOAD_S: f64 = 0.40;
const REFERENCE_BATCH_OVERHEAD_S: f64 = 0.01;
const REFERENCE_V2_S: f64 = 1.96;
const V2_INFERENCE_SHARE: f64 = REFERENCE_IMAGES as f64 * REFERENCE_INFER_S / REFERENCE_V2_S;
const LOAD_SHARE: f64 = REFERENCE_LOAD_S / (REFERENCE_LOAD_S + REFERENCE_BATCH_OVERHEAD_S);

/// Folder times per mode, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FolderTargets {
    pub uipath_s: f64,
    pub aa_s: f64,
    pub v1_s: f64,
    pub v2_s: f64,
}

impl FolderTargets {
    /// Measured folder times for the 31-image test set.
    pub const PUBLISHED: FolderTargets = FolderTargets {
        uipath_s: 80.0,
        aa_s: 75.0,
        v1_s: 8.65,
        v2_s: 1.96,
    };

    pub fn get(&self, mode: ExecutionMode) -> f64 {
        match mode {
            ExecutionMode::RpaUipath => self.uipath_s,
            ExecutionMode::RpaAutomationAnywhere => self.aa_s,
            ExecutionMode::SingletonSequential => self.v1_s,
            ExecutionMode::SingletonBatch => self.v2_s,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            uipath_s: self.uipath_s * k,
            aa_s: self.aa_s * k,
            v1_s: self.v1_s * k,
            v2_s: self.v2_s * k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CalibrationRoute {
    OverheadSplit,
    Anchored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub model: TimingModel,
    pub route: CalibrationRoute,
}

fn infeasible(parameter: &str, value: f64) -> BenchError {
    BenchError::CalibrationInfeasible {
        parameter: parameter.to_string(),
        value,
    }
}

fn check_inputs(targets: &FolderTargets, n: usize, batch_size: usize) -> Result<(), BenchError> {
    for mode in ExecutionMode::ALL {
        let v = targets.get(mode);
        if !(v > 0.0) || !v.is_finite() {
            return Err(infeasible(&format!("target[{mode}]"), v));
        }
    }
    if n == 0 {
        return Err(infeasible("n_images", 0.0));
    }
    if batch_size == 0 {
        return Err(infeasible("batch_size", 0.0));
    }
    Ok(())
}

/// Solve every other parameter exactly for a fixed `infer_s`.
fn solve_with_inference(
    targets: &FolderTargets,
    n: usize,
    batch_size: usize,
    infer_s: f64,
) -> Result<TimingModel, BenchError> {
    let nf = n as f64;
    let batches = n.div_ceil(batch_size) as f64;
    let v2_fixed = targets.v2_s - nf * infer_s;
    if v2_fixed < 0.0 {
        return Err(infeasible("load_s + batch_overhead_s", v2_fixed));
    }
    let load_s = v2_fixed * LOAD_SHARE;
    let batch_overhead_s = v2_fixed * (1.0 - LOAD_SHARE) / batches;
    let call_overhead_s = (targets.v1_s - load_s) / nf - infer_s;
    if call_overhead_s < 0.0 {
        return Err(infeasible("call_overhead_s", call_overhead_s));
    }
    let rpa = |t: f64| t / nf - load_s - infer_s;
    let rpa_overhead_uipath_s = rpa(targets.uipath_s);
    if rpa_overhead_uipath_s < 0.0 {
        return Err(infeasible("rpa_overhead_uipath_s", rpa_overhead_uipath_s));
    }
    let rpa_overhead_aa_s = rpa(targets.aa_s);
    if rpa_overhead_aa_s < 0.0 {
        return Err(infeasible("rpa_overhead_aa_s", rpa_overhead_aa_s));
    }
    Ok(TimingModel {
        load_s,
        rpa_overhead_uipath_s,
        rpa_overhead_aa_s,
        call_overhead_s,
        batch_overhead_s,
        infer_s,
    })
}

/// Fit all four folder times exactly, preferring the 78/22 overhead split.
pub fn calibrate_timing_model(
    targets: &FolderTargets,
    n: usize,
    batch_size: usize,
) -> Result<Calibration, BenchError> {
    check_inputs(targets, n, batch_size)?;
    let split_infer = RPA_INFERENCE_SHARE * targets.uipath_s / n as f64;
    match solve_with_inference(targets, n, batch_size, split_infer) {
        Ok(model) => Ok(Calibration {
            model,
            route: CalibrationRoute::OverheadSplit,
        }),
        Err(_) => {
            let infer = V2_INFERENCE_SHARE * targets.v2_s / n as f64;
            let model = solve_with_inference(targets, n, batch_size, infer)?;
            Ok(Calibration {
                model,
                route: CalibrationRoute::Anchored,
            })
        }
    }
}

/// Keep the 22% inference share and both RPA rows exact; fit v1 and v2 as
/// closely as non-negative overheads allow.
pub fn fit_overhead_split(
    targets: &FolderTargets,
    n: usize,
    batch_size: usize,
    inference_share: f64,
) -> Result<TimingModel, BenchError> {
    check_inputs(targets, n, batch_size)?;
    if !(0.0..=1.0).contains(&inference_share) {
        return Err(infeasible("inference_share", inference_share));
    }
    let nf = n as f64;
    let batches = n.div_ceil(batch_size) as f64;
    let infer_s = inference_share * targets.uipath_s / nf;
    let v2_fixed = targets.v2_s - nf * infer_s;
    let v1_fixed = targets.v1_s - nf * infer_s;
    let load_s = if v2_fixed >= 0.0 && v1_fixed >= 0.0 {
        (v2_fixed * LOAD_SHARE).min(v1_fixed)
    } else {
        0.0
    };
    let model = TimingModel {
        load_s,
        rpa_overhead_uipath_s: targets.uipath_s / nf - load_s - infer_s,
        rpa_overhead_aa_s: targets.aa_s / nf - load_s - infer_s,
        call_overhead_s: ((v1_fixed - load_s) / nf).max(0.0),
        batch_overhead_s: ((v2_fixed - load_s) / batches).max(0.0),
        infer_s,
    };
    for (name, v) in model.fields() {
        if v < 0.0 {
            return Err(infeasible(name, v));
        }
    }
    Ok(model)
}

/// Named calibration presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Preset {
    /// Reproduces every published folder time exactly.
    #[default]
    #[serde(rename = "table1-exact")]
    FolderExact,
    /// Reproduces the 78% / 22% RPA overhead split and both RPA rows.
    #[serde(rename = "overhead-78")]
    Overhead78,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::FolderExact => "table1-exact",
            Self::Overhead78 => "overhead-78",
        }
    }

    pub fn timing_model(self) -> TimingModel {
        let t = FolderTargets::PUBLISHED;
        match self {
            Self::FolderExact => {
                calibrate_timing_model(&t, REFERENCE_IMAGES, REFERENCE_BATCH_SIZE)
                    .expect("published targets are feasible")
                    .model
            }
            Self::Overhead78 => fit_overhead_split(&t, REFERENCE_IMAGES, REFERENCE_BATCH_SIZE, RPA_INFERENCE_SHARE)
                .expect("published RPA rows are feasible"),
        }
    }
}

impl FromStr for Preset {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table1-exact" => Ok(Self::FolderExact),
            "overhead-78" => Ok(Self::Overhead78),
            other => Err(BenchError::UnknownPreset(other.to_string())),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Largest relative error of the model against the targets.
pub fn max_relative_error(tm: &TimingModel, targets: &FolderTargets, n: usize, batch_size: usize) -> f64 {
    ExecutionMode::ALL
        .iter()
        .map(|&m| {
            let t = targets.get(m);
            (simulate_folder_time(m, n, tm, batch_size) - t).abs() / t
        })
        .fold(0.0, f64::max)
}
