//! Arithmetic-intensity analysis and parameter sweeps on top of the latency
//! model.
//!
//! The machine is summarized by two numbers, peak throughput and external
//! bandwidth; a workload by its ops-per-byte ratio. Sweeps re-evaluate the
//! full model along one parameter axis and serialize to CSV with fixed
//! formatting so repeated runs diff cleanly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perf_model::{
    self, evaluate, ModelError, PerformanceReport, SystemConfig, WorkloadProfile,
};
use crate::util::{fmt_2dec, fmt_sig9};
use crate::workloads::WorkloadSpec;

#[derive(Debug, Error)]
pub enum RooflineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("arithmetic intensity undefined: workload {0} has no ops and no traffic")]
    UndefinedIntensity(String),
}

/// Two-parameter machine summary: compute roof and memory slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineModel {
    pub peak_ops_per_s: f64,
    pub bandwidth_bytes_per_s: f64,
}

impl MachineModel {
    pub fn from_config(cfg: &SystemConfig) -> Result<MachineModel, ModelError> {
        cfg.validate()?;
        Ok(MachineModel {
            peak_ops_per_s: perf_model::peak_performance(&cfg.arch()),
            bandwidth_bytes_per_s: cfg.b_bits_per_s / 8.0,
        })
    }

    /// Intensity at which the bandwidth slope meets the compute roof,
    /// ops/byte.
    pub fn ridge_point(&self) -> f64 {
        self.peak_ops_per_s / self.bandwidth_bytes_per_s
    }

    /// Roofline ceiling at a given intensity: min(peak, ai * bandwidth).
    pub fn attainable(&self, ai: f64) -> f64 {
        (ai * self.bandwidth_bytes_per_s).min(self.peak_ops_per_s)
    }
}

/// Ops per byte of streamed traffic. A workload with no traffic has
/// infinite intensity; one with neither ops nor traffic has none at all.
pub fn arithmetic_intensity(wl: &WorkloadProfile) -> Result<f64, RooflineError> {
    wl.validate().map_err(RooflineError::Model)?;
    if wl.s_bits == 0.0 {
        if wl.n_total == 0.0 {
            return Err(RooflineError::UndefinedIntensity(wl.name.clone()));
        }
        return Ok(f64::INFINITY);
    }
    Ok(wl.n_total / (wl.s_bits / 8.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundClass {
    ComputeBound,
    MemoryBound,
    Balanced,
}

impl BoundClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundClass::ComputeBound => "compute_bound",
            BoundClass::MemoryBound => "memory_bound",
            BoundClass::Balanced => "balanced",
        }
    }
}

/// Splits at the ridge point, with a 1e-9 relative band called balanced.
pub fn classify(ai: f64, machine: &MachineModel) -> BoundClass {
    let ridge = machine.ridge_point();
    if ai.is_infinite() {
        return BoundClass::ComputeBound;
    }
    if (ai - ridge).abs() / ridge < 1e-9 {
        return BoundClass::Balanced;
    }
    if ai > ridge {
        BoundClass::ComputeBound
    } else {
        BoundClass::MemoryBound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RooflinePoint {
    pub workload: String,
    pub arithmetic_intensity_ops_per_byte: f64,
    pub attainable_ops_per_s: f64,
    pub bound: BoundClass,
}

/// One sample of the piecewise roof curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoofSample {
    pub ai_ops_per_byte: f64,
    pub ops_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RooflineReport {
    pub machine: MachineModel,
    pub ridge_ops_per_byte: f64,
    pub points: Vec<RooflinePoint>,
    pub roof: Vec<RoofSample>,
}

/// Number of roof samples per decade of intensity.
const ROOF_SAMPLES_PER_DECADE: i32 = 20;

/// Places the given workloads on the machine's roofline. Works with an
/// empty workload list too, producing just the roof curve.
pub fn roofline_report(
    machine: &MachineModel,
    workloads: &[WorkloadProfile],
) -> Result<RooflineReport, RooflineError> {
    let mut points = Vec::with_capacity(workloads.len());
    for wl in workloads {
        let ai = arithmetic_intensity(wl)?;
        points.push(RooflinePoint {
            workload: wl.name.clone(),
            arithmetic_intensity_ops_per_byte: ai,
            attainable_ops_per_s: machine.attainable(ai),
            bound: classify(ai, machine),
        });
    }

    // Log-spaced curve over 10^-2 .. 10^4 ops/byte, plus the exact ridge
    // point so the knee renders sharply.
    let mut ais: Vec<f64> = (-2 * ROOF_SAMPLES_PER_DECADE..=4 * ROOF_SAMPLES_PER_DECADE)
        .map(|k| 10f64.powf(f64::from(k) / f64::from(ROOF_SAMPLES_PER_DECADE)))
        .collect();
    ais.push(machine.ridge_point());
    ais.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let roof = ais
        .into_iter()
        .map(|ai| RoofSample {
            ai_ops_per_byte: ai,
            ops_per_s: machine.attainable(ai),
        })
        .collect();

    Ok(RooflineReport {
        machine: *machine,
        ridge_ops_per_byte: machine.ridge_point(),
        points,
        roof,
    })
}

impl RooflineReport {
    pub const CSV_HEADER: &'static str =
        "workload,arithmetic_intensity_ops_per_byte,attainable_ops_per_s,bound";

    /// CSV of the workload points (the roof curve lives in the JSON form).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.workload,
                fmt_sig9(p.arithmetic_intensity_ops_per_byte),
                fmt_sig9(p.attainable_ops_per_s),
                p.bound.as_str()
            ));
        }
        out
    }
}

/// The sweepable model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// External bandwidth, bits/s.
    Bandwidth,
    /// Optical clock, Hz; energy figures track it.
    Frequency,
    /// Total conversion latency in seconds, split evenly across the two
    /// directions.
    ConversionLatency,
    /// Workload size axis (grid points, nonzeros or modes); needs a
    /// workload family, not a fixed profile.
    GridPoints,
    /// Array capacity in bitcells.
    ArrayBits,
}

impl SweepParam {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParam::Bandwidth => "bandwidth",
            SweepParam::Frequency => "frequency",
            SweepParam::ConversionLatency => "conversion_latency",
            SweepParam::GridPoints => "grid_points",
            SweepParam::ArrayBits => "array_bits",
        }
    }
}

/// What a sweep evaluates at each axis value: a frozen op/traffic profile,
/// or a workload family whose profile is recomputed (and, for the size
/// axis, resized) per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepWorkload {
    Fixed(WorkloadProfile),
    Spec(WorkloadSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepOptions {
    /// Worker threads for point evaluation; 0 runs sequentially. Results
    /// are ordered by axis position either way, so the output is identical.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: SweepParam,
    pub axis: Vec<f64>,
    pub reports: Vec<PerformanceReport>,
}

fn require_integer_axis(param: SweepParam, axis: &[f64]) -> Result<(), RooflineError> {
    for &v in axis {
        if v < 1.0 || v.fract() != 0.0 || v > 2f64.powi(53) {
            return Err(RooflineError::InvalidSweep(format!(
                "{} axis values must be positive integers, got {v}",
                param.as_str()
            )));
        }
    }
    Ok(())
}

fn validate_axis(param: SweepParam, axis: &[f64]) -> Result<(), RooflineError> {
    if axis.is_empty() {
        return Err(RooflineError::InvalidSweep("axis is empty".into()));
    }
    for &v in axis {
        if !v.is_finite() {
            return Err(RooflineError::InvalidSweep(format!(
                "axis values must be finite, got {v}"
            )));
        }
    }
    for pair in axis.windows(2) {
        if pair[1] <= pair[0] {
            return Err(RooflineError::InvalidSweep(format!(
                "axis must be strictly increasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    match param {
        SweepParam::Bandwidth | SweepParam::Frequency => {
            if axis[0] <= 0.0 {
                return Err(RooflineError::InvalidSweep(format!(
                    "{} axis values must be > 0",
                    param.as_str()
                )));
            }
        }
        SweepParam::ConversionLatency => {
            if axis[0] < 0.0 {
                return Err(RooflineError::InvalidSweep(
                    "conversion latency axis values must be >= 0".into(),
                ));
            }
        }
        SweepParam::GridPoints | SweepParam::ArrayBits => require_integer_axis(param, axis)?,
    }
    Ok(())
}

fn sweep_point(
    base: &SystemConfig,
    param: SweepParam,
    workload: &SweepWorkload,
    v: f64,
) -> Result<PerformanceReport, RooflineError> {
    let mut cfg = base.clone();
    match param {
        SweepParam::Bandwidth => cfg.b_bits_per_s = v,
        SweepParam::Frequency => cfg.f_hz = v,
        SweepParam::ConversionLatency => {
            cfg.t_eo_s = v / 2.0;
            cfg.t_oe_s = v / 2.0;
        }
        SweepParam::GridPoints => {}
        SweepParam::ArrayBits => cfg.c_total_bits = v as u64,
    }
    let profile = match workload {
        SweepWorkload::Fixed(p) => p.clone(),
        SweepWorkload::Spec(spec) => {
            let spec = if param == SweepParam::GridPoints {
                spec.with_size(v as u64)
            } else {
                *spec
            };
            spec.profile(cfg.w_bits)
        }
    };
    evaluate(&cfg.arch(), &cfg.memory(), &cfg.conversion(), &profile)
        .map_err(RooflineError::Model)
}

/// Re-evaluates the model at every axis value. The base config is
/// validated up front; per-point configs are validated again inside
/// `evaluate`, so a sweep that drives the config invalid (say, array
/// capacity below one word) fails rather than producing nonsense.
pub fn sweep(
    config: &SystemConfig,
    param: SweepParam,
    axis: &[f64],
    workload: &SweepWorkload,
    options: &SweepOptions,
) -> Result<SweepResult, RooflineError> {
    config.validate().map_err(RooflineError::Model)?;
    validate_axis(param, axis)?;
    if param == SweepParam::GridPoints && matches!(workload, SweepWorkload::Fixed(_)) {
        return Err(RooflineError::InvalidSweep(
            "grid_points sweep needs a workload family, not a fixed profile".into(),
        ));
    }

    let reports = if options.threads == 0 {
        axis.iter()
            .map(|&v| sweep_point(config, param, workload, v))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.threads)
            .build()
            .map_err(|e| RooflineError::InvalidSweep(e.to_string()))?;
        pool.install(|| {
            axis.par_iter()
                .map(|&v| sweep_point(config, param, workload, v))
                .collect::<Result<Vec<_>, _>>()
        })?
    };

    Ok(SweepResult {
        parameter: param,
        axis: axis.to_vec(),
        reports,
    })
}

impl SweepResult {
    /// Fixed-order CSV: one row per axis value, scientific notation with
    /// nine significant digits, LF line endings. Frequency sweeps append
    /// the two energy columns, rounded to two decimals.
    pub fn to_csv(&self) -> String {
        let energy_columns = self.parameter == SweepParam::Frequency;
        let mut out = String::from(
            "value,t_mem_s,t_conv_s,t_comp_s,t_total_s,sustained_ops_per_s,peak_ops_per_s",
        );
        if energy_columns {
            out.push_str(",energy_per_bit_pj,efficiency_tops_per_w");
        }
        out.push('\n');
        for (v, r) in self.axis.iter().zip(&self.reports) {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}",
                fmt_sig9(*v),
                fmt_sig9(r.breakdown.t_mem_s),
                fmt_sig9(r.breakdown.t_conv_s),
                fmt_sig9(r.breakdown.t_comp_s),
                fmt_sig9(r.breakdown.t_total_s),
                fmt_sig9(r.sustained_ops_per_s),
                fmt_sig9(r.peak_ops_per_s),
            ));
            if energy_columns {
                out.push_str(&format!(
                    ",{},{}",
                    fmt_2dec(r.energy_per_bit_j * 1e12),
                    fmt_2dec(r.efficiency_ops_per_j * 1e-12)
                ));
            }
            out.push('\n');
        }
        out
    }
}
