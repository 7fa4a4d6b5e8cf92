//! Closed-form performance model for a 1D photonic SRAM compute array.
//!
//! The model splits end-to-end workload latency into three additive terms:
//! external-memory transfer, opto-electronic conversion, and optical compute.
//! Throughput, energy and area all derive from a handful of architecture
//! parameters, so every operation here is a pure function over small config
//! records.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::fmt_sig9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid config: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("array has no compute cells: word width {w_bits} bits exceeds capacity {c_total_bits} bits")]
    NoComputeCells { c_total_bits: u64, w_bits: u32 },
    #[error("sustained performance undefined: empty workload with zero total latency")]
    UndefinedSustained,
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidConfig {
        field,
        reason: reason.into(),
    }
}

fn require_positive(field: &'static str, v: f64) -> Result<(), ModelError> {
    if !(v.is_finite() && v > 0.0) {
        return Err(invalid(field, format!("must be finite and > 0, got {v}")));
    }
    Ok(())
}

fn require_non_negative(field: &'static str, v: f64) -> Result<(), ModelError> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(invalid(field, format!("must be finite and >= 0, got {v}")));
    }
    Ok(())
}

/// Flat on-disk configuration record.
///
/// This is the schema of the JSON config files the CLI consumes; the three
/// per-domain views ([`ArchConfig`], [`MemoryConfig`], [`ConversionConfig`])
/// are projected from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Total array capacity in bitcells.
    pub c_total_bits: u64,
    /// Operand word width in bits; one compute cell spans `w_bits` bitcells.
    pub w_bits: u32,
    /// Optical clock frequency in Hz.
    pub f_hz: f64,
    /// Scalar operations per compute cell per cycle (2 for multiply-accumulate).
    pub ops_per_cycle: u32,
    /// Switching energy per bitcell at the reference frequency, joules.
    pub e_bit_ref_j: f64,
    /// Reference frequency for the energy scaling law, Hz.
    pub f_ref_hz: f64,
    /// Bitcell footprint in mm^2.
    pub a_bitcell_mm2: f64,
    /// External memory bandwidth in bits/s.
    pub b_bits_per_s: f64,
    /// Fixed external-memory access latency, seconds.
    pub t_access_s: f64,
    /// Electrical-to-optical conversion latency, seconds.
    pub t_eo_s: f64,
    /// Optical-to-electrical conversion latency, seconds.
    pub t_oe_s: f64,
}

impl SystemConfig {
    /// Defaults for the 1x256-bit array: 8-bit words, 32 GHz clock,
    /// 0.5 pJ/bit at 20 GHz, 0.1 mm^2 bitcells, HBM3E-class bandwidth.
    /// Access and conversion latencies default to zero and are expected to be
    /// overridden per experiment.
    pub fn reference() -> Self {
        SystemConfig {
            c_total_bits: 256,
            w_bits: 8,
            f_hz: 32e9,
            ops_per_cycle: 2,
            e_bit_ref_j: 0.5e-12,
            f_ref_hz: 20e9,
            a_bitcell_mm2: 0.1,
            b_bits_per_s: 9.8e12,
            t_access_s: 0.0,
            t_eo_s: 0.0,
            t_oe_s: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.arch().validate()?;
        self.memory().validate()?;
        self.conversion().validate()
    }

    pub fn arch(&self) -> ArchConfig {
        ArchConfig {
            c_total_bits: self.c_total_bits,
            w_bits: self.w_bits,
            f_hz: self.f_hz,
            ops_per_cycle: self.ops_per_cycle,
            e_bit_ref_j: self.e_bit_ref_j,
            f_ref_hz: self.f_ref_hz,
            a_bitcell_mm2: self.a_bitcell_mm2,
        }
    }

    pub fn memory(&self) -> MemoryConfig {
        MemoryConfig {
            b_bits_per_s: self.b_bits_per_s,
            t_access_s: self.t_access_s,
        }
    }

    pub fn conversion(&self) -> ConversionConfig {
        ConversionConfig {
            t_eo_s: self.t_eo_s,
            t_oe_s: self.t_oe_s,
        }
    }
}

/// Compute-array parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub c_total_bits: u64,
    pub w_bits: u32,
    pub f_hz: f64,
    pub ops_per_cycle: u32,
    pub e_bit_ref_j: f64,
    pub f_ref_hz: f64,
    pub a_bitcell_mm2: f64,
}

impl ArchConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.c_total_bits == 0 {
            return Err(invalid("c_total_bits", "must be >= 1"));
        }
        if self.w_bits == 0 {
            return Err(invalid("w_bits", "must be >= 1"));
        }
        if u64::from(self.w_bits) > self.c_total_bits {
            return Err(invalid(
                "w_bits",
                format!(
                    "word width {} exceeds array capacity {}",
                    self.w_bits, self.c_total_bits
                ),
            ));
        }
        if self.ops_per_cycle == 0 {
            return Err(invalid("ops_per_cycle", "must be >= 1"));
        }
        require_positive("f_hz", self.f_hz)?;
        require_positive("e_bit_ref_j", self.e_bit_ref_j)?;
        require_positive("f_ref_hz", self.f_ref_hz)?;
        require_positive("a_bitcell_mm2", self.a_bitcell_mm2)
    }
}

/// External memory parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryConfig {
    pub b_bits_per_s: f64,
    pub t_access_s: f64,
}

impl MemoryConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        require_positive("b_bits_per_s", self.b_bits_per_s)?;
        require_non_negative("t_access_s", self.t_access_s)
    }
}

/// Opto-electronic conversion latencies, one per direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversionConfig {
    pub t_eo_s: f64,
    pub t_oe_s: f64,
}

impl ConversionConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        require_non_negative("t_eo_s", self.t_eo_s)?;
        require_non_negative("t_oe_s", self.t_oe_s)
    }
}

/// Aggregate workload description: total scalar operations and total
/// streamed traffic. Counts are carried as f64 so synthetic asymptote
/// studies can exceed integer range; concrete kernels always produce exact
/// integral values well inside the 2^53 window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadProfile {
    pub name: String,
    /// Total scalar operations (a multiply-accumulate counts as 2).
    pub n_total: f64,
    /// Total input + output traffic in bits.
    pub s_bits: f64,
}

impl WorkloadProfile {
    pub fn new(name: impl Into<String>, n_total: f64, s_bits: f64) -> Self {
        WorkloadProfile {
            name: name.into(),
            n_total,
            s_bits,
        }
    }

    pub fn empty(name: impl Into<String>) -> Self {
        WorkloadProfile::new(name, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        require_non_negative("n_total", self.n_total)?;
        require_non_negative("s_bits", self.s_bits)
    }
}

/// Additive latency decomposition. `t_total_s` is always the left-to-right
/// sum of the three terms, so the decomposition identity holds exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub t_mem_s: f64,
    pub t_conv_s: f64,
    pub t_comp_s: f64,
    pub t_total_s: f64,
}

/// Full model output for one (config, workload) pair. SI base units
/// throughout; presentation-level rounding is left to the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub workload: String,
    pub breakdown: LatencyBreakdown,
    pub sustained_ops_per_s: f64,
    pub peak_ops_per_s: f64,
    pub compute_cells: u64,
    pub energy_per_bit_j: f64,
    /// Bit-level convention: 2 ops per bitcell switching event.
    pub efficiency_ops_per_j: f64,
    /// Word-level convention for comparison: 2 ops per w-bit MAC, w switching
    /// events per MAC. Differs from the bit-level figure by a factor of w.
    pub efficiency_word_ops_per_j: f64,
    pub psram_energy_j: f64,
    pub area_mm2: f64,
}

/// Number of w-bit compute cells the array holds: floor(C_total / w).
pub fn compute_cells(arch: &ArchConfig) -> u64 {
    arch.c_total_bits / u64::from(arch.w_bits)
}

/// Peak throughput in ops/s: P * F * Ops.
pub fn peak_performance(arch: &ArchConfig) -> f64 {
    compute_cells(arch) as f64 * arch.f_hz * f64::from(arch.ops_per_cycle)
}

/// External-memory time: fixed access latency plus streaming transfer.
pub fn t_mem(mem: &MemoryConfig, wl: &WorkloadProfile) -> f64 {
    mem.t_access_s + wl.s_bits / mem.b_bits_per_s
}

/// Total conversion overhead, one traversal each way per workload.
pub fn t_conv(conv: &ConversionConfig) -> f64 {
    conv.t_eo_s + conv.t_oe_s
}

/// Compute time at full array utilization: N_total / (P * Ops * F).
pub fn t_comp(arch: &ArchConfig, wl: &WorkloadProfile) -> Result<f64, ModelError> {
    let p = compute_cells(arch);
    if p == 0 {
        return Err(ModelError::NoComputeCells {
            c_total_bits: arch.c_total_bits,
            w_bits: arch.w_bits,
        });
    }
    Ok(wl.n_total / peak_performance(arch))
}

/// Full latency decomposition: T_total = T_mem + T_conv + T_comp.
pub fn t_total(
    arch: &ArchConfig,
    mem: &MemoryConfig,
    conv: &ConversionConfig,
    wl: &WorkloadProfile,
) -> Result<LatencyBreakdown, ModelError> {
    let t_mem_s = t_mem(mem, wl);
    let t_conv_s = t_conv(conv);
    let t_comp_s = t_comp(arch, wl)?;
    Ok(LatencyBreakdown {
        t_mem_s,
        t_conv_s,
        t_comp_s,
        t_total_s: t_mem_s + t_conv_s + t_comp_s,
    })
}

/// Sustained throughput: N_total / T_total, bounded above by the peak.
///
/// The bound is mathematical (T_total >= T_comp = N_total/peak); the final
/// division can still land one ulp above peak, so the result is pinned.
pub fn sustained_performance(
    arch: &ArchConfig,
    mem: &MemoryConfig,
    conv: &ConversionConfig,
    wl: &WorkloadProfile,
) -> Result<f64, ModelError> {
    let breakdown = t_total(arch, mem, conv, wl)?;
    sustained_from_breakdown(arch, wl, &breakdown)
}

fn sustained_from_breakdown(
    arch: &ArchConfig,
    wl: &WorkloadProfile,
    breakdown: &LatencyBreakdown,
) -> Result<f64, ModelError> {
    if breakdown.t_total_s == 0.0 {
        if wl.n_total == 0.0 {
            return Err(ModelError::UndefinedSustained);
        }
        // n_total > 0 forces t_comp > 0 for any finite peak, so this arm is
        // unreachable for validated configs; keep the peak as the limit value.
        return Ok(peak_performance(arch));
    }
    let sustained = wl.n_total / breakdown.t_total_s;
    Ok(sustained.min(peak_performance(arch)))
}

/// Switching energy per bitcell, linear in clock frequency:
/// E_bit = E_ref * (F / F_ref).
pub fn energy_per_bit(arch: &ArchConfig) -> f64 {
    arch.e_bit_ref_j * (arch.f_hz / arch.f_ref_hz)
}

/// Ops per joule under the bit-level convention: each switching event powers
/// one MAC's worth of work in its bitcell, i.e. 2 ops per E_bit.
pub fn energy_efficiency(arch: &ArchConfig) -> f64 {
    2.0 / energy_per_bit(arch)
}

/// Ops per joule under the word-level convention: 2 ops per w-bit MAC at
/// w switching events per MAC.
pub fn energy_efficiency_word(arch: &ArchConfig) -> f64 {
    2.0 / (f64::from(arch.w_bits) * energy_per_bit(arch))
}

/// Energy for a measured workload: switching events times E_bit.
pub fn workload_energy(arch: &ArchConfig, switching_events: u64) -> f64 {
    switching_events as f64 * energy_per_bit(arch)
}

/// Array area: every bitcell pays the same footprint.
pub fn array_area(arch: &ArchConfig) -> f64 {
    arch.c_total_bits as f64 * arch.a_bitcell_mm2
}

/// Evaluates the whole model for one workload and bundles the result.
pub fn evaluate(
    arch: &ArchConfig,
    mem: &MemoryConfig,
    conv: &ConversionConfig,
    wl: &WorkloadProfile,
) -> Result<PerformanceReport, ModelError> {
    arch.validate()?;
    mem.validate()?;
    conv.validate()?;
    wl.validate()?;

    let breakdown = t_total(arch, mem, conv, wl)?;
    let sustained_ops_per_s = match sustained_from_breakdown(arch, wl, &breakdown) {
        Ok(s) => s,
        // Empty workload with zero overheads: latency and throughput are both
        // zero-content; report zero rather than failing the whole evaluation.
        Err(ModelError::UndefinedSustained) => 0.0,
        Err(e) => return Err(e),
    };
    let e_bit = energy_per_bit(arch);
    // One switching event per engaged bitcell per MAC: w events per w-bit MAC.
    let switching_events = (wl.n_total / 2.0) * f64::from(arch.w_bits);

    Ok(PerformanceReport {
        workload: wl.name.clone(),
        breakdown,
        sustained_ops_per_s,
        peak_ops_per_s: peak_performance(arch),
        compute_cells: compute_cells(arch),
        energy_per_bit_j: e_bit,
        efficiency_ops_per_j: energy_efficiency(arch),
        efficiency_word_ops_per_j: energy_efficiency_word(arch),
        psram_energy_j: switching_events * e_bit,
        area_mm2: array_area(arch),
    })
}

impl PerformanceReport {
    pub const CSV_HEADER: &'static str = "workload,compute_cells,t_mem_s,t_conv_s,t_comp_s,t_total_s,\
        sustained_ops_per_s,peak_ops_per_s,energy_per_bit_j,efficiency_ops_per_j,psram_energy_j,area_mm2";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.workload,
            self.compute_cells,
            fmt_sig9(self.breakdown.t_mem_s),
            fmt_sig9(self.breakdown.t_conv_s),
            fmt_sig9(self.breakdown.t_comp_s),
            fmt_sig9(self.breakdown.t_total_s),
            fmt_sig9(self.sustained_ops_per_s),
            fmt_sig9(self.peak_ops_per_s),
            fmt_sig9(self.energy_per_bit_j),
            fmt_sig9(self.efficiency_ops_per_j),
            fmt_sig9(self.psram_energy_j),
            fmt_sig9(self.area_mm2),
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }
}
