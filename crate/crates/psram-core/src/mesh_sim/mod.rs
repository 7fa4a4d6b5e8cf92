//! Functional simulator for a 1-D mesh of MAC cells with nearest-neighbor
//! links.
//!
//! The mesh executes SPMD programs (see [`Program`]) over N virtual cells
//! mapped onto P physical cells by contiguous block distribution. Exchange
//! reads resolve against a register snapshot taken at step entry, so results
//! are independent of both cell execution order and P; P only changes the
//! cycle statistics.

mod exec;
mod program;

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use exec::{execute, ConstInit, MeshInputs, MeshOutputs, MeshRun};
pub use program::{
    BoundaryPolicy, Direction, Instruction, MacOp, Program, RegionSpec, StreamKind, StreamSpec,
    StreamWidth,
};

/// Fixed-point word widths above this would need more mantissa bits than an
/// f64 can represent exactly for a w x w product plus guard bits.
pub const MAX_FIXED_WORD_BITS: u32 = 22;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error(
        "step {step}: unmatched exchange ({sends_left} left sends vs {recvs_right} right recvs, \
         {sends_right} right sends vs {recvs_left} left recvs)"
    )]
    UnmatchedExchange {
        step: usize,
        sends_left: u64,
        recvs_right: u64,
        sends_right: u64,
        recvs_left: u64,
    },
    #[error("step {step}, cell {cell}: receive from {dir:?} with no matching send")]
    RecvUnderflow {
        step: usize,
        cell: u64,
        dir: Direction,
    },
    #[error("{what}: expected {expected} bindings, got {got}")]
    StreamCount {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{what} {index} ({name}): expected {expected} values, got {got}")]
    DataSize {
        what: &'static str,
        index: usize,
        name: String,
        expected: u64,
        got: u64,
    },
    #[error("constant preload: expected {expected} slot initializers, got {got}")]
    ConstInitCount { expected: u32, got: usize },
}

/// Value representation inside the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantization {
    /// Full f64 arithmetic; quantization is the identity.
    Real,
    /// Signed fixed point: w-bit words with `frac_bits` fractional bits,
    /// round-half-to-even, saturating at the word range.
    Fixed { frac_bits: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshConfig {
    /// Physical cell count.
    pub p: u64,
    /// Word width in bits; sets switching-event counts and, in fixed-point
    /// mode, the representable range.
    pub w_bits: u32,
    pub quantization: Quantization,
}

impl MeshConfig {
    pub fn real(p: u64, w_bits: u32) -> Self {
        MeshConfig {
            p,
            w_bits,
            quantization: Quantization::Real,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.p == 0 {
            return Err(SimError::InvalidMesh("p must be >= 1".into()));
        }
        if self.w_bits == 0 {
            return Err(SimError::InvalidMesh("w_bits must be >= 1".into()));
        }
        if let Quantization::Fixed { frac_bits } = self.quantization {
            if self.w_bits > MAX_FIXED_WORD_BITS {
                return Err(SimError::InvalidMesh(format!(
                    "fixed-point words wider than {MAX_FIXED_WORD_BITS} bits lose exactness \
                     (got w_bits = {})",
                    self.w_bits
                )));
            }
            if frac_bits >= self.w_bits {
                return Err(SimError::InvalidMesh(format!(
                    "frac_bits ({frac_bits}) must be < w_bits ({})",
                    self.w_bits
                )));
            }
        }
        Ok(())
    }
}

/// Applies the mesh's value representation to `x`.
///
/// In fixed-point mode: scale by 2^frac_bits, round half to even, saturate to
/// the signed w-bit range, scale back. The result is always exactly
/// representable, and |quantize(x) - x| <= 2^-(frac_bits+1) for in-range x.
pub fn quantize(x: f64, mesh: &MeshConfig) -> f64 {
    match mesh.quantization {
        Quantization::Real => x,
        Quantization::Fixed { frac_bits } => {
            let scale = (1u64 << frac_bits) as f64;
            let hi = ((1u64 << (mesh.w_bits - 1)) - 1) as f64;
            let lo = -((1u64 << (mesh.w_bits - 1)) as f64);
            let r = (x * scale).round_ties_even();
            r.clamp(lo, hi) / scale
        }
    }
}

/// Contiguous block mapping of `n` virtual cells onto `p` physical cells.
/// The first `n % p` blocks get the extra element; empty blocks are allowed
/// when p > n.
pub fn block_distribution(n: u64, p: u64) -> Result<Vec<Range<u64>>, SimError> {
    if p == 0 {
        return Err(SimError::InvalidMesh("p must be >= 1".into()));
    }
    let base = n / p;
    let extra = n % p;
    let mut out = Vec::with_capacity(p as usize);
    let mut start = 0u64;
    for i in 0..p {
        let len = base + u64::from(i < extra);
        out.push(start..start + len);
        start += len;
    }
    Ok(out)
}

/// Cycle and traffic counters for one program execution.
///
/// `total_cycles` honors the program's fusion flag; both the fused and
/// unfused schedules are also reported unconditionally, and mirror a step
/// law of ceil(N/P) times the per-cell cycles of that step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub mac_cycles: u64,
    pub comm_cycles: u64,
    pub io_cycles: u64,
    pub total_cycles_fused: u64,
    pub total_cycles_unfused: u64,
    pub total_cycles: u64,
    /// MAC executions summed over virtual cells (2 ops each).
    pub macs_executed: u64,
    /// Bits moved across the array edge: per-cell elements count N times
    /// their width, broadcast elements once.
    pub io_bits: u64,
    /// macs_executed * w_bits: one switching event per bit line per MAC.
    pub switching_events: u64,
    /// Busy cycles per physical cell (length P).
    pub per_cell_cycles: Vec<u64>,
}

impl SimStats {
    /// Accumulates another run's counters into this one, for workloads that
    /// execute a program repeatedly.
    pub fn merge(&mut self, other: &SimStats) {
        self.mac_cycles += other.mac_cycles;
        self.comm_cycles += other.comm_cycles;
        self.io_cycles += other.io_cycles;
        self.total_cycles_fused += other.total_cycles_fused;
        self.total_cycles_unfused += other.total_cycles_unfused;
        self.total_cycles += other.total_cycles;
        self.macs_executed += other.macs_executed;
        self.io_bits += other.io_bits;
        self.switching_events += other.switching_events;
        if self.per_cell_cycles.is_empty() {
            self.per_cell_cycles = other.per_cell_cycles.clone();
        } else {
            for (a, b) in self.per_cell_cycles.iter_mut().zip(&other.per_cell_cycles) {
                *a += b;
            }
        }
    }
}
