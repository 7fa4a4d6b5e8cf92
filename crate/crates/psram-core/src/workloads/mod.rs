//! The three reference streaming kernels, each in three forms: a closed-form
//! traffic/op profile, a runnable mesh program, and an independent scalar
//! oracle the program is validated against.

mod mttkrp;
mod sst;
mod tns;
mod vlasov;

pub use mttkrp::{
    mttkrp_build_program, mttkrp_dense_oracle, mttkrp_oracle, mttkrp_profile, mttkrp_run,
    random_factor, random_tensor, FactorMatrix, MttkrpRun, SparseTensor,
};
pub use sst::{
    sst_build_program, sst_corrector_program, sst_oracle_canonical_run, sst_oracle_pass,
    sst_oracle_run, sst_oracle_step, sst_oracle_step_diag, sst_profile, sst_run_canonical,
    sst_run_streaming, EulerState, PrimitiveState, SodConfig, SstRun, SstStepDiag,
};
pub use tns::parse_tns;
pub use vlasov::{
    circular_convolution_oracle, dft, idft, spectral_convolution, vlasov_build_program,
    vlasov_oracle, vlasov_profile, vlasov_run, SpectralConfig,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh_sim::{SimError, SimStats};
use crate::perf_model::WorkloadProfile;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("step {step}, cell {cell}: non-physical state ({what} = {value})")]
    NonPhysical {
        step: u64,
        cell: u64,
        what: &'static str,
        value: f64,
    },
    #[error("invalid workload: {0}")]
    Invalid(String),
    #[error("tensor parse: line {line}: {reason}")]
    TensorParse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A workload family selected by size, used by sweeps and the roofline
/// report. `Sst` counts streaming passes in `steps`; `Mttkrp` profiles a
/// tensor by nonzero count alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorkloadSpec {
    Sst { n: u64, steps: u64 },
    Mttkrp { nnz: u64, rank: u32 },
    Vlasov { n_modes: u64 },
}

impl WorkloadSpec {
    pub fn name(&self) -> String {
        match self {
            WorkloadSpec::Sst { n, steps } => format!("sst-n{n}-s{steps}"),
            WorkloadSpec::Mttkrp { nnz, rank } => format!("mttkrp-nnz{nnz}-r{rank}"),
            WorkloadSpec::Vlasov { n_modes } => format!("vlasov-m{n_modes}"),
        }
    }

    /// Closed-form op and traffic counts at word width `w_bits`.
    pub fn profile(&self, w_bits: u32) -> WorkloadProfile {
        match *self {
            WorkloadSpec::Sst { n, steps } => sst_profile(n, steps, w_bits),
            WorkloadSpec::Mttkrp { nnz, rank } => mttkrp_profile(nnz, rank, w_bits),
            WorkloadSpec::Vlasov { n_modes } => vlasov_profile(n_modes, w_bits),
        }
    }

    /// Same family at a different size; the size axis is grid points,
    /// nonzeros, or mode count respectively.
    pub fn with_size(&self, size: u64) -> WorkloadSpec {
        match *self {
            WorkloadSpec::Sst { steps, .. } => WorkloadSpec::Sst { n: size, steps },
            WorkloadSpec::Mttkrp { rank, .. } => WorkloadSpec::Mttkrp { nnz: size, rank },
            WorkloadSpec::Vlasov { .. } => WorkloadSpec::Vlasov { n_modes: size },
        }
    }
}

/// Converts measured simulator counters into a model workload: each MAC is
/// two ops, and the traffic term is the measured edge traffic.
pub fn profile_to_workload(stats: &SimStats, name: &str) -> WorkloadProfile {
    WorkloadProfile::new(
        name,
        2.0 * stats.macs_executed as f64,
        stats.io_bits as f64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_profiles_match_the_closed_forms() {
        let p = WorkloadSpec::Sst { n: 100, steps: 1 }.profile(8);
        assert_eq!(p.n_total, 3000.0);
        assert_eq!(p.s_bits, 7200.0);

        let p = WorkloadSpec::Mttkrp { nnz: 1, rank: 2 }.profile(8);
        assert_eq!(p.n_total, 8.0);
        assert_eq!(p.s_bits, 168.0);

        let p = WorkloadSpec::Vlasov { n_modes: 1 }.profile(8);
        assert_eq!(p.n_total, 12.0);
        assert_eq!(p.s_bits, 48.0);
    }

    #[test]
    fn with_size_rescales_the_size_axis_only() {
        let s = WorkloadSpec::Sst { n: 100, steps: 7 }.with_size(500);
        assert_eq!(s, WorkloadSpec::Sst { n: 500, steps: 7 });
        let m = WorkloadSpec::Mttkrp { nnz: 10, rank: 4 }.with_size(99);
        assert_eq!(m, WorkloadSpec::Mttkrp { nnz: 99, rank: 4 });
        let v = WorkloadSpec::Vlasov { n_modes: 4 }.with_size(64);
        assert_eq!(v, WorkloadSpec::Vlasov { n_modes: 64 });
    }

    #[test]
    fn zero_sized_profiles_are_empty() {
        for spec in [
            WorkloadSpec::Sst { n: 100, steps: 0 },
            WorkloadSpec::Mttkrp { nnz: 0, rank: 16 },
            WorkloadSpec::Vlasov { n_modes: 0 },
        ] {
            let p = spec.profile(8);
            assert_eq!((p.n_total, p.s_bits), (0.0, 0.0), "{spec:?}");
        }
    }
}
