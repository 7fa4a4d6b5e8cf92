//! Performance modeling and functional simulation for photonic SRAM (pSRAM)
//! in-memory compute arrays.
//!
//! The crate has four parts:
//!
//! * [`perf_model`] - closed-form latency, throughput, energy and area model
//!   for a 1D array of optical multiply-accumulate cells fed from external
//!   memory through opto-electronic converters.
//! * [`roofline`] - arithmetic-intensity analysis and parameter sweeps on top
//!   of the model.
//! * [`mesh_sim`] - a functional simulator for the SPMD nearest-neighbor
//!   compute mesh, with cycle and traffic accounting and optional fixed-point
//!   quantization.
//! * [`workloads`] - three reference kernels (a 1D shock-tube solver, sparse
//!   MTTKRP, and a spectral Vlasov/convolution kernel) built both as closed
//!   -form profiles and as runnable mesh programs, each validated against an
//!   independent scalar oracle.

pub mod mesh_sim;
pub mod perf_model;
pub mod roofline;
pub mod workloads;

mod util;

pub use mesh_sim::{execute, BoundaryPolicy, Instruction, MeshConfig, Program, Quantization, SimStats};
pub use perf_model::{
    evaluate, ArchConfig, ConversionConfig, LatencyBreakdown, MemoryConfig, PerformanceReport,
    SystemConfig, WorkloadProfile,
};
pub use roofline::{BoundClass, MachineModel, RooflinePoint, SweepParam, SweepResult};
pub use workloads::WorkloadSpec;
