//! The `simulate` subcommand: run one kernel on the mesh simulator, compare
//! it against its scalar oracle, and report counters plus derived energy.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use psram_core::mesh_sim::{MeshConfig, Quantization, SimStats};
use psram_core::perf_model::{workload_energy, SystemConfig};
use psram_core::workloads::{
    circular_convolution_oracle, mttkrp_dense_oracle, mttkrp_oracle, mttkrp_run, parse_tns,
    random_factor, random_tensor, spectral_convolution, sst_oracle_run, sst_run_streaming,
    vlasov_oracle, vlasov_run, SodConfig, SparseTensor, SpectralConfig, WorkloadError,
};

use crate::{runtime, validation, Cli, CliError, Emitter, SizeArgs};

#[derive(Args)]
pub(crate) struct SimulateArgs {
    /// Kernel to run: sst, mttkrp, vlasov or convolution.
    #[arg(long)]
    workload: String,
    #[command(flatten)]
    size: SizeArgs,
    /// Tensor dimensions I0xI1xI2 for a generated mttkrp input.
    #[arg(long)]
    dims: Option<String>,
    /// Nonzero density in (0, 1] for a generated mttkrp input.
    #[arg(long)]
    density: Option<f64>,
    /// Coordinate-format tensor file (mttkrp); overrides --dims/--density.
    #[arg(long)]
    tensor: Option<PathBuf>,
    /// Physical compute cells to virtualize over.
    #[arg(long, default_value_t = 32)]
    cells: u64,
    /// Arithmetic mode: real or fixed.
    #[arg(long, default_value = "real")]
    quantization: String,
    /// Fraction bits in fixed mode (word width comes from the config).
    #[arg(long)]
    frac_bits: Option<u32>,
}

/// Everything the command reports: counters, derived energy, and the
/// oracle comparison. Errors are relative to max(|reference|, 1).
#[derive(Serialize)]
struct SimulateOutcome {
    workload: String,
    cells: u64,
    w_bits: u32,
    quantization: Quantization,
    stats: SimStats,
    energy_j: f64,
    max_oracle_err: f64,
    tolerance: f64,
    within_tolerance: bool,
    output: serde_json::Value,
}

impl SimulateOutcome {
    fn to_csv(&self) -> String {
        format!(
            "workload,cells,total_cycles,macs_executed,io_bits,switching_events,energy_j,\
             max_oracle_err\n{},{},{},{},{},{},{:.8e},{:.8e}\n",
            self.workload,
            self.cells,
            self.stats.total_cycles,
            self.stats.macs_executed,
            self.stats.io_bits,
            self.stats.switching_events,
            self.energy_j,
            self.max_oracle_err,
        )
    }
}

fn workload_err(e: WorkloadError) -> CliError {
    match e {
        WorkloadError::Sim(_) | WorkloadError::NonPhysical { .. } => runtime(e.to_string()),
        other => validation(other.to_string()),
    }
}

fn rel_err(got: f64, reference: f64) -> f64 {
    (got - reference).abs() / reference.abs().max(1.0)
}

/// Worst-case linear error growth for a chain of quantized MACs: each one
/// contributes at most half an LSB.
fn chain_tolerance(chain_len: u64, frac_bits: u32) -> f64 {
    chain_len as f64 * 2f64.powi(-(frac_bits as i32) - 1)
}

fn parse_quantization(args: &SimulateArgs) -> Result<Quantization, CliError> {
    match args.quantization.as_str() {
        "real" => {
            if args.frac_bits.is_some() {
                return Err(validation("--frac-bits only applies to --quantization fixed"));
            }
            Ok(Quantization::Real)
        }
        "fixed" => Ok(Quantization::Fixed {
            frac_bits: args.frac_bits.unwrap_or(4),
        }),
        other => Err(validation(format!(
            "unknown quantization '{other}'; known modes: real, fixed"
        ))),
    }
}

fn parse_dims(text: &str) -> Result<[u64; 3], CliError> {
    let parts: Vec<&str> = text.split('x').collect();
    let bad = || validation(format!("dims '{text}' must look like 8x8x8"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut dims = [0u64; 3];
    for (slot, part) in dims.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| bad())?;
        if *slot == 0 {
            return Err(bad());
        }
    }
    Ok(dims)
}

fn random_spectral(n: u64, seed: u64) -> SpectralConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fill = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    };
    SpectralConfig {
        n_modes: n,
        k_r: fill(&mut rng),
        k_i: fill(&mut rng),
        z_r: fill(&mut rng),
        z_i: fill(&mut rng),
        f_r: fill(&mut rng),
        f_i: fill(&mut rng),
    }
}

pub(crate) fn cmd_simulate(
    cli: &Cli,
    config: &SystemConfig,
    args: &SimulateArgs,
) -> Result<(), CliError> {
    let quantization = parse_quantization(args)?;
    let mesh = MeshConfig {
        p: args.cells,
        w_bits: config.w_bits,
        quantization,
    };
    mesh.validate().map_err(|e| validation(e.to_string()))?;

    let mut inputs = Vec::new();
    let (name, stats, max_oracle_err, tolerance, extra_ok, output) = match args.workload.as_str() {
        "sst" => run_sst(args, &mesh)?,
        "mttkrp" => run_mttkrp(cli, args, &mesh, &mut inputs)?,
        "vlasov" => run_vlasov(cli, args, &mesh)?,
        "convolution" => run_convolution(cli, args, &mesh)?,
        other => {
            return Err(validation(format!(
                "unknown workload '{other}'; known workloads: sst, mttkrp, vlasov, convolution"
            )))
        }
    };

    let outcome = SimulateOutcome {
        workload: name,
        cells: mesh.p,
        w_bits: mesh.w_bits,
        quantization: mesh.quantization,
        energy_j: workload_energy(&config.arch(), stats.switching_events),
        within_tolerance: max_oracle_err <= tolerance && extra_ok,
        stats,
        max_oracle_err,
        tolerance,
        output,
    };

    println!(
        "{}: {} cells, {} cycles, {} MACs, {} io bits, {} switching events",
        outcome.workload,
        outcome.cells,
        outcome.stats.total_cycles,
        outcome.stats.macs_executed,
        outcome.stats.io_bits,
        outcome.stats.switching_events
    );
    println!(
        "energy {:.8e} J; max oracle error {:.8e} (tolerance {:.8e})",
        outcome.energy_j, outcome.max_oracle_err, outcome.tolerance
    );

    let mut emitter = Emitter::new(cli)?;
    emitter.write_json(&format!("simulate-{}.json", args.workload), &outcome)?;
    emitter.write_csv(&format!("simulate-{}.csv", args.workload), &outcome.to_csv())?;
    emitter.finish(cli, "simulate", config, inputs)?;

    if !outcome.within_tolerance {
        return Err(runtime(format!(
            "oracle error {:.3e} exceeds tolerance {:.3e} for {}",
            outcome.max_oracle_err, outcome.tolerance, outcome.workload
        )));
    }
    Ok(())
}

type KernelOutcome = (String, SimStats, f64, f64, bool, serde_json::Value);

fn run_sst(args: &SimulateArgs, mesh: &MeshConfig) -> Result<KernelOutcome, CliError> {
    let n = args.size.n.unwrap_or(100);
    let steps = args.size.steps.unwrap_or(50);
    let cfg = SodConfig::sod(n, steps);
    let run = sst_run_streaming(&cfg, mesh).map_err(workload_err)?;
    let oracle = sst_oracle_run(&cfg).map_err(workload_err)?;

    let mut err = 0.0f64;
    for (a, b) in run.state.cells.iter().zip(&oracle.cells) {
        for m in 0..3 {
            err = err.max(rel_err(a[m], b[m]));
        }
    }
    let tolerance = match mesh.quantization {
        Quantization::Real => 1e-12,
        // 15 MACs per point and pass, two passes per step.
        Quantization::Fixed { frac_bits } => chain_tolerance(30 * steps, frac_bits),
    };
    Ok((
        format!("sst-n{n}-s{steps}"),
        run.stats,
        err,
        tolerance,
        true,
        json!({ "cells": run.state.cells }),
    ))
}

fn load_tensor(
    args: &SimulateArgs,
    seed: u64,
    rng: &mut ChaCha8Rng,
    inputs: &mut Vec<String>,
) -> Result<SparseTensor, CliError> {
    match &args.tensor {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| validation(format!("tensor {}: {e}", path.display())))?;
            inputs.push(path.display().to_string());
            parse_tns(&text).map_err(workload_err)
        }
        None => {
            let dims = parse_dims(args.dims.as_deref().unwrap_or("8x8x8"))?;
            let density = args.density.unwrap_or(0.05);
            if !(density > 0.0 && density <= 1.0) {
                return Err(validation(format!(
                    "density must be in (0, 1], got {density}"
                )));
            }
            let _ = seed; // the caller seeded rng
            Ok(random_tensor(dims, density, rng))
        }
    }
}

fn run_mttkrp(
    cli: &Cli,
    args: &SimulateArgs,
    mesh: &MeshConfig,
    inputs: &mut Vec<String>,
) -> Result<KernelOutcome, CliError> {
    let rank = args.size.rank.unwrap_or(4);
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let x = load_tensor(args, cli.seed, &mut rng, inputs)?;
    let dims = x.dims();
    let b = random_factor(dims[1], rank, &mut rng);
    let c = random_factor(dims[2], rank, &mut rng);

    let run = mttkrp_run(&x, &b, &c, mesh).map_err(workload_err)?;
    let dense = mttkrp_dense_oracle(&x, &b, &c).map_err(workload_err)?;
    let sparse = mttkrp_oracle(&x, &b, &c).map_err(workload_err)?;

    let mut err = 0.0f64;
    for (a, d) in run.factor.data.iter().zip(&dense.data) {
        err = err.max(rel_err(*a, *d));
    }
    // In real arithmetic the mesh must agree with the sorted-order sparse
    // reference bit for bit, not just within tolerance.
    let extra_ok = match mesh.quantization {
        Quantization::Real => run.factor.data == sparse.data,
        Quantization::Fixed { .. } => true,
    };
    let tolerance = match mesh.quantization {
        Quantization::Real => 1e-12,
        Quantization::Fixed { frac_bits } => chain_tolerance(2 * x.nnz(), frac_bits),
    };
    Ok((
        format!("mttkrp-nnz{}-r{rank}", x.nnz()),
        run.stats,
        err,
        tolerance,
        extra_ok,
        json!({ "dims": dims, "factor_rows": run.factor.rows, "factor": run.factor.data }),
    ))
}

fn run_vlasov(cli: &Cli, args: &SimulateArgs, mesh: &MeshConfig) -> Result<KernelOutcome, CliError> {
    let n_modes = args.size.n_modes.unwrap_or(64);
    let spectral = random_spectral(n_modes, cli.seed);
    let (out, stats) = vlasov_run(&spectral, mesh).map_err(workload_err)?;

    let mut err = 0.0f64;
    for (i, got) in out.iter().enumerate() {
        let expect = vlasov_oracle(
            Complex64::new(spectral.k_r[i], spectral.k_i[i]),
            Complex64::new(spectral.z_r[i], spectral.z_i[i]),
            Complex64::new(spectral.f_r[i], spectral.f_i[i]),
        );
        err = err.max(rel_err(got.re, expect.re));
        err = err.max(rel_err(got.im, expect.im));
    }
    let tolerance = match mesh.quantization {
        Quantization::Real => 0.0, // bit-exact by construction
        Quantization::Fixed { frac_bits } => chain_tolerance(3, frac_bits),
    };
    Ok((
        format!("vlasov-m{n_modes}"),
        stats,
        err,
        tolerance,
        true,
        json!({
            "f_R": out.iter().map(|v| v.re).collect::<Vec<f64>>(),
            "f_I": out.iter().map(|v| v.im).collect::<Vec<f64>>(),
        }),
    ))
}

fn run_convolution(
    cli: &Cli,
    args: &SimulateArgs,
    mesh: &MeshConfig,
) -> Result<KernelOutcome, CliError> {
    if let Quantization::Fixed { .. } = mesh.quantization {
        return Err(validation(
            "fixed-point mode is not supported for convolution: transform coefficients \
             grow with signal length and overflow the word range",
        ));
    }
    let n = args.size.n_modes.unwrap_or(64);
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let h: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (out, stats) = spectral_convolution(&h, &c, mesh).map_err(workload_err)?;
    let oracle = circular_convolution_oracle(&h, &c);

    let mut err = 0.0f64;
    for (a, b) in out.iter().zip(&oracle) {
        err = err.max(rel_err(*a, *b));
    }
    Ok((
        format!("convolution-n{n}"),
        stats,
        err,
        1e-9,
        true,
        json!({ "h": h, "c": c, "result": out }),
    ))
}
