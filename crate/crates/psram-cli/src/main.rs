//! psram-perf: evaluate the analytical performance model, run parameter
//! sweeps, place workloads on the roofline, and execute mesh simulations
//! with oracle checks.
//!
//! Exit codes: 0 success, 1 validation error (bad flags, config, or input
//! files), 2 runtime failure (simulation protocol violation, non-physical
//! state, or oracle error above tolerance).

mod simulate;

use std::fs;
use std::path::{Path, PathBuf};

use chrono::Utc;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use psram_core::perf_model::{evaluate, SystemConfig, WorkloadProfile};
use psram_core::roofline::{
    roofline_report, sweep, MachineModel, SweepOptions, SweepParam, SweepWorkload,
};
use psram_core::workloads::WorkloadSpec;

#[derive(Debug)]
pub(crate) enum CliError {
    Validation(String),
    Runtime(String),
}

pub(crate) fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

pub(crate) fn runtime(msg: impl Into<String>) -> CliError {
    CliError::Runtime(msg.into())
}

#[derive(Parser)]
#[command(
    name = "psram-perf",
    version,
    about = "Performance modeling and functional simulation for photonic SRAM compute arrays"
)]
struct Cli {
    /// System configuration JSON file.
    #[arg(long, global = true, default_value = "configs/paper-vi-a.json")]
    config: PathBuf,
    /// Directory for report files and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Which report files to write (the manifest is always written).
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,
    /// Seed for generated workload inputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    fn json(self) -> bool {
        self != Format::Csv
    }

    fn csv(self) -> bool {
        self != Format::Json
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the latency/energy/area model for one workload profile.
    Model(ModelArgs),
    /// Re-evaluate the model along one parameter axis.
    Sweep(SweepArgs),
    /// Place workload arithmetic intensities against the machine roofline.
    Roofline(RooflineArgs),
    /// Run a kernel on the mesh simulator and check it against its oracle.
    Simulate(simulate::SimulateArgs),
}

/// Size flags shared by the workload families; unset values fall back to
/// per-command defaults.
#[derive(Args, Clone, Default)]
struct SizeArgs {
    /// Grid points (sst).
    #[arg(long)]
    n: Option<u64>,
    /// Time steps (sst).
    #[arg(long)]
    steps: Option<u64>,
    /// Nonzero count (mttkrp profiles).
    #[arg(long)]
    nnz: Option<u64>,
    /// Factor rank (mttkrp).
    #[arg(long)]
    rank: Option<u32>,
    /// Mode or signal length (vlasov, convolution).
    #[arg(long)]
    n_modes: Option<u64>,
}

#[derive(Args)]
struct ModelArgs {
    /// Workload profile to evaluate: sst, mttkrp or vlasov. Without it the
    /// model is evaluated for an empty workload, characterizing the array
    /// itself.
    #[arg(long)]
    workload: Option<String>,
    #[command(flatten)]
    size: SizeArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Parameter to sweep: bandwidth, frequency, conversion, gridpoints or
    /// arraybits.
    #[arg(long)]
    param: String,
    /// Comma-separated, strictly increasing axis values.
    #[arg(long)]
    axis: String,
    /// Workload family: sst, mttkrp or vlasov.
    #[arg(long, default_value = "sst")]
    workload: String,
    #[command(flatten)]
    size: SizeArgs,
}

#[derive(Args)]
struct RooflineArgs {
    /// Workload to place on the roofline (repeatable); defaults to sst,
    /// mttkrp and vlasov at their default sizes.
    #[arg(long = "workload")]
    workloads: Vec<String>,
    /// Emit only the roof curve, no workload points.
    #[arg(long, conflicts_with_all = ["workloads", "points"])]
    roofs_only: bool,
    /// Extra custom point as name,total_ops,traffic_bits (repeatable).
    #[arg(long = "point")]
    points: Vec<String>,
    #[command(flatten)]
    size: SizeArgs,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match run(&cli) {
        Ok(()) => 0,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = load_config(&cli.config)?;
    match &cli.command {
        Command::Model(args) => cmd_model(cli, &config, args),
        Command::Sweep(args) => cmd_sweep(cli, &config, args),
        Command::Roofline(args) => cmd_roofline(cli, &config, args),
        Command::Simulate(args) => simulate::cmd_simulate(cli, &config, args),
    }
}

fn load_config(path: &Path) -> Result<SystemConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| validation(format!("config {}: {e}", path.display())))?;
    let config: SystemConfig = serde_json::from_str(&text)
        .map_err(|e| validation(format!("config {}: {e}", path.display())))?;
    config
        .validate()
        .map_err(|e| validation(format!("config {}: {e}", path.display())))?;
    Ok(config)
}

fn build_spec(name: &str, size: &SizeArgs) -> Result<WorkloadSpec, CliError> {
    match name {
        "sst" => Ok(WorkloadSpec::Sst {
            n: size.n.unwrap_or(100_000),
            steps: size.steps.unwrap_or(10),
        }),
        "mttkrp" => Ok(WorkloadSpec::Mttkrp {
            nnz: size.nnz.unwrap_or(10_000),
            rank: size.rank.unwrap_or(16),
        }),
        "vlasov" => Ok(WorkloadSpec::Vlasov {
            n_modes: size.n_modes.unwrap_or(8192),
        }),
        other => Err(validation(format!(
            "unknown workload '{other}'; known workloads: sst, mttkrp, vlasov"
        ))),
    }
}

fn parse_param(name: &str) -> Result<SweepParam, CliError> {
    match name {
        "bandwidth" => Ok(SweepParam::Bandwidth),
        "frequency" => Ok(SweepParam::Frequency),
        "conversion" => Ok(SweepParam::ConversionLatency),
        "gridpoints" => Ok(SweepParam::GridPoints),
        "arraybits" => Ok(SweepParam::ArrayBits),
        other => Err(validation(format!(
            "unknown parameter '{other}'; known parameters: bandwidth, frequency, conversion, \
             gridpoints, arraybits"
        ))),
    }
}

fn parse_axis(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| validation(format!("axis value '{tok}' is not a number")))
        })
        .collect()
}

fn parse_point(text: &str) -> Result<WorkloadProfile, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    let bad = || {
        validation(format!(
            "point '{text}' must be name,total_ops,traffic_bits"
        ))
    };
    if parts.len() != 3 || parts[0].is_empty() {
        return Err(bad());
    }
    let n_total: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let s_bits: f64 = parts[2].trim().parse().map_err(|_| bad())?;
    Ok(WorkloadProfile::new(parts[0], n_total, s_bits))
}

pub(crate) fn threads_from_env() -> Result<usize, CliError> {
    match std::env::var("PSRAM_PERF_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            validation(format!(
                "PSRAM_PERF_THREADS must be a non-negative integer, got '{v}'"
            ))
        }),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(validation(format!("PSRAM_PERF_THREADS: {e}"))),
    }
}

fn cmd_model(cli: &Cli, config: &SystemConfig, args: &ModelArgs) -> Result<(), CliError> {
    let profile = match &args.workload {
        Some(name) => build_spec(name, &args.size)?.profile(config.w_bits),
        None => WorkloadProfile::empty("empty"),
    };
    let report = evaluate(&config.arch(), &config.memory(), &config.conversion(), &profile)
        .map_err(|e| validation(e.to_string()))?;
    println!("{}", to_pretty_json(&report)?);

    let mut emitter = Emitter::new(cli)?;
    emitter.write_json("model.json", &report)?;
    emitter.write_csv("model.csv", &report.to_csv())?;
    emitter.finish(cli, "model", config, Vec::new())
}

fn cmd_sweep(cli: &Cli, config: &SystemConfig, args: &SweepArgs) -> Result<(), CliError> {
    let param = parse_param(&args.param)?;
    let axis = parse_axis(&args.axis)?;
    let spec = build_spec(&args.workload, &args.size)?;
    let threads = threads_from_env()?;
    let result = sweep(
        config,
        param,
        &axis,
        &SweepWorkload::Spec(spec),
        &SweepOptions { threads },
    )
    .map_err(|e| validation(e.to_string()))?;

    let mut emitter = Emitter::new(cli)?;
    emitter.write_json(&format!("sweep-{}.json", args.param), &result)?;
    emitter.write_csv(&format!("sweep-{}.csv", args.param), &result.to_csv())?;
    println!(
        "swept {} over {} values for {}; reports in {}",
        args.param,
        axis.len(),
        spec.name(),
        cli.out.display()
    );
    emitter.finish(cli, "sweep", config, Vec::new())
}

fn cmd_roofline(cli: &Cli, config: &SystemConfig, args: &RooflineArgs) -> Result<(), CliError> {
    let machine = MachineModel::from_config(config).map_err(|e| validation(e.to_string()))?;
    let mut profiles = Vec::new();
    if !args.roofs_only {
        let defaults = ["sst".to_string(), "mttkrp".to_string(), "vlasov".to_string()];
        let names: &[String] = if args.workloads.is_empty() {
            &defaults
        } else {
            &args.workloads
        };
        for name in names {
            profiles.push(build_spec(name, &args.size)?.profile(config.w_bits));
        }
        for point in &args.points {
            profiles.push(parse_point(point)?);
        }
    }
    let report =
        roofline_report(&machine, &profiles).map_err(|e| validation(e.to_string()))?;

    println!(
        "ridge point {:.8e} ops/byte (peak {:.8e} ops/s, bandwidth {:.8e} bytes/s)",
        report.ridge_ops_per_byte, machine.peak_ops_per_s, machine.bandwidth_bytes_per_s
    );
    for p in &report.points {
        println!(
            "{}: ai {:.8e} ops/byte, attainable {:.8e} ops/s, {}",
            p.workload,
            p.arithmetic_intensity_ops_per_byte,
            p.attainable_ops_per_s,
            p.bound.as_str()
        );
    }
    if report.points.is_empty() {
        println!("no workload points; roof curve only");
    }

    let mut emitter = Emitter::new(cli)?;
    emitter.write_json("roofline.json", &report)?;
    emitter.write_csv("roofline.csv", &report.to_csv())?;
    emitter.finish(cli, "roofline", config, Vec::new())
}

pub(crate) fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| runtime(format!("serialization: {e}")))
}

/// Writes report files under the output directory and finishes with a run
/// manifest listing them. The manifest carries the only timestamp, so every
/// other emitted file is byte-stable across re-runs.
pub(crate) struct Emitter {
    dir: PathBuf,
    format: Format,
    written: Vec<String>,
}

impl Emitter {
    pub(crate) fn new(cli: &Cli) -> Result<Emitter, CliError> {
        fs::create_dir_all(&cli.out)
            .map_err(|e| validation(format!("output dir {}: {e}", cli.out.display())))?;
        Ok(Emitter {
            dir: cli.out.clone(),
            format: cli.format,
            written: Vec::new(),
        })
    }

    pub(crate) fn write_json<T: Serialize>(
        &mut self,
        name: &str,
        value: &T,
    ) -> Result<(), CliError> {
        if self.format.json() {
            let mut text = to_pretty_json(value)?;
            text.push('\n');
            self.write_raw(name, &text)?;
        }
        Ok(())
    }

    pub(crate) fn write_csv(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        if self.format.csv() {
            self.write_raw(name, contents)?;
        }
        Ok(())
    }

    fn write_raw(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| validation(format!("write {}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub(crate) fn finish(
        self,
        cli: &Cli,
        command: &str,
        config: &SystemConfig,
        mut inputs: Vec<String>,
    ) -> Result<(), CliError> {
        inputs.insert(0, cli.config.display().to_string());
        let manifest = RunManifest {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cli.seed,
            config_path: cli.config.display().to_string(),
            config: config.clone(),
            inputs,
            outputs: self.written.clone(),
            created_utc: Utc::now().to_rfc3339(),
        };
        let mut text = to_pretty_json(&manifest)?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text)
            .map_err(|e| validation(format!("write {}: {e}", path.display())))?;
        Ok(())
    }
}

/// Everything needed to reproduce a run: the exact invocation, the resolved
/// configuration, inputs, outputs, and tool version. `created_utc` is the
/// one field excluded from byte-identity across re-runs.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    args: Vec<String>,
    version: String,
    seed: u64,
    config_path: String,
    config: SystemConfig,
    inputs: Vec<String>,
    outputs: Vec<String>,
    created_utc: String,
}
