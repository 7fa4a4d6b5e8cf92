//! Spectral advection kernel: elementwise complex multiply-accumulate over
//! Fourier modes, one mode per virtual cell, plus the host-side transforms
//! that turn it into a circular convolution.
//!
//! Each cell computes f' = f + k*z in six real MACs through one temporary:
//! the real part first (k_R z_R, then -k_I z_I, then accumulate), then the
//! imaginary part. The oracle replays that exact operation order, so
//! real-mode simulation matches it bit for bit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::mesh_sim::{
    execute, BoundaryPolicy, ConstInit, Instruction, MacOp, MeshConfig, MeshInputs, Program,
    SimStats, StreamSpec,
};
use crate::perf_model::WorkloadProfile;

use super::WorkloadError;

/// Mode count plus the component arrays: constants k, accumulator inputs z,
/// and initial modes f.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub n_modes: u64,
    #[serde(rename = "k_R")]
    pub k_r: Vec<f64>,
    #[serde(rename = "k_I")]
    pub k_i: Vec<f64>,
    #[serde(rename = "z_R")]
    pub z_r: Vec<f64>,
    #[serde(rename = "z_I")]
    pub z_i: Vec<f64>,
    #[serde(rename = "f_R")]
    pub f_r: Vec<f64>,
    #[serde(rename = "f_I")]
    pub f_i: Vec<f64>,
}

impl SpectralConfig {
    pub fn from_complex(k: &[Complex64], z: &[Complex64], f: &[Complex64]) -> SpectralConfig {
        SpectralConfig {
            n_modes: k.len() as u64,
            k_r: k.iter().map(|v| v.re).collect(),
            k_i: k.iter().map(|v| v.im).collect(),
            z_r: z.iter().map(|v| v.re).collect(),
            z_i: z.iter().map(|v| v.im).collect(),
            f_r: f.iter().map(|v| v.re).collect(),
            f_i: f.iter().map(|v| v.im).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.n_modes == 0 {
            return Err(WorkloadError::Invalid("n_modes must be >= 1".into()));
        }
        let n = self.n_modes as usize;
        for (name, arr) in [
            ("k_R", &self.k_r),
            ("k_I", &self.k_i),
            ("z_R", &self.z_r),
            ("z_I", &self.z_i),
            ("f_R", &self.f_r),
            ("f_I", &self.f_i),
        ] {
            if arr.len() != n {
                return Err(WorkloadError::Invalid(format!(
                    "{name} has {} entries for {n} modes",
                    arr.len()
                )));
            }
        }
        Ok(())
    }
}

/// One complex multiply-accumulate in the kernel's fixed component order.
pub fn vlasov_oracle(k: Complex64, z: Complex64, f: Complex64) -> Complex64 {
    let mut t = 0.0 + k.re * z.re;
    t -= k.im * z.im;
    let re = f.re + t;
    let mut t = 0.0 + k.im * z.re;
    t += k.re * z.im;
    let im = f.im + t;
    Complex64::new(re, im)
}

const S_KR: u32 = 0;
const S_KI: u32 = 1;
const S_ONE: u32 = 2;
const R_ZERO: u32 = 0;
const R_ZR: u32 = 1;
const R_ZI: u32 = 2;
const R_FR: u32 = 3;
const R_FI: u32 = 4;
const R_T: u32 = 5;

/// One synchronous step, six MACs per mode; k is preloaded per cell and
/// costs no traffic, z and f stream in and f' streams out (6 words/mode).
pub fn vlasov_build_program(cfg: &SpectralConfig) -> Program {
    Program {
        n: cfg.n_modes,
        registers: 6,
        const_slots: 3,
        boundary: BoundaryPolicy::ZeroGradient,
        fuse_comm: true,
        input_streams: vec![
            StreamSpec::per_cell("z_R"),
            StreamSpec::per_cell("z_I"),
            StreamSpec::per_cell("f_R"),
            StreamSpec::per_cell("f_I"),
        ],
        output_streams: vec![StreamSpec::per_cell("f_R"), StreamSpec::per_cell("f_I")],
        const_streams: vec![],
        regions: vec![],
        steps: vec![vec![
            Instruction::LoadInput { stream: 0, reg: R_ZR },
            Instruction::LoadInput { stream: 1, reg: R_ZI },
            Instruction::LoadInput { stream: 2, reg: R_FR },
            Instruction::LoadInput { stream: 3, reg: R_FI },
            Instruction::LocalMac { op: MacOp::Add, a: S_KR, b: R_ZR, c: R_ZERO, z: R_T },
            Instruction::LocalMac { op: MacOp::Sub, a: S_KI, b: R_ZI, c: R_T, z: R_T },
            Instruction::LocalMac { op: MacOp::Add, a: S_ONE, b: R_T, c: R_FR, z: R_FR },
            Instruction::LocalMac { op: MacOp::Add, a: S_KI, b: R_ZR, c: R_ZERO, z: R_T },
            Instruction::LocalMac { op: MacOp::Add, a: S_KR, b: R_ZI, c: R_T, z: R_T },
            Instruction::LocalMac { op: MacOp::Add, a: S_ONE, b: R_T, c: R_FI, z: R_FI },
            Instruction::StoreOutput { reg: R_FR, stream: 0 },
            Instruction::StoreOutput { reg: R_FI, stream: 1 },
        ]],
    }
}

/// Runs the elementwise kernel, returning the updated modes.
pub fn vlasov_run(
    cfg: &SpectralConfig,
    mesh: &MeshConfig,
) -> Result<(Vec<Complex64>, SimStats), WorkloadError> {
    cfg.validate()?;
    let program = vlasov_build_program(cfg);
    let inputs = MeshInputs {
        streams: vec![
            cfg.z_r.clone(),
            cfg.z_i.clone(),
            cfg.f_r.clone(),
            cfg.f_i.clone(),
        ],
        initial_consts: vec![
            ConstInit::PerCell(cfg.k_r.clone()),
            ConstInit::PerCell(cfg.k_i.clone()),
            ConstInit::Uniform(1.0),
        ],
        ..MeshInputs::default()
    };
    let run = execute(&program, mesh, &inputs)?;
    let out = run.outputs.streams[0]
        .iter()
        .zip(&run.outputs.streams[1])
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect();
    Ok((out, run.stats))
}

/// Closed form: 6 MACs (12 ops) and 6 streamed words per mode; the
/// preloaded constants are amortized away.
pub fn vlasov_profile(n_modes: u64, w_bits: u32) -> WorkloadProfile {
    let n_total = 12 * n_modes;
    let s_bits = 6 * u64::from(w_bits) * n_modes;
    WorkloadProfile::new(
        format!("vlasov-m{n_modes}"),
        n_total as f64,
        s_bits as f64,
    )
}

/// Direct O(n^2) discrete Fourier transform.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in x.iter().enumerate() {
                let angle = -std::f64::consts::TAU * (j * k) as f64 / n as f64;
                acc += v * Complex64::new(angle.cos(), angle.sin());
            }
            acc
        })
        .collect()
}

/// Direct inverse transform, 1/n normalized.
pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, v) in x.iter().enumerate() {
                let angle = std::f64::consts::TAU * (j * k) as f64 / n as f64;
                acc += v * Complex64::new(angle.cos(), angle.sin());
            }
            acc / n as f64
        })
        .collect()
}

/// Circular convolution via the transform pipeline: forward transforms on
/// the host, the elementwise complex products on the mesh (f = 0, k and z
/// carry the two spectra), inverse transform on the host.
pub fn spectral_convolution(
    h: &[f64],
    c: &[f64],
    mesh: &MeshConfig,
) -> Result<(Vec<f64>, SimStats), WorkloadError> {
    if h.is_empty() || h.len() != c.len() {
        return Err(WorkloadError::Invalid(format!(
            "convolution inputs must be equal-length and non-empty, got {} and {}",
            h.len(),
            c.len()
        )));
    }
    let to_complex = |v: &[f64]| -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    };
    let hf = dft(&to_complex(h));
    let cf = dft(&to_complex(c));
    let zero = vec![Complex64::new(0.0, 0.0); h.len()];
    let cfg = SpectralConfig::from_complex(&hf, &cf, &zero);
    let (product, stats) = vlasov_run(&cfg, mesh)?;
    let out = idft(&product).iter().map(|v| v.re).collect();
    Ok((out, stats))
}

/// Time-domain reference for the convolution pipeline.
pub fn circular_convolution_oracle(h: &[f64], c: &[f64]) -> Vec<f64> {
    let n = h.len();
    (0..n)
        .map(|j| {
            let mut acc = 0.0;
            for (i, &hv) in h.iter().enumerate() {
                acc += hv * c[(j + n - i) % n];
            }
            acc
        })
        .collect()
}
