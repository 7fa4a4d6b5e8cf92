//! 1D shock-tube solver (compressible Euler equations) as a streaming mesh
//! kernel.
//!
//! Space is discretized on N grid points, one virtual cell per point. A
//! single streaming pass applies one conservative update stage built from
//! split flux composites:
//!
//! ```text
//! b_i   = f_i - j*w_i          (sent left)
//! a_i   = f_i + j*w_i
//! phi_i = a_i + b_{i+1}        (sent right)
//! g_i   = phi_i - phi_{i-1}
//! w'_i  = base_i - kc*g_i
//! ```
//!
//! per state component, where `j` is the global wave-speed bound and the
//! nonlinear flux `f = F(w)` and `j` are computed host-side between passes.
//! This is 5 MACs per component, 15 per grid point per pass.
//!
//! One time step of the two-stage integrator is: a predictor pass with
//! coefficient `k` producing the half state, then a corrector pass built
//! from the half state with coefficient `2k` subtracting from the original
//! state. `k` is the time constant dt/(4 dx). The canonical single-pass
//! runner applies predictor-shaped passes only; it is the form the
//! closed-form profile counts.

use serde::{Deserialize, Serialize};

use crate::mesh_sim::{
    execute, BoundaryPolicy, ConstInit, Direction, Instruction, MacOp, MeshConfig, MeshInputs,
    Program, SimStats, StreamSpec,
};
use crate::perf_model::WorkloadProfile;

use super::WorkloadError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveState {
    pub density: f64,
    pub velocity: f64,
    pub pressure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SodConfig {
    /// Grid points.
    pub n: u64,
    /// Time steps (each one predictor plus corrector pass in streaming
    /// mode; one pass each in canonical mode).
    pub steps: u64,
    /// Time constant dt/(4 dx).
    pub k: f64,
    /// Ratio of specific heats.
    pub gamma: f64,
    pub left: PrimitiveState,
    pub right: PrimitiveState,
    pub boundary: BoundaryPolicy,
}

impl SodConfig {
    /// The canonical diaphragm problem on `n` points: (rho, u, p) =
    /// (1, 0, 1) on the left half, (0.125, 0, 0.1) on the right,
    /// gamma = 1.4, with `k` set for a Courant number of 0.4 against the
    /// initial wave speed.
    pub fn sod(n: u64, steps: u64) -> SodConfig {
        let mut cfg = SodConfig {
            n,
            steps,
            k: 0.0,
            gamma: 1.4,
            left: PrimitiveState {
                density: 1.0,
                velocity: 0.0,
                pressure: 1.0,
            },
            right: PrimitiveState {
                density: 0.125,
                velocity: 0.0,
                pressure: 0.1,
            },
            boundary: BoundaryPolicy::ZeroGradient,
        };
        let j0 = cfg.initial_state().max_wave_speed(cfg.gamma);
        cfg.k = 0.4 / (4.0 * j0);
        cfg
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |m: String| Err(WorkloadError::Invalid(m));
        if self.n < 2 {
            return bad(format!("n must be >= 2, got {}", self.n));
        }
        if self.steps == 0 {
            return bad("steps must be >= 1".into());
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return bad(format!("k must be positive and finite, got {}", self.k));
        }
        if !(self.gamma > 1.0) {
            return bad(format!("gamma must be > 1, got {}", self.gamma));
        }
        for (side, s) in [("left", &self.left), ("right", &self.right)] {
            if !(s.density > 0.0) {
                return bad(format!("{side} density must be > 0, got {}", s.density));
            }
            if !(s.pressure > 0.0) {
                return bad(format!("{side} pressure must be > 0, got {}", s.pressure));
            }
        }
        Ok(())
    }

    /// Left state up to the midpoint, right state from it on.
    pub fn initial_state(&self) -> EulerState {
        let mid = self.n / 2;
        let cells = (0..self.n)
            .map(|i| {
                let s = if i < mid { &self.left } else { &self.right };
                let rho = s.density;
                let mom = rho * s.velocity;
                let e = s.pressure / (self.gamma - 1.0) + 0.5 * rho * s.velocity * s.velocity;
                [rho, mom, e]
            })
            .collect();
        EulerState { cells }
    }
}

/// Conserved variables (rho, rho*u, E) per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerState {
    pub cells: Vec<[f64; 3]>,
}

impl EulerState {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn density(&self, i: usize) -> f64 {
        self.cells[i][0]
    }

    pub fn velocity(&self, i: usize) -> f64 {
        self.cells[i][1] / self.cells[i][0]
    }

    pub fn pressure(&self, gamma: f64, i: usize) -> f64 {
        let [rho, mom, e] = self.cells[i];
        let u = mom / rho;
        (gamma - 1.0) * (e - 0.5 * rho * u * u)
    }

    /// Physical flux (rho*u, rho*u^2 + p, u*(E + p)) per point.
    pub fn flux(&self, gamma: f64) -> Vec<[f64; 3]> {
        self.cells
            .iter()
            .map(|&[rho, mom, e]| {
                let u = mom / rho;
                let p = (gamma - 1.0) * (e - 0.5 * rho * u * u);
                [mom, mom * u + p, u * (e + p)]
            })
            .collect()
    }

    /// Global bound on |u| + c, the dissipation coefficient for the next
    /// pass.
    pub fn max_wave_speed(&self, gamma: f64) -> f64 {
        let mut j: f64 = 0.0;
        for &[rho, mom, e] in &self.cells {
            let u = mom / rho;
            let p = (gamma - 1.0) * (e - 0.5 * rho * u * u);
            let c = (gamma * p / rho).sqrt();
            j = j.max(u.abs() + c);
        }
        j
    }

    /// Sum of each conserved component over the grid.
    pub fn component_sums(&self) -> [f64; 3] {
        let mut s = [0.0f64; 3];
        for c in &self.cells {
            for m in 0..3 {
                s[m] += c[m];
            }
        }
        s
    }

    /// Errors on the first cell with non-positive (or NaN) density or
    /// pressure; `step` labels the update that produced this state.
    pub fn check_positive(&self, gamma: f64, step: u64) -> Result<(), WorkloadError> {
        for (i, &[rho, mom, e]) in self.cells.iter().enumerate() {
            if !(rho > 0.0) {
                return Err(WorkloadError::NonPhysical {
                    step,
                    cell: i as u64,
                    what: "density",
                    value: rho,
                });
            }
            let u = mom / rho;
            let p = (gamma - 1.0) * (e - 0.5 * rho * u * u);
            if !(p > 0.0) {
                return Err(WorkloadError::NonPhysical {
                    step,
                    cell: i as u64,
                    what: "pressure",
                    value: p,
                });
            }
        }
        Ok(())
    }
}

fn ghost(policy: BoundaryPolicy, own: f64) -> f64 {
    match policy {
        BoundaryPolicy::ZeroGradient => own,
        BoundaryPolicy::Zero => 0.0,
        BoundaryPolicy::Fixed(v) => v,
    }
}

/// One update stage, mirroring the mesh program's operation order exactly:
/// every line below rounds at the same places the corresponding MAC does.
/// Returns the new state and the right/left boundary composites needed for
/// conservation accounting.
fn stage(
    w: &[[f64; 3]],
    f: &[[f64; 3]],
    base: &[[f64; 3]],
    j: f64,
    kc: f64,
    policy: BoundaryPolicy,
) -> (Vec<[f64; 3]>, [f64; 3], [f64; 3]) {
    let n = w.len();
    let mut b = vec![[0.0f64; 3]; n];
    let mut a = vec![[0.0f64; 3]; n];
    for i in 0..n {
        for m in 0..3 {
            b[i][m] = f[i][m] - j * w[i][m];
            a[i][m] = f[i][m] + j * w[i][m];
        }
    }
    let mut phi = vec![[0.0f64; 3]; n];
    for i in 0..n {
        for m in 0..3 {
            let br = if i + 1 < n { b[i + 1][m] } else { ghost(policy, b[i][m]) };
            phi[i][m] = a[i][m] + br;
        }
    }
    let mut phi_l0 = [0.0f64; 3];
    let mut out = vec![[0.0f64; 3]; n];
    for i in 0..n {
        for m in 0..3 {
            let pl = if i > 0 { phi[i - 1][m] } else { ghost(policy, phi[i][m]) };
            if i == 0 {
                phi_l0[m] = pl;
            }
            let g = phi[i][m] - pl;
            out[i][m] = base[i][m] - kc * g;
        }
    }
    (out, phi[n - 1], phi_l0)
}

/// One canonical (predictor-shaped) pass with coefficient `cfg.k`. The
/// caller is responsible for positivity of `state`.
pub fn sst_oracle_pass(state: &EulerState, cfg: &SodConfig) -> EulerState {
    let j = state.max_wave_speed(cfg.gamma);
    let f = state.flux(cfg.gamma);
    let (cells, _, _) = stage(&state.cells, &f, &state.cells, j, cfg.k, cfg.boundary);
    EulerState { cells }
}

/// A full time step plus the boundary flux term that accounts for its
/// change in the conserved sums.
#[derive(Debug, Clone, PartialEq)]
pub struct SstStepDiag {
    pub state: EulerState,
    /// 2k * (corrector phi at the right edge - ghost phi at the left
    /// edge); componentwise, sum(new) = sum(old) - boundary_flux up to
    /// rounding, exactly zero flux for periodic-free interior motion.
    pub boundary_flux: [f64; 3],
}

fn pc_step(state: &EulerState, cfg: &SodConfig, label: u64) -> Result<SstStepDiag, WorkloadError> {
    let j = state.max_wave_speed(cfg.gamma);
    let f = state.flux(cfg.gamma);
    let (half_cells, _, _) = stage(&state.cells, &f, &state.cells, j, cfg.k, cfg.boundary);
    let half = EulerState { cells: half_cells };
    half.check_positive(cfg.gamma, label)?;

    let j2 = half.max_wave_speed(cfg.gamma);
    let f2 = half.flux(cfg.gamma);
    let two_k = 2.0 * cfg.k;
    let (cells, phi_last, phi_l0) =
        stage(&half.cells, &f2, &state.cells, j2, two_k, cfg.boundary);
    let next = EulerState { cells };
    next.check_positive(cfg.gamma, label)?;

    let mut boundary_flux = [0.0f64; 3];
    for m in 0..3 {
        boundary_flux[m] = two_k * (phi_last[m] - phi_l0[m]);
    }
    Ok(SstStepDiag {
        state: next,
        boundary_flux,
    })
}

/// One predictor-corrector time step against the scalar reference.
pub fn sst_oracle_step(state: &EulerState, cfg: &SodConfig) -> Result<EulerState, WorkloadError> {
    Ok(pc_step(state, cfg, 1)?.state)
}

/// As [`sst_oracle_step`], also reporting the boundary flux term.
pub fn sst_oracle_step_diag(
    state: &EulerState,
    cfg: &SodConfig,
) -> Result<SstStepDiag, WorkloadError> {
    pc_step(state, cfg, 1)
}

/// Runs `cfg.steps` predictor-corrector steps from the initial state.
pub fn sst_oracle_run(cfg: &SodConfig) -> Result<EulerState, WorkloadError> {
    cfg.validate()?;
    let mut state = cfg.initial_state();
    state.check_positive(cfg.gamma, 0)?;
    for t in 0..cfg.steps {
        state = pc_step(&state, cfg, t + 1)?.state;
    }
    Ok(state)
}

/// Runs `cfg.steps` canonical passes from the initial state.
pub fn sst_oracle_canonical_run(cfg: &SodConfig) -> Result<EulerState, WorkloadError> {
    cfg.validate()?;
    let mut state = cfg.initial_state();
    state.check_positive(cfg.gamma, 0)?;
    for t in 0..cfg.steps {
        state = sst_oracle_pass(&state, cfg);
        state.check_positive(cfg.gamma, t + 1)?;
    }
    Ok(state)
}

// Register layout for both pass programs: four registers per component.
const SLOT_J: u32 = 0;
const SLOT_K: u32 = 1;
const SLOT_ONE: u32 = 2;

/// The canonical streaming pass: w and host-computed f in, updated w out,
/// three synchronous steps, 15 MACs and 9 streamed values per grid point.
/// Constant slots: 0 = j, 1 = kc, 2 = 1.0 (preloaded each pass).
pub fn sst_build_program(cfg: &SodConfig) -> Program {
    let rw = |m: u32| 4 * m;
    let rf = |m: u32| 4 * m + 1;
    let rb = |m: u32| 4 * m + 2;
    let ra = |m: u32| 4 * m + 3;

    let mut load = Vec::new();
    for m in 0..3u32 {
        load.push(Instruction::LoadInput { stream: m, reg: rw(m) });
        load.push(Instruction::LoadInput { stream: 3 + m, reg: rf(m) });
    }
    for m in 0..3u32 {
        // b = f - j*w, a = f + j*w
        load.push(Instruction::LocalMac { op: MacOp::Sub, a: SLOT_J, b: rw(m), c: rf(m), z: rb(m) });
        load.push(Instruction::LocalMac { op: MacOp::Add, a: SLOT_J, b: rw(m), c: rf(m), z: ra(m) });
    }

    let mut down = Vec::new();
    for m in 0..3u32 {
        down.push(Instruction::Send { dir: Direction::Left, reg: rb(m) });
    }
    for m in 0..3u32 {
        down.push(Instruction::Recv { dir: Direction::Right, reg: rf(m) });
    }
    for m in 0..3u32 {
        // phi = a + 1*b_right
        down.push(Instruction::LocalMac { op: MacOp::Add, a: SLOT_ONE, b: rf(m), c: ra(m), z: rb(m) });
    }

    let mut up = Vec::new();
    for m in 0..3u32 {
        up.push(Instruction::Send { dir: Direction::Right, reg: rb(m) });
    }
    for m in 0..3u32 {
        up.push(Instruction::Recv { dir: Direction::Left, reg: ra(m) });
    }
    for m in 0..3u32 {
        // g = phi - 1*phi_left; w' = w - kc*g
        up.push(Instruction::LocalMac { op: MacOp::Sub, a: SLOT_ONE, b: ra(m), c: rb(m), z: rf(m) });
        up.push(Instruction::LocalMac { op: MacOp::Sub, a: SLOT_K, b: rf(m), c: rw(m), z: rw(m) });
    }
    for m in 0..3u32 {
        up.push(Instruction::StoreOutput { reg: rw(m), stream: m });
    }

    Program {
        n: cfg.n,
        registers: 12,
        const_slots: 3,
        boundary: cfg.boundary,
        fuse_comm: true,
        input_streams: vec![
            StreamSpec::per_cell("w0"),
            StreamSpec::per_cell("w1"),
            StreamSpec::per_cell("w2"),
            StreamSpec::per_cell("f0"),
            StreamSpec::per_cell("f1"),
            StreamSpec::per_cell("f2"),
        ],
        output_streams: vec![
            StreamSpec::per_cell("w0"),
            StreamSpec::per_cell("w1"),
            StreamSpec::per_cell("w2"),
        ],
        const_streams: vec![],
        regions: vec![],
        steps: vec![load, down, up],
    }
}

/// The corrector pass: streams the half state, its flux, and the original
/// base state; the final MAC subtracts 2k*g from the base. Constant slots:
/// 0 = j(half), 1 = 2k, 2 = 1.0.
pub fn sst_corrector_program(cfg: &SodConfig) -> Program {
    let r_sub = |m: u32| 4 * m;
    let r_f = |m: u32| 4 * m + 1;
    let r_base = |m: u32| 4 * m + 2;
    let r_b = |m: u32| 4 * m + 3;

    let mut load = Vec::new();
    for m in 0..3u32 {
        load.push(Instruction::LoadInput { stream: m, reg: r_sub(m) });
        load.push(Instruction::LoadInput { stream: 3 + m, reg: r_f(m) });
        load.push(Instruction::LoadInput { stream: 6 + m, reg: r_base(m) });
    }
    for m in 0..3u32 {
        // b = f - j*sub; a = f + j*sub overwrites sub
        load.push(Instruction::LocalMac { op: MacOp::Sub, a: SLOT_J, b: r_sub(m), c: r_f(m), z: r_b(m) });
        load.push(Instruction::LocalMac { op: MacOp::Add, a: SLOT_J, b: r_sub(m), c: r_f(m), z: r_sub(m) });
    }

    let mut down = Vec::new();
    for m in 0..3u32 {
        down.push(Instruction::Send { dir: Direction::Left, reg: r_b(m) });
    }
    for m in 0..3u32 {
        down.push(Instruction::Recv { dir: Direction::Right, reg: r_f(m) });
    }
    for m in 0..3u32 {
        down.push(Instruction::LocalMac { op: MacOp::Add, a: SLOT_ONE, b: r_f(m), c: r_sub(m), z: r_b(m) });
    }

    let mut up = Vec::new();
    for m in 0..3u32 {
        up.push(Instruction::Send { dir: Direction::Right, reg: r_b(m) });
    }
    for m in 0..3u32 {
        up.push(Instruction::Recv { dir: Direction::Left, reg: r_sub(m) });
    }
    for m in 0..3u32 {
        // g = phi - 1*phi_left; w' = base - 2k*g
        up.push(Instruction::LocalMac { op: MacOp::Sub, a: SLOT_ONE, b: r_sub(m), c: r_b(m), z: r_f(m) });
        up.push(Instruction::LocalMac { op: MacOp::Sub, a: SLOT_K, b: r_f(m), c: r_base(m), z: r_base(m) });
    }
    for m in 0..3u32 {
        up.push(Instruction::StoreOutput { reg: r_base(m), stream: m });
    }

    Program {
        n: cfg.n,
        registers: 12,
        const_slots: 3,
        boundary: cfg.boundary,
        fuse_comm: true,
        input_streams: vec![
            StreamSpec::per_cell("sub0"),
            StreamSpec::per_cell("sub1"),
            StreamSpec::per_cell("sub2"),
            StreamSpec::per_cell("f0"),
            StreamSpec::per_cell("f1"),
            StreamSpec::per_cell("f2"),
            StreamSpec::per_cell("base0"),
            StreamSpec::per_cell("base1"),
            StreamSpec::per_cell("base2"),
        ],
        output_streams: vec![
            StreamSpec::per_cell("w0"),
            StreamSpec::per_cell("w1"),
            StreamSpec::per_cell("w2"),
        ],
        const_streams: vec![],
        regions: vec![],
        steps: vec![load, down, up],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SstRun {
    pub state: EulerState,
    pub stats: SimStats,
}

fn component_streams(cells: &[[f64; 3]]) -> Vec<Vec<f64>> {
    (0..3)
        .map(|m| cells.iter().map(|c| c[m]).collect())
        .collect()
}

fn state_from_streams(streams: &[Vec<f64>]) -> EulerState {
    let n = streams[0].len();
    EulerState {
        cells: (0..n)
            .map(|i| [streams[0][i], streams[1][i], streams[2][i]])
            .collect(),
    }
}

/// `cfg.steps` canonical passes on the mesh; the pass count, MAC count and
/// traffic match [`sst_profile`] exactly.
pub fn sst_run_canonical(cfg: &SodConfig, mesh: &MeshConfig) -> Result<SstRun, WorkloadError> {
    cfg.validate()?;
    let program = sst_build_program(cfg);
    let mut state = cfg.initial_state();
    state.check_positive(cfg.gamma, 0)?;
    let mut stats = SimStats::default();
    for t in 0..cfg.steps {
        let j = state.max_wave_speed(cfg.gamma);
        let f = state.flux(cfg.gamma);
        let mut streams = component_streams(&state.cells);
        streams.extend(component_streams(&f));
        let inputs = MeshInputs {
            streams,
            initial_consts: vec![
                ConstInit::Uniform(j),
                ConstInit::Uniform(cfg.k),
                ConstInit::Uniform(1.0),
            ],
            ..MeshInputs::default()
        };
        let run = execute(&program, mesh, &inputs)?;
        state = state_from_streams(&run.outputs.streams);
        state.check_positive(cfg.gamma, t + 1)?;
        stats.merge(&run.stats);
    }
    Ok(SstRun { state, stats })
}

/// `cfg.steps` full predictor-corrector time steps on the mesh, matching
/// [`sst_oracle_run`].
pub fn sst_run_streaming(cfg: &SodConfig, mesh: &MeshConfig) -> Result<SstRun, WorkloadError> {
    cfg.validate()?;
    let predictor = sst_build_program(cfg);
    let corrector = sst_corrector_program(cfg);
    let mut state = cfg.initial_state();
    state.check_positive(cfg.gamma, 0)?;
    let mut stats = SimStats::default();
    for t in 0..cfg.steps {
        let j = state.max_wave_speed(cfg.gamma);
        let f = state.flux(cfg.gamma);
        let mut streams = component_streams(&state.cells);
        streams.extend(component_streams(&f));
        let inputs = MeshInputs {
            streams,
            initial_consts: vec![
                ConstInit::Uniform(j),
                ConstInit::Uniform(cfg.k),
                ConstInit::Uniform(1.0),
            ],
            ..MeshInputs::default()
        };
        let run = execute(&predictor, mesh, &inputs)?;
        let half = state_from_streams(&run.outputs.streams);
        half.check_positive(cfg.gamma, t + 1)?;
        stats.merge(&run.stats);

        let j2 = half.max_wave_speed(cfg.gamma);
        let f2 = half.flux(cfg.gamma);
        let mut streams = component_streams(&half.cells);
        streams.extend(component_streams(&f2));
        streams.extend(component_streams(&state.cells));
        let inputs = MeshInputs {
            streams,
            initial_consts: vec![
                ConstInit::Uniform(j2),
                ConstInit::Uniform(2.0 * cfg.k),
                ConstInit::Uniform(1.0),
            ],
            ..MeshInputs::default()
        };
        let run = execute(&corrector, mesh, &inputs)?;
        state = state_from_streams(&run.outputs.streams);
        state.check_positive(cfg.gamma, t + 1)?;
        stats.merge(&run.stats);
    }
    Ok(SstRun { state, stats })
}

/// Closed-form canonical profile: 15 MACs (30 ops) and 9 streamed words per
/// grid point per pass.
pub fn sst_profile(n: u64, steps: u64, w_bits: u32) -> WorkloadProfile {
    let n_total = 30 * n * steps;
    let s_bits = 9 * u64::from(w_bits) * n * steps;
    WorkloadProfile::new(
        format!("sst-n{n}-s{steps}"),
        n_total as f64,
        s_bits as f64,
    )
}
