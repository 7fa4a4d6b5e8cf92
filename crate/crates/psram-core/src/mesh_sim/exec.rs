//! Program execution: two-phase steps over flat register/constant arrays.
//!
//! Phase 1 stages every `Send` into the destination cell's FIFO using the
//! step-entry register snapshot; phase 2 then runs each cell's instruction
//! sequence. Because sends never observe writes made inside the same step,
//! sweeping cells in ascending order is just one valid serialization of a
//! lockstep machine, and physical cell count cannot change any value.

use std::collections::VecDeque;

use super::program::{
    BoundaryPolicy, Direction, Instruction, MacOp, Program, StreamKind, StreamSpec, StreamWidth,
};
use super::{quantize, MeshConfig, SimError, SimStats};

/// Initial value for one constant slot. The preload happens before the first
/// step and is free: it models writing the array before streaming begins.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstInit {
    Uniform(f64),
    PerCell(Vec<f64>),
}

/// Host-side data bound to a program's stream and region tables, index for
/// index. Region-backed input streams take their values from `regions`, so
/// their entry in `streams` must be empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeshInputs {
    pub streams: Vec<Vec<f64>>,
    pub const_streams: Vec<Vec<f64>>,
    pub initial_consts: Vec<ConstInit>,
    /// One buffer per declared region, row-major with N columns.
    pub regions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeshOutputs {
    /// Per-cell output streams, occurrence-major (empty for region-backed
    /// streams, which write through to `regions`).
    pub streams: Vec<Vec<f64>>,
    /// Final contents of every region.
    pub regions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshRun {
    pub outputs: MeshOutputs,
    pub stats: SimStats,
}

fn width_bits(spec: &StreamSpec, mesh: &MeshConfig) -> u64 {
    match spec.width {
        StreamWidth::MeshWord => u64::from(mesh.w_bits),
        StreamWidth::Bits(b) => u64::from(b),
    }
}

fn check_bound_data(
    what: &'static str,
    specs: &[StreamSpec],
    occurrences: &[u64],
    data: &[Vec<f64>],
    n: u64,
) -> Result<(), SimError> {
    if data.len() != specs.len() {
        return Err(SimError::StreamCount {
            what,
            expected: specs.len(),
            got: data.len(),
        });
    }
    for (i, spec) in specs.iter().enumerate() {
        let expected = match spec.kind {
            StreamKind::PerCell => occurrences[i] * n,
            StreamKind::Broadcast => occurrences[i],
            StreamKind::Region { .. } => 0,
        };
        if data[i].len() as u64 != expected {
            return Err(SimError::DataSize {
                what,
                index: i,
                name: spec.name.clone(),
                expected,
                got: data[i].len() as u64,
            });
        }
    }
    Ok(())
}

/// Runs `program` on `mesh` against `inputs`, returning outputs and cycle
/// statistics. Values depend only on the program and inputs, never on
/// `mesh.p`.
pub fn execute(
    program: &Program,
    mesh: &MeshConfig,
    inputs: &MeshInputs,
) -> Result<MeshRun, SimError> {
    program.validate()?;
    mesh.validate()?;

    let n = program.n;
    let nu = n as usize;
    let nregs = program.registers as usize;
    let nslots = program.const_slots as usize;

    let occ = program.stream_occurrences();
    check_bound_data("input stream", &program.input_streams, &occ.inputs, &inputs.streams, n)?;
    check_bound_data(
        "constant stream",
        &program.const_streams,
        &occ.consts,
        &inputs.const_streams,
        n,
    )?;
    if inputs.regions.len() != program.regions.len() {
        return Err(SimError::StreamCount {
            what: "region",
            expected: program.regions.len(),
            got: inputs.regions.len(),
        });
    }
    for (i, (spec, data)) in program.regions.iter().zip(&inputs.regions).enumerate() {
        let expected = spec.rows * n;
        if data.len() as u64 != expected {
            return Err(SimError::DataSize {
                what: "region",
                index: i,
                name: spec.name.clone(),
                expected,
                got: data.len() as u64,
            });
        }
    }
    if inputs.initial_consts.len() != nslots {
        return Err(SimError::ConstInitCount {
            expected: program.const_slots,
            got: inputs.initial_consts.len(),
        });
    }
    for (i, init) in inputs.initial_consts.iter().enumerate() {
        if let ConstInit::PerCell(v) = init {
            if v.len() as u64 != n {
                return Err(SimError::DataSize {
                    what: "constant preload",
                    index: i,
                    name: format!("slot {i}"),
                    expected: n,
                    got: v.len() as u64,
                });
            }
        }
    }

    // Register file and constant slots, cell-major.
    let mut regs = vec![0.0f64; nu * nregs];
    let mut consts = vec![0.0f64; nu * nslots];
    for (slot, init) in inputs.initial_consts.iter().enumerate() {
        match init {
            ConstInit::Uniform(v) => {
                let q = quantize(*v, mesh);
                for cell in 0..nu {
                    consts[cell * nslots + slot] = q;
                }
            }
            ConstInit::PerCell(vs) => {
                for (cell, v) in vs.iter().enumerate() {
                    consts[cell * nslots + slot] = quantize(*v, mesh);
                }
            }
        }
    }

    let mut regions = inputs.regions.clone();
    let mut out_streams: Vec<Vec<f64>> = program
        .output_streams
        .iter()
        .zip(&occ.outputs)
        .map(|(spec, &o)| match spec.kind {
            StreamKind::PerCell => vec![0.0; (o * n) as usize],
            _ => Vec::new(),
        })
        .collect();

    // Occurrence index of every stream-touching instruction, precomputed so
    // the cell-major phase 2 loop sees a fixed schedule.
    let mut occs: Vec<Vec<u64>> = Vec::with_capacity(program.steps.len());
    {
        let mut ci = vec![0u64; program.input_streams.len()];
        let mut co = vec![0u64; program.output_streams.len()];
        let mut cc = vec![0u64; program.const_streams.len()];
        for step in &program.steps {
            let mut v = Vec::with_capacity(step.len());
            for instr in step {
                let k = match *instr {
                    Instruction::LoadInput { stream, .. } => {
                        let k = ci[stream as usize];
                        ci[stream as usize] += 1;
                        k
                    }
                    Instruction::StoreOutput { stream, .. } => {
                        let k = co[stream as usize];
                        co[stream as usize] += 1;
                        k
                    }
                    Instruction::LoadConst { stream, .. } => {
                        let k = cc[stream as usize];
                        cc[stream as usize] += 1;
                        k
                    }
                    _ => 0,
                };
                v.push(k);
            }
            occs.push(v);
        }
    }

    let zero_gradient = matches!(program.boundary, BoundaryPolicy::ZeroGradient);
    // inbox_left holds messages arriving from the left neighbor (popped by
    // Recv { dir: Left }), inbox_right from the right.
    let mut inbox_left: Vec<VecDeque<f64>> = vec![VecDeque::new(); nu];
    let mut inbox_right: Vec<VecDeque<f64>> = vec![VecDeque::new(); nu];
    let mut snapshot = vec![0.0f64; nu * nregs];

    let blocks = super::block_distribution(n, mesh.p)?;
    let ceil_np = n.div_ceil(mesh.p);
    let mut stats = SimStats {
        per_cell_cycles: vec![0; mesh.p as usize],
        ..SimStats::default()
    };

    for (step_idx, step) in program.steps.iter().enumerate() {
        // Phase 1: stage exchanges against the step-entry snapshot.
        snapshot.copy_from_slice(&regs);
        for instr in step {
            if let Instruction::Send { dir, reg } = *instr {
                let r = reg as usize;
                match dir {
                    Direction::Left => {
                        for cell in 1..nu {
                            inbox_right[cell - 1].push_back(snapshot[cell * nregs + r]);
                        }
                        if zero_gradient {
                            inbox_right[nu - 1].push_back(snapshot[(nu - 1) * nregs + r]);
                        }
                    }
                    Direction::Right => {
                        for cell in 0..nu - 1 {
                            inbox_left[cell + 1].push_back(snapshot[cell * nregs + r]);
                        }
                        if zero_gradient {
                            inbox_left[0].push_back(snapshot[r]);
                        }
                    }
                }
            }
        }

        // Phase 2: run every cell's sequence. Ascending order is arbitrary;
        // nothing below reads another cell's registers.
        for cell in 0..nu {
            let rbase = cell * nregs;
            let cbase = cell * nslots;
            for (ii, instr) in step.iter().enumerate() {
                match *instr {
                    Instruction::LocalMac { op, a, b, c, z } => {
                        let av = consts[cbase + a as usize];
                        let bv = regs[rbase + b as usize];
                        let cv = regs[rbase + c as usize];
                        let raw = match op {
                            MacOp::Add => cv + av * bv,
                            MacOp::Sub => cv - av * bv,
                        };
                        regs[rbase + z as usize] = quantize(raw, mesh);
                    }
                    Instruction::Send { .. } => {}
                    Instruction::Recv { dir, reg } => {
                        let at_edge = match dir {
                            Direction::Left => cell == 0,
                            Direction::Right => cell == nu - 1,
                        };
                        let v = if at_edge && !zero_gradient {
                            match program.boundary {
                                BoundaryPolicy::Zero => 0.0,
                                BoundaryPolicy::Fixed(f) => quantize(f, mesh),
                                BoundaryPolicy::ZeroGradient => unreachable!(),
                            }
                        } else {
                            let q = match dir {
                                Direction::Left => &mut inbox_left[cell],
                                Direction::Right => &mut inbox_right[cell],
                            };
                            q.pop_front().ok_or(SimError::RecvUnderflow {
                                step: step_idx,
                                cell: cell as u64,
                                dir,
                            })?
                        };
                        regs[rbase + reg as usize] = v;
                    }
                    Instruction::LoadInput { stream, reg } => {
                        let s = stream as usize;
                        let k = occs[step_idx][ii] as usize;
                        let v = match &program.input_streams[s].kind {
                            StreamKind::PerCell => inputs.streams[s][k * nu + cell],
                            StreamKind::Region { region, addresses } => {
                                let row = addresses[k] as usize;
                                regions[*region as usize][row * nu + cell]
                            }
                            StreamKind::Broadcast => unreachable!(),
                        };
                        regs[rbase + reg as usize] = quantize(v, mesh);
                    }
                    Instruction::StoreOutput { reg, stream } => {
                        let s = stream as usize;
                        let k = occs[step_idx][ii] as usize;
                        let v = regs[rbase + reg as usize];
                        match &program.output_streams[s].kind {
                            StreamKind::PerCell => out_streams[s][k * nu + cell] = v,
                            StreamKind::Region { region, addresses } => {
                                let row = addresses[k] as usize;
                                regions[*region as usize][row * nu + cell] = v;
                            }
                            StreamKind::Broadcast => unreachable!(),
                        }
                    }
                    Instruction::LoadConst { stream, slot } => {
                        let s = stream as usize;
                        let k = occs[step_idx][ii] as usize;
                        let v = match &program.const_streams[s].kind {
                            StreamKind::Broadcast => inputs.const_streams[s][k],
                            StreamKind::PerCell => inputs.const_streams[s][k * nu + cell],
                            StreamKind::Region { .. } => unreachable!(),
                        };
                        consts[cbase + slot as usize] = quantize(v, mesh);
                    }
                }
            }
        }

        debug_assert!(inbox_left.iter().all(VecDeque::is_empty));
        debug_assert!(inbox_right.iter().all(VecDeque::is_empty));

        // Cycle accounting. All physical cells advance in lockstep, so one
        // step costs ceil(N/P) rounds of the per-cell cycle count; fusion
        // lets an exchange pair ride along with a MAC cycle.
        let c = Program::step_counts(step);
        let pairs = c.pairs();
        let unfused = c.macs + pairs + c.io_ops;
        let fused = c.macs + c.io_ops + pairs.saturating_sub(c.macs);
        stats.mac_cycles += ceil_np * c.macs;
        stats.comm_cycles += ceil_np * pairs;
        stats.io_cycles += ceil_np * c.io_ops;
        stats.total_cycles_fused += ceil_np * fused;
        stats.total_cycles_unfused += ceil_np * unfused;
        stats.macs_executed += n * c.macs;
        let active = if program.fuse_comm { fused } else { unfused };
        for (pc, r) in stats.per_cell_cycles.iter_mut().zip(&blocks) {
            *pc += (r.end - r.start) * active;
        }

        for (ii, instr) in step.iter().enumerate() {
            let _ = ii;
            let spec = match *instr {
                Instruction::LoadInput { stream, .. } => &program.input_streams[stream as usize],
                Instruction::StoreOutput { stream, .. } => &program.output_streams[stream as usize],
                Instruction::LoadConst { stream, .. } => &program.const_streams[stream as usize],
                _ => continue,
            };
            let w = width_bits(spec, mesh);
            stats.io_bits += match spec.kind {
                StreamKind::Broadcast => w,
                _ => n * w,
            };
        }
    }

    stats.total_cycles = if program.fuse_comm {
        stats.total_cycles_fused
    } else {
        stats.total_cycles_unfused
    };
    stats.switching_events = stats.macs_executed * u64::from(mesh.w_bits);

    Ok(MeshRun {
        outputs: MeshOutputs {
            streams: out_streams,
            regions,
        },
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh_sim::{Quantization, RegionSpec};

    fn shift_program(n: u64, dir: Direction, boundary: BoundaryPolicy) -> Program {
        // out[i] = x[i+1] for a left send (values move left), x[i-1] for a
        // right send, with the edge filled per policy.
        let recv_dir = dir.opposite();
        Program {
            n,
            registers: 2,
            const_slots: 0,
            boundary,
            fuse_comm: true,
            input_streams: vec![StreamSpec::per_cell("x")],
            output_streams: vec![StreamSpec::per_cell("y")],
            const_streams: vec![],
            regions: vec![],
            steps: vec![
                vec![Instruction::LoadInput { stream: 0, reg: 0 }],
                vec![
                    Instruction::Send { dir, reg: 0 },
                    Instruction::Recv { dir: recv_dir, reg: 1 },
                    Instruction::StoreOutput { reg: 1, stream: 0 },
                ],
            ],
        }
    }

    fn run(program: &Program, mesh: &MeshConfig, inputs: &MeshInputs) -> MeshRun {
        execute(program, mesh, inputs).unwrap()
    }

    #[test]
    fn mac_computes_c_plus_a_times_b() {
        let program = Program {
            n: 1,
            registers: 3,
            const_slots: 1,
            boundary: BoundaryPolicy::ZeroGradient,
            fuse_comm: true,
            input_streams: vec![StreamSpec::per_cell("b"), StreamSpec::per_cell("c")],
            output_streams: vec![StreamSpec::per_cell("z")],
            const_streams: vec![],
            regions: vec![],
            steps: vec![vec![
                Instruction::LoadInput { stream: 0, reg: 0 },
                Instruction::LoadInput { stream: 1, reg: 1 },
                Instruction::LocalMac {
                    op: MacOp::Add,
                    a: 0,
                    b: 0,
                    c: 1,
                    z: 2,
                },
                Instruction::StoreOutput { reg: 2, stream: 0 },
            ]],
        };
        let inputs = MeshInputs {
            streams: vec![vec![4.0], vec![5.0]],
            initial_consts: vec![ConstInit::Uniform(3.0)],
            ..MeshInputs::default()
        };
        let out = run(&program, &MeshConfig::real(1, 8), &inputs);
        assert_eq!(out.outputs.streams[0], vec![17.0]);
        assert_eq!(out.stats.macs_executed, 1);
        assert_eq!(out.stats.switching_events, 8);
    }

    #[test]
    fn left_shift_matches_array_oracle_per_boundary_policy() {
        let n = 8u64;
        let x: Vec<f64> = (0..n).map(|i| (i as f64) * 1.5 - 3.0).collect();
        for (boundary, edge) in [
            (BoundaryPolicy::ZeroGradient, x[7]),
            (BoundaryPolicy::Zero, 0.0),
            (BoundaryPolicy::Fixed(9.0), 9.0),
        ] {
            let program = shift_program(n, Direction::Left, boundary);
            let inputs = MeshInputs {
                streams: vec![x.clone()],
                ..MeshInputs::default()
            };
            let out = run(&program, &MeshConfig::real(3, 8), &inputs);
            let mut expect: Vec<f64> = x[1..].to_vec();
            expect.push(edge);
            assert_eq!(out.outputs.streams[0], expect, "{boundary:?}");
        }
    }

    #[test]
    fn right_shift_matches_array_oracle() {
        let n = 5u64;
        let x: Vec<f64> = (0..n).map(|i| (i * i) as f64).collect();
        let program = shift_program(n, Direction::Right, BoundaryPolicy::ZeroGradient);
        let inputs = MeshInputs {
            streams: vec![x.clone()],
            ..MeshInputs::default()
        };
        let out = run(&program, &MeshConfig::real(2, 8), &inputs);
        let mut expect = vec![x[0]];
        expect.extend_from_slice(&x[..4]);
        assert_eq!(out.outputs.streams[0], expect);
    }

    #[test]
    fn sends_post_step_entry_values() {
        // The load inside the same step must not affect what gets sent.
        let n = 4u64;
        let program = Program {
            n,
            registers: 2,
            const_slots: 0,
            boundary: BoundaryPolicy::ZeroGradient,
            fuse_comm: true,
            input_streams: vec![StreamSpec::per_cell("x"), StreamSpec::per_cell("y")],
            output_streams: vec![StreamSpec::per_cell("shifted_x"), StreamSpec::per_cell("r0")],
            const_streams: vec![],
            regions: vec![],
            steps: vec![
                vec![Instruction::LoadInput { stream: 0, reg: 0 }],
                vec![
                    Instruction::LoadInput { stream: 1, reg: 0 },
                    Instruction::Send { dir: Direction::Left, reg: 0 },
                    Instruction::Recv { dir: Direction::Right, reg: 1 },
                    Instruction::StoreOutput { reg: 1, stream: 0 },
                    Instruction::StoreOutput { reg: 0, stream: 1 },
                ],
            ],
        };
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let y = vec![10.0, 20.0, 30.0, 40.0];
        let inputs = MeshInputs {
            streams: vec![x, y.clone()],
            ..MeshInputs::default()
        };
        let out = run(&program, &MeshConfig::real(1, 8), &inputs);
        assert_eq!(out.outputs.streams[0], vec![2.0, 3.0, 4.0, 4.0]);
        assert_eq!(out.outputs.streams[1], y);
    }

    #[test]
    fn opposite_exchanges_in_one_step_stay_paired() {
        // b goes left while a comes back right, as in a flux kernel.
        let n = 6u64;
        let program = Program {
            n,
            registers: 4,
            const_slots: 0,
            boundary: BoundaryPolicy::ZeroGradient,
            fuse_comm: true,
            input_streams: vec![StreamSpec::per_cell("u")],
            output_streams: vec![StreamSpec::per_cell("from_right"), StreamSpec::per_cell("from_left")],
            const_streams: vec![],
            regions: vec![],
            steps: vec![
                vec![Instruction::LoadInput { stream: 0, reg: 0 }],
                vec![
                    Instruction::Send { dir: Direction::Left, reg: 0 },
                    Instruction::Send { dir: Direction::Right, reg: 0 },
                    Instruction::Recv { dir: Direction::Right, reg: 1 },
                    Instruction::Recv { dir: Direction::Left, reg: 2 },
                    Instruction::StoreOutput { reg: 1, stream: 0 },
                    Instruction::StoreOutput { reg: 2, stream: 1 },
                ],
            ],
        };
        let u: Vec<f64> = (0..n).map(|i| i as f64 + 0.5).collect();
        let inputs = MeshInputs {
            streams: vec![u.clone()],
            ..MeshInputs::default()
        };
        let out = run(&program, &MeshConfig::real(4, 8), &inputs);
        let from_right: Vec<f64> = (0..6).map(|i| u[(i + 1).min(5)]).collect();
        let from_left: Vec<f64> = (0..6).map(|i: usize| u[i.saturating_sub(1)]).collect();
        assert_eq!(out.outputs.streams[0], from_right);
        assert_eq!(out.outputs.streams[1], from_left);
        assert_eq!(out.stats.comm_cycles, 2 * 2); // ceil(6/4) * 2 pairs
    }

    #[test]
    fn region_rows_accumulate_across_steps() {
        let n = 3u64;
        let update_step = vec![
            Instruction::LoadInput { stream: 0, reg: 0 },
            Instruction::LoadInput { stream: 1, reg: 1 },
            Instruction::LocalMac {
                op: MacOp::Add,
                a: 0,
                b: 0,
                c: 1,
                z: 1,
            },
            Instruction::StoreOutput { reg: 1, stream: 0 },
        ];
        // Two updates to row 1, one to row 0.
        let addrs = vec![1u64, 0, 1];
        let steps = vec![update_step.clone(), update_step.clone(), update_step];
        let program = Program {
            n,
            registers: 2,
            const_slots: 1,
            boundary: BoundaryPolicy::ZeroGradient,
            fuse_comm: true,
            input_streams: vec![
                StreamSpec::per_cell("x"),
                StreamSpec::region("acc_read", 0, addrs.clone()),
            ],
            output_streams: vec![StreamSpec::region("acc_write", 0, addrs)],
            const_streams: vec![],
            regions: vec![RegionSpec {
                name: "acc".into(),
                rows: 2,
            }],
            steps,
        };
        let inputs = MeshInputs {
            streams: vec![vec![1.0, 2.0, 3.0, 10.0, 20.0, 30.0, 100.0, 200.0, 300.0], vec![]],
            initial_consts: vec![ConstInit::Uniform(1.0)],
            regions: vec![vec![0.0; 6]],
            ..MeshInputs::default()
        };
        let out = run(&program, &MeshConfig::real(2, 8), &inputs);
        // row 0 gets the second step's x, row 1 the first and third.
        assert_eq!(out.outputs.regions[0], vec![10.0, 20.0, 30.0, 101.0, 202.0, 303.0]);
    }

    #[test]
    fn broadcast_constants_reach_every_cell_but_count_once() {
        let n = 4u64;
        let program = Program {
            n,
            registers: 1,
            const_slots: 1,
            boundary: BoundaryPolicy::ZeroGradient,
            fuse_comm: true,
            input_streams: vec![],
            output_streams: vec![StreamSpec::per_cell("z")],
            const_streams: vec![StreamSpec::broadcast("k", StreamWidth::Bits(32))],
            regions: vec![],
            steps: vec![vec![
                Instruction::LoadConst { stream: 0, slot: 0 },
                Instruction::LocalMac {
                    op: MacOp::Add,
                    a: 0,
                    b: 0,
                    c: 0,
                    z: 0,
                },
                Instruction::StoreOutput { reg: 0, stream: 0 },
            ]],
        };
        let inputs = MeshInputs {
            const_streams: vec![vec![7.0]],
            initial_consts: vec![ConstInit::Uniform(0.0)],
            ..MeshInputs::default()
        };
        let out = run(&program, &MeshConfig::real(1, 8), &inputs);
        // z = 0 + 7*0 = 0 everywhere; the point is traffic accounting.
        assert_eq!(out.outputs.streams[0], vec![0.0; 4]);
        // 32 bits broadcast once + 4 cells * 8-bit store.
        assert_eq!(out.stats.io_bits, 32 + 4 * 8);
    }

    #[test]
    fn cycle_accounting_follows_the_block_law() {
        let n = 10u64;
        let program = shift_program(n, Direction::Left, BoundaryPolicy::ZeroGradient);
        let inputs = MeshInputs {
            streams: vec![vec![0.5; 10]],
            ..MeshInputs::default()
        };
        let out = run(&program, &MeshConfig::real(4, 8), &inputs);
        // ceil(10/4) = 3. Step 1: one load. Step 2: one pair + one store,
        // nothing to fuse against (no MAC), so the pair keeps its cycle.
        assert_eq!(out.stats.io_cycles, 3 * 2);
        assert_eq!(out.stats.comm_cycles, 3);
        assert_eq!(out.stats.total_cycles_unfused, 3 * 3);
        assert_eq!(out.stats.total_cycles_fused, 3 * 3);
        assert_eq!(out.stats.total_cycles, out.stats.total_cycles_fused);
        // Blocks are 3,3,2,2.
        assert_eq!(out.stats.per_cell_cycles, vec![9, 9, 6, 6]);
        assert_eq!(out.stats.io_bits, 2 * 10 * 8);
    }

    #[test]
    fn physical_cell_count_never_changes_values() {
        let n = 9u64;
        let program = shift_program(n, Direction::Left, BoundaryPolicy::ZeroGradient);
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let inputs = MeshInputs {
            streams: vec![x],
            ..MeshInputs::default()
        };
        let reference = run(&program, &MeshConfig::real(1, 8), &inputs);
        for p in [2, 3, 8, 9, 64] {
            let other = run(&program, &MeshConfig::real(p, 8), &inputs);
            assert_eq!(other.outputs, reference.outputs, "p = {p}");
            assert_eq!(other.stats.macs_executed, reference.stats.macs_executed);
            assert_eq!(other.stats.io_bits, reference.stats.io_bits);
        }
    }

    #[test]
    fn fixed_point_quantizes_loads_and_mac_results() {
        let program = Program {
            n: 1,
            registers: 2,
            const_slots: 1,
            boundary: BoundaryPolicy::ZeroGradient,
            fuse_comm: true,
            input_streams: vec![StreamSpec::per_cell("x")],
            output_streams: vec![StreamSpec::per_cell("z")],
            const_streams: vec![],
            regions: vec![],
            steps: vec![vec![
                Instruction::LoadInput { stream: 0, reg: 0 },
                Instruction::LocalMac {
                    op: MacOp::Add,
                    a: 0,
                    b: 0,
                    c: 1,
                    z: 1,
                },
                Instruction::StoreOutput { reg: 1, stream: 0 },
            ]],
        };
        let mesh = MeshConfig {
            p: 1,
            w_bits: 8,
            quantization: Quantization::Fixed { frac_bits: 4 },
        };
        let inputs = MeshInputs {
            streams: vec![vec![0.3]],
            initial_consts: vec![ConstInit::Uniform(2.0)],
            ..MeshInputs::default()
        };
        let out = execute(&program, &mesh, &inputs).unwrap();
        // load quantizes 0.3 -> 0.3125; 0 + 2*0.3125 = 0.625 is exact.
        assert_eq!(out.outputs.streams[0], vec![0.625]);
    }

    #[test]
    fn missing_stream_data_is_reported_with_the_stream_name() {
        let program = shift_program(4, Direction::Left, BoundaryPolicy::ZeroGradient);
        let inputs = MeshInputs {
            streams: vec![vec![1.0, 2.0]],
            ..MeshInputs::default()
        };
        let err = execute(&program, &MeshConfig::real(1, 8), &inputs).unwrap_err();
        match err {
            SimError::DataSize { name, expected, got, .. } => {
                assert_eq!(name, "x");
                assert_eq!((expected, got), (4, 2));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn const_preload_count_must_match_slots() {
        let mut program = shift_program(4, Direction::Left, BoundaryPolicy::ZeroGradient);
        program.const_slots = 2;
        let inputs = MeshInputs {
            streams: vec![vec![0.0; 4]],
            initial_consts: vec![ConstInit::Uniform(1.0)],
            ..MeshInputs::default()
        };
        let err = execute(&program, &MeshConfig::real(1, 8), &inputs).unwrap_err();
        assert!(matches!(err, SimError::ConstInitCount { expected: 2, got: 1 }));
    }
}
