//! Sparse mode-0 MTTKRP (matricized tensor times Khatri-Rao product) as a
//! streaming mesh kernel.
//!
//! The mesh is R virtual cells wide, cell r owning output column r. Each
//! nonzero X(h0,h1,h2) becomes one synchronous step: the factor row B(h1,:)
//! arrives through a constant slot, C(h2,:) through an input stream, the
//! Hadamard term f = B*C is one MAC, and a second MAC accumulates x*f into
//! the A(h0,:) row held in an addressable external region. Coordinates ride
//! along as 32-bit broadcast words so the traffic accounting covers the
//! index data a real controller would fetch.

use rand::Rng;

use crate::mesh_sim::{
    execute, BoundaryPolicy, ConstInit, Instruction, MacOp, MeshConfig, MeshInputs, Program,
    RegionSpec, SimStats, StreamKind, StreamSpec, StreamWidth,
};
use crate::perf_model::WorkloadProfile;

use super::WorkloadError;

/// Coordinate-list sparse 3-way tensor, entries sorted by (h0, h1, h2),
/// duplicates summed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTensor {
    dims: [u64; 3],
    entries: Vec<([u64; 3], f64)>,
}

impl SparseTensor {
    pub fn new(dims: [u64; 3], mut entries: Vec<([u64; 3], f64)>) -> Result<Self, WorkloadError> {
        if dims.iter().any(|&d| d == 0) {
            return Err(WorkloadError::Invalid(format!(
                "tensor dimensions must be positive, got {dims:?}"
            )));
        }
        for &(coord, _) in &entries {
            for m in 0..3 {
                if coord[m] >= dims[m] {
                    return Err(WorkloadError::Invalid(format!(
                        "coordinate {coord:?} outside dimensions {dims:?}"
                    )));
                }
            }
        }
        entries.sort_by_key(|&(coord, _)| coord);
        let mut merged: Vec<([u64; 3], f64)> = Vec::with_capacity(entries.len());
        for (coord, value) in entries {
            match merged.last_mut() {
                Some((last, acc)) if *last == coord => *acc += value,
                _ => merged.push((coord, value)),
            }
        }
        Ok(SparseTensor {
            dims,
            entries: merged,
        })
    }

    pub fn dims(&self) -> [u64; 3] {
        self.dims
    }

    pub fn nnz(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn entries(&self) -> &[([u64; 3], f64)] {
        &self.entries
    }
}

/// Dense rows x rank matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    pub rows: u64,
    pub rank: u32,
    pub data: Vec<f64>,
}

impl FactorMatrix {
    pub fn new(rows: u64, rank: u32, data: Vec<f64>) -> Result<Self, WorkloadError> {
        if rank == 0 {
            return Err(WorkloadError::Invalid("rank must be >= 1".into()));
        }
        let expected = rows * u64::from(rank);
        if data.len() as u64 != expected {
            return Err(WorkloadError::Invalid(format!(
                "factor matrix data length {} does not match {rows} x {rank}",
                data.len()
            )));
        }
        Ok(FactorMatrix { rows, rank, data })
    }

    pub fn zeros(rows: u64, rank: u32) -> Self {
        FactorMatrix {
            rows,
            rank,
            data: vec![0.0; (rows * u64::from(rank)) as usize],
        }
    }

    pub fn get(&self, row: u64, col: u32) -> f64 {
        self.data[(row * u64::from(self.rank) + u64::from(col)) as usize]
    }

    fn row(&self, row: u64) -> &[f64] {
        let r = (row * u64::from(self.rank)) as usize;
        &self.data[r..r + self.rank as usize]
    }
}

fn check_dims(x: &SparseTensor, b: &FactorMatrix, c: &FactorMatrix) -> Result<u32, WorkloadError> {
    let [_, i1, i2] = x.dims();
    if b.rows != i1 || c.rows != i2 {
        return Err(WorkloadError::Invalid(format!(
            "factor rows ({}, {}) do not match tensor dimensions ({i1}, {i2})",
            b.rows, c.rows
        )));
    }
    if b.rank != c.rank {
        return Err(WorkloadError::Invalid(format!(
            "factor ranks differ: {} vs {}",
            b.rank, c.rank
        )));
    }
    Ok(b.rank)
}

/// Scalar reference: A(h0, r) += x * (B(h1, r) * C(h2, r)) over sorted
/// nonzeros, with the same two-rounding structure as the mesh MACs.
pub fn mttkrp_oracle(
    x: &SparseTensor,
    b: &FactorMatrix,
    c: &FactorMatrix,
) -> Result<FactorMatrix, WorkloadError> {
    let rank = check_dims(x, b, c)?;
    let mut a = FactorMatrix::zeros(x.dims()[0], rank);
    for &([h0, h1, h2], v) in x.entries() {
        for r in 0..rank {
            let f = 0.0 + b.get(h1, r) * c.get(h2, r);
            let idx = (h0 * u64::from(rank) + u64::from(r)) as usize;
            a.data[idx] += v * f;
        }
    }
    Ok(a)
}

/// Brute-force reference with an independent accumulation order: for each
/// output entry, sweep the full dense index space.
pub fn mttkrp_dense_oracle(
    x: &SparseTensor,
    b: &FactorMatrix,
    c: &FactorMatrix,
) -> Result<FactorMatrix, WorkloadError> {
    let rank = check_dims(x, b, c)?;
    let [i0, i1, i2] = x.dims();
    let mut dense = vec![0.0f64; (i0 * i1 * i2) as usize];
    for &([h0, h1, h2], v) in x.entries() {
        dense[((h0 * i1 + h1) * i2 + h2) as usize] += v;
    }
    let mut a = FactorMatrix::zeros(i0, rank);
    for h0 in 0..i0 {
        for r in 0..rank {
            let mut acc = 0.0;
            for h1 in 0..i1 {
                for h2 in 0..i2 {
                    let v = dense[((h0 * i1 + h1) * i2 + h2) as usize];
                    acc += v * (b.get(h1, r) * c.get(h2, r));
                }
            }
            let idx = (h0 * u64::from(rank) + u64::from(r)) as usize;
            a.data[idx] = acc;
        }
    }
    Ok(a)
}

const SLOT_SCRATCH: u32 = 0;
const SLOT_B: u32 = 1;
const SLOT_X: u32 = 2;
const R_ZERO: u32 = 0;
const R_C: u32 = 1;
const R_F: u32 = 2;
const R_A: u32 = 3;

/// One step per nonzero over R virtual cells; the output lives in region 0
/// (rows = I0), read and written through row-addressed streams so repeated
/// h0 values accumulate.
pub fn mttkrp_build_program(
    x: &SparseTensor,
    b: &FactorMatrix,
    c: &FactorMatrix,
    rank: u32,
) -> Result<Program, WorkloadError> {
    let checked = check_dims(x, b, c)?;
    if checked != rank {
        return Err(WorkloadError::Invalid(format!(
            "requested rank {rank} does not match factor rank {checked}"
        )));
    }
    let addrs: Vec<u64> = x.entries().iter().map(|&([h0, _, _], _)| h0).collect();
    let steps = x
        .entries()
        .iter()
        .map(|_| {
            vec![
                Instruction::LoadConst { stream: 0, slot: SLOT_SCRATCH },
                Instruction::LoadConst { stream: 1, slot: SLOT_SCRATCH },
                Instruction::LoadConst { stream: 2, slot: SLOT_SCRATCH },
                Instruction::LoadConst { stream: 3, slot: SLOT_B },
                Instruction::LoadInput { stream: 0, reg: R_C },
                Instruction::LocalMac { op: MacOp::Add, a: SLOT_B, b: R_C, c: R_ZERO, z: R_F },
                Instruction::LoadConst { stream: 4, slot: SLOT_X },
                Instruction::LoadInput { stream: 1, reg: R_A },
                Instruction::LocalMac { op: MacOp::Add, a: SLOT_X, b: R_F, c: R_A, z: R_A },
                Instruction::StoreOutput { reg: R_A, stream: 0 },
            ]
        })
        .collect();
    Ok(Program {
        n: u64::from(rank),
        registers: 4,
        const_slots: 3,
        boundary: BoundaryPolicy::ZeroGradient,
        fuse_comm: true,
        input_streams: vec![
            StreamSpec::per_cell("c_row"),
            StreamSpec::region("a_row", 0, addrs.clone()),
        ],
        output_streams: vec![StreamSpec::region("a_row", 0, addrs)],
        const_streams: vec![
            StreamSpec::broadcast("h0", StreamWidth::Bits(32)),
            StreamSpec::broadcast("h1", StreamWidth::Bits(32)),
            StreamSpec::broadcast("h2", StreamWidth::Bits(32)),
            StreamSpec {
                name: "b_row".into(),
                width: StreamWidth::MeshWord,
                kind: StreamKind::PerCell,
            },
            StreamSpec::broadcast("x", StreamWidth::MeshWord),
        ],
        regions: vec![RegionSpec {
            name: "a".into(),
            rows: x.dims()[0],
        }],
        steps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MttkrpRun {
    pub factor: FactorMatrix,
    pub stats: SimStats,
}

/// Runs the streaming kernel and returns the accumulated I0 x R factor.
pub fn mttkrp_run(
    x: &SparseTensor,
    b: &FactorMatrix,
    c: &FactorMatrix,
    mesh: &MeshConfig,
) -> Result<MttkrpRun, WorkloadError> {
    let rank = check_dims(x, b, c)?;
    let program = mttkrp_build_program(x, b, c, rank)?;
    let nnz = x.nnz() as usize;
    let r = rank as usize;

    let mut h0 = Vec::with_capacity(nnz);
    let mut h1 = Vec::with_capacity(nnz);
    let mut h2 = Vec::with_capacity(nnz);
    let mut xval = Vec::with_capacity(nnz);
    let mut b_row = Vec::with_capacity(nnz * r);
    let mut c_row = Vec::with_capacity(nnz * r);
    for &([i0, i1, i2], v) in x.entries() {
        h0.push(i0 as f64);
        h1.push(i1 as f64);
        h2.push(i2 as f64);
        xval.push(v);
        b_row.extend_from_slice(b.row(i1));
        c_row.extend_from_slice(c.row(i2));
    }

    let inputs = MeshInputs {
        streams: vec![c_row, Vec::new()],
        const_streams: vec![h0, h1, h2, b_row, xval],
        initial_consts: vec![
            ConstInit::Uniform(0.0),
            ConstInit::Uniform(0.0),
            ConstInit::Uniform(0.0),
        ],
        regions: vec![vec![0.0; (x.dims()[0] * u64::from(rank)) as usize]],
    };
    let run = execute(&program, mesh, &inputs)?;
    Ok(MttkrpRun {
        factor: FactorMatrix {
            rows: x.dims()[0],
            rank,
            data: run.outputs.regions[0].clone(),
        },
        stats: run.stats,
    })
}

/// Closed-form per-nonzero accounting: 2R MACs (4R ops) and two factor rows
/// plus the A row read+write at width w, one tensor word, and three 32-bit
/// coordinates.
pub fn mttkrp_profile(nnz: u64, rank: u32, w_bits: u32) -> WorkloadProfile {
    let r = u64::from(rank);
    let w = u64::from(w_bits);
    let n_total = 4 * r * nnz;
    let s_bits = nnz * ((4 * r + 1) * w + 3 * 32);
    WorkloadProfile::new(
        format!("mttkrp-nnz{nnz}-r{rank}"),
        n_total as f64,
        s_bits as f64,
    )
}

/// Samples each position independently at `density`, values uniform in
/// [-1, 1). Iteration order is coordinate-ascending, so the result is
/// deterministic for a given generator state.
pub fn random_tensor(dims: [u64; 3], density: f64, rng: &mut impl Rng) -> SparseTensor {
    let mut entries = Vec::new();
    for i0 in 0..dims[0] {
        for i1 in 0..dims[1] {
            for i2 in 0..dims[2] {
                if rng.random::<f64>() < density {
                    entries.push(([i0, i1, i2], rng.random_range(-1.0..1.0)));
                }
            }
        }
    }
    SparseTensor::new(dims, entries).expect("generated coordinates are in range")
}

pub fn random_factor(rows: u64, rank: u32, rng: &mut impl Rng) -> FactorMatrix {
    let data = (0..rows * u64::from(rank))
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    FactorMatrix::new(rows, rank, data).expect("length matches by construction")
}
