//! Program representation for the SPMD compute mesh.
//!
//! A program is a list of synchronous steps; within a step every virtual cell
//! runs the same instruction sequence against its own registers, constant
//! slots and stream bindings. Exchanges resolve against a register snapshot
//! taken at step entry, so cell execution order never affects values.

use serde::{Deserialize, Serialize};

use super::SimError;

/// MAC polarity: z = c + a*b or z = c - a*b.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MacOp {
    Add,
    Sub,
}

/// Nearest-neighbor link direction. `Left` is toward lower cell indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn opposite(self) -> Direction {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }
}

/// One mesh instruction. `a` always names a constant slot; `b`, `c` and `z`
/// name registers; `stream` and `slot` index the program's stream and
/// constant-slot tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Instruction {
    /// z = c +/- a*b with `a` read from a constant slot.
    #[serde(rename = "LocalMAC")]
    LocalMac { op: MacOp, a: u32, b: u32, c: u32, z: u32 },
    /// Posts the step-entry value of `reg` to the neighbor in `dir`.
    Send { dir: Direction, reg: u32 },
    /// Receives the matching posted value from the neighbor in `dir`.
    Recv { dir: Direction, reg: u32 },
    /// Loads the next element of an input stream into `reg`.
    LoadInput { stream: u32, reg: u32 },
    /// Appends `reg` to an output stream (or writes through to a region).
    StoreOutput { reg: u32, stream: u32 },
    /// Reloads a constant slot mid-stream; unlike the initial preload this
    /// costs a cycle and counts as traffic.
    LoadConst { stream: u32, slot: u32 },
}

/// What a `Recv` on a missing neighbor returns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryPolicy {
    /// The cell's own posted value for the matching send, as if a mirror
    /// ghost cell sat beyond the edge.
    ZeroGradient,
    /// A fixed constant.
    Fixed(f64),
    /// Zero.
    Zero,
}

/// Traffic width of one stream element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StreamWidth {
    /// The mesh word width w.
    MeshWord,
    /// An explicit width, e.g. 32-bit coordinates.
    Bits(u32),
}

/// Element layout of a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StreamKind {
    /// One element per (occurrence, cell): data laid out occurrence-major.
    PerCell,
    /// One element per occurrence, delivered to every cell. Constant streams
    /// only; the element is charged once per occurrence.
    Broadcast,
    /// Column-partitioned external buffer: occurrence k touches row
    /// `addresses[k]`, and each cell owns its own column. Reads observe
    /// writes from earlier instructions, which is what lets a kernel
    /// accumulate into external state across steps.
    Region { region: u32, addresses: Vec<u64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub name: String,
    pub width: StreamWidth,
    pub kind: StreamKind,
}

impl StreamSpec {
    pub fn per_cell(name: impl Into<String>) -> Self {
        StreamSpec {
            name: name.into(),
            width: StreamWidth::MeshWord,
            kind: StreamKind::PerCell,
        }
    }

    pub fn broadcast(name: impl Into<String>, width: StreamWidth) -> Self {
        StreamSpec {
            name: name.into(),
            width,
            kind: StreamKind::Broadcast,
        }
    }

    pub fn region(name: impl Into<String>, region: u32, addresses: Vec<u64>) -> Self {
        StreamSpec {
            name: name.into(),
            width: StreamWidth::MeshWord,
            kind: StreamKind::Region { region, addresses },
        }
    }
}

/// An addressable external buffer of `rows` rows by N columns (one column
/// per virtual cell).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub name: String,
    pub rows: u64,
}

/// A complete SPMD mesh program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Program {
    /// Virtual cell count (iteration points). Physical cell count is a
    /// property of the mesh, not the program.
    pub n: u64,
    pub registers: u32,
    pub const_slots: u32,
    pub boundary: BoundaryPolicy,
    /// When set, an exchange pair adjacent to a MAC in the schedule shares
    /// its cycle; both fused and unfused totals are reported either way.
    pub fuse_comm: bool,
    pub input_streams: Vec<StreamSpec>,
    pub output_streams: Vec<StreamSpec>,
    pub const_streams: Vec<StreamSpec>,
    pub regions: Vec<RegionSpec>,
    pub steps: Vec<Vec<Instruction>>,
}

/// Per-step instruction census used by validation and cycle accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct StepCounts {
    pub macs: u64,
    pub sends_left: u64,
    pub sends_right: u64,
    pub recvs_left: u64,
    pub recvs_right: u64,
    pub io_ops: u64,
}

impl StepCounts {
    pub fn pairs(&self) -> u64 {
        self.sends_left + self.sends_right
    }
}

impl Program {
    pub(crate) fn step_counts(step: &[Instruction]) -> StepCounts {
        let mut c = StepCounts::default();
        for instr in step {
            match instr {
                Instruction::LocalMac { .. } => c.macs += 1,
                Instruction::Send { dir: Direction::Left, .. } => c.sends_left += 1,
                Instruction::Send { dir: Direction::Right, .. } => c.sends_right += 1,
                Instruction::Recv { dir: Direction::Left, .. } => c.recvs_left += 1,
                Instruction::Recv { dir: Direction::Right, .. } => c.recvs_right += 1,
                Instruction::LoadInput { .. }
                | Instruction::StoreOutput { .. }
                | Instruction::LoadConst { .. } => c.io_ops += 1,
            }
        }
        c
    }

    /// Number of times each stream is referenced across the whole program;
    /// this is the occurrence count its data must cover.
    pub fn stream_occurrences(&self) -> StreamOccurrences {
        let mut occ = StreamOccurrences {
            inputs: vec![0; self.input_streams.len()],
            outputs: vec![0; self.output_streams.len()],
            consts: vec![0; self.const_streams.len()],
        };
        for step in &self.steps {
            for instr in step {
                match *instr {
                    Instruction::LoadInput { stream, .. } => {
                        if let Some(c) = occ.inputs.get_mut(stream as usize) {
                            *c += 1;
                        }
                    }
                    Instruction::StoreOutput { stream, .. } => {
                        if let Some(c) = occ.outputs.get_mut(stream as usize) {
                            *c += 1;
                        }
                    }
                    Instruction::LoadConst { stream, .. } => {
                        if let Some(c) = occ.consts.get_mut(stream as usize) {
                            *c += 1;
                        }
                    }
                    _ => {}
                }
            }
        }
        occ
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n == 0 {
            return Err(SimError::InvalidProgram("n must be >= 1".into()));
        }
        for (si, spec) in self.input_streams.iter().enumerate() {
            if matches!(spec.kind, StreamKind::Broadcast) {
                return Err(SimError::InvalidProgram(format!(
                    "input stream {si} ({}) cannot be broadcast",
                    spec.name
                )));
            }
            self.check_region_ref(spec, "input", si)?;
        }
        for (si, spec) in self.output_streams.iter().enumerate() {
            if matches!(spec.kind, StreamKind::Broadcast) {
                return Err(SimError::InvalidProgram(format!(
                    "output stream {si} ({}) cannot be broadcast",
                    spec.name
                )));
            }
            self.check_region_ref(spec, "output", si)?;
        }
        for (si, spec) in self.const_streams.iter().enumerate() {
            if matches!(spec.kind, StreamKind::Region { .. }) {
                return Err(SimError::InvalidProgram(format!(
                    "constant stream {si} ({}) cannot be region-backed",
                    spec.name
                )));
            }
        }

        for (step_idx, step) in self.steps.iter().enumerate() {
            for instr in step {
                self.check_instruction(step_idx, instr)?;
            }
            let c = Self::step_counts(step);
            if c.sends_left != c.recvs_right || c.sends_right != c.recvs_left {
                return Err(SimError::UnmatchedExchange {
                    step: step_idx,
                    sends_left: c.sends_left,
                    recvs_right: c.recvs_right,
                    sends_right: c.sends_right,
                    recvs_left: c.recvs_left,
                });
            }
        }

        // Region-backed streams carry their address schedule in the program,
        // so its length can be checked without input data.
        let occ = self.stream_occurrences();
        for (streams, counts, label) in [
            (&self.input_streams, &occ.inputs, "input"),
            (&self.output_streams, &occ.outputs, "output"),
        ] {
            for (si, spec) in streams.iter().enumerate() {
                if let StreamKind::Region { addresses, .. } = &spec.kind {
                    if addresses.len() as u64 != counts[si] {
                        return Err(SimError::InvalidProgram(format!(
                            "{label} stream {si} ({}): {} addresses for {} occurrences",
                            spec.name,
                            addresses.len(),
                            counts[si]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_region_ref(&self, spec: &StreamSpec, label: &str, si: usize) -> Result<(), SimError> {
        if let StreamKind::Region { region, addresses } = &spec.kind {
            let Some(r) = self.regions.get(*region as usize) else {
                return Err(SimError::InvalidProgram(format!(
                    "{label} stream {si} ({}): region {region} not declared",
                    spec.name
                )));
            };
            if let Some(bad) = addresses.iter().find(|&&a| a >= r.rows) {
                return Err(SimError::InvalidProgram(format!(
                    "{label} stream {si} ({}): address {bad} out of range for region {} with {} rows",
                    spec.name, r.name, r.rows
                )));
            }
        }
        Ok(())
    }

    fn check_instruction(&self, step: usize, instr: &Instruction) -> Result<(), SimError> {
        let reg_ok = |r: u32| r < self.registers;
        let bad = |what: String| Err(SimError::InvalidProgram(format!("step {step}: {what}")));
        match *instr {
            Instruction::LocalMac { a, b, c, z, .. } => {
                if a >= self.const_slots {
                    return bad(format!("constant slot {a} out of range"));
                }
                for r in [b, c, z] {
                    if !reg_ok(r) {
                        return bad(format!("register {r} out of range"));
                    }
                }
            }
            Instruction::Send { reg, .. } | Instruction::Recv { reg, .. } => {
                if !reg_ok(reg) {
                    return bad(format!("register {reg} out of range"));
                }
            }
            Instruction::LoadInput { stream, reg } => {
                if stream as usize >= self.input_streams.len() {
                    return bad(format!("input stream {stream} not declared"));
                }
                if !reg_ok(reg) {
                    return bad(format!("register {reg} out of range"));
                }
            }
            Instruction::StoreOutput { reg, stream } => {
                if stream as usize >= self.output_streams.len() {
                    return bad(format!("output stream {stream} not declared"));
                }
                if !reg_ok(reg) {
                    return bad(format!("register {reg} out of range"));
                }
            }
            Instruction::LoadConst { stream, slot } => {
                if stream as usize >= self.const_streams.len() {
                    return bad(format!("constant stream {stream} not declared"));
                }
                if slot >= self.const_slots {
                    return bad(format!("constant slot {slot} out of range"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamOccurrences {
    pub inputs: Vec<u64>,
    pub outputs: Vec<u64>,
    pub consts: Vec<u64>,
}
