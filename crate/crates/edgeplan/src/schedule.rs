//! Schedules: what runs, what stays in RAM, what moves to auxiliary
//! storage — per timestep — plus the independent checker and the cost
//! accountant.
//!
//! A [`Schedule`] for an `n`-node graph is five `n × n` bit matrices,
//! rows indexed by timestep `t`, columns by execution slot `k` (both
//! 1-based; slot `k` is the node at position `k` of the graph's execution
//! order):
//!
//! * `compute[t,k]` — operator `k` runs during step `t`.
//! * `resident[t,k]` — `k`'s output is in RAM at the *start* of step `t`.
//! * `staged[t,k]` — a copy of `k`'s output exists in auxiliary storage
//!   at the start of step `t`.
//! * `pagein[t,k]` — `k`'s output is transferred aux → RAM during step
//!   `t` (usable from step `t+1`).
//! * `pageout[t,k]` — `k`'s output is transferred RAM → aux during step
//!   `t` (staged from step `t+1`).
//!
//! Deallocation is not stored: RAM is reclaimed greedily — a tensor is
//! dropped the moment nothing later in the current step uses it, it is
//! not scheduled to stay resident into the next step, and no page-out of
//! it is still pending. [`verify`] and [`evaluate`] both recompute that
//! greedy reclamation, so a schedule file fully determines its memory
//! behavior.

use crate::costmodel::CostProfile;
use crate::graph::{graph_hash, TrainingGraph};
use crate::rat::{display, parse_decimal, to_decimal_string, DecimalError, Rat};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, thiserror::Error)]
pub enum ScheduleError {
    #[error("failed to read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("failed to write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("failed to parse schedule {path}: {message}")]
    Parse { path: String, message: String },
    #[error("matrix {matrix:?} row {row}: expected {expected} binary digits, got {got:?}")]
    BadRow { matrix: &'static str, row: usize, expected: usize, got: String },
    #[error("matrix {matrix:?}: expected {expected} rows, got {got}")]
    BadRowCount { matrix: &'static str, expected: usize, got: usize },
    #[error("value not exactly representable: {0}")]
    Decimal(#[from] DecimalError),
    #[error("compact schedule: {0}")]
    Compact(String),
}

// ---------------------------------------------------------------------------
// BitMat
// ---------------------------------------------------------------------------

/// Dense square bit matrix with 1-based (row, col) indexing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMat {
    n: usize,
    bits: Vec<bool>,
}

impl BitMat {
    pub fn zeros(n: usize) -> Self {
        BitMat { n, bits: vec![false; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[(row - 1) * self.n + (col - 1)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[(row - 1) * self.n + (col - 1)] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Row as a `'0'`/`'1'` string, leftmost char = column 1.
    pub fn row_string(&self, row: usize) -> String {
        (1..=self.n).map(|c| if self.get(row, c) { '1' } else { '0' }).collect()
    }

    pub fn to_row_strings(&self) -> Vec<String> {
        (1..=self.n).map(|r| self.row_string(r)).collect()
    }

    pub fn from_row_strings(
        matrix: &'static str,
        n: usize,
        rows: &[String],
    ) -> Result<Self, ScheduleError> {
        if rows.len() != n {
            return Err(ScheduleError::BadRowCount { matrix, expected: n, got: rows.len() });
        }
        let mut out = BitMat::zeros(n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n || !row.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(ScheduleError::BadRow {
                    matrix,
                    row: r + 1,
                    expected: n,
                    got: row.clone(),
                });
            }
            for (c, byte) in row.bytes().enumerate() {
                if byte == b'1' {
                    out.bits[r * n + c] = true;
                }
            }
        }
        Ok(out)
    }

    /// Row-major run-length encoding: run lengths alternate starting with
    /// a run of zeros. Runs longer than `u16::MAX` are split by inserting
    /// zero-length runs of the opposite value.
    pub fn to_runs(&self) -> Vec<u16> {
        let mut runs: Vec<u16> = Vec::new();
        let mut current = false; // encoding starts with a zero run
        let mut len: usize = 0;
        let push_run = |runs: &mut Vec<u16>, mut len: usize| {
            while len > u16::MAX as usize {
                runs.push(u16::MAX);
                runs.push(0); // zero-length run of the opposite value
                len -= u16::MAX as usize;
            }
            runs.push(len as u16);
        };
        for &bit in &self.bits {
            if bit == current {
                len += 1;
            } else {
                push_run(&mut runs, len);
                current = bit;
                len = 1;
            }
        }
        push_run(&mut runs, len);
        runs
    }

    pub fn from_runs(matrix: &'static str, n: usize, runs: &[u16]) -> Result<Self, ScheduleError> {
        let mut out = BitMat::zeros(n);
        let mut pos = 0usize;
        let mut value = false;
        for &run in runs {
            let run = run as usize;
            if pos + run > n * n {
                return Err(ScheduleError::Compact(format!(
                    "matrix {matrix:?}: runs overflow {n}x{n} cells"
                )));
            }
            if value {
                for bit in &mut out.bits[pos..pos + run] {
                    *bit = true;
                }
            }
            pos += run;
            value = !value;
        }
        if pos != n * n {
            return Err(ScheduleError::Compact(format!(
                "matrix {matrix:?}: runs cover {pos} of {} cells",
                n * n
            )));
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Schedule
// ---------------------------------------------------------------------------

/// The five decision matrices of one schedule. See the module docs for
/// the exact semantics of each matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub compute: BitMat,
    pub resident: BitMat,
    pub staged: BitMat,
    pub pagein: BitMat,
    pub pageout: BitMat,
}

impl Schedule {
    pub fn empty(n: usize) -> Self {
        Schedule {
            compute: BitMat::zeros(n),
            resident: BitMat::zeros(n),
            staged: BitMat::zeros(n),
            pagein: BitMat::zeros(n),
            pageout: BitMat::zeros(n),
        }
    }

    pub fn n(&self) -> usize {
        self.compute.n()
    }

    pub fn matrices(&self) -> [(&'static str, &BitMat); 5] {
        [
            ("compute", &self.compute),
            ("resident", &self.resident),
            ("staged", &self.staged),
            ("pagein", &self.pagein),
            ("pageout", &self.pageout),
        ]
    }
}

/// The no-recompute, no-paging schedule: every operator runs once at its
/// own slot and every output stays in RAM from the step after it is
/// computed through its last use. This is the schedule conventional
/// training uses, and its peak RAM is the yardstick budgets are quoted
/// against.
pub fn full_schedule(g: &TrainingGraph) -> Schedule {
    let n = g.n();
    let mut s = Schedule::empty(n);
    for v in 1..=n {
        s.compute.set(v, v, true);
        let last = g.last_use_of(v);
        for t in (v + 1)..=last {
            s.resident.set(t, v, true);
        }
    }
    s
}

// ---------------------------------------------------------------------------
// Memory accounting (greedy reclamation)
// ---------------------------------------------------------------------------

/// RAM usage trace of a schedule: `base[t-1]` is the usage at the start
/// of step `t` (static overhead + everything resident or arriving), and
/// `after[t-1][k-1]` is the usage after slot `k`'s position in step `t`
/// (post compute-if-any, post greedy reclamation). Values can go
/// (harmlessly) negative only for schedules that already violate other
/// constraints, hence the signed type.
pub struct UsageTrace {
    pub base: Vec<i128>,
    pub after: Vec<Vec<i128>>,
}

/// Tensors greedily reclaimed during step `t`: `freed[k-1]` lists the
/// slots dropped immediately after slot `k` runs. A tensor `i` is dropped
/// at the latest position `k` that reads it (or at `i` itself right after
/// being computed, if nothing later reads it) provided it is not resident
/// at the start of step `t+1`, is not being paged out during step `t`,
/// and no later operator of step `t` reads it.
pub fn greedy_frees(g: &TrainingGraph, s: &Schedule, t: usize) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut freed: Vec<Vec<usize>> = vec![Vec::new(); n];
    for k in 1..=n {
        if !s.compute.get(t, k) {
            continue;
        }
        let mut candidates: Vec<usize> = g.deps_of(k).to_vec();
        candidates.push(k);
        for i in candidates {
            let kept = t < n && s.resident.get(t + 1, i);
            let paging_out = s.pageout.get(t, i);
            let later_read =
                g.users_of(i).iter().any(|&j| j > k && s.compute.get(t, j));
            if !kept && !paging_out && !later_read {
                freed[k - 1].push(i);
            }
        }
    }
    freed
}

/// Recompute the full usage trace of a schedule. Profile lookups go
/// through the slot → node-id map; matrices are slot-indexed.
pub fn usage_trace(g: &TrainingGraph, p: &CostProfile, s: &Schedule) -> UsageTrace {
    let n = g.n();
    let mem = |slot: usize| p.mem(g.id_at(slot)) as i128;
    let mut base = Vec::with_capacity(n);
    let mut after = Vec::with_capacity(n);
    for t in 1..=n {
        let mut cur: i128 = p.static_bytes as i128;
        for i in 1..=n {
            if s.resident.get(t, i) {
                cur += mem(i);
            }
            if s.pagein.get(t, i) {
                cur += mem(i);
            }
        }
        base.push(cur);
        let freed = greedy_frees(g, s, t);
        let mut row = Vec::with_capacity(n);
        for k in 1..=n {
            if s.compute.get(t, k) {
                cur += mem(k);
            }
            for &i in &freed[k - 1] {
                cur -= mem(i);
            }
            row.push(cur);
        }
        after.push(row);
    }
    UsageTrace { base, after }
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// One broken rule at one place. `step` is a timestep, `slot` an
/// execution-order position.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleViolation {
    /// Matrices are not `n × n` for the graph's `n`.
    Shape { expected: usize, got: usize },
    /// Step 1 starts with a nonempty RAM or auxiliary store.
    InitialStateNotEmpty { matrix: &'static str, slot: usize },
    /// Slot `k` does not run at step `k` (its scheduled position).
    OwnSlotNotComputed { slot: usize },
    /// An operator runs without one of its inputs being computed earlier
    /// in the same step or resident in RAM.
    DependencyUnavailable { step: usize, consumer: usize, dependency: usize },
    /// A tensor is marked resident without having been resident, computed,
    /// or paged in during the previous step.
    ResidencyWithoutSource { step: usize, slot: usize },
    /// A tensor is marked staged without having been staged or paged out
    /// during the previous step.
    StagingWithoutSource { step: usize, slot: usize },
    /// A page-in of a tensor that has no staged copy.
    PageInWithoutStagedCopy { step: usize, slot: usize },
    /// A page-out of a tensor that is not resident.
    PageOutWithoutResidency { step: usize, slot: usize },
    /// RAM usage after some operator exceeds the budget.
    MemoryExceeded { step: usize, after_slot: usize, used: i128, budget: u128 },
    /// Total compute time exceeds the deadline.
    DeadlineExceeded { total: Rat, deadline: Rat },
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleViolation::Shape { expected, got } => {
                write!(f, "schedule is {got}x{got} but the graph has {expected} nodes")
            }
            ScheduleViolation::InitialStateNotEmpty { matrix, slot } => {
                write!(f, "step 1 marks slot {slot} in {matrix:?} but both stores start empty")
            }
            ScheduleViolation::OwnSlotNotComputed { slot } => {
                write!(f, "slot {slot} is not computed at step {slot}")
            }
            ScheduleViolation::DependencyUnavailable { step, consumer, dependency } => {
                write!(
                    f,
                    "step {step}: slot {consumer} runs but its input {dependency} is neither computed this step nor resident"
                )
            }
            ScheduleViolation::ResidencyWithoutSource { step, slot } => {
                write!(
                    f,
                    "step {step}: slot {slot} marked resident but was not resident, computed, or paged in at step {}",
                    step - 1
                )
            }
            ScheduleViolation::StagingWithoutSource { step, slot } => {
                write!(
                    f,
                    "step {step}: slot {slot} marked staged but was not staged or paged out at step {}",
                    step - 1
                )
            }
            ScheduleViolation::PageInWithoutStagedCopy { step, slot } => {
                write!(f, "step {step}: page-in of slot {slot} which has no staged copy")
            }
            ScheduleViolation::PageOutWithoutResidency { step, slot } => {
                write!(f, "step {step}: page-out of slot {slot} which is not resident")
            }
            ScheduleViolation::MemoryExceeded { step, after_slot, used, budget } => {
                write!(
                    f,
                    "step {step}: {used} bytes in RAM after slot {after_slot} exceeds the budget of {budget}"
                )
            }
            ScheduleViolation::DeadlineExceeded { total, deadline } => {
                write!(
                    f,
                    "total compute time {} exceeds the deadline {}",
                    display(total),
                    display(deadline)
                )
            }
        }
    }
}

/// Check a schedule against every rule, from scratch, collecting all
/// violations. This is the ground truth the optimizer must satisfy; it
/// shares no code with the optimizer's own bookkeeping.
pub fn verify(
    g: &TrainingGraph,
    p: &CostProfile,
    ram_budget: u128,
    deadline: &Rat,
    s: &Schedule,
) -> Vec<ScheduleViolation> {
    let n = g.n();
    let mut out = Vec::new();
    if s.n() != n {
        out.push(ScheduleViolation::Shape { expected: n, got: s.n() });
        return out;
    }

    // Both stores start empty.
    for i in 1..=n {
        if s.resident.get(1, i) {
            out.push(ScheduleViolation::InitialStateNotEmpty { matrix: "resident", slot: i });
        }
        if s.staged.get(1, i) {
            out.push(ScheduleViolation::InitialStateNotEmpty { matrix: "staged", slot: i });
        }
    }

    // Every slot runs at its own step.
    for v in 1..=n {
        if !s.compute.get(v, v) {
            out.push(ScheduleViolation::OwnSlotNotComputed { slot: v });
        }
    }

    // Inputs available: computed earlier this step (slot order is
    // execution order within a step) or resident since the step started.
    for t in 1..=n {
        for k in 1..=n {
            if !s.compute.get(t, k) {
                continue;
            }
            for &i in g.deps_of(k) {
                if !s.compute.get(t, i) && !s.resident.get(t, i) {
                    out.push(ScheduleViolation::DependencyUnavailable {
                        step: t,
                        consumer: k,
                        dependency: i,
                    });
                }
            }
        }
    }

    // RAM residency and staged copies persist only via a valid source in
    // the immediately preceding step.
    for t in 2..=n {
        for i in 1..=n {
            if s.resident.get(t, i)
                && !s.resident.get(t - 1, i)
                && !s.compute.get(t - 1, i)
                && !s.pagein.get(t - 1, i)
            {
                out.push(ScheduleViolation::ResidencyWithoutSource { step: t, slot: i });
            }
            if s.staged.get(t, i) && !s.staged.get(t - 1, i) && !s.pageout.get(t - 1, i) {
                out.push(ScheduleViolation::StagingWithoutSource { step: t, slot: i });
            }
        }
    }

    // Transfers need their source: page-in from a staged copy, page-out
    // from a resident tensor.
    for t in 1..=n {
        for i in 1..=n {
            if s.pagein.get(t, i) && !s.staged.get(t, i) {
                out.push(ScheduleViolation::PageInWithoutStagedCopy { step: t, slot: i });
            }
            if s.pageout.get(t, i) && !s.resident.get(t, i) {
                out.push(ScheduleViolation::PageOutWithoutResidency { step: t, slot: i });
            }
        }
    }

    // Memory: the usage after each slot position, with greedy
    // reclamation, must fit the budget.
    let trace = usage_trace(g, p, s);
    let budget_i = i128::try_from(ram_budget).unwrap_or(i128::MAX);
    for t in 1..=n {
        for k in 1..=n {
            let used = trace.after[t - 1][k - 1];
            if used > budget_i {
                out.push(ScheduleViolation::MemoryExceeded {
                    step: t,
                    after_slot: k,
                    used,
                    budget: ram_budget,
                });
            }
        }
    }

    // Deadline: total compute time only — transfers are overlapped with
    // compute by the execution plan, so they do not extend the critical
    // path here.
    let mut total = Rat::zero();
    for t in 1..=n {
        for k in 1..=n {
            if s.compute.get(t, k) {
                total += &p.compute_time[g.id_at(k) - 1];
            }
        }
    }
    if &total > deadline {
        out.push(ScheduleViolation::DeadlineExceeded { total, deadline: deadline.clone() });
    }

    out
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Cost summary of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Total energy: computes + page-ins + page-outs.
    pub energy: Rat,
    /// Total compute time (the deadline-relevant quantity).
    pub compute_time: Rat,
    /// Peak RAM usage including static overhead, bytes.
    pub peak_ram: u128,
    pub pagein_count: usize,
    pub pageout_count: usize,
    /// Recomputations: executions beyond the first, summed over nodes.
    pub remat_count: usize,
}

/// Price a schedule. Assumes (but does not check) validity; run
/// [`verify`] first for untrusted input.
pub fn evaluate(g: &TrainingGraph, p: &CostProfile, s: &Schedule) -> Metrics {
    let n = g.n();
    let mut energy = Rat::zero();
    let mut compute_time = Rat::zero();
    let mut remat = 0usize;
    for k in 1..=n {
        let id = g.id_at(k);
        let mut runs = 0usize;
        for t in 1..=n {
            if s.compute.get(t, k) {
                runs += 1;
                energy += &p.compute_energy[id - 1];
                compute_time += &p.compute_time[id - 1];
            }
            if s.pagein.get(t, k) {
                energy += &p.pagein_energy[id - 1];
            }
            if s.pageout.get(t, k) {
                energy += &p.pageout_energy[id - 1];
            }
        }
        remat += runs.saturating_sub(1);
    }

    let trace = usage_trace(g, p, s);
    let mut peak: i128 = 0;
    for t in 0..n {
        peak = peak.max(trace.base[t]);
        for k in 0..n {
            peak = peak.max(trace.after[t][k]);
        }
    }

    Metrics {
        energy,
        compute_time,
        peak_ram: u128::try_from(peak).unwrap_or(0),
        pagein_count: s.pagein.count_ones(),
        pageout_count: s.pageout.count_ones(),
        remat_count: remat,
    }
}

/// Peak RAM of the conventional keep-everything schedule — the scale
/// budgets are quoted against.
pub fn full_memory(g: &TrainingGraph, p: &CostProfile) -> u128 {
    evaluate(g, p, &full_schedule(g)).peak_ram
}

// ---------------------------------------------------------------------------
// JSON file format
// ---------------------------------------------------------------------------

/// A schedule plus the context needed to check it later: which graph it
/// was computed for, under which RAM budget and deadline, and the energy
/// its producer claimed (re-checked on load by consumers).
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleDoc {
    pub graph_hash: String,
    pub ram_budget: u128,
    pub deadline: Rat,
    pub objective: Rat,
    pub schedule: Schedule,
}

impl ScheduleDoc {
    pub fn new(
        g: &TrainingGraph,
        ram_budget: u128,
        deadline: Rat,
        objective: Rat,
        schedule: Schedule,
    ) -> Self {
        ScheduleDoc { graph_hash: graph_hash(g), ram_budget, deadline, objective, schedule }
    }
}

#[derive(Serialize, Deserialize)]
struct ScheduleFile {
    graph_hash: String,
    ram_budget_bytes: u64,
    deadline: String,
    objective: String,
    n: usize,
    compute: Vec<String>,
    resident: Vec<String>,
    staged: Vec<String>,
    pagein: Vec<String>,
    pageout: Vec<String>,
}

pub fn schedule_to_json(doc: &ScheduleDoc) -> Result<String, ScheduleError> {
    let file = ScheduleFile {
        graph_hash: doc.graph_hash.clone(),
        ram_budget_bytes: u64::try_from(doc.ram_budget).map_err(|_| {
            ScheduleError::Parse {
                path: "<memory>".to_string(),
                message: format!("ram budget {} exceeds the format's 64-bit limit", doc.ram_budget),
            }
        })?,
        deadline: to_decimal_string(&doc.deadline)?,
        objective: to_decimal_string(&doc.objective)?,
        n: doc.schedule.n(),
        compute: doc.schedule.compute.to_row_strings(),
        resident: doc.schedule.resident.to_row_strings(),
        staged: doc.schedule.staged.to_row_strings(),
        pagein: doc.schedule.pagein.to_row_strings(),
        pageout: doc.schedule.pageout.to_row_strings(),
    };
    serde_json::to_string_pretty(&file).map_err(|e| ScheduleError::Parse {
        path: "<memory>".to_string(),
        message: e.to_string(),
    })
}

pub fn schedule_from_json(text: &str, origin: &str) -> Result<ScheduleDoc, ScheduleError> {
    let file: ScheduleFile = serde_json::from_str(text).map_err(|e| ScheduleError::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    let n = file.n;
    Ok(ScheduleDoc {
        graph_hash: file.graph_hash,
        ram_budget: u128::from(file.ram_budget_bytes),
        deadline: parse_decimal(&file.deadline)?,
        objective: parse_decimal(&file.objective)?,
        schedule: Schedule {
            compute: BitMat::from_row_strings("compute", n, &file.compute)?,
            resident: BitMat::from_row_strings("resident", n, &file.resident)?,
            staged: BitMat::from_row_strings("staged", n, &file.staged)?,
            pagein: BitMat::from_row_strings("pagein", n, &file.pagein)?,
            pageout: BitMat::from_row_strings("pageout", n, &file.pageout)?,
        },
    })
}

pub fn load_schedule(path: &Path) -> Result<ScheduleDoc, ScheduleError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScheduleError::Read {
        path: path.display().to_string(),
        source,
    })?;
    schedule_from_json(&text, &path.display().to_string())
}

pub fn save_schedule(doc: &ScheduleDoc, path: &Path) -> Result<(), ScheduleError> {
    let text = schedule_to_json(doc)?;
    std::fs::write(path, text).map_err(|source| ScheduleError::Write {
        path: path.display().to_string(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Compact binary format
// ---------------------------------------------------------------------------

const COMPACT_MAGIC: &[u8; 4] = b"EPLN";
const COMPACT_VERSION: u8 = 1;

/// Encode a schedule document in the compact binary format: a small
/// header followed by the five matrices run-length encoded row-major
/// (alternating run lengths, zeros first). Decision matrices are mostly
/// runs of zeros, so this is far smaller than JSON for large graphs.
pub fn schedule_to_compact(doc: &ScheduleDoc) -> Result<Vec<u8>, ScheduleError> {
    let n = doc.schedule.n();
    let n16 = u16::try_from(n).map_err(|_| {
        ScheduleError::Compact(format!("{n} nodes exceeds the compact format's 16-bit limit"))
    })?;
    let budget = u64::try_from(doc.ram_budget).map_err(|_| {
        ScheduleError::Compact(format!(
            "ram budget {} exceeds the format's 64-bit limit",
            doc.ram_budget
        ))
    })?;
    let mut out = Vec::new();
    out.extend_from_slice(COMPACT_MAGIC);
    out.push(COMPACT_VERSION);
    out.extend_from_slice(&n16.to_le_bytes());
    out.extend_from_slice(&budget.to_le_bytes());
    let push_str = |out: &mut Vec<u8>, s: &str| -> Result<(), ScheduleError> {
        let len = u16::try_from(s.len()).map_err(|_| {
            ScheduleError::Compact(format!("string field of {} bytes is too long", s.len()))
        })?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(s.as_bytes());
        Ok(())
    };
    push_str(&mut out, &doc.graph_hash)?;
    push_str(&mut out, &to_decimal_string(&doc.deadline)?)?;
    push_str(&mut out, &to_decimal_string(&doc.objective)?)?;
    for (_, m) in doc.schedule.matrices() {
        let runs = m.to_runs();
        let count = u32::try_from(runs.len())
            .map_err(|_| ScheduleError::Compact("too many runs".to_string()))?;
        out.extend_from_slice(&count.to_le_bytes());
        for run in runs {
            out.extend_from_slice(&run.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn schedule_from_compact(bytes: &[u8]) -> Result<ScheduleDoc, ScheduleError> {
    let mut pos = 0usize;
    let take = |pos: &mut usize, len: usize| -> Result<&[u8], ScheduleError> {
        if *pos + len > bytes.len() {
            return Err(ScheduleError::Compact("truncated input".to_string()));
        }
        let slice = &bytes[*pos..*pos + len];
        *pos += len;
        Ok(slice)
    };

    if take(&mut pos, 4)? != COMPACT_MAGIC {
        return Err(ScheduleError::Compact("bad magic".to_string()));
    }
    let version = take(&mut pos, 1)?[0];
    if version != COMPACT_VERSION {
        return Err(ScheduleError::Compact(format!("unsupported version {version}")));
    }
    let n = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap()) as usize;
    let budget = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let take_str = |pos: &mut usize| -> Result<String, ScheduleError> {
        let len = u16::from_le_bytes(take(pos, 2)?.try_into().unwrap()) as usize;
        let raw = take(pos, len)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| ScheduleError::Compact("non-UTF-8 string field".to_string()))
    };
    let graph_hash = take_str(&mut pos)?;
    let deadline = parse_decimal(&take_str(&mut pos)?)?;
    let objective = parse_decimal(&take_str(&mut pos)?)?;

    let names: [&'static str; 5] = ["compute", "resident", "staged", "pagein", "pageout"];
    let mut mats = Vec::with_capacity(5);
    for name in names {
        let count = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let raw = take(&mut pos, count * 2)?;
        let runs: Vec<u16> = raw
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        mats.push(BitMat::from_runs(name, n, &runs)?);
    }
    if pos != bytes.len() {
        return Err(ScheduleError::Compact(format!(
            "{} trailing bytes after the last matrix",
            bytes.len() - pos
        )));
    }
    let mut it = mats.into_iter();
    Ok(ScheduleDoc {
        graph_hash,
        ram_budget: u128::from(budget),
        deadline,
        objective,
        schedule: Schedule {
            compute: it.next().unwrap(),
            resident: it.next().unwrap(),
            staged: it.next().unwrap(),
            pagein: it.next().unwrap(),
            pageout: it.next().unwrap(),
        },
    })
}

pub fn load_schedule_compact(path: &Path) -> Result<ScheduleDoc, ScheduleError> {
    let bytes = std::fs::read(path).map_err(|source| ScheduleError::Read {
        path: path.display().to_string(),
        source,
    })?;
    schedule_from_compact(&bytes)
}

pub fn save_schedule_compact(doc: &ScheduleDoc, path: &Path) -> Result<(), ScheduleError> {
    let bytes = schedule_to_compact(doc)?;
    std::fs::write(path, bytes).map_err(|source| ScheduleError::Write {
        path: path.display().to_string(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::{synth_profile, CostRegime, Device};
    use crate::graph::{build_training_graph, GraphKind, GraphSpec};
    use crate::rat::{rat, rat_u};
    use proptest::prelude::*;

    fn chain(depth: usize) -> TrainingGraph {
        build_training_graph(&GraphSpec::new(GraphKind::Chain, depth).unwrap())
    }

    fn uniform(g: &TrainingGraph) -> CostProfile {
        synth_profile(g, CostRegime::Uniform, Device::A72, 0)
    }

    /// Independent recount of the keep-everything peak: at step t the
    /// resident set holds every tensor computed before t and used at or
    /// after t; running v_t adds its output and then drops every tensor
    /// whose last use is t (and the output itself if nothing uses it).
    fn analytic_full_peak(g: &TrainingGraph, p: &CostProfile) -> u128 {
        let n = g.n();
        let mem = |slot: usize| p.mem(g.id_at(slot));
        let mut peak: u128 = 0;
        for t in 1..=n {
            let resident: u128 = (1..t)
                .filter(|&i| g.last_use_of(i) >= t)
                .map(mem)
                .sum();
            let freed: u128 = g
                .deps_of(t)
                .iter()
                .copied()
                .filter(|&i| g.last_use_of(i) == t)
                .map(mem)
                .sum::<u128>()
                + if g.users_of(t).is_empty() { mem(t) } else { 0 };
            let start = p.static_bytes + resident;
            let after = start + mem(t) - freed;
            peak = peak.max(start.max(after));
        }
        peak
    }

    #[test]
    fn full_schedule_of_chain_verifies_cleanly() {
        for depth in 1..=6 {
            let g = chain(depth);
            let p = uniform(&g);
            let s = full_schedule(&g);
            let budget = full_memory(&g, &p);
            let deadline = p.sum_compute_time();
            let violations = verify(&g, &p, budget, &deadline, &s);
            assert!(violations.is_empty(), "depth {depth}: {violations:?}");
            let m = evaluate(&g, &p, &s);
            assert_eq!(m.energy, p.sum_compute_energy());
            assert_eq!(m.compute_time, p.sum_compute_time());
            assert_eq!(m.remat_count, 0);
            assert_eq!(m.pagein_count, 0);
            assert_eq!(m.pageout_count, 0);
        }
    }

    #[test]
    fn full_memory_matches_independent_recount() {
        for kind in [GraphKind::Chain, GraphKind::SkipChain, GraphKind::AttentionBlock] {
            for depth in 1..=8 {
                let g = build_training_graph(&GraphSpec::new(kind, depth).unwrap());
                for regime in
                    [CostRegime::Uniform, CostRegime::ConvLike, CostRegime::MixedCheapExpensive]
                {
                    let p = synth_profile(&g, regime, Device::A72, depth as u64);
                    assert_eq!(
                        full_memory(&g, &p),
                        analytic_full_peak(&g, &p),
                        "{kind} depth {depth} {regime}"
                    );
                }
            }
        }
    }

    #[test]
    fn full_memory_uniform_depth_two_by_hand() {
        // Chain depth 2, uniform: every tensor 4096 bytes, static 4096.
        // Order f1 f2 loss b2 b1; last uses: f1→5, f2→4, loss→4, b2→5.
        // Step 4 starts with {f1, f2, loss} resident (static + 3·4096, the
        // high-water mark); computing b2 then reclaiming f2 and loss ends
        // the step at static + 2·4096. Usage is measured post-reclaim, so
        // the 5-tensor transient during b2 never materializes as a peak.
        let g = chain(2);
        let p = uniform(&g);
        assert_eq!(full_memory(&g, &p), 4096 + 3 * 4096);
    }

    #[test]
    fn paging_round_trip_schedule_verifies() {
        // Chain depth 2: page f1 out during step 2, back in during step 3,
        // so it skips residency at step 3 only.
        let g = chain(2);
        let p = uniform(&g);
        let mut s = full_schedule(&g);
        s.pageout.set(2, 1, true);
        s.resident.set(3, 1, false);
        s.staged.set(3, 1, true);
        s.staged.set(4, 1, true);
        s.staged.set(5, 1, true);
        s.pagein.set(3, 1, true);

        let budget = full_memory(&g, &p);
        let deadline = p.sum_compute_time();
        let violations = verify(&g, &p, budget, &deadline, &s);
        assert!(violations.is_empty(), "{violations:?}");

        let m = evaluate(&g, &p, &s);
        assert_eq!(m.pagein_count, 1);
        assert_eq!(m.pageout_count, 1);
        assert_eq!(m.remat_count, 0);
        assert_eq!(
            m.energy,
            p.sum_compute_energy() + &p.pagein_energy[0] + &p.pageout_energy[0]
        );
        // Compute time is unchanged: transfers are off the critical path.
        assert_eq!(m.compute_time, p.sum_compute_time());
    }

    #[test]
    fn recompute_schedule_verifies_and_counts_remat() {
        // Chain depth 2: drop f1 after step 2 and recompute it at step 4
        // for b2 (f1 feeds b2 and b1).
        let g = chain(2);
        let p = uniform(&g);
        let mut s = full_schedule(&g);
        s.resident.set(3, 1, false);
        s.resident.set(4, 1, false);
        s.compute.set(4, 1, true); // f1 rerun at step 4; resident at 5 via 1c

        let budget = full_memory(&g, &p);
        let deadline = &p.sum_compute_time() + &p.compute_time[0];
        let violations = verify(&g, &p, budget, &deadline, &s);
        assert!(violations.is_empty(), "{violations:?}");

        let m = evaluate(&g, &p, &s);
        assert_eq!(m.remat_count, 1);
        assert_eq!(m.energy, p.sum_compute_energy() + &p.compute_energy[0]);

        // With the deadline pinned to the no-recompute total, the same
        // schedule misses it.
        let tight = p.sum_compute_time();
        let violations = verify(&g, &p, budget, &tight, &s);
        assert_eq!(violations.len(), 1);
        assert!(matches!(violations[0], ScheduleViolation::DeadlineExceeded { .. }));
    }

    #[test]
    fn verify_flags_each_rule() {
        let g = chain(1); // n = 3: f1, loss, b1
        let p = uniform(&g);
        let budget = full_memory(&g, &p);
        let deadline = p.sum_compute_time();

        // Initial state not empty.
        let mut s = full_schedule(&g);
        s.resident.set(1, 2, true);
        s.staged.set(1, 1, true);
        let v = verify(&g, &p, budget, &deadline, &s);
        assert!(v.iter().any(|x| matches!(
            x,
            ScheduleViolation::InitialStateNotEmpty { matrix: "resident", slot: 2 }
        )));
        assert!(v.iter().any(|x| matches!(
            x,
            ScheduleViolation::InitialStateNotEmpty { matrix: "staged", slot: 1 }
        )));

        // Own slot not computed.
        let mut s = full_schedule(&g);
        s.compute.set(2, 2, false);
        let v = verify(&g, &p, budget, &deadline, &s);
        assert!(v.iter().any(|x| matches!(x, ScheduleViolation::OwnSlotNotComputed { slot: 2 })));

        // Dependency unavailable: drop f1's residency at step 2.
        let mut s = full_schedule(&g);
        s.resident.set(2, 1, false);
        let v = verify(&g, &p, budget, &deadline, &s);
        assert!(v.iter().any(|x| matches!(
            x,
            ScheduleViolation::DependencyUnavailable { step: 2, consumer: 2, dependency: 1 }
        )));

        // Residency without source: resident at 3 after a one-step gap.
        let mut s = full_schedule(&g);
        s.resident.set(2, 1, false);
        let v = verify(&g, &p, budget, &deadline, &s);
        assert!(v.iter().any(|x| matches!(
            x,
            ScheduleViolation::ResidencyWithoutSource { step: 3, slot: 1 }
        )));

        // Staging without source / page-in without staged copy / page-out
        // without residency.
        let mut s = full_schedule(&g);
        s.staged.set(3, 2, true);
        s.pagein.set(2, 1, true);
        s.pageout.set(1, 1, true);
        let v = verify(&g, &p, budget, &deadline, &s);
        assert!(v.iter().any(|x| matches!(
            x,
            ScheduleViolation::StagingWithoutSource { step: 3, slot: 2 }
        )));
        assert!(v.iter().any(|x| matches!(
            x,
            ScheduleViolation::PageInWithoutStagedCopy { step: 2, slot: 1 }
        )));
        assert!(v.iter().any(|x| matches!(
            x,
            ScheduleViolation::PageOutWithoutResidency { step: 1, slot: 1 }
        )));

        // Memory exceeded: shrink the budget below the peak.
        let s = full_schedule(&g);
        let v = verify(&g, &p, budget - 1, &deadline, &s);
        assert!(v.iter().any(|x| matches!(x, ScheduleViolation::MemoryExceeded { .. })));

        // Shape mismatch short-circuits.
        let s = Schedule::empty(2);
        let v = verify(&g, &p, budget, &deadline, &s);
        assert_eq!(v, vec![ScheduleViolation::Shape { expected: 3, got: 2 }]);
    }

    #[test]
    fn usage_trace_reclaims_greedily() {
        // Chain depth 1, uniform. Step 3 computes b1 (deps loss, f1).
        // After b1 runs nothing is kept: everything is reclaimed at b1's
        // position, including b1 itself (no users).
        let g = chain(1);
        let p = uniform(&g);
        let s = full_schedule(&g);
        let trace = usage_trace(&g, &p, &s);
        let m = 4096i128;
        // Step 1: base = static; after f1 = static + m (f1 used later).
        assert_eq!(trace.base[0], m);
        assert_eq!(trace.after[0], vec![2 * m, 2 * m, 2 * m]);
        // Step 2: f1 resident; loss computed, kept (used at 3).
        assert_eq!(trace.base[1], 2 * m);
        assert_eq!(trace.after[1], vec![2 * m, 3 * m, 3 * m]);
        // Step 3: f1, loss resident; b1 computed then everything freed.
        assert_eq!(trace.base[2], 3 * m);
        assert_eq!(trace.after[2][2], m); // only static remains
    }

    #[test]
    fn evaluate_prices_by_node_id_not_slot() {
        // At depth 2 the execution order is [1, 2, 3, 5, 4]: slot 4 holds
        // node 5 (b2) and slot 5 holds node 4 (b1). Price a recompute at
        // slot 4 and check the energy bump is node 5's, not node 4's.
        let g = chain(2);
        let mut p = uniform(&g);
        p.compute_energy[4] = rat(100, 1); // node 5 = b2
        p.compute_energy[3] = rat(7, 1); // node 4 = b1
        let mut s = full_schedule(&g);
        // Recompute slot 4 (= node 5) at step 5. Its deps (slots 1, 2, 3)
        // are not all live at step 5, but evaluate() prices schedules
        // without checking validity.
        s.compute.set(5, 4, true);
        let base: Rat = p.sum_compute_energy();
        let m = evaluate(&g, &p, &s);
        assert_eq!(m.energy, base + rat(100, 1));
    }

    #[test]
    fn json_round_trip_preserves_everything() {
        let g = chain(3);
        let mut s = full_schedule(&g);
        s.pageout.set(2, 1, true);
        s.staged.set(3, 1, true);
        let doc = ScheduleDoc::new(&g, 123456, rat(77, 1), rat(985, 10), s);
        let text = schedule_to_json(&doc).unwrap();
        let back = schedule_from_json(&text, "test").unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn compact_round_trip_preserves_everything_and_is_small() {
        let g = chain(8); // n = 17
        let s = full_schedule(&g);
        let doc = ScheduleDoc::new(&g, 1 << 20, rat(101, 4), rat(3, 8), s);
        let bytes = schedule_to_compact(&doc).unwrap();
        let back = schedule_from_compact(&bytes).unwrap();
        assert_eq!(back, doc);
        let json = schedule_to_json(&doc).unwrap();
        assert!(
            bytes.len() * 4 < json.len(),
            "compact {} bytes vs json {} bytes",
            bytes.len(),
            json.len()
        );
    }

    #[test]
    fn compact_rejects_corrupt_input() {
        let g = chain(2);
        let doc = ScheduleDoc::new(&g, 4096, rat(5, 1), rat(5, 1), full_schedule(&g));
        let bytes = schedule_to_compact(&doc).unwrap();
        assert!(schedule_from_compact(&bytes[..bytes.len() - 1]).is_err());
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(schedule_from_compact(&bad_magic).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(schedule_from_compact(&extra).is_err());
    }

    #[test]
    fn full_memory_scales_with_budgeted_fraction_inputs() {
        // Sanity for downstream budget-as-fraction logic: a deeper chain
        // keeps more tensors live, so the keep-everything peak grows.
        let p4 = {
            let g = chain(4);
            full_memory(&g, &uniform(&g))
        };
        let p8 = {
            let g = chain(8);
            full_memory(&g, &uniform(&g))
        };
        assert!(p8 > p4);
    }

    proptest! {
        #[test]
        fn row_strings_round_trip(n in 1usize..12, seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut m = BitMat::zeros(n);
            for r in 1..=n {
                for c in 1..=n {
                    m.set(r, c, rng.gen_bool(0.3));
                }
            }
            let rows = m.to_row_strings();
            let back = BitMat::from_row_strings("compute", n, &rows).unwrap();
            prop_assert_eq!(back, m);
        }

        #[test]
        fn runs_round_trip(n in 1usize..12, seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut m = BitMat::zeros(n);
            for r in 1..=n {
                for c in 1..=n {
                    m.set(r, c, rng.gen_bool(0.5));
                }
            }
            let runs = m.to_runs();
            let back = BitMat::from_runs("compute", n, &runs).unwrap();
            prop_assert_eq!(back, m);
        }

        #[test]
        fn full_schedule_always_fits_its_own_peak(depth in 1usize..7, seed in 0u64..50) {
            let g = chain(depth);
            let p = synth_profile(&g, CostRegime::ConvLike, Device::A72, seed);
            let s = full_schedule(&g);
            let budget = full_memory(&g, &p);
            let deadline = p.sum_compute_time();
            prop_assert!(verify(&g, &p, budget, &deadline, &s).is_empty());
            // One byte less must fail.
            let v = verify(&g, &p, budget - 1, &deadline, &s);
            let over_budget = v.iter().any(|x| matches!(x, ScheduleViolation::MemoryExceeded { .. }));
            prop_assert!(over_budget);
        }
    }

    #[test]
    fn evaluate_total_uses_rat_u_consistently() {
        // Peak for uniform depth-1 full schedule: static + f1 + loss at
        // step 2's start... recounted via the trace test above; here just
        // pin the public number.
        let g = chain(1);
        let p = uniform(&g);
        let m = evaluate(&g, &p, &full_schedule(&g));
        assert_eq!(rat_u(m.peak_ram), rat_u(3 * 4096));
        assert_eq!(m.peak_ram, full_memory(&g, &p));
    }
}
