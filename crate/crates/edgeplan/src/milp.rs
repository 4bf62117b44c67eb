//! Lowering a (graph, costs, RAM budget, deadline) instance into an exact
//! 0/1 integer program.
//!
//! The program's decision variables mirror the five schedule matrices
//! plus two derived families:
//!
//! * `R`, `SR`, `SA`, `MI`, `MO` — binaries, one per (step, slot), with
//!   the same meaning as the schedule matrices `compute`, `resident`,
//!   `staged`, `pagein`, `pageout`.
//! * `F[t,i,k]` — binary, defined for every `i ∈ deps(k) ∪ {k}`: tensor
//!   `i`'s RAM is reclaimed immediately after slot `k` runs at step `t`.
//! * `U[t,k]` — continuous RAM usage after slot `k`'s position in step
//!   `t`, measured *above* the static overhead, in units of the greatest
//!   common divisor of all tensor sizes (so every feasible value is a
//!   non-negative integer and the program needs no floating point).
//!
//! Every constraint row carries a [`Family`] tag; the row inventory per
//! family is a closed-form function of the graph, which the tests
//! recount independently. The branch-and-bound solver keeps its own
//! specialized bookkeeping, but any accepted solution is re-checked
//! against these generic rows, term by term, in exact arithmetic.

use crate::costmodel::{CostProfile, ProfileError};
use crate::graph::TrainingGraph;
use crate::rat::{rat_u, Rat};
use crate::schedule::{BitMat, Schedule};
use num_integer::Integer;
use num_traits::Zero;
use std::fmt;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, thiserror::Error)]
pub enum MilpError {
    #[error("profile does not match graph: {0}")]
    Profile(#[from] ProfileError),
    #[error("deadline must be non-negative")]
    NegativeDeadline,
}

// ---------------------------------------------------------------------------
// Variables
// ---------------------------------------------------------------------------

/// What a variable means. `Compute`..`PageOut` are the five decision
/// matrices; `Free` and `Usage` are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Compute,
    Resident,
    Staged,
    PageIn,
    PageOut,
    Usage,
    Free,
}

impl VarKind {
    pub fn is_binary(self) -> bool {
        !matches!(self, VarKind::Usage)
    }

    /// The five independently-chosen matrices, in block-layout order.
    pub const DECISION: [VarKind; 5] = [
        VarKind::Compute,
        VarKind::Resident,
        VarKind::Staged,
        VarKind::PageIn,
        VarKind::PageOut,
    ];
}

/// One variable: kind, step `t`, tensor slot `i`, and — for `Free` and
/// `Usage` — the operator slot `k` the value is attached to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarInfo {
    pub kind: VarKind,
    pub t: usize,
    pub i: usize,
    pub k: usize,
    /// Restriction pin: the solver must give the variable this value and
    /// the LP export declares it as a fixed bound.
    pub fixed: Option<bool>,
}

/// LP-format identifier of a variable; also the parse key on import.
pub fn var_name(v: &VarInfo) -> String {
    match v.kind {
        VarKind::Compute => format!("R_{}_{}", v.t, v.i),
        VarKind::Resident => format!("SR_{}_{}", v.t, v.i),
        VarKind::Staged => format!("SA_{}_{}", v.t, v.i),
        VarKind::PageIn => format!("MI_{}_{}", v.t, v.i),
        VarKind::PageOut => format!("MO_{}_{}", v.t, v.i),
        VarKind::Usage => format!("U_{}_{}", v.t, v.k),
        VarKind::Free => format!("F_{}_{}_{}", v.t, v.i, v.k),
    }
}

// ---------------------------------------------------------------------------
// Constraints
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Eq => "=",
        })
    }
}

/// Constraint family. Every row belongs to exactly one; the per-family
/// row counts are closed forms in (n, edge count, dependency degrees).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Running an operator requires each input computed earlier the same
    /// step or resident.
    Dependency,
    /// RAM residency persists only from residency, compute, or page-in in
    /// the previous step.
    ResidentCarry,
    /// Staged copies persist only from staging or page-out in the
    /// previous step.
    StagedCarry,
    /// Page-in requires a staged copy.
    PageInSource,
    /// Page-out requires residency.
    PageOutSource,
    /// Usage after every slot position fits the budget.
    MemoryBudget,
    /// Total compute time meets the deadline.
    Deadline,
    /// Both stores start empty.
    InitialEmpty,
    /// Every slot runs at its own step.
    SelfCompute,
    /// Reclaim only what the running operator may legally drop.
    FreeDefinition,
    /// The usage recurrence itself.
    UsageDefinition,
}

impl Family {
    pub const ALL: [Family; 11] = [
        Family::Dependency,
        Family::ResidentCarry,
        Family::StagedCarry,
        Family::PageInSource,
        Family::PageOutSource,
        Family::MemoryBudget,
        Family::Deadline,
        Family::InitialEmpty,
        Family::SelfCompute,
        Family::FreeDefinition,
        Family::UsageDefinition,
    ];
}

/// One linear row: `Σ coef·var  cmp  rhs`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    pub family: Family,
    pub terms: Vec<(usize, Rat)>,
    pub cmp: Cmp,
    pub rhs: Rat,
}

/// Exact evaluation of one row against a full value vector.
pub fn row_satisfied(c: &Constraint, values: &[Rat]) -> bool {
    let mut lhs = Rat::zero();
    for (idx, coef) in &c.terms {
        if !values[*idx].is_zero() {
            lhs += coef * &values[*idx];
        }
    }
    match c.cmp {
        Cmp::Le => lhs <= c.rhs,
        Cmp::Ge => lhs >= c.rhs,
        Cmp::Eq => lhs == c.rhs,
    }
}

// ---------------------------------------------------------------------------
// Instance
// ---------------------------------------------------------------------------

/// A lowered instance: variables, tagged rows, objective, and the
/// slot-indexed context (dependencies, users, sizes, costs) that the
/// solver and the LP writer both work from.
#[derive(Debug, Clone)]
pub struct MilpInstance {
    pub n: usize,
    pub vars: Vec<VarInfo>,
    pub constraints: Vec<Constraint>,
    /// Minimized: Σ compute·energy + page-in·energy + page-out·energy.
    pub objective: Vec<(usize, Rat)>,

    /// Greatest common divisor of all tensor sizes: the byte value of one
    /// usage unit.
    pub byte_unit: u128,
    pub static_bytes: u128,
    /// Budget headroom above static overhead, in usage units. `None` when
    /// the static overhead alone exceeds the budget (trivially
    /// infeasible).
    pub budget_units: Option<u128>,
    pub ram_budget: u128,
    pub deadline: Rat,

    /// Slot-indexed context, index 0 unused.
    pub deps: Vec<Vec<usize>>,
    pub users: Vec<Vec<usize>>,
    pub mem_units: Vec<u128>,
    pub compute_time: Vec<Rat>,
    pub compute_energy: Vec<Rat>,
    pub pagein_energy: Vec<Rat>,
    pub pageout_energy: Vec<Rat>,

    /// Per (step, operator slot): the reclaim candidates `deps(k) ∪ {k}`
    /// with their `F` variable indices, in candidate order.
    free_vars: Vec<Vec<(usize, usize)>>,
}

impl MilpInstance {
    #[inline]
    fn block(&self, kind: VarKind) -> usize {
        let nn = self.n * self.n;
        match kind {
            VarKind::Compute => 0,
            VarKind::Resident => nn,
            VarKind::Staged => 2 * nn,
            VarKind::PageIn => 3 * nn,
            VarKind::PageOut => 4 * nn,
            VarKind::Usage => 5 * nn,
            VarKind::Free => unreachable!("free variables are indexed via free_vars_of"),
        }
    }

    /// Index of a matrix-shaped variable (anything but `Free`).
    #[inline]
    pub fn var(&self, kind: VarKind, t: usize, i: usize) -> usize {
        self.block(kind) + (t - 1) * self.n + (i - 1)
    }

    /// Reclaim variables for operator slot `k` at step `t`: `(tensor,
    /// var index)` pairs.
    #[inline]
    pub fn free_vars_of(&self, t: usize, k: usize) -> &[(usize, usize)] {
        &self.free_vars[(t - 1) * self.n + (k - 1)]
    }

    pub fn binary_count(&self) -> usize {
        self.vars.iter().filter(|v| v.kind.is_binary()).count()
    }

    pub fn family_count(&self, family: Family) -> usize {
        self.constraints.iter().filter(|c| c.family == family).count()
    }

    pub fn fixed_count(&self) -> usize {
        self.vars.iter().filter(|v| v.fixed.is_some()).count()
    }

    /// The objective priced at a full value vector.
    pub fn objective_value(&self, values: &[Rat]) -> Rat {
        let mut total = Rat::zero();
        for (idx, coef) in &self.objective {
            if !values[*idx].is_zero() {
                total += coef * &values[*idx];
            }
        }
        total
    }

    /// All rows violated by a full value vector (empty = feasible), plus
    /// any disagreement with restriction pins.
    pub fn violated_rows(&self, values: &[Rat]) -> Vec<&Constraint> {
        self.constraints.iter().filter(|c| !row_satisfied(c, values)).collect()
    }

    /// Indices of pinned variables whose value disagrees with the pin.
    pub fn violated_fixes(&self, values: &[Rat]) -> Vec<usize> {
        self.vars
            .iter()
            .enumerate()
            .filter_map(|(idx, v)| {
                let pin = v.fixed?;
                let expect = if pin { rat_u(1) } else { Rat::zero() };
                (values[idx] != expect).then_some(idx)
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Build
// ---------------------------------------------------------------------------

/// Lower an instance. The profile is validated against the graph first;
/// all profile lookups go through the slot → node-id map so the variable
/// space is purely slot-indexed.
pub fn build_milp(
    g: &TrainingGraph,
    p: &CostProfile,
    ram_budget: u128,
    deadline: &Rat,
) -> Result<MilpInstance, MilpError> {
    p.validate_against(g)?;
    if deadline < &Rat::zero() {
        return Err(MilpError::NegativeDeadline);
    }
    let n = g.n();
    let nn = n * n;

    // Slot-indexed context.
    let mut deps = vec![Vec::new()];
    let mut users = vec![Vec::new()];
    for k in 1..=n {
        deps.push(g.deps_of(k).to_vec());
        users.push(g.users_of(k).to_vec());
    }
    let mem_raw: Vec<u128> = std::iter::once(0).chain((1..=n).map(|k| p.mem(g.id_at(k)))).collect();
    let byte_unit = mem_raw.iter().fold(0u128, |acc, &m| acc.gcd(&m)).max(1);
    let mem_units: Vec<u128> = mem_raw.iter().map(|&m| m / byte_unit).collect();
    let budget_units = if ram_budget >= p.static_bytes {
        Some((ram_budget - p.static_bytes) / byte_unit)
    } else {
        None
    };
    let per_slot = |src: &[Rat]| -> Vec<Rat> {
        std::iter::once(Rat::zero()).chain((1..=n).map(|k| src[g.id_at(k) - 1].clone())).collect()
    };
    let compute_time = per_slot(&p.compute_time);
    let compute_energy = per_slot(&p.compute_energy);
    let pagein_energy = per_slot(&p.pagein_energy);
    let pageout_energy = per_slot(&p.pageout_energy);

    // Variable layout: five n² decision blocks, the n² usage block, then
    // the reclaim variables grouped by (step, operator).
    let mut vars = Vec::with_capacity(6 * nn);
    for kind in VarKind::DECISION {
        for t in 1..=n {
            for i in 1..=n {
                vars.push(VarInfo { kind, t, i, k: 0, fixed: None });
            }
        }
    }
    for t in 1..=n {
        for k in 1..=n {
            vars.push(VarInfo { kind: VarKind::Usage, t, i: 0, k, fixed: None });
        }
    }
    let mut free_vars: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nn];
    for t in 1..=n {
        for k in 1..=n {
            let mut cands = deps[k].clone();
            cands.push(k);
            let list = &mut free_vars[(t - 1) * n + (k - 1)];
            for i in cands {
                list.push((i, vars.len()));
                vars.push(VarInfo { kind: VarKind::Free, t, i, k, fixed: None });
            }
        }
    }

    let mut inst = MilpInstance {
        n,
        vars,
        constraints: Vec::new(),
        objective: Vec::new(),
        byte_unit,
        static_bytes: p.static_bytes,
        budget_units,
        ram_budget,
        deadline: deadline.clone(),
        deps,
        users,
        mem_units,
        compute_time,
        compute_energy,
        pagein_energy,
        pageout_energy,
        free_vars,
    };

    let one = || rat_u(1);
    let neg = || -rat_u(1);
    let mut rows = Vec::new();

    // Both stores start empty.
    for i in 1..=n {
        rows.push(Constraint {
            name: format!("init_r_{i}"),
            family: Family::InitialEmpty,
            terms: vec![(inst.var(VarKind::Resident, 1, i), one())],
            cmp: Cmp::Eq,
            rhs: Rat::zero(),
        });
        rows.push(Constraint {
            name: format!("init_a_{i}"),
            family: Family::InitialEmpty,
            terms: vec![(inst.var(VarKind::Staged, 1, i), one())],
            cmp: Cmp::Eq,
            rhs: Rat::zero(),
        });
    }

    // Every slot runs at its own step.
    for v in 1..=n {
        rows.push(Constraint {
            name: format!("diag_{v}"),
            family: Family::SelfCompute,
            terms: vec![(inst.var(VarKind::Compute, v, v), one())],
            cmp: Cmp::Eq,
            rhs: one(),
        });
    }

    // Inputs available when an operator runs.
    for t in 1..=n {
        for (i, j) in g.slot_edges() {
            rows.push(Constraint {
                name: format!("dep_{t}_{i}_{j}"),
                family: Family::Dependency,
                terms: vec![
                    (inst.var(VarKind::Compute, t, i), one()),
                    (inst.var(VarKind::Resident, t, i), one()),
                    (inst.var(VarKind::Compute, t, j), neg()),
                ],
                cmp: Cmp::Ge,
                rhs: Rat::zero(),
            });
        }
    }

    // Residency and staging carry over only from a valid source.
    for t in 2..=n {
        for i in 1..=n {
            rows.push(Constraint {
                name: format!("ret_{t}_{i}"),
                family: Family::ResidentCarry,
                terms: vec![
                    (inst.var(VarKind::Compute, t - 1, i), one()),
                    (inst.var(VarKind::Resident, t - 1, i), one()),
                    (inst.var(VarKind::PageIn, t - 1, i), one()),
                    (inst.var(VarKind::Resident, t, i), neg()),
                ],
                cmp: Cmp::Ge,
                rhs: Rat::zero(),
            });
            rows.push(Constraint {
                name: format!("aux_{t}_{i}"),
                family: Family::StagedCarry,
                terms: vec![
                    (inst.var(VarKind::Staged, t - 1, i), one()),
                    (inst.var(VarKind::PageOut, t - 1, i), one()),
                    (inst.var(VarKind::Staged, t, i), neg()),
                ],
                cmp: Cmp::Ge,
                rhs: Rat::zero(),
            });
        }
    }

    // Transfers need their source.
    for t in 1..=n {
        for i in 1..=n {
            rows.push(Constraint {
                name: format!("pin_{t}_{i}"),
                family: Family::PageInSource,
                terms: vec![
                    (inst.var(VarKind::Staged, t, i), one()),
                    (inst.var(VarKind::PageIn, t, i), neg()),
                ],
                cmp: Cmp::Ge,
                rhs: Rat::zero(),
            });
            rows.push(Constraint {
                name: format!("pout_{t}_{i}"),
                family: Family::PageOutSource,
                terms: vec![
                    (inst.var(VarKind::Resident, t, i), one()),
                    (inst.var(VarKind::PageOut, t, i), neg()),
                ],
                cmp: Cmp::Ge,
                rhs: Rat::zero(),
            });
        }
    }

    // Reclaim rules. `F[t,i,k]` may be 1 only if k runs at t (fr row) and
    // no hazard holds the tensor: kept resident into t+1, being paged out
    // during t, or read by a later operator of step t (fh row — the big-M
    // is the hazard term count, which bounds the hazard sum).
    for t in 1..=n {
        for k in 1..=n {
            for &(i, f_idx) in inst.free_vars_of(t, k) {
                rows.push(Constraint {
                    name: format!("fr_{t}_{i}_{k}"),
                    family: Family::FreeDefinition,
                    terms: vec![(inst.var(VarKind::Compute, t, k), one()), (f_idx, neg())],
                    cmp: Cmp::Ge,
                    rhs: Rat::zero(),
                });
                let mut hazard: Vec<(usize, Rat)> = Vec::new();
                if t < n {
                    hazard.push((inst.var(VarKind::Resident, t + 1, i), one()));
                }
                hazard.push((inst.var(VarKind::PageOut, t, i), one()));
                for &j in &inst.users[i] {
                    if j > k {
                        hazard.push((inst.var(VarKind::Compute, t, j), one()));
                    }
                }
                let big_m = rat_u(hazard.len() as u128);
                let mut terms = hazard;
                terms.push((f_idx, big_m.clone()));
                rows.push(Constraint {
                    name: format!("fh_{t}_{i}_{k}"),
                    family: Family::FreeDefinition,
                    terms,
                    cmp: Cmp::Le,
                    rhs: big_m,
                });
            }
        }
    }

    // Usage recurrence. Step-start usage (resident + arriving tensors) is
    // folded into the k = 1 row; later rows are deltas. All coefficients
    // are in usage units; zero-size tensors drop out of the rows.
    for t in 1..=n {
        for k in 1..=n {
            let mut terms: Vec<(usize, Rat)> = vec![(inst.var(VarKind::Usage, t, k), one())];
            if k == 1 {
                for i in 1..=n {
                    let units = inst.mem_units[i];
                    if units != 0 {
                        terms.push((inst.var(VarKind::Resident, t, i), -rat_u(units)));
                        terms.push((inst.var(VarKind::PageIn, t, i), -rat_u(units)));
                    }
                }
            } else {
                terms.push((inst.var(VarKind::Usage, t, k - 1), neg()));
            }
            if inst.mem_units[k] != 0 {
                terms.push((inst.var(VarKind::Compute, t, k), -rat_u(inst.mem_units[k])));
            }
            for &(i, f_idx) in inst.free_vars_of(t, k) {
                if inst.mem_units[i] != 0 {
                    terms.push((f_idx, rat_u(inst.mem_units[i])));
                }
            }
            rows.push(Constraint {
                name: format!("udef_{t}_{k}"),
                family: Family::UsageDefinition,
                terms,
                cmp: Cmp::Eq,
                rhs: Rat::zero(),
            });
        }
    }

    // Budget rows. A budget below the static overhead has no feasible
    // usage value at all; encode that as an unsatisfiable bound.
    let budget_rhs = match inst.budget_units {
        Some(b) => rat_u(b),
        None => -rat_u(1),
    };
    for t in 1..=n {
        for k in 1..=n {
            rows.push(Constraint {
                name: format!("mem_{t}_{k}"),
                family: Family::MemoryBudget,
                terms: vec![(inst.var(VarKind::Usage, t, k), one())],
                cmp: Cmp::Le,
                rhs: budget_rhs.clone(),
            });
        }
    }

    // Deadline: one row over every compute binary.
    let mut terms = Vec::with_capacity(nn);
    for t in 1..=n {
        for k in 1..=n {
            if !inst.compute_time[k].is_zero() {
                terms.push((inst.var(VarKind::Compute, t, k), inst.compute_time[k].clone()));
            }
        }
    }
    rows.push(Constraint {
        name: "deadline".to_string(),
        family: Family::Deadline,
        terms,
        cmp: Cmp::Le,
        rhs: deadline.clone(),
    });

    inst.constraints = rows;

    // Objective.
    let mut objective = Vec::new();
    for t in 1..=n {
        for k in 1..=n {
            if !inst.compute_energy[k].is_zero() {
                objective.push((inst.var(VarKind::Compute, t, k), inst.compute_energy[k].clone()));
            }
            if !inst.pagein_energy[k].is_zero() {
                objective.push((inst.var(VarKind::PageIn, t, k), inst.pagein_energy[k].clone()));
            }
            if !inst.pageout_energy[k].is_zero() {
                objective.push((inst.var(VarKind::PageOut, t, k), inst.pageout_energy[k].clone()));
            }
        }
    }
    inst.objective = objective;

    Ok(inst)
}

// ---------------------------------------------------------------------------
// Restrictions
// ---------------------------------------------------------------------------

/// Single-technique restrictions of the integrated program. Restricting
/// pins variables rather than deleting them, so the row inventory — and
/// everything keyed on it — is identical across the three variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Restriction {
    /// No transfers: every page-in and page-out pinned to 0. Eviction can
    /// only be repaid by recomputation.
    RematOnly,
    /// No recomputation: every off-diagonal compute pinned to 0. Eviction
    /// can only be repaid by paging.
    PagingOnly,
}

/// Apply a restriction by pinning variables.
pub fn restrict(inst: &mut MilpInstance, r: Restriction) {
    let n = inst.n;
    match r {
        Restriction::RematOnly => {
            for t in 1..=n {
                for i in 1..=n {
                    let mi = inst.var(VarKind::PageIn, t, i);
                    let mo = inst.var(VarKind::PageOut, t, i);
                    inst.vars[mi].fixed = Some(false);
                    inst.vars[mo].fixed = Some(false);
                }
            }
        }
        Restriction::PagingOnly => {
            for t in 1..=n {
                for i in 1..=n {
                    if t != i {
                        let r = inst.var(VarKind::Compute, t, i);
                        inst.vars[r].fixed = Some(false);
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Schedule ⇄ value vectors
// ---------------------------------------------------------------------------

/// Reclaim decisions derived from a schedule, greedily maximal: `F=1`
/// wherever the fr/fh rows allow it. Greedy reclamation pointwise
/// minimizes usage, so it never turns a feasible schedule infeasible.
fn derive_frees(inst: &MilpInstance, s: &Schedule) -> Vec<bool> {
    let n = inst.n;
    let mut free = vec![false; inst.vars.len()];
    for t in 1..=n {
        for k in 1..=n {
            if !s.compute.get(t, k) {
                continue;
            }
            for &(i, f_idx) in inst.free_vars_of(t, k) {
                let kept = t < n && s.resident.get(t + 1, i);
                let paging_out = s.pageout.get(t, i);
                let later_read = inst.users[i].iter().any(|&j| j > k && s.compute.get(t, j));
                if !kept && !paging_out && !later_read {
                    free[f_idx] = true;
                }
            }
        }
    }
    free
}

/// Expand a schedule into a full value vector over the instance's
/// variables: the five matrices verbatim, reclaim variables greedily
/// maximal, and usage values from the recurrence (in units, above
/// static). The result satisfies every row iff the schedule is feasible
/// for the instance.
pub fn values_from_schedule(inst: &MilpInstance, s: &Schedule) -> Vec<Rat> {
    let n = inst.n;
    let mut values = vec![Rat::zero(); inst.vars.len()];
    let mats: [(VarKind, &BitMat); 5] = [
        (VarKind::Compute, &s.compute),
        (VarKind::Resident, &s.resident),
        (VarKind::Staged, &s.staged),
        (VarKind::PageIn, &s.pagein),
        (VarKind::PageOut, &s.pageout),
    ];
    for (kind, m) in mats {
        for t in 1..=n {
            for i in 1..=n {
                if m.get(t, i) {
                    values[inst.var(kind, t, i)] = rat_u(1);
                }
            }
        }
    }
    let frees = derive_frees(inst, s);
    for (idx, &f) in frees.iter().enumerate() {
        if f {
            values[idx] = rat_u(1);
        }
    }
    for t in 1..=n {
        // Usage in units: i128 accommodates transiently negative values
        // on invalid schedules; valid ones stay non-negative.
        let mut cur: i128 = 0;
        for i in 1..=n {
            if s.resident.get(t, i) {
                cur += inst.mem_units[i] as i128;
            }
            if s.pagein.get(t, i) {
                cur += inst.mem_units[i] as i128;
            }
        }
        for k in 1..=n {
            if s.compute.get(t, k) {
                cur += inst.mem_units[k] as i128;
            }
            for &(i, f_idx) in inst.free_vars_of(t, k) {
                if frees[f_idx] {
                    cur -= inst.mem_units[i] as i128;
                }
            }
            values[inst.var(VarKind::Usage, t, k)] = Rat::from_integer(cur.into());
        }
    }
    values
}

/// Read the five decision blocks of a value vector back into a schedule.
/// Values must be exactly 0 or 1 in the decision blocks.
pub fn schedule_from_values(inst: &MilpInstance, values: &[Rat]) -> Schedule {
    let n = inst.n;
    let mut s = Schedule::empty(n);
    let mats: [(VarKind, fn(&mut Schedule) -> &mut BitMat); 5] = [
        (VarKind::Compute, |s| &mut s.compute),
        (VarKind::Resident, |s| &mut s.resident),
        (VarKind::Staged, |s| &mut s.staged),
        (VarKind::PageIn, |s| &mut s.pagein),
        (VarKind::PageOut, |s| &mut s.pageout),
    ];
    for (kind, mat) in mats {
        for t in 1..=n {
            for i in 1..=n {
                if !values[inst.var(kind, t, i)].is_zero() {
                    mat(&mut s).set(t, i, true);
                }
            }
        }
    }
    s
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
