//! Exhaustive reference enumerator for small instances.
//!
//! This module answers the same question as the branch-and-bound solver, by
//! brute force: walk every admissible assignment of the per-step binary
//! decisions and keep the cheapest schedule that passes every feasibility
//! rule. It deliberately shares no search machinery with the solver — no
//! lower bounds, no propagation beyond what a single cell forces — so the two
//! can be compared as independent implementations of the same contract.
//!
//! Decisions are enumerated cell by cell in row-major order (step 1..n, slot
//! 1..n). For each cell the enumerator tries (staying resident, computing,
//! paging in, paging out); the staged-copy matrix is not branched on because
//! holding a staged copy is free and only ever enables more behaviour, so the
//! maximal closure `staged[t][i] = staged[t-1][i] || pageout[t-1][i]` is
//! taken as given. Costs and the deadline are rescaled once to integers so
//! the inner loop works in `u128` with exact arithmetic throughout.
//!
//! The search refuses rather than lies: if the explored-node cap is hit the
//! result is [`OracleOutcome::CapExceeded`], never a silently suboptimal
//! answer. Work fans out over the admissible step-1 compute patterns; each
//! subtree keeps a private incumbent and the results are merged by
//! `(cost, subtree index)`, so the parallel and sequential drivers return
//! bit-identical answers and identical explored-node counts.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};

use crate::costmodel::CostProfile;
use crate::graph::TrainingGraph;
use crate::par;
use crate::rat::Rat;
use crate::schedule::{BitMat, Schedule};

// ---------------------------------------------------------------------------
// Outcome type
// ---------------------------------------------------------------------------

/// Result of an exhaustive enumeration.
#[derive(Debug, Clone)]
pub enum OracleOutcome {
    /// A provably minimal-energy schedule was found.
    Optimal {
        /// Exact total energy of the schedule.
        energy: Rat,
        /// The witness schedule (staged copies held maximally).
        schedule: Schedule,
        /// Number of cell assignments applied during the search.
        explored: u64,
    },
    /// Every assignment violates at least one feasibility rule.
    Infeasible {
        /// Number of cell assignments applied during the search.
        explored: u64,
    },
    /// The explored-node cap was reached before the search finished; the
    /// instance is too large for the oracle and no answer is claimed.
    CapExceeded {
        /// Number of cell assignments applied before giving up.
        explored: u64,
    },
    /// The instance could not be rescaled to integer costs within `u128`.
    Refused {
        /// Human-readable reason.
        reason: String,
    },
}

// ---------------------------------------------------------------------------
// Integer rescaling
// ---------------------------------------------------------------------------

/// Immutable per-instance context: slot-indexed costs scaled to integers.
#[derive(Debug, Clone)]
struct Ctx {
    n: usize,
    /// Producer slots feeding each slot (ascending).
    deps: Vec<Vec<usize>>,
    /// Consumer slots fed by each slot (ascending).
    users: Vec<Vec<usize>>,
    /// Output size in bytes per slot.
    mem: Vec<u128>,
    /// RAM headroom above the static reservation, in bytes.
    head: u128,
    /// Scaled compute / page-in / page-out energy per slot.
    phi_c: Vec<u128>,
    phi_in: Vec<u128>,
    phi_out: Vec<u128>,
    /// Scaled compute time per slot.
    psi_c: Vec<u128>,
    /// Scaled deadline: schedules with total scaled compute time above this
    /// are rejected.
    deadline: u128,
    /// Denominator that converts scaled energy back to joules.
    energy_scale: BigInt,
    /// Cap on cell assignments per subtree.
    cap: u64,
}

/// Least common multiple of the denominators of `values`.
fn denominator_lcm(values: &[&Rat]) -> BigInt {
    let mut l = BigInt::one();
    for v in values {
        l = l.lcm(v.denom());
    }
    l
}

/// Scale `value * scale` to a `u128`, failing on negatives or overflow.
fn scale_to_u128(value: &Rat, scale: &BigInt) -> Result<u128, String> {
    let scaled = value * Rat::from(scale.clone());
    if !scaled.is_integer() {
        return Err(format!("{} does not land on the integer lattice", value));
    }
    let int = scaled.to_integer();
    if int.is_negative() {
        return Err(format!("negative cost {}", value));
    }
    int.to_u128()
        .ok_or_else(|| format!("cost {} overflows the integer range", value))
}

impl Ctx {
    fn build(
        g: &TrainingGraph,
        p: &CostProfile,
        ram_budget: u128,
        deadline: &Rat,
        cap: u64,
    ) -> Result<Option<Ctx>, String> {
        p.validate_against(g)
            .map_err(|e| format!("profile mismatch: {e}"))?;
        let n = g.n();
        if ram_budget < p.static_bytes {
            // No headroom at all: every schedule is infeasible.
            return Ok(None);
        }
        let head = ram_budget - p.static_bytes;

        // Slot-indexed views of the id-indexed profile.
        let per_slot = |by_id: &[Rat]| -> Vec<Rat> {
            (1..=n).map(|s| by_id[g.id_at(s) - 1].clone()).collect()
        };
        let phi_c = per_slot(&p.compute_energy);
        let phi_in = per_slot(&p.pagein_energy);
        let phi_out = per_slot(&p.pageout_energy);
        let psi_c = per_slot(&p.compute_time);
        let mem: Vec<u128> = (1..=n).map(|s| p.mem_bytes[g.id_at(s) - 1]).collect();

        let energy_refs: Vec<&Rat> = phi_c.iter().chain(&phi_in).chain(&phi_out).collect();
        let energy_scale = denominator_lcm(&energy_refs);
        let time_refs: Vec<&Rat> = psi_c.iter().collect();
        let time_scale = denominator_lcm(&time_refs);

        let scale_all = |vals: &[Rat], scale: &BigInt| -> Result<Vec<u128>, String> {
            vals.iter().map(|v| scale_to_u128(v, scale)).collect()
        };
        let phi_c = scale_all(&phi_c, &energy_scale)?;
        let phi_in = scale_all(&phi_in, &energy_scale)?;
        let phi_out = scale_all(&phi_out, &energy_scale)?;
        let psi_c = scale_all(&psi_c, &time_scale)?;

        // Scaled times are integers, so `sum <= deadline * scale` is
        // equivalent to `sum <= floor(deadline * scale)`.
        let deadline_scaled = (deadline * Rat::from(time_scale)).floor().to_integer();
        if deadline_scaled.is_negative() {
            return Ok(None); // A negative deadline rejects even the empty prefix.
        }
        let deadline = deadline_scaled.to_u128().unwrap_or(u128::MAX);

        // Guard the accumulator: the worst-case total is at most n^2 times
        // the largest single scaled cost, and must stay well inside u128.
        let max_cost = phi_c
            .iter()
            .chain(&phi_in)
            .chain(&phi_out)
            .copied()
            .max()
            .unwrap_or(0);
        let cells = (n as u128) * (n as u128);
        if max_cost > 0 && cells > u128::MAX / 8 / max_cost {
            return Err("scaled costs too large for exact u128 accumulation".into());
        }

        let deps: Vec<Vec<usize>> = (1..=n).map(|s| g.deps_of(s).to_vec()).collect();
        let users: Vec<Vec<usize>> = (1..=n).map(|s| g.users_of(s).to_vec()).collect();

        Ok(Some(Ctx {
            n,
            deps,
            users,
            mem,
            head,
            phi_c,
            phi_in,
            phi_out,
            psi_c,
            deadline,
            energy_scale,
            cap,
        }))
    }

    fn deps_of(&self, slot: usize) -> &[usize] {
        &self.deps[slot - 1]
    }

    fn users_of(&self, slot: usize) -> &[usize] {
        &self.users[slot - 1]
    }

    fn mem_of(&self, slot: usize) -> u128 {
        self.mem[slot - 1]
    }
}

// ---------------------------------------------------------------------------
// Search state
// ---------------------------------------------------------------------------

/// Mutable DFS state: decision matrices plus running totals.
#[derive(Debug, Clone)]
struct State {
    /// `mat[t][i]`, rows and slots 1-based with a dummy 0 row/column.
    r: Vec<Vec<bool>>,
    sr: Vec<Vec<bool>>,
    sa: Vec<Vec<bool>>,
    mi: Vec<Vec<bool>>,
    mo: Vec<Vec<bool>>,
    cost: u128,
    time: u128,
    explored: u64,
    capped: bool,
    best: Option<(u128, Snapshot)>,
}

/// The five matrices of an accepted leaf.
#[derive(Debug, Clone)]
struct Snapshot {
    r: Vec<Vec<bool>>,
    sr: Vec<Vec<bool>>,
    sa: Vec<Vec<bool>>,
    mi: Vec<Vec<bool>>,
    mo: Vec<Vec<bool>>,
}

impl State {
    fn empty(n: usize) -> State {
        let mat = || vec![vec![false; n + 1]; n + 1];
        State {
            r: mat(),
            sr: mat(),
            sa: mat(),
            mi: mat(),
            mo: mat(),
            cost: 0,
            time: 0,
            explored: 0,
            capped: false,
            best: None,
        }
    }
}

/// Check that every producer feeding `slot` is available in step `t`:
/// either computed earlier in the same step or held resident.
fn deps_available(ctx: &Ctx, st: &State, t: usize, slot: usize) -> bool {
    ctx.deps_of(slot)
        .iter()
        .all(|&d| st.r[t][d] || st.sr[t][d])
}

/// Walk step `t`'s memory usage with greedy reclamation and report whether
/// every position stays within the headroom. `next_sr` is the residency row
/// of step `t + 1`; `None` treats it as all-zero, which reclaims maximally
/// and therefore yields a lower bound on the true usage (sound for pruning
/// before the next row is decided).
fn row_within_budget(ctx: &Ctx, st: &State, t: usize, next_sr: Option<&[bool]>) -> bool {
    let n = ctx.n;
    let hazard_next = |i: usize| next_sr.map_or(false, |row| row[i]);

    let mut cur: u128 = 0;
    for i in 1..=n {
        if st.sr[t][i] {
            cur += ctx.mem_of(i);
        }
        if st.mi[t][i] {
            cur += ctx.mem_of(i);
        }
    }
    if cur > ctx.head {
        return false;
    }
    for k in 1..=n {
        if st.r[t][k] {
            cur += ctx.mem_of(k);
        }
        if st.r[t][k] {
            // A buffer may be reclaimed right after position k if k was its
            // last use in the step and nothing else still needs it.
            for &i in ctx.deps_of(k).iter().chain(std::iter::once(&k)) {
                let kept_next = hazard_next(i);
                let paged_out = st.mo[t][i];
                let used_later = ctx.users_of(i).iter().any(|&j| j > k && st.r[t][j]);
                if !kept_next && !paged_out && !used_later {
                    cur -= ctx.mem_of(i);
                }
            }
        }
        if cur > ctx.head {
            return false;
        }
    }
    true
}

/// Recursive cell-by-cell enumeration. `t` is the current step, `i` the next
/// slot to assign within it.
fn dfs_cell(ctx: &Ctx, st: &mut State, t: usize, i: usize) {
    if st.capped {
        return;
    }
    if i > ctx.n {
        complete_row(ctx, st, t);
        return;
    }

    // Domain filters for each of the four decisions at cell (t, i):
    //   - residency needs a source in the previous step (and step 1 is empty)
    //   - the step's own operator must run at t == i; any compute needs its
    //     inputs available in this step
    //   - a page-in needs a staged copy, a page-out needs residency.
    // Residency is tried 1-first so the all-resident schedule is reached
    // first; the cost-bearing decisions are tried 0-first.
    for sr_val in [true, false] {
        if sr_val && (t == 1 || !(st.r[t - 1][i] || st.sr[t - 1][i] || st.mi[t - 1][i])) {
            continue;
        }
        st.sr[t][i] = sr_val;
        for r_val in [false, true] {
            if t == i && !r_val {
                continue;
            }
            if r_val && !deps_available(ctx, st, t, i) {
                continue;
            }
            let time_delta = if r_val { ctx.psi_c[i - 1] } else { 0 };
            if st.time + time_delta > ctx.deadline {
                continue;
            }
            st.r[t][i] = r_val;
            for mi_val in [false, true] {
                if mi_val && !st.sa[t][i] {
                    continue;
                }
                st.mi[t][i] = mi_val;
                for mo_val in [false, true] {
                    if mo_val && !sr_val {
                        continue;
                    }
                    let mut cost_delta = 0u128;
                    if r_val {
                        cost_delta += ctx.phi_c[i - 1];
                    }
                    if mi_val {
                        cost_delta += ctx.phi_in[i - 1];
                    }
                    if mo_val {
                        cost_delta += ctx.phi_out[i - 1];
                    }
                    if let Some((bound, _)) = &st.best {
                        if st.cost + cost_delta >= *bound {
                            continue;
                        }
                    }
                    st.explored += 1;
                    if st.explored > ctx.cap {
                        st.capped = true;
                        st.r[t][i] = false;
                        st.mi[t][i] = false;
                        st.sr[t][i] = false;
                        return;
                    }
                    st.mo[t][i] = mo_val;
                    st.cost += cost_delta;
                    st.time += time_delta;

                    dfs_cell(ctx, st, t, i + 1);

                    st.cost -= cost_delta;
                    st.time -= time_delta;
                    st.mo[t][i] = false;
                    if st.capped {
                        st.mi[t][i] = false;
                        st.r[t][i] = false;
                        st.sr[t][i] = false;
                        return;
                    }
                }
                st.mi[t][i] = false;
            }
            st.r[t][i] = false;
        }
        st.sr[t][i] = false;
    }
}

/// Row `t` has just been fully assigned: run the feasibility checks that
/// become decidable at this point, then either accept the leaf or descend.
fn complete_row(ctx: &Ctx, st: &mut State, t: usize) {
    // Optimistic check of the fresh row (assumes the next row holds nothing).
    if !row_within_budget(ctx, st, t, None) {
        return;
    }
    // Exact check of the previous row, now that this row's residency is known.
    if t >= 2 {
        let next_sr = st.sr[t].clone();
        if !row_within_budget(ctx, st, t - 1, Some(&next_sr)) {
            return;
        }
    }
    if t == ctx.n {
        // The optimistic check of row n is already exact (no later row).
        let accept = match &st.best {
            Some((bound, _)) => st.cost < *bound,
            None => true,
        };
        if accept {
            st.best = Some((
                st.cost,
                Snapshot {
                    r: st.r.clone(),
                    sr: st.sr.clone(),
                    sa: st.sa.clone(),
                    mi: st.mi.clone(),
                    mo: st.mo.clone(),
                },
            ));
        }
        return;
    }
    // Maximal staged closure for the next row.
    for i in 1..=ctx.n {
        st.sa[t + 1][i] = st.sa[t][i] || st.mo[t][i];
    }
    dfs_cell(ctx, st, t + 1, 1);
}

// ---------------------------------------------------------------------------
// Step-1 fan-out
// ---------------------------------------------------------------------------

/// Enumerate the admissible compute patterns of step 1 in DFS order.
///
/// Step 1 starts from empty memory, so residency, staging and both page
/// directions are forced to zero there; only the compute bits are free, and
/// slot 1 must run. Patterns that violate the deadline prefix or the step-1
/// memory walk are dropped here, exactly as the plain DFS would drop them.
fn step1_patterns(ctx: &Ctx, explored: &mut u64) -> Vec<Vec<bool>> {
    let mut out = Vec::new();
    let mut st = State::empty(ctx.n);
    let mut pattern = vec![false; ctx.n + 1];

    fn rec(
        ctx: &Ctx,
        st: &mut State,
        pattern: &mut Vec<bool>,
        i: usize,
        explored: &mut u64,
        out: &mut Vec<Vec<bool>>,
    ) {
        if i > ctx.n {
            if row_within_budget(ctx, st, 1, None) {
                out.push(pattern.clone());
            }
            return;
        }
        for r_val in [false, true] {
            if i == 1 && !r_val {
                continue;
            }
            if r_val && !deps_available(ctx, st, 1, i) {
                continue;
            }
            let time_delta = if r_val { ctx.psi_c[i - 1] } else { 0 };
            if st.time + time_delta > ctx.deadline {
                continue;
            }
            *explored += 1;
            st.r[1][i] = r_val;
            pattern[i] = r_val;
            st.time += time_delta;
            rec(ctx, st, pattern, i + 1, explored, out);
            st.time -= time_delta;
            pattern[i] = false;
            st.r[1][i] = false;
        }
    }

    rec(ctx, &mut st, &mut pattern, 1, explored, &mut out);
    out
}

/// Solve one step-1 subtree from scratch with a private incumbent.
fn run_subtree(ctx: &Ctx, pattern: &[bool]) -> State {
    let mut st = State::empty(ctx.n);
    for i in 1..=ctx.n {
        st.r[1][i] = pattern[i];
        if pattern[i] {
            st.cost += ctx.phi_c[i - 1];
            st.time += ctx.psi_c[i - 1];
        }
    }
    if ctx.n == 1 {
        complete_row(ctx, &mut st, 1);
        return st;
    }
    // Step 2 onward; the staged row for step 2 is all-false (nothing was
    // paged out in step 1), which State::empty already encodes.
    dfs_cell(ctx, &mut st, 2, 1);
    st
}

fn snapshot_to_schedule(n: usize, snap: &Snapshot) -> Schedule {
    let to_mat = |m: &Vec<Vec<bool>>| {
        let mut out = BitMat::zeros(n);
        for t in 1..=n {
            for i in 1..=n {
                if m[t][i] {
                    out.set(t, i, true);
                }
            }
        }
        out
    };
    Schedule {
        compute: to_mat(&snap.r),
        resident: to_mat(&snap.sr),
        staged: to_mat(&snap.sa),
        pagein: to_mat(&snap.mi),
        pageout: to_mat(&snap.mo),
    }
}

fn combine(ctx: &Ctx, seed_explored: u64, results: Vec<State>) -> OracleOutcome {
    let mut explored = seed_explored;
    let mut capped = false;
    let mut best: Option<(u128, usize, Snapshot)> = None;
    for (idx, st) in results.into_iter().enumerate() {
        explored += st.explored;
        capped |= st.capped;
        if let Some((cost, snap)) = st.best {
            let better = match &best {
                Some((b_cost, b_idx, _)) => cost < *b_cost || (cost == *b_cost && idx < *b_idx),
                None => true,
            };
            if better {
                best = Some((cost, idx, snap));
            }
        }
    }
    if capped {
        return OracleOutcome::CapExceeded { explored };
    }
    match best {
        Some((cost, _, snap)) => OracleOutcome::Optimal {
            energy: Rat::new(BigInt::from(cost), ctx.energy_scale.clone()),
            schedule: snapshot_to_schedule(ctx.n, &snap),
            explored,
        },
        None => OracleOutcome::Infeasible { explored },
    }
}

fn enumerate_with<M>(
    g: &TrainingGraph,
    p: &CostProfile,
    ram_budget: u128,
    deadline: &Rat,
    cap: u64,
    map: M,
) -> OracleOutcome
where
    M: FnOnce(Vec<Vec<bool>>, Box<dyn Fn(Vec<bool>) -> State + Sync + Send + '_>) -> Vec<State>,
{
    let ctx = match Ctx::build(g, p, ram_budget, deadline, cap) {
        Ok(Some(ctx)) => ctx,
        Ok(None) => return OracleOutcome::Infeasible { explored: 0 },
        Err(reason) => return OracleOutcome::Refused { reason },
    };
    let mut seed_explored = 0u64;
    let patterns = step1_patterns(&ctx, &mut seed_explored);
    let ctx_ref = &ctx;
    let results = map(
        patterns,
        Box::new(move |pattern| run_subtree(ctx_ref, &pattern)),
    );
    combine(&ctx, seed_explored, results)
}

/// Exhaustively find a minimal-energy schedule, fanning the step-1 subtrees
/// out over the worker pool when the `parallel` feature is enabled.
///
/// `cap` bounds the number of cell assignments per subtree; exceeding it
/// yields [`OracleOutcome::CapExceeded`] rather than a possibly wrong answer.
pub fn enumerate_optimal(
    g: &TrainingGraph,
    p: &CostProfile,
    ram_budget: u128,
    deadline: &Rat,
    cap: u64,
) -> OracleOutcome {
    enumerate_with(g, p, ram_budget, deadline, cap, |items, f| {
        par::map_indexed(items, move |x| f(x))
    })
}

/// Sequential twin of [`enumerate_optimal`]; returns the same outcome and the
/// same explored-node count on every instance.
pub fn enumerate_optimal_seq(
    g: &TrainingGraph,
    p: &CostProfile,
    ram_budget: u128,
    deadline: &Rat,
    cap: u64,
) -> OracleOutcome {
    enumerate_with(g, p, ram_budget, deadline, cap, |items, f| {
        par::map_indexed_seq(items, move |x| f(x))
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::{synth_profile, CostRegime, Device};
    use crate::graph::{build_training_graph, GraphKind, GraphSpec, LayerTag, NodeMeta};
    use crate::milp::{build_milp, values_from_schedule};
    use crate::rat::{rat, rat_i, rat_u};
    use crate::schedule::{evaluate, full_memory, full_schedule, verify};

    const CAP: u64 = 50_000_000;
    const UNIT: u128 = 4096;

    fn uniform_chain(depth: usize) -> (TrainingGraph, CostProfile) {
        let g = build_training_graph(&GraphSpec::new(GraphKind::Chain, depth).unwrap());
        let p = synth_profile(&g, CostRegime::Uniform, Device::A72, 7);
        (g, p)
    }

    fn loose_deadline(p: &CostProfile) -> Rat {
        p.sum_compute_time() * rat_i(100)
    }

    /// A straight pipeline `1 -> 2 -> ... -> n` plus extra edges, executed in
    /// id order, with hand-picked buffer sizes and unit compute costs.
    fn fixture_graph(n: usize, extra: &[(usize, usize)]) -> TrainingGraph {
        let nodes = (1..=n)
            .map(|i| NodeMeta { id: i, label: format!("n{i}") })
            .collect();
        let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i, i + 1)).collect();
        edges.extend_from_slice(extra);
        TrainingGraph::from_parts(nodes, edges, (1..=n).collect(), vec![LayerTag::Balanced])
            .unwrap()
    }

    fn fixture_profile(mem_units: &[u128], phi_c: &[i64], page_each_way: &Rat) -> CostProfile {
        let n = mem_units.len();
        CostProfile {
            compute_energy: phi_c.iter().map(|&e| rat_i(e)).collect(),
            pagein_energy: vec![page_each_way.clone(); n],
            pageout_energy: vec![page_each_way.clone(); n],
            compute_time: vec![rat_i(1); n],
            pagein_time: vec![rat(1, 10); n],
            pageout_time: vec![rat(1, 10); n],
            mem_bytes: mem_units.iter().map(|&u| u * UNIT).collect(),
            static_bytes: UNIT,
        }
    }

    /// Four nodes `1 -> 2 -> 3 -> 4` plus `1 -> 4`: buffer 1 is needed again
    /// at the last step, and buffer 2 is three units wide. Keeping buffer 1
    /// resident makes step 2 hold four units, so under a three-unit headroom
    /// the only optimum is to drop buffer 1 at step 2 and recompute it at
    /// step 4 (paging it can never fit: a page-out pins the buffer in step 2).
    fn remat_fixture() -> (TrainingGraph, CostProfile) {
        let g = fixture_graph(4, &[(1, 4)]);
        let p = fixture_profile(&[1, 3, 1, 1], &[1, 1, 1, 1], &rat(7, 10));
        (g, p)
    }

    /// Six nodes `1 -> ... -> 6` plus `1 -> 6`: buffer 1 is two units wide,
    /// expensive to recompute (cost 5), and idle between steps 2 and 6.
    /// Under a three-unit headroom it cannot stay resident (step 3 would
    /// exceed the budget), so it must leave and come back; paging it out at
    /// step 2 and in at step 5 costs 1, recomputing costs 5.
    fn paging_fixture() -> (TrainingGraph, CostProfile) {
        let g = fixture_graph(6, &[(1, 6)]);
        let p = fixture_profile(&[2, 1, 2, 1, 1, 1], &[5, 1, 1, 1, 1, 1], &rat(1, 2));
        (g, p)
    }

    fn budget_units(p: &CostProfile, head: u128) -> u128 {
        p.static_bytes + head * UNIT
    }

    #[test]
    fn generous_budget_recovers_the_energy_floor() {
        for depth in 1..=2 {
            let (g, p) = uniform_chain(depth);
            let budget = full_memory(&g, &p);
            let out = enumerate_optimal(&g, &p, budget, &loose_deadline(&p), CAP);
            match out {
                OracleOutcome::Optimal {
                    energy, schedule, ..
                } => {
                    // With everything resident no operator ever reruns and no
                    // page moves, so the minimum is the sum of compute costs.
                    assert_eq!(energy, p.sum_compute_energy());
                    assert_eq!(schedule.compute.count_ones(), g.n());
                    assert_eq!(schedule.pagein.count_ones(), 0);
                    assert_eq!(schedule.pageout.count_ones(), 0);
                    let v = verify(&g, &p, budget, &loose_deadline(&p), &schedule);
                    assert!(v.is_empty(), "oracle schedule must verify: {v:?}");
                }
                other => panic!("expected optimal, got {other:?}"),
            }
        }
    }

    #[test]
    fn remat_fixture_walks_through_its_three_regimes() {
        let (g, p) = remat_fixture();
        let deadline = loose_deadline(&p);
        assert_eq!(full_memory(&g, &p), budget_units(&p, 4));

        // Four units of headroom: everything stays resident, energy floor.
        match enumerate_optimal(&g, &p, budget_units(&p, 4), &deadline, CAP) {
            OracleOutcome::Optimal { energy, .. } => assert_eq!(energy, rat_i(4)),
            other => panic!("expected optimal, got {other:?}"),
        }

        // Three units: buffer 1 must vacate step 2 and rerun at step 4.
        match enumerate_optimal(&g, &p, budget_units(&p, 3), &deadline, CAP) {
            OracleOutcome::Optimal {
                energy, schedule, ..
            } => {
                assert_eq!(energy, rat_i(5));
                assert_eq!(schedule.compute.count_ones(), 5);
                assert!(schedule.compute.get(4, 1), "node 1 reruns in step 4");
                assert_eq!(schedule.pagein.count_ones(), 0);
                assert_eq!(schedule.pageout.count_ones(), 0);
                let v = verify(&g, &p, budget_units(&p, 3), &deadline, &schedule);
                assert!(v.is_empty(), "{v:?}");
            }
            other => panic!("expected optimal, got {other:?}"),
        }

        // Two units: node 2's three-unit buffer alone exceeds the headroom.
        match enumerate_optimal(&g, &p, budget_units(&p, 2), &deadline, CAP) {
            OracleOutcome::Infeasible { .. } => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn deadline_at_compute_floor_forbids_the_needed_recompute() {
        // Under three units of headroom the optimum reruns node 1, which
        // costs one extra time unit; a deadline of exactly the straight-line
        // compute time therefore leaves no feasible schedule, and one more
        // unit of slack restores the optimum.
        let (g, p) = remat_fixture();
        let budget = budget_units(&p, 3);
        match enumerate_optimal(&g, &p, budget, &p.sum_compute_time(), CAP) {
            OracleOutcome::Infeasible { .. } => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
        let relaxed = p.sum_compute_time() + rat_i(1);
        match enumerate_optimal(&g, &p, budget, &relaxed, CAP) {
            OracleOutcome::Optimal { energy, .. } => assert_eq!(energy, rat_i(5)),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn budget_below_static_is_infeasible_without_search() {
        let (g, p) = uniform_chain(1);
        match enumerate_optimal(&g, &p, p.static_bytes - 1, &loose_deadline(&p), CAP) {
            OracleOutcome::Infeasible { explored } => assert_eq!(explored, 0),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn optimal_schedules_satisfy_every_program_row() {
        // Cross-check the enumerator against the exact row evaluation of the
        // 0/1 program on both fixtures' interesting regimes.
        for (g, p, head, expect) in [
            {
                let (g, p) = remat_fixture();
                (g, p, 3u128, rat_i(5))
            },
            {
                let (g, p) = paging_fixture();
                (g, p, 3u128, rat_i(11))
            },
        ] {
            let budget = budget_units(&p, head);
            let deadline = loose_deadline(&p);
            match enumerate_optimal(&g, &p, budget, &deadline, CAP) {
                OracleOutcome::Optimal {
                    energy, schedule, ..
                } => {
                    assert_eq!(energy, expect);
                    let inst = build_milp(&g, &p, budget, &deadline).unwrap();
                    let values = values_from_schedule(&inst, &schedule);
                    assert!(inst.violated_rows(&values).is_empty());
                    assert_eq!(inst.objective_value(&values), energy);
                }
                other => panic!("expected optimal, got {other:?}"),
            }
        }
    }

    #[test]
    fn beats_or_matches_the_full_schedule_whenever_it_fits() {
        for depth in 1..=2 {
            let (g, p) = uniform_chain(depth);
            let budget = full_memory(&g, &p);
            let deadline = loose_deadline(&p);
            let full = evaluate(&g, &p, &full_schedule(&g));
            match enumerate_optimal(&g, &p, budget, &deadline, CAP) {
                OracleOutcome::Optimal { energy, .. } => assert!(energy <= full.energy),
                other => panic!("expected optimal, got {other:?}"),
            }
        }
    }

    #[test]
    fn parallel_and_sequential_runs_agree_exactly() {
        let (g, p) = paging_fixture();
        for head in [4u128, 3, 2] {
            let budget = budget_units(&p, head);
            let deadline = loose_deadline(&p);
            let a = enumerate_optimal(&g, &p, budget, &deadline, CAP);
            let b = enumerate_optimal_seq(&g, &p, budget, &deadline, CAP);
            match (a, b) {
                (
                    OracleOutcome::Optimal {
                        energy: ea,
                        schedule: sa,
                        explored: xa,
                    },
                    OracleOutcome::Optimal {
                        energy: eb,
                        schedule: sb,
                        explored: xb,
                    },
                ) => {
                    assert_eq!(ea, eb);
                    assert_eq!(xa, xb);
                    for (ma, mb) in sa.matrices().iter().zip(sb.matrices().iter()) {
                        assert_eq!(ma.1.to_row_strings(), mb.1.to_row_strings());
                    }
                }
                (
                    OracleOutcome::Infeasible { explored: xa },
                    OracleOutcome::Infeasible { explored: xb },
                ) => assert_eq!(xa, xb),
                (a, b) => panic!("outcome mismatch: {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn repeated_runs_are_deterministic() {
        let (g, p) = uniform_chain(2);
        let budget = p.static_bytes + 3 * 4096;
        let deadline = loose_deadline(&p);
        let runs: Vec<_> = (0..3)
            .map(|_| enumerate_optimal(&g, &p, budget, &deadline, CAP))
            .collect();
        let energies: Vec<_> = runs
            .iter()
            .map(|o| match o {
                OracleOutcome::Optimal {
                    energy, explored, ..
                } => (energy.clone(), *explored),
                other => panic!("expected optimal, got {other:?}"),
            })
            .collect();
        assert_eq!(energies[0], energies[1]);
        assert_eq!(energies[1], energies[2]);
    }

    #[test]
    fn tiny_cap_refuses_instead_of_answering() {
        let (g, p) = uniform_chain(2);
        let budget = full_memory(&g, &p);
        match enumerate_optimal(&g, &p, budget, &loose_deadline(&p), 10) {
            OracleOutcome::CapExceeded { explored } => assert!(explored > 10),
            other => panic!("expected cap refusal, got {other:?}"),
        }
    }

    #[test]
    fn paging_fixture_prefers_paging_over_an_expensive_rerun() {
        let (g, p) = paging_fixture();
        let deadline = loose_deadline(&p);
        assert_eq!(full_memory(&g, &p), budget_units(&p, 4));

        // Four units of headroom: floor (10 = 5 + five unit ops).
        match enumerate_optimal(&g, &p, budget_units(&p, 4), &deadline, CAP) {
            OracleOutcome::Optimal { energy, .. } => assert_eq!(energy, rat_i(10)),
            other => panic!("expected optimal, got {other:?}"),
        }

        // Three units: buffer 1 leaves and returns. A round trip through
        // auxiliary storage costs 1; rerunning node 1 would cost 5.
        let budget = budget_units(&p, 3);
        match enumerate_optimal(&g, &p, budget, &deadline, CAP) {
            OracleOutcome::Optimal {
                energy, schedule, ..
            } => {
                assert_eq!(energy, rat_i(11));
                assert_eq!(schedule.compute.count_ones(), 6, "no operator reruns");
                assert_eq!(schedule.pageout.count_ones(), 1);
                assert_eq!(schedule.pagein.count_ones(), 1);
                assert!(schedule.pageout.get(2, 1), "buffer 1 leaves at step 2");
                assert!(schedule.pagein.get(5, 1), "buffer 1 returns during step 5");
                let v = verify(&g, &p, budget, &deadline, &schedule);
                assert!(v.is_empty(), "{v:?}");
            }
            other => panic!("expected optimal, got {other:?}"),
        }

        // Paging adds no compute time, so the optimum survives a deadline of
        // exactly the straight-line compute time (a rerun would not).
        match enumerate_optimal(&g, &p, budget, &p.sum_compute_time(), CAP) {
            OracleOutcome::Optimal { energy, .. } => assert_eq!(energy, rat_i(11)),
            other => panic!("expected optimal, got {other:?}"),
        }

        // Two units: buffer 1 can never come back (page-ins and reruns both
        // need three units somewhere), so nothing feasible remains.
        match enumerate_optimal(&g, &p, budget_units(&p, 2), &deadline, CAP) {
            OracleOutcome::Infeasible { .. } => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn refuses_costs_that_cannot_be_rescaled() {
        let (g, mut p) = uniform_chain(1);
        p.compute_energy[0] = rat(-1, 1);
        match enumerate_optimal(&g, &p, full_memory(&g, &p), &rat_u(100), CAP) {
            OracleOutcome::Refused { .. } => {}
            other => panic!("expected refusal, got {other:?}"),
        }
    }
}
