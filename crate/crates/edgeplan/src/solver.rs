//! Deterministic branch-and-bound solver for the scheduling program.
//!
//! The solver branches only on the five per-step decision matrices —
//! reclamation and usage variables are functions of those decisions and are
//! derived, never searched. Cells are assigned timestep-major; within a step
//! the order is compute, page-out, page-in, resident, staged, each slot
//! ascending. Cost-bearing bits try 0 first; the free residency and staging
//! bits try 1 first so the cheapest leaf in each region is reached early.
//! All implications under this order flow strictly forward (a compute can
//! force a later residency bit, a page move can force its source bit), so
//! propagation is a pair of per-slot requirement counters rather than a
//! general trail.
//!
//! Feasibility is enforced structurally during the walk: support rules
//! against the previous (fully decided) step, the memory walk with greedy
//! reclamation — optimistically for the step just decided, exactly for the
//! step before it once the residency row is known — and an admissible bound
//! on the energy and time still to be paid (every future step must run its
//! own operator, and every already-computed tensor with a future consumer
//! must be carried, recomputed, or paged back). Costs are rescaled once to
//! integers; sums run in `i128` when a worst-case bound proves that safe and
//! in `BigInt` otherwise, exact either way.
//!
//! The search keeps the first optimum it proves. Every improving leaf is
//! re-checked against the full generic row list of the instance before being
//! accepted, so a disagreement between this module's structural reasoning
//! and the program lowering surfaces as a hard error instead of a wrong
//! answer.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::milp::{values_from_schedule, MilpInstance, VarKind};
use crate::rat::Rat;
use crate::schedule::{BitMat, Schedule};

// ---------------------------------------------------------------------------
// Public types
// ---------------------------------------------------------------------------

/// Errors that abort a solve outright (as opposed to honest outcomes).
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("instance has a negative cost coefficient for slot {slot}")]
    NegativeCost { slot: usize },
    #[error("internal consistency check failed at an accepted leaf: {detail}")]
    InternalCheckFailed { detail: String },
}

/// Resource limits for a solve. `None` means unlimited.
#[derive(Debug, Clone, Default)]
pub struct SolveLimits {
    /// Maximum number of cell assignments to explore.
    pub max_nodes: Option<u64>,
    /// Wall-clock budget, checked every few thousand assignments.
    pub time_limit: Option<Duration>,
}

/// Search counters reported with every outcome.
#[derive(Debug, Clone)]
pub struct SolveStats {
    /// Cell assignments applied.
    pub nodes: u64,
    /// Number of times the incumbent improved.
    pub improvements: u64,
    /// Wall-clock time spent in the search.
    pub elapsed: Duration,
}

/// Result of a solve that ran to a conclusion or a limit.
#[derive(Debug, Clone)]
pub enum SolveOutcome {
    /// Proven minimal-energy schedule.
    Optimal { energy: Rat, schedule: Schedule },
    /// No assignment satisfies every rule.
    Infeasible,
    /// A limit stopped the search first; the incumbent, if any, is feasible
    /// but not proven optimal.
    LimitReached { incumbent: Option<(Rat, Schedule)> },
}

/// Outcome plus counters.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub outcome: SolveOutcome,
    pub stats: SolveStats,
}

// ---------------------------------------------------------------------------
// Exact cost arithmetic over two integer widths
// ---------------------------------------------------------------------------

/// Exact integer arithmetic used for scaled costs. Implemented for `i128`
/// (fast path, chosen only when a worst-case sum provably fits) and `BigInt`.
trait CostNum: Clone + Ord + std::fmt::Debug {
    fn zero() -> Self;
    fn from_bigint(v: &BigInt) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn to_bigint(&self) -> BigInt;
}

impl CostNum for i128 {
    fn zero() -> Self {
        0
    }
    fn from_bigint(v: &BigInt) -> Self {
        v.to_i128().expect("value fits i128 by the worst-case bound")
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl CostNum for BigInt {
    fn zero() -> Self {
        <BigInt as Zero>::zero()
    }
    fn from_bigint(v: &BigInt) -> Self {
        v.clone()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn to_bigint(&self) -> BigInt {
        self.clone()
    }
}

// ---------------------------------------------------------------------------
// Search
// ---------------------------------------------------------------------------

/// Branch order within a step: cost-bearing kinds first, then the free
/// residency and staging bits they may have forced.
const KIND_ORDER: [VarKind; 5] = [
    VarKind::Compute,
    VarKind::PageOut,
    VarKind::PageIn,
    VarKind::Resident,
    VarKind::Staged,
];

struct Search<'a, T: CostNum> {
    inst: &'a MilpInstance,
    n: usize,
    head: u128,
    /// Scaled per-slot costs, index 0 unused.
    phi_c: Vec<T>,
    phi_in: Vec<T>,
    phi_out: Vec<T>,
    psi: Vec<T>,
    deadline: T,
    /// `suffix_psi[t]` = total compute time of the forced diagonal runs in
    /// steps after `t`; likewise `suffix_phi` for energy.
    suffix_psi: Vec<T>,
    suffix_phi: Vec<T>,
    /// `pins[kind][t][i]`: fixed value carried by the instance, if any.
    pins: [Vec<Vec<Option<bool>>>; 5],
    /// Denominator converting scaled energy back to the instance's units.
    energy_scale: BigInt,

    // Mutable search state; matrices are 1-based with dummy row/column 0.
    r: Vec<Vec<bool>>,
    sr: Vec<Vec<bool>>,
    sa: Vec<Vec<bool>>,
    mi: Vec<Vec<bool>>,
    mo: Vec<Vec<bool>>,
    /// `sr_need[t][i]`: how many already-branched bits of step `t` require
    /// `resident[t][i]` to be 1 (likewise `sa_need` for `staged`).
    sr_need: Vec<Vec<u32>>,
    sa_need: Vec<Vec<u32>>,
    cost: T,
    time: T,

    best: Option<(T, Schedule)>,
    nodes: u64,
    improvements: u64,
    limit_hit: bool,
    stopped: bool,
    failure: Option<SolveError>,
    started: Instant,
    limits: SolveLimits,
}

impl<'a, T: CostNum> Search<'a, T> {
    /// Count one applied assignment against the limits.
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if let Some(max) = self.limits.max_nodes {
            if self.nodes > max {
                self.limit_hit = true;
                self.stopped = true;
                return false;
            }
        }
        if self.nodes & 0xFFF == 0 {
            if let Some(tl) = self.limits.time_limit {
                if self.started.elapsed() > tl {
                    self.limit_hit = true;
                    self.stopped = true;
                    return false;
                }
            }
        }
        true
    }

    fn pin(&self, kind_idx: usize, t: usize, i: usize) -> Option<bool> {
        self.pins[kind_idx][t][i]
    }

    /// Can `resident[t][i]` still be set to 1? Requires carry support from
    /// the fully decided previous step and no pin to 0.
    fn sr_possible(&self, t: usize, i: usize) -> bool {
        t > 1
            && (self.r[t - 1][i] || self.sr[t - 1][i] || self.mi[t - 1][i])
            && self.pin(3, t, i) != Some(false)
    }

    /// Can `staged[t][i]` still be set to 1?
    fn sa_possible(&self, t: usize, i: usize) -> bool {
        t > 1 && (self.sa[t - 1][i] || self.mo[t - 1][i]) && self.pin(4, t, i) != Some(false)
    }

    /// Memory walk of step `t` with greedy reclamation, in usage units.
    /// `next_sr = None` treats the next step as holding nothing, which frees
    /// maximally and therefore underestimates the true usage (sound before
    /// the next residency row is decided; exact for the final step).
    fn row_within_budget(&self, t: usize, next_sr: Option<&[bool]>) -> bool {
        let n = self.n;
        let mem = &self.inst.mem_units;
        let mut cur: u128 = 0;
        for i in 1..=n {
            if self.sr[t][i] {
                cur += mem[i];
            }
            if self.mi[t][i] {
                cur += mem[i];
            }
        }
        if cur > self.head {
            return false;
        }
        for k in 1..=n {
            if !self.r[t][k] {
                continue;
            }
            cur += mem[k];
            for &i in self.inst.deps[k].iter().chain(std::iter::once(&k)) {
                let kept_next = next_sr.map_or(false, |row| row[i]);
                let used_later = self.inst.users[i].iter().any(|&j| j > k && self.r[t][j]);
                if !kept_next && !self.mo[t][i] && !used_later {
                    cur -= mem[i];
                }
            }
            if cur > self.head {
                return false;
            }
        }
        true
    }

    /// Admissible lower bound on the cost still to be paid after step `t`,
    /// or `None` when some future need is provably unservable under the
    /// instance's pins (a structural dead end).
    fn future_bound(&self, t: usize) -> Option<T> {
        let mut lb = self.suffix_phi[t].clone();
        for i in 1..=t {
            // First step after t whose own operator consumes slot i; those
            // runs are forced, so the tensor must be present then.
            let v = match self.inst.users[i].iter().find(|&&j| j > t) {
                Some(&j) => j,
                None => continue,
            };
            if self.r[t][i] || self.sr[t][i] || self.mi[t][i] {
                continue; // can be carried forward for free
            }
            let mut route: Option<&T> = None;
            // Recompute anywhere up to and including the consuming step.
            if (t + 1..=v).any(|w| self.pin(0, w, i) != Some(false)) {
                route = Some(&self.phi_c[i]);
            }
            // Page back in, which must land strictly before the consumer
            // and needs a staged copy to draw from.
            if (self.sa[t][i] || self.mo[t][i])
                && (t + 1..v).any(|w| self.pin(2, w, i) != Some(false))
            {
                route = match route {
                    Some(c) if c <= &self.phi_in[i] => Some(c),
                    _ => Some(&self.phi_in[i]),
                };
            }
            match route {
                Some(c) => lb = lb.add(c),
                None => return None,
            }
        }
        Some(lb)
    }

    /// Step `t` is fully decided: apply the boundary bounds, then descend or
    /// accept.
    fn row_done(&mut self, t: usize) {
        if t == self.n {
            if self.best.as_ref().map_or(true, |(b, _)| self.cost < *b) {
                self.accept();
            }
            return;
        }
        if self.time.add(&self.suffix_psi[t]) > self.deadline {
            return;
        }
        match self.future_bound(t) {
            None => return,
            Some(lb) => {
                if let Some((bound, _)) = &self.best {
                    if self.cost.add(&lb) >= *bound {
                        return;
                    }
                }
            }
        }
        self.branch(t + 1, 0, 1);
    }

    /// Build the current assignment as a schedule, re-check it against every
    /// generic row of the instance, and install it as the incumbent.
    fn accept(&mut self) {
        let schedule = self.current_schedule();
        let values = values_from_schedule(self.inst, &schedule);
        let bad_rows = self.inst.violated_rows(&values);
        let bad_fixes = self.inst.violated_fixes(&values);
        let claimed = Rat::new(self.cost.to_bigint(), self.energy_scale.clone());
        let objective = self.inst.objective_value(&values);
        if !bad_rows.is_empty() || !bad_fixes.is_empty() || objective != claimed {
            let detail = format!(
                "{} violated rows ({:?}), {} violated fixes, objective {} vs branch cost {}",
                bad_rows.len(),
                bad_rows.iter().map(|c| c.name.clone()).take(4).collect::<Vec<_>>(),
                bad_fixes.len(),
                objective,
                claimed,
            );
            self.failure = Some(SolveError::InternalCheckFailed { detail });
            self.stopped = true;
            return;
        }
        debug_assert!(self.best.as_ref().map_or(true, |(b, _)| self.cost < *b));
        self.best = Some((self.cost.clone(), schedule));
        self.improvements += 1;
    }

    fn current_schedule(&self) -> Schedule {
        let to_mat = |m: &Vec<Vec<bool>>| {
            let mut out = BitMat::zeros(self.n);
            for t in 1..=self.n {
                for i in 1..=self.n {
                    if m[t][i] {
                        out.set(t, i, true);
                    }
                }
            }
            out
        };
        Schedule {
            compute: to_mat(&self.r),
            resident: to_mat(&self.sr),
            staged: to_mat(&self.sa),
            pagein: to_mat(&self.mi),
            pageout: to_mat(&self.mo),
        }
    }

    /// Assign cell (`t`, `kind_idx`, slot `i`), trying the admissible values
    /// in this kind's preferred order.
    fn branch(&mut self, t: usize, kind_idx: usize, i: usize) {
        if self.stopped {
            return;
        }
        if i > self.n {
            match kind_idx {
                3 => {
                    // Residency row settled: the step's usage is now fully
                    // determined up to the next step's residency, and the
                    // previous step's usage is exact.
                    if !self.row_within_budget(t, None) {
                        return;
                    }
                    if t >= 2 {
                        let next = self.sr[t].clone();
                        if !self.row_within_budget(t - 1, Some(&next)) {
                            return;
                        }
                    }
                    // Staging costs nothing, occupies no working memory,
                    // and only ever relaxes later support rules, so the
                    // maximal staging pattern is weakly dominant: derive it
                    // instead of branching, honoring any pins.
                    for i in 1..=self.n {
                        let support =
                            t > 1 && (self.sa[t - 1][i] || self.mo[t - 1][i]);
                        let v = support && self.pin(4, t, i) != Some(false);
                        if !v && (self.pin(4, t, i) == Some(true) || self.sa_need[t][i] > 0) {
                            return; // a forced staging bit has no support
                        }
                        self.sa[t][i] = v;
                    }
                    self.row_done(t);
                    for i in 1..=self.n {
                        self.sa[t][i] = false;
                    }
                }
                _ => self.branch(t, kind_idx + 1, 1),
            }
            return;
        }

        match KIND_ORDER[kind_idx] {
            VarKind::Compute => self.branch_compute(t, i),
            VarKind::PageOut => self.branch_pageout(t, i),
            VarKind::PageIn => self.branch_pagein(t, i),
            VarKind::Resident => self.branch_resident(t, i),
            _ => unreachable!("staging is derived, not branched"),
        }
    }

    /// Does adding one compute of slot `i` in step `t` stay within the
    /// deadline, counting the forced diagonal runs still owed?
    fn compute_fits_deadline(&self, t: usize, i: usize) -> bool {
        let mut projected = self.time.add(&self.psi[i]);
        if i < t {
            projected = projected.add(&self.psi[t]); // this step's own run is still owed
        }
        projected = projected.add(&self.suffix_psi[t]);
        projected <= self.deadline
    }

    fn over_incumbent(&self, delta: &T) -> bool {
        match &self.best {
            Some((bound, _)) => self.cost.add(delta) >= *bound,
            None => false,
        }
    }

    fn branch_compute(&mut self, t: usize, i: usize) {
        let pin = self.pin(0, t, i);
        let allow0 = t != i && pin != Some(true);
        let mut allow1 = pin != Some(false);
        if allow1 {
            let deps_ok = self.inst.deps[i]
                .iter()
                .all(|&d| self.r[t][d] || self.sr_possible(t, d));
            if !deps_ok || !self.compute_fits_deadline(t, i) || self.over_incumbent(&self.phi_c[i])
            {
                allow1 = false;
            }
        }
        for value in [false, true] {
            if self.stopped {
                return;
            }
            if (value && !allow1) || (!value && !allow0) {
                continue;
            }
            if !self.tick() {
                return;
            }
            self.r[t][i] = value;
            let mut forced: Vec<usize> = Vec::new();
            if value {
                self.cost = self.cost.add(&self.phi_c[i]);
                self.time = self.time.add(&self.psi[i]);
                for &d in &self.inst.deps[i] {
                    if !self.r[t][d] {
                        self.sr_need[t][d] += 1;
                        forced.push(d);
                    }
                }
            }
            self.branch(t, 0, i + 1);
            if value {
                for d in forced {
                    self.sr_need[t][d] -= 1;
                }
                self.cost = self.cost.sub(&self.phi_c[i]);
                self.time = self.time.sub(&self.psi[i]);
            }
            self.r[t][i] = false;
        }
    }

    fn branch_pageout(&mut self, t: usize, i: usize) {
        let pin = self.pin(1, t, i);
        let allow0 = pin != Some(true);
        let allow1 = pin != Some(false)
            && self.sr_possible(t, i)
            && !self.over_incumbent(&self.phi_out[i]);
        for value in [false, true] {
            if self.stopped {
                return;
            }
            if (value && !allow1) || (!value && !allow0) {
                continue;
            }
            if !self.tick() {
                return;
            }
            self.mo[t][i] = value;
            if value {
                self.cost = self.cost.add(&self.phi_out[i]);
                self.sr_need[t][i] += 1;
            }
            self.branch(t, 1, i + 1);
            if value {
                self.sr_need[t][i] -= 1;
                self.cost = self.cost.sub(&self.phi_out[i]);
            }
            self.mo[t][i] = false;
        }
    }

    fn branch_pagein(&mut self, t: usize, i: usize) {
        let pin = self.pin(2, t, i);
        let allow0 = pin != Some(true);
        let allow1 = pin != Some(false)
            && self.sa_possible(t, i)
            && !self.over_incumbent(&self.phi_in[i]);
        for value in [false, true] {
            if self.stopped {
                return;
            }
            if (value && !allow1) || (!value && !allow0) {
                continue;
            }
            if !self.tick() {
                return;
            }
            self.mi[t][i] = value;
            if value {
                self.cost = self.cost.add(&self.phi_in[i]);
                self.sa_need[t][i] += 1;
            }
            self.branch(t, 2, i + 1);
            if value {
                self.sa_need[t][i] -= 1;
                self.cost = self.cost.sub(&self.phi_in[i]);
            }
            self.mi[t][i] = false;
        }
    }

    fn branch_resident(&mut self, t: usize, i: usize) {
        let pin = self.pin(3, t, i);
        let needed = self.sr_need[t][i] > 0;
        let allow1 = self.sr_possible(t, i);
        let allow0 = !needed && pin != Some(true);
        for value in [true, false] {
            if self.stopped {
                return;
            }
            if (value && !allow1) || (!value && !allow0) {
                continue;
            }
            if !self.tick() {
                return;
            }
            self.sr[t][i] = value;
            self.branch(t, 3, i + 1);
            self.sr[t][i] = false;
        }
    }

}

// ---------------------------------------------------------------------------
// Scaling and entry points
// ---------------------------------------------------------------------------

fn denominator_lcm(values: &[&Rat]) -> BigInt {
    let mut l = BigInt::one();
    for v in values {
        l = l.lcm(v.denom());
    }
    l
}

/// `value * scale` as an exact integer (the scale is a multiple of the
/// denominator by construction).
fn scaled_int(value: &Rat, scale: &BigInt) -> BigInt {
    let s = value * Rat::from(scale.clone());
    debug_assert!(s.is_integer());
    s.to_integer()
}

fn run_search<T: CostNum>(
    inst: &MilpInstance,
    limits: &SolveLimits,
    head: u128,
    phi: [&[BigInt]; 3],
    psi: &[BigInt],
    deadline: &BigInt,
    energy_scale: &BigInt,
) -> Result<SolveResult, SolveError> {
    let n = inst.n;
    let conv = |src: &[BigInt]| -> Vec<T> { src.iter().map(T::from_bigint).collect() };
    let phi_c = conv(phi[0]);
    let phi_in = conv(phi[1]);
    let phi_out = conv(phi[2]);
    let psi_t: Vec<T> = conv(psi);

    // suffix[t] = Σ_{v > t} value[v], for t in 0..=n.
    let suffix = |vals: &[T]| -> Vec<T> {
        let mut out = vec![T::zero(); n + 1];
        for t in (0..n).rev() {
            out[t] = out[t + 1].add(&vals[t + 1]);
        }
        out
    };
    let suffix_psi = suffix(&psi_t);
    let suffix_phi = suffix(&phi_c);

    let pins = {
        let table = |kind: VarKind| -> Vec<Vec<Option<bool>>> {
            let mut m = vec![vec![None; n + 1]; n + 1];
            for t in 1..=n {
                for i in 1..=n {
                    m[t][i] = inst.vars[inst.var(kind, t, i)].fixed;
                }
            }
            m
        };
        [
            table(VarKind::Compute),
            table(VarKind::PageOut),
            table(VarKind::PageIn),
            table(VarKind::Resident),
            table(VarKind::Staged),
        ]
    };

    let mat = || vec![vec![false; n + 1]; n + 1];
    let mut search = Search {
        inst,
        n,
        head,
        phi_c,
        phi_in,
        phi_out,
        psi: psi_t,
        deadline: T::from_bigint(deadline),
        suffix_psi,
        suffix_phi,
        pins,
        energy_scale: energy_scale.clone(),
        r: mat(),
        sr: mat(),
        sa: mat(),
        mi: mat(),
        mo: mat(),
        sr_need: vec![vec![0; n + 1]; n + 1],
        sa_need: vec![vec![0; n + 1]; n + 1],
        cost: T::zero(),
        time: T::zero(),
        best: None,
        nodes: 0,
        improvements: 0,
        limit_hit: false,
        stopped: false,
        failure: None,
        started: Instant::now(),
        limits: limits.clone(),
    };

    // The empty prefix must already satisfy the forced-diagonal deadline.
    if search.suffix_psi[0] > search.deadline {
        return Ok(SolveResult {
            outcome: SolveOutcome::Infeasible,
            stats: SolveStats { nodes: 0, improvements: 0, elapsed: search.started.elapsed() },
        });
    }

    search.branch(1, 0, 1);

    if let Some(err) = search.failure {
        return Err(err);
    }
    let stats = SolveStats {
        nodes: search.nodes,
        improvements: search.improvements,
        elapsed: search.started.elapsed(),
    };
    let to_pair = |(c, s): (T, Schedule)| (Rat::new(c.to_bigint(), energy_scale.clone()), s);
    let outcome = if search.limit_hit {
        SolveOutcome::LimitReached { incumbent: search.best.map(to_pair) }
    } else {
        match search.best {
            Some(best) => {
                let (energy, schedule) = to_pair(best);
                SolveOutcome::Optimal { energy, schedule }
            }
            None => SolveOutcome::Infeasible,
        }
    };
    Ok(SolveResult { outcome, stats })
}

/// Solve the instance to proven optimality (or an honest limit outcome).
pub fn solve(inst: &MilpInstance, limits: &SolveLimits) -> Result<SolveResult, SolveError> {
    let n = inst.n;
    for i in 1..=n {
        if inst.compute_energy[i].is_negative()
            || inst.pagein_energy[i].is_negative()
            || inst.pageout_energy[i].is_negative()
            || inst.compute_time[i].is_negative()
        {
            return Err(SolveError::NegativeCost { slot: i });
        }
    }

    let zero_stats = |elapsed| SolveStats { nodes: 0, improvements: 0, elapsed };
    let head = match inst.budget_units {
        Some(h) => h,
        None => {
            return Ok(SolveResult {
                outcome: SolveOutcome::Infeasible,
                stats: zero_stats(Duration::ZERO),
            })
        }
    };
    // Every step's own operator runs in place with all of its inputs alive
    // through the position before it, so a step whose inputs alone exceed
    // the headroom dooms every schedule.
    for v in 1..=n {
        let need: u128 = inst.deps[v].iter().map(|&d| inst.mem_units[d]).sum();
        if need > head {
            return Ok(SolveResult {
                outcome: SolveOutcome::Infeasible,
                stats: zero_stats(Duration::ZERO),
            });
        }
    }

    let energy_refs: Vec<&Rat> = (1..=n)
        .flat_map(|i| {
            [&inst.compute_energy[i], &inst.pagein_energy[i], &inst.pageout_energy[i]]
        })
        .collect();
    let energy_scale = denominator_lcm(&energy_refs);
    let time_refs: Vec<&Rat> = (1..=n).map(|i| &inst.compute_time[i]).collect();
    let time_scale = denominator_lcm(&time_refs);

    let scale_all = |src: &[Rat], scale: &BigInt| -> Vec<BigInt> {
        (0..=n)
            .map(|i| if i == 0 { <BigInt as Zero>::zero() } else { scaled_int(&src[i], scale) })
            .collect()
    };
    let phi_c = scale_all(&inst.compute_energy, &energy_scale);
    let phi_in = scale_all(&inst.pagein_energy, &energy_scale);
    let phi_out = scale_all(&inst.pageout_energy, &energy_scale);
    let psi = scale_all(&inst.compute_time, &time_scale);
    // Scaled times are integers, so comparing against the floor is exact.
    let deadline = (&inst.deadline * Rat::from(time_scale)).floor().to_integer();

    // Worst case any prefix sum can reach: every cell pays every cost once.
    let rows = BigInt::from(n as u64);
    let worst_energy: BigInt =
        (1..=n).map(|i| (&phi_c[i] + &phi_in[i]) + &phi_out[i]).sum::<BigInt>() * &rows;
    let worst_time: BigInt =
        (1..=n).map(|i| psi[i].clone()).sum::<BigInt>() * &rows + deadline.abs();
    let fits = BigInt::from(i128::MAX / 4);
    let phi = [phi_c.as_slice(), phi_in.as_slice(), phi_out.as_slice()];
    if worst_energy < fits && worst_time < fits {
        run_search::<i128>(inst, limits, head, phi, &psi, &deadline, &energy_scale)
    } else {
        run_search::<BigInt>(inst, limits, head, phi, &psi, &deadline, &energy_scale)
    }
}

/// [`solve`] with no limits.
pub fn solve_unbounded(inst: &MilpInstance) -> Result<SolveResult, SolveError> {
    solve(inst, &SolveLimits::default())
}

// ---------------------------------------------------------------------------
