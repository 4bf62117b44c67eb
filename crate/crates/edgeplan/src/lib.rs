//! edgeplan: energy-optimal training schedules for memory-constrained
//! devices, integrating activation recomputation with paging to auxiliary
//! storage.
//!
//! The pipeline: build or load a training dataflow graph ([`graph`]),
//! attach per-operator energy/latency/memory costs ([`costmodel`]), lower
//! graph + costs + RAM budget + deadline into an exact 0/1 program
//! ([`milp`]), solve it to proven optimality ([`solver`]) or export it for
//! an external solver ([`lp`]), check and measure the resulting schedule
//! ([`schedule`]), and compile it into a timed execution plan with paging
//! latency hidden behind compute ([`planner`]). [`baselines`] holds the
//! classic single-technique strategies the integrated optimizer is
//! compared against, and [`sweep`] runs those comparisons over instance
//! grids.

pub mod costmodel;
pub mod graph;
pub mod milp;
pub mod oracle;
pub mod par;
pub mod rat;
pub mod schedule;
pub mod solver;
