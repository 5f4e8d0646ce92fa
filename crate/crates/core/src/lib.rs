//! Analytical model, proportional-fair contention window allocation and
//! slot-level simulator for multirate, non-saturated 802.11 DCF networks.

pub mod dcf_sim;
pub mod fairness_opt;
pub mod fixed_point;
pub mod params;
pub mod slot_model;
pub mod station_chain;

pub use fairness_opt::{optimize, AllocationResult, Criterion, OptError, OptimizerOptions};
pub use fixed_point::{solve_equilibrium, Equilibrium, SolveError, SolverOptions};
pub use params::{Network, ParamError, PhyTimingParams, Scenario, StationConfig};
pub use slot_model::{SlotBreakdown, TauVector};
