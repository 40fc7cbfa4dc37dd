//! MIG partition management and batch scheduling, evaluated in simulation.
//!
//! The pieces fit together as the managed system does on hardware: a
//! [`catalog::PlacementCatalog`] fixes the device geometry, the
//! [`fsm::ReachabilityTable`] precomputes which layouts remain reachable so
//! online allocation can keep the most future configurations open, the
//! [`predictor`] forecasts peak memory from per-iteration allocator samples,
//! the [`scheduler`] policies place jobs and recover from (or preempt ahead
//! of) OOM errors, and [`sim`] replays it all deterministically to produce
//! throughput, energy, utilization, and turnaround numbers against a
//! sequential full-GPU baseline.

pub mod catalog;
pub mod fsm;
pub mod predictor;
pub mod report;
pub mod scenario;
pub mod scheduler;
pub mod sim;
pub mod trace;

pub use catalog::PlacementCatalog;
pub use fsm::ReachabilityTable;
pub use report::SimReport;
pub use scenario::{Scenario, SimInput};
pub use scheduler::{PolicyKind, SchedulingPolicy};
pub use sim::{run_scenario, run_scenario_logged, run_with_baseline};
