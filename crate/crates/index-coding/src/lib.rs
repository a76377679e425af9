//! Index coding for a single broadcast station.
//!
//! A station holds packets that users want, while users already hold
//! other packets as side information. Mixing packets with XOR before
//! broadcasting can serve several users per slot. This crate covers both
//! the static question (clear a fixed batch in minimum time) and the
//! dynamic one (keep queues stable under random arrivals):
//!
//! - [`graph`]: bipartite demand graphs, pruning, the weighted compressed
//!   graph, and a line-oriented text format.
//! - [`actions`]: direct, cycle, and triple-XOR coding actions with
//!   bit-exact execution and GF(2) decodability certification.
//! - [`clearance`]: the maximum-acyclic-subgraph lower bound, exact
//!   solvers for two-user, disjoint-cycle and three-user relay batches,
//!   and an exhaustive optimizer used as the oracle.
//! - [`capacity`]: the time-sharing capacity region of an action set,
//!   decided by a self-contained simplex (exact rationals on small sets).
//! - [`scheduler`]: frame-based queue simulation with two max-weight
//!   selection rules, a stationary randomized policy, and uncoded service.
//! - [`experiment`]: seeded sweep matrices with CSV output.
//! - [`workloads`]: bundled demo instances.
//!
//! Numeric LP code is generic over [`lp::LpScalar`]; the two instantiations
//! used throughout are [`FloatScalar`] and the exact [`ExactScalar`].

pub mod actions;
pub mod capacity;
pub mod clearance;
pub mod cycles;
pub mod experiment;
pub mod gf2;
pub mod graph;
pub mod lp;
pub mod scheduler;
pub mod workloads;

pub use actions::{
    direct_action, double_cycle_action, execute_and_decode, generate_action_set, k_cycle_action,
    verify_linear_code, ActionEntry, ActionKind, ActionSet, ActionSetOptions, CodingAction,
    Message, PacketPayload, PacketRef, TrafficSpec, TrafficType,
};
pub use capacity::{in_capacity_region, max_scaled_rate, CapacityCertificate};
pub use clearance::{
    acyclic_subgraph_bound, disjoint_cycle_clearance, optimal_cyclic_plan, row_column_structure_check,
    solve_auto, three_user_relay_clearance, two_user_clearance, BoundMode, ClearanceResult,
    SolverChoice,
};
pub use cycles::{enumerate_cycles, has_disjoint_cycles};
pub use graph::{DemandGraph, PruneOp, PrunedGraph, UserCycle, WeightedCompressedGraph};
pub use scheduler::{
    mw1_select, mw2_select, run_simulation, step_frame, Algorithm, ArrivalStream, FrameRecord,
    QueueState, SimConfig, SimStats, Stability,
};

/// Floating-point scalar used by the large-instance LP path.
pub type FloatScalar = f64;
/// Exact rational scalar used on small instances for crisp boundaries.
pub type ExactScalar = num_rational::BigRational;
/// Capacity certificate in floating point.
pub type FloatCertificate = capacity::CapacityCertificate<FloatScalar>;
/// Capacity certificate in exact rationals.
pub type ExactCertificate = capacity::CapacityCertificate<ExactScalar>;
