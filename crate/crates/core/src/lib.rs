//! Multi-level bottleneck assignment: instances, matching primitives, greedy
//! heuristics, exact branch-and-bound, column generation, the hardness
//! reduction from three-dimensional matching, and a benchmark harness.

pub mod bench;
pub mod colgen;
pub mod exact;
pub mod greedy;
pub mod instance;
pub mod io;
pub mod layers;
pub mod lp;
pub mod matching;
pub mod reduction;
pub mod weight;

pub use instance::{
    generate_random, InstanceData, InstanceError, MbaInstance, MbaSolution, SolveReport,
    SolveStatus,
};
