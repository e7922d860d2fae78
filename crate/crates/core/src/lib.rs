//! Kinodynamic planning in continuous state spaces with weighted A* and
//! soft duplicate detection.
//!
//! The search never prunes near-duplicate states. Instead each new state
//! gets a duplicity score in `[0, 1]` against the states already seen, and
//! its heuristic is inflated by `max(ε_max · dup, ε₀)`. Duplicity can be
//! measured by plain distance or by how much the short-horizon subtrees of
//! two states overlap; the latter is tabulated offline per vehicle.

pub mod duplicity;
pub mod error;
pub mod geometry;
pub mod heuristic;
pub mod kdtree;
pub mod overlap;
pub mod rrt;
pub mod search;
pub mod world;

pub use error::{GeometryError, HeuristicError, ParseError, PlanError, TableError};
pub use geometry::{
    distance, relative_config, ControlInput, DynamicsModel, MetricWeights, ModelKind,
    MotionPrimitive, RelConfig, State,
};
pub use heuristic::DistanceField;
pub use overlap::{OverlapParams, OverlapTable, Subtree};
pub use world::GridMap;
