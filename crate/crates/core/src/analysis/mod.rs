//! Validators and numeric oracles that look at a run from the outside.

pub mod amplify;
pub mod ballsbins;
pub mod coloring;
pub mod lowerbound;

pub use amplify::{amplification_rounds, DomainError};
pub use ballsbins::{bb_enumerate, bb_exact, bb_montecarlo, EmpiricalOccupancy, OccupancyDistribution};
pub use coloring::{
    classify_good_bad, classify_separated, hardness_reduction, interval_floor_violations,
    validate_interval_coloring, ColoringSnapshot, GoodBadLabeling, HardnessError, IntervalReport,
    Label, NodeColoring, VertexColoring,
};
pub use lowerbound::{build_lowerbound_graph, twin_coupling_experiment, TwinConfig, TwinProtocol, TwinStats};
