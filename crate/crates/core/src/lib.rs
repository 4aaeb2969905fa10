//! Adaptive cluster sampling (ACS) compared against simple random sampling
//! (SRS) on gridded count populations.
//!
//! The crate covers population generation, the two designs plus
//! traditional cluster sampling, their estimators, the closed-form
//! efficiency analysis and a replicated Monte Carlo harness.

pub mod config;
pub mod designs;
pub mod efficiency;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod io;
pub mod population;
pub mod rng;
pub mod svg;

pub use designs::{
    acs_from_initial, draw_acs, draw_cluster_sample, draw_paired, draw_srs, expand_network, partition_into_networks,
    AcsSample, ClusterPartitionSpec, ClusterSample, Condition, Neighborhood, Network, NetworkPartition, SrsSample,
};
pub use efficiency::{
    decompose_sum_of_squares, efficiency_report, feasible_region, kappa_values, superiority_condition, variance_ratio,
    DecompositionReport, EfficiencyReport, FeasibleRegion,
};
pub use error::{Error, Result};
pub use estimators::{estimate_acs, estimate_cluster, estimate_srs, ClusterData, Design, EstimateReport};
pub use harness::{
    run_experiment, run_replicated_comparison, ExperimentConfig, ExperimentResult, PopulationSpec, SweepResult,
    TrendReport,
};
pub use population::{
    bin_points_to_frame, generate_cluster_points, generate_clustered_frame, generate_count_field,
    variance_to_mean_ratio, ClusterSpec, DispersionSpec, Family, GridFrame,
};
pub use rng::RngSeed;
