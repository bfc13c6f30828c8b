//! Deterministic, seeded, round-based wireless sensor network simulator.
//!
//! Cluster heads are elected by clustering the multi-hop paths nodes use to
//! reach the base station, taking the nodes of each cluster's representative
//! path as heads. Heads rotate to the strongest member when they run low and
//! the whole election repeats periodically. A randomized-rotation baseline
//! with the same radio model and round mechanics is included for comparison.

pub mod cluster;
pub mod config;
pub mod energy;
pub mod plot;
pub mod report;
pub mod sim;
pub mod traj;

pub use cluster::{
    cluster_trajectories, initial_clusters, recluster, representative_of, ClusterAssignment,
    ClusterError, RepresentativeSet, ThresholdPolicy,
};
pub use energy::{
    analytic_cluster_energy, optimal_cluster_count, ClusterEnergies, EnergyError, FieldParams,
    RadioParams,
};
pub use traj::{
    build_dissimilarity_matrix, one_way_distance, point_to_trajectory_distance,
    read_trajectories_csv, trajectory_distance, DissimilarityMatrix, Point2D, TrajError,
    Trajectory,
};
