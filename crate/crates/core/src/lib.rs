//! Topology-partitioning localization for indoor wireless sensor networks
//! with unknown obstacles.
//!
//! The pipeline detects segmentation nodes from shortest-path occurrence
//! statistics, splits the network along hop-equidistant bisectors of
//! segmentation-node pairs so no sub-network keeps a convex obstacle
//! corner, localizes each sub-network in its own relative frame, and
//! calibrates the frames onto anchor positions. A seeded Monte-Carlo
//! harness evaluates partitioning (average completion degree) and
//! localization (mean location error) across canonical obstacle layouts.

pub mod deployment;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod localization;
pub mod metrics;
pub mod partitioning;
pub mod pathgraph;
pub mod render;
pub mod segmentation;

pub use deployment::{deploy, deploy_with, measure_distance, Network, Node, RangingModel};
pub use error::{Error, Result};
pub use geometry::{
    build_scenario, ideal_partition_stats, point_in_free_space, segment_blocked, CornerCount,
    IdealStats, Obstacle, Point2D, Scenario,
};
pub use harness::{
    run_batch, run_trial, run_trial_artifacts, split_seed, BatchReport, ExperimentConfig,
    TrialArtifacts,
};
pub use localization::{
    arc_midpoint_locate, calibrate, localize_network, localize_subnetwork, select_references,
    trilaterate, two_circle_locate, CaseTag, FrameTransform, LocalizationResult, ReferenceTriple,
    RelativeFrame,
};
pub use metrics::{acd, acd_term, mle, spo_count, TrialMetrics};
pub use partitioning::{partition, partition_in_order, PartitionMap};
pub use pathgraph::{hop_matrix, occurrence_counts, HopMatrix, OccurrenceTable};
pub use render::{render_svg, write_svg, RenderLayer};
pub use segmentation::{form_pairs, kmeans_two, select_segmentation_nodes, Clustering, SegPair};
