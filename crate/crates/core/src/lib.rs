//! Capacity-constrained territory planning for delivery orders.
//!
//! Orders are read from CSV, single orders that cannot fit a vehicle are set
//! aside, and the rest are split by recursive 2-means until every cluster's
//! volume is within the vehicle cap. Clusters are numbered by a pre-order
//! walk of the splitting tree and exported as CSV, GeoJSON, JSON and SVG.

pub mod capacity_tree;
pub mod cli;
pub mod ingest;
pub mod kmeans;
pub mod numeric;
pub mod pipeline;
pub mod report;
pub mod rng;

pub use capacity_tree::{
    bt_insert, cluster_orders, traverse_leaves, ClusterNode, DistanceMode, Projection, TerritoryCluster, TreeConfig,
};
pub use ingest::{Caps, IngestResult, Order, Schema};
pub use kmeans::{lloyd, KMeansConfig, KMeansResult, Point2D};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutput};
pub use report::{summarize, ClusterReport};
