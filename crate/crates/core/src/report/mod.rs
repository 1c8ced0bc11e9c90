//! Cluster and fleet summaries plus file exports.

mod csv_export;
mod geojson;
mod svg;

pub use csv_export::{export_clusters_csv, export_oversized_csv, parse_clusters_csv, ReadBackError, CLUSTER_CSV_HEADER};
pub use geojson::export_geojson;
pub use svg::{export_svg_plot, render_groups_svg};

use serde::{Deserialize, Serialize};

use crate::capacity_tree::{Projection, TerritoryCluster};
use crate::ingest::Order;
use crate::numeric::exact_sum;

pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub cluster_id: usize,
    pub size: usize,
    pub total_vol: f64,
    pub total_weight: f64,
    /// `total_vol / vol_cap`, clamped to 1 for flagged over-cap singletons.
    pub utilization: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weight_utilization: Option<f64>,
    pub mean_member_distance_to_centroid: f64,
    pub over_cap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetStats {
    pub total_vol: f64,
    pub mean_utilization: f64,
    /// Counts per utilization decile: `[0, 0.1)`, ..., `[0.9, 1.0]`.
    pub utilization_histogram: Vec<usize>,
    pub oversized_count: usize,
    pub fallback_split_count: usize,
    pub over_cap_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub cluster_count: usize,
    pub per_cluster: Vec<ClusterStats>,
    pub fleet: FleetStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryOptions {
    pub vol_cap: f64,
    /// Adds a weight utilization column when set (strict-weight runs).
    pub weight_cap: Option<f64>,
    /// Space the cluster centroids live in.
    pub projection: Projection,
    pub fallback_split_count: usize,
}

impl SummaryOptions {
    pub fn new(vol_cap: f64) -> Self {
        Self {
            vol_cap,
            weight_cap: None,
            projection: Projection::Degrees,
            fallback_split_count: 0,
        }
    }
}

/// Utilization decile, half-open bins with the top bin closed.
pub fn histogram_bin(utilization: f64) -> usize {
    let u = utilization.clamp(0.0, 1.0);
    ((u * HISTOGRAM_BINS as f64).floor() as usize).min(HISTOGRAM_BINS - 1)
}

/// Summary with default options for a volume cap.
pub fn summarize(clusters: &[TerritoryCluster], oversized: &[Order], vol_cap: f64) -> ClusterReport {
    summarize_with(clusters, oversized, &SummaryOptions::new(vol_cap))
}

pub fn summarize_with(clusters: &[TerritoryCluster], oversized: &[Order], options: &SummaryOptions) -> ClusterReport {
    let per_cluster: Vec<ClusterStats> = clusters
        .iter()
        .map(|c| {
            let distances: Vec<f64> = c
                .members
                .iter()
                .map(|o| options.projection.project(o).dist_sq(&c.centroid).sqrt())
                .collect();
            let mean_distance = if distances.is_empty() {
                0.0
            } else {
                exact_sum(distances.iter().copied()) / distances.len() as f64
            };
            ClusterStats {
                cluster_id: c.cluster_id,
                size: c.members.len(),
                total_vol: c.total_vol,
                total_weight: c.total_weight,
                utilization: (c.total_vol / options.vol_cap).min(1.0),
                weight_utilization: options.weight_cap.map(|w| c.total_weight / w),
                mean_member_distance_to_centroid: mean_distance,
                over_cap: c.over_cap,
            }
        })
        .collect();

    let mut histogram = vec![0; HISTOGRAM_BINS];
    for s in &per_cluster {
        histogram[histogram_bin(s.utilization)] += 1;
    }
    let mean_utilization = if per_cluster.is_empty() {
        0.0
    } else {
        exact_sum(per_cluster.iter().map(|s| s.utilization)) / per_cluster.len() as f64
    };

    ClusterReport {
        cluster_count: clusters.len(),
        fleet: FleetStats {
            total_vol: exact_sum(clusters.iter().map(|c| c.total_vol)),
            mean_utilization,
            utilization_histogram: histogram,
            oversized_count: oversized.len(),
            fallback_split_count: options.fallback_split_count,
            over_cap_count: per_cluster.iter().filter(|s| s.over_cap).count(),
        },
        per_cluster,
    }
}

/// Number formatting shared by the text exports: shortest round-trip form.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
