//! In-memory run: ingest, pre-filter, split, collect, summarize, render.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity_tree::{self, ClusterNode, DistanceMode, Projection, TerritoryCluster, TreeConfig, TreeError};
use crate::ingest::{self, Caps, IngestError, IngestResult, RowRejection, Schema};
use crate::kmeans::KMeansConfig;
use crate::report::{self, ClusterReport, SummaryOptions};

pub const CAP_BOUNDARY_NOTE: &str = "single orders with volume equal to the volume cap are eliminated by the \
pre-filter (volume >= cap), while clusters whose total volume equals the cap are accepted (volume <= cap)";

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub caps: Caps,
    pub seed: u64,
    pub distance: DistanceMode,
    pub strict_weight: bool,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub schema: Schema,
    pub delimiter: u8,
    pub plot: bool,
    pub plot_depths: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let kmeans = KMeansConfig::default();
        Self {
            caps: Caps::default(),
            seed: kmeans.seed,
            distance: DistanceMode::Degrees,
            strict_weight: false,
            max_iterations: kmeans.max_iterations,
            rel_tolerance: kmeans.rel_tolerance,
            schema: Schema::default(),
            delimiter: b',',
            plot: true,
            plot_depths: false,
        }
    }
}

impl PipelineConfig {
    pub fn kmeans(&self) -> KMeansConfig {
        KMeansConfig {
            k: 2,
            seed: self.seed,
            max_iterations: self.max_iterations,
            rel_tolerance: self.rel_tolerance,
        }
    }

    pub fn tree_config(&self, projection: Projection) -> TreeConfig {
        TreeConfig {
            vol_cap: self.caps.vol_cap,
            weight_cap: self.strict_weight.then_some(self.caps.weight_cap),
            kmeans: self.kmeans(),
            projection,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

impl PipelineError {
    /// Short machine-readable error class.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Ingest(IngestError::MissingColumn(_)) => "missing_column",
            PipelineError::Ingest(IngestError::DuplicateIds(_)) => "duplicate_ids",
            PipelineError::Ingest(IngestError::InvalidCaps { .. }) => "invalid_config",
            PipelineError::Ingest(IngestError::Csv(_)) => "csv",
            PipelineError::Tree(_) => "clustering",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub vol_cap: f64,
    pub weight_cap: f64,
    pub seed: u64,
    pub distance: String,
    pub strict_weight: bool,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    pub row: usize,
    pub reason: String,
}

impl From<&RowRejection> for RejectedRow {
    fn from(r: &RowRejection) -> Self {
        Self {
            row: r.row,
            reason: r.reason.clone(),
        }
    }
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub clusters: ClusterReport,
    pub rejected: Vec<RejectedRow>,
    pub notes: Vec<String>,
    pub config: ConfigEcho,
}

/// Rendered output files, keyed by file name.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, t)| t.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub ingest: IngestResult,
    pub projection: Projection,
    pub tree: Option<ClusterNode>,
    pub clusters: Vec<TerritoryCluster>,
    pub report: RunReport,
    pub artifacts: Artifacts,
}

pub fn run_pipeline<R: Read>(source: R, config: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    let ingested = ingest::ingest(source, &config.schema, config.delimiter, config.caps)?;
    cluster_ingested(ingested, config)
}

/// Runs everything after ingestion.
pub fn cluster_ingested(ingested: IngestResult, config: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    let projection = Projection::for_orders(config.distance, &ingested.eligible);
    let tree_config = config.tree_config(projection);
    let (clusters, tree) = capacity_tree::cluster_orders(ingested.eligible.clone(), &tree_config)?;

    let summary = report::summarize_with(
        &clusters,
        &ingested.oversized,
        &SummaryOptions {
            vol_cap: config.caps.vol_cap,
            weight_cap: tree_config.weight_cap,
            projection,
            fallback_split_count: tree.as_ref().map_or(0, ClusterNode::fallback_split_count),
        },
    );
    let run_report = RunReport {
        clusters: summary,
        rejected: ingested.rejected.iter().map(RejectedRow::from).collect(),
        notes: vec![CAP_BOUNDARY_NOTE.to_string()],
        config: ConfigEcho {
            vol_cap: config.caps.vol_cap,
            weight_cap: config.caps.weight_cap,
            seed: config.seed,
            distance: match config.distance {
                DistanceMode::Degrees => "degrees".into(),
                DistanceMode::Equirectangular => "equirectangular".into(),
            },
            strict_weight: config.strict_weight,
            max_iterations: config.max_iterations,
            rel_tolerance: config.rel_tolerance,
        },
    };

    let mut report_json = serde_json::to_string_pretty(&run_report).expect("report serializes");
    report_json.push('\n');
    let mut files = vec![
        ("clusters.csv".to_string(), report::export_clusters_csv(&clusters)),
        ("clusters.geojson".to_string(), report::export_geojson(&clusters)),
        ("report.json".to_string(), report_json),
        (
            "oversized.csv".to_string(),
            report::export_oversized_csv(&ingested.oversized, config.caps),
        ),
    ];
    if config.plot {
        files.push(("plot.svg".to_string(), report::export_svg_plot(&clusters, &ingested.oversized)));
    }
    if config.plot_depths {
        if let Some(root) = &tree {
            for depth in 0..=root.max_depth() {
                let groups = capacity_tree::groups_at_depth(root, depth);
                let numbered: Vec<(usize, &[ingest::Order])> =
                    groups.iter().enumerate().map(|(i, g)| (i + 1, g.as_slice())).collect();
                let title = format!("split depth {depth}: {} groups", numbered.len());
                files.push((
                    format!("plot_depth_{depth}.svg"),
                    report::render_groups_svg(&title, &numbered, &ingested.oversized),
                ));
            }
        }
    }

    Ok(PipelineOutput {
        ingest: ingested,
        projection,
        tree,
        clusters,
        report: run_report,
        artifacts: Artifacts { files },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "origin,vol_cbm,weight_ton,partner_longitude,partner_latitude\n";

    #[test]
    fn small_run_produces_all_files() {
        let text = format!("{HEADER}a,1.5,0.1,106.80,-6.20\nb,1.5,0.1,106.81,-6.20\nc,1.5,0.1,106.90,-6.30\nd,1.5,0.1,106.91,-6.30\nbig,3.0,0.1,106.85,-6.25\nbad,x,0,0,0\n");
        let config = PipelineConfig {
            plot_depths: true,
            ..Default::default()
        };
        let out = run_pipeline(text.as_bytes(), &config).unwrap();
        assert_eq!(out.clusters.len(), 4);
        assert_eq!(out.report.rejected.len(), 1);
        assert_eq!(out.report.clusters.fleet.oversized_count, 1);
        for name in ["clusters.csv", "clusters.geojson", "report.json", "plot.svg", "oversized.csv", "plot_depth_0.svg", "plot_depth_1.svg"] {
            assert!(out.artifacts.get(name).is_some(), "{name}");
        }
        let json = out.artifacts.get("report.json").unwrap();
        let top_level: Vec<&str> = json
            .lines()
            .filter(|l| l.starts_with("  \"") )
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        assert_eq!(top_level, ["cluster_count", "per_cluster", "fleet", "rejected", "notes", "config"]);
        let parsed: RunReport = serde_json::from_str(json).unwrap();
        assert_eq!(parsed, out.report);
    }

    #[test]
    fn report_recomputes_from_exported_csv() {
        let mut text = String::from(HEADER);
        let mut rng = crate::rng::SplitMix64::new(3);
        for i in 0..300 {
            text.push_str(&format!(
                "o{i},{},{},{},{}\n",
                0.05 + 1.45 * rng.next_f64(),
                rng.next_f64(),
                106.5 + 0.5 * rng.next_f64(),
                -6.5 + 0.5 * rng.next_f64()
            ));
        }
        for distance in [DistanceMode::Degrees, DistanceMode::Equirectangular] {
            let config = PipelineConfig { distance, ..Default::default() };
            let out = run_pipeline(text.as_bytes(), &config).unwrap();
            let groups = report::parse_clusters_csv(out.artifacts.get("clusters.csv").unwrap()).unwrap();
            let all: Vec<_> = groups.iter().flat_map(|(_, m)| m.iter().cloned()).collect();
            let tree_config = config.tree_config(Projection::for_orders(distance, &all));
            let rebuilt: Vec<_> = groups
                .into_iter()
                .map(|(id, members)| TerritoryCluster::from_members(id, members, &tree_config))
                .collect();
            let again = report::summarize_with(
                &rebuilt,
                &out.ingest.oversized,
                &SummaryOptions {
                    vol_cap: config.caps.vol_cap,
                    weight_cap: None,
                    projection: tree_config.projection,
                    fallback_split_count: out.report.clusters.fleet.fallback_split_count,
                },
            );
            assert_eq!(again, out.report.clusters);
        }
    }
}
