//! Recursive 2-means splitting under a volume cap, and numbered leaf
//! collection.
//!
//! Every node with more than one order is split in two. A branch whose
//! volume is within the cap stays in place as a leaf; an over-cap branch
//! becomes a child node and is split again. When 2-means cannot separate a
//! node (one branch ends up empty, e.g. all points coincide) the node is
//! split greedily by volume instead, so recursion always terminates.
//!
//! Each node's k-means run is seeded from the root seed and the node's
//! `L`/`R` path, so a subtree never depends on how its siblings were built.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::ingest::Order;
use crate::kmeans::{self, KMeansConfig, KMeansError, Point2D};
use crate::numeric::exact_sum;
use crate::rng::derive_seed;

/// Mean Earth radius in meters (IUGG).
const EARTH_RADIUS_M: f64 = 6_371_008.8;
const METERS_PER_DEGREE: f64 = EARTH_RADIUS_M * PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    Degrees,
    Equirectangular,
}

/// Maps an order's (lon, lat) into the plane k-means runs in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Projection {
    /// Raw degrees: x = lon, y = lat.
    Degrees,
    /// Meters: x = lon·cos(lat0)·m, y = lat·m, with m meters per degree.
    Equirectangular { lat0_deg: f64 },
}

impl Projection {
    /// Builds the projection for a dataset; equirectangular uses the mean
    /// latitude of `orders` as its reference.
    pub fn for_orders(mode: DistanceMode, orders: &[Order]) -> Self {
        match mode {
            DistanceMode::Degrees => Projection::Degrees,
            DistanceMode::Equirectangular => {
                let lat0_deg = if orders.is_empty() {
                    0.0
                } else {
                    exact_sum(orders.iter().map(|o| o.lat)) / orders.len() as f64
                };
                Projection::Equirectangular { lat0_deg }
            }
        }
    }

    pub fn project(&self, order: &Order) -> Point2D {
        match *self {
            Projection::Degrees => Point2D::new(order.lon, order.lat),
            Projection::Equirectangular { lat0_deg } => Point2D::new(
                order.lon * lat0_deg.to_radians().cos() * METERS_PER_DEGREE,
                order.lat * METERS_PER_DEGREE,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeConfig {
    pub vol_cap: f64,
    /// When set, a branch also splits while its weight exceeds this cap.
    pub weight_cap: Option<f64>,
    pub kmeans: KMeansConfig,
    pub projection: Projection,
}

impl TreeConfig {
    pub fn new(vol_cap: f64, kmeans: KMeansConfig) -> Self {
        Self {
            vol_cap,
            weight_cap: None,
            kmeans,
            projection: Projection::Degrees,
        }
    }

    fn over_limit(&self, b: &BranchSummary) -> bool {
        b.total_vol > self.vol_cap || self.weight_cap.is_some_and(|w| b.total_weight > w)
    }
}

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("no orders to cluster")]
    EmptyInput,
    #[error("volume cap must be positive and finite, got {0}")]
    InvalidCap(f64),
    #[error(transparent)]
    KMeans(#[from] KMeansError),
}

/// Aggregate of one side of a split. Totals are exact-rounded sums.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchSummary {
    pub members: Vec<String>,
    pub total_vol: f64,
    pub total_weight: f64,
    pub centroid: Point2D,
}

impl BranchSummary {
    /// Summary of `orders`. An empty slice gets zero totals and the
    /// `fallback` centroid.
    pub fn from_orders<'a, I>(orders: I, projection: &Projection, fallback: Point2D) -> Self
    where
        I: IntoIterator<Item = &'a Order>,
        I::IntoIter: Clone,
    {
        let it = orders.into_iter();
        let n = it.clone().count();
        let centroid = if n == 0 {
            fallback
        } else {
            let pts: Vec<Point2D> = it.clone().map(|o| projection.project(o)).collect();
            Point2D::new(
                exact_sum(pts.iter().map(|p| p.x)) / n as f64,
                exact_sum(pts.iter().map(|p| p.y)) / n as f64,
            )
        };
        Self {
            members: it.clone().map(|o| o.id.clone()).collect(),
            total_vol: exact_sum(it.clone().map(|o| o.vol_cbm)),
            total_weight: exact_sum(it.map(|o| o.weight_ton)),
            centroid,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMethod {
    Kmeans,
    VolumeBisection,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterNode {
    /// `L`/`R` steps from the root; empty for the root.
    pub path: String,
    pub depth: usize,
    pub data: Vec<Order>,
    /// Branch index (0 or 1) of each entry of `data`.
    pub labels: Vec<usize>,
    pub branch0: BranchSummary,
    pub branch1: BranchSummary,
    pub left: Option<Box<ClusterNode>>,
    pub right: Option<Box<ClusterNode>>,
    pub split_method: SplitMethod,
}

impl ClusterNode {
    /// Orders of branch 0 or 1, in data order.
    pub fn branch_orders(&self, branch: usize) -> impl Iterator<Item = &Order> {
        self.data
            .iter()
            .zip(&self.labels)
            .filter(move |(_, &l)| l == branch)
            .map(|(o, _)| o)
    }

    /// Pre-order walk over all nodes.
    pub fn nodes(&self) -> Vec<&ClusterNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            if let Some(r) = &n.right {
                stack.push(r);
            }
            if let Some(l) = &n.left {
                stack.push(l);
            }
        }
        out
    }

    pub fn max_depth(&self) -> usize {
        self.nodes().iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn fallback_split_count(&self) -> usize {
        self.nodes()
            .iter()
            .filter(|n| n.split_method == SplitMethod::VolumeBisection)
            .count()
    }
}

/// A numbered leaf: one vehicle's worth of orders.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TerritoryCluster {
    pub cluster_id: usize,
    pub members: Vec<Order>,
    pub total_vol: f64,
    pub total_weight: f64,
    pub centroid: Point2D,
    /// Set only for a single order that exceeds the limits on its own.
    pub over_cap: bool,
}

impl TerritoryCluster {
    /// Rebuilds a cluster from its members, e.g. after reading an export.
    pub fn from_members(cluster_id: usize, members: Vec<Order>, config: &TreeConfig) -> Self {
        let summary = BranchSummary::from_orders(&members, &config.projection, Point2D::new(0.0, 0.0));
        Self {
            cluster_id,
            over_cap: config.over_limit(&summary),
            members,
            total_vol: summary.total_vol,
            total_weight: summary.total_weight,
            centroid: summary.centroid,
        }
    }

    /// Mean (lon, lat) of the members.
    pub fn geographic_centroid(&self) -> Option<(f64, f64)> {
        geographic_mean(&self.members)
    }
}

pub fn geographic_mean(orders: &[Order]) -> Option<(f64, f64)> {
    if orders.is_empty() {
        return None;
    }
    let n = orders.len() as f64;
    Some((
        exact_sum(orders.iter().map(|o| o.lon)) / n,
        exact_sum(orders.iter().map(|o| o.lat)) / n,
    ))
}

fn group_by_label<'a>(orders: &'a [Order], labels: &'a [usize], label: usize) -> impl Iterator<Item = &'a Order> + Clone {
    orders
        .iter()
        .zip(labels)
        .filter(move |(_, &l)| l == label)
        .map(|(o, _)| o)
}

fn summaries(orders: &[Order], labels: &[usize], projection: &Projection) -> (BranchSummary, BranchSummary) {
    let all = BranchSummary::from_orders(orders, projection, Point2D::new(0.0, 0.0));
    (
        BranchSummary::from_orders(group_by_label(orders, labels, 0), projection, all.centroid),
        BranchSummary::from_orders(group_by_label(orders, labels, 1), projection, all.centroid),
    )
}

/// One 2-means split of `orders`; branch index is the k-means label.
/// Either branch may come back empty when the points are inseparable.
pub fn split_node(
    orders: &[Order],
    projection: &Projection,
    config: &KMeansConfig,
) -> Result<(BranchSummary, BranchSummary, Vec<usize>), KMeansError> {
    let points: Vec<Point2D> = orders.iter().map(|o| projection.project(o)).collect();
    let config = KMeansConfig { k: 2, ..*config };
    let result = kmeans::lloyd(&points, &config)?;
    let (b0, b1) = summaries(orders, &result.labels, projection);
    Ok((b0, b1, result.labels))
}

/// Greedy volume split: orders by descending volume (id ascending on ties)
/// each go to the branch with the smaller running volume, then the smaller
/// member count, then branch 0. Needs at least two orders; both branches
/// come back non-empty.
pub fn volume_bisection_fallback(
    orders: &[Order],
    projection: &Projection,
) -> (BranchSummary, BranchSummary, Vec<usize>) {
    debug_assert!(orders.len() >= 2);
    let mut order: Vec<usize> = (0..orders.len()).collect();
    order.sort_by(|&a, &b| {
        orders[b]
            .vol_cbm
            .total_cmp(&orders[a].vol_cbm)
            .then_with(|| orders[a].id.cmp(&orders[b].id))
    });
    let mut labels = vec![0; orders.len()];
    let mut load = [(0.0f64, 0usize); 2];
    for i in order {
        let target = if (load[1].0, load[1].1) < (load[0].0, load[0].1) { 1 } else { 0 };
        labels[i] = target;
        load[target].0 += orders[i].vol_cbm;
        load[target].1 += 1;
    }
    let (b0, b1) = summaries(orders, &labels, projection);
    (b0, b1, labels)
}

/// Builds the splitting tree for `orders`.
pub fn bt_insert(orders: Vec<Order>, config: &TreeConfig) -> Result<ClusterNode, TreeError> {
    if !(config.vol_cap.is_finite() && config.vol_cap > 0.0) {
        return Err(TreeError::InvalidCap(config.vol_cap));
    }
    config.kmeans.validate()?;
    if orders.is_empty() {
        return Err(TreeError::EmptyInput);
    }
    build_node(orders, String::new(), 0, config)
}

fn build_node(data: Vec<Order>, path: String, depth: usize, config: &TreeConfig) -> Result<ClusterNode, TreeError> {
    let projection = &config.projection;
    if data.len() < 2 {
        let labels = vec![0; data.len()];
        let (branch0, branch1) = summaries(&data, &labels, projection);
        return Ok(ClusterNode {
            path,
            depth,
            data,
            labels,
            branch0,
            branch1,
            left: None,
            right: None,
            split_method: SplitMethod::None,
        });
    }

    let kmeans_config = KMeansConfig {
        seed: derive_seed(config.kmeans.seed, &path),
        ..config.kmeans
    };
    let (mut branch0, mut branch1, mut labels) = split_node(&data, projection, &kmeans_config)?;
    let mut split_method = SplitMethod::Kmeans;
    if branch0.is_empty() || branch1.is_empty() {
        (branch0, branch1, labels) = volume_bisection_fallback(&data, projection);
        split_method = SplitMethod::VolumeBisection;
    }

    let child = |branch: &BranchSummary, label: usize, step: char| -> Result<Option<Box<ClusterNode>>, TreeError> {
        if branch.members.len() < 2 || !config.over_limit(branch) {
            return Ok(None);
        }
        let members: Vec<Order> = group_by_label(&data, &labels, label).cloned().collect();
        let mut child_path = path.clone();
        child_path.push(step);
        build_node(members, child_path, depth + 1, config).map(|n| Some(Box::new(n)))
    };
    let left = child(&branch0, 0, 'L')?;
    let right = child(&branch1, 1, 'R')?;

    Ok(ClusterNode {
        path,
        depth,
        data,
        labels,
        branch0,
        branch1,
        left,
        right,
        split_method,
    })
}

/// Collects leaves in pre-order: at each node branch 0 then branch 1 (each
/// if within the limits), then the left subtree, then the right. Numbering
/// starts at 1. A lone order that is over the limits by itself is emitted
/// with `over_cap` set.
pub fn traverse_leaves(root: &ClusterNode, config: &TreeConfig) -> Vec<TerritoryCluster> {
    let mut clusters = Vec::new();
    collect(root, config, &mut clusters);
    debug_assert_eq!(
        leaf_node_count(Some(root)),
        root.nodes().iter().filter(|n| n.left.is_none() && n.right.is_none()).count()
    );
    clusters
}

fn collect(node: &ClusterNode, config: &TreeConfig, out: &mut Vec<TerritoryCluster>) {
    for (label, branch, child) in [(0, &node.branch0, &node.left), (1, &node.branch1, &node.right)] {
        if branch.is_empty() || child.is_some() {
            continue;
        }
        let over_cap = config.over_limit(branch);
        debug_assert!(!over_cap || branch.members.len() == 1);
        out.push(TerritoryCluster {
            cluster_id: out.len() + 1,
            members: node.branch_orders(label).cloned().collect(),
            total_vol: branch.total_vol,
            total_weight: branch.total_weight,
            centroid: branch.centroid,
            over_cap,
        });
    }
    for child in [&node.left, &node.right].into_iter().flatten() {
        collect(child, config, out);
    }
}

/// Number of childless nodes, counted the way the recursive traversal
/// returns it: 0 for a missing node, 1 for a childless one, else the sum
/// over both children.
pub fn leaf_node_count(node: Option<&ClusterNode>) -> usize {
    match node {
        None => 0,
        Some(n) if n.left.is_none() && n.right.is_none() => 1,
        Some(n) => leaf_node_count(n.left.as_deref()) + leaf_node_count(n.right.as_deref()),
    }
}

/// The partition as it stood after splitting down to `depth`: subtrees
/// below that depth are shown whole. Groups come in traversal order.
pub fn groups_at_depth(root: &ClusterNode, depth: usize) -> Vec<Vec<Order>> {
    fn walk(node: &ClusterNode, depth: usize, out: &mut Vec<Vec<Order>>) {
        let mut deferred = Vec::new();
        for (label, branch, child) in [(0, &node.branch0, &node.left), (1, &node.branch1, &node.right)] {
            if branch.is_empty() {
                continue;
            }
            match child {
                Some(c) if node.depth < depth => deferred.push(c),
                _ => out.push(node.branch_orders(label).cloned().collect()),
            }
        }
        for c in deferred {
            walk(c, depth, out);
        }
    }
    let mut out = Vec::new();
    walk(root, depth, &mut out);
    out
}

/// Splits `orders` and returns the numbered clusters with the tree.
pub fn cluster_orders(orders: Vec<Order>, config: &TreeConfig) -> Result<(Vec<TerritoryCluster>, Option<ClusterNode>), TreeError> {
    if orders.is_empty() {
        return Ok((Vec::new(), None));
    }
    let root = bt_insert(orders, config)?;
    let clusters = traverse_leaves(&root, config);
    Ok((clusters, Some(root)))
}
