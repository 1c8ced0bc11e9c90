//! Python bindings for `territory_core`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use territory_core::capacity_tree::{self, DistanceMode, Projection, TerritoryCluster, TreeConfig};
use territory_core::ingest::{self, Caps, Order, Schema};
use territory_core::kmeans::{self, KMeansConfig, Point2D};
use territory_core::report;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Order", module = "territory", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyOrder {
    inner: Order,
}

#[pymethods]
impl PyOrder {
    #[new]
    fn new(id: String, vol_cbm: f64, weight_ton: f64, lon: f64, lat: f64) -> PyResult<Self> {
        let inner = Order::new(id, vol_cbm, weight_ton, lon, lat);
        inner.validate().map_err(PyValueError::new_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn id(&self) -> &str {
        &self.inner.id
    }

    #[getter]
    fn vol_cbm(&self) -> f64 {
        self.inner.vol_cbm
    }

    #[getter]
    fn weight_ton(&self) -> f64 {
        self.inner.weight_ton
    }

    #[getter]
    fn lon(&self) -> f64 {
        self.inner.lon
    }

    #[getter]
    fn lat(&self) -> f64 {
        self.inner.lat
    }

    fn __repr__(&self) -> String {
        let o = &self.inner;
        format!(
            "Order(id={:?}, vol_cbm={}, weight_ton={}, lon={}, lat={})",
            o.id, o.vol_cbm, o.weight_ton, o.lon, o.lat
        )
    }
}

fn wrap_orders(orders: Vec<Order>) -> Vec<PyOrder> {
    orders.into_iter().map(|inner| PyOrder { inner }).collect()
}

fn unwrap_orders(orders: Vec<PyRef<'_, PyOrder>>) -> Vec<Order> {
    orders.iter().map(|o| o.inner.clone()).collect()
}

#[pyclass(name = "KMeansResult", module = "territory", frozen)]
struct PyKMeansResult {
    #[pyo3(get)]
    labels: Vec<usize>,
    #[pyo3(get)]
    centroids: Vec<(f64, f64)>,
    #[pyo3(get)]
    inertia: f64,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    inertia_history: Vec<f64>,
    #[pyo3(get)]
    converged: bool,
}

#[pyclass(name = "TerritoryCluster", module = "territory", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTerritoryCluster {
    inner: TerritoryCluster,
}

#[pymethods]
impl PyTerritoryCluster {
    #[getter]
    fn cluster_id(&self) -> usize {
        self.inner.cluster_id
    }

    #[getter]
    fn members(&self) -> Vec<PyOrder> {
        wrap_orders(self.inner.members.clone())
    }

    #[getter]
    fn member_ids(&self) -> Vec<String> {
        self.inner.members.iter().map(|o| o.id.clone()).collect()
    }

    #[getter]
    fn total_vol(&self) -> f64 {
        self.inner.total_vol
    }

    #[getter]
    fn total_weight(&self) -> f64 {
        self.inner.total_weight
    }

    /// Centroid in the clustering space.
    #[getter]
    fn centroid(&self) -> (f64, f64) {
        (self.inner.centroid.x, self.inner.centroid.y)
    }

    #[getter]
    fn over_cap(&self) -> bool {
        self.inner.over_cap
    }

    fn __len__(&self) -> usize {
        self.inner.members.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "TerritoryCluster(cluster_id={}, size={}, total_vol={})",
            self.inner.cluster_id,
            self.inner.members.len(),
            self.inner.total_vol
        )
    }
}

fn unwrap_clusters(clusters: Vec<PyRef<'_, PyTerritoryCluster>>) -> Vec<TerritoryCluster> {
    clusters.iter().map(|c| c.inner.clone()).collect()
}

fn parse_distance(distance: &str) -> PyResult<DistanceMode> {
    match distance {
        "degrees" => Ok(DistanceMode::Degrees),
        "equirectangular" => Ok(DistanceMode::Equirectangular),
        other => Err(PyValueError::new_err(format!("unknown distance mode {other:?}"))),
    }
}

fn delimiter_byte(delimiter: &str) -> PyResult<u8> {
    match delimiter.as_bytes() {
        [b] => Ok(*b),
        _ => Err(PyValueError::new_err("delimiter must be a single ASCII character")),
    }
}

type Rejected = Vec<(usize, String)>;

/// Parse an order table. Returns `(orders, rejected)` where `rejected` is a
/// list of `(row, reason)`.
#[pyfunction]
#[pyo3(signature = (text, delimiter=",", id_col="origin", vol_col="vol_cbm", weight_col="weight_ton", lon_col="partner_longitude", lat_col="partner_latitude"))]
fn parse_orders(
    text: &str,
    delimiter: &str,
    id_col: &str,
    vol_col: &str,
    weight_col: &str,
    lon_col: &str,
    lat_col: &str,
) -> PyResult<(Vec<PyOrder>, Rejected)> {
    let schema = Schema {
        id: id_col.into(),
        vol_cbm: vol_col.into(),
        weight_ton: weight_col.into(),
        lon: lon_col.into(),
        lat: lat_col.into(),
    };
    let parsed = ingest::parse_orders(text.as_bytes(), &schema, delimiter_byte(delimiter)?).map_err(value_error)?;
    let rejected = parsed.rejected.into_iter().map(|r| (r.row, r.reason)).collect();
    Ok((wrap_orders(parsed.orders), rejected))
}

/// Split orders into `(eligible, oversized)`.
#[pyfunction]
#[pyo3(signature = (orders, vol_cap=ingest::DEFAULT_VOL_CAP, weight_cap=ingest::DEFAULT_WEIGHT_CAP))]
fn partition_oversized(
    orders: Vec<PyRef<'_, PyOrder>>,
    vol_cap: f64,
    weight_cap: f64,
) -> PyResult<(Vec<PyOrder>, Vec<PyOrder>)> {
    let caps = Caps { vol_cap, weight_cap };
    caps.validate().map_err(value_error)?;
    let r = ingest::partition_oversized(unwrap_orders(orders), caps);
    Ok((wrap_orders(r.eligible), wrap_orders(r.oversized)))
}

/// Seeded k-means over `(x, y)` points.
#[pyfunction(name = "kmeans")]
#[pyo3(signature = (points, k=2, seed=0, max_iterations=300, rel_tolerance=1e-4))]
fn run_kmeans(
    points: Vec<(f64, f64)>,
    k: usize,
    seed: u64,
    max_iterations: usize,
    rel_tolerance: f64,
) -> PyResult<PyKMeansResult> {
    let points: Vec<Point2D> = points.into_iter().map(|(x, y)| Point2D::new(x, y)).collect();
    let config = KMeansConfig {
        k,
        seed,
        max_iterations,
        rel_tolerance,
    };
    let r = kmeans::lloyd(&points, &config).map_err(value_error)?;
    Ok(PyKMeansResult {
        labels: r.labels,
        centroids: r.centroids.iter().map(|c| (c.x, c.y)).collect(),
        inertia: r.inertia,
        iterations: r.iterations,
        inertia_history: r.inertia_history,
        converged: r.converged,
    })
}

/// Recursive 2-means split of `orders` until every cluster fits `vol_cap`.
/// Passing `weight_cap` also keeps every cluster's weight within it.
#[pyfunction]
#[pyo3(signature = (orders, vol_cap=ingest::DEFAULT_VOL_CAP, seed=0, distance="degrees", weight_cap=None, max_iterations=300, rel_tolerance=1e-4))]
fn cluster_orders(
    orders: Vec<PyRef<'_, PyOrder>>,
    vol_cap: f64,
    seed: u64,
    distance: &str,
    weight_cap: Option<f64>,
    max_iterations: usize,
    rel_tolerance: f64,
) -> PyResult<Vec<PyTerritoryCluster>> {
    let orders = unwrap_orders(orders);
    let config = TreeConfig {
        vol_cap,
        weight_cap,
        kmeans: KMeansConfig {
            k: 2,
            seed,
            max_iterations,
            rel_tolerance,
        },
        projection: Projection::for_orders(parse_distance(distance)?, &orders),
    };
    let (clusters, _) = capacity_tree::cluster_orders(orders, &config).map_err(value_error)?;
    Ok(clusters.into_iter().map(|inner| PyTerritoryCluster { inner }).collect())
}

/// Cluster and fleet summary as a JSON string.
#[pyfunction]
#[pyo3(signature = (clusters, oversized, vol_cap=ingest::DEFAULT_VOL_CAP))]
fn summarize_json(
    clusters: Vec<PyRef<'_, PyTerritoryCluster>>,
    oversized: Vec<PyRef<'_, PyOrder>>,
    vol_cap: f64,
) -> PyResult<String> {
    let r = report::summarize(&unwrap_clusters(clusters), &unwrap_orders(oversized), vol_cap);
    serde_json::to_string(&r).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyfunction]
fn export_clusters_csv(clusters: Vec<PyRef<'_, PyTerritoryCluster>>) -> String {
    report::export_clusters_csv(&unwrap_clusters(clusters))
}

#[pyfunction]
fn export_geojson(clusters: Vec<PyRef<'_, PyTerritoryCluster>>) -> String {
    report::export_geojson(&unwrap_clusters(clusters))
}

#[pyfunction]
#[pyo3(signature = (clusters, oversized=Vec::new()))]
fn export_svg_plot(clusters: Vec<PyRef<'_, PyTerritoryCluster>>, oversized: Vec<PyRef<'_, PyOrder>>) -> String {
    report::export_svg_plot(&unwrap_clusters(clusters), &unwrap_orders(oversized))
}

/// Runs the command-line tool with `args` (without the program name) and
/// returns its exit code.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> i32 {
    let argv: Vec<String> = std::iter::once("territory".to_string()).chain(args).collect();
    py.detach(|| territory_core::cli::main_with_args(argv))
}

#[pymodule]
pub fn territory(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOrder>()?;
    m.add_class::<PyKMeansResult>()?;
    m.add_class::<PyTerritoryCluster>()?;
    m.add_function(wrap_pyfunction!(parse_orders, m)?)?;
    m.add_function(wrap_pyfunction!(partition_oversized, m)?)?;
    m.add_function(wrap_pyfunction!(run_kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(cluster_orders, m)?)?;
    m.add_function(wrap_pyfunction!(summarize_json, m)?)?;
    m.add_function(wrap_pyfunction!(export_clusters_csv, m)?)?;
    m.add_function(wrap_pyfunction!(export_geojson, m)?)?;
    m.add_function(wrap_pyfunction!(export_svg_plot, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add("DEFAULT_VOL_CAP", ingest::DEFAULT_VOL_CAP)?;
    m.add("DEFAULT_WEIGHT_CAP", ingest::DEFAULT_WEIGHT_CAP)?;
    Ok(())
}
