//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on a fatal configuration or I/O error (no
//! artifacts are written), 2 when the run completed but some input rows
//! were rejected.

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgAction, Parser, ValueEnum};
use thiserror::Error;

use crate::capacity_tree::DistanceMode;
use crate::ingest::{Caps, Schema, DEFAULT_VOL_CAP, DEFAULT_WEIGHT_CAP};
use crate::pipeline::{run_pipeline, Artifacts, PipelineConfig, PipelineError, PipelineOutput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_REJECTED_ROWS: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistanceArg {
    Degrees,
    Equirectangular,
}

impl From<DistanceArg> for DistanceMode {
    fn from(d: DistanceArg) -> Self {
        match d {
            DistanceArg::Degrees => DistanceMode::Degrees,
            DistanceArg::Equirectangular => DistanceMode::Equirectangular,
        }
    }
}

/// Split delivery orders into vehicle-sized territories by recursive 2-means.
#[derive(Debug, Parser)]
#[command(name = "territory", version)]
pub struct Args {
    /// Order table (CSV with header).
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for the output files; created if missing.
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
    /// Vehicle volume cap in cubic meters.
    #[arg(long = "capacity-cbm", default_value_t = DEFAULT_VOL_CAP)]
    pub capacity_cbm: f64,
    /// Weight cap in tons (pre-filter, and clusters with --strict-weight).
    #[arg(long = "weight-cap-ton", default_value_t = DEFAULT_WEIGHT_CAP)]
    pub weight_cap_ton: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = DistanceArg::Degrees)]
    pub distance: DistanceArg,
    /// Also keep every cluster's weight within the weight cap.
    #[arg(long = "strict-weight")]
    pub strict_weight: bool,
    /// Write plot.svg.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub plot: bool,
    /// Also write plot_depth_<d>.svg for every split depth.
    #[arg(long = "plot-depths")]
    pub plot_depths: bool,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    #[arg(long = "max-iterations", default_value_t = 300)]
    pub max_iterations: usize,
    /// Centroid-shift stopping threshold, relative to the coordinate span.
    #[arg(long = "rel-tolerance", default_value_t = 1e-4)]
    pub rel_tolerance: f64,
    #[arg(long = "col-origin", default_value = "origin")]
    pub col_origin: String,
    #[arg(long = "col-vol-cbm", default_value = "vol_cbm")]
    pub col_vol_cbm: String,
    #[arg(long = "col-weight-ton", default_value = "weight_ton")]
    pub col_weight_ton: String,
    #[arg(long = "col-longitude", default_value = "partner_longitude")]
    pub col_longitude: String,
    #[arg(long = "col-latitude", default_value = "partner_latitude")]
    pub col_latitude: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input_path: PathBuf,
    pub output_dir: PathBuf,
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error("cannot read {}: {source}", path.display())]
    Input { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl RunError {
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "invalid_config",
            RunError::Input { .. } => "input_io",
            RunError::Output { .. } => "output_io",
            RunError::Pipeline(e) => e.kind(),
        }
    }
}

impl TryFrom<Args> for RunConfig {
    type Error = RunError;

    fn try_from(a: Args) -> Result<Self, RunError> {
        if a.input.as_os_str().is_empty() || a.out_dir.as_os_str().is_empty() {
            return Err(RunError::Config("input and output paths must be non-empty".into()));
        }
        if !a.delimiter.is_ascii() {
            return Err(RunError::Config(format!("delimiter {:?} is not ASCII", a.delimiter)));
        }
        let caps = Caps {
            vol_cap: a.capacity_cbm,
            weight_cap: a.weight_cap_ton,
        };
        caps.validate().map_err(|e| RunError::Config(e.to_string()))?;
        let pipeline = PipelineConfig {
            caps,
            seed: a.seed,
            distance: a.distance.into(),
            strict_weight: a.strict_weight,
            max_iterations: a.max_iterations,
            rel_tolerance: a.rel_tolerance,
            schema: Schema {
                id: a.col_origin,
                vol_cbm: a.col_vol_cbm,
                weight_ton: a.col_weight_ton,
                lon: a.col_longitude,
                lat: a.col_latitude,
            },
            delimiter: a.delimiter as u8,
            plot: a.plot,
            plot_depths: a.plot_depths,
        };
        pipeline
            .kmeans()
            .validate()
            .map_err(|e| RunError::Config(e.to_string()))?;
        Ok(RunConfig {
            input_path: a.input,
            output_dir: a.out_dir,
            pipeline,
        })
    }
}

/// Writes every file to a temporary sibling first, then renames them all
/// into place.
fn write_artifacts(dir: &Path, artifacts: &Artifacts) -> Result<(), RunError> {
    let out_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Output { path, source }
    };
    fs::create_dir_all(dir).map_err(out_err(dir))?;
    let mut staged = Vec::with_capacity(artifacts.files.len());
    for (name, contents) in &artifacts.files {
        let mut tmp = tempfile::Builder::new()
            .prefix(&format!(".{name}."))
            .tempfile_in(dir)
            .map_err(out_err(dir))?;
        tmp.write_all(contents.as_bytes()).map_err(out_err(tmp.path()))?;
        tmp.as_file().sync_all().map_err(out_err(tmp.path()))?;
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, target) in staged {
        tmp.persist(&target).map_err(|e| RunError::Output {
            path: target.clone(),
            source: e.error,
        })?;
    }
    Ok(())
}

/// Runs the pipeline on files and writes the artifacts.
pub fn execute(config: &RunConfig) -> Result<PipelineOutput, RunError> {
    let file = File::open(&config.input_path).map_err(|source| RunError::Input {
        path: config.input_path.clone(),
        source,
    })?;
    let output = run_pipeline(BufReader::new(file), &config.pipeline)?;
    write_artifacts(&config.output_dir, &output.artifacts)?;
    Ok(output)
}

pub fn exit_code(output: &PipelineOutput) -> i32 {
    if output.ingest.rejected.is_empty() {
        EXIT_OK
    } else {
        EXIT_REJECTED_ROWS
    }
}

/// Runs and reports to the given streams, returning the exit code.
pub fn run(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let started = Instant::now();
    match execute(config) {
        Ok(output) => {
            let fleet = &output.report.clusters.fleet;
            let _ = writeln!(stdout, "clusters:          {}", output.report.clusters.cluster_count);
            let _ = writeln!(stdout, "mean utilization:  {:.4}", fleet.mean_utilization);
            let _ = writeln!(stdout, "eligible orders:   {}", output.ingest.eligible.len());
            let _ = writeln!(stdout, "oversized orders:  {}", fleet.oversized_count);
            let _ = writeln!(stdout, "rejected rows:     {}", output.ingest.rejected.len());
            let _ = writeln!(stdout, "fallback splits:   {}", fleet.fallback_split_count);
            let _ = writeln!(stdout, "output:            {}", config.output_dir.display());
            let _ = writeln!(stdout, "elapsed:           {:.3}s", started.elapsed().as_secs_f64());
            exit_code(&output)
        }
        Err(e) => {
            report_error(stderr, e.kind(), &e.to_string());
            EXIT_FATAL
        }
    }
}

fn report_error(stderr: &mut dyn Write, kind: &str, message: &str) {
    let message = message.replace('\n', " ");
    let _ = writeln!(stderr, "error[{kind}]: {message}");
}

/// Parses `argv` and runs; the binary's entry point.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let mut stdout = std::io::stdout();
    let mut stderr = std::io::stderr();
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return EXIT_OK;
        }
        Err(e) => {
            let _ = e.print();
            return EXIT_FATAL;
        }
    };
    match RunConfig::try_from(args) {
        Ok(config) => run(&config, &mut stdout, &mut stderr),
        Err(e) => {
            report_error(&mut stderr, e.kind(), &e.to_string());
            EXIT_FATAL
        }
    }
}
