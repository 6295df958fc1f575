//! File-level commands behind the CLI. Each command reads its inputs from
//! disk, writes its artifacts into the output directory and reports failures
//! tagged with the stage that produced them.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExportFormat, LagRequest, RunConfig};
use crate::diagnostics::{cusum_critical_value, diagnose, CusumReport, DiagnosticsReport, StabilityReport};
use crate::error::Error;
use crate::export::{adjacency_csv, adjacency_dot, cusum_csv, lag_table_csv};
use crate::granger::{assemble_network, CausalityNetwork, NetworkRole};
use crate::model::{ModelDocument, SCHEMA_VERSION};
use crate::panel::{align_panel, interpolate_annual_to_quarterly, load_series_csv, Frequency, Panel, Quarter, RawSeriesSet, VariableKind};
use crate::synth::{default_start, simulate_from, NORMAL_ALGORITHM, RNG_ALGORITHM};
use crate::varx::{fit_coupled, lag_table, CoupledFit, LagTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Usage,
    Ingest,
    Fit,
    Network,
    Diagnostics,
    Simulate,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Usage => 1,
            Stage::Ingest => 2,
            Stage::Fit => 3,
            Stage::Network => 4,
            Stage::Diagnostics => 5,
            Stage::Simulate => 6,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Usage => "usage",
            Stage::Ingest => "ingest",
            Stage::Fit => "fit",
            Stage::Network => "network",
            Stage::Diagnostics => "diagnose",
            Stage::Simulate => "simulate",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage}: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        self.stage.exit_code()
    }
}

type Staged<T> = std::result::Result<T, PipelineError>;

fn at(stage: Stage) -> impl Fn(Error) -> PipelineError {
    move |source| PipelineError { stage, source }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> crate::Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

fn span(set: &RawSeriesSet) -> String {
    match (set.periods().first(), set.periods().last()) {
        (Some(a), Some(b)) => format!("{a}..{b}"),
        _ => "empty".into(),
    }
}

pub struct IngestOutput {
    pub panel: Panel,
    pub log: Vec<String>,
}

/// Loads both raw files, interpolates annual CPI and aligns the result.
pub fn ingest(cfg: &RunConfig) -> Staged<IngestOutput> {
    let usage = at(Stage::Usage);
    let gdp_path = cfg.gdp_csv.as_ref().ok_or_else(|| usage(Error::InvalidArgument("no GDP file given".into())))?;
    let cpi_path = cfg.cpi_csv.as_ref().ok_or_else(|| usage(Error::InvalidArgument("no CPI file given".into())))?;
    cfg.validate().map_err(&usage)?;
    let fail = at(Stage::Ingest);

    let mut log = Vec::new();
    let gdp = load_series_csv(gdp_path, VariableKind::Gdp, Frequency::Quarterly).map_err(&fail)?;
    log.push(format!(
        "gdp: {} quarterly rows, {} countries, {}",
        gdp.len(),
        gdp.labels().len(),
        span(&gdp)
    ));
    let cpi_raw = load_series_csv(cpi_path, VariableKind::Cpi, cfg.cpi_frequency).map_err(&fail)?;
    log.push(format!(
        "cpi: {} {} rows, {} countries, {}",
        cpi_raw.len(),
        cfg.cpi_frequency,
        cpi_raw.labels().len(),
        span(&cpi_raw)
    ));
    let cpi = match cfg.cpi_frequency {
        Frequency::Annual => {
            let q = interpolate_annual_to_quarterly(&cpi_raw, cfg.anchor).map_err(&fail)?;
            log.push(format!(
                "cpi: interpolated annual to quarterly with anchor Q{}, {} quarters, {}",
                cfg.anchor,
                q.len(),
                span(&q)
            ));
            // Every interpolated series is a combination of the same per-year
            // hat functions, so a lagged CPI block plus intercept has rank at
            // most the number of annual observations.
            let n = cpi_raw.labels().len();
            if n + 1 > cpi_raw.len() {
                log.push(format!(
                    "warning: {n} countries with {} annual CPI values; lagged interpolated CPI and the intercept \
                     span at most {} dimensions, so fits on this panel will be singular",
                    cpi_raw.len(),
                    cpi_raw.len()
                ));
            }
            q
        }
        Frequency::Quarterly => {
            log.push("cpi: already quarterly, interpolation skipped".into());
            cpi_raw
        }
    };
    let panel = align_panel(&gdp, &cpi).map_err(&fail)?;
    let quarters = panel.quarters();
    log.push(format!(
        "aligned: T={} n={} {}..{}; dropped {} gdp and {} cpi quarters",
        panel.n_periods(),
        panel.n_countries(),
        quarters[0],
        quarters[quarters.len() - 1],
        gdp.len() - panel.n_periods(),
        cpi.len() - panel.n_periods()
    ));
    Ok(IngestOutput { panel, log })
}

/// Writes `panel.csv` and `ingest.log`.
pub fn cmd_ingest(cfg: &RunConfig) -> Staged<IngestOutput> {
    let out = ingest(cfg)?;
    let fail = at(Stage::Ingest);
    write_file(&cfg.output_dir, "panel.csv", &out.panel.to_csv_string()).map_err(&fail)?;
    let mut log = out.log.join("\n");
    log.push('\n');
    write_file(&cfg.output_dir, "ingest.log", &log).map_err(&fail)?;
    Ok(out)
}

pub struct FitOutput {
    pub fit: CoupledFit,
    pub document: ModelDocument,
    pub lag_table: Option<LagTable>,
}

/// Fits the coupled model at a fixed or selected lag and writes
/// `model.json` (plus `lag_selection.csv` when a lag was selected).
pub fn cmd_fit(cfg: &RunConfig, panel_path: &Path) -> Staged<FitOutput> {
    let usage = at(Stage::Usage);
    cfg.validate().map_err(&usage)?;
    let request = cfg.lag_request().map_err(&usage)?;
    let fail = at(Stage::Fit);
    let panel = Panel::load(panel_path).map_err(&fail)?;
    let (p, table) = match request {
        LagRequest::Fixed(p) => (p, None),
        LagRequest::Select(p_max) => {
            let table = lag_table(&panel, p_max).map_err(&fail)?;
            (table.selection(cfg.criterion.selecting()).chosen_p, Some(table))
        }
    };
    let fit = fit_coupled(&panel, p).map_err(&fail)?;
    let mut document = ModelDocument::from_fit(&fit, &panel, &cfg.hash_with(&panel));
    if let Some(table) = &table {
        document.set_lag_selection(table, cfg.criterion.selecting());
        if cfg.wants(ExportFormat::Csv) {
            write_file(&cfg.output_dir, "lag_selection.csv", &lag_table_csv(table)).map_err(&fail)?;
        }
    }
    write_file(&cfg.output_dir, "model.json", &document.to_json()).map_err(&fail)?;
    Ok(FitOutput {
        fit,
        document,
        lag_table: table,
    })
}

fn max_abs_diff(a: &CoupledFit, b: &CoupledFit) -> f64 {
    let mut worst = 0.0f64;
    for (x, y) in [(&a.gdp_fit, &b.gdp_fit), (&a.cpi_fit, &b.cpi_fit)] {
        let (cx, cy) = (x.coefficient_matrix(), y.coefficient_matrix());
        let scale = 1.0 + cx.amax();
        worst = worst.max((cx - cy).amax() / scale);
    }
    worst
}

pub struct NetworkOutput {
    pub network: CausalityNetwork,
    pub document: ModelDocument,
}

/// Runs every block F-test for the model's lag order and writes adjacency
/// CSVs, DOT graphs and `network.json`.
pub fn cmd_network(cfg: &RunConfig, panel_path: &Path, model_path: &Path) -> Staged<NetworkOutput> {
    cfg.validate().map_err(at(Stage::Usage))?;
    let fail = at(Stage::Network);
    let panel = Panel::load(panel_path).map_err(&fail)?;
    let stored = ModelDocument::load(model_path).map_err(&fail)?;
    let stored_fit = stored.to_coupled_fit(&panel).map_err(&fail)?;
    let fit = fit_coupled(&panel, stored.p).map_err(&fail)?;
    let drift = max_abs_diff(&fit, &stored_fit);
    if !(drift <= 1e-8) {
        return Err(fail(Error::Model(format!(
            "model coefficients differ from a refit on this panel (relative gap {drift:.3e}); refit the model"
        ))));
    }
    let network = assemble_network(&panel, &fit, cfg.alpha, cfg.correction).map_err(&fail)?;
    let mut document = ModelDocument::from_fit(&fit, &panel, &cfg.hash_with(&panel));
    document.lag_selection = stored.lag_selection.clone();
    document.set_network(&network);
    for role in NetworkRole::ALL {
        let adj = network.adjacency(role);
        if cfg.wants(ExportFormat::Csv) {
            write_file(&cfg.output_dir, &format!("adjacency_{}.csv", role.slug()), &adjacency_csv(adj)).map_err(&fail)?;
        }
        if cfg.wants(ExportFormat::Dot) {
            write_file(&cfg.output_dir, &format!("network_{}.dot", role.slug()), &adjacency_dot(adj)).map_err(&fail)?;
        }
    }
    if cfg.wants(ExportFormat::Json) {
        write_file(&cfg.output_dir, "network.json", &document.to_json()).map_err(&fail)?;
    }
    Ok(NetworkOutput { network, document })
}

#[derive(Serialize)]
struct CusumSummary<'a> {
    label: &'a str,
    sup_stat: f64,
    sigma: f64,
    rejected: bool,
}

#[derive(Serialize)]
struct LineSummary<'a> {
    equation: &'static str,
    stable: bool,
    max_modulus: f64,
    eigen_moduli: &'a [f64],
    critical_value: f64,
    cusum: Vec<CusumSummary<'a>>,
}

#[derive(Serialize)]
struct DiagnosticsDocument<'a> {
    schema_version: u32,
    labels: &'a [String],
    p: usize,
    alpha: f64,
    stable: bool,
    cusum_rejected: bool,
    lines: Vec<LineSummary<'a>>,
    config_hash: String,
}

fn line_summary<'a>(stab: &'a StabilityReport, cusum: &'a CusumReport, labels: &'a [String]) -> LineSummary<'a> {
    LineSummary {
        equation: stab.role.slug(),
        stable: stab.stable,
        max_modulus: stab.max_modulus,
        eigen_moduli: &stab.eigen_moduli,
        critical_value: cusum.critical_value,
        cusum: cusum
            .equations
            .iter()
            .map(|e| CusumSummary {
                label: &labels[e.equation],
                sup_stat: e.sup_stat,
                sigma: e.sigma,
                rejected: e.rejected,
            })
            .collect(),
    }
}

pub struct DiagnoseOutput {
    pub report: DiagnosticsReport,
    pub labels: Vec<String>,
}

/// Checks stability and residual CUSUMs of the stored coefficients. An
/// unstable model is reported, not treated as a failure.
pub fn cmd_diagnose(cfg: &RunConfig, panel_path: &Path, model_path: &Path) -> Staged<DiagnoseOutput> {
    let usage = at(Stage::Usage);
    cfg.validate().map_err(&usage)?;
    cusum_critical_value(cfg.alpha).map_err(&usage)?;
    let fail = at(Stage::Diagnostics);
    let panel = Panel::load(panel_path).map_err(&fail)?;
    let doc = ModelDocument::load(model_path).map_err(&fail)?;
    let fit = doc.to_coupled_fit(&panel).map_err(&fail)?;
    let report = diagnose(&fit, cfg.alpha).map_err(&fail)?;
    let labels = doc.labels.clone();
    if cfg.wants(ExportFormat::Json) {
        let summary = DiagnosticsDocument {
            schema_version: SCHEMA_VERSION,
            labels: &labels,
            p: doc.p,
            alpha: cfg.alpha,
            stable: report.stable,
            cusum_rejected: report.gdp_cusum.any_rejected() || report.cpi_cusum.any_rejected(),
            lines: vec![
                line_summary(&report.gdp_stability, &report.gdp_cusum, &labels),
                line_summary(&report.cpi_stability, &report.cpi_cusum, &labels),
            ],
            config_hash: cfg.hash_with(&panel),
        };
        let mut text = serde_json::to_string_pretty(&summary).map_err(|e| fail(e.into()))?;
        text.push('\n');
        write_file(&cfg.output_dir, "diagnostics.json", &text).map_err(&fail)?;
    }
    if cfg.wants(ExportFormat::Csv) {
        write_file(&cfg.output_dir, "cusum_gdp.csv", &cusum_csv(&report.gdp_cusum, &labels)).map_err(&fail)?;
        write_file(&cfg.output_dir, "cusum_cpi.csv", &cusum_csv(&report.cpi_cusum, &labels)).map_err(&fail)?;
    }
    Ok(DiagnoseOutput { report, labels })
}

pub struct SimulateRequest {
    pub spec: PathBuf,
    pub t: usize,
    pub seed: Option<u64>,
    pub start: Option<Quarter>,
    pub output_dir: PathBuf,
}

#[derive(Serialize)]
struct SimulationReport<'a> {
    seed: u64,
    t: usize,
    burn_in: usize,
    start: Quarter,
    noise_free: bool,
    spectral_radius: f64,
    rng: &'static str,
    normal: &'static str,
    labels: &'a [String],
}

pub struct SimulateOutput {
    pub panel: Panel,
    pub spectral_radius: f64,
    pub seed: u64,
}

/// Writes `panel.csv`, quarterly `gdp.csv` and `cpi.csv` that `ingest`
/// accepts, and `simulation.json` with the generator settings.
pub fn cmd_simulate(req: &SimulateRequest) -> Staged<SimulateOutput> {
    let fail = at(Stage::Simulate);
    let doc = ModelDocument::load(&req.spec).map_err(&fail)?;
    let mut spec = doc.to_generator().map_err(&fail)?;
    if let Some(seed) = req.seed {
        spec.seed = seed;
    }
    let start = req.start.unwrap_or_else(default_start);
    let panel = simulate_from(&spec, req.t, start).map_err(&fail)?;
    let spectral_radius = spec.spectral_radius().map_err(&fail)?;
    let (gdp, cpi) = panel.split_series();
    let mut buf = Vec::new();
    gdp.write_csv(&mut buf).map_err(&fail)?;
    write_file(&req.output_dir, "gdp.csv", &String::from_utf8_lossy(&buf)).map_err(&fail)?;
    buf.clear();
    cpi.write_csv(&mut buf).map_err(&fail)?;
    write_file(&req.output_dir, "cpi.csv", &String::from_utf8_lossy(&buf)).map_err(&fail)?;
    write_file(&req.output_dir, "panel.csv", &panel.to_csv_string()).map_err(&fail)?;
    let report = SimulationReport {
        seed: spec.seed,
        t: req.t,
        burn_in: spec.burn_in,
        start,
        noise_free: spec.noise_free,
        spectral_radius,
        rng: RNG_ALGORITHM,
        normal: NORMAL_ALGORITHM,
        labels: &spec.labels,
    };
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| fail(e.into()))?;
    text.push('\n');
    write_file(&req.output_dir, "simulation.json", &text).map_err(&fail)?;
    Ok(SimulateOutput {
        panel,
        spectral_radius,
        seed: spec.seed,
    })
}

pub struct RunOutput {
    pub ingest: IngestOutput,
    pub fit: FitOutput,
    pub network: NetworkOutput,
    pub diagnostics: DiagnoseOutput,
}

/// ingest → fit → network → diagnose, each reading the previous step's
/// files from the output directory.
pub fn run(cfg: &RunConfig) -> Staged<RunOutput> {
    cfg.lag_request().map_err(at(Stage::Usage))?;
    cusum_critical_value(cfg.alpha).map_err(at(Stage::Usage))?;
    let ingest = cmd_ingest(cfg)?;
    let panel_path = cfg.output_dir.join("panel.csv");
    let model_path = cfg.output_dir.join("model.json");
    let fit = cmd_fit(cfg, &panel_path)?;
    let network = cmd_network(cfg, &panel_path, &model_path)?;
    let diagnostics = cmd_diagnose(cfg, &panel_path, &model_path)?;
    Ok(RunOutput {
        ingest,
        fit,
        network,
        diagnostics,
    })
}
