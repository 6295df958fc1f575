use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use varxnet::config::RunConfig;
use varxnet::granger::NetworkRole;
use varxnet::pipeline::{self, PipelineError, SimulateRequest, Stage};
use varxnet::{Error, Quarter};

/// Coupled GDP/CPI VARX estimation and Granger-causality networks.
#[derive(Parser)]
#[command(name = "varxnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load raw GDP and CPI files, interpolate and align them into panel.csv.
    Ingest(Common),
    /// Fit the coupled model and write model.json.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Aligned panel (default: <out>/panel.csv).
        #[arg(long)]
        panel: Option<PathBuf>,
    },
    /// Run the block F-tests and export the four networks.
    Network {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        panel: Option<PathBuf>,
        /// Fitted model (default: <out>/model.json).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Companion-matrix stability and residual CUSUM tests.
    Diagnose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        panel: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Simulate a panel from a generator or fitted model document.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        /// Number of quarters to keep after burn-in.
        #[arg(long)]
        t: usize,
        /// Overrides the seed stored in the spec.
        #[arg(long)]
        seed: Option<u64>,
        /// First simulated quarter, e.g. 2012Q4 (default 2000Q1).
        #[arg(long)]
        start: Option<Quarter>,
        #[arg(long, short = 'o', default_value = "out")]
        out: PathBuf,
    },
    /// ingest, fit, network and diagnose in one go.
    Run(Common),
}

#[derive(Args, Clone, Debug, Default)]
struct Common {
    /// key = value settings; flags override them.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    gdp: Option<PathBuf>,
    #[arg(long)]
    cpi: Option<PathBuf>,
    /// annual or quarterly
    #[arg(long)]
    cpi_frequency: Option<String>,
    /// Quarter carrying an annual CPI value (1-4).
    #[arg(long)]
    anchor: Option<u8>,
    /// Fixed lag order.
    #[arg(long)]
    p: Option<usize>,
    /// Select the lag order in 1..=p_max.
    #[arg(long)]
    p_max: Option<usize>,
    /// aic, bic or both (both selects by BIC)
    #[arg(long)]
    criterion: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// none, bonferroni or bh
    #[arg(long)]
    correction: Option<String>,
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    /// Comma list of csv, dot, json.
    #[arg(long)]
    formats: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let mut set = |key: &str, value: Option<String>| -> Result<(), Error> {
            match value {
                Some(v) => cfg.set(key, &v, None),
                None => Ok(()),
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.to_string_lossy().into_owned());
        set("gdp_csv", path(&self.gdp))?;
        set("cpi_csv", path(&self.cpi))?;
        set("cpi_frequency", self.cpi_frequency.clone())?;
        set("anchor", self.anchor.map(|v| v.to_string()))?;
        set("criterion", self.criterion.clone())?;
        set("alpha", self.alpha.map(|v| v.to_string()))?;
        set("correction", self.correction.clone())?;
        set("output_dir", path(&self.out))?;
        set("formats", self.formats.clone())?;
        // A lag flag replaces whatever lag setting the file made.
        if self.p.is_some() || self.p_max.is_some() {
            cfg.p = self.p;
            cfg.p_max = self.p_max;
        }
        Ok(cfg)
    }
}

fn usage(e: Error) -> PipelineError {
    PipelineError {
        stage: Stage::Usage,
        source: e,
    }
}

fn print_fit(out: &pipeline::FitOutput) {
    if let Some(table) = &out.lag_table {
        println!("lag selection on {} common observations", table.effective_obs);
        println!("{:>3} {:>14} {:>14}", "p", "AIC", "BIC");
        for r in &table.rows {
            println!("{:>3} {:>14.6} {:>14.6}", r.p, r.aic_gdp + r.aic_cpi, r.bic_gdp + r.bic_cpi);
        }
        if let Some(sel) = &out.document.lag_selection {
            if sel.aic_choice != sel.bic_choice {
                println!("AIC picks p={}, BIC picks p={}", sel.aic_choice, sel.bic_choice);
            }
        }
    }
    println!(
        "fitted p={} on T={} quarters, n={} countries",
        out.fit.p(),
        out.fit.n_periods,
        out.fit.n_countries()
    );
}

fn print_network(out: &pipeline::NetworkOutput) {
    let net = &out.network;
    for role in NetworkRole::ALL {
        let adj = net.adjacency(role);
        println!(
            "{:<6} {} -> {}: {} edges of {} tests",
            role.slug(),
            role.source_kind(),
            role.target_kind(),
            adj.nonzero_count(),
            adj.tests.len()
        );
    }
    for u in net.untestable() {
        println!(
            "untestable {} {} <- {}: {}",
            u.role.slug(),
            net.labels[u.target],
            net.labels[u.source],
            u.reason
        );
    }
}

fn print_diagnostics(out: &pipeline::DiagnoseOutput) {
    let r = &out.report;
    for (stab, cusum) in [(&r.gdp_stability, &r.gdp_cusum), (&r.cpi_stability, &r.cpi_cusum)] {
        println!(
            "{}: max eigenvalue modulus {:.6} ({})",
            stab.role,
            stab.max_modulus,
            if stab.stable { "stable" } else { "unstable" }
        );
        for eq in cusum.equations.iter().filter(|e| e.rejected) {
            eprintln!(
                "WARN: CUSUM rejects parameter constancy for {} {} (sup {:.3} > {:.3})",
                stab.role, out.labels[eq.equation], eq.sup_stat, cusum.critical_value
            );
        }
    }
    if !r.stable {
        eprintln!("WARN: the fitted model is not dynamically stable (an eigenvalue modulus is >= 1)");
    }
}

fn default_in(cfg: &RunConfig, given: &Option<PathBuf>, name: &str) -> PathBuf {
    given.clone().unwrap_or_else(|| cfg.output_dir.join(name))
}

fn execute(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Ingest(common) => {
            let cfg = common.resolve().map_err(usage)?;
            let out = pipeline::cmd_ingest(&cfg)?;
            for line in &out.log {
                println!("{line}");
            }
        }
        Command::Fit { common, panel } => {
            let cfg = common.resolve().map_err(usage)?;
            let out = pipeline::cmd_fit(&cfg, &default_in(&cfg, &panel, "panel.csv"))?;
            print_fit(&out);
        }
        Command::Network { common, panel, model } => {
            let cfg = common.resolve().map_err(usage)?;
            let out = pipeline::cmd_network(
                &cfg,
                &default_in(&cfg, &panel, "panel.csv"),
                &default_in(&cfg, &model, "model.json"),
            )?;
            print_network(&out);
        }
        Command::Diagnose { common, panel, model } => {
            let cfg = common.resolve().map_err(usage)?;
            let out = pipeline::cmd_diagnose(
                &cfg,
                &default_in(&cfg, &panel, "panel.csv"),
                &default_in(&cfg, &model, "model.json"),
            )?;
            print_diagnostics(&out);
        }
        Command::Simulate {
            spec,
            t,
            seed,
            start,
            out,
        } => {
            let res = pipeline::cmd_simulate(&SimulateRequest {
                spec,
                t,
                seed,
                start,
                output_dir: out,
            })?;
            println!(
                "simulated T={} n={} seed={} spectral radius {:.6}",
                res.panel.n_periods(),
                res.panel.n_countries(),
                res.seed,
                res.spectral_radius
            );
        }
        Command::Run(common) => {
            let cfg = common.resolve().map_err(usage)?;
            cfg.lag_request().map_err(usage)?;
            varxnet::diagnostics::cusum_critical_value(cfg.alpha).map_err(usage)?;
            let ingest = pipeline::cmd_ingest(&cfg)?;
            for line in &ingest.log {
                println!("{line}");
            }
            let panel_path = cfg.output_dir.join("panel.csv");
            let model_path = cfg.output_dir.join("model.json");
            print_fit(&pipeline::cmd_fit(&cfg, &panel_path)?);
            print_network(&pipeline::cmd_network(&cfg, &panel_path, &model_path)?);
            print_diagnostics(&pipeline::cmd_diagnose(&cfg, &panel_path, &model_path)?);
            println!("outputs in {}", cfg.output_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
