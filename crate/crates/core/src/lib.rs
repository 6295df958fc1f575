//! Coupled VARX estimation for GDP and corruption-perception panels,
//! conditional Granger-causality networks and stability diagnostics.
//!
//! The model has two lines. GDP is regressed on lagged GDP (Φ) and lagged CPI
//! (Π); CPI on lagged CPI (Ψ) and lagged GDP (Γ). Block F-tests on each
//! coefficient block decide which edges of the four country networks exist,
//! and an edge carries the sum of its lag coefficients.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod export;
pub mod fdist;
pub mod granger;
pub mod linalg;
pub mod model;
pub mod panel;
pub mod pipeline;
pub mod synth;
pub mod varx;

pub use config::RunConfig;
pub use diagnostics::{diagnose, DiagnosticsReport};
pub use error::{Error, Result};
pub use granger::{assemble_network, block_f_test, build_adjacency, CausalityNetwork, Correction, GrangerTest, NetworkRole, WeightedAdjacency};
pub use panel::{align_panel, interpolate_annual_to_quarterly, load_series_csv, Frequency, Panel, Quarter, RawSeriesSet, VariableKind};
pub use varx::{fit_coupled, fit_varx, log_likelihood, select_lag, CoupledFit, Criterion, EquationRole, LagSelection, VarxFit};
pub use model::ModelDocument;
pub use synth::{random_stable_spec, simulate, GeneratorSpec};
