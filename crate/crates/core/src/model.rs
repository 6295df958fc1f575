//! JSON document shared by fitted models, generator specs and network runs.
//!
//! Matrices are nested arrays in row-major order; lag stacks are arrays of
//! such matrices, lag 1 first. In `gdp_equation` the endogenous stack is Φ and
//! the exogenous stack Π; in `cpi_equation` they are Ψ and Γ. Floats are
//! written in shortest round-trip form, so a document re-reads bit for bit.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::granger::{CausalityNetwork, Correction, NetworkRole, UntestablePair};
use crate::panel::{Panel, Quarter};
use crate::synth::{GeneratorSpec, DEFAULT_BURN_IN, NORMAL_ALGORITHM, RNG_ALGORITHM};
use crate::varx::{CoupledFit, Criterion, EquationRole, LagTable, VarxFit};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub schema_version: u32,
    pub labels: Vec<String>,
    pub p: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<AdjacencyMatrices>,
    pub fit: FitSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag_selection: Option<LagSelectionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSection>,
    pub provenance: Provenance,
}

/// n × n, row = target country, column = source country.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyMatrices {
    pub phi: Vec<Vec<f64>>,
    pub pi: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_periods: Option<usize>,
    pub gdp_equation: EquationSection,
    pub cpi_equation: EquationSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationSection {
    pub intercept: Vec<f64>,
    pub endog: Vec<Vec<Vec<f64>>>,
    pub exog: Vec<Vec<Vec<f64>>>,
    /// Residual covariance of a fit, or the shock covariance of a generator.
    pub resid_cov: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagSelectionSection {
    pub criterion: Criterion,
    pub chosen_p: usize,
    pub aic_choice: usize,
    pub bic_choice: usize,
    pub table: LagTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSection {
    pub correction: Correction,
    pub tested_pairs: usize,
    pub significant_pairs: usize,
    /// Row = target, column = source, per role.
    pub p_values: RoleMatrices,
    pub untestable: Vec<UntestablePair>,
}

/// Per-role matrices with `null` for pairs that were not tested.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoleMatrices {
    pub phi: Vec<Vec<Option<f64>>>,
    pub pi: Vec<Vec<Option<f64>>>,
    pub psi: Vec<Vec<Option<f64>>>,
    pub gamma: Vec<Vec<Option<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSection {
    pub burn_in: usize,
    pub seed: u64,
    #[serde(default)]
    pub noise_free: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub timestamps: Timestamps,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<RngInfo>,
}

/// Calendar span of the data the document was estimated on.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_start: Option<Quarter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_end: Option<Quarter>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RngInfo {
    pub generator: String,
    pub normal: String,
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], n: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Model(format!("{what} must be {n}x{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn stack_from_rows(stack: &[Vec<Vec<f64>>], n: usize, p: usize, what: &str) -> Result<Vec<DMatrix<f64>>> {
    if stack.len() != p {
        return Err(Error::Model(format!("{what} has {} lags, expected {p}", stack.len())));
    }
    stack.iter().map(|m| from_rows(m, n, what)).collect()
}

impl EquationSection {
    fn from_fit(fit: &VarxFit) -> Self {
        EquationSection {
            intercept: fit.intercept.iter().copied().collect(),
            endog: fit.endog_coefs.iter().map(to_rows).collect(),
            exog: fit.exog_coefs.iter().map(to_rows).collect(),
            resid_cov: to_rows(&fit.resid_cov),
        }
    }

    #[allow(clippy::type_complexity)]
    fn parts(&self, n: usize, p: usize, what: &str) -> Result<(DVector<f64>, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>, DMatrix<f64>)> {
        if self.intercept.len() != n {
            return Err(Error::Model(format!("{what} intercept has {} entries, expected {n}", self.intercept.len())));
        }
        Ok((
            DVector::from_column_slice(&self.intercept),
            stack_from_rows(&self.endog, n, p, &format!("{what} endog"))?,
            stack_from_rows(&self.exog, n, p, &format!("{what} exog"))?,
            from_rows(&self.resid_cov, n, &format!("{what} resid_cov"))?,
        ))
    }
}

fn role_matrix<T: Copy>(n: usize, f: impl Fn(usize, usize) -> T) -> Vec<Vec<T>> {
    (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect()
}

impl ModelDocument {
    pub fn from_fit(fit: &CoupledFit, panel: &Panel, config_hash: &str) -> Self {
        let quarters = panel.quarters();
        ModelDocument {
            schema_version: SCHEMA_VERSION,
            labels: fit.labels.clone(),
            p: fit.p(),
            alpha: None,
            matrices: None,
            fit: FitSection {
                n_periods: Some(fit.n_periods),
                gdp_equation: EquationSection::from_fit(&fit.gdp_fit),
                cpi_equation: EquationSection::from_fit(&fit.cpi_fit),
            },
            lag_selection: None,
            network: None,
            generator: None,
            provenance: Provenance {
                config_hash: config_hash.to_string(),
                timestamps: Timestamps {
                    sample_start: quarters.first().copied(),
                    sample_end: quarters.last().copied(),
                },
                rng: None,
            },
        }
    }

    pub fn set_lag_selection(&mut self, table: &LagTable, criterion: Criterion) {
        let chosen = table.selection(criterion).chosen_p;
        self.lag_selection = Some(LagSelectionSection {
            criterion,
            chosen_p: chosen,
            aic_choice: table.selection(Criterion::Aic).chosen_p,
            bic_choice: table.selection(Criterion::Bic).chosen_p,
            table: table.clone(),
        });
    }

    pub fn set_network(&mut self, net: &CausalityNetwork) {
        let n = net.labels.len();
        let mats = |f: &dyn Fn(NetworkRole) -> DMatrix<f64>| AdjacencyMatrices {
            phi: to_rows(&f(NetworkRole::Phi)),
            pi: to_rows(&f(NetworkRole::Pi)),
            psi: to_rows(&f(NetworkRole::Psi)),
            gamma: to_rows(&f(NetworkRole::Gamma)),
        };
        self.alpha = Some(net.alpha);
        self.matrices = Some(mats(&|r| net.adjacency(r).matrix.clone()));
        let p_values = |role: NetworkRole| {
            let adj = net.adjacency(role);
            let mut m: Vec<Vec<Option<f64>>> = role_matrix(n, |_, _| None);
            for t in &adj.tests {
                m[t.target.1][t.source.1] = Some(t.p_value);
            }
            m
        };
        let all_tests = || NetworkRole::ALL.into_iter().flat_map(|r| net.adjacency(r).tests.iter());
        self.network = Some(NetworkSection {
            correction: net.correction,
            tested_pairs: all_tests().count(),
            significant_pairs: all_tests().filter(|t| t.significant).count(),
            p_values: RoleMatrices {
                phi: p_values(NetworkRole::Phi),
                pi: p_values(NetworkRole::Pi),
                psi: p_values(NetworkRole::Psi),
                gamma: p_values(NetworkRole::Gamma),
            },
            untestable: net.untestable().cloned().collect(),
        });
    }

    /// Rebuilds both lines from the stored coefficients on `panel`.
    pub fn to_coupled_fit(&self, panel: &Panel) -> Result<CoupledFit> {
        if self.labels != panel.labels() {
            return Err(Error::Model(format!(
                "model labels {:?} do not match panel labels {:?}",
                self.labels,
                panel.labels()
            )));
        }
        let n = self.labels.len();
        let line = |sec: &EquationSection, role: EquationRole| -> Result<VarxFit> {
            let (intercept, endog, exog, _) = sec.parts(n, self.p, role.slug())?;
            let (e, x) = match role {
                EquationRole::GdpEquation => (panel.x(), panel.y()),
                EquationRole::CpiEquation => (panel.y(), panel.x()),
            };
            VarxFit::from_coefficients(e, x, role, intercept, endog, exog)
        };
        Ok(CoupledFit {
            gdp_fit: line(&self.fit.gdp_equation, EquationRole::GdpEquation)?,
            cpi_fit: line(&self.fit.cpi_equation, EquationRole::CpiEquation)?,
            labels: self.labels.clone(),
            n_periods: panel.n_periods(),
        })
    }

    pub fn from_generator(spec: &GeneratorSpec) -> Self {
        let section = |b: &DVector<f64>, endog: &[DMatrix<f64>], exog: &[DMatrix<f64>], cov: &DMatrix<f64>| EquationSection {
            intercept: b.iter().copied().collect(),
            endog: endog.iter().map(to_rows).collect(),
            exog: exog.iter().map(to_rows).collect(),
            resid_cov: to_rows(cov),
        };
        ModelDocument {
            schema_version: SCHEMA_VERSION,
            labels: spec.labels.clone(),
            p: spec.p,
            alpha: None,
            matrices: None,
            fit: FitSection {
                n_periods: None,
                gdp_equation: section(&spec.b, &spec.phi, &spec.pi, &spec.omega),
                cpi_equation: section(&spec.c, &spec.psi, &spec.gamma, &spec.sigma),
            },
            lag_selection: None,
            network: None,
            generator: Some(GeneratorSection {
                burn_in: spec.burn_in,
                seed: spec.seed,
                noise_free: spec.noise_free,
            }),
            provenance: Provenance {
                config_hash: String::new(),
                timestamps: Timestamps::default(),
                rng: Some(RngInfo {
                    generator: RNG_ALGORITHM.into(),
                    normal: NORMAL_ALGORITHM.into(),
                }),
            },
        }
    }

    /// Reads the document as a generator. A fitted model works too: its
    /// residual covariances become the shock covariances.
    pub fn to_generator(&self) -> Result<GeneratorSpec> {
        let n = self.labels.len();
        let (b, phi, pi, omega) = self.fit.gdp_equation.parts(n, self.p, "gdp")?;
        let (c, psi, gamma, sigma) = self.fit.cpi_equation.parts(n, self.p, "cpi")?;
        let gen = self.generator.clone().unwrap_or(GeneratorSection {
            burn_in: DEFAULT_BURN_IN,
            seed: 0,
            noise_free: false,
        });
        let spec = GeneratorSpec {
            labels: self.labels.clone(),
            p: self.p,
            b,
            c,
            phi,
            pi,
            psi,
            gamma,
            omega,
            sigma,
            burn_in: gen.burn_in,
            seed: gen.seed,
            noise_free: gen.noise_free,
        };
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model documents hold only finite numbers");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(s)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::Model(format!("unsupported schema_version {}", doc.schema_version)));
        }
        crate::panel::validate_label_list(&doc.labels)?;
        if doc.p == 0 {
            return Err(Error::Model("p must be at least 1".into()));
        }
        Ok(doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ModelDocument::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}
