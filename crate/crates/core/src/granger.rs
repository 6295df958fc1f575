//! Conditional Granger-causality block F-tests on a coupled fit and the four
//! signed weighted adjacency matrices built from them.
//!
//! Matrix entry (i, j) always means "source country j drives target country i":
//! rows are targets, columns are sources.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdist::f_sf;
use crate::linalg::qr_least_squares;
use crate::panel::{Panel, Quarter, VariableKind};
use crate::varx::{column_label, design_column, design_matrix, CoupledFit, EquationRole, RegressorBlock, VarxFit};

/// Which coefficient block an adjacency matrix summarises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkRole {
    /// GDP → GDP
    Phi,
    /// CPI → GDP
    Pi,
    /// CPI → CPI
    Psi,
    /// GDP → CPI
    Gamma,
}

impl NetworkRole {
    pub const ALL: [NetworkRole; 4] = [NetworkRole::Phi, NetworkRole::Pi, NetworkRole::Psi, NetworkRole::Gamma];

    pub fn from_kinds(target: VariableKind, source: VariableKind) -> Self {
        match (target, source) {
            (VariableKind::Gdp, VariableKind::Gdp) => NetworkRole::Phi,
            (VariableKind::Gdp, VariableKind::Cpi) => NetworkRole::Pi,
            (VariableKind::Cpi, VariableKind::Cpi) => NetworkRole::Psi,
            (VariableKind::Cpi, VariableKind::Gdp) => NetworkRole::Gamma,
        }
    }

    pub fn target_kind(self) -> VariableKind {
        match self {
            NetworkRole::Phi | NetworkRole::Pi => VariableKind::Gdp,
            NetworkRole::Psi | NetworkRole::Gamma => VariableKind::Cpi,
        }
    }

    pub fn source_kind(self) -> VariableKind {
        match self {
            NetworkRole::Phi | NetworkRole::Gamma => VariableKind::Gdp,
            NetworkRole::Pi | NetworkRole::Psi => VariableKind::Cpi,
        }
    }

    pub fn equation(self) -> EquationRole {
        match self.target_kind() {
            VariableKind::Gdp => EquationRole::GdpEquation,
            VariableKind::Cpi => EquationRole::CpiEquation,
        }
    }

    pub fn block(self) -> RegressorBlock {
        match self {
            NetworkRole::Phi | NetworkRole::Psi => RegressorBlock::Endogenous,
            NetworkRole::Pi | NetworkRole::Gamma => RegressorBlock::Exogenous,
        }
    }

    /// Own-country entries are network edges only across variables.
    pub fn tests_diagonal(self) -> bool {
        self.block() == RegressorBlock::Exogenous
    }

    pub fn slug(self) -> &'static str {
        match self {
            NetworkRole::Phi => "phi",
            NetworkRole::Pi => "pi",
            NetworkRole::Psi => "psi",
            NetworkRole::Gamma => "gamma",
        }
    }
}

impl fmt::Display for NetworkRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for NetworkRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NetworkRole::ALL
            .into_iter()
            .find(|r| r.slug() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown network role `{s}`")))
    }
}

/// Multiple-testing adjustment applied within one adjacency matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    #[default]
    None,
    Bonferroni,
    #[serde(rename = "bh")]
    BenjaminiHochberg,
}

impl FromStr for Correction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Correction::None),
            "bonferroni" => Ok(Correction::Bonferroni),
            "bh" | "benjamini-hochberg" => Ok(Correction::BenjaminiHochberg),
            other => Err(Error::InvalidArgument(format!(
                "unknown correction `{other}` (expected none, bonferroni or bh)"
            ))),
        }
    }
}

impl fmt::Display for Correction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Correction::None => "none",
            Correction::Bonferroni => "bonferroni",
            Correction::BenjaminiHochberg => "bh",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrangerTest {
    pub role: NetworkRole,
    pub target: (VariableKind, usize),
    pub source: (VariableKind, usize),
    pub f_stat: f64,
    pub df_num: usize,
    pub df_den: usize,
    pub p_value: f64,
    /// Equal to `p_value` without correction.
    pub adjusted_p_value: f64,
    pub significant: bool,
    pub weight_if_significant: f64,
    pub rss_unrestricted: f64,
    pub rss_restricted: f64,
}

/// A pair whose restricted regression could not be estimated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UntestablePair {
    pub role: NetworkRole,
    pub target: usize,
    pub source: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedAdjacency {
    pub role: NetworkRole,
    pub labels: Vec<String>,
    /// n × n, row = target, column = source.
    pub matrix: DMatrix<f64>,
    pub alpha: f64,
    pub correction: Correction,
    /// Every test run, in row-major (target, source) order.
    pub tests: Vec<GrangerTest>,
    pub untestable: Vec<UntestablePair>,
}

impl WeightedAdjacency {
    pub fn nonzero_count(&self) -> usize {
        self.matrix.iter().filter(|v| **v != 0.0).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CausalityNetwork {
    pub labels: Vec<String>,
    pub phi: WeightedAdjacency,
    pub pi: WeightedAdjacency,
    pub psi: WeightedAdjacency,
    pub gamma: WeightedAdjacency,
    pub alpha: f64,
    pub correction: Correction,
    pub p: usize,
    pub n_periods: usize,
    /// First and last quarter of the panel the fit was estimated on.
    pub sample: (Quarter, Quarter),
}

impl CausalityNetwork {
    pub fn adjacency(&self, role: NetworkRole) -> &WeightedAdjacency {
        match role {
            NetworkRole::Phi => &self.phi,
            NetworkRole::Pi => &self.pi,
            NetworkRole::Psi => &self.psi,
            NetworkRole::Gamma => &self.gamma,
        }
    }

    pub fn untestable(&self) -> impl Iterator<Item = &UntestablePair> {
        NetworkRole::ALL.into_iter().flat_map(|r| self.adjacency(r).untestable.iter())
    }
}

fn check_consistent(panel: &Panel, fit: &CoupledFit) -> Result<()> {
    if fit.labels != panel.labels() || fit.n_periods != panel.n_periods() {
        return Err(Error::Model("fit was not estimated on this panel".into()));
    }
    for line in [&fit.gdp_fit, &fit.cpi_fit] {
        if line.sample_start != line.p || line.n_periods != panel.n_periods() {
            return Err(Error::Model("network tests need a full-sample fit".into()));
        }
    }
    Ok(())
}

fn line_data(panel: &Panel, role: EquationRole) -> (&DMatrix<f64>, &DMatrix<f64>) {
    match role {
        EquationRole::GdpEquation => (panel.x(), panel.y()),
        EquationRole::CpiEquation => (panel.y(), panel.x()),
    }
}

/// RSS of every equation of a line after deleting the p lag columns of `source`.
fn restricted_rss(panel: &Panel, line: &VarxFit, role: NetworkRole, source: usize) -> Result<DVector<f64>> {
    let (endog, exog) = line_data(panel, role.equation());
    let (t, n) = endog.shape();
    let p = line.p;
    let design = design_matrix(endog, exog, p, p);
    let dropped: Vec<usize> = (1..=p).map(|s| design_column(role.block(), n, p, s, source)).collect();
    let kept: Vec<usize> = (0..design.ncols()).filter(|c| !dropped.contains(c)).collect();
    let restricted = design.select_columns(&kept);
    let targets = endog.rows(p, t - p).into_owned();
    let ls = qr_least_squares(&restricted, &targets, |c| column_label(role.equation(), n, p, kept[c]))?;
    Ok(ls.rss)
}

fn centered_ss(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (sum, count) = values.clone().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    let mean = sum / count as f64;
    values.map(|v| (v - mean) * (v - mean)).sum()
}

fn make_test(panel: &Panel, line: &VarxFit, role: NetworkRole, i: usize, j: usize, rss_r: f64, alpha: f64) -> Result<GrangerTest> {
    let df_num = line.p;
    let df_den = line.df_resid();
    if df_den == 0 {
        return Err(Error::Dimension("no residual degrees of freedom left for the F-test".into()));
    }
    let rss_u = line.rss_per_equation[i];
    let (endog, _) = line_data(panel, role.equation());
    let scale = centered_ss(endog.column(i).iter().skip(line.p).copied());
    let mut diff = rss_r - rss_u;
    // differences at rounding level mean the null holds exactly
    if diff <= 1e-12 * scale {
        diff = 0.0;
    }
    let f_stat = if diff == 0.0 {
        0.0
    } else if rss_u == 0.0 {
        f64::INFINITY
    } else {
        (diff / df_num as f64) / (rss_u / df_den as f64)
    };
    let p_value = f_sf(f_stat, df_num as u32, df_den as u32);
    Ok(GrangerTest {
        role,
        target: (role.target_kind(), i),
        source: (role.source_kind(), j),
        f_stat,
        df_num,
        df_den,
        p_value,
        adjusted_p_value: p_value,
        significant: p_value < alpha,
        weight_if_significant: line.block_sum(role.block(), i, j),
        rss_unrestricted: rss_u,
        rss_restricted: rss_r,
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// F-test of H0: all p lag coefficients of `source` in the equation of `target` are zero.
///
/// The source and target kinds select the coefficient block (Φ, Π, Ψ or Γ).
pub fn block_f_test(
    panel: &Panel,
    fit: &CoupledFit,
    target: (VariableKind, usize),
    source: (VariableKind, usize),
    alpha: f64,
) -> Result<GrangerTest> {
    check_alpha(alpha)?;
    check_consistent(panel, fit)?;
    let n = fit.n_countries();
    if target.1 >= n || source.1 >= n {
        return Err(Error::InvalidArgument(format!("country index out of range (n={n})")));
    }
    let role = NetworkRole::from_kinds(target.0, source.0);
    let line = fit.fit(role.equation());
    let rss = restricted_rss(panel, line, role, source.1)?;
    make_test(panel, line, role, target.1, source.1, rss[target.1], alpha)
}

fn adjust(p_values: &[f64], correction: Correction) -> Vec<f64> {
    let m = p_values.len();
    match correction {
        Correction::None => p_values.to_vec(),
        Correction::Bonferroni => p_values.iter().map(|p| (p * m as f64).min(1.0)).collect(),
        Correction::BenjaminiHochberg => {
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
            let mut adjusted = vec![0.0; m];
            let mut running = 1.0f64;
            for rank in (0..m).rev() {
                let idx = order[rank];
                let q = p_values[idx] * m as f64 / (rank + 1) as f64;
                running = running.min(q).min(1.0);
                adjusted[idx] = running;
            }
            adjusted
        }
    }
}

/// Runs every admissible pair test for `role` and keeps the summed lag
/// coefficients of the significant ones.
pub fn build_adjacency(
    panel: &Panel,
    fit: &CoupledFit,
    role: NetworkRole,
    alpha: f64,
    correction: Correction,
) -> Result<WeightedAdjacency> {
    check_alpha(alpha)?;
    check_consistent(panel, fit)?;
    let n = fit.n_countries();
    let line = fit.fit(role.equation());

    let mut restricted: Vec<std::result::Result<DVector<f64>, String>> = Vec::with_capacity(n);
    for j in 0..n {
        match restricted_rss(panel, line, role, j) {
            Ok(rss) => restricted.push(Ok(rss)),
            Err(e @ Error::Singular { .. }) => restricted.push(Err(e.to_string())),
            Err(e) => return Err(e),
        }
    }

    let mut tests = Vec::new();
    let mut untestable = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j && !role.tests_diagonal() {
                continue;
            }
            match &restricted[j] {
                Ok(rss) => tests.push(make_test(panel, line, role, i, j, rss[i], alpha)?),
                Err(reason) => untestable.push(UntestablePair {
                    role,
                    target: i,
                    source: j,
                    reason: reason.clone(),
                }),
            }
        }
    }

    let raw: Vec<f64> = tests.iter().map(|t| t.p_value).collect();
    let adjusted = adjust(&raw, correction);
    let mut matrix = DMatrix::zeros(n, n);
    for (test, adj) in tests.iter_mut().zip(adjusted) {
        test.adjusted_p_value = adj;
        test.significant = adj < alpha;
        if test.significant {
            matrix[(test.target.1, test.source.1)] = test.weight_if_significant;
        }
    }
    Ok(WeightedAdjacency {
        role,
        labels: fit.labels.clone(),
        matrix,
        alpha,
        correction,
        tests,
        untestable,
    })
}

pub fn assemble_network(panel: &Panel, fit: &CoupledFit, alpha: f64, correction: Correction) -> Result<CausalityNetwork> {
    let build = |role| build_adjacency(panel, fit, role, alpha, correction);
    let quarters = panel.quarters();
    Ok(CausalityNetwork {
        labels: fit.labels.clone(),
        phi: build(NetworkRole::Phi)?,
        pi: build(NetworkRole::Pi)?,
        psi: build(NetworkRole::Psi)?,
        gamma: build(NetworkRole::Gamma)?,
        alpha,
        correction,
        p: fit.p(),
        n_periods: fit.n_periods,
        sample: (quarters[0], quarters[quarters.len() - 1]),
    })
}
