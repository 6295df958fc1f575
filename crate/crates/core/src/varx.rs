//! Per-equation least-squares estimation of the two coupled VARX(p) lines,
//! Gaussian conditional log-likelihood and information-criterion lag choice.
//!
//! The regressor layout of every equation is
//! `[1, endog(t-1), ..., endog(t-p), exog(t-1), ..., exog(t-p)]`, where each
//! lag contributes one column per country. All equations of one line share
//! that design, so one factorisation serves the whole line.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ln_det_spd, qr_least_squares};
use crate::panel::{Panel, VariableKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquationRole {
    /// GDP on lagged GDP and lagged CPI.
    GdpEquation,
    /// CPI on lagged CPI and lagged GDP.
    CpiEquation,
}

impl EquationRole {
    pub fn endogenous(self) -> VariableKind {
        match self {
            EquationRole::GdpEquation => VariableKind::Gdp,
            EquationRole::CpiEquation => VariableKind::Cpi,
        }
    }

    pub fn exogenous(self) -> VariableKind {
        match self {
            EquationRole::GdpEquation => VariableKind::Cpi,
            EquationRole::CpiEquation => VariableKind::Gdp,
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            EquationRole::GdpEquation => "gdp",
            EquationRole::CpiEquation => "cpi",
        }
    }
}

impl fmt::Display for EquationRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EquationRole::GdpEquation => "GDP equation",
            EquationRole::CpiEquation => "CPI equation",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegressorBlock {
    Endogenous,
    Exogenous,
}

/// Number of regressors per equation: intercept plus p lags of both blocks.
pub fn regressor_count(n: usize, p: usize) -> usize {
    1 + 2 * n * p
}

/// Smallest T for which a VARX(p) with n countries can be estimated.
pub fn min_periods(n: usize, p: usize) -> usize {
    regressor_count(n, p) + p + 1
}

/// Design column of country `j` at lag `lag` (1-based) in `block`.
pub fn design_column(block: RegressorBlock, n: usize, p: usize, lag: usize, j: usize) -> usize {
    debug_assert!(lag >= 1 && lag <= p && j < n);
    match block {
        RegressorBlock::Endogenous => 1 + (lag - 1) * n + j,
        RegressorBlock::Exogenous => 1 + n * p + (lag - 1) * n + j,
    }
}

pub(crate) fn column_label(role: EquationRole, n: usize, p: usize, col: usize) -> String {
    if col == 0 {
        return "intercept".into();
    }
    let (kind, rest) = if col <= n * p {
        (role.endogenous(), col - 1)
    } else {
        (role.exogenous(), col - 1 - n * p)
    };
    format!("{}[{}](t-{})", kind, rest % n, rest / n + 1)
}

/// Builds the regression design for rows `start..T`.
pub fn design_matrix(endog: &DMatrix<f64>, exog: &DMatrix<f64>, p: usize, start: usize) -> DMatrix<f64> {
    let (t, n) = endog.shape();
    let rows = t - start;
    let k = regressor_count(n, p);
    DMatrix::from_fn(rows, k, |r, c| {
        let time = start + r;
        if c == 0 {
            1.0
        } else if c <= n * p {
            let idx = c - 1;
            endog[(time - (idx / n + 1), idx % n)]
        } else {
            let idx = c - 1 - n * p;
            exog[(time - (idx / n + 1), idx % n)]
        }
    })
}

/// One estimated line of the coupled system.
#[derive(Clone, Debug, PartialEq)]
pub struct VarxFit {
    pub role: EquationRole,
    pub p: usize,
    /// First time index used as a regression target; `p` unless the sample
    /// was trimmed for lag comparison.
    pub sample_start: usize,
    pub n_periods: usize,
    pub intercept: DVector<f64>,
    /// `endog_coefs[s-1][(i, j)]`: effect of endogenous country j at lag s on i.
    pub endog_coefs: Vec<DMatrix<f64>>,
    pub exog_coefs: Vec<DMatrix<f64>>,
    pub residuals: DMatrix<f64>,
    /// Residual covariance normalised by the effective sample size.
    pub resid_cov: DMatrix<f64>,
    pub rss_per_equation: DVector<f64>,
    pub regressor_count: usize,
    /// k × n coefficient standard errors; absent for fits rebuilt from stored coefficients.
    pub std_errors: Option<DMatrix<f64>>,
}

impl VarxFit {
    pub fn n_countries(&self) -> usize {
        self.intercept.len()
    }

    pub fn effective_obs(&self) -> usize {
        self.n_periods - self.sample_start
    }

    /// Residual degrees of freedom per equation.
    pub fn df_resid(&self) -> usize {
        self.effective_obs().saturating_sub(self.regressor_count)
    }

    pub fn block(&self, block: RegressorBlock) -> &[DMatrix<f64>] {
        match block {
            RegressorBlock::Endogenous => &self.endog_coefs,
            RegressorBlock::Exogenous => &self.exog_coefs,
        }
    }

    /// Σ over lags of the (i, j) coefficient in `block`.
    pub fn block_sum(&self, block: RegressorBlock, i: usize, j: usize) -> f64 {
        self.block(block).iter().map(|m| m[(i, j)]).sum()
    }

    /// k × n matrix with the same row layout as the design.
    pub fn coefficient_matrix(&self) -> DMatrix<f64> {
        let n = self.n_countries();
        let p = self.p;
        let mut b = DMatrix::zeros(regressor_count(n, p), n);
        for i in 0..n {
            b[(0, i)] = self.intercept[i];
            for lag in 1..=p {
                for j in 0..n {
                    b[(design_column(RegressorBlock::Endogenous, n, p, lag, j), i)] = self.endog_coefs[lag - 1][(i, j)];
                    b[(design_column(RegressorBlock::Exogenous, n, p, lag, j), i)] = self.exog_coefs[lag - 1][(i, j)];
                }
            }
        }
        b
    }

    /// Rebuilds a fit from stored coefficients, recomputing residuals on the data.
    pub fn from_coefficients(
        endog: &DMatrix<f64>,
        exog: &DMatrix<f64>,
        role: EquationRole,
        intercept: DVector<f64>,
        endog_coefs: Vec<DMatrix<f64>>,
        exog_coefs: Vec<DMatrix<f64>>,
    ) -> Result<VarxFit> {
        let p = endog_coefs.len();
        let n = intercept.len();
        check_inputs(endog, exog, p)?;
        if endog.ncols() != n
            || exog_coefs.len() != p
            || endog_coefs.iter().chain(&exog_coefs).any(|m| m.shape() != (n, n))
        {
            return Err(Error::Dimension("coefficient shapes do not match the data".into()));
        }
        let mut fit = VarxFit {
            role,
            p,
            sample_start: p,
            n_periods: endog.nrows(),
            intercept,
            endog_coefs,
            exog_coefs,
            residuals: DMatrix::zeros(0, 0),
            resid_cov: DMatrix::zeros(0, 0),
            rss_per_equation: DVector::zeros(0),
            regressor_count: regressor_count(n, p),
            std_errors: None,
        };
        let design = design_matrix(endog, exog, p, p);
        let targets = endog.rows(p, endog.nrows() - p).into_owned();
        let residuals = targets - design * fit.coefficient_matrix();
        fit.rss_per_equation = DVector::from_fn(n, |c, _| residuals.column(c).norm_squared());
        fit.resid_cov = residual_covariance(&residuals);
        fit.residuals = residuals;
        Ok(fit)
    }
}

fn residual_covariance(residuals: &DMatrix<f64>) -> DMatrix<f64> {
    let rows = residuals.nrows() as f64;
    let mut cov = residuals.transpose() * residuals / rows;
    // exact symmetry
    let n = cov.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

fn check_inputs(endog: &DMatrix<f64>, exog: &DMatrix<f64>, p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::InvalidArgument("lag order must be at least 1".into()));
    }
    if endog.shape() != exog.shape() {
        return Err(Error::Dimension(format!(
            "endogenous data is {:?}, exogenous data is {:?}",
            endog.shape(),
            exog.shape()
        )));
    }
    if endog.ncols() == 0 {
        return Err(Error::Dimension("no countries".into()));
    }
    if endog.iter().chain(exog.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("data contain non-finite values".into()));
    }
    Ok(())
}

/// Estimates one VARX(p) line by least squares on rows `p..T`.
pub fn fit_varx(endog: &DMatrix<f64>, exog: &DMatrix<f64>, p: usize, role: EquationRole) -> Result<VarxFit> {
    fit_varx_on_sample(endog, exog, p, role, p)
}

/// Like [`fit_varx`] but with the first target row at `start` (≥ p).
pub fn fit_varx_on_sample(
    endog: &DMatrix<f64>,
    exog: &DMatrix<f64>,
    p: usize,
    role: EquationRole,
    start: usize,
) -> Result<VarxFit> {
    check_inputs(endog, exog, p)?;
    if start < p {
        return Err(Error::InvalidArgument(format!("sample start {start} precedes lag order {p}")));
    }
    let (t, n) = endog.shape();
    let k = regressor_count(n, p);
    if t <= start || t - start <= k {
        return Err(Error::Dimension(format!(
            "{} effective observations for {k} regressors (n={n}, p={p}); need at least T={}",
            t.saturating_sub(start),
            k + start + 1
        )));
    }
    let design = design_matrix(endog, exog, p, start);
    let targets = endog.rows(start, t - start).into_owned();
    let ls = qr_least_squares(&design, &targets, |c| column_label(role, n, p, c))?;

    let intercept = ls.coefs.row(0).transpose();
    let lag_block = |block: RegressorBlock, lag: usize| {
        DMatrix::from_fn(n, n, |i, j| ls.coefs[(design_column(block, n, p, lag, j), i)])
    };
    let endog_coefs = (1..=p).map(|s| lag_block(RegressorBlock::Endogenous, s)).collect();
    let exog_coefs = (1..=p).map(|s| lag_block(RegressorBlock::Exogenous, s)).collect();
    let df = (t - start - k) as f64;
    let std_errors = DMatrix::from_fn(k, n, |j, i| (ls.rss[i] / df * ls.unscaled_cov_diag[j]).sqrt());

    Ok(VarxFit {
        role,
        p,
        sample_start: start,
        n_periods: t,
        intercept,
        endog_coefs,
        exog_coefs,
        resid_cov: residual_covariance(&ls.residuals),
        rss_per_equation: ls.rss,
        residuals: ls.residuals,
        regressor_count: k,
        std_errors: Some(std_errors),
    })
}

/// Gaussian conditional log-likelihood at the ML covariance.
pub fn log_likelihood(fit: &VarxFit) -> Result<f64> {
    let n = fit.n_countries() as f64;
    let rows = fit.effective_obs() as f64;
    let ln_det = ln_det_spd(&fit.resid_cov)
        .map_err(|_| Error::Definiteness("residual covariance is singular".into()))?;
    Ok(-(rows / 2.0) * (n * (2.0 * PI).ln() + ln_det + n))
}

/// Both lines of the coupled system at a common lag order.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledFit {
    pub gdp_fit: VarxFit,
    pub cpi_fit: VarxFit,
    pub labels: Vec<String>,
    pub n_periods: usize,
}

impl CoupledFit {
    pub fn p(&self) -> usize {
        self.gdp_fit.p
    }

    pub fn n_countries(&self) -> usize {
        self.labels.len()
    }

    pub fn fit(&self, role: EquationRole) -> &VarxFit {
        match role {
            EquationRole::GdpEquation => &self.gdp_fit,
            EquationRole::CpiEquation => &self.cpi_fit,
        }
    }
}

fn tag(role: EquationRole) -> impl Fn(Error) -> Error {
    move |e| Error::Equation {
        role,
        source: Box::new(e),
    }
}

pub fn fit_coupled(panel: &Panel, p: usize) -> Result<CoupledFit> {
    let gdp_fit = fit_varx(panel.x(), panel.y(), p, EquationRole::GdpEquation).map_err(tag(EquationRole::GdpEquation))?;
    let cpi_fit = fit_varx(panel.y(), panel.x(), p, EquationRole::CpiEquation).map_err(tag(EquationRole::CpiEquation))?;
    Ok(CoupledFit {
        gdp_fit,
        cpi_fit,
        labels: panel.labels().to_vec(),
        n_periods: panel.n_periods(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Bic,
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "aic" => Ok(Criterion::Aic),
            "bic" => Ok(Criterion::Bic),
            other => Err(Error::InvalidArgument(format!("unknown criterion `{other}`"))),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Aic => "AIC",
            Criterion::Bic => "BIC",
        })
    }
}

/// Criterion scores of both lines at one candidate lag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagScoreRow {
    pub p: usize,
    pub aic_gdp: f64,
    pub aic_cpi: f64,
    pub bic_gdp: f64,
    pub bic_cpi: f64,
}

impl LagScoreRow {
    pub fn scores(&self, criterion: Criterion) -> (f64, f64) {
        match criterion {
            Criterion::Aic => (self.aic_gdp, self.aic_cpi),
            Criterion::Bic => (self.bic_gdp, self.bic_cpi),
        }
    }
}

/// Scores for p = 1..=p_max on the common sample trimmed at p_max.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagTable {
    pub effective_obs: usize,
    pub rows: Vec<LagScoreRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LagSelection {
    pub criterion: Criterion,
    /// lag → (GDP system score, CPI system score)
    pub scores: BTreeMap<usize, (f64, f64)>,
    pub chosen_p: usize,
}

impl LagTable {
    pub fn selection(&self, criterion: Criterion) -> LagSelection {
        let scores: BTreeMap<usize, (f64, f64)> = self.rows.iter().map(|r| (r.p, r.scores(criterion))).collect();
        let mut chosen_p = self.rows[0].p;
        let mut best = f64::INFINITY;
        for (&p, &(g, c)) in &scores {
            if g + c < best {
                best = g + c;
                chosen_p = p;
            }
        }
        LagSelection {
            criterion,
            scores,
            chosen_p,
        }
    }
}

pub fn lag_table(panel: &Panel, p_max: usize) -> Result<LagTable> {
    if p_max == 0 {
        return Err(Error::InvalidArgument("p_max must be at least 1".into()));
    }
    let (t, n) = (panel.n_periods(), panel.n_countries());
    let needed = min_periods(n, p_max);
    if t < needed {
        return Err(Error::Dimension(format!(
            "p_max={p_max} with n={n} needs at least T={needed} periods, panel has {t}"
        )));
    }
    let rows_eff = t - p_max;
    let ln_rows = (rows_eff as f64).ln();
    let mut rows = Vec::with_capacity(p_max);
    for p in 1..=p_max {
        let params = (n * regressor_count(n, p)) as f64 / rows_eff as f64;
        let mut ln_dets = [0.0; 2];
        for (slot, role) in [EquationRole::GdpEquation, EquationRole::CpiEquation].into_iter().enumerate() {
            let (endog, exog) = match role {
                EquationRole::GdpEquation => (panel.x(), panel.y()),
                EquationRole::CpiEquation => (panel.y(), panel.x()),
            };
            let fit = fit_varx_on_sample(endog, exog, p, role, p_max).map_err(tag(role))?;
            ln_dets[slot] = ln_det_spd(&fit.resid_cov).map_err(tag(role))?;
        }
        rows.push(LagScoreRow {
            p,
            aic_gdp: ln_dets[0] + 2.0 * params,
            aic_cpi: ln_dets[1] + 2.0 * params,
            bic_gdp: ln_dets[0] + ln_rows * params,
            bic_cpi: ln_dets[1] + ln_rows * params,
        });
    }
    Ok(LagTable {
        effective_obs: rows_eff,
        rows,
    })
}

/// Picks the common lag order minimising the summed criterion of both lines.
pub fn select_lag(panel: &Panel, p_max: usize, criterion: Criterion) -> Result<LagSelection> {
    Ok(lag_table(panel, p_max)?.selection(criterion))
}
