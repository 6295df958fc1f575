//! Stability checks on fitted lines: companion-matrix eigenvalue moduli and
//! the OLS-residual CUSUM test against Brownian-bridge critical values.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::varx::{CoupledFit, EquationRole, VarxFit};

/// Sup-norm Brownian bridge quantiles: (alpha, critical value).
pub const CUSUM_CRITICAL_VALUES: [(f64, f64); 3] = [(0.10, 1.224), (0.05, 1.358), (0.01, 1.628)];

pub fn cusum_critical_value(alpha: f64) -> Result<f64> {
    CUSUM_CRITICAL_VALUES
        .iter()
        .find(|(a, _)| (a - alpha).abs() < 1e-9)
        .map(|(_, cv)| *cv)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "no CUSUM critical value for alpha={alpha}; supported: 0.10, 0.05, 0.01"
            ))
        })
}

/// Stacks lag matrices A₁..A_p into the (n·p) × (n·p) companion form.
pub fn companion_matrix(lags: &[DMatrix<f64>]) -> DMatrix<f64> {
    let p = lags.len();
    let n = lags.first().map_or(0, |m| m.nrows());
    let mut c = DMatrix::zeros(n * p, n * p);
    for (s, a) in lags.iter().enumerate() {
        c.view_mut((0, s * n), (n, n)).copy_from(a);
    }
    for r in n..n * p {
        c[(r, r - n)] = 1.0;
    }
    c
}

/// Eigenvalue moduli, largest first.
pub fn eigen_moduli(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 100_000).ok_or_else(|| {
        Error::Numerical(format!(
            "eigenvalue iteration did not converge (matrix norm {:.6e})",
            m.norm()
        ))
    })?;
    let mut moduli: Vec<f64> = schur.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    Ok(moduli)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub role: EquationRole,
    pub eigen_moduli: Vec<f64>,
    pub max_modulus: f64,
    pub stable: bool,
}

/// Dynamic stability of the endogenous block only; exogenous lags are inputs.
pub fn companion_stability(fit: &VarxFit) -> Result<StabilityReport> {
    let moduli = eigen_moduli(&companion_matrix(&fit.endog_coefs))?;
    let max_modulus = moduli.first().copied().unwrap_or(0.0);
    Ok(StabilityReport {
        role: fit.role,
        eigen_moduli: moduli,
        max_modulus,
        stable: max_modulus < 1.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CusumEquation {
    pub equation: usize,
    pub sigma: f64,
    pub path: Vec<f64>,
    pub sup_stat: f64,
    pub rejected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CusumReport {
    pub role: EquationRole,
    pub alpha: f64,
    pub critical_value: f64,
    pub equations: Vec<CusumEquation>,
}

impl CusumReport {
    pub fn any_rejected(&self) -> bool {
        self.equations.iter().any(|e| e.rejected)
    }
}

/// Scaled partial sums S_m / (σ̂ √N) of one residual series, where σ̂ uses
/// `df` degrees of freedom. Returns the path and σ̂.
pub fn cusum_path(residuals: &[f64], df: usize) -> Result<(Vec<f64>, f64)> {
    if residuals.is_empty() || df == 0 {
        return Err(Error::DegenerateFit("no residual degrees of freedom".into()));
    }
    let ss: f64 = residuals.iter().map(|u| u * u).sum();
    if !(ss > 0.0) {
        return Err(Error::DegenerateFit("residual variance is zero".into()));
    }
    let sigma = (ss / df as f64).sqrt();
    let denom = sigma * (residuals.len() as f64).sqrt();
    let mut acc = 0.0;
    let path = residuals
        .iter()
        .map(|u| {
            acc += u;
            acc / denom
        })
        .collect();
    Ok((path, sigma))
}

pub fn ols_cusum(fit: &VarxFit, alpha: f64) -> Result<CusumReport> {
    let critical_value = cusum_critical_value(alpha)?;
    let df = fit.df_resid();
    let mut equations = Vec::with_capacity(fit.n_countries());
    for i in 0..fit.n_countries() {
        let resid: Vec<f64> = fit.residuals.column(i).iter().copied().collect();
        let (path, sigma) =
            cusum_path(&resid, df).map_err(|e| Error::DegenerateFit(format!("{} equation {i}: {e}", fit.role)))?;
        let sup_stat = path.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        equations.push(CusumEquation {
            equation: i,
            sigma,
            path,
            sup_stat,
            rejected: sup_stat > critical_value,
        });
    }
    Ok(CusumReport {
        role: fit.role,
        alpha,
        critical_value,
        equations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub gdp_stability: StabilityReport,
    pub cpi_stability: StabilityReport,
    pub gdp_cusum: CusumReport,
    pub cpi_cusum: CusumReport,
    /// Both lines dynamically stable.
    pub stable: bool,
}

pub fn diagnose(fit: &CoupledFit, alpha: f64) -> Result<DiagnosticsReport> {
    let gdp_stability = companion_stability(&fit.gdp_fit)?;
    let cpi_stability = companion_stability(&fit.cpi_fit)?;
    let stable = gdp_stability.stable && cpi_stability.stable;
    Ok(DiagnosticsReport {
        gdp_stability,
        cpi_stability,
        gdp_cusum: ols_cusum(&fit.gdp_fit, alpha)?,
        cpi_cusum: ols_cusum(&fit.cpi_fit, alpha)?,
        stable,
    })
}
