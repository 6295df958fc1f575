//! Householder QR least squares shared by every regression in the crate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Smallest admissible ratio of |R_jj| to max |R_ii| after column scaling.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct LeastSquares {
    /// k × m, one column per target.
    pub coefs: DMatrix<f64>,
    /// rows × m.
    pub residuals: DMatrix<f64>,
    pub rss: DVector<f64>,
    /// Diagonal of (XᵀX)⁻¹.
    pub unscaled_cov_diag: DVector<f64>,
}

/// Solves min ‖X·B − Y‖ column by column through one Householder QR of `design`.
///
/// Columns are scaled to unit norm before factorisation so that the rank test
/// does not depend on the units of the regressors. `column_name` labels
/// offending columns in the singularity error.
pub fn qr_least_squares(
    design: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    column_name: impl Fn(usize) -> String,
) -> Result<LeastSquares> {
    let (rows, k) = design.shape();
    if targets.nrows() != rows {
        return Err(Error::Dimension(format!(
            "design has {rows} rows, targets have {}",
            targets.nrows()
        )));
    }
    if rows <= k {
        return Err(Error::Dimension(format!(
            "{rows} observations for {k} regressors; need more observations than regressors"
        )));
    }
    let m = targets.ncols();

    let scale: Vec<f64> = design.column_iter().map(|c| c.norm()).collect();
    let zero_cols: Vec<String> = scale
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == 0.0 || !s.is_finite())
        .map(|(j, _)| column_name(j))
        .collect();
    if !zero_cols.is_empty() {
        return Err(Error::Singular { columns: zero_cols });
    }

    let mut a = DMatrix::from_fn(rows, k, |r, c| design[(r, c)] / scale[c]);
    let mut qty = targets.clone();
    let mut v = vec![0.0; rows];
    for j in 0..k {
        let norm = (j..rows).map(|r| a[(r, j)] * a[(r, j)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[(j, j)] > 0.0 { -norm } else { norm };
        for r in j..rows {
            v[r] = a[(r, j)];
        }
        v[j] -= alpha;
        let vnorm2: f64 = (j..rows).map(|r| v[r] * v[r]).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for c in j..k {
            let dot: f64 = (j..rows).map(|r| v[r] * a[(r, c)]).sum();
            let f = 2.0 * dot / vnorm2;
            for r in j..rows {
                a[(r, c)] -= f * v[r];
            }
        }
        for c in 0..m {
            let dot: f64 = (j..rows).map(|r| v[r] * qty[(r, c)]).sum();
            let f = 2.0 * dot / vnorm2;
            for r in j..rows {
                qty[(r, c)] -= f * v[r];
            }
        }
    }

    let diag: Vec<f64> = (0..k).map(|j| a[(j, j)].abs()).collect();
    let max_diag = diag.iter().cloned().fold(0.0, f64::max);
    let weak: Vec<String> = diag
        .iter()
        .enumerate()
        .filter(|(_, d)| !(**d >= RANK_TOLERANCE * max_diag))
        .map(|(j, _)| column_name(j))
        .collect();
    if !weak.is_empty() {
        return Err(Error::Singular { columns: weak });
    }

    // Back substitution for the scaled coefficients, then undo the scaling.
    let mut coefs = DMatrix::zeros(k, m);
    for c in 0..m {
        for j in (0..k).rev() {
            let mut s = qty[(j, c)];
            for l in j + 1..k {
                s -= a[(j, l)] * coefs[(l, c)];
            }
            coefs[(j, c)] = s / a[(j, j)];
        }
    }
    for j in 0..k {
        for c in 0..m {
            coefs[(j, c)] /= scale[j];
        }
    }

    // R⁻¹ row norms give diag((RᵀR)⁻¹).
    let mut rinv = DMatrix::<f64>::zeros(k, k);
    for col in 0..k {
        for j in (0..=col).rev() {
            let mut s = if j == col { 1.0 } else { 0.0 };
            for l in j + 1..=col {
                s -= a[(j, l)] * rinv[(l, col)];
            }
            rinv[(j, col)] = s / a[(j, j)];
        }
    }
    let unscaled_cov_diag = DVector::from_fn(k, |j, _| rinv.row(j).norm_squared() / (scale[j] * scale[j]));

    let residuals = targets - design * &coefs;
    let rss = DVector::from_fn(m, |c, _| residuals.column(c).norm_squared());
    Ok(LeastSquares {
        coefs,
        residuals,
        rss,
        unscaled_cov_diag,
    })
}

/// ln det of a symmetric positive definite matrix.
pub fn ln_det_spd(m: &DMatrix<f64>) -> Result<f64> {
    let chol = nalgebra::Cholesky::new(m.clone())
        .ok_or_else(|| Error::Definiteness("matrix is not positive definite".into()))?;
    let l = chol.l();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) {
            return Err(Error::Definiteness("zero pivot in Cholesky factor".into()));
        }
        acc += d.ln();
    }
    Ok(2.0 * acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn name(j: usize) -> String {
        format!("c{j}")
    }

    #[test]
    fn exact_line() {
        let x = DMatrix::from_fn(6, 2, |r, c| if c == 0 { 1.0 } else { r as f64 });
        let y = DMatrix::from_fn(6, 1, |r, _| 3.0 - 0.5 * r as f64);
        let ls = qr_least_squares(&x, &y, name).unwrap();
        assert!((ls.coefs[(0, 0)] - 3.0).abs() < 1e-12);
        assert!((ls.coefs[(1, 0)] + 0.5).abs() < 1e-12);
        assert!(ls.rss[0] < 1e-24);
    }

    #[test]
    fn duplicate_column_is_singular() {
        let x = DMatrix::from_fn(8, 3, |r, c| match c {
            0 => 1.0,
            _ => (r as f64).sin(),
        });
        let y = DMatrix::from_fn(8, 1, |r, _| r as f64);
        match qr_least_squares(&x, &y, name).unwrap_err() {
            Error::Singular { columns } => assert_eq!(columns, vec!["c2".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_column_is_singular() {
        let x = DMatrix::from_fn(8, 2, |r, c| if c == 0 { 1.0 } else { 0.0 * r as f64 });
        let y = DMatrix::from_element(8, 1, 1.0);
        assert!(matches!(qr_least_squares(&x, &y, name), Err(Error::Singular { .. })));
    }

    #[test]
    fn unscaled_cov_matches_inverse() {
        let x = DMatrix::from_fn(10, 3, |r, c| ((r * 7 + c * 3) % 5) as f64 + c as f64 * 0.3 + if c == 0 { 1.0 } else { 0.0 });
        let y = DMatrix::from_fn(10, 1, |r, _| r as f64);
        let ls = qr_least_squares(&x, &y, name).unwrap();
        let inv = (x.transpose() * &x).try_inverse().unwrap();
        for j in 0..3 {
            assert!((ls.unscaled_cov_diag[j] - inv[(j, j)]).abs() < 1e-10 * inv[(j, j)].abs());
        }
    }

    #[test]
    fn ln_det_identity_scaled() {
        let m = DMatrix::<f64>::identity(3, 3) * 2.0;
        assert!((ln_det_spd(&m).unwrap() - 3.0 * 2f64.ln()).abs() < 1e-14);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(ln_det_spd(&bad).is_err());
    }
}
