//! Reference computations for the integration and acceptance tests. Nothing
//! here calls the library's estimation code.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use varxnet::synth::{GeneratorSpec, NormalStream};

/// Regressor rows for t = start..T in the order
/// [1, endog lag 1..p (country-major within lag), exog lag 1..p].
/// `skip` removes one (block, country) pair across all lags.
pub fn design_rows(
    endog: &DMatrix<f64>,
    exog: &DMatrix<f64>,
    p: usize,
    start: usize,
    skip: Option<(bool, usize)>,
) -> Vec<Vec<f64>> {
    let (t, n) = endog.shape();
    (start..t)
        .map(|r| {
            let mut row = vec![1.0];
            for (is_exog, data) in [(false, endog), (true, exog)] {
                for s in 1..=p {
                    for j in 0..n {
                        if skip == Some((is_exog, j)) {
                            continue;
                        }
                        row.push(data[(r - s, j)]);
                    }
                }
            }
            row
        })
        .collect()
}

/// Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Least squares through the normal equations. Returns (coefficients, RSS).
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let k = x[0].len();
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for (row, &yv) in x.iter().zip(y) {
        for a in 0..k {
            xty[a] += row[a] * yv;
            for b in 0..k {
                xtx[a][b] += row[a] * row[b];
            }
        }
    }
    let beta = solve(xtx, xty);
    let rss = x
        .iter()
        .zip(y)
        .map(|(row, &yv)| {
            let fit: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            (yv - fit).powi(2)
        })
        .sum();
    (beta, rss)
}

/// F statistic from two independent regressions of one target column.
pub fn brute_force_f(
    endog: &DMatrix<f64>,
    exog: &DMatrix<f64>,
    p: usize,
    target: usize,
    source: (bool, usize),
) -> (f64, usize, usize) {
    let t = endog.nrows();
    let y: Vec<f64> = (p..t).map(|r| endog[(r, target)]).collect();
    let full = design_rows(endog, exog, p, p, None);
    let restricted = design_rows(endog, exog, p, p, Some(source));
    let (_, rss_u) = normal_equations(&full, &y);
    let (_, rss_r) = normal_equations(&restricted, &y);
    let df_den = y.len() - full[0].len();
    let f = ((rss_r - rss_u) / p as f64) / (rss_u / df_den as f64);
    (f, p, df_den)
}

/// ln Γ(m/2) for a positive integer m, by the exact half-step recurrence.
pub fn ln_gamma_half(m: u32) -> f64 {
    let (mut acc, mut x) = if m % 2 == 0 { (0.0, 1.0) } else { (0.5 * std::f64::consts::PI.ln(), 0.5) };
    let target = m as f64 / 2.0;
    while x < target {
        acc += x.ln();
        x += 1.0;
    }
    acc
}

/// Upper tail of F(d1, d2) by Simpson quadrature of the density with x = u².
pub fn f_upper_tail_quadrature(f: f64, d1: u32, d2: u32) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    let (a, b) = (d1 as f64, d2 as f64);
    let ln_beta = ln_gamma_half(d1) + ln_gamma_half(d2) - ln_gamma_half(d1 + d2);
    let ln_c = 0.5 * a * (a / b).ln() - ln_beta;
    // density(u²) · 2u, which stays finite at u = 0 for d1 = 1
    let g = |u: f64| {
        let x = u * u;
        2.0 * (ln_c - 0.5 * (a + b) * (1.0 + a * x / b).ln()).exp() * u.powi(d1 as i32 - 1)
    };
    let upper = f.sqrt();
    let steps = 40_000;
    let h = upper / steps as f64;
    let mut sum = g(0.0) + g(upper);
    for i in 1..steps {
        sum += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - sum * h / 3.0
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// det(λ^p I - Σ A_s λ^(p-s)) for 2 × 2 lag matrices, lowest degree first.
pub fn char_poly_2x2(lags: &[DMatrix<f64>]) -> Vec<f64> {
    let p = lags.len();
    let entry = |i: usize, j: usize| {
        let mut c = vec![0.0; p + 1];
        if i == j {
            c[p] = 1.0;
        }
        for (s, a) in lags.iter().enumerate() {
            c[p - (s + 1)] -= a[(i, j)];
        }
        c
    };
    let d = poly_mul(&entry(0, 0), &entry(1, 1));
    let o = poly_mul(&entry(0, 1), &entry(1, 0));
    d.iter().zip(&o).map(|(x, y)| x - y).collect()
}

/// Durand–Kerner iteration for the roots of a monic polynomial.
pub fn durand_kerner(coefs: &[f64]) -> Vec<Complex<f64>> {
    let deg = coefs.len() - 1;
    let lead = coefs[deg];
    let eval = |z: Complex<f64>| coefs.iter().rev().fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c / lead);
    let seed = Complex::new(0.4, 0.9);
    let mut roots: Vec<Complex<f64>> = (0..deg).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..5000 {
        let mut delta = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex::new(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots
}

pub fn uniform_matrix(rows: usize, cols: usize, rng: &mut NormalStream, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * (2.0 * rng.next_uniform() - 1.0))
}

/// Generator with diagonal own-lag blocks and zero cross blocks.
pub fn diagonal_spec(n: usize, own: f64, noise_var: f64, seed: u64) -> GeneratorSpec {
    let mut spec = GeneratorSpec::zeros(n, 1);
    spec.phi = vec![DMatrix::from_diagonal_element(n, n, own)];
    spec.psi = vec![DMatrix::from_diagonal_element(n, n, own)];
    spec.omega = DMatrix::from_diagonal_element(n, n, noise_var);
    spec.sigma = DMatrix::from_diagonal_element(n, n, noise_var);
    spec.seed = seed;
    spec
}

/// |a - b| <= tol · max(|a|, |b|, scale). `scale` is the size of the vector
/// an entry belongs to, so near-zero entries are judged against it.
pub fn rel_close(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(scale)
}
