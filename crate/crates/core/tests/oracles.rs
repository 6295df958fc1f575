mod common;

use nalgebra::{DMatrix, DVector};
use varxnet::diagnostics::{companion_matrix, eigen_moduli};
use varxnet::fdist::f_sf;
use varxnet::granger::{block_f_test, build_adjacency, NetworkRole};
use varxnet::synth::{random_stable_spec, simulate, NormalStream};
use varxnet::varx::{min_periods, EquationRole};
use varxnet::{fit_coupled, fit_varx, Correction, Panel};

use common::*;

fn small_panel(seed: u64, n: usize, p: usize, t: usize) -> Panel {
    let mut spec = random_stable_spec(n, p, seed, 0.8).unwrap();
    spec.burn_in = 40;
    simulate(&spec, t).unwrap()
}

#[test]
fn ols_matches_normal_equations() {
    for (k, (n, p)) in [(1, 1), (2, 1), (3, 1), (2, 2), (3, 2)].into_iter().enumerate() {
        let panel = small_panel(k as u64, n, p, 30);
        let fit = fit_coupled(&panel, p).unwrap();
        let x = design_rows(panel.x(), panel.y(), p, p, None);
        for i in 0..n {
            let y: Vec<f64> = (p..30).map(|r| panel.x()[(r, i)]).collect();
            let (beta, rss) = normal_equations(&x, &y);
            let scale = beta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(rel_close(fit.gdp_fit.intercept[i], beta[0], 1e-8, scale));
            for s in 0..p {
                for j in 0..n {
                    assert!(rel_close(fit.gdp_fit.endog_coefs[s][(i, j)], beta[1 + s * n + j], 1e-8, scale));
                    assert!(rel_close(fit.gdp_fit.exog_coefs[s][(i, j)], beta[1 + p * n + s * n + j], 1e-8, scale));
                }
            }
            assert!(rel_close(fit.gdp_fit.rss_per_equation[i], rss, 1e-8, 0.0));
        }
    }
}

#[test]
fn exact_recurrence_is_recovered() {
    let (n, p, t) = (3, 2, 40);
    let mut rng = NormalStream::new(77);
    let exog = DMatrix::from_fn(t, n, |_, _| rng.next_normal());
    let a: Vec<DMatrix<f64>> = (0..p).map(|_| uniform_matrix(n, n, &mut rng, 0.25)).collect();
    let b: Vec<DMatrix<f64>> = (0..p).map(|_| uniform_matrix(n, n, &mut rng, 1.0)).collect();
    let c = DVector::from_fn(n, |_, _| rng.next_normal());
    let mut endog = DMatrix::from_fn(t, n, |_, _| rng.next_normal());
    for r in p..t {
        let mut v = c.clone();
        for s in 0..p {
            v += &a[s] * endog.row(r - s - 1).transpose() + &b[s] * exog.row(r - s - 1).transpose();
        }
        endog.set_row(r, &v.transpose());
    }
    let fit = fit_varx(&endog, &exog, p, EquationRole::GdpEquation).unwrap();
    assert!((fit.intercept.clone() - c).amax() <= 1e-8);
    for s in 0..p {
        assert!((&fit.endog_coefs[s] - &a[s]).amax() <= 1e-8);
        assert!((&fit.exog_coefs[s] - &b[s]).amax() <= 1e-8);
    }
    assert!(fit.residuals.amax() <= 1e-8);
}

#[test]
fn residual_bookkeeping() {
    let panel = small_panel(9, 3, 2, 60);
    let fit = fit_coupled(&panel, 2).unwrap();
    for line in [&fit.gdp_fit, &fit.cpi_fit] {
        let (endog, exog) = match line.role {
            EquationRole::GdpEquation => (panel.x(), panel.y()),
            EquationRole::CpiEquation => (panel.y(), panel.x()),
        };
        let x = design_rows(endog, exog, 2, 2, None);
        for i in 0..3 {
            let col = line.residuals.column(i);
            assert!(rel_close(line.rss_per_equation[i], col.norm_squared(), 1e-12, 0.0));
            for c in 0..x[0].len() {
                let dot: f64 = x.iter().zip(col.iter()).map(|(row, u)| row[c] * u).sum();
                let scale = x.iter().map(|row| row[c] * row[c]).sum::<f64>().sqrt();
                assert!(dot.abs() <= 1e-8 * scale, "column {c}: {dot}");
            }
        }
        let eig = line.resid_cov.clone().symmetric_eigen().eigenvalues;
        assert!(eig.iter().all(|v| *v >= -1e-10));
    }
}

#[test]
fn f_statistics_match_two_regressions() {
    for seed in 0..12 {
        let n = 1 + seed as usize % 3;
        let p = 1 + seed as usize % 2;
        assert!(min_periods(n, p) < 20);
        let panel = small_panel(500 + seed, n, p, 20);
        let fit = fit_coupled(&panel, p).unwrap();
        for role in NetworkRole::ALL {
            let (endog, exog) = match role.equation() {
                EquationRole::GdpEquation => (panel.x(), panel.y()),
                EquationRole::CpiEquation => (panel.y(), panel.x()),
            };
            let exog_block = role.source_kind() != role.target_kind();
            for i in 0..n {
                for j in 0..n {
                    let test =
                        block_f_test(&panel, &fit, (role.target_kind(), i), (role.source_kind(), j), 0.05).unwrap();
                    let (f, d1, d2) = brute_force_f(endog, exog, p, i, (exog_block, j));
                    assert!(rel_close(test.f_stat, f, 1e-8, 0.0), "{role} {i}<-{j}: {} vs {f}", test.f_stat);
                    assert_eq!((test.df_num, test.df_den), (d1, d2));
                }
            }
        }
    }
}

#[test]
fn f_tail_matches_density_quadrature() {
    for &(f, d1, d2) in &[
        (0.3, 1, 5),
        (1.0, 1, 1),
        (2.5, 2, 7),
        (4.1, 1, 17),
        (7.9, 2, 40),
        (0.05, 2, 3),
        (12.0, 1, 290),
        (3.3, 3, 11),
    ] {
        let ours = f_sf(f, d1, d2);
        let quad = f_upper_tail_quadrature(f, d1, d2);
        assert!((ours - quad).abs() <= 1e-6, "F({d1},{d2}) at {f}: {ours} vs {quad}");
    }
}

#[test]
fn weights_are_block_sums() {
    let panel = small_panel(31, 3, 2, 80);
    let fit = fit_coupled(&panel, 2).unwrap();
    for role in NetworkRole::ALL {
        let adj = build_adjacency(&panel, &fit, role, 0.5, Correction::None).unwrap();
        let line = fit.fit(role.equation());
        let block = if role.source_kind() == role.target_kind() {
            &line.endog_coefs
        } else {
            &line.exog_coefs
        };
        for i in 0..3 {
            for j in 0..3 {
                let w = adj.matrix[(i, j)];
                if w != 0.0 {
                    let sum: f64 = block.iter().map(|m| m[(i, j)]).sum();
                    assert_eq!(w.to_bits(), sum.to_bits());
                }
            }
        }
    }
}

#[test]
fn companion_moduli_match_polynomial_roots() {
    let mut rng = NormalStream::new(3);
    for p in 1..=3 {
        for _ in 0..10 {
            let lags: Vec<DMatrix<f64>> = (0..p).map(|_| uniform_matrix(2, 2, &mut rng, 0.9)).collect();
            let ours = eigen_moduli(&companion_matrix(&lags)).unwrap();
            let mut oracle: Vec<f64> = durand_kerner(&char_poly_2x2(&lags)).iter().map(|z| z.norm()).collect();
            oracle.sort_by(|a, b| b.total_cmp(a));
            assert_eq!(ours.len(), oracle.len());
            for (a, b) in ours.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-6, "{ours:?} vs {oracle:?}");
            }
        }
    }
}

/// Two separate line recursions driven by the same draws as the generator.
fn two_line_recursion(spec: &varxnet::GeneratorSpec, t: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = spec.n();
    let total = spec.burn_in + t;
    let lo = spec.omega.clone().cholesky().unwrap().l();
    let ls = spec.sigma.clone().cholesky().unwrap().l();
    let mut rng = NormalStream::new(spec.seed);
    let mut xs: Vec<DVector<f64>> = Vec::new();
    let mut ys: Vec<DVector<f64>> = Vec::new();
    for step in 0..total {
        let mut x = spec.b.clone();
        let mut y = spec.c.clone();
        for s in 0..spec.p {
            if step > s {
                x += &spec.phi[s] * &xs[step - s - 1] + &spec.pi[s] * &ys[step - s - 1];
                y += &spec.gamma[s] * &xs[step - s - 1] + &spec.psi[s] * &ys[step - s - 1];
            }
        }
        if !spec.noise_free {
            let e1 = DVector::from_fn(n, |_, _| rng.next_normal());
            let e2 = DVector::from_fn(n, |_, _| rng.next_normal());
            x += &lo * e1;
            y += &ls * e2;
        }
        xs.push(x);
        ys.push(y);
    }
    let x = DMatrix::from_fn(t, n, |r, c| xs[spec.burn_in + r][c]);
    let y = DMatrix::from_fn(t, n, |r, c| ys[spec.burn_in + r][c]);
    (x, y)
}

#[test]
fn joint_simulation_matches_two_line_recursion() {
    for noise_free in [true, false] {
        let mut spec = random_stable_spec(3, 2, 8, 0.9).unwrap();
        spec.noise_free = noise_free;
        spec.burn_in = 25;
        let panel = simulate(&spec, 50).unwrap();
        let (x, y) = two_line_recursion(&spec, 50);
        let scale = 1.0 + x.amax().max(y.amax());
        assert!((panel.x() - &x).amax() <= 1e-12 * scale);
        assert!((panel.y() - &y).amax() <= 1e-12 * scale);
    }
}

#[test]
fn noise_free_path_settles_at_stationary_mean() {
    let mut spec = random_stable_spec(2, 2, 12, 0.6).unwrap();
    spec.noise_free = true;
    spec.burn_in = 400;
    let panel = simulate(&spec, 5).unwrap();
    // (I - Σ A_s) μ = intercept for the stacked 4-dim system
    let m = 4;
    let mut a = vec![vec![0.0; m]; m];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for s in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                a[i][j] -= spec.phi[s][(i, j)];
                a[i][j + 2] -= spec.pi[s][(i, j)];
                a[i + 2][j] -= spec.gamma[s][(i, j)];
                a[i + 2][j + 2] -= spec.psi[s][(i, j)];
            }
        }
    }
    let mu = solve(a, vec![spec.b[0], spec.b[1], spec.c[0], spec.c[1]]);
    for r in 0..5 {
        for j in 0..2 {
            assert!((panel.x()[(r, j)] - mu[j]).abs() <= 1e-10);
            assert!((panel.y()[(r, j)] - mu[j + 2]).abs() <= 1e-10);
        }
    }
}
