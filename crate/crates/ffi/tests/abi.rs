use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use varxnet::synth::{random_stable_spec, simulate};
use varxnet::{fit_coupled, Panel};
use varxnet_ffi::*;

fn fixture(name: &str) -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = vx_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn row_major(m: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn sim_panel() -> Panel {
    let spec = random_stable_spec(3, 1, 4, 0.7).unwrap();
    simulate(&spec, 80).unwrap()
}

fn from_panel(panel: &Panel) -> *mut VxPanel {
    let labels: Vec<CString> = panel.labels().iter().map(|l| CString::new(l.as_str()).unwrap()).collect();
    let ptrs: Vec<*const c_char> = labels.iter().map(|c| c.as_ptr()).collect();
    let q = panel.quarters()[0];
    let mut out = ptr::null_mut();
    let status = unsafe {
        vx_panel_from_arrays(
            panel.n_periods(),
            panel.n_countries(),
            q.year(),
            q.quarter(),
            row_major(panel.x()).as_ptr(),
            row_major(panel.y()).as_ptr(),
            ptrs.as_ptr(),
            &mut out,
        )
    };
    assert_eq!(status, VxStatus::Ok);
    out
}

#[test]
fn array_panel_fit_matches_library() {
    let panel = sim_panel();
    let handle = from_panel(&panel);
    let direct = fit_coupled(&panel, 1).unwrap();
    unsafe {
        let (mut t, mut n) = (0, 0);
        assert_eq!(vx_panel_dims(handle, &mut t, &mut n), VxStatus::Ok);
        assert_eq!((t, n), (80, 3));
        let mut label = [0 as c_char; 8];
        assert_eq!(vx_panel_label(handle, 2, label.as_mut_ptr(), label.len()), VxStatus::Ok);
        assert_eq!(CStr::from_ptr(label.as_ptr()).to_str().unwrap(), panel.labels()[2]);

        let mut fit = ptr::null_mut();
        assert_eq!(vx_fit(handle, 1, &mut fit), VxStatus::Ok);
        let mut p = 0;
        assert_eq!(vx_fit_lag_order(fit, &mut p), VxStatus::Ok);
        assert_eq!(p, 1);
        let mut buf = [0.0; 9];
        assert_eq!(vx_fit_coefficients(fit, VxEquation::Cpi, 1, 1, buf.as_mut_ptr(), 9), VxStatus::Ok);
        assert_eq!(buf.to_vec(), row_major(&direct.cpi_fit.exog_coefs[0]));
        let mut icpt = [0.0; 3];
        assert_eq!(vx_fit_intercepts(fit, VxEquation::Gdp, icpt.as_mut_ptr(), 3), VxStatus::Ok);
        assert_eq!(icpt.as_slice(), direct.gdp_fit.intercept.as_slice());
        let mut modulus = 0.0;
        assert_eq!(vx_fit_max_modulus(fit, VxEquation::Gdp, &mut modulus), VxStatus::Ok);
        assert!(modulus > 0.0 && modulus < 1.0);

        let mut net = ptr::null_mut();
        assert_eq!(vx_network_build(handle, fit, 0.05, VxCorrection::BenjaminiHochberg, &mut net), VxStatus::Ok);
        let direct_net =
            varxnet::assemble_network(&panel, &direct, 0.05, varxnet::Correction::BenjaminiHochberg).unwrap();
        for (role, r) in [
            (VxRole::Phi, varxnet::NetworkRole::Phi),
            (VxRole::Pi, varxnet::NetworkRole::Pi),
            (VxRole::Psi, varxnet::NetworkRole::Psi),
            (VxRole::Gamma, varxnet::NetworkRole::Gamma),
        ] {
            assert_eq!(vx_network_matrix(net, role, buf.as_mut_ptr(), 9), VxStatus::Ok);
            assert_eq!(buf.to_vec(), row_major(&direct_net.adjacency(r).matrix));
            let mut count = 0;
            assert_eq!(vx_network_edge_count(net, role, &mut count), VxStatus::Ok);
            assert_eq!(count, direct_net.adjacency(r).nonzero_count());
        }
        vx_network_free(net);
        vx_fit_free(fit);
        vx_panel_free(handle);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let handle = from_panel(&sim_panel());
    unsafe {
        let mut fit = ptr::null_mut();
        assert_eq!(vx_fit(ptr::null(), 1, &mut fit), VxStatus::NullPointer);
        assert!(last_error().contains("panel"));
        assert_eq!(vx_fit(handle, 40, &mut fit), VxStatus::Data);
        assert!(last_error().contains("T="));
        assert!(fit.is_null());

        assert_eq!(vx_fit(handle, 1, &mut fit), VxStatus::Ok);
        assert!(vx_last_error_message().is_null());
        let mut small = [0.0; 4];
        assert_eq!(vx_fit_coefficients(fit, VxEquation::Gdp, 0, 1, small.as_mut_ptr(), 4), VxStatus::BufferTooSmall);
        assert_eq!(vx_fit_coefficients(fit, VxEquation::Gdp, 0, 2, small.as_mut_ptr(), 4), VxStatus::InvalidArgument);
        let mut net = ptr::null_mut();
        assert_eq!(vx_network_build(handle, fit, 1.5, VxCorrection::None, &mut net), VxStatus::InvalidArgument);

        let mut p = 0;
        assert_eq!(vx_select_lag(handle, 0, VxCriterion::Bic, &mut p), VxStatus::InvalidArgument);
        vx_fit_free(fit);
        vx_panel_free(handle);
        vx_panel_free(ptr::null_mut());
    }
}

#[test]
fn fixture_files_through_the_abi() {
    unsafe {
        let mut annual = ptr::null_mut();
        let status = vx_panel_ingest(
            fixture("gdp_quarterly.csv").as_ptr(),
            fixture("cpi_annual.csv").as_ptr(),
            0,
            4,
            &mut annual,
        );
        assert_eq!(status, VxStatus::Ok);
        let mut fit = ptr::null_mut();
        assert_eq!(vx_fit(annual, 1, &mut fit), VxStatus::Singular);
        vx_panel_free(annual);

        let mut panel = ptr::null_mut();
        let status = vx_panel_ingest(
            fixture("gdp_quarterly.csv").as_ptr(),
            fixture("cpi_quarterly.csv").as_ptr(),
            1,
            4,
            &mut panel,
        );
        assert_eq!(status, VxStatus::Ok);
        let (mut t, mut n) = (0, 0);
        vx_panel_dims(panel, &mut t, &mut n);
        assert_eq!((t, n), (45, 13));
        assert_eq!(vx_fit(panel, 1, &mut fit), VxStatus::Ok);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("model.json").to_str().unwrap()).unwrap();
        assert_eq!(vx_fit_save(fit, panel, path.as_ptr()), VxStatus::Ok);
        let doc = varxnet::ModelDocument::load(dir.path().join("model.json")).unwrap();
        assert_eq!(doc.labels.len(), 13);

        let missing = CString::new("/nonexistent/panel.csv").unwrap();
        let mut other = ptr::null_mut();
        assert_eq!(vx_panel_load(missing.as_ptr(), &mut other), VxStatus::Io);
        vx_fit_free(fit);
        vx_panel_free(panel);
    }
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "varxnet.h"

int main(void) {
    double gdp[40 * 2], cpi[40 * 2];
    unsigned s = 12345u;
    for (int i = 0; i < 80; i++) {
        s = s * 1103515245u + 12345u;
        gdp[i] = (double)(s >> 16) / 65536.0;
        s = s * 1103515245u + 12345u;
        cpi[i] = (double)(s >> 16) / 65536.0;
    }
    VxPanel *panel = NULL;
    if (vx_panel_from_arrays(40, 2, 2000, 1, gdp, cpi, NULL, &panel) != VX_STATUS_OK) return 1;
    VxFit *fit = NULL;
    if (vx_fit(panel, 1, &fit) != VX_STATUS_OK) return 2;
    double modulus = -1.0;
    if (vx_fit_max_modulus(fit, VX_EQUATION_GDP, &modulus) != VX_STATUS_OK) return 3;
    VxFit *bad = NULL;
    if (vx_fit(panel, 30, &bad) != VX_STATUS_DATA || vx_last_error_message() == NULL) return 4;
    char label[8];
    if (vx_panel_label(panel, 1, label, sizeof label) != VX_STATUS_OK) return 5;
    printf("%s %.6f\n", label, modulus);
    vx_fit_free(fit);
    vx_panel_free(panel);
    return 0;
}
"#;

#[test]
fn c_program_links_against_header_and_staticlib() {
    let lib = target_dir().join("libvarxnet_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = dir.path().join("smoke");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.starts_with("C02 "), "{text}");
    let modulus: f64 = text.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(modulus >= 0.0 && modulus.is_finite());
}
