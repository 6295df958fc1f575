//! C ABI over the varxnet core.
//!
//! Every function returns a [`VxStatus`]. On failure the message is kept in a
//! thread-local slot readable through [`vx_last_error_message`]. Handles are
//! opaque and must be released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use varxnet::diagnostics::companion_stability;
use varxnet::model::ModelDocument;
use varxnet::{
    align_panel, assemble_network, fit_coupled, interpolate_annual_to_quarterly, load_series_csv, select_lag,
    CausalityNetwork, CoupledFit, Correction, Criterion, EquationRole, Error, Frequency, NetworkRole, Panel,
    Quarter, VariableKind,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Data = 5,
    Singular = 6,
    Numerical = 7,
    Stationarity = 8,
    Model = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VxEquation {
    Gdp = 0,
    Cpi = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VxRole {
    Phi = 0,
    Pi = 1,
    Psi = 2,
    Gamma = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VxCorrection {
    None = 0,
    Bonferroni = 1,
    BenjaminiHochberg = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VxCriterion {
    Aic = 0,
    Bic = 1,
}

/// Aligned quarterly panel.
pub struct VxPanel(Panel);

/// Both fitted lines of the coupled system.
pub struct VxFit(CoupledFit);

/// The four weighted adjacency matrices.
pub struct VxNetwork(CausalityNetwork);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(err: &Error) -> VxStatus {
    match err {
        Error::Schema { .. } | Error::Parse { .. } | Error::Csv(_) | Error::Json(_) => VxStatus::Parse,
        Error::Continuity { .. }
        | Error::InsufficientData(_)
        | Error::Alignment(_)
        | Error::LabelMismatch { .. }
        | Error::Dimension(_) => VxStatus::Data,
        Error::Singular { .. } => VxStatus::Singular,
        Error::Definiteness(_) | Error::Numerical(_) | Error::DegenerateFit(_) => VxStatus::Numerical,
        Error::Stationarity { .. } => VxStatus::Stationarity,
        Error::Equation { source, .. } => status_of(source),
        Error::InvalidArgument(_) => VxStatus::InvalidArgument,
        Error::Model(_) => VxStatus::Model,
        Error::Io { .. } => VxStatus::Io,
    }
}

struct Failure(VxStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail<T>(status: VxStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_last_error();
            VxStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            VxStatus::Panic
        }
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().map_or_else(|| fail(VxStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().map_or_else(|| fail(VxStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn string_arg(p: *const c_char, what: &str) -> Result<String, Failure> {
    if p.is_null() {
        return fail(VxStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .or_else(|_| fail(VxStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn write_matrix(m: &DMatrix<f64>, out: *mut f64, len: usize) -> Result<(), Failure> {
    let needed = m.nrows() * m.ncols();
    if out.is_null() {
        return fail(VxStatus::NullPointer, "output buffer is null");
    }
    if len < needed {
        return fail(VxStatus::BufferTooSmall, format!("buffer holds {len} values, need {needed}"));
    }
    let buf = unsafe { std::slice::from_raw_parts_mut(out, needed) };
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            buf[i * m.ncols() + j] = m[(i, j)];
        }
    }
    Ok(())
}

fn role(r: VxRole) -> NetworkRole {
    match r {
        VxRole::Phi => NetworkRole::Phi,
        VxRole::Pi => NetworkRole::Pi,
        VxRole::Psi => NetworkRole::Psi,
        VxRole::Gamma => NetworkRole::Gamma,
    }
}

fn equation(e: VxEquation) -> EquationRole {
    match e {
        VxEquation::Gdp => EquationRole::GdpEquation,
        VxEquation::Cpi => EquationRole::CpiEquation,
    }
}

fn boxed<T>(value: T, out: &mut *mut T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call into the library.
#[no_mangle]
pub extern "C" fn vx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Reads a panel CSV as written by `varxnet ingest`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn vx_panel_load(path: *const c_char, out: *mut *mut VxPanel) -> VxStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let panel = Panel::load(string_arg(path, "path")?)?;
        boxed(VxPanel(panel), out);
        Ok(())
    })
}

/// Loads the two raw CSV files, interpolates annual CPI at `anchor` (1..4)
/// unless `cpi_quarterly` is nonzero, and aligns them.
///
/// # Safety
/// Paths must be NUL-terminated strings and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn vx_panel_ingest(
    gdp_path: *const c_char,
    cpi_path: *const c_char,
    cpi_quarterly: i32,
    anchor: u8,
    out: *mut *mut VxPanel,
) -> VxStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let gdp = load_series_csv(string_arg(gdp_path, "gdp_path")?, VariableKind::Gdp, Frequency::Quarterly)?;
        let cpi_freq = if cpi_quarterly != 0 { Frequency::Quarterly } else { Frequency::Annual };
        let mut cpi = load_series_csv(string_arg(cpi_path, "cpi_path")?, VariableKind::Cpi, cpi_freq)?;
        if cpi_quarterly == 0 {
            cpi = interpolate_annual_to_quarterly(&cpi, anchor)?;
        }
        boxed(VxPanel(align_panel(&gdp, &cpi)?), out);
        Ok(())
    })
}

/// Builds a panel from row-major `n_periods × n_countries` arrays. `labels`
/// may be null, in which case countries are named C01, C02, ...
///
/// # Safety
/// `gdp` and `cpi` must each point to `n_periods * n_countries` doubles;
/// `labels`, when not null, to `n_countries` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn vx_panel_from_arrays(
    n_periods: usize,
    n_countries: usize,
    start_year: i32,
    start_quarter: u8,
    gdp: *const f64,
    cpi: *const f64,
    labels: *const *const c_char,
    out: *mut *mut VxPanel,
) -> VxStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if gdp.is_null() || cpi.is_null() {
            return fail(VxStatus::NullPointer, "data array is null");
        }
        let len = n_periods
            .checked_mul(n_countries)
            .ok_or_else(|| Failure(VxStatus::InvalidArgument, "panel size overflows".into()))?;
        let x = DMatrix::from_row_slice(n_periods, n_countries, std::slice::from_raw_parts(gdp, len));
        let y = DMatrix::from_row_slice(n_periods, n_countries, std::slice::from_raw_parts(cpi, len));
        let names = if labels.is_null() {
            varxnet::synth::default_labels(n_countries)
        } else {
            let raw = std::slice::from_raw_parts(labels, n_countries);
            raw.iter().map(|p| string_arg(*p, "label")).collect::<Result<_, _>>()?
        };
        let start = Quarter::new(start_year, start_quarter)?;
        boxed(VxPanel(Panel::from_matrices(names, start, x, y)?), out);
        Ok(())
    })
}

/// # Safety
/// `panel` must be a live handle; `n_periods` and `n_countries` writable.
#[no_mangle]
pub unsafe extern "C" fn vx_panel_dims(
    panel: *const VxPanel,
    n_periods: *mut usize,
    n_countries: *mut usize,
) -> VxStatus {
    guard(|| {
        let panel = &handle(panel, "panel")?.0;
        *out_ptr(n_periods, "n_periods")? = panel.n_periods();
        *out_ptr(n_countries, "n_countries")? = panel.n_countries();
        Ok(())
    })
}

/// Copies the NUL-terminated label of country `index` into `buf`.
///
/// # Safety
/// `panel` must be a live handle and `buf` hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn vx_panel_label(panel: *const VxPanel, index: usize, buf: *mut c_char, len: usize) -> VxStatus {
    guard(|| {
        let panel = &handle(panel, "panel")?.0;
        let label = panel
            .labels()
            .get(index)
            .ok_or_else(|| Failure(VxStatus::InvalidArgument, format!("no country at index {index}")))?;
        if buf.is_null() {
            return fail(VxStatus::NullPointer, "buf is null");
        }
        if len < label.len() + 1 {
            return fail(VxStatus::BufferTooSmall, format!("label needs {} bytes", label.len() + 1));
        }
        ptr::copy_nonoverlapping(label.as_ptr() as *const c_char, buf, label.len());
        *buf.add(label.len()) = 0;
        Ok(())
    })
}

/// # Safety
/// `panel` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vx_panel_free(panel: *mut VxPanel) {
    if !panel.is_null() {
        drop(Box::from_raw(panel));
    }
}

/// Fits both lines at lag order `p`.
///
/// # Safety
/// `panel` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vx_fit(panel: *const VxPanel, p: usize, out: *mut *mut VxFit) -> VxStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let fit = fit_coupled(&handle(panel, "panel")?.0, p)?;
        boxed(VxFit(fit), out);
        Ok(())
    })
}

/// Chooses p in 1..=p_max by the summed criterion of both lines.
///
/// # Safety
/// `panel` must be a live handle and `chosen_p` writable.
#[no_mangle]
pub unsafe extern "C" fn vx_select_lag(
    panel: *const VxPanel,
    p_max: usize,
    criterion: VxCriterion,
    chosen_p: *mut usize,
) -> VxStatus {
    guard(|| {
        let chosen = out_ptr(chosen_p, "chosen_p")?;
        let criterion = match criterion {
            VxCriterion::Aic => Criterion::Aic,
            VxCriterion::Bic => Criterion::Bic,
        };
        *chosen = select_lag(&handle(panel, "panel")?.0, p_max, criterion)?.chosen_p;
        Ok(())
    })
}

/// # Safety
/// `fit` must be a live handle and `p` writable.
#[no_mangle]
pub unsafe extern "C" fn vx_fit_lag_order(fit: *const VxFit, p: *mut usize) -> VxStatus {
    guard(|| {
        *out_ptr(p, "p")? = handle(fit, "fit")?.0.gdp_fit.p;
        Ok(())
    })
}

/// Copies one n × n coefficient matrix, row-major. `exogenous` selects the
/// exogenous block; `lag` counts from 1.
///
/// # Safety
/// `fit` must be a live handle and `out` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn vx_fit_coefficients(
    fit: *const VxFit,
    eq: VxEquation,
    exogenous: i32,
    lag: usize,
    out: *mut f64,
    len: usize,
) -> VxStatus {
    guard(|| {
        let line = handle(fit, "fit")?.0.fit(equation(eq));
        let stack = if exogenous != 0 { &line.exog_coefs } else { &line.endog_coefs };
        if lag == 0 || lag > stack.len() {
            return fail(VxStatus::InvalidArgument, format!("lag {lag} outside 1..={}", stack.len()));
        }
        write_matrix(&stack[lag - 1], out, len)
    })
}

/// Copies the n intercepts of one line.
///
/// # Safety
/// `fit` must be a live handle and `out` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn vx_fit_intercepts(fit: *const VxFit, eq: VxEquation, out: *mut f64, len: usize) -> VxStatus {
    guard(|| {
        let line = handle(fit, "fit")?.0.fit(equation(eq));
        write_matrix(&DMatrix::from_column_slice(1, line.intercept.len(), line.intercept.as_slice()), out, len)
    })
}

/// Largest companion eigenvalue modulus of one line's endogenous block.
///
/// # Safety
/// `fit` must be a live handle and `modulus` writable.
#[no_mangle]
pub unsafe extern "C" fn vx_fit_max_modulus(fit: *const VxFit, eq: VxEquation, modulus: *mut f64) -> VxStatus {
    guard(|| {
        let out = out_ptr(modulus, "modulus")?;
        *out = companion_stability(handle(fit, "fit")?.0.fit(equation(eq)))?.max_modulus;
        Ok(())
    })
}

/// Writes the fit as a model JSON document readable by the CLI.
///
/// # Safety
/// Handles must be live and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn vx_fit_save(fit: *const VxFit, panel: *const VxPanel, path: *const c_char) -> VxStatus {
    guard(|| {
        let fit = &handle(fit, "fit")?.0;
        let panel = &handle(panel, "panel")?.0;
        if fit.labels.as_slice() != panel.labels() {
            return fail(VxStatus::InvalidArgument, "fit and panel have different countries");
        }
        ModelDocument::from_fit(fit, panel, "").save(string_arg(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `fit` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vx_fit_free(fit: *mut VxFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Runs every block F-test and keeps significant lag sums as weights.
///
/// # Safety
/// Handles must be live, `fit` estimated on `panel`, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vx_network_build(
    panel: *const VxPanel,
    fit: *const VxFit,
    alpha: f64,
    correction: VxCorrection,
    out: *mut *mut VxNetwork,
) -> VxStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let correction = match correction {
            VxCorrection::None => Correction::None,
            VxCorrection::Bonferroni => Correction::Bonferroni,
            VxCorrection::BenjaminiHochberg => Correction::BenjaminiHochberg,
        };
        let network = assemble_network(&handle(panel, "panel")?.0, &handle(fit, "fit")?.0, alpha, correction)?;
        boxed(VxNetwork(network), out);
        Ok(())
    })
}

/// Copies one weighted adjacency matrix, row-major, row = target country.
///
/// # Safety
/// `network` must be a live handle and `out` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn vx_network_matrix(network: *const VxNetwork, r: VxRole, out: *mut f64, len: usize) -> VxStatus {
    guard(|| write_matrix(&handle(network, "network")?.0.adjacency(role(r)).matrix, out, len))
}

/// # Safety
/// `network` must be a live handle and `count` writable.
#[no_mangle]
pub unsafe extern "C" fn vx_network_edge_count(network: *const VxNetwork, r: VxRole, count: *mut usize) -> VxStatus {
    guard(|| {
        *out_ptr(count, "count")? = handle(network, "network")?.0.adjacency(role(r)).nonzero_count();
        Ok(())
    })
}

/// # Safety
/// `network` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vx_network_free(network: *mut VxNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

