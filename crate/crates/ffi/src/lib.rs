//! C interface to `floquet_ep`.
//!
//! Objects are opaque handles created by `fep_*_new`/`fep_*_run` and released
//! with the matching `fep_*_free`. Every fallible call returns an
//! [`FepStatus`]; on failure the message is kept per thread and can be read
//! with [`fep_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use floquet_ep::analytic::ep_contour_square_drive;
use floquet_ep::epmetrics::{observe, Damping, EpObservables, DEFAULT_REALITY_TOL};
use floquet_ep::model::{DissipatorKind, FamilyPoint, LindbladModel, ModelFamily};
use floquet_ep::propagator::propagator_spectrum;
use floquet_ep::sweep::{run_sweep, GridRange, PhaseDiagram, SweepSpec};
use floquet_ep::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FepStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidModel = 3,
    Numerical = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FepFamily {
    Static = 0,
    DriveCos = 1,
    DriveSquare = 2,
    DissCos = 3,
    DissSquare = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FepDissipator {
    Minus = 0,
    Z = 1,
}

/// Per-point EP observables.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FepObservables {
    pub ip: f64,
    /// 1 when every transient eigenvalue is real.
    pub overdamped: i32,
    pub n_real_transients: u32,
    /// 1 when the point sits on an exact coherent degeneracy.
    pub degenerate: i32,
}

/// A qubit model from one of the built-in families.
pub struct FepModel {
    point: FamilyPoint,
    model: LindbladModel,
}

/// Spectral data of the one-period propagator.
pub struct FepSpectrum {
    observables: EpObservables,
}

/// Result of a (γ, Ω) sweep.
pub struct FepPhaseDiagram {
    diagram: PhaseDiagram,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FepStatus {
    match e {
        Error::InvalidArgument(_) | Error::Json(_) => FepStatus::InvalidArgument,
        Error::InvalidModel(_) => FepStatus::InvalidModel,
        Error::Io(_) => FepStatus::Io,
        _ => FepStatus::Numerical,
    }
}

/// Runs `f`, turning errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (FepStatus, String)>) -> FepStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FepStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            FepStatus::Panic
        }
    }
}

fn lib(e: Error) -> (FepStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (FepStatus, String) {
    (FepStatus::NullPointer, format!("{what} is NULL"))
}

fn family(f: FepFamily) -> ModelFamily {
    match f {
        FepFamily::Static => ModelFamily::Static,
        FepFamily::DriveCos => ModelFamily::DriveCos,
        FepFamily::DriveSquare => ModelFamily::DriveSquare,
        FepFamily::DissCos => ModelFamily::DissCos,
        FepFamily::DissSquare => ModelFamily::DissSquare,
    }
}

fn dissipator(d: FepDissipator) -> DissipatorKind {
    match d {
        FepDissipator::Minus => DissipatorKind::Minus,
        FepDissipator::Z => DissipatorKind::Z,
    }
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Copies `src` into `dst[..cap]`; reports the needed length in `*len`.
unsafe fn copy_out(src: &[f64], dst: *mut f64, cap: usize, len: *mut usize) -> Result<(), (FepStatus, String)> {
    if !len.is_null() {
        *len = src.len();
    }
    if src.len() > cap {
        return Err((FepStatus::BufferTooSmall, format!("need {} slots, got {cap}", src.len())));
    }
    if src.is_empty() {
        return Ok(());
    }
    if dst.is_null() {
        return Err(null("output buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fep_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (always
/// NUL-terminated when `cap > 0`). Returns the full message length without
/// the terminator, or 0 when there is no error.
///
/// # Safety
/// `buf` must be valid for `cap` bytes or NULL.
#[no_mangle]
pub unsafe extern "C" fn fep_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Creates a family model. `delta` is the drive modulation depth and only
/// affects `DriveCos`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn fep_model_new(
    fam: FepFamily,
    dis: FepDissipator,
    gamma: f64,
    omega: f64,
    delta: f64,
    out: *mut *mut FepModel,
) -> FepStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let point = FamilyPoint::new(family(fam), dissipator(dis), gamma, omega).with_delta(delta);
        let model = point.build();
        model.validate().map_err(lib)?;
        store(out, FepModel { point, model });
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`fep_model_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fep_model_free(model: *mut FepModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Diagonalises the one-period propagator of `model`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fep_spectrum_compute(model: *const FepModel, out: *mut *mut FepSpectrum) -> FepStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = propagator_spectrum(&model.model).map_err(lib)?;
        let observables = observe(&s, model.point.gamma, DEFAULT_REALITY_TOL).map_err(lib)?;
        store(out, FepSpectrum { observables });
        Ok(())
    })
}

/// # Safety
/// `spectrum` must come from [`fep_spectrum_compute`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fep_spectrum_free(spectrum: *mut FepSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Eigenvalues of `G(T)` sorted by descending real part. `*len` receives the
/// count (4 for a qubit) even when the buffers are too small.
///
/// # Safety
/// `re` and `im` must be valid for `cap` doubles; `len` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn fep_spectrum_eigenvalues(
    spectrum: *const FepSpectrum,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
    len: *mut usize,
) -> FepStatus {
    guard(|| {
        let s = spectrum.as_ref().ok_or_else(|| null("spectrum"))?;
        let ev = &s.observables.eigenvalues;
        let res: Vec<f64> = ev.iter().map(|z| z.re).collect();
        let ims: Vec<f64> = ev.iter().map(|z| z.im).collect();
        copy_out(&res, re, cap, len)?;
        copy_out(&ims, im, cap, ptr::null_mut())
    })
}

/// # Safety
/// `spectrum` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fep_spectrum_observables(spectrum: *const FepSpectrum, out: *mut FepObservables) -> FepStatus {
    guard(|| {
        let s = spectrum.as_ref().ok_or_else(|| null("spectrum"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let o = &s.observables;
        *out = FepObservables {
            ip: o.ip,
            overdamped: i32::from(o.damping == Damping::Overdamped),
            n_real_transients: o.n_real_transients as u32,
            degenerate: i32::from(o.degenerate),
        };
        Ok(())
    })
}

/// Runs a sweep over inclusive uniform grids of `n_gamma` × `n_omega` points.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fep_sweep_run(
    fam: FepFamily,
    dis: FepDissipator,
    delta: f64,
    gamma_lo: f64,
    gamma_hi: f64,
    n_gamma: usize,
    omega_lo: f64,
    omega_hi: f64,
    n_omega: usize,
    out: *mut *mut FepPhaseDiagram,
) -> FepStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = SweepSpec::new(
            family(fam),
            dissipator(dis),
            GridRange::new(gamma_lo, gamma_hi, n_gamma).map_err(lib)?,
            GridRange::new(omega_lo, omega_hi, n_omega).map_err(lib)?,
        )
        .with_delta(delta);
        let diagram = run_sweep(&spec).map_err(lib)?;
        store(out, FepPhaseDiagram { diagram });
        Ok(())
    })
}

/// # Safety
/// `pd` must come from [`fep_sweep_run`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fep_sweep_free(pd: *mut FepPhaseDiagram) {
    if !pd.is_null() {
        drop(Box::from_raw(pd));
    }
}

/// Metric of every cell, row-major `i_gamma * n_omega + j_omega`; failed
/// cells are NaN.
///
/// # Safety
/// `buf` must be valid for `cap` doubles; `len` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn fep_sweep_ip(pd: *const FepPhaseDiagram, buf: *mut f64, cap: usize, len: *mut usize) -> FepStatus {
    guard(|| {
        let pd = pd.as_ref().ok_or_else(|| null("phase diagram"))?;
        let ip: Vec<f64> = pd.diagram.cells.iter().map(|c| c.ip().unwrap_or(f64::NAN)).collect();
        copy_out(&ip, buf, cap, len)
    })
}

/// Writes the sweep CSV to `path` (UTF-8).
///
/// # Safety
/// `pd` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fep_sweep_write_csv(pd: *const FepPhaseDiagram, path: *const c_char) -> FepStatus {
    guard(|| {
        let pd = pd.as_ref().ok_or_else(|| null("phase diagram"))?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (FepStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let file = std::fs::File::create(PathBuf::from(path)).map_err(|e| lib(e.into()))?;
        pd.diagram.write_csv(std::io::BufWriter::new(file)).map_err(lib)
    })
}

/// Closed-form EP strengths of the square-wave drive with a σ₋ dissipator
/// at frequency `omega`, ascending.
///
/// # Safety
/// `roots` must be valid for `cap` doubles; `len` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn fep_ep_contour_square_drive(omega: f64, roots: *mut f64, cap: usize, len: *mut usize) -> FepStatus {
    guard(|| {
        let r = ep_contour_square_drive(omega).map_err(lib)?;
        copy_out(&r, roots, cap, len)
    })
}
