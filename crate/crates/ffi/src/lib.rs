//! C ABI for critsense.
//!
//! Every function returns a [`CsStatus`]; on failure a message is available
//! from [`cs_last_error`] on the calling thread until the next call.
//! Probes are opaque handles created with [`cs_probe_new`] and released
//! with [`cs_probe_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use critsense::fisher::{cfi_matrix, qfi_matrix, DerivativeMethod, Parameters};
use critsense::global_metric::{
    g_multi, ExactEngine, FreeFermionEngine, QuadratureOptions, SensingRegion, WeightMatrix,
};
use critsense::lattice::{ground_state, ControlField, FieldPoint, Hamiltonian, ProbeConfig, SolverMethod};
use critsense::Error;

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsStatus {
    CsOk = 0,
    CsNullPointer = 1,
    CsInvalidInput = 2,
    CsDegenerate = 3,
    CsNoConvergence = 4,
    CsSingular = 5,
    CsDiverging = 6,
    CsTooLarge = 7,
    CsNumerical = 8,
    CsPanic = 9,
}

/// Opaque probe: chain length, coupling and control field.
pub struct CsProbe {
    config: ProbeConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CsStatus {
    match e {
        Error::InvalidInput(_) => CsStatus::CsInvalidInput,
        Error::DegenerateGround { .. } => CsStatus::CsDegenerate,
        Error::NoConvergence { .. } => CsStatus::CsNoConvergence,
        Error::SingularInformation { .. } => CsStatus::CsSingular,
        Error::DivergingIntegrand { .. } => CsStatus::CsDiverging,
        Error::TooLarge { .. } => CsStatus::CsTooLarge,
        Error::NodeFailure { source, .. } => status_of(source),
        Error::EmptyDistribution { .. } | Error::SearchFailed(_) => CsStatus::CsNumerical,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), Error>>(f: F) -> CsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CsStatus::CsOk,
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            CsStatus::CsPanic
        }
    }
}

macro_rules! non_null {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            set_error("null pointer argument".into());
            return CsStatus::CsNullPointer;
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL.
/// The pointer stays valid until the next call into the library.
#[no_mangle]
pub extern "C" fn cs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Create a probe. `*out` receives the handle.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn cs_probe_new(
    length: usize,
    coupling: f64,
    bx: f64,
    bz: f64,
    out: *mut *mut CsProbe,
) -> CsStatus {
    non_null!(out);
    guard(|| {
        let config = ProbeConfig::new(length, coupling, ControlField::new(bx, bz))?;
        *out = Box::into_raw(Box::new(CsProbe { config }));
        Ok(())
    })
}

/// Release a probe. NULL is ignored.
///
/// # Safety
/// `probe` must come from [`cs_probe_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cs_probe_free(probe: *mut CsProbe) {
    if !probe.is_null() {
        drop(Box::from_raw(probe));
    }
}

/// Change the control field of a probe.
///
/// # Safety
/// `probe` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_probe_set_control(probe: *mut CsProbe, bx: f64, bz: f64) -> CsStatus {
    non_null!(probe);
    guard(|| {
        let p = &mut *probe;
        let config = ProbeConfig::new(p.config.length, p.config.coupling, ControlField::new(bx, bz))?;
        p.config = config;
        Ok(())
    })
}

/// Ground energy and gap at unknown field `(hx, hz)`.
///
/// # Safety
/// `probe` must be a live handle; `energy` and `gap` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cs_ground_energy(
    probe: *const CsProbe,
    hx: f64,
    hz: f64,
    energy: *mut f64,
    gap: *mut f64,
) -> CsStatus {
    non_null!(probe, energy, gap);
    guard(|| {
        let config = &(*probe).config;
        let h = Hamiltonian::new(config, &FieldPoint::new(hx, hz))?;
        let method = SolverMethod::auto(h.dim(), critsense::fisher::AUTO_DENSE_DIM);
        let sol = ground_state(&h, method)?;
        *energy = sol.ground_energy();
        *gap = sol.gap.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// 2×2 QFI matrix, row-major into `out[4]`, ordered `(h_x, h_z)`.
///
/// # Safety
/// `probe` must be a live handle; `out` valid for 4 writes.
#[no_mangle]
pub unsafe extern "C" fn cs_qfi_matrix(probe: *const CsProbe, hx: f64, hz: f64, out: *mut f64) -> CsStatus {
    non_null!(probe, out);
    guard(|| {
        let config = &(*probe).config;
        let method = DerivativeMethod::auto(config.length);
        let f = qfi_matrix(config, &FieldPoint::new(hx, hz), Parameters::Skew, method)?.matrix;
        write_matrix(f.entries(), out);
        Ok(())
    })
}

/// 2×2 CFI matrix of the magnetization measurement, row-major into `out[4]`.
/// `excluded_mass` may be NULL.
///
/// # Safety
/// `probe` must be a live handle; `out` valid for 4 writes.
#[no_mangle]
pub unsafe extern "C" fn cs_cfi_matrix(
    probe: *const CsProbe,
    hx: f64,
    hz: f64,
    step: f64,
    out: *mut f64,
    excluded_mass: *mut f64,
) -> CsStatus {
    non_null!(probe, out);
    guard(|| {
        let c = cfi_matrix(&(*probe).config, &FieldPoint::new(hx, hz), Parameters::Skew, step)?;
        write_matrix(c.matrix.entries(), out);
        if !excluded_mass.is_null() {
            *excluded_mass = c.excluded_mass;
        }
        Ok(())
    })
}

unsafe fn write_matrix(m: [[f64; 2]; 2], out: *mut f64) {
    let out = std::slice::from_raw_parts_mut(out, 4);
    out.copy_from_slice(&[m[0][0], m[0][1], m[1][0], m[1][1]]);
}

fn quadrature(initial_nodes: usize) -> QuadratureOptions {
    let mut q = QuadratureOptions::default();
    if initial_nodes > 0 {
        q.initial_nodes = initial_nodes;
        q.max_nodes = q.max_nodes.max(initial_nodes);
    }
    q
}

/// Two-parameter `g` of the probe over a rectangle with identity weights.
/// `initial_nodes = 0` picks the default rule.
///
/// # Safety
/// `probe` must be a live handle; `g` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cs_g_multi(
    probe: *const CsProbe,
    center_x: f64,
    center_z: f64,
    width_x: f64,
    width_z: f64,
    initial_nodes: usize,
    g: *mut f64,
) -> CsStatus {
    non_null!(probe, g);
    guard(|| {
        let engine = ExactEngine::new((*probe).config, Parameters::Skew);
        let region = SensingRegion::rectangle([center_x, center_z], [width_x, width_z])?;
        *g = g_multi(&engine, &region, &WeightMatrix::identity(2), &quadrature(initial_nodes))?.value;
        Ok(())
    })
}

/// Transverse-field QFI from the free-fermion solution (Richardson-extrapolated).
///
/// # Safety
/// `qfi` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cs_ff_qfi(length: usize, coupling: f64, field: f64, step: f64, qfi: *mut f64) -> CsStatus {
    non_null!(qfi);
    guard(|| {
        *qfi = critsense::free_fermion::qfi_transverse(field, coupling, length, step)?.qfi_extrapolated;
        Ok(())
    })
}

/// Single-parameter `g` with the free-fermion engine at control `bz`.
///
/// # Safety
/// `g` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cs_ff_g_single(
    length: usize,
    coupling: f64,
    bz: f64,
    center: f64,
    width: f64,
    initial_nodes: usize,
    g: *mut f64,
) -> CsStatus {
    non_null!(g);
    guard(|| {
        let engine = FreeFermionEngine::new(length, coupling, bz);
        let region = SensingRegion::single(center, width)?;
        *g = critsense::global_metric::g_single(&engine, &region, &quadrature(initial_nodes))?.value;
        Ok(())
    })
}
