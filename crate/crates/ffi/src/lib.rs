//! C ABI for splinelab.
//!
//! Objects cross the boundary as opaque handles created by `spl_*_new` and
//! released by the matching `spl_*_free`. Every fallible call returns a
//! [`SplStatus`]; on failure [`spl_last_error_message`] describes the error
//! for the calling thread. Indices are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use splinelab::bspline::{eval_basis_into, TensorCoeffs};
use splinelab::gram::fit_decay;
use splinelab::mesh::{KnotVector, Rectangle, TensorMesh};
use splinelab::projection::{lebesgue_constant, named_field, FnField, Projector, QuadratureSpec};
use splinelab::remez::remez_constant;
use splinelab::saks::{verify_psi, BohrDecomposition};
use splinelab::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidKnots = 3,
    OutOfRange = 4,
    DimensionMismatch = 5,
    Numerical = 6,
    CapExceeded = 7,
    PreconditionViolated = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// A knot vector with its order.
pub struct SplKnots(KnotVector);

/// Coefficients of a tensor-product spline.
pub struct SplSpline(TensorCoeffs);

/// A Bohr decomposition of the unit square.
pub struct SplBohr(BohrDecomposition);

/// Scalar callback `f(x, d, user)` evaluated at a point of `[0,1]^d`.
pub type SplField = Option<extern "C" fn(x: *const f64, d: usize, user: *mut c_void) -> f64>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SplStatus {
    use Error::*;
    match e {
        EmptyKnots | InvalidOrder(_) | NonFiniteKnot { .. } | NotSorted { .. } | BadBoundary { .. } | MultiplicityTooHigh { .. } => {
            SplStatus::InvalidKnots
        }
        IndexOutOfRange { .. } | OutOfDomain { .. } => SplStatus::OutOfRange,
        DimensionMismatch { .. } => SplStatus::DimensionMismatch,
        NotPositiveDefinite { .. } | DegenerateFit { .. } | DivisionByZeroRegion { .. } => SplStatus::Numerical,
        InfeasibleSize(_) | SizeCapExceeded { .. } | MeshBlowup { .. } => SplStatus::CapExceeded,
        PreconditionViolated(_) | DegenerateAlpha { .. } | HypothesisNotMet { .. } | NotSubset { .. } => SplStatus::PreconditionViolated,
        InvalidArgument(_) => SplStatus::InvalidArgument,
    }
}

struct Fail(SplStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SplStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SplStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SplStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            SplStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn reference<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn mesh_of(axes: *const *const SplKnots, d: usize) -> Result<TensorMesh, Fail> {
    if d == 0 {
        return Err(Fail(SplStatus::InvalidArgument, "dimension must be at least 1".into()));
    }
    let handles = slice(axes, d, "axes")?;
    let kvs = handles
        .iter()
        .map(|&h| reference(h, "axis handle").map(|k| k.0.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TensorMesh::new(kvs)?)
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn spl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Clears the last error of this thread.
#[no_mangle]
pub extern "C" fn spl_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn spl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a knot vector of order `k` from the full sequence `knots[0..len]`.
///
/// # Safety
/// `knots` must point to `len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_knots_new(knots: *const f64, len: usize, k: usize, out: *mut *mut SplKnots) -> SplStatus {
    guard(|| {
        let raw = slice(knots, len, "knots")?.to_vec();
        let kv = KnotVector::new(raw, k)?;
        store(out, Box::into_raw(Box::new(SplKnots(kv))), "out")
    })
}

/// Uniform open knot vector with `cells` cells and order `k`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_knots_uniform(cells: usize, k: usize, out: *mut *mut SplKnots) -> SplStatus {
    guard(|| {
        let kv = KnotVector::uniform(cells, k)?;
        store(out, Box::into_raw(Box::new(SplKnots(kv))), "out")
    })
}

/// Releases a knot vector; null is ignored.
///
/// # Safety
/// `kv` must come from `spl_knots_new` or `spl_knots_uniform` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn spl_knots_free(kv: *mut SplKnots) {
    if !kv.is_null() {
        drop(Box::from_raw(kv));
    }
}

/// Number of basis functions, or 0 for a null handle.
///
/// # Safety
/// `kv` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn spl_knots_basis_count(kv: *const SplKnots) -> usize {
    kv.as_ref().map_or(0, |k| k.0.basis_count())
}

/// Evaluates the `k` active B-splines at `x` into `values[0..k]` and writes
/// the index of the first one to `first`.
///
/// # Safety
/// `values` must hold `len` doubles and `first` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_knots_eval_basis(
    kv: *const SplKnots,
    x: f64,
    values: *mut f64,
    len: usize,
    first: *mut usize,
) -> SplStatus {
    guard(|| {
        let kv = &reference(kv, "kv")?.0;
        if len < kv.order() {
            return Err(Fail(SplStatus::BufferTooSmall, format!("need {} values, buffer holds {len}", kv.order())));
        }
        let buf = slice_mut(values, len, "values")?;
        let f = eval_basis_into(kv, x, &mut buf[..kv.order()])?;
        store(first, f, "first")
    })
}

/// Fits `max |G⁻¹_ij| ≈ K γ^r` over `r = |i - j|` for the Gram matrix of `kv`.
///
/// # Safety
/// `gamma_hat` and `k_hat` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_gram_decay(kv: *const SplKnots, gamma_hat: *mut f64, k_hat: *mut f64) -> SplStatus {
    guard(|| {
        let fit = fit_decay(&reference(kv, "kv")?.0)?;
        store(gamma_hat, fit.gamma_hat, "gamma_hat")?;
        store(k_hat, fit.k_hat, "k_hat")
    })
}

/// Lebesgue constant of the projection on the mesh `axes[0..d]`, sampled
/// with `density` points per cell and axis.
///
/// # Safety
/// `axes` must hold `d` live handles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_lebesgue_constant(
    axes: *const *const SplKnots,
    d: usize,
    density: usize,
    out: *mut f64,
) -> SplStatus {
    guard(|| {
        let mesh = mesh_of(axes, d)?;
        let rep = lebesgue_constant(&mesh, density)?;
        store(out, rep.lambda, "out")
    })
}

fn project_into(mesh: TensorMesh, f: &dyn splinelab::projection::ScalarField, out: *mut *mut SplSpline) -> Result<(), Fail> {
    let q = QuadratureSpec::for_mesh(&mesh);
    let c = Projector::new(mesh).project(f, q)?;
    unsafe { store(out, Box::into_raw(Box::new(SplSpline(c))), "out") }
}

/// Projects a named test function (`const`, `x`, `xy`, `x2`, `sin2pi`,
/// `runge`, `abs`) onto the spline space of `axes[0..d]`.
///
/// # Safety
/// `axes` must hold `d` live handles, `name` must be a nul-terminated
/// string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_project_named(
    axes: *const *const SplKnots,
    d: usize,
    name: *const c_char,
    out: *mut *mut SplSpline,
) -> SplStatus {
    guard(|| {
        let mesh = mesh_of(axes, d)?;
        if name.is_null() {
            return Err(null("name"));
        }
        let name = CStr::from_ptr(name).to_str().map_err(|e| Fail(SplStatus::InvalidArgument, e.to_string()))?;
        let f = named_field(name, d)?;
        project_into(mesh, &f, out)
    })
}

struct Callback {
    f: extern "C" fn(*const f64, usize, *mut c_void) -> f64,
    user: *mut c_void,
}

// The caller promises the callback may be invoked from several threads.
unsafe impl Sync for Callback {}

impl Callback {
    fn call(&self, x: &[f64]) -> f64 {
        (self.f)(x.as_ptr(), x.len(), self.user)
    }
}

/// Projects the callback `f` onto the spline space of `axes[0..d]`.
/// `f` may be called concurrently from several threads.
///
/// # Safety
/// `axes` must hold `d` live handles, `f` must be safe to call with `user`
/// from any thread, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_project_fn(
    axes: *const *const SplKnots,
    d: usize,
    f: SplField,
    user: *mut c_void,
    out: *mut *mut SplSpline,
) -> SplStatus {
    guard(|| {
        let mesh = mesh_of(axes, d)?;
        let cb = Callback { f: f.ok_or_else(|| null("f"))?, user };
        let field = FnField::new(d, move |x: &[f64]| cb.call(x));
        project_into(mesh, &field, out)
    })
}

/// Releases a spline; null is ignored.
///
/// # Safety
/// `s` must come from a projection call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn spl_spline_free(s: *mut SplSpline) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of coefficients, or 0 for a null handle.
///
/// # Safety
/// `s` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn spl_spline_coeff_count(s: *const SplSpline) -> usize {
    s.as_ref().map_or(0, |s| s.0.coeffs().len())
}

/// Copies the coefficients in row-major order (last axis fastest).
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn spl_spline_coeffs(s: *const SplSpline, buf: *mut f64, len: usize) -> SplStatus {
    guard(|| {
        let c = reference(s, "spline")?.0.coeffs();
        if len < c.len() {
            return Err(Fail(SplStatus::BufferTooSmall, format!("need {} values, buffer holds {len}", c.len())));
        }
        let dst = slice_mut(buf, len, "buf")?;
        for (d, v) in dst.iter_mut().zip(c.iter()) {
            *d = *v;
        }
        Ok(())
    })
}

/// Evaluates the spline at `point[0..d]`.
///
/// # Safety
/// `point` must hold `d` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_spline_eval(s: *const SplSpline, point: *const f64, d: usize, out: *mut f64) -> SplStatus {
    guard(|| {
        let s = &reference(s, "spline")?.0;
        let v = s.eval(slice(point, d, "point")?)?;
        store(out, v, "out")
    })
}

/// Remez constant `c_k` used by the pointwise laboratory.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_remez_constant(k: usize, out: *mut f64) -> SplStatus {
    guard(|| {
        if k == 0 {
            return Err(Fail(SplStatus::InvalidArgument, "order must be at least 1".into()));
        }
        store(out, remez_constant(k), "out")
    })
}

/// Bohr decomposition of the unit square for amplitude `alpha`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_bohr_new(alpha: f64, out: *mut *mut SplBohr) -> SplStatus {
    guard(|| {
        let dec = BohrDecomposition::new(&Rectangle::unit(2), alpha)?;
        store(out, Box::into_raw(Box::new(SplBohr(dec))), "out")
    })
}

/// Releases a decomposition; null is ignored.
///
/// # Safety
/// `b` must come from `spl_bohr_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn spl_bohr_free(b: *mut SplBohr) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// Number of group generations, or 0 for a null handle.
///
/// # Safety
/// `b` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn spl_bohr_generations(b: *const SplBohr) -> usize {
    b.as_ref().map_or(0, |b| b.0.generations())
}

/// `∫ ψ` over the unit square.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_bohr_mass(b: *const SplBohr, out: *mut f64) -> SplStatus {
    guard(|| store(out, reference(b, "bohr")?.0.mass_f64(), "out"))
}

/// `ψ(x, y)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_bohr_eval(b: *const SplBohr, x: f64, y: f64, out: *mut f64) -> SplStatus {
    guard(|| {
        let dec = &reference(b, "bohr")?.0;
        if !((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)) {
            return Err(Fail(SplStatus::OutOfRange, format!("point ({x}, {y}) lies outside the unit square")));
        }
        store(out, dec.eval(dec.root_f64(), x, y), "out")
    })
}

/// Checks the properties of `ψ` exactly; `budget` rectangles are checked
/// exhaustively and `samples` random ones beyond it.
///
/// # Safety
/// `all_pass` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_bohr_verify(
    b: *const SplBohr,
    budget: u64,
    samples: usize,
    seed: u64,
    all_pass: *mut bool,
) -> SplStatus {
    guard(|| {
        let rep = verify_psi(&reference(b, "bohr")?.0, None, budget, samples, seed);
        store(all_pass, rep.all_pass, "all_pass")
    })
}

/// Writes the JSON description (rectangles listed up to `cap`) into `buf`
/// with a terminating nul. `needed` receives the required size including
/// the nul; pass a null `buf` to query it.
///
/// # Safety
/// `buf` must hold `len` bytes or be null; `needed` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn spl_bohr_to_json(
    b: *const SplBohr,
    cap: usize,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> SplStatus {
    guard(|| {
        let text = serde_json::to_string(&reference(b, "bohr")?.0.to_json(cap)).expect("serializable");
        let size = text.len() + 1;
        if !needed.is_null() {
            needed.write(size);
        }
        if buf.is_null() {
            return Ok(());
        }
        if len < size {
            return Err(Fail(SplStatus::BufferTooSmall, format!("need {size} bytes, buffer holds {len}")));
        }
        ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
        buf.add(text.len()).write(0);
        Ok(())
    })
}
