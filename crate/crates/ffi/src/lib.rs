//! C ABI over the `subharnack` toolkit.
//!
//! Every function returns an [`ShStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read with
//! [`sh_last_error_message`]. Handles are opaque and released with their
//! matching `_free` function, which accepts null.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use subharnack::fracops::TimeGrid;
use subharnack::fundsol::{self, Exponent, FundamentalSolutionEvaluator};
use subharnack::kernels::{self, resolvent_kernel, yosida_kernels, FractionalOrder, KernelTable};
use subharnack::solver::{
    solve_scalar_relaxation, solve_subdiffusion, CoefficientField, ProblemSpec, ScalarField, SolveResult,
    SpaceGrid, DEFAULT_SAMPLING_SEED,
};
use subharnack::{Error, MittagLefflerParams};

/// Status codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Accuracy = 3,
    GridMismatch = 4,
    SingularKernel = 5,
    Numerical = 6,
    Coefficients = 7,
    Precondition = 8,
    BufferTooSmall = 9,
    Io = 10,
    Panic = 11,
}

impl From<&Error> for ShStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) | Error::Parse(_) | Error::InvalidWeight(_) => Self::Domain,
            Error::Accuracy(_) | Error::QuadratureTail { .. } => Self::Accuracy,
            Error::GridMismatch(_) => Self::GridMismatch,
            Error::SingularKernel(_) => Self::SingularKernel,
            Error::SingularStep { .. } | Error::LinearSolve { .. } => Self::Numerical,
            Error::Coefficients(_) => Self::Coefficients,
            Error::Negativity { .. } | Error::EmptyRegion(_) | Error::Degenerate(_) | Error::Precondition(_) => {
                Self::Precondition
            }
            Error::Io(_) => Self::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, recording errors and panics.
fn guard(f: impl FnOnce() -> Result<(), (ShStatus, String)>) -> ShStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ShStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ShStatus::Panic
        }
    }
}

type FfiResult<T> = Result<T, (ShStatus, String)>;

fn lift<T>(r: subharnack::Result<T>) -> FfiResult<T> {
    r.map_err(|e| (ShStatus::from(&e), e.to_string()))
}

fn null(what: &str) -> (ShStatus, String) {
    (ShStatus::NullPointer, format!("{what} is null"))
}

unsafe fn write<T>(out: *mut T, v: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> FfiResult<&'a [f64]> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn fill(out: *mut f64, len: usize, values: &[f64]) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len < values.len() {
        return Err((ShStatus::BufferTooSmall, format!("buffer holds {len}, need {}", values.len())));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

fn order(alpha: f64) -> FfiResult<FractionalOrder> {
    lift(FractionalOrder::new(alpha))
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sh_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// `g_β(t) = t^{β−1}/Γ(β)` for `β > 0`, `t > 0`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sh_rl_kernel(beta: f64, t: f64, out: *mut f64) -> ShStatus {
    guard(|| write(out, lift(kernels::rl_kernel(beta, t))?))
}

/// Two-parameter Mittag-Leffler function `E_{α,β}(z)` for real `z`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sh_mittag_leffler(alpha: f64, beta: f64, z: f64, out: *mut f64) -> ShStatus {
    guard(|| {
        let p = lift(MittagLefflerParams::new(alpha, beta))?;
        write(out, lift(kernels::mittag_leffler(p, z))?)
    })
}

/// `(2 + Nα)/(2 + Nα − 2α)`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sh_critical_exponent(alpha: f64, n: usize, out: *mut f64) -> ShStatus {
    guard(|| {
        let a = order(alpha)?;
        if n == 0 {
            return Err((ShStatus::Domain, "dimension must be positive".into()));
        }
        write(out, fundsol::critical_exponent(a, n))
    })
}

/// `κ_p = (2p + N(p−1))/(2 + N(p−1))` for `p > 1`; pass `INFINITY` for
/// `κ_∞ = 1 + 2/N`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sh_kappa(p: f64, n: usize, out: *mut f64) -> ShStatus {
    guard(|| {
        let e = if p == f64::INFINITY { Exponent::Infinite } else { Exponent::Finite(p) };
        write(out, lift(fundsol::kappa(e, n))?)
    })
}

/// Exponent `e` with `‖Y(t)‖ₚᵖ ∝ tᵉ`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sh_divergence_exponent(alpha: f64, n: usize, p: f64, out: *mut f64) -> ShStatus {
    guard(|| write(out, fundsol::divergence_exponent(order(alpha)?, n, p)))
}

/// Opaque kernel table.
pub struct ShKernelTable(KernelTable);

unsafe fn emit<T>(out: *mut *mut T, v: T) -> FfiResult<()> {
    write(out, Box::into_raw(Box::new(v)))
}

unsafe fn table<'a>(t: *const ShKernelTable) -> FfiResult<&'a KernelTable> {
    t.as_ref().map(|t| &t.0).ok_or_else(|| null("kernel table"))
}

/// Cell-averaged `g_β` on `m` steps of width `dt`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sh_kernel_rl_new(beta: f64, dt: f64, m: usize, out: *mut *mut ShKernelTable) -> ShStatus {
    guard(|| emit(out, ShKernelTable(lift(KernelTable::riemann_liouville(beta, dt, m))?)))
}

/// Convolution weights of `g_β`; tables for `β` and `1 − β` convolve to 1.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sh_kernel_convolution_weights_new(
    beta: f64,
    dt: f64,
    m: usize,
    out: *mut *mut ShKernelTable,
) -> ShStatus {
    guard(|| emit(out, ShKernelTable(lift(KernelTable::convolution_weights(beta, dt, m))?)))
}

/// Yosida pair `(g_{1−α,n}, h_{α,n})`.
///
/// # Safety
/// `g_out` and `h_out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sh_kernel_yosida_new(
    alpha: f64,
    n: u32,
    dt: f64,
    m: usize,
    g_out: *mut *mut ShKernelTable,
    h_out: *mut *mut ShKernelTable,
) -> ShStatus {
    guard(|| {
        if g_out.is_null() || h_out.is_null() {
            return Err(null("output pointer"));
        }
        let (g, h) = lift(yosida_kernels(order(alpha)?, n, dt, m))?;
        emit(g_out, ShKernelTable(g))?;
        emit(h_out, ShKernelTable(h))
    })
}

/// Resolvent `t^{α−1}E_{α,α}(−θt^α)`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sh_kernel_resolvent_new(
    alpha: f64,
    theta: f64,
    dt: f64,
    m: usize,
    out: *mut *mut ShKernelTable,
) -> ShStatus {
    guard(|| emit(out, ShKernelTable(lift(resolvent_kernel(order(alpha)?, theta, dt, m))?)))
}

/// Number of stored values (`m + 1`).
///
/// # Safety
/// `table` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sh_kernel_len(t: *const ShKernelTable, out: *mut usize) -> ShStatus {
    guard(|| write(out, table(t)?.len()))
}

/// Step width.
///
/// # Safety
/// `table` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sh_kernel_dt(t: *const ShKernelTable, out: *mut f64) -> ShStatus {
    guard(|| write(out, table(t)?.dt()))
}

/// Copies the values into `buf` (capacity `len`).
///
/// # Safety
/// `t` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sh_kernel_values(t: *const ShKernelTable, buf: *mut f64, len: usize) -> ShStatus {
    guard(|| fill(buf, len, table(t)?.values()))
}

/// Product convolution `a ∗ b` at the nodes, `m + 1` values.
///
/// # Safety
/// Both handles must be live and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sh_kernel_convolve(
    a: *const ShKernelTable,
    b: *const ShKernelTable,
    buf: *mut f64,
    len: usize,
) -> ShStatus {
    guard(|| fill(buf, len, &lift(table(a)?.convolve(table(b)?))?))
}

/// # Safety
/// `t` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sh_kernel_free(t: *mut ShKernelTable) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// L1 solution of `∂ₜᵅ(u − u₀) + σu = 0` at the `m + 1` nodes of `[0, t_end]`.
///
/// # Safety
/// `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sh_scalar_relaxation(
    alpha: f64,
    sigma: f64,
    u0: f64,
    t_end: f64,
    m: usize,
    buf: *mut f64,
    len: usize,
) -> ShStatus {
    guard(|| {
        let time = lift(TimeGrid::covering(t_end, m))?;
        let path = lift(solve_scalar_relaxation(order(alpha)?, sigma, u0, time))?;
        fill(buf, len, path.values())
    })
}

/// Opaque space-time solution.
pub struct ShSolution(SolveResult);

unsafe fn solution<'a>(s: *const ShSolution) -> FfiResult<&'a SolveResult> {
    s.as_ref().map(|s| &s.0).ok_or_else(|| null("solution"))
}

/// One-dimensional solve on `(lower, upper)` with `cells` cells and `steps`
/// time steps up to `t_end`. `coeff` and `u0` hold one value per cell, the
/// coefficient is constant in time, `f = 0`, and the boundary data are the
/// constants `g_lower`, `g_upper`.
///
/// # Safety
/// `coeff` and `u0` must point to `cells` values; `out` must be valid for a write.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn sh_solve_1d(
    alpha: f64,
    lower: f64,
    upper: f64,
    cells: usize,
    t_end: f64,
    steps: usize,
    coeff: *const f64,
    u0: *const f64,
    g_lower: f64,
    g_upper: f64,
    out: *mut *mut ShSolution,
) -> ShStatus {
    guard(|| {
        let a = slice(coeff, cells, "coeff")?.to_vec();
        let u0 = slice(u0, cells, "u0")?.to_vec();
        let space = lift(SpaceGrid::new_1d(lower, upper, cells))?;
        let nu = a.iter().copied().fold(f64::INFINITY, f64::min);
        let lambda = a.iter().copied().fold(0.0, f64::max);
        let h = space.axis(0).h();
        let field = Arc::new(move |_: usize, p: [f64; 2]| {
            let i = (((p[0] - lower) / h).floor().max(0.0) as usize).min(cells - 1);
            [a[i], a[i]]
        });
        let coeff = lift(CoefficientField::new(&space, 0, nu, lambda, false, DEFAULT_SAMPLING_SEED, field))?;
        let mid = 0.5 * (lower + upper);
        let g: ScalarField = Arc::new(move |_, p| if p[0] < mid { g_lower } else { g_upper });
        let time = lift(TimeGrid::covering(t_end, steps))?;
        let spec = ProblemSpec::new(order(alpha)?, space, time, u0, coeff).with_boundary(g);
        emit(out, ShSolution(lift(solve_subdiffusion(&spec))?))
    })
}

/// Number of time levels (`steps + 1`).
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sh_solution_levels(s: *const ShSolution, out: *mut usize) -> ShStatus {
    guard(|| write(out, solution(s)?.u.len()))
}

/// Values per level: `cells + 2` in 1D, boundary faces included.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sh_solution_nodes(s: *const ShSolution, out: *mut usize) -> ShStatus {
    guard(|| write(out, solution(s)?.space().nodes()))
}

/// Copies time level `level` into `buf`.
///
/// # Safety
/// `s` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sh_solution_level(s: *const ShSolution, level: usize, buf: *mut f64, len: usize) -> ShStatus {
    guard(|| {
        let r = solution(s)?;
        let row = r.u.get(level).ok_or((ShStatus::Domain, format!("level {level} out of range")))?;
        fill(buf, len, row)
    })
}

/// # Safety
/// `s` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sh_solution_free(s: *mut ShSolution) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Opaque evaluator of the whole-space fundamental solution.
pub struct ShFundamentalSolution(FundamentalSolutionEvaluator);

/// Evaluator for order `alpha` in dimension `n ∈ {1, 2, 3}`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sh_fundsol_new(alpha: f64, n: usize, out: *mut *mut ShFundamentalSolution) -> ShStatus {
    guard(|| emit(out, ShFundamentalSolution(lift(FundamentalSolutionEvaluator::new(order(alpha)?, n))?)))
}

/// `Y(t, x)` with `x` of length `dim`, which must match the evaluator.
///
/// # Safety
/// `ev` must be a live handle, `x` valid for `dim` reads, `out` for a write.
#[no_mangle]
pub unsafe extern "C" fn sh_eval_y(
    ev: *const ShFundamentalSolution,
    t: f64,
    x: *const f64,
    dim: usize,
    out: *mut f64,
) -> ShStatus {
    guard(|| {
        let ev = ev.as_ref().ok_or_else(|| null("evaluator"))?;
        let x = slice(x, dim, "x")?;
        write(out, lift(fundsol::eval_y(&ev.0, t, x))?)
    })
}

/// # Safety
/// `ev` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sh_fundsol_free(ev: *mut ShFundamentalSolution) {
    if !ev.is_null() {
        drop(Box::from_raw(ev));
    }
}
