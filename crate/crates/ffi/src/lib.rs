//! C ABI over the `bifi` core.
//!
//! Every function returns a [`BifiStatus`]; on failure the message is kept
//! per thread and read back with [`bifi_last_error_message`]. Matrices cross
//! the boundary as row-major `double` buffers. Objects are opaque handles
//! released by their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bifi::basis::{Family, PcBasis};
use bifi::bounds::{practical_error_bounds, std_normal_cdf};
use bifi::smr::{
    bf_predict, fit_bf, BfModel, Ensemble, Fidelity, LfReduction, PcSolver,
};
use bifi::BifiError;
use nalgebra::DMatrix;

/// Result codes. Values 2 to 4 follow the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BifiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Data = 3,
    Numerical = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BifiFamily {
    Legendre = 0,
    Hermite = 1,
}

impl From<BifiFamily> for Family {
    fn from(f: BifiFamily) -> Self {
        match f {
            BifiFamily::Legendre => Family::Legendre,
            BifiFamily::Hermite => Family::Hermite,
        }
    }
}

/// Opaque polynomial chaos basis.
pub struct BifiBasis(PcBasis);

/// Opaque fitted bi-fidelity model.
pub struct BifiModel(BfModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &BifiError) -> BifiStatus {
    match e.exit_code() {
        2 => BifiStatus::InvalidArgument,
        3 => BifiStatus::Data,
        _ => BifiStatus::Numerical,
    }
}

struct Failure(BifiStatus, String);

impl From<BifiError> for Failure {
    fn from(e: BifiError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(BifiStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BifiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BifiStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BifiStatus::Panic
        }
    }
}

/// Row-major `rows x cols` buffer into a matrix.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles when both are non-zero.
unsafe fn read_rows(data: *const f64, rows: usize, cols: usize, what: &str) -> Result<DMatrix<f64>, Failure> {
    let len = rows.checked_mul(cols).ok_or_else(|| Failure(BifiStatus::InvalidArgument, format!("{what} is too large")))?;
    if len == 0 {
        return Ok(DMatrix::zeros(rows, cols));
    }
    if data.is_null() {
        return Err(null(what));
    }
    let slice = std::slice::from_raw_parts(data, len);
    Ok(DMatrix::from_row_slice(rows, cols, slice))
}

/// # Safety
/// `out` must point to `m.len()` writable doubles when the matrix is non-empty.
unsafe fn write_rows(m: &DMatrix<f64>, out: *mut f64, what: &str) -> Result<(), Failure> {
    if m.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(null(what));
    }
    let dst = std::slice::from_raw_parts_mut(out, m.len());
    for (i, row) in m.row_iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            dst[i * m.ncols() + j] = *v;
        }
    }
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn bifi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Standard normal CDF.
#[no_mangle]
pub extern "C" fn bifi_std_normal_cdf(t: f64) -> f64 {
    std_normal_cdf(t)
}

/// Total-degree basis of order `p` in `d` dimensions.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn bifi_basis_new(
    d: usize,
    p: usize,
    family: BifiFamily,
    out: *mut *mut BifiBasis,
) -> BifiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let basis = PcBasis::new(d, p, family.into())?;
        *out = Box::into_raw(Box::new(BifiBasis(basis)));
        Ok(())
    })
}

/// Number of basis functions, or 0 for a null handle.
///
/// # Safety
/// `basis` must be null or a live handle from [`bifi_basis_new`].
#[no_mangle]
pub unsafe extern "C" fn bifi_basis_len(basis: *const BifiBasis) -> usize {
    basis.as_ref().map_or(0, |b| b.0.len())
}

/// Measurement matrix (P x n, row-major) at `n` samples given as an `n x d` row-major buffer.
///
/// # Safety
/// `samples` must hold `n * d` doubles and `out` room for `P * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn bifi_basis_eval(
    basis: *const BifiBasis,
    samples: *const f64,
    n: usize,
    d: usize,
    out: *mut f64,
) -> BifiStatus {
    guard(|| {
        let b = basis.as_ref().ok_or_else(|| null("basis"))?;
        let xi = read_rows(samples, n, d, "samples")?;
        let psi = b.0.measurement_matrix(&xi)?;
        write_rows(&psi, out, "out")
    })
}

/// # Safety
/// `basis` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn bifi_basis_free(basis: *mut BifiBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// Fit a bi-fidelity model.
///
/// `lf` is `m x big_n`, `hf` is `big_m x big_n` (only the columns listed in
/// `hf_indices` are read) and `inputs` is `big_n x d`, all row-major. The LF
/// expansion uses l1,2-minimization when `sparse` is non-zero and least
/// squares otherwise.
///
/// # Safety
/// Buffers must have the stated sizes; `out` must be a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn bifi_smr_fit(
    lf: *const f64,
    m: usize,
    hf: *const f64,
    big_m: usize,
    inputs: *const f64,
    big_n: usize,
    d: usize,
    hf_indices: *const usize,
    n: usize,
    basis: *const BifiBasis,
    rank: usize,
    sparse: i32,
    out: *mut *mut BifiModel,
) -> BifiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let b = basis.as_ref().ok_or_else(|| null("basis"))?;
        let xi = read_rows(inputs, big_n, d, "inputs")?;
        let l = read_rows(lf, m, big_n, "lf")?;
        let h = read_rows(hf, big_m, big_n, "hf")?;
        if n > 0 && hf_indices.is_null() {
            return Err(null("hf_indices"));
        }
        let idx: Vec<usize> = if n == 0 { Vec::new() } else { std::slice::from_raw_parts(hf_indices, n).to_vec() };
        if let Some(&bad) = idx.iter().find(|&&j| j >= big_n) {
            return Err(Failure(BifiStatus::InvalidArgument, format!("HF index {bad} out of range")));
        }
        let solver = if sparse != 0 { PcSolver::default() } else { PcSolver::LeastSquares };
        let lf_ens = Ensemble::new(xi.clone(), l, Fidelity::Low, None)?;
        let hf_ens = Ensemble::new(xi, h, Fidelity::High, None)?;
        let lfr = LfReduction::new(&lf_ens, &b.0, &solver)?;
        let reduced = lfr.reduced_basis(&b.0, rank)?;
        let model = fit_bf(&reduced, &hf_ens, &idx)?;
        *out = Box::into_raw(Box::new(BifiModel(model)));
        Ok(())
    })
}

/// Rank `r` of the reduced basis, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bifi_model_rank(model: *const BifiModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.reduced.rank())
}

/// Number of HF points `M`, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bifi_model_points(model: *const BifiModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.coefficients.nrows())
}

/// Predictions (M x k, row-major) at `k` inputs given as a `k x d` row-major buffer.
///
/// # Safety
/// Buffers must have the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn bifi_model_predict(
    model: *const BifiModel,
    inputs: *const f64,
    k: usize,
    d: usize,
    out: *mut f64,
) -> BifiStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let xi = read_rows(inputs, k, d, "inputs")?;
        if k == 0 {
            return Ok(());
        }
        write_rows(&bf_predict(&m.0, &xi)?, out, "out")
    })
}

/// Pointwise mean and variance, each `M` doubles.
///
/// # Safety
/// `mean` and `variance` must each have room for `M` doubles.
#[no_mangle]
pub unsafe extern "C" fn bifi_model_statistics(
    model: *const BifiModel,
    mean: *mut f64,
    variance: *mut f64,
) -> BifiStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let s = m.0.statistics();
        write_rows(&DMatrix::from_column_slice(1, s.mean.len(), s.mean.as_slice()), mean, "mean")?;
        write_rows(
            &DMatrix::from_column_slice(1, s.variance.len(), s.variance.as_slice()),
            variance,
            "variance",
        )
    })
}

/// # Safety
/// `model` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn bifi_model_free(model: *mut BifiModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Practical error bounds from `n_hat` HF samples `h` and their estimates
/// `h_hat` (both `m x n_hat`, row-major). Pointwise outputs hold `m` doubles.
///
/// # Safety
/// Buffers must have the stated sizes; scalar outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bifi_practical_bounds(
    h: *const f64,
    h_hat: *const f64,
    m: usize,
    n_hat: usize,
    t: f64,
    pointwise_bound: *mut f64,
    pointwise_prob: *mut f64,
    sum_bound: *mut f64,
    sum_prob: *mut f64,
) -> BifiStatus {
    guard(|| {
        if sum_bound.is_null() || sum_prob.is_null() {
            return Err(null("sum outputs"));
        }
        let hm = read_rows(h, m, n_hat, "h")?;
        let hh = read_rows(h_hat, m, n_hat, "h_hat")?;
        let rep = practical_error_bounds(&hm, &hh, t)?;
        write_rows(&DMatrix::from_row_slice(1, m, &rep.pointwise_bound), pointwise_bound, "pointwise_bound")?;
        write_rows(&DMatrix::from_row_slice(1, m, &rep.pointwise_prob), pointwise_prob, "pointwise_prob")?;
        ptr::write(sum_bound, rep.sum_bound);
        ptr::write(sum_prob, rep.sum_prob);
        Ok(())
    })
}
