//! C ABI over the felab kernels and cost model.
//!
//! Every fallible call returns a [`FelabStatus`]; on failure a message is
//! available from [`felab_last_error`] on the same thread. Batches and
//! results are opaque handles owned by the caller and released with the
//! matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use felab::perfmodel::{self, ProcessorProfile};
use felab::{
    BatchLayout, BatchResult, CoefficientSet, ElementBatch, ElementGeometry, ElementType, Error, GeometryError,
    GeometryPath, KernelDescriptor, ProblemClass, Scheme, Variant,
};

pub const FELAB_ELEMENT_TET: u32 = 0;
pub const FELAB_ELEMENT_PRISM: u32 = 1;
pub const FELAB_PROBLEM_POISSON: u32 = 0;
pub const FELAB_PROBLEM_CONVDIFF: u32 = 1;
pub const FELAB_VARIANT_QSS: u32 = 0;
pub const FELAB_VARIANT_SQS: u32 = 1;
pub const FELAB_VARIANT_SSQ: u32 = 2;
pub const FELAB_GEO_LINEAR: u32 = 0;
pub const FELAB_GEO_GENERIC: u32 = 1;
pub const FELAB_LAYOUT_MAJOR: u32 = 0;
pub const FELAB_LAYOUT_INTERLEAVED: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FelabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DegenerateElement = 3,
    InvertedElement = 4,
    ShapeMismatch = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// Processor rates: TFlops and GB/s.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FelabProfile {
    pub peak_dp_tflops: f64,
    pub peak_bandwidth_gbs: f64,
    pub bench_dp_tflops: f64,
    pub bench_bandwidth_gbs: f64,
}

pub struct FelabBatch {
    inner: ElementBatch,
}

pub struct FelabResult {
    inner: BatchResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FelabStatus {
    match e.geometry() {
        Some(GeometryError::DegenerateElement { .. }) => return FelabStatus::DegenerateElement,
        Some(GeometryError::InvertedElement { .. }) => return FelabStatus::InvertedElement,
        None => {}
    }
    match e {
        Error::ShapeMismatch { .. } => FelabStatus::ShapeMismatch,
        Error::IndexOutOfRange { .. } => FelabStatus::OutOfRange,
        _ => FelabStatus::InvalidArgument,
    }
}

fn fail(e: Error) -> FelabStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn guard(f: impl FnOnce() -> Result<(), FelabStatus>) -> FelabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FelabStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            FelabStatus::Panic
        }
    }
}

fn invalid(msg: &str) -> FelabStatus {
    set_error(msg.into());
    FelabStatus::InvalidArgument
}

unsafe fn input<'a>(p: *const f64, len: usize) -> Result<&'a [f64], FelabStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        set_error("null input pointer".into());
        return Err(FelabStatus::NullPointer);
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, needed: usize) -> Result<&'a mut [f64], FelabStatus> {
    if p.is_null() {
        set_error("null output pointer".into());
        return Err(FelabStatus::NullPointer);
    }
    if len < needed {
        set_error(format!("output buffer holds {len} values, {needed} needed"));
        return Err(FelabStatus::ShapeMismatch);
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

fn element(v: u32) -> Result<ElementType, FelabStatus> {
    match v {
        FELAB_ELEMENT_TET => Ok(ElementType::Tetrahedron),
        FELAB_ELEMENT_PRISM => Ok(ElementType::Prism),
        _ => Err(invalid("unknown element type")),
    }
}

fn problem(v: u32) -> Result<ProblemClass, FelabStatus> {
    match v {
        FELAB_PROBLEM_POISSON => Ok(ProblemClass::Poisson),
        FELAB_PROBLEM_CONVDIFF => Ok(ProblemClass::ConvDiff),
        _ => Err(invalid("unknown problem class")),
    }
}

fn layout(scheme: u32, lane_width: usize) -> Result<BatchLayout, FelabStatus> {
    let scheme = match scheme {
        FELAB_LAYOUT_MAJOR => Scheme::ElementMajor,
        FELAB_LAYOUT_INTERLEAVED => Scheme::LaneInterleaved,
        _ => return Err(invalid("unknown layout")),
    };
    BatchLayout::new(scheme, lane_width).map_err(fail)
}

fn kernel(variant: u32, geo: u32, problem: ProblemClass, element: ElementType) -> Result<KernelDescriptor, FelabStatus> {
    let variant = match variant {
        FELAB_VARIANT_QSS => Variant::Qss,
        FELAB_VARIANT_SQS => Variant::Sqs,
        FELAB_VARIANT_SSQ => Variant::Ssq,
        _ => return Err(invalid("unknown variant")),
    };
    let geo = match geo {
        FELAB_GEO_LINEAR => GeometryPath::GeoLinear,
        FELAB_GEO_GENERIC => GeometryPath::GeoGeneric,
        _ => return Err(invalid("unknown geometry path")),
    };
    KernelDescriptor::new(variant, geo, problem, element).map_err(fail)
}

fn descriptor(variant: u32, geo: u32, prob: u32, elem: u32) -> Result<KernelDescriptor, FelabStatus> {
    kernel(variant, geo, problem(prob)?, element(elem)?)
}

fn profile(p: *const FelabProfile) -> Result<ProcessorProfile, FelabStatus> {
    if p.is_null() {
        set_error("null profile".into());
        return Err(FelabStatus::NullPointer);
    }
    let p = unsafe { *p };
    ProcessorProfile::new("c-api", p.peak_dp_tflops, p.peak_bandwidth_gbs, p.bench_dp_tflops, p.bench_bandwidth_gbs)
        .map_err(fail)
}

fn write_element(m: &felab::ElementMatrix, out: &mut [f64]) {
    out[..m.a.len()].copy_from_slice(&m.a);
    out[m.a.len()..m.a.len() + m.b.len()].copy_from_slice(&m.b);
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn felab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Values written by [`felab_integrate_element`]: `n*n + n` for `n` shape
/// functions, or 0 for an unknown element type.
#[no_mangle]
pub extern "C" fn felab_output_len(elem: u32) -> usize {
    element(elem).map_or(0, |e| {
        let n = e.num_shape_functions();
        n * n + n
    })
}

/// Integrate one element. `coords` holds the vertices as xyz triples,
/// `coeffs` the flat coefficient set; `out` receives `A` row-major then `b`.
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn felab_integrate_element(
    variant: u32,
    geo: u32,
    prob: u32,
    elem: u32,
    coords: *const f64,
    coords_len: usize,
    coeffs: *const f64,
    coeffs_len: usize,
    out: *mut f64,
    out_len: usize,
) -> FelabStatus {
    guard(|| {
        let desc = descriptor(variant, geo, prob, elem)?;
        let g = ElementGeometry::from_flat(desc.element, input(coords, coords_len)?).map_err(fail)?;
        let c = CoefficientSet::from_flat(desc.problem, desc.element, input(coeffs, coeffs_len)?).map_err(fail)?;
        let out = output(out, out_len, felab_output_len(elem))?;
        let m = felab::integrate_element(&desc, &g, &c).map_err(fail)?;
        write_element(&m, out);
        Ok(())
    })
}

/// Build a batch from element-major arrays, stored in the given layout.
///
/// # Safety
/// Input pointers must be valid for their lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn felab_batch_new(
    elem: u32,
    prob: u32,
    layout_scheme: u32,
    lane_width: usize,
    geometry: *const f64,
    geometry_len: usize,
    coeffs: *const f64,
    coeffs_len: usize,
    out: *mut *mut FelabBatch,
) -> FelabStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output handle".into());
            return Err(FelabStatus::NullPointer);
        }
        let l = layout(layout_scheme, lane_width)?;
        let g = input(geometry, geometry_len)?;
        let c = input(coeffs, coeffs_len)?;
        if g.is_empty() {
            return Err(fail(Error::EmptyBatch));
        }
        let batch = ElementBatch::from_element_major(element(elem)?, problem(prob)?, l, g, c).map_err(fail)?;
        *out = Box::into_raw(Box::new(FelabBatch { inner: batch }));
        Ok(())
    })
}

/// # Safety
/// `batch` must come from [`felab_batch_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn felab_batch_free(batch: *mut FelabBatch) {
    if !batch.is_null() {
        drop(Box::from_raw(batch));
    }
}

/// # Safety
/// `batch` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn felab_batch_len(batch: *const FelabBatch) -> usize {
    batch.as_ref().map_or(0, |b| b.inner.len())
}

/// Integrate every element of `batch`. On a geometry failure the index of
/// the first bad element is stored in `failed_element` when non-NULL.
///
/// # Safety
/// `batch` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn felab_batch_integrate(
    batch: *const FelabBatch,
    variant: u32,
    geo: u32,
    out_layout: u32,
    out_lane_width: usize,
    workers: usize,
    out: *mut *mut FelabResult,
    failed_element: *mut usize,
) -> FelabStatus {
    guard(|| {
        let (Some(b), false) = (batch.as_ref(), out.is_null()) else {
            set_error("null batch or output handle".into());
            return Err(FelabStatus::NullPointer);
        };
        let desc = kernel(variant, geo, b.inner.problem(), b.inner.element())?;
        let l = layout(out_layout, out_lane_width)?;
        match felab::integrate_batch(&desc, &b.inner, l, workers) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(FelabResult { inner: r }));
                Ok(())
            }
            Err(e) => {
                if let (Error::Element { index, .. }, false) = (&e, failed_element.is_null()) {
                    *failed_element = *index;
                }
                Err(fail(e))
            }
        }
    })
}

/// Copy element `e` of a result (`A` row-major then `b`) into `out`.
///
/// # Safety
/// `result` must be a live handle; `out` valid for `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn felab_result_element(
    result: *const FelabResult,
    e: usize,
    out: *mut f64,
    out_len: usize,
) -> FelabStatus {
    guard(|| {
        let Some(r) = result.as_ref() else {
            set_error("null result".into());
            return Err(FelabStatus::NullPointer);
        };
        let out = output(out, out_len, r.inner.stride())?;
        let m = r.inner.element_result(e).map_err(fail)?;
        write_element(&m, out);
        Ok(())
    })
}

/// Measured global accesses per element, or a negative value for NULL.
///
/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn felab_result_accesses_per_element(result: *const FelabResult) -> f64 {
    result.as_ref().map_or(-1.0, |r| r.inner.accesses_per_element())
}

/// # Safety
/// `result` must come from [`felab_batch_integrate`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn felab_result_free(result: *mut FelabResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Rates of a built-in profile by name.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn felab_builtin_profile(name: *const c_char, out: *mut FelabProfile) -> FelabStatus {
    guard(|| {
        if name.is_null() || out.is_null() {
            set_error("null argument".into());
            return Err(FelabStatus::NullPointer);
        }
        let name = CStr::from_ptr(name).to_str().map_err(|_| invalid("profile name is not UTF-8"))?;
        let p = ProcessorProfile::by_name(name).ok_or_else(|| invalid("unknown profile"))?;
        *out = FelabProfile {
            peak_dp_tflops: p.peak_dp_tflops,
            peak_bandwidth_gbs: p.peak_bandwidth_gbs,
            bench_dp_tflops: p.bench_dp_tflops,
            bench_bandwidth_gbs: p.bench_bandwidth_gbs,
        };
        Ok(())
    })
}

/// Operations per value moved at which memory and arithmetic balance,
/// using benchmark rates when `use_benchmark` is non-zero.
///
/// # Safety
/// `p` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn felab_limiting_intensity(
    p: *const FelabProfile,
    use_benchmark: i32,
    out: *mut f64,
) -> FelabStatus {
    guard(|| {
        let p = profile(p)?;
        let out = out.as_mut().ok_or_else(|| invalid("null output"))?;
        *out = perfmodel::limiting_intensity_exact(&p, use_benchmark != 0);
        Ok(())
    })
}

/// Model operation count and global accesses per element.
///
/// # Safety
/// `ops` and `accesses` must be writable.
#[no_mangle]
pub unsafe extern "C" fn felab_op_count(
    variant: u32,
    geo: u32,
    prob: u32,
    elem: u32,
    ops: *mut u64,
    accesses: *mut u64,
) -> FelabStatus {
    guard(|| {
        let desc = descriptor(variant, geo, prob, elem)?;
        let (Some(ops), Some(accesses)) = (ops.as_mut(), accesses.as_mut()) else {
            set_error("null output".into());
            return Err(FelabStatus::NullPointer);
        };
        let cost = perfmodel::kernel_cost(&desc);
        *ops = cost.op_count;
        *accesses = cost.global_accesses;
        Ok(())
    })
}

/// Memory and compute time bounds per element in nanoseconds.
///
/// # Safety
/// `p`, `memory_ns` and `compute_ns` must be valid.
#[no_mangle]
pub unsafe extern "C" fn felab_time_bound(
    variant: u32,
    geo: u32,
    prob: u32,
    elem: u32,
    p: *const FelabProfile,
    memory_ns: *mut f64,
    compute_ns: *mut f64,
) -> FelabStatus {
    guard(|| {
        let desc = descriptor(variant, geo, prob, elem)?;
        let p = profile(p)?;
        let (Some(m), Some(c)) = (memory_ns.as_mut(), compute_ns.as_mut()) else {
            set_error("null output".into());
            return Err(FelabStatus::NullPointer);
        };
        let t = perfmodel::time_bound(&desc, &p);
        *m = t.memory_ns;
        *c = t.compute_ns;
        Ok(())
    })
}
