//! C bindings for the allocation solvers: opaque handles, integer status
//! codes, and a per-thread last-error message. `build.rs` regenerates the
//! matching header at `include/paba.h` with cbindgen.
//!
//! Usage from C mirrors the Rust flow: build a `PabaProblem` (system scalars,
//! then groups, then workers), call `paba_solve` with a scheme, read the
//! `PabaAllocation` through the accessors, free both handles.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use paba_core::config::Scheme;
use paba_core::model::{ChannelState, GroupTopology, SystemParams, WorkerProfile};
use paba_core::sim::solve_scheme;
use paba_core::solvers::{Allocation, SolverOptions};
use paba_core::Error;

/// Result of every fallible call. Non-`OK` statuses leave a human-readable
/// explanation in `paba_last_error_message`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PabaStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument violated a documented precondition.
    InvalidArgument = 2,
    /// The problem has no feasible allocation under the given inputs.
    Infeasible = 3,
    /// An iterative solver exhausted its budget before converging.
    SolverFailure = 4,
    /// An internal invariant was violated; the library caught the panic.
    Panic = 5,
}

/// Allocation scheme selector, matching the simulator's four schemes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PabaScheme {
    /// Proportional blocks, equal bandwidth.
    Baseline = 0,
    /// Optimal blocks under equal bandwidth.
    BandwidthAwareParams = 1,
    /// Optimal bandwidth under proportional blocks.
    ParamAwareBandwidth = 2,
    /// Blocks and bandwidth optimized together.
    Joint = 3,
}

impl From<PabaScheme> for Scheme {
    fn from(s: PabaScheme) -> Scheme {
        match s {
            PabaScheme::Baseline => Scheme::Baseline,
            PabaScheme::BandwidthAwareParams => Scheme::BwAwarePa,
            PabaScheme::ParamAwareBandwidth => Scheme::PaAwareBa,
            PabaScheme::Joint => Scheme::Joint,
        }
    }
}

/// Opaque problem builder handle.
pub struct PabaProblem {
    params: SystemParams,
    groups: Vec<Vec<WorkerProfile>>,
    downlink_gain: Vec<Vec<f64>>,
    uplink_gain: Vec<Vec<f64>>,
    opts: SolverOptions,
}

/// Opaque solved-allocation handle.
pub struct PabaAllocation(Allocation);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PabaStatus {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) | Error::Io(_) => {
            PabaStatus::InvalidArgument
        }
        Error::SolverFailure { .. } => PabaStatus::SolverFailure,
        _ => PabaStatus::Infeasible,
    }
}

/// Message describing the most recent failure on the calling thread. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn paba_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a problem from the system-level scalars. Returns null (with the
/// error message set) when a scalar is out of range. Free the handle with
/// `paba_problem_free`.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn paba_problem_new(
    bandwidth_hz: f64,
    ap_tx_power_w: f64,
    worker_tx_power_w: f64,
    noise_variance_w: f64,
    bits_per_param: f64,
    bits_per_gradient: f64,
    total_params: u64,
    server_update_time_s: f64,
    ops_per_param_sample: f64,
) -> *mut PabaProblem {
    let params = SystemParams {
        bandwidth_hz,
        ap_tx_power_w,
        worker_tx_power_w,
        noise_variance_w,
        bits_per_param,
        bits_per_gradient,
        total_params,
        server_update_time_s,
        ops_per_param_sample,
    };
    if let Err(e) = params.validate() {
        set_error(&e.to_string());
        return ptr::null_mut();
    }
    Box::into_raw(Box::new(PabaProblem {
        params,
        groups: Vec::new(),
        downlink_gain: Vec::new(),
        uplink_gain: Vec::new(),
        opts: SolverOptions::default(),
    }))
}

/// Appends an empty group and returns its index, or -1 on a null handle.
///
/// # Safety
/// `problem` must be null or a live handle from `paba_problem_new`.
#[no_mangle]
pub unsafe extern "C" fn paba_problem_add_group(problem: *mut PabaProblem) -> i64 {
    let Some(p) = (unsafe { problem.as_mut() }) else {
        set_error("null problem handle");
        return -1;
    };
    p.groups.push(Vec::new());
    p.downlink_gain.push(Vec::new());
    p.uplink_gain.push(Vec::new());
    (p.groups.len() - 1) as i64
}

/// Appends a worker (compute capacity, data load, and channel power gains)
/// to an existing group.
///
/// # Safety
/// `problem` must be null or a live handle from `paba_problem_new`.
#[no_mangle]
pub unsafe extern "C" fn paba_problem_add_worker(
    problem: *mut PabaProblem,
    group: usize,
    cpu_freq_hz: f64,
    data_samples: u64,
    downlink_gain: f64,
    uplink_gain: f64,
) -> PabaStatus {
    let Some(p) = (unsafe { problem.as_mut() }) else {
        set_error("null problem handle");
        return PabaStatus::NullPointer;
    };
    if group >= p.groups.len() {
        set_error(&format!("group {group} does not exist ({} groups)", p.groups.len()));
        return PabaStatus::InvalidArgument;
    }
    let worker = WorkerProfile { cpu_freq_hz, data_samples };
    if let Err(e) = worker.validate() {
        set_error(&e.to_string());
        return PabaStatus::InvalidArgument;
    }
    for (name, g) in [("downlink", downlink_gain), ("uplink", uplink_gain)] {
        if !g.is_finite() || g < 0.0 {
            set_error(&format!("{name} gain must be finite and non-negative, got {g}"));
            return PabaStatus::InvalidArgument;
        }
    }
    p.groups[group].push(worker);
    p.downlink_gain[group].push(downlink_gain);
    p.uplink_gain[group].push(uplink_gain);
    PabaStatus::Ok
}

/// Overrides the solver's numerical controls (defaults apply otherwise).
///
/// # Safety
/// `problem` must be null or a live handle from `paba_problem_new`.
#[no_mangle]
pub unsafe extern "C" fn paba_problem_set_tolerances(
    problem: *mut PabaProblem,
    bisect_tol_rel: f64,
    kkt_tol: f64,
    max_iters: u64,
) -> PabaStatus {
    let Some(p) = (unsafe { problem.as_mut() }) else {
        set_error("null problem handle");
        return PabaStatus::NullPointer;
    };
    let opts = SolverOptions { bisect_tol_rel, kkt_tol, max_iters, ..p.opts.clone() };
    if let Err(e) = opts.validate() {
        set_error(&e.to_string());
        return PabaStatus::InvalidArgument;
    }
    p.opts = opts;
    PabaStatus::Ok
}

/// Solves the problem under the given scheme. On `OK`, `*out` owns a new
/// allocation handle; on failure `*out` is null.
///
/// # Safety
/// `problem` must be null or a live handle from `paba_problem_new`; `out`
/// must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn paba_solve(
    problem: *const PabaProblem,
    scheme: PabaScheme,
    out: *mut *mut PabaAllocation,
) -> PabaStatus {
    if out.is_null() {
        set_error("null output pointer");
        return PabaStatus::NullPointer;
    }
    unsafe { *out = ptr::null_mut() };
    let Some(p) = (unsafe { problem.as_ref() }) else {
        set_error("null problem handle");
        return PabaStatus::NullPointer;
    };
    let solved = catch_unwind(AssertUnwindSafe(|| -> Result<Allocation, Error> {
        let topology = GroupTopology::new(p.groups.clone())?;
        let channels = ChannelState {
            downlink_gain: p.downlink_gain.clone(),
            uplink_gain: p.uplink_gain.clone(),
        };
        solve_scheme(scheme.into(), &topology, &channels, &p.params, &p.opts)
    }));
    match solved {
        Ok(Ok(alloc)) => {
            unsafe { *out = Box::into_raw(Box::new(PabaAllocation(alloc))) };
            PabaStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("solver panicked; the handle is still valid");
            PabaStatus::Panic
        }
    }
}

/// Number of groups in a solved allocation; 0 on a null handle.
///
/// # Safety
/// `alloc` must be null or a live handle from `paba_solve`.
#[no_mangle]
pub unsafe extern "C" fn paba_allocation_num_groups(alloc: *const PabaAllocation) -> usize {
    unsafe { alloc.as_ref() }.map_or(0, |a| a.0.block_lens.len())
}

/// Number of workers in one group; 0 on a null handle or bad index.
///
/// # Safety
/// `alloc` must be null or a live handle from `paba_solve`.
#[no_mangle]
pub unsafe extern "C" fn paba_allocation_num_workers(
    alloc: *const PabaAllocation,
    group: usize,
) -> usize {
    unsafe { alloc.as_ref() }
        .and_then(|a| a.0.bw_ratios.get(group))
        .map_or(0, Vec::len)
}

/// Block length (parameters) assigned to one group.
///
/// # Safety
/// `alloc` must be null or a live handle from `paba_solve`; `out` must be
/// null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn paba_allocation_block_len(
    alloc: *const PabaAllocation,
    group: usize,
    out: *mut u64,
) -> PabaStatus {
    let Some(a) = (unsafe { alloc.as_ref() }) else {
        set_error("null allocation handle");
        return PabaStatus::NullPointer;
    };
    if out.is_null() {
        set_error("null output pointer");
        return PabaStatus::NullPointer;
    }
    let Some(&b) = a.0.block_lens.get(group) else {
        set_error(&format!("group {group} does not exist ({} groups)", a.0.block_lens.len()));
        return PabaStatus::InvalidArgument;
    };
    unsafe { *out = b };
    PabaStatus::Ok
}

/// Uplink bandwidth fraction assigned to one worker.
///
/// # Safety
/// `alloc` must be null or a live handle from `paba_solve`; `out` must be
/// null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn paba_allocation_bw_ratio(
    alloc: *const PabaAllocation,
    group: usize,
    worker: usize,
    out: *mut f64,
) -> PabaStatus {
    let Some(a) = (unsafe { alloc.as_ref() }) else {
        set_error("null allocation handle");
        return PabaStatus::NullPointer;
    };
    if out.is_null() {
        set_error("null output pointer");
        return PabaStatus::NullPointer;
    }
    let Some(&r) = a.0.bw_ratios.get(group).and_then(|g| g.get(worker)) else {
        set_error(&format!("no worker {worker} in group {group}"));
        return PabaStatus::InvalidArgument;
    };
    unsafe { *out = r };
    PabaStatus::Ok
}

/// Round latency of the allocation in seconds; NaN on a null handle.
///
/// # Safety
/// `alloc` must be null or a live handle from `paba_solve`.
#[no_mangle]
pub unsafe extern "C" fn paba_allocation_round_latency_s(alloc: *const PabaAllocation) -> f64 {
    unsafe { alloc.as_ref() }.map_or(f64::NAN, |a| a.0.round_latency_s)
}

/// Frees a problem handle; null is a no-op.
///
/// # Safety
/// `problem` must be null or a handle from `paba_problem_new` that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn paba_problem_free(problem: *mut PabaProblem) {
    if !problem.is_null() {
        drop(unsafe { Box::from_raw(problem) });
    }
}

/// Frees an allocation handle; null is a no-op.
///
/// # Safety
/// `alloc` must be null or a handle from `paba_solve` that has not been
/// freed already.
#[no_mangle]
pub unsafe extern "C" fn paba_allocation_free(alloc: *mut PabaAllocation) {
    if !alloc.is_null() {
        drop(unsafe { Box::from_raw(alloc) });
    }
}
