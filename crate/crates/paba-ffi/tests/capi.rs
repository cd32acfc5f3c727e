//! Exercises the C ABI exactly as a C caller would: through the exported
//! extern "C" functions, raw pointers, and status codes.

use std::ffi::CStr;
use std::ptr;

use paba_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(paba_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

/// Two groups of two workers with distinct compute speeds and uplinks.
unsafe fn build_problem() -> *mut PabaProblem {
    let p = paba_problem_new(1.0, 1.0, 1.0, 1.0, 0.01, 1.0, 100, 0.01, 1.0);
    assert!(!p.is_null(), "{}", last_error());
    for g in 0..2_usize {
        assert_eq!(paba_problem_add_group(p), g as i64);
        for w in 0..2_usize {
            let status = paba_problem_add_worker(
                p,
                g,
                1.0 + w as f64,
                1,
                1_000.0,
                3.0 + g as f64,
            );
            assert_eq!(status, PabaStatus::Ok, "{}", last_error());
        }
    }
    p
}

unsafe fn solve(p: *const PabaProblem, scheme: PabaScheme) -> *mut PabaAllocation {
    let mut alloc: *mut PabaAllocation = ptr::null_mut();
    let status = paba_solve(p, scheme, &mut alloc);
    assert_eq!(status, PabaStatus::Ok, "{}", last_error());
    assert!(!alloc.is_null());
    alloc
}

#[test]
fn joint_solves_and_dominates_the_baseline() {
    unsafe {
        let p = build_problem();
        let joint = solve(p, PabaScheme::Joint);
        let base = solve(p, PabaScheme::Baseline);

        assert_eq!(paba_allocation_num_groups(joint), 2);
        assert_eq!(paba_allocation_num_workers(joint, 0), 2);
        assert_eq!(paba_allocation_num_workers(joint, 1), 2);

        let mut total = 0;
        let mut budget = 0.0;
        for g in 0..2 {
            let mut b = 0_u64;
            assert_eq!(paba_allocation_block_len(joint, g, &mut b), PabaStatus::Ok);
            total += b;
            for w in 0..2 {
                let mut r = f64::NAN;
                assert_eq!(paba_allocation_bw_ratio(joint, g, w, &mut r), PabaStatus::Ok);
                assert!(r > 0.0 && r <= 1.0);
                budget += r;
            }
        }
        assert_eq!(total, 100);
        assert!(budget <= 1.0 + 1e-9, "uplink budget {budget} overspent");

        let lat_joint = paba_allocation_round_latency_s(joint);
        let lat_base = paba_allocation_round_latency_s(base);
        assert!(lat_joint.is_finite() && lat_joint > 0.0);
        assert!(lat_joint <= lat_base + 1e-9, "joint {lat_joint} worse than baseline {lat_base}");

        paba_allocation_free(joint);
        paba_allocation_free(base);
        paba_problem_free(p);
    }
}

#[test]
fn tolerances_can_be_tightened() {
    unsafe {
        let p = build_problem();
        assert_eq!(
            paba_problem_set_tolerances(p, 1e-9, 1e-9, 100_000),
            PabaStatus::Ok,
            "{}",
            last_error()
        );
        let alloc = solve(p, PabaScheme::Joint);
        assert!(paba_allocation_round_latency_s(alloc).is_finite());
        paba_allocation_free(alloc);
        paba_problem_free(p);
    }
}

#[test]
fn null_and_bad_arguments_are_reported() {
    unsafe {
        assert_eq!(paba_problem_add_group(ptr::null_mut()), -1);
        assert!(!last_error().is_empty());

        let status = paba_problem_add_worker(ptr::null_mut(), 0, 1.0, 1, 1.0, 1.0);
        assert_eq!(status, PabaStatus::NullPointer);

        let p = build_problem();
        let status = paba_problem_add_worker(p, 9, 1.0, 1, 1.0, 1.0);
        assert_eq!(status, PabaStatus::InvalidArgument);
        assert!(last_error().contains("group 9"), "{}", last_error());

        let status = paba_problem_add_worker(p, 0, -1.0, 1, 1.0, 1.0);
        assert_eq!(status, PabaStatus::InvalidArgument);

        assert_eq!(
            paba_problem_set_tolerances(p, 0.0, 1e-6, 100),
            PabaStatus::InvalidArgument
        );

        let mut alloc: *mut PabaAllocation = ptr::null_mut();
        assert_eq!(
            paba_solve(ptr::null(), PabaScheme::Joint, &mut alloc),
            PabaStatus::NullPointer
        );
        assert_eq!(paba_solve(p, PabaScheme::Joint, ptr::null_mut()), PabaStatus::NullPointer);
        paba_problem_free(p);
    }
}

#[test]
fn empty_problems_cannot_be_solved() {
    unsafe {
        let p = paba_problem_new(1.0, 1.0, 1.0, 1.0, 0.01, 1.0, 100, 0.01, 1.0);
        assert!(!p.is_null());
        let mut alloc: *mut PabaAllocation = ptr::null_mut();
        let status = paba_solve(p, PabaScheme::Joint, &mut alloc);
        assert_eq!(status, PabaStatus::InvalidArgument, "{}", last_error());
        assert!(alloc.is_null());
        assert!(!last_error().is_empty());
        paba_problem_free(p);
    }
}

#[test]
fn bad_system_scalars_are_rejected_at_construction() {
    let p = paba_problem_new(-1.0, 1.0, 1.0, 1.0, 0.01, 1.0, 100, 0.01, 1.0);
    assert!(p.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn accessors_tolerate_null_handles() {
    unsafe {
        assert_eq!(paba_allocation_num_groups(ptr::null()), 0);
        assert_eq!(paba_allocation_num_workers(ptr::null(), 0), 0);
        assert!(paba_allocation_round_latency_s(ptr::null()).is_nan());
        let mut b = 0_u64;
        assert_eq!(
            paba_allocation_block_len(ptr::null(), 0, &mut b),
            PabaStatus::NullPointer
        );
        paba_allocation_free(ptr::null_mut());
        paba_problem_free(ptr::null_mut());
    }
}
