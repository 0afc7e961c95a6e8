use std::ffi::CStr;
use std::ptr;

use aloha_pf_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(apf_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn network(k: usize) -> *mut ApfNetwork {
    let mut n = ptr::null_mut();
    assert_eq!(unsafe { apf_network_default(k, 10.0, 20.0, &mut n) }, ApfStatus::Ok);
    assert!(!n.is_null());
    n
}

#[test]
fn proposed_round_trip() {
    let net = network(4);
    assert_eq!(unsafe { apf_network_k(net) }, 4);
    let mut pol = ptr::null_mut();
    assert_eq!(unsafe { apf_solve(net, ApfScheme::Proposed, &mut pol) }, ApfStatus::Ok);
    assert_eq!(last_error(), "");
    let (mut tau0, mut p0) = (0.0, 0.0);
    assert_eq!(unsafe { apf_policy_globals(pol, &mut tau0, &mut p0) }, ApfStatus::Ok);
    assert_eq!((tau0, p0), (0.2, 5.0));
    let (mut q, mut r, mut p) = (0.0, 0.0, 0.0);
    for i in 0..4 {
        assert_eq!(
            unsafe { apf_policy_user(pol, i, &mut q, &mut r, &mut p) },
            ApfStatus::Ok
        );
        assert!(q > 0.0 && q < 0.25 && r > 0.0 && p > 0.0);
    }
    let (mut case, mut res) = (ApfCase::None, 0.0);
    assert_eq!(
        unsafe { apf_policy_diagnostics(pol, &mut case, &mut res) },
        ApfStatus::Ok
    );
    assert_eq!(case, ApfCase::Clamped);
    assert!(res <= 1e-6);

    let mut rep = ptr::null_mut();
    assert_eq!(unsafe { apf_analyze(pol, &mut rep) }, ApfStatus::Ok);
    let (mut sum, mut jain) = (0.0, 0.0);
    assert_eq!(unsafe { apf_report_summary(rep, &mut sum, &mut jain) }, ApfStatus::Ok);
    assert!(sum > 0.0 && jain > 0.25 && jain <= 1.0);
    let mut t0 = 0.0;
    assert_eq!(unsafe { apf_report_user_throughput(rep, 0, &mut t0) }, ApfStatus::Ok);
    assert!(t0 > 0.0 && t0 <= sum);
    unsafe { apf_report_free(rep) };

    let mut sim = ptr::null_mut();
    assert_eq!(
        unsafe { apf_simulate(pol, 200_000, 3, ApfBattery::Ideal, &mut sim) },
        ApfStatus::Ok
    );
    let (mut s2, mut j2) = (0.0, 0.0);
    assert_eq!(unsafe { apf_report_summary(sim, &mut s2, &mut j2) }, ApfStatus::Ok);
    assert!((s2 - sum).abs() / sum < 0.05);
    unsafe {
        apf_report_free(sim);
        apf_policy_free(pol);
        apf_network_free(net);
    }
}

#[test]
fn benchmark_has_no_diagnostics() {
    let net = network(2);
    let mut pol = ptr::null_mut();
    assert_eq!(unsafe { apf_solve(net, ApfScheme::Benchmark, &mut pol) }, ApfStatus::Ok);
    let (mut case, mut res) = (ApfCase::Interior, 0.0);
    assert_eq!(
        unsafe { apf_policy_diagnostics(pol, &mut case, &mut res) },
        ApfStatus::Ok
    );
    assert_eq!(case, ApfCase::None);
    assert!(res.is_nan());
    unsafe {
        apf_policy_free(pol);
        apf_network_free(net);
    }
}

#[test]
fn null_pointers_are_rejected() {
    unsafe {
        assert_eq!(
            apf_network_default(2, 10.0, 20.0, ptr::null_mut()),
            ApfStatus::NullPointer
        );
        assert!(last_error().contains("null"));
        let mut pol = ptr::null_mut();
        assert_eq!(
            apf_solve(ptr::null(), ApfScheme::Proposed, &mut pol),
            ApfStatus::NullPointer
        );
        assert!(pol.is_null());
        let mut x = 0.0;
        assert_eq!(apf_policy_globals(ptr::null(), &mut x, &mut x), ApfStatus::NullPointer);
        assert_eq!(apf_lambert_w0(1.0, ptr::null_mut()), ApfStatus::NullPointer);
        assert_eq!(apf_network_k(ptr::null()), 0);
        assert_eq!(apf_policy_k(ptr::null()), 0);
        apf_network_free(ptr::null_mut());
        apf_policy_free(ptr::null_mut());
        apf_report_free(ptr::null_mut());
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut n = ptr::null_mut();
        // odd K cannot split into two equal rings
        assert_eq!(apf_network_default(3, 10.0, 20.0, &mut n), ApfStatus::InvalidArgument);
        assert!(n.is_null());
        assert!(!last_error().is_empty());
        let mut w = 7.0;
        assert_eq!(apf_lambert_w0(-1.0, &mut w), ApfStatus::Domain);
        assert_eq!(w, 7.0);
        assert_eq!(apf_lambert_w0(0.0, &mut w), ApfStatus::Ok);
        assert_eq!(w, 0.0);

        let net = network(2);
        let mut pol = ptr::null_mut();
        assert_eq!(apf_solve(net, ApfScheme::Proposed, &mut pol), ApfStatus::Ok);
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        assert_eq!(apf_policy_user(pol, 2, &mut a, &mut b, &mut c), ApfStatus::OutOfRange);
        let mut rep = ptr::null_mut();
        assert_eq!(
            apf_simulate(pol, 0, 1, ApfBattery::Tracked, &mut rep),
            ApfStatus::InvalidArgument
        );
        assert!(rep.is_null());
        apf_policy_free(pol);
        apf_network_free(net);

        // static channel network
        let mut sn = ptr::null_mut();
        assert_eq!(
            apf_network_two_ring(2, 10.0, 20.0, 3.0, 1.0, 5.0, 1.0, 1e-12, ApfChannel::Static, &mut sn),
            ApfStatus::Ok
        );
        let mut sp = ptr::null_mut();
        assert_eq!(apf_solve(sn, ApfScheme::Static, &mut sp), ApfStatus::Ok);
        apf_policy_free(sp);
        apf_network_free(sn);
    }
}

#[test]
fn last_error_is_per_thread() {
    let mut w = 0.0;
    assert_eq!(unsafe { apf_lambert_w0(-5.0, &mut w) }, ApfStatus::Domain);
    let here = last_error();
    let there = std::thread::spawn(last_error).join().unwrap();
    assert!(!here.is_empty());
    assert_eq!(there, "");
}
