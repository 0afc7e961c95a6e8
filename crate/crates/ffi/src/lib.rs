//! C ABI over the `aloha_pf` solver, analysis and simulator.
//!
//! Objects are opaque handles created by `apf_*` constructors and released
//! with the matching `*_free`. Every fallible call returns an [`ApfStatus`];
//! on failure the message is available from [`apf_last_error_message`] on the
//! same thread. Results are written through out-pointers only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use aloha_pf::analysis::{analytic_report, PerformanceReport};
use aloha_pf::model::{two_ring_topology, AllocationPolicy, ChannelMode, NetworkConfig, Scenario};
use aloha_pf::simulator::{simulate_from, BatteryMode};
use aloha_pf::solver::{solve_scheme, Scheme, SolveCase, SolveDiagnostics};
use aloha_pf::specfun::lambert_w0;
use aloha_pf::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    NoConvergence = 4,
    Unsupported = 5,
    OutOfRange = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApfScheme {
    Proposed = 0,
    Benchmark = 1,
    Static = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApfChannel {
    Nakagami = 0,
    Static = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApfBattery {
    Ideal = 0,
    Tracked = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApfCase {
    /// The scheme has no case split.
    None = 0,
    Interior = 1,
    Clamped = 2,
}

/// Two-ring network with its ring radii.
pub struct ApfNetwork {
    config: NetworkConfig,
    r1: f64,
    r2: f64,
}

/// A solved allocation together with the network it is evaluated on.
pub struct ApfPolicy {
    config: NetworkConfig,
    policy: AllocationPolicy,
    diagnostics: Option<SolveDiagnostics>,
}

pub struct ApfReport {
    report: PerformanceReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> ApfStatus {
    match e {
        Error::Domain { .. } => ApfStatus::Domain,
        Error::NoConvergence { .. } | Error::NotBracketed { .. } => ApfStatus::NoConvergence,
        Error::Unsupported(_) => ApfStatus::Unsupported,
        Error::InvalidConfig(_) | Error::ConfigKey { .. } | Error::InvalidPolicy(_) => ApfStatus::InvalidArgument,
        Error::Io(_) => ApfStatus::Internal,
    }
}

struct Fail(ApfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> ApfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            ApfStatus::Ok
        }
        Ok(Err(Fail(s, msg))) => {
            set_last_error(&msg);
            s
        }
        Err(_) => {
            set_last_error("internal panic");
            ApfStatus::Internal
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(ApfStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` is null or points to a live `T`.
unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    // SAFETY: caller contract.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

/// # Safety
/// `out` is null or valid for writes.
unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and writable per caller contract.
    unsafe { out.write(v) };
    Ok(())
}

/// Message of the last failed call on this thread, or an empty string
/// after a successful one. Valid until the next `apf_*` call on the thread.
#[no_mangle]
pub extern "C" fn apf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a network with `k / 2` users at `r1` and the rest at `r2`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn apf_network_two_ring(
    k: usize,
    r1: f64,
    r2: f64,
    m: f64,
    eta: f64,
    p_max: f64,
    p_avg: f64,
    n0: f64,
    channel: ApfChannel,
    out: *mut *mut ApfNetwork,
) -> ApfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mode = match channel {
            ApfChannel::Nakagami => ChannelMode::Nakagami,
            ApfChannel::Static => ChannelMode::Static,
        };
        let users = two_ring_topology(k, r1, r2, m, eta)?;
        let config = NetworkConfig::new(users, p_max, p_avg, n0, mode)?;
        let h = Box::into_raw(Box::new(ApfNetwork { config, r1, r2 }));
        // SAFETY: checked non-null above.
        unsafe { put(out, h, "out") }
    })
}

/// Network with the default parameters and `k` users on rings `r1`, `r2`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn apf_network_default(k: usize, r1: f64, r2: f64, out: *mut *mut ApfNetwork) -> ApfStatus {
    let s = Scenario::default();
    // SAFETY: forwarded caller contract.
    unsafe { apf_network_two_ring(k, r1, r2, s.m, s.eta, s.p_max, s.p_avg, s.n0, ApfChannel::Nakagami, out) }
}

/// # Safety
/// `network` is null or a live handle from a network constructor.
#[no_mangle]
pub unsafe extern "C" fn apf_network_k(network: *const ApfNetwork) -> usize {
    // SAFETY: caller contract.
    unsafe { network.as_ref() }.map_or(0, |n| n.config.k())
}

/// # Safety
/// `network` is null or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn apf_network_free(network: *mut ApfNetwork) {
    if !network.is_null() {
        // SAFETY: handle came from Box::into_raw and is freed once.
        drop(unsafe { Box::from_raw(network) });
    }
}

/// Solves `scheme` on `network`.
///
/// # Safety
/// `network` is a live handle and `out` is valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn apf_solve(
    network: *const ApfNetwork,
    scheme: ApfScheme,
    out: *mut *mut ApfPolicy,
) -> ApfStatus {
    guard(|| {
        // SAFETY: caller contract.
        let n = unsafe { borrow(network, "network") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let scheme = match scheme {
            ApfScheme::Proposed => Scheme::Proposed,
            ApfScheme::Benchmark => Scheme::Benchmark,
            ApfScheme::Static => Scheme::Static,
        };
        let config = n
            .config
            .clone()
            .with_channel_mode(scheme.channel(n.config.channel_mode));
        let sol = solve_scheme(&config, scheme, n.r1, n.r2)?;
        let h = Box::into_raw(Box::new(ApfPolicy {
            config,
            policy: sol.policy,
            diagnostics: sol.diagnostics,
        }));
        // SAFETY: checked non-null above.
        unsafe { put(out, h, "out") }
    })
}

/// # Safety
/// `policy` is null or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn apf_policy_free(policy: *mut ApfPolicy) {
    if !policy.is_null() {
        // SAFETY: handle came from Box::into_raw and is freed once.
        drop(unsafe { Box::from_raw(policy) });
    }
}

/// # Safety
/// `policy` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn apf_policy_k(policy: *const ApfPolicy) -> usize {
    // SAFETY: caller contract.
    unsafe { policy.as_ref() }.map_or(0, |p| p.policy.k())
}

/// EH fraction and BS power.
///
/// # Safety
/// `policy` is a live handle; outputs are valid for writes.
#[no_mangle]
pub unsafe extern "C" fn apf_policy_globals(policy: *const ApfPolicy, tau0: *mut f64, p0: *mut f64) -> ApfStatus {
    guard(|| {
        // SAFETY: caller contract.
        let p = unsafe { borrow(policy, "policy") }?;
        if tau0.is_null() || p0.is_null() {
            return Err(null("output"));
        }
        // SAFETY: both checked non-null.
        unsafe {
            put(tau0, p.policy.tau0, "tau0")?;
            put(p0, p.policy.p0, "p0")
        }
    })
}

/// Access probability, rate and transmit power of user `index`.
///
/// # Safety
/// `policy` is a live handle; outputs are valid for writes.
#[no_mangle]
pub unsafe extern "C" fn apf_policy_user(
    policy: *const ApfPolicy,
    index: usize,
    q: *mut f64,
    rate: *mut f64,
    p_tx: *mut f64,
) -> ApfStatus {
    guard(|| {
        // SAFETY: caller contract.
        let p = unsafe { borrow(policy, "policy") }?;
        if q.is_null() || rate.is_null() || p_tx.is_null() {
            return Err(null("output"));
        }
        let a = p.policy.users.get(index).ok_or_else(|| {
            Fail(
                ApfStatus::OutOfRange,
                format!("user {index} out of range for K = {}", p.policy.k()),
            )
        })?;
        // SAFETY: all checked non-null.
        unsafe {
            put(q, a.q, "q")?;
            put(rate, a.rate, "rate")?;
            put(p_tx, a.p_tx, "p_tx")
        }
    })
}

/// Case taken by the fixed-point solver and its residual norm (NaN for
/// schemes without diagnostics).
///
/// # Safety
/// `policy` is a live handle; outputs are valid for writes.
#[no_mangle]
pub unsafe extern "C" fn apf_policy_diagnostics(
    policy: *const ApfPolicy,
    case_taken: *mut ApfCase,
    residual_norm: *mut f64,
) -> ApfStatus {
    guard(|| {
        // SAFETY: caller contract.
        let p = unsafe { borrow(policy, "policy") }?;
        if case_taken.is_null() || residual_norm.is_null() {
            return Err(null("output"));
        }
        let (c, r) = match &p.diagnostics {
            Some(d) => (
                match d.case_taken {
                    SolveCase::Interior => ApfCase::Interior,
                    SolveCase::Clamped => ApfCase::Clamped,
                },
                d.residual_norm,
            ),
            None => (ApfCase::None, f64::NAN),
        };
        // SAFETY: both checked non-null.
        unsafe {
            put(case_taken, c, "case_taken")?;
            put(residual_norm, r, "residual_norm")
        }
    })
}

fn new_report(out: *mut *mut ApfReport, report: PerformanceReport) -> Result<(), Fail> {
    let h = Box::into_raw(Box::new(ApfReport { report }));
    // SAFETY: callers check `out` before calling.
    unsafe { put(out, h, "out") }
}

/// Closed-form throughput report of a solved policy.
///
/// # Safety
/// `policy` is a live handle and `out` is valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn apf_analyze(policy: *const ApfPolicy, out: *mut *mut ApfReport) -> ApfStatus {
    guard(|| {
        // SAFETY: caller contract.
        let p = unsafe { borrow(policy, "policy") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        new_report(out, analytic_report(&p.policy, &p.config)?)
    })
}

/// Monte-Carlo report over `slots` slots, starting from empty batteries.
///
/// # Safety
/// `policy` is a live handle and `out` is valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn apf_simulate(
    policy: *const ApfPolicy,
    slots: u64,
    seed: u64,
    battery: ApfBattery,
    out: *mut *mut ApfReport,
) -> ApfStatus {
    guard(|| {
        // SAFETY: caller contract.
        let p = unsafe { borrow(policy, "policy") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mode = match battery {
            ApfBattery::Ideal => BatteryMode::Ideal,
            ApfBattery::Tracked => BatteryMode::Tracked,
        };
        let (_, report) = simulate_from(&p.config, &p.policy, slots, seed, mode, 0.0)?;
        new_report(out, report)
    })
}

/// # Safety
/// `report` is null or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn apf_report_free(report: *mut ApfReport) {
    if !report.is_null() {
        // SAFETY: handle came from Box::into_raw and is freed once.
        drop(unsafe { Box::from_raw(report) });
    }
}

/// Sum throughput and Jain index (NaN when every throughput is zero).
///
/// # Safety
/// `report` is a live handle; outputs are valid for writes.
#[no_mangle]
pub unsafe extern "C" fn apf_report_summary(
    report: *const ApfReport,
    sum_throughput: *mut f64,
    jain: *mut f64,
) -> ApfStatus {
    guard(|| {
        // SAFETY: caller contract.
        let r = unsafe { borrow(report, "report") }?;
        if sum_throughput.is_null() || jain.is_null() {
            return Err(null("output"));
        }
        // SAFETY: both checked non-null.
        unsafe {
            put(sum_throughput, r.report.sum_throughput, "sum_throughput")?;
            put(jain, r.report.jain_index.unwrap_or(f64::NAN), "jain")
        }
    })
}

/// Throughput of user `index`.
///
/// # Safety
/// `report` is a live handle; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn apf_report_user_throughput(
    report: *const ApfReport,
    index: usize,
    out: *mut f64,
) -> ApfStatus {
    guard(|| {
        // SAFETY: caller contract.
        let r = unsafe { borrow(report, "report") }?;
        let v = *r
            .report
            .per_user_throughput
            .get(index)
            .ok_or_else(|| Fail(ApfStatus::OutOfRange, format!("user {index} out of range")))?;
        // SAFETY: caller contract.
        unsafe { put(out, v, "out") }
    })
}

/// Principal branch of the Lambert W function.
///
/// # Safety
/// `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn apf_lambert_w0(x: f64, out: *mut f64) -> ApfStatus {
    guard(|| {
        let w = lambert_w0(x)?;
        // SAFETY: caller contract.
        unsafe { put(out, w, "out") }
    })
}
