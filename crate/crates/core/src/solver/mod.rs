//! Allocation solvers.
//!
//! [`solve_proposed`] computes the proportionally fair allocation in closed
//! form up to two nested monotone root finds:
//!
//! 1. For a fixed EH fraction `τ0`, each user's access probability is the
//!    unique root in `(0, 1/K)` of `(1 - Kq)/(1 - q) = f(m, X(q))`, where the
//!    left side falls from 1 to 0 and the right side rises from 0 to ∞.
//! 2. The unconstrained `τ0*` is the fixed point
//!    `τ0 = (1/K) Σ_k (1 - K q_k(τ0))/(1 - q_k(τ0))`, whose right side is
//!    decreasing in `τ0`.
//!
//! Both are solved by bisection. When `τ0*` violates the average power budget
//! the EH fraction is clamped to `P_avg / P_max` and step 1 is repeated there.
//! Rates follow from the access probabilities through the Lambert W function
//! and transmit powers from energy neutrality.
//!
//! The module also hosts the equal-share benchmark, the static-channel
//! variant, and (in [`oracle`]) a brute-force search used for verification.

pub mod oracle;
pub mod search;

use std::f64::consts::LN_2;

use crate::analysis::{f_aux, rate_hat, stationarity_residuals};
use crate::error::{Error, Result};
use crate::model::{
    gain_coefficient, neutral_power, path_loss, AllocationPolicy, ChannelMode, NetworkConfig, UserProfile,
};
use crate::specfun::lambert_w0;

use search::{bisect_decreasing, grid_golden_max};

/// Inset applied to the open brackets at 0, 1/K and 1.
pub const BRACKET_INSET: f64 = 1e-12;
/// Upper end of the benchmark rate search, bits/s/Hz.
pub const BENCHMARK_RATE_MAX: f64 = 40.0;
/// Relative back-off of static-channel rates below capacity, so that the
/// hard non-outage indicator is not decided by rounding.
pub const STATIC_RATE_BACKOFF: f64 = 1e-12;

const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveCase {
    /// `τ0* < P_avg/P_max`: the average power budget is slack.
    Interior,
    /// `τ0* >= P_avg/P_max`: `τ0` is clamped to the budget.
    Clamped,
}

impl std::fmt::Display for SolveCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveCase::Interior => "case1_interior",
            SolveCase::Clamped => "case2_clamped",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    pub case_taken: SolveCase,
    /// The unconstrained fixed point `τ0*`.
    pub unconstrained_tau0: f64,
    pub outer_iterations: usize,
    pub inner_iterations_max: usize,
    /// Infinity norm of the stationarity residuals that must vanish in the
    /// case taken (all `2K + 1` when interior, the rate and access ones when
    /// clamped).
    pub residual_norm: f64,
}

/// Quantities fixed by a user's access probability at a stationary point.
#[derive(Debug, Clone, Copy, PartialEq)]
struct RateTerms {
    /// `B = (1 - q)/(1 - Kq)`.
    b: f64,
    rate: f64,
    /// `2^R - 1`.
    snr_gap: f64,
}

fn rate_terms(q: f64, k: usize) -> Result<RateTerms> {
    let kf = k as f64;
    if k < 2 || !(q > 0.0 && q < 1.0 / kf) {
        return Err(Error::domain(
            "rate_from_q",
            format!("need K >= 2 and 0 < q < 1/K, got q = {q}, K = {k}"),
        ));
    }
    let b = (1.0 - q) / (1.0 - kf * q);
    // W0(-B e^{-B}) = -b' with b' e^{-b'} = B e^{-B}, b' in (0, 1); then
    // ln(-B / W) = B + W exactly, which stays finite when B e^{-B} underflows.
    let w = lambert_w0(-(b.ln() - b).exp())?;
    let exponent = (b + w).max(0.0);
    Ok(RateTerms {
        b,
        rate: exponent / LN_2,
        snr_gap: exponent.exp_m1(),
    })
}

/// Optimal rate for access probability `q` among `K` users:
/// `R = log2(-B / W0(-B e^{-B}))` with `B = (1 - q)/(1 - Kq)`.
pub fn rate_from_q(q: f64, k: usize) -> Result<f64> {
    Ok(rate_terms(q, k)?.rate)
}

/// `(1 - Kq)/(1 - q) - f(m, X(q))`: positive below the root, negative above.
fn access_equation(user: &UserProfile, a_p0: f64, tau_ratio: f64, k: usize, q: f64) -> Result<f64> {
    let t = rate_terms(q, k)?;
    let x = t.snr_gap * tau_ratio * q / a_p0;
    let f = if x > 0.0 { f_aux(user.m, x)? } else { 0.0 };
    Ok(1.0 / t.b - f)
}

fn solve_q_detail(user: &UserProfile, tau0: f64, k: usize, p0: f64, n0: f64) -> Result<(f64, usize)> {
    if !(tau0 > 0.0 && tau0 < 1.0) || !(p0 > 0.0) || !(n0 > 0.0) || k < 2 {
        return Err(Error::domain(
            "solve_q_given_tau0",
            format!("need tau0 in (0, 1), p0 > 0, n0 > 0, K >= 2 (got {tau0}, {p0}, {n0}, {k})"),
        ));
    }
    let a_p0 = gain_coefficient(user, n0) * p0;
    let tau_ratio = (1.0 - tau0) / tau0;
    let hi = 1.0 / k as f64 - BRACKET_INSET;
    bisect_decreasing(
        "solve_q_given_tau0",
        |q| access_equation(user, a_p0, tau_ratio, k, q),
        BRACKET_INSET,
        hi,
        0.0,
        MAX_BISECTIONS,
    )
}

/// Access probability of `user` for a fixed EH fraction `tau0`.
pub fn solve_q_given_tau0(user: &UserProfile, tau0: f64, k: usize, p0: f64, n0: f64) -> Result<f64> {
    Ok(solve_q_detail(user, tau0, k, p0, n0)?.0)
}

/// Residual of the access equation at `q`, for certificates and tests.
pub fn access_equation_residual(user: &UserProfile, tau0: f64, k: usize, p0: f64, n0: f64, q: f64) -> Result<f64> {
    access_equation(user, gain_coefficient(user, n0) * p0, (1.0 - tau0) / tau0, k, q)
}

fn solve_all_q(config: &NetworkConfig, tau0: f64, p0: f64) -> Result<(Vec<f64>, usize)> {
    let k = config.k();
    let mut inner_max = 0;
    let mut q = Vec::with_capacity(k);
    // identical profiles share one solve
    let mut cache: Vec<(UserProfile, f64)> = Vec::new();
    for u in config.users() {
        if let Some(&(_, qk)) = cache
            .iter()
            .find(|(v, _)| v.eta == u.eta && v.omega == u.omega && v.m == u.m)
        {
            q.push(qk);
            continue;
        }
        let (qk, it) = solve_q_detail(u, tau0, k, p0, config.n0)?;
        inner_max = inner_max.max(it);
        cache.push((*u, qk));
        q.push(qk);
    }
    Ok((q, inner_max))
}

fn mean_idle_ratio(q: &[f64]) -> f64 {
    let kf = q.len() as f64;
    q.iter().map(|&qk| (1.0 - kf * qk) / (1.0 - qk)).sum::<f64>() / kf
}

struct FixedPoint {
    tau0: f64,
    outer_iterations: usize,
    inner_iterations_max: usize,
}

fn fixed_point_detail(config: &NetworkConfig) -> Result<FixedPoint> {
    if config.channel_mode != ChannelMode::Nakagami {
        return Err(Error::Unsupported(
            "the fixed-point solver needs the Nakagami channel; use solve_static".into(),
        ));
    }
    let mut inner_max = 0;
    let (tau0, outer) = bisect_decreasing(
        "solve_tau0_fixed_point",
        |tau0| {
            let (q, it) = solve_all_q(config, tau0, config.p_max)?;
            inner_max = inner_max.max(it);
            Ok(mean_idle_ratio(&q) - tau0)
        },
        BRACKET_INSET,
        1.0 - BRACKET_INSET,
        0.0,
        MAX_BISECTIONS,
    )?;
    Ok(FixedPoint {
        tau0,
        outer_iterations: outer,
        inner_iterations_max: inner_max,
    })
}

/// Unconstrained EH fraction `τ0*` at `P0 = P_max`.
pub fn solve_tau0_fixed_point(config: &NetworkConfig) -> Result<f64> {
    Ok(fixed_point_detail(config)?.tau0)
}

/// The proportionally fair allocation for a Nakagami-faded network.
pub fn solve_proposed(config: &NetworkConfig) -> Result<(AllocationPolicy, SolveDiagnostics)> {
    let fp = fixed_point_detail(config)?;
    let p0 = config.p_max;
    let cap = config.tau_cap();
    let (case_taken, tau0, q, inner_max) = if fp.tau0 < cap {
        let (q, it) = solve_all_q(config, fp.tau0, p0)?;
        (SolveCase::Interior, fp.tau0, q, it)
    } else {
        let (q, it) = solve_all_q(config, cap, p0)?;
        (SolveCase::Clamped, cap, q, it)
    };
    let rates = q
        .iter()
        .map(|&qk| rate_from_q(qk, config.k()))
        .collect::<Result<Vec<_>>>()?;
    let policy = AllocationPolicy::energy_neutral(config, tau0, p0, &q, &rates)?;
    let residuals = stationarity_residuals(&policy, config)?;
    let checked = match case_taken {
        SolveCase::Interior => &residuals[..],
        SolveCase::Clamped => &residuals[..2 * config.k()],
    };
    let residual_norm = checked.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
    Ok((
        policy,
        SolveDiagnostics {
            case_taken,
            unconstrained_tau0: fp.tau0,
            outer_iterations: fp.outer_iterations,
            inner_iterations_max: fp.inner_iterations_max.max(inner_max),
            residual_norm,
        },
    ))
}

/// Equal-share slotted ALOHA: `τ0 = P_avg/P_max`, `q_k = 1/K`, and a common
/// rate tuned for a user halfway between the two rings.
pub fn solve_benchmark(config: &NetworkConfig, r1: f64, r2: f64) -> Result<AllocationPolicy> {
    let k = config.k();
    let tau0 = config.tau_cap();
    if !(tau0 < 1.0) {
        return Err(Error::InvalidConfig(
            "benchmark needs p_avg < p_max so that tau0 = p_avg/p_max < 1".into(),
        ));
    }
    let p0 = config.p_max;
    let q = 1.0 / k as f64;
    let template = config.users()[0];
    let r0 = 0.5 * (r1 + r2);
    let mid_user = UserProfile::new(template.eta, path_loss(r0)?, template.m)?.with_distance(r0);
    let p_tx = neutral_power(&mid_user, p0, tau0, q);
    let rate = match config.channel_mode {
        ChannelMode::Nakagami => {
            let (r, best) = grid_golden_max(
                |r| rate_hat(&mid_user, tau0, p_tx, r, config.n0, ChannelMode::Nakagami).unwrap_or(f64::NEG_INFINITY),
                0.0,
                BENCHMARK_RATE_MAX,
                800,
                1e-12,
            );
            if !(best > 0.0) {
                return Err(Error::NoConvergence {
                    routine: "solve_benchmark",
                    iterations: 800,
                });
            }
            r
        }
        ChannelMode::Static => static_rate(&mid_user, p_tx, config.n0),
    };
    AllocationPolicy::energy_neutral(config, tau0, p0, &vec![q; k], &vec![rate; k])
}

fn static_rate(user: &UserProfile, p_tx: f64, n0: f64) -> f64 {
    (p_tx * user.omega / n0).ln_1p() / LN_2 * (1.0 - STATIC_RATE_BACKOFF)
}

/// Per-user share of the static-channel objective at its best access
/// probability, for a fixed `τ0`.
fn static_best_q(user: &UserProfile, config: &NetworkConfig, tau0: f64) -> (f64, f64) {
    let k1 = config.k() as f64 - 1.0;
    let snr = config.p_max * user.eta * user.omega * user.omega / config.n0 * tau0 / (1.0 - tau0);
    let term = |q: f64| {
        let r = (snr / q).ln_1p() / LN_2;
        r.ln() + q.ln() + k1 * (-q).ln_1p()
    };
    grid_golden_max(term, 0.0, 1.0, 400, 1e-13)
}

fn static_objective(config: &NetworkConfig, tau0: f64) -> f64 {
    config.k() as f64 * (-tau0).ln_1p()
        + config
            .users()
            .iter()
            .map(|u| static_best_q(u, config, tau0).1)
            .sum::<f64>()
}

/// Proportionally fair allocation without fading: rates sit at capacity and
/// the remaining variables are found by nested one-dimensional searches.
pub fn solve_static(config: &NetworkConfig) -> Result<AllocationPolicy> {
    if config.channel_mode != ChannelMode::Static {
        return Err(Error::Unsupported("solve_static needs channel_mode = static".into()));
    }
    let (unconstrained, _) = grid_golden_max(|t| static_objective(config, t), 0.0, 1.0, 200, 1e-13);
    let tau0 = unconstrained.min(config.tau_cap());
    let p0 = config.p_max;
    let q: Vec<f64> = config
        .users()
        .iter()
        .map(|u| static_best_q(u, config, tau0).0)
        .collect();
    let rates: Vec<f64> = config
        .users()
        .iter()
        .zip(&q)
        .map(|(u, &qk)| static_rate(u, neutral_power(u, p0, tau0, qk), config.n0))
        .collect();
    AllocationPolicy::energy_neutral(config, tau0, p0, &q, &rates)
}

/// Dispatches to the scheme's solver, honouring the channel mode.
pub fn solve_scheme(config: &NetworkConfig, scheme: Scheme, r1: f64, r2: f64) -> Result<SchemeSolution> {
    match (scheme, config.channel_mode) {
        (Scheme::Proposed, ChannelMode::Nakagami) => {
            let (policy, diag) = solve_proposed(config)?;
            Ok(SchemeSolution {
                policy,
                diagnostics: Some(diag),
            })
        }
        (Scheme::Proposed, ChannelMode::Static) | (Scheme::Static, _) => {
            let static_config = config.clone().with_channel_mode(ChannelMode::Static);
            Ok(SchemeSolution {
                policy: solve_static(&static_config)?,
                diagnostics: None,
            })
        }
        (Scheme::Benchmark, _) => Ok(SchemeSolution {
            policy: solve_benchmark(config, r1, r2)?,
            diagnostics: None,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Proposed,
    Benchmark,
    /// The proposed scheme on a channel without fading.
    Static,
}

impl Scheme {
    /// Channel the scheme is evaluated on for a configured channel mode.
    pub fn channel(self, configured: ChannelMode) -> ChannelMode {
        match self {
            Scheme::Static => ChannelMode::Static,
            _ => configured,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Proposed => "proposed",
            Scheme::Benchmark => "benchmark",
            Scheme::Static => "static",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "proposed" => Ok(Scheme::Proposed),
            "benchmark" => Ok(Scheme::Benchmark),
            "static" => Ok(Scheme::Static),
            other => Err(Error::InvalidConfig(format!(
                "unknown scheme `{other}` (expected proposed, benchmark or static)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSolution {
    pub policy: AllocationPolicy,
    /// Present for the fixed-point solver only.
    pub diagnostics: Option<SolveDiagnostics>,
}
