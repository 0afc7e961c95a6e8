//! Closed-form performance model of the network: outage-limited rates,
//! ALOHA success probabilities and throughput, the proportional-fairness
//! objective with its stationarity conditions, and Jain's fairness index.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::{gain_coefficient, AllocationPolicy, ChannelMode, NetworkConfig, UserProfile};
use crate::specfun::{ln_regularized_upper_gamma, ln_scaled_upper_gamma, regularized_upper_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportSource {
    Analytic,
    Simulated,
}

impl std::fmt::Display for ReportSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReportSource::Analytic => "analytic",
            ReportSource::Simulated => "simulated",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceReport {
    pub per_user_throughput: Vec<f64>,
    pub sum_throughput: f64,
    /// `None` when every throughput is zero.
    pub jain_index: Option<f64>,
    pub source: ReportSource,
}

impl PerformanceReport {
    pub fn new(per_user_throughput: Vec<f64>, source: ReportSource) -> Self {
        let sum_throughput = per_user_throughput.iter().sum();
        let jain_index = jain_index(&per_user_throughput).ok();
        Self {
            per_user_throughput,
            sum_throughput,
            jain_index,
            source,
        }
    }
}

/// Probability that a lone transmission at `rate` and power `p_tx` is not
/// in outage.
pub fn non_outage_probability(user: &UserProfile, p_tx: f64, rate: f64, n0: f64, mode: ChannelMode) -> Result<f64> {
    if !(p_tx > 0.0) || !(rate >= 0.0) || !(n0 > 0.0) {
        return Err(Error::domain(
            "non_outage_probability",
            format!("need p_tx > 0, rate >= 0, n0 > 0 (got {p_tx}, {rate}, {n0})"),
        ));
    }
    // SNR threshold (2^R - 1) N0 / (P Ω) relative to the mean SNR
    let threshold = (rate * LN_2).exp_m1() * n0 / (p_tx * user.omega);
    match mode {
        ChannelMode::Nakagami => regularized_upper_gamma(user.m, user.m * threshold),
        ChannelMode::Static => Ok(if threshold <= 1.0 { 1.0 } else { 0.0 }),
    }
}

/// Average rate of a user given it accesses the channel alone:
/// `(1 - τ0) R` times the non-outage probability.
pub fn rate_hat(user: &UserProfile, tau0: f64, p_tx: f64, rate: f64, n0: f64, mode: ChannelMode) -> Result<f64> {
    if !(tau0 > 0.0 && tau0 < 1.0) {
        return Err(Error::domain("rate_hat", format!("tau0 = {tau0} outside (0, 1)")));
    }
    if rate == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - tau0) * rate * non_outage_probability(user, p_tx, rate, n0, mode)?)
}

/// `q_k Π_{i≠k} (1 - q_i)`: the chance that user `k` is the only transmitter.
pub fn sole_access_probability(k: usize, q: &[f64]) -> f64 {
    q.iter()
        .enumerate()
        .map(|(i, &qi)| if i == k { qi } else { 1.0 - qi })
        .product()
}

/// Long-run throughput of user `k`.
pub fn throughput_bar(k: usize, policy: &AllocationPolicy, config: &NetworkConfig) -> Result<f64> {
    let (Some(user), Some(alloc)) = (config.users().get(k), policy.users.get(k)) else {
        return Err(Error::domain(
            "throughput_bar",
            format!("user index {k} out of range for K = {}", config.k()),
        ));
    };
    let r_hat = rate_hat(
        user,
        policy.tau0,
        alloc.p_tx,
        alloc.rate,
        config.n0,
        config.channel_mode,
    )?;
    Ok(r_hat * sole_access_probability(k, &policy.q()))
}

pub fn analytic_report(policy: &AllocationPolicy, config: &NetworkConfig) -> Result<PerformanceReport> {
    let throughput = (0..config.k())
        .map(|k| throughput_bar(k, policy, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(PerformanceReport::new(throughput, ReportSource::Analytic))
}

/// `C_k = τ0 P0 A_k / ((1 - τ0) q_k)`.
pub fn c_factor(user: &UserProfile, n0: f64, tau0: f64, p0: f64, q: f64) -> f64 {
    tau0 * p0 * gain_coefficient(user, n0) / ((1.0 - tau0) * q)
}

/// `X_k = (2^R - 1) / C_k`, the outage threshold with energy neutrality
/// substituted for the transmit power.
pub fn outage_argument(user: &UserProfile, n0: f64, tau0: f64, p0: f64, q: f64, rate: f64) -> f64 {
    (rate * LN_2).exp_m1() / c_factor(user, n0, tau0, p0, q)
}

/// `ln` of the non-outage probability at outage argument `x`.
fn ln_non_outage(user: &UserProfile, mode: ChannelMode, x: f64) -> f64 {
    match mode {
        ChannelMode::Nakagami => ln_regularized_upper_gamma(user.m, x).unwrap_or(f64::NEG_INFINITY),
        // in the static channel the outage argument is measured in units of
        // the mean SNR divided by m, so success means x <= m
        ChannelMode::Static => {
            if x <= user.m {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        }
    }
}

/// The part of the objective that depends on user `k`'s own variables:
/// `ln R + ln q + (K - 1) ln(1 - q) + ln Pr{no outage}`.
///
/// Summing these over users and adding `K ln(1 - τ0)` gives [`pf_objective`].
#[allow(clippy::too_many_arguments)]
pub fn pf_user_term(
    user: &UserProfile,
    n0: f64,
    mode: ChannelMode,
    k_users: usize,
    tau0: f64,
    p0: f64,
    q: f64,
    rate: f64,
) -> f64 {
    if !(q > 0.0 && q < 1.0) || !(rate > 0.0) || !(tau0 > 0.0 && tau0 < 1.0) || !(p0 > 0.0) {
        return f64::NEG_INFINITY;
    }
    let x = outage_argument(user, n0, tau0, p0, q, rate);
    rate.ln() + q.ln() + (k_users as f64 - 1.0) * (-q).ln_1p() + ln_non_outage(user, mode, x)
}

/// Proportional-fairness objective `Σ_k ln R̄_k` at raw variables, with the
/// transmit powers eliminated through energy neutrality. Any zero-throughput
/// user maps the objective to `-∞`.
pub fn pf_objective_at(config: &NetworkConfig, tau0: f64, p0: f64, q: &[f64], rates: &[f64]) -> f64 {
    if !(tau0 > 0.0 && tau0 < 1.0) || !(p0 > 0.0) {
        return f64::NEG_INFINITY;
    }
    if q.iter().any(|&qk| !(qk > 0.0 && qk < 1.0)) || rates.iter().any(|&r| !(r > 0.0)) {
        return f64::NEG_INFINITY;
    }
    let ln_idle: Vec<f64> = q.iter().map(|&qk| (-qk).ln_1p()).collect();
    let ln_idle_total: f64 = ln_idle.iter().sum();
    let mut total = 0.0;
    for (k, user) in config.users().iter().enumerate() {
        let x = outage_argument(user, config.n0, tau0, p0, q[k], rates[k]);
        total += (-tau0).ln_1p()
            + rates[k].ln()
            + q[k].ln()
            + (ln_idle_total - ln_idle[k])
            + ln_non_outage(user, config.channel_mode, x);
    }
    if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    }
}

pub fn pf_objective(policy: &AllocationPolicy, config: &NetworkConfig) -> f64 {
    pf_objective_at(config, policy.tau0, policy.p0, &policy.q(), &policy.rates())
}

/// `f(x) = x^m e^{-x} / Γ(m, x)`, evaluated in log space.
pub fn f_aux(m: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("f_aux", format!("need x > 0, got {x}")));
    }
    Ok((-ln_scaled_upper_gamma(m, x)?).exp())
}

/// `Z = X^{m-1} e^{-X} / Γ(m, X) = -d/dX ln Γ(m, X)`.
pub fn z_factor(m: f64, x: f64) -> Result<f64> {
    Ok(f_aux(m, x)? / x)
}

/// Partial derivatives of the objective with respect to every `R_k`, then
/// every `q_k`, then `τ0` (`2K + 1` values), evaluated in closed form at
/// `P0 = policy.p0`. All vanish at an interior stationary point.
pub fn stationarity_residuals(policy: &AllocationPolicy, config: &NetworkConfig) -> Result<Vec<f64>> {
    let k_users = config.k();
    let kf = k_users as f64;
    let tau0 = policy.tau0;
    let mut d_rate = Vec::with_capacity(k_users);
    let mut d_q = Vec::with_capacity(k_users);
    let mut zx_sum = 0.0;
    for (user, a) in config.users().iter().zip(&policy.users) {
        let c = c_factor(user, config.n0, tau0, policy.p0, a.q);
        let x = (a.rate * LN_2).exp_m1() / c;
        let z = z_factor(user.m, x)?;
        d_rate.push(1.0 / a.rate - z * (a.rate * LN_2).exp() * LN_2 / c);
        d_q.push(1.0 / a.q - (kf - 1.0) / (1.0 - a.q) - z * x / a.q);
        zx_sum += z * x;
    }
    let d_tau = -kf / (1.0 - tau0) + zx_sum / (tau0 * (1.0 - tau0));
    d_rate.extend(d_q);
    d_rate.push(d_tau);
    Ok(d_rate)
}

/// Jain's index `(Σ x)^2 / (K Σ x^2)`.
pub fn jain_index(throughputs: &[f64]) -> Result<f64> {
    if throughputs.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::domain("jain_index", "throughputs must be non-negative"));
    }
    let sum: f64 = throughputs.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::domain("jain_index", "need at least one positive throughput"));
    }
    let sum_sq: f64 = throughputs.iter().map(|x| x * x).sum();
    Ok(sum * sum / (throughputs.len() as f64 * sum_sq))
}
