//! Problem instances: users, topology, BS power budget and noise.
//!
//! Slot duration and bandwidth are normalized to one, so energies are in
//! watt-slots and rates in bits/s/Hz.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default BS peak power, watts.
pub const DEFAULT_P_MAX: f64 = 5.0;
/// Default BS average power, watts.
pub const DEFAULT_P_AVG: f64 = 1.0;
/// Default AWGN power, watts.
pub const DEFAULT_N0: f64 = 1e-12;
pub const DEFAULT_ETA: f64 = 1.0;
pub const DEFAULT_M: f64 = 3.0;

/// Relative tolerance used when checking the energy-neutrality equality.
pub const NEUTRALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelMode {
    /// Nakagami-m block fading with shape `m_k` and mean `Ω_k`.
    Nakagami,
    /// No fading: the power gain equals `Ω_k` in every slot.
    Static,
}

impl fmt::Display for ChannelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelMode::Nakagami => "nakagami",
            ChannelMode::Static => "static",
        })
    }
}

impl FromStr for ChannelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nakagami" => Ok(ChannelMode::Nakagami),
            "static" => Ok(ChannelMode::Static),
            other => Err(Error::InvalidConfig(format!(
                "unknown channel mode `{other}` (expected nakagami or static)"
            ))),
        }
    }
}

/// Physical parameters of one energy-harvesting user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserProfile {
    /// Energy conversion efficiency, in (0, 1].
    pub eta: f64,
    /// Average power gain of both the downlink and uplink channel.
    pub omega: f64,
    /// Nakagami shape parameter shared by both links.
    pub m: f64,
    /// Distance to the BS in meters, kept for reporting only.
    pub distance: Option<f64>,
}

impl UserProfile {
    pub fn new(eta: f64, omega: f64, m: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidConfig(format!("eta must lie in (0, 1], got {eta}")));
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidConfig(format!("omega must be positive, got {omega}")));
        }
        if !(m >= 0.5) || !m.is_finite() {
            return Err(Error::InvalidConfig(format!("m must be >= 0.5, got {m}")));
        }
        Ok(Self {
            eta,
            omega,
            m,
            distance: None,
        })
    }

    pub fn with_distance(mut self, r: f64) -> Self {
        self.distance = Some(r);
        self
    }
}

/// A full problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    users: Vec<UserProfile>,
    pub p_max: f64,
    pub p_avg: f64,
    pub n0: f64,
    pub channel_mode: ChannelMode,
}

impl NetworkConfig {
    pub fn new(users: Vec<UserProfile>, p_max: f64, p_avg: f64, n0: f64, channel_mode: ChannelMode) -> Result<Self> {
        // K = 1 has no positive rate solution: (1 - q)/(1 - Kq) = 1 for every q
        if users.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least two users, got {}",
                users.len()
            )));
        }
        if !(p_max > 0.0) || !p_max.is_finite() {
            return Err(Error::InvalidConfig(format!("p_max must be positive, got {p_max}")));
        }
        if !(p_avg > 0.0 && p_avg <= p_max) {
            return Err(Error::InvalidConfig(format!(
                "p_avg must lie in (0, p_max], got {p_avg} with p_max = {p_max}"
            )));
        }
        if !(n0 > 0.0) || !n0.is_finite() {
            return Err(Error::InvalidConfig(format!("n0 must be positive, got {n0}")));
        }
        for u in &users {
            UserProfile::new(u.eta, u.omega, u.m)?;
        }
        Ok(Self {
            users,
            p_max,
            p_avg,
            n0,
            channel_mode,
        })
    }

    pub fn users(&self) -> &[UserProfile] {
        &self.users
    }

    pub fn k(&self) -> usize {
        self.users.len()
    }

    /// Largest EH fraction allowed at `P0 = P_max` by the average power budget.
    pub fn tau_cap(&self) -> f64 {
        self.p_avg / self.p_max
    }

    pub fn with_channel_mode(mut self, mode: ChannelMode) -> Self {
        self.channel_mode = mode;
        self
    }

    /// The same instance with `p_max` and `p_avg` multiplied by `factor`.
    pub fn scaled_power(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.users.clone(),
            self.p_max * factor,
            self.p_avg * factor,
            self.n0,
            self.channel_mode,
        )
    }
}

/// Per-user part of an allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserAllocation {
    /// Channel access probability.
    pub q: f64,
    /// Fixed transmission rate, bits/s/Hz.
    pub rate: f64,
    /// Transmit power during the RA phase, watts.
    pub p_tx: f64,
}

/// A complete resource allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPolicy {
    pub tau0: f64,
    pub p0: f64,
    pub users: Vec<UserAllocation>,
}

impl AllocationPolicy {
    /// Builds a policy whose transmit powers satisfy energy neutrality,
    /// `η P0 τ0 Ω = P_tx (1 - τ0) q`, for every user.
    pub fn energy_neutral(config: &NetworkConfig, tau0: f64, p0: f64, q: &[f64], rates: &[f64]) -> Result<Self> {
        let k = config.k();
        if q.len() != k || rates.len() != k {
            return Err(Error::InvalidPolicy(format!(
                "expected {k} access probabilities and rates, got {} and {}",
                q.len(),
                rates.len()
            )));
        }
        if !(tau0 > 0.0 && tau0 < 1.0) {
            return Err(Error::InvalidPolicy(format!("tau0 must lie in (0, 1), got {tau0}")));
        }
        let users = config
            .users()
            .iter()
            .zip(q.iter().zip(rates))
            .map(|(u, (&q, &rate))| UserAllocation {
                q,
                rate,
                p_tx: neutral_power(u, p0, tau0, q),
            })
            .collect();
        let policy = Self { tau0, p0, users };
        policy.validate(config)?;
        Ok(policy)
    }

    pub fn k(&self) -> usize {
        self.users.len()
    }

    pub fn q(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.q).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.rate).collect()
    }

    /// Checks domains, the BS power constraints and energy neutrality.
    pub fn validate(&self, config: &NetworkConfig) -> Result<()> {
        if self.users.len() != config.k() {
            return Err(Error::InvalidPolicy(format!(
                "policy has {} users, config has {}",
                self.users.len(),
                config.k()
            )));
        }
        if !(self.tau0 > 0.0 && self.tau0 < 1.0) {
            return Err(Error::InvalidPolicy(format!("tau0 = {} outside (0, 1)", self.tau0)));
        }
        if !(self.p0 > 0.0) || self.p0 > config.p_max * (1.0 + 1e-12) {
            return Err(Error::InvalidPolicy(format!(
                "p0 = {} outside (0, p_max = {}]",
                self.p0, config.p_max
            )));
        }
        if self.p0 * self.tau0 > config.p_avg * (1.0 + 1e-12) {
            return Err(Error::InvalidPolicy(format!(
                "average power p0 * tau0 = {} exceeds p_avg = {}",
                self.p0 * self.tau0,
                config.p_avg
            )));
        }
        for (i, (a, u)) in self.users.iter().zip(config.users()).enumerate() {
            if !(a.q > 0.0 && a.q < 1.0) {
                return Err(Error::InvalidPolicy(format!("user {i}: q = {} outside (0, 1)", a.q)));
            }
            if !(a.rate >= 0.0) || !a.rate.is_finite() {
                return Err(Error::InvalidPolicy(format!("user {i}: rate = {} invalid", a.rate)));
            }
            if !(a.p_tx > 0.0) || !a.p_tx.is_finite() {
                return Err(Error::InvalidPolicy(format!("user {i}: p_tx = {} invalid", a.p_tx)));
            }
            let harvested = u.eta * self.p0 * self.tau0 * u.omega;
            let spent = a.p_tx * (1.0 - self.tau0) * a.q;
            if (harvested - spent).abs() > NEUTRALITY_TOL * harvested {
                return Err(Error::InvalidPolicy(format!(
                    "user {i}: energy neutrality violated (harvest {harvested:e}, spend {spent:e})"
                )));
            }
        }
        Ok(())
    }
}

/// Transmit power that spends exactly the average harvested energy.
pub fn neutral_power(user: &UserProfile, p0: f64, tau0: f64, q: f64) -> f64 {
    user.eta * p0 * tau0 * user.omega / ((1.0 - tau0) * q)
}

/// Deterministic path loss `Ω = 10^{-3} r^{-3}` at distance `r` meters.
pub fn path_loss(r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(
            "path_loss",
            format!("distance must be positive, got {r}"),
        ));
    }
    Ok(1e-3 / (r * r * r))
}

/// `K` users split evenly between two concentric rings of radii `r1`, `r2`.
pub fn two_ring_topology(k: usize, r1: f64, r2: f64, m: f64, eta: f64) -> Result<Vec<UserProfile>> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "two-ring topology needs an even number of users >= 2, got {k}"
        )));
    }
    let inner = UserProfile::new(eta, path_loss(r1)?, m)?.with_distance(r1);
    let outer = UserProfile::new(eta, path_loss(r2)?, m)?.with_distance(r2);
    Ok(std::iter::repeat_n(inner, k / 2)
        .chain(std::iter::repeat_n(outer, k / 2))
        .collect())
}

/// `A_k = η_k Ω_k² / (m_k N0)`.
pub fn gain_coefficient(user: &UserProfile, n0: f64) -> f64 {
    debug_assert!(n0 > 0.0);
    user.eta * user.omega * user.omega / (user.m * n0)
}

/// Two-ring scenario parameters, as read from a config file or the CLI.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub k: usize,
    pub r1: f64,
    pub r2: f64,
    pub m: f64,
    pub eta: f64,
    pub p_max: f64,
    pub p_avg: f64,
    pub n0: f64,
    pub channel_mode: ChannelMode,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            k: 2,
            r1: 10.0,
            r2: 20.0,
            m: DEFAULT_M,
            eta: DEFAULT_ETA,
            p_max: DEFAULT_P_MAX,
            p_avg: DEFAULT_P_AVG,
            n0: DEFAULT_N0,
            channel_mode: ChannelMode::Nakagami,
        }
    }
}

pub const SCENARIO_KEYS: [&str; 9] = ["K", "r1", "r2", "m", "eta", "p_max", "p_avg", "n0", "channel_mode"];

impl Scenario {
    pub fn network(&self) -> Result<NetworkConfig> {
        self.network_with_k(self.k)
    }

    pub fn network_with_k(&self, k: usize) -> Result<NetworkConfig> {
        let users = two_ring_topology(k, self.r1, self.r2, self.m, self.eta)?;
        NetworkConfig::new(users, self.p_max, self.p_avg, self.n0, self.channel_mode)
    }

    /// Applies `key = value` lines on top of `self`.
    ///
    /// Blank lines and `#` comments are skipped; `:` is accepted in place of
    /// `=`. Any error names the offending key.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once(['=', ':']).ok_or_else(|| Error::ConfigKey {
                key: line.to_string(),
                detail: format!("line {}: expected `key = value`", lineno + 1),
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut s = Self::default();
        s.apply_kv(text)?;
        Ok(s)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |detail: String| Error::ConfigKey {
            key: key.to_string(),
            detail,
        };
        let real = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|e| bad(format!("`{v}` is not a number ({e})")))
        };
        match key {
            "K" | "k" => {
                self.k = value
                    .parse::<usize>()
                    .map_err(|e| bad(format!("`{value}` is not a user count ({e})")))?
            }
            "r1" => self.r1 = real(value)?,
            "r2" => self.r2 = real(value)?,
            "m" => self.m = real(value)?,
            "eta" => self.eta = real(value)?,
            "p_max" => self.p_max = real(value)?,
            "p_avg" => self.p_avg = real(value)?,
            "n0" => self.n0 = real(value)?,
            "channel_mode" => self.channel_mode = value.parse().map_err(|e: Error| bad(e.to_string()))?,
            _ => {
                return Err(bad(format!(
                    "unknown key (expected one of {})",
                    SCENARIO_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }
}
