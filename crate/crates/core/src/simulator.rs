//! Slot-level Monte-Carlo simulation of the protocol.
//!
//! Every slot is an EH phase of length `τ0` followed by an RA phase of length
//! `1 - τ0`. Each user draws independent downlink and uplink power gains,
//! harvests `η P0 x τ0`, and then decides to transmit with probability `q`.
//! A lone transmitter succeeds unless its rate exceeds the instantaneous
//! capacity; two or more transmitters collide.
//!
//! Each user owns its random stream (ChaCha8 with the master seed and the
//! user index as stream id), so a run is reproducible bit for bit.

use std::io::Write;

use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Gamma;

use crate::analysis::{PerformanceReport, ReportSource};
use crate::error::{Error, Result};
use crate::fmt::num;
use crate::model::{AllocationPolicy, ChannelMode, NetworkConfig, UserProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatteryMode {
    /// Every attempt is powered, as if the battery were never empty.
    Ideal,
    /// Attempts need `P_tx (1 - τ0)` in the battery, otherwise the user stays
    /// silent for the slot.
    Tracked,
}

impl std::fmt::Display for BatteryMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BatteryMode::Ideal => "ideal",
            BatteryMode::Tracked => "tracked",
        })
    }
}

impl std::str::FromStr for BatteryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ideal" => Ok(BatteryMode::Ideal),
            "tracked" => Ok(BatteryMode::Tracked),
            other => Err(Error::InvalidConfig(format!(
                "unknown battery mode `{other}` (expected ideal or tracked)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct UserTrace {
    /// Slots in which the Bernoulli trial asked the user to transmit.
    pub attempts: u64,
    pub successes: u64,
    pub collisions: u64,
    pub outages: u64,
    pub energy_blocked: u64,
    pub empirical_throughput: f64,
    pub harvested: f64,
    pub spent: f64,
    pub final_battery: f64,
    pub min_battery: f64,
    pub max_battery: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub slots: u64,
    pub seed: u64,
    pub battery_mode: BatteryMode,
    pub initial_battery: f64,
    pub users: Vec<UserTrace>,
}

impl SimulationTrace {
    pub fn energy_blocked_fraction(&self, k: usize) -> f64 {
        let u = &self.users[k];
        if u.attempts == 0 {
            0.0
        } else {
            u.energy_blocked as f64 / u.attempts as f64
        }
    }
}

/// Power gain sampler for one link: gamma with shape `m` and mean `Ω`
/// (the squared Nakagami-m envelope), or the constant `Ω` without fading.
#[derive(Debug, Clone, Copy)]
pub enum ChannelSampler {
    Fading(Gamma<f64>),
    Constant(f64),
}

impl ChannelSampler {
    pub fn new(user: &UserProfile, mode: ChannelMode) -> Result<Self> {
        match mode {
            ChannelMode::Nakagami => Gamma::new(user.m, user.omega / user.m)
                .map(ChannelSampler::Fading)
                .map_err(|e| Error::InvalidConfig(format!("gamma sampler: {e}"))),
            ChannelMode::Static => Ok(ChannelSampler::Constant(user.omega)),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ChannelSampler::Fading(g) => g.sample(rng),
            ChannelSampler::Constant(omega) => *omega,
        }
    }
}

/// One channel power gain for `user`.
pub fn sample_channel_power<R: Rng + ?Sized>(user: &UserProfile, mode: ChannelMode, rng: &mut R) -> Result<f64> {
    Ok(ChannelSampler::new(user, mode)?.sample(rng))
}

/// The random stream of user `k` under master seed `seed`.
pub fn user_stream(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

/// Runs `slots` slots with an empty initial battery.
pub fn simulate(
    config: &NetworkConfig,
    policy: &AllocationPolicy,
    slots: u64,
    seed: u64,
    battery_mode: BatteryMode,
) -> Result<(SimulationTrace, PerformanceReport)> {
    simulate_from(config, policy, slots, seed, battery_mode, 0.0)
}

struct UserState {
    rng: ChaCha8Rng,
    downlink: ChannelSampler,
    uplink: ChannelSampler,
    access: Bernoulli,
    harvest_scale: f64,
    cost: f64,
    snr_scale: f64,
    rate: f64,
    battery: f64,
}

pub fn simulate_from(
    config: &NetworkConfig,
    policy: &AllocationPolicy,
    slots: u64,
    seed: u64,
    battery_mode: BatteryMode,
    initial_battery: f64,
) -> Result<(SimulationTrace, PerformanceReport)> {
    if slots == 0 {
        return Err(Error::InvalidConfig("need at least one slot".into()));
    }
    if !(initial_battery >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "initial battery must be non-negative, got {initial_battery}"
        )));
    }
    policy.validate(config)?;
    let tau0 = policy.tau0;

    let mut states = config
        .users()
        .iter()
        .zip(&policy.users)
        .enumerate()
        .map(|(k, (u, a))| {
            Ok(UserState {
                rng: user_stream(seed, k),
                downlink: ChannelSampler::new(u, config.channel_mode)?,
                uplink: ChannelSampler::new(u, config.channel_mode)?,
                access: Bernoulli::new(a.q).map_err(|e| Error::InvalidPolicy(e.to_string()))?,
                harvest_scale: u.eta * policy.p0 * tau0,
                cost: a.p_tx * (1.0 - tau0),
                snr_scale: a.p_tx / config.n0,
                rate: a.rate,
                battery: initial_battery,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut traces = vec![
        UserTrace {
            min_battery: initial_battery,
            max_battery: initial_battery,
            ..UserTrace::default()
        };
        states.len()
    ];

    let mut transmitters: Vec<(usize, f64)> = Vec::with_capacity(states.len());
    for _ in 0..slots {
        transmitters.clear();
        for (k, (s, t)) in states.iter_mut().zip(traces.iter_mut()).enumerate() {
            let x = s.downlink.sample(&mut s.rng);
            let y = s.uplink.sample(&mut s.rng);
            let harvest = s.harvest_scale * x;
            s.battery += harvest;
            t.harvested += harvest;
            if s.access.sample(&mut s.rng) {
                t.attempts += 1;
                if battery_mode == BatteryMode::Tracked && s.battery < s.cost {
                    t.energy_blocked += 1;
                } else {
                    s.battery -= s.cost;
                    t.spent += s.cost;
                    transmitters.push((k, y));
                }
            }
            t.min_battery = t.min_battery.min(s.battery);
            t.max_battery = t.max_battery.max(s.battery);
        }
        match transmitters.as_slice() {
            [] => {}
            &[(k, y)] => {
                let s = &states[k];
                if (s.snr_scale * y).ln_1p() / std::f64::consts::LN_2 >= s.rate {
                    traces[k].successes += 1;
                } else {
                    traces[k].outages += 1;
                }
            }
            many => {
                for &(k, _) in many {
                    traces[k].collisions += 1;
                }
            }
        }
    }

    for (s, t) in states.iter().zip(traces.iter_mut()) {
        t.final_battery = s.battery;
        t.empirical_throughput = t.successes as f64 * (1.0 - tau0) * s.rate / slots as f64;
    }
    let trace = SimulationTrace {
        slots,
        seed,
        battery_mode,
        initial_battery,
        users: traces,
    };
    let report = aggregate(&trace, policy);
    Ok((trace, report))
}

/// Performance report built from the empirical throughputs of a trace.
pub fn aggregate(trace: &SimulationTrace, policy: &AllocationPolicy) -> PerformanceReport {
    let throughput = trace
        .users
        .iter()
        .zip(&policy.users)
        .map(|(t, a)| t.successes as f64 * (1.0 - policy.tau0) * a.rate / trace.slots as f64)
        .collect();
    PerformanceReport::new(throughput, ReportSource::Simulated)
}

pub const TRACE_CSV_HEADER: &str =
    "user,attempts,successes,collisions,outages,energy_blocked,emp_throughput,final_battery";

/// One row per user, 1-based user index.
pub fn write_trace_csv<W: Write>(trace: &SimulationTrace, mut out: W) -> Result<()> {
    writeln!(out, "{TRACE_CSV_HEADER}")?;
    for (k, u) in trace.users.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            k + 1,
            u.attempts,
            u.successes,
            u.collisions,
            u.outages,
            u.energy_blocked,
            num(u.empirical_throughput),
            num(u.final_battery)
        )?;
    }
    Ok(())
}
