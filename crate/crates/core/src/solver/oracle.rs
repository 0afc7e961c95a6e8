//! Exhaustive search for small instances, used to cross-check the
//! closed-form solver.
//!
//! Only the objective itself is consulted. Given `τ0`, the objective
//! separates into one term per user, so each user's `(q, R)` is gridded on
//! its own (users with identical profiles share a search); `τ0` is gridded
//! on the outside. The best grid point is then polished by cyclic golden
//! section on the joint objective.

use crate::analysis::{pf_objective_at, pf_user_term};
use crate::error::{Error, Result};
use crate::model::{AllocationPolicy, NetworkConfig, UserProfile};

use super::search::golden_max;

/// Largest `K` accepted, since the cost grows with every distinct user.
pub const MAX_ORACLE_USERS: usize = 3;
/// Upper end of the rate grid, bits/s/Hz.
pub const ORACLE_RATE_MAX: f64 = 16.0;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub policy: AllocationPolicy,
    pub objective: f64,
    /// Best `τ0` when the average power budget is ignored.
    pub unconstrained_tau0: f64,
}

struct UserSearch<'a> {
    config: &'a NetworkConfig,
    density: usize,
}

impl UserSearch<'_> {
    fn term(&self, u: &UserProfile, tau0: f64, q: f64, r: f64) -> f64 {
        let c = self.config;
        pf_user_term(u, c.n0, c.channel_mode, c.k(), tau0, c.p_max, q, r)
    }

    /// Best `(q, R, value)` of one user's term at fixed `τ0`.
    fn best(&self, u: &UserProfile, tau0: f64) -> (f64, f64, f64) {
        let n = self.density;
        let dq = 1.0 / (n + 1) as f64;
        let dr = ORACLE_RATE_MAX / n as f64;
        let mut best = (dq, dr, f64::NEG_INFINITY);
        for i in 1..=n {
            let q = dq * i as f64;
            for j in 1..=n {
                let r = dr * j as f64;
                let v = self.term(u, tau0, q, r);
                if v > best.2 {
                    best = (q, r, v);
                }
            }
        }
        let (mut q, mut r, mut v) = best;
        let (mut wq, mut wr) = (dq, dr);
        for _ in 0..40 {
            let (q1, v1) = golden_max(
                |x| self.term(u, tau0, x, r),
                (q - wq).max(0.0),
                (q + wq).min(1.0),
                1e-13,
            );
            if v1 >= v {
                q = q1;
                v = v1;
            }
            let (r1, v2) = golden_max(|x| self.term(u, tau0, q, x), (r - wr).max(0.0), r + wr, 1e-13);
            if v2 >= v {
                r = r1;
                v = v2;
            }
            wq *= 0.7;
            wr *= 0.7;
        }
        (q, r, v)
    }

    /// Best total over users at fixed `τ0`, with per-user arguments.
    fn total(&self, tau0: f64) -> (f64, Vec<f64>, Vec<f64>) {
        let users = self.config.users();
        let mut solved: Vec<(UserProfile, (f64, f64, f64))> = Vec::new();
        let mut q = Vec::with_capacity(users.len());
        let mut r = Vec::with_capacity(users.len());
        let mut value = users.len() as f64 * (-tau0).ln_1p();
        for u in users {
            let hit = solved
                .iter()
                .find(|(v, _)| v.eta == u.eta && v.omega == u.omega && v.m == u.m);
            let res = match hit {
                Some(&(_, res)) => res,
                None => {
                    let res = self.best(u, tau0);
                    solved.push((*u, res));
                    res
                }
            };
            q.push(res.0);
            r.push(res.1);
            value += res.2;
        }
        (value, q, r)
    }

    /// Grid over `(0, hi]` then golden refinement of the best cell.
    fn best_tau(&self, hi: f64) -> f64 {
        let n = self.density;
        let step = hi / n as f64;
        let (mut arg, mut best) = (step, f64::NEG_INFINITY);
        let mut arg_i = 1;
        for i in 1..=n {
            // keep τ0 strictly inside (0, 1)
            let t = (step * i as f64).min(1.0 - 1e-9);
            let v = self.total(t).0;
            if v > best {
                arg = t;
                best = v;
                arg_i = i;
            }
        }
        let lo = step * (arg_i - 1) as f64;
        let up = (step * (arg_i + 1) as f64).min(hi).min(1.0 - 1e-9);
        let (t, v) = golden_max(|t| self.total(t).0, lo.max(1e-12), up, 1e-12);
        if v >= best {
            t
        } else {
            arg
        }
    }
}

/// Brute-force maximizer of the objective at `P0 = P_max` for `K <= 3`.
pub fn brute_force_oracle(config: &NetworkConfig, grid_density: usize) -> Result<OracleSolution> {
    let k = config.k();
    if k > MAX_ORACLE_USERS {
        return Err(Error::InvalidConfig(format!(
            "brute-force oracle limited to K <= {MAX_ORACLE_USERS}, got {k}"
        )));
    }
    if grid_density < 4 {
        return Err(Error::InvalidConfig(format!(
            "grid density must be >= 4, got {grid_density}"
        )));
    }
    let search = UserSearch {
        config,
        density: grid_density,
    };
    let unconstrained_tau0 = search.best_tau(1.0);
    let cap = config.tau_cap();
    let tau0 = if unconstrained_tau0 <= cap {
        unconstrained_tau0
    } else {
        search.best_tau(cap)
    };
    let (_, mut q, mut r) = search.total(tau0);
    let mut tau0 = tau0;

    // joint polish on the full objective
    let p0 = config.p_max;
    let objective = |t: f64, q: &[f64], r: &[f64]| pf_objective_at(config, t, p0, q, r);
    let mut w = 1e-2;
    for _ in 0..30 {
        let (t, v) = golden_max(
            |t| objective(t, &q, &r),
            (tau0 - w).max(1e-12),
            (tau0 + w).min(cap).min(1.0 - 1e-12),
            1e-14,
        );
        if v >= objective(tau0, &q, &r) {
            tau0 = t;
        }
        for i in 0..k {
            let mut trial = q.clone();
            let (x, v) = golden_max(
                |x| {
                    trial[i] = x;
                    objective(tau0, &trial, &r)
                },
                (q[i] - w).max(0.0),
                (q[i] + w).min(1.0),
                1e-14,
            );
            if v >= objective(tau0, &q, &r) {
                q[i] = x;
            }
            let mut trial = r.clone();
            let (x, v) = golden_max(
                |x| {
                    trial[i] = x;
                    objective(tau0, &q, &trial)
                },
                (r[i] - 10.0 * w).max(0.0),
                r[i] + 10.0 * w,
                1e-14,
            );
            if v >= objective(tau0, &q, &r) {
                r[i] = x;
            }
        }
        w *= 0.6;
    }

    let policy = AllocationPolicy::energy_neutral(config, tau0, p0, &q, &r)?;
    Ok(OracleSolution {
        objective: objective(tau0, &q, &r),
        policy,
        unconstrained_tau0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Scenario;

    #[test]
    fn cost_guard() {
        let c = Scenario::default().network_with_k(4).unwrap();
        assert!(brute_force_oracle(&c, 20).is_err());
        let c = Scenario::default().network_with_k(2).unwrap();
        assert!(brute_force_oracle(&c, 2).is_err());
    }

    #[test]
    fn respects_average_power() {
        let c = Scenario::default().network_with_k(2).unwrap();
        let s = brute_force_oracle(&c, 24).unwrap();
        assert!(s.policy.tau0 <= c.tau_cap());
        assert!(s.unconstrained_tau0 > c.tau_cap());
        assert!(s.objective.is_finite());
    }
}
