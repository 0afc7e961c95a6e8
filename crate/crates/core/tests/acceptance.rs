//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::{Duration, Instant};

use aloha_pf::analysis::{analytic_report, pf_objective, pf_objective_at, stationarity_residuals, ReportSource};
use aloha_pf::cli::{self, run_sweep, ExperimentSpec, SweepOutcome};
use aloha_pf::model::{path_loss, ChannelMode, NetworkConfig, Scenario, UserProfile};
use aloha_pf::simulator::{simulate, BatteryMode};
use aloha_pf::solver::oracle::brute_force_oracle;
use aloha_pf::solver::{solve_proposed, Scheme, SolveCase};
use aloha_pf::specfun::{lambert_w0, regularized_upper_gamma, upper_incomplete_gamma, BRANCH_POINT};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const TOPOLOGIES: [(f64, f64); 2] = [(10.0, 20.0), (10.0, 12.5)];
const K_SWEEP: [usize; 8] = [2, 4, 6, 8, 10, 12, 14, 16];

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn elapsed_within(start: Instant, limit: Duration, what: &str) -> Result<Duration, String> {
    let t = start.elapsed();
    check(t < limit, || format!("{what} took {t:?}, limit {limit:?}"))?;
    Ok(t)
}

/// `ceil(K/2)` users on the inner ring, the rest on the outer one.
fn ring_network(k: usize, r1: f64, r2: f64, p_avg: f64) -> NetworkConfig {
    let s = Scenario::default();
    let users = (0..k)
        .map(|i| {
            let r = if i < k.div_ceil(2) { r1 } else { r2 };
            UserProfile::new(s.eta, path_loss(r).unwrap(), s.m)
                .unwrap()
                .with_distance(r)
        })
        .collect();
    NetworkConfig::new(users, s.p_max, p_avg, s.n0, ChannelMode::Nakagami).unwrap()
}

fn special_functions() -> Outcome {
    let start = Instant::now();
    let n = 10_000;
    let mut worst_w = 0.0f64;
    for i in 0..n {
        // half the points packed near the branch point, half log-spaced up to 1e8
        let x = if i < n / 2 {
            BRANCH_POINT + (-BRANCH_POINT + 1.0) * (i as f64 / (n / 2) as f64).powi(3)
        } else {
            10f64.powf(8.0 * (i - n / 2) as f64 / (n / 2) as f64)
        };
        let w = lambert_w0(x).map_err(|e| format!("W0({x}): {e}"))?;
        let res = (w * w.exp() - x).abs() / x.abs().max(1.0);
        worst_w = worst_w.max(res);
    }
    check(worst_w <= 1e-10, || format!("Lambert W residual {worst_w:e}"))?;

    let mut worst_g = 0.0f64;
    for &m in &[1u32, 2, 3, 5, 10] {
        for j in 0..200 {
            let x = 0.01 + 40.0 * j as f64 / 200.0;
            // Γ(m, x) = (m-1)! e^{-x} Σ_{k<m} x^k / k!
            let mut term = 1.0;
            let mut sum = 0.0;
            for k in 0..m {
                if k > 0 {
                    term *= x / k as f64;
                }
                sum += term;
            }
            let fact: f64 = (1..m).map(|v| v as f64).product();
            let want = fact * (-x).exp() * sum;
            let got = upper_incomplete_gamma(m as f64, x).map_err(|e| e.to_string())?;
            worst_g = worst_g.max((got - want).abs() / want);
            let reg = regularized_upper_gamma(m as f64, x).map_err(|e| e.to_string())?;
            worst_g = worst_g.max((reg - want / fact).abs() / (want / fact));
        }
    }
    check(worst_g <= 1e-10, || {
        format!("incomplete gamma relative error {worst_g:e}")
    })?;
    let t = elapsed_within(start, Duration::from_secs(1), "special functions")?;
    Ok(format!(
        "W residual {worst_w:.1e}, gamma rel err {worst_g:.1e}, {t:.2?}"
    ))
}

/// Central-difference gradient of the objective in `(τ0, q, R)` at fixed `P0`.
fn fd_gradient_norm(config: &NetworkConfig, tau0: f64, p0: f64, q: &[f64], r: &[f64], h: f64) -> f64 {
    let f = |t: f64, q: &[f64], r: &[f64]| pf_objective_at(config, t, p0, q, r);
    let mut norm = ((f(tau0 + h, q, r) - f(tau0 - h, q, r)) / (2.0 * h)).abs();
    for i in 0..q.len() {
        let (mut a, mut b) = (q.to_vec(), q.to_vec());
        a[i] += h;
        b[i] -= h;
        norm = norm.max(((f(tau0, &a, r) - f(tau0, &b, r)) / (2.0 * h)).abs());
        let (mut a, mut b) = (r.to_vec(), r.to_vec());
        a[i] += h;
        b[i] -= h;
        norm = norm.max(((f(tau0, q, &a) - f(tau0, q, &b)) / (2.0 * h)).abs());
    }
    norm
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst_gap = 0.0f64;
    let mut worst_grad = 0.0f64;
    for &(r1, r2) in &TOPOLOGIES {
        for k in [2usize, 3] {
            for p_avg in [1.0, 5.0] {
                let c = ring_network(k, r1, r2, p_avg);
                let (p, d) = solve_proposed(&c).map_err(|e| e.to_string())?;
                let o = brute_force_oracle(&c, 48).map_err(|e| e.to_string())?;
                let ours = pf_objective(&p, &c);
                let gap = (ours - o.objective).abs();
                check(gap <= 1e-3, || {
                    format!(
                        "K={k} ({r1},{r2}) p_avg={p_avg}: objective {ours} vs oracle {}",
                        o.objective
                    )
                })?;
                worst_gap = worst_gap.max(gap);
                if d.case_taken == SolveCase::Interior {
                    let g = fd_gradient_norm(&c, p.tau0, p.p0, &p.q(), &p.rates(), 1e-6);
                    check(g <= 1e-5, || format!("K={k} ({r1},{r2}): FD gradient norm {g:e}"))?;
                    worst_grad = worst_grad.max(g);
                }
            }
        }
    }
    let t = elapsed_within(start, Duration::from_secs(60), "oracle comparison")?;
    Ok(format!(
        "max |objective gap| {worst_gap:.1e}, max FD gradient {worst_grad:.1e}, {t:.2?}"
    ))
}

fn stationarity() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for &(r1, r2) in &TOPOLOGIES {
        for k in 2..=16 {
            let c = ring_network(k, r1, r2, 5.0);
            let (p, d) = solve_proposed(&c).map_err(|e| e.to_string())?;
            check(d.case_taken == SolveCase::Interior, || format!("K={k} not interior"))?;
            let res = stationarity_residuals(&p, &c).map_err(|e| e.to_string())?;
            let n = res.iter().fold(0.0f64, |a, r| a.max(r.abs()));
            check(n <= 1e-6, || format!("K={k} ({r1},{r2}): residual {n:e}"))?;
            worst = worst.max(n);
            count += 1;
        }
    }
    Ok(format!("{count} interior solutions, max residual {worst:.1e}"))
}

const SLOTS: u64 = 1_000_000;

fn simulation_vs_analysis() -> Outcome {
    let mut worst_z = 0.0f64;
    let mut worst_rel = 0.0f64;
    let mut slowest = Duration::ZERO;
    let cases = [
        (2usize, TOPOLOGIES[0]),
        (4, TOPOLOGIES[1]),
        (8, TOPOLOGIES[0]),
        (16, TOPOLOGIES[1]),
    ];
    for (i, &(k, (r1, r2))) in cases.iter().enumerate() {
        let c = ring_network(k, r1, r2, 1.0);
        let (p, _) = solve_proposed(&c).map_err(|e| e.to_string())?;
        let analytic = analytic_report(&p, &c).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let (_, sim) = simulate(&c, &p, SLOTS, 100 + i as u64, BatteryMode::Ideal).map_err(|e| e.to_string())?;
        slowest = slowest.max(elapsed_within(start, Duration::from_secs(30), "simulation")?);
        for (u, a) in p.users.iter().enumerate() {
            let want = analytic.per_user_throughput[u];
            let got = sim.per_user_throughput[u];
            let scale = (1.0 - p.tau0) * a.rate;
            let ps = want / scale;
            let se = scale * (ps * (1.0 - ps) / SLOTS as f64).sqrt();
            let z = (got - want).abs() / se;
            check(z <= 3.0, || format!("K={k} user {u}: {got} vs {want} ({z:.2} SE)"))?;
            worst_z = worst_z.max(z);
            if want >= 0.01 {
                let rel = (got - want).abs() / want;
                check(rel <= 0.02, || format!("K={k} user {u}: relative error {rel:.3}"))?;
                worst_rel = worst_rel.max(rel);
            }
        }
    }
    Ok(format!(
        "max {worst_z:.2} SE, max relative error {:.2}%, slowest run {slowest:.2?}",
        100.0 * worst_rel
    ))
}

fn energy_neutrality() -> Outcome {
    let mut worst = 0.0f64;
    for &(r1, r2) in &TOPOLOGIES {
        for k in [2usize, 4, 16] {
            let c = ring_network(k, r1, r2, 1.0);
            let (p, _) = solve_proposed(&c).map_err(|e| e.to_string())?;
            let (t, _) = simulate(&c, &p, SLOTS, 7, BatteryMode::Tracked).map_err(|e| e.to_string())?;
            for u in 0..k {
                let f = t.energy_blocked_fraction(u);
                check(f <= 0.05, || {
                    format!("K={k} ({r1},{r2}) user {u}: blocked {:.2}%", 100.0 * f)
                })?;
                worst = worst.max(f);
            }
        }
    }
    Ok(format!("max energy-blocked fraction {:.3}%", 100.0 * worst))
}

struct Metrics {
    sum: f64,
    jain: f64,
}

fn sweep(r1: f64, r2: f64) -> Result<SweepOutcome, String> {
    let scenario = Scenario {
        r1,
        r2,
        ..Scenario::default()
    };
    let spec = ExperimentSpec::new(
        scenario,
        K_SWEEP.to_vec(),
        vec![Scheme::Proposed, Scheme::Benchmark, Scheme::Static],
    );
    let o = run_sweep(&spec).map_err(|e| e.to_string())?;
    check(o.failures.is_empty(), || format!("sweep failures: {:?}", o.failures))?;
    Ok(o)
}

fn metrics(o: &SweepOutcome, k: usize, scheme: Scheme) -> Metrics {
    let row = o
        .rows
        .iter()
        .find(|r| r.k == k && r.scheme == scheme && r.source == ReportSource::Analytic)
        .expect("row present");
    Metrics {
        sum: row.report.sum_throughput,
        jain: row.report.jain_index.unwrap_or(0.0),
    }
}

fn trends() -> Outcome {
    let wide = sweep(10.0, 20.0)?;
    let narrow = sweep(10.0, 12.5)?;
    for (o, name) in [(&wide, "(10,20)"), (&narrow, "(10,12.5)")] {
        for w in K_SWEEP.windows(2) {
            let (a, b) = (metrics(o, w[0], Scheme::Proposed), metrics(o, w[1], Scheme::Proposed));
            check(b.sum >= a.sum && b.jain >= a.jain, || {
                format!("(a) {name}: proposed not non-decreasing from K={} to K={}", w[0], w[1])
            })?;
        }
        for &k in &K_SWEEP {
            let (p, b, s) = (
                metrics(o, k, Scheme::Proposed),
                metrics(o, k, Scheme::Benchmark),
                metrics(o, k, Scheme::Static),
            );
            check(p.sum >= b.sum && p.jain >= b.jain, || {
                format!("(b) {name} K={k}: benchmark ahead")
            })?;
            check(s.sum >= p.sum && s.jain >= p.jain, || {
                format!("(c) {name} K={k}: fading ahead")
            })?;
        }
    }
    let mut min_ratio_margin = f64::INFINITY;
    for &k in &K_SWEEP {
        for scheme in [Scheme::Proposed, Scheme::Benchmark, Scheme::Static] {
            let (n, w) = (metrics(&narrow, k, scheme).jain, metrics(&wide, k, scheme).jain);
            check(n >= w, || {
                format!("(d) K={k} {scheme}: Jain {n} at (10,12.5) < {w} at (10,20)")
            })?;
        }
        let gain = |o: &SweepOutcome| metrics(o, k, Scheme::Proposed).sum / metrics(o, k, Scheme::Benchmark).sum;
        let (gw, gn) = (gain(&wide), gain(&narrow));
        check(gw > gn, || {
            format!("(e) K={k}: relative gain {gw:.3} at (10,20) vs {gn:.3} at (10,12.5)")
        })?;
        let gap = |o: &SweepOutcome| metrics(o, k, Scheme::Proposed).sum - metrics(o, k, Scheme::Benchmark).sum;
        let (aw, an) = (gap(&wide), gap(&narrow));
        check(aw > an, || {
            format!("(e) K={k}: absolute gain {aw:.4} at (10,20) vs {an:.4} at (10,12.5)")
        })?;
        min_ratio_margin = min_ratio_margin.min(gw / gn);
    }
    Ok(format!(
        "(a)-(e) hold for K in {:?}; wide/narrow relative-gain ratio >= {min_ratio_margin:.2}",
        K_SWEEP
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for run in 0..2 {
        let path = dir.path().join(format!("run{run}.csv"));
        let args = [
            "aloha-pf",
            "sweep",
            "--k-list",
            "2,4,8",
            "--scheme",
            "proposed,benchmark,static",
            "--simulate",
            "--slots",
            "100000",
            "--seed",
            "2024",
            "--out",
            path.to_str().unwrap(),
        ];
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = cli::run(args, &mut out, &mut err);
        check(code == 0, || {
            format!("sweep exited {code}: {}", String::from_utf8_lossy(&err))
        })?;
        files.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    check(files[0] == files[1], || "CSV outputs differ".into())?;
    Ok(format!("two runs, {} identical bytes", files[0].len()))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("special functions", special_functions),
        ("oracle equivalence", oracle_equivalence),
        ("stationarity residuals", stationarity),
        ("simulation vs analysis", simulation_vs_analysis),
        ("energy neutrality", energy_neutrality),
        ("reported trends", trends),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL - {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
