//! Acceptance suite. Each test prints one `[PASS]` / `[FAIL]` line; run with
//! `cargo test -p wpbft --test acceptance -- --nocapture --test-threads 1` to
//! see them in order.

use std::process::Command;
use std::time::Instant;

use num::rational::BigRational;
use num::{BigInt, One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wpbft::config::ExperimentSpec;
use wpbft::sweep::run_sweep;
use wpbft::validate::agreement_grid;
use wpbft_core::channel::{
    active_distance, avg_success_prob, link_success_prob, snr, NetworkGeometry, SignalProfile,
};
use wpbft_core::consensus::{consensus_success, FaultBudget};
use wpbft_core::latency::DelayModel;
use wpbft_core::numerics::{q_function, Tolerance};
use wpbft_core::simulator::{
    estimate_consensus_rate, FadingGain, GeometricLinks, LinkModel, SimConfig, SimMode,
};

fn report(id: u32, title: &str, passed: bool, detail: &str) {
    println!(
        "[{}] criterion {id:>2}: {title} ({detail})",
        if passed { "PASS" } else { "FAIL" }
    );
}

fn settings() -> [(f64, f64); 3] {
    [(6.0, 2.0), (6.0, 5.0), (4.0, 5.0)]
}

fn presets() -> [SignalProfile; 2] {
    [SignalProfile::thz(), SignalProfile::mmwave()]
}

// Exact-rational four-level enumeration.
fn consensus_exact(n: u64, num: i64, den: i64) -> f64 {
    let binom = |n: u64, k: u64| {
        let mut acc = BigInt::one();
        for i in 0..k {
            acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
        }
        BigRational::from_integer(acc)
    };
    let ps = BigRational::new(BigInt::from(num), BigInt::from(den));
    let q = BigRational::one() - &ps;
    let pow = |b: &BigRational, e: u64| (0..e).fold(BigRational::one(), |a, _| a * b);
    let term = |pop: u64, x: u64| binom(pop, x) * pow(&q, x) * pow(&ps, pop - x);
    let f = (n - 1) / 3;
    let mut total = BigRational::zero();
    for i in 0..=f {
        for j in 0..=(f - i) {
            for k in 0..=(f - i - j) {
                for l in 0..=(f - i - j - k) {
                    total += term(n - 1, i) * term(n - 1 - i, j) * term(n - i - j, k) * term(n - i - j - k, l);
                }
            }
        }
    }
    total.to_f64().unwrap()
}

#[test]
fn criterion_01_analytic_matches_enumeration() {
    let cases = [(4, 9, 10), (7, 1, 2), (7, 9, 10)];
    let start = Instant::now();
    let got: Vec<f64> = cases
        .iter()
        .map(|&(n, num, den)| consensus_success(&FaultBudget::new(n).unwrap(), num as f64 / den as f64).unwrap())
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let worst = cases
        .iter()
        .zip(&got)
        .map(|(&(n, num, den), g)| (g - consensus_exact(n, num, den)).abs())
        .fold(0.0, f64::max);
    let passed = worst <= 1e-12 && elapsed < 1.0;
    report(1, "analytic vs exact enumeration", passed, &format!("max |diff| = {worst:.2e}, {elapsed:.4} s"));
    assert!(passed);
}

#[test]
fn criterion_02_analytic_inside_simulated_ci() {
    let start = Instant::now();
    let checks = agreement_grid(100_000, 20_240_601, 0.99).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    for c in &checks {
        println!("    {}", c.line());
    }
    let misses = checks.iter().filter(|c| !c.passed()).count();
    let passed = misses == 0 && checks.len() == 12 && elapsed < 60.0;
    report(2, "analytic P_c inside 99% Wilson CI, 1e5 trials", passed, &format!("{misses} misses, {elapsed:.1} s"));
    assert!(passed);
}

#[test]
fn criterion_03_quadrature_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p_t = rng.random_range(0.1..5.0);
        let p_n = rng.random_range(0.01..1.0);
        let z_db = rng.random_range(-5.0..12.0);
        let density = rng.random_range(0.2..10.0);
        let n = 3 * rng.random_range(1..34u64) + 1;
        let prof = SignalProfile::new("alpha2", p_t, p_n, 1e9, 8e9, 4e9, 2.0, 28e9).unwrap();
        let geometry = NetworkGeometry::new(n, density, z_db).unwrap();
        let a = p_n * geometry.z_linear() / p_t;
        let ar2 = a * geometry.radius().powi(2);
        let closed = (1.0 - (-ar2).exp()) / ar2;
        worst = worst.max((avg_success_prob(&prof, &geometry).unwrap() - closed).abs());
    }
    let passed = worst <= 1e-8;
    report(3, "P_s quadrature vs alpha=2 closed form, 20 draws", passed, &format!("max |diff| = {worst:.2e}"));
    assert!(passed);
}

#[test]
fn criterion_04_ps_trends() {
    let mut decreasing = true;
    let mut ordered = true;
    for prof in presets() {
        let curve = |z: f64, g: f64| -> Vec<f64> {
            (4..=100)
                .step_by(3)
                .map(|n| avg_success_prob(&prof, &NetworkGeometry::new(n, g, z).unwrap()).unwrap())
                .collect()
        };
        let curves: Vec<Vec<f64>> = settings().iter().map(|&(z, g)| curve(z, g)).collect();
        decreasing &= curves.iter().all(|c| c.windows(2).all(|w| w[1] < w[0]));
        let (low_density, base, low_threshold) = (&curves[0], &curves[1], &curves[2]);
        ordered &= (0..base.len()).all(|i| low_threshold[i] >= base[i] && base[i] >= low_density[i]);
    }
    let passed = decreasing && ordered;
    report(4, "P_s decreasing in n and ordered by (z, gamma)", passed, &format!("decreasing={decreasing}, ordered={ordered}"));
    assert!(passed);
}

#[test]
fn criterion_05_exponent_ordering() {
    let steep = SignalProfile::thz();
    let shallow = SignalProfile::mmwave();
    let z = wpbft_core::channel::db_to_linear(6.0);
    let mut ok = true;
    for step in 1..=400 {
        let r = step as f64 * 0.025;
        if r == 1.0 {
            continue;
        }
        let powers = r.powf(2.229) > r.powf(1.7);
        let probs = link_success_prob(&steep, z, r).unwrap() < link_success_prob(&shallow, z, r).unwrap();
        ok &= if r > 1.0 { powers && probs } else { !powers && !probs };
    }
    report(5, "alpha=2.229 worse than alpha=1.7 beyond 1 m, better inside", ok, "r in (0, 10] step 0.025");
    assert!(ok);
}

fn default_rows() -> Vec<wpbft::SweepRow> {
    run_sweep(&ExperimentSpec::default()).unwrap()
}

#[test]
fn criterion_06_delay_identities() {
    let rows = default_rows();
    let exact = rows.iter().all(|r| {
        let d = r.delays.unwrap();
        d.broadcast_delay == (r.n - 1) as f64 * d.symbol_duration
            && d.reply_delay == d.symbol_duration
            && d.total_delay == 3.0 * d.broadcast_delay + d.reply_delay
    });
    report(6, "t1 = (n-1)T, t2 = T, t_total = 3 t1 + t2 bit-exact", exact, &format!("{} rows", rows.len()));
    assert!(exact);
}

// As written this bound cannot hold: t1 / t_total = (n-1)/(3n-2) < 1/3 for all
// n. The three broadcast phases together (3·t1) do satisfy it.
#[test]
fn criterion_06_broadcast_share_of_total() {
    let rows = default_rows();
    let shares: Vec<f64> = rows.iter().map(|r| {
        let d = r.delays.unwrap();
        d.broadcast_delay / d.total_delay
    }).collect();
    let (lo, hi) = shares.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &s| (a.min(s), b.max(s)));
    let three_phase_min = rows.iter().map(|r| {
        let d = r.delays.unwrap();
        3.0 * d.broadcast_delay / d.total_delay
    }).fold(f64::INFINITY, f64::min);
    let passed = shares.iter().all(|&s| s > 0.75 && s < 1.0);
    report(
        6,
        "t1 / t_total in (0.75, 1)",
        passed,
        &format!("observed t1/t_total in [{lo:.4}, {hi:.4}]; 3*t1/t_total >= {three_phase_min:.4}"),
    );
    assert!(passed, "t1/t_total = (n-1)/(3n-2) never exceeds 1/3");
}

#[test]
fn criterion_07_delay_solver() {
    let tol = Tolerance::default();
    let mut worst: f64 = 0.0;
    for model in [DelayModel::default(), DelayModel::normalized()] {
        for prof in presets() {
            for step in 0..=94 {
                let ps = 0.05 + step as f64 * 0.01;
                let t = model.solve_symbol_duration(&prof, ps, tol).unwrap();
                let arg = model.q_argument(&prof, model.blocklength(&prof, t));
                worst = worst.max((q_function(arg).unwrap() - (1.0 - ps)).abs());
            }
        }
    }
    // c - r = 4 bits per channel use: the root is m = 1/4.
    let anchor_profile = SignalProfile::new("anchor", 1.0, 0.2, 10e9, 80e9, 40e9, 2.229, 0.22e12).unwrap();
    let t = DelayModel::normalized().solve_symbol_duration(&anchor_profile, 0.5, tol).unwrap();
    let anchor_err = ((t - 0.25 / 10e9) / (0.25 / 10e9)).abs();
    let passed = worst <= 1e-9 && anchor_err <= 1e-12;
    report(7, "delay solver residual and m = 0.25 anchor", passed, &format!("max residual {worst:.2e}, anchor rel err {anchor_err:.2e}"));
    assert!(passed);
}

#[test]
fn criterion_08_thz_mmwave_delay_ratio() {
    let model = DelayModel::default();
    let mut ratios = Vec::new();
    for (z, g) in settings() {
        for n in [10, 25, 50, 100] {
            let geometry = NetworkGeometry::new(n, g, z).unwrap();
            let thz = model.delay_report(&SignalProfile::thz(), &geometry).unwrap();
            let mm = model.delay_report(&SignalProfile::mmwave(), &geometry).unwrap();
            ratios.push(mm.total_delay / thz.total_delay);
        }
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let passed = ratios.iter().all(|&r| (10.0..=1000.0).contains(&r));
    report(8, "t_total(mmWave) / t_total(THz) in [10, 1000]", passed, &format!("ratios in [{lo:.2}, {hi:.2}]"));
    assert!(passed);
}

#[test]
fn criterion_09_active_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let prof = SignalProfile::new(
            "draw",
            rng.random_range(0.1..5.0),
            rng.random_range(0.01..1.0),
            1e9,
            8e9,
            4e9,
            rng.random_range(1.0..4.0),
            28e9,
        )
        .unwrap();
        let z = rng.random_range(0.05..50.0);
        let h = rng.random_range(0.05..5.0);
        let r = active_distance(&prof, z, h).unwrap();
        worst = worst.max(((snr(&prof, h, r).unwrap() - z) / z).abs());
    }

    let mut all_succeed = true;
    let mut detail = Vec::new();
    for (prof, n, z_db, density) in [
        (SignalProfile::thz(), 13, 6.0, 2.0),
        (SignalProfile::mmwave(), 31, 6.0, 2.0),
        (SignalProfile::thz(), 100, 4.0, 5.0),
    ] {
        let geometry = NetworkGeometry::new(n, density, z_db).unwrap();
        let r_star = active_distance(&prof, geometry.z_linear(), 1.0).unwrap();
        let mut links = GeometricLinks::new(prof.clone(), geometry);
        links.fading = FadingGain::Fixed(1.0);
        links.distance_cap = Some(r_star * (1.0 - 1e-9));
        let mut cfg = SimConfig::new(10_000, 99);
        cfg.mode = SimMode::Geometric;
        let est = estimate_consensus_rate(&cfg, &FaultBudget::new(n).unwrap(), &LinkModel::Geometric(links)).unwrap();
        all_succeed &= est.successes == est.trials;
        detail.push(format!("{} n={n}: {}/{}", prof.name(), est.successes, est.trials));
    }
    let passed = worst <= 1e-12 && all_succeed;
    report(9, "SNR at active distance equals z; capped trials all succeed", passed, &format!("max rel err {worst:.2e}; {}", detail.join(", ")));
    assert!(passed);
}

#[test]
fn criterion_10_sweep_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_wpbft"))
            .args(["sweep", "--seed", "42", "--trials", "1000", "--out"])
            .arg(&path)
            .env("RAYON_NUM_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(path).unwrap()
    };
    let single = run("1", "one.csv");
    let many = run("7", "seven.csv");
    let lines = String::from_utf8_lossy(&single).lines().count();
    let passed = single == many && lines == 1 + 2 * 3 * 33 && String::from_utf8_lossy(&single).contains("sim_p_hat");
    report(10, "byte-identical CSV with 1 and 7 threads, simulation on", passed, &format!("{lines} lines, {} bytes", single.len()));
    assert!(passed);
}

#[test]
fn sweep_columns_within_bounds() {
    // Probability columns in [0, 1], delay columns > 0.
    for r in default_rows() {
        let s = r.stages.unwrap();
        for p in [r.ps, s.pre_prepare, s.prepare, s.commit, s.reply, s.consensus] {
            assert!((0.0..=1.0).contains(&p));
        }
        let d = r.delays.unwrap();
        for t in [d.symbol_duration, d.broadcast_delay, d.reply_delay, d.total_delay] {
            assert!(t > 0.0);
        }
    }
}
