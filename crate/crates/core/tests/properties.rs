use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wpbft_core::channel::{
    active_distance, avg_success_prob, link_success_prob, snr, NetworkGeometry, SignalProfile,
};
use wpbft_core::consensus::{
    consensus_success, marginal_stage_rates, stage_commit, stage_pre_prepare, stage_prepare,
    stage_reply, FaultBudget,
};
use wpbft_core::numerics::{binomial_pmf, integrate, log_choose, q_function, q_inverse, Tolerance};
use wpbft_core::simulator::sample_distance;

fn profile(p_t: f64, p_n: f64, alpha: f64) -> SignalProfile {
    SignalProfile::new("prop", p_t, p_n, 1e9, 8e9, 4e9, alpha, 28e9).unwrap()
}

#[test]
fn q_is_strictly_decreasing() {
    // Near x = -8 neighbouring values closer than ~0.05 share an f64 below 1.0.
    let mut prev = q_function(-8.0).unwrap();
    for step in -79..=80 {
        let v = q_function(step as f64 / 10.0).unwrap();
        assert!(v < prev, "x = {}", step as f64 / 10.0);
        prev = v;
    }
}

#[test]
fn q_reflection_and_round_trip() {
    for step in -600..=600 {
        let x = step as f64 / 100.0;
        let sum = q_function(x).unwrap() + q_function(-x).unwrap();
        assert!((sum - 1.0).abs() <= 1e-12, "x = {x}");
        let back = q_inverse(q_function(x).unwrap()).unwrap();
        assert!((back - x).abs() <= 1e-8, "x = {x}: {back}");
    }
}

#[test]
fn binomial_mass_sums_to_one() {
    for n in [4u64, 50, 100] {
        for p in [0.1f64, 0.5, 0.9] {
            let total: f64 = (0..=n)
                .map(|k| (log_choose(n, k).unwrap() + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp())
                .sum();
            assert!((total - 1.0).abs() <= 1e-10, "n={n} p={p}");
            let via_pmf: f64 = (0..=n).map(|k| binomial_pmf(n, k, p)).sum();
            assert!((via_pmf - 1.0).abs() <= 1e-10);
        }
    }
}

proptest! {
    #[test]
    fn integrate_is_linear(a in -5.0f64..5.0, b in -5.0f64..5.0, upper in 0.1f64..10.0) {
        let tol = Tolerance::default();
        let f = |x: f64| (-0.3 * x).exp() * x;
        let g = |x: f64| (1.0 + x * x).recip();
        let combined = integrate(|x| a * f(x) + b * g(x), 0.0, upper, tol).unwrap();
        let separate = a * integrate(f, 0.0, upper, tol).unwrap() + b * integrate(g, 0.0, upper, tol).unwrap();
        let slack = (a.abs() + b.abs() + 1.0) * 1e-10;
        prop_assert!((combined - separate).abs() <= slack);
    }

    #[test]
    fn link_success_is_monotone(
        r in 0.05f64..20.0,
        dr in 0.01f64..5.0,
        z in 0.01f64..20.0,
        dz in 0.01f64..5.0,
        p_t in 0.1f64..5.0,
        p_n in 0.01f64..1.0,
        alpha in 1.0f64..4.0,
    ) {
        let base = profile(p_t, p_n, alpha);
        let v = link_success_prob(&base, z, r).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!(link_success_prob(&base, z, r + dr).unwrap() <= v);
        prop_assert!(link_success_prob(&base, z + dz, r).unwrap() <= v);
        prop_assert!(link_success_prob(&profile(p_t, p_n * 1.5, alpha), z, r).unwrap() <= v);
        prop_assert!(link_success_prob(&profile(p_t * 1.5, p_n, alpha), z, r).unwrap() >= v);
    }

    #[test]
    fn avg_success_matches_quadratic_closed_form(
        p_t in 0.1f64..5.0,
        p_n in 0.01f64..1.0,
        z_db in -10.0f64..15.0,
        density in 0.1f64..10.0,
        f in 1u64..34,
    ) {
        let n = 3 * f + 1;
        let prof = profile(p_t, p_n, 2.0);
        let geometry = NetworkGeometry::new(n, density, z_db).unwrap();
        let a = p_n * geometry.z_linear() / p_t;
        let r2 = n as f64 / (PI * density);
        let want = (1.0 - (-a * r2).exp()) / (a * r2);
        let got = avg_success_prob(&prof, &geometry).unwrap();
        prop_assert!((got - want).abs() <= 1e-8, "{} vs {}", got, want);
        prop_assert!(got > 0.0 && got <= 1.0);
    }

    #[test]
    fn active_distance_identity(
        p_t in 0.1f64..5.0,
        p_n in 0.01f64..1.0,
        alpha in 1.0f64..4.0,
        z in 0.01f64..100.0,
        h in 0.01f64..10.0,
        shrink in 0.01f64..0.999,
    ) {
        let prof = profile(p_t, p_n, alpha);
        let r_star = active_distance(&prof, z, h).unwrap();
        let at = snr(&prof, h, r_star).unwrap();
        prop_assert!(((at - z) / z).abs() <= 1e-12);
        prop_assert!(snr(&prof, h, r_star * shrink).unwrap() > z);
    }
}

#[test]
fn avg_success_decreases_with_node_count() {
    for prof in [SignalProfile::thz(), SignalProfile::mmwave()] {
        for (z_db, density) in [(6.0, 2.0), (6.0, 5.0), (4.0, 5.0)] {
            let mut prev = f64::INFINITY;
            for n in (4..=100).step_by(3) {
                let ps = avg_success_prob(&prof, &NetworkGeometry::new(n, density, z_db).unwrap()).unwrap();
                assert!(ps > 0.0 && ps <= 1.0);
                assert!(ps < prev, "{} n={n}", prof.name());
                prev = ps;
            }
        }
    }
}

#[test]
fn avg_success_equals_monte_carlo_mean() {
    let prof = SignalProfile::thz();
    let geometry = NetworkGeometry::new(25, 2.0, 6.0).unwrap();
    let z = geometry.z_linear();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let samples = 1_000_000;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let r = sample_distance(&mut rng, geometry.radius());
        let v = link_success_prob(&prof, z, r).unwrap();
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / samples as f64;
    let se = ((sum_sq / samples as f64 - mean * mean) / samples as f64).sqrt();
    let analytic = avg_success_prob(&prof, &geometry).unwrap();
    assert!((mean - analytic).abs() <= 4.0 * se, "{mean} vs {analytic} (se {se})");
}

#[test]
fn exponent_ordering_flips_at_one_metre() {
    let steep = profile(1.0, 0.2, 2.229);
    let shallow = profile(1.0, 0.2, 1.7);
    for z in [0.5, 3.98, 10.0] {
        for r in [1.01, 1.5, 2.0, 5.0, 10.0] {
            assert!(link_success_prob(&steep, z, r).unwrap() < link_success_prob(&shallow, z, r).unwrap());
        }
        for r in [0.1, 0.5, 0.9, 0.99] {
            assert!(link_success_prob(&steep, z, r).unwrap() > link_success_prob(&shallow, z, r).unwrap());
        }
    }
}

#[test]
fn stage_rates_monotone_in_link_success() {
    for n in [4u64, 13, 31, 100] {
        let b = FaultBudget::new(n).unwrap();
        let mut prev = marginal_stage_rates(&b, 0.0).unwrap();
        for step in 1..=20 {
            let ps = step as f64 * 0.05;
            let cur = marginal_stage_rates(&b, ps).unwrap();
            assert!(cur.pre_prepare >= prev.pre_prepare);
            assert!(cur.prepare >= prev.prepare);
            assert!(cur.commit >= prev.commit);
            assert!(cur.reply >= prev.reply);
            assert!(cur.consensus >= prev.consensus, "n={n} ps={ps}");
            for v in [cur.pre_prepare, cur.prepare, cur.commit, cur.reply, cur.consensus] {
                assert!((0.0..=1.0).contains(&v));
            }
            prev = cur;
        }
    }
}

proptest! {
    #[test]
    fn consensus_bounded_by_pre_prepare(f in 1u64..34, ps in 0.0f64..=1.0) {
        let b = FaultBudget::from_fault_tolerance(f).unwrap();
        let pc = consensus_success(&b, ps).unwrap();
        prop_assert!(pc <= stage_pre_prepare(&b, ps).unwrap() + 1e-15);
        prop_assert!((0.0..=1.0).contains(&pc));
    }

    #[test]
    fn later_stages_need_budget(f in 1u64..20, ps in 0.01f64..0.99, i in 0u64..20, j in 0u64..20, k in 0u64..20) {
        let b = FaultBudget::from_fault_tolerance(f).unwrap();
        prop_assert_eq!(stage_prepare(&b, i, ps).is_ok(), i <= f);
        prop_assert_eq!(stage_commit(&b, i, j, ps).is_ok(), i + j <= f);
        prop_assert_eq!(stage_reply(&b, i, j, k, ps).is_ok(), i + j + k <= f);
    }
}
