//! Distribution-level invariants of the simulator and lab that go beyond
//! single-path assertions: coupled marginals, restart domination, the
//! martingale self-oracle, and the good-lambda monotonicity.

use skipfree::chain::Generator;
use skipfree::checkers::ModerateFunction;
use skipfree::lab::{band_stats, estimate_pair, good_lambda_probe, martingale_identity_check, ratio_sweep};
use skipfree::scale::{compute_scale, ExtensionKind};
use skipfree::sim::{
    controllability_probe, simulate_coupled_bd_paths, simulate_coupled_catastrophe_paths,
    simulate_paths, simulate_paths_from, SimCaps, StoppingRule,
};
use skipfree::stats::{joint_proportion_se, BinomialEstimate, EstimatorReport};

/// The Y component of the coupled pair is the single chain in law: total
/// variation between the coupled marginal at t and an independent run of
/// the plain chain stays within Monte Carlo resolution.
#[test]
fn coupled_marginal_matches_single_chain() {
    let caps = SimCaps::default();
    let n = 100_000usize;
    let (k, t) = (3usize, 1.0);
    let coupled = simulate_coupled_bd_paths(&[1.0], &[2.0], k, t, n, 2100, &caps).unwrap();
    let g = Generator::mm1(1.0, 2.0).unwrap();
    let single = simulate_paths_from(&g, k, StoppingRule::FixedTime(t), n, 2101, &caps).unwrap();

    let hist = |states: &mut dyn Iterator<Item = usize>| -> Vec<f64> {
        let mut h = vec![0.0; 31];
        for s in states {
            h[s.min(30)] += 1.0 / n as f64;
        }
        h
    };
    let hy = hist(&mut coupled.iter().map(|o| o.y_end));
    let hx = hist(&mut single.iter().map(|o| o.x_at_tau));
    let tv = 0.5 * hy.iter().zip(&hx).map(|(a, b)| (a - b).abs()).sum::<f64>();
    assert!(tv <= 0.02, "total variation {tv}");

    // Z runs the same chain from 0
    let from0 = simulate_paths_from(&g, 0, StoppingRule::FixedTime(t), n, 2102, &caps).unwrap();
    let hz = hist(&mut coupled.iter().map(|o| o.z_end));
    let h0 = hist(&mut from0.iter().map(|o| o.x_at_tau));
    let tv = 0.5 * hz.iter().zip(&h0).map(|(a, b)| (a - b).abs()).sum::<f64>();
    assert!(tv <= 0.02, "Z marginal total variation {tv}");
}

/// Within the catastrophe coupling itself: the running maxima satisfy the
/// shifted domination P(Y* >= 6) <= P(Z* >= 2) from start gap 4 (the gap
/// never grows, so it even holds pathwise).
#[test]
fn coupled_catastrophe_star_domination() {
    let caps = SimCaps::default();
    let n = 20_000usize;
    let outs = simulate_coupled_catastrophe_paths(&[1.0], 1.0, 4, 5.0, n, 2150, &caps).unwrap();
    let y6 = BinomialEstimate::new(outs.iter().filter(|o| o.y_star >= 6).count() as u64, n as u64);
    let z2 = BinomialEstimate::new(outs.iter().filter(|o| o.z_star >= 2).count() as u64, n as u64);
    let se = joint_proportion_se(&y6, &z2);
    assert!(y6.p_hat <= z2.p_hat + 3.0 * se, "{} vs {}", y6.p_hat, z2.p_hat);
    for o in &outs {
        assert!(o.z_star + 4 >= o.y_star, "pathwise domination broke");
    }
}

/// Restart domination with C = 1: both worked families keep the
/// controllability ratio at or below one across a (t, k) grid.
#[test]
fn controllability_ratios_stay_near_one() {
    let caps = SimCaps::default();
    for (name, g) in [
        ("mm1", Generator::mm1(1.0, 2.0).unwrap()),
        ("catastrophe", Generator::catastrophe(1.0, 2.0).unwrap()),
    ] {
        let cells =
            controllability_probe(&g, 2.0, 1.0, &[1.0, 3.0], &[2, 4], 20_000, 2200, &caps).unwrap();
        assert_eq!(cells.len(), 4);
        for c in &cells {
            let se = joint_proportion_se(&c.lhs, &c.rhs);
            assert!(
                c.lhs.p_hat <= c.rhs.p_hat + 3.0 * se,
                "{name} t={} k={}: lhs {} rhs {}",
                c.t,
                c.k,
                c.lhs.p_hat,
                c.rhs.p_hat
            );
            if let Some(r) = c.ratio {
                assert!(r <= 1.5, "{name}: ratio {r} far above the C = 1 domination");
            }
        }
    }
}

/// Self-oracle: the mean stopping time of `min(5, tau_4)` on the
/// catastrophe chain, measured at 1e5 paths, agrees with an independent
/// 1e6-path run, and the martingale identity holds on the small run.
#[test]
fn martingale_self_oracle_catastrophe() {
    let caps = SimCaps::default();
    let g = Generator::catastrophe(1.0, 1.0).unwrap();
    let s = compute_scale(&g, 4, ExtensionKind::PiecewiseLinear).unwrap();
    let rule = StoppingRule::MinOf(5.0, 4);

    let rows = martingale_identity_check(&g, &s, &[rule], 100_000, 2300, &caps).unwrap();
    assert!(rows[0].within_4se, "diff {} se {}", rows[0].mean_diff, rows[0].joint_se);

    let small = simulate_paths(&g, rule, 100_000, 2301, &caps).unwrap();
    let big = simulate_paths(&g, rule, 1_000_000, 2302, &caps).unwrap();
    let tau_small =
        EstimatorReport::from_samples(&small.iter().map(|o| o.tau).collect::<Vec<_>>(), 0);
    let tau_big = EstimatorReport::from_samples(&big.iter().map(|o| o.tau).collect::<Vec<_>>(), 0);
    let joint = (tau_small.std_error.powi(2) + tau_big.std_error.powi(2)).sqrt();
    assert!(
        (tau_small.mean - tau_big.mean).abs() <= 4.0 * joint,
        "{} vs {} (joint se {joint})",
        tau_small.mean,
        tau_big.mean
    );
}

/// Both moment estimates stay finite with a sane ratio on a mid-horizon
/// fixed-time rule.
#[test]
fn pair_estimate_sanity_band() {
    let caps = SimCaps::default();
    let g = Generator::mm1(1.0, 1.0).unwrap();
    let s = compute_scale(&g, 40, ExtensionKind::PiecewiseLinear).unwrap();
    let f = ModerateFunction::power(2.0).unwrap();
    let pair = estimate_pair(&g, &s, &f, StoppingRule::FixedTime(10.0), 100_000, 2400, &caps).unwrap();
    assert!(pair.e_f_max.mean.is_finite() && pair.e_f_g.mean.is_finite());
    assert!(pair.ratio > 0.1 && pair.ratio < 10.0, "ratio {}", pair.ratio);
    // floor/ceil secondary columns bracket the interpolated one
    assert!(pair.e_f_floor_g.mean <= pair.e_f_g.mean + 1e-9);
    assert!(pair.e_f_ceil_g.mean >= pair.e_f_g.mean - 1e-9);
}

/// Higher moments keep the bounded-band property too: F = x^3 on the
/// catastrophe chain across a sweep of time caps and hit levels.
#[test]
fn cubic_moment_band_on_catastrophe() {
    let caps = SimCaps::default();
    let g = Generator::catastrophe(1.0, 1.0).unwrap();
    let s = compute_scale(&g, 16, ExtensionKind::PiecewiseLinear).unwrap();
    let f = ModerateFunction::power(3.0).unwrap();
    let mut rules = Vec::new();
    for &t in &[0.1, 1.0, 10.0, 100.0, 1000.0] {
        for l in [Some(2usize), Some(6), None] {
            rules.push(match l {
                Some(level) => StoppingRule::MinOf(t, level),
                None => StoppingRule::FixedTime(t),
            });
        }
    }
    let sweep = ratio_sweep(&g, &s, &f, &rules, 4000, 2600, &caps).unwrap();
    let stats = band_stats(&sweep);
    assert!(stats.band <= 100.0, "band {}", stats.band);
    assert!(
        stats.second_half_band <= 2.0 * stats.first_half_band,
        "band trends with the cap: {} vs {}",
        stats.second_half_band,
        stats.first_half_band
    );
}

/// The good-lambda ratio decays as delta drops, in every k cell with a
/// solid denominator. A hitting rule keeps tau random so the joint event
/// has mass; the joint cells probe "reached floor(beta k) before scale
/// time f(floor(delta k))".
#[test]
fn good_lambda_ratio_decays_with_delta() {
    let caps = SimCaps::default();
    let g = Generator::mm1(1.0, 1.0).unwrap();
    let s = compute_scale(&g, 60, ExtensionKind::PiecewiseLinear).unwrap();
    let ks: Vec<usize> = (4..=7).collect();
    let deltas = [0.9, 0.5, 0.25];
    let cells = good_lambda_probe(
        &g,
        &s,
        2.0,
        &deltas,
        &ks,
        StoppingRule::MinOf(50.0, 14),
        40_000,
        2500,
        &caps,
    )
    .unwrap();
    let mut nontrivial = 0;
    for &k in &ks {
        let cell = |d: f64| cells.iter().find(|c| c.k == k && c.delta == d).unwrap();
        let mut prev = f64::INFINITY;
        for &d in &deltas {
            let c = cell(d);
            assert!(c.denom.successes >= 30, "k {k} delta {d}: thin denominator");
            let r = c.ratio.unwrap();
            assert!(r <= prev + 1e-12, "k {k}: ratio not decaying at delta {d}");
            prev = r;
        }
        if cell(deltas[0]).ratio.unwrap() > 0.0 {
            nontrivial += 1;
        }
    }
    assert!(nontrivial > 0, "the grid should contain nonzero joint cells");
}
