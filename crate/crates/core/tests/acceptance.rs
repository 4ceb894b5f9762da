//! Acceptance suite: one test per criterion, each printing a single
//! pass line on success (visible under --nocapture). Tolerances are the
//! contract; do not loosen them to make a test pass.

use approx::assert_abs_diff_eq;
use kelly_slc_core::{decomposition, infotheory, optimality, simulate, strategy};
use kelly_slc_core::{BoxConstraints, Channel, Prior, RewardMatrix, Scenario, StrategyMatrix};
use optimality::Verdict;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario(
    prior: Vec<f64>,
    channel: Channel,
    reward: Vec<Vec<f64>>,
    constraints: Option<BoxConstraints>,
) -> Scenario {
    Scenario::new(
        Prior::new(prior).unwrap(),
        channel,
        RewardMatrix::new(reward).unwrap(),
        1.0,
        0.0,
        constraints,
    )
    .unwrap()
}

fn mixed_reward(q: f64) -> Scenario {
    scenario(vec![0.5, 0.5], Channel::bsc(q), vec![vec![2.0, 1.0], vec![1.0, 3.0]], None)
}

fn fair_odds_bsc(q: f64) -> Scenario {
    scenario(vec![0.5, 0.5], Channel::bsc(q), vec![vec![2.0, 0.0], vec![0.0, 2.0]], None)
}

#[test]
fn acceptance_1_two_by_two_decomposition_and_classification() {
    let r = RewardMatrix::new(vec![vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
    let d = decomposition::decompose(&r).unwrap();
    let b_expect = [[0.8, 0.2], [0.4, 0.6]];
    for i in 0..2 {
        for j in 0..2 {
            assert_abs_diff_eq!(d.b()[(i, j)], b_expect[i][j], epsilon = 1e-9);
        }
    }
    assert_abs_diff_eq!(d.d_diag()[0], 2.5, epsilon = 1e-9);
    assert_abs_diff_eq!(d.d_diag()[1], 5.0, epsilon = 1e-9);

    let sc = mixed_reward(0.4);
    match optimality::classify_scenario(&sc) {
        Verdict::ProportionalOptimal { witness } => {
            let s_expect = [[0.5, 0.5], [0.0, 1.0]];
            for y in 0..2 {
                for i in 0..2 {
                    assert_abs_diff_eq!(
                        witness.strategy.get(y, i),
                        s_expect[y][i],
                        epsilon = 1e-6
                    );
                }
            }
        }
        other => panic!("expected proportional optimal, got {other:?}"),
    }

    let sc = mixed_reward(0.3);
    let t = strategy::proportional_strategy(&sc).unwrap();
    let err = decomposition::actual_strategy(&t, &d).unwrap_err();
    assert!(!err.report.violations.is_empty());
    println!("acceptance 1 (decomposition and classification): pass");
}

#[test]
fn acceptance_2_box_constrained_witness() {
    let sc = scenario(
        vec![0.5, 0.5],
        Channel::bsc(0.1),
        vec![vec![2.0, 0.0], vec![0.0, 2.0]],
        Some(BoxConstraints { lo: 0.2, hi: 0.8 }),
    );
    let opts = strategy::OptimizeOptions::from_scenario(&sc);
    let (s, _) = strategy::optimize_strategy(&sc, &opts).unwrap();
    let expect = [[0.8, 0.2], [0.2, 0.8]];
    for y in 0..2 {
        for i in 0..2 {
            assert_abs_diff_eq!(s.get(y, i), expect[y][i], epsilon = 1e-9);
        }
    }
    let w = optimality::check_distortion_criterion(&sc, &s).unwrap();
    let c_expect = 4.0f64.ln() / 9.0f64.ln();
    assert!((w.c - c_expect).abs() < 1e-6, "c = {}, expected {c_expect}", w.c);
    println!("acceptance 2 (box-constrained witness exponent): pass");
}

#[test]
fn acceptance_3_symmetric_binary_closed_form() {
    let sc = scenario(
        vec![0.5, 0.5],
        Channel::bsc(0.1),
        vec![vec![3.0, 1.0], vec![1.0, 3.0]],
        None,
    );
    match optimality::classify_scenario(&sc) {
        Verdict::NonProportionalOptimal { witness } => {
            assert!((witness.c - 0.5).abs() < 1e-6, "c = {}", witness.c);
        }
        other => panic!("expected non-proportional optimal, got {other:?}"),
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 50 {
        let r_n: f64 = rng.gen_range(0.2..2.0);
        let r_d: f64 = r_n + rng.gen_range(0.2..3.0);
        let q: f64 = rng.gen_range(0.02..0.48);
        // Keep away from the regime boundary where both paths are valid
        // but land on different sides of the c = 1 split.
        if (q - r_n / (r_d + r_n)).abs() < 1e-3 {
            continue;
        }
        let sc = scenario(
            vec![0.5, 0.5],
            Channel::bsc(q),
            vec![vec![r_d, r_n], vec![r_n, r_d]],
            None,
        );
        let (_, regime) = optimality::bsc_closed_form_c(r_d, r_n, q).unwrap();
        let verdict = optimality::classify_scenario(&sc);
        match regime {
            optimality::BscRegime::NonProportional { c } => match verdict {
                Verdict::NonProportionalOptimal { witness } => {
                    assert!(
                        (witness.c - c).abs() < 1e-6,
                        "draw (r_d={r_d}, r_n={r_n}, q={q}): witness c {} vs closed form {c}",
                        witness.c
                    );
                }
                other => panic!("draw (r_d={r_d}, r_n={r_n}, q={q}): {other:?}"),
            },
            optimality::BscRegime::Proportional
            | optimality::BscRegime::ProportionalBoundary => match verdict {
                Verdict::ProportionalOptimal { witness } => {
                    assert!((witness.c - 1.0).abs() < 1e-6);
                }
                other => panic!("draw (r_d={r_d}, r_n={r_n}, q={q}): {other:?}"),
            },
        }
        checked += 1;
    }
    println!("acceptance 3 (symmetric binary closed form, 50 draws): pass");
}

/// Random valid 2x2 reward with strictly positive off-diagonals, existing
/// decomposition, and no dominant wager.
fn random_z_reward(rng: &mut ChaCha8Rng) -> RewardMatrix {
    loop {
        let r11 = rng.gen_range(1.0..5.0);
        let r22 = rng.gen_range(1.0..5.0);
        let r12 = rng.gen_range(0.05..r22);
        let r21 = rng.gen_range(0.05..r11);
        let Ok(r) = RewardMatrix::new(vec![vec![r11, r12], vec![r21, r22]]) else {
            continue;
        };
        if decomposition::decompose(&r).is_ok()
            && decomposition::find_dominant_wager(&r).is_none()
        {
            return r;
        }
    }
}

#[test]
fn acceptance_4_z_channel_dichotomy() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for draw in 0..50 {
        let r = random_z_reward(&mut rng);
        for step in 1..=9 {
            let q = step as f64 / 10.0;
            let sc = Scenario::new(
                Prior::uniform(2),
                Channel::z(q),
                r.clone(),
                1.0,
                0.0,
                None,
            )
            .unwrap();
            match optimality::classify_scenario(&sc) {
                Verdict::NoSingleLetterCode { .. } => {}
                other => panic!("draw {draw}, q={q}, R={:?}: {other:?}", r.matrix()),
            }
        }
    }
    for step in 1..=9 {
        let q = step as f64 / 10.0;
        let sc = scenario(
            vec![0.5, 0.5],
            Channel::z(q),
            vec![vec![2.0, 0.0], vec![0.0, 3.0]],
            None,
        );
        assert!(
            matches!(optimality::classify_scenario(&sc), Verdict::ProportionalOptimal { .. }),
            "diagonal reward on z({q})"
        );
    }
    println!("acceptance 4 (z-channel dichotomy, 50 draws x 9 channels): pass");
}

#[test]
fn acceptance_5_fair_odds_identity() {
    for step in 1..=9 {
        let q = step as f64 * 0.05;
        let sc = fair_odds_bsc(q);
        let prop = strategy::proportional_strategy(&sc).unwrap();
        let lambda = strategy::growth_rate(&sc, &prop);
        let h2 = infotheory::binary_entropy(q);
        let mi = infotheory::mutual_information(sc.prior(), sc.channel());
        assert!((lambda - (1.0 - h2)).abs() < 1e-9, "q={q}: {lambda} vs {}", 1.0 - h2);
        assert!((lambda - mi).abs() < 1e-9, "q={q}: {lambda} vs I={mi}");
    }
    println!("acceptance 5 (fair-odds growth identity): pass");
}

fn random_reward(rng: &mut ChaCha8Rng, k: usize) -> RewardMatrix {
    loop {
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                let diag = rng.gen_range(1.0..5.0);
                (0..k)
                    .map(|j| if i == j { diag } else { rng.gen_range(0.0..diag) })
                    .collect()
            })
            .collect();
        if let Ok(r) = RewardMatrix::new(rows) {
            return r;
        }
    }
}

fn random_strategy(rng: &mut ChaCha8Rng, k: usize) -> StrategyMatrix {
    let rows: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / sum).collect()
        })
        .collect();
    StrategyMatrix::new(rows).unwrap()
}

#[test]
fn acceptance_6_decomposition_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..1000 {
        let k = if trial % 2 == 0 { 2 } else { 3 };
        let r = random_reward(&mut rng, k);
        if k == 2 {
            assert_eq!(
                decomposition::decomposition_exists_2x2(&r),
                decomposition::decompose(&r).is_ok(),
                "sign-pattern equivalence failed for {:?}",
                r.matrix()
            );
        }
        let Ok(d) = decomposition::decompose(&r) else { continue };
        let recon = d.b() * d.d().matrix();
        for i in 0..k {
            let row_sum: f64 = (0..k).map(|j| d.b()[(i, j)]).sum();
            assert!((row_sum - 1.0).abs() < 1e-9, "B row {i} sums to {row_sum}");
            for j in 0..k {
                assert!(
                    (recon[(i, j)] - r.get(i, j)).abs() < 1e-9,
                    "B*D mismatch at ({i},{j})"
                );
            }
        }
        // Growth equality between the actual race and the effective race.
        let prior: Vec<f64> = {
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / sum).collect()
        };
        let channel = {
            let rows: Vec<Vec<f64>> = (0..k)
                .map(|_| {
                    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
                    let sum: f64 = raw.iter().sum();
                    raw.into_iter().map(|v| v / sum).collect()
                })
                .collect();
            Channel::new(rows).unwrap()
        };
        let sc = Scenario::new(
            Prior::new(prior).unwrap(),
            channel,
            r.clone(),
            1.0,
            0.0,
            None,
        )
        .unwrap();
        let s = random_strategy(&mut rng, k);
        let t = decomposition::effective_strategy(&s, &d);
        let sc_eff = sc.with_reward(d.d());
        let g_actual = strategy::growth_rate(&sc, &s);
        let g_eff = strategy::growth_rate(&sc_eff, &t);
        assert!(
            (g_actual - g_eff).abs() < 1e-12,
            "growth mismatch: {g_actual} vs {g_eff}"
        );
    }
    println!("acceptance 6 (decomposition properties, 1000 draws): pass");
}

#[test]
fn acceptance_7_optimizer_against_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let p0 = rng.gen_range(0.2..0.8);
        let a = rng.gen_range(0.1..0.9);
        let b = rng.gen_range(0.1..0.9);
        let sc = scenario(
            vec![p0, 1.0 - p0],
            Channel::new(vec![vec![a, 1.0 - a], vec![1.0 - b, b]]).unwrap(),
            vec![
                vec![rng.gen_range(1.0..5.0), 0.0],
                vec![0.0, rng.gen_range(1.0..5.0)],
            ],
            None,
        );
        let opts = strategy::OptimizeOptions::from_scenario(&sc);
        let (s, lambda) = strategy::optimize_strategy(&sc, &opts).unwrap();

        // The objective separates over rows, so the best joint grid
        // strategy is the per-row grid best at step 1e-3.
        let mut best = 0.0;
        for y in 0..2 {
            let weights: Vec<f64> = (0..2)
                .map(|w| sc.prior().prob(w) * sc.channel().prob(w, y))
                .collect();
            let mut row_best = f64::NEG_INFINITY;
            for i in 0..=1000 {
                let s0 = i as f64 * 1e-3;
                let frac = [s0, 1.0 - s0];
                let mut obj = 0.0;
                for w in 0..2 {
                    let ret: f64 = (0..2).map(|i| frac[i] * sc.reward().get(i, w)).sum();
                    obj += if ret > 0.0 {
                        weights[w] * ret.log2()
                    } else if weights[w] > 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        0.0
                    };
                }
                row_best = row_best.max(obj);
            }
            best += row_best;
        }
        assert!(lambda >= best - 1e-6, "optimizer {lambda} below grid best {best}");

        let post = infotheory::posterior(sc.prior(), sc.channel()).unwrap();
        for y in 0..2 {
            for w in 0..2 {
                assert!(
                    (s.get(y, w) - post.prob(y, w)).abs() < 1e-5,
                    "strategy entry ({y},{w}) = {} vs posterior {}",
                    s.get(y, w),
                    post.prob(y, w)
                );
            }
        }
    }
    println!("acceptance 7 (optimizer vs grid oracle, 100 draws): pass");
}

#[test]
fn acceptance_8_monte_carlo_verification() {
    let cases = [
        (fair_odds_bsc(0.1), 101u64),
        (mixed_reward(0.4), 103u64),
    ];
    for (sc, seed) in cases {
        let verdict = optimality::classify_scenario(&sc);
        let s = verdict.strategy().expect("both cases classify with a strategy").clone();
        let cfg = simulate::SimConfig::new(1_000_000, seed);
        let base = simulate::run_races(&sc, &s, &cfg).unwrap();
        let analytic = strategy::growth_rate(&sc, &s);
        assert!(
            (base.empirical_lambda - analytic).abs() < 3.0 * base.standard_error,
            "empirical {} vs analytic {analytic} (se {})",
            base.empirical_lambda,
            base.standard_error
        );
        for threads in [1usize, 2, 8] {
            let pool =
                rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let r = pool.install(|| simulate::run_races(&sc, &s, &cfg)).unwrap();
            assert_eq!(r, base, "thread count {threads} changed the result");
        }
    }
    println!("acceptance 8 (monte carlo within 3 sigma, thread-invariant): pass");
}

#[test]
fn acceptance_9_witness_soundness_fuzz() {
    // Witness side: every witness produced by the classifier across a
    // spread of scenarios must satisfy the power-form identity tightly.
    let mut witness_count = 0;
    let mut no_witness_cases: Vec<(Scenario, StrategyMatrix)> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut scenarios = vec![
        mixed_reward(0.4),
        mixed_reward(0.45),
        fair_odds_bsc(0.1),
        fair_odds_bsc(0.3),
        scenario(
            vec![0.5, 0.5],
            Channel::bsc(0.1),
            vec![vec![3.0, 1.0], vec![1.0, 3.0]],
            None,
        ),
        scenario(
            vec![0.5, 0.5],
            Channel::bsc(0.1),
            vec![vec![2.0, 0.0], vec![0.0, 2.0]],
            Some(BoxConstraints { lo: 0.2, hi: 0.8 }),
        ),
    ];
    for _ in 0..6 {
        let r = random_z_reward(&mut rng);
        let q = rng.gen_range(0.1..0.9);
        scenarios.push(
            Scenario::new(Prior::uniform(2), Channel::z(q), r, 1.0, 0.0, None).unwrap(),
        );
    }
    for sc in &scenarios {
        match optimality::classify_scenario(sc) {
            Verdict::ProportionalOptimal { witness }
            | Verdict::NonProportionalOptimal { witness } => {
                let resid = optimality::witness_residual(sc, &witness.strategy, witness.c)
                    .expect("residual computable for a witnessed strategy");
                assert!(resid < 1e-7, "witness residual {resid}");
                witness_count += 1;
            }
            Verdict::NoSingleLetterCode { strategy, .. } => {
                no_witness_cases.push((sc.clone(), strategy));
            }
            other => panic!("unexpected verdict in fuzz set: {other:?}"),
        }
    }
    assert!(witness_count >= 6, "fuzz set produced too few witnesses");
    assert!(!no_witness_cases.is_empty(), "fuzz set produced no rejections");

    // Rejection side: brute-force scan confirms no exponent in range
    // achieves a small residual for any rejected strategy.
    for (sc, s) in &no_witness_cases {
        let mut best = f64::INFINITY;
        for i in 0..100_000 {
            let c = 1e-4 + (64.0 - 1e-4) * (i as f64 / 100_000.0);
            if let Some(r) = optimality::witness_residual(sc, s, c) {
                best = best.min(r);
            }
        }
        assert!(best >= 1e-4, "brute force found exponent with residual {best}");
    }
    println!("acceptance 9 (witness soundness fuzz): pass");
}
