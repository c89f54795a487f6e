use bayes_explore::agents::{
    boltzmann_policy, k_values, soft_q_values, KLearningParams, SoftQParams,
};
use bayes_explore::environments::{make_random_belief, make_random_mdp};
use bayes_explore::harness::output::{format_float, CurveRow, SummaryRow};
use bayes_explore::harness::{kl_divergence, time_to_learn, RegretCurve};
use bayes_explore::mdp::{evaluate_policy, optimal_values, per_episode_regret};
use bayes_explore::posterior::{reward_cgf, ArmBelief, GaussianRewardPosterior};
use bayes_explore::{Policy, Posterior};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn shape() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (1usize..=4, 1usize..=3, 1usize..=4, any::<u64>())
}

fn random_policy(h: usize, s: usize, a: usize, rng: &mut ChaCha8Rng) -> Policy {
    let mut probs = Vec::new();
    for _ in 0..h * s {
        let raw: Vec<f64> = (0..a).map(|_| rng.random::<f64>()).collect();
        let z: f64 = raw.iter().sum::<f64>().max(1e-300);
        probs.extend(raw.iter().map(|x| x / z));
    }
    Policy::new(h, s, a, probs).unwrap_or_else(|_| Policy::uniform(h, s, a))
}

fn arm() -> impl Strategy<Value = ArmBelief> {
    prop_oneof![
        (-3.0..3.0f64).prop_map(ArmBelief::Deterministic),
        (-3.0..3.0f64, 0.01..4.0f64)
            .prop_map(|(mean, variance)| ArmBelief::Gaussian { mean, variance }),
        (0.0..=1.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(
            |(p_plus, reward_plus, reward_minus)| {
                ArmBelief::TwoPoint {
                    p_plus,
                    reward_plus,
                    reward_minus,
                }
            }
        ),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn optimal_dominates_every_policy((s, a, h, seed) in shape()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mdp = make_random_mdp(s, a, h, &mut rng).unwrap();
        let (_, v) = optimal_values(&mdp).unwrap();
        let pi = random_policy(h, s, a, &mut rng);
        let vp = evaluate_policy(&mdp, &pi).unwrap();
        for hh in 0..=h {
            for ss in 0..s {
                prop_assert!(v.get(hh, ss) >= vp.get(hh, ss) - 1e-9);
            }
        }
        prop_assert!(per_episode_regret(&mdp, &pi).unwrap() >= -1e-9);
    }

    #[test]
    fn sampled_rows_stay_on_simplex((s, a, h, seed) in shape(), episodes in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let belief = make_random_belief(s, a, h, episodes, &mut rng).unwrap();
        let m = belief.sample_mdp(&mut rng);
        for ss in 0..s {
            for aa in 0..a {
                let sum: f64 = (0..s).map(|j| m.transition_prob(ss, aa, j)).sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                prop_assert!((0..s).all(|j| m.transition_prob(ss, aa, j) >= 0.0));
            }
        }
    }

    #[test]
    fn cgf_vanishes_at_zero_and_has_mean_slope(arm in arm()) {
        prop_assert_eq!(reward_cgf(&arm, 0.0), 0.0);
        let step = 1e-4;
        let slope = (reward_cgf(&arm, step) - reward_cgf(&arm, -step)) / (2.0 * step);
        prop_assert!((slope - arm.mean()).abs() < 1e-6, "{} vs {}", slope, arm.mean());
    }

    #[test]
    fn cgf_is_convex(arm in arm()) {
        let grid: Vec<f64> = (0..=100).map(|i| -5.0 + 0.1 * i as f64).collect();
        let g: Vec<f64> = grid.iter().map(|&b| reward_cgf(&arm, b)).collect();
        for w in g.windows(3) {
            prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-8);
        }
    }

    #[test]
    fn gaussian_posterior_contracts(
        v0 in 0.1..5.0f64,
        noise in 0.1..5.0f64,
        obs in proptest::collection::vec(-5.0..5.0f64, 0..20),
    ) {
        let mut p = GaussianRewardPosterior::new(0.0, v0, noise).unwrap();
        let mut prev = p.variance;
        for &r in &obs {
            p.observe(r);
            prop_assert!(p.variance < prev);
            prev = p.variance;
        }
        let want = 1.0 / (1.0 / v0 + obs.len() as f64 / noise);
        prop_assert!((p.variance - want).abs() <= 1e-12 * want.max(1.0));
        prop_assert!(p.variance <= v0);
    }

    #[test]
    fn batched_updates_commute(a in -5.0..5.0f64, b in -5.0..5.0f64) {
        let mut one = GaussianRewardPosterior::new(0.0, 1.0, 1.0).unwrap();
        one.observe(a);
        one.observe(b);
        let mut other = GaussianRewardPosterior::new(0.0, 1.0, 1.0).unwrap();
        other.observe(b);
        other.observe(a);
        let mut batch = GaussianRewardPosterior::new(0.0, 1.0, 1.0).unwrap();
        batch.observe_batch(2, a + b);
        prop_assert!((one.mean - other.mean).abs() < 1e-12);
        prop_assert!((one.mean - batch.mean).abs() < 1e-12);
        prop_assert!((one.variance - batch.variance).abs() < 1e-15);
    }

    #[test]
    fn k_values_dominate_soft_values((s, a, h, seed) in shape(), beta in 0.05..20.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let belief = make_random_belief(s, a, h, 3, &mut rng).unwrap();
        let params = KLearningParams::new(beta, 1.0, 1.0).unwrap();
        let (k, _) = k_values(&belief, 1, &params).unwrap();
        let (q, _) = soft_q_values(&belief, &SoftQParams::new(beta).unwrap());
        let (hard, _) = optimal_values(&belief.mean_mdp()).unwrap();
        for hh in 0..h {
            for ss in 0..s {
                for aa in 0..a {
                    prop_assert!(k.get(hh, ss, aa) >= q.get(hh, ss, aa) - 1e-9);
                    prop_assert!(q.get(hh, ss, aa) >= hard.get(hh, ss, aa) - 1e-9);
                }
            }
        }
        let pi = boltzmann_policy(&k, beta);
        for hh in 0..h {
            for ss in 0..s {
                let row = pi.row(hh, ss);
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(row.iter().all(|&p| p > 0.0));
            }
        }
    }

    #[test]
    fn time_to_learn_is_monotone(
        curve in proptest::collection::vec(0.0..2.0f64, 1..40),
        f1 in 0.01..0.99f64,
        f2 in 0.01..0.99f64,
    ) {
        let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
        let c = RegretCurve::new("a", "e", curve, 1.5);
        let t_lo = time_to_learn(&c, lo).unwrap().unwrap_or(usize::MAX);
        let t_hi = time_to_learn(&c, hi).unwrap().unwrap_or(usize::MAX);
        prop_assert!(t_lo >= t_hi);
    }

    #[test]
    fn cumulative_regret_is_prefix_sum(curve in proptest::collection::vec(0.0..2.0f64, 1..40)) {
        let c = RegretCurve::new("a", "e", curve.clone(), 1.0);
        let mut acc = 0.0;
        for (x, &cum) in curve.iter().zip(&c.cumulative) {
            acc += x;
            prop_assert!((acc - cum).abs() < 1e-12);
        }
    }

    #[test]
    fn kl_is_nonnegative(p in proptest::collection::vec(0.0..1.0f64, 2..6), q_raw in proptest::collection::vec(0.01..1.0f64, 6)) {
        let zp: f64 = p.iter().sum();
        prop_assume!(zp > 1e-6);
        let p: Vec<f64> = p.iter().map(|x| x / zp).collect();
        let q: Vec<f64> = q_raw[..p.len()].to_vec();
        let zq: f64 = q.iter().sum();
        let q: Vec<f64> = q.iter().map(|x| x / zq).collect();
        prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
    }

    #[test]
    fn csv_rows_round_trip(value in any::<f64>(), stderr in 0.0..1e6f64, eps in proptest::option::of(-1e3..1e3f64)) {
        prop_assume!(value.is_finite());
        let row = SummaryRow {
            experiment: "e".into(),
            agent: "soft-q[beta=1]".into(),
            env: "problem1".into(),
            param_n: 7,
            metric: "bayes_regret".into(),
            value,
            stderr,
            samples: 3,
        };
        prop_assert_eq!(SummaryRow::parse(&row.to_csv()).unwrap(), row);
        let curve = CurveRow {
            experiment: "e".into(),
            agent: "k-learning".into(),
            env: "deepsea".into(),
            param_n: 4,
            epsilon: eps,
            beta: Some(value),
            sigma: None,
            prior_draw: 2,
            seed: 9,
            episode: 1,
            regret: stderr,
            cum_regret: value,
        };
        prop_assert_eq!(CurveRow::parse(&curve.to_csv()).unwrap(), curve);
        prop_assert_eq!(format_float(value).parse::<f64>().unwrap().to_bits(), value.to_bits());
    }
}
