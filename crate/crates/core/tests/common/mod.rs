//! Independent reference computations shared by the integration suites.
//!
//! Nothing here calls the library's planners; values come from forward
//! occupancy measures and brute-force policy enumeration.

#![allow(dead_code)]

use bayes_explore::mdp::Policy;
use bayes_explore::TabularMdp;

/// Value of `policy` from `(h0, s0)` by pushing the state distribution
/// forward and summing expected rewards.
pub fn forward_value(mdp: &TabularMdp, policy: &Policy, h0: usize, s0: usize) -> f64 {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut dist = vec![0.0; ns];
    dist[s0] = 1.0;
    let mut total = 0.0;
    for h in h0..mdp.horizon() {
        let mut next = vec![0.0; ns];
        for (s, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for a in 0..na {
                let w = mass * policy.prob(h, s, a);
                if w == 0.0 {
                    continue;
                }
                total += w * mdp.mean_reward(s, a);
                for (j, p) in (0..ns).map(|j| (j, mdp.transition_prob(s, a, j))) {
                    next[j] += w * p;
                }
            }
        }
        dist = next;
    }
    total
}

/// `V*_h(s)` for every `(h, s)` as the best value over all deterministic
/// Markov policies, enumerated exhaustively.
pub fn enumerate_optimal(mdp: &TabularMdp) -> Vec<Vec<f64>> {
    let (ns, na, horizon) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    let slots = ns * horizon;
    let count = na.pow(slots as u32);
    let mut best = vec![vec![f64::NEG_INFINITY; ns]; horizon];
    let mut actions = vec![0usize; slots];
    for code in 0..count {
        let mut c = code;
        for slot in actions.iter_mut() {
            *slot = c % na;
            c /= na;
        }
        let policy = Policy::deterministic(horizon, ns, na, &actions).unwrap();
        for (h, row) in best.iter_mut().enumerate() {
            for (s, b) in row.iter_mut().enumerate() {
                *b = b.max(forward_value(mdp, &policy, h, s));
            }
        }
    }
    best
}

/// Standard normal CDF by composite Simpson integration of the density.
pub fn normal_cdf(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - normal_cdf(-x);
    }
    let n = 20_000;
    let step = x / n as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut sum = pdf(0.0) + pdf(x);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * pdf(i as f64 * step);
    }
    0.5 + sum * step / 3.0
}

/// Every deterministic action sequence of length `h` over `a` actions.
pub fn action_sequences(a: usize, h: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..a.pow(h as u32)).map(move |mut code| {
        (0..h)
            .map(|_| {
                let x = code % a;
                code /= a;
                x
            })
            .collect()
    })
}
