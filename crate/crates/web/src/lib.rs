//! Browser bindings for the interactive demo in `www/`.
//!
//! Every export returns plain `f64` arrays so the page can plot them
//! without any glue beyond what `wasm-bindgen` generates.

use bayes_explore::agents::{
    bandit_beta_objective, bandit_optimal_beta, soft_q_policy, Agent, SoftQParams,
};
use bayes_explore::environments::{make_problem1_prior, PROBLEM1_INFORMATIVE_ARM};
use bayes_explore::harness::seeding::cell_rng;
use bayes_explore::harness::{run_episode_loop, EnvSpec};
use bayes_explore::numeric::softmax_into;
use bayes_explore::posterior::Cgf;
use bayes_explore::Posterior;
use wasm_bindgen::prelude::*;

type Out = Result<Vec<f64>, String>;

fn text(e: bayes_explore::Error) -> String {
    e.to_string()
}

/// `[beta*, pi_2, f(beta*), unbounded]` for analytic K-learning on the
/// one-unknown-action bandit with `n` arms.
#[wasm_bindgen]
pub fn bandit_optimum(n: usize, epsilon: f64) -> Out {
    let belief = make_problem1_prior(n, epsilon, 0.5).map_err(text)?;
    let arms = belief.arm_beliefs().map_err(text)?;
    let search = bandit_optimal_beta(&arms).map_err(text)?;
    let g: Vec<f64> = arms.iter().map(|a| a.cgf(search.beta)).collect();
    let mut pi = vec![0.0; g.len()];
    softmax_into(&g, 1.0, &mut pi);
    Ok(vec![
        search.beta,
        pi[PROBLEM1_INFORMATIVE_ARM],
        search.objective,
        if search.unbounded { 1.0 } else { 0.0 },
    ])
}

/// The objective `f(beta)` at each of `betas`.
#[wasm_bindgen]
pub fn bandit_objective_curve(n: usize, epsilon: f64, betas: Vec<f64>) -> Out {
    let belief = make_problem1_prior(n, epsilon, 0.5).map_err(text)?;
    let arms = belief.arm_beliefs().map_err(text)?;
    Ok(betas
        .iter()
        .map(|&b| bandit_beta_objective(&arms, b))
        .collect())
}

/// Probability of pulling the informative arm under the prior:
/// `[soft-Q, K-learning, Thompson]`, both Boltzmann policies at `beta`.
#[wasm_bindgen]
pub fn informative_arm_probability(n: usize, epsilon: f64, beta: f64) -> Out {
    let belief = make_problem1_prior(n, epsilon, 0.5).map_err(text)?;
    let soft = soft_q_policy(&belief, &SoftQParams::new(beta).map_err(text)?);
    let arms = belief.arm_beliefs().map_err(text)?;
    let g: Vec<f64> = arms.iter().map(|a| a.cgf(beta)).collect();
    let mut k = vec![0.0; g.len()];
    softmax_into(&g, 1.0, &mut k);
    Ok(vec![
        soft.prob(0, 0, PROBLEM1_INFORMATIVE_ARM),
        k[PROBLEM1_INFORMATIVE_ARM],
        0.5,
    ])
}

/// Mean cumulative regret per episode of `agent` over `runs` environments
/// drawn from the prior. `beta` applies to soft-Q and K-learning.
#[wasm_bindgen]
pub fn problem1_regret_curve(
    agent: &str,
    beta: f64,
    n: usize,
    episodes: usize,
    runs: usize,
    seed: u64,
) -> Out {
    let agent = Agent::parse(agent, Some(beta), None).map_err(text)?;
    let env = EnvSpec::Problem1 {
        num_actions: n,
        epsilon: 1e-3,
        p_plus: 0.5,
    };
    let prior = env.prior().map_err(text)?;
    let mut mean = vec![0.0; episodes];
    for run in 0..runs {
        let mut rng = cell_rng(seed, "web", run, 0);
        let mdp = env.draw(run, &mut rng).map_err(text)?;
        let curve =
            run_episode_loop(&agent, &mdp, prior.clone(), episodes, &mut rng).map_err(text)?;
        for (m, c) in mean.iter_mut().zip(&curve.cumulative) {
            *m += c / runs as f64;
        }
    }
    Ok(mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimum_beats_nearby_temperatures() {
        let opt = bandit_optimum(10, 1e-3).unwrap();
        let around = bandit_objective_curve(10, 1e-3, vec![opt[0] * 0.9, opt[0] * 1.1]).unwrap();
        assert!(around.iter().all(|&f| f >= opt[2]));
        assert_eq!(opt[3], 0.0);
    }

    #[test]
    fn k_outweighs_soft_q_on_the_informative_arm() {
        let p = informative_arm_probability(10, 1e-3, 10.0).unwrap();
        assert!(p[1] > 0.5);
        assert!(p[0] < 1e-4);
    }

    #[test]
    fn regret_curves_are_deterministic() {
        let a = problem1_regret_curve("thompson", 1.0, 5, 20, 10, 3).unwrap();
        let b = problem1_regret_curve("thompson", 1.0, 5, 20, 10, 3).unwrap();
        assert_eq!(a.len(), 20);
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[1] >= w[0]));
        assert!(problem1_regret_curve("nonsense", 1.0, 5, 20, 10, 3).is_err());
    }
}
