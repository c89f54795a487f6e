//! Benchmark environments: the one-unknown-action bandit, DeepSea and
//! random small MDPs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::mdp::{sample_episode, Policy, RewardModel, TabularMdp};
use crate::posterior::{BeliefState, Posterior, PriorConfig, TwoPointBelief};
use crate::{Error, Result};

/// Which member of the one-unknown-action family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// The unknown arm pays `+2`.
    Plus,
    /// The unknown arm pays `-2`.
    Minus,
}

/// `N` arms, one state, horizon 1. Arm 0 pays 1, arm 1 pays `+2` or `-2`,
/// every other arm pays `1 - epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Problem1Spec {
    pub num_actions: usize,
    pub epsilon: f64,
    pub variant: Variant,
}

/// Index of the arm whose reward is unknown.
pub const PROBLEM1_INFORMATIVE_ARM: usize = 1;

pub fn make_problem1(spec: &Problem1Spec) -> Result<TabularMdp> {
    if spec.num_actions < 3 {
        return Err(Error::InvalidParameter(format!(
            "problem1 needs at least 3 arms, got {}",
            spec.num_actions
        )));
    }
    if !(spec.epsilon > 0.0) || !spec.epsilon.is_finite() {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let n = spec.num_actions;
    let unknown = match spec.variant {
        Variant::Plus => 2.0,
        Variant::Minus => -2.0,
    };
    let rewards = (0..n)
        .map(|a| {
            RewardModel::Deterministic(match a {
                0 => 1.0,
                PROBLEM1_INFORMATIVE_ARM => unknown,
                _ => 1.0 - spec.epsilon,
            })
        })
        .collect();
    TabularMdp::new(1, n, 1, vec![1.0], vec![vec![1.0]; n], rewards)
}

/// Two-point prior putting mass `p_plus` on the `+2` variant.
pub fn make_problem1_prior(
    num_actions: usize,
    epsilon: f64,
    p_plus: f64,
) -> Result<TwoPointBelief> {
    let plus = make_problem1(&Problem1Spec {
        num_actions,
        epsilon,
        variant: Variant::Plus,
    })?;
    let minus = make_problem1(&Problem1Spec {
        num_actions,
        epsilon,
        variant: Variant::Minus,
    })?;
    TwoPointBelief::new(plus, minus, p_plus)
}

/// `N x N` grid; the agent falls one row per step and moves one column left
/// or right. Only the all-right path reaches the rewarding corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeepSeaSpec {
    pub size: usize,
    /// Cost paid on every right move; `None` means `0.01 / N`.
    pub right_cost: Option<f64>,
    pub goal_reward: f64,
    pub randomize_action_map: bool,
    pub map_seed: u64,
}

impl DeepSeaSpec {
    pub fn new(size: usize) -> Self {
        Self {
            size,
            right_cost: None,
            goal_reward: 1.0,
            randomize_action_map: false,
            map_seed: 0,
        }
    }

    pub fn cost(&self) -> f64 {
        self.right_cost.unwrap_or(0.01 / self.size as f64)
    }

    /// `(row, col)` to state index.
    pub fn state(&self, row: usize, col: usize) -> usize {
        row * self.size + col
    }

    /// Action index meaning "right" in state `s`.
    pub fn right_action(&self, s: usize) -> usize {
        if self.randomize_action_map {
            let mut rng = ChaCha8Rng::seed_from_u64(self.map_seed);
            rng.set_stream(s as u64);
            usize::from(rng.random::<bool>())
        } else {
            1
        }
    }
}

pub fn make_deep_sea(spec: &DeepSeaSpec) -> Result<TabularMdp> {
    let n = spec.size;
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "DeepSea size must be at least 2, got {n}"
        )));
    }
    let cost = spec.cost();
    if !(cost >= 0.0) || !spec.goal_reward.is_finite() {
        return Err(Error::InvalidParameter(
            "right cost must be nonnegative and the goal reward finite".into(),
        ));
    }
    let num_states = n * n;
    let mut transitions = Vec::with_capacity(num_states * 2);
    let mut rewards = Vec::with_capacity(num_states * 2);
    for row in 0..n {
        for col in 0..n {
            let s = spec.state(row, col);
            let right = spec.right_action(s);
            let next_row = (row + 1).min(n - 1);
            for action in 0..2 {
                let (next_col, reward) = if action == right {
                    let mut r = -cost;
                    if row == n - 1 && col == n - 1 {
                        r += spec.goal_reward;
                    }
                    ((col + 1).min(n - 1), r)
                } else {
                    (col.saturating_sub(1), 0.0)
                };
                transitions.push(vec![(spec.state(next_row, next_col), 1.0)]);
                rewards.push(RewardModel::Deterministic(reward));
            }
        }
    }
    let mut initial = vec![0.0; num_states];
    initial[0] = 1.0;
    TabularMdp::from_sparse(num_states, 2, n, initial, transitions, rewards)
}

/// Random MDP for property tests: transition rows uniform on the simplex,
/// Gaussian rewards with means in `[-1, 1]` and unit noise, uniform `rho`.
pub fn make_random_mdp<R: Rng + ?Sized>(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<TabularMdp> {
    if num_states == 0 || num_actions == 0 || horizon == 0 {
        return Err(Error::InvalidParameter(
            "dimensions must be positive".into(),
        ));
    }
    let pairs = num_states * num_actions;
    let mut rows = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let mut row: Vec<f64> = (0..num_states)
            .map(|_| Exp1.sample(rng))
            .collect::<Vec<f64>>();
        let sum: f64 = row.iter().sum();
        for p in &mut row {
            *p /= sum;
        }
        rows.push(row);
    }
    let rewards = (0..pairs)
        .map(|_| RewardModel::Gaussian {
            mean: rng.random_range(-1.0..=1.0),
            noise_variance: 1.0,
        })
        .collect();
    TabularMdp::new(
        num_states,
        num_actions,
        horizon,
        vec![1.0 / num_states as f64; num_states],
        rows,
        rewards,
    )
}

/// A default-prior belief after `episodes` uniformly random episodes on a
/// random MDP of the given shape. Used by the bound batteries.
pub fn make_random_belief<R: Rng + ?Sized>(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    episodes: usize,
    rng: &mut R,
) -> Result<BeliefState> {
    let mdp = make_random_mdp(num_states, num_actions, horizon, rng)?;
    let mut belief = BeliefState::new(
        num_states,
        num_actions,
        horizon,
        mdp.initial_dist().to_vec(),
        PriorConfig::default(),
    )?;
    let policy = Policy::uniform(horizon, num_states, num_actions);
    for ep in 1..=episodes {
        for t in sample_episode(&mdp, &policy, ep, rng) {
            belief.update(&t);
        }
    }
    Ok(belief)
}
