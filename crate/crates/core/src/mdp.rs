//! Finite-horizon tabular MDPs: exact planning, policy evaluation,
//! episode simulation and per-episode regret.
//!
//! Rewards are received on taking `(s, a)` at step `h`; the value at the
//! terminal stage `H` is zero. Models are stage-homogeneous: the same reward
//! and transition tables apply at every step.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

/// Tolerance used for the lowest-index tie-break in greedy action selection.
pub const TIE_TOLERANCE: f64 = 1e-9;

const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Reward distribution of a single state-action pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardModel {
    Deterministic(f64),
    Gaussian { mean: f64, noise_variance: f64 },
}

impl RewardModel {
    pub fn mean(&self) -> f64 {
        match *self {
            RewardModel::Deterministic(v) => v,
            RewardModel::Gaussian { mean, .. } => mean,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            RewardModel::Deterministic(v) => v,
            RewardModel::Gaussian {
                mean,
                noise_variance,
            } => {
                if noise_variance == 0.0 {
                    mean
                } else {
                    Normal::new(mean, noise_variance.sqrt())
                        .expect("validated variance")
                        .sample(rng)
                }
            }
        }
    }
}

/// A full finite-horizon MDP `(S, A, R, P, H, rho)`.
///
/// Transition rows are stored sparsely: only successors with positive
/// probability are kept, sorted by state index.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    initial_dist: Vec<f64>,
    transitions: Vec<Vec<(usize, f64)>>,
    rewards: Vec<RewardModel>,
}

impl TabularMdp {
    /// Builds an MDP from dense transition rows indexed by `s * A + a`.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        initial_dist: Vec<f64>,
        transitions: Vec<Vec<f64>>,
        rewards: Vec<RewardModel>,
    ) -> Result<Self> {
        let mut sparse = Vec::with_capacity(transitions.len());
        for (i, row) in transitions.iter().enumerate() {
            if row.len() != num_states {
                return Err(Error::InvalidMdp(format!(
                    "transition row {i} has length {}, expected {num_states}",
                    row.len()
                )));
            }
            sparse.push(
                row.iter()
                    .enumerate()
                    .filter(|(_, &p)| p != 0.0)
                    .map(|(j, &p)| (j, p))
                    .collect(),
            );
        }
        Self::from_sparse(
            num_states,
            num_actions,
            horizon,
            initial_dist,
            sparse,
            rewards,
        )
    }

    /// Builds an MDP from sparse `(next_state, probability)` rows indexed by
    /// `s * A + a`.
    pub fn from_sparse(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        initial_dist: Vec<f64>,
        mut transitions: Vec<Vec<(usize, f64)>>,
        rewards: Vec<RewardModel>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 || horizon == 0 {
            return Err(Error::InvalidMdp(
                "states, actions and horizon must be positive".into(),
            ));
        }
        let pairs = num_states * num_actions;
        if transitions.len() != pairs || rewards.len() != pairs {
            return Err(Error::InvalidMdp(format!(
                "expected {pairs} transition rows and rewards, got {} and {}",
                transitions.len(),
                rewards.len()
            )));
        }
        check_simplex(&initial_dist, num_states, "initial distribution")?;
        for (i, row) in transitions.iter_mut().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            row.retain(|&(_, p)| p != 0.0);
            let mut sum = 0.0;
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::InvalidMdp(format!("duplicate successor in row {i}")));
                }
            }
            for &(j, p) in row.iter() {
                if j >= num_states {
                    return Err(Error::InvalidMdp(format!(
                        "successor {j} out of range in row {i}"
                    )));
                }
                if !(p >= 0.0) {
                    return Err(Error::InvalidMdp(format!(
                        "negative or NaN probability in row {i}"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
                return Err(Error::InvalidMdp(format!(
                    "transition row {i} sums to {sum}"
                )));
            }
        }
        for (i, r) in rewards.iter().enumerate() {
            match *r {
                RewardModel::Deterministic(v) if !v.is_finite() => {
                    return Err(Error::NonFinite(format!("reward mean of pair {i}")))
                }
                RewardModel::Gaussian {
                    mean,
                    noise_variance,
                } => {
                    if !mean.is_finite() {
                        return Err(Error::NonFinite(format!("reward mean of pair {i}")));
                    }
                    if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
                        return Err(Error::InvalidMdp(format!(
                            "noise variance of pair {i} must be finite and nonnegative"
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            horizon,
            initial_dist,
            transitions,
            rewards,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.transitions[s * self.num_actions + a]
    }

    pub fn transition_prob(&self, s: usize, a: usize, next: usize) -> f64 {
        let row = self.transition_row(s, a);
        row.binary_search_by_key(&next, |&(j, _)| j)
            .map(|i| row[i].1)
            .unwrap_or(0.0)
    }

    pub fn reward(&self, s: usize, a: usize) -> &RewardModel {
        &self.rewards[s * self.num_actions + a]
    }

    pub fn rewards(&self) -> &[RewardModel] {
        &self.rewards
    }

    pub fn mean_reward(&self, s: usize, a: usize) -> f64 {
        self.reward(s, a).mean()
    }

    /// Copy of this MDP with the reward table replaced.
    pub fn with_rewards(&self, rewards: Vec<RewardModel>) -> Result<Self> {
        Self::from_sparse(
            self.num_states,
            self.num_actions,
            self.horizon,
            self.initial_dist.clone(),
            self.transitions.clone(),
            rewards,
        )
    }

    /// `sum_s rho(s) * values(0, s)`.
    pub fn initial_value(&self, values: &ValueTable) -> f64 {
        self.initial_dist
            .iter()
            .zip(values.stage(0))
            .map(|(p, v)| p * v)
            .sum()
    }

    fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.horizon() != self.horizon
            || policy.num_states() != self.num_states
            || policy.num_actions() != self.num_actions
        {
            return Err(Error::ShapeMismatch(format!(
                "policy is {}x{}x{}, MDP is {}x{}x{}",
                policy.horizon(),
                policy.num_states(),
                policy.num_actions(),
                self.horizon,
                self.num_states,
                self.num_actions
            )));
        }
        Ok(())
    }
}

fn check_simplex(p: &[f64], len: usize, what: &str) -> Result<()> {
    if p.len() != len {
        return Err(Error::InvalidMdp(format!(
            "{what} has length {}, expected {len}",
            p.len()
        )));
    }
    if p.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidMdp(format!("{what} has negative entries")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(Error::InvalidMdp(format!("{what} sums to {sum}")));
    }
    Ok(())
}

/// The quantities a backward-induction planner needs from a model.
///
/// Implemented by [`TabularMdp`] and by the posterior-mean views in
/// [`crate::posterior`], which avoid materialising dense mean transition
/// rows.
pub trait PlanningModel {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn horizon(&self) -> usize;
    fn mean_reward(&self, s: usize, a: usize) -> f64;
    /// `sum_{s'} P(s'|s,a) next[s']`; `next_sum` is `sum_{s'} next[s']`.
    fn expected_next(&self, s: usize, a: usize, next: &[f64], next_sum: f64) -> f64;
}

impl PlanningModel for TabularMdp {
    fn num_states(&self) -> usize {
        self.num_states
    }

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn mean_reward(&self, s: usize, a: usize) -> f64 {
        self.reward(s, a).mean()
    }

    fn expected_next(&self, s: usize, a: usize, next: &[f64], _next_sum: f64) -> f64 {
        self.transition_row(s, a)
            .iter()
            .map(|&(j, p)| p * next[j])
            .sum()
    }
}

/// Stage-indexed action values, `H x S x A`.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        Self {
            horizon,
            num_states,
            num_actions,
            values: vec![0.0; horizon * num_states * num_actions],
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, h: usize, s: usize, a: usize) -> f64 {
        self.values[(h * self.num_states + s) * self.num_actions + a]
    }

    pub fn row(&self, h: usize, s: usize) -> &[f64] {
        let start = (h * self.num_states + s) * self.num_actions;
        &self.values[start..start + self.num_actions]
    }

    pub fn row_mut(&mut self, h: usize, s: usize) -> &mut [f64] {
        let start = (h * self.num_states + s) * self.num_actions;
        &mut self.values[start..start + self.num_actions]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Stage-indexed state values, `(H + 1) x S`; stage `H` is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    horizon: usize,
    num_states: usize,
    values: Vec<f64>,
}

impl ValueTable {
    pub fn zeros(horizon: usize, num_states: usize) -> Self {
        Self {
            horizon,
            num_states,
            values: vec![0.0; (horizon + 1) * num_states],
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn get(&self, h: usize, s: usize) -> f64 {
        self.values[h * self.num_states + s]
    }

    pub fn stage(&self, h: usize) -> &[f64] {
        &self.values[h * self.num_states..(h + 1) * self.num_states]
    }

    pub fn stage_mut(&mut self, h: usize) -> &mut [f64] {
        &mut self.values[h * self.num_states..(h + 1) * self.num_states]
    }

    pub fn max_abs_diff(&self, other: &ValueTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Stage-indexed stochastic policy, `H x S x A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    /// Validates that every `(h, s)` row lies on the probability simplex.
    pub fn new(
        horizon: usize,
        num_states: usize,
        num_actions: usize,
        probs: Vec<f64>,
    ) -> Result<Self> {
        if probs.len() != horizon * num_states * num_actions {
            return Err(Error::ShapeMismatch(format!(
                "policy has {} entries, expected {}",
                probs.len(),
                horizon * num_states * num_actions
            )));
        }
        let policy = Self {
            horizon,
            num_states,
            num_actions,
            probs,
        };
        for h in 0..horizon {
            for s in 0..num_states {
                let row = policy.row(h, s);
                let sum: f64 = row.iter().sum();
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "policy row ({h}, {s}) is not a probability vector"
                    )));
                }
            }
        }
        Ok(policy)
    }

    pub fn uniform(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        Self {
            horizon,
            num_states,
            num_actions,
            probs: vec![1.0 / num_actions as f64; horizon * num_states * num_actions],
        }
    }

    /// Deterministic policy from one action per `(h, s)`, indexed `h * S + s`.
    pub fn deterministic(
        horizon: usize,
        num_states: usize,
        num_actions: usize,
        actions: &[usize],
    ) -> Result<Self> {
        if actions.len() != horizon * num_states {
            return Err(Error::ShapeMismatch(format!(
                "expected {} actions, got {}",
                horizon * num_states,
                actions.len()
            )));
        }
        let mut probs = vec![0.0; horizon * num_states * num_actions];
        for (i, &a) in actions.iter().enumerate() {
            if a >= num_actions {
                return Err(Error::InvalidParameter(format!("action {a} out of range")));
            }
            probs[i * num_actions + a] = 1.0;
        }
        Ok(Self {
            horizon,
            num_states,
            num_actions,
            probs,
        })
    }

    /// The same action distribution at every `(h, s)`.
    pub fn stationary(horizon: usize, num_states: usize, row: &[f64]) -> Result<Self> {
        let probs = row
            .iter()
            .copied()
            .cycle()
            .take(horizon * num_states * row.len())
            .collect();
        Self::new(horizon, num_states, row.len(), probs)
    }

    pub(crate) fn from_raw(
        horizon: usize,
        num_states: usize,
        num_actions: usize,
        probs: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(probs.len(), horizon * num_states * num_actions);
        Self {
            horizon,
            num_states,
            num_actions,
            probs,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn prob(&self, h: usize, s: usize, a: usize) -> f64 {
        self.probs[(h * self.num_states + s) * self.num_actions + a]
    }

    pub fn row(&self, h: usize, s: usize) -> &[f64] {
        let start = (h * self.num_states + s) * self.num_actions;
        &self.probs[start..start + self.num_actions]
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, h: usize, s: usize, rng: &mut R) -> usize {
        sample_index(self.row(h, s), rng)
    }

    /// Largest absolute per-entry difference.
    pub fn max_abs_diff(&self, other: &Policy) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Draws an index from a probability vector by inversion.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// One step of experience: `(s_h, a_h, r_{h+1}, s_{h+1})` in episode `episode`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub episode: usize,
    pub step: usize,
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
    pub reward: f64,
}

/// Backward induction with a pluggable model.
pub fn backward_induction<M: PlanningModel + ?Sized>(model: &M) -> (QTable, ValueTable) {
    let (ns, na, horizon) = (model.num_states(), model.num_actions(), model.horizon());
    let mut q = QTable::zeros(horizon, ns, na);
    let mut v = ValueTable::zeros(horizon, ns);
    for h in (0..horizon).rev() {
        let next = v.stage(h + 1).to_vec();
        let next_sum: f64 = next.iter().sum();
        for s in 0..ns {
            let row = q.row_mut(h, s);
            for (a, qa) in row.iter_mut().enumerate() {
                *qa = model.mean_reward(s, a) + model.expected_next(s, a, &next, next_sum);
            }
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            v.stage_mut(h)[s] = best;
        }
    }
    (q, v)
}

/// Optimal action values and state values of `mdp` by backward induction.
pub fn optimal_values(mdp: &TabularMdp) -> Result<(QTable, ValueTable)> {
    if let Some(i) = mdp.rewards.iter().position(|r| !r.mean().is_finite()) {
        return Err(Error::NonFinite(format!("reward mean of pair {i}")));
    }
    Ok(backward_induction(mdp))
}

/// Exact value of a (possibly stochastic) policy.
pub fn evaluate_policy(mdp: &TabularMdp, policy: &Policy) -> Result<ValueTable> {
    mdp.check_policy(policy)?;
    let (ns, na, horizon) = (mdp.num_states, mdp.num_actions, mdp.horizon);
    let mut v = ValueTable::zeros(horizon, ns);
    for h in (0..horizon).rev() {
        let next = v.stage(h + 1).to_vec();
        for s in 0..ns {
            let mut total = 0.0;
            for a in 0..na {
                let p = policy.prob(h, s, a);
                if p == 0.0 {
                    continue;
                }
                let q = mdp.mean_reward(s, a)
                    + mdp
                        .transition_row(s, a)
                        .iter()
                        .map(|&(j, pj)| pj * next[j])
                        .sum::<f64>();
                total += p * q;
            }
            v.stage_mut(h)[s] = total;
        }
    }
    Ok(v)
}

/// Index of the lowest action within `tie_tolerance` of the row maximum.
pub fn greedy_action(row: &[f64], tie_tolerance: f64) -> usize {
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    row.iter()
        .position(|&q| q >= best - tie_tolerance)
        .unwrap_or(0)
}

/// Deterministic greedy policy with lowest-index tie-breaking.
pub fn greedy_policy(q: &QTable, tie_tolerance: f64) -> Policy {
    let (horizon, ns, na) = (q.horizon, q.num_states, q.num_actions);
    let mut probs = vec![0.0; horizon * ns * na];
    for h in 0..horizon {
        for s in 0..ns {
            let a = greedy_action(q.row(h, s), tie_tolerance);
            probs[(h * ns + s) * na + a] = 1.0;
        }
    }
    Policy::from_raw(horizon, ns, na, probs)
}

/// Simulates one episode of `policy` in `mdp`. Returns exactly `H` transitions.
pub fn sample_episode<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    policy: &Policy,
    episode: usize,
    rng: &mut R,
) -> Vec<Transition> {
    let mut state = sample_index(&mdp.initial_dist, rng);
    let mut out = Vec::with_capacity(mdp.horizon);
    for step in 0..mdp.horizon {
        let action = policy.sample_action(step, state, rng);
        let reward = mdp.reward(state, action).sample(rng);
        let row = mdp.transition_row(state, action);
        let next_state = if row.len() == 1 {
            row[0].0
        } else {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = row[row.len() - 1].0;
            for &(j, p) in row {
                acc += p;
                if u < acc {
                    chosen = j;
                    break;
                }
            }
            chosen
        };
        out.push(Transition {
            episode,
            step,
            state,
            action,
            next_state,
            reward,
        });
        state = next_state;
    }
    out
}

/// Expected shortfall of `policy` against the optimum in one episode:
/// `sum_s rho(s) (V*_0(s) - V^pi_0(s))`.
pub fn per_episode_regret(mdp: &TabularMdp, policy: &Policy) -> Result<f64> {
    let (_, optimal) = optimal_values(mdp)?;
    let value = evaluate_policy(mdp, policy)?;
    Ok(mdp.initial_value(&optimal) - mdp.initial_value(&value))
}
