//! Conjugate beliefs over an unknown MDP.
//!
//! [`BeliefState`] keeps an independent Gaussian posterior over each mean
//! reward and a Dirichlet posterior over each transition row.
//! [`TwoPointBelief`] is the exact posterior for a family of two
//! deterministic MDPs that differ in a single reward, as in the one-unknown-
//! action bandit.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::mdp::{PlanningModel, RewardModel, TabularMdp, Transition};
use crate::numeric::{log_mix_exp, log_sum_exp};
use crate::{Error, Result};

/// Something with a cumulant generating function `G(beta) = log E exp(beta X)`.
pub trait Cgf {
    fn cgf(&self, beta: f64) -> f64;
}

/// Normal posterior over a mean reward with known observation noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianRewardPosterior {
    pub mean: f64,
    pub variance: f64,
    pub obs_noise_variance: f64,
    pub count: u64,
}

impl GaussianRewardPosterior {
    pub fn new(prior_mean: f64, prior_variance: f64, obs_noise_variance: f64) -> Result<Self> {
        if !(prior_variance > 0.0) || !(obs_noise_variance > 0.0) || !prior_mean.is_finite() {
            return Err(Error::InvalidParameter(
                "Gaussian prior needs a finite mean and positive variances".into(),
            ));
        }
        Ok(Self {
            mean: prior_mean,
            variance: prior_variance,
            obs_noise_variance,
            count: 0,
        })
    }

    pub fn observe(&mut self, reward: f64) {
        self.observe_batch(1, reward);
    }

    /// Conjugate update with `n` observations whose sum is `sum`.
    pub fn observe_batch(&mut self, n: u64, sum: f64) {
        let precision = 1.0 / self.variance + n as f64 / self.obs_noise_variance;
        self.mean = (self.mean / self.variance + sum / self.obs_noise_variance) / precision;
        self.variance = 1.0 / precision;
        self.count += n;
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Normal::new(self.mean, self.variance.sqrt())
            .expect("positive variance")
            .sample(rng)
    }
}

impl Cgf for GaussianRewardPosterior {
    fn cgf(&self, beta: f64) -> f64 {
        self.mean * beta + 0.5 * self.variance * beta * beta
    }
}

/// Dirichlet posterior over one transition row.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletTransitionPosterior {
    concentration: Vec<f64>,
    /// Shared prior concentration; entries that differ from it are tracked
    /// in `distinct` so posterior-mean expectations stay sparse.
    base: f64,
    distinct: Vec<usize>,
    total: f64,
}

impl DirichletTransitionPosterior {
    pub fn symmetric(num_states: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || num_states == 0 {
            return Err(Error::InvalidParameter(
                "Dirichlet concentration must be positive".into(),
            ));
        }
        Ok(Self {
            concentration: vec![alpha; num_states],
            base: alpha,
            distinct: Vec::new(),
            total: alpha * num_states as f64,
        })
    }

    pub fn new(concentration: Vec<f64>) -> Result<Self> {
        if concentration.is_empty() || concentration.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::InvalidParameter(
                "Dirichlet concentration must be positive".into(),
            ));
        }
        let base = concentration.iter().copied().fold(f64::INFINITY, f64::min);
        let distinct = (0..concentration.len())
            .filter(|&i| concentration[i] != base)
            .collect();
        let total = concentration.iter().sum();
        Ok(Self {
            concentration,
            base,
            distinct,
            total,
        })
    }

    pub fn concentration(&self) -> &[f64] {
        &self.concentration
    }

    pub fn observe(&mut self, next_state: usize) {
        if self.concentration[next_state] == self.base {
            let pos = self.distinct.partition_point(|&i| i < next_state);
            self.distinct.insert(pos, next_state);
        }
        self.concentration[next_state] += 1.0;
        self.total += 1.0;
    }

    pub fn mean(&self) -> Vec<f64> {
        self.concentration.iter().map(|c| c / self.total).collect()
    }

    /// Posterior mean split into explicit entries plus a uniform remainder.
    fn mean_parts(&self) -> (Vec<(usize, f64)>, f64) {
        let explicit = self
            .distinct
            .iter()
            .map(|&i| (i, (self.concentration[i] - self.base) / self.total))
            .collect();
        let uniform = self.base * self.concentration.len() as f64 / self.total;
        (explicit, uniform)
    }

    /// Draws a row; gamma variates are formed in log space so tiny
    /// concentrations cannot underflow the whole row.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let base_boosted = Gamma::new(self.base + 1.0, 1.0).expect("positive shape");
        let mut logs = Vec::with_capacity(self.concentration.len());
        for &c in &self.concentration {
            let lg = if c == self.base {
                log_gamma_sample(&base_boosted, c, rng)
            } else {
                let boosted = Gamma::new(c + 1.0, 1.0).expect("positive shape");
                log_gamma_sample(&boosted, c, rng)
            };
            logs.push(lg);
        }
        let norm = log_sum_exp(&logs);
        let mut row: Vec<f64> = logs.iter().map(|l| (l - norm).exp()).collect();
        let sum: f64 = row.iter().sum();
        for p in &mut row {
            *p /= sum;
        }
        row
    }
}

/// `log X` for `X ~ Gamma(shape, 1)` via `X = Y * U^(1/shape)`,
/// `Y ~ Gamma(shape + 1, 1)`.
fn log_gamma_sample<R: Rng + ?Sized>(boosted: &Gamma<f64>, shape: f64, rng: &mut R) -> f64 {
    let y: f64 = boosted.sample(rng);
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    y.ln() + u.ln() / shape
}

/// Posterior over a single bandit arm's mean reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArmBelief {
    Deterministic(f64),
    Gaussian {
        mean: f64,
        variance: f64,
    },
    TwoPoint {
        p_plus: f64,
        reward_plus: f64,
        reward_minus: f64,
    },
}

impl ArmBelief {
    pub fn mean(&self) -> f64 {
        match *self {
            ArmBelief::Deterministic(m) => m,
            ArmBelief::Gaussian { mean, .. } => mean,
            ArmBelief::TwoPoint {
                p_plus,
                reward_plus,
                reward_minus,
            } => p_plus * reward_plus + (1.0 - p_plus) * reward_minus,
        }
    }
}

impl Cgf for ArmBelief {
    fn cgf(&self, beta: f64) -> f64 {
        reward_cgf(self, beta)
    }
}

/// Cumulant generating function of an arm's mean reward at `beta`.
pub fn reward_cgf(arm: &ArmBelief, beta: f64) -> f64 {
    match *arm {
        ArmBelief::Deterministic(m) => m * beta,
        ArmBelief::Gaussian { mean, variance } => mean * beta + 0.5 * variance * beta * beta,
        ArmBelief::TwoPoint {
            p_plus,
            reward_plus,
            reward_minus,
        } => log_mix_exp(p_plus, beta * reward_plus, beta * reward_minus),
    }
}

/// Posterior-mean model with sparse transition rows plus a uniform
/// remainder: `P(s'|s,a) = explicit(s'|s,a) + uniform_weight(s,a) / S`.
#[derive(Debug, Clone)]
pub struct MeanModel {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    rewards: Vec<f64>,
    explicit: Vec<Vec<(usize, f64)>>,
    uniform_weight: Vec<f64>,
}

impl PlanningModel for MeanModel {
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
        self.rewards[s * self.num_actions + a]
    }

    fn expected_next(&self, s: usize, a: usize, next: &[f64], next_sum: f64) -> f64 {
        let i = s * self.num_actions + a;
        let explicit: f64 = self.explicit[i].iter().map(|&(j, p)| p * next[j]).sum();
        explicit + self.uniform_weight[i] * next_sum / self.num_states as f64
    }
}

/// Operations every belief over an MDP supports.
pub trait Posterior: Clone + Send + Sync {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn horizon(&self) -> usize;
    fn initial_dist(&self) -> &[f64];
    /// Conjugate update with one observed transition.
    fn update(&mut self, t: &Transition);
    /// Draws a complete MDP from the posterior.
    fn sample_mdp<R: Rng + ?Sized>(&self, rng: &mut R) -> TabularMdp;
    /// The posterior-mean MDP, materialised densely.
    fn mean_mdp(&self) -> TabularMdp;
    /// Same expectations as [`Posterior::mean_mdp`], in sparse form for planning.
    fn mean_model(&self) -> MeanModel;
    /// Number of updates seen for `(s, a)`.
    fn visit_count(&self, s: usize, a: usize) -> u64;
    /// Per-arm beliefs; only defined for single-state, single-step problems.
    fn arm_beliefs(&self) -> Result<Vec<ArmBelief>>;
    /// Incremented whenever the posterior over rewards or transitions moves.
    fn revision(&self) -> u64;
    fn as_two_point(&self) -> Option<&TwoPointBelief> {
        None
    }
}

/// Prior hyperparameters for [`BeliefState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig {
    pub reward_mean: f64,
    pub reward_variance: f64,
    pub obs_noise_variance: f64,
    /// Per-successor Dirichlet concentration; `None` means `1 / S`.
    pub transition_concentration: Option<f64>,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            reward_mean: 0.0,
            reward_variance: 1.0,
            obs_noise_variance: 1.0,
            transition_concentration: None,
        }
    }
}

/// Independent Gaussian/Dirichlet posteriors for every `(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    initial_dist: Vec<f64>,
    rewards: Vec<GaussianRewardPosterior>,
    transitions: Vec<DirichletTransitionPosterior>,
    episode: usize,
    revision: u64,
}

impl BeliefState {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        initial_dist: Vec<f64>,
        prior: PriorConfig,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 || horizon == 0 {
            return Err(Error::InvalidParameter(
                "belief dimensions must be positive".into(),
            ));
        }
        if initial_dist.len() != num_states {
            return Err(Error::ShapeMismatch("initial distribution length".into()));
        }
        let pairs = num_states * num_actions;
        let reward = GaussianRewardPosterior::new(
            prior.reward_mean,
            prior.reward_variance,
            prior.obs_noise_variance,
        )?;
        let alpha = prior
            .transition_concentration
            .unwrap_or(1.0 / num_states as f64);
        let row = DirichletTransitionPosterior::symmetric(num_states, alpha)?;
        Ok(Self {
            num_states,
            num_actions,
            horizon,
            initial_dist,
            rewards: vec![reward; pairs],
            transitions: vec![row; pairs],
            episode: 0,
            revision: 0,
        })
    }

    /// Default prior (`N(0, 1)` rewards, unit noise, `Dirichlet(1/S)`) with
    /// the structural data of `mdp`.
    pub fn for_environment(mdp: &TabularMdp) -> Self {
        Self::new(
            mdp.num_states(),
            mdp.num_actions(),
            mdp.horizon(),
            mdp.initial_dist().to_vec(),
            PriorConfig::default(),
        )
        .expect("valid MDP gives valid belief")
    }

    pub fn reward_posterior(&self, s: usize, a: usize) -> &GaussianRewardPosterior {
        &self.rewards[s * self.num_actions + a]
    }

    pub fn transition_posterior(&self, s: usize, a: usize) -> &DirichletTransitionPosterior {
        &self.transitions[s * self.num_actions + a]
    }

    /// Latest episode index seen in an update.
    pub fn episode(&self) -> usize {
        self.episode
    }
}

impl Posterior for BeliefState {
    fn num_states(&self) -> usize {
        self.num_states
    }

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    fn update(&mut self, t: &Transition) {
        let i = t.state * self.num_actions + t.action;
        self.rewards[i].observe(t.reward);
        self.transitions[i].observe(t.next_state);
        self.episode = self.episode.max(t.episode);
        self.revision += 1;
    }

    fn sample_mdp<R: Rng + ?Sized>(&self, rng: &mut R) -> TabularMdp {
        let rewards = self
            .rewards
            .iter()
            .map(|r| RewardModel::Gaussian {
                mean: r.sample(rng),
                noise_variance: r.obs_noise_variance,
            })
            .collect();
        let rows = self.transitions.iter().map(|d| d.sample(rng)).collect();
        TabularMdp::new(
            self.num_states,
            self.num_actions,
            self.horizon,
            self.initial_dist.clone(),
            rows,
            rewards,
        )
        .expect("posterior samples are valid MDPs")
    }

    fn mean_mdp(&self) -> TabularMdp {
        let rewards = self
            .rewards
            .iter()
            .map(|r| RewardModel::Gaussian {
                mean: r.mean,
                noise_variance: r.obs_noise_variance,
            })
            .collect();
        let rows = self.transitions.iter().map(|d| d.mean()).collect();
        TabularMdp::new(
            self.num_states,
            self.num_actions,
            self.horizon,
            self.initial_dist.clone(),
            rows,
            rewards,
        )
        .expect("posterior means are valid MDPs")
    }

    fn mean_model(&self) -> MeanModel {
        let (explicit, uniform_weight) = self.transitions.iter().map(|d| d.mean_parts()).unzip();
        MeanModel {
            num_states: self.num_states,
            num_actions: self.num_actions,
            horizon: self.horizon,
            rewards: self.rewards.iter().map(|r| r.mean).collect(),
            explicit,
            uniform_weight,
        }
    }

    fn visit_count(&self, s: usize, a: usize) -> u64 {
        self.rewards[s * self.num_actions + a].count
    }

    fn arm_beliefs(&self) -> Result<Vec<ArmBelief>> {
        if self.num_states != 1 || self.horizon != 1 {
            return Err(Error::UnsupportedBelief(
                "arm beliefs need a single state and horizon 1".into(),
            ));
        }
        Ok(self
            .rewards
            .iter()
            .map(|r| ArmBelief::Gaussian {
                mean: r.mean,
                variance: r.variance,
            })
            .collect())
    }

    fn revision(&self) -> u64 {
        self.revision
    }
}

/// Exact posterior over `{M+, M-}`: two deterministic-reward MDPs with the
/// same transitions, differing only in the reward of one `(s, a)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointBelief {
    p_plus: f64,
    plus: TabularMdp,
    minus: TabularMdp,
    informative: (usize, usize),
    counts: Vec<u64>,
    revision: u64,
}

impl TwoPointBelief {
    pub fn new(plus: TabularMdp, minus: TabularMdp, p_plus: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_plus) {
            return Err(Error::InvalidParameter(format!(
                "p_plus = {p_plus} is not a probability"
            )));
        }
        if plus.num_states() != minus.num_states()
            || plus.num_actions() != minus.num_actions()
            || plus.horizon() != minus.horizon()
            || plus.initial_dist() != minus.initial_dist()
        {
            return Err(Error::UnsupportedBelief(
                "candidate MDPs have different structure".into(),
            ));
        }
        let na = plus.num_actions();
        let mut informative = None;
        for s in 0..plus.num_states() {
            for a in 0..na {
                if plus.transition_row(s, a) != minus.transition_row(s, a) {
                    return Err(Error::UnsupportedBelief(
                        "candidate MDPs have different transitions".into(),
                    ));
                }
                let (rp, rm) = (plus.reward(s, a), minus.reward(s, a));
                if !matches!(rp, RewardModel::Deterministic(_))
                    || !matches!(rm, RewardModel::Deterministic(_))
                {
                    return Err(Error::UnsupportedBelief(
                        "two-point beliefs need deterministic rewards".into(),
                    ));
                }
                if rp != rm {
                    if informative.is_some() {
                        return Err(Error::UnsupportedBelief(
                            "candidate MDPs differ in more than one reward".into(),
                        ));
                    }
                    informative = Some((s, a));
                }
            }
        }
        let informative = informative
            .ok_or_else(|| Error::UnsupportedBelief("candidate MDPs are identical".into()))?;
        let counts = vec![0; plus.num_states() * na];
        Ok(Self {
            p_plus,
            plus,
            minus,
            informative,
            counts,
            revision: 0,
        })
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn plus(&self) -> &TabularMdp {
        &self.plus
    }

    pub fn minus(&self) -> &TabularMdp {
        &self.minus
    }

    /// The `(state, action)` whose reward tells the two MDPs apart.
    pub fn informative_pair(&self) -> (usize, usize) {
        self.informative
    }

    pub fn is_resolved(&self) -> bool {
        self.p_plus == 0.0 || self.p_plus == 1.0
    }

    fn informative_rewards(&self) -> (f64, f64) {
        let (s, a) = self.informative;
        (self.plus.mean_reward(s, a), self.minus.mean_reward(s, a))
    }
}

impl Posterior for TwoPointBelief {
    fn num_states(&self) -> usize {
        self.plus.num_states()
    }

    fn num_actions(&self) -> usize {
        self.plus.num_actions()
    }

    fn horizon(&self) -> usize {
        self.plus.horizon()
    }

    fn initial_dist(&self) -> &[f64] {
        self.plus.initial_dist()
    }

    fn update(&mut self, t: &Transition) {
        let na = self.num_actions();
        self.counts[t.state * na + t.action] += 1;
        if (t.state, t.action) == self.informative && !self.is_resolved() {
            let (rp, rm) = self.informative_rewards();
            self.p_plus = if (t.reward - rp).abs() <= (t.reward - rm).abs() {
                1.0
            } else {
                0.0
            };
            self.revision += 1;
        }
    }

    fn sample_mdp<R: Rng + ?Sized>(&self, rng: &mut R) -> TabularMdp {
        if self.p_plus >= 1.0 || (self.p_plus > 0.0 && rng.random::<f64>() < self.p_plus) {
            self.plus.clone()
        } else {
            self.minus.clone()
        }
    }

    fn mean_mdp(&self) -> TabularMdp {
        let (s, a) = self.informative;
        let mut rewards = self.plus.rewards().to_vec();
        let (rp, rm) = self.informative_rewards();
        rewards[s * self.num_actions() + a] =
            RewardModel::Deterministic(self.p_plus * rp + (1.0 - self.p_plus) * rm);
        self.plus
            .with_rewards(rewards)
            .expect("mixture of valid rewards")
    }

    fn mean_model(&self) -> MeanModel {
        let mean = self.mean_mdp();
        let (ns, na) = (mean.num_states(), mean.num_actions());
        let mut explicit = Vec::with_capacity(ns * na);
        for s in 0..ns {
            for a in 0..na {
                explicit.push(mean.transition_row(s, a).to_vec());
            }
        }
        MeanModel {
            num_states: ns,
            num_actions: na,
            horizon: mean.horizon(),
            rewards: mean.rewards().iter().map(RewardModel::mean).collect(),
            explicit,
            uniform_weight: vec![0.0; ns * na],
        }
    }

    fn visit_count(&self, s: usize, a: usize) -> u64 {
        self.counts[s * self.num_actions() + a]
    }

    fn arm_beliefs(&self) -> Result<Vec<ArmBelief>> {
        if self.num_states() != 1 || self.horizon() != 1 {
            return Err(Error::UnsupportedBelief(
                "arm beliefs need a single state and horizon 1".into(),
            ));
        }
        let (_, informative) = self.informative;
        let (rp, rm) = self.informative_rewards();
        Ok((0..self.num_actions())
            .map(|a| {
                if a != informative {
                    ArmBelief::Deterministic(self.plus.mean_reward(0, a))
                } else if self.p_plus == 1.0 {
                    ArmBelief::Deterministic(rp)
                } else if self.p_plus == 0.0 {
                    ArmBelief::Deterministic(rm)
                } else {
                    ArmBelief::TwoPoint {
                        p_plus: self.p_plus,
                        reward_plus: rp,
                        reward_minus: rm,
                    }
                }
            })
            .collect())
    }

    fn revision(&self) -> u64 {
        self.revision
    }

    fn as_two_point(&self) -> Option<&TwoPointBelief> {
        Some(self)
    }
}

/// Either kind of belief, for code that picks one at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyBelief {
    Conjugate(BeliefState),
    TwoPoint(TwoPointBelief),
}

macro_rules! dispatch {
    ($self:ident, $b:ident => $e:expr) => {
        match $self {
            AnyBelief::Conjugate($b) => $e,
            AnyBelief::TwoPoint($b) => $e,
        }
    };
}

impl Posterior for AnyBelief {
    fn num_states(&self) -> usize {
        dispatch!(self, b => b.num_states())
    }
    fn num_actions(&self) -> usize {
        dispatch!(self, b => b.num_actions())
    }
    fn horizon(&self) -> usize {
        dispatch!(self, b => b.horizon())
    }
    fn initial_dist(&self) -> &[f64] {
        dispatch!(self, b => b.initial_dist())
    }
    fn update(&mut self, t: &Transition) {
        dispatch!(self, b => b.update(t))
    }
    fn sample_mdp<R: Rng + ?Sized>(&self, rng: &mut R) -> TabularMdp {
        dispatch!(self, b => b.sample_mdp(rng))
    }
    fn mean_mdp(&self) -> TabularMdp {
        dispatch!(self, b => b.mean_mdp())
    }
    fn mean_model(&self) -> MeanModel {
        dispatch!(self, b => b.mean_model())
    }
    fn visit_count(&self, s: usize, a: usize) -> u64 {
        dispatch!(self, b => b.visit_count(s, a))
    }
    fn arm_beliefs(&self) -> Result<Vec<ArmBelief>> {
        dispatch!(self, b => b.arm_beliefs())
    }
    fn revision(&self) -> u64 {
        dispatch!(self, b => b.revision())
    }
    fn as_two_point(&self) -> Option<&TwoPointBelief> {
        match self {
            AnyBelief::TwoPoint(b) => Some(b),
            AnyBelief::Conjugate(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::backward_induction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn transition(s: usize, a: usize, next: usize, r: f64) -> Transition {
        Transition {
            episode: 1,
            step: 0,
            state: s,
            action: a,
            next_state: next,
            reward: r,
        }
    }

    #[test]
    fn gaussian_update_matches_conjugate_formula() {
        let mut p = GaussianRewardPosterior::new(0.0, 1.0, 1.0).unwrap();
        p.observe(1.0);
        assert!((p.mean - 0.5).abs() < 1e-15);
        assert!((p.variance - 0.5).abs() < 1e-15);
        assert_eq!(p.count, 1);
    }

    #[test]
    fn sequential_and_batched_updates_agree() {
        let mut a = GaussianRewardPosterior::new(0.3, 2.0, 0.5).unwrap();
        let mut b = a;
        a.observe(1.5);
        a.observe(1.5);
        b.observe_batch(2, 3.0);
        assert!((a.mean - b.mean).abs() < 1e-14);
        assert!((a.variance - b.variance).abs() < 1e-14);
        assert_eq!(a.count, b.count);
    }

    #[test]
    fn dirichlet_observe_and_mean() {
        let mut d = DirichletTransitionPosterior::symmetric(3, 1.0 / 3.0).unwrap();
        d.observe(2);
        let c = d.concentration();
        assert!((c[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((c[2] - 4.0 / 3.0).abs() < 1e-15);
        let m = d.mean();
        let expected = [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0];
        for (x, y) in m.iter().zip(expected) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn tiny_concentration_samples_stay_on_simplex() {
        let d = DirichletTransitionPosterior::symmetric(200, 1.0 / 200.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let row = d.sample(&mut rng);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn gaussian_cgf_examples() {
        let arm = ArmBelief::Gaussian {
            mean: 0.0,
            variance: 1.0,
        };
        assert_eq!(reward_cgf(&arm, 2.0), 2.0);
        let two = ArmBelief::TwoPoint {
            p_plus: 0.5,
            reward_plus: 2.0,
            reward_minus: -2.0,
        };
        assert!(reward_cgf(&two, 0.0).abs() < 1e-15);
        assert!((reward_cgf(&ArmBelief::Deterministic(1.5), 2.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_cgf_survives_large_beta() {
        let two = ArmBelief::TwoPoint {
            p_plus: 0.5,
            reward_plus: 2.0,
            reward_minus: -2.0,
        };
        let g = reward_cgf(&two, 1000.0);
        assert!((g - (2000.0 - 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn mean_model_agrees_with_dense_mean_mdp() {
        let mut b = BeliefState::new(3, 2, 3, vec![1.0, 0.0, 0.0], PriorConfig::default()).unwrap();
        b.update(&transition(0, 1, 2, 0.4));
        b.update(&transition(2, 0, 1, -0.3));
        b.update(&transition(0, 1, 2, 0.1));
        let (q_dense, v_dense) = backward_induction(&b.mean_mdp());
        let (q_sparse, v_sparse) = backward_induction(&b.mean_model());
        assert!(v_dense.max_abs_diff(&v_sparse) < 1e-14);
        for h in 0..3 {
            for s in 0..3 {
                for a in 0..2 {
                    assert!((q_dense.get(h, s, a) - q_sparse.get(h, s, a)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn fresh_prior_mean_rewards_are_zero() {
        let b = BeliefState::new(2, 2, 1, vec![0.5, 0.5], PriorConfig::default()).unwrap();
        let m = b.mean_mdp();
        assert!(m.rewards().iter().all(|r| r.mean() == 0.0));
    }

    #[test]
    fn counts_track_updates() {
        let mut b = BeliefState::new(2, 2, 1, vec![0.5, 0.5], PriorConfig::default()).unwrap();
        b.update(&transition(1, 0, 0, 0.0));
        b.update(&transition(1, 0, 1, 0.0));
        assert_eq!(b.visit_count(1, 0), 2);
        assert_eq!(b.visit_count(0, 0), 0);
        assert_eq!(b.revision(), 2);
    }
}
