//! Decision rules: Thompson sampling, soft Q-learning, K-learning (tabular
//! and analytic bandit forms) and the Bayes-optimal rule for the
//! one-unknown-action bandit.

use std::fmt;

use rand::Rng;

use crate::mdp::{
    backward_induction, greedy_action, greedy_policy, optimal_values, PlanningModel, Policy,
    QTable, TabularMdp, ValueTable, TIE_TOLERANCE,
};
use crate::numeric::{golden_section_min, log_sum_exp, softmax_into};
use crate::posterior::{Cgf, Posterior, TwoPointBelief};
use crate::{Error, Result};

/// Inverse temperature of soft Q-learning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftQParams {
    pub beta: f64,
}

impl SoftQParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "soft-Q beta must be positive, got {beta}"
            )));
        }
        Ok(Self { beta })
    }
}

/// K-learning hyperparameters. The inverse temperature in episode `l` is
/// `beta * sqrt(l)` and the reward bonus is `sigma^2 beta_l / (2 max(n, n0))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KLearningParams {
    pub beta: f64,
    pub sigma: f64,
    pub pseudo_count: f64,
}

impl Default for KLearningParams {
    fn default() -> Self {
        Self {
            beta: 1.0,
            sigma: 1.0,
            pseudo_count: 1.0,
        }
    }
}

impl KLearningParams {
    pub fn new(beta: f64, sigma: f64, pseudo_count: f64) -> Result<Self> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if !ok(beta) || !ok(sigma) || !ok(pseudo_count) {
            return Err(Error::InvalidParameter(
                "K-learning beta, sigma and pseudo-count must be positive".into(),
            ));
        }
        Ok(Self {
            beta,
            sigma,
            pseudo_count,
        })
    }

    pub fn beta_at(&self, episode: usize) -> f64 {
        self.beta * (episode as f64).sqrt()
    }

    pub fn bonus(&self, beta_l: f64, count: u64) -> f64 {
        self.sigma * self.sigma * beta_l / (2.0 * (count as f64).max(self.pseudo_count))
    }
}

/// Soft Bellman recursion: `Q = r + bonus + E V'`,
/// `V = beta^-1 log sum_a exp(beta Q)`.
pub fn soft_bellman<M, F>(model: &M, beta: f64, bonus: F) -> (QTable, ValueTable)
where
    M: PlanningModel + ?Sized,
    F: Fn(usize, usize) -> f64,
{
    let (ns, na, horizon) = (model.num_states(), model.num_actions(), model.horizon());
    let mut q = QTable::zeros(horizon, ns, na);
    let mut v = ValueTable::zeros(horizon, ns);
    let mut scaled = vec![0.0; na];
    for h in (0..horizon).rev() {
        let next = v.stage(h + 1).to_vec();
        let next_sum: f64 = next.iter().sum();
        for s in 0..ns {
            let row = q.row_mut(h, s);
            for (a, qa) in row.iter_mut().enumerate() {
                *qa = model.mean_reward(s, a)
                    + bonus(s, a)
                    + model.expected_next(s, a, &next, next_sum);
                scaled[a] = beta * *qa;
            }
            v.stage_mut(h)[s] = log_sum_exp(&scaled) / beta;
        }
    }
    (q, v)
}

/// `pi(s, a) ∝ exp(beta Q(s, a))` at every stage.
pub fn boltzmann_policy(q: &QTable, beta: f64) -> Policy {
    let (horizon, ns, na) = (q.horizon(), q.num_states(), q.num_actions());
    let mut probs = vec![0.0; horizon * ns * na];
    for h in 0..horizon {
        for s in 0..ns {
            let start = (h * ns + s) * na;
            softmax_into(q.row(h, s), beta, &mut probs[start..start + na]);
        }
    }
    Policy::new(horizon, ns, na, probs).expect("softmax rows are on the simplex")
}

/// Sample one MDP from the posterior and act greedily on it.
pub fn thompson_policy<B: Posterior, R: Rng + ?Sized>(belief: &B, rng: &mut R) -> Policy {
    let sampled = belief.sample_mdp(rng);
    let (q, _) = backward_induction(&sampled);
    greedy_policy(&q, TIE_TOLERANCE)
}

/// Soft Q-values on the posterior-mean model.
pub fn soft_q_values<B: Posterior>(belief: &B, params: &SoftQParams) -> (QTable, ValueTable) {
    soft_bellman(&belief.mean_model(), params.beta, |_, _| 0.0)
}

/// Boltzmann policy over the soft Q-values of the posterior-mean model.
pub fn soft_q_policy<B: Posterior>(belief: &B, params: &SoftQParams) -> Policy {
    let (q, _) = soft_q_values(belief, params);
    boltzmann_policy(&q, params.beta)
}

/// K-values and soft values for episode `episode` (1-based).
pub fn k_values<B: Posterior>(
    belief: &B,
    episode: usize,
    params: &KLearningParams,
) -> Result<(QTable, ValueTable)> {
    if episode == 0 {
        return Err(Error::InvalidParameter(
            "K-learning episodes are numbered from 1".into(),
        ));
    }
    let beta_l = params.beta_at(episode);
    Ok(soft_bellman(&belief.mean_model(), beta_l, |s, a| {
        params.bonus(beta_l, belief.visit_count(s, a))
    }))
}

/// Boltzmann policy over K-values at inverse temperature `beta * sqrt(episode)`.
pub fn k_policy<B: Posterior>(
    belief: &B,
    episode: usize,
    params: &KLearningParams,
) -> Result<Policy> {
    let (k, _) = k_values(belief, episode, params)?;
    Ok(boltzmann_policy(&k, params.beta_at(episode)))
}

/// Lower end of the inverse-temperature search range.
pub const BETA_SEARCH_MIN: f64 = 1e-4;
/// Upper end of the inverse-temperature search range.
pub const BETA_SEARCH_MAX: f64 = 1e4;
/// Returned when the objective keeps decreasing up to the search limit.
pub const BETA_CAP: f64 = 1e6;
const BETA_LOG_TOLERANCE: f64 = 1e-8;

/// Outcome of [`bandit_optimal_beta`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSearch {
    pub beta: f64,
    /// `f(beta) = beta^-1 log sum_i exp G_i(beta)` at the returned `beta`.
    pub objective: f64,
    /// The minimiser ran into the upper search limit.
    pub unbounded: bool,
}

/// `beta^-1 log sum_i exp G_i(beta)`.
pub fn bandit_beta_objective<C: Cgf>(arms: &[C], beta: f64) -> f64 {
    let g: Vec<f64> = arms.iter().map(|c| c.cgf(beta)).collect();
    log_sum_exp(&g) / beta
}

/// Minimises `beta^-1 log sum_i exp G_i(beta)` over `beta > 0`.
///
/// The objective is convex in `1/beta`, hence unimodal in `log beta`, and is
/// searched by golden section on `[1e-4, 1e4]`. When the minimum sits on the
/// upper limit the minimiser is unbounded and [`BETA_CAP`] is returned.
pub fn bandit_optimal_beta<C: Cgf>(arms: &[C]) -> Result<BetaSearch> {
    if arms.is_empty() {
        return Err(Error::InvalidParameter("no arms".into()));
    }
    let mut bad = None;
    let (lo, hi) = (BETA_SEARCH_MIN.ln(), BETA_SEARCH_MAX.ln());
    let best = golden_section_min(
        |t| {
            let f = bandit_beta_objective(arms, t.exp());
            if f.is_finite() {
                f
            } else {
                bad.get_or_insert(t.exp());
                f64::INFINITY
            }
        },
        lo,
        hi,
        BETA_LOG_TOLERANCE,
    );
    if let Some(beta) = bad {
        return Err(Error::NonFinite(format!(
            "inverse-temperature objective at beta = {beta}"
        )));
    }
    if best.x >= hi - 1e-6 {
        let objective = bandit_beta_objective(arms, BETA_CAP);
        return Ok(BetaSearch {
            beta: BETA_CAP,
            objective,
            unbounded: true,
        });
    }
    Ok(BetaSearch {
        beta: best.x.exp(),
        objective: best.value,
        unbounded: false,
    })
}

/// Analytic K-learning for bandits: `pi_i ∝ exp G_i(beta*)`.
pub fn bandit_k_policy<B: Posterior>(belief: &B) -> Result<Policy> {
    let arms = belief.arm_beliefs()?;
    let search = bandit_optimal_beta(&arms)?;
    let g: Vec<f64> = arms.iter().map(|c| c.cgf(search.beta)).collect();
    let mut row = vec![0.0; g.len()];
    softmax_into(&g, 1.0, &mut row);
    Policy::stationary(1, 1, &row)
}

/// Bayes-optimal rule for a two-point single-step problem with
/// `episodes_remaining` episodes left (including the current one).
///
/// While unresolved it pulls the informative arm iff
/// `p+ * L * (gain in M+) > p- * (loss in M-)`, which is `p+ L > 3 p-` on
/// the one-unknown-action bandit; otherwise it plays the best arm of `M-`.
pub fn bayes_optimal_problem1(
    belief: &TwoPointBelief,
    episodes_remaining: usize,
) -> Result<Policy> {
    if belief.num_states() != 1 || belief.horizon() != 1 {
        return Err(Error::UnsupportedBelief(
            "the Bayes-optimal rule needs a single-state bandit".into(),
        ));
    }
    let na = belief.num_actions();
    let means = |m: &TabularMdp| (0..na).map(|a| m.mean_reward(0, a)).collect::<Vec<_>>();
    let pick = |a: usize| Policy::deterministic(1, 1, na, &[a]);
    if belief.is_resolved() {
        let known = if belief.p_plus() == 1.0 {
            belief.plus()
        } else {
            belief.minus()
        };
        return pick(greedy_action(&means(known), TIE_TOLERANCE));
    }
    let (_, arm) = belief.informative_pair();
    let minus = means(belief.minus());
    let plus = means(belief.plus());
    let safe = greedy_action(&minus, TIE_TOLERANCE);
    let gain = belief.p_plus() * episodes_remaining as f64 * (plus[arm] - plus[safe]);
    let loss = (1.0 - belief.p_plus()) * (minus[safe] - minus[arm]);
    pick(if gain > loss { arm } else { safe })
}

/// Monte-Carlo estimate of `P(O_h(s, a))`, the posterior probability that
/// `a` is the optimal action at `(h, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityEstimate {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
    samples: usize,
}

impl OptimalityEstimate {
    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn prob(&self, h: usize, s: usize, a: usize) -> f64 {
        self.probs[(h * self.num_states + s) * self.num_actions + a]
    }

    pub fn row(&self, h: usize, s: usize) -> &[f64] {
        let start = (h * self.num_states + s) * self.num_actions;
        &self.probs[start..start + self.num_actions]
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
}

/// Repeated posterior sampling, planning and greedy selection.
pub fn estimate_optimality<B: Posterior, R: Rng + ?Sized>(
    belief: &B,
    samples: usize,
    rng: &mut R,
) -> Result<OptimalityEstimate> {
    let (ns, na, horizon) = (belief.num_states(), belief.num_actions(), belief.horizon());
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut counts = vec![0u64; horizon * ns * na];
    for _ in 0..samples {
        let (q, _) = optimal_values(&belief.sample_mdp(rng))?;
        for h in 0..horizon {
            for s in 0..ns {
                let a = greedy_action(q.row(h, s), TIE_TOLERANCE);
                counts[(h * ns + s) * na + a] += 1;
            }
        }
    }
    Ok(OptimalityEstimate {
        horizon,
        num_states: ns,
        num_actions: na,
        probs: counts
            .into_iter()
            .map(|c| c as f64 / samples as f64)
            .collect(),
        samples,
    })
}

/// Per-episode inputs an agent may need besides its belief.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeContext<'a> {
    /// 1-based episode index.
    pub episode: usize,
    pub total_episodes: usize,
    /// The true environment; only the oracle looks at it.
    pub env: &'a TabularMdp,
}

/// An exploration agent, selectable at run time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Agent {
    Thompson,
    SoftQ(SoftQParams),
    KLearning(KLearningParams),
    /// Analytic K-learning for single-step bandits.
    BanditK,
    /// Bayes-optimal rule for two-point bandits.
    BayesOptimal,
    /// Greedy on the posterior-mean model.
    CertaintyEquivalent,
    /// Greedy on the true environment.
    Oracle,
}

impl Agent {
    pub fn name(&self) -> &'static str {
        match self {
            Agent::Thompson => "thompson",
            Agent::SoftQ(_) => "soft-q",
            Agent::KLearning(_) => "k-learning",
            Agent::BanditK => "bandit-k",
            Agent::BayesOptimal => "bayes-optimal",
            Agent::CertaintyEquivalent => "greedy",
            Agent::Oracle => "oracle",
        }
    }

    /// Parses an agent name; `beta` and `sigma` fill in hyperparameters.
    pub fn parse(name: &str, beta: Option<f64>, sigma: Option<f64>) -> Result<Self> {
        Ok(match name {
            "thompson" | "ts" => Agent::Thompson,
            "soft-q" | "softq" => Agent::SoftQ(SoftQParams::new(beta.unwrap_or(1.0))?),
            "k-learning" | "k" => {
                let d = KLearningParams::default();
                Agent::KLearning(KLearningParams::new(
                    beta.unwrap_or(d.beta),
                    sigma.unwrap_or(d.sigma),
                    d.pseudo_count,
                )?)
            }
            "bandit-k" => Agent::BanditK,
            "bayes-optimal" => Agent::BayesOptimal,
            "greedy" | "ce" => Agent::CertaintyEquivalent,
            "oracle" => Agent::Oracle,
            other => return Err(Error::InvalidParameter(format!("unknown agent `{other}`"))),
        })
    }

    /// Inverse temperature reported alongside results, if any.
    pub fn beta(&self) -> Option<f64> {
        match self {
            Agent::SoftQ(p) => Some(p.beta),
            Agent::KLearning(p) => Some(p.beta),
            _ => None,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self {
            Agent::KLearning(p) => Some(p.sigma),
            _ => None,
        }
    }

    /// True when the policy is a deterministic function of the belief
    /// alone, so it can be reused while the belief's revision is unchanged.
    pub fn depends_only_on_belief(&self) -> bool {
        matches!(
            self,
            Agent::SoftQ(_) | Agent::BanditK | Agent::CertaintyEquivalent | Agent::Oracle
        )
    }

    pub fn policy<B: Posterior, R: Rng + ?Sized>(
        &self,
        belief: &B,
        ctx: &EpisodeContext<'_>,
        rng: &mut R,
    ) -> Result<Policy> {
        match self {
            Agent::Thompson => Ok(thompson_policy(belief, rng)),
            Agent::SoftQ(p) => Ok(soft_q_policy(belief, p)),
            Agent::KLearning(p) => k_policy(belief, ctx.episode, p),
            Agent::BanditK => bandit_k_policy(belief),
            Agent::BayesOptimal => {
                let two_point = belief.as_two_point().ok_or_else(|| {
                    Error::UnsupportedBelief("bayes-optimal needs a two-point belief".into())
                })?;
                let remaining = ctx.total_episodes.saturating_sub(ctx.episode) + 1;
                bayes_optimal_problem1(two_point, remaining)
            }
            Agent::CertaintyEquivalent => {
                let (q, _) = backward_induction(&belief.mean_model());
                Ok(greedy_policy(&q, TIE_TOLERANCE))
            }
            Agent::Oracle => {
                let (q, _) = optimal_values(ctx.env)?;
                Ok(greedy_policy(&q, TIE_TOLERANCE))
            }
        }
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::make_problem1_prior;
    use crate::mdp::Transition;
    use crate::posterior::{ArmBelief, BeliefState, PriorConfig};

    fn resolve(belief: &mut TwoPointBelief, reward: f64) {
        use crate::posterior::Posterior as _;
        belief.update(&Transition {
            episode: 1,
            step: 0,
            state: 0,
            action: 1,
            next_state: 0,
            reward,
        });
    }

    #[test]
    fn soft_value_brackets_hard_max() {
        let mut b = BeliefState::new(2, 3, 2, vec![0.5, 0.5], PriorConfig::default()).unwrap();
        b.update(&Transition {
            episode: 1,
            step: 0,
            state: 0,
            action: 2,
            next_state: 1,
            reward: 0.8,
        });
        let beta = 0.7;
        let (q, v) = soft_q_values(&b, &SoftQParams::new(beta).unwrap());
        for h in 0..2 {
            for s in 0..2 {
                let max = q.row(h, s).iter().copied().fold(f64::MIN, f64::max);
                assert!(v.get(h, s) >= max - 1e-12);
                assert!(v.get(h, s) <= max + 3f64.ln() / beta + 1e-12);
            }
        }
    }

    #[test]
    fn equal_q_values_give_uniform_soft_policy() {
        let b = BeliefState::new(1, 4, 1, vec![1.0], PriorConfig::default()).unwrap();
        let pi = soft_q_policy(&b, &SoftQParams::new(3.0).unwrap());
        for &p in pi.row(0, 0) {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn soft_q_rarely_pulls_the_unknown_arm() {
        for (n, expected) in [(10, 5.09e-6), (3, 2.28e-5)] {
            let b = make_problem1_prior(n, 1e-3, 0.5).unwrap();
            let pi = soft_q_policy(&b, &SoftQParams::new(10.0).unwrap());
            // softmax of 10 * (1, 0, 0.999, ...)
            let e = (-10.0f64).exp();
            let z = 1.0 + e + (n - 2) as f64 * (-0.01f64).exp();
            assert!((pi.prob(0, 0, 1) - e / z).abs() < 1e-15);
            assert!((pi.prob(0, 0, 1) - expected).abs() < 0.01e-5, "{n}");
        }
    }

    #[test]
    fn resolved_belief_thompson_plays_unknown_arm() {
        let mut b = make_problem1_prior(5, 1e-3, 0.5).unwrap();
        resolve(&mut b, 2.0);
        let mut rng = rand::rng();
        for _ in 0..20 {
            assert_eq!(thompson_policy(&b, &mut rng).prob(0, 0, 1), 1.0);
        }
    }

    #[test]
    fn unvisited_pairs_get_larger_k_values() {
        let mut b = BeliefState::new(1, 2, 1, vec![1.0], PriorConfig::default()).unwrap();
        // Pull arm 0 with a reward that leaves its posterior mean at zero.
        b.update(&Transition {
            episode: 1,
            step: 0,
            state: 0,
            action: 0,
            next_state: 0,
            reward: 0.0,
        });
        let (k, _) = k_values(&b, 1, &KLearningParams::default()).unwrap();
        // n0 = 1 equalises n = 0 and n = 1, so visit twice.
        b.update(&Transition {
            episode: 1,
            step: 0,
            state: 0,
            action: 0,
            next_state: 0,
            reward: 0.0,
        });
        let (k2, _) = k_values(&b, 1, &KLearningParams::default()).unwrap();
        assert!(k.get(0, 0, 1) >= k.get(0, 0, 0));
        assert!(k2.get(0, 0, 1) > k2.get(0, 0, 0));
    }

    #[test]
    fn k_policy_rejects_episode_zero() {
        let b = BeliefState::new(1, 2, 1, vec![1.0], PriorConfig::default()).unwrap();
        assert!(k_policy(&b, 0, &KLearningParams::default()).is_err());
    }

    #[test]
    fn bandit_k_favours_the_unknown_arm() {
        let b = make_problem1_prior(10, 1e-3, 0.5).unwrap();
        let pi = bandit_k_policy(&b).unwrap();
        let p2 = pi.prob(0, 0, 1);
        assert!((p2 - 0.884).abs() < 1e-3, "{p2}");
        for a in [0, 2, 3, 9] {
            assert!(p2 > pi.prob(0, 0, a), "arm {a}");
        }
    }

    #[test]
    fn deterministic_arms_have_unbounded_beta() {
        let arms = [ArmBelief::Deterministic(1.0), ArmBelief::Deterministic(0.5)];
        let s = bandit_optimal_beta(&arms).unwrap();
        assert!(s.unbounded);
        assert_eq!(s.beta, BETA_CAP);
    }

    #[test]
    fn single_gaussian_arm_minimised_at_lower_limit() {
        let arms = [ArmBelief::Gaussian {
            mean: 0.0,
            variance: 1.0,
        }];
        let s = bandit_optimal_beta(&arms).unwrap();
        assert!(!s.unbounded);
        assert!((s.beta - BETA_SEARCH_MIN).abs() < 1e-9);
        assert!((s.objective - BETA_SEARCH_MIN / 2.0).abs() < 1e-12);
    }

    #[test]
    fn resolved_bandit_k_is_greedy_on_the_good_arm() {
        let mut b = make_problem1_prior(6, 1e-3, 0.5).unwrap();
        resolve(&mut b, 2.0);
        let pi = bandit_k_policy(&b).unwrap();
        assert_eq!(pi.prob(0, 0, 1), 1.0);
    }

    #[test]
    fn identical_deterministic_arms_give_uniform_bandit_k() {
        let b = BeliefState::new(1, 3, 1, vec![1.0], PriorConfig::default()).unwrap();
        // Gaussian arms with identical posteriors: the policy must be uniform.
        let pi = bandit_k_policy(&b).unwrap();
        for &p in pi.row(0, 0) {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bayes_optimal_rule() {
        let uniform = make_problem1_prior(5, 1e-3, 0.5).unwrap();
        assert_eq!(
            bayes_optimal_problem1(&uniform, 100).unwrap().prob(0, 0, 1),
            1.0
        );
        let unlikely = make_problem1_prior(5, 1e-3, 0.001).unwrap();
        assert_eq!(
            bayes_optimal_problem1(&unlikely, 100)
                .unwrap()
                .prob(0, 0, 0),
            1.0
        );
        let mut resolved = uniform.clone();
        resolve(&mut resolved, -2.0);
        assert_eq!(
            bayes_optimal_problem1(&resolved, 100)
                .unwrap()
                .prob(0, 0, 0),
            1.0
        );
        let b = BeliefState::new(2, 2, 1, vec![1.0, 0.0], PriorConfig::default()).unwrap();
        let two_state = TwoPointBelief::new(b.mean_mdp(), b.mean_mdp(), 0.5);
        assert!(two_state.is_err());
    }

    #[test]
    fn agent_names_round_trip() {
        for name in [
            "thompson",
            "soft-q",
            "k-learning",
            "bandit-k",
            "bayes-optimal",
            "greedy",
            "oracle",
        ] {
            assert_eq!(Agent::parse(name, None, None).unwrap().name(), name);
        }
        assert!(Agent::parse("epsilon-greedy", None, None).is_err());
    }
}
