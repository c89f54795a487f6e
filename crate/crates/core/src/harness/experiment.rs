use rand::Rng;
use rayon::prelude::*;

use crate::agents::{Agent, EpisodeContext};
use crate::environments::{
    make_deep_sea, make_problem1, make_problem1_prior, DeepSeaSpec, Problem1Spec, Variant,
};
use crate::harness::output::{CurveRow, SummaryRow};
use crate::harness::seeding::{cell_rng, draw_rng};
use crate::mdp::{
    backward_induction, evaluate_policy, greedy_policy, optimal_values, sample_episode, Policy,
    TabularMdp, TIE_TOLERANCE,
};
use crate::numeric::MeanAccumulator;
use crate::posterior::{AnyBelief, BeliefState, Posterior};
use crate::{Error, Result};

/// Per-episode expected regret of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretCurve {
    pub agent: String,
    pub env: String,
    pub prior_draw: usize,
    pub seed: usize,
    pub per_episode: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// Regret of acting greedily on the prior mean; the scale used by
    /// [`time_to_learn`].
    pub reference_gap: f64,
}

impl RegretCurve {
    pub fn new(agent: &str, env: &str, per_episode: Vec<f64>, reference_gap: f64) -> Self {
        let cumulative = per_episode
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect();
        Self {
            agent: agent.to_string(),
            env: env.to_string(),
            prior_draw: 0,
            seed: 0,
            per_episode,
            cumulative,
            reference_gap,
        }
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

struct CachedPolicy {
    revision: u64,
    policy: Policy,
    regret: f64,
}

/// Shared loop; `stop(episode, regret)` ends the run early when it returns true.
fn drive<B, R, F>(
    agent: &Agent,
    env: &TabularMdp,
    mut belief: B,
    episodes: usize,
    rng: &mut R,
    mut stop: F,
) -> Result<Vec<f64>>
where
    B: Posterior,
    R: Rng + ?Sized,
    F: FnMut(usize, f64) -> bool,
{
    if belief.num_states() != env.num_states()
        || belief.num_actions() != env.num_actions()
        || belief.horizon() != env.horizon()
    {
        return Err(Error::ShapeMismatch(format!(
            "belief is {}x{}x{}, environment is {}x{}x{}",
            belief.num_states(),
            belief.num_actions(),
            belief.horizon(),
            env.num_states(),
            env.num_actions(),
            env.horizon()
        )));
    }
    let (_, optimal) = optimal_values(env)?;
    let optimal_return = env.initial_value(&optimal);
    let mut regrets = Vec::with_capacity(episodes);
    let mut cache: Option<CachedPolicy> = None;
    for episode in 1..=episodes {
        let reuse = agent.depends_only_on_belief()
            && cache
                .as_ref()
                .is_some_and(|c| c.revision == belief.revision());
        if !reuse {
            let ctx = EpisodeContext {
                episode,
                total_episodes: episodes,
                env,
            };
            let policy = agent.policy(&belief, &ctx, rng)?;
            let value = evaluate_policy(env, &policy)?;
            cache = Some(CachedPolicy {
                revision: belief.revision(),
                regret: optimal_return - env.initial_value(&value),
                policy,
            });
        }
        let cached = cache.as_ref().expect("policy computed above");
        regrets.push(cached.regret);
        if stop(episode, cached.regret) {
            break;
        }
        for t in sample_episode(env, &cached.policy, episode, rng) {
            belief.update(&t);
        }
    }
    Ok(regrets)
}

/// Regret of acting greedily on the prior-mean model.
fn reference_gap<B: Posterior>(env: &TabularMdp, prior: &B) -> Result<f64> {
    let (q, _) = backward_induction(&prior.mean_model());
    let policy = greedy_policy(&q, TIE_TOLERANCE);
    let (_, optimal) = optimal_values(env)?;
    let value = evaluate_policy(env, &policy)?;
    Ok(env.initial_value(&optimal) - env.initial_value(&value))
}

/// Runs `episodes` episodes of `agent` on `env` starting from `prior`.
///
/// Each entry of the curve is the expected regret of the policy used in that
/// episode, computed by exact policy evaluation on `env`; the simulated
/// episode only feeds the belief.
pub fn run_episode_loop<B: Posterior, R: Rng + ?Sized>(
    agent: &Agent,
    env: &TabularMdp,
    prior: B,
    episodes: usize,
    rng: &mut R,
) -> Result<RegretCurve> {
    if episodes == 0 {
        return Err(Error::InvalidParameter("need at least one episode".into()));
    }
    let gap = reference_gap(env, &prior)?;
    let regrets = drive(agent, env, prior, episodes, rng, |_, _| false)?;
    Ok(RegretCurve::new(agent.name(), "custom", regrets, gap))
}

/// Like [`run_episode_loop`] but stops at the first episode counted by
/// [`time_to_learn`]. Returns that episode, or `None` within `cap` episodes.
pub fn run_until_learned<B: Posterior, R: Rng + ?Sized>(
    agent: &Agent,
    env: &TabularMdp,
    prior: B,
    cap: usize,
    gap_fraction: f64,
    rng: &mut R,
) -> Result<Option<usize>> {
    check_fraction(gap_fraction)?;
    let threshold = gap_fraction * reference_gap(env, &prior)?;
    let mut learned = None;
    drive(agent, env, prior, cap, rng, |episode, regret| {
        if is_learned(regret, threshold) {
            learned = Some(episode);
            true
        } else {
            false
        }
    })?;
    Ok(learned)
}

fn check_fraction(gap_fraction: f64) -> Result<()> {
    if gap_fraction > 0.0 && gap_fraction < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "gap fraction must lie in (0, 1), got {gap_fraction}"
        )))
    }
}

fn is_learned(regret: f64, threshold: f64) -> bool {
    regret < threshold || regret <= 1e-12
}

/// First 1-based episode whose expected regret is below
/// `gap_fraction * reference_gap`; `None` if that never happens.
pub fn time_to_learn(curve: &RegretCurve, gap_fraction: f64) -> Result<Option<usize>> {
    check_fraction(gap_fraction)?;
    let threshold = gap_fraction * curve.reference_gap;
    Ok(curve
        .per_episode
        .iter()
        .position(|&r| is_learned(r, threshold))
        .map(|i| i + 1))
}

/// Environment family together with the agent's prior over it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvSpec {
    /// One-unknown-action bandit; the prior puts `p_plus` on the `+2` variant.
    Problem1 {
        num_actions: usize,
        epsilon: f64,
        p_plus: f64,
    },
    /// DeepSea with the default conjugate prior. With a randomised action
    /// map each prior draw uses its own map.
    DeepSea(DeepSeaSpec),
}

impl EnvSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EnvSpec::Problem1 { .. } => "problem1",
            EnvSpec::DeepSea(_) => "deepsea",
        }
    }

    pub fn param_n(&self) -> usize {
        match self {
            EnvSpec::Problem1 { num_actions, .. } => *num_actions,
            EnvSpec::DeepSea(spec) => spec.size,
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self {
            EnvSpec::Problem1 { epsilon, .. } => Some(*epsilon),
            EnvSpec::DeepSea(_) => None,
        }
    }

    /// The agent's initial belief.
    pub fn prior(&self) -> Result<AnyBelief> {
        Ok(match *self {
            EnvSpec::Problem1 {
                num_actions,
                epsilon,
                p_plus,
            } => AnyBelief::TwoPoint(make_problem1_prior(num_actions, epsilon, p_plus)?),
            EnvSpec::DeepSea(spec) => {
                AnyBelief::Conjugate(BeliefState::for_environment(&make_deep_sea(&spec)?))
            }
        })
    }

    /// Draws the true environment for prior draw `draw`.
    pub fn draw<R: Rng + ?Sized>(&self, draw: usize, rng: &mut R) -> Result<TabularMdp> {
        match *self {
            EnvSpec::Problem1 {
                num_actions,
                epsilon,
                p_plus,
            } => {
                let variant = if rng.random::<f64>() < p_plus {
                    Variant::Plus
                } else {
                    Variant::Minus
                };
                make_problem1(&Problem1Spec {
                    num_actions,
                    epsilon,
                    variant,
                })
            }
            EnvSpec::DeepSea(spec) => {
                let mut spec = spec;
                if spec.randomize_action_map {
                    spec.map_seed = spec.map_seed.wrapping_add(draw as u64);
                }
                make_deep_sea(&spec)
            }
        }
    }

    /// Every member of the family, for worst-case evaluation.
    pub fn family(&self) -> Result<Vec<TabularMdp>> {
        match *self {
            EnvSpec::Problem1 {
                num_actions,
                epsilon,
                ..
            } => [Variant::Plus, Variant::Minus]
                .into_iter()
                .map(|variant| {
                    make_problem1(&Problem1Spec {
                        num_actions,
                        epsilon,
                        variant,
                    })
                })
                .collect(),
            EnvSpec::DeepSea(spec) => Ok(vec![make_deep_sea(&spec)?]),
        }
    }
}

/// One Bayes- or worst-case-regret experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Tag used in output and to derive random streams.
    pub experiment: String,
    pub agent: Agent,
    pub env: EnvSpec,
    pub episodes: usize,
    pub prior_draws: usize,
    pub seeds: usize,
    pub master_seed: u64,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.prior_draws == 0 || self.seeds == 0 {
            return Err(Error::InvalidParameter(
                "episodes, prior draws and seeds must all be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn cells(&self) -> Vec<(usize, usize)> {
        (0..self.prior_draws)
            .flat_map(|d| (0..self.seeds).map(move |s| (d, s)))
            .collect()
    }

    fn summary(&self, metric: &str, acc: &MeanAccumulator) -> SummaryRow {
        SummaryRow {
            experiment: self.experiment.clone(),
            agent: self.agent.name().to_string(),
            env: self.env.name().to_string(),
            param_n: self.env.param_n(),
            metric: metric.to_string(),
            value: acc.mean(),
            stderr: acc.stderr(),
            samples: acc.count(),
        }
    }

    /// Curve rows for `curve` in the fixed CSV schema.
    pub fn curve_rows(&self, curve: &RegretCurve) -> Vec<CurveRow> {
        curve
            .per_episode
            .iter()
            .zip(&curve.cumulative)
            .enumerate()
            .map(|(i, (&regret, &cum_regret))| CurveRow {
                experiment: self.experiment.clone(),
                agent: curve.agent.clone(),
                env: curve.env.clone(),
                param_n: self.env.param_n(),
                epsilon: self.env.epsilon(),
                beta: self.agent.beta(),
                sigma: self.agent.sigma(),
                prior_draw: curve.prior_draw,
                seed: curve.seed,
                episode: i + 1,
                regret,
                cum_regret,
            })
            .collect()
    }
}

/// Mean cumulative regret over environments drawn from the prior.
#[derive(Debug, Clone)]
pub struct BayesRegret {
    pub summary: SummaryRow,
    /// Curves in `(draw, seed)` order; empty unless requested.
    pub curves: Vec<RegretCurve>,
}

fn run_cell(
    config: &ExperimentConfig,
    prior: &AnyBelief,
    env: &TabularMdp,
    draw: usize,
    seed: usize,
) -> Result<RegretCurve> {
    let mut rng = cell_rng(config.master_seed, &config.experiment, draw, seed);
    let mut curve = run_episode_loop(&config.agent, env, prior.clone(), config.episodes, &mut rng)?;
    curve.env = config.env.name().to_string();
    curve.prior_draw = draw;
    curve.seed = seed;
    Ok(curve)
}

/// Bayes regret: environments drawn from the prior, `seeds` runs per draw.
///
/// Cells run on the current rayon pool; aggregation follows `(draw, seed)`
/// order regardless of scheduling.
pub fn bayes_regret(config: &ExperimentConfig, keep_curves: bool) -> Result<BayesRegret> {
    config.validate()?;
    let prior = config.env.prior()?;
    let envs: Vec<TabularMdp> = (0..config.prior_draws)
        .map(|d| {
            let mut rng = draw_rng(config.master_seed, &config.experiment, d);
            config.env.draw(d, &mut rng)
        })
        .collect::<Result<_>>()?;
    let curves: Vec<RegretCurve> = config
        .cells()
        .into_par_iter()
        .map(|(d, s)| run_cell(config, &prior, &envs[d], d, s))
        .collect::<Result<_>>()?;
    let acc: MeanAccumulator = curves.iter().map(RegretCurve::total).collect();
    let mut summary = config.summary("bayes_regret", &acc);
    if config.prior_draws > 1 {
        // Runs sharing a draw are correlated; the standard error comes from
        // the spread of per-draw means.
        let per_draw: MeanAccumulator = curves
            .chunks(config.seeds)
            .map(|runs| runs.iter().map(RegretCurve::total).sum::<f64>() / runs.len() as f64)
            .collect();
        summary.stderr = per_draw.stderr();
    }
    Ok(BayesRegret {
        summary,
        curves: if keep_curves { curves } else { Vec::new() },
    })
}

/// Worst-case regret over a fixed list of environments.
#[derive(Debug, Clone)]
pub struct WorstCaseRegret {
    pub summary: SummaryRow,
    /// Mean cumulative regret on each environment, with its standard error.
    pub per_env: Vec<SummaryRow>,
}

/// Runs the agent (still starting from its prior) on each environment of
/// `envs` with `prior_draws * seeds` runs each and reports the maximum mean.
pub fn worst_case_regret(
    config: &ExperimentConfig,
    envs: &[TabularMdp],
) -> Result<WorstCaseRegret> {
    config.validate()?;
    if envs.is_empty() {
        return Err(Error::InvalidParameter("empty environment list".into()));
    }
    let prior = config.env.prior()?;
    let mut per_env = Vec::with_capacity(envs.len());
    for (i, env) in envs.iter().enumerate() {
        let tag = format!("{}/env{i}", config.experiment);
        let totals: Vec<f64> = config
            .cells()
            .into_par_iter()
            .map(|(d, s)| {
                let mut rng = cell_rng(config.master_seed, &tag, d, s);
                run_episode_loop(&config.agent, env, prior.clone(), config.episodes, &mut rng)
                    .map(|c| c.total())
            })
            .collect::<Result<_>>()?;
        let acc: MeanAccumulator = totals.into_iter().collect();
        let mut row = config.summary(&format!("regret_env{i}"), &acc);
        row.env = format!("{}#{i}", config.env.name());
        per_env.push(row);
    }
    let worst = per_env
        .iter()
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .expect("nonempty");
    let mut summary = worst.clone();
    summary.metric = "worst_case_regret".into();
    summary.env = config.env.name().to_string();
    Ok(WorstCaseRegret { summary, per_env })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn time_to_learn_edge_cases() {
        let zero = RegretCurve::new("a", "e", vec![0.0; 5], 1.0);
        assert_eq!(time_to_learn(&zero, 0.5).unwrap(), Some(1));
        let flat = RegretCurve::new("a", "e", vec![1.0; 5], 1.0);
        assert_eq!(time_to_learn(&flat, 0.5).unwrap(), None);
        let drop = RegretCurve::new("a", "e", vec![1.0, 0.8, 0.4, 0.1], 1.0);
        assert_eq!(time_to_learn(&drop, 0.5).unwrap(), Some(3));
        assert_eq!(time_to_learn(&drop, 0.2).unwrap(), Some(4));
        assert!(time_to_learn(&drop, 1.0).is_err());
    }

    #[test]
    fn cumulative_is_prefix_sum() {
        let c = RegretCurve::new("a", "e", vec![1.0, 2.0, 0.5], 1.0);
        assert_eq!(c.cumulative, vec![1.0, 3.0, 3.5]);
        assert_eq!(c.total(), 3.5);
    }

    #[test]
    fn oracle_has_zero_regret() {
        let spec = EnvSpec::DeepSea(DeepSeaSpec::new(4));
        let env = spec.family().unwrap().remove(0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let curve =
            run_episode_loop(&Agent::Oracle, &env, spec.prior().unwrap(), 10, &mut rng).unwrap();
        assert!(curve.per_episode.iter().all(|&r| r.abs() < 1e-12));
    }

    #[test]
    fn bayes_optimal_on_minus_pays_three_once() {
        let spec = EnvSpec::Problem1 {
            num_actions: 5,
            epsilon: 1e-3,
            p_plus: 0.5,
        };
        let minus = spec.family().unwrap().remove(1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let curve = run_episode_loop(
            &Agent::BayesOptimal,
            &minus,
            spec.prior().unwrap(),
            6,
            &mut rng,
        )
        .unwrap();
        assert_eq!(curve.per_episode, vec![3.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let env = EnvSpec::DeepSea(DeepSeaSpec::new(3))
            .family()
            .unwrap()
            .remove(0);
        let prior = EnvSpec::DeepSea(DeepSeaSpec::new(4)).prior().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = run_episode_loop(&Agent::Thompson, &env, prior, 3, &mut rng).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
    }

    #[test]
    fn zero_episodes_rejected() {
        let spec = EnvSpec::Problem1 {
            num_actions: 3,
            epsilon: 1e-3,
            p_plus: 0.5,
        };
        let config = ExperimentConfig {
            experiment: "t".into(),
            agent: Agent::Thompson,
            env: spec,
            episodes: 0,
            prior_draws: 1,
            seeds: 1,
            master_seed: 0,
        };
        assert!(bayes_regret(&config, false).is_err());
    }
}
