//! Parameter sweeps behind the CLI subcommands: the bandit regret grid, the
//! DeepSea time-to-learn grid, the bandit temperature table and the random
//! bound battery.

use rand::Rng;
use rayon::prelude::*;

use super::bounds::{optimism_check, theorem1_check};
use super::experiment::{
    bayes_regret, run_until_learned, worst_case_regret, EnvSpec, ExperimentConfig,
};
use super::output::SummaryRow;
use super::seeding::{cell_rng, stream};
use crate::agents::{
    bandit_beta_objective, bandit_optimal_beta, Agent, KLearningParams, SoftQParams,
};
use crate::environments::{make_problem1_prior, make_random_belief, DeepSeaSpec};
use crate::numeric::MeanAccumulator;
use crate::posterior::{AnyBelief, Posterior};
use crate::{Error, Result};

/// `count` points spaced evenly in `log10` from `lo` to `hi`, inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
                .collect()
        }
    }
}

/// Rounded log-spaced integers from `lo` to `hi`, deduplicated.
pub fn log_spaced_sizes(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> = log_grid(lo as f64, hi as f64, count)
        .into_iter()
        .map(|x| x.round() as usize)
        .collect();
    sizes.dedup();
    sizes
}

/// Soft-Q inverse temperatures tried by the bandit sweep.
pub fn default_soft_q_betas() -> Vec<f64> {
    log_grid(1e-3, 1e2, 11)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem1Sweep {
    pub sizes: Vec<usize>,
    pub epsilon: f64,
    pub p_plus: f64,
    pub episodes: usize,
    pub prior_draws: usize,
    pub seeds: usize,
    pub master_seed: u64,
    /// Agents run at every size; soft-Q is handled separately.
    pub agents: Vec<Agent>,
    pub soft_q_betas: Vec<f64>,
    /// Extra soft-Q curve at one fixed temperature.
    pub fixed_soft_q_beta: Option<f64>,
    /// Also report worst-case regret over both variants.
    pub worst_case: bool,
}

impl Problem1Sweep {
    pub fn new(sizes: Vec<usize>) -> Self {
        Self {
            sizes,
            epsilon: 1e-3,
            p_plus: 0.5,
            episodes: 100,
            prior_draws: 10_000,
            seeds: 1,
            master_seed: 0,
            agents: vec![
                Agent::BayesOptimal,
                Agent::Thompson,
                Agent::BanditK,
                Agent::KLearning(KLearningParams::default()),
            ],
            soft_q_betas: default_soft_q_betas(),
            fixed_soft_q_beta: Some(10.0),
            worst_case: false,
        }
    }

    fn config(&self, agent: Agent, n: usize) -> ExperimentConfig {
        ExperimentConfig {
            experiment: "problem1".into(),
            agent,
            env: EnvSpec::Problem1 {
                num_actions: n,
                epsilon: self.epsilon,
                p_plus: self.p_plus,
            },
            episodes: self.episodes,
            prior_draws: self.prior_draws,
            seeds: self.seeds,
            master_seed: self.master_seed,
        }
    }
}

fn labelled(mut row: SummaryRow, agent: String) -> SummaryRow {
    row.agent = agent;
    row
}

/// Bayes regret of every agent at every size. Soft-Q is reported as the
/// best value over its temperature grid (`soft-q-best`, with the winning
/// temperature as a `best_beta` row) and, if set, at one fixed temperature
/// (`soft-q[beta=...]`).
pub fn problem1_sweep(sweep: &Problem1Sweep) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    for &n in &sweep.sizes {
        for &agent in &sweep.agents {
            let config = sweep.config(agent, n);
            rows.push(bayes_regret(&config, false)?.summary);
            if sweep.worst_case {
                let envs = config.env.family()?;
                let wc = worst_case_regret(&config, &envs)?;
                rows.extend(wc.per_env);
                rows.push(wc.summary);
            }
        }
        if !sweep.soft_q_betas.is_empty() {
            let mut best: Option<(f64, SummaryRow)> = None;
            for &beta in &sweep.soft_q_betas {
                let row = bayes_regret(
                    &sweep.config(Agent::SoftQ(SoftQParams::new(beta)?), n),
                    false,
                )?
                .summary;
                if best.as_ref().is_none_or(|(_, b)| row.value < b.value) {
                    best = Some((beta, row));
                }
            }
            let (beta, row) = best.expect("nonempty grid");
            let mut beta_row = labelled(row.clone(), "soft-q-best".into());
            beta_row.metric = "best_beta".into();
            beta_row.value = beta;
            beta_row.stderr = 0.0;
            beta_row.samples = sweep.soft_q_betas.len() as u64;
            rows.push(labelled(row, "soft-q-best".into()));
            rows.push(beta_row);
        }
        if let Some(beta) = sweep.fixed_soft_q_beta {
            let row = bayes_regret(
                &sweep.config(Agent::SoftQ(SoftQParams::new(beta)?), n),
                false,
            )?
            .summary;
            rows.push(labelled(row, format!("soft-q[beta={beta}]")));
        }
    }
    Ok(rows)
}

/// K-learning temperature used on DeepSea unless overridden.
pub const DEEP_SEA_K_BETA: f64 = 10.0;
/// Soft-Q temperature used on DeepSea (`1 / beta = 0.01`).
pub const DEEP_SEA_SOFT_Q_BETA: f64 = 100.0;

/// `min(10 * 2^N, 50 000)`.
pub fn deep_sea_episode_cap(size: usize) -> usize {
    if size >= 13 {
        50_000
    } else {
        (10usize << size).min(50_000)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepSeaSweep {
    pub sizes: Vec<usize>,
    pub agents: Vec<Agent>,
    pub seeds: usize,
    pub master_seed: u64,
    pub gap_fraction: f64,
    pub randomize_action_map: bool,
    /// Overrides [`deep_sea_episode_cap`] when set.
    pub episode_cap: Option<usize>,
}

impl DeepSeaSweep {
    pub fn new(sizes: Vec<usize>) -> Self {
        Self {
            sizes,
            agents: vec![
                Agent::Thompson,
                Agent::KLearning(KLearningParams {
                    beta: DEEP_SEA_K_BETA,
                    ..KLearningParams::default()
                }),
                Agent::SoftQ(SoftQParams {
                    beta: DEEP_SEA_SOFT_Q_BETA,
                }),
            ],
            seeds: 10,
            master_seed: 0,
            gap_fraction: 0.5,
            randomize_action_map: false,
            episode_cap: None,
        }
    }

    pub fn cap(&self, size: usize) -> usize {
        self.episode_cap
            .unwrap_or_else(|| deep_sea_episode_cap(size))
    }
}

/// Outcome of one DeepSea run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeepSeaCell {
    pub agent: usize,
    pub size: usize,
    pub seed: usize,
    /// First learned episode, `None` within the cap.
    pub learned_at: Option<usize>,
    pub cap: usize,
}

/// Runs every `(agent, size, seed)` cell in parallel; results come back in
/// that order.
pub fn deep_sea_cells(sweep: &DeepSeaSweep) -> Result<Vec<DeepSeaCell>> {
    if sweep.seeds == 0 {
        return Err(Error::InvalidParameter("need at least one seed".into()));
    }
    let mut cells = Vec::new();
    for agent in 0..sweep.agents.len() {
        for &size in &sweep.sizes {
            for seed in 0..sweep.seeds {
                cells.push((agent, size, seed));
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(agent, size, seed)| {
            let mut spec = DeepSeaSpec::new(size);
            spec.randomize_action_map = sweep.randomize_action_map;
            spec.map_seed = sweep.master_seed ^ seed as u64;
            let env = EnvSpec::DeepSea(spec);
            let tag = format!("deepsea/{}/{size}", sweep.agents[agent]);
            let mut draw = cell_rng(sweep.master_seed, &tag, seed, 0);
            let mdp = env.draw(seed, &mut draw)?;
            let prior = env.prior()?;
            let mut rng = cell_rng(sweep.master_seed, &tag, seed, 1);
            let cap = sweep.cap(size);
            let learned_at = run_until_learned(
                &sweep.agents[agent],
                &mdp,
                prior,
                cap,
                sweep.gap_fraction,
                &mut rng,
            )?;
            Ok(DeepSeaCell {
                agent,
                size,
                seed,
                learned_at,
                cap,
            })
        })
        .collect()
}

/// Summary rows per `(agent, size)`: mean `time_to_learn` (runs that never
/// learn count as the cap), `learned_fraction` and `episode_cap`.
pub fn deep_sea_sweep(sweep: &DeepSeaSweep) -> Result<Vec<SummaryRow>> {
    let cells = deep_sea_cells(sweep)?;
    let mut rows = Vec::new();
    for (i, agent) in sweep.agents.iter().enumerate() {
        let label = match agent {
            Agent::SoftQ(p) => format!("soft-q[beta={}]", p.beta),
            other => other.name().to_string(),
        };
        for &size in &sweep.sizes {
            let group: Vec<&DeepSeaCell> = cells
                .iter()
                .filter(|c| c.agent == i && c.size == size)
                .collect();
            let cap = sweep.cap(size);
            let times: MeanAccumulator = group
                .iter()
                .map(|c| c.learned_at.unwrap_or(c.cap) as f64)
                .collect();
            let learned: MeanAccumulator = group
                .iter()
                .map(|c| if c.learned_at.is_some() { 1.0 } else { 0.0 })
                .collect();
            let row = |metric: &str, acc: &MeanAccumulator| SummaryRow {
                experiment: "deepsea".into(),
                agent: label.clone(),
                env: "deepsea".into(),
                param_n: size,
                metric: metric.into(),
                value: acc.mean(),
                stderr: acc.stderr(),
                samples: acc.count(),
            };
            rows.push(row("time_to_learn", &times));
            rows.push(row("learned_fraction", &learned));
            let mut cap_row = row("episode_cap", &times);
            cap_row.value = cap as f64;
            cap_row.stderr = 0.0;
            rows.push(cap_row);
        }
    }
    Ok(rows)
}

/// One row of the bandit temperature table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BanditTableRow {
    pub num_actions: usize,
    pub beta: f64,
    /// Probability the K-learning policy assigns to the informative arm.
    pub informative_prob: f64,
    /// `f(beta*)`.
    pub objective: f64,
    pub unbounded: bool,
}

/// Optimal temperature and informative-arm probability of analytic
/// K-learning on the uniform-prior bandit for each size.
pub fn bandit_table(sizes: &[usize], epsilon: f64, p_plus: f64) -> Result<Vec<BanditTableRow>> {
    sizes
        .iter()
        .map(|&n| {
            let belief = make_problem1_prior(n, epsilon, p_plus)?;
            let arms = belief.arm_beliefs()?;
            let search = bandit_optimal_beta(&arms)?;
            let policy = crate::agents::bandit_k_policy(&AnyBelief::TwoPoint(belief))?;
            Ok(BanditTableRow {
                num_actions: n,
                beta: search.beta,
                informative_prob: policy.prob(0, 0, crate::environments::PROBLEM1_INFORMATIVE_ARM),
                objective: search.objective,
                unbounded: search.unbounded,
            })
        })
        .collect()
}

/// Bandit table as summary rows (`beta_star`, `informative_prob`,
/// `objective`).
pub fn bandit_table_rows(table: &[BanditTableRow]) -> Vec<SummaryRow> {
    let mut rows = Vec::with_capacity(3 * table.len());
    for r in table {
        for (metric, value) in [
            ("beta_star", r.beta),
            ("informative_prob", r.informative_prob),
            ("objective", r.objective),
        ] {
            rows.push(SummaryRow {
                experiment: "bandit-table".into(),
                agent: "bandit-k".into(),
                env: "problem1".into(),
                param_n: r.num_actions,
                metric: metric.into(),
                value,
                stderr: 0.0,
                samples: 1,
            });
        }
    }
    rows
}

/// Minimum of the bandit temperature objective over `points` log-spaced
/// temperatures in `[lo, hi]`; the brute-force check on the optimiser.
pub fn bandit_grid_minimum(
    num_actions: usize,
    epsilon: f64,
    p_plus: f64,
    lo: f64,
    hi: f64,
    points: usize,
) -> Result<(f64, f64)> {
    let arms = make_problem1_prior(num_actions, epsilon, p_plus)?.arm_beliefs()?;
    Ok(log_grid(lo, hi, points)
        .into_iter()
        .map(|b| (b, bandit_beta_objective(&arms, b)))
        .fold((f64::NAN, f64::INFINITY), |best, (b, v)| {
            if v < best.1 {
                (b, v)
            } else {
                best
            }
        }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundBattery {
    pub trials: usize,
    pub betas: Vec<f64>,
    pub mc_samples: usize,
    pub master_seed: u64,
    pub max_states: usize,
    pub max_actions: usize,
    pub max_horizon: usize,
    /// Most uniformly random episodes fed to each belief before checking.
    pub max_episodes: usize,
    /// K-learning bonus scale; `None` uses the horizon of each belief,
    /// since one pair's reward can be collected up to `H` times.
    pub sigma: Option<f64>,
}

impl BoundBattery {
    pub fn new(trials: usize) -> Self {
        Self {
            trials,
            betas: vec![0.1, 1.0, 10.0],
            mc_samples: 10_000,
            master_seed: 0,
            max_states: 3,
            max_actions: 3,
            max_horizon: 2,
            max_episodes: 10,
            sigma: None,
        }
    }
}

/// Result of one `(trial, beta)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTrial {
    pub trial: usize,
    pub beta: f64,
    pub shape: (usize, usize, usize),
    pub theorem1_pass: bool,
    pub theorem1_margin: f64,
    pub optimism_pass: bool,
    pub optimism_warnings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundBatteryReport {
    pub trials: Vec<BoundTrial>,
}

impl BoundBatteryReport {
    pub fn theorem1_passes(&self) -> usize {
        self.trials.iter().filter(|t| t.theorem1_pass).count()
    }

    pub fn optimism_passes(&self) -> usize {
        self.trials.iter().filter(|t| t.optimism_pass).count()
    }

    pub fn all_pass(&self) -> bool {
        self.trials
            .iter()
            .all(|t| t.theorem1_pass && t.optimism_pass)
    }

    pub fn summary_rows(&self, battery: &BoundBattery) -> Vec<SummaryRow> {
        let mut rows = Vec::new();
        for &beta in &battery.betas {
            let these: Vec<&BoundTrial> = self.trials.iter().filter(|t| t.beta == beta).collect();
            let t1: MeanAccumulator = these
                .iter()
                .map(|t| f64::from(u8::from(t.theorem1_pass)))
                .collect();
            let op: MeanAccumulator = these
                .iter()
                .map(|t| f64::from(u8::from(t.optimism_pass)))
                .collect();
            for (metric, acc) in [("theorem1_pass_rate", t1), ("optimism_pass_rate", op)] {
                rows.push(SummaryRow {
                    experiment: "check-bounds".into(),
                    agent: format!("k-learning[beta={beta}]"),
                    env: "random".into(),
                    param_n: battery.max_states,
                    metric: metric.into(),
                    value: acc.mean(),
                    stderr: acc.stderr(),
                    samples: acc.count(),
                });
            }
        }
        rows
    }
}

/// K-value bound and optimism checks on random small beliefs. Each trial draws
/// its shape, its MDP and its data from its own stream.
pub fn bound_battery(battery: &BoundBattery) -> Result<BoundBatteryReport> {
    if battery.max_states == 0 || battery.max_actions == 0 || battery.max_horizon == 0 {
        return Err(Error::InvalidParameter(
            "battery dimensions must be positive".into(),
        ));
    }
    let cells: Vec<(usize, usize)> = (0..battery.trials)
        .flat_map(|t| (0..battery.betas.len()).map(move |b| (t, b)))
        .collect();
    let trials = cells
        .into_par_iter()
        .map(|(trial, b)| {
            let mut rng = stream(battery.master_seed, "check-bounds", "belief", trial as u64);
            let shape = (
                rng.random_range(1..=battery.max_states),
                rng.random_range(1..=battery.max_actions),
                rng.random_range(1..=battery.max_horizon),
            );
            let episodes = rng.random_range(0..=battery.max_episodes);
            let belief = make_random_belief(shape.0, shape.1, shape.2, episodes, &mut rng)?;
            let beta = battery.betas[b];
            let sigma = battery.sigma.unwrap_or(shape.2 as f64);
            let params = KLearningParams::new(beta, sigma, 1.0)?;
            let index = (trial * battery.betas.len() + b) as u64;
            let mut mc = stream(battery.master_seed, "check-bounds", "theorem1", index);
            let t1 = theorem1_check(&belief, &params, battery.mc_samples, &mut mc)?;
            let mut mc = stream(battery.master_seed, "check-bounds", "optimism", index);
            let op = optimism_check(&belief, 1, &params, battery.mc_samples, &mut mc)?;
            Ok(BoundTrial {
                trial,
                beta,
                shape,
                theorem1_pass: t1.pass,
                theorem1_margin: t1.worst_margin(),
                optimism_pass: op.pass,
                optimism_warnings: op.warnings,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundBatteryReport { trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = log_grid(1e-3, 1e2, 11);
        assert_eq!(g.len(), 11);
        assert!((g[0] - 1e-3).abs() < 1e-15 && (g[10] - 100.0).abs() < 1e-10);
        assert_eq!(log_spaced_sizes(3, 1000, 3), vec![3, 55, 1000]);
    }

    #[test]
    fn episode_caps() {
        assert_eq!(deep_sea_episode_cap(4), 160);
        assert_eq!(deep_sea_episode_cap(12), 40_960);
        assert_eq!(deep_sea_episode_cap(13), 50_000);
        assert_eq!(deep_sea_episode_cap(64), 50_000);
    }

    #[test]
    fn bandit_table_optimum_beats_grid() {
        let rows = bandit_table(&[10], 1e-3, 0.5).unwrap();
        let (_, grid) = bandit_grid_minimum(10, 1e-3, 0.5, 1e-4, 1e4, 10_000).unwrap();
        assert!(rows[0].objective <= grid + 1e-9);
        assert!((rows[0].beta - 4.919).abs() < 5e-3, "{}", rows[0].beta);
    }
}
