use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bayes_explore::agents::{Agent, KLearningParams, SoftQParams};
use bayes_explore::environments::DeepSeaSpec;
use bayes_explore::harness::config::{parse_list, ConfigFile};
use bayes_explore::harness::output::{curve_csv, summary_csv, write_atomic};
use bayes_explore::harness::sweeps::{
    bandit_table, bandit_table_rows, bound_battery, deep_sea_sweep, log_spaced_sizes,
    problem1_sweep, BoundBattery, DeepSeaSweep, Problem1Sweep, DEEP_SEA_K_BETA,
    DEEP_SEA_SOFT_Q_BETA,
};
use bayes_explore::harness::{bayes_regret, EnvSpec, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "bayes-explore",
    version,
    about = "Regret sweeps and bound checks for Bayesian exploration agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Bayes regret of each agent on the one-unknown-action bandit over a grid of sizes.
    Problem1Sweep,
    /// Episodes until each agent learns DeepSea, over a grid of sizes.
    DeepseaSweep,
    /// Random-belief battery for the K-learning value bound and optimism chain.
    CheckBounds,
    /// A single configuration; writes per-episode regret curves.
    Run,
    /// Optimal bandit K-learning temperature and informative-arm probability by size.
    BanditTable,
}

/// Every flag may also be set in the `--config` file; flags win.
#[derive(Args, Debug, Default, Clone)]
struct Opts {
    /// Agent name, or a comma-separated list for the sweeps.
    #[arg(long, global = true)]
    agent: Option<String>,
    /// `problem1` or `deepsea` (for `run`).
    #[arg(long, global = true)]
    env: Option<String>,
    #[arg(long, global = true)]
    episodes: Option<usize>,
    #[arg(long, global = true)]
    seeds: Option<usize>,
    #[arg(long, global = true)]
    prior_draws: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output CSV; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat `key = value` file with defaults for any of these flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Inverse temperature for soft-Q and K-learning.
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// K-learning reward scale.
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Comma-separated sizes, e.g. `3,10,30`.
    #[arg(long, global = true)]
    size_grid: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Random beliefs per temperature (`check-bounds`).
    #[arg(long, global = true)]
    trials: Option<usize>,
}

const CONFIG_KEYS: &[&str] = &[
    "agent",
    "env",
    "episodes",
    "seeds",
    "prior-draws",
    "seed",
    "out",
    "beta",
    "sigma",
    "epsilon",
    "size-grid",
    "parallelism",
    "trials",
];

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<bayes_explore::Error> for Failure {
    fn from(e: bayes_explore::Error) -> Self {
        match e {
            bayes_explore::Error::Config(_) | bayes_explore::Error::InvalidParameter(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn merge(mut opts: Opts) -> Outcome<Opts> {
    let Some(path) = opts.config.clone() else {
        return Ok(opts);
    };
    let file =
        ConfigFile::load(&path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if let Some(key) = file.keys().find(|k| !CONFIG_KEYS.contains(k)) {
        return Err(Failure::Usage(format!("unknown config key `{key}`")));
    }
    macro_rules! fill {
        ($($field:ident = $key:literal),*) => {$(
            if opts.$field.is_none() {
                opts.$field = file.get_parsed($key)?;
            }
        )*};
    }
    fill!(
        agent = "agent",
        env = "env",
        episodes = "episodes",
        seeds = "seeds",
        prior_draws = "prior-draws",
        seed = "seed",
        out = "out",
        beta = "beta",
        sigma = "sigma",
        epsilon = "epsilon",
        size_grid = "size-grid",
        parallelism = "parallelism",
        trials = "trials"
    );
    Ok(opts)
}

fn sizes(opts: &Opts, default: Vec<usize>) -> Outcome<Vec<usize>> {
    match &opts.size_grid {
        Some(text) => {
            let sizes: Vec<usize> = parse_list(text)?;
            if sizes.is_empty() {
                return Err(Failure::Usage("empty --size-grid".into()));
            }
            Ok(sizes)
        }
        None => Ok(default),
    }
}

fn agents(opts: &Opts, default: Vec<Agent>) -> Outcome<Vec<Agent>> {
    match &opts.agent {
        Some(list) => list
            .split(',')
            .map(|name| Agent::parse(name.trim(), opts.beta, opts.sigma).map_err(Failure::from))
            .collect(),
        None => Ok(default),
    }
}

fn emit(out: Option<&Path>, csv: &str) -> Outcome<()> {
    match out {
        Some(path) => write_atomic(path, csv)
            .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(csv.as_bytes())
            .map_err(|e| Failure::Runtime(e.to_string())),
    }
}

fn run(command: Command, opts: &Opts) -> Outcome<()> {
    let seed = opts.seed.unwrap_or(0);
    let k_default = || -> Outcome<Agent> {
        let d = KLearningParams::default();
        Ok(Agent::KLearning(KLearningParams::new(
            opts.beta.unwrap_or(d.beta),
            opts.sigma.unwrap_or(d.sigma),
            d.pseudo_count,
        )?))
    };
    match command {
        Command::Problem1Sweep => {
            let mut sweep = Problem1Sweep::new(sizes(opts, vec![3, 5, 10, 30, 100])?);
            sweep.master_seed = seed;
            sweep.epsilon = opts.epsilon.unwrap_or(sweep.epsilon);
            sweep.episodes = opts.episodes.unwrap_or(sweep.episodes);
            sweep.prior_draws = opts.prior_draws.unwrap_or(sweep.prior_draws);
            sweep.seeds = opts.seeds.unwrap_or(sweep.seeds);
            sweep.fixed_soft_q_beta = Some(opts.beta.unwrap_or(10.0));
            let default = vec![
                Agent::BayesOptimal,
                Agent::Thompson,
                Agent::BanditK,
                k_default()?,
            ];
            match &opts.agent {
                Some(_) => {
                    let chosen = agents(opts, default)?;
                    let with_soft_q = chosen.iter().any(|a| matches!(a, Agent::SoftQ(_)));
                    sweep.agents = chosen
                        .into_iter()
                        .filter(|a| !matches!(a, Agent::SoftQ(_)))
                        .collect();
                    if !with_soft_q {
                        sweep.soft_q_betas.clear();
                        sweep.fixed_soft_q_beta = None;
                    }
                }
                None => sweep.agents = default,
            }
            let rows = problem1_sweep(&sweep)?;
            emit(opts.out.as_deref(), &summary_csv(&rows))
        }
        Command::DeepseaSweep => {
            let mut sweep = DeepSeaSweep::new(sizes(opts, (4..=14).collect())?);
            sweep.master_seed = seed;
            sweep.seeds = opts.seeds.unwrap_or(sweep.seeds);
            sweep.episode_cap = opts.episodes;
            let d = KLearningParams::default();
            let k = Agent::KLearning(KLearningParams::new(
                opts.beta.unwrap_or(DEEP_SEA_K_BETA),
                opts.sigma.unwrap_or(d.sigma),
                d.pseudo_count,
            )?);
            let soft_q = Agent::SoftQ(SoftQParams::new(opts.beta.unwrap_or(DEEP_SEA_SOFT_Q_BETA))?);
            sweep.agents = agents(opts, vec![Agent::Thompson, k, soft_q])?;
            let rows = deep_sea_sweep(&sweep)?;
            emit(opts.out.as_deref(), &summary_csv(&rows))
        }
        Command::CheckBounds => {
            let mut battery = BoundBattery::new(opts.trials.unwrap_or(100));
            battery.master_seed = seed;
            if let Some(beta) = opts.beta {
                battery.betas = vec![beta];
            }
            battery.sigma = opts.sigma;
            let report = bound_battery(&battery)?;
            emit(
                opts.out.as_deref(),
                &summary_csv(&report.summary_rows(&battery)),
            )?;
            let total = report.trials.len();
            eprintln!(
                "theorem1 {}/{total} passed, optimism {}/{total} passed",
                report.theorem1_passes(),
                report.optimism_passes()
            );
            if report.all_pass() {
                Ok(())
            } else {
                Err(Failure::Runtime("bound checks failed".into()))
            }
        }
        Command::Run => {
            let agent = match opts.agent.as_deref() {
                Some(name) => Agent::parse(name, opts.beta, opts.sigma)?,
                None => return Err(Failure::Usage("`run` needs --agent".into())),
            };
            let env_name = opts.env.as_deref().unwrap_or("problem1");
            let mut curves = Vec::new();
            for n in sizes(opts, vec![10])? {
                let env = match env_name {
                    "problem1" => EnvSpec::Problem1 {
                        num_actions: n,
                        epsilon: opts.epsilon.unwrap_or(1e-3),
                        p_plus: 0.5,
                    },
                    "deepsea" => EnvSpec::DeepSea(DeepSeaSpec::new(n)),
                    other => return Err(Failure::Usage(format!("unknown env `{other}`"))),
                };
                let config = ExperimentConfig {
                    experiment: "run".into(),
                    agent,
                    env,
                    episodes: opts.episodes.unwrap_or(100),
                    prior_draws: opts.prior_draws.unwrap_or(1),
                    seeds: opts.seeds.unwrap_or(1),
                    master_seed: seed,
                };
                let result = bayes_regret(&config, true)?;
                let s = &result.summary;
                eprintln!(
                    "{} {} N={}: {} = {:.4} ± {:.4}",
                    s.agent, s.env, s.param_n, s.metric, s.value, s.stderr
                );
                for curve in &result.curves {
                    curves.extend(config.curve_rows(curve));
                }
            }
            emit(opts.out.as_deref(), &curve_csv(&curves))
        }
        Command::BanditTable => {
            let n = sizes(opts, log_spaced_sizes(3, 1000, 16))?;
            let table = bandit_table(&n, opts.epsilon.unwrap_or(1e-3), 0.5)?;
            emit(
                opts.out.as_deref(),
                &summary_csv(&bandit_table_rows(&table)),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = merge(cli.opts).and_then(|opts| {
        let threads = opts.parallelism.unwrap_or(0);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        pool.install(|| run(cli.command, &opts))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
