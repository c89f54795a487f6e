//! Monte-Carlo checks of the K-learning guarantees: the value bound with the
//! KL penalty against the posterior probability of optimality, and the
//! optimism chain `K >= beta^-1 G^Q(beta) >= E Q*`.

use rand::Rng;

use crate::agents::{boltzmann_policy, k_values, KLearningParams};
use crate::mdp::{greedy_action, optimal_values, TIE_TOLERANCE};
use crate::numeric::MeanAccumulator;
use crate::posterior::Posterior;
use crate::{Error, Result};

const SLACK_STDERRS: f64 = 3.0;

/// Above this `beta * range(Q*)` the Monte-Carlo CGF is dominated by a few
/// samples and its standard error is unreliable.
pub const CGF_RANGE_WARNING: f64 = 20.0;

/// `KL(p || q) = sum_i p_i log(p_i / q_i)` with `0 log 0 = 0`; infinite when
/// `q` misses mass that `p` has.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch("KL arguments differ in length".into()));
    }
    for v in [p, q] {
        let sum: f64 = v.iter().sum();
        if v.iter().any(|&x| !(0.0..=1.0 + 1e-12).contains(&x)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(
                "KL arguments must be probability vectors".into(),
            ));
        }
    }
    let mut kl = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Ok(f64::INFINITY);
        }
        kl += pi * (pi / qi).ln();
    }
    Ok(kl.max(0.0))
}

/// Posterior-sample statistics shared by both checks.
struct SampleStats {
    optimal_counts: Vec<u64>,
    values: Vec<MeanAccumulator>,
    q_samples: Vec<Vec<f64>>,
    samples: usize,
}

fn sample_stats<B: Posterior, R: Rng + ?Sized>(
    belief: &B,
    samples: usize,
    keep_q: bool,
    rng: &mut R,
) -> Result<SampleStats> {
    let (ns, na, horizon) = (belief.num_states(), belief.num_actions(), belief.horizon());
    let mut optimal_counts = vec![0; horizon * ns * na];
    let mut values = vec![MeanAccumulator::new(); horizon * ns];
    let mut q_samples = if keep_q {
        vec![Vec::with_capacity(samples); horizon * ns * na]
    } else {
        Vec::new()
    };
    for _ in 0..samples {
        let (q, v) = optimal_values(&belief.sample_mdp(rng))?;
        for h in 0..horizon {
            for s in 0..ns {
                values[h * ns + s].push(v.get(h, s));
                let a = greedy_action(q.row(h, s), TIE_TOLERANCE);
                optimal_counts[(h * ns + s) * na + a] += 1;
                if keep_q {
                    for (a, &qa) in q.row(h, s).iter().enumerate() {
                        q_samples[(h * ns + s) * na + a].push(qa);
                    }
                }
            }
        }
    }
    Ok(SampleStats {
        optimal_counts,
        values,
        q_samples,
        samples,
    })
}

/// One `(h, s)` entry of [`theorem1_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Entry {
    pub step: usize,
    pub state: usize,
    /// `V^K_h(s)`.
    pub lhs: f64,
    /// Monte-Carlo `E V*_h(s)`.
    pub expected_value: f64,
    /// `KL(P(O_h(s)) || pi^K_h(s))` with the estimated optimality probabilities.
    pub kl: f64,
    /// `E V*_h(s) + kl / beta`.
    pub rhs: f64,
    /// Combined standard error of `rhs`.
    pub stderr: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Report {
    pub beta: f64,
    pub entries: Vec<Theorem1Entry>,
    pub pass: bool,
}

impl Theorem1Report {
    pub fn worst_margin(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.margin + SLACK_STDERRS * e.stderr)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks `V^K_h(s) >= E V*_h(s) + beta^-1 KL(P(O_h(s)) || pi^K_h(s))` at
/// every `(h, s)`, with K-values computed for episode 1 (so `beta_1 = beta`).
///
/// `P(O)` and `E V*` come from `mc_samples` posterior samples; each entry
/// passes if the margin is at least minus three combined standard errors.
pub fn theorem1_check<B: Posterior, R: Rng + ?Sized>(
    belief: &B,
    params: &KLearningParams,
    mc_samples: usize,
    rng: &mut R,
) -> Result<Theorem1Report> {
    if mc_samples < 1000 {
        return Err(Error::InvalidParameter(
            "the bound check needs at least 1000 samples".into(),
        ));
    }
    let beta = params.beta;
    let (k, vk) = k_values(belief, 1, params)?;
    let policy = boltzmann_policy(&k, beta);
    let stats = sample_stats(belief, mc_samples, false, rng)?;
    let (ns, na) = (belief.num_states(), belief.num_actions());
    let n = stats.samples as f64;
    let mut entries = Vec::new();
    for h in 0..belief.horizon() {
        for s in 0..ns {
            let start = (h * ns + s) * na;
            let p: Vec<f64> = stats.optimal_counts[start..start + na]
                .iter()
                .map(|&c| c as f64 / n)
                .collect();
            let pi = policy.row(h, s);
            let kl = kl_divergence(&p, pi)?;
            if !kl.is_finite() {
                return Err(Error::Degenerate(format!(
                    "K-learning policy has zero mass on a possibly optimal action at ({h}, {s})"
                )));
            }
            // Delta method: the gradient of KL in p is log(p/q) + 1 and the
            // constant cancels because p stays on the simplex.
            let logs: Vec<f64> = p
                .iter()
                .zip(pi)
                .map(|(&pa, &qa)| if pa > 0.0 { (pa / qa).ln() } else { 0.0 })
                .collect();
            let m1: f64 = p.iter().zip(&logs).map(|(pa, l)| pa * l).sum();
            let m2: f64 = p.iter().zip(&logs).map(|(pa, l)| pa * l * l).sum();
            let kl_var = ((m2 - m1 * m1) / n).max(0.0);
            let value = &stats.values[h * ns + s];
            let stderr = (value.stderr().powi(2) + kl_var / (beta * beta)).sqrt();
            let lhs = vk.get(h, s);
            let rhs = value.mean() + kl / beta;
            let margin = lhs - rhs;
            entries.push(Theorem1Entry {
                step: h,
                state: s,
                lhs,
                expected_value: value.mean(),
                kl,
                rhs,
                stderr,
                margin,
                pass: margin >= -SLACK_STDERRS * stderr,
            });
        }
    }
    let pass = entries.iter().all(|e| e.pass);
    Ok(Theorem1Report {
        beta,
        entries,
        pass,
    })
}

/// One `(h, s, a)` entry of [`optimism_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimismEntry {
    pub step: usize,
    pub state: usize,
    pub action: usize,
    pub k_value: f64,
    /// Monte-Carlo `beta_l^-1 log E exp(beta_l Q*)`.
    pub cgf_value: f64,
    pub cgf_stderr: f64,
    /// Monte-Carlo `E Q*`.
    pub mean_q: f64,
    pub mean_stderr: f64,
    pub upper_pass: bool,
    pub lower_pass: bool,
    /// `beta_l * range(Q*)` exceeded [`CGF_RANGE_WARNING`].
    pub unreliable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimismReport {
    pub beta_l: f64,
    pub entries: Vec<OptimismEntry>,
    pub pass: bool,
    pub warnings: usize,
}

/// Checks `K_h(s,a) >= beta_l^-1 G^Q_h(s,a,beta_l) >= E Q*_h(s,a)` with
/// Monte-Carlo estimates of the CGF and the mean.
pub fn optimism_check<B: Posterior, R: Rng + ?Sized>(
    belief: &B,
    episode: usize,
    params: &KLearningParams,
    mc_samples: usize,
    rng: &mut R,
) -> Result<OptimismReport> {
    if mc_samples < 1000 {
        return Err(Error::InvalidParameter(
            "the optimism check needs at least 1000 samples".into(),
        ));
    }
    let (k, _) = k_values(belief, episode, params)?;
    let beta = params.beta_at(episode);
    let stats = sample_stats(belief, mc_samples, true, rng)?;
    let (ns, na) = (belief.num_states(), belief.num_actions());
    let mut entries = Vec::new();
    for h in 0..belief.horizon() {
        for s in 0..ns {
            for a in 0..na {
                let qs = &stats.q_samples[(h * ns + s) * na + a];
                let max = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = qs.iter().copied().fold(f64::INFINITY, f64::min);
                let weights: MeanAccumulator =
                    qs.iter().map(|&q| (beta * (q - max)).exp()).collect();
                let cgf_value = max + weights.mean().ln() / beta;
                let cgf_stderr = weights.stderr() / (beta * weights.mean());
                let mean: MeanAccumulator = qs.iter().copied().collect();
                let k_value = k.get(h, s, a);
                entries.push(OptimismEntry {
                    step: h,
                    state: s,
                    action: a,
                    k_value,
                    cgf_value,
                    cgf_stderr,
                    mean_q: mean.mean(),
                    mean_stderr: mean.stderr(),
                    upper_pass: k_value >= cgf_value - SLACK_STDERRS * cgf_stderr,
                    lower_pass: cgf_value >= mean.mean() - 1e-9 * (1.0 + mean.mean().abs()),
                    unreliable: beta * (max - min) > CGF_RANGE_WARNING,
                });
            }
        }
    }
    let pass = entries.iter().all(|e| e.upper_pass && e.lower_pass);
    let warnings = entries.iter().filter(|e| e.unreliable).count();
    Ok(OptimismReport {
        beta_l: beta,
        entries,
        pass,
        warnings,
    })
}
