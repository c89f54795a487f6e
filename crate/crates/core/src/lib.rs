//! Bayesian exploration for finite-horizon tabular MDPs.
//!
//! Three approximations to the Bayes-optimal learner are implemented side by
//! side so they can be compared on the same environments:
//!
//! * model-based Thompson sampling ([`agents::thompson_policy`]),
//! * soft Q-learning on posterior-mean models ([`agents::soft_q_policy`]),
//! * K-learning, both in its tabular form ([`agents::k_policy`]) and in the
//!   analytic bandit form driven by per-arm cumulant generating functions
//!   ([`agents::bandit_k_policy`]).
//!
//! [`mdp`] holds exact planning and policy evaluation, [`posterior`] the
//! conjugate belief states, [`environments`] the benchmark constructors and
//! [`harness`] the regret experiments and bound checks.
// `!(x > 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod environments;
mod error;
pub mod harness;
pub mod mdp;
pub mod numeric;
pub mod posterior;

pub use error::{Error, Result};
pub use mdp::{Policy, QTable, RewardModel, TabularMdp, Transition, ValueTable};
pub use posterior::{BeliefState, Posterior, TwoPointBelief};
