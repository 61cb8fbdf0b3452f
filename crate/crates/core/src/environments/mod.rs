//! Seeded generators of volatile arm sets with hidden expected outcomes.
//!
//! Each generator is an infinite iterator of [`RoundInstance`]s driven by
//! its own environment random stream, so a run of `T` rounds is always a
//! prefix of a longer run with the same seed.

mod crowdsourcing;
mod gp_synthetic;
mod movie;

pub use crowdsourcing::{crowdsourcing_outcome, CrowdsourcingEnv};
pub use gp_synthetic::GpSyntheticEnv;
pub use movie::{edge_activation, MovieCoverageEnv};

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kernels::Context;
use crate::oracles::{
    coverage_value, exhaustive_coverage_oracle, greedy_coverage_oracle, top_k_oracle, FeasibilitySpec,
    SuperArm, EXHAUSTIVE_LIMIT,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum OutcomeModel {
    /// `r = f(x) + N(0, std²)`.
    Gaussian { std: f64 },
    /// `r ~ Bernoulli(f(x))`.
    Bernoulli,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewardModel {
    /// `u = Σ r_i`.
    Sum,
    /// `u = log(1 + Σ r_i)`.
    LogSum,
    /// Number of right nodes reached by at least one activated selected edge.
    Coverage,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arm {
    pub id: usize,
    pub context: Context,
}

/// One round: the available arms, the feasible super arms and the hidden
/// expected outcome of every arm.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundInstance {
    pub t: usize,
    pub arms: Vec<Arm>,
    pub feasibility: FeasibilitySpec,
    pub outcome: OutcomeModel,
    pub reward: RewardModel,
    truth: Vec<f64>,
}

impl RoundInstance {
    pub fn new(
        t: usize,
        contexts: Vec<Context>,
        truth: Vec<f64>,
        feasibility: FeasibilitySpec,
        outcome: OutcomeModel,
        reward: RewardModel,
    ) -> Result<Self> {
        if contexts.len() != truth.len() {
            return Err(Error::Input(format!(
                "{} contexts but {} expected outcomes",
                contexts.len(),
                truth.len()
            )));
        }
        if contexts.is_empty() {
            return Err(Error::Input("a round needs at least one arm".into()));
        }
        let arms = contexts
            .into_iter()
            .enumerate()
            .map(|(id, context)| Arm { id, context })
            .collect();
        Ok(RoundInstance {
            t,
            arms,
            feasibility,
            outcome,
            reward,
            truth,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn contexts(&self) -> impl Iterator<Item = &Context> {
        self.arms.iter().map(|a| &a.context)
    }

    /// The hidden expected outcomes `f(x)`. Only the clairvoyant benchmark,
    /// the regret accounting and diagnostics may look at these.
    pub fn expected_outcomes(&self) -> &[f64] {
        &self.truth
    }

    /// Draws semi-bandit feedback for `arms`.
    pub fn sample_outcomes<R: Rng + ?Sized>(&self, arms: &[usize], rng: &mut R) -> Vec<f64> {
        arms.iter()
            .map(|&a| {
                let f = self.truth[a];
                match self.outcome {
                    OutcomeModel::Gaussian { std } => {
                        let z: f64 = StandardNormal.sample(rng);
                        f + std * z
                    }
                    OutcomeModel::Bernoulli => {
                        if rng.random::<f64>() < f.clamp(0.0, 1.0) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                }
            })
            .collect()
    }

    /// `u(values_S)` where `values` holds one value per arm of the round.
    pub fn reward_under(&self, values: &[f64], arm: &SuperArm) -> Result<f64> {
        Ok(match (&self.reward, &self.feasibility) {
            (RewardModel::Sum, _) => arm.arms.iter().map(|&a| values[a]).sum(),
            (RewardModel::LogSum, _) => log_sum(arm.arms.iter().map(|&a| values[a]).sum()),
            (RewardModel::Coverage, FeasibilitySpec::CoverageLeftNodes { graph, .. }) => {
                coverage_value(values, &arm.seeds, graph)?.0
            }
            (RewardModel::Coverage, _) => {
                return Err(Error::Internal("coverage reward needs a coverage feasibility".into()))
            }
        })
    }

    /// `u(f(x_S))`, the expected reward of a super arm.
    pub fn expected_reward(&self, arm: &SuperArm) -> Result<f64> {
        self.reward_under(&self.truth, arm)
    }

    /// Reward computed from observed outcomes of `arm.arms` (same order).
    pub fn realized_reward(&self, arm: &SuperArm, outcomes: &[f64]) -> Result<f64> {
        if outcomes.len() != arm.arms.len() {
            return Err(Error::Input("one outcome per selected arm is required".into()));
        }
        Ok(match (&self.reward, &self.feasibility) {
            (RewardModel::Sum, _) => outcomes.iter().sum(),
            (RewardModel::LogSum, _) => log_sum(outcomes.iter().sum()),
            (RewardModel::Coverage, FeasibilitySpec::CoverageLeftNodes { graph, .. }) => {
                let mut hit = vec![false; graph.num_right()];
                for (&e, &r) in arm.arms.iter().zip(outcomes) {
                    if r > 0.5 {
                        hit[graph.edges()[e].1] = true;
                    }
                }
                hit.iter().filter(|&&h| h).count() as f64
            }
            (RewardModel::Coverage, _) => {
                return Err(Error::Internal("coverage reward needs a coverage feasibility".into()))
            }
        })
    }

    /// `opt(f_t)`: exact for top-K problems and for coverage problems small
    /// enough to enumerate; otherwise the greedy value.
    pub fn optimal_expected_reward(&self) -> Result<f64> {
        let arm = match &self.feasibility {
            FeasibilitySpec::TopK { budget } => top_k_oracle(&self.truth, *budget)?,
            FeasibilitySpec::CoverageLeftNodes { budget, graph } => {
                match exhaustive_coverage_oracle(&self.truth, *budget, graph, EXHAUSTIVE_LIMIT) {
                    Ok(sel) => sel.super_arm,
                    Err(Error::Size(_)) => greedy_coverage_oracle(&self.truth, *budget, graph)?.super_arm,
                    Err(e) => return Err(e),
                }
            }
        };
        self.expected_reward(&arm)
    }

    /// Feeds the round's observable structure and hidden truth into `hasher`.
    pub fn hash_into(&self, hasher: &mut Sha256) {
        hasher.update((self.t as u64).to_le_bytes());
        hasher.update((self.arms.len() as u64).to_le_bytes());
        for (arm, f) in self.arms.iter().zip(&self.truth) {
            for v in arm.context.iter() {
                hasher.update(v.to_bits().to_le_bytes());
            }
            hasher.update(f.to_bits().to_le_bytes());
        }
        hasher.update((self.feasibility.budget() as u64).to_le_bytes());
        if let FeasibilitySpec::CoverageLeftNodes { graph, .. } = &self.feasibility {
            hasher.update((graph.num_left() as u64).to_le_bytes());
            hasher.update((graph.num_right() as u64).to_le_bytes());
            for &(l, r) in graph.edges() {
                hasher.update((l as u64).to_le_bytes());
                hasher.update((r as u64).to_le_bytes());
            }
        }
    }
}

/// `log(1 + s)`, with `1 + s` floored at the smallest positive normal so
/// that a very unlucky noisy sum cannot produce NaN.
fn log_sum(s: f64) -> f64 {
    (1.0 + s).max(f64::MIN_POSITIVE).ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    GpSynthetic,
    Crowdsourcing,
    MovieCoverage,
}

/// Environment configuration (`[env]` block).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "EnvSpecFile")]
pub struct EnvSpec {
    pub kind: EnvKind,
    /// Context dimension `D`; defaults to 3, or 1 for the movie environment.
    pub dim: usize,
    /// Poisson mean of the number of arms per round.
    pub mean_arms: f64,
    /// Horizon `T`.
    pub horizon: usize,
    /// Budget `K`.
    pub budget: usize,
    /// Standard deviation of Gaussian observation noise.
    pub noise_std: f64,
    /// Lengthscale of the squared-exponential prior `f` is drawn from.
    pub lengthscale: f64,
    /// Number of fixed contexts on which `f` is pre-sampled.
    pub grid_size: usize,
    pub mean_left: f64,
    pub mean_right: f64,
    /// Probability that a given left/right pair is joined by an edge.
    pub edge_probability: f64,
    /// Beta(a, b) shape of edge contexts; (1, 1) is uniform.
    pub edge_context_a: f64,
    pub edge_context_b: f64,
}

/// `[env]` as written in a config file, where `dim` may be omitted.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvSpecFile {
    kind: EnvKind,
    dim: Option<usize>,
    #[serde(default = "defaults::mean_arms")]
    mean_arms: f64,
    horizon: usize,
    budget: usize,
    #[serde(default = "defaults::noise_std")]
    noise_std: f64,
    #[serde(default = "defaults::lengthscale")]
    lengthscale: f64,
    #[serde(default = "defaults::grid_size")]
    grid_size: usize,
    #[serde(default = "defaults::mean_left")]
    mean_left: f64,
    #[serde(default = "defaults::mean_right")]
    mean_right: f64,
    #[serde(default = "defaults::edge_probability")]
    edge_probability: f64,
    #[serde(default = "defaults::one")]
    edge_context_a: f64,
    #[serde(default = "defaults::one")]
    edge_context_b: f64,
}

impl From<EnvSpecFile> for EnvSpec {
    fn from(f: EnvSpecFile) -> Self {
        EnvSpec {
            kind: f.kind,
            dim: f.dim.unwrap_or_else(|| defaults::dim_for(f.kind)),
            mean_arms: f.mean_arms,
            horizon: f.horizon,
            budget: f.budget,
            noise_std: f.noise_std,
            lengthscale: f.lengthscale,
            grid_size: f.grid_size,
            mean_left: f.mean_left,
            mean_right: f.mean_right,
            edge_probability: f.edge_probability,
            edge_context_a: f.edge_context_a,
            edge_context_b: f.edge_context_b,
        }
    }
}

mod defaults {
    use super::EnvKind;

    pub fn dim_for(kind: EnvKind) -> usize {
        match kind {
            EnvKind::MovieCoverage => 1,
            _ => 3,
        }
    }
    pub fn mean_arms() -> f64 {
        20.0
    }
    pub fn noise_std() -> f64 {
        0.1
    }
    pub fn lengthscale() -> f64 {
        1.0
    }
    pub fn grid_size() -> usize {
        1500
    }
    pub fn mean_left() -> f64 {
        15.0
    }
    pub fn mean_right() -> f64 {
        40.0
    }
    pub fn edge_probability() -> f64 {
        0.15
    }
    pub fn one() -> f64 {
        1.0
    }
}

impl EnvSpec {
    pub fn new(kind: EnvKind, horizon: usize, budget: usize) -> Self {
        EnvSpec {
            kind,
            dim: defaults::dim_for(kind),
            mean_arms: defaults::mean_arms(),
            horizon,
            budget,
            noise_std: defaults::noise_std(),
            lengthscale: defaults::lengthscale(),
            grid_size: defaults::grid_size(),
            mean_left: defaults::mean_left(),
            mean_right: defaults::mean_right(),
            edge_probability: defaults::edge_probability(),
            edge_context_a: defaults::one(),
            edge_context_b: defaults::one(),
        }
    }

    /// Checks every field against `max_arms`, the global bound `M`.
    pub fn validate(&self, max_arms: usize) -> Result<()> {
        fn positive(path: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(path, "must be a positive finite number"))
            }
        }
        if self.horizon == 0 {
            return Err(Error::config("env.horizon", "must be at least 1"));
        }
        if self.budget == 0 {
            return Err(Error::config("env.budget", "must be at least 1"));
        }
        if self.dim == 0 {
            return Err(Error::config("env.dim", "must be at least 1"));
        }
        match self.kind {
            EnvKind::GpSynthetic => {
                positive("env.mean_arms", self.mean_arms)?;
                positive("env.noise_std", self.noise_std)?;
                positive("env.lengthscale", self.lengthscale)?;
                if self.grid_size < max_arms {
                    return Err(Error::config(
                        "env.grid_size",
                        format!("must be at least policy.max_arms = {max_arms} so a round can draw distinct grid points"),
                    ));
                }
            }
            EnvKind::Crowdsourcing => {
                positive("env.mean_arms", self.mean_arms)?;
                positive("env.noise_std", self.noise_std)?;
                if self.dim != 3 {
                    return Err(Error::config("env.dim", "the crowdsourcing environment has 3-dimensional contexts"));
                }
            }
            EnvKind::MovieCoverage => {
                positive("env.mean_left", self.mean_left)?;
                positive("env.mean_right", self.mean_right)?;
                positive("env.edge_context_a", self.edge_context_a)?;
                positive("env.edge_context_b", self.edge_context_b)?;
                if !(self.edge_probability > 0.0 && self.edge_probability <= 1.0) {
                    return Err(Error::config("env.edge_probability", "must lie in (0, 1]"));
                }
                if self.dim != 1 {
                    return Err(Error::config("env.dim", "the movie coverage environment has 1-dimensional contexts"));
                }
                if max_arms < self.budget {
                    return Err(Error::config(
                        "policy.max_arms",
                        "must be at least env.budget so every chosen left node keeps an edge",
                    ));
                }
            }
        }
        Ok(())
    }

    /// `α` of the oracle used for this environment.
    pub fn alpha(&self) -> f64 {
        match self.kind {
            EnvKind::MovieCoverage => 1.0 - (-1.0f64).exp(),
            _ => 1.0,
        }
    }
}

/// Any of the supported generators.
#[derive(Debug)]
pub enum Environment {
    GpSynthetic(GpSyntheticEnv),
    Crowdsourcing(CrowdsourcingEnv),
    MovieCoverage(MovieCoverageEnv),
}

impl Environment {
    pub fn new(spec: &EnvSpec, max_arms: usize, seed: u64) -> Result<Self> {
        spec.validate(max_arms)?;
        Ok(match spec.kind {
            EnvKind::GpSynthetic => Environment::GpSynthetic(GpSyntheticEnv::new(spec, max_arms, seed)?),
            EnvKind::Crowdsourcing => Environment::Crowdsourcing(CrowdsourcingEnv::new(spec, max_arms, seed)),
            EnvKind::MovieCoverage => Environment::MovieCoverage(MovieCoverageEnv::new(spec, max_arms, seed)?),
        })
    }

    /// Number of times a Poisson draw (or edge count) was clamped into range.
    pub fn clamp_events(&self) -> usize {
        match self {
            Environment::GpSynthetic(e) => e.clamp_events(),
            Environment::Crowdsourcing(e) => e.clamp_events(),
            Environment::MovieCoverage(e) => e.clamp_events(),
        }
    }
}

impl Iterator for Environment {
    type Item = RoundInstance;

    fn next(&mut self) -> Option<RoundInstance> {
        match self {
            Environment::GpSynthetic(e) => e.next(),
            Environment::Crowdsourcing(e) => e.next(),
            Environment::MovieCoverage(e) => e.next(),
        }
    }
}

/// Poisson draw clamped into `[lo, hi]`; the flag reports clamping.
pub(crate) fn clamped_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64, lo: usize, hi: usize) -> (usize, bool) {
    let raw: f64 = Poisson::new(mean).expect("validated positive mean").sample(rng);
    let raw = raw as usize;
    let v = raw.clamp(lo, hi);
    (v, v != raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::BipartiteGraph;

    fn ctx(v: f64) -> Context {
        Context::new(vec![v])
    }

    #[test]
    fn rewards_by_model() {
        let inst = RoundInstance::new(
            1,
            vec![ctx(0.1), ctx(0.2), ctx(0.3)],
            vec![0.5, 1.0, 1.5],
            FeasibilitySpec::TopK { budget: 2 },
            OutcomeModel::Gaussian { std: 0.1 },
            RewardModel::Sum,
        )
        .unwrap();
        let sa = SuperArm { arms: vec![1, 2], seeds: vec![] };
        assert_eq!(inst.expected_reward(&sa).unwrap(), 2.5);
        assert_eq!(inst.optimal_expected_reward().unwrap(), 2.5);
        assert_eq!(inst.realized_reward(&sa, &[1.0, 2.0]).unwrap(), 3.0);

        let mut log = inst.clone();
        log.reward = RewardModel::LogSum;
        assert!((log.expected_reward(&sa).unwrap() - 3.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn coverage_realized_counts_right_nodes() {
        let g = BipartiteGraph::new(2, 2, vec![(0, 0), (0, 1), (1, 1)]).unwrap();
        let inst = RoundInstance::new(
            1,
            vec![ctx(0.5), ctx(0.5), ctx(0.5)],
            vec![1.0, 0.5, 0.5],
            FeasibilitySpec::CoverageLeftNodes { budget: 1, graph: g },
            OutcomeModel::Bernoulli,
            RewardModel::Coverage,
        )
        .unwrap();
        let sa = SuperArm { arms: vec![0, 1], seeds: vec![0] };
        assert_eq!(inst.realized_reward(&sa, &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(inst.realized_reward(&sa, &[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(inst.expected_reward(&sa).unwrap(), 1.5);
        assert_eq!(inst.optimal_expected_reward().unwrap(), 1.5);
    }

    #[test]
    fn validation_names_fields() {
        let mut spec = EnvSpec::new(EnvKind::Crowdsourcing, 10, 5);
        spec.dim = 2;
        match spec.validate(50) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "env.dim"),
            other => panic!("{other:?}"),
        }
        let mut spec = EnvSpec::new(EnvKind::GpSynthetic, 10, 3);
        spec.grid_size = 10;
        match spec.validate(50) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "env.grid_size"),
            other => panic!("{other:?}"),
        }
    }
}
