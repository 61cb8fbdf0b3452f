//! The UCB decision loop and the clairvoyant benchmark.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::environments::RoundInstance;
use crate::error::{Error, Result};
use crate::gp::{GpState, PosteriorSummary, SparseGpState};
use crate::kernels::{Context, KernelSpec};
use crate::oracles::{Oracle, SuperArm};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Exact GP posterior.
    #[default]
    Oclok,
    /// Sparse GP posterior through uniformly resampled inducing points.
    Soclok,
    /// Oracle on the true expected outcomes.
    Benchmark,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Oclok => "oclok",
            Algorithm::Soclok => "soclok",
            Algorithm::Benchmark => "benchmark",
        }
    }
}

/// `[policy]` block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Global bound `M` on the number of arms per round.
    pub max_arms: usize,
    /// Budget `K`.
    pub budget: usize,
    /// Fixed `beta` for every round instead of the schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_override: Option<f64>,
    #[serde(default)]
    pub algorithm: Algorithm,
}

fn default_delta() -> f64 {
    0.05
}

impl PolicyConfig {
    pub fn new(max_arms: usize, budget: usize) -> Self {
        PolicyConfig {
            delta: default_delta(),
            max_arms,
            budget,
            beta_override: None,
            algorithm: Algorithm::Oclok,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config("policy.delta", format!("must lie in (0, 1), got {}", self.delta)));
        }
        if self.budget == 0 {
            return Err(Error::config("policy.budget", "must be at least 1"));
        }
        if self.max_arms == 0 {
            return Err(Error::config("policy.max_arms", "must be at least 1"));
        }
        if let Some(b) = self.beta_override {
            if b < 0.0 || !b.is_finite() {
                return Err(Error::config("policy.beta_override", "must be a non-negative finite number"));
            }
        }
        Ok(())
    }
}

/// `beta_t = 2 log(M π² t² / (3 δ))`, or the override.
pub fn beta(t: usize, cfg: &PolicyConfig) -> f64 {
    if let Some(b) = cfg.beta_override {
        return b;
    }
    let t = t.max(1) as f64;
    2.0 * (cfg.max_arms as f64 * PI * PI * t * t / (3.0 * cfg.delta)).ln()
}

/// Anything that can produce a posterior at a context.
pub trait PosteriorModel {
    fn posterior_at(&self, x: &[f64]) -> Result<PosteriorSummary>;
}

impl PosteriorModel for GpState {
    fn posterior_at(&self, x: &[f64]) -> Result<PosteriorSummary> {
        self.posterior(x)
    }
}

impl PosteriorModel for SparseGpState {
    fn posterior_at(&self, x: &[f64]) -> Result<PosteriorSummary> {
        self.posterior(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmIndex {
    pub index: f64,
    pub mean: f64,
    pub stddev: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexVector {
    pub beta: f64,
    pub entries: Vec<ArmIndex>,
}

impl IndexVector {
    pub fn indices(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.index).collect()
    }
}

/// `mu(x) + sqrt(beta_t) sigma(x)` for every available context, from the
/// posterior before this round's feedback.
pub fn compute_indices<'a, M, I>(model: &M, available: I, t: usize, cfg: &PolicyConfig) -> Result<IndexVector>
where
    M: PosteriorModel + ?Sized,
    I: IntoIterator<Item = &'a Context>,
{
    let beta = beta(t, cfg);
    let root = beta.sqrt();
    let entries = available
        .into_iter()
        .map(|x| {
            let p = model.posterior_at(x)?;
            let stddev = p.stddev();
            Ok(ArmIndex {
                index: p.mean + root * stddev,
                mean: p.mean,
                stddev,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if entries.is_empty() {
        return Err(Error::Input("no available arms".into()));
    }
    Ok(IndexVector { beta, entries })
}

/// Number of arms whose true expected outcome lies outside
/// `mu ± sqrt(beta) sigma`.
pub fn confidence_violations(indices: &IndexVector, truth: &[f64]) -> usize {
    let root = indices.beta.sqrt();
    indices
        .entries
        .iter()
        .zip(truth)
        .filter(|(e, &f)| (f - e.mean).abs() > root * e.stddev)
        .count()
}

/// The clairvoyant choice: the oracle applied to the true expected outcomes.
pub fn benchmark_round(instance: &RoundInstance, oracle: &Oracle) -> Result<SuperArm> {
    let sel = oracle.solve(&instance.feasibility, instance.expected_outcomes())?;
    Oracle::check_feasible(&instance.feasibility, instance.num_arms(), &sel.super_arm)?;
    Ok(sel.super_arm)
}

/// `[gp]` settings the policy needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSettings {
    pub kernel: KernelSpec,
    pub noise_variance: f64,
    pub sparse: bool,
    pub num_inducing: usize,
    pub reseed_each_round: bool,
}

#[derive(Clone, Debug)]
enum Model {
    Exact(GpState),
    Sparse(Box<SparseGpState>),
    Clairvoyant,
}

/// Per-round record.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundTraceEntry {
    pub round: usize,
    pub m_t: usize,
    pub selected: Vec<usize>,
    pub reward_realized: f64,
    pub reward_expected: f64,
    pub opt_expected: f64,
    pub benchmark_expected: f64,
    pub beta: f64,
    pub wall_ms: Option<f64>,
    /// Available arms whose `f` fell outside the confidence band this round.
    pub confidence_violations: usize,
    /// Index values clamped into `[0, 1]` by a coverage oracle.
    pub clamped_values: usize,
}

/// Policy state threaded through a run.
#[derive(Clone, Debug)]
pub struct Policy {
    cfg: PolicyConfig,
    oracle: Oracle,
    model: Model,
    t: usize,
}

impl Policy {
    /// `inducing_rng` is only used by the sparse variant.
    pub fn new(cfg: PolicyConfig, settings: &ModelSettings, oracle: Oracle, inducing_rng: ChaCha8Rng) -> Result<Self> {
        cfg.validate()?;
        let model = match (cfg.algorithm, settings.sparse) {
            (Algorithm::Benchmark, _) => Model::Clairvoyant,
            (Algorithm::Soclok, _) | (Algorithm::Oclok, true) => Model::Sparse(Box::new(SparseGpState::new(
                settings.kernel,
                settings.noise_variance,
                settings.num_inducing,
                settings.reseed_each_round,
                inducing_rng,
            )?)),
            (Algorithm::Oclok, false) => Model::Exact(GpState::new(settings.kernel, settings.noise_variance)?),
        };
        Ok(Policy {
            cfg,
            oracle,
            model,
            t: 0,
        })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.cfg
    }

    pub fn round(&self) -> usize {
        self.t
    }

    /// Number of observations the posterior has absorbed.
    pub fn history_len(&self) -> usize {
        match &self.model {
            Model::Exact(gp) => gp.len(),
            Model::Sparse(gp) => gp.len(),
            Model::Clairvoyant => 0,
        }
    }

    pub fn exact_state(&self) -> Option<&GpState> {
        match &self.model {
            Model::Exact(gp) => Some(gp),
            _ => None,
        }
    }

    /// Indices for the arms of `instance` at the upcoming round.
    pub fn indices(&self, instance: &RoundInstance) -> Result<Option<IndexVector>> {
        let t = self.t + 1;
        Ok(match &self.model {
            Model::Exact(gp) => Some(compute_indices(gp, instance.contexts(), t, &self.cfg)?),
            Model::Sparse(gp) => Some(compute_indices(gp.as_ref(), instance.contexts(), t, &self.cfg)?),
            Model::Clairvoyant => None,
        })
    }

    /// One round: index, select, observe, update.
    pub fn run_round<R: Rng + ?Sized>(
        &mut self,
        instance: &RoundInstance,
        noise_rng: &mut R,
    ) -> Result<(SuperArm, RoundTraceEntry)> {
        if instance.num_arms() == 0 {
            return Err(Error::Input("round has no arms".into()));
        }
        if instance.num_arms() > self.cfg.max_arms {
            return Err(Error::config(
                "policy.max_arms",
                format!("round {} has {} arms, above the bound {}", instance.t, instance.num_arms(), self.cfg.max_arms),
            ));
        }
        let indices = self.indices(instance)?;
        self.t += 1;
        let beta = beta(self.t, &self.cfg);

        let (selected, clamped, violations) = match &indices {
            Some(iv) => {
                let sel = self.oracle.solve(&instance.feasibility, &iv.indices())?;
                let v = confidence_violations(iv, instance.expected_outcomes());
                (sel.super_arm, sel.clamped, v)
            }
            None => (benchmark_round(instance, &self.oracle)?, 0, 0),
        };
        Oracle::check_feasible(&instance.feasibility, instance.num_arms(), &selected)?;

        let outcomes = instance.sample_outcomes(&selected.arms, noise_rng);
        if !selected.is_empty() {
            let contexts: Vec<Context> = selected.arms.iter().map(|&a| instance.arms[a].context.clone()).collect();
            self.model = match std::mem::replace(&mut self.model, Model::Clairvoyant) {
                Model::Exact(gp) => Model::Exact(gp.batch_update(&contexts, &outcomes)?),
                Model::Sparse(gp) => Model::Sparse(Box::new(gp.batch_update(&contexts, &outcomes)?)),
                Model::Clairvoyant => Model::Clairvoyant,
            };
        }

        let bench = benchmark_round(instance, &self.oracle)?;
        let entry = RoundTraceEntry {
            round: self.t,
            m_t: instance.num_arms(),
            reward_realized: instance.realized_reward(&selected, &outcomes)?,
            reward_expected: instance.expected_reward(&selected)?,
            opt_expected: instance.optimal_expected_reward()?,
            benchmark_expected: instance.expected_reward(&bench)?,
            beta,
            wall_ms: None,
            confidence_violations: violations,
            clamped_values: clamped,
            selected: selected.arms.clone(),
        };
        Ok((selected, entry))
    }
}
