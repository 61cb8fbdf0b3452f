use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{clamped_poisson, EnvSpec, OutcomeModel, RewardModel, RoundInstance};
use crate::kernels::Context;
use crate::oracles::FeasibilitySpec;
use crate::rng::{substream, Stream};

/// Standard deviation of the distance-quality density.
const DISTANCE_SD: f64 = 0.4;

/// Expected worker quality for context `(distance, difficulty, battery)`:
/// `A g(distance) sqrt(difficulty * battery)` with `g` the N(0, 0.4²) density
/// and `A` its reciprocal peak, which reduces to the Gaussian shape below.
pub fn crowdsourcing_outcome(x: &[f64]) -> f64 {
    let (d, difficulty, battery) = (x[0], x[1], x[2]);
    (-d * d / (2.0 * DISTANCE_SD * DISTANCE_SD)).exp() * (difficulty * battery).sqrt()
}

/// Task-to-worker assignment. Each round is one task with its own
/// difficulty; each available worker contributes a scaled distance and a
/// battery level, all uniform on `[0, 1]`. Reward is `log(1 + Σ r)`.
#[derive(Debug)]
pub struct CrowdsourcingEnv {
    mean_arms: f64,
    max_arms: usize,
    budget: usize,
    noise_std: f64,
    rng: ChaCha8Rng,
    t: usize,
    clamp_events: usize,
}

impl CrowdsourcingEnv {
    pub fn new(spec: &EnvSpec, max_arms: usize, seed: u64) -> Self {
        CrowdsourcingEnv {
            mean_arms: spec.mean_arms,
            max_arms,
            budget: spec.budget,
            noise_std: spec.noise_std,
            rng: substream(seed, Stream::Environment),
            t: 0,
            clamp_events: 0,
        }
    }

    pub fn clamp_events(&self) -> usize {
        self.clamp_events
    }
}

impl Iterator for CrowdsourcingEnv {
    type Item = RoundInstance;

    fn next(&mut self) -> Option<RoundInstance> {
        self.t += 1;
        let (m, clamped) = clamped_poisson(&mut self.rng, self.mean_arms, 1, self.max_arms);
        self.clamp_events += clamped as usize;
        let difficulty: f64 = self.rng.random();
        let contexts: Vec<Context> = (0..m)
            .map(|_| {
                let distance: f64 = self.rng.random();
                let battery: f64 = self.rng.random();
                Context::new(vec![distance, difficulty, battery])
            })
            .collect();
        let truth = contexts.iter().map(|x| crowdsourcing_outcome(x)).collect();
        RoundInstance::new(
            self.t,
            contexts,
            truth,
            FeasibilitySpec::TopK {
                budget: self.budget.min(m),
            },
            OutcomeModel::Gaussian { std: self.noise_std },
            RewardModel::LogSum,
        )
        .ok()
    }
}
