use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use super::{clamped_poisson, EnvSpec, OutcomeModel, RewardModel, RoundInstance};
use crate::error::{Error, Result};
use crate::kernels::Context;
use crate::oracles::{BipartiteGraph, FeasibilitySpec};
use crate::rng::{substream, Stream};

/// Activation probability of an edge with context `x`: `2 / (1 + e^{-4x}) - 1`.
pub fn edge_activation(x: f64) -> f64 {
    2.0 / (1.0 + (-4.0 * x).exp()) - 1.0
}

/// Probabilistic maximum coverage on a fresh random bipartite graph each
/// round (movies on the left, users on the right). Base arms are edges with
/// one-dimensional contexts; outcomes are Bernoulli activations.
#[derive(Debug)]
pub struct MovieCoverageEnv {
    mean_left: f64,
    mean_right: f64,
    edge_probability: f64,
    context_dist: Beta<f64>,
    max_arms: usize,
    budget: usize,
    rng: ChaCha8Rng,
    t: usize,
    clamp_events: usize,
}

/// Upper clamp on Poisson node counts.
const MAX_NODES: usize = 10_000;

impl MovieCoverageEnv {
    pub fn new(spec: &EnvSpec, max_arms: usize, seed: u64) -> Result<Self> {
        let context_dist = Beta::new(spec.edge_context_a, spec.edge_context_b)
            .map_err(|e| Error::config("env.edge_context_a", e.to_string()))?;
        Ok(MovieCoverageEnv {
            mean_left: spec.mean_left,
            mean_right: spec.mean_right,
            edge_probability: spec.edge_probability,
            context_dist,
            max_arms,
            budget: spec.budget,
            rng: substream(seed, Stream::Environment),
            t: 0,
            clamp_events: 0,
        })
    }

    pub fn clamp_events(&self) -> usize {
        self.clamp_events
    }
}

impl Iterator for MovieCoverageEnv {
    type Item = RoundInstance;

    fn next(&mut self) -> Option<RoundInstance> {
        self.t += 1;
        let (num_left, c1) = clamped_poisson(&mut self.rng, self.mean_left, self.budget, MAX_NODES);
        let (num_right, c2) = clamped_poisson(&mut self.rng, self.mean_right, 1, MAX_NODES);
        self.clamp_events += c1 as usize + c2 as usize;

        let mut adjacent = vec![false; num_left * num_right];
        for cell in adjacent.iter_mut() {
            *cell = self.rng.random::<f64>() < self.edge_probability;
        }
        // Every user reviewed at least one of the round's movies.
        for j in 0..num_right {
            if !(0..num_left).any(|i| adjacent[i * num_right + j]) {
                let i = self.rng.random_range(0..num_left);
                adjacent[i * num_right + j] = true;
            }
        }
        let mut edges: Vec<(usize, usize)> = (0..num_left)
            .flat_map(|i| (0..num_right).map(move |j| (i, j)))
            .filter(|&(i, j)| adjacent[i * num_right + j])
            .collect();
        if edges.len() > self.max_arms {
            self.clamp_events += 1;
            let mut keep = index::sample(&mut self.rng, edges.len(), self.max_arms).into_vec();
            keep.sort_unstable();
            edges = keep.into_iter().map(|k| edges[k]).collect();
        }
        let contexts: Vec<Context> = edges
            .iter()
            .map(|_| Context::new(vec![self.context_dist.sample(&mut self.rng)]))
            .collect();
        let truth = contexts.iter().map(|x| edge_activation(x[0])).collect();
        let graph = BipartiteGraph::new(num_left, num_right, edges).ok()?;
        RoundInstance::new(
            self.t,
            contexts,
            truth,
            FeasibilitySpec::CoverageLeftNodes {
                budget: self.budget,
                graph,
            },
            OutcomeModel::Bernoulli,
            RewardModel::Coverage,
        )
        .ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::EnvKind;
    use crate::oracles::SuperArm;

    #[test]
    fn activation_examples() {
        assert_eq!(edge_activation(0.0), 0.0);
        assert!((edge_activation(1.0) - 0.964_027_580_075_817).abs() < 1e-15);
    }

    #[test]
    fn single_certain_edge_gives_reward_one() {
        let g = BipartiteGraph::new(1, 1, vec![(0, 0)]).unwrap();
        let inst = RoundInstance::new(
            1,
            vec![Context::new(vec![1.0])],
            vec![1.0],
            FeasibilitySpec::CoverageLeftNodes { budget: 1, graph: g },
            OutcomeModel::Bernoulli,
            RewardModel::Coverage,
        )
        .unwrap();
        let sa = SuperArm { arms: vec![0], seeds: vec![0] };
        assert_eq!(inst.expected_reward(&sa).unwrap(), 1.0);
        let mut rng = substream(0, Stream::Noise);
        let r = inst.sample_outcomes(&sa.arms, &mut rng);
        assert_eq!(inst.realized_reward(&sa, &r).unwrap(), 1.0);
    }

    #[test]
    fn graphs_are_well_formed() {
        let spec = EnvSpec::new(EnvKind::MovieCoverage, 10, 3);
        for inst in MovieCoverageEnv::new(&spec, 400, 2).unwrap().take(30) {
            let FeasibilitySpec::CoverageLeftNodes { graph, budget } = &inst.feasibility else {
                panic!("expected coverage feasibility");
            };
            assert!(graph.num_left() >= *budget);
            assert_eq!(graph.edges().len(), inst.num_arms());
            assert!(inst.num_arms() <= 400);
            assert!(inst.expected_outcomes().iter().all(|f| (0.0..=1.0).contains(f)));
        }
    }
}
