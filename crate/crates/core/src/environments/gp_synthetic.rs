use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{clamped_poisson, EnvSpec, OutcomeModel, RewardModel, RoundInstance};
use crate::error::Result;
use crate::gp::factor_with_jitter;
use crate::kernels::{Context, KernelSpec};
use crate::oracles::FeasibilitySpec;
use crate::rng::{substream, Stream};

/// Arms drawn from a fixed grid on which `f` is one sample of a zero-mean
/// GP with a squared-exponential kernel. `f` is unbounded.
#[derive(Debug)]
pub struct GpSyntheticEnv {
    grid: Vec<Context>,
    values: Vec<f64>,
    mean_arms: f64,
    max_arms: usize,
    budget: usize,
    noise_std: f64,
    rng: ChaCha8Rng,
    t: usize,
    clamp_events: usize,
}

impl GpSyntheticEnv {
    pub fn new(spec: &EnvSpec, max_arms: usize, seed: u64) -> Result<Self> {
        let mut rng = substream(seed, Stream::Environment);
        let grid: Vec<Context> = (0..spec.grid_size)
            .map(|_| Context::new((0..spec.dim).map(|_| rng.random::<f64>()).collect()))
            .collect();
        let kernel = KernelSpec::squared_exponential(spec.lengthscale);
        let (chol, _) = factor_with_jitter(&kernel, &grid, 0.0, 0.0)?;
        let z: Vec<f64> = (0..grid.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let values = chol.mul_vec(&z);
        Ok(GpSyntheticEnv {
            grid,
            values,
            mean_arms: spec.mean_arms,
            max_arms,
            budget: spec.budget,
            noise_std: spec.noise_std,
            rng,
            t: 0,
            clamp_events: 0,
        })
    }

    pub fn grid(&self) -> &[Context] {
        &self.grid
    }

    /// `f` on the grid.
    pub fn grid_values(&self) -> &[f64] {
        &self.values
    }

    pub fn clamp_events(&self) -> usize {
        self.clamp_events
    }
}

impl Iterator for GpSyntheticEnv {
    type Item = RoundInstance;

    fn next(&mut self) -> Option<RoundInstance> {
        self.t += 1;
        let (m, clamped) = clamped_poisson(&mut self.rng, self.mean_arms, 1, self.max_arms);
        self.clamp_events += clamped as usize;
        let picks = index::sample(&mut self.rng, self.grid.len(), m);
        let contexts = picks.iter().map(|i| self.grid[i].clone()).collect();
        let truth = picks.iter().map(|i| self.values[i]).collect();
        RoundInstance::new(
            self.t,
            contexts,
            truth,
            FeasibilitySpec::TopK {
                budget: self.budget.min(m),
            },
            OutcomeModel::Gaussian { std: self.noise_std },
            RewardModel::Sum,
        )
        .ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::EnvKind;

    fn spec(l: f64, grid: usize) -> EnvSpec {
        let mut s = EnvSpec::new(EnvKind::GpSynthetic, 10, 3);
        s.lengthscale = l;
        s.grid_size = grid;
        s
    }

    #[test]
    fn same_seed_same_dataset() {
        let a: Vec<_> = GpSyntheticEnv::new(&spec(0.5, 100), 30, 4).unwrap().take(5).collect();
        let b: Vec<_> = GpSyntheticEnv::new(&spec(0.5, 100), 30, 4).unwrap().take(5).collect();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.arms, y.arms);
            assert_eq!(x.expected_outcomes(), y.expected_outcomes());
        }
        let c = GpSyntheticEnv::new(&spec(0.5, 100), 30, 5).unwrap().next().unwrap();
        assert_ne!(a[0].expected_outcomes(), c.expected_outcomes());
    }

    #[test]
    fn arm_counts_respect_bounds() {
        let mut s = spec(0.5, 60);
        s.mean_arms = 40.0;
        let mut env = GpSyntheticEnv::new(&s, 45, 1).unwrap();
        for inst in env.by_ref().take(200) {
            assert!((1..=45).contains(&inst.num_arms()));
            assert_eq!(inst.feasibility.budget(), 3.min(inst.num_arms()));
        }
        assert!(env.clamp_events() > 0);
    }

    #[test]
    fn huge_lengthscale_gives_near_constant_f() {
        let mut flat = 0;
        for seed in 0..50 {
            let env = GpSyntheticEnv::new(&spec(1e3, 200), 20, seed).unwrap();
            let v = env.grid_values();
            let range = v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
            flat += (range < 0.1) as usize;
        }
        assert!(flat >= 45, "{flat} of 50 seeds were flat");
    }

    #[test]
    fn tiny_lengthscale_decorrelates_distant_points() {
        // Sample correlation over 500 pairs of grid points at distance >= 0.5,
        // each pair from an independent draw of f.
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut seed = 0;
        while xs.len() < 500 {
            let env = GpSyntheticEnv::new(&spec(0.01, 40), 20, 1000 + seed).unwrap();
            seed += 1;
            let g = env.grid();
            'outer: for i in 0..g.len() {
                for j in i + 1..g.len() {
                    let d2: f64 = g[i].iter().zip(g[j].iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d2 >= 0.25 {
                        xs.push(env.grid_values()[i]);
                        ys.push(env.grid_values()[j]);
                        break 'outer;
                    }
                }
            }
        }
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let cov: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = xs.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|b| (b - my).powi(2)).sum();
        let corr = cov / (vx * vy).sqrt();
        assert!(corr.abs() < 0.1, "correlation {corr}");
    }

    #[test]
    fn horizon_truncation_is_a_prefix() {
        let long: Vec<_> = GpSyntheticEnv::new(&spec(0.3, 80), 20, 9).unwrap().take(12).collect();
        let short: Vec<_> = GpSyntheticEnv::new(&spec(0.3, 80), 20, 9).unwrap().take(4).collect();
        for (a, b) in short.iter().zip(&long) {
            assert_eq!(a.arms, b.arms);
        }
    }
}
