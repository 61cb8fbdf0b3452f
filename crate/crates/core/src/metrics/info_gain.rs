//! Information gain `½ log det(I + σ⁻² K)` and exhaustive maxima of it.
//!
//! `gamma_bar` maximizes over one feasible super arm per round of a fixed
//! arrival sequence; `gamma_T` and `gamma_KT` are the classical maxima over
//! any `T` (or `KT`) contexts from the ground set, repetitions allowed.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::validate_noise;
use crate::kernels::{common_dim, shifted_gram_rows, Context, KernelSpec};
use crate::linalg::Cholesky;
use crate::oracles::binomial;
use crate::parallel;

/// Slack allowed in the inequality checks.
pub const ARITHMETIC_SLACK: f64 = 1e-9;

/// `½ log det(I + K / σ²)` over `contexts`.
pub fn info_gain(contexts: &[Context], kernel: &KernelSpec, noise_variance: f64) -> Result<f64> {
    if contexts.is_empty() {
        return Err(Error::Input("information gain needs at least one context".into()));
    }
    kernel.validate()?;
    validate_noise(noise_variance)?;
    common_dim(contexts)?;
    Ok(info_gain_unchecked(contexts, kernel, noise_variance))
}

fn info_gain_unchecked(contexts: &[Context], kernel: &KernelSpec, noise_variance: f64) -> f64 {
    // I + K / σ² has every eigenvalue >= 1, so it always factors.
    let scaled = kernel.with_variance(kernel.variance / noise_variance);
    let rows = shifted_gram_rows(&scaled, contexts, 0, 1.0);
    let chol = Cholesky::factor(&rows).expect("I + K/s2 is positive definite");
    0.5 * chol.log_det()
}

/// Enumeration limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaLimits {
    /// Largest number of candidate tuples enumerated for any one maximum.
    pub max_candidates: u64,
    /// `gamma_KT` is only computed when `K * T` is at most this.
    pub max_kt: usize,
}

impl Default for GammaLimits {
    fn default() -> Self {
        GammaLimits {
            max_candidates: 1_000_000,
            max_kt: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoGainReport {
    pub kernel: KernelSpec,
    pub noise_variance: f64,
    pub budget: usize,
    pub rounds: usize,
    /// Available contexts per round.
    pub available: Vec<Vec<Context>>,
    pub non_volatile: bool,
    pub gamma_bar_t: f64,
    pub gamma_t: f64,
    pub gamma_kt: Option<f64>,
    /// `gamma_bar_T <= K gamma_T`.
    pub upper_bound_holds: bool,
    /// `gamma_KT / K <= gamma_bar_T`; only checked for non-volatile instances.
    pub lower_bound_holds: Option<bool>,
}

/// Exhaustive `gamma_bar_T`, `gamma_T` and `gamma_KT` for a small instance.
///
/// Round `t` may play any `min(K, |X_t|)` distinct arms of `available[t]`;
/// larger super arms never lose information, so smaller feasible sets need
/// not be enumerated.
pub fn gamma_diagnostics(
    available: &[Vec<Context>],
    kernel: &KernelSpec,
    noise_variance: f64,
    budget: usize,
    limits: GammaLimits,
) -> Result<InfoGainReport> {
    kernel.validate()?;
    validate_noise(noise_variance)?;
    let rounds = available.len();
    if rounds == 0 {
        return Err(Error::Input("at least one round is required".into()));
    }
    if budget == 0 {
        return Err(Error::Input("budget must be at least 1".into()));
    }
    if let Some(t) = available.iter().position(Vec::is_empty) {
        return Err(Error::Input(format!("round {t} has no available contexts")));
    }
    let all: Vec<Context> = available.iter().flatten().cloned().collect();
    common_dim(&all)?;

    let mut ground: Vec<Context> = Vec::new();
    for x in &all {
        if !ground.contains(x) {
            ground.push(x.clone());
        }
    }
    let same_set = |a: &[Context], b: &[Context]| a.iter().all(|x| b.contains(x)) && b.iter().all(|x| a.contains(x));
    let non_volatile = available.iter().all(|xt| same_set(xt, &available[0]));

    let gamma_bar_t = gamma_bar(available, kernel, noise_variance, budget, limits)?;
    let gamma_t = classical_gamma(&ground, rounds, kernel, noise_variance, limits)?;
    let kt = budget * rounds;
    let gamma_kt = if kt <= limits.max_kt {
        Some(classical_gamma(&ground, kt, kernel, noise_variance, limits)?)
    } else {
        None
    };

    let k = budget as f64;
    let upper_bound_holds = gamma_bar_t <= k * gamma_t + ARITHMETIC_SLACK;
    let lower_bound_holds = match (non_volatile, gamma_kt) {
        (true, Some(g)) => Some(g / k <= gamma_bar_t + ARITHMETIC_SLACK),
        _ => None,
    };
    Ok(InfoGainReport {
        kernel: *kernel,
        noise_variance,
        budget,
        rounds,
        available: available.to_vec(),
        non_volatile,
        gamma_bar_t,
        gamma_t,
        gamma_kt,
        upper_bound_holds,
        lower_bound_holds,
    })
}

fn check_count(what: &str, count: u64, limits: GammaLimits) -> Result<()> {
    if count > limits.max_candidates {
        return Err(Error::Size(format!(
            "{what} needs {count} candidates, above the desk-scale limit of {}; shrink the ground set, budget or horizon",
            limits.max_candidates
        )));
    }
    Ok(())
}

fn gamma_bar(
    available: &[Vec<Context>],
    kernel: &KernelSpec,
    noise_variance: f64,
    budget: usize,
    limits: GammaLimits,
) -> Result<f64> {
    let per_round: Vec<Vec<Vec<usize>>> = available
        .iter()
        .map(|xt| (0..xt.len()).combinations(budget.min(xt.len())).collect())
        .collect();
    let count = per_round
        .iter()
        .try_fold(1u64, |acc, z| acc.checked_mul(z.len() as u64))
        .unwrap_or(u64::MAX);
    check_count("gamma_bar_T", count, limits)?;

    let evaluate = |mut code: u64| {
        let mut xs = Vec::new();
        for (xt, choices) in available.iter().zip(&per_round) {
            let n = choices.len() as u64;
            let pick = &choices[(code % n) as usize];
            code /= n;
            xs.extend(pick.iter().map(|&i| xt[i].clone()));
        }
        info_gain_unchecked(&xs, kernel, noise_variance)
    };
    Ok(max_over(count, evaluate))
}

fn classical_gamma(
    ground: &[Context],
    size: usize,
    kernel: &KernelSpec,
    noise_variance: f64,
    limits: GammaLimits,
) -> Result<f64> {
    let n = ground.len() as u64;
    check_count(&format!("gamma_{size}"), binomial(n + size as u64 - 1, size as u64), limits)?;
    let multisets: Vec<Vec<usize>> = (0..ground.len()).combinations_with_replacement(size).collect();
    let gains = parallel::map(&multisets, |m| {
        let xs: Vec<Context> = m.iter().map(|&i| ground[i].clone()).collect();
        info_gain_unchecked(&xs, kernel, noise_variance)
    });
    Ok(gains.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Maximum of `f` over `0..count`, fanned out in chunks.
fn max_over<F>(count: u64, f: F) -> f64
where
    F: Fn(u64) -> f64 + Sync + Send,
{
    const CHUNK: u64 = 1024;
    let chunks = count.div_ceil(CHUNK) as usize;
    parallel::map_range(chunks, |c| {
        let lo = c as u64 * CHUNK;
        let hi = (lo + CHUNK).min(count);
        (lo..hi).map(&f).fold(f64::NEG_INFINITY, f64::max)
    })
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max)
}
