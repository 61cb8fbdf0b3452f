//! Gaussian-process posteriors over a growing history of semi-bandit
//! observations.
//!
//! The prior mean is zero. With history `X` (N contexts), outcomes `r` and
//! noise variance `s2`:
//!
//! ```text
//! mu(x)     = k_X(x)ᵀ (K_XX + s2 I)⁻¹ r
//! sigma2(x) = k(x, x) - k_X(x)ᵀ (K_XX + s2 I)⁻¹ k_X(x)
//! ```
//!
//! Both are evaluated through a Cholesky factor of `K_XX + s2 I` that is
//! extended in place each round.

mod sparse;

pub use sparse::{DtcPredictor, SparseGpState};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{common_dim, shifted_gram_rows, Context, KernelSpec};
use crate::linalg::Cholesky;

/// Relative jitter added on factorization failure, scaled by the mean
/// diagonal; each retry multiplies it by ten.
pub const JITTER_BASE: f64 = 1e-8;
pub const JITTER_RETRIES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub variance: f64,
}

impl PosteriorSummary {
    pub fn stddev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Factors `K + (noise + jitter) I`, escalating the jitter on failure.
/// Returns the factor and the jitter that was needed (zero if none).
pub(crate) fn factor_with_jitter(
    kernel: &KernelSpec,
    contexts: &[Context],
    noise_variance: f64,
    min_jitter: f64,
) -> Result<(Cholesky, f64)> {
    let n = contexts.len();
    let try_factor = |jitter: f64| {
        Cholesky::factor(&shifted_gram_rows(kernel, contexts, 0, noise_variance + jitter))
    };
    let mut last = match try_factor(min_jitter) {
        Ok(chol) => return Ok((chol, min_jitter)),
        Err(e) => e,
    };
    let mean_diag = contexts.iter().map(|x| kernel.diag_unchecked(x)).sum::<f64>() / n.max(1) as f64;
    for attempt in 0..JITTER_RETRIES {
        let jitter = min_jitter + JITTER_BASE * mean_diag * 10f64.powi(attempt as i32);
        match try_factor(jitter) {
            Ok(chol) => return Ok((chol, jitter)),
            Err(e) => last = e,
        }
    }
    Err(Error::Numerical(format!(
        "Gram factorization failed after {JITTER_RETRIES} jitter retries ({last})"
    )))
}

/// Exact GP posterior state.
///
/// Values are immutable in spirit: [`GpState::batch_update`] consumes the
/// state and returns the extended one.
#[derive(Clone, Debug)]
pub struct GpState {
    kernel: KernelSpec,
    noise_variance: f64,
    contexts: Vec<Context>,
    outcomes: Vec<f64>,
    factor: Cholesky,
    jitter: f64,
    /// `(K + s2 I)⁻¹ r`, cached for O(N) posterior means.
    weights: Vec<f64>,
}

impl GpState {
    /// Empty history (the prior).
    pub fn new(kernel: KernelSpec, noise_variance: f64) -> Result<Self> {
        kernel.validate()?;
        validate_noise(noise_variance)?;
        Ok(GpState {
            kernel,
            noise_variance,
            contexts: Vec::new(),
            outcomes: Vec::new(),
            factor: Cholesky::empty(),
            jitter: 0.0,
            weights: Vec::new(),
        })
    }

    /// Builds the posterior from scratch on a full history.
    pub fn from_history(
        kernel: KernelSpec,
        noise_variance: f64,
        contexts: Vec<Context>,
        outcomes: Vec<f64>,
    ) -> Result<Self> {
        let mut state = Self::new(kernel, noise_variance)?;
        check_batch(&state.contexts, &contexts, &outcomes)?;
        let (factor, jitter) = factor_with_jitter(&kernel, &contexts, noise_variance, 0.0)?;
        state.weights = factor.solve(&outcomes);
        state.contexts = contexts;
        state.outcomes = outcomes;
        state.factor = factor;
        state.jitter = jitter;
        Ok(state)
    }

    /// Appends one round of observations. The factor grows by a block of
    /// `contexts.len()` rows; if that fails the whole factor is rebuilt with
    /// jitter.
    pub fn batch_update(mut self, contexts: &[Context], outcomes: &[f64]) -> Result<Self> {
        if contexts.is_empty() {
            return Err(Error::Input("batch update needs at least one observation".into()));
        }
        check_batch(&self.contexts, contexts, outcomes)?;
        let from = self.contexts.len();
        self.contexts.extend_from_slice(contexts);
        self.outcomes.extend_from_slice(outcomes);
        let rows = shifted_gram_rows(&self.kernel, &self.contexts, from, self.noise_variance + self.jitter);
        if self.factor.extend(&rows).is_err() {
            let (factor, jitter) =
                factor_with_jitter(&self.kernel, &self.contexts, self.noise_variance, self.jitter)?;
            self.factor = factor;
            self.jitter = jitter;
        }
        self.weights = self.factor.solve(&self.outcomes);
        Ok(self)
    }

    pub fn posterior(&self, x: &[f64]) -> Result<PosteriorSummary> {
        self.check_query(x)?;
        Ok(self.posterior_unchecked(x))
    }

    pub(crate) fn posterior_unchecked(&self, x: &[f64]) -> PosteriorSummary {
        let prior = self.kernel.diag_unchecked(x);
        if self.contexts.is_empty() {
            return PosteriorSummary {
                mean: 0.0,
                variance: prior,
            };
        }
        let mut v = self.kernel.cross(&self.contexts, x);
        let mean = v.iter().zip(&self.weights).map(|(a, b)| a * b).sum();
        self.factor.solve_lower_in_place(&mut v);
        let explained: f64 = v.iter().map(|a| a * a).sum();
        PosteriorSummary {
            mean,
            variance: (prior - explained).clamp(0.0, prior),
        }
    }

    pub(crate) fn check_query(&self, x: &[f64]) -> Result<()> {
        if x.is_empty() {
            return Err(Error::Input("query context has dimension 0".into()));
        }
        if let Some(h) = self.contexts.first() {
            if h.dim() != x.len() {
                return Err(Error::Input(format!(
                    "query dimension {} does not match history dimension {}",
                    x.len(),
                    h.dim()
                )));
            }
        }
        Ok(())
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn factor(&self) -> &Cholesky {
        &self.factor
    }

    /// Diagonal jitter in use on top of the noise variance (zero normally).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }
}

pub(crate) fn validate_noise(noise_variance: f64) -> Result<()> {
    if noise_variance <= 0.0 || !noise_variance.is_finite() {
        return Err(Error::config("gp.noise_variance", "must be a positive finite number"));
    }
    Ok(())
}

pub(crate) fn check_batch(history: &[Context], contexts: &[Context], outcomes: &[f64]) -> Result<()> {
    if contexts.len() != outcomes.len() {
        return Err(Error::Input(format!(
            "{} contexts but {} outcomes",
            contexts.len(),
            outcomes.len()
        )));
    }
    if let Some(i) = outcomes.iter().position(|r| !r.is_finite()) {
        return Err(Error::Input(format!("outcome {i} is not finite")));
    }
    let d = common_dim(contexts)?;
    if let (Some(d), Some(h)) = (d, history.first()) {
        if d != h.dim() {
            return Err(Error::Input(format!(
                "batch dimension {d} does not match history dimension {}",
                h.dim()
            )));
        }
    }
    Ok(())
}
