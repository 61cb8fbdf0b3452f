//! Sparse posterior through a subset of observed contexts (inducing points).
//!
//! The predictor is the deterministic-training-conditional (projected
//! process) form. With inducing set `Z`, history `X`, `A = Lz⁻¹ K_ZX / s`
//! where `Lz Lzᵀ = K_ZZ` and `s² ` the noise variance, and `B = I + A Aᵀ`:
//!
//! ```text
//! mu(x)     = (LB⁻¹ Lz⁻¹ k_Z(x))ᵀ LB⁻¹ A r / s
//! sigma2(x) = k(x, x) - |Lz⁻¹ k_Z(x)|² + |LB⁻¹ Lz⁻¹ k_Z(x)|²
//! ```
//!
//! Preparation costs O(s²N), each query O(s²). When `Z = X` this is the exact
//! posterior, so while the history is no larger than the inducing budget the
//! state keeps an exact [`GpState`] instead.

use rand::seq::index;
use rand_chacha::ChaCha8Rng;

use super::{check_batch, factor_with_jitter, validate_noise, GpState, PosteriorSummary, JITTER_BASE};
use crate::error::{Error, Result};
use crate::kernels::{Context, KernelSpec};
use crate::linalg::Cholesky;

#[derive(Clone, Debug)]
pub struct DtcPredictor {
    kernel: KernelSpec,
    inducing: Vec<Context>,
    kzz: Cholesky,
    b: Cholesky,
    c: Vec<f64>,
}

impl DtcPredictor {
    pub fn new(
        kernel: &KernelSpec,
        noise_variance: f64,
        inducing: Vec<Context>,
        contexts: &[Context],
        outcomes: &[f64],
    ) -> Result<Self> {
        kernel.validate()?;
        validate_noise(noise_variance)?;
        if inducing.is_empty() {
            return Err(Error::Input("sparse posterior needs at least one inducing point".into()));
        }
        check_batch(&[], contexts, outcomes)?;
        let s = inducing.len();
        let mean_diag = inducing.iter().map(|z| kernel.diag_unchecked(z)).sum::<f64>() / s as f64;
        let (kzz, _) = factor_with_jitter(kernel, &inducing, 0.0, JITTER_BASE * mean_diag)?;

        let inv_sd = 1.0 / noise_variance.sqrt();
        // B = I + A Aᵀ and A r, accumulated one history column at a time.
        let mut b = vec![vec![0.0; s]; s];
        let mut ar = vec![0.0; s];
        for (x, &r) in contexts.iter().zip(outcomes) {
            let mut a = kernel.cross(&inducing, x);
            kzz.solve_lower_in_place(&mut a);
            for v in &mut a {
                *v *= inv_sd;
            }
            for i in 0..s {
                ar[i] += a[i] * r;
                let ai = a[i];
                for (bij, aj) in b[i][..=i].iter_mut().zip(&a[..=i]) {
                    *bij += ai * aj;
                }
            }
        }
        for (i, row) in b.iter_mut().enumerate() {
            row.truncate(i + 1);
            row[i] += 1.0;
        }
        let b = Cholesky::factor(&b)
            .map_err(|e| Error::Numerical(format!("inducing system is not positive definite ({e})")))?;
        let mut c: Vec<f64> = ar.iter().map(|v| v * inv_sd).collect();
        b.solve_lower_in_place(&mut c);
        Ok(DtcPredictor {
            kernel: *kernel,
            inducing,
            kzz,
            b,
            c,
        })
    }

    pub fn posterior(&self, x: &[f64]) -> PosteriorSummary {
        let prior = self.kernel.diag_unchecked(x);
        let mut t1 = self.kernel.cross(&self.inducing, x);
        self.kzz.solve_lower_in_place(&mut t1);
        let mut t2 = t1.clone();
        self.b.solve_lower_in_place(&mut t2);
        let mean = t2.iter().zip(&self.c).map(|(a, b)| a * b).sum();
        let q: f64 = t1.iter().map(|v| v * v).sum();
        let corr: f64 = t2.iter().map(|v| v * v).sum();
        PosteriorSummary {
            mean,
            variance: (prior - q + corr).clamp(0.0, prior),
        }
    }

    pub fn num_inducing(&self) -> usize {
        self.inducing.len()
    }
}

#[derive(Clone, Debug)]
enum Backend {
    Exact(GpState),
    Sparse(DtcPredictor),
    Prior,
}

/// History plus a uniformly resampled inducing subset.
#[derive(Clone, Debug)]
pub struct SparseGpState {
    kernel: KernelSpec,
    noise_variance: f64,
    contexts: Vec<Context>,
    outcomes: Vec<f64>,
    num_inducing: usize,
    reseed_each_round: bool,
    inducing: Vec<usize>,
    rng: ChaCha8Rng,
    backend: Backend,
}

impl SparseGpState {
    /// `num_inducing` of zero is treated as one.
    pub fn new(
        kernel: KernelSpec,
        noise_variance: f64,
        num_inducing: usize,
        reseed_each_round: bool,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        let exact = GpState::new(kernel, noise_variance)?;
        Ok(SparseGpState {
            kernel,
            noise_variance,
            contexts: Vec::new(),
            outcomes: Vec::new(),
            num_inducing: num_inducing.max(1),
            reseed_each_round,
            inducing: Vec::new(),
            rng,
            backend: Backend::Exact(exact),
        })
    }

    pub fn batch_update(mut self, contexts: &[Context], outcomes: &[f64]) -> Result<Self> {
        if contexts.is_empty() {
            return Err(Error::Input("batch update needs at least one observation".into()));
        }
        check_batch(&self.contexts, contexts, outcomes)?;
        self.contexts.extend_from_slice(contexts);
        self.outcomes.extend_from_slice(outcomes);
        let n = self.contexts.len();
        let backend = std::mem::replace(&mut self.backend, Backend::Prior);
        if n <= self.num_inducing {
            let exact = match backend {
                Backend::Exact(gp) => gp.batch_update(contexts, outcomes)?,
                _ => GpState::from_history(
                    self.kernel,
                    self.noise_variance,
                    self.contexts.clone(),
                    self.outcomes.clone(),
                )?,
            };
            self.inducing = (0..n).collect();
            self.backend = Backend::Exact(exact);
            return Ok(self);
        }
        if self.reseed_each_round || self.inducing.len() < self.num_inducing {
            self.draw_inducing();
        }
        self.rebuild_sparse()?;
        Ok(self)
    }

    /// Redraws the inducing subset with a new size `s` (clamped to `[1, N]`).
    pub fn resample_inducing(mut self, s: usize) -> Result<Self> {
        self.num_inducing = s.max(1);
        let n = self.contexts.len();
        if n == 0 {
            return Ok(self);
        }
        if n <= self.num_inducing {
            let exact = GpState::from_history(
                self.kernel,
                self.noise_variance,
                self.contexts.clone(),
                self.outcomes.clone(),
            )?;
            self.inducing = (0..n).collect();
            self.backend = Backend::Exact(exact);
        } else {
            self.draw_inducing();
            self.rebuild_sparse()?;
        }
        Ok(self)
    }

    fn draw_inducing(&mut self) {
        let n = self.contexts.len();
        let s = self.num_inducing.min(n);
        let mut idx = index::sample(&mut self.rng, n, s).into_vec();
        idx.sort_unstable();
        self.inducing = idx;
    }

    fn rebuild_sparse(&mut self) -> Result<()> {
        let z = self.inducing.iter().map(|&i| self.contexts[i].clone()).collect();
        let p = DtcPredictor::new(&self.kernel, self.noise_variance, z, &self.contexts, &self.outcomes)?;
        self.backend = Backend::Sparse(p);
        Ok(())
    }

    pub fn posterior(&self, x: &[f64]) -> Result<PosteriorSummary> {
        if x.is_empty() || self.contexts.first().is_some_and(|h| h.dim() != x.len()) {
            return Err(Error::Input(format!(
                "query dimension {} does not match history",
                x.len()
            )));
        }
        Ok(self.posterior_unchecked(x))
    }

    pub(crate) fn posterior_unchecked(&self, x: &[f64]) -> PosteriorSummary {
        match &self.backend {
            Backend::Exact(gp) => gp.posterior_unchecked(x),
            Backend::Sparse(p) => p.posterior(x),
            Backend::Prior => PosteriorSummary {
                mean: 0.0,
                variance: self.kernel.diag_unchecked(x),
            },
        }
    }

    /// Indices into the history of the current inducing points.
    pub fn inducing(&self) -> &[usize] {
        &self.inducing
    }

    pub fn num_inducing(&self) -> usize {
        self.num_inducing
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.backend, Backend::Exact(_))
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
}
