//! Covariance functions and Gram matrices.
//!
//! All kernels are normalized so that `k(x, x) <= variance` on `[0, 1]^D`;
//! with the default unit variance this gives `k(x, x) <= 1`.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::parallel;

/// A point in `[0, 1]^D` describing a base arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Context(Vec<f64>);

impl Context {
    pub fn new(coords: Vec<f64>) -> Self {
        Context(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Context {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Context {
    fn from(v: Vec<f64>) -> Self {
        Context(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `<x, y> / D`.
    Linear,
    SquaredExponential,
    /// Matérn with smoothness 3/2 or 5/2.
    Matern,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub family: KernelFamily,
    #[serde(default = "default_one")]
    pub lengthscale: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_one")]
    pub variance: f64,
}

fn default_one() -> f64 {
    1.0
}

fn default_nu() -> f64 {
    2.5
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::squared_exponential(1.0)
    }
}

impl KernelSpec {
    pub fn squared_exponential(lengthscale: f64) -> Self {
        KernelSpec {
            family: KernelFamily::SquaredExponential,
            lengthscale,
            nu: default_nu(),
            variance: 1.0,
        }
    }

    pub fn matern(nu: f64, lengthscale: f64) -> Self {
        KernelSpec {
            family: KernelFamily::Matern,
            lengthscale,
            nu,
            variance: 1.0,
        }
    }

    pub fn linear() -> Self {
        KernelSpec {
            family: KernelFamily::Linear,
            lengthscale: 1.0,
            nu: default_nu(),
            variance: 1.0,
        }
    }

    pub fn with_variance(mut self, variance: f64) -> Self {
        self.variance = variance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.variance <= 0.0 || !self.variance.is_finite() {
            return Err(Error::config("kernel.variance", "must be a positive finite number"));
        }
        match self.family {
            KernelFamily::Linear => Ok(()),
            KernelFamily::SquaredExponential | KernelFamily::Matern => {
                if self.lengthscale <= 0.0 || !self.lengthscale.is_finite() {
                    return Err(Error::config("kernel.lengthscale", "must be a positive finite number"));
                }
                if self.family == KernelFamily::Matern && self.nu != 1.5 && self.nu != 2.5 {
                    return Err(Error::config(
                        "kernel.nu",
                        format!("only 1.5 and 2.5 are supported, got {}", self.nu),
                    ));
                }
                Ok(())
            }
        }
    }

    /// `k(x, y)`, checking parameters and dimensions.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.validate()?;
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::Input(format!(
                "context dimensions {} and {} must be equal and non-zero",
                x.len(),
                y.len()
            )));
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// `k(x, y)` without validation. Callers must have validated the spec and
    /// dimensions.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Linear => {
                let mut s = 0.0;
                for (a, b) in x.iter().zip(y) {
                    s += a * b;
                }
                self.variance * s / x.len() as f64
            }
            KernelFamily::SquaredExponential => {
                let d2 = squared_distance(x, y);
                self.variance * (-d2 / (2.0 * self.lengthscale * self.lengthscale)).exp()
            }
            KernelFamily::Matern => {
                let r = squared_distance(x, y).sqrt() / self.lengthscale;
                let shape = if self.nu == 1.5 {
                    let a = 3f64.sqrt() * r;
                    (1.0 + a) * (-a).exp()
                } else {
                    let a = 5f64.sqrt() * r;
                    (1.0 + a + a * a / 3.0) * (-a).exp()
                };
                self.variance * shape
            }
        }
    }

    /// `k(x, x)`.
    #[inline]
    pub fn diag_unchecked(&self, x: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Linear => self.eval_unchecked(x, x),
            _ => self.variance,
        }
    }

    /// Vector `[k(x_1, x), ..., k(x_N, x)]`.
    pub fn cross(&self, xs: &[Context], x: &[f64]) -> Vec<f64> {
        xs.iter().map(|xi| self.eval_unchecked(xi, x)).collect()
    }
}

#[inline]
fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for (a, b) in x.iter().zip(y) {
        let d = a - b;
        s += d * d;
    }
    s
}

/// Checks that every context has the same dimension and returns it
/// (`None` for an empty list).
pub fn common_dim(xs: &[Context]) -> Result<Option<usize>> {
    let Some(first) = xs.first() else {
        return Ok(None);
    };
    let d = first.dim();
    if d == 0 {
        return Err(Error::Input("contexts must have dimension >= 1".into()));
    }
    if let Some((i, x)) = xs.iter().enumerate().find(|(_, x)| x.dim() != d) {
        return Err(Error::Input(format!(
            "context {i} has dimension {} but context 0 has {d}",
            x.dim()
        )));
    }
    Ok(Some(d))
}

/// The `N x N` Gram matrix `[k(x_i, x_j)]`.
pub fn gram_matrix(spec: &KernelSpec, xs: &[Context]) -> Result<Matrix> {
    spec.validate()?;
    common_dim(xs)?;
    let n = xs.len();
    let rows = parallel::map_range(n, |i| {
        (0..n)
            .map(|j| spec.eval_unchecked(&xs[i], &xs[j]))
            .collect::<Vec<_>>()
    });
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    Ok(Matrix::from_rows(rows))
}

/// Lower triangle of the Gram matrix plus `shift` on the diagonal, by rows
/// (`row i` has `i + 1` entries); rows `from..xs.len()` only.
pub(crate) fn shifted_gram_rows(
    spec: &KernelSpec,
    xs: &[Context],
    from: usize,
    shift: f64,
) -> Vec<Vec<f64>> {
    (from..xs.len())
        .map(|i| {
            let mut row: Vec<f64> = (0..=i).map(|j| spec.eval_unchecked(&xs[i], &xs[j])).collect();
            row[i] += shift;
            row
        })
        .collect()
}
