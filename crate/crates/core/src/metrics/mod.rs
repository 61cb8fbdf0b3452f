//! Regret accounting and information-gain diagnostics.

mod info_gain;
mod regret;

pub use info_gain::{gamma_diagnostics, info_gain, GammaLimits, InfoGainReport, ARITHMETIC_SLACK};
pub use regret::{alpha_regret, RunTrace, TraceHeader};
