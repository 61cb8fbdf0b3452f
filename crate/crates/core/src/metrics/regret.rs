use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::RoundTraceEntry;

/// Prefix sums of `alpha * opt_t - achieved_t`.
pub fn alpha_regret(opt: &[f64], achieved: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if opt.len() != achieved.len() {
        return Err(Error::Input(format!(
            "{} optimum values but {} achieved values",
            opt.len(),
            achieved.len()
        )));
    }
    let mut acc = 0.0;
    Ok(opt
        .iter()
        .zip(achieved)
        .map(|(o, a)| {
            acc += alpha * o - a;
            acc
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub algorithm: String,
    pub seed: u64,
    pub alpha: f64,
    pub config_hash: String,
}

/// A complete run: header plus one entry per round.
#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub header: TraceHeader,
    pub rounds: Vec<RoundTraceEntry>,
}

impl RunTrace {
    pub fn cumulative_regret(&self) -> Vec<f64> {
        let opt: Vec<f64> = self.rounds.iter().map(|r| r.opt_expected).collect();
        let got: Vec<f64> = self.rounds.iter().map(|r| r.reward_expected).collect();
        alpha_regret(&opt, &got, self.header.alpha).expect("equal lengths")
    }

    pub fn cumulative_expected_reward(&self) -> f64 {
        self.rounds.iter().map(|r| r.reward_expected).sum()
    }

    pub fn cumulative_benchmark_reward(&self) -> f64 {
        self.rounds.iter().map(|r| r.benchmark_expected).sum()
    }

    /// Cumulative expected reward divided by the benchmark's.
    pub fn reward_ratio(&self) -> f64 {
        self.cumulative_expected_reward() / self.cumulative_benchmark_reward()
    }

    pub fn final_regret(&self) -> f64 {
        self.cumulative_regret().last().copied().unwrap_or(0.0)
    }

    pub fn selections(&self) -> Vec<&[usize]> {
        self.rounds.iter().map(|r| r.selected.as_slice()).collect()
    }

    pub fn total_confidence_violations(&self) -> usize {
        self.rounds.iter().map(|r| r.confidence_violations).sum()
    }
}
