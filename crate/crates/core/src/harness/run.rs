use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::environments::Environment;
use crate::error::{Error, Result};
use crate::metrics::{gamma_diagnostics, GammaLimits, InfoGainReport, RunTrace, TraceHeader};
use crate::parallel;
use crate::policy::Policy;
use crate::rng::{substream, Stream};

use super::config::{GammaFile, RunConfig};
use super::trace::trace_csv;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const GAMMA_REPORT_FILE: &str = "gamma_report.json";

/// Per-run bookkeeping that is not part of the trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunStats {
    /// SHA-256 over every generated round instance, true outcomes included.
    pub dataset_sha256: String,
    pub clamp_events: usize,
    pub clamped_values: usize,
    pub confidence_violations: usize,
}

/// Plays one seed in memory.
pub fn run_seed(cfg: &RunConfig, seed: u64) -> Result<(RunTrace, RunStats)> {
    let mut env = Environment::new(&cfg.env, cfg.policy.max_arms, seed)?;
    let mut noise = substream(seed, Stream::Noise);
    let mut policy = Policy::new(
        cfg.policy.clone(),
        &cfg.model_settings(),
        cfg.oracle(),
        substream(seed, Stream::Inducing),
    )?;
    let mut hasher = Sha256::new();
    let mut rounds = Vec::with_capacity(cfg.env.horizon);
    for instance in env.by_ref().take(cfg.env.horizon) {
        instance.hash_into(&mut hasher);
        let start = Instant::now();
        let (_, mut entry) = policy.run_round(&instance, &mut noise)?;
        if cfg.output.record_wall_time {
            entry.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        }
        rounds.push(entry);
    }
    if rounds.len() != cfg.env.horizon {
        return Err(Error::Internal(format!(
            "environment stopped after {} of {} rounds",
            rounds.len(),
            cfg.env.horizon
        )));
    }
    let trace = RunTrace {
        header: TraceHeader {
            algorithm: cfg.algorithm_name().to_string(),
            seed,
            alpha: cfg.alpha(),
            config_hash: cfg.hash(),
        },
        rounds,
    };
    let stats = RunStats {
        dataset_sha256: hex::encode(hasher.finalize()),
        clamp_events: env.clamp_events(),
        clamped_values: trace.rounds.iter().map(|r| r.clamped_values).sum(),
        confidence_violations: trace.total_confidence_violations(),
    };
    Ok((trace, stats))
}

/// Everything `run` produced.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub traces: Vec<RunTrace>,
    pub stats: Vec<RunStats>,
    pub trace_files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Runs every seed (shifted by `seed_offset`) and writes one trace per seed
/// plus `manifest.json` into `cfg.output_dir`.
pub fn run(cfg: &RunConfig, seed_offset: u64) -> Result<RunOutput> {
    cfg.validate()?;
    let seeds: Vec<u64> = cfg
        .seeds
        .iter()
        .map(|s| {
            s.checked_add(seed_offset)
                .ok_or_else(|| Error::config("seeds", format!("seed {s} + offset {seed_offset} overflows")))
        })
        .collect::<Result<_>>()?;
    let results = parallel::map(&seeds, |&seed| run_seed(cfg, seed));
    let (traces, stats): (Vec<_>, Vec<_>) = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();

    create_dir(&cfg.output_dir)?;
    let mut trace_files = Vec::with_capacity(traces.len());
    let mut runs = Vec::with_capacity(traces.len());
    for (trace, st) in traces.iter().zip(&stats) {
        let name = format!("{}_seed{}.csv", trace.header.algorithm, trace.header.seed);
        let path = cfg.output_dir.join(&name);
        let csv = trace_csv(trace);
        write_file(&path, csv.as_bytes())?;
        runs.push(json!({
            "seed": trace.header.seed,
            "algorithm": trace.header.algorithm,
            "alpha": trace.header.alpha,
            "trace_file": name,
            "trace_sha256": hex::encode(Sha256::digest(csv.as_bytes())),
            "dataset_sha256": st.dataset_sha256,
            "rounds": trace.rounds.len(),
            "final_cum_regret": trace.final_regret(),
            "reward_ratio": trace.reward_ratio(),
            "clamp_events": st.clamp_events,
            "clamped_values": st.clamped_values,
            "confidence_violations": st.confidence_violations,
        }));
        trace_files.push(path);
    }
    let manifest = json!({
        "software": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "config_hash": cfg.hash(),
        "config": cfg,
        "seed_offset": seed_offset,
        "seeds": seeds,
        "parallel": parallel::is_parallel(),
        "runs": runs,
    });
    let manifest_path = cfg.output_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&manifest_path, text.as_bytes())?;
    Ok(RunOutput {
        traces,
        stats,
        trace_files,
        manifest: manifest_path,
    })
}

/// Computes the information-gain diagnostics and writes them as JSON.
pub fn diagnose_gamma(cfg: &GammaFile) -> Result<(InfoGainReport, PathBuf)> {
    let available = cfg.diagnostics.available_sets()?;
    let report = gamma_diagnostics(
        &available,
        &cfg.kernel,
        cfg.gp.noise_variance,
        cfg.diagnostics.budget,
        GammaLimits::default(),
    )
    .map_err(|e| match e {
        Error::Input(m) => Error::config("diagnostics", m),
        other => other,
    })?;
    create_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join(GAMMA_REPORT_FILE);
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&path, text.as_bytes())?;
    Ok((report, path))
}
