use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};

use super::config::RunConfig;
use super::run::run;

/// Summary statistics for one swept value.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub runs: usize,
    pub ratio_mean: f64,
    pub ratio_std: f64,
    pub regret_mean: f64,
    pub regret_std: f64,
    pub output_dir: PathBuf,
}

#[derive(Clone, Debug)]
pub struct SweepSummary {
    pub param: String,
    pub rows: Vec<SweepRow>,
    pub summary_file: PathBuf,
}

/// Parses a command-line value as a TOML literal, falling back to a bare
/// string (so `gp_synthetic` works without quotes).
pub fn parse_sweep_value(text: &str) -> toml::Value {
    let text = text.trim();
    match toml::from_str::<toml::Table>(&format!("v = {text}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(text.to_string()),
    }
}

fn display_value(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Mean and sample standard deviation (zero for a single value).
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Returns `base` with the dotted `param` replaced by `value`.
pub(crate) fn with_param(base: &RunConfig, param: &str, value: &toml::Value) -> Result<RunConfig> {
    let keys: Vec<&str> = param.split('.').collect();
    if param.is_empty() || keys.iter().any(|k| k.is_empty()) {
        return Err(Error::config(param, "not a valid parameter path"));
    }
    let mut doc = toml::Value::try_from(base).expect("config serializes");
    let (last, parents) = keys.split_last().expect("non-empty");
    let mut table = doc.as_table_mut().expect("config is a table");
    for key in parents {
        table = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::config(param, format!("`{key}` is not a table")))?;
    }
    table.insert(last.to_string(), value.clone());
    let cfg: RunConfig = doc
        .try_into()
        .map_err(|e: toml::de::Error| Error::config(param, e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Runs `base` once per value of `param` and writes `summary.csv`.
pub fn sweep(base: &RunConfig, param: &str, values: &[toml::Value]) -> Result<SweepSummary> {
    if values.is_empty() {
        return Err(Error::config(param, "sweep needs at least one value"));
    }
    let configs: Vec<(String, RunConfig)> = values
        .iter()
        .map(|v| with_param(base, param, v).map(|c| (display_value(v), c)))
        .collect::<Result<_>>()?;
    let root = base.output_dir.join(format!("sweep_{param}"));
    let mut rows = Vec::with_capacity(configs.len());
    for (label, mut cfg) in configs {
        let dir_name: String = label
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
            .collect();
        cfg.output_dir = root.join(format!("{param}={dir_name}"));
        let out = run(&cfg, 0)?;
        let ratios: Vec<f64> = out.traces.iter().map(|t| t.reward_ratio()).collect();
        let regrets: Vec<f64> = out.traces.iter().map(|t| t.final_regret()).collect();
        let (ratio_mean, ratio_std) = mean_std(&ratios);
        let (regret_mean, regret_std) = mean_std(&regrets);
        rows.push(SweepRow {
            value: label,
            runs: out.traces.len(),
            ratio_mean,
            ratio_std,
            regret_mean,
            regret_std,
            output_dir: cfg.output_dir,
        });
    }
    let mut csv = String::from("value,runs,reward_ratio_mean,reward_ratio_std,final_regret_mean,final_regret_std\n");
    for r in &rows {
        let value = if r.value.contains(',') { format!("\"{}\"", r.value.replace('"', "\"\"")) } else { r.value.clone() };
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            value, r.runs, r.ratio_mean, r.ratio_std, r.regret_mean, r.regret_std
        )
        .expect("writing to a String");
    }
    let summary_file = root.join("summary.csv");
    std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    std::fs::write(&summary_file, csv).map_err(|e| Error::io(&summary_file, e))?;
    Ok(SweepSummary {
        param: param.to_string(),
        rows,
        summary_file,
    })
}
