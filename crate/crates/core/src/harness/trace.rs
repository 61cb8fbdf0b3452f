use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::metrics::RunTrace;

pub const TRACE_COLUMNS: [&str; 10] = [
    "round",
    "m_t",
    "selected_ids",
    "reward_realized",
    "reward_expected",
    "opt_expected",
    "benchmark_expected",
    "cum_regret",
    "beta",
    "wall_ms",
];

/// Renders a trace as CSV. Selected ids are `;`-separated; floats use the
/// shortest representation that round-trips.
pub fn trace_csv(trace: &RunTrace) -> String {
    let mut out = TRACE_COLUMNS.join(",");
    out.push('\n');
    for (r, cum) in trace.rounds.iter().zip(trace.cumulative_regret()) {
        let ids: Vec<String> = r.selected.iter().map(usize::to_string).collect();
        let wall = r.wall_ms.map(|w| format!("{w:.3}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.round,
            r.m_t,
            ids.join(";"),
            r.reward_realized,
            r.reward_expected,
            r.opt_expected,
            r.benchmark_expected,
            cum,
            r.beta,
            wall
        )
        .expect("writing to a String");
    }
    out
}

/// Parsed row of a trace file, for tests and post-processing.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub round: usize,
    pub m_t: usize,
    pub selected: Vec<usize>,
    pub values: [f64; 6],
    pub wall_ms: Option<f64>,
}

pub fn read_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Input("empty trace".into()))?;
    if header != TRACE_COLUMNS.join(",") {
        return Err(Error::Input(format!("unexpected trace header `{header}`")));
    }
    let bad = |n: usize| Error::Input(format!("malformed trace line {n}"));
    lines
        .enumerate()
        .map(|(i, line)| {
            let n = i + 2;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != TRACE_COLUMNS.len() {
                return Err(bad(n));
            }
            let selected = if f[2].is_empty() {
                Vec::new()
            } else {
                f[2].split(';').map(|s| s.parse().map_err(|_| bad(n))).collect::<Result<_>>()?
            };
            let mut values = [0.0; 6];
            for (v, s) in values.iter_mut().zip(&f[3..9]) {
                *v = s.parse().map_err(|_| bad(n))?;
            }
            Ok(TraceRow {
                round: f[0].parse().map_err(|_| bad(n))?,
                m_t: f[1].parse().map_err(|_| bad(n))?,
                selected,
                values,
                wall_ms: if f[9].is_empty() { None } else { Some(f[9].parse().map_err(|_| bad(n))?) },
            })
        })
        .collect()
}
