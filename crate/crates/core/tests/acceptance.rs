//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fail.

use std::time::Instant;

use gpcb_core::harness::{run_seed, trace_csv, RunConfig};
use gpcb_core::kernels::{Context, KernelSpec};
use gpcb_core::metrics::{gamma_diagnostics, GammaLimits, RunTrace, ARITHMETIC_SLACK};
use gpcb_core::oracles::{
    exhaustive_coverage_oracle, greedy_coverage_oracle, top_k_oracle, BipartiteGraph, EXHAUSTIVE_LIMIT,
};
use gpcb_core::{parallel, GpState};
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn random_contexts(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Context> {
    (0..n)
        .map(|_| Context::new((0..dim).map(|_| rng.random::<f64>()).collect()))
        .collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    for _ in 0..100 {
        let n = rng.random_range(1..=500);
        let dim = rng.random_range(1..=4);
        let kernel = match rng.random_range(0..3) {
            0 => KernelSpec::squared_exponential(rng.random_range(0.1..2.0)),
            1 => KernelSpec::matern(2.5, rng.random_range(0.1..2.0)),
            _ => KernelSpec::matern(1.5, rng.random_range(0.1..2.0)),
        };
        let noise = rng.random_range(0.001..0.5);
        let xs = random_contexts(&mut rng, n, dim);
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut gp = GpState::new(kernel, noise).unwrap();
        let mut i = 0;
        while i < n {
            let b = rng.random_range(1..=10).min(n - i);
            gp = gp.batch_update(&xs[i..i + b], &ys[i..i + b]).unwrap();
            i += b;
        }
        let scratch = GpState::from_history(kernel, noise, xs, ys).unwrap();
        for q in random_contexts(&mut rng, 10, dim) {
            let a = gp.posterior(&q).unwrap();
            let b = scratch.posterior(&q).unwrap();
            worst = worst.max(rel_err(a.mean, b.mean)).max(rel_err(a.variance, b.variance));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst <= 1e-8 && secs < 60.0,
        detail: format!("max relative error {worst:.3e} (limit 1e-8), {secs:.1}s (limit 60s)"),
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let dim = rng.random_range(1..=3);
        let kernel = KernelSpec::squared_exponential(rng.random_range(0.05..2.0));
        let noise = rng.random_range(1e-4..1.0);
        let n = rng.random_range(0..30);
        let xs = random_contexts(&mut rng, n, dim);
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gp = GpState::from_history(kernel, noise, xs, ys).unwrap();
        let q = random_contexts(&mut rng, 1, dim).remove(0);
        let before = gp.posterior(&q).unwrap().variance;
        let b = rng.random_range(1..=5);
        let batch = random_contexts(&mut rng, b, dim);
        let outcomes: Vec<f64> = (0..b).map(|_| rng.random_range(-1.0..1.0)).collect();
        let after = gp.batch_update(&batch, &outcomes).unwrap().posterior(&q).unwrap().variance;
        worst = worst.max(after - before);
        if after > before + 1e-10 {
            violations += 1;
        }
    }
    Outcome {
        pass: violations == 0,
        detail: format!("{violations} violations in 1000 trials, largest increase {worst:.3e} (slack 1e-10)"),
    }
}

fn criterion_3(traces: &[RunTrace]) -> Outcome {
    let bad = traces.iter().filter(|t| t.total_confidence_violations() > 0).count();
    let frac = bad as f64 / traces.len() as f64;
    Outcome {
        pass: frac <= 0.05,
        detail: format!("{bad}/{} seeds with a confidence violation, fraction {frac:.3} (limit 0.05)", traces.len()),
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let mut instances = 0;
    let mut upper_fail = 0;
    let mut lower_fail = 0;
    let mut volatile = 0;
    for size in 1..=5usize {
        for rounds in 1..=3usize {
            for budget in 1..=2usize {
                for rep in 0..6 {
                    let dim = rng.random_range(1..=2);
                    let kernel = match rep % 3 {
                        0 => KernelSpec::squared_exponential(rng.random_range(0.1..2.0)),
                        1 => KernelSpec::matern(1.5, rng.random_range(0.1..2.0)),
                        _ => KernelSpec::linear(),
                    };
                    let noise = rng.random_range(0.05..2.0);
                    let ground = random_contexts(&mut rng, size, dim);
                    let non_volatile = rep < 3;
                    let available: Vec<Vec<Context>> = (0..rounds)
                        .map(|_| {
                            if non_volatile {
                                ground.clone()
                            } else {
                                let keep = rng.random_range(1..=size);
                                rand::seq::index::sample(&mut rng, size, keep)
                                    .into_iter()
                                    .map(|i| ground[i].clone())
                                    .collect()
                            }
                        })
                        .collect();
                    let report = gamma_diagnostics(&available, &kernel, noise, budget, GammaLimits::default()).unwrap();
                    instances += 1;
                    let k = budget as f64;
                    if report.gamma_bar_t > k * report.gamma_t + ARITHMETIC_SLACK {
                        upper_fail += 1;
                    }
                    if report.non_volatile {
                        let gkt = report.gamma_kt.expect("KT <= 6 is enumerated");
                        if gkt / k > report.gamma_bar_t + ARITHMETIC_SLACK {
                            lower_fail += 1;
                        }
                    } else {
                        volatile += 1;
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: upper_fail == 0 && lower_fail == 0 && secs < 300.0,
        detail: format!(
            "{instances} instances ({volatile} volatile): {upper_fail} upper-bound and {lower_fail} lower-bound failures, {secs:.1}s"
        ),
    }
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let mut topk_fail = 0;
    for _ in 0..500 {
        let m = rng.random_range(1..=12);
        let k = rng.random_range(1..=4);
        // Coarse values so ties occur.
        let values: Vec<f64> = (0..m).map(|_| (rng.random_range(-5..=5) as f64) / 2.0).collect();
        let chosen = top_k_oracle(&values, k.min(m)).unwrap();
        let got: f64 = chosen.arms.iter().map(|&a| values[a]).sum();
        let best = (0..m)
            .combinations(k.min(m))
            .map(|c| c.iter().map(|&a| values[a]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        if chosen.len() != k.min(m) || got < best - 1e-12 {
            topk_fail += 1;
        }
    }
    let alpha = 1.0 - (-1.0f64).exp();
    let mut greedy_fail = 0;
    let mut min_ratio = f64::INFINITY;
    for _ in 0..200 {
        let left = rng.random_range(1..=10);
        let right = rng.random_range(1..=15);
        let p = rng.random_range(0.1..0.6);
        let edges: Vec<(usize, usize)> =
            (0..left).flat_map(|l| (0..right).map(move |r| (l, r))).filter(|_| rng.random_bool(p)).collect();
        let graph = BipartiteGraph::new(left, right, edges).unwrap();
        let probs: Vec<f64> = (0..graph.edges().len()).map(|_| rng.random::<f64>()).collect();
        let k = rng.random_range(1..=left.min(4));
        let greedy = greedy_coverage_oracle(&probs, k, &graph).unwrap();
        let exact = exhaustive_coverage_oracle(&probs, k, &graph, EXHAUSTIVE_LIMIT).unwrap();
        if exact.value > 0.0 {
            min_ratio = min_ratio.min(greedy.value / exact.value);
        }
        if greedy.value < alpha * exact.value - 1e-12 {
            greedy_fail += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: topk_fail == 0 && greedy_fail == 0 && secs < 120.0,
        detail: format!(
            "top-K {topk_fail}/500 mismatches; greedy {greedy_fail}/200 below 1-1/e, worst ratio {min_ratio:.4}; {secs:.1}s"
        ),
    }
}

fn config(text: &str) -> RunConfig {
    RunConfig::from_toml_str(text).expect("acceptance config is valid")
}

fn coverage_config() -> RunConfig {
    config(
        r#"
seeds = [101, 102, 103, 104, 105, 106, 107, 108, 109, 110, 111, 112, 113, 114, 115, 116, 117, 118, 119, 120]
[kernel]
family = "squared_exponential"
lengthscale = 1.0
[gp]
noise_variance = 0.01
[policy]
delta = 0.05
max_arms = 50
budget = 3
[env]
kind = "gp_synthetic"
dim = 2
mean_arms = 20
horizon = 200
budget = 3
noise_std = 0.1
lengthscale = 1.0
grid_size = 1000
"#,
    )
}

fn synthetic_config(env_lengthscale: f64) -> RunConfig {
    config(&format!(
        r#"
seeds = [201, 202, 203, 204, 205]
[kernel]
family = "squared_exponential"
lengthscale = 1.0
[gp]
noise_variance = 0.01
[policy]
max_arms = 60
budget = 3
[env]
kind = "gp_synthetic"
dim = 3
mean_arms = 20
horizon = 100
budget = 3
lengthscale = {env_lengthscale}
grid_size = 1500
"#
    ))
}

fn sparse_identity_configs() -> (RunConfig, RunConfig) {
    let exact = synthetic_config(0.5);
    let mut exact = RunConfig { seeds: vec![301], ..exact };
    exact.env.horizon = 50;
    let mut sparse = exact.clone();
    sparse.gp.sparse.enabled = true;
    sparse.gp.sparse.num_inducing = 50 * 3;
    (exact, sparse)
}

fn crowdsourcing_configs() -> (RunConfig, RunConfig) {
    let exact = config(
        r#"
seeds = [401, 402, 403, 404, 405]
[kernel]
family = "squared_exponential"
lengthscale = 1.0
[gp]
noise_variance = 0.01
[policy]
max_arms = 60
budget = 5
[env]
kind = "crowdsourcing"
mean_arms = 20
horizon = 150
budget = 5
"#,
    );
    let mut sparse = exact.clone();
    sparse.gp.sparse.enabled = true;
    sparse.gp.sparse.num_inducing = 50;
    (exact, sparse)
}

fn run_all(cfg: &RunConfig) -> Vec<RunTrace> {
    parallel::map(&cfg.seeds, |&s| run_seed(cfg, s).map(|(t, _)| t))
        .into_iter()
        .collect::<gpcb_core::Result<_>>()
        .expect("run succeeds")
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn criterion_6(high: &[RunTrace], low: &[RunTrace], secs: f64) -> Outcome {
    let r_high = mean(high.iter().map(RunTrace::reward_ratio));
    let r_low = mean(low.iter().map(RunTrace::reward_ratio));
    Outcome {
        pass: r_high >= 0.85 && r_high - r_low >= 0.10 && secs < 600.0,
        detail: format!(
            "ratio at l=1.0 {r_high:.4} (>= 0.85), at l=0.01 {r_low:.4}, gap {:.4} (>= 0.10), {secs:.1}s",
            r_high - r_low
        ),
    }
}

fn criterion_7(exact50: &RunTrace, sparse50: &RunTrace, exact: &[RunTrace], sparse: &[RunTrace]) -> Outcome {
    let identical = exact50.selections() == sparse50.selections();
    let ratio = mean(
        sparse
            .iter()
            .zip(exact)
            .map(|(s, e)| s.cumulative_expected_reward() / e.cumulative_expected_reward()),
    );
    Outcome {
        pass: identical && ratio >= 0.95,
        detail: format!("full-history selections identical: {identical}; s=50 crowdsourcing reward ratio {ratio:.4} (>= 0.95)"),
    }
}

fn criterion_8(traces: &[RunTrace]) -> Outcome {
    let regrets: Vec<Vec<f64>> = traces.iter().map(RunTrace::cumulative_regret).collect();
    let at = |i: usize| mean(regrets.iter().map(|r| if i == 0 { 0.0 } else { r[i - 1] }));
    let t = regrets[0].len();
    let first = at(20) - at(0);
    let last = at(t) - at(t - 20);
    Outcome {
        pass: last < 0.5 * first,
        detail: format!("regret growth first 20 rounds {first:.4}, last 20 rounds {last:.4} (must be < {:.4})", 0.5 * first),
    }
}

fn criterion_9(runs: &[(&RunConfig, &[RunTrace])]) -> Outcome {
    let mut compared = 0;
    let mut differing = 0;
    for (cfg, traces) in runs {
        let again = run_all(cfg);
        for (a, b) in traces.iter().zip(&again) {
            compared += 1;
            if trace_csv(a).as_bytes() != trace_csv(b).as_bytes() {
                differing += 1;
            }
        }
    }
    Outcome {
        pass: differing == 0,
        detail: format!("{differing} of {compared} re-run traces differ"),
    }
}

fn report(n: usize, outcome: &Outcome) {
    let verdict = if outcome.pass { "PASS" } else { "FAIL" };
    println!("criterion {n}: {verdict}: {}", outcome.detail);
}

fn main() {
    let mut results = Vec::new();
    let mut record = |n: usize, o: Outcome| {
        report(n, &o);
        results.push(o.pass);
    };
    record(1, criterion_1());
    record(2, criterion_2());

    let coverage = coverage_config();
    let start = Instant::now();
    let coverage_traces = run_all(&coverage);
    let mut c3 = criterion_3(&coverage_traces);
    let secs = start.elapsed().as_secs_f64();
    c3.pass &= secs < 300.0;
    c3.detail.push_str(&format!(", {secs:.1}s"));
    record(3, c3);

    record(4, criterion_4());
    record(5, criterion_5());

    let high_cfg = synthetic_config(1.0);
    let low_cfg = synthetic_config(0.01);
    let start = Instant::now();
    let high = run_all(&high_cfg);
    let low = run_all(&low_cfg);
    record(6, criterion_6(&high, &low, start.elapsed().as_secs_f64()));

    let (exact50_cfg, sparse50_cfg) = sparse_identity_configs();
    let exact50 = run_all(&exact50_cfg);
    let sparse50 = run_all(&sparse50_cfg);
    let (crowd_cfg, crowd_sparse_cfg) = crowdsourcing_configs();
    let crowd = run_all(&crowd_cfg);
    let crowd_sparse = run_all(&crowd_sparse_cfg);
    record(7, criterion_7(&exact50[0], &sparse50[0], &crowd, &crowd_sparse));

    record(8, criterion_8(&high));

    record(
        9,
        criterion_9(&[
            (&coverage, &coverage_traces),
            (&high_cfg, &high),
            (&low_cfg, &low),
            (&exact50_cfg, &exact50),
            (&sparse50_cfg, &sparse50),
            (&crowd_cfg, &crowd),
            (&crowd_sparse_cfg, &crowd_sparse),
        ]),
    );

    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
