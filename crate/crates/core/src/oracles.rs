//! Deterministic combinatorial oracles.
//!
//! Every oracle maps a vector of per-arm values (UCB indices for the
//! learner, true expected outcomes for the benchmark) to a feasible super
//! arm. Ties always go to the lowest arm or node id.

use std::cmp::Ordering;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simple bipartite graph. Edge `e` is base arm `e` of the round.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteGraph {
    num_left: usize,
    num_right: usize,
    edges: Vec<(usize, usize)>,
    out_edges: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    pub fn new(num_left: usize, num_right: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut out_edges = vec![Vec::new(); num_left];
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for (e, &(l, r)) in edges.iter().enumerate() {
            if l >= num_left || r >= num_right {
                return Err(Error::Input(format!("edge {e} = ({l}, {r}) is out of range")));
            }
            if !seen.insert((l, r)) {
                return Err(Error::Input(format!("duplicate edge ({l}, {r})")));
            }
            out_edges[l].push(e);
        }
        Ok(BipartiteGraph {
            num_left,
            num_right,
            edges,
            out_edges,
        })
    }

    pub fn num_left(&self) -> usize {
        self.num_left
    }

    pub fn num_right(&self) -> usize {
        self.num_right
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn out_edges(&self, left: usize) -> &[usize] {
        &self.out_edges[left]
    }

    /// All edges leaving `seeds`, ascending.
    pub fn edges_of(&self, seeds: &[usize]) -> Vec<usize> {
        let mut arms: Vec<usize> = seeds.iter().flat_map(|&l| self.out_edges[l].iter().copied()).collect();
        arms.sort_unstable();
        arms
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeasibilitySpec {
    /// Any `budget` of the round's arms.
    TopK { budget: usize },
    /// `budget` left nodes; the super arm is their outgoing edges.
    CoverageLeftNodes { budget: usize, graph: BipartiteGraph },
}

impl FeasibilitySpec {
    pub fn budget(&self) -> usize {
        match self {
            FeasibilitySpec::TopK { budget } | FeasibilitySpec::CoverageLeftNodes { budget, .. } => *budget,
        }
    }
}

/// Selected base arms (ascending ids) and, for coverage problems, the
/// chosen left nodes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SuperArm {
    pub arms: Vec<usize>,
    pub seeds: Vec<usize>,
}

impl SuperArm {
    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| v.is_nan()) {
        Some(i) => Err(Error::Input(format!("value {i} is NaN"))),
        None => Ok(()),
    }
}

/// The `k` largest values, ties to the lower id. Exact for additive rewards.
pub fn top_k_oracle(values: &[f64], k: usize) -> Result<SuperArm> {
    check_values(values)?;
    if k > values.len() {
        return Err(Error::Input(format!(
            "budget {k} exceeds the {} available arms",
            values.len()
        )));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    Ok(SuperArm {
        arms: order,
        seeds: Vec::new(),
    })
}

/// Expected number of activated right nodes when `seeds` are chosen and edge
/// `e` activates independently with probability `edge_probs[e]`. Values
/// outside `[0, 1]` are clamped; the second return value counts them.
pub fn coverage_value(edge_probs: &[f64], seeds: &[usize], graph: &BipartiteGraph) -> Result<(f64, usize)> {
    check_coverage_inputs(edge_probs, graph)?;
    if let Some(&s) = seeds.iter().find(|&&s| s >= graph.num_left) {
        return Err(Error::Input(format!("left node {s} is out of range")));
    }
    let mut miss = vec![1.0; graph.num_right];
    let mut clamped = 0;
    for &l in seeds {
        for &e in graph.out_edges(l) {
            let (p, c) = clamp_prob(edge_probs[e]);
            clamped += c as usize;
            miss[graph.edges[e].1] *= 1.0 - p;
        }
    }
    Ok((miss.iter().map(|m| 1.0 - m).sum(), clamped))
}

#[inline]
fn clamp_prob(p: f64) -> (f64, bool) {
    let c = p.clamp(0.0, 1.0);
    (c, c != p)
}

fn check_coverage_inputs(edge_probs: &[f64], graph: &BipartiteGraph) -> Result<()> {
    check_values(edge_probs)?;
    if edge_probs.len() != graph.edges.len() {
        return Err(Error::Input(format!(
            "{} edge values for {} edges",
            edge_probs.len(),
            graph.edges.len()
        )));
    }
    Ok(())
}

/// Result of a coverage oracle call.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageSelection {
    pub super_arm: SuperArm,
    /// Coverage of the selection under the supplied (clamped) values.
    pub value: f64,
    /// Number of supplied values that fell outside `[0, 1]`.
    pub clamped: usize,
}

/// Greedy marginal-gain maximization of [`coverage_value`]; a
/// `(1 - 1/e)`-approximation since coverage is monotone submodular.
pub fn greedy_coverage_oracle(edge_probs: &[f64], k: usize, graph: &BipartiteGraph) -> Result<CoverageSelection> {
    check_coverage_inputs(edge_probs, graph)?;
    if k > graph.num_left {
        return Err(Error::Input(format!(
            "budget {k} exceeds the {} left nodes",
            graph.num_left
        )));
    }
    let mut clamped = 0;
    let probs: Vec<f64> = edge_probs
        .iter()
        .map(|&p| {
            let (c, was) = clamp_prob(p);
            clamped += was as usize;
            c
        })
        .collect();
    let mut miss = vec![1.0; graph.num_right];
    let mut chosen = vec![false; graph.num_left];
    let mut seeds = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for l in (0..graph.num_left).filter(|&l| !chosen[l]) {
            let gain: f64 = graph
                .out_edges(l)
                .iter()
                .map(|&e| miss[graph.edges[e].1] * probs[e])
                .sum();
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((l, gain));
            }
        }
        let Some((l, _)) = best else { break };
        chosen[l] = true;
        seeds.push(l);
        for &e in graph.out_edges(l) {
            miss[graph.edges[e].1] *= 1.0 - probs[e];
        }
    }
    seeds.sort_unstable();
    let value = miss.iter().map(|m| 1.0 - m).sum();
    Ok(CoverageSelection {
        super_arm: SuperArm {
            arms: graph.edges_of(&seeds),
            seeds,
        },
        value,
        clamped,
    })
}

/// Maximizes coverage over all `C(L, k)` seed sets; the lexicographically
/// first maximizer wins ties. Fails with [`Error::Size`] above `limit`
/// candidate sets.
pub fn exhaustive_coverage_oracle(
    edge_probs: &[f64],
    k: usize,
    graph: &BipartiteGraph,
    limit: u64,
) -> Result<CoverageSelection> {
    check_coverage_inputs(edge_probs, graph)?;
    if k > graph.num_left {
        return Err(Error::Input(format!(
            "budget {k} exceeds the {} left nodes",
            graph.num_left
        )));
    }
    let count = binomial(graph.num_left as u64, k as u64);
    if count > limit {
        return Err(Error::Size(format!(
            "exhaustive coverage over C({}, {k}) = {count} seed sets exceeds the limit {limit}",
            graph.num_left
        )));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut clamped = 0;
    for seeds in (0..graph.num_left).combinations(k) {
        let (v, c) = coverage_value(edge_probs, &seeds, graph)?;
        clamped = c;
        if best.as_ref().is_none_or(|(_, b)| v.total_cmp(b) == Ordering::Greater) {
            best = Some((seeds, v));
        }
    }
    let (seeds, value) = best.unwrap_or_default();
    Ok(CoverageSelection {
        super_arm: SuperArm {
            arms: graph.edges_of(&seeds),
            seeds,
        },
        value,
        clamped,
    })
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Top-K for `TopK` problems, greedy for coverage problems.
    #[default]
    Auto,
    TopK,
    GreedyCoverage,
    ExhaustiveCoverage,
}

/// Largest number of seed sets the exhaustive coverage oracle will try.
pub const EXHAUSTIVE_LIMIT: u64 = 200_000;

/// Oracle output plus the number of values clamped into `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub super_arm: SuperArm,
    pub clamped: usize,
}

/// Oracle dispatch by problem structure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Oracle {
    pub kind: OracleKind,
}

impl Oracle {
    pub fn new(kind: OracleKind) -> Self {
        Oracle { kind }
    }

    pub fn solve(&self, feasibility: &FeasibilitySpec, values: &[f64]) -> Result<Selection> {
        match (feasibility, self.kind) {
            (FeasibilitySpec::TopK { budget }, OracleKind::Auto | OracleKind::TopK) => Ok(Selection {
                super_arm: top_k_oracle(values, *budget)?,
                clamped: 0,
            }),
            (FeasibilitySpec::CoverageLeftNodes { budget, graph }, kind) => {
                let sel = match kind {
                    OracleKind::Auto | OracleKind::GreedyCoverage => greedy_coverage_oracle(values, *budget, graph)?,
                    OracleKind::ExhaustiveCoverage => {
                        exhaustive_coverage_oracle(values, *budget, graph, EXHAUSTIVE_LIMIT)?
                    }
                    OracleKind::TopK => {
                        return Err(Error::config("oracle.kind", "top_k cannot solve a coverage problem"))
                    }
                };
                Ok(Selection {
                    super_arm: sel.super_arm,
                    clamped: sel.clamped,
                })
            }
            (FeasibilitySpec::TopK { .. }, kind) => Err(Error::config(
                "oracle.kind",
                format!("{kind:?} cannot solve a top-K problem"),
            )),
        }
    }

    /// Checks that `arm` is feasible for `feasibility`.
    pub fn check_feasible(feasibility: &FeasibilitySpec, num_arms: usize, arm: &SuperArm) -> Result<()> {
        let ok = match feasibility {
            FeasibilitySpec::TopK { budget } => {
                arm.arms.len() <= *budget
                    && arm.arms.iter().all(|&a| a < num_arms)
                    && arm.arms.windows(2).all(|w| w[0] < w[1])
            }
            FeasibilitySpec::CoverageLeftNodes { budget, graph } => {
                arm.seeds.len() <= *budget
                    && arm.seeds.iter().all(|&s| s < graph.num_left)
                    && arm.seeds.windows(2).all(|w| w[0] < w[1])
                    && arm.arms == graph.edges_of(&arm.seeds)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Internal(format!("oracle returned an infeasible super arm {arm:?}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_k_examples() {
        assert_eq!(top_k_oracle(&[0.3, 0.9, 0.1, 0.5], 2).unwrap().arms, vec![1, 3]);
        assert_eq!(top_k_oracle(&[0.7; 5], 2).unwrap().arms, vec![0, 1]);
        assert_eq!(top_k_oracle(&[0.2, 0.9, 0.4], 1).unwrap().arms, vec![1]);
        assert!(matches!(top_k_oracle(&[0.1], 2), Err(Error::Input(_))));
        assert!(top_k_oracle(&[], 0).unwrap().is_empty());
    }

    #[test]
    fn coverage_value_examples() {
        let g = BipartiteGraph::new(1, 1, vec![(0, 0)]).unwrap();
        let (v, clamped) = coverage_value(&[0.3], &[0], &g).unwrap();
        assert!((v - 0.3).abs() < 1e-15);
        assert_eq!(clamped, 0);
        let g = BipartiteGraph::new(2, 1, vec![(0, 0), (1, 0)]).unwrap();
        assert_eq!(coverage_value(&[0.5, 0.5], &[0, 1], &g).unwrap().0, 0.75);
        assert_eq!(coverage_value(&[0.5, 0.5], &[], &g).unwrap().0, 0.0);
        assert_eq!(coverage_value(&[1.7, -0.2], &[0, 1], &g).unwrap(), (1.0, 2));
    }

    #[test]
    fn greedy_prefers_larger_total_coverage() {
        // Left 0 -> right 0 with 0.9; left 1 -> rights 1, 2 with 0.5 each.
        let g = BipartiteGraph::new(2, 3, vec![(0, 0), (1, 1), (1, 2)]).unwrap();
        let sel = greedy_coverage_oracle(&[0.9, 0.5, 0.5], 1, &g).unwrap();
        assert_eq!(sel.super_arm.seeds, vec![1]);
        assert_eq!(sel.super_arm.arms, vec![1, 2]);
        assert!((sel.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn greedy_with_full_budget_covers_everything() {
        let g = BipartiteGraph::new(3, 2, vec![(0, 0), (1, 0), (2, 1), (1, 1)]).unwrap();
        let p = [0.2, 0.6, 0.3, 0.1];
        let sel = greedy_coverage_oracle(&p, 3, &g).unwrap();
        let full = coverage_value(&p, &[0, 1, 2], &g).unwrap().0;
        assert!((sel.value - full).abs() < 1e-12);
        assert_eq!(sel.super_arm.arms, vec![0, 1, 2, 3]);
    }

    #[test]
    fn greedy_empty_graph() {
        let g = BipartiteGraph::new(0, 0, vec![]).unwrap();
        let sel = greedy_coverage_oracle(&[], 0, &g).unwrap();
        assert!(sel.super_arm.is_empty());
        assert_eq!(sel.value, 0.0);
    }

    #[test]
    fn graph_validation() {
        assert!(BipartiteGraph::new(1, 1, vec![(0, 1)]).is_err());
        assert!(BipartiteGraph::new(1, 1, vec![(0, 0), (0, 0)]).is_err());
    }

    #[test]
    fn oracle_dispatch_and_feasibility() {
        let g = BipartiteGraph::new(2, 1, vec![(0, 0), (1, 0)]).unwrap();
        let cov = FeasibilitySpec::CoverageLeftNodes { budget: 1, graph: g };
        let sel = Oracle::default().solve(&cov, &[0.2, 0.4]).unwrap();
        assert_eq!(sel.super_arm.seeds, vec![1]);
        Oracle::check_feasible(&cov, 2, &sel.super_arm).unwrap();
        assert!(matches!(
            Oracle::new(OracleKind::TopK).solve(&cov, &[0.2, 0.4]),
            Err(Error::Config { .. })
        ));
        let bad = SuperArm { arms: vec![0, 1], seeds: vec![0] };
        assert!(matches!(Oracle::check_feasible(&cov, 2, &bad), Err(Error::Internal(_))));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 3), 120);
        assert_eq!(binomial(4, 5), 0);
        assert_eq!(binomial(75, 3), 67_525);
    }
}
