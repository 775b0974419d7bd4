//! Node weights and the modified weighted PageRank over the abstract graph.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::abstractor::{AbstractGraph, AbstractNode};
use crate::skeleton::LinRow;
use crate::tiler::Tile;

pub const DAMPING: f64 = 0.85;
pub const TOLERANCE: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 1000;
const OVERFLOW_GUARD: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RankError {
    #[error("pagerank diverged at iteration {iteration}: node {node} reached {value}")]
    RankDivergence { iteration: usize, node: usize, value: f64 },
}

/// Coefficient-variance weight of `Σ aᵢ·xᵢ − r = 0`:
/// `μ = (Σaᵢ − 1)/(n+1)`, `W = [Σ(aᵢ − μ)² + (−1 − μ)²] / μ²`.
///
/// When `μ = 0` the quotient is undefined; `(n+1)·Σaᵢ² + 1` stands in.
pub fn variance_weight(a: &[BigInt]) -> BigRational {
    let n = BigInt::from(a.len());
    let sum: BigInt = a.iter().sum();
    let mu = BigRational::new(sum - 1, &n + 1);
    if mu.is_zero() {
        let sq: BigInt = a.iter().map(|x| x * x).sum();
        return BigRational::from_integer((n + 1) * sq + 1);
    }
    let dev = |x: BigRational| {
        let d = x - &mu;
        &d * &d
    };
    let total = a.iter().map(|x| dev(BigRational::from_integer(x.clone()))).fold(BigRational::zero(), |s, d| s + d)
        + dev(BigRational::from_integer(BigInt::from(-1)));
    total / (&mu * &mu)
}

/// Weight of a linear tile taken as `form − root = 0`.
pub fn linear_tile_weight(t: &Tile) -> Option<BigRational> {
    let form = t.linear_form.as_ref()?;
    let a: Vec<BigInt> = form.signed_terms().into_iter().map(|(_, c)| c).collect();
    Some(variance_weight(&a))
}

/// Weight of a merged linear row, read in its preferred scaling so that the
/// value does not depend on how the row happened to be written.
pub fn linear_row_weight(row: &LinRow) -> BigRational {
    match row.best_scalings().first() {
        Some(s) => variance_weight(&s.weight_coefficients()),
        None => BigRational::zero(),
    }
}

pub fn node_weight(g: &AbstractGraph, i: usize) -> f64 {
    match g.nodes[i] {
        AbstractNode::Retained(_) => 1.0,
        AbstractNode::Linear(_) => g.node_weights[i].to_f64().unwrap_or(f64::MAX),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankScores {
    /// PageRank per abstract node position.
    pub pr: Vec<f64>,
    /// Weights actually used in the iteration, after scaling.
    pub scaled_weights: Vec<f64>,
    pub damping: f64,
    pub tolerance: f64,
    pub iterations_used: usize,
    /// The last update moved no score by `tolerance` or more.
    pub converged: bool,
    /// PR vector after each iteration, starting from the all-ones vector.
    pub trace: Vec<Vec<f64>>,
}

impl RankScores {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,node,pr\n");
        for (it, row) in self.trace.iter().enumerate() {
            for (n, v) in row.iter().enumerate() {
                let _ = writeln!(out, "{it},{n},{v}");
            }
        }
        out
    }
}

/// Scales weights by `1 / (max weight · √(max in-degree))`: every iteration
/// row then sums to at most `d`, so the update is a contraction in the
/// max-norm, and relative order is untouched.
fn scaled_weights(g: &AbstractGraph, preds: &[Vec<usize>]) -> Vec<f64> {
    let max_w = g.node_weights.iter().max().cloned().unwrap_or_else(BigRational::zero);
    let indeg = preds.iter().map(Vec::len).max().unwrap_or(0).max(1) as f64;
    let norm = indeg.sqrt();
    g.node_weights
        .iter()
        .map(|w| {
            if max_w.is_zero() {
                0.0
            } else {
                (w / &max_w).to_f64().unwrap_or(0.0) / norm
            }
        })
        .collect()
}

/// `PR(u) ← (1−d) + d·W(u)·Σ_{v→u} PR(v)·W(v)`, Jacobi-style, from PR = 1.
///
/// Summands are added in sorted order so isomorphic nodes land on bitwise
/// identical values.
pub fn weighted_pagerank(g: &AbstractGraph) -> Result<RankScores, RankError> {
    let preds = g.predecessors();
    let w = scaled_weights(g, &preds);
    let n = g.len();
    let mut pr = vec![1.0; n];
    let mut trace = vec![pr.clone()];
    let mut iterations_used = 0;
    let mut converged = n == 0;
    let mut terms = Vec::new();
    for iteration in 1..=MAX_ITERATIONS {
        let mut next = vec![0.0; n];
        for u in 0..n {
            terms.clear();
            terms.extend(preds[u].iter().map(|&v| pr[v] * w[v]));
            terms.sort_by(f64::total_cmp);
            let s: f64 = terms.iter().sum();
            next[u] = (1.0 - DAMPING) + DAMPING * w[u] * s;
            if !next[u].is_finite() || next[u] > OVERFLOW_GUARD {
                return Err(RankError::RankDivergence { iteration, node: u, value: next[u] });
            }
        }
        let delta = pr.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pr = next;
        trace.push(pr.clone());
        iterations_used = iteration;
        if delta < TOLERANCE {
            converged = true;
            break;
        }
    }
    Ok(RankScores { pr, scaled_weights: w, damping: DAMPING, tolerance: TOLERANCE, iterations_used, converged, trace })
}

/// Weight of a variable that only appears in linear rows: the sum
/// over rows other than its own of `|coefficient| × row weight`.
pub fn new_variable_weight(own_row: Option<usize>, coefficients: &[(usize, BigInt)], row_weights: &[f64]) -> f64 {
    coefficients
        .iter()
        .filter(|(r, _)| Some(*r) != own_row)
        .map(|(r, c)| c.magnitude().to_f64().unwrap_or(f64::MAX) * row_weights[*r])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstractor::abstract_graph;
    use crate::dfg::NodeId;
    use crate::skeleton::{merge_linear, skeleton_of};
    use crate::test_support::{parse, vitalik};
    use std::collections::BTreeSet;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    // Independent evaluation with f64 sums, for cross-checking the exact path.
    fn variance_f64(a: &[f64]) -> f64 {
        let n = a.len() as f64;
        let mu = (a.iter().sum::<f64>() - 1.0) / (n + 1.0);
        let s: f64 = a.iter().map(|x| (x - mu).powi(2)).sum::<f64>() + (-1.0 - mu).powi(2);
        s / (mu * mu)
    }

    #[test]
    fn hand_evaluated_weights() {
        assert_eq!(variance_weight(&ints(&[1, 1])), rat(24, 1));
        assert_eq!(variance_weight(&ints(&[5, 1, 1])), rat(76, 9));
        assert_eq!(variance_weight(&ints(&[2])), rat(18, 1));
    }

    #[test]
    fn exact_matches_float_reference() {
        for a in [vec![3, -1], vec![7, 1, 1, 4], vec![-5], vec![2, 2, 2]] {
            let exact = variance_weight(&ints(&a)).to_f64().unwrap();
            let approx = variance_f64(&a.iter().map(|&x| x as f64).collect::<Vec<_>>());
            assert!((exact - approx).abs() < 1e-9 * approx.abs().max(1.0), "{a:?}");
        }
    }

    #[test]
    fn zero_mean_fallback() {
        // a − b = 0 read as a = b: coefficients (1), μ = 0.
        assert_eq!(variance_weight(&ints(&[1])), rat(3, 1));
        // Nothing but the −1: μ = −1 and every deviation vanishes.
        assert_eq!(variance_weight(&ints(&[])), BigRational::zero());
    }

    #[test]
    fn scale_sensitive() {
        assert_ne!(variance_weight(&ints(&[1, 1])), variance_weight(&ints(&[2, 2])));
    }

    #[test]
    fn tile_weight_from_linear_form() {
        let sys = parse(r#"{"prime": "101", "num_vars": 3, "constraints": [{"a": {"1": "2"}, "b": {"0": "1"}, "c": {"2": "1"}}]}"#);
        let g = crate::dfg::build_rgraph(&sys).unwrap();
        let tiles = crate::tiler::select_tiles(&g);
        assert_eq!(linear_tile_weight(&tiles[0]), Some(rat(18, 1)));
    }

    #[test]
    fn distinct_linear_rows_get_distinct_weights() {
        let sys = parse(
            r#"{"prime": "101", "num_vars": 5, "constraints": [
            {"a": {"1": "1", "2": "1"}, "b": {"0": "1"}, "c": {"3": "1"}},
            {"a": {"1": "2", "3": "1"}, "b": {"0": "1"}, "c": {"4": "1"}},
            {"a": {"3": "1"}, "b": {"3": "1"}, "c": {"3": "1"}}]}"#,
        );
        let (_, sk) = skeleton_of(&sys).unwrap();
        let w: BTreeSet<_> = sk.lins.iter().map(linear_row_weight).collect();
        assert_eq!(w, [rat(21, 2), rat(24, 1)].into());
    }

    #[test]
    fn isolated_node_settles_at_floor() {
        let g = AbstractGraph { nodes: vec![AbstractNode::Retained(NodeId(0))], edges: BTreeSet::new(), node_weights: vec![rat(1, 1)] };
        let s = weighted_pagerank(&g).unwrap();
        assert!((s.pr[0] - 0.15).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair_is_equal() {
        let g = AbstractGraph {
            nodes: vec![AbstractNode::Retained(NodeId(0)), AbstractNode::Retained(NodeId(1))],
            edges: [(0, 1), (1, 0)].into(),
            node_weights: vec![rat(1, 1), rat(1, 1)],
        };
        let s = weighted_pagerank(&g).unwrap();
        assert_eq!(s.pr[0].to_bits(), s.pr[1].to_bits());
        // Fixed point of p = 0.15 + 0.85·p.
        assert!((s.pr[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dense_clique_still_converges() {
        let n = 8;
        let edges = (0..n).flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b))).collect();
        let g = AbstractGraph {
            nodes: (0..n).map(AbstractNode::Linear).collect(),
            edges,
            node_weights: vec![rat(24, 1); n],
        };
        let s = weighted_pagerank(&g).unwrap();
        assert!(s.iterations_used < MAX_ITERATIONS);
        assert!(s.pr.iter().all(|&p| p >= 0.15));
    }

    #[test]
    fn vitalik_ranking() {
        let (_, sk) = skeleton_of(&vitalik()).unwrap();
        let sk = merge_linear(&sk).unwrap();
        let g = abstract_graph(&sk);
        let s = weighted_pagerank(&g).unwrap();
        let (x, sym1, y, l) = (s.pr[0], s.pr[1], s.pr[2], s.pr[3]);
        assert!(l < sym1 && l < y, "{:?}", s.pr);
        assert!(x > sym1);
        assert!(s.pr.iter().all(|&p| p >= 0.15));
        assert!(s.trace.iter().all(|row| row.iter().all(|&p| p >= 0.15)));
        assert!(s.trace_csv().starts_with("iteration,node,pr\n0,0,1\n"));
    }

    #[test]
    fn eq9_examples() {
        let w = [5.0, 2.0, 4.0];
        assert_eq!(new_variable_weight(Some(0), &[(0, BigInt::from(3))], &w), 0.0);
        assert_eq!(new_variable_weight(Some(1), &[(1, BigInt::from(1)), (0, BigInt::from(-2))], &w), 10.0);
        assert_eq!(new_variable_weight(Some(0), &[(0, BigInt::from(7)), (1, BigInt::from(1)), (2, BigInt::from(3))], &w), 14.0);
    }
}
