//! Ordering and emission of the canonical form.
//!
//! Variables and rows get initial keys from the PageRank scores; colour
//! refinement propagates those keys through the incidence structure, and any
//! ties left over are resolved by trying each candidate and keeping the
//! lexicographically smallest output, so the result does not depend on input
//! order.

use std::cmp::{Ordering, Reverse};
use std::collections::BTreeMap;

use num_bigint::BigInt;
use thiserror::Error;

use crate::colour::{classes, coefficient_label, ranks, Incidence, OPERAND, OUTPUT};
use crate::abstractor::{abstract_graph, AbstractGraph, AbstractNode};
use crate::dfg::{NodeId, RGraph, RNode};
use crate::r1cs::{serialize_r1cs, Constraint, LinearCombination, R1cs, VarFate, VariableMap};
use crate::ranker::{new_variable_weight, weighted_pagerank, RankError, RankScores};
use crate::skeleton::{merge_linear, skeleton_of, Skeleton, SkeletonError};
use crate::tiler::{select_tiles, Tile};

/// Upper bound on fully-ordered candidates examined while breaking ties.
pub const LEAF_BUDGET: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CanonError {
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Rank(#[from] RankError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub r1cs: R1cs,
    pub map: VariableMap,
}

/// Intermediate artefacts, for inspection.
#[derive(Debug, Clone)]
pub struct Trace {
    pub graph: RGraph,
    pub tiles: Vec<Tile>,
    /// After merging.
    pub skeleton: Skeleton,
    pub abstract_graph: AbstractGraph,
    pub scores: RankScores,
    /// Fully-ordered candidates examined by the tie-break search.
    pub leaves: usize,
}

pub fn normalize(sys: &R1cs) -> Result<Normalized, CanonError> {
    normalize_traced(sys).map(|(n, _)| n)
}

pub fn normalize_traced(sys: &R1cs) -> Result<(Normalized, Trace), CanonError> {
    let (graph, raw) = skeleton_of(sys)?;
    let tiles = select_tiles(&graph);
    let skeleton = merge_linear(&raw)?;
    let ag = abstract_graph(&skeleton);
    let scores = weighted_pagerank(&ag)?;
    let problem = Problem::new(&skeleton, &ag, &scores);
    let (vc, rc) = problem.initial_colours();
    let mut best = None;
    let mut leaves = 0;
    problem.search(vc, rc, &mut best, &mut leaves);
    let (_, r1cs, order) = match best {
        Some(b) => b,
        None => {
            let empty = R1cs::empty(sys.prime.clone());
            (serialize_r1cs(&empty), empty, Vec::new())
        }
    };
    let map = variable_map(sys, &graph, &order);
    let trace = Trace { graph, tiles, skeleton, abstract_graph: ag, scores, leaves };
    Ok((Normalized { r1cs, map }, trace))
}

fn variable_map(sys: &R1cs, g: &RGraph, order: &[NodeId]) -> VariableMap {
    let index: BTreeMap<NodeId, usize> = order.iter().enumerate().map(|(i, &n)| (n, i + 1)).collect();
    let mut map = BTreeMap::from([(0, VarFate::Canonical(0))]);
    for orig in 1..sys.num_vars {
        let fate = g.var_node(orig).and_then(|n| index.get(&n)).map_or(VarFate::Eliminated, |&k| VarFate::Canonical(k));
        map.insert(orig, fate);
    }
    let introduced = order
        .iter()
        .enumerate()
        .filter(|(_, &n)| !matches!(g.node(n), RNode::Var(_)))
        .map(|(i, &n)| (i + 1, g.expression(n)))
        .collect();
    VariableMap { map, introduced }
}

/// `f64` ordered by `total_cmp`; scores are compared bit-for-bit.
#[derive(Debug, Clone, Copy)]
struct Real(f64);

impl PartialEq for Real {
    fn eq(&self, o: &Self) -> bool {
        self.0.total_cmp(&o.0) == Ordering::Equal
    }
}
impl Eq for Real {}
impl PartialOrd for Real {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Real {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Smaller sorts first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct VarKey {
    linear_only: bool,
    not_operand: bool,
    weight: Reverse<Real>,
    pr: Reverse<Real>,
    coef: Reverse<BigInt>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct RowKey {
    linear: bool,
    weight: Reverse<Real>,
    shape: Vec<BigInt>,
}

struct Problem<'a> {
    sk: &'a Skeleton,
    inc: Incidence,
    var_keys: Vec<VarKey>,
    row_keys: Vec<RowKey>,
}

impl<'a> Problem<'a> {
    fn new(sk: &'a Skeleton, ag: &AbstractGraph, scores: &RankScores) -> Self {
        let inc = Incidence::new(sk);
        let pr_of = |n: AbstractNode| ag.position(n).map_or(0.0, |i| scores.pr[i]);
        let nq = sk.quads.len();
        let quad_w: Vec<f64> = sk.quads.iter().map(|q| pr_of(AbstractNode::Retained(q.out))).collect();
        let lin_w: Vec<f64> = (0..sk.lins.len()).map(|j| pr_of(AbstractNode::Linear(j))).collect();

        let mut row_keys: Vec<RowKey> =
            quad_w.iter().map(|&w| RowKey { linear: false, weight: Reverse(Real(w)), shape: vec![] }).collect();
        for (j, s) in inc.scalings.iter().enumerate() {
            let mut shape = s[0].sorted.clone();
            shape.push(s[0].constant.clone());
            row_keys.push(RowKey { linear: true, weight: Reverse(Real(lin_w[j])), shape });
        }

        let quad_names = sk.quad_names();
        let var_keys = inc
            .vars
            .iter()
            .enumerate()
            .map(|(vi, &v)| {
                if quad_names.contains(&v) {
                    let best = |want: usize| {
                        inc.var_inc[vi].iter().filter(|&&(r, l)| r < nq && l == want).map(|&(r, _)| quad_w[r]).max_by(f64::total_cmp)
                    };
                    let operand = best(OPERAND);
                    VarKey {
                        linear_only: false,
                        not_operand: operand.is_none(),
                        weight: Reverse(Real(operand.or_else(|| best(OUTPUT)).unwrap_or(0.0))),
                        pr: Reverse(Real(pr_of(AbstractNode::Retained(v)))),
                        coef: Reverse(BigInt::from(0)),
                    }
                } else {
                    let rows: Vec<usize> = inc.var_inc[vi].iter().map(|&(r, _)| r - nq).collect();
                    let coefs: Vec<(usize, BigInt)> = rows.iter().map(|&j| (j, inc.scalings[j][0].coefs[&v].clone())).collect();
                    let own = rows.first().copied();
                    let coef = rows
                        .first()
                        .map(|&j| coefficient_label(&inc.scalings[j], v).into_iter().max().unwrap_or_default())
                        .unwrap_or_default();
                    VarKey {
                        linear_only: true,
                        not_operand: true,
                        weight: Reverse(Real(new_variable_weight(own, &coefs, &lin_w))),
                        pr: Reverse(Real(0.0)),
                        coef: Reverse(coef),
                    }
                }
            })
            .collect();
        Problem { sk, inc, var_keys, row_keys }
    }

    fn initial_colours(&self) -> (Vec<usize>, Vec<usize>) {
        (ranks(&self.var_keys), ranks(&self.row_keys))
    }

    fn search(&self, vc: Vec<usize>, rc: Vec<usize>, best: &mut Option<(String, R1cs, Vec<NodeId>)>, leaves: &mut usize) {
        let (vc, rc) = self.inc.refine(vc, rc);
        let mut counts = vec![0usize; classes(&vc)];
        for &c in &vc {
            counts[c] += 1;
        }
        match counts.iter().position(|&n| n >= 2) {
            None => {
                *leaves += 1;
                if vc.is_empty() && self.inc.row_inc.is_empty() {
                    return;
                }
                let (sys, order) = self.emit(&vc, &rc);
                let text = serialize_r1cs(&sys);
                if best.as_ref().is_none_or(|(b, _, _)| text < *b) {
                    *best = Some((text, sys, order));
                }
            }
            Some(cell) => {
                for v in (0..vc.len()).filter(|&v| vc[v] == cell) {
                    if *leaves >= LEAF_BUDGET && best.is_some() {
                        return;
                    }
                    let split: Vec<(usize, bool)> = vc.iter().enumerate().map(|(w, &c)| (c, c == cell && w != v)).collect();
                    self.search(ranks(&split), rc.clone(), best, leaves);
                }
            }
        }
    }

    /// Output system for a discrete colouring: variable `v` gets index
    /// `vc[v] + 1`.
    fn emit(&self, vc: &[usize], rc: &[usize]) -> (R1cs, Vec<NodeId>) {
        let p = &self.sk.prime;
        let idx = |n: NodeId| vc[self.inc.position(n)] + 1;
        let nq = self.sk.quads.len();
        // (row colour, content key, constraint)
        type Keyed = (usize, Vec<(usize, BigInt)>, Constraint);
        let mut rows: Vec<Keyed> = Vec::new();
        for (i, q) in self.sk.quads.iter().enumerate() {
            let (a, b) = {
                let (l, r) = (idx(q.left), idx(q.right));
                (l.min(r), l.max(r))
            };
            let c = idx(q.out);
            let unit = |k| LinearCombination::from_terms([(k, p.one())]);
            let content = vec![(a, BigInt::from(0)), (b, BigInt::from(0)), (c, BigInt::from(0))];
            rows.push((rc[i], content, Constraint::new(unit(a), unit(b), unit(c))));
        }
        for (j, r) in self.sk.lins.iter().enumerate() {
            let terms: BTreeMap<usize, _> = r.terms.iter().map(|(&n, c)| (idx(n), c.clone())).collect();
            let lead = terms.values().next().expect("rows are non-empty").inv().expect("nonzero");
            let mut a = LinearCombination::from_terms(terms.into_iter().map(|(k, c)| (k, c.mul(&lead))));
            a.add_term(0, &r.constant.mul(&lead));
            let content = a.iter().map(|(k, c)| (k, BigInt::from(c.residue().clone()))).collect();
            let b = LinearCombination::from_terms([(0, p.one())]);
            rows.push((rc[nq + j], content, Constraint::new(a, b, LinearCombination::new())));
        }
        rows.sort_by(|x, y| (x.0, &x.1).cmp(&(y.0, &y.1)));
        let mut order = vec![NodeId(0); self.inc.vars.len()];
        for (v, &c) in vc.iter().enumerate() {
            order[c] = self.inc.vars[v];
        }
        let sys = R1cs::new(p.clone(), self.inc.vars.len() + 1, rows.into_iter().map(|r| r.2).collect()).expect("indices are in range");
        (sys, order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Prime;
    use crate::r1cs::validate_paradigm;
    use crate::test_support::{enumerate_assignments, parse, satisfied_u64, vitalik};
    use std::collections::BTreeSet;

    const VITALIK_PARADIGM: &str = r#"{"prime": "101", "num_vars": 5, "constraints": [
        {"a": {"1": "1"}, "b": {"2": "1"}, "c": {"3": "1"}},
        {"a": {"1": "1"}, "b": {"1": "1"}, "c": {"2": "1"}},
        {"a": {"0": "5", "1": "1", "3": "1", "4": "100"}, "b": {"0": "1"}, "c": {}}]}"#;

    fn text(sys: &R1cs) -> String {
        serialize_r1cs(sys)
    }

    fn permuted(sys: &R1cs, order: &[usize]) -> R1cs {
        R1cs::new(sys.prime.clone(), sys.num_vars, order.iter().map(|&i| sys.constraints[i].clone()).collect()).unwrap()
    }

    fn relabelled(sys: &R1cs, perm: &[usize]) -> R1cs {
        let cons = sys
            .constraints
            .iter()
            .map(|c| Constraint::new(c.a.remap(|i| perm[i]), c.b.remap(|i| perm[i]), c.c.remap(|i| perm[i])))
            .collect();
        R1cs::new(sys.prime.clone(), sys.num_vars, cons).unwrap()
    }

    #[test]
    fn vitalik_matches_published_paradigm() {
        let out = normalize(&vitalik()).unwrap();
        assert_eq!(text(&out.r1cs), text(&parse(VITALIK_PARADIGM)));
        let want = BTreeMap::from([
            (0, VarFate::Canonical(0)),
            (1, VarFate::Canonical(1)),
            (2, VarFate::Canonical(4)),
            (3, VarFate::Canonical(2)),
            (4, VarFate::Canonical(3)),
            (5, VarFate::Eliminated),
        ]);
        assert_eq!(out.map.map, want);
        assert!(out.map.introduced.is_empty());
    }

    #[test]
    fn vitalik_reversed_gives_identical_bytes() {
        let sys = vitalik();
        let rev = permuted(&sys, &[3, 2, 1, 0]);
        assert_eq!(text(&normalize(&rev).unwrap().r1cs), text(&normalize(&sys).unwrap().r1cs));
    }

    #[test]
    fn vitalik_every_constraint_order() {
        let sys = vitalik();
        let want = text(&normalize(&sys).unwrap().r1cs);
        let mut perm = vec![0, 1, 2, 3];
        // Heap's algorithm, iteratively.
        let mut c = [0; 4];
        let mut i = 0;
        while i < 4 {
            if c[i] < i {
                perm.swap(if i % 2 == 0 { 0 } else { c[i] }, i);
                assert_eq!(text(&normalize(&permuted(&sys, &perm)).unwrap().r1cs), want, "{perm:?}");
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn vitalik_relabelled_variables() {
        let sys = vitalik();
        let want = text(&normalize(&sys).unwrap().r1cs);
        for perm in [[0, 5, 4, 3, 2, 1], [0, 2, 3, 4, 5, 1], [0, 3, 1, 5, 2, 4]] {
            assert_eq!(text(&normalize(&relabelled(&sys, &perm)).unwrap().r1cs), want);
        }
    }

    #[test]
    fn idempotent_on_published_paradigm() {
        let p = parse(VITALIK_PARADIGM);
        assert_eq!(text(&normalize(&p).unwrap().r1cs), text(&p));
    }

    #[test]
    fn empty_system() {
        let sys = R1cs::empty(Prime::from_u64(7).unwrap());
        let out = normalize(&sys).unwrap();
        assert_eq!(out.r1cs.num_vars, 1);
        assert!(out.r1cs.constraints.is_empty());
    }

    #[test]
    fn operand_swap_is_invisible() {
        let a = parse(r#"{"prime": "7", "num_vars": 4, "constraints": [{"a": {"1": "1"}, "b": {"2": "1"}, "c": {"3": "1"}}]}"#);
        let b = parse(r#"{"prime": "7", "num_vars": 4, "constraints": [{"a": {"2": "1"}, "b": {"1": "1"}, "c": {"3": "1"}}]}"#);
        assert_eq!(text(&normalize(&a).unwrap().r1cs), text(&normalize(&b).unwrap().r1cs));
    }

    #[test]
    fn square_uses_one_variable_twice() {
        let sys = parse(r#"{"prime": "7", "num_vars": 3, "constraints": [{"a": {"1": "1"}, "b": {"1": "1"}, "c": {"2": "1"}}]}"#);
        let out = normalize(&sys).unwrap();
        let c = &out.r1cs.constraints[0];
        assert_eq!(c.a, c.b);
    }

    #[test]
    fn symmetric_linear_row_is_settled() {
        // a + b - c - d = 0 in both sign conventions.
        let s1 = parse(r#"{"prime": "11", "num_vars": 5, "constraints": [{"a": {"1": "1", "2": "1", "3": "10", "4": "10"}, "b": {"0": "1"}, "c": {}}]}"#);
        let s2 = parse(r#"{"prime": "11", "num_vars": 5, "constraints": [{"a": {"1": "10", "2": "10", "3": "1", "4": "1"}, "b": {"0": "1"}, "c": {}}]}"#);
        let s3 = parse(r#"{"prime": "11", "num_vars": 5, "constraints": [{"a": {"1": "1", "3": "1", "2": "10", "4": "10"}, "b": {"0": "1"}, "c": {}}]}"#);
        let t = text(&normalize(&s1).unwrap().r1cs);
        assert_eq!(text(&normalize(&s2).unwrap().r1cs), t);
        assert_eq!(text(&normalize(&s3).unwrap().r1cs), t);
        assert!(validate_paradigm(&normalize(&s1).unwrap().r1cs).is_valid());
    }

    #[test]
    fn trace_exposes_stages() {
        let (_, tr) = normalize_traced(&vitalik()).unwrap();
        assert_eq!(tr.tiles.len(), 4);
        assert_eq!(tr.skeleton.lins.len(), 1);
        assert_eq!(tr.abstract_graph.len(), 4);
        assert!(tr.scores.iterations_used > 1);
        assert!(tr.leaves >= 1);
    }

    /// Input solutions projected onto surviving originals, against output
    /// solutions pulled back through the map; everything else existential.
    fn assert_same_solutions(sys: &R1cs) {
        let out = normalize(sys).unwrap();
        let p = sys.prime.to_u64().unwrap();
        let kept: Vec<(usize, usize)> = (1..sys.num_vars).filter_map(|i| out.map.canonical(i).map(|k| (i, k))).collect();
        let lhs: BTreeSet<Vec<u64>> = enumerate_assignments(p, sys.num_vars)
            .filter(|x| satisfied_u64(sys, x))
            .map(|x| kept.iter().map(|&(i, _)| x[i]).collect())
            .collect();
        let rhs: BTreeSet<Vec<u64>> = enumerate_assignments(p, out.r1cs.num_vars)
            .filter(|y| satisfied_u64(&out.r1cs, y))
            .map(|y| kept.iter().map(|&(_, k)| y[k]).collect())
            .collect();
        assert_eq!(lhs, rhs, "{}", text(sys));
    }

    #[test]
    fn solutions_preserved_on_small_systems() {
        let cases = [
            r#"{"prime": "5", "num_vars": 5, "constraints": [
                {"a": {"1": "1"}, "b": {"1": "1"}, "c": {"2": "1"}},
                {"a": {"1": "1", "2": "2"}, "b": {"0": "1"}, "c": {"3": "1"}},
                {"a": {"3": "1", "0": "1"}, "b": {"0": "1"}, "c": {"4": "1"}}]}"#,
            r#"{"prime": "5", "num_vars": 5, "constraints": [
                {"a": {"1": "1", "2": "1"}, "b": {"3": "1"}, "c": {"4": "2", "0": "1"}}]}"#,
            r#"{"prime": "5", "num_vars": 4, "constraints": [
                {"a": {"1": "1", "2": "1"}, "b": {"0": "1"}, "c": {"3": "1"}},
                {"a": {"1": "2", "2": "2"}, "b": {"0": "1"}, "c": {"3": "2"}}]}"#,
            r#"{"prime": "7", "num_vars": 5, "constraints": [
                {"a": {"1": "3"}, "b": {"2": "1"}, "c": {}},
                {"a": {"2": "1", "3": "1"}, "b": {"0": "1"}, "c": {"4": "1"}},
                {"a": {"4": "1"}, "b": {"4": "1"}, "c": {"1": "1"}}]}"#,
        ];
        for c in cases {
            assert_same_solutions(&parse(c));
        }
    }
}
