//! Colour refinement over the bipartite variable/row incidence of a skeleton.
//!
//! Colours are dense ranks of signatures, never hashes, so equal colours mean
//! equal refined signatures and the order between colours is itself
//! invariant.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use crate::dfg::NodeId;
use crate::skeleton::{Scaled, Skeleton};

pub(crate) const OPERAND: usize = 0;
pub(crate) const OUTPUT: usize = 1;

pub(crate) fn ranks<T: Ord>(sigs: &[T]) -> Vec<usize> {
    let mut sorted: Vec<&T> = sigs.iter().collect();
    sorted.sort();
    sorted.dedup();
    sigs.iter().map(|s| sorted.binary_search(&s).expect("present")).collect()
}

pub(crate) fn classes(colours: &[usize]) -> usize {
    colours.iter().max().map_or(0, |m| m + 1)
}

/// Rows are numbered quadratic first, then linear.
pub(crate) struct Incidence {
    pub vars: Vec<NodeId>,
    /// Per row: (var position, edge label).
    pub row_inc: Vec<Vec<(usize, usize)>>,
    /// Per var: (row position, edge label).
    pub var_inc: Vec<Vec<(usize, usize)>>,
    pub scalings: Vec<Vec<Scaled>>,
}

impl Incidence {
    pub fn new(sk: &Skeleton) -> Self {
        let vars: Vec<NodeId> = sk.names().into_iter().collect();
        let pos: BTreeMap<NodeId, usize> = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let scalings: Vec<Vec<Scaled>> = sk.lins.iter().map(|r| r.best_scalings()).collect();
        let mut label_ids: BTreeMap<Vec<BigInt>, usize> = BTreeMap::new();
        for (j, r) in sk.lins.iter().enumerate() {
            for &v in r.terms.keys() {
                label_ids.insert(coefficient_label(&scalings[j], v), 0);
            }
        }
        for (k, id) in label_ids.values_mut().enumerate() {
            *id = OUTPUT + 1 + k;
        }
        let mut row_inc = Vec::new();
        for q in &sk.quads {
            row_inc.push(vec![(pos[&q.left], OPERAND), (pos[&q.right], OPERAND), (pos[&q.out], OUTPUT)]);
        }
        for (j, r) in sk.lins.iter().enumerate() {
            row_inc.push(r.terms.keys().map(|&v| (pos[&v], label_ids[&coefficient_label(&scalings[j], v)])).collect());
        }
        let mut var_inc = vec![Vec::new(); vars.len()];
        for (r, inc) in row_inc.iter().enumerate() {
            for &(v, l) in inc {
                var_inc[v].push((r, l));
            }
        }
        Incidence { vars, row_inc, var_inc, scalings }
    }

    pub fn position(&self, v: NodeId) -> usize {
        self.vars.binary_search(&v).expect("named")
    }

    /// Refines to the coarsest stable colouring finer than the input.
    pub fn refine(&self, mut vc: Vec<usize>, mut rc: Vec<usize>) -> (Vec<usize>, Vec<usize>) {
        loop {
            let vsig: Vec<(usize, Vec<(usize, usize)>)> = (0..vc.len())
                .map(|v| {
                    let mut s: Vec<_> = self.var_inc[v].iter().map(|&(r, l)| (l, rc[r])).collect();
                    s.sort();
                    (vc[v], s)
                })
                .collect();
            let rsig: Vec<(usize, Vec<(usize, usize)>)> = (0..rc.len())
                .map(|r| {
                    let mut s: Vec<_> = self.row_inc[r].iter().map(|&(v, l)| (l, vc[v])).collect();
                    s.sort();
                    (rc[r], s)
                })
                .collect();
            let (nv, nr) = (ranks(&vsig), ranks(&rsig));
            let stable = classes(&nv) == classes(&vc) && classes(&nr) == classes(&rc);
            vc = nv;
            rc = nr;
            if stable {
                return (vc, rc);
            }
        }
    }
}

/// The coefficients `v` takes across a row's preferred scalings, sorted; it
/// does not depend on which of them is "first".
pub(crate) fn coefficient_label(scalings: &[Scaled], v: NodeId) -> Vec<BigInt> {
    let mut l: Vec<BigInt> = scalings.iter().map(|s| s.coefs[&v].clone()).collect();
    l.sort();
    l
}

/// Purely structural colouring: products vs. linear-only variables, row kind
/// and coefficient shape, refined to stability.
pub(crate) fn structural_colours(sk: &Skeleton, inc: &Incidence) -> (Vec<usize>, Vec<usize>) {
    let quad = sk.quad_names();
    let vkeys: Vec<bool> = inc.vars.iter().map(|v| !quad.contains(v)).collect();
    let mut rkeys: Vec<(bool, Vec<BigInt>)> = sk.quads.iter().map(|_| (false, Vec::new())).collect();
    for s in &inc.scalings {
        // Rows emptied by elimination have no scaling; they all look alike.
        let shape = s.first().map(|s| s.sorted.iter().chain([&s.constant]).cloned().collect()).unwrap_or_default();
        rkeys.push((true, shape));
    }
    inc.refine(ranks(&vkeys), ranks(&rkeys))
}
