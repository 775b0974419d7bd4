//! Named constraint skeleton: tiles turned back into rows over named values,
//! followed by merging of the linear rows.
//!
//! A name is the `NodeId` of a variable leaf, or of an interior tile root that
//! needs a fresh variable in the output.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use thiserror::Error;

use crate::colour::{structural_colours, Incidence};
use crate::dfg::{build_rgraph, DfgError, NodeId, RGraph, RNode};
use crate::field::{FieldElement, Prime};
use crate::r1cs::R1cs;
use crate::tiler::{select_tiles, Tile, TileKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SkeletonError {
    #[error(transparent)]
    Dfg(#[from] DfgError),
    #[error("linear constraints are inconsistent: they imply {0} = 0")]
    InconsistentLinear(String),
}

/// `left * right = out`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadRow {
    pub left: NodeId,
    pub right: NodeId,
    pub out: NodeId,
}

/// `Σ terms + constant = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinRow {
    pub terms: BTreeMap<NodeId, FieldElement>,
    pub constant: FieldElement,
    /// The name this row defines, if it came from a tile root.
    pub root: Option<NodeId>,
}

impl LinRow {
    pub fn new(prime: &Prime) -> Self {
        LinRow { terms: BTreeMap::new(), constant: prime.zero(), root: None }
    }

    pub fn add_term(&mut self, name: NodeId, k: &FieldElement) {
        let e = self.terms.entry(name).or_insert_with(|| k.prime().zero());
        *e = e.add(k);
        if e.is_zero() {
            self.terms.remove(&name);
        }
    }

    pub fn coeff(&self, name: NodeId) -> Option<&FieldElement> {
        self.terms.get(&name)
    }

    /// `self += k * other`.
    fn axpy(&mut self, k: &FieldElement, other: &LinRow) {
        for (n, c) in &other.terms {
            self.add_term(*n, &k.mul(c));
        }
        self.constant = self.constant.add(&k.mul(&other.constant));
    }

    fn substitute(&mut self, v: NodeId, def: &LinRow) {
        if let Some(c) = self.terms.get(&v).cloned() {
            let k = c.mul(&def.terms[&v].inv().expect("pivot is nonzero")).neg();
            self.axpy(&k, def);
            debug_assert!(!self.terms.contains_key(&v));
            if self.root == Some(v) {
                self.root = None;
            }
        }
    }

    /// Terms and constant scaled so the first term has coefficient 1.
    fn monic(&self) -> (Vec<(NodeId, BigUint)>, BigUint) {
        let k = self.terms.values().next().expect("nonempty row").inv().expect("stored coefficients are nonzero");
        let terms = self.terms.iter().map(|(n, c)| (*n, c.mul(&k).residue().clone())).collect();
        (terms, self.constant.mul(&k).residue().clone())
    }

    /// Among the rescalings making some coefficient −1, those with the
    /// smallest largest coefficient magnitude, then the greatest
    /// descending-sorted signed coefficient vector, then the greatest
    /// constant; one per distinct factor. Usually one, several under
    /// sign symmetry.
    pub fn best_scalings(&self) -> Vec<Scaled> {
        let mut best: Vec<Scaled> = Vec::new();
        for (pivot, c) in &self.terms {
            let k = c.inv().expect("stored coefficients are nonzero").neg();
            let coefs: BTreeMap<NodeId, BigInt> = self.terms.iter().map(|(n, x)| (*n, k.mul(x).signed())).collect();
            let mut sorted: Vec<BigInt> = coefs.values().cloned().collect();
            sorted.sort_by(|a, b| b.cmp(a));
            let s = Scaled { pivot: *pivot, factor: k.clone(), coefs, sorted, constant: k.mul(&self.constant).signed() };
            match best.first().map(|b| s.key().cmp(&b.key())) {
                None => best.push(s),
                Some(std::cmp::Ordering::Equal) => {
                    if best.iter().all(|b| b.factor != s.factor) {
                        best.push(s)
                    }
                }
                Some(std::cmp::Ordering::Greater) => best = vec![s],
                Some(std::cmp::Ordering::Less) => {}
            }
        }
        best
    }
}

/// A linear row multiplied through by `factor`, read as signed integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scaled {
    /// The name whose coefficient became −1.
    pub pivot: NodeId,
    pub factor: FieldElement,
    pub coefs: BTreeMap<NodeId, BigInt>,
    pub sorted: Vec<BigInt>,
    pub constant: BigInt,
}

impl Scaled {
    fn key(&self) -> (std::cmp::Reverse<BigInt>, &[BigInt], &BigInt) {
        let widest = self.sorted.iter().map(|c| c.magnitude().clone()).max().unwrap_or_default();
        (std::cmp::Reverse(BigInt::from(widest)), &self.sorted, &self.constant)
    }

    /// The `aᵢ` of the variance weight: everything but the pivot's −1,
    /// with a nonzero constant counted as one more coefficient.
    pub fn weight_coefficients(&self) -> Vec<BigInt> {
        let mut a: Vec<BigInt> = self.coefs.iter().filter(|(n, _)| **n != self.pivot).map(|(_, c)| c.clone()).collect();
        if self.constant != BigInt::from(0) {
            a.push(self.constant.clone());
        }
        a
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    pub prime: Prime,
    pub quads: Vec<QuadRow>,
    pub lins: Vec<LinRow>,
}

impl Skeleton {
    pub fn quad_names(&self) -> BTreeSet<NodeId> {
        self.quads.iter().flat_map(|q| [q.left, q.right, q.out]).collect()
    }

    pub fn names(&self) -> BTreeSet<NodeId> {
        let mut s = self.quad_names();
        for r in &self.lins {
            s.extend(r.terms.keys().copied());
        }
        s
    }
}

fn is_zero_const(g: &RGraph, id: NodeId) -> bool {
    matches!(g.node(id), RNode::Const(c) if c.is_zero())
}

/// The name a tile root goes by: the variable it is equated to when there is
/// exactly one such, otherwise a fresh name (the root itself).
pub fn name_of(g: &RGraph, id: NodeId) -> NodeId {
    if let RNode::Var(_) = g.node(id) {
        return id;
    }
    match g.targets(id) {
        [t] if matches!(g.node(*t), RNode::Var(_)) => *t,
        _ => id,
    }
}

/// Rows tying a named root to each of the values it was asserted equal to.
fn equality_rows(g: &RGraph, root: NodeId, name: NodeId, out: &mut Vec<LinRow>) {
    let p = g.prime();
    for &t in g.targets(root) {
        if t == name {
            continue;
        }
        let mut row = LinRow::new(p);
        row.add_term(name, &p.one());
        if !is_zero_const(g, t) {
            row.add_term(t, &p.one().neg());
        }
        out.push(row);
    }
}

pub fn skeleton_from_tiles(g: &RGraph, tiles: &[Tile]) -> Skeleton {
    let p = g.prime();
    let mut products = Vec::new();
    let mut lins = Vec::new();
    for t in tiles {
        let name = name_of(g, t.root);
        match t.kind {
            TileKind::Quadratic => {
                let (l, r) = g.node(t.root).operands().expect("product node");
                products.push((t.root, QuadRow { left: name_of(g, l), right: name_of(g, r), out: name }));
                equality_rows(g, t.root, name, &mut lins);
            }
            TileKind::MulLinear | TileKind::AddLinear => {
                let form = t.linear_form.as_ref().expect("linear tiles carry a form");
                let mut row = LinRow::new(p);
                for (n, c) in &form.terms {
                    row.add_term(name_of(g, *n), c);
                }
                row.constant = form.constant.clone();
                let only_zero = g.targets(t.root).iter().all(|&x| is_zero_const(g, x)) && !g.targets(t.root).is_empty();
                if only_zero && g.consumers(t.root).is_empty() {
                    lins.push(row);
                } else {
                    row.add_term(name, &p.one().neg());
                    if row.terms.contains_key(&name) {
                        row.root = Some(name);
                    }
                    lins.push(row);
                    equality_rows(g, t.root, name, &mut lins);
                }
            }
        }
    }
    // Distinct products can meet once their operands are named (a sum and
    // the variable it equals). Keep one row per operand pair; further
    // outputs become equalities, as if the product had been shared.
    let mut by_operands: BTreeMap<(NodeId, NodeId), Vec<(NodeId, NodeId)>> = BTreeMap::new();
    for (root, q) in products {
        let outs = by_operands.entry((q.left.min(q.right), q.left.max(q.right))).or_default();
        if !outs.iter().any(|&(_, o)| o == q.out) {
            outs.push((root, q.out));
        }
    }
    let mut quads = Vec::new();
    for ((left, right), outs) in by_operands {
        let out = match outs[..] {
            [(_, out)] => out,
            [(root, _), ..] => {
                for &(_, o) in &outs {
                    if o != root {
                        let mut row = LinRow::new(p);
                        row.add_term(root, &p.one());
                        row.add_term(o, &p.one().neg());
                        lins.push(row);
                    }
                }
                root
            }
            [] => unreachable!("groups are non-empty"),
        };
        quads.push(QuadRow { left, right, out });
    }
    Skeleton { prime: p.clone(), quads, lins }
}

/// Graph, tiles and named skeleton of a system, before merging.
pub fn skeleton_of(sys: &R1cs) -> Result<(RGraph, Skeleton), SkeletonError> {
    let g = build_rgraph(sys)?;
    let tiles = select_tiles(&g);
    let sk = skeleton_from_tiles(&g, &tiles);
    Ok((g, sk))
}

fn occurrences(lins: &[LinRow], v: NodeId) -> Vec<usize> {
    lins.iter().enumerate().filter(|(_, r)| r.terms.contains_key(&v)).map(|(i, _)| i).collect()
}

/// Structural colours of the current rows, used to make every merge choice
/// independent of how the input happened to be numbered.
struct Colours {
    var: BTreeMap<NodeId, usize>,
    row: Vec<usize>,
}

impl Colours {
    fn of(prime: &Prime, quads: &[QuadRow], lins: &[LinRow]) -> Self {
        let sk = Skeleton { prime: prime.clone(), quads: quads.to_vec(), lins: lins.to_vec() };
        let inc = Incidence::new(&sk);
        let (vc, rc) = structural_colours(&sk, &inc);
        Colours { var: inc.vars.iter().copied().zip(vc).collect(), row: rc[quads.len()..].to_vec() }
    }

    /// Linear-only names occurring in two or more rows, best candidate first.
    fn shared(&self, lins: &[LinRow], quad: &BTreeSet<NodeId>) -> Vec<NodeId> {
        let mut v = shared_linear(lins, quad);
        v.sort_by_key(|n| (self.var[n], *n));
        v
    }

    fn pick_row(&self, lins: &[LinRow], rows: impl IntoIterator<Item = usize>) -> Option<usize> {
        rows.into_iter().min_by_key(|&i| (lins[i].terms.len(), self.row[i], i))
    }
}

/// Linear-only names that occur in two or more rows, ascending.
fn shared_linear(lins: &[LinRow], quad: &BTreeSet<NodeId>) -> Vec<NodeId> {
    let mut count: BTreeMap<NodeId, usize> = BTreeMap::new();
    for r in lins {
        for n in r.terms.keys() {
            if !quad.contains(n) {
                *count.entry(*n).or_default() += 1;
            }
        }
    }
    count.into_iter().filter(|&(_, c)| c >= 2).map(|(n, _)| n).collect()
}

/// Row `i` reads `x = y` where one side is a linear-only name also used by
/// other rows, which can be dropped: `(dropped, kept)`. A name defined by
/// some other row is dropped in preference, so that its definition ends up
/// naming the survivor.
fn alias(lins: &[LinRow], i: usize, quad: &BTreeSet<NodeId>, col: &Colours) -> Option<(NodeId, NodeId)> {
    let r = &lins[i];
    if r.terms.len() != 2 || !r.constant.is_zero() {
        return None;
    }
    let mut it = r.terms.iter();
    let ((&x, cx), (&y, cy)) = (it.next()?, it.next()?);
    if !cx.add(cy).is_zero() {
        return None;
    }
    let defined = |v: NodeId| lins.iter().enumerate().any(|(j, s)| j != i && s.root == Some(v));
    [(x, y), (y, x)]
        .into_iter()
        .filter(|(gone, _)| !quad.contains(gone) && occurrences(lins, *gone).len() >= 2)
        .min_by_key(|&(gone, _)| (!defined(gone), col.var[&gone], gone))
}

fn eliminate_with(lins: &mut [LinRow], pivot_row: usize, v: NodeId) {
    let def = lins[pivot_row].clone();
    for (i, r) in lins.iter_mut().enumerate() {
        if i != pivot_row {
            r.substitute(v, &def);
        }
    }
}

/// Merges linear rows until no variable outside the products occurs in more
/// than one of them.
///
/// Defined intermediates are substituted away first (`a+b=c, c+d=e` becomes
/// `a+b+d=e`). Whatever sharing survives that is removed by row reduction,
/// and as a last resort a variable that still cannot be isolated is
/// projected out.
pub fn merge_linear(sk: &Skeleton) -> Result<Skeleton, SkeletonError> {
    let quad = sk.quad_names();
    let mut lins = sk.lins.clone();

    // Substitute defined intermediates. A plain alias `x = y` of a shared
    // name goes first and hands any definition of the dropped name to the
    // kept one.
    loop {
        let col = Colours::of(&sk.prime, &sk.quads, &lins);
        let mut rows: Vec<usize> = (0..lins.len()).collect();
        rows.sort_by_key(|&i| (col.row[i], i));
        if let Some((i, (gone, kept))) = rows.into_iter().find_map(|i| alias(&lins, i, &quad, &col).map(|a| (i, a))) {
            let def = lins.remove(i);
            for r in lins.iter_mut() {
                let was_root = r.root == Some(gone);
                r.substitute(gone, &def);
                if was_root && r.terms.contains_key(&kept) {
                    r.root = Some(kept);
                }
            }
            continue;
        }
        let pick = col.shared(&lins, &quad).into_iter().find_map(|v| {
            let defs = occurrences(&lins, v).into_iter().filter(|&i| lins[i].root == Some(v));
            col.pick_row(&lins, defs).map(|row| (v, row))
        });
        let Some((v, row)) = pick else { break };
        eliminate_with(&mut lins, row, v);
        lins.remove(row);
    }

    // Row-reduce on the remaining shared variables.
    let mut pivots: BTreeSet<usize> = BTreeSet::new();
    loop {
        let col = Colours::of(&sk.prime, &sk.quads, &lins);
        let shared = col.shared(&lins, &quad);
        let Some(&first) = shared.first() else { break };
        let pick = shared.into_iter().find_map(|v| {
            let free = occurrences(&lins, v).into_iter().filter(|i| !pivots.contains(i));
            col.pick_row(&lins, free).map(|row| (v, row))
        });
        match pick {
            Some((v, row)) => {
                eliminate_with(&mut lins, row, v);
                pivots.insert(row);
            }
            None => {
                // Every occurrence sits in a pivot row: project the variable out.
                let row = col.pick_row(&lins, occurrences(&lins, first)).expect("shared variable occurs");
                eliminate_with(&mut lins, row, first);
                lins.remove(row);
                pivots = pivots.into_iter().filter(|&i| i != row).map(|i| if i > row { i - 1 } else { i }).collect();
            }
        }
    }

    let mut out = Vec::with_capacity(lins.len());
    let mut seen = BTreeSet::new();
    for r in lins {
        if r.terms.is_empty() {
            if !r.constant.is_zero() {
                return Err(SkeletonError::InconsistentLinear(r.constant.to_string()));
            }
            continue;
        }
        // A multiple of a row already kept says nothing new.
        if seen.insert(r.monic()) {
            out.push(r);
        }
    }
    Ok(Skeleton { prime: sk.prime.clone(), quads: sk.quads.clone(), lins: out })
}
