//! Partition of the expression DAG into tiles, one per emitted constraint.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use serde::Serialize;

use crate::dfg::{NodeId, RGraph, RNode};
use crate::field::FieldElement;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum TileKind {
    /// `x * y = z` with both operands non-constant.
    Quadratic,
    /// A constant times a node.
    MulLinear,
    /// A sum chain.
    AddLinear,
}

/// `Σ terms[n]·n + constant`, the value computed at a linear tile's root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearForm {
    pub terms: BTreeMap<NodeId, FieldElement>,
    pub constant: FieldElement,
}

impl LinearForm {
    fn add(&mut self, node: NodeId, k: &FieldElement) {
        let e = self.terms.entry(node).or_insert_with(|| k.prime().zero());
        *e = e.add(k);
        if e.is_zero() {
            self.terms.remove(&node);
        }
    }

    /// Coefficients as signed representatives, constant last.
    pub fn signed_terms(&self) -> Vec<(Option<NodeId>, BigInt)> {
        let mut v: Vec<_> = self.terms.iter().map(|(n, c)| (Some(*n), c.signed())).collect();
        if !self.constant.is_zero() {
            v.push((None, self.constant.signed()));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tile {
    pub kind: TileKind,
    pub root: NodeId,
    pub members: BTreeSet<NodeId>,
    /// Operand-side boundary nodes: leaves or roots of other tiles.
    pub interface: BTreeSet<NodeId>,
    /// Present for linear tiles.
    pub linear_form: Option<LinearForm>,
}

impl Tile {
    pub fn is_linear(&self) -> bool {
        self.kind != TileKind::Quadratic
    }
}

fn is_const(g: &RGraph, id: NodeId) -> bool {
    matches!(g.node(id), RNode::Const(_))
}

/// Variable product: a `Mul` with no constant operand.
pub fn is_quadratic_node(g: &RGraph, id: NodeId) -> bool {
    match *g.node(id) {
        RNode::Mul(l, r) => !is_const(g, l) && !is_const(g, r),
        _ => false,
    }
}

fn distinct_consumers(g: &RGraph, id: NodeId) -> BTreeSet<NodeId> {
    g.consumers(id).iter().map(|&(c, _)| c).collect()
}

/// Interior nodes that start a tile. A linear node is absorbed into its
/// consumer's tile only when it has exactly one consumer, that consumer is
/// an `Add`, and no equation is attached to it.
pub fn tile_roots(g: &RGraph) -> BTreeSet<NodeId> {
    g.ids()
        .filter(|&id| g.node(id).is_interior())
        .filter(|&id| {
            if is_quadratic_node(g, id) || !g.targets(id).is_empty() {
                return true;
            }
            let cons = distinct_consumers(g, id);
            if cons.len() != 1 {
                return true;
            }
            let c = *cons.iter().next().unwrap();
            !matches!(g.node(c), RNode::Add(..))
        })
        .collect()
}

/// Index-free structural hash of the expression rooted at `id`.
pub fn structural_hash(g: &RGraph, id: NodeId, memo: &mut BTreeMap<NodeId, u64>) -> u64 {
    if let Some(&h) = memo.get(&id) {
        return h;
    }
    let mut hasher = DefaultHasher::new();
    match g.node(id) {
        RNode::Const(c) => ("const", c.residue()).hash(&mut hasher),
        RNode::Var(_) => "var".hash(&mut hasher),
        RNode::Add(l, r) | RNode::Mul(l, r) => {
            let (l, r) = (*l, *r);
            let mut kids = [structural_hash(g, l, memo), structural_hash(g, r, memo)];
            kids.sort_unstable();
            (g.node(id).operation(), kids).hash(&mut hasher);
        }
    }
    let h = hasher.finish();
    memo.insert(id, h);
    h
}

fn carve(g: &RGraph, root: NodeId, roots: &BTreeSet<NodeId>) -> Tile {
    let prime = g.prime();
    if is_quadratic_node(g, root) {
        let (l, r) = g.node(root).operands().unwrap();
        return Tile {
            kind: TileKind::Quadratic,
            root,
            members: [root].into(),
            interface: [l, r].into(),
            linear_form: None,
        };
    }
    let kind = match g.node(root) {
        RNode::Mul(..) => TileKind::MulLinear,
        _ => TileKind::AddLinear,
    };
    let mut form = LinearForm { terms: BTreeMap::new(), constant: prime.zero() };
    let mut members = BTreeSet::new();
    let mut interface = BTreeSet::new();
    let mut stack = vec![(root, prime.one())];
    while let Some((id, k)) = stack.pop() {
        let inside = id == root || (g.node(id).is_interior() && !roots.contains(&id));
        if !inside {
            match g.node(id) {
                RNode::Const(c) => form.constant = form.constant.add(&c.mul(&k)),
                _ => {
                    interface.insert(id);
                    form.add(id, &k);
                }
            }
            continue;
        }
        members.insert(id);
        match *g.node(id) {
            RNode::Add(l, r) => {
                stack.push((r, k.clone()));
                stack.push((l, k));
            }
            RNode::Mul(l, r) => {
                let (c, other) = if is_const(g, l) { (l, r) } else { (r, l) };
                let RNode::Const(cv) = g.node(c) else { unreachable!("linear Mul has a constant operand") };
                let k2 = k.mul(cv);
                if is_const(g, other) {
                    let RNode::Const(ov) = g.node(other) else { unreachable!() };
                    form.constant = form.constant.add(&k2.mul(ov));
                } else {
                    stack.push((other, k2));
                }
            }
            _ => unreachable!("leaves are never inside a tile"),
        }
    }
    Tile { kind, root, members, interface, linear_form: Some(form) }
}

/// Carves every tile, emitted sinks-first; simultaneously available tiles
/// go in ascending structural-hash order.
pub fn select_tiles(g: &RGraph) -> Vec<Tile> {
    let roots = tile_roots(g);
    let tiles: BTreeMap<NodeId, Tile> = roots.iter().map(|&r| (r, carve(g, r, &roots))).collect();
    let owner: BTreeMap<NodeId, NodeId> =
        tiles.values().flat_map(|t| t.members.iter().map(move |&m| (m, t.root))).collect();

    // A tile is ready once every tile consuming its root has been emitted.
    let mut pending: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for &r in &roots {
        let users: BTreeSet<NodeId> = distinct_consumers(g, r).iter().filter_map(|c| owner.get(c).copied()).collect();
        pending.insert(r, users);
    }
    let mut memo = BTreeMap::new();
    let mut ready: BTreeSet<(u64, NodeId)> = pending
        .iter()
        .filter(|(_, users)| users.is_empty())
        .map(|(&r, _)| (structural_hash(g, r, &mut memo), r))
        .collect();
    let mut out = Vec::with_capacity(tiles.len());
    while let Some(&first) = ready.iter().next() {
        ready.remove(&first);
        let (_, r) = first;
        let tile = &tiles[&r];
        out.push(tile.clone());
        for &i in &tile.interface {
            if let Some(users) = pending.get_mut(&i) {
                users.remove(&r);
                if users.is_empty() && roots.contains(&i) {
                    let h = structural_hash(g, i, &mut memo);
                    ready.insert((h, i));
                    pending.remove(&i);
                }
            }
        }
    }
    debug_assert_eq!(out.len(), tiles.len());
    out
}

#[derive(Serialize)]
struct TileDump {
    kind: TileKind,
    root: String,
    members: Vec<usize>,
    interface: Vec<String>,
    equated_to: Vec<String>,
    linear_form: Option<BTreeMap<String, String>>,
}

/// JSON debug dump of a tile sequence, coefficients as signed integers.
pub fn tiles_to_json(g: &RGraph, tiles: &[Tile]) -> String {
    let dump: Vec<TileDump> = tiles
        .iter()
        .map(|t| TileDump {
            kind: t.kind,
            root: g.expression(t.root),
            members: t.members.iter().map(|m| m.0).collect(),
            interface: t.interface.iter().map(|&i| g.expression(i)).collect(),
            equated_to: g.targets(t.root).iter().map(|&i| g.expression(i)).collect(),
            linear_form: t.linear_form.as_ref().map(|f| {
                f.signed_terms()
                    .into_iter()
                    .map(|(n, c)| (n.map_or_else(|| "1".to_string(), |n| g.expression(n)), c.to_string()))
                    .collect()
            }),
        })
        .collect();
    serde_json::to_string_pretty(&dump).expect("tile dump serializes") + "\n"
}
