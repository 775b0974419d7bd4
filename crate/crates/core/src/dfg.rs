//! Expression DAG ("RNode graph") built from an R1CS.
//!
//! Every constraint is rewritten as an equation between DAG nodes. Sides
//! become left-deep `Add` chains over `Mul(Const, Var)` terms, a variable
//! product becomes a `Mul` of the two side roots, and the result is equated
//! with the c-side. All node creation is hash-consed, so common
//! subexpressions are shared across constraints.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_bigint::BigUint;
use thiserror::Error;

use crate::field::{FieldElement, Prime};
use crate::r1cs::{LinearCombination, R1cs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RNode {
    Const(FieldElement),
    /// An original variable, by index into the input's pseudo-variable vector.
    Var(usize),
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operation {
    Null,
    Add,
    Mul,
}

impl RNode {
    pub fn operation(&self) -> Operation {
        match self {
            RNode::Const(_) | RNode::Var(_) => Operation::Null,
            RNode::Add(..) => Operation::Add,
            RNode::Mul(..) => Operation::Mul,
        }
    }

    pub fn operands(&self) -> Option<(NodeId, NodeId)> {
        match *self {
            RNode::Add(l, r) | RNode::Mul(l, r) => Some((l, r)),
            _ => None,
        }
    }

    pub fn is_interior(&self) -> bool {
        self.operands().is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DfgError {
    #[error("constraint {0} reduces to a false constant equation")]
    DegenerateConstraint(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum NodeKey {
    Const(BigUint),
    Var(usize),
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    /// A whole multi-term linear combination, keyed by its terms.
    Sum(Vec<(usize, BigUint)>),
}

fn unordered(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone)]
pub struct RGraph {
    prime: Prime,
    nodes: Vec<RNode>,
    consumers: Vec<Vec<(NodeId, u8)>>,
    /// Constraint root → the nodes it is asserted equal to (a `Var`, or the
    /// zero constant).
    equalities: BTreeMap<NodeId, Vec<NodeId>>,
    dedup: HashMap<NodeKey, NodeId>,
}

impl RGraph {
    fn new(prime: Prime) -> Self {
        RGraph {
            prime,
            nodes: Vec::new(),
            consumers: Vec::new(),
            equalities: BTreeMap::new(),
            dedup: HashMap::new(),
        }
    }

    pub fn prime(&self) -> &Prime {
        &self.prime
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &RNode {
        &self.nodes[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn consumers(&self, id: NodeId) -> &[(NodeId, u8)] {
        &self.consumers[id.0]
    }

    pub fn equalities(&self) -> &BTreeMap<NodeId, Vec<NodeId>> {
        &self.equalities
    }

    pub fn targets(&self, id: NodeId) -> &[NodeId] {
        self.equalities.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn var_node(&self, index: usize) -> Option<NodeId> {
        self.dedup.get(&NodeKey::Var(index)).copied()
    }

    fn intern(&mut self, key: NodeKey, node: RNode) -> NodeId {
        if let Some(&id) = self.dedup.get(&key) {
            return id;
        }
        let id = NodeId(self.nodes.len());
        if let Some((l, r)) = node.operands() {
            self.consumers[l.0].push((id, 0));
            self.consumers[r.0].push((id, 1));
        }
        self.nodes.push(node);
        self.consumers.push(Vec::new());
        self.dedup.insert(key, id);
        id
    }

    pub fn constant(&mut self, value: FieldElement) -> NodeId {
        self.intern(NodeKey::Const(value.residue().clone()), RNode::Const(value))
    }

    pub fn var(&mut self, index: usize) -> NodeId {
        self.intern(NodeKey::Var(index), RNode::Var(index))
    }

    pub fn add(&mut self, l: NodeId, r: NodeId) -> NodeId {
        let (a, b) = unordered(l, r);
        self.intern(NodeKey::Add(a, b), RNode::Add(l, r))
    }

    pub fn mul(&mut self, l: NodeId, r: NodeId) -> NodeId {
        let (a, b) = unordered(l, r);
        self.intern(NodeKey::Mul(a, b), RNode::Mul(l, r))
    }

    fn equate(&mut self, root: NodeId, target: NodeId) {
        let t = self.equalities.entry(root).or_default();
        if !t.contains(&target) {
            t.push(target);
        }
    }

    fn push_unshared(&mut self, node: RNode) -> NodeId {
        let id = NodeId(self.nodes.len());
        if let Some((l, r)) = node.operands() {
            self.consumers[l.0].push((id, 0));
            self.consumers[r.0].push((id, 1));
        }
        self.nodes.push(node);
        self.consumers.push(Vec::new());
        id
    }

    /// Left-deep `Add` chain in ascending index order. Unit coefficients skip
    /// the `Mul`; index 0 contributes a bare constant.
    ///
    /// Equal combinations share one chain, but partial sums are never shared:
    /// which prefixes two chains have in common depends on how variables are
    /// numbered, and would leak that numbering into the graph's shape.
    fn chain(&mut self, lc: &LinearCombination) -> Option<NodeId> {
        let key = NodeKey::Sum(lc.iter().map(|(i, c)| (i, c.residue().clone())).collect());
        if lc.len() >= 2 {
            if let Some(&id) = self.dedup.get(&key) {
                return Some(id);
            }
        }
        let mut acc: Option<NodeId> = None;
        for (i, c) in lc.iter() {
            let term = if i == 0 {
                self.constant(c.clone())
            } else if c.is_one() {
                self.var(i)
            } else {
                let k = self.constant(c.clone());
                let v = self.var(i);
                self.mul(k, v)
            };
            acc = Some(match acc {
                Some(prev) => self.push_unshared(RNode::Add(prev, term)),
                None => term,
            });
        }
        if lc.len() >= 2 {
            self.dedup.insert(key, acc.expect("non-empty"));
        }
        acc
    }

    /// Asserts `lc = 0`. Returns false if `lc` is a nonzero constant.
    fn assert_zero(&mut self, lc: &LinearCombination) -> bool {
        if !lc.has_variables() {
            return lc.is_empty();
        }
        let mut root = self.chain(lc).expect("non-empty");
        if !self.node(root).is_interior() {
            // A lone unit variable: give it a node to hang the equation on.
            let one = self.constant(self.prime.one());
            root = self.mul(one, root);
        }
        let zero = self.constant(self.prime.zero());
        self.equate(root, zero);
        true
    }

    /// Equates an interior `root` with the linear combination `c`.
    fn equate_lc(&mut self, root: NodeId, c: &LinearCombination) {
        if let Some(z) = single_unit_var(c) {
            let v = self.var(z);
            self.equate(root, v);
        } else if c.is_empty() {
            let zero = self.constant(self.prime.zero());
            self.equate(root, zero);
        } else {
            let mut acc = root;
            for (i, k) in c.iter() {
                let neg = LinearCombination::from_terms([(i, k.neg())]);
                let term = self.chain(&neg).expect("single term");
                acc = self.add(acc, term);
            }
            let zero = self.constant(self.prime.zero());
            self.equate(acc, zero);
        }
    }

    fn label(&self, id: NodeId, out: &mut String, depth: usize) {
        if depth > 32 {
            out.push('…');
            return;
        }
        match self.node(id) {
            RNode::Const(c) => {
                let _ = write!(out, "{}", c.signed());
            }
            RNode::Var(i) => {
                let _ = write!(out, "x{i}");
            }
            RNode::Add(l, r) => {
                out.push('(');
                self.label(*l, out, depth + 1);
                out.push_str(" + ");
                self.label(*r, out, depth + 1);
                out.push(')');
            }
            RNode::Mul(l, r) => {
                self.label(*l, out, depth + 1);
                out.push('*');
                self.label(*r, out, depth + 1);
            }
        }
    }

    /// Infix rendering of the expression rooted at `id`, in input indices.
    pub fn expression(&self, id: NodeId) -> String {
        let mut s = String::new();
        self.label(id, &mut s, 0);
        s
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph rgraph {\n");
        for id in self.ids() {
            let label = match self.node(id) {
                RNode::Const(c) => c.signed().to_string(),
                RNode::Var(i) => format!("x{i}"),
                RNode::Add(..) => "+".into(),
                RNode::Mul(..) => "*".into(),
            };
            let _ = writeln!(out, "  n{} [label=\"{}\"];", id.0, label);
        }
        for id in self.ids() {
            if let Some((l, r)) = self.node(id).operands() {
                let _ = writeln!(out, "  n{} -> n{};", l.0, id.0);
                let _ = writeln!(out, "  n{} -> n{};", r.0, id.0);
            }
        }
        for (root, targets) in &self.equalities {
            for t in targets {
                let _ = writeln!(out, "  n{} -> n{} [style=dashed, label=\"=\"];", root.0, t.0);
            }
        }
        out.push_str("}\n");
        out
    }
}

pub(crate) fn single_unit_var(lc: &LinearCombination) -> Option<usize> {
    if lc.len() != 1 {
        return None;
    }
    lc.iter().find(|(i, c)| *i != 0 && c.is_one()).map(|(i, _)| i)
}

fn constant_of(lc: &LinearCombination, prime: &Prime) -> FieldElement {
    lc.get(0).cloned().unwrap_or_else(|| prime.zero())
}

pub fn build_rgraph(sys: &R1cs) -> Result<RGraph, DfgError> {
    let mut g = RGraph::new(sys.prime.clone());
    for (ci, con) in sys.constraints.iter().enumerate() {
        if con.is_quadratic() {
            let a = g.chain(&con.a).expect("has variables");
            let b = g.chain(&con.b).expect("has variables");
            let root = g.mul(a, b);
            g.equate_lc(root, &con.c);
            continue;
        }
        // One side is a constant (possibly zero): fold it into the other.
        let lhs = if con.a.has_variables() {
            con.a.scale(&constant_of(&con.b, &sys.prime))
        } else {
            con.b.scale(&constant_of(&con.a, &sys.prime))
        };
        let lhs_interior = lhs.len() >= 2 || (lhs.has_variables() && single_unit_var(&lhs).is_none());
        match single_unit_var(&con.c) {
            Some(z) if lhs_interior && lhs.get(z).is_none() => {
                let root = g.chain(&lhs).expect("non-empty");
                let v = g.var(z);
                g.equate(root, v);
            }
            _ => {
                let mut rel = lhs;
                for (i, k) in con.c.iter() {
                    rel.add_term(i, &k.neg());
                }
                if !g.assert_zero(&rel) {
                    return Err(DfgError::DegenerateConstraint(ci));
                }
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::r1cs::parse_r1cs;
    use crate::test_support::{enumerate_assignments, vitalik};

    #[test]
    fn vitalik_graph_shape() {
        let sys = vitalik();
        let g = build_rgraph(&sys).unwrap();
        let x = g.var_node(1).unwrap();
        let sym1 = g.var_node(3).unwrap();
        let y = g.var_node(4).unwrap();
        let sym2 = g.var_node(5).unwrap();
        let out = g.var_node(2).unwrap();
        let xx = g.ids().find(|&id| g.node(id) == &RNode::Mul(x, x)).unwrap();
        assert_eq!(g.targets(xx), &[sym1]);
        let sx = g.ids().find(|&id| matches!(g.node(id), RNode::Mul(..)) && g.targets(id) == [y]).unwrap();
        let (l, r) = g.node(sx).operands().unwrap();
        assert_eq!(unordered(l, r), unordered(sym1, x));
        let xy = g.ids().find(|&id| g.targets(id) == [sym2]).unwrap();
        assert!(matches!(g.node(xy), RNode::Add(..)));
        let five = g.ids().find(|&id| g.targets(id) == [out]).unwrap();
        let (l, r) = g.node(five).operands().unwrap();
        assert!(matches!(g.node(l), RNode::Const(_)));
        assert_eq!(r, sym2);
    }

    #[test]
    fn smallest_quadratic() {
        let sys = parse_r1cs(
            br#"{"prime": "7", "num_vars": 4, "constraints": [{"a": {"1": "1"}, "b": {"2": "1"}, "c": {"3": "1"}}]}"#,
        )
        .unwrap();
        let g = build_rgraph(&sys).unwrap();
        assert_eq!(g.len(), 4);
        let m = g.ids().find(|&id| g.node(id).operation() == Operation::Mul).unwrap();
        assert_eq!(g.targets(m), &[g.var_node(3).unwrap()]);
    }

    #[test]
    fn common_subexpressions_are_shared() {
        // (x1 + x2) * x3 = x4 and (x1 + x2) * x5 = x6
        let sys = parse_r1cs(
            br#"{"prime": "7", "num_vars": 7, "constraints": [
            {"a": {"1": "1", "2": "1"}, "b": {"3": "1"}, "c": {"4": "1"}},
            {"a": {"2": "1", "1": "1"}, "b": {"5": "1"}, "c": {"6": "1"}}]}"#,
        )
        .unwrap();
        let g = build_rgraph(&sys).unwrap();
        let adds: Vec<_> = g.ids().filter(|&id| g.node(id).operation() == Operation::Add).collect();
        assert_eq!(adds.len(), 1);
        assert_eq!(g.consumers(adds[0]).len(), 2);
    }

    #[test]
    fn degenerate_constraint() {
        let sys = parse_r1cs(
            br#"{"prime": "7", "num_vars": 2, "constraints": [{"a": {"0": "2"}, "b": {"0": "3"}, "c": {"0": "5"}}]}"#,
        )
        .unwrap();
        assert_eq!(build_rgraph(&sys).unwrap_err(), DfgError::DegenerateConstraint(0));
        let ok = parse_r1cs(
            br#"{"prime": "7", "num_vars": 2, "constraints": [{"a": {"0": "2"}, "b": {"0": "3"}, "c": {"0": "6"}}]}"#,
        )
        .unwrap();
        assert!(build_rgraph(&ok).unwrap().is_empty());
    }

    fn eval(g: &RGraph, id: NodeId, x: &[u64], p: u64, memo: &mut HashMap<NodeId, u64>) -> u64 {
        if let Some(&v) = memo.get(&id) {
            return v;
        }
        let v = match g.node(id) {
            RNode::Const(c) => u64::try_from(c.residue()).unwrap(),
            RNode::Var(i) => x[*i],
            RNode::Add(l, r) => (eval(g, *l, x, p, memo) + eval(g, *r, x, p, memo)) % p,
            RNode::Mul(l, r) => (eval(g, *l, x, p, memo) * eval(g, *r, x, p, memo)) % p,
        };
        memo.insert(id, v);
        v
    }

    #[test]
    fn equalities_reproduce_constraints() {
        // Mixes quadratic sides with constants, multi-term c-sides and
        // linear constraints written on either side.
        let sys = parse_r1cs(
            br#"{"prime": "5", "num_vars": 4, "constraints": [
            {"a": {"1": "2", "0": "1"}, "b": {"2": "1"}, "c": {"3": "1", "0": "4"}},
            {"a": {"0": "3"}, "b": {"1": "1", "3": "-1"}, "c": {"2": "1"}},
            {"a": {"2": "1"}, "b": {"2": "1"}, "c": {}},
            {"a": {"3": "1"}, "b": {"0": "1"}, "c": {"3": "2"}}]}"#,
        )
        .unwrap();
        let g = build_rgraph(&sys).unwrap();
        for id in g.ids() {
            if let Some((l, r)) = g.node(id).operands() {
                assert!(l < id && r < id, "operands precede consumers");
            }
        }
        for x in enumerate_assignments(5, 4) {
            let mut memo = HashMap::new();
            let dag_ok = g.equalities().iter().all(|(root, ts)| {
                let v = eval(&g, *root, &x, 5, &mut memo);
                ts.iter().all(|t| eval(&g, *t, &x, 5, &mut memo) == v)
            });
            let sys_ok = crate::test_support::satisfied_u64(&sys, &x);
            assert_eq!(dag_ok, sys_ok, "assignment {x:?}");
        }
    }

    #[test]
    fn constraint_order_changes_only_ids() {
        let sys = vitalik();
        let mut rev = sys.clone();
        rev.constraints.reverse();
        let g1 = build_rgraph(&sys).unwrap();
        let g2 = build_rgraph(&rev).unwrap();
        let census = |g: &RGraph| {
            let mut v: Vec<_> = g.ids().map(|id| (g.node(id).operation(), g.consumers(id).len())).collect();
            v.sort();
            v
        };
        assert_eq!(census(&g1), census(&g2));
    }

    #[test]
    fn dot_export_mentions_every_node() {
        let g = build_rgraph(&vitalik()).unwrap();
        let dot = g.to_dot();
        for id in g.ids() {
            assert!(dot.contains(&format!("n{} [", id.0)));
        }
    }
}
