//! Graph abstraction: every linear row collapses into a single node, so the
//! order in which a sum was associated no longer shows up in the graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::One;

use crate::dfg::{NodeId, RGraph};
use crate::ranker::linear_row_weight;
use crate::skeleton::Skeleton;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AbstractNode {
    /// A variable taking part in some product.
    Retained(NodeId),
    /// The linear row with this index in the skeleton.
    Linear(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractGraph {
    pub nodes: Vec<AbstractNode>,
    /// Directed `(from, to)` pairs of node positions.
    pub edges: BTreeSet<(usize, usize)>,
    /// Exact node weights: 1 for retained nodes, the coefficient-variance
    /// weight for linear ones.
    pub node_weights: Vec<BigRational>,
}

impl AbstractGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn position(&self, node: AbstractNode) -> Option<usize> {
        self.nodes.iter().position(|&n| n == node)
    }

    /// In-neighbour lists, indexed by node position.
    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.nodes.len()];
        for &(from, to) in &self.edges {
            preds[to].push(from);
        }
        preds
    }

    pub fn to_dot(&self, g: &RGraph) -> String {
        let mut out = String::from("digraph abstract {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let label = match n {
                AbstractNode::Retained(id) => g.expression(*id),
                AbstractNode::Linear(r) => format!("L{r}"),
            };
            let shape = match n {
                AbstractNode::Retained(_) => "ellipse",
                AbstractNode::Linear(_) => "box",
            };
            let _ = writeln!(out, "  a{i} [label=\"{label}\", shape={shape}, weight=\"{}\"];", self.node_weights[i]);
        }
        for (from, to) in &self.edges {
            let _ = writeln!(out, "  a{from} -> a{to};");
        }
        out.push_str("}\n");
        out
    }
}

/// Builds the abstract graph of a skeleton.
///
/// Edges run from a result to what it depends on: a product's output points
/// at both operands, a linear node points at every retained variable it
/// mentions, and two linear nodes sharing any variable point at each other.
pub fn abstract_graph(sk: &Skeleton) -> AbstractGraph {
    let retained: BTreeSet<NodeId> = sk.quads.iter().flat_map(|q| [q.left, q.right, q.out]).collect();
    let mut nodes: Vec<AbstractNode> = retained.iter().map(|&n| AbstractNode::Retained(n)).collect();
    let pos: BTreeMap<NodeId, usize> = retained.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut node_weights = vec![BigRational::one(); nodes.len()];
    let mut edges = BTreeSet::new();
    for q in &sk.quads {
        for operand in [q.left, q.right] {
            if operand != q.out {
                edges.insert((pos[&q.out], pos[&operand]));
            }
        }
    }
    let base = nodes.len();
    for (r, row) in sk.lins.iter().enumerate() {
        nodes.push(AbstractNode::Linear(r));
        node_weights.push(linear_row_weight(row));
        for v in row.terms.keys() {
            if let Some(&p) = pos.get(v) {
                edges.insert((base + r, p));
            }
        }
    }
    for (r1, row1) in sk.lins.iter().enumerate() {
        for (r2, row2) in sk.lins.iter().enumerate().skip(r1 + 1) {
            if row1.terms.keys().any(|v| row2.terms.contains_key(v)) {
                edges.insert((base + r1, base + r2));
                edges.insert((base + r2, base + r1));
            }
        }
    }
    AbstractGraph { nodes, edges, node_weights }
}
