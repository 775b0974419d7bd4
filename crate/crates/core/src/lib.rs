//! Canonical normalization of rank-1 constraint systems.
//!
//! Pipeline: [`dfg::build_rgraph`] → [`tiler::select_tiles`] →
//! [`skeleton::merge_linear`] → [`abstractor::abstract_graph`] →
//! [`ranker::weighted_pagerank`] → [`canon::normalize`].

pub mod abstractor;
pub mod canon;
mod colour;
pub mod dfg;
pub mod field;
pub mod r1cs;
pub mod ranker;
pub mod skeleton;
pub mod tiler;

#[cfg(test)]
mod test_support;

pub use field::{FieldElement, FieldError, Prime};
pub use r1cs::{parse_r1cs, parse_witness, serialize_r1cs, Constraint, LinearCombination, R1cs, R1csError, VarFate, VariableMap, Witness};
