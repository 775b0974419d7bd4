//! Equivalence benchmark for R1CS normalization: seeded rewrites of small
//! systems, a brute-force solution-set oracle, and a corpus runner.

pub mod bench;
pub mod corpus;
pub mod oracle;
pub mod transform;

pub use bench::{run_benchmark, BenchError, BenchReport, CaseResult};
pub use oracle::{equivalent_within, solution_set_equivalent, OracleError};
pub use transform::{transform, Category, ChainMode, TransformError, TransformSpec, Variant};
