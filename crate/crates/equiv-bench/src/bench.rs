//! Runs normalization over a corpus directory and tallies, per category, the
//! variants whose canonical form is byte-identical to their base's.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use r1cs_paradigm::canon::normalize;
use r1cs_paradigm::{parse_r1cs, serialize_r1cs, R1cs};
use serde::Serialize;
use thiserror::Error;

use crate::corpus::parse_variant_file_name;
use crate::oracle::solution_set_equivalent;
use crate::transform::{transform, Category, TransformSpec};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {reason}")]
    BadBase { path: PathBuf, reason: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub base: String,
    pub category: u8,
    pub seed: u64,
    /// Canonical forms of base and variant are byte-identical.
    pub canonical_equal: bool,
    /// `Some(true)` when the oracle confirmed equal projected solution sets.
    pub equivalent: Option<bool>,
    pub error: Option<String>,
}

impl CaseResult {
    pub fn passed(&self) -> bool {
        self.canonical_equal && self.equivalent == Some(true) && self.error.is_none()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CategoryRow {
    pub category: u8,
    pub description: &'static str,
    pub groups: usize,
    pub successes: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub categories: Vec<CategoryRow>,
    pub cases: Vec<CaseResult>,
}

impl BenchReport {
    fn new(mut cases: Vec<CaseResult>) -> Self {
        cases.sort_by(|a, b| (a.category, &a.base, a.seed).cmp(&(b.category, &b.base, b.seed)));
        let categories = Category::ALL
            .iter()
            .map(|&c| {
                let mine: Vec<_> = cases.iter().filter(|r| r.category == c.number()).collect();
                let successes = mine.iter().filter(|r| r.passed()).count();
                let rate = if mine.is_empty() { 0.0 } else { successes as f64 / mine.len() as f64 };
                CategoryRow { category: c.number(), description: c.description(), groups: mine.len(), successes, rate }
            })
            .collect();
        BenchReport { categories, cases }
    }

    pub fn all_passed(&self) -> bool {
        self.cases.iter().all(CaseResult::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| !c.passed())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<8} {:<32} {:>6} {:>9} {:>7}", "category", "description", "groups", "successes", "rate");
        for r in &self.categories {
            let _ = writeln!(
                out,
                "{:<8} {:<32} {:>6} {:>9} {:>6.1}%",
                r.category,
                r.description,
                r.groups,
                r.successes,
                100.0 * r.rate
            );
        }
        for f in self.failures() {
            let why = f.error.clone().unwrap_or_else(|| {
                format!("canonical_equal={} equivalent={:?}", f.canonical_equal, f.equivalent)
            });
            let _ = writeln!(out, "FAIL {} {}-{}: {}", f.base, f.category, f.seed, why);
        }
        out
    }
}

fn read(path: &Path) -> Result<Vec<u8>, BenchError> {
    fs::read(path).map_err(|source| BenchError::Io { path: path.to_owned(), source })
}

fn canonical_bytes(sys: &R1cs) -> Result<String, String> {
    normalize(sys).map(|n| serialize_r1cs(&n.r1cs)).map_err(|e| format!("normalize: {e}"))
}

/// Evaluates every `<base>/variants/<cat>-<seed>.json` under `dir`.
///
/// The variable correspondence needed by the oracle is recovered by replaying
/// the seeded transform on the base; the variant file itself is what gets
/// normalized and checked, so an edited file shows up as a failure.
pub fn run_benchmark(dir: &Path) -> Result<BenchReport, BenchError> {
    let mut cases = Vec::new();
    let mut bases: Vec<PathBuf> = list(dir)?.into_iter().filter(|p| p.join("base.json").is_file()).collect();
    bases.sort();
    for bdir in bases {
        let name = bdir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_owned();
        let base_path = bdir.join("base.json");
        let bad = |reason: String| BenchError::BadBase { path: base_path.clone(), reason };
        let base = parse_r1cs(&read(&base_path)?).map_err(|e| bad(e.to_string()))?;
        let base_canon = canonical_bytes(&base).map_err(bad)?;
        let vdir = bdir.join("variants");
        let mut files = if vdir.is_dir() { list(&vdir)? } else { Vec::new() };
        files.sort();
        for path in files {
            let Some((category, seed)) = path.file_name().and_then(|n| n.to_str()).and_then(parse_variant_file_name) else {
                continue;
            };
            let mut case = CaseResult {
                base: name.clone(),
                category: category.number(),
                seed,
                canonical_equal: false,
                equivalent: None,
                error: None,
            };
            if let Err(e) = evaluate(&base, &base_canon, &path, category, seed, &mut case) {
                case.error = Some(e);
            }
            cases.push(case);
        }
    }
    Ok(BenchReport::new(cases))
}

fn evaluate(
    base: &R1cs,
    base_canon: &str,
    path: &Path,
    category: Category,
    seed: u64,
    case: &mut CaseResult,
) -> Result<(), String> {
    let bytes = read(path).map_err(|e| e.to_string())?;
    let variant = parse_r1cs(&bytes).map_err(|e| format!("parse: {e}"))?;
    case.canonical_equal = canonical_bytes(&variant)? == base_canon;
    let replay = transform(base, &TransformSpec::new(category, seed)).map_err(|e| e.to_string())?;
    let equivalent = solution_set_equivalent(base, &variant, &replay.shared).map_err(|e| format!("oracle: {e}"))?;
    case.equivalent = Some(equivalent);
    Ok(())
}

fn list(dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    let io = |source| BenchError::Io { path: dir.to_owned(), source };
    fs::read_dir(dir).map_err(io)?.map(|e| e.map(|e| e.path()).map_err(io)).collect()
}
