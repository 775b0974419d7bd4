//! The shipped benchmark corpus: small base systems and, for each, the
//! categories and seeds of its variants.
//!
//! On disk: `<dir>/<base>/base.json` and `<dir>/<base>/variants/<cat>-<seed>.json`.

use std::fs;
use std::io;
use std::path::Path;

use r1cs_paradigm::{parse_r1cs, serialize_r1cs, R1cs};

use crate::transform::{transform, Category, TransformError, TransformSpec};

pub struct Base {
    pub name: &'static str,
    pub json: &'static str,
    /// `(category, number of variants)`.
    pub plan: &'static [(Category, u64)],
}

use Category::*;

pub const BASES: &[Base] = &[
    Base {
        // x³ + x + 5 = out
        name: "cubic",
        json: r#"{"prime": "101", "num_vars": 6, "constraints": [
            {"a": {"1": "1"}, "b": {"1": "1"}, "c": {"3": "1"}},
            {"a": {"3": "1"}, "b": {"1": "1"}, "c": {"4": "1"}},
            {"a": {"1": "1", "4": "1"}, "b": {"0": "1"}, "c": {"5": "1"}},
            {"a": {"0": "5", "5": "1"}, "b": {"0": "1"}, "c": {"2": "1"}}]}"#,
        plan: &[(VariablePermutation, 5), (ConstraintPermutation, 3), (MergeSplit, 2)],
    },
    Base {
        // a + b + c + d = e
        name: "sum4",
        json: r#"{"prime": "7", "num_vars": 6, "constraints": [
            {"a": {"1": "1", "2": "1", "3": "1", "4": "1"}, "b": {"0": "1"}, "c": {"5": "1"}}]}"#,
        plan: &[(VariablePermutation, 5), (SplitSum, 3)],
    },
    Base {
        // s = a + b + c; t = s²
        name: "square_of_sum",
        json: r#"{"prime": "13", "num_vars": 6, "constraints": [
            {"a": {"1": "1", "2": "1", "3": "1"}, "b": {"0": "1"}, "c": {"4": "1"}},
            {"a": {"4": "1"}, "b": {"4": "1"}, "c": {"5": "1"}}]}"#,
        plan: &[(VariablePermutation, 5), (ConstraintPermutation, 3), (SplitSum, 3), (MergeSplit, 2)],
    },
    Base {
        // d = a + b + c; e = 2a + 2b + d
        name: "shared_pair",
        json: r#"{"prime": "7", "num_vars": 6, "constraints": [
            {"a": {"1": "1", "2": "1", "3": "1"}, "b": {"0": "1"}, "c": {"4": "1"}},
            {"a": {"1": "2", "2": "2", "4": "1"}, "b": {"0": "1"}, "c": {"5": "1"}}]}"#,
        plan: &[(VariablePermutation, 5), (ConstraintPermutation, 3), (SplitSum, 3), (SharedSubsum, 3)],
    },
    Base {
        // d = a + b + c; e = a + b - c; f = d·e
        name: "shared_product",
        json: r#"{"prime": "13", "num_vars": 7, "constraints": [
            {"a": {"1": "1", "2": "1", "3": "1"}, "b": {"0": "1"}, "c": {"4": "1"}},
            {"a": {"1": "1", "2": "1", "3": "12"}, "b": {"0": "1"}, "c": {"5": "1"}},
            {"a": {"4": "1"}, "b": {"5": "1"}, "c": {"6": "1"}}]}"#,
        plan: &[(VariablePermutation, 5), (ConstraintPermutation, 3), (SharedSubsum, 3)],
    },
    Base {
        // z = x·y; w = z + x + y
        name: "product_sum",
        json: r#"{"prime": "7", "num_vars": 5, "constraints": [
            {"a": {"1": "1"}, "b": {"2": "1"}, "c": {"3": "1"}},
            {"a": {"1": "1", "2": "1", "3": "1"}, "b": {"0": "1"}, "c": {"4": "1"}}]}"#,
        plan: &[(VariablePermutation, 5), (ConstraintPermutation, 3), (SplitSum, 3)],
    },
    Base {
        // y = x², z = x³; w = 3z + 2y + x; v = 6z + 4y + 1
        name: "poly",
        json: r#"{"prime": "13", "num_vars": 6, "constraints": [
            {"a": {"1": "1"}, "b": {"1": "1"}, "c": {"2": "1"}},
            {"a": {"2": "1"}, "b": {"1": "1"}, "c": {"3": "1"}},
            {"a": {"1": "1", "2": "2", "3": "3"}, "b": {"0": "1"}, "c": {"4": "1"}},
            {"a": {"0": "1", "2": "4", "3": "6"}, "b": {"0": "1"}, "c": {"5": "1"}}]}"#,
        plan: &[(VariablePermutation, 5), (SplitSum, 3), (SharedSubsum, 3)],
    },
    Base {
        // t = u + v; s = t + w; r = s·u
        name: "chain3",
        json: r#"{"prime": "7", "num_vars": 7, "constraints": [
            {"a": {"1": "1", "2": "1"}, "b": {"0": "1"}, "c": {"4": "1"}},
            {"a": {"3": "1", "4": "1"}, "b": {"0": "1"}, "c": {"5": "1"}},
            {"a": {"5": "1"}, "b": {"1": "1"}, "c": {"6": "1"}}]}"#,
        plan: &[(VariablePermutation, 5), (ConstraintPermutation, 3), (MergeSplit, 2)],
    },
    Base {
        // m = x·inv; o = 1 - m; x·o = 0
        name: "is_zero",
        json: r#"{"prime": "7", "num_vars": 5, "constraints": [
            {"a": {"1": "1"}, "b": {"2": "1"}, "c": {"3": "1"}},
            {"a": {"0": "1", "3": "6"}, "b": {"0": "1"}, "c": {"4": "1"}},
            {"a": {"1": "1"}, "b": {"4": "1"}, "c": {}}]}"#,
        plan: &[(VariablePermutation, 5), (ConstraintPermutation, 3)],
    },
    Base {
        // c = a·b; d = 2a + 3b + 4c; e = 4a + 6b + 5d
        name: "weighted",
        json: r#"{"prime": "101", "num_vars": 6, "constraints": [
            {"a": {"1": "1"}, "b": {"2": "1"}, "c": {"3": "1"}},
            {"a": {"1": "2", "2": "3", "3": "4"}, "b": {"0": "1"}, "c": {"4": "1"}},
            {"a": {"1": "4", "2": "6", "4": "5"}, "b": {"0": "1"}, "c": {"5": "1"}}]}"#,
        plan: &[(VariablePermutation, 5), (SharedSubsum, 3)],
    },
    Base {
        // u = x + y + 1; v = 2x + 2y + z; w = u·v
        name: "sum_product",
        json: r#"{"prime": "13", "num_vars": 7, "constraints": [
            {"a": {"0": "1", "1": "1", "2": "1"}, "b": {"0": "1"}, "c": {"4": "1"}},
            {"a": {"1": "2", "2": "2", "3": "1"}, "b": {"0": "1"}, "c": {"5": "1"}},
            {"a": {"4": "1"}, "b": {"5": "1"}, "c": {"6": "1"}}]}"#,
        plan: &[(VariablePermutation, 5), (SharedSubsum, 3)],
    },
];

impl Base {
    pub fn system(&self) -> R1cs {
        parse_r1cs(self.json.as_bytes()).expect("built-in base parses")
    }

    /// Variant seeds for one category; distinct across the whole corpus.
    pub fn seeds(&self, category: Category) -> Vec<u64> {
        let index = BASES.iter().position(|b| b.name == self.name).expect("listed") as u64;
        let count = self.plan.iter().find(|(c, _)| *c == category).map_or(0, |p| p.1);
        (0..count).map(|k| 1000 * (index + 1) + 100 * u64::from(category.number()) + k).collect()
    }
}

pub fn variant_file_name(category: Category, seed: u64) -> String {
    format!("{}-{}.json", category.number(), seed)
}

/// Parses `<cat>-<seed>.json`.
pub fn parse_variant_file_name(name: &str) -> Option<(Category, u64)> {
    let stem = name.strip_suffix(".json")?;
    let (cat, seed) = stem.split_once('-')?;
    Some((Category::from_number(cat.parse().ok()?)?, seed.parse().ok()?))
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("base {base}: {source}")]
    Transform { base: &'static str, source: TransformError },
}

/// Writes the whole corpus under `dir`, replacing any files of the same names.
pub fn write_corpus(dir: &Path) -> Result<(), CorpusError> {
    for base in BASES {
        let sys = base.system();
        let bdir = dir.join(base.name);
        fs::create_dir_all(bdir.join("variants"))?;
        fs::write(bdir.join("base.json"), serialize_r1cs(&sys))?;
        for &(category, _) in base.plan {
            for seed in base.seeds(category) {
                let v = transform(&sys, &TransformSpec::new(category, seed))
                    .map_err(|source| CorpusError::Transform { base: base.name, source })?;
                fs::write(bdir.join("variants").join(variant_file_name(category, seed)), serialize_r1cs(&v.system))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeMap, BTreeSet};

    #[test]
    fn group_counts() {
        let mut per: BTreeMap<u8, u64> = BTreeMap::new();
        for b in BASES {
            for &(c, n) in b.plan {
                *per.entry(c.number()).or_default() += n;
            }
        }
        assert_eq!(per.into_iter().collect::<Vec<_>>(), vec![(1, 55), (2, 21), (3, 15), (4, 15), (5, 6)]);
    }

    #[test]
    fn bases_are_small() {
        for b in BASES {
            let sys = b.system();
            assert!(sys.num_vars <= 7, "{}", b.name);
            assert!([7, 13, 101].contains(&sys.prime.to_u64().unwrap()), "{}", b.name);
            assert!((1..=4).contains(&sys.constraints.len()), "{}", b.name);
        }
    }

    #[test]
    fn seeds_are_unique() {
        let mut all = BTreeSet::new();
        for b in BASES {
            for c in Category::ALL {
                for s in b.seeds(c) {
                    assert!(all.insert(s));
                }
            }
        }
    }

    #[test]
    fn every_planned_variant_applies() {
        for b in BASES {
            let sys = b.system();
            for &(c, _) in b.plan {
                for seed in b.seeds(c) {
                    transform(&sys, &TransformSpec::new(c, seed)).unwrap_or_else(|e| panic!("{} {c}-{seed}: {e}", b.name));
                }
            }
        }
    }

    #[test]
    fn file_names_round_trip() {
        assert_eq!(parse_variant_file_name(&variant_file_name(SplitSum, 3301)), Some((SplitSum, 3301)));
        assert_eq!(parse_variant_file_name("9-1.json"), None);
        assert_eq!(parse_variant_file_name("base.json"), None);
    }
}
