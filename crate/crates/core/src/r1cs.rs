//! The R1CS data model and its JSON interchange format.
//!
//! A system holds `num_vars` pseudo-variables; index 0 is the constant 1.
//! Each constraint reads `(a·x) * (b·x) = (c·x) (mod p)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Deserialize;
use thiserror::Error;

use crate::field::{FieldElement, FieldError, Prime};

#[derive(Debug, Error)]
pub enum R1csError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid prime: {0}")]
    InvalidPrime(#[from] FieldError),
    #[error("constraint {constraint}, side {side}: index {index} out of range (num_vars = {num_vars})")]
    IndexOutOfRange { constraint: usize, side: char, index: usize, num_vars: usize },
    #[error("constraint {constraint}, side {side}: bad coefficient for key {key:?}: {reason}")]
    BadCoefficient { constraint: usize, side: char, key: String, reason: String },
    #[error("witness has {got} values, system has {expected} variables")]
    WitnessShape { expected: usize, got: usize },
    #[error("witness value 0 must be 1")]
    PseudoVariable,
    #[error("systems use different primes ({0} vs {1})")]
    PrimeMismatch(String, String),
}

/// Sparse coefficient vector; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LinearCombination {
    terms: BTreeMap<usize, FieldElement>,
}

impl LinearCombination {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms<I: IntoIterator<Item = (usize, FieldElement)>>(terms: I) -> Self {
        let mut lc = Self::new();
        for (i, c) in terms {
            lc.add_term(i, &c);
        }
        lc
    }

    /// Adds `coeff` to the coefficient at `index`, dropping it if it cancels.
    pub fn add_term(&mut self, index: usize, coeff: &FieldElement) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.get_mut(&index) {
            Some(existing) => {
                let sum = existing.add(coeff);
                if sum.is_zero() {
                    self.terms.remove(&index);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(index, coeff.clone());
            }
        }
    }

    /// Adds `k * other` term by term.
    pub fn add_scaled(&mut self, other: &LinearCombination, k: &FieldElement) {
        for (&i, c) in &other.terms {
            self.add_term(i, &c.mul(k));
        }
    }

    pub fn remove(&mut self, index: usize) -> Option<FieldElement> {
        self.terms.remove(&index)
    }

    pub fn get(&self, index: usize) -> Option<&FieldElement> {
        self.terms.get(&index)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &FieldElement)> {
        self.terms.iter().map(|(&i, c)| (i, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True if some term has index >= 1.
    pub fn has_variables(&self) -> bool {
        self.terms.keys().any(|&i| i != 0)
    }

    pub fn variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.keys().copied().filter(|&i| i != 0)
    }

    pub fn scale(&self, k: &FieldElement) -> Self {
        Self::from_terms(self.terms.iter().map(|(&i, c)| (i, c.mul(k))))
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.keys().next_back().copied()
    }

    pub fn evaluate(&self, values: &[FieldElement]) -> Option<FieldElement> {
        let mut acc: Option<FieldElement> = None;
        for (&i, c) in &self.terms {
            let t = c.mul(values.get(i)?);
            acc = Some(match acc {
                Some(a) => a.add(&t),
                None => t,
            });
        }
        Some(acc.unwrap_or_else(|| values[0].prime().zero()))
    }

    /// Renames indices through `f`; terms mapping to the same index are summed.
    pub fn remap(&self, mut f: impl FnMut(usize) -> usize) -> Self {
        Self::from_terms(self.terms.iter().map(|(&i, c)| (f(i), c.clone())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub a: LinearCombination,
    pub b: LinearCombination,
    pub c: LinearCombination,
}

impl Constraint {
    pub fn new(a: LinearCombination, b: LinearCombination, c: LinearCombination) -> Self {
        Constraint { a, b, c }
    }

    /// Both the a and b sides carry a variable term.
    pub fn is_quadratic(&self) -> bool {
        self.a.has_variables() && self.b.has_variables()
    }

    fn sides(&self) -> [(char, &LinearCombination); 3] {
        [('a', &self.a), ('b', &self.b), ('c', &self.c)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct R1cs {
    pub prime: Prime,
    pub num_vars: usize,
    pub constraints: Vec<Constraint>,
}

impl R1cs {
    pub fn new(prime: Prime, num_vars: usize, constraints: Vec<Constraint>) -> Result<Self, R1csError> {
        if num_vars == 0 {
            return Err(R1csError::Parse("num_vars must be at least 1".into()));
        }
        for (ci, con) in constraints.iter().enumerate() {
            for (side, lc) in con.sides() {
                if let Some(m) = lc.max_index() {
                    if m >= num_vars {
                        return Err(R1csError::IndexOutOfRange { constraint: ci, side, index: m, num_vars });
                    }
                }
                if lc.terms.values().any(|c| c.prime() != &prime) {
                    return Err(R1csError::InvalidPrime(FieldError::ModulusMismatch));
                }
            }
        }
        Ok(R1cs { prime, num_vars, constraints })
    }

    pub fn empty(prime: Prime) -> Self {
        R1cs { prime, num_vars: 1, constraints: Vec::new() }
    }

    pub fn check_witness(&self, witness: &Witness) -> Result<SatisfactionReport, R1csError> {
        if witness.values.len() != self.num_vars {
            return Err(R1csError::WitnessShape { expected: self.num_vars, got: witness.values.len() });
        }
        if !witness.values[0].is_one() {
            return Err(R1csError::PseudoVariable);
        }
        let w = &witness.values;
        let failing = self
            .constraints
            .iter()
            .enumerate()
            .filter(|(_, con)| {
                let a = con.a.evaluate(w).expect("indices validated");
                let b = con.b.evaluate(w).expect("indices validated");
                let c = con.c.evaluate(w).expect("indices validated");
                a.mul(&b) != c
            })
            .map(|(i, _)| i)
            .collect();
        Ok(SatisfactionReport { failing })
    }

    pub fn validate_paradigm(&self) -> ParadigmReport {
        validate_paradigm(self)
    }

    pub fn to_json(&self) -> String {
        serialize_r1cs(self)
    }
}

/// An assignment to every pseudo-variable, `values[0] == 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub values: Vec<FieldElement>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatisfactionReport {
    pub failing: Vec<usize>,
}

impl SatisfactionReport {
    pub fn satisfied(&self) -> bool {
        self.failing.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParadigmViolation {
    /// A variable product carrying anything beyond `x * y = z`.
    ImpureQuadratic { constraint: usize },
    /// Linear rows are `(Σ aᵢxᵢ) * 1 = 0` with at least one variable.
    MalformedLinear { constraint: usize },
    /// A variable used only by linear rows occurs in more than one.
    SharedLinearVariable { variable: usize, constraints: Vec<usize> },
    /// A quadratic row follows a linear one.
    QuadraticAfterLinear { constraint: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParadigmReport {
    pub violations: Vec<ParadigmViolation>,
}

impl ParadigmReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn is_unit_variable(lc: &LinearCombination) -> bool {
    lc.len() == 1 && lc.iter().all(|(i, c)| i >= 1 && c.is_one())
}

pub fn validate_paradigm(sys: &R1cs) -> ParadigmReport {
    let mut violations = Vec::new();
    let mut seen_linear = false;
    let mut in_quadratic = BTreeSet::new();
    let mut linear_uses: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (ci, con) in sys.constraints.iter().enumerate() {
        if con.is_quadratic() {
            if seen_linear {
                violations.push(ParadigmViolation::QuadraticAfterLinear { constraint: ci });
            }
            if !(is_unit_variable(&con.a) && is_unit_variable(&con.b) && is_unit_variable(&con.c)) {
                violations.push(ParadigmViolation::ImpureQuadratic { constraint: ci });
            }
            for lc in [&con.a, &con.b, &con.c] {
                in_quadratic.extend(lc.variables());
            }
        } else {
            seen_linear = true;
            let b_is_one = con.b.len() == 1 && con.b.get(0).is_some_and(|c| c.is_one());
            if !b_is_one || !con.c.is_empty() || !con.a.has_variables() {
                violations.push(ParadigmViolation::MalformedLinear { constraint: ci });
            }
            for lc in [&con.a, &con.b, &con.c] {
                for v in lc.variables() {
                    let uses = linear_uses.entry(v).or_default();
                    if uses.last() != Some(&ci) {
                        uses.push(ci);
                    }
                }
            }
        }
    }
    for (v, uses) in linear_uses {
        if uses.len() > 1 && !in_quadratic.contains(&v) {
            violations.push(ParadigmViolation::SharedLinearVariable { variable: v, constraints: uses });
        }
    }
    ParadigmReport { violations }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawR1cs {
    prime: String,
    num_vars: usize,
    constraints: Vec<RawConstraint>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraint {
    a: BTreeMap<String, String>,
    b: BTreeMap<String, String>,
    c: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWitness {
    values: Vec<String>,
}

fn from_json<'de, T: Deserialize<'de>>(bytes: &'de [u8]) -> Result<T, R1csError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let value = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        R1csError::Parse(format!("at `{path}`: {}", e.into_inner()))
    })?;
    Ok(value)
}

fn parse_lc(
    prime: &Prime,
    raw: &BTreeMap<String, String>,
    constraint: usize,
    side: char,
    num_vars: usize,
) -> Result<LinearCombination, R1csError> {
    let mut lc = LinearCombination::new();
    for (key, coeff) in raw {
        let index: usize = if !key.is_empty() && key.bytes().all(|b| b.is_ascii_digit()) {
            key.parse().map_err(|_| R1csError::IndexOutOfRange {
                constraint,
                side,
                index: usize::MAX,
                num_vars,
            })?
        } else {
            return Err(R1csError::BadCoefficient {
                constraint,
                side,
                key: key.clone(),
                reason: "index key is not a decimal integer".into(),
            });
        };
        if index >= num_vars {
            return Err(R1csError::IndexOutOfRange { constraint, side, index, num_vars });
        }
        let value = prime.parse_elem(coeff).map_err(|e| R1csError::BadCoefficient {
            constraint,
            side,
            key: key.clone(),
            reason: e.to_string(),
        })?;
        lc.add_term(index, &value);
    }
    Ok(lc)
}

/// Parses the JSON interchange format. Coefficients are reduced mod p and
/// zero coefficients dropped.
pub fn parse_r1cs(bytes: &[u8]) -> Result<R1cs, R1csError> {
    let raw: RawR1cs = from_json(bytes)?;
    let prime: Prime = raw.prime.parse()?;
    if raw.num_vars == 0 {
        return Err(R1csError::Parse("at `num_vars`: must be at least 1".into()));
    }
    let mut constraints = Vec::with_capacity(raw.constraints.len());
    for (ci, rc) in raw.constraints.iter().enumerate() {
        constraints.push(Constraint {
            a: parse_lc(&prime, &rc.a, ci, 'a', raw.num_vars)?,
            b: parse_lc(&prime, &rc.b, ci, 'b', raw.num_vars)?,
            c: parse_lc(&prime, &rc.c, ci, 'c', raw.num_vars)?,
        });
    }
    Ok(R1cs { prime, num_vars: raw.num_vars, constraints })
}

pub fn parse_witness(bytes: &[u8], prime: &Prime) -> Result<Witness, R1csError> {
    let raw: RawWitness = from_json(bytes)?;
    let values = raw
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| prime.parse_elem(v).map_err(|e| R1csError::Parse(format!("at `values[{i}]`: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Witness { values })
}

pub fn serialize_witness(w: &Witness) -> String {
    let vals: Vec<String> = w.values.iter().map(|v| format!("\"{v}\"")).collect();
    format!("{{\"values\": [{}]}}\n", vals.join(", "))
}

fn write_lc(out: &mut String, lc: &LinearCombination) {
    out.push('{');
    for (n, (i, c)) in lc.iter().enumerate() {
        if n > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "\"{i}\": \"{c}\"");
    }
    out.push('}');
}

/// Deterministic encoding: fixed key order, indices ascending, coefficients
/// as residues in `[0, p)`, one constraint per line.
pub fn serialize_r1cs(sys: &R1cs) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{{");
    let _ = writeln!(out, "  \"prime\": \"{}\",", sys.prime);
    let _ = writeln!(out, "  \"num_vars\": {},", sys.num_vars);
    if sys.constraints.is_empty() {
        let _ = writeln!(out, "  \"constraints\": []");
    } else {
        let _ = writeln!(out, "  \"constraints\": [");
        for (n, con) in sys.constraints.iter().enumerate() {
            out.push_str("    {\"a\": ");
            write_lc(&mut out, &con.a);
            out.push_str(", \"b\": ");
            write_lc(&mut out, &con.b);
            out.push_str(", \"c\": ");
            write_lc(&mut out, &con.c);
            out.push('}');
            if n + 1 < sys.constraints.len() {
                out.push(',');
            }
            out.push('\n');
        }
        let _ = writeln!(out, "  ]");
    }
    out.push_str("}\n");
    out
}

/// Where an original variable ended up after normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarFate {
    Canonical(usize),
    Eliminated,
}

/// Relates input variables to output variables.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VariableMap {
    /// Keyed by original index; 0 always maps to 0.
    pub map: BTreeMap<usize, VarFate>,
    /// Output variables with no input counterpart, with a description of
    /// the expression they stand for.
    pub introduced: Vec<(usize, String)>,
}

impl VariableMap {
    pub fn canonical(&self, original: usize) -> Option<usize> {
        match self.map.get(&original) {
            Some(VarFate::Canonical(k)) => Some(*k),
            _ => None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n  \"map\": {");
        for (n, (orig, fate)) in self.map.iter().enumerate() {
            if n > 0 {
                out.push_str(", ");
            }
            match fate {
                VarFate::Canonical(k) => {
                    let _ = write!(out, "\"{orig}\": {k}");
                }
                VarFate::Eliminated => {
                    let _ = write!(out, "\"{orig}\": \"eliminated\"");
                }
            }
        }
        out.push_str("},\n  \"introduced\": [");
        for (n, (k, prov)) in self.introduced.iter().enumerate() {
            if n > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{{\"canon\": {k}, \"provenance\": {}}}", serde_json::to_string(prov).unwrap());
        }
        out.push_str("]\n}\n");
        out
    }
}
