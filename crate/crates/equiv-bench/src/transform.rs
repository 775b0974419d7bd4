//! Solution-preserving rewrites of an R1CS, one family per benchmark category.
//!
//! Every rewrite is driven by a seeded ChaCha8 stream, so a `(category, seed)`
//! pair reproduces the same variant byte for byte.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use r1cs_paradigm::{Constraint, FieldElement, LinearCombination, R1cs};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    VariablePermutation = 1,
    ConstraintPermutation = 2,
    SplitSum = 3,
    SharedSubsum = 4,
    MergeSplit = 5,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::VariablePermutation,
        Category::ConstraintPermutation,
        Category::SplitSum,
        Category::SharedSubsum,
        Category::MergeSplit,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn description(self) -> &'static str {
        match self {
            Category::VariablePermutation => "variable permutation",
            Category::ConstraintPermutation => "constraint permutation",
            Category::SplitSum => "linear constraint splitting",
            Category::SharedSubsum => "shared intermediate variables",
            Category::MergeSplit => "chained constraint merge/split",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Which direction a category-5 rewrite goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChainMode {
    /// Seed picks; falls back to the other direction if the first is impossible.
    #[default]
    Either,
    Merge,
    Split,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformSpec {
    pub category: Category,
    pub seed: u64,
    /// Terms per partial sum when splitting (category 3).
    pub arity: usize,
    pub chain: ChainMode,
}

impl TransformSpec {
    pub fn new(category: Category, seed: u64) -> Self {
        TransformSpec { category, seed, arity: 2, chain: ChainMode::Either }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("category {category} does not apply: {reason}")]
    Inapplicable { category: Category, reason: &'static str },
}

/// A rewritten system plus the variables it shares with its source, as
/// `(source index, variant index)` pairs. Index 0 is implied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variant {
    pub system: R1cs,
    pub shared: Vec<(usize, usize)>,
}

pub fn transform(sys: &R1cs, spec: &TransformSpec) -> Result<Variant, TransformError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.category {
        Category::VariablePermutation => Ok(permute_variables(sys, &mut rng)),
        Category::ConstraintPermutation => Ok(permute_constraints(sys, &mut rng)),
        Category::SplitSum => split_sum(sys, spec.arity, &mut rng),
        Category::SharedSubsum => share_subsums(sys, &mut rng),
        Category::MergeSplit => {
            let merge_first = match spec.chain {
                ChainMode::Merge => true,
                ChainMode::Split => false,
                ChainMode::Either => rng.gen_bool(0.5),
            };
            let fallback = spec.chain == ChainMode::Either;
            let (first, second): (ChainStep, ChainStep) =
                if merge_first { (merge_chain, split_chain) } else { (split_chain, merge_chain) };
            match first(sys, &mut rng) {
                Some(v) => Ok(v),
                None if fallback => second(sys, &mut rng).ok_or(inapplicable(Category::MergeSplit, "no chain to merge or split")),
                None => Err(inapplicable(Category::MergeSplit, "no chain in the requested direction")),
            }
        }
    }
}

type ChainStep = fn(&R1cs, &mut ChaCha8Rng) -> Option<Variant>;

fn inapplicable(category: Category, reason: &'static str) -> TransformError {
    TransformError::Inapplicable { category, reason }
}

fn unit(sys: &R1cs, i: usize) -> LinearCombination {
    LinearCombination::from_terms([(i, sys.prime.one())])
}

fn identity_shared(sys: &R1cs) -> Vec<(usize, usize)> {
    (1..sys.num_vars).map(|i| (i, i)).collect()
}

fn build(sys: &R1cs, num_vars: usize, constraints: Vec<Constraint>) -> R1cs {
    R1cs::new(sys.prime.clone(), num_vars, constraints).expect("rewrite keeps indices in range")
}

/// The left-hand side of a constraint with a constant factor, i.e. `lhs = c`.
pub fn linear_lhs(c: &Constraint) -> Option<LinearCombination> {
    let scaled = |lc: &LinearCombination, k: &LinearCombination| match k.get(0) {
        Some(k) => lc.scale(k),
        None => LinearCombination::new(),
    };
    if !c.b.has_variables() {
        Some(scaled(&c.a, &c.b))
    } else if !c.a.has_variables() {
        Some(scaled(&c.b, &c.a))
    } else {
        None
    }
}

/// `lhs * 1 = rhs`.
pub fn linear(sys: &R1cs, lhs: LinearCombination, rhs: LinearCombination) -> Constraint {
    Constraint::new(lhs, unit(sys, 0), rhs)
}

/// Renames every variable through `f` (index 0 must stay fixed).
pub fn relabel(sys: &R1cs, num_vars: usize, f: impl Fn(usize) -> usize) -> R1cs {
    let cs = sys
        .constraints
        .iter()
        .map(|c| Constraint::new(c.a.remap(&f), c.b.remap(&f), c.c.remap(&f)))
        .collect();
    build(sys, num_vars, cs)
}

fn permute_variables(sys: &R1cs, rng: &mut ChaCha8Rng) -> Variant {
    let mut perm: Vec<usize> = (1..sys.num_vars).collect();
    perm.shuffle(rng);
    let f = |i: usize| if i == 0 { 0 } else { perm[i - 1] };
    Variant { system: relabel(sys, sys.num_vars, f), shared: (1..sys.num_vars).map(|i| (i, f(i))).collect() }
}

fn permute_constraints(sys: &R1cs, rng: &mut ChaCha8Rng) -> Variant {
    let mut cs = sys.constraints.clone();
    cs.shuffle(rng);
    Variant { system: build(sys, sys.num_vars, cs), shared: identity_shared(sys) }
}

fn sum(sys: &R1cs, items: impl IntoIterator<Item = LinearCombination>) -> LinearCombination {
    let mut s = LinearCombination::new();
    for it in items {
        s.add_scaled(&it, &sys.prime.one());
    }
    s
}

/// Replaces one sum of three or more terms by a tree of fresh partial sums.
fn split_sum(sys: &R1cs, arity: usize, rng: &mut ChaCha8Rng) -> Result<Variant, TransformError> {
    let candidates: Vec<usize> = (0..sys.constraints.len())
        .filter(|&i| linear_lhs(&sys.constraints[i]).is_some_and(|l| l.len() >= 3))
        .collect();
    let &ci = candidates.choose(rng).ok_or(inapplicable(Category::SplitSum, "no linear constraint with three or more terms"))?;
    let lhs = linear_lhs(&sys.constraints[ci]).expect("candidate is linear");
    let mut items: Vec<LinearCombination> =
        lhs.iter().map(|(i, k)| LinearCombination::from_terms([(i, k.clone())])).collect();
    items.shuffle(rng);
    let mut next = sys.num_vars;
    let mut defs = Vec::new();
    while items.len() >= 2 && (defs.len() < 2 || rng.gen_bool(0.5)) {
        // Leave something to combine with so that at least two partial sums appear.
        let spare = usize::from(defs.is_empty() && items.len() > 2);
        let g = arity.min(items.len() - spare).max(2);
        items.shuffle(rng);
        let group: Vec<_> = items.drain(..g).collect();
        defs.push(linear(sys, sum(sys, group), unit(sys, next)));
        let at = rng.gen_range(0..=items.len());
        items.insert(at, unit(sys, next));
        next += 1;
    }
    let mut cs = sys.constraints.clone();
    cs[ci] = linear(sys, sum(sys, items), sys.constraints[ci].c.clone());
    cs.splice(ci..ci, defs);
    Ok(Variant { system: build(sys, next, cs), shared: identity_shared(sys) })
}

/// Pairs of linear constraints whose left sides agree, up to one factor `λ`,
/// on two or more variables: `(i, j, λ, variables)`.
fn common_subsums(sys: &R1cs) -> Vec<(usize, usize, FieldElement, Vec<usize>)> {
    let lins: Vec<(usize, LinearCombination)> =
        sys.constraints.iter().enumerate().filter_map(|(i, c)| Some((i, linear_lhs(c)?))).collect();
    let mut out = Vec::new();
    for (x, (i, li)) in lins.iter().enumerate() {
        for (j, lj) in &lins[x + 1..] {
            let mut classes: BTreeMap<BigUint, (FieldElement, Vec<usize>)> = BTreeMap::new();
            for v in li.variables() {
                if let Some(cj) = lj.get(v) {
                    let lambda = cj.checked_mul(&li.get(v).expect("present").inv().expect("nonzero")).expect("same prime");
                    classes.entry(lambda.residue().clone()).or_insert((lambda, Vec::new())).1.push(v);
                }
            }
            for (lambda, vars) in classes.into_values() {
                if vars.len() >= 2 {
                    out.push((*i, *j, lambda, vars));
                }
            }
        }
    }
    out
}

/// Pulls a common sub-sum of two linear constraints into a fresh variable
/// used by both; with probability 1/2 does it again on the result.
fn share_subsums(sys: &R1cs, rng: &mut ChaCha8Rng) -> Result<Variant, TransformError> {
    let mut cur = sys.clone();
    let mut rounds = 0;
    loop {
        let candidates = common_subsums(&cur);
        let Some((i, j, lambda, mut vars)) = candidates.choose(rng).cloned() else {
            break;
        };
        vars.shuffle(rng);
        vars.truncate(rng.gen_range(2..=vars.len()));
        let t = cur.num_vars;
        let (mut li, mut lj) = (linear_lhs(&cur.constraints[i]).unwrap(), linear_lhs(&cur.constraints[j]).unwrap());
        let mut s = LinearCombination::new();
        for &v in &vars {
            let k = li.remove(v).expect("shared");
            lj.remove(v);
            s.add_term(v, &k);
        }
        li.add_term(t, &cur.prime.one());
        lj.add_term(t, &lambda);
        let mut cs = cur.constraints.clone();
        cs[i] = linear(&cur, li, cur.constraints[i].c.clone());
        cs[j] = linear(&cur, lj, cur.constraints[j].c.clone());
        let at = rng.gen_range(0..=cs.len());
        cs.insert(at, linear(&cur, s, unit(&cur, t)));
        cur = build(&cur, t + 1, cs);
        rounds += 1;
        if rounds == 2 || !rng.gen_bool(0.5) {
            break;
        }
    }
    if rounds == 0 {
        return Err(inapplicable(Category::SharedSubsum, "no two linear constraints share a sub-sum"));
    }
    Ok(Variant { system: cur, shared: identity_shared(sys) })
}

fn occurrences(sys: &R1cs, v: usize) -> Vec<usize> {
    sys.constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| [&c.a, &c.b, &c.c].iter().any(|lc| lc.get(v).is_some()))
        .map(|(i, _)| i)
        .collect()
}

/// Substitutes a variable defined by one linear constraint into the only
/// other (linear) constraint using it, then drops both the definition and
/// the variable.
fn merge_chain(sys: &R1cs, rng: &mut ChaCha8Rng) -> Option<Variant> {
    let mut candidates = Vec::new();
    for (d, c) in sys.constraints.iter().enumerate() {
        let Some(def) = linear_lhs(c) else { continue };
        let mut rhs = c.c.iter();
        let (Some((v, k)), None) = (rhs.next(), rhs.next()) else { continue };
        if v == 0 || def.get(v).is_some() {
            continue;
        }
        let occ = occurrences(sys, v);
        let [x, y] = occ[..] else { continue };
        let e = if x == d { y } else { x };
        let target = &sys.constraints[e];
        if target.c.get(v).is_none() && linear_lhs(target).is_some_and(|l| l.get(v).is_some()) {
            candidates.push((d, e, v, def.scale(&k.inv().expect("nonzero"))));
        }
    }
    let (d, e, v, value) = candidates.choose(rng)?.clone();
    let mut lhs = linear_lhs(&sys.constraints[e]).unwrap();
    let m = lhs.remove(v).expect("used");
    lhs.add_scaled(&value, &m);
    let mut cs = sys.constraints.clone();
    cs[e] = linear(sys, lhs, sys.constraints[e].c.clone());
    cs.remove(d);
    let squeeze = |i: usize| if i > v { i - 1 } else { i };
    let merged = relabel(&build(sys, sys.num_vars, cs), sys.num_vars - 1, squeeze);
    let shared = (1..sys.num_vars).filter(|&i| i != v).map(|i| (i, squeeze(i))).collect();
    Some(Variant { system: merged, shared })
}

/// Moves a sum of two or more terms out into a fresh variable: part of a
/// linear left side, or a whole product operand.
fn split_chain(sys: &R1cs, rng: &mut ChaCha8Rng) -> Option<Variant> {
    #[derive(Clone, Copy)]
    enum Site {
        Linear(usize),
        Operand(usize, bool),
    }
    let mut sites = Vec::new();
    for (i, c) in sys.constraints.iter().enumerate() {
        match linear_lhs(c) {
            Some(l) if l.len() >= 2 => sites.push(Site::Linear(i)),
            Some(_) => {}
            None => {
                if c.a.len() >= 2 {
                    sites.push(Site::Operand(i, false));
                }
                if c.b.len() >= 2 {
                    sites.push(Site::Operand(i, true));
                }
            }
        }
    }
    let site = *sites.choose(rng)?;
    let t = sys.num_vars;
    let mut cs = sys.constraints.clone();
    let (ci, part) = match site {
        Site::Linear(i) => {
            let lhs = linear_lhs(&cs[i]).unwrap();
            let mut terms: Vec<(usize, FieldElement)> = lhs.iter().map(|(j, k)| (j, k.clone())).collect();
            terms.shuffle(rng);
            let taken = rng.gen_range(2..=terms.len());
            let part = LinearCombination::from_terms(terms[..taken].iter().cloned());
            let mut rest = LinearCombination::from_terms(terms[taken..].iter().cloned());
            rest.add_term(t, &sys.prime.one());
            cs[i] = linear(sys, rest, cs[i].c.clone());
            (i, part)
        }
        Site::Operand(i, right) => {
            let side = if right { &mut cs[i].b } else { &mut cs[i].a };
            (i, std::mem::replace(side, unit(sys, t)))
        }
    };
    cs.insert(ci, linear(sys, part, unit(sys, t)));
    Some(Variant { system: build(sys, t + 1, cs), shared: identity_shared(sys) })
}
