//! Brute-force solution-set comparison for small primes.
//!
//! Two systems are equivalent when the projections of their solution sets
//! onto the shared variables coincide. Solutions are enumerated by
//! backtracking on the most constrained variable: after every assignment, a
//! constraint with a single unknown that enters linearly is solved outright
//! instead of enumerated.

use std::collections::BTreeSet;

use num_traits::ToPrimitive;
use r1cs_paradigm::{LinearCombination, R1cs};
use thiserror::Error;

/// Search nodes either side may visit before giving up.
pub const BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("enumeration exceeds the budget of {0} search nodes")]
    OracleBudgetExceeded(u64),
    #[error("prime {0} is too large for enumeration")]
    PrimeTooLarge(String),
    #[error("systems use different primes")]
    PrimeMismatch,
    #[error("correspondence names variable {0}, which does not exist")]
    BadCorrespondence(usize),
}

type Sparse = Vec<(usize, u64)>;

struct Small {
    p: u64,
    rows: Vec<[Sparse; 3]>,
    num_vars: usize,
}

impl Small {
    fn new(sys: &R1cs) -> Result<Self, OracleError> {
        let p = sys
            .prime
            .to_u64()
            .filter(|&p| p <= 1 << 20)
            .ok_or_else(|| OracleError::PrimeTooLarge(sys.prime.to_string()))?;
        let conv = |lc: &LinearCombination| -> Sparse {
            lc.iter().map(|(i, c)| (i, c.residue().to_u64().expect("reduced below p"))).collect()
        };
        let rows = sys.constraints.iter().map(|c| [conv(&c.a), conv(&c.b), conv(&c.c)]).collect();
        Ok(Small { p, rows, num_vars: sys.num_vars })
    }

    fn inv(&self, x: u64) -> u64 {
        let (mut r, mut b, mut e) = (1u64, x % self.p, self.p - 2);
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % self.p;
            }
            b = b * b % self.p;
            e >>= 1;
        }
        r
    }

    /// `(constant, coefficient of x)` of `lc` with `x` the only unknown.
    fn affine(&self, lc: &Sparse, vals: &[Option<u64>], x: usize) -> (u64, u64) {
        let (mut k, mut m) = (0, 0);
        for &(i, c) in lc {
            if i == x {
                m = (m + c) % self.p;
            } else {
                k = (k + c * vals[i].expect("assigned")) % self.p;
            }
        }
        (k, m)
    }

    fn unknowns(&self, row: &[Sparse; 3], vals: &[Option<u64>]) -> (usize, Option<usize>) {
        let mut count = 0;
        let mut last = None;
        let mut seen = Vec::new();
        for lc in row {
            for &(i, _) in lc {
                if vals[i].is_none() && !seen.contains(&i) {
                    seen.push(i);
                    count += 1;
                    last = Some(i);
                }
            }
        }
        (count, last)
    }

    /// Assigns forced values until nothing changes. `false` on a violated row.
    fn propagate(&self, vals: &mut [Option<u64>]) -> bool {
        let p = self.p;
        loop {
            let mut progress = false;
            for row in &self.rows {
                let (n, x) = self.unknowns(row, vals);
                match (n, x) {
                    (0, _) => {
                        let ev = |lc: &Sparse| self.affine(lc, vals, usize::MAX).0;
                        if ev(&row[0]) * ev(&row[1]) % p != ev(&row[2]) {
                            return false;
                        }
                    }
                    (1, Some(x)) => {
                        let (a0, a1) = self.affine(&row[0], vals, x);
                        let (b0, b1) = self.affine(&row[1], vals, x);
                        let (c0, c1) = self.affine(&row[2], vals, x);
                        // (a0 + a1 x)(b0 + b1 x) - (c0 + c1 x) = q2 x² + q1 x + q0
                        let q2 = a1 * b1 % p;
                        let q1 = (a0 * b1 + a1 * b0 + p - c1) % p;
                        let q0 = (a0 * b0 + p - c0) % p;
                        if q2 == 0 {
                            if q1 != 0 {
                                vals[x] = Some((p - q0) % p * self.inv(q1) % p);
                                progress = true;
                            } else if q0 != 0 {
                                return false;
                            }
                        }
                    }
                    _ => {}
                }
            }
            if !progress {
                return true;
            }
        }
    }

    /// The unassigned variable in the most rows that are still open, so that
    /// inputs get fixed first and everything downstream propagates.
    fn branch_variable(&self, vals: &[Option<u64>]) -> Option<usize> {
        let mut count = vec![0usize; vals.len()];
        for row in &self.rows {
            let mut open: Vec<usize> = row.iter().flatten().map(|&(i, _)| i).filter(|&i| vals[i].is_none()).collect();
            open.sort_unstable();
            open.dedup();
            for i in open {
                count[i] += 1;
            }
        }
        (0..vals.len()).filter(|&i| vals[i].is_none()).max_by_key(|&i| (count[i], std::cmp::Reverse(i)))
    }

    fn solutions(&self, keep: &[usize], limit: u64) -> Result<BTreeSet<Vec<u64>>, OracleError> {
        let mut budget = (limit, limit);
        let mut vals = vec![None; self.num_vars];
        vals[0] = Some(1);
        let mut out = BTreeSet::new();
        self.search(vals, keep, &mut budget, &mut out)?;
        Ok(out)
    }

    fn search(
        &self,
        mut vals: Vec<Option<u64>>,
        keep: &[usize],
        budget: &mut (u64, u64),
        out: &mut BTreeSet<Vec<u64>>,
    ) -> Result<(), OracleError> {
        if budget.0 == 0 {
            return Err(OracleError::OracleBudgetExceeded(budget.1));
        }
        budget.0 -= 1;
        if !self.propagate(&mut vals) {
            return Ok(());
        }
        match self.branch_variable(&vals) {
            None => {
                out.insert(keep.iter().map(|&i| vals[i].expect("complete")).collect());
            }
            Some(x) => {
                for v in 0..self.p {
                    let mut next = vals.clone();
                    next[x] = Some(v);
                    self.search(next, keep, budget, out)?;
                }
            }
        }
        Ok(())
    }
}

/// True iff both systems have the same solutions once projected onto the
/// shared variables, given as `(index in s1, index in s2)` pairs.
pub fn solution_set_equivalent(s1: &R1cs, s2: &R1cs, shared: &[(usize, usize)]) -> Result<bool, OracleError> {
    equivalent_within(s1, s2, shared, BUDGET)
}

pub fn equivalent_within(s1: &R1cs, s2: &R1cs, shared: &[(usize, usize)], budget: u64) -> Result<bool, OracleError> {
    if s1.prime != s2.prime {
        return Err(OracleError::PrimeMismatch);
    }
    for &(i, j) in shared {
        if i >= s1.num_vars {
            return Err(OracleError::BadCorrespondence(i));
        }
        if j >= s2.num_vars {
            return Err(OracleError::BadCorrespondence(j));
        }
    }
    let (k1, k2): (Vec<usize>, Vec<usize>) = shared.iter().copied().unzip();
    let a = Small::new(s1)?.solutions(&k1, budget)?;
    let b = Small::new(s2)?.solutions(&k2, budget)?;
    Ok(a == b)
}

/// Every full solution of `sys`, for tests over tiny fields.
pub fn all_solutions(sys: &R1cs) -> Result<BTreeSet<Vec<u64>>, OracleError> {
    let keep: Vec<usize> = (0..sys.num_vars).collect();
    Small::new(sys)?.solutions(&keep, BUDGET)
}
