//! Fixtures and brute-force helpers shared by unit tests.

use crate::r1cs::{parse_r1cs, R1cs};

pub const VITALIK_JSON: &str = r#"{"prime": "101", "num_vars": 6, "constraints": [
    {"a": {"1": "1"}, "b": {"1": "1"}, "c": {"3": "1"}},
    {"a": {"3": "1"}, "b": {"1": "1"}, "c": {"4": "1"}},
    {"a": {"1": "1", "4": "1"}, "b": {"0": "1"}, "c": {"5": "1"}},
    {"a": {"0": "5", "5": "1"}, "b": {"0": "1"}, "c": {"2": "1"}}
]}"#;

pub fn vitalik() -> R1cs {
    parse_r1cs(VITALIK_JSON.as_bytes()).unwrap()
}

pub fn parse(json: &str) -> R1cs {
    parse_r1cs(json.as_bytes()).unwrap()
}

/// Every assignment over `Z_p` of `num_vars` slots with slot 0 fixed to 1.
pub fn enumerate_assignments(p: u64, num_vars: usize) -> impl Iterator<Item = Vec<u64>> {
    let total = p.pow(num_vars.saturating_sub(1) as u32);
    (0..total).map(move |mut k| {
        let mut x = vec![1u64; num_vars];
        for slot in x.iter_mut().skip(1) {
            *slot = k % p;
            k /= p;
        }
        x
    })
}

pub fn satisfied_u64(sys: &R1cs, x: &[u64]) -> bool {
    let p = sys.prime.to_u64().unwrap();
    let dot = |lc: &crate::r1cs::LinearCombination| {
        lc.iter().fold(0u64, |acc, (i, c)| (acc + u64::try_from(c.residue()).unwrap() * x[i]) % p)
    };
    sys.constraints.iter().all(|c| dot(&c.a) * dot(&c.b) % p == dot(&c.c))
}
