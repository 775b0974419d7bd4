//! Prime-field arithmetic over arbitrary-precision residues.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

/// Scalar field modulus of BN254, the curve used by circom toolchains.
pub const BN254_SCALAR: &str =
    "21888242871839275222246405745257275088548364400416034343698204186575808495617";

/// Primes above this many bits are rejected at construction.
pub const MAX_PRIME_BITS: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("field elements belong to different primes")]
    ModulusMismatch,
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid prime {0}: {1}")]
    InvalidPrime(String, &'static str),
    #[error("not a decimal integer: {0:?}")]
    InvalidInteger(String),
}

/// An odd prime modulus. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(Arc<BigUint>);

impl Prime {
    pub fn new(value: BigUint) -> Result<Self, FieldError> {
        if value.bits() > MAX_PRIME_BITS {
            return Err(FieldError::InvalidPrime(value.to_string(), "too large"));
        }
        if value <= BigUint::from(2u32) {
            return Err(FieldError::InvalidPrime(value.to_string(), "must exceed 2"));
        }
        if !is_probable_prime(&value) {
            return Err(FieldError::InvalidPrime(value.to_string(), "not prime"));
        }
        Ok(Prime(Arc::new(value)))
    }

    pub fn from_u64(value: u64) -> Result<Self, FieldError> {
        Self::new(BigUint::from(value))
    }

    pub fn bn254() -> Self {
        // The primality check is not cheap at 254 bits; do it once.
        static BN254: OnceLock<Prime> = OnceLock::new();
        BN254.get_or_init(|| Self::from_str(BN254_SCALAR).expect("BN254 modulus is prime")).clone()
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// The modulus as a `u64`, if it fits.
    pub fn to_u64(&self) -> Option<u64> {
        u64::try_from(self.value()).ok()
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { residue: BigUint::zero(), prime: self.clone() }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement { residue: BigUint::one(), prime: self.clone() }
    }

    pub fn elem(&self, value: u64) -> FieldElement {
        self.reduce(BigUint::from(value))
    }

    pub fn reduce(&self, value: BigUint) -> FieldElement {
        FieldElement { residue: value % self.value(), prime: self.clone() }
    }

    pub fn reduce_signed(&self, value: &BigInt) -> FieldElement {
        let p = BigInt::from_biguint(Sign::Plus, self.value().clone());
        let r = value.mod_floor(&p);
        FieldElement { residue: r.to_biguint().expect("mod_floor is non-negative"), prime: self.clone() }
    }

    /// Parses an optionally negative decimal integer and reduces it.
    pub fn parse_elem(&self, text: &str) -> Result<FieldElement, FieldError> {
        let t = text.trim();
        let digits = t.strip_prefix('-').unwrap_or(t);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(FieldError::InvalidInteger(text.to_string()));
        }
        let v: BigInt = t.parse().map_err(|_| FieldError::InvalidInteger(text.to_string()))?;
        Ok(self.reduce_signed(&v))
    }
}

impl FromStr for Prime {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
            return Err(FieldError::InvalidInteger(s.to_string()));
        }
        let v: BigUint = t.parse().map_err(|_| FieldError::InvalidInteger(s.to_string()))?;
        Prime::new(v)
    }
}

impl fmt::Debug for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Prime({})", self.0)
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// An element of the prime field, always held in `[0, p)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldElement {
    residue: BigUint,
    prime: Prime,
}

impl FieldElement {
    pub fn residue(&self) -> &BigUint {
        &self.residue
    }

    pub fn prime(&self) -> &Prime {
        &self.prime
    }

    pub fn is_zero(&self) -> bool {
        self.residue.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.residue.is_one()
    }

    fn check(&self, other: &Self) -> Result<(), FieldError> {
        if self.prime == other.prime {
            Ok(())
        } else {
            Err(FieldError::ModulusMismatch)
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        Ok(self.prime.reduce(&self.residue + &other.residue))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        Ok(self.prime.reduce(&self.residue * &other.residue))
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            self.clone()
        } else {
            FieldElement { residue: self.prime.value() - &self.residue, prime: self.prime.clone() }
        }
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(&self) -> Result<Self, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let p = self.prime.value();
        let e = p - BigUint::from(2u32);
        Ok(FieldElement { residue: self.residue.modpow(&e, p), prime: self.prime.clone() })
    }

    /// The representative `s` with `s ≡ residue (mod p)` and `-p/2 < s <= p/2`.
    pub fn signed(&self) -> BigInt {
        let p = self.prime.value();
        let r = BigInt::from_biguint(Sign::Plus, self.residue.clone());
        if &self.residue * 2u32 > *p {
            r - BigInt::from_biguint(Sign::Plus, p.clone())
        } else {
            r
        }
    }

    // Same-prime arithmetic used internally once operands are known to agree.
    pub(crate) fn add(&self, other: &Self) -> Self {
        debug_assert!(self.prime == other.prime);
        self.prime.reduce(&self.residue + &other.residue)
    }

    pub(crate) fn mul(&self, other: &Self) -> Self {
        debug_assert!(self.prime == other.prime);
        self.prime.reduce(&self.residue * &other.residue)
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.residue)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.residue.fmt(f)
    }
}

const SMALL_PRIMES: [u32; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

/// Miller–Rabin. The first twelve prime bases are a proof below 2^64; above
/// that all forty bases are used.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &sp in &SMALL_PRIMES {
        let sp = BigUint::from(sp);
        if *n == sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let n_minus_one = n - &one;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    let bases = if n.bits() <= 64 { &SMALL_PRIMES[..12] } else { &SMALL_PRIMES[..] };
    'witness: for &a in bases {
        let mut x = BigUint::from(a).modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
