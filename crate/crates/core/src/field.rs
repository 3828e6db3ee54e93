//! Prime field arithmetic, prime generation and the small natural-number
//! type used by the residue (CRT) hash.
//!
//! Field moduli are limited to 64 bits; products go through `u128`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{domain, format_err, usage, Result};

/// Witnesses making Miller-Rabin deterministic for every 64-bit input.
const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Mersenne prime used for large runs.
pub const DEFAULT_MODULUS: u64 = (1 << 31) - 1;

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic primality test for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_WITNESSES {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &MR_WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `>= n`.
pub fn next_prime(n: u64) -> Result<u64> {
    let mut c = n.max(2);
    loop {
        if is_prime(c) {
            return Ok(c);
        }
        c = c
            .checked_add(1)
            .ok_or_else(|| usage("no 64-bit prime at or above the requested bound"))?;
    }
}

/// The first `count` primes in increasing order.
pub fn gen_primes(count: usize) -> Result<Vec<u64>> {
    if count == 0 {
        return Err(usage("gen_primes needs a positive count"));
    }
    let mut primes = Vec::with_capacity(count);
    primes.push(2);
    let mut c = 3u64;
    while primes.len() < count {
        if is_prime(c) {
            primes.push(c);
        }
        c += 2;
    }
    Ok(primes)
}

/// `⌈log₂ q⌉` for `q >= 2`.
pub fn ceil_log2(q: u64) -> u32 {
    debug_assert!(q >= 2);
    64 - (q - 1).leading_zeros()
}

/// `⌊log₂ q⌋` for `q >= 1`.
pub fn floor_log2(q: u64) -> u32 {
    63 - q.leading_zeros()
}

/// Byte width of a serialized element of an alphabet of size `q`.
pub fn byte_width(q: u64) -> usize {
    (ceil_log2(q) as usize).div_ceil(8)
}

/// The prime field `F_q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    modulus: u64,
}

impl PrimeField {
    pub fn new(modulus: u64) -> Result<Self> {
        if !is_prime(modulus) {
            return Err(usage(format!("{modulus} is not prime")));
        }
        Ok(PrimeField { modulus })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Reduces `value` into the field.
    pub fn element(&self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.modulus,
            modulus: self.modulus,
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.element(0)
    }

    pub fn one(&self) -> FieldElement {
        self.element(1)
    }

    /// Bytes per serialized element.
    pub fn byte_width(&self) -> usize {
        byte_width(self.modulus)
    }

    /// Bits of input data packed into one symbol.
    pub fn symbol_bits(&self) -> u32 {
        floor_log2(self.modulus)
    }

    /// Iterates over all elements in canonical order `0, 1, …, q−1`.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.modulus).map(move |v| self.element(v))
    }

    /// Reads a little-endian element of [`Self::byte_width`] bytes.
    pub fn decode(&self, bytes: &[u8]) -> Result<FieldElement> {
        if bytes.len() != self.byte_width() {
            return Err(format_err(format!(
                "field element needs {} bytes, got {}",
                self.byte_width(),
                bytes.len()
            )));
        }
        let mut buf = [0u8; 8];
        buf[..bytes.len()].copy_from_slice(bytes);
        let value = u64::from_le_bytes(buf);
        if value >= self.modulus {
            return Err(format_err(format!(
                "value {value} is not reduced mod {}",
                self.modulus
            )));
        }
        Ok(self.element(value))
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.modulus)
    }
}

/// An element of some [`PrimeField`]; `value < modulus` always holds.
///
/// The arithmetic operators panic when the operands live in different
/// fields. Use the `try_*` methods where that can happen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    modulus: u64,
}

impl FieldElement {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn field(&self) -> PrimeField {
        PrimeField {
            modulus: self.modulus,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same_field(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(usage(format!(
                "mixed fields GF({}) and GF({})",
                self.modulus, other.modulus
            )));
        }
        Ok(())
    }

    pub fn try_add(self, rhs: Self) -> Result<Self> {
        self.same_field(&rhs)?;
        let (s, carry) = self.value.overflowing_add(rhs.value);
        let value = if carry || s >= self.modulus {
            s.wrapping_sub(self.modulus)
        } else {
            s
        };
        Ok(FieldElement { value, ..self })
    }

    pub fn try_sub(self, rhs: Self) -> Result<Self> {
        self.same_field(&rhs)?;
        let value = if self.value >= rhs.value {
            self.value - rhs.value
        } else {
            self.modulus - (rhs.value - self.value)
        };
        Ok(FieldElement { value, ..self })
    }

    pub fn try_mul(self, rhs: Self) -> Result<Self> {
        self.same_field(&rhs)?;
        Ok(FieldElement {
            value: mul_mod(self.value, rhs.value, self.modulus),
            ..self
        })
    }

    pub fn pow(self, exp: u64) -> Self {
        FieldElement {
            value: pow_mod(self.value, exp, self.modulus),
            ..self
        }
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(self) -> Result<Self> {
        if self.value == 0 {
            return Err(domain("no inverse of zero"));
        }
        Ok(self.pow(self.modulus - 2))
    }

    /// Little-endian encoding padded to the field's byte width.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.value.to_le_bytes()[..byte_width(self.modulus)].to_vec()
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: Self) -> Self {
        self.try_add(rhs).expect("field mismatch")
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: Self) -> Self {
        self.try_sub(rhs).expect("field mismatch")
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: Self) -> Self {
        self.try_mul(rhs).expect("field mismatch")
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> Self {
        self.field().zero() - self
    }
}

/// Arbitrary-precision natural number, little-endian `u32` limbs with no
/// high zero limbs (zero is the empty vector).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BigNat {
    limbs: Vec<u32>,
}

impl BigNat {
    pub fn zero() -> Self {
        BigNat { limbs: Vec::new() }
    }

    pub fn from_u64(v: u64) -> Self {
        let mut n = BigNat {
            limbs: vec![v as u32, (v >> 32) as u32],
        };
        n.normalize();
        n
    }

    fn normalize(&mut self) {
        while self.limbs.last() == Some(&0) {
            self.limbs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.is_empty()
    }

    /// Interprets `bytes` as a big-endian base-256 integer.
    pub fn from_bytes_be(bytes: &[u8]) -> Self {
        let mut limbs = Vec::with_capacity(bytes.len() / 4 + 1);
        for chunk in bytes.rchunks(4) {
            let mut limb = 0u32;
            for &b in chunk {
                limb = (limb << 8) | b as u32;
            }
            limbs.push(limb);
        }
        let mut n = BigNat { limbs };
        n.normalize();
        n
    }

    /// Minimal big-endian bytes (empty for zero).
    pub fn to_bytes_be(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self
            .limbs
            .iter()
            .rev()
            .flat_map(|l| l.to_be_bytes())
            .collect();
        let lead = out.iter().take_while(|&&b| b == 0).count();
        out.drain(..lead);
        out
    }

    /// Big-endian bytes left-padded with zeros to `len`.
    pub fn to_bytes_be_padded(&self, len: usize) -> Result<Vec<u8>> {
        let raw = self.to_bytes_be();
        if raw.len() > len {
            return Err(usage(format!("{} bytes do not fit in {len}", raw.len())));
        }
        let mut out = vec![0u8; len - raw.len()];
        out.extend_from_slice(&raw);
        Ok(out)
    }

    pub fn bit_len(&self) -> u64 {
        match self.limbs.last() {
            None => 0,
            Some(top) => (self.limbs.len() as u64 - 1) * 32 + (32 - top.leading_zeros() as u64),
        }
    }

    pub fn mul_small(&self, m: u64) -> Self {
        self.mul(&BigNat::from_u64(m))
    }

    /// Schoolbook product.
    pub fn mul(&self, other: &BigNat) -> Self {
        if self.is_zero() || other.is_zero() {
            return BigNat::zero();
        }
        let mut out = vec![0u32; self.limbs.len() + other.limbs.len()];
        for (i, &a) in self.limbs.iter().enumerate() {
            let mut carry = 0u64;
            for (j, &b) in other.limbs.iter().enumerate() {
                let t = out[i + j] as u64 + a as u64 * b as u64 + carry;
                out[i + j] = t as u32;
                carry = t >> 32;
            }
            let mut k = i + other.limbs.len();
            while carry > 0 {
                let t = out[k] as u64 + carry;
                out[k] = t as u32;
                carry = t >> 32;
                k += 1;
            }
        }
        let mut n = BigNat { limbs: out };
        n.normalize();
        n
    }

    /// `self mod m` for a nonzero 64-bit modulus, folding limbs from the top.
    pub fn rem_u64(&self, m: u64) -> u64 {
        assert!(m != 0, "modulus must be nonzero");
        let m = m as u128;
        self.limbs
            .iter()
            .rev()
            .fold(0u128, |acc, &l| ((acc << 32) | l as u128) % m) as u64
    }

    /// `log₂` of the value. Above 53 bits the top 53 bits are taken
    /// (truncating) and the shift is added back exactly.
    pub fn log2(&self) -> f64 {
        let bits = self.bit_len();
        if bits == 0 {
            return f64::NEG_INFINITY;
        }
        if bits <= 64 {
            let v = self
                .limbs
                .iter()
                .rev()
                .fold(0u64, |acc, &l| (acc << 32) | l as u64);
            if bits <= 53 {
                return (v as f64).log2();
            }
            return ((v >> (bits - 53)) as f64).log2() + (bits - 53) as f64;
        }
        let shift = bits - 53;
        let mut top = 0u64;
        for bit in (shift..bits).rev() {
            let limb = self.limbs[(bit / 32) as usize];
            top = (top << 1) | ((limb >> (bit % 32)) & 1) as u64;
        }
        (top as f64).log2() + shift as f64
    }
}

impl Ord for BigNat {
    fn cmp(&self, other: &Self) -> Ordering {
        self.limbs
            .len()
            .cmp(&other.limbs.len())
            .then_with(|| self.limbs.iter().rev().cmp(other.limbs.iter().rev()))
    }
}

impl PartialOrd for BigNat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BigNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        // repeated division by 10^9
        let mut limbs = self.limbs.clone();
        let mut chunks = Vec::new();
        while !limbs.is_empty() {
            let mut rem = 0u64;
            for l in limbs.iter_mut().rev() {
                let cur = (rem << 32) | *l as u64;
                *l = (cur / 1_000_000_000) as u32;
                rem = cur % 1_000_000_000;
            }
            while limbs.last() == Some(&0) {
                limbs.pop();
            }
            chunks.push(rem);
        }
        write!(f, "{}", chunks.pop().unwrap())?;
        for c in chunks.iter().rev() {
            write!(f, "{c:09}")?;
        }
        Ok(())
    }
}

/// `x mod p` as an element of `GF(p)`.
pub fn bignat_mod(x: &BigNat, field: PrimeField) -> FieldElement {
    field.element(x.rem_u64(field.modulus()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use proptest::prelude::*;
    use rand_chacha::rand_core::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gf(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    fn sieve(limit: usize) -> Vec<u64> {
        let mut composite = vec![false; limit + 1];
        let mut out = Vec::new();
        for i in 2..=limit {
            if !composite[i] {
                out.push(i as u64);
                let mut j = i * i;
                while j <= limit {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        out
    }

    #[test]
    fn small_arithmetic() {
        let f = gf(7);
        let a = f.element(3);
        assert_eq!(f.zero() + a, a);
        assert_eq!(f.element(3) * f.element(5), f.one());
        assert_eq!(a - a, f.zero());
        assert_eq!(f.element(3).inv().unwrap(), f.element(5));
        assert_eq!(f.one().inv().unwrap(), f.one());
        assert!(matches!(f.zero().inv(), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn mismatched_fields_are_usage_errors() {
        let a = gf(7).one();
        let b = gf(11).one();
        assert!(matches!(a.try_add(b), Err(crate::Error::Usage(_))));
        assert!(matches!(a.try_mul(b), Err(crate::Error::Usage(_))));
    }

    #[test]
    fn composite_modulus_rejected() {
        assert!(PrimeField::new(15).is_err());
        assert!(PrimeField::new(1).is_err());
        assert!(PrimeField::new(DEFAULT_MODULUS).is_ok());
        assert!(PrimeField::new(18446744073709551557).is_ok());
    }

    #[test]
    fn inverse_is_bijection_exhaustive() {
        for q in [2u64, 3, 7, 17, 257, 16381] {
            let f = gf(q);
            let mut seen = vec![false; q as usize];
            for a in 1..q {
                let inv = f.element(a).inv().unwrap();
                assert_eq!(f.element(a) * inv, f.one());
                assert!(!seen[inv.value() as usize]);
                seen[inv.value() as usize] = true;
            }
        }
    }

    #[test]
    fn random_inverses_gf257() {
        let f = gf(257);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let a = f.element(1 + rng.next_u64() % 256);
            assert_eq!(a * a.inv().unwrap(), f.one());
        }
    }

    #[test]
    fn field_axioms_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for q in [7u64, 257, DEFAULT_MODULUS, 18446744073709551557] {
            let f = gf(q);
            for _ in 0..10_000 {
                let a = f.element(rng.next_u64());
                let b = f.element(rng.next_u64());
                let c = f.element(rng.next_u64());
                assert_eq!((a + b) + c, a + (b + c));
                assert_eq!((a * b) * c, a * (b * c));
                assert_eq!(a + b, b + a);
                assert_eq!(a * b, b * a);
                assert_eq!(a * (b + c), a * b + a * c);
                assert_eq!(a - b + b, a);
            }
        }
    }

    #[test]
    fn primes_match_sieve() {
        assert_eq!(gen_primes(1).unwrap(), vec![2]);
        assert_eq!(gen_primes(5).unwrap(), vec![2, 3, 5, 7, 11]);
        assert_eq!(*gen_primes(25).unwrap().last().unwrap(), 97);
        assert!(gen_primes(0).is_err());
        let reference = sieve(110_000);
        let ours = gen_primes(10_000).unwrap();
        assert_eq!(ours[..], reference[..10_000]);
        for n in 2..=10_000usize {
            let bound = 2.0 * n as f64 * (n as f64).log2();
            assert!((ours[n - 1] as f64) <= bound, "p_{n} exceeds 2n log n");
        }
    }

    #[test]
    fn next_prime_examples() {
        assert_eq!(next_prime(16).unwrap(), 17);
        assert_eq!(next_prime(17).unwrap(), 17);
        assert_eq!(next_prime(0).unwrap(), 2);
        assert_eq!(next_prime(1024).unwrap(), 1031);
    }

    #[test]
    fn widths() {
        assert_eq!(gf(2).byte_width(), 1);
        assert_eq!(gf(257).byte_width(), 2);
        assert_eq!(gf(DEFAULT_MODULUS).byte_width(), 4);
        assert_eq!(gf(DEFAULT_MODULUS).symbol_bits(), 30);
        assert_eq!(gf(17).symbol_bits(), 4);
    }

    #[test]
    fn bignat_mod_examples() {
        let x = BigNat::from_u64(10);
        assert_eq!(bignat_mod(&x, gf(3)).value(), 1);
        assert_eq!(bignat_mod(&BigNat::zero(), gf(13)).value(), 0);
        assert_eq!(bignat_mod(&BigNat::from_u64(13), gf(13)).value(), 0);
    }

    #[test]
    fn bignat_display_and_ordering() {
        let big = BigNat::from_bytes_be(&[1, 0, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(big.to_string(), "18446744073709551616");
        assert!(big > BigNat::from_u64(u64::MAX));
        assert_eq!(BigNat::from_bytes_be(&[0, 0, 5]), BigNat::from_u64(5));
        assert_eq!(BigNat::zero().to_string(), "0");
    }

    proptest! {
        #[test]
        fn rem_matches_horner_fold(bytes in proptest::collection::vec(any::<u8>(), 64), p in 2u64..1_000_000) {
            let p = next_prime(p).unwrap();
            let x = BigNat::from_bytes_be(&bytes);
            let horner = bytes.iter().fold(0u64, |acc, &b| ((acc as u128 * 256 + b as u128) % p as u128) as u64);
            prop_assert_eq!(x.rem_u64(p), horner);
        }

        #[test]
        fn bytes_and_products_match_reference(a in proptest::collection::vec(any::<u8>(), 0..48), b in proptest::collection::vec(any::<u8>(), 0..48)) {
            let (x, y) = (BigNat::from_bytes_be(&a), BigNat::from_bytes_be(&b));
            let (rx, ry) = (BigUint::from_bytes_be(&a), BigUint::from_bytes_be(&b));
            prop_assert_eq!(x.mul(&y).to_bytes_be(), {
                let v = (&rx * &ry).to_bytes_be();
                if v == [0] { Vec::new() } else { v }
            });
            prop_assert_eq!(x.cmp(&y), rx.cmp(&ry));
            prop_assert_eq!(x.bit_len(), rx.bits());
            prop_assert_eq!(x.to_string(), rx.to_string());
        }

        #[test]
        fn element_bytes_round_trip(v in any::<u64>()) {
            let f = gf(DEFAULT_MODULUS);
            let e = f.element(v);
            prop_assert_eq!(f.decode(&e.to_bytes()).unwrap(), e);
        }
    }
}
