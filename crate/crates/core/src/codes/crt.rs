//! Residue (Karp-Rabin) hash: `H(x)_β = x mod p_β` over the first `n`
//! primes, for messages `0 <= x < p_1 ⋯ p_k`.

use crate::error::{domain, usage, Result};
use crate::field::{bignat_mod, gen_primes, BigNat, FieldElement, PrimeField};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrtCode {
    k: usize,
    primes: Vec<u64>,
    bound: BigNat,
}

impl CrtCode {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(usage(format!("need 1 <= k <= n, got k={k} n={n}")));
        }
        Ok(Self::new_unchecked(k, gen_primes(n)?))
    }

    pub(crate) fn new_unchecked(k: usize, primes: Vec<u64>) -> Self {
        let bound = primes[..k]
            .iter()
            .fold(BigNat::from_u64(1), |acc, &p| acc.mul_small(p));
        CrtCode { k, primes, bound }
    }

    pub fn dimension(&self) -> usize {
        self.k
    }

    pub fn block_len(&self) -> usize {
        self.primes.len()
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// `p_1 ⋯ p_k`, the exclusive upper bound on messages.
    pub fn message_bound(&self) -> &BigNat {
        &self.bound
    }

    pub fn check_message(&self, x: &BigNat) -> Result<()> {
        if x >= &self.bound {
            return Err(domain(format!(
                "message {x} is not below the product of the first {} primes",
                self.k
            )));
        }
        Ok(())
    }

    pub fn codeword(&self, x: &BigNat) -> Result<Vec<FieldElement>> {
        self.check_message(x)?;
        Ok(self
            .primes
            .iter()
            .map(|&p| bignat_mod(x, PrimeField::new(p).expect("generated prime")))
            .collect())
    }
}

/// `x mod p_β` as an element of `GF(p_β)`.
pub fn crt_hash(code: &CrtCode, x: &BigNat, beta_index: usize) -> Result<FieldElement> {
    code.check_message(x)?;
    let p = *code.primes.get(beta_index).ok_or_else(|| {
        usage(format!(
            "challenge index {beta_index} >= n = {}",
            code.block_len()
        ))
    })?;
    Ok(bignat_mod(x, PrimeField::new(p)?))
}

/// Smallest `k` with `p_1 ⋯ p_k >= 256^len`, so that every `len`-byte
/// big-endian integer is a valid message.
pub fn crt_dimension_for_bytes(len: usize) -> usize {
    let mut limit = vec![0u8; len + 1];
    limit[0] = 1;
    let limit = BigNat::from_bytes_be(&limit);
    let mut product = BigNat::from_u64(1);
    let mut k = 0;
    let mut candidate = 2u64;
    while product < limit {
        if crate::field::is_prime(candidate) {
            product = product.mul_small(candidate);
            k += 1;
        }
        candidate += 1;
    }
    k.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use rand_chacha::rand_core::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn residues_of_five() {
        let code = CrtCode::new(2, 6).unwrap();
        let x = BigNat::from_u64(5);
        let got: Vec<u64> = code
            .codeword(&x)
            .unwrap()
            .iter()
            .map(|e| e.value())
            .collect();
        assert_eq!(got, vec![1, 2, 0, 5, 5, 5]);
        assert!(code.check_message(&BigNat::from_u64(6)).is_err());
    }

    #[test]
    fn hash_examples() {
        let code = CrtCode::new(3, 3).unwrap();
        assert_eq!(
            crt_hash(&code, &BigNat::from_u64(10), 1).unwrap().value(),
            1
        );
        assert_eq!(
            crt_hash(&code, &BigNat::from_u64(10), 1)
                .unwrap()
                .field()
                .modulus(),
            3
        );
        for b in 0..3 {
            assert!(crt_hash(&code, &BigNat::zero(), b).unwrap().is_zero());
        }
        assert!(crt_hash(&code, &BigNat::zero(), 3).is_err());
        assert!(matches!(
            crt_hash(&code, &BigNat::from_u64(30), 0),
            Err(crate::Error::Domain(_))
        ));
    }

    #[test]
    fn agreement_at_most_k_minus_one() {
        // k = 2, n = 5: messages below 6, codewords over (2,3,5,7,11)
        let code = CrtCode::new(2, 5).unwrap();
        let words: Vec<_> = (0..6)
            .map(|x| code.codeword(&BigNat::from_u64(x)).unwrap())
            .collect();
        for i in 0..6 {
            for j in i + 1..6 {
                let agree = words[i]
                    .iter()
                    .zip(&words[j])
                    .filter(|(a, b)| a == b)
                    .count();
                assert!(agree <= 1, "{i} and {j} agree on {agree} residues");
            }
        }
    }

    #[test]
    fn dimension_for_bytes() {
        // 2·3·5·7 = 210 < 256 <= 2310
        assert_eq!(crt_dimension_for_bytes(1), 5);
        assert_eq!(crt_dimension_for_bytes(0), 1);
        let k = crt_dimension_for_bytes(32);
        let code = CrtCode::new(k, k).unwrap();
        assert!(code.message_bound().bit_len() > 256);
        let smaller = CrtCode::new(k - 1, k - 1).unwrap();
        assert!(smaller.message_bound().bit_len() <= 256);
    }

    #[test]
    fn matches_reference_bignum() {
        let k = crt_dimension_for_bytes(32);
        let code = CrtCode::new(k, k + 20).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let mut bytes = [0u8; 32];
            rng.fill_bytes(&mut bytes);
            let x = BigNat::from_bytes_be(&bytes);
            let reference = BigUint::from_bytes_be(&bytes);
            for (b, &p) in code.primes().iter().enumerate() {
                let want = (&reference % p)
                    .to_u64_digits()
                    .first()
                    .copied()
                    .unwrap_or(0);
                assert_eq!(crt_hash(&code, &x, b).unwrap().value(), want);
            }
        }
    }
}
