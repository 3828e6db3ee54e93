//! Error-and-erasure decoding for the short systematic RS code that
//! protects the per-server hash vector.
//!
//! The code has message length `m`, block length `ell`, evaluation points
//! `0, 1, …, ell−1`. With `e` erasures it corrects `r` errors whenever
//! `2r + e <= ell − m`.
//!
//! Decoding is an exhaustive search over candidate error sets of
//! increasing size `r <= ⌊(ell − m − e)/2⌋`: drop the candidate positions,
//! interpolate through `m` of the survivors and check the rest. That is
//! cheap for the block lengths the parity protocol uses (a handful of
//! servers plus `2r + e` parity symbols). A syndrome-based decoder
//! (Berlekamp-Massey with an erasure locator) runs in `O(ell²)` and would
//! replace this for large server counts.

use crate::codes::rs::interpolate_at;
use crate::error::{usage, Error, Result};
use crate::field::FieldElement;

/// Cap on candidate error sets examined in one decode.
const SEARCH_LIMIT: u128 = 1 << 24;

/// A possibly damaged codeword; `None` marks an erasure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceivedWord {
    positions: Vec<Option<FieldElement>>,
    m: usize,
}

impl ReceivedWord {
    pub fn new(positions: Vec<Option<FieldElement>>, m: usize) -> Result<Self> {
        if m == 0 || m > positions.len() {
            return Err(usage(format!(
                "message length {m} must be in 1..={}",
                positions.len()
            )));
        }
        let mut fields = positions.iter().flatten().map(|e| e.field());
        if let Some(f) = fields.next() {
            if fields.any(|g| g != f) {
                return Err(usage("received symbols span several fields"));
            }
            if positions.len() as u64 > f.modulus() {
                return Err(usage(
                    "block length exceeds the number of evaluation points",
                ));
            }
        }
        Ok(ReceivedWord { positions, m })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn message_len(&self) -> usize {
        self.m
    }

    pub fn positions(&self) -> &[Option<FieldElement>] {
        &self.positions
    }

    /// Indices of erased positions, ascending.
    pub fn erasures(&self) -> Vec<usize> {
        self.positions
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.is_none().then_some(i))
            .collect()
    }
}

/// Successful decode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    /// The `m` message symbols.
    pub message: Vec<FieldElement>,
    /// Non-erased positions where the received word disagrees with the
    /// decoded codeword, ascending.
    pub errors: Vec<usize>,
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Advances `idx` to the next `k`-combination of `0..n` in lexicographic
/// order; returns false after the last one.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Decodes `z`, returning the message and the located error positions.
///
/// Fails with [`Error::DecodingFailure`] when no codeword lies within the
/// error budget left by the erasures.
pub fn decode_errors_erasures(z: &ReceivedWord) -> Result<Decoded> {
    let ell = z.len();
    let m = z.m;
    let known: Vec<usize> = (0..ell).filter(|&i| z.positions[i].is_some()).collect();
    let erasures = ell - known.len();
    if erasures + m > ell {
        return Err(Error::DecodingFailure);
    }
    let field = z.positions[known[0]].expect("known position").field();
    let max_errors = (ell - m - erasures) / 2;
    let work: u128 = (0..=max_errors).map(|r| binomial(known.len(), r)).sum();
    if work > SEARCH_LIMIT {
        return Err(usage(format!(
            "block length {ell} is too long for exhaustive error search"
        )));
    }

    let point = |i: usize| field.element(i as u64);
    let value = |i: usize| z.positions[i].expect("known position");

    for r in 0..=max_errors {
        let mut dropped: Vec<usize> = (0..r).collect();
        loop {
            let mut survivors = known
                .iter()
                .copied()
                .enumerate()
                .filter_map(|(slot, pos)| (!dropped.contains(&slot)).then_some(pos));
            let basis: Vec<usize> = survivors.by_ref().take(m).collect();
            let xs: Vec<FieldElement> = basis.iter().map(|&i| point(i)).collect();
            let ys: Vec<FieldElement> = basis.iter().map(|&i| value(i)).collect();
            if survivors.all(|i| interpolate_at(&xs, &ys, point(i)) == value(i)) {
                let message = (0..m).map(|i| interpolate_at(&xs, &ys, point(i))).collect();
                let errors = known
                    .iter()
                    .copied()
                    .filter(|&i| interpolate_at(&xs, &ys, point(i)) != value(i))
                    .collect();
                return Ok(Decoded { message, errors });
            }
            if r == 0 || !next_combination(&mut dropped, known.len()) {
                break;
            }
        }
    }
    Err(Error::DecodingFailure)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::systematic_rs_encode;
    use crate::field::PrimeField;

    fn gf(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    fn received(word: &[FieldElement], erased: &[usize], m: usize) -> ReceivedWord {
        let pos = word
            .iter()
            .enumerate()
            .map(|(i, &s)| (!erased.contains(&i)).then_some(s))
            .collect();
        ReceivedWord::new(pos, m).unwrap()
    }

    #[test]
    fn clean_codeword() {
        let f = gf(17);
        let v = vec![f.element(3), f.element(9), f.element(1)];
        let c = systematic_rs_encode(&v, 7).unwrap();
        let out = decode_errors_erasures(&received(&c, &[], 3)).unwrap();
        assert_eq!(out.message, v);
        assert!(out.errors.is_empty());
    }

    #[test]
    fn constant_code_with_erasure() {
        let f = gf(7);
        let a = f.element(4);
        let z = ReceivedWord::new(vec![Some(a), Some(a), None, Some(a)], 1).unwrap();
        assert_eq!(z.erasures(), vec![2]);
        let out = decode_errors_erasures(&z).unwrap();
        assert_eq!(out.message, vec![a]);
        assert!(out.errors.is_empty());
    }

    #[test]
    fn single_error_single_erasure_sweep() {
        let f = gf(17);
        let v = vec![f.element(11), f.element(5)];
        let c = systematic_rs_encode(&v, 6).unwrap();
        for bad in 0..6 {
            for delta in 1..17 {
                for erased in (0..6).filter(|&e| e != bad) {
                    let mut w = c.clone();
                    w[bad] = w[bad] + f.element(delta);
                    let out = decode_errors_erasures(&received(&w, &[erased], 2)).unwrap();
                    assert_eq!(out.message, v);
                    assert_eq!(out.errors, vec![bad]);
                }
            }
        }
    }

    #[test]
    fn too_many_erasures_fail() {
        let f = gf(7);
        let c = systematic_rs_encode(&[f.one(), f.one()], 4).unwrap();
        let z = received(&c, &[0, 1, 2], 2);
        assert!(matches!(
            decode_errors_erasures(&z),
            Err(Error::DecodingFailure)
        ));
    }

    #[test]
    fn over_budget_errors_fail() {
        // ell − m = 2 corrects one error; two errors at distance ≥ 3 from
        // every other codeword cannot be decoded
        let f = gf(7);
        let c = systematic_rs_encode(&[f.zero(), f.zero()], 4).unwrap();
        let mut w = c.clone();
        w[0] = f.element(1);
        w[1] = f.element(1);
        // (1, 1, 0, 0) is within one symbol of no codeword of degree < 2
        assert!(matches!(
            decode_errors_erasures(&received(&w, &[], 2)),
            Err(Error::DecodingFailure)
        ));
    }

    #[test]
    fn round_trip_exhaustive_gf7() {
        let f = gf(7);
        for m in 1..=2usize {
            for ell in m..=6 {
                for idx in 0..7u64.pow(m as u32) {
                    let v: Vec<_> = crate::codes::linear::digits(idx, 7, m)
                        .into_iter()
                        .map(|d| f.element(d))
                        .collect();
                    let c = systematic_rs_encode(&v, ell).unwrap();
                    let out = decode_errors_erasures(&received(&c, &[], m)).unwrap();
                    assert_eq!(out.message, v);
                    assert!(out.errors.is_empty());
                }
            }
        }
    }

    #[test]
    fn mixed_fields_rejected() {
        let z = ReceivedWord::new(vec![Some(gf(7).one()), Some(gf(11).one())], 1);
        assert!(z.is_err());
        assert!(ReceivedWord::new(vec![None, None], 3).is_err());
    }
}
