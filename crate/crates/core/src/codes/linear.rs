//! Generic linear codes given by a generator matrix.
//!
//! Reed-Solomon needs `n <= q`, so over very small fields such as GF(2) or
//! GF(3) longer codes are built from a generator matrix instead. Used for
//! desk-scale checks of the Johnson bound and of the extraction procedure.

use crate::error::{usage, Result};
use crate::field::{FieldElement, PrimeField};

use super::HashCode;

/// Upper bound on `q^k` for the brute-force routines here.
pub const ENUMERATION_LIMIT: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearCode {
    field: PrimeField,
    /// `k` rows of length `n`.
    generator: Vec<Vec<FieldElement>>,
    distance: usize,
}

impl LinearCode {
    /// Builds the code and computes its minimum distance by enumeration.
    pub fn new(field: PrimeField, generator: Vec<Vec<FieldElement>>) -> Result<Self> {
        let k = generator.len();
        let n = generator.first().map_or(0, Vec::len);
        if k == 0 || n < k || generator.iter().any(|r| r.len() != n) {
            return Err(usage(
                "generator must be a nonempty k x n matrix with n >= k",
            ));
        }
        if generator.iter().flatten().any(|e| e.field() != field) {
            return Err(usage("generator entries must lie in the code's field"));
        }
        message_count(field, k)?;
        let mut code = LinearCode {
            field,
            generator,
            distance: 0,
        };
        code.distance = code.min_weight();
        if code.distance == 0 {
            return Err(usage("generator matrix is rank deficient"));
        }
        Ok(code)
    }

    /// Columns are projective points of `GF(q)^k`: the unit vectors first,
    /// then the remaining points (first nonzero coordinate 1) in
    /// lexicographic order, cycling when `n` exceeds their number.
    pub fn projective(field: PrimeField, k: usize, n: usize) -> Result<Self> {
        let q = field.modulus();
        if k == 0 || n < k {
            return Err(usage("need 1 <= k <= n"));
        }
        let count = message_count(field, k)?;
        let mut columns: Vec<Vec<u64>> = (0..k)
            .map(|i| (0..k).map(|j| u64::from(i == j)).collect())
            .collect();
        for idx in 1..count {
            let v = digits(idx, q, k);
            let lead = v.iter().position(|&d| d != 0).unwrap();
            if v[lead] == 1 && v.iter().filter(|&&d| d != 0).count() > 1 {
                columns.push(v);
            }
        }
        let generator = (0..k)
            .map(|row| {
                (0..n)
                    .map(|col| field.element(columns[col % columns.len()][row]))
                    .collect()
            })
            .collect();
        Self::new(field, generator)
    }

    fn min_weight(&self) -> usize {
        let k = self.generator.len();
        let count = self.field.modulus().pow(k as u32);
        (1..count)
            .map(|i| {
                let msg = self.message(i);
                self.codeword(&msg).iter().filter(|s| !s.is_zero()).count()
            })
            .min()
            .unwrap_or(0)
    }

    /// The `index`-th message in canonical (base-`q`, most significant
    /// symbol first) order.
    pub fn message(&self, index: u64) -> Vec<FieldElement> {
        digits(index, self.field.modulus(), self.generator.len())
            .into_iter()
            .map(|d| self.field.element(d))
            .collect()
    }
}

fn message_count(field: PrimeField, k: usize) -> Result<u64> {
    field
        .modulus()
        .checked_pow(k as u32)
        .filter(|&c| c <= ENUMERATION_LIMIT)
        .ok_or_else(|| usage("q^k exceeds the desk-scale enumeration limit"))
}

/// Base-`q` digits of `index`, most significant first, `len` digits.
pub(crate) fn digits(mut index: u64, q: u64, len: usize) -> Vec<u64> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = index % q;
        index /= q;
    }
    out
}

impl HashCode for LinearCode {
    fn field(&self) -> PrimeField {
        self.field
    }

    fn dimension(&self) -> usize {
        self.generator.len()
    }

    fn block_len(&self) -> usize {
        self.generator[0].len()
    }

    fn distance(&self) -> usize {
        self.distance
    }

    fn symbol(&self, msg: &[FieldElement], position: usize) -> FieldElement {
        msg.iter()
            .zip(&self.generator)
            .fold(self.field.zero(), |acc, (&m, row)| acc + m * row[position])
    }
}
