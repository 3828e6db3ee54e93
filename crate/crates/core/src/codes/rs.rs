//! Reed-Solomon evaluation hash: `H(x)_β = P_x(β) = Σ x_i β^i`.
//!
//! The evaluation set is the first `n` field elements `0, 1, …, n−1`, so
//! challenge index `i` evaluates at the field element `i`.

use crate::error::{format_err, usage, Result};
use crate::field::{FieldElement, PrimeField};

use super::HashCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReedSolomon {
    k: usize,
    n: usize,
    field: PrimeField,
}

impl ReedSolomon {
    pub fn new(k: usize, n: usize, field: PrimeField) -> Result<Self> {
        if k == 0 || k > n || n as u64 > field.modulus() {
            return Err(usage(format!("invalid RS shape k={k} n={n} over {field}")));
        }
        Ok(Self::new_unchecked(k, n, field))
    }

    pub(crate) fn new_unchecked(k: usize, n: usize, field: PrimeField) -> Self {
        ReedSolomon { k, n, field }
    }

    pub fn eval_point(&self, beta_index: usize) -> Result<FieldElement> {
        if beta_index >= self.n {
            return Err(usage(format!(
                "challenge index {beta_index} >= n = {}",
                self.n
            )));
        }
        Ok(self.field.element(beta_index as u64))
    }
}

impl HashCode for ReedSolomon {
    fn field(&self) -> PrimeField {
        self.field
    }

    fn dimension(&self) -> usize {
        self.k
    }

    fn block_len(&self) -> usize {
        self.n
    }

    fn distance(&self) -> usize {
        self.n - self.k + 1
    }

    fn symbol(&self, msg: &[FieldElement], position: usize) -> FieldElement {
        eval_poly(msg, self.field.element(position as u64))
    }
}

/// Horner evaluation of `Σ coeffs[i]·at^i`.
pub(crate) fn eval_poly(coeffs: &[FieldElement], at: FieldElement) -> FieldElement {
    coeffs
        .iter()
        .rev()
        .fold(at.field().zero(), |acc, &c| acc * at + c)
}

/// `H(x)_β` for the RS code, `β` the `beta_index`-th evaluation point.
pub fn rs_hash(code: &ReedSolomon, x: &[FieldElement], beta_index: usize) -> Result<FieldElement> {
    if x.len() != code.k {
        return Err(usage(format!(
            "message has {} symbols, code expects {}",
            x.len(),
            code.k
        )));
    }
    if let Some(bad) = x.iter().find(|s| s.field() != code.field) {
        return Err(usage(format!(
            "symbol over {} in a code over {}",
            bad.field(),
            code.field
        )));
    }
    Ok(eval_poly(x, code.eval_point(beta_index)?))
}

/// One-pass evaluation over a symbol stream `x_0, x_1, …` of declared
/// length `k`. Keeps only an accumulator and the running power of `beta`.
pub fn rs_hash_stream<I>(symbols: I, beta: FieldElement, k: usize) -> Result<FieldElement>
where
    I: IntoIterator<Item = FieldElement>,
{
    let mut acc = beta.field().zero();
    let mut pow = beta.field().one();
    let mut seen = 0usize;
    for x in symbols {
        if seen == k {
            return Err(format_err(format!(
                "symbol stream longer than declared k = {k}"
            )));
        }
        acc = acc.try_add(x.try_mul(pow)?)?;
        pow = pow * beta;
        seen += 1;
    }
    if seen != k {
        return Err(format_err(format!(
            "symbol stream ended after {seen} of {k} symbols"
        )));
    }
    Ok(acc)
}

/// Hash of a shard embedded at symbol `offset` of a longer zero message:
/// `Σ_j shard_j · β^(offset + j)`, one pass over the shard.
pub fn shard_hash(
    shard: &[FieldElement],
    beta: FieldElement,
    offset: usize,
) -> Result<FieldElement> {
    let mut acc = beta.field().zero();
    let mut pow = beta.pow(offset as u64);
    for &x in shard {
        acc = acc.try_add(x.try_mul(pow)?)?;
        pow = pow * beta;
    }
    Ok(acc)
}

/// Evaluates at `at` the unique polynomial of degree `< xs.len()` through
/// the points `(xs[i], ys[i])`. The `xs` must be distinct.
pub(crate) fn interpolate_at(
    xs: &[FieldElement],
    ys: &[FieldElement],
    at: FieldElement,
) -> FieldElement {
    debug_assert_eq!(xs.len(), ys.len());
    let field = at.field();
    let mut total = field.zero();
    for (j, (&xj, &yj)) in xs.iter().zip(ys).enumerate() {
        if yj.is_zero() {
            continue;
        }
        let mut num = field.one();
        let mut den = field.one();
        for (i, &xi) in xs.iter().enumerate() {
            if i != j {
                num = num * (at - xi);
                den = den * (xj - xi);
            }
        }
        total = total + yj * num * den.inv().expect("distinct interpolation points");
    }
    total
}

/// Systematic RS codeword of length `ell`: positions `0..m` carry `v`
/// and position `j >= m` holds `P(j)` for the degree `< m` polynomial
/// with `P(i) = v_i`, `i < m`.
pub fn systematic_rs_encode(v: &[FieldElement], ell: usize) -> Result<Vec<FieldElement>> {
    let field = v
        .first()
        .map(|e| e.field())
        .ok_or_else(|| usage("cannot encode an empty message"))?;
    if v.len() > ell {
        return Err(usage(format!(
            "message length {} exceeds block length {ell}",
            v.len()
        )));
    }
    if ell as u64 > field.modulus() {
        return Err(usage(format!(
            "block length {ell} needs more evaluation points than {field} has"
        )));
    }
    if v.iter().any(|e| e.field() != field) {
        return Err(usage("message symbols span several fields"));
    }
    let xs: Vec<FieldElement> = (0..v.len() as u64).map(|i| field.element(i)).collect();
    let mut out = v.to_vec();
    out.extend((v.len()..ell).map(|j| interpolate_at(&xs, v, field.element(j as u64))));
    Ok(out)
}
