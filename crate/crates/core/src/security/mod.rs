//! The extraction arguments behind the storage guarantees, run for real
//! on small codes.
//!
//! A server that passes many audits answers most challenges correctly, so
//! its answer vector `z = (A(β))_β` is close to the codeword `H(x)`. List
//! decoding `z` yields a short list containing `x`, and an index into that
//! list plus the server's state describes `x`. That is why the server must
//! store about `C(x)` bits. Here the list is found by enumerating every
//! message, which is only feasible for tiny `q^k`.

mod bound;

pub use bound::{
    kolmogorov_upper_estimate, storage_bound, storage_bound_for, BoundTerm, StorageBound,
    DECODER_STUB_BITS,
};

use crate::codes::linear::{digits, ENUMERATION_LIMIT};
use crate::codes::{johnson_radius, CodeParams, HashCode};
use crate::error::{usage, Result};
use crate::field::FieldElement;

/// A server's deterministic answer function `β ↦ A(β, y)` together with
/// the size of its state `y`.
pub trait Responder {
    fn answer(&self, beta_index: usize) -> FieldElement;

    fn stored_bits(&self) -> u64;

    /// The answer vector over all `n` challenges.
    fn answers(&self, n: usize) -> Vec<FieldElement> {
        (0..n).map(|b| self.answer(b)).collect()
    }
}

/// A responder given by its full answer table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerTable {
    pub answers: Vec<FieldElement>,
    pub stored_bits: u64,
}

impl Responder for AnswerTable {
    fn answer(&self, beta_index: usize) -> FieldElement {
        self.answers[beta_index]
    }

    fn stored_bits(&self) -> u64 {
        self.stored_bits
    }
}

/// A responder backed by a closure.
pub struct FnResponder<F> {
    f: F,
    stored_bits: u64,
}

impl<F: Fn(usize) -> FieldElement> FnResponder<F> {
    pub fn new(stored_bits: u64, f: F) -> Self {
        FnResponder { f, stored_bits }
    }
}

impl<F: Fn(usize) -> FieldElement> Responder for FnResponder<F> {
    fn answer(&self, beta_index: usize) -> FieldElement {
        (self.f)(beta_index)
    }

    fn stored_bits(&self) -> u64 {
        self.stored_bits
    }
}

/// Decoding radius, promised list bound, and which messages to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractionParams {
    pub radius: usize,
    pub list_bound: u64,
    /// Messages range over `{0, …, alphabet−1}^k`; normally `q`.
    pub alphabet: u64,
}

impl ExtractionParams {
    /// Johnson radius and list size of `code`, all messages.
    pub fn johnson<C: HashCode + ?Sized>(code: &C) -> Result<Self> {
        let n = code.block_len();
        let q = code.field().modulus();
        let (rho, list_bound) = johnson_radius(n, code.distance(), &vec![q; n])?;
        Ok(ExtractionParams {
            radius: (rho * n as f64).floor() as usize,
            list_bound,
            alphabet: q,
        })
    }

    /// Radius and list size recorded in RS parameters.
    pub fn from_params(params: &CodeParams) -> Result<Self> {
        let q = params
            .field()
            .ok_or_else(|| usage("extraction needs a code over a single field"))?
            .modulus();
        Ok(ExtractionParams {
            radius: params.radius(),
            list_bound: params.list_size,
            alphabet: q,
        })
    }

    /// Restricts enumeration to messages over `{0, …, alphabet−1}`.
    pub fn with_alphabet(mut self, alphabet: u64) -> Self {
        self.alphabet = alphabet;
        self
    }
}

/// The list `𝓛` and the advice index locating the true message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractionResult {
    /// Received word the list was decoded from.
    pub received: Vec<FieldElement>,
    /// Messages within the radius, in canonical order.
    pub list: Vec<Vec<FieldElement>>,
    /// Position of the supplied true message in `list`.
    pub advice: Option<usize>,
    pub list_bound: u64,
    pub radius: usize,
}

impl ExtractionResult {
    pub fn within_bound(&self) -> bool {
        self.list.len() as u64 <= self.list_bound
    }

    /// Bits needed to name one entry of a list of at most `L` messages.
    pub fn advice_bits(&self) -> u32 {
        crate::field::ceil_log2(self.list_bound.max(1))
    }
}

/// All messages whose codeword lies within `params.radius` of
/// `received`, in canonical order (base-alphabet digits, most
/// significant symbol first).
pub fn decode_list<C: HashCode + ?Sized>(
    code: &C,
    received: &[FieldElement],
    params: ExtractionParams,
) -> Result<Vec<Vec<FieldElement>>> {
    let (k, n) = (code.dimension(), code.block_len());
    let field = code.field();
    if received.len() != n {
        return Err(usage(format!(
            "received word has {} symbols, code length {n}",
            received.len()
        )));
    }
    if params.alphabet < 1 || params.alphabet > field.modulus() {
        return Err(usage("message alphabet must lie in 1..=q"));
    }
    let count = params
        .alphabet
        .checked_pow(k as u32)
        .filter(|&c| c <= ENUMERATION_LIMIT)
        .ok_or_else(|| usage("desk-scale only: message space exceeds 2^24"))?;
    let mut list = Vec::new();
    for idx in 0..count {
        let msg: Vec<FieldElement> = digits(idx, params.alphabet, k)
            .into_iter()
            .map(|d| field.element(d))
            .collect();
        let mut dist = 0;
        let close = (0..n).all(|pos| {
            if code.symbol(&msg, pos) != received[pos] {
                dist += 1;
            }
            dist <= params.radius
        });
        if close {
            list.push(msg);
        }
    }
    Ok(list)
}

fn finish(
    received: Vec<FieldElement>,
    list: Vec<Vec<FieldElement>>,
    params: ExtractionParams,
    truth: Option<&[FieldElement]>,
) -> ExtractionResult {
    let advice = truth.and_then(|t| list.iter().position(|m| m == t));
    ExtractionResult {
        received,
        list,
        advice,
        list_bound: params.list_bound,
        radius: params.radius,
    }
}

/// Decodes the responder's answer vector. `truth`, when given, is looked
/// up in the list to produce the advice index.
pub fn extract_list<C: HashCode + ?Sized, R: Responder + ?Sized>(
    responder: &R,
    code: &C,
    params: ExtractionParams,
    truth: Option<&[FieldElement]>,
) -> Result<ExtractionResult> {
    let z = responder.answers(code.block_len());
    let list = decode_list(code, &z, params)?;
    Ok(finish(z, list, params, truth))
}

/// Decodes the sum of a coalition's answers.
///
/// The verifier of the linear scheme checks `Σ a_i = H(x)_β`. Honest
/// members contribute `H(x̂_i)_β` exactly, so the coalition's summed
/// answers must match `H(x̂_T)_β` wherever the audit passes, and list
/// decoding their sum recovers `x̂_T`.
pub fn extract_coalition<C: HashCode + ?Sized>(
    coalition: &[&dyn Responder],
    code: &C,
    params: ExtractionParams,
    truth: Option<&[FieldElement]>,
) -> Result<ExtractionResult> {
    if coalition.is_empty() {
        return Err(usage("coalition must have at least one member"));
    }
    let n = code.block_len();
    let zero = code.field().zero();
    let z: Vec<FieldElement> = (0..n)
        .map(|b| coalition.iter().fold(zero, |acc, r| acc + r.answer(b)))
        .collect();
    let list = decode_list(code, &z, params)?;
    Ok(finish(z, list, params, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{hamming, LinearCode, Message, ReedSolomon};
    use crate::field::PrimeField;
    use crate::protocol::{honest_shard_response, ProtocolScheme, ShardData};
    use proptest::prelude::*;

    fn gf(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    fn table(v: Vec<FieldElement>) -> AnswerTable {
        AnswerTable {
            answers: v,
            stored_bits: 0,
        }
    }

    #[test]
    fn exact_replay_is_found() {
        let f = gf(7);
        let code = ReedSolomon::new(2, 7, f).unwrap();
        let x = vec![f.element(3), f.element(5)];
        let params = ExtractionParams::johnson(&code).unwrap();
        let out = extract_list(&table(code.codeword(&x)), &code, params, Some(&x)).unwrap();
        assert!(out.advice.is_some());
        assert!(out.within_bound());
    }

    #[test]
    fn list_is_canonical_and_complete() {
        // every message within the radius appears, nothing else, in order
        let f = gf(5);
        let code = ReedSolomon::new(2, 5, f).unwrap();
        let params = ExtractionParams::johnson(&code).unwrap();
        assert_eq!(params.radius, 2);
        let z: Vec<_> = [0, 1, 2, 3, 0].iter().map(|&v| f.element(v)).collect();
        let list = decode_list(&code, &z, params).unwrap();
        let mut oracle = Vec::new();
        for a in 0..5 {
            for b in 0..5 {
                let m = vec![f.element(a), f.element(b)];
                if hamming(&code.codeword(&m), &z) <= 2 {
                    oracle.push(m);
                }
            }
        }
        assert_eq!(list, oracle);
    }

    #[test]
    fn guard_is_enforced() {
        let f = gf(17);
        let code = ReedSolomon::new(7, 17, f).unwrap();
        let params = ExtractionParams::johnson(&code).unwrap();
        let err = decode_list(&code, &vec![f.zero(); 17], params).unwrap_err();
        assert!(err.to_string().contains("desk-scale only"));
    }

    #[test]
    fn coalition_of_all_equals_full_extraction() {
        let f = gf(7);
        let code = ReedSolomon::new(2, 7, f).unwrap();
        let params = ExtractionParams::johnson(&code).unwrap();
        let msg = Message::from_symbols(vec![f.element(4), f.element(6)], 2).unwrap();
        let members: Vec<AnswerTable> = (0..2)
            .map(|i| {
                table(
                    (0..7)
                        .map(|b| {
                            let shard = ShardData::Symbols(msg.shard_symbols(i).unwrap());
                            let code = CodeParams::reed_solomon(2, 7, 7).unwrap();
                            honest_shard_response(
                                ProtocolScheme::Linear,
                                &code,
                                shard,
                                msg.shard_offset(i),
                                b,
                            )
                            .unwrap()
                        })
                        .collect(),
                )
            })
            .collect();
        let refs: Vec<&dyn Responder> = members.iter().map(|m| m as &dyn Responder).collect();
        let x = msg.symbols().unwrap();
        let joint = extract_coalition(&refs, &code, params, Some(x)).unwrap();
        let full = extract_list(&table(code.codeword(x)), &code, params, Some(x)).unwrap();
        assert_eq!(joint, full);
        assert!(joint.advice.is_some());

        // a coalition of one recovers its embedded shard
        let solo = extract_coalition(
            &refs[1..],
            &code,
            params,
            Some(&msg.embedded_shard(1).unwrap()),
        )
        .unwrap();
        assert!(solo.advice.is_some());
    }

    #[test]
    fn coalition_wrong_on_radius_many_challenges() {
        // GF(7), k = 2, s = 2: corrupt exactly ⌊ρn⌋ of the summed answers
        let f = gf(7);
        let code = ReedSolomon::new(2, 7, f).unwrap();
        let params = ExtractionParams::johnson(&code).unwrap();
        let radius = params.radius;
        assert_eq!(radius, 4);
        for idx in 0..49u64 {
            let x = vec![f.element(idx / 7), f.element(idx % 7)];
            let honest = code.codeword(&x);
            for mask in 0u32..128 {
                if mask.count_ones() as usize != radius {
                    continue;
                }
                let cheat: Vec<_> = (0..7)
                    .map(|b| {
                        if mask >> b & 1 == 1 {
                            honest[b] + f.element(1 + (b as u64 + idx) % 6)
                        } else {
                            honest[b]
                        }
                    })
                    .collect();
                let out = extract_list(&table(cheat), &code, params, Some(&x)).unwrap();
                assert!(out.advice.is_some() && out.within_bound());
            }
        }
    }

    #[test]
    fn linear_code_extraction() {
        let f = gf(3);
        let code = LinearCode::projective(f, 3, 12).unwrap();
        let params = ExtractionParams::johnson(&code).unwrap();
        let x = code.message(17);
        let mut z = code.codeword(&x);
        for v in &mut z[..params.radius] {
            *v = *v + f.one();
        }
        let out = extract_list(&table(z), &code, params, Some(&x)).unwrap();
        assert!(out.advice.is_some() && out.within_bound());
    }

    proptest! {
        #[test]
        fn close_responders_are_extracted(x in proptest::collection::vec(0u64..3, 4), flips in proptest::collection::vec((0usize..16, 1u64..17), 0..10)) {
            let f = gf(17);
            let code = ReedSolomon::new(4, 16, f).unwrap();
            let params = ExtractionParams::from_params(&CodeParams::reed_solomon(4, 16, 17).unwrap()).unwrap().with_alphabet(3);
            let x: Vec<_> = x.into_iter().map(|v| f.element(v)).collect();
            let mut z = code.codeword(&x);
            for (pos, d) in flips {
                z[pos] = z[pos] + f.element(d);
            }
            let close = hamming(&z, &code.codeword(&x)) <= params.radius;
            let out = extract_list(&table(z), &code, params, Some(&x)).unwrap();
            prop_assert!(out.within_bound());
            if close {
                prop_assert!(out.advice.is_some());
            }
        }
    }
}
