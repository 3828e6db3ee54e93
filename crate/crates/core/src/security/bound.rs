//! Storage lower bounds `f(x)` and a computable stand-in for `C(x)`.
//!
//! Every bound has the form `f(x) = C(x) − slack − c0`, where the slack
//! depends on the scheme:
//!
//! | scheme              | slack terms                                      |
//! |---------------------|--------------------------------------------------|
//! | single              | `log(qLn³)`, `2 log log(qn)`                     |
//! | trivial             | `s`, `log(s²qLˢn⁴)`, `2 log log(qn)`             |
//! | linear, parity      | `s`, `log(s²qLn⁴)`, `2 log log(qn)`              |
//!
//! Logs are base 2. The argument of each log is formed exactly as an
//! integer and then passed through [`BigNat::log2`], so any evaluator that
//! takes the top 53 bits of the same integer reproduces every term bit for
//! bit.

use std::fmt;
use std::io::Write;

use flate2::write::DeflateEncoder;
use flate2::Compression;

use crate::codes::CodeParams;
use crate::error::{usage, Result};
use crate::field::BigNat;
use crate::protocol::ProtocolScheme;

/// Bits charged for the decompressor itself on top of the compressed
/// payload.
pub const DECODER_STUB_BITS: u64 = 256;

/// An upper estimate of `C(x)` in bits: the raw DEFLATE stream at level
/// 9, times 8, plus [`DECODER_STUB_BITS`].
///
/// This bounds `C(x)` from above up to the choice of reference machine.
/// It is not `C(x)`, which no program computes.
pub fn kolmogorov_upper_estimate(x: &[u8]) -> u64 {
    if x.is_empty() {
        return DECODER_STUB_BITS;
    }
    let mut enc = DeflateEncoder::new(Vec::new(), Compression::new(9));
    enc.write_all(x).expect("writing to a Vec cannot fail");
    let compressed = enc.finish().expect("writing to a Vec cannot fail");
    8 * compressed.len() as u64 + DECODER_STUB_BITS
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundTerm {
    pub label: &'static str,
    pub bits: f64,
}

/// `f(x)` with every slack term listed separately.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageBound {
    pub scheme: ProtocolScheme,
    pub c_estimate: f64,
    pub terms: Vec<BoundTerm>,
    pub c0: f64,
    /// Sum of `terms` in order.
    pub slack: f64,
    /// `c_estimate − slack − c0`.
    pub f_value: f64,
}

impl fmt::Display for StorageBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scheme={}", self.scheme)?;
        writeln!(f, "c_upper_estimate={}", self.c_estimate)?;
        for t in &self.terms {
            writeln!(f, "{}={}", t.label, t.bits)?;
        }
        writeln!(f, "c0={}", self.c0)?;
        writeln!(f, "slack={}", self.slack)?;
        write!(f, "f_value={}", self.f_value)
    }
}

fn product(factors: &[u64]) -> BigNat {
    factors
        .iter()
        .fold(BigNat::from_u64(1), |acc, &v| acc.mul_small(v))
}

/// Evaluates the bound for alphabet size `q`, list size `list_size`,
/// block length `n` and `s` servers.
pub fn storage_bound(
    scheme: ProtocolScheme,
    q: u64,
    list_size: u64,
    n: u64,
    s: u64,
    c_estimate: f64,
    c0: f64,
) -> Result<StorageBound> {
    if q == 0 || list_size == 0 || n == 0 || s == 0 {
        return Err(usage("q, L, n and s must be positive"));
    }
    if scheme == ProtocolScheme::Single && s != 1 {
        return Err(usage("the single-server bound takes s = 1"));
    }
    let qn = BigNat::from_u64(q).mul_small(n);
    if qn <= BigNat::from_u64(2) {
        return Err(usage("log log(qn) is undefined for qn <= 2"));
    }
    let n3 = [n, n, n];
    let mut terms = Vec::with_capacity(3);
    match scheme {
        ProtocolScheme::Single => {
            let arg = product(&[q, list_size]).mul(&product(&n3));
            terms.push(BoundTerm {
                label: "log_qLn3",
                bits: arg.log2(),
            });
        }
        ProtocolScheme::Trivial => {
            let ls = (0..s).fold(BigNat::from_u64(1), |acc, _| acc.mul_small(list_size));
            let arg = product(&[s, s, q]).mul(&ls).mul(&product(&[n, n, n, n]));
            terms.push(BoundTerm {
                label: "s",
                bits: s as f64,
            });
            terms.push(BoundTerm {
                label: "log_s2qLsn4",
                bits: arg.log2(),
            });
        }
        ProtocolScheme::Linear | ProtocolScheme::RsParity => {
            let arg = product(&[s, s, q, list_size]).mul(&product(&[n, n, n, n]));
            terms.push(BoundTerm {
                label: "s",
                bits: s as f64,
            });
            terms.push(BoundTerm {
                label: "log_s2qLn4",
                bits: arg.log2(),
            });
        }
    }
    terms.push(BoundTerm {
        label: "2loglog_qn",
        bits: 2.0 * qn.log2().log2(),
    });
    let slack = terms.iter().fold(0.0, |acc, t| acc + t.bits);
    Ok(StorageBound {
        scheme,
        c_estimate,
        terms,
        c0,
        slack,
        f_value: c_estimate - slack - c0,
    })
}

/// [`storage_bound`] with `q`, `L`, `n` taken from the code; CRT codes use
/// their largest prime as `q`.
pub fn storage_bound_for(
    scheme: ProtocolScheme,
    code: &CodeParams,
    s: u64,
    c_estimate: f64,
    c0: f64,
) -> Result<StorageBound> {
    storage_bound(
        scheme,
        code.max_alphabet(),
        code.list_size,
        code.n as u64,
        s,
        c_estimate,
        c0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn single_example() {
        let b = storage_bound(ProtocolScheme::Single, 2, 4, 16, 1, 100.0, 0.0).unwrap();
        assert_eq!(b.terms[0].bits, 15.0);
        assert_eq!(b.terms[1].bits, 2.0 * 5f64.log2());
        assert_eq!(b.slack, 15.0 + 2.0 * 5f64.log2());
        assert_eq!(b.f_value, 100.0 - b.slack);
    }

    #[test]
    fn zero_at_boundary() {
        let b = storage_bound(ProtocolScheme::Linear, 17, 512, 16, 2, 0.0, 3.0).unwrap();
        let at = storage_bound(ProtocolScheme::Linear, 17, 512, 16, 2, b.slack + 3.0, 3.0).unwrap();
        assert_eq!(at.f_value, 0.0);
    }

    #[test]
    fn parity_bound_with_unit_list() {
        // L = 1: the log argument is s²qn⁴
        let b = storage_bound(ProtocolScheme::RsParity, 17, 1, 16, 2, 0.0, 0.0).unwrap();
        assert_eq!(
            b.terms[0],
            BoundTerm {
                label: "s",
                bits: 2.0
            }
        );
        assert_eq!(b.terms[1].bits, (4.0 * 17.0 * 65536.0f64).log2());
    }

    #[test]
    fn trivial_uses_l_to_the_s() {
        let b = storage_bound(ProtocolScheme::Trivial, 5, 8, 4, 3, 0.0, 0.0).unwrap();
        assert_eq!(b.terms[1].bits, (9.0 * 5.0 * 512.0 * 256.0f64).log2());
    }

    #[test]
    fn degenerate_inputs() {
        assert!(storage_bound(ProtocolScheme::Single, 2, 1, 1, 1, 0.0, 0.0).is_err());
        assert!(storage_bound(ProtocolScheme::Single, 3, 1, 1, 1, 0.0, 0.0).is_ok());
        assert!(storage_bound(ProtocolScheme::Single, 17, 1, 16, 2, 0.0, 0.0).is_err());
        assert!(storage_bound(ProtocolScheme::Linear, 17, 0, 16, 2, 0.0, 0.0).is_err());
    }

    #[test]
    fn estimate_examples() {
        assert_eq!(kolmogorov_upper_estimate(&[]), DECODER_STUB_BITS);
        assert!(kolmogorov_upper_estimate(&vec![0u8; 1_000_000]) < 8 * 1_000_000 / 100);
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let mut random = vec![0u8; 10_000];
        rng.fill_bytes(&mut random);
        assert!(kolmogorov_upper_estimate(&random) as f64 >= 0.99 * 80_000.0);
    }
}
