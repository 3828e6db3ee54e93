//! Hash families built from error-correcting codes.
//!
//! A code `H: [q]^k → [q]^n` turns into a keyed hash by reading one
//! coordinate: `h_β(x) = H(x)_β`. Two explicit families are provided, the
//! Reed-Solomon evaluation hash ([`rs`]) and the residue hash over the first
//! `n` primes ([`crt`]). Their list-decoding guarantee comes from the Johnson
//! bound, computed by [`johnson_radius`].

pub mod crt;
pub mod linear;
pub mod message;
pub mod rs;

use std::fmt;

use crate::error::{format_err, usage, Result};
use crate::field::{gen_primes, next_prime, FieldElement, PrimeField};

pub use crt::{crt_dimension_for_bytes, crt_hash, CrtCode};
pub use linear::LinearCode;
pub use message::{Message, MessageData, ShardLayout};
pub use rs::{rs_hash, rs_hash_stream, systematic_rs_encode, ReedSolomon};

/// Serialized size of a [`CodeParams`] block.
pub const CODE_PARAMS_LEN: usize = 1 + 4 + 4 + 8;

/// Which explicit code backs the hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodeScheme {
    ReedSolomon,
    Crt,
}

impl CodeScheme {
    pub fn to_byte(self) -> u8 {
        match self {
            CodeScheme::ReedSolomon => 0x01,
            CodeScheme::Crt => 0x02,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        match b {
            0x01 => Ok(CodeScheme::ReedSolomon),
            0x02 => Ok(CodeScheme::Crt),
            other => Err(format_err(format!("unknown code scheme byte {other:#04x}"))),
        }
    }
}

impl fmt::Display for CodeScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeScheme::ReedSolomon => "rs",
            CodeScheme::Crt => "crt",
        })
    }
}

/// Symbol alphabet(s) of a code.
#[derive(Debug, Clone, PartialEq)]
pub enum Alphabet {
    /// Every position is over the same prime field.
    Field(PrimeField),
    /// Position `i` is over `GF(p_i)`; these are the first `n` primes.
    Primes(Vec<u64>),
}

/// Description of a hash code together with its list-decoding figures.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeParams {
    pub scheme: CodeScheme,
    /// Message length in symbols (RS) or in primes whose product bounds
    /// the message (CRT).
    pub k: usize,
    pub n: usize,
    pub alphabet: Alphabet,
    /// Minimum distance, `n − k + 1` for both schemes.
    pub distance: usize,
    pub delta: f64,
    pub rho: f64,
    pub list_size: u64,
    /// Design slack the parameters were chosen from, if any.
    pub epsilon: Option<f64>,
}

impl CodeParams {
    /// Reed-Solomon code over `GF(q)` evaluated at `0, 1, …, n−1`, with
    /// Johnson-bound list decoding figures.
    pub fn reed_solomon(k: usize, n: usize, q: u64) -> Result<Self> {
        let field = PrimeField::new(q)?;
        if k == 0 || k > n {
            return Err(usage(format!("need 1 <= k <= n, got k={k} n={n}")));
        }
        if n as u64 > q {
            return Err(usage(format!("block length {n} exceeds field size {q}")));
        }
        Self::assemble(CodeScheme::ReedSolomon, k, n, Alphabet::Field(field))
    }

    /// Residue code over the first `n` primes for messages below the
    /// product of the first `k` primes.
    pub fn crt(k: usize, n: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(usage(format!("need 1 <= k <= n, got k={k} n={n}")));
        }
        let primes = gen_primes(n)?;
        Self::assemble(CodeScheme::Crt, k, n, Alphabet::Primes(primes))
    }

    fn assemble(scheme: CodeScheme, k: usize, n: usize, alphabet: Alphabet) -> Result<Self> {
        if n > u32::MAX as usize {
            return Err(usage("block length does not fit in 32 bits"));
        }
        let distance = n - k + 1;
        let sizes = alphabet_sizes(&alphabet, n);
        let (rho, list_size) = johnson_radius(n, distance, &sizes)?;
        Ok(CodeParams {
            scheme,
            k,
            n,
            alphabet,
            distance,
            delta: distance as f64 / n as f64,
            rho,
            list_size,
            epsilon: None,
        })
    }

    /// The field of an RS code.
    pub fn field(&self) -> Option<PrimeField> {
        match &self.alphabet {
            Alphabet::Field(f) => Some(*f),
            Alphabet::Primes(_) => None,
        }
    }

    pub fn primes(&self) -> Option<&[u64]> {
        match &self.alphabet {
            Alphabet::Primes(p) => Some(p),
            Alphabet::Field(_) => None,
        }
    }

    pub fn alphabet_sizes(&self) -> Vec<u64> {
        alphabet_sizes(&self.alphabet, self.n)
    }

    /// Largest per-position alphabet; `q` for RS and `p_n` for CRT.
    pub fn max_alphabet(&self) -> u64 {
        match &self.alphabet {
            Alphabet::Field(f) => f.modulus(),
            Alphabet::Primes(p) => *p.last().expect("n >= 1"),
        }
    }

    /// Alphabet of position `beta_index`.
    pub fn position_field(&self, beta_index: usize) -> Result<PrimeField> {
        if beta_index >= self.n {
            return Err(usage(format!(
                "challenge index {beta_index} >= n = {}",
                self.n
            )));
        }
        match &self.alphabet {
            Alphabet::Field(f) => Ok(*f),
            Alphabet::Primes(p) => PrimeField::new(p[beta_index]),
        }
    }

    /// Integer list-decoding radius `⌊ρ·n⌋`.
    pub fn radius(&self) -> usize {
        (self.rho * self.n as f64).floor() as usize
    }

    pub fn rs_code(&self) -> Option<ReedSolomon> {
        self.field()
            .map(|field| ReedSolomon::new_unchecked(self.k, self.n, field))
    }

    pub fn crt_code(&self) -> Option<CrtCode> {
        self.primes()
            .map(|p| CrtCode::new_unchecked(self.k, p.to_vec()))
    }

    /// Fixed 17-byte block: scheme, `k` and `n` as u32 LE, then `q` (RS)
    /// or the prime count (CRT) as u64 LE.
    pub fn to_bytes(&self) -> [u8; CODE_PARAMS_LEN] {
        let mut out = [0u8; CODE_PARAMS_LEN];
        out[0] = self.scheme.to_byte();
        out[1..5].copy_from_slice(&(self.k as u32).to_le_bytes());
        out[5..9].copy_from_slice(&(self.n as u32).to_le_bytes());
        let tail = match &self.alphabet {
            Alphabet::Field(f) => f.modulus(),
            Alphabet::Primes(p) => p.len() as u64,
        };
        out[9..17].copy_from_slice(&tail.to_le_bytes());
        out
    }

    /// Inverse of [`Self::to_bytes`]. The list-decoding figures are
    /// recomputed from the Johnson bound, and `epsilon` is not recovered.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != CODE_PARAMS_LEN {
            return Err(format_err(format!(
                "code parameter block must be {CODE_PARAMS_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        let scheme = CodeScheme::from_byte(bytes[0])?;
        let k = u32::from_le_bytes(bytes[1..5].try_into().unwrap()) as usize;
        let n = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
        let tail = u64::from_le_bytes(bytes[9..17].try_into().unwrap());
        let parsed = match scheme {
            CodeScheme::ReedSolomon => Self::reed_solomon(k, n, tail),
            CodeScheme::Crt => {
                if tail != n as u64 {
                    return Err(format_err("CRT prime count disagrees with n"));
                }
                Self::crt(k, n)
            }
        };
        parsed.map_err(|e| format_err(format!("invalid code parameters: {e}")))
    }

    /// The same code with Johnson figures and no epsilon, i.e. what
    /// [`Self::from_bytes`] yields.
    pub fn canonical(&self) -> Self {
        Self::assemble(self.scheme, self.k, self.n, self.alphabet.clone())
            .expect("parameters were valid")
    }
}

fn alphabet_sizes(alphabet: &Alphabet, n: usize) -> Vec<u64> {
    match alphabet {
        Alphabet::Field(f) => vec![f.modulus(); n],
        Alphabet::Primes(p) => p[..n].to_vec(),
    }
}

/// Johnson bound: a code of length `n` and distance `d` with per-position
/// alphabets `q_i` is `(1 − √(1 − d/n), 2·Σ q_i)`-list decodable.
///
/// `rho` is computed in `f64`; callers turn it into an integer radius by
/// rounding `rho·n` down.
pub fn johnson_radius(n: usize, d: usize, alphabet_sizes: &[u64]) -> Result<(f64, u64)> {
    if n == 0 {
        return Err(usage("block length must be positive"));
    }
    if d > n {
        return Err(usage(format!("distance {d} exceeds block length {n}")));
    }
    if alphabet_sizes.len() != n {
        return Err(usage("need one alphabet size per position"));
    }
    if alphabet_sizes.iter().any(|&q| q < 2) {
        return Err(usage("alphabet sizes must be at least 2"));
    }
    let rho = 1.0 - (1.0 - d as f64 / n as f64).sqrt();
    let total = alphabet_sizes
        .iter()
        .try_fold(0u64, |acc, &q| acc.checked_add(q))
        .and_then(|s| s.checked_mul(2))
        .ok_or_else(|| usage("list size overflows 64 bits"))?;
    Ok((rho, total))
}

fn block_length_for(k: usize, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(usage(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if k == 0 {
        return Err(usage("k must be positive"));
    }
    let n = (k as f64 / (epsilon * epsilon)).ceil();
    if !n.is_finite() || n > u32::MAX as f64 {
        return Err(usage("block length k/epsilon^2 overflows 32 bits"));
    }
    let n = n as usize;
    if n <= k {
        return Err(usage("epsilon too close to 1: block length collapses to k"));
    }
    Ok(n)
}

fn ceil_to_u64(x: f64) -> Result<u64> {
    let c = x.ceil();
    if !c.is_finite() || c < 0.0 || c > u64::MAX as f64 {
        return Err(usage("list size overflows 64 bits"));
    }
    Ok(c as u64)
}

/// Parameters for message length `k` and slack `epsilon`: `n = ⌈k/ε²⌉`.
///
/// RS picks the smallest prime `q >= n` and sets `L = ⌈2k²/ε⁴⌉`; CRT uses
/// the first `n` primes and `L = ⌈k²(log₂ k − log₂ ε²)/ε⁴⌉`.
pub fn choose_params(k: usize, epsilon: f64, scheme: CodeScheme) -> Result<CodeParams> {
    let n = block_length_for(k, epsilon)?;
    let e4 = epsilon.powi(4);
    let kf = k as f64;
    let mut params = match scheme {
        CodeScheme::ReedSolomon => {
            let mut p = CodeParams::reed_solomon(k, n, next_prime(n as u64)?)?;
            p.list_size = ceil_to_u64(2.0 * kf * kf / e4)?;
            p
        }
        CodeScheme::Crt => {
            let mut p = CodeParams::crt(k, n)?;
            p.list_size = ceil_to_u64(kf * kf * (kf.log2() - (epsilon * epsilon).log2()) / e4)?;
            p
        }
    };
    if params.rho <= 0.0 {
        return Err(usage("degenerate parameters: list-decoding radius is zero"));
    }
    params.epsilon = Some(epsilon);
    Ok(params)
}

/// RS parameters over a caller-fixed prime field, `n = ⌈k/ε²⌉ <= q`.
pub fn choose_params_in_field(k: usize, epsilon: f64, q: u64) -> Result<CodeParams> {
    let n = block_length_for(k, epsilon)?;
    let mut p = CodeParams::reed_solomon(k, n, q)?;
    let kf = k as f64;
    p.list_size = ceil_to_u64(2.0 * kf * kf / epsilon.powi(4))?;
    p.epsilon = Some(epsilon);
    Ok(p)
}

/// Hamming distance between equal-length words.
pub fn hamming<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// A linear code over a prime field whose messages are symbol vectors.
///
/// Implemented by [`ReedSolomon`] and [`LinearCode`]; the extraction
/// procedures in [`crate::security`] are generic over it.
pub trait HashCode {
    fn field(&self) -> PrimeField;
    fn dimension(&self) -> usize;
    fn block_len(&self) -> usize;
    /// Minimum distance of the code.
    fn distance(&self) -> usize;
    /// Coordinate `position` of the codeword of `msg`.
    fn symbol(&self, msg: &[FieldElement], position: usize) -> FieldElement;

    fn codeword(&self, msg: &[FieldElement]) -> Vec<FieldElement> {
        (0..self.block_len()).map(|i| self.symbol(msg, i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn johnson_examples() {
        let (rho, l) = johnson_radius(16, 0, &[5; 16]).unwrap();
        assert_eq!(rho, 0.0);
        assert_eq!(l, 160);
        let (rho, l) = johnson_radius(16, 13, &[17; 16]).unwrap();
        assert_eq!(rho, 1.0 - (3.0f64 / 16.0).sqrt());
        assert_eq!(l, 32 * 17);
        let (rho, _) = johnson_radius(16, 16, &[17; 16]).unwrap();
        assert_eq!(rho, 1.0);
        assert!(johnson_radius(4, 5, &[2; 4]).is_err());
        assert!(johnson_radius(2, 1, &[1, 2]).is_err());
    }

    #[test]
    fn choose_rs_small() {
        let p = choose_params(4, 0.5, CodeScheme::ReedSolomon).unwrap();
        assert_eq!(p.n, 16);
        assert_eq!(p.list_size, 512);
        assert_eq!(p.field().unwrap().modulus(), 17);
        assert_eq!(p.distance, 13);
        assert_eq!(p.rho, 1.0 - (3.0f64 / 16.0).sqrt());
        assert_eq!(p.radius(), 9);
    }

    #[test]
    fn choose_rs_larger() {
        let p = choose_params(64, 0.25, CodeScheme::ReedSolomon).unwrap();
        assert_eq!(p.n, 1024);
        assert_eq!(p.list_size, 2_097_152);
        assert_eq!(p.field().unwrap().modulus(), 1031);
    }

    #[test]
    fn choose_crt() {
        let p = choose_params(4, 0.5, CodeScheme::Crt).unwrap();
        assert_eq!(p.n, 16);
        assert_eq!(p.primes().unwrap().last(), Some(&53));
        // k²(log₂ k − log₂ ε²)/ε⁴ = 16·(2 + 2)·16
        assert_eq!(p.list_size, 1024);
    }

    #[test]
    fn degenerate_epsilon_rejected() {
        assert!(choose_params(1, 1.0, CodeScheme::ReedSolomon).is_err());
        assert!(choose_params(4, 0.0, CodeScheme::ReedSolomon).is_err());
        assert!(choose_params(4, -0.5, CodeScheme::Crt).is_err());
        assert!(choose_params(0, 0.5, CodeScheme::Crt).is_err());
        assert!(choose_params(1 << 30, 1e-3, CodeScheme::ReedSolomon).is_err());
    }

    #[test]
    fn param_block_round_trip() {
        let rs = CodeParams::reed_solomon(8, 200, 257).unwrap();
        let bytes = rs.to_bytes();
        assert_eq!(bytes[0], 0x01);
        assert_eq!(&bytes[9..], &257u64.to_le_bytes());
        assert_eq!(CodeParams::from_bytes(&bytes).unwrap(), rs);

        let crt = CodeParams::crt(3, 10).unwrap();
        assert_eq!(CodeParams::from_bytes(&crt.to_bytes()).unwrap(), crt);

        let chosen = choose_params(4, 0.5, CodeScheme::ReedSolomon).unwrap();
        assert_eq!(
            CodeParams::from_bytes(&chosen.to_bytes()).unwrap(),
            chosen.canonical()
        );
    }

    #[test]
    fn bad_param_blocks() {
        let mut b = CodeParams::reed_solomon(2, 7, 7).unwrap().to_bytes();
        b[0] = 9;
        assert!(CodeParams::from_bytes(&b).is_err());
        let mut b = CodeParams::reed_solomon(2, 7, 7).unwrap().to_bytes();
        b[9] = 8; // q = 8 is not prime
        assert!(CodeParams::from_bytes(&b).is_err());
        assert!(CodeParams::from_bytes(&b[..5]).is_err());
    }

    #[test]
    fn rs_constraints() {
        assert!(CodeParams::reed_solomon(4, 18, 17).is_err());
        assert!(CodeParams::reed_solomon(5, 4, 17).is_err());
        assert!(CodeParams::reed_solomon(0, 4, 17).is_err());
        assert!(CodeParams::reed_solomon(2, 4, 16).is_err());
    }
}
