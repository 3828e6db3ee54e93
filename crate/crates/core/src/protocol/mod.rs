//! The four audit protocols.
//!
//! Every protocol follows the same shape. During preprocessing the client
//! draws a challenge index `β ∈ [0, n)` and keeps a few hash values of its
//! data at `β`. Later it sends `β` to the servers, collects one field
//! element from each, and checks them against what it kept:
//!
//! | scheme      | client keeps                           | check                         |
//! |-------------|----------------------------------------|-------------------------------|
//! | `Single`    | `γ = H(x)_β`                           | `a = γ`                       |
//! | `Trivial`   | `γ_i = H(x_i)_β` per shard             | `a_i = γ_i` for every `i`     |
//! | `Linear`    | `γ = H(x)_β`                           | `Σ a_i = γ`                   |
//! | `RsParity`  | parity of `RS(H(x̂_1)_β, …, H(x̂_s)_β)` | decode, locate wrong answers  |
//!
//! `x̂_i` is shard `i` placed at its offset in an otherwise zero message;
//! by linearity `Σ H(x̂_i) = H(x)`.

pub mod rng;
pub mod token;

use std::fmt;
use std::str::FromStr;

use crate::codes::rs::{eval_poly, shard_hash};
use crate::codes::{crt_hash, systematic_rs_encode, CodeParams, CodeScheme, Message};
use crate::error::{format_err, usage, Error, Result};
use crate::field::{BigNat, FieldElement};
use crate::rsdecode::{decode_errors_erasures, ReceivedWord};

pub use rng::ChallengeRng;
pub use token::{TokenBundle, DEFAULT_AUDITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolScheme {
    Single,
    Trivial,
    Linear,
    RsParity,
}

impl ProtocolScheme {
    pub const ALL: [ProtocolScheme; 4] = [
        ProtocolScheme::Single,
        ProtocolScheme::Trivial,
        ProtocolScheme::Linear,
        ProtocolScheme::RsParity,
    ];

    pub fn to_byte(self) -> u8 {
        match self {
            ProtocolScheme::Single => 0x01,
            ProtocolScheme::Trivial => 0x02,
            ProtocolScheme::Linear => 0x03,
            ProtocolScheme::RsParity => 0x04,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        Ok(match b {
            0x01 => ProtocolScheme::Single,
            0x02 => ProtocolScheme::Trivial,
            0x03 => ProtocolScheme::Linear,
            0x04 => ProtocolScheme::RsParity,
            other => {
                return Err(format_err(format!(
                    "unknown protocol scheme byte {other:#04x}"
                )))
            }
        })
    }

    /// Whether the server answers with the hash of its zero-embedded shard.
    pub fn uses_embedding(self) -> bool {
        matches!(self, ProtocolScheme::Linear | ProtocolScheme::RsParity)
    }
}

impl fmt::Display for ProtocolScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtocolScheme::Single => "single",
            ProtocolScheme::Trivial => "trivial",
            ProtocolScheme::Linear => "linear",
            ProtocolScheme::RsParity => "rs-parity",
        })
    }
}

impl FromStr for ProtocolScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(ProtocolScheme::Single),
            "trivial" => Ok(ProtocolScheme::Trivial),
            "linear" => Ok(ProtocolScheme::Linear),
            "rs-parity" => Ok(ProtocolScheme::RsParity),
            other => Err(usage(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Error (`r`) and erasure (`e`) budget of the parity scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParityBudget {
    pub r: usize,
    pub e: usize,
}

/// What one server holds.
#[derive(Debug, Clone, Copy)]
pub enum ShardData<'a> {
    Symbols(&'a [FieldElement]),
    Integer(&'a BigNat),
}

/// The answer an honest server gives to challenge `beta_index`.
///
/// `offset` is the shard's symbol offset in the full message; it only
/// matters for the schemes that hash the zero-embedded shard, where the
/// power accumulator starts at `β^offset`.
pub fn honest_shard_response(
    scheme: ProtocolScheme,
    code: &CodeParams,
    shard: ShardData<'_>,
    offset: usize,
    beta_index: usize,
) -> Result<FieldElement> {
    match (shard, code.scheme) {
        (ShardData::Symbols(symbols), CodeScheme::ReedSolomon) => {
            let rs = code.rs_code().expect("RS parameters");
            let beta = rs.eval_point(beta_index)?;
            if let Some(bad) = symbols.iter().find(|s| s.field() != beta.field()) {
                return Err(usage(format!(
                    "shard symbol over {} in a code over {}",
                    bad.field(),
                    beta.field()
                )));
            }
            if scheme.uses_embedding() {
                if offset + symbols.len() > code.k {
                    return Err(usage("shard extends past the message length"));
                }
                shard_hash(symbols, beta, offset)
            } else {
                if symbols.len() != code.k {
                    return Err(usage(format!(
                        "shard has {} symbols, code expects {}",
                        symbols.len(),
                        code.k
                    )));
                }
                Ok(eval_poly(symbols, beta))
            }
        }
        (ShardData::Integer(x), CodeScheme::Crt) => {
            if scheme.uses_embedding() {
                return Err(usage(format!(
                    "{scheme} needs a linear code; CRT is not supported"
                )));
            }
            crt_hash(&code.crt_code().expect("CRT parameters"), x, beta_index)
        }
        _ => Err(usage("shard data does not match the code scheme")),
    }
}

/// Honest answers of every server (one entry for `Single`).
pub fn honest_answers(
    scheme: ProtocolScheme,
    msg: &Message,
    code: &CodeParams,
    beta_index: usize,
) -> Result<Vec<FieldElement>> {
    if scheme == ProtocolScheme::Single {
        let whole = match code.scheme {
            CodeScheme::ReedSolomon => ShardData::Symbols(msg.symbols()?),
            CodeScheme::Crt => {
                if msg.servers() != 1 {
                    return Err(usage(
                        "single-server residue hash needs an unsharded message",
                    ));
                }
                ShardData::Integer(msg.shard_integer(0)?)
            }
        };
        return Ok(vec![honest_shard_response(
            scheme, code, whole, 0, beta_index,
        )?]);
    }
    (0..msg.servers())
        .map(|i| {
            let shard = match code.scheme {
                CodeScheme::ReedSolomon => ShardData::Symbols(msg.shard_symbols(i)?),
                CodeScheme::Crt => ShardData::Integer(msg.shard_integer(i)?),
            };
            honest_shard_response(scheme, code, shard, msg.shard_offset(i), beta_index)
        })
        .collect()
}

/// Fixed part of a token: which protocol over which code.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenHeader {
    pub scheme: ProtocolScheme,
    pub code: CodeParams,
    pub servers: usize,
    pub budget: ParityBudget,
    pub original_byte_length: u64,
}

impl TokenHeader {
    pub fn new(
        scheme: ProtocolScheme,
        code: CodeParams,
        servers: usize,
        budget: ParityBudget,
        original_byte_length: u64,
    ) -> Result<Self> {
        if servers == 0 || servers > u16::MAX as usize {
            return Err(usage("server count must be in 1..=65535"));
        }
        if budget.r > u16::MAX as usize || budget.e > u16::MAX as usize {
            return Err(usage("error/erasure budget must fit in 16 bits"));
        }
        match scheme {
            ProtocolScheme::Single if servers != 1 => {
                return Err(usage("single-server scheme with more than one server"))
            }
            ProtocolScheme::Linear | ProtocolScheme::RsParity if code.scheme == CodeScheme::Crt => {
                return Err(usage(format!(
                    "{scheme} needs a linear code; CRT is not supported"
                )))
            }
            _ => {}
        }
        if scheme == ProtocolScheme::RsParity {
            if budget.r > servers || budget.e > servers {
                return Err(usage(
                    "error and erasure budgets cannot exceed the server count",
                ));
            }
            let ell = 2 * budget.r + budget.e + servers;
            let q = code.field().expect("RS code").modulus();
            if ell as u64 > q {
                return Err(usage(format!(
                    "parity block length {ell} exceeds field size {q}"
                )));
            }
        } else if budget != ParityBudget::default() {
            return Err(usage(format!("{scheme} takes no error/erasure budget")));
        }
        Ok(TokenHeader {
            scheme,
            code,
            servers,
            budget,
            original_byte_length,
        })
    }

    /// Block length of the parity code, `2r + e + s`.
    pub fn parity_block_len(&self) -> usize {
        2 * self.budget.r + self.budget.e + self.servers
    }

    /// Number of stored symbols per record.
    pub fn payload_len(&self) -> usize {
        match self.scheme {
            ProtocolScheme::Single | ProtocolScheme::Linear => 1,
            ProtocolScheme::Trivial => self.servers,
            ProtocolScheme::RsParity => 2 * self.budget.r + self.budget.e,
        }
    }

    fn check_message(&self, msg: &Message) -> Result<()> {
        let expected_servers = if self.scheme == ProtocolScheme::Single {
            1
        } else {
            self.servers
        };
        if self.scheme != ProtocolScheme::Single && msg.servers() != expected_servers {
            return Err(usage(format!(
                "message is split for {} servers, token expects {}",
                msg.servers(),
                self.servers
            )));
        }
        if self.code.scheme == CodeScheme::ReedSolomon {
            let want = match self.scheme {
                ProtocolScheme::Trivial => msg.layout().shard_len,
                _ => msg.len(),
            };
            if want != self.code.k {
                return Err(usage(format!(
                    "code dimension {} does not match message length {want}",
                    self.code.k
                )));
            }
        }
        Ok(())
    }

    /// The record stored for challenge `beta_index`.
    pub fn make_record(&self, msg: &Message, beta_index: usize) -> Result<AuditRecord> {
        self.check_message(msg)?;
        let answers = honest_answers(self.scheme, msg, &self.code, beta_index)?;
        let payload = match self.scheme {
            ProtocolScheme::Single | ProtocolScheme::Trivial => answers,
            ProtocolScheme::Linear => {
                let zero = answers[0].field().zero();
                vec![answers.iter().fold(zero, |acc, &a| acc + a)]
            }
            ProtocolScheme::RsParity => {
                systematic_rs_encode(&answers, self.parity_block_len())?.split_off(self.servers)
            }
        };
        Ok(AuditRecord {
            beta: beta_index as u32,
            consumed: false,
            payload,
        })
    }
}

/// One stored challenge and what the client kept for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditRecord {
    pub beta: u32,
    pub consumed: bool,
    pub payload: Vec<FieldElement>,
}

/// A single-use audit: header plus one record.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditToken {
    pub header: TokenHeader,
    pub record: AuditRecord,
}

impl AuditToken {
    pub fn beta(&self) -> usize {
        self.record.beta as usize
    }

    pub fn scheme(&self) -> ProtocolScheme {
        self.header.scheme
    }
}

/// A server's reply to a challenge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reply {
    Answer(FieldElement),
    NoResponse,
}

impl Reply {
    pub fn answer(&self) -> Option<FieldElement> {
        match self {
            Reply::Answer(a) => Some(*a),
            Reply::NoResponse => None,
        }
    }
}

/// Outcome of verifying one audit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuditVerdict {
    /// Accept/reject bit; `failed` lists servers known to be wrong
    /// (always empty for `Linear`, which cannot tell).
    Bit { pass: bool, failed: Vec<usize> },
    /// Parity scheme decoded: wrong answers at `cheaters`, silence at
    /// `erased`. Disjoint by construction.
    Located {
        cheaters: Vec<usize>,
        erased: Vec<usize>,
    },
    /// More misbehaviour than the error/erasure budget covers.
    DecodingFailure { erased: Vec<usize> },
}

impl AuditVerdict {
    /// Accept: the bit is 1, or decoding found no wrong answers.
    pub fn passed(&self) -> bool {
        match self {
            AuditVerdict::Bit { pass, .. } => *pass,
            AuditVerdict::Located { cheaters, .. } => cheaters.is_empty(),
            AuditVerdict::DecodingFailure { .. } => false,
        }
    }
}

fn fmt_set(v: &[usize]) -> String {
    let items: Vec<String> = v.iter().map(ToString::to_string).collect();
    items.join(",")
}

impl fmt::Display for AuditVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuditVerdict::Bit { pass, failed } => write!(
                f,
                "verdict={} failed={}",
                if *pass { "PASS" } else { "FAIL" },
                fmt_set(failed)
            ),
            AuditVerdict::Located { cheaters, erased } => write!(
                f,
                "verdict={} cheaters={} erased={}",
                if cheaters.is_empty() { "PASS" } else { "FAIL" },
                fmt_set(cheaters),
                fmt_set(erased)
            ),
            AuditVerdict::DecodingFailure { erased } => {
                write!(f, "verdict=DECODING_FAILURE erased={}", fmt_set(erased))
            }
        }
    }
}

/// Everything needed to turn a byte string into shards and a token.
#[derive(Debug, Clone, PartialEq)]
pub struct StorePlan {
    pub scheme: ProtocolScheme,
    pub code: CodeScheme,
    pub epsilon: f64,
    pub servers: usize,
    pub budget: ParityBudget,
    /// Field size for RS codes; ignored for CRT.
    pub modulus: u64,
    pub seed: u64,
    pub audits: usize,
}

impl Default for StorePlan {
    fn default() -> Self {
        StorePlan {
            scheme: ProtocolScheme::Single,
            code: CodeScheme::ReedSolomon,
            epsilon: 0.5,
            servers: 1,
            budget: ParityBudget::default(),
            modulus: crate::field::DEFAULT_MODULUS,
            seed: 0,
            audits: DEFAULT_AUDITS,
        }
    }
}

/// Packs `data`, picks code parameters with `n = ⌈k/ε²⌉` and generates
/// the token bundle.
///
/// RS messages use `⌊log₂ q⌋` bits per symbol; `k` is the whole message
/// (the shard length for `Trivial`). CRT messages are split into byte
/// chunks and `k` is the number of primes whose product covers a chunk.
pub fn prepare(data: &[u8], plan: &StorePlan) -> Result<(Message, TokenBundle)> {
    if plan.scheme == ProtocolScheme::Single && plan.servers != 1 {
        return Err(usage("the single-server scheme takes exactly one server"));
    }
    let (msg, code) = match plan.code {
        CodeScheme::ReedSolomon => {
            let field = crate::field::PrimeField::new(plan.modulus)?;
            let msg = Message::pack_bytes(data, field, plan.servers)?;
            let k = if plan.scheme == ProtocolScheme::Trivial {
                msg.layout().shard_len
            } else {
                msg.len()
            };
            (
                msg.clone(),
                crate::codes::choose_params_in_field(k, plan.epsilon, plan.modulus)?,
            )
        }
        CodeScheme::Crt => {
            let msg = Message::integers_from_bytes(data, plan.servers)?;
            let k = crate::codes::crt_dimension_for_bytes(msg.layout().shard_len);
            (
                msg,
                crate::codes::choose_params(k, plan.epsilon, CodeScheme::Crt)?,
            )
        }
    };
    let header = TokenHeader::new(
        plan.scheme,
        code,
        plan.servers,
        plan.budget,
        data.len() as u64,
    )?;
    let bundle = TokenBundle::generate(header, &msg, plan.seed, plan.audits)?;
    Ok((msg, bundle))
}

fn single_record_bundle(header: TokenHeader, msg: &Message, seed: u64) -> Result<AuditToken> {
    let mut bundle = TokenBundle::generate(header, msg, seed, 1)?;
    Ok(AuditToken {
        header: bundle.header.clone(),
        record: bundle.records.remove(0),
    })
}

/// Single server: keep `(β, H(x)_β)`.
pub fn preprocess_single(msg: &Message, code: &CodeParams, seed: u64) -> Result<AuditToken> {
    let header = TokenHeader::new(
        ProtocolScheme::Single,
        code.clone(),
        1,
        ParityBudget::default(),
        msg.original_byte_length(),
    )?;
    single_record_bundle(header, msg, seed)
}

/// `s` servers, one hash per shard under a shared `β`. `code` is over the
/// shard length.
pub fn preprocess_trivial(msg: &Message, code: &CodeParams, seed: u64) -> Result<AuditToken> {
    let header = TokenHeader::new(
        ProtocolScheme::Trivial,
        code.clone(),
        msg.servers(),
        ParityBudget::default(),
        msg.original_byte_length(),
    )?;
    single_record_bundle(header, msg, seed)
}

/// `s` servers, one hash of the whole message; needs a linear (RS) code.
pub fn preprocess_linear(msg: &Message, code: &CodeParams, seed: u64) -> Result<AuditToken> {
    let header = TokenHeader::new(
        ProtocolScheme::Linear,
        code.clone(),
        msg.servers(),
        ParityBudget::default(),
        msg.original_byte_length(),
    )?;
    single_record_bundle(header, msg, seed)
}

/// `s` servers, keep the `2r + e` parity symbols of the systematic RS
/// encoding of the per-server hashes.
pub fn preprocess_rs_parity(
    msg: &Message,
    code: &CodeParams,
    budget: ParityBudget,
    seed: u64,
) -> Result<AuditToken> {
    let header = TokenHeader::new(
        ProtocolScheme::RsParity,
        code.clone(),
        msg.servers(),
        budget,
        msg.original_byte_length(),
    )?;
    single_record_bundle(header, msg, seed)
}

fn require(token: &AuditToken, scheme: ProtocolScheme) -> Result<()> {
    if token.scheme() != scheme {
        return Err(usage(format!(
            "token is for {}, not {scheme}",
            token.scheme()
        )));
    }
    Ok(())
}

fn require_arity(token: &AuditToken, replies: &[Reply]) -> Result<()> {
    if replies.len() != token.header.servers {
        return Err(Error::Protocol(format!(
            "expected {} replies, got {}",
            token.header.servers,
            replies.len()
        )));
    }
    Ok(())
}

pub fn verify_single(token: &AuditToken, answer: FieldElement) -> Result<bool> {
    require(token, ProtocolScheme::Single)?;
    Ok(token.record.payload[0] == answer)
}

/// Every answer must match its shard hash; silence counts as a failure
/// of that server.
pub fn verify_trivial(token: &AuditToken, replies: &[Reply]) -> Result<AuditVerdict> {
    require(token, ProtocolScheme::Trivial)?;
    require_arity(token, replies)?;
    let failed: Vec<usize> = replies
        .iter()
        .zip(&token.record.payload)
        .enumerate()
        .filter_map(|(i, (reply, gamma))| (reply.answer() != Some(*gamma)).then_some(i))
        .collect();
    Ok(AuditVerdict::Bit {
        pass: failed.is_empty(),
        failed,
    })
}

/// Accept iff the answers sum to the stored hash. Every server must reply.
pub fn verify_linear(token: &AuditToken, replies: &[Reply]) -> Result<AuditVerdict> {
    require(token, ProtocolScheme::Linear)?;
    require_arity(token, replies)?;
    let gamma = token.record.payload[0];
    let mut sum = gamma.field().zero();
    for (i, reply) in replies.iter().enumerate() {
        let a = reply.answer().ok_or_else(|| {
            Error::Protocol(format!(
                "linear scheme requires full responses; server {i} is silent"
            ))
        })?;
        sum = sum
            .try_add(a)
            .map_err(|_| Error::Protocol(format!("server {i} answered over the wrong field")))?;
    }
    Ok(AuditVerdict::Bit {
        pass: sum == gamma,
        failed: Vec::new(),
    })
}

/// Builds the received word (answers or erasures, then the stored
/// parity) and decodes it. Wrong answers are located exactly as long as
/// at most `r` servers lie and at most `e` stay silent.
pub fn verify_rs_parity(token: &AuditToken, replies: &[Reply]) -> Result<AuditVerdict> {
    require(token, ProtocolScheme::RsParity)?;
    require_arity(token, replies)?;
    let field = token.header.code.field().expect("RS code");
    let erased: Vec<usize> = replies
        .iter()
        .enumerate()
        .filter_map(|(i, r)| (*r == Reply::NoResponse).then_some(i))
        .collect();
    if erased.len() > token.header.budget.e {
        return Ok(AuditVerdict::DecodingFailure { erased });
    }
    let mut positions: Vec<Option<FieldElement>> =
        Vec::with_capacity(token.header.parity_block_len());
    for (i, reply) in replies.iter().enumerate() {
        match reply.answer() {
            Some(a) if a.field() != field => {
                return Err(Error::Protocol(format!(
                    "server {i} answered over the wrong field"
                )))
            }
            a => positions.push(a),
        }
    }
    positions.extend(token.record.payload.iter().copied().map(Some));
    let word = ReceivedWord::new(positions, token.header.servers)?;
    match decode_errors_erasures(&word) {
        Ok(decoded) if decoded.errors.iter().all(|&i| i < token.header.servers) => {
            Ok(AuditVerdict::Located {
                cheaters: decoded.errors,
                erased,
            })
        }
        Ok(_) | Err(Error::DecodingFailure) => Ok(AuditVerdict::DecodingFailure { erased }),
        Err(e) => Err(e),
    }
}

/// Dispatches on the token's scheme.
pub fn verify(token: &AuditToken, replies: &[Reply]) -> Result<AuditVerdict> {
    match token.scheme() {
        ProtocolScheme::Single => {
            require_arity(token, replies)?;
            let pass = match replies[0] {
                Reply::Answer(a) => verify_single(token, a)?,
                Reply::NoResponse => false,
            };
            Ok(AuditVerdict::Bit {
                pass,
                failed: if pass { vec![] } else { vec![0] },
            })
        }
        ProtocolScheme::Trivial => verify_trivial(token, replies),
        ProtocolScheme::Linear => verify_linear(token, replies),
        ProtocolScheme::RsParity => verify_rs_parity(token, replies),
    }
}
