//! Token bundles and their on-disk format.
//!
//! Layout (v1, all integers little-endian):
//!
//! ```text
//! "STEN" | 0x01 | scheme u8 | code params (17) | s u16 | r u16 | e u16
//!        | t u16 | original_byte_length u64
//! t × [ β u32 | consumed u8 | payload symbols ]
//! ```
//!
//! Payload symbols are field elements padded to the byte width of the
//! largest alphabet of the code (`q` for RS, `p_n` for CRT). Their count is
//! fixed by the scheme: 1 (single, linear), `s` (trivial) or `2r + e`
//! (parity).

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{AuditRecord, AuditToken, ChallengeRng, ParityBudget, ProtocolScheme, TokenHeader};
use crate::codes::{CodeParams, Message, CODE_PARAMS_LEN};
use crate::error::{format_err, usage, Error, Result};
use crate::field::byte_width;

pub const MAGIC: &[u8; 4] = b"STEN";
pub const VERSION: u8 = 0x01;
pub const DEFAULT_AUDITS: usize = 16;

const HEADER_LEN: usize = 4 + 1 + 1 + CODE_PARAMS_LEN + 2 * 4 + 8;

/// `t` independent single-use audits sharing one header.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenBundle {
    pub header: TokenHeader,
    pub records: Vec<AuditRecord>,
}

impl TokenBundle {
    /// Draws `audits` challenges from `seed` and stores what each needs.
    /// The header's code is stored in canonical form so that a file
    /// round-trip is the identity.
    pub fn generate(
        mut header: TokenHeader,
        msg: &Message,
        seed: u64,
        audits: usize,
    ) -> Result<Self> {
        if audits == 0 || audits > u16::MAX as usize {
            return Err(usage("audit count must be in 1..=65535"));
        }
        header.code = header.code.canonical();
        let mut rng = ChallengeRng::new(seed);
        let records = (0..audits)
            .map(|_| header.make_record(msg, rng.index(header.code.n as u64) as usize))
            .collect::<Result<_>>()?;
        Ok(TokenBundle { header, records })
    }

    /// Bundle whose challenges are given explicitly.
    pub fn with_challenges(
        mut header: TokenHeader,
        msg: &Message,
        betas: &[usize],
    ) -> Result<Self> {
        header.code = header.code.canonical();
        if let Some(&b) = betas.iter().find(|&&b| b >= header.code.n) {
            return Err(usage(format!(
                "challenge index {b} >= n = {}",
                header.code.n
            )));
        }
        let records = betas
            .iter()
            .map(|&b| header.make_record(msg, b))
            .collect::<Result<_>>()?;
        Ok(TokenBundle { header, records })
    }

    pub fn remaining(&self) -> usize {
        self.records.iter().filter(|r| !r.consumed).count()
    }

    /// Marks the first unconsumed record as used and returns it.
    pub fn take_next(&mut self) -> Result<AuditToken> {
        let record = self
            .records
            .iter_mut()
            .find(|r| !r.consumed)
            .ok_or(Error::TokensExhausted)?;
        record.consumed = true;
        let mut record = record.clone();
        record.consumed = false;
        Ok(AuditToken {
            header: self.header.clone(),
            record,
        })
    }

    /// Identifies the stored object to servers: the first 8 bytes of
    /// SHA-256 over the header and all `(β, payload)` pairs. Consumed
    /// flags are excluded so the id stays fixed across audits.
    pub fn object_id(&self) -> u64 {
        let mut h = Sha256::new();
        h.update(self.header_bytes());
        for r in &self.records {
            h.update(r.beta.to_le_bytes());
            for p in &r.payload {
                h.update(self.symbol_bytes(p.value()));
            }
        }
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }

    fn symbol_width(&self) -> usize {
        byte_width(self.header.code.max_alphabet())
    }

    fn symbol_bytes(&self, v: u64) -> Vec<u8> {
        v.to_le_bytes()[..self.symbol_width()].to_vec()
    }

    fn header_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(HEADER_LEN);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(h.scheme.to_byte());
        out.extend_from_slice(&h.code.to_bytes());
        for v in [h.servers, h.budget.r, h.budget.e, self.records.len()] {
            out.extend_from_slice(&(v as u16).to_le_bytes());
        }
        out.extend_from_slice(&h.original_byte_length.to_le_bytes());
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.header_bytes();
        for r in &self.records {
            out.extend_from_slice(&r.beta.to_le_bytes());
            out.push(r.consumed as u8);
            for p in &r.payload {
                out.extend(self.symbol_bytes(p.value()));
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(format_err("token file truncated in header"));
        }
        if &bytes[..4] != MAGIC {
            return Err(format_err("bad token magic"));
        }
        if bytes[4] != VERSION {
            return Err(format_err(format!(
                "unsupported token version {}",
                bytes[4]
            )));
        }
        let scheme = ProtocolScheme::from_byte(bytes[5])?;
        let code = CodeParams::from_bytes(&bytes[6..6 + CODE_PARAMS_LEN])?;
        let mut at = 6 + CODE_PARAMS_LEN;
        let u16_at = |at: &mut usize| {
            let v = u16::from_le_bytes([bytes[*at], bytes[*at + 1]]) as usize;
            *at += 2;
            v
        };
        let servers = u16_at(&mut at);
        let r = u16_at(&mut at);
        let e = u16_at(&mut at);
        let t = u16_at(&mut at);
        let original_byte_length = u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        at += 8;
        let header = TokenHeader::new(
            scheme,
            code,
            servers,
            ParityBudget { r, e },
            original_byte_length,
        )
        .map_err(|e| format_err(format!("inconsistent token header: {e}")))?;
        let width = byte_width(header.code.max_alphabet());
        let record_len = 5 + header.payload_len() * width;
        if bytes.len() - at != t * record_len {
            return Err(format_err(format!(
                "token body is {} bytes, expected {} records of {record_len}",
                bytes.len() - at,
                t
            )));
        }
        let mut records = Vec::with_capacity(t);
        for chunk in bytes[at..].chunks(record_len) {
            let beta = u32::from_le_bytes(chunk[..4].try_into().unwrap());
            let field = header
                .code
                .position_field(beta as usize)
                .map_err(|e| format_err(e.to_string()))?;
            let consumed = match chunk[4] {
                0 => false,
                1 => true,
                b => return Err(format_err(format!("consumed flag must be 0 or 1, got {b}"))),
            };
            let payload = chunk[5..]
                .chunks(width)
                .map(|c| {
                    let mut buf = [0u8; 8];
                    buf[..width].copy_from_slice(c);
                    let v = u64::from_le_bytes(buf);
                    if v >= field.modulus() {
                        return Err(format_err(format!(
                            "payload value {v} not reduced mod {}",
                            field.modulus()
                        )));
                    }
                    Ok(field.element(v))
                })
                .collect::<Result<_>>()?;
            records.push(AuditRecord {
                beta,
                consumed,
                payload,
            });
        }
        Ok(TokenBundle { header, records })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
