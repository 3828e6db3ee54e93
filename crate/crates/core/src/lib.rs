//! Storage enforcement by challenge-response audits.
//!
//! A client encodes a file with a list-decodable code, keeps a few
//! precomputed codeword symbols and later asks servers for symbols at
//! random positions. Any server that answers well enough must hold data
//! from which the file can be recovered with a short advice string.
//!
//! * [`field`]: prime fields and arbitrary-size naturals.
//! * [`codes`]: Reed-Solomon and Chinese-remainder hash codes.
//! * [`rsdecode`]: errors-and-erasures decoding for the parity scheme.
//! * [`protocol`]: the four audit schemes, tokens and verdicts.
//! * [`security`]: list extraction and the storage lower bound.
//! * [`simulate`]: misbehaving server models and pass probabilities.
//! * [`net`]: TCP framing, server and client.

pub mod codes;
pub mod error;
pub mod field;
pub mod net;
pub mod protocol;
pub mod rsdecode;
pub mod security;
pub mod simulate;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/codes.md")]
    mod codes {}
    #[doc = include_str!("../../../book/src/protocols.md")]
    mod protocols {}
    #[doc = include_str!("../../../book/src/parity.md")]
    mod parity {}
    #[doc = include_str!("../../../book/src/security.md")]
    mod security {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
}
