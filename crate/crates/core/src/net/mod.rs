//! Wire protocol between a client and its storage servers.
//!
//! Every frame is `length u32 BE | type u8 | body`, where `length` counts
//! the body only. Integers inside bodies are big-endian; field elements
//! use their little-endian field serialization.
//!
//! | type | name                   | body                                                        |
//! |------|------------------------|-------------------------------------------------------------|
//! | 0x01 | `STORE`                | object u64, server u16, scheme u8, code params (17), offset u32, shard |
//! | 0x02 | `STORE_ACK`            | object u64, server u16                                      |
//! | 0x03 | `CHALLENGE`            | object u64, server u16, β u32                               |
//! | 0x04 | `RESPONSE`             | server u16, field element                                   |
//! | 0x05 | `NO_RESPONSE_DECLARED` | server u16                                                  |
//! | 0x06 | `ERROR`                | UTF-8 message                                               |
//!
//! A shard is a run of field elements (RS codes) or the big-endian bytes
//! of the shard integer (CRT codes).

mod client;
mod server;

pub use client::{store_requests, Client, DEFAULT_TIMEOUT_MS};
pub use server::Server;

use std::io::{self, Read, Write};

use crate::codes::{CodeParams, CODE_PARAMS_LEN};
use crate::error::{Error, Result};
use crate::protocol::ProtocolScheme;

/// Frames larger than this are rejected before the body is read.
pub const MAX_BODY: u32 = 1 << 26;

#[derive(Debug, Clone, PartialEq)]
pub struct StoreRequest {
    pub object: u64,
    pub server: u16,
    pub scheme: ProtocolScheme,
    pub code: CodeParams,
    /// Symbol offset of the shard in the full message.
    pub offset: u32,
    pub shard: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WireMessage {
    Store(StoreRequest),
    StoreAck { object: u64, server: u16 },
    Challenge { object: u64, server: u16, beta: u32 },
    Response { server: u16, element: Vec<u8> },
    NoResponseDeclared { server: u16 },
    Error(String),
}

fn proto(msg: impl Into<String>) -> Error {
    Error::Protocol(msg.into())
}

struct Cursor<'a> {
    buf: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(proto("frame body truncated"));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn rest(&mut self) -> &'a [u8] {
        std::mem::take(&mut self.buf)
    }

    fn done(&self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(proto("trailing bytes in frame body"))
        }
    }
}

impl WireMessage {
    pub fn type_byte(&self) -> u8 {
        match self {
            WireMessage::Store(_) => 0x01,
            WireMessage::StoreAck { .. } => 0x02,
            WireMessage::Challenge { .. } => 0x03,
            WireMessage::Response { .. } => 0x04,
            WireMessage::NoResponseDeclared { .. } => 0x05,
            WireMessage::Error(_) => 0x06,
        }
    }

    pub fn body(&self) -> Vec<u8> {
        let mut b = Vec::new();
        match self {
            WireMessage::Store(s) => {
                b.extend(s.object.to_be_bytes());
                b.extend(s.server.to_be_bytes());
                b.push(s.scheme.to_byte());
                b.extend(s.code.to_bytes());
                b.extend(s.offset.to_be_bytes());
                b.extend(&s.shard);
            }
            WireMessage::StoreAck { object, server } => {
                b.extend(object.to_be_bytes());
                b.extend(server.to_be_bytes());
            }
            WireMessage::Challenge {
                object,
                server,
                beta,
            } => {
                b.extend(object.to_be_bytes());
                b.extend(server.to_be_bytes());
                b.extend(beta.to_be_bytes());
            }
            WireMessage::Response { server, element } => {
                b.extend(server.to_be_bytes());
                b.extend(element);
            }
            WireMessage::NoResponseDeclared { server } => b.extend(server.to_be_bytes()),
            WireMessage::Error(m) => b.extend(m.as_bytes()),
        }
        b
    }

    pub fn encode(&self) -> Vec<u8> {
        let body = self.body();
        let mut out = Vec::with_capacity(5 + body.len());
        out.extend((body.len() as u32).to_be_bytes());
        out.push(self.type_byte());
        out.extend(body);
        out
    }

    pub fn decode_body(kind: u8, body: &[u8]) -> Result<Self> {
        let mut c = Cursor { buf: body };
        let msg = match kind {
            0x01 => {
                let object = c.u64()?;
                let server = c.u16()?;
                let scheme =
                    ProtocolScheme::from_byte(c.take(1)?[0]).map_err(|e| proto(e.to_string()))?;
                let code = CodeParams::from_bytes(c.take(CODE_PARAMS_LEN)?)
                    .map_err(|e| proto(e.to_string()))?;
                let offset = c.u32()?;
                WireMessage::Store(StoreRequest {
                    object,
                    server,
                    scheme,
                    code,
                    offset,
                    shard: c.rest().to_vec(),
                })
            }
            0x02 => WireMessage::StoreAck {
                object: c.u64()?,
                server: c.u16()?,
            },
            0x03 => WireMessage::Challenge {
                object: c.u64()?,
                server: c.u16()?,
                beta: c.u32()?,
            },
            0x04 => WireMessage::Response {
                server: c.u16()?,
                element: c.rest().to_vec(),
            },
            0x05 => WireMessage::NoResponseDeclared { server: c.u16()? },
            0x06 => WireMessage::Error(
                String::from_utf8(c.rest().to_vec())
                    .map_err(|_| proto("error text is not UTF-8"))?,
            ),
            other => return Err(proto(format!("unknown message type {other:#04x}"))),
        };
        c.done()?;
        Ok(msg)
    }

    /// Decodes exactly one frame.
    pub fn decode(frame: &[u8]) -> Result<Self> {
        if frame.len() < 5 {
            return Err(proto("frame shorter than its header"));
        }
        let len = u32::from_be_bytes(frame[..4].try_into().unwrap()) as usize;
        if frame.len() - 5 != len {
            return Err(proto(format!(
                "length field {len} disagrees with body of {}",
                frame.len() - 5
            )));
        }
        Self::decode_body(frame[4], &frame[5..])
    }

    /// Reads one frame; `Ok(None)` on a clean end of stream before the
    /// first byte.
    pub fn read_from(r: &mut impl Read) -> Result<Option<Self>> {
        let mut head = [0u8; 5];
        let mut got = 0;
        while got < head.len() {
            match r.read(&mut head[got..]) {
                Ok(0) if got == 0 => return Ok(None),
                Ok(0) => return Err(proto("connection closed inside a frame header")),
                Ok(n) => got += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        let len = u32::from_be_bytes(head[..4].try_into().unwrap());
        if len > MAX_BODY {
            return Err(proto(format!(
                "frame body of {len} bytes exceeds the limit"
            )));
        }
        let mut body = vec![0u8; len as usize];
        r.read_exact(&mut body).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => proto("connection closed inside a frame body"),
            _ => e.into(),
        })?;
        Self::decode_body(head[4], &body).map(Some)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&self.encode())?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn response_layout() {
        let m = WireMessage::Response {
            server: 3,
            element: vec![0x10, 0x00],
        };
        assert_eq!(m.encode(), vec![0, 0, 0, 4, 0x04, 0, 3, 0x10, 0x00]);
    }

    #[test]
    fn malformed_frames() {
        assert!(WireMessage::decode(&[0, 0, 0, 0]).is_err());
        assert!(WireMessage::decode(&[0, 0, 0, 0, 0x07]).is_err());
        assert!(WireMessage::decode(&[0, 0, 0, 2, 0x05, 0]).is_err());
        assert!(WireMessage::decode(&[0, 0, 0, 3, 0x05, 0, 1, 2]).is_err());
        let mut r: &[u8] = &[0, 0, 0, 9, 0x03, 1];
        assert!(WireMessage::read_from(&mut r).is_err());
        let mut r: &[u8] = &[];
        assert!(WireMessage::read_from(&mut r).unwrap().is_none());
        let mut r: &[u8] = &[0xff, 0xff, 0xff, 0xff, 0x06];
        assert!(WireMessage::read_from(&mut r).is_err());
    }

    fn any_message() -> impl Strategy<Value = WireMessage> {
        let bytes = || proptest::collection::vec(any::<u8>(), 0..64);
        let code = (1usize..8, 0usize..8).prop_map(|(k, extra)| {
            CodeParams::reed_solomon(k, k + extra, 17)
                .unwrap()
                .canonical()
        });
        prop_oneof![
            (
                any::<u64>(),
                any::<u16>(),
                1u8..5,
                code,
                any::<u32>(),
                bytes()
            )
                .prop_map(|(object, server, s, code, offset, shard)| {
                    WireMessage::Store(StoreRequest {
                        object,
                        server,
                        scheme: ProtocolScheme::from_byte(s).unwrap(),
                        code,
                        offset,
                        shard,
                    })
                }),
            (any::<u64>(), any::<u16>())
                .prop_map(|(object, server)| WireMessage::StoreAck { object, server }),
            (any::<u64>(), any::<u16>(), any::<u32>()).prop_map(|(object, server, beta)| {
                WireMessage::Challenge {
                    object,
                    server,
                    beta,
                }
            }),
            (any::<u16>(), bytes())
                .prop_map(|(server, element)| WireMessage::Response { server, element }),
            any::<u16>().prop_map(|server| WireMessage::NoResponseDeclared { server }),
            ".{0,40}".prop_map(WireMessage::Error),
        ]
    }

    proptest! {
        #[test]
        fn round_trip(m in any_message()) {
            let frame = m.encode();
            prop_assert_eq!(WireMessage::decode(&frame).unwrap(), m.clone());
            let mut r: &[u8] = &frame;
            prop_assert_eq!(WireMessage::read_from(&mut r).unwrap(), Some(m));
        }

        #[test]
        fn garbage_never_panics(frame in proptest::collection::vec(any::<u8>(), 0..80)) {
            let _ = WireMessage::decode(&frame);
        }
    }
}
