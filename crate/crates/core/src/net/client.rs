//! Client side: push shards, send challenges, collect replies.

use std::io::BufReader;
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use super::{StoreRequest, WireMessage};
use crate::codes::{CodeScheme, Message};
use crate::error::{usage, Error, Result};
use crate::protocol::{AuditToken, ProtocolScheme, Reply, TokenBundle};

pub const DEFAULT_TIMEOUT_MS: u64 = 5000;

/// Connects per request; every socket operation is bounded by `timeout`.
#[derive(Debug, Clone, Copy)]
pub struct Client {
    timeout: Duration,
}

impl Default for Client {
    fn default() -> Self {
        Client::new(DEFAULT_TIMEOUT_MS)
    }
}

impl Client {
    pub fn new(timeout_ms: u64) -> Self {
        Client {
            timeout: Duration::from_millis(timeout_ms.max(1)),
        }
    }

    fn connect(&self, addr: &str) -> Result<TcpStream> {
        let mut last = None;
        for sa in addr.to_socket_addrs()? {
            match TcpStream::connect_timeout(&sa, self.timeout) {
                Ok(s) => {
                    s.set_read_timeout(Some(self.timeout))?;
                    s.set_write_timeout(Some(self.timeout))?;
                    return Ok(s);
                }
                Err(e) => last = Some(e),
            }
        }
        Err(last
            .map(Error::from)
            .unwrap_or_else(|| usage(format!("{addr} resolves to no address"))))
    }

    /// Sends one message and reads one reply.
    pub fn exchange(&self, addr: &str, msg: &WireMessage) -> Result<WireMessage> {
        let mut stream = self.connect(addr)?;
        msg.write_to(&mut stream)?;
        let mut reader = BufReader::new(stream);
        match WireMessage::read_from(&mut reader)? {
            Some(WireMessage::Error(m)) => Err(Error::Protocol(format!("{addr}: {m}"))),
            Some(reply) => Ok(reply),
            None => Err(Error::Protocol(format!("{addr} closed the connection"))),
        }
    }

    pub fn store(&self, addr: &str, req: StoreRequest) -> Result<()> {
        let (object, server) = (req.object, req.server);
        match self.exchange(addr, &WireMessage::Store(req))? {
            WireMessage::StoreAck {
                object: o,
                server: s,
            } if o == object && s == server => Ok(()),
            other => Err(Error::Protocol(format!(
                "{addr}: unexpected reply {:#04x} to STORE",
                other.type_byte()
            ))),
        }
    }

    /// Challenges one server. Transport failures are errors; callers
    /// decide whether they count as silence.
    pub fn challenge(
        &self,
        addr: &str,
        token: &AuditToken,
        object: u64,
        server: u16,
    ) -> Result<Reply> {
        let field = token.header.code.position_field(token.beta())?;
        let msg = WireMessage::Challenge {
            object,
            server,
            beta: token.record.beta,
        };
        match self.exchange(addr, &msg)? {
            WireMessage::Response { server: s, element } if s == server => field
                .decode(&element)
                .map(Reply::Answer)
                .map_err(|e| Error::Protocol(format!("{addr}: {e}"))),
            WireMessage::NoResponseDeclared { server: s } if s == server => Ok(Reply::NoResponse),
            other => Err(Error::Protocol(format!(
                "{addr}: unexpected reply {:#04x} to CHALLENGE",
                other.type_byte()
            ))),
        }
    }

    /// Challenges every endpoint in order; entry `i` is server `i`.
    pub fn audit(
        &self,
        token: &AuditToken,
        object: u64,
        endpoints: &[String],
    ) -> Result<Vec<Result<Reply>>> {
        check_endpoints(token.header.servers, endpoints)?;
        Ok(endpoints
            .iter()
            .enumerate()
            .map(|(i, addr)| self.challenge(addr, token, object, i as u16))
            .collect())
    }

    /// Sends every server its shard.
    pub fn push_shards(
        &self,
        bundle: &TokenBundle,
        msg: &Message,
        endpoints: &[String],
    ) -> Result<()> {
        check_endpoints(bundle.header.servers, endpoints)?;
        for (addr, req) in endpoints.iter().zip(store_requests(bundle, msg)?) {
            self.store(addr, req)?;
        }
        Ok(())
    }
}

fn check_endpoints(servers: usize, endpoints: &[String]) -> Result<()> {
    if endpoints.len() != servers {
        return Err(usage(format!(
            "{} endpoints for {servers} servers",
            endpoints.len()
        )));
    }
    Ok(())
}

/// One `STORE` per server, carrying its shard (the whole message for the
/// single-server scheme).
pub fn store_requests(bundle: &TokenBundle, msg: &Message) -> Result<Vec<StoreRequest>> {
    let h = &bundle.header;
    let object = bundle.object_id();
    let single = h.scheme == ProtocolScheme::Single;
    (0..h.servers)
        .map(|i| {
            let shard = match h.code.scheme {
                CodeScheme::ReedSolomon => {
                    let symbols = if single {
                        msg.symbols()?
                    } else {
                        msg.shard_symbols(i)?
                    };
                    symbols.iter().flat_map(|s| s.to_bytes()).collect()
                }
                CodeScheme::Crt => msg
                    .shard_integer(i)?
                    .to_bytes_be_padded(msg.layout().shard_len)?,
            };
            Ok(StoreRequest {
                object,
                server: i as u16,
                scheme: h.scheme,
                code: h.code.clone(),
                offset: if single {
                    0
                } else {
                    msg.shard_offset(i) as u32
                },
                shard,
            })
        })
        .collect()
}
