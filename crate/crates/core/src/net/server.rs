//! An honest storage server: keeps what it is sent and answers challenges.

use std::fs;
use std::io::BufReader;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::thread::{self, JoinHandle};

use super::{StoreRequest, WireMessage};
use crate::codes::{CodeParams, CodeScheme, CODE_PARAMS_LEN};
use crate::error::{Error, Result};
use crate::field::{BigNat, FieldElement};
use crate::protocol::{honest_shard_response, ProtocolScheme, ShardData};

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

pub struct Server {
    listener: TcpListener,
    dir: PathBuf,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Server {
            listener: TcpListener::bind(addr)?,
            dir,
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts connections forever, one thread each.
    pub fn run(self) -> Result<()> {
        for stream in self.listener.incoming() {
            let stream = stream?;
            let dir = self.dir.clone();
            thread::spawn(move || {
                let _ = handle(stream, &dir);
            });
        }
        Ok(())
    }

    /// Runs the accept loop on a background thread.
    pub fn spawn(self) -> JoinHandle<Result<()>> {
        thread::spawn(move || self.run())
    }
}

fn shard_path(dir: &Path, object: u64, server: u16) -> PathBuf {
    dir.join(format!("{object:016x}-{server}.shard"))
}

fn handle(stream: TcpStream, dir: &Path) -> Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    loop {
        let msg = match WireMessage::read_from(&mut reader) {
            Ok(Some(m)) => m,
            Ok(None) => return Ok(()),
            Err(e) => {
                let _ = WireMessage::Error(e.to_string()).write_to(&mut writer);
                return Err(e);
            }
        };
        let reply = match msg {
            WireMessage::Store(req) => store(dir, &req),
            WireMessage::Challenge {
                object,
                server,
                beta,
            } => respond(dir, object, server, beta),
            other => Err(Error::Protocol(format!(
                "unexpected message type {:#04x}",
                other.type_byte()
            ))),
        };
        match reply {
            Ok(m) => m.write_to(&mut writer)?,
            Err(e) => {
                WireMessage::Error(e.to_string()).write_to(&mut writer)?;
                if matches!(e, Error::Protocol(_)) {
                    return Ok(());
                }
            }
        }
    }
}

fn store(dir: &Path, req: &StoreRequest) -> Result<WireMessage> {
    decode_shard(req.scheme, &req.code, &req.shard)?;
    let mut data = Vec::with_capacity(1 + CODE_PARAMS_LEN + 4 + req.shard.len());
    data.push(req.scheme.to_byte());
    data.extend(req.code.to_bytes());
    data.extend(req.offset.to_be_bytes());
    data.extend(&req.shard);
    let tmp = dir.join(format!(
        ".{}-{}.tmp",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    fs::write(&tmp, &data)?;
    fs::rename(&tmp, shard_path(dir, req.object, req.server))?;
    Ok(WireMessage::StoreAck {
        object: req.object,
        server: req.server,
    })
}

enum Shard {
    Symbols(Vec<FieldElement>),
    Integer(BigNat),
}

fn decode_shard(scheme: ProtocolScheme, code: &CodeParams, bytes: &[u8]) -> Result<Shard> {
    let bad = |m: String| Error::Protocol(m);
    match code.scheme {
        CodeScheme::ReedSolomon => {
            let f = code.field().expect("RS code");
            let w = f.byte_width();
            if !bytes.len().is_multiple_of(w) {
                return Err(bad(format!(
                    "shard length {} is not a multiple of {w}",
                    bytes.len()
                )));
            }
            let symbols = bytes
                .chunks(w)
                .map(|c| f.decode(c))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| bad(e.to_string()))?;
            Ok(Shard::Symbols(symbols))
        }
        CodeScheme::Crt if scheme.uses_embedding() => {
            Err(bad(format!("{scheme} is not defined over CRT codes")))
        }
        CodeScheme::Crt => Ok(Shard::Integer(BigNat::from_bytes_be(bytes))),
    }
}

fn respond(dir: &Path, object: u64, server: u16, beta: u32) -> Result<WireMessage> {
    let data = match fs::read(shard_path(dir, object, server)) {
        Ok(d) => d,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::Usage("not stored".into()))
        }
        Err(e) => return Err(e.into()),
    };
    if data.len() < 1 + CODE_PARAMS_LEN + 4 {
        return Err(Error::Format("stored shard file is truncated".into()));
    }
    let scheme = ProtocolScheme::from_byte(data[0])?;
    let code = CodeParams::from_bytes(&data[1..1 + CODE_PARAMS_LEN])?;
    let at = 1 + CODE_PARAMS_LEN;
    let offset = u32::from_be_bytes(data[at..at + 4].try_into().unwrap()) as usize;
    let shard = decode_shard(scheme, &code, &data[at + 4..])?;
    let view = match &shard {
        Shard::Symbols(s) => ShardData::Symbols(s),
        Shard::Integer(x) => ShardData::Integer(x),
    };
    let answer = honest_shard_response(scheme, &code, view, offset, beta as usize)?;
    Ok(WireMessage::Response {
        server,
        element: answer.to_bytes(),
    })
}
