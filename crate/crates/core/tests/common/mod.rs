#![allow(dead_code)]

use std::net::TcpListener;

use sten::net::Server;
use tempfile::TempDir;

/// Honest servers on loopback, each with its own storage directory.
pub struct Cluster {
    pub endpoints: Vec<String>,
    _dirs: Vec<TempDir>,
}

pub fn spawn_servers(count: usize) -> Cluster {
    let mut endpoints = Vec::new();
    let mut dirs = Vec::new();
    for _ in 0..count {
        let dir = tempfile::tempdir().unwrap();
        let server = Server::bind("127.0.0.1:0", dir.path()).unwrap();
        endpoints.push(server.local_addr().unwrap().to_string());
        server.spawn();
        dirs.push(dir);
    }
    Cluster {
        endpoints,
        _dirs: dirs,
    }
}

/// An address nothing listens on.
pub fn dead_endpoint() -> String {
    let l = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap().to_string();
    drop(l);
    addr
}
