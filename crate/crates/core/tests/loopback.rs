mod common;

use std::io::{Read, Write};
use std::net::TcpStream;
use std::thread;

use common::{dead_endpoint, spawn_servers};
use sten::codes::CodeScheme;
use sten::net::{Client, WireMessage};
use sten::protocol::{
    prepare, verify, AuditVerdict, ParityBudget, ProtocolScheme, Reply, StorePlan,
};
use sten::Error;

fn data(len: usize, salt: u8) -> Vec<u8> {
    (0..len)
        .map(|i| (i as u8).wrapping_mul(151).wrapping_add(salt))
        .collect()
}

fn plan(scheme: ProtocolScheme, code: CodeScheme, servers: usize) -> StorePlan {
    StorePlan {
        scheme,
        code,
        servers,
        budget: if scheme == ProtocolScheme::RsParity {
            ParityBudget { r: 1, e: 1 }
        } else {
            ParityBudget::default()
        },
        seed: 7,
        audits: 4,
        ..StorePlan::default()
    }
}

fn replies(results: Vec<sten::Result<Reply>>) -> Vec<Reply> {
    results
        .into_iter()
        .map(|r| r.unwrap_or(Reply::NoResponse))
        .collect()
}

#[test]
fn every_scheme_passes_end_to_end() {
    let client = Client::new(2000);
    let cases = [
        (ProtocolScheme::Single, CodeScheme::ReedSolomon, 1),
        (ProtocolScheme::Single, CodeScheme::Crt, 1),
        (ProtocolScheme::Trivial, CodeScheme::ReedSolomon, 3),
        (ProtocolScheme::Trivial, CodeScheme::Crt, 3),
        (ProtocolScheme::Linear, CodeScheme::ReedSolomon, 3),
        (ProtocolScheme::RsParity, CodeScheme::ReedSolomon, 4),
    ];
    for (scheme, code, s) in cases {
        let cluster = spawn_servers(s);
        let bytes = data(100, s as u8);
        let (msg, mut bundle) = prepare(&bytes, &plan(scheme, code, s)).unwrap();
        client
            .push_shards(&bundle, &msg, &cluster.endpoints)
            .unwrap();
        let object = bundle.object_id();
        while bundle.remaining() > 0 {
            let token = bundle.take_next().unwrap();
            let got = replies(client.audit(&token, object, &cluster.endpoints).unwrap());
            let verdict = verify(&token, &got).unwrap();
            assert!(verdict.passed(), "{scheme} over {code}: {verdict}");
        }
        assert!(matches!(bundle.take_next(), Err(Error::TokensExhausted)));
    }
}

#[test]
fn parity_with_one_endpoint_down() {
    let client = Client::new(1000);
    let cluster = spawn_servers(4);
    let (msg, mut bundle) = prepare(
        &data(64, 1),
        &plan(ProtocolScheme::RsParity, CodeScheme::ReedSolomon, 4),
    )
    .unwrap();
    client
        .push_shards(&bundle, &msg, &cluster.endpoints)
        .unwrap();
    let mut endpoints = cluster.endpoints.clone();
    endpoints[1] = dead_endpoint();
    let token = bundle.take_next().unwrap();
    let got = replies(
        client
            .audit(&token, bundle.object_id(), &endpoints)
            .unwrap(),
    );
    assert_eq!(got[1], Reply::NoResponse);
    assert_eq!(
        verify(&token, &got).unwrap(),
        AuditVerdict::Located {
            cheaters: vec![],
            erased: vec![1]
        }
    );
}

#[test]
fn challenge_before_store_is_an_error() {
    let cluster = spawn_servers(1);
    let reply = Client::new(1000).exchange(
        &cluster.endpoints[0],
        &WireMessage::Challenge {
            object: 42,
            server: 0,
            beta: 0,
        },
    );
    match reply {
        Err(Error::Protocol(m)) => assert!(m.contains("not stored"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_frame_gets_error_and_close() {
    let cluster = spawn_servers(1);
    let mut s = TcpStream::connect(&cluster.endpoints[0]).unwrap();
    s.write_all(&[0, 0, 0, 1, 0x09, 0]).unwrap();
    let mut buf = Vec::new();
    s.read_to_end(&mut buf).unwrap();
    assert!(matches!(
        WireMessage::decode(&buf),
        Ok(WireMessage::Error(_))
    ));
}

#[test]
fn concurrent_clients_are_isolated() {
    let cluster = spawn_servers(2);
    let handles: Vec<_> = (0..4u8)
        .map(|salt| {
            let endpoints = cluster.endpoints.clone();
            thread::spawn(move || {
                let client = Client::new(2000);
                let mut p = plan(ProtocolScheme::Trivial, CodeScheme::ReedSolomon, 2);
                p.seed = salt as u64;
                let (msg, mut bundle) = prepare(&data(40 + salt as usize, salt), &p).unwrap();
                client.push_shards(&bundle, &msg, &endpoints).unwrap();
                let object = bundle.object_id();
                while bundle.remaining() > 0 {
                    let token = bundle.take_next().unwrap();
                    let got = replies(client.audit(&token, object, &endpoints).unwrap());
                    assert!(verify(&token, &got).unwrap().passed());
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
}

#[test]
fn restore_overwrites() {
    let client = Client::new(1000);
    let cluster = spawn_servers(1);
    let p = plan(ProtocolScheme::Single, CodeScheme::ReedSolomon, 1);
    let (msg, mut bundle) = prepare(&data(30, 3), &p).unwrap();
    client
        .push_shards(&bundle, &msg, &cluster.endpoints)
        .unwrap();
    client
        .push_shards(&bundle, &msg, &cluster.endpoints)
        .unwrap();
    let token = bundle.take_next().unwrap();
    let got = replies(
        client
            .audit(&token, bundle.object_id(), &cluster.endpoints)
            .unwrap(),
    );
    assert!(verify(&token, &got).unwrap().passed());
}
