//! `extend --replay` must never touch the network, even when live endpoints
//! are configured through the environment.

mod common;

use std::io::ErrorKind;
use std::net::TcpListener;

use heritage_kg::cli::{main_with_args, ENV_TEXT_ENDPOINT, ENV_VISION_ENDPOINT};

use common::fixtures;

#[test]
fn replay_mode_opens_no_connections() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let endpoint = format!("http://{}/v1/generate", listener.local_addr().unwrap());
    std::env::set_var(ENV_TEXT_ENDPOINT, &endpoint);
    std::env::set_var(ENV_VISION_ENDPOINT, &endpoint);

    let out = tempfile::tempdir().unwrap();
    let f = |rel: &str| fixtures().join(rel).display().to_string();
    let code = main_with_args([
        "heritage-kg".to_owned(),
        "--log-level".into(),
        "off".into(),
        "--out".into(),
        out.path().display().to_string(),
        "extend".into(),
        "--dataset-dir".into(),
        f("extend"),
        "--relation".into(),
        "depicts".into(),
        "--vectors".into(),
        f("extend/vectors.txt"),
        "--replay".into(),
        f("extend/replay"),
    ]);
    assert_eq!(code, 0);
    match listener.accept() {
        Err(e) if e.kind() == ErrorKind::WouldBlock => {}
        Ok((_, peer)) => panic!("replay run connected to the live endpoint from {peer}"),
        Err(e) => panic!("listener failed: {e}"),
    }
    let golden = std::fs::read(fixtures().join("golden/audit.csv")).unwrap();
    assert_eq!(std::fs::read(out.path().join("audit.csv")).unwrap(), golden);
}
