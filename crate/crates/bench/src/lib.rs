//! Shared fixtures for the benchmarks.

use std::path::PathBuf;

use orbitmeter::rtm::{parse_rtm_spec, RtmSpec};

pub fn corpus_spec(name: &str) -> RtmSpec {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    let text = std::fs::read_to_string(&path).expect("corpus file");
    parse_rtm_spec(&text).expect("corpus file parses")
}
