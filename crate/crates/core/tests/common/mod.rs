#![allow(dead_code)]

use std::path::PathBuf;

use orbitmeter::rtm::{parse_rtm_spec, RtmSpec};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn load(name: &str) -> RtmSpec {
    let text = std::fs::read_to_string(corpus_dir().join(name)).expect("corpus file");
    parse_rtm_spec(&text).expect("corpus file parses")
}

pub const MACHINES: [&str; 4] = ["halt.rtm", "flip.rtm", "xor.rtm", "walker.rtm"];

/// (machine, input, f(x)) for every bundled instance.
pub const INSTANCES: [(&str, &str, u8); 8] = [
    ("halt.rtm", "0", 0),
    ("halt.rtm", "1", 1),
    ("flip.rtm", "1", 0),
    ("flip.rtm", "0", 1),
    ("xor.rtm", "11", 0),
    ("xor.rtm", "01", 1),
    ("walker.rtm", "101", 0),
    ("walker.rtm", "100", 1),
];

/// `(r, s, d)` for an instance: `r` from the orbit-length formula with
/// `f = 0`, `s` the wrapper gate count, `d` the true clock-orbit length.
pub fn instance_scales(spec: &RtmSpec, f: u8) -> (u64, u64, u64) {
    use orbitmeter::compiler::{expected_orbit_length, machine_register_bits};
    let m = machine_register_bits(spec).unwrap();
    let r = expected_orbit_length(m, 0);
    let s = 2 * spec.tape_cells() as u64 + 10;
    (r, s, s * expected_orbit_length(m, f))
}
