//! Runs the fuzz-target bodies over the seed corpus and random mutations of
//! it, so the parsers get exercised without a nightly toolchain.

use std::path::PathBuf;

use linepack::config::parse_config;
use linepack::execlog::verify_log;
use linepack::trace::{parse_trace, validate_trace, write_trace};
use linepack::validate_config;
use proptest::prelude::*;

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<Vec<u8>> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|f| std::fs::read(f.unwrap().path()).unwrap())
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

fn trace_target(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(reqs) = parse_trace(text) {
        assert_eq!(parse_trace(&write_trace(&reqs)).unwrap(), reqs);
        let n = reqs.iter().map(|r| r.dst + 1).max().unwrap_or(2);
        let _ = validate_trace(&reqs, n);
    }
}

fn config_target(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(raw) = parse_config(text) {
        if let Ok(cfg) = validate_config(&raw) {
            assert!(1u64.checked_shl(cfg.k()).is_none_or(|m| cfg.threshold() < m));
            assert!(cfg.buffer_track() >= 1 && cfg.link_track() >= 1);
        }
    }
}

fn log_target(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rep) = verify_log(text) {
        assert!(rep.delivered + rep.dropped <= rep.accepted);
        assert!(rep.accepted <= rep.arrivals);
    }
}

#[derive(Debug, Clone)]
enum Edit {
    Flip(usize, u8),
    Delete(usize, usize),
    Insert(usize, Vec<u8>),
    Duplicate(usize, usize),
}

fn edit() -> impl Strategy<Value = Edit> {
    prop_oneof![
        (any::<usize>(), any::<u8>()).prop_map(|(i, b)| Edit::Flip(i, b)),
        (any::<usize>(), 1usize..40).prop_map(|(i, k)| Edit::Delete(i, k)),
        (any::<usize>(), prop::sample::select(vec![&b"0"[..], b"-1", b"99999999999999999999", b"\"", b"{", b"}", b"\n", b",", b"null", b"1e3", b"=", b"[overrides]"]))
            .prop_map(|(i, s)| Edit::Insert(i, s.to_vec())),
        (any::<usize>(), 1usize..80).prop_map(|(i, k)| Edit::Duplicate(i, k)),
    ]
}

fn mutate(mut data: Vec<u8>, edits: &[Edit]) -> Vec<u8> {
    for e in edits {
        let len = data.len();
        match e {
            Edit::Flip(i, b) if len > 0 => data[i % len] = *b,
            Edit::Delete(i, k) if len > 0 => {
                let at = i % len;
                data.drain(at..(at + k).min(len));
            }
            Edit::Insert(i, s) => {
                let at = i % (len + 1);
                data.splice(at..at, s.iter().copied());
            }
            Edit::Duplicate(i, k) if len > 0 => {
                let at = i % len;
                let chunk = data[at..(at + k).min(len)].to_vec();
                data.splice(at..at, chunk);
            }
            _ => {}
        }
    }
    data
}

#[test]
fn seeds_pass_every_target() {
    for s in seeds("trace_parse") {
        trace_target(&s);
    }
    for s in seeds("config_parse") {
        config_target(&s);
    }
    for s in seeds("log_verify") {
        log_target(&s);
    }
}

#[test]
fn fresh_logs_in_the_corpus_verify() {
    let ok = seeds("log_verify").iter().filter(|s| verify_log(std::str::from_utf8(s).unwrap()).is_ok()).count();
    assert!(ok >= 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mutated_traces(pick in any::<prop::sample::Index>(), edits in prop::collection::vec(edit(), 1..6)) {
        let s = seeds("trace_parse");
        trace_target(&mutate(pick.get(&s).clone(), &edits));
    }

    #[test]
    fn mutated_configs(pick in any::<prop::sample::Index>(), edits in prop::collection::vec(edit(), 1..6)) {
        let s = seeds("config_parse");
        config_target(&mutate(pick.get(&s).clone(), &edits));
    }

    #[test]
    fn mutated_logs(pick in any::<prop::sample::Index>(), edits in prop::collection::vec(edit(), 1..6)) {
        let s = seeds("log_verify");
        log_target(&mutate(pick.get(&s).clone(), &edits));
    }

    #[test]
    fn arbitrary_bytes(data in prop::collection::vec(any::<u8>(), 0..256)) {
        trace_target(&data);
        config_target(&data);
        log_target(&data);
    }
}
