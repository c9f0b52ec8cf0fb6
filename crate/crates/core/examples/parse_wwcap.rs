//! Load a `.wwcap` capture and summarize it per device.
//!
//!     cargo run --example parse_wwcap -- sniffer0.wwcap
//!
//! Without an argument, two hours of the phone scenario are written to a
//! buffer and read back.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;

use hearsay::capture::{parse_capture_records, write_capture_records, CaptureSet};
use hearsay::simulate;

fn main() {
    let (cap, rep) = match std::env::args().nth(1) {
        Some(path) => parse_capture_records(BufReader::new(File::open(&path).expect("readable file"))).expect("valid capture"),
        None => {
            let (caps, _) = simulate::generate(&simulate::phone_day().with_duration(7200)).unwrap();
            let mut buf = Vec::new();
            write_capture_records(&caps[0], &mut buf).unwrap();
            println!("wrote {} bytes for sniffer 0", buf.len());
            parse_capture_records(buf.as_slice()).unwrap()
        }
    };
    println!("{} record lines, {} records, {} malformed", rep.record_lines, rep.records, rep.malformed.len());
    for e in rep.malformed.iter().take(5) {
        println!("  line {}: {}", e.line, e.message);
    }
    summarize(&cap);
}

fn summarize(cap: &CaptureSet) {
    let mut per: BTreeMap<_, (usize, BTreeMap<&str, usize>)> = BTreeMap::new();
    for r in cap.records() {
        let e = per.entry(r.src_mac).or_default();
        e.0 += 1;
        *e.1.entry(r.proto.keyword()).or_default() += 1;
    }
    for (mac, (n, protos)) in per {
        println!("{mac} {n:>7} {protos:?}");
    }
}
