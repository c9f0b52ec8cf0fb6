//! Read a radiotap pcap into frame records, write it back and compare.
//!
//!     cargo run --example pcap_roundtrip -- capture.pcap

use hearsay::capture::{parse_pcap_radiotap, write_pcap_radiotap, InfoKey};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/mixed_be.pcap");

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| FIXTURE.into());
    let bytes = std::fs::read(&path).expect("readable pcap");
    let (recs, rep) = match parse_pcap_radiotap(&bytes, 0) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("{path}: {e}");
            std::process::exit(2);
        }
    };
    println!("{path}: {} packets, {} records, skipped {:?}", rep.packets, rep.records, (rep.skipped_other_type, rep.skipped_short, rep.skipped_rssi_range));
    for r in &recs {
        let ssid = r.info.get_str(InfoKey::Ssid).unwrap_or_default();
        println!("{} {} {:<14} len={:<5} rssi={:?} {ssid}", r.ts_us, r.src_mac, r.proto.keyword(), r.frame_len, r.rssi_dbm);
    }
    // only metadata survives: the rewritten file carries headers, not payloads
    let out = write_pcap_radiotap(&recs).expect("records encode");
    let (back, _) = parse_pcap_radiotap(&out, 0).expect("own output parses");
    println!("rewritten: {} bytes (from {}), records equal: {}", out.len(), bytes.len(), back == recs);
}
