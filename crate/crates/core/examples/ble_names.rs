//! Device names that leak in plaintext: BLE local names, setup SSIDs and
//! mDNS hostnames, from the first hour of the household capture.

use std::collections::BTreeSet;

use hearsay::capture::{InfoKey, Proto};
use hearsay::identify::{extract_setup_leaks, model_name, parse_ble_adv, SetupPatterns};
use hearsay::simulate;

fn main() {
    let (caps, _) = simulate::generate(&simulate::household().with_duration(3600)).unwrap();
    let cap = &caps[2];
    let mut seen = BTreeSet::new();
    for r in cap.records().iter().filter(|r| r.proto == Proto::BleAdv) {
        let Some(adv) = r.info.get(InfoKey::BleAdv) else { continue };
        match parse_ble_adv(adv) {
            Ok(f) => {
                if let Some(name) = f.local_name() {
                    if seen.insert((r.src_mac, name.clone())) {
                        println!("ble   {} {name:<22} -> {}", r.src_mac, model_name(&name));
                    }
                }
            }
            Err(e) => println!("ble   {} unreadable: {e}", r.src_mac),
        }
    }
    let mut leaks = extract_setup_leaks(cap, &SetupPatterns::builtin());
    leaks.dedup_by(|a, b| a.mac == b.mac && a.kind == b.kind && a.value == b.value);
    // service names such as _googlecast._tcp.local say nothing about the model
    for l in leaks.iter().filter(|l| !l.value.starts_with('_')) {
        println!("{:<5} {} {:<22} -> {}", format!("{:?}", l.kind).to_lowercase(), l.mac, l.value, model_name(&l.value));
    }
}
