//! Passive device inventory of a simulated day in the household.

use std::time::Instant;

use hearsay::capture::{merge_sniffers, DEFAULT_MAX_SKEW_US};
use hearsay::identify::{build_inventory, OuiRegistry, SetupPatterns, DEFAULT_MIN_FRAMES};
use hearsay::simulate;
use hearsay::time::iso;

fn main() {
    let sc = simulate::household().with_duration(86400);
    let (caps, _) = simulate::generate(&sc).unwrap();
    let (cap, _) = merge_sniffers(caps, DEFAULT_MAX_SKEW_US).unwrap();
    let t = Instant::now();
    let inv = build_inventory(&cap, &OuiRegistry::builtin(), &SetupPatterns::builtin(), DEFAULT_MIN_FRAMES);
    println!("{} devices from {} records in {:.1?}", inv.len(), cap.len(), t.elapsed());
    for p in &inv.profiles {
        println!(
            "{} {:<12} {:<28} via {:<24} frames={:<8} first={}",
            p.mac,
            p.identity.class(),
            p.identity.to_string(),
            format!("{:?}", p.sources),
            p.frames,
            &iso(p.first_seen_us, sc.utc_offset_s)[11..19]
        );
    }
    for l in &inv.leaks {
        println!("leak {} {:?} {:?}", l.mac, l.kind, l.value);
    }
}
