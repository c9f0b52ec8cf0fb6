//! The guest-night timeline: arrivals, sleep, wake-ups and departures
//! recovered from metadata, printed against the scripted truth.

use hearsay::capture::{merge_sniffers, DEFAULT_MAX_SKEW_US};
use hearsay::har::EventKind;
use hearsay::identify::{OuiRegistry, SetupPatterns};
use hearsay::pipeline::analyze;
use hearsay::simulate;
use hearsay::time::iso;

fn main() {
    let sc = simulate::guest_night();
    let (caps, truth) = simulate::generate(&sc).unwrap();
    let (cap, _) = merge_sniffers(caps, DEFAULT_MAX_SKEW_US).unwrap();
    let report = analyze(&cap, &sc.analysis_config(), &OuiRegistry::builtin(), &SetupPatterns::builtin());
    let har = report.har.as_ref().expect("har ran");
    let off = sc.utc_offset_s;
    // the night of day 3 through the next noon
    let (a, b) = (sc.start_us() + (3 * 24 + 18) * 3_600_000_000, sc.start_us() + (4 * 24 + 13) * 3_600_000_000);
    let keep = |k: EventKind| matches!(k, EventKind::GuestArrive | EventKind::GuestDepart | EventKind::Sleep | EventKind::Wake);

    println!("inferred");
    for e in har.events.iter().filter(|e| keep(e.kind) && (a..b).contains(&e.t_start_us)) {
        println!("  {} {:<12} {:<9} {:?}", &iso(e.t_start_us, off)[5..16], e.kind.as_str(), e.subject, e.confidence);
    }
    println!("scripted");
    for e in truth.events.iter().filter(|e| keep(e.kind) && (a..b).contains(&e.t_start_us)) {
        println!("  {} {:<12} {}", &iso(e.t_start_us, off)[5..16], e.kind.as_str(), e.subject);
    }
    for e in &har.errors {
        println!("note: {e}");
    }
}
