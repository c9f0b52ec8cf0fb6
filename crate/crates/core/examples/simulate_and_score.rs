//! Simulate a bundled scenario, analyze the captures and score the result.
//!
//!     cargo run --release --example simulate_and_score -- household 7

use std::time::Instant;

use hearsay::capture::{merge_sniffers, DEFAULT_MAX_SKEW_US};
use hearsay::identify::{OuiRegistry, SetupPatterns};
use hearsay::pipeline::analyze;
use hearsay::simulate::{self, score};

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "household".into());
    let days: Option<f64> = args.next().and_then(|d| d.parse().ok());
    let mut sc = match name.as_str() {
        "guest_night" => simulate::guest_night(),
        "phone_day" => simulate::phone_day(),
        _ => simulate::household(),
    };
    if let Some(d) = days {
        sc = sc.with_duration((d * 86400.0) as u64);
    }
    let t = Instant::now();
    let (captures, truth) = simulate::generate(&sc).expect("scenario is valid");
    println!("simulated {} frames in {:.1?}", captures.iter().map(|c| c.len()).sum::<usize>(), t.elapsed());
    let (merged, _) = merge_sniffers(captures, DEFAULT_MAX_SKEW_US).expect("captures merge");
    let report = analyze(&merged, &sc.analysis_config(), &OuiRegistry::builtin(), &SetupPatterns::builtin());
    println!("analyzed in {:.1?}", t.elapsed());
    if std::env::var("CONFUSION").is_ok() {
        confusion(&report, &truth);
    }
    if let Ok(k) = std::env::var("DUMP") {
        dump(&report, &truth, &k);
    }
    for w in report.har.iter().flat_map(|h| &h.weekly) {
        println!("recurring absence of {}: {:?}", w.subject, w.recurring_absence);
    }
    let m = score(&report, &truth).expect("report matches truth");
    for (k, v) in &m.values {
        println!("{k:<36} {v:.3}");
    }
    for d in &m.devices {
        println!(
            "{} {:<14} id={:?} prof={:?} mob={:?} states={:.3?} angle={:.1?} sector={:?}",
            d.mac, d.name, d.identity_ok, d.profile_ok, d.mobility_ok, d.state_accuracy, d.angle_error_deg, d.sector_ok
        );
    }
}

fn dump(report: &hearsay::pipeline::Report, truth: &simulate::GroundTruth, kind: &str) {
    let off = truth.utc_offset_s;
    for e in truth.events.iter().filter(|e| e.kind.as_str() == kind) {
        println!("T {} {} {}", hearsay::time::iso(e.t_start_us, off), hearsay::time::iso(e.t_end_us, off), e.subject);
    }
    for e in report.har.iter().flat_map(|h| &h.events).filter(|e| e.kind.as_str() == kind) {
        println!("P {} {} {} {:?}", hearsay::time::iso(e.t_start_us, off), hearsay::time::iso(e.t_end_us, off), e.subject, e.confidence);
    }
}

fn confusion(report: &hearsay::pipeline::Report, truth: &simulate::GroundTruth) {
    let Some(loc) = &report.locate else { return };
    let mut m: std::collections::BTreeMap<(String, Option<usize>), usize> = Default::default();
    for (mac, track) in &loc.tracks {
        let Some(d) = truth.device(*mac) else { continue };
        for w in track {
            let mid = (w.t_start_us + w.t_end_us) / 2;
            let room = d.track.iter().rev().find(|s| s.t_us <= mid).map_or("?".to_string(), |s| s.room.clone());
            *m.entry((room, w.sector)).or_default() += 1;
        }
    }
    for ((r, s), n) in m {
        println!("C {r:<8} {s:?} {n}");
    }
}
