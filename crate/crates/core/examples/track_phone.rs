//! Follow the phone across sectors over one day and compare with the rooms
//! it was scripted to visit.

use hearsay::capture::{merge_sniffers, DEFAULT_MAX_SKEW_US};
use hearsay::identify::{OuiRegistry, SetupPatterns};
use hearsay::pipeline::{analyze, AnalysisConfig, Stage};
use hearsay::simulate;
use hearsay::time::{fmt_hhmm, second_of_day};

fn main() {
    let sc = simulate::household().with_duration(86400);
    let (caps, truth) = simulate::generate(&sc).unwrap();
    let (cap, _) = merge_sniffers(caps, DEFAULT_MAX_SKEW_US).unwrap();
    let cfg = AnalysisConfig { stages: vec![Stage::Identify, Stage::States, Stage::Locate], ..sc.analysis_config() };
    let report = analyze(&cap, &cfg, &OuiRegistry::builtin(), &SetupPatterns::builtin());
    let loc = report.locate.as_ref().expect("locate ran");
    let hhmm = |t: u64| fmt_hhmm(second_of_day(t, sc.utc_offset_s));

    for s in &loc.sectors.sectors {
        let who: Vec<String> = s.members.iter().map(|m| sc.device(*m).map_or(m.to_string(), |d| d.name.clone())).collect();
        println!("sector {} {}: {}", s.id, s.label(), who.join(", "));
    }
    for (mac, track) in &loc.tracks {
        let located = track.iter().filter(|p| p.sector.is_some()).count();
        println!("\n{mac}: {} windows, {located} in a sector, disjointness {:.2?}", track.len(), loc.disjointness.get(mac));
        // runs of the same sector, gaps folded into the surrounding run
        let mut runs: Vec<(u64, u64, usize)> = Vec::new();
        for p in track {
            let Some(s) = p.sector else { continue };
            match runs.last_mut() {
                Some(r) if r.2 == s => r.1 = p.t_end_us,
                _ => runs.push((p.t_start_us, p.t_end_us, s)),
            }
        }
        for (a, b, s) in runs.iter().filter(|r| r.1 - r.0 >= 15 * 60 * 1_000_000) {
            println!("  {} - {} sector {s}", hhmm(*a), hhmm(*b));
        }
        if let Some(d) = truth.device(*mac) {
            let stops: Vec<String> = d.track.iter().map(|t| format!("{} {}", hhmm(t.t_us), t.room)).collect();
            println!("  scripted: {}", stops.join(", "));
        }
    }
}
