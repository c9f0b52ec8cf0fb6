//! Hour-by-weekday presence of the resident and the recurring absences it
//! exposes.
//!
//!     cargo run --release --example weekly_routine -- 21

use hearsay::capture::{merge_sniffers, DEFAULT_MAX_SKEW_US};
use hearsay::identify::{OuiRegistry, SetupPatterns};
use hearsay::pipeline::analyze;
use hearsay::simulate;

fn main() {
    let days: u64 = std::env::args().nth(1).and_then(|d| d.parse().ok()).unwrap_or(21);
    let sc = simulate::household().with_duration(days * 86400);
    let (caps, _) = simulate::generate(&sc).unwrap();
    let (cap, _) = merge_sniffers(caps, DEFAULT_MAX_SKEW_US).unwrap();
    let report = analyze(&cap, &sc.analysis_config(), &OuiRegistry::builtin(), &SetupPatterns::builtin());
    let har = report.har.as_ref().expect("har ran");
    for e in &har.errors {
        println!("note: {e}");
    }
    for w in &har.weekly {
        println!("{} over {:.1} days (# present, + mostly, . mostly away, space unseen)", w.subject, w.days_observed);
        println!("     {}", (0..24).map(|h| format!("{h:<3}")).collect::<String>());
        for row in &w.rows {
            let cells: String = row
                .hours
                .iter()
                .map(|c| match c.presence {
                    None => "   ",
                    Some(p) if p >= 0.9 => "#  ",
                    Some(p) if p >= 0.5 => "+  ",
                    Some(_) => ".  ",
                })
                .collect();
            println!("{:<4} {cells}", row.weekday);
        }
        println!("recurring absence: {:?}", w.recurring_absence);
    }
}
