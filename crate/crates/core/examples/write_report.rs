//! Analyze the guest-night scenario and write every output (JSON, CSV, SVG).
//!
//!     cargo run --release --example write_report -- out/guest_night

use std::path::PathBuf;

use hearsay::capture::{merge_sniffers, DEFAULT_MAX_SKEW_US};
use hearsay::identify::{OuiRegistry, SetupPatterns};
use hearsay::pipeline::analyze;
use hearsay::report::write_outputs;
use hearsay::simulate;

fn main() {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("hearsay-report"));
    let sc = simulate::guest_night();
    let (caps, _) = simulate::generate(&sc).unwrap();
    let (cap, _) = merge_sniffers(caps, DEFAULT_MAX_SKEW_US).unwrap();
    let report = analyze(&cap, &sc.analysis_config(), &OuiRegistry::builtin(), &SetupPatterns::builtin());
    for (stage, st) in &report.stages {
        println!("{stage:<8} {}", st.status);
    }
    match write_outputs(&report, Some(&cap), &dir) {
        Ok(files) => {
            for f in files {
                println!("{} ({} bytes)", f.display(), std::fs::metadata(&f).map_or(0, |m| m.len()));
            }
        }
        Err(e) => {
            eprintln!("{}: {e}", dir.display());
            std::process::exit(1);
        }
    }
}
