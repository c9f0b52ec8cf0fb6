//! Off / idle / active timeline of the phone over one simulated day.

use hearsay::capture::{bin_traffic, merge_sniffers, DEFAULT_MAX_SKEW_US};
use hearsay::simulate;
use hearsay::states::{calibrate_thresholds, classify_states};
use hearsay::time::{fmt_hhmm, second_of_day};

fn main() {
    let sc = simulate::phone_day();
    let (caps, truth) = simulate::generate(&sc).unwrap();
    let (cap, _) = merge_sniffers(caps, DEFAULT_MAX_SKEW_US).unwrap();
    let phone = "a4:45:19:8b:0f:22".parse().unwrap();
    let series = bin_traffic(&cap, phone, 1).unwrap();
    let th = calibrate_thresholds(&series).expect("a day is enough to calibrate");
    println!("thresholds: idle {} active {} frames/s, off after {} s quiet, smoothing {} s", th.t_idle, th.t_active, th.off_gap_s, th.smooth_window_s);

    let tl = classify_states(&series, &th);
    let hhmm = |t: u64| fmt_hhmm(second_of_day(t, sc.utc_offset_s));
    println!("inferred:");
    for s in &tl.segments {
        println!("  {} - {} {}", hhmm(s.t_start_us), hhmm(s.t_end_us - 1), s.state.as_str());
    }
    println!("scripted:");
    for s in &truth.device(phone).unwrap().segments {
        println!("  {} - {} {}", hhmm(s.t_start_us), hhmm(s.t_end_us - 1), s.state.as_str());
    }
}
