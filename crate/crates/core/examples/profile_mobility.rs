//! Autonomous vs interactive traffic and static vs mobile RSSI, per device.

use hearsay::capture::{bin_traffic, merge_sniffers, DEFAULT_MAX_SKEW_US};
use hearsay::simulate;
use hearsay::states::{classify_mobility, classify_profile, ProfileParams, DEFAULT_SIGMA_MAX_DB};

fn main() {
    let sc = simulate::household().with_duration(7 * 86400);
    let (caps, truth) = simulate::generate(&sc).unwrap();
    let (cap, _) = merge_sniffers(caps, DEFAULT_MAX_SKEW_US).unwrap();
    println!("{:<17} {:<16} {:>6} {:>6} {:>5} {:<12} {:>7} {:<7}  truth", "mac", "name", "period", "burst", "lag", "profile", "spread", "mobility");
    for d in &truth.devices {
        let series = bin_traffic(&cap, d.mac, 1).unwrap();
        let (p, mo) = (classify_profile(&series, &ProfileParams::default()), classify_mobility(&series, DEFAULT_SIGMA_MAX_DB));
        let (score, burst, lag, prof) = match &p {
            Ok(v) => (v.periodicity_score, v.burstiness, v.best_lag_s, format!("{:?}", v.profile)),
            Err(e) => (f64::NAN, f64::NAN, 0, e.to_string()),
        };
        let (spread, mob) = match &mo {
            Ok(v) => (v.spread_db, format!("{:?}", v.mobility)),
            Err(_) => (f64::NAN, "unknown".into()),
        };
        println!("{} {:<16} {score:>6.2} {burst:>6.2} {lag:>5} {prof:<12} {spread:>7.2} {mob:<7}  {:?}/{:?}", d.mac, d.name, d.profile, d.mobility);
    }
}
