//! Direction vectors of the stationary devices and the sectors they group
//! into, next to the true bearing from the sniffers' centroid.
//!
//!     cargo run --example direction_sectors -- [--no-walls]

use hearsay::capture::{merge_sniffers, DEFAULT_MAX_SKEW_US};
use hearsay::locate::{angle_of, angular_distance, cluster_sectors, direction_vector, fingerprint, SnifferGeometry, DEFAULT_BETA, DEFAULT_GAP_DEG};
use hearsay::simulate;

fn main() {
    let mut sc = simulate::household().with_duration(86400);
    if std::env::args().any(|a| a == "--no-walls") {
        sc = sc.without_walls();
    }
    let (caps, _) = simulate::generate(&sc).unwrap();
    let (cap, _) = merge_sniffers(caps, DEFAULT_MAX_SKEW_US).unwrap();
    let geom = SnifferGeometry::new(sc.sniffers).unwrap();
    let c = geom.centroid();
    let skip = sc.analysis_config().locate.exclude;

    let mut estimates = Vec::new();
    let mut names = Vec::new();
    for d in sc.devices.iter().filter(|d| !skip.contains(&d.mac)) {
        let Some(p) = sc.static_position(d).filter(|_| d.moves.is_empty()) else { continue };
        let fp = fingerprint(&cap, d.mac, cap.t_start_us(), cap.t_end_us()).unwrap();
        match direction_vector(&fp, &geom, DEFAULT_BETA) {
            Ok(e) => {
                let truth = angle_of([p[0] - c[0], p[1] - c[1]]);
                println!(
                    "{} {:<16} rssi {:>6.1?} -> {:>6.1}° (true {truth:>6.1}°, off by {:>5.1}°) confidence {:.2}",
                    d.mac,
                    d.name,
                    fp.rssi_dbm.map(|r| r.unwrap_or(f64::NAN)),
                    e.angle_deg,
                    angular_distance(e.angle_deg, truth),
                    e.confidence
                );
                names.push(d.name.clone());
                estimates.push(e);
            }
            Err(e) => println!("{} {:<16} {e}", d.mac, d.name),
        }
    }
    let map = cluster_sectors(&estimates, DEFAULT_GAP_DEG);
    for s in &map.sectors {
        let who: Vec<&str> = map.assignment.iter().zip(&names).filter(|(a, _)| **a == s.id).map(|(_, n)| n.as_str()).collect();
        println!("sector {} {}: {}", s.id, s.label(), who.join(", "));
    }
}
