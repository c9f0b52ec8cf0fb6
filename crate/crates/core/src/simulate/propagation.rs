//! Log-distance path loss with per-wall attenuation.

use super::scenario::{Propagation, Wall};

/// Proper intersection of segments pq and ab (touching endpoints do not count).
pub fn crosses(p: [f64; 2], q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    let orient = |o: [f64; 2], u: [f64; 2], v: [f64; 2]| (u[0] - o[0]) * (v[1] - o[1]) - (u[1] - o[1]) * (v[0] - o[0]);
    let d1 = orient(a, b, p);
    let d2 = orient(a, b, q);
    let d3 = orient(p, q, a);
    let d4 = orient(p, q, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Deterministic part of the loss between a transmitter and a receiver, in dB.
pub fn path_loss_db(prop: &Propagation, walls: &[Wall], tx: [f64; 2], rx: [f64; 2]) -> f64 {
    let d = (tx[0] - rx[0]).hypot(tx[1] - rx[1]).max(prop.d0_m);
    let wall: f64 = walls.iter().filter(|w| crosses(tx, rx, w.a, w.b)).map(|w| w.atten_db.unwrap_or(prop.wall_db)).sum();
    prop.pl0_db + 10.0 * prop.exponent * (d / prop.d0_m).log10() + wall
}

/// Integer dBm as a receiver reports it, or None below the sensitivity floor.
pub fn quantize(rssi: f64, floor_dbm: f64) -> Option<i8> {
    let q = rssi.round().min(0.0);
    (q >= floor_dbm && q >= -120.0).then_some(q as i8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_metre_reference() {
        let p = Propagation::default();
        assert_eq!(path_loss_db(&p, &[], [0.0, 0.0], [1.0, 0.0]), 40.0);
        assert!((path_loss_db(&p, &[], [0.0, 0.0], [10.0, 0.0]) - 65.0).abs() < 1e-12);
        let wall = Wall { a: [5.0, -1.0], b: [5.0, 1.0], atten_db: None };
        assert!((path_loss_db(&p, &[wall], [0.0, 0.0], [10.0, 0.0]) - 71.0).abs() < 1e-12);
    }

    #[test]
    fn touching_is_not_crossing() {
        assert!(!crosses([0.0, 0.0], [5.0, 0.0], [5.0, -1.0], [5.0, 1.0]));
        assert!(crosses([0.0, 0.0], [6.0, 0.0], [5.0, -1.0], [5.0, 1.0]));
    }

    #[test]
    fn floor_and_clamp() {
        assert_eq!(quantize(-95.4, -95.0), Some(-95));
        assert_eq!(quantize(-95.6, -95.0), None);
        assert_eq!(quantize(3.0, -95.0), Some(0));
    }
}
