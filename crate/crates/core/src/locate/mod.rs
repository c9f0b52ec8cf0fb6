//! Direction vectors from relative RSSI, angular sectors, and tracking.
//!
//! Directions are relative to the centroid of the three sniffers in an
//! attacker-chosen frame. No floor plan is assumed.

pub mod sectors;
pub mod track;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capture::{CaptureSet, FrameRecord};
use crate::mac::Mac;

pub use sectors::{angular_distance, cluster_sectors, sector_of, Sector, SectorMap, DEFAULT_GAP_DEG};
pub use track::{path_disjointness, track_mobile, track_records, TrackPoint};

pub const DEFAULT_BETA: f64 = 0.5;
/// Fingerprint means are snapped to this grid (dB) so that shifting every
/// value by a grid multiple is exact in floating point.
pub const RSSI_GRID: f64 = 1.0 / 1024.0;

#[derive(Debug, Error, PartialEq)]
pub enum LocateError {
    #[error("sniffer positions are collinear (triangle area {0:.4} m²)")]
    Collinear(f64),
    #[error("{mac}: heard by {present} sniffer(s), at least 2 needed")]
    InsufficientObservations { mac: Mac, present: usize },
    #[error("{0}: balanced fingerprint, direction is ambiguous")]
    AmbiguousDirection(Mac),
    #[error("beta must be positive, got {0}")]
    BadBeta(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnifferGeometry {
    pub positions: [[f64; 2]; 3],
}

impl SnifferGeometry {
    pub fn new(positions: [[f64; 2]; 3]) -> Result<Self, LocateError> {
        let [a, b, c] = positions;
        let area = ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs() / 2.0;
        if !(area > 0.01) {
            return Err(LocateError::Collinear(area));
        }
        Ok(Self { positions })
    }

    pub fn centroid(&self) -> [f64; 2] {
        let p = &self.positions;
        [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub mac: Mac,
    pub t_start_us: u64,
    pub t_end_us: u64,
    /// Per-sniffer mean RSSI, snapped to [`RSSI_GRID`].
    pub rssi_dbm: [Option<f64>; 3],
    pub sample_count: [u32; 3],
    /// Per-second sub-fingerprints used for the dispersion estimate.
    #[serde(skip)]
    pub bins: Vec<[Option<f64>; 3]>,
}

impl Fingerprint {
    pub fn from_means(mac: Mac, rssi: [Option<f64>; 3]) -> Self {
        let rssi_dbm = rssi.map(|v| v.map(snap));
        let sample_count = rssi.map(|v| v.is_some() as u32);
        Self { mac, t_start_us: 0, t_end_us: 0, rssi_dbm, sample_count, bins: Vec::new() }
    }

    pub fn present(&self) -> usize {
        self.rssi_dbm.iter().flatten().count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionEstimate {
    pub mac: Mac,
    pub t_start_us: u64,
    pub t_end_us: u64,
    pub vector: [f64; 2],
    pub angle_deg: f64,
    pub confidence: f64,
}

pub fn snap(v: f64) -> f64 {
    (v / RSSI_GRID).round() * RSSI_GRID
}

/// Per-sniffer mean RSSI of `mac` over `[start_us, end_us)`.
pub fn fingerprint(capture: &CaptureSet, mac: Mac, start_us: u64, end_us: u64) -> Result<Fingerprint, LocateError> {
    fingerprint_records(capture.slice(start_us, end_us).iter().filter(|r| r.src_mac == mac), mac, start_us, end_us)
}

/// Fingerprint from an already filtered, time-ordered record stream.
pub fn fingerprint_records<'a>(records: impl Iterator<Item = &'a FrameRecord>, mac: Mac, start_us: u64, end_us: u64) -> Result<Fingerprint, LocateError> {
    let mut sum = [0f64; 3];
    let mut cnt = [0u32; 3];
    let mut bins = Vec::new();
    let mut cur: Option<(u64, [f64; 3], [u32; 3])> = None;
    let flush = |c: (u64, [f64; 3], [u32; 3]), bins: &mut Vec<[Option<f64>; 3]>| {
        bins.push(std::array::from_fn(|i| (c.2[i] > 0).then(|| c.1[i] / c.2[i] as f64)));
    };
    for r in records {
        let (Some(v), s) = (r.rssi_dbm, r.sniffer_id as usize) else { continue };
        if s >= 3 {
            continue;
        }
        sum[s] += v as f64;
        cnt[s] += 1;
        let sec = r.ts_us / 1_000_000;
        match &mut cur {
            Some(c) if c.0 == sec => {
                c.1[s] += v as f64;
                c.2[s] += 1;
            }
            _ => {
                if let Some(c) = cur.take() {
                    flush(c, &mut bins);
                }
                let mut c = (sec, [0.0; 3], [0; 3]);
                c.1[s] = v as f64;
                c.2[s] = 1;
                cur = Some(c);
            }
        }
    }
    if let Some(c) = cur {
        flush(c, &mut bins);
    }
    let present = cnt.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(LocateError::InsufficientObservations { mac, present });
    }
    Ok(Fingerprint {
        mac,
        t_start_us: start_us,
        t_end_us: end_us,
        rssi_dbm: std::array::from_fn(|i| (cnt[i] > 0).then(|| snap(sum[i] / cnt[i] as f64))),
        sample_count: cnt,
        bins,
    })
}

/// Softmax-weighted offset of the sniffer positions from their centroid.
fn raw_vector(rssi: &[Option<f64>; 3], geom: &SnifferGeometry, beta: f64) -> Option<[f64; 2]> {
    let max = rssi.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    if rssi.iter().flatten().count() < 2 {
        return None;
    }
    let c = geom.centroid();
    let (mut vx, mut vy, mut ws) = (0.0, 0.0, 0.0);
    for (i, r) in rssi.iter().enumerate() {
        if let Some(r) = r {
            let w = (beta * (r - max)).exp();
            vx += w * (geom.positions[i][0] - c[0]);
            vy += w * (geom.positions[i][1] - c[1]);
            ws += w;
        }
    }
    Some([vx / ws, vy / ws])
}

pub fn angle_of(v: [f64; 2]) -> f64 {
    let a = v[1].atan2(v[0]).to_degrees();
    let a = if a < 0.0 { a + 360.0 } else { a };
    if a >= 360.0 {
        0.0
    } else {
        a
    }
}

/// Unit direction from the sniffer centroid toward the device. Confidence is
/// the mean resultant length of the per-second directions (1 when the
/// fingerprint carries no sub-fingerprints).
pub fn direction_vector(fp: &Fingerprint, geom: &SnifferGeometry, beta: f64) -> Result<DirectionEstimate, LocateError> {
    if !(beta > 0.0) {
        return Err(LocateError::BadBeta(beta));
    }
    let present = fp.present();
    let Some(v) = raw_vector(&fp.rssi_dbm, geom, beta) else {
        return Err(LocateError::InsufficientObservations { mac: fp.mac, present });
    };
    let norm = v[0].hypot(v[1]);
    if norm < 1e-6 {
        return Err(LocateError::AmbiguousDirection(fp.mac));
    }
    let vector = [v[0] / norm, v[1] / norm];
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for b in &fp.bins {
        if let Some(u) = raw_vector(b, geom, beta) {
            let l = u[0].hypot(u[1]);
            if l >= 1e-6 {
                sx += u[0] / l;
                sy += u[1] / l;
                n += 1;
            }
        }
    }
    let confidence = if n == 0 { 1.0 } else { (sx.hypot(sy) / n as f64).min(1.0) };
    Ok(DirectionEstimate { mac: fp.mac, t_start_us: fp.t_start_us, t_end_us: fp.t_end_us, vector, angle_deg: angle_of(vector), confidence })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equilateral() -> SnifferGeometry {
        let s = 3f64.sqrt() / 2.0;
        SnifferGeometry::new([[1.0, 0.0], [-0.5, s], [-0.5, -s]]).unwrap()
    }

    #[test]
    fn collinear_rejected() {
        assert!(matches!(SnifferGeometry::new([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]), Err(LocateError::Collinear(_))));
    }

    #[test]
    fn singleton_means() {
        let m = Mac([1; 6]);
        let recs = vec![
            FrameRecord::new(0, 0, m, 1, crate::capture::Proto::WifiData).with_rssi(-50),
            FrameRecord::new(0, 1, m, 1, crate::capture::Proto::WifiData).with_rssi(-60),
            FrameRecord::new(0, 2, m, 1, crate::capture::Proto::WifiData).with_rssi(-70),
        ];
        let cs = CaptureSet::new(recs, None).unwrap();
        let fp = fingerprint(&cs, m, 0, 1).unwrap();
        assert_eq!(fp.rssi_dbm, [Some(-50.0), Some(-60.0), Some(-70.0)]);
        assert_eq!(fp.sample_count, [1, 1, 1]);
    }

    #[test]
    fn one_sniffer_is_insufficient() {
        let m = Mac([1; 6]);
        let cs = CaptureSet::new(vec![FrameRecord::new(0, 0, m, 1, crate::capture::Proto::WifiData).with_rssi(-50)], None).unwrap();
        assert_eq!(fingerprint(&cs, m, 0, 1).unwrap_err(), LocateError::InsufficientObservations { mac: m, present: 1 });
    }

    #[test]
    fn balanced_is_ambiguous() {
        let fp = Fingerprint::from_means(Mac([1; 6]), [Some(-60.0); 3]);
        assert_eq!(direction_vector(&fp, &equilateral(), DEFAULT_BETA).unwrap_err(), LocateError::AmbiguousDirection(Mac([1; 6])));
    }

    #[test]
    fn dominant_sniffer_wins() {
        let fp = Fingerprint::from_means(Mac([1; 6]), [Some(-40.0), Some(-90.0), Some(-90.0)]);
        let d = direction_vector(&fp, &equilateral(), DEFAULT_BETA).unwrap();
        assert!(d.angle_deg < 1.0 || d.angle_deg > 359.0);
        assert!((d.vector[0].hypot(d.vector[1]) - 1.0).abs() < 1e-12);
    }
}
