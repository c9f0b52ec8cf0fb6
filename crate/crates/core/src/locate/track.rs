//! Sliding-window direction tracking of a (mobile) device.

use serde::{Deserialize, Serialize};

use super::{direction_vector, fingerprint_records, sector_of, DirectionEstimate, SectorMap, SnifferGeometry};
use crate::capture::{CaptureSet, FrameRecord};
use crate::mac::Mac;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub t_start_us: u64,
    pub t_end_us: u64,
    /// None marks a gap: too few observations or an ambiguous direction.
    pub estimate: Option<DirectionEstimate>,
    pub sector: Option<usize>,
}

/// Windows of `window_s` every `stride_s` over the capture window.
pub fn track_mobile(capture: &CaptureSet, mac: Mac, window_s: u64, stride_s: u64, geom: &SnifferGeometry, sectors: &SectorMap, beta: f64) -> Vec<TrackPoint> {
    let recs: Vec<&FrameRecord> = capture.records().iter().filter(|r| r.src_mac == mac).collect();
    track_records(&recs, mac, (capture.t_start_us(), capture.t_end_us()), window_s, stride_s, geom, sectors, beta)
}

/// Same as [`track_mobile`] on the device's own time-ordered records.
#[allow(clippy::too_many_arguments)]
pub fn track_records(
    recs: &[&FrameRecord],
    mac: Mac,
    span: (u64, u64),
    window_s: u64,
    stride_s: u64,
    geom: &SnifferGeometry,
    sectors: &SectorMap,
    beta: f64,
) -> Vec<TrackPoint> {
    let stride_s = stride_s.max(1);
    let window_s = window_s.max(stride_s);
    let (w, st) = (window_s * 1_000_000, stride_s * 1_000_000);
    let t0 = span.0 / 1_000_000 * 1_000_000;
    let mut out = Vec::new();
    let mut start = t0;
    while start < span.1 || (start == t0 && span.1 == t0) {
        let end = start + w;
        let lo = recs.partition_point(|r| r.ts_us < start);
        let hi = recs.partition_point(|r| r.ts_us < end);
        let estimate = fingerprint_records(recs[lo..hi].iter().copied(), mac, start, end).ok().and_then(|fp| direction_vector(&fp, geom, beta).ok());
        let sector = estimate.as_ref().and_then(|e| sector_of(e.angle_deg, sectors));
        out.push(TrackPoint { t_start_us: start, t_end_us: end, estimate, sector });
        if end >= span.1 {
            break;
        }
        start += st;
    }
    out
}

/// Share of located windows that fall inside some sector. Values near 1 mean
/// the device jumps between sectors without passing through the directions
/// in between.
pub fn path_disjointness(track: &[TrackPoint]) -> Option<f64> {
    let located = track.iter().filter(|p| p.estimate.is_some()).count();
    if located == 0 {
        return None;
    }
    let inside = track.iter().filter(|p| p.estimate.is_some() && p.sector.is_some()).count();
    Some(inside as f64 / located as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::Proto;
    use crate::locate::cluster_sectors;

    #[test]
    fn silent_window_is_a_gap() {
        let m = Mac([1; 6]);
        let geom = SnifferGeometry::new([[1.0, 0.0], [-0.5, 0.8], [-0.5, -0.8]]).unwrap();
        let mut recs = Vec::new();
        for t in 0..60u64 {
            for s in 0..3u8 {
                recs.push(FrameRecord::new(t * 1_000_000, s, m, 10, Proto::WifiData).with_rssi(if s == 0 { -40 } else { -70 }));
            }
        }
        let cs = CaptureSet::new(recs, Some((0, 240_000_000))).unwrap();
        let first = track_mobile(&cs, m, 60, 60, &geom, &SectorMap::default(), 0.5);
        let est: Vec<_> = first.iter().filter_map(|p| p.estimate.clone()).collect();
        let map = cluster_sectors(&est, 45.0);
        let track = track_mobile(&cs, m, 60, 60, &geom, &map, 0.5);
        assert_eq!(track.len(), 4);
        assert!(track[0].estimate.is_some());
        assert_eq!(track[0].sector, Some(0));
        assert!(track[1..].iter().all(|p| p.estimate.is_none() && p.sector.is_none()));
        assert_eq!(path_disjointness(&track), Some(1.0));
    }
}
