//! Per-device binned traffic.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{CaptureError, CaptureSet, FrameRecord};
use crate::mac::Mac;

/// Frames, bytes and per-sniffer mean RSSI per bin for one MAC.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrafficSeries {
    pub mac: Mac,
    pub bin_width_s: u32,
    pub t0_us: u64,
    pub counts: Vec<u32>,
    pub bytes: Vec<u64>,
    /// Indexed `[sniffer][bin]`.
    pub rssi_mean: Vec<Vec<Option<f32>>>,
}

impl TrafficSeries {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn bin_width_us(&self) -> u64 {
        self.bin_width_s as u64 * 1_000_000
    }

    /// Start of bin `i`.
    pub fn bin_start_us(&self, i: usize) -> u64 {
        self.t0_us + i as u64 * self.bin_width_us()
    }

    /// End of the last bin.
    pub fn t_end_us(&self) -> u64 {
        self.bin_start_us(self.len())
    }

    pub fn total_frames(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn nonzero_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Bin index containing `ts_us`, clamped to the series.
    pub fn bin_of(&self, ts_us: u64) -> usize {
        ((ts_us.saturating_sub(self.t0_us)) / self.bin_width_us()).min(self.len().saturating_sub(1) as u64) as usize
    }

    /// Sub-series covering bins `[lo, hi)`.
    pub fn slice_bins(&self, lo: usize, hi: usize) -> TrafficSeries {
        let hi = hi.min(self.len());
        let lo = lo.min(hi);
        TrafficSeries {
            mac: self.mac,
            bin_width_s: self.bin_width_s,
            t0_us: self.bin_start_us(lo),
            counts: self.counts[lo..hi].to_vec(),
            bytes: self.bytes[lo..hi].to_vec(),
            rssi_mean: self.rssi_mean.iter().map(|s| s[lo..hi].to_vec()).collect(),
        }
    }
}

/// Bins `mac`'s records over the capture window. `t0` is the window start
/// floored to a whole second. An absent MAC yields an all-zero series.
pub fn bin_traffic(capture: &CaptureSet, mac: Mac, bin_width_s: u32) -> Result<TrafficSeries, CaptureError> {
    bin_records(capture.records().iter().filter(|r| r.src_mac == mac), mac, (capture.t_start_us(), capture.t_end_us()), capture.sniffer_count(), bin_width_s)
}

/// Like [`bin_traffic`], using a precomputed index of `mac`'s record positions.
pub fn bin_traffic_indexed(capture: &CaptureSet, mac: Mac, positions: &[u32], bin_width_s: u32) -> Result<TrafficSeries, CaptureError> {
    let recs = capture.records();
    bin_records(positions.iter().map(|&i| &recs[i as usize]), mac, (capture.t_start_us(), capture.t_end_us()), capture.sniffer_count(), bin_width_s)
}

/// Record positions per source MAC, in capture order.
pub fn mac_index(capture: &CaptureSet) -> BTreeMap<Mac, Vec<u32>> {
    let mut idx: BTreeMap<Mac, Vec<u32>> = BTreeMap::new();
    for (i, r) in capture.records().iter().enumerate() {
        idx.entry(r.src_mac).or_default().push(i as u32);
    }
    idx
}

fn bin_records<'a>(
    records: impl Iterator<Item = &'a FrameRecord>,
    mac: Mac,
    window: (u64, u64),
    sniffers: u8,
    bin_width_s: u32,
) -> Result<TrafficSeries, CaptureError> {
    if bin_width_s == 0 {
        return Err(CaptureError::ZeroBinWidth);
    }
    let w = bin_width_s as u64 * 1_000_000;
    let t0 = window.0 / 1_000_000 * 1_000_000;
    let n = (window.1 - t0).div_ceil(w).max(1) as usize;
    let ns = sniffers.max(1) as usize;
    let mut counts = vec![0u32; n];
    let mut bytes = vec![0u64; n];
    let mut sums = vec![vec![(0f64, 0u32); n]; ns];
    for r in records {
        let i = (((r.ts_us - t0) / w) as usize).min(n - 1);
        counts[i] += 1;
        bytes[i] += r.frame_len as u64;
        if let Some(v) = r.rssi_dbm {
            let s = r.sniffer_id as usize;
            if s >= sums.len() {
                sums.resize(s + 1, vec![(0.0, 0); n]);
            }
            let cell = &mut sums[s][i];
            cell.0 += v as f64;
            cell.1 += 1;
        }
    }
    let rssi_mean = sums.into_iter().map(|col| col.into_iter().map(|(s, c)| (c > 0).then(|| (s / c as f64) as f32)).collect()).collect();
    Ok(TrafficSeries { mac, bin_width_s, t0_us: t0, counts, bytes, rssi_mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::Proto;

    fn burst() -> CaptureSet {
        let m = Mac([0, 0, 0, 0, 0, 1]);
        let recs = (0..10).map(|i| FrameRecord::new(5_000_000 + i * 1000, 0, m, 100, Proto::WifiData).with_rssi(-50 - i as i8)).collect();
        CaptureSet::new(recs, Some((0, 10_000_000))).unwrap()
    }

    #[test]
    fn ten_frames_in_second_five() {
        let s = bin_traffic(&burst(), Mac([0, 0, 0, 0, 0, 1]), 1).unwrap();
        assert_eq!(s.counts, vec![0, 0, 0, 0, 0, 10, 0, 0, 0, 0]);
        assert_eq!(s.bytes[5], 1000);
        assert_eq!(s.rssi_mean[0][5], Some(-54.5));
        assert_eq!(s.rssi_mean[0][4], None);
        let s = bin_traffic(&burst(), Mac([0, 0, 0, 0, 0, 1]), 10).unwrap();
        assert_eq!(s.counts, vec![10]);
    }

    #[test]
    fn absent_mac_is_zero() {
        let s = bin_traffic(&burst(), Mac([9; 6]), 1).unwrap();
        assert_eq!(s.len(), 10);
        assert_eq!(s.total_frames(), 0);
    }

    #[test]
    fn zero_width_rejected() {
        assert!(matches!(bin_traffic(&burst(), Mac([9; 6]), 0), Err(CaptureError::ZeroBinWidth)));
    }

    #[test]
    fn origin_floors_to_second() {
        let m = Mac([1; 6]);
        let cs = CaptureSet::new(vec![FrameRecord::new(2_700_000, 0, m, 1, Proto::WifiData)], Some((1_500_000, 3_200_000))).unwrap();
        let s = bin_traffic(&cs, m, 1).unwrap();
        assert_eq!(s.t0_us, 1_000_000);
        assert_eq!(s.counts, vec![0, 1, 0]);
    }
}
