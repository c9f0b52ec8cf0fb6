//! Combining per-sniffer captures.

use serde::Serialize;

use super::{CaptureError, CaptureSet};

/// Clock skew assumed tolerable between sniffers.
pub const DEFAULT_MAX_SKEW_US: u64 = 500_000;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MergeReport {
    pub max_skew_us: u64,
    pub inputs: usize,
    pub records: usize,
    /// Intersection over union of the non-empty input windows.
    pub window_overlap: f64,
    pub warnings: Vec<String>,
}

/// Merges captures from distinct sniffers into one sorted set. Frames heard
/// by several sniffers stay as separate records.
pub fn merge_sniffers(captures: Vec<CaptureSet>, max_skew_us: u64) -> Result<(CaptureSet, MergeReport), CaptureError> {
    let mut seen = [false; 256];
    for c in &captures {
        let mut ids: Vec<u8> = c.records().iter().map(|r| r.sniffer_id).collect();
        ids.sort_unstable();
        ids.dedup();
        for id in ids {
            if seen[id as usize] {
                return Err(CaptureError::DuplicateSniffer(id));
            }
            seen[id as usize] = true;
        }
    }

    let mut report = MergeReport { max_skew_us, inputs: captures.len(), window_overlap: 1.0, ..Default::default() };
    let windows: Vec<(u64, u64)> = captures.iter().filter(|c| !c.is_empty() || c.t_end_us() > c.t_start_us()).map(|c| (c.t_start_us(), c.t_end_us())).collect();
    if windows.is_empty() {
        let n = captures.iter().map(CaptureSet::sniffer_count).max().unwrap_or(0);
        return Ok((CaptureSet::empty().with_sniffer_count(n), report));
    }
    let lo = windows.iter().map(|w| w.0).min().unwrap();
    let hi = windows.iter().map(|w| w.1).max().unwrap();
    let is = windows.iter().map(|w| w.0).max().unwrap();
    let ie = windows.iter().map(|w| w.1).min().unwrap();
    let inter = ie.saturating_sub(is) as f64;
    let union = (hi - lo) as f64;
    report.window_overlap = if union > 0.0 { inter / union } else { 1.0 };
    if report.window_overlap < 0.5 {
        report.warnings.push(format!("capture windows overlap only {:.0}%", report.window_overlap * 100.0));
    }
    if is - lo > max_skew_us {
        report.warnings.push(format!("window starts differ by {} us, more than the {max_skew_us} us skew bound", is - lo));
    }

    let total: usize = captures.iter().map(CaptureSet::len).sum();
    let n = captures.iter().map(CaptureSet::sniffer_count).max().unwrap_or(0);
    let mut records = Vec::with_capacity(total);
    for c in captures {
        records.extend(c.into_records());
    }
    let merged = CaptureSet::new(records, Some((lo, hi)))?.with_sniffer_count(n);
    report.records = merged.len();
    Ok((merged, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::{FrameRecord, Proto};
    use crate::mac::Mac;

    fn set(sniffer: u8, ts: &[u64]) -> CaptureSet {
        let recs = ts.iter().map(|&t| FrameRecord::new(t, sniffer, Mac([0, 0, 0, 0, 0, 1]), 10, Proto::WifiData)).collect();
        CaptureSet::new(recs, None).unwrap()
    }

    #[test]
    fn three_empty() {
        let (m, rep) = merge_sniffers(vec![CaptureSet::empty(), CaptureSet::empty(), CaptureSet::empty()], DEFAULT_MAX_SKEW_US).unwrap();
        assert!(m.is_empty());
        assert!(rep.warnings.is_empty());
    }

    #[test]
    fn interleaved() {
        let (m, rep) = merge_sniffers(vec![set(0, &[1, 4, 7]), set(1, &[2, 5, 8]), set(2, &[3, 6, 9])], DEFAULT_MAX_SKEW_US).unwrap();
        assert_eq!(m.len(), 9);
        assert!(m.is_sorted());
        assert_eq!(m.records().iter().map(|r| r.ts_us).collect::<Vec<_>>(), (1..=9).collect::<Vec<_>>());
        assert!(rep.window_overlap >= 0.5 && rep.warnings.is_empty());
    }

    #[test]
    fn duplicate_sniffer() {
        assert!(matches!(merge_sniffers(vec![set(0, &[1]), set(0, &[2])], DEFAULT_MAX_SKEW_US), Err(CaptureError::DuplicateSniffer(0))));
    }

    #[test]
    fn poor_overlap_warns() {
        let (_, rep) = merge_sniffers(vec![set(0, &[0, 10_000_000]), set(1, &[9_000_000, 20_000_000])], DEFAULT_MAX_SKEW_US).unwrap();
        assert!(rep.window_overlap < 0.5);
        assert_eq!(rep.warnings.len(), 2);
    }
}
