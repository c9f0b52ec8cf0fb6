//! Capture data model and ingestion.
//!
//! A [`FrameRecord`] is the metadata of one frame as heard by one sniffer.
//! Payload bytes never enter the model: only the frame length survives,
//! plus a closed set of plaintext fields ([`InfoKey`]) that the radio layer
//! exposes without decryption.
//!
//! Ingestion paths:
//! - [`wwcap`]: the canonical line-oriented text format,
//! - [`pcap`]: classic pcap files with radiotap link headers,
//! - [`merge::merge_sniffers`]: combines per-sniffer captures,
//! - [`series::bin_traffic`]: per-device binned traffic series.

pub mod merge;
pub mod pcap;
pub mod series;
pub mod wwcap;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mac::Mac;

pub use merge::{merge_sniffers, MergeReport, DEFAULT_MAX_SKEW_US};
pub use pcap::{parse_pcap_radiotap, write_pcap_radiotap, PcapError, PcapReport};
pub use series::{bin_traffic, TrafficSeries};
pub use wwcap::{parse_capture_records, write_capture_records, LineError, ParseReport};

/// Lowest RSSI accepted in a record, dBm.
pub const RSSI_MIN_DBM: i8 = -120;
/// Highest RSSI accepted in a record, dBm.
pub const RSSI_MAX_DBM: i8 = 0;

/// Frame classes the capture layer distinguishes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proto {
    WifiData,
    WifiProbeReq,
    WifiBeacon,
    BleAdv,
}

impl Proto {
    pub const ALL: [Proto; 4] = [Proto::WifiData, Proto::WifiProbeReq, Proto::WifiBeacon, Proto::BleAdv];

    pub fn keyword(self) -> &'static str {
        match self {
            Proto::WifiData => "wifi_data",
            Proto::WifiProbeReq => "wifi_probe_req",
            Proto::WifiBeacon => "wifi_beacon",
            Proto::BleAdv => "ble_adv",
        }
    }

    pub fn is_wifi(self) -> bool {
        !matches!(self, Proto::BleAdv)
    }
}

impl fmt::Display for Proto {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for Proto {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Proto::ALL.into_iter().find(|p| p.keyword() == s).ok_or_else(|| format!("unknown proto keyword {s:?}"))
    }
}

/// Plaintext metadata fields a record may carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoKey {
    /// SSID element of a beacon, probe request, or a cleartext setup exchange.
    Ssid,
    /// Raw BLE advertising data (AD structures).
    BleAdv,
    /// mDNS / DNS-SD name announced by the device.
    MdnsName,
}

impl InfoKey {
    pub const ALL: [InfoKey; 3] = [InfoKey::Ssid, InfoKey::BleAdv, InfoKey::MdnsName];

    pub fn keyword(self) -> &'static str {
        match self {
            InfoKey::Ssid => "ssid",
            InfoKey::BleAdv => "ble_adv",
            InfoKey::MdnsName => "mdns_name",
        }
    }
}

impl FromStr for InfoKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InfoKey::ALL.into_iter().find(|k| k.keyword() == s).ok_or_else(|| format!("unknown info key {s:?}"))
    }
}

/// Sparse map of plaintext fields. Boxed so records without info stay small.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[allow(clippy::box_collection)]
pub struct InfoFields(Option<Box<BTreeMap<InfoKey, Vec<u8>>>>);

impl InfoFields {
    pub fn new() -> Self {
        Self(None)
    }

    pub fn with(key: InfoKey, value: impl Into<Vec<u8>>) -> Self {
        let mut f = Self::new();
        f.insert(key, value);
        f
    }

    pub fn insert(&mut self, key: InfoKey, value: impl Into<Vec<u8>>) {
        self.0.get_or_insert_with(Default::default).insert(key, value.into());
    }

    pub fn get(&self, key: InfoKey) -> Option<&[u8]> {
        self.0.as_ref()?.get(&key).map(Vec::as_slice)
    }

    /// Field value decoded as UTF-8 (lossy).
    pub fn get_str(&self, key: InfoKey) -> Option<String> {
        self.get(key).map(|v| String::from_utf8_lossy(v).into_owned())
    }

    pub fn is_empty(&self) -> bool {
        self.0.as_ref().is_none_or(|m| m.is_empty())
    }

    pub fn iter(&self) -> impl Iterator<Item = (InfoKey, &[u8])> {
        self.0.iter().flat_map(|m| m.iter().map(|(k, v)| (*k, v.as_slice())))
    }
}

/// Metadata of one frame as heard by one sniffer.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FrameRecord {
    pub ts_us: u64,
    pub sniffer_id: u8,
    pub src_mac: Mac,
    pub dst_mac: Option<Mac>,
    pub frame_len: u32,
    pub rssi_dbm: Option<i8>,
    pub proto: Proto,
    pub info: InfoFields,
}

impl FrameRecord {
    pub fn new(ts_us: u64, sniffer_id: u8, src_mac: Mac, frame_len: u32, proto: Proto) -> Self {
        Self { ts_us, sniffer_id, src_mac, dst_mac: None, frame_len, rssi_dbm: None, proto, info: InfoFields::new() }
    }

    pub fn with_rssi(mut self, rssi: i8) -> Self {
        self.rssi_dbm = Some(rssi);
        self
    }

    pub fn with_dst(mut self, dst: Mac) -> Self {
        self.dst_mac = Some(dst);
        self
    }

    pub fn with_info(mut self, key: InfoKey, value: impl Into<Vec<u8>>) -> Self {
        self.info.insert(key, value);
        self
    }

    fn sort_key(&self) -> (u64, u8, Mac) {
        (self.ts_us, self.sniffer_id, self.src_mac)
    }
}

impl Ord for FrameRecord {
    /// Capture order: timestamp, then sniffer, then source MAC. Remaining
    /// fields only break exact ties so that sorting is a total function.
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key()
            .cmp(&other.sort_key())
            .then_with(|| self.dst_mac.cmp(&other.dst_mac))
            .then_with(|| self.frame_len.cmp(&other.frame_len))
            .then_with(|| self.rssi_dbm.cmp(&other.rssi_dbm))
            .then_with(|| self.proto.cmp(&other.proto))
            .then_with(|| self.info.cmp(&other.info))
    }
}

impl PartialOrd for FrameRecord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{malformed} of {total} record lines are malformed (first: line {first_line}: {first_message})")]
    TooManyMalformed { malformed: usize, total: usize, first_line: usize, first_message: String },
    #[error("record at {ts_us} us lies outside the capture window [{t_start_us}, {t_end_us}]")]
    OutsideWindow { ts_us: u64, t_start_us: u64, t_end_us: u64 },
    #[error("invalid capture window: start {t_start_us} > end {t_end_us}")]
    InvalidWindow { t_start_us: u64, t_end_us: u64 },
    #[error("RSSI {0} dBm outside [-120, 0]")]
    RssiOutOfRange(i8),
    #[error("sniffer id {0} appears in more than one input capture")]
    DuplicateSniffer(u8),
    #[error("bin width must be at least 1 s")]
    ZeroBinWidth,
}

/// A time-ordered set of records with explicit window bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct CaptureSet {
    records: Vec<FrameRecord>,
    t_start_us: u64,
    t_end_us: u64,
    sniffer_count: u8,
}

impl CaptureSet {
    /// Empty capture with a degenerate window at 0.
    pub fn empty() -> Self {
        Self { records: Vec::new(), t_start_us: 0, t_end_us: 0, sniffer_count: 0 }
    }

    /// Sorts `records` into capture order. Without an explicit window the
    /// bounds are the first and last timestamps.
    pub fn new(mut records: Vec<FrameRecord>, window: Option<(u64, u64)>) -> Result<Self, CaptureError> {
        records.sort_unstable();
        for r in &records {
            if let Some(rssi) = r.rssi_dbm {
                if !(RSSI_MIN_DBM..=RSSI_MAX_DBM).contains(&rssi) {
                    return Err(CaptureError::RssiOutOfRange(rssi));
                }
            }
        }
        let (t_start_us, t_end_us) = match window {
            Some((s, e)) => {
                if s > e {
                    return Err(CaptureError::InvalidWindow { t_start_us: s, t_end_us: e });
                }
                if let Some(bad) = records.iter().find(|r| r.ts_us < s || r.ts_us > e) {
                    return Err(CaptureError::OutsideWindow { ts_us: bad.ts_us, t_start_us: s, t_end_us: e });
                }
                (s, e)
            }
            None => match (records.first(), records.last()) {
                (Some(f), Some(l)) => (f.ts_us, l.ts_us),
                _ => (0, 0),
            },
        };
        let sniffer_count = records.iter().map(|r| r.sniffer_id + 1).max().unwrap_or(0);
        Ok(Self { records, t_start_us, t_end_us, sniffer_count })
    }

    /// Raises the declared sniffer count (never lowers it below what the records imply).
    pub fn with_sniffer_count(mut self, n: u8) -> Self {
        self.sniffer_count = self.sniffer_count.max(n);
        self
    }

    pub fn records(&self) -> &[FrameRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<FrameRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn t_start_us(&self) -> u64 {
        self.t_start_us
    }

    pub fn t_end_us(&self) -> u64 {
        self.t_end_us
    }

    pub fn sniffer_count(&self) -> u8 {
        self.sniffer_count
    }

    /// Records with `start <= ts_us < end`, located by binary search.
    pub fn slice(&self, start_us: u64, end_us: u64) -> &[FrameRecord] {
        let lo = self.records.partition_point(|r| r.ts_us < start_us);
        let hi = self.records.partition_point(|r| r.ts_us < end_us);
        &self.records[lo..hi.max(lo)]
    }

    /// Distinct source MACs in ascending order.
    pub fn macs(&self) -> Vec<Mac> {
        let mut v: Vec<Mac> = self.records.iter().map(|r| r.src_mac).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Sub-capture restricted to `[start_us, end_us]` (inclusive end, matching the window invariant).
    pub fn restrict(&self, start_us: u64, end_us: u64) -> CaptureSet {
        let lo = self.records.partition_point(|r| r.ts_us < start_us);
        let hi = self.records.partition_point(|r| r.ts_us <= end_us);
        CaptureSet { records: self.records[lo..hi.max(lo)].to_vec(), t_start_us: start_us, t_end_us: end_us.max(start_us), sniffer_count: self.sniffer_count }
    }

    /// True when the ordering invariant holds.
    pub fn is_sorted(&self) -> bool {
        self.records.windows(2).all(|w| w[0] <= w[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mac(s: &str) -> Mac {
        s.parse().unwrap()
    }

    #[test]
    fn record_stays_small() {
        assert!(std::mem::size_of::<FrameRecord>() <= 40);
    }

    #[test]
    fn new_sorts_and_derives_window() {
        let a = FrameRecord::new(30, 1, mac("00:00:00:00:00:02"), 10, Proto::WifiData);
        let b = FrameRecord::new(10, 2, mac("00:00:00:00:00:01"), 10, Proto::WifiData);
        let c = FrameRecord::new(30, 0, mac("00:00:00:00:00:03"), 10, Proto::WifiData);
        let cs = CaptureSet::new(vec![a.clone(), b.clone(), c.clone()], None).unwrap();
        assert_eq!(cs.records(), &[b, c, a]);
        assert_eq!((cs.t_start_us(), cs.t_end_us()), (10, 30));
        assert_eq!(cs.sniffer_count(), 3);
    }

    #[test]
    fn window_must_contain_records() {
        let a = FrameRecord::new(30, 0, mac("00:00:00:00:00:02"), 10, Proto::WifiData);
        assert!(matches!(CaptureSet::new(vec![a.clone()], Some((0, 20))), Err(CaptureError::OutsideWindow { .. })));
        assert!(CaptureSet::new(vec![a], Some((0, 30))).is_ok());
    }

    #[test]
    fn rssi_range_enforced() {
        let a = FrameRecord::new(30, 0, mac("00:00:00:00:00:02"), 10, Proto::WifiData).with_rssi(-121);
        assert!(matches!(CaptureSet::new(vec![a], None), Err(CaptureError::RssiOutOfRange(-121))));
    }

    #[test]
    fn slice_is_half_open() {
        let recs: Vec<_> = (0..10).map(|i| FrameRecord::new(i * 10, 0, mac("00:00:00:00:00:01"), 1, Proto::WifiData)).collect();
        let cs = CaptureSet::new(recs, None).unwrap();
        assert_eq!(cs.slice(20, 50).len(), 3);
        assert_eq!(cs.slice(50, 20).len(), 0);
        assert_eq!(cs.restrict(20, 50).len(), 4);
    }
}
