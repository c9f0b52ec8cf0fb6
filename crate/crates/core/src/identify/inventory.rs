//! Per-MAC device profiles.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::leaks::{dedup_leaks, record_leaks};
use super::{lookup_vendor, model_name, parse_ble_adv, DeviceProfile, Identity, LeakEvent, LeakKind, OuiRegistry, SetupPatterns, Source};
use crate::capture::{CaptureSet, InfoKey, Proto};
use crate::mac::Mac;

/// MACs with fewer records are treated as passers-by.
pub const DEFAULT_MIN_FRAMES: u64 = 10;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Inventory {
    pub profiles: Vec<DeviceProfile>,
    pub leaks: Vec<LeakEvent>,
}

impl Inventory {
    pub fn get(&self, mac: Mac) -> Option<&DeviceProfile> {
        self.profiles.iter().find(|p| p.mac == mac)
    }

    pub fn get_mut(&mut self, mac: Mac) -> Option<&mut DeviceProfile> {
        self.profiles.iter_mut().find(|p| p.mac == mac)
    }

    pub fn macs(&self) -> Vec<Mac> {
        self.profiles.iter().map(|p| p.mac).collect()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

#[derive(Default)]
struct Acc {
    frames: u64,
    first: u64,
    last: u64,
    ble_name: Option<String>,
}

/// One profile per source MAC with at least `min_frames` records, in MAC order.
/// Identity precedence: setup leak, BLE name, randomized bit, OUI vendor.
pub fn build_inventory(capture: &CaptureSet, registry: &OuiRegistry, patterns: &SetupPatterns, min_frames: u64) -> Inventory {
    let mut accs: HashMap<Mac, Acc> = HashMap::new();
    let mut raw_leaks = Vec::new();
    for r in capture.records() {
        let a = accs.entry(r.src_mac).or_insert_with(|| Acc { first: r.ts_us, ..Default::default() });
        a.frames += 1;
        a.last = r.ts_us;
        if r.info.is_empty() {
            continue;
        }
        if r.proto == Proto::BleAdv && a.ble_name.is_none() {
            if let Some(payload) = r.info.get(InfoKey::BleAdv) {
                a.ble_name = parse_ble_adv(payload).ok().and_then(|f| f.local_name());
            }
        }
        record_leaks(r, patterns, &mut raw_leaks);
    }
    let leaks = dedup_leaks(raw_leaks);

    let mut macs: Vec<Mac> = accs.iter().filter(|(_, a)| a.frames >= min_frames).map(|(m, _)| *m).collect();
    macs.sort_unstable();
    let kept: BTreeSet<Mac> = macs.iter().copied().collect();

    let profiles = macs
        .into_iter()
        .map(|mac| {
            let a = &accs[&mac];
            let setup_name = leaks
                .iter()
                .filter(|l| l.mac == mac)
                .find(|l| l.kind == LeakKind::SetupSsid)
                .or_else(|| leaks.iter().find(|l| l.mac == mac && l.kind == LeakKind::MdnsName && !l.value.starts_with('_')))
                .map(|l| model_name(&l.value));
            let base = lookup_vendor(mac, registry);
            let vendor = match &base {
                Identity::VendorOnly { vendor } => Some(vendor.clone()),
                _ => None,
            };
            let mut sources = BTreeSet::new();
            if vendor.is_some() {
                sources.insert(Source::Oui);
            }
            if a.ble_name.is_some() {
                sources.insert(Source::BleName);
            }
            if setup_name.is_some() {
                sources.insert(Source::SetupLeak);
            }
            let identity = match (setup_name, &a.ble_name) {
                (Some(name), _) => Identity::ExactModel { name },
                (None, Some(b)) => Identity::ExactModel { name: model_name(b) },
                (None, None) => base,
            };
            DeviceProfile { mac, identity, sources, vendor, profile: None, mobility: None, first_seen_us: a.first, last_seen_us: a.last, frames: a.frames }
        })
        .collect();
    let leaks = leaks.into_iter().filter(|l| kept.contains(&l.mac)).collect();
    Inventory { profiles, leaks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::FrameRecord;

    fn m(s: &str) -> Mac {
        s.parse().unwrap()
    }

    fn frames(mac: Mac, n: u64) -> Vec<FrameRecord> {
        (0..n).map(|i| FrameRecord::new(i * 1_000_000, 0, mac, 100, Proto::WifiData)).collect()
    }

    #[test]
    fn min_frames_boundary() {
        let reg = OuiRegistry::builtin();
        let pats = SetupPatterns::builtin();
        let cs = CaptureSet::new(frames(m("00:00:00:00:00:01"), 9), None).unwrap();
        assert!(build_inventory(&cs, &reg, &pats, DEFAULT_MIN_FRAMES).is_empty());
        let cs = CaptureSet::new(frames(m("00:00:00:00:00:01"), 10), None).unwrap();
        let inv = build_inventory(&cs, &reg, &pats, DEFAULT_MIN_FRAMES);
        assert_eq!(inv.len(), 1);
        assert_eq!(inv.profiles[0].identity, Identity::Unknown);
        assert_eq!((inv.profiles[0].first_seen_us, inv.profiles[0].last_seen_us), (0, 9_000_000));
    }

    #[test]
    fn ble_name_beats_oui() {
        let ht = m("08:b6:1f:71:08:b6");
        let mut recs = frames(ht, 10);
        let mut adv = vec![0x12, 0x09];
        adv.extend_from_slice(b"ShellyPlusHT-08B6");
        recs.push(FrameRecord::new(3, 1, ht, 31, Proto::BleAdv).with_info(InfoKey::BleAdv, adv));
        let inv = build_inventory(&CaptureSet::new(recs, None).unwrap(), &OuiRegistry::builtin(), &SetupPatterns::builtin(), 10);
        let p = &inv.profiles[0];
        assert_eq!(p.identity, Identity::ExactModel { name: "ShellyPlusHT".into() });
        assert_eq!(p.sources, [Source::Oui, Source::BleName].into_iter().collect());
        assert_eq!(p.vendor.as_deref(), Some("Espressif Inc."));
    }

    #[test]
    fn leaks_restricted_to_inventory() {
        let guest = m("ae:90:3c:71:5e:0d");
        let recs = vec![FrameRecord::new(1, 0, guest, 60, Proto::WifiProbeReq).with_info(InfoKey::Ssid, "x")];
        let inv = build_inventory(&CaptureSet::new(recs, None).unwrap(), &OuiRegistry::builtin(), &SetupPatterns::builtin(), 10);
        assert!(inv.leaks.is_empty());
    }
}
