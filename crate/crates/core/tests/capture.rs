use std::io::Cursor;

use hearsay::capture::{
    bin_traffic, merge_sniffers, parse_capture_records, parse_pcap_radiotap, write_capture_records, write_pcap_radiotap, CaptureSet, FrameRecord, InfoKey,
    PcapError, Proto, DEFAULT_MAX_SKEW_US,
};
use hearsay::mac::Mac;
use proptest::prelude::*;

const BEACON: &[u8] = include_bytes!("fixtures/beacon_testnet.pcap");
const MIXED_BE: &[u8] = include_bytes!("fixtures/mixed_be.pcap");
const EXCERPT: &str = include_str!("fixtures/household_excerpt.wwcap");

fn mac(s: &str) -> Mac {
    s.parse().unwrap()
}

#[test]
fn beacon_fixture_decodes() {
    let (recs, rep) = parse_pcap_radiotap(BEACON, 1).unwrap();
    assert_eq!(rep.packets, 1);
    assert_eq!(recs.len(), 1);
    let r = &recs[0];
    assert_eq!(r.proto, Proto::WifiBeacon);
    assert_eq!(r.rssi_dbm, Some(-55));
    assert_eq!(r.info.get(InfoKey::Ssid), Some(&b"TestNet"[..]));
    assert_eq!(r.src_mac, mac("24:2f:d0:00:5e:01"));
    assert_eq!(r.dst_mac, None);
    assert_eq!(r.ts_us, 1_700_000_000_123_456);
    assert_eq!(r.frame_len, 51);
    assert_eq!(r.sniffer_id, 1);
}

#[test]
fn mixed_big_endian_fixture_decodes() {
    let (recs, rep) = parse_pcap_radiotap(MIXED_BE, 0).unwrap();
    assert_eq!((rep.packets, rep.records, rep.skipped_other_type), (3, 2, 1));
    assert_eq!(recs[0].proto, Proto::WifiProbeReq);
    assert_eq!(recs[0].src_mac, mac("ae:90:3c:71:5e:0d"));
    assert_eq!(recs[0].rssi_dbm, Some(-71));
    assert_eq!(recs[0].frame_len, 38);
    assert_eq!(recs[0].info.get_str(InfoKey::Ssid).as_deref(), Some("HomeNet5"));
    assert_eq!(recs[1].proto, Proto::WifiData);
    assert_eq!(recs[1].src_mac, mac("a4:45:19:8b:0f:22"));
    assert_eq!(recs[1].dst_mac, Some(mac("24:2f:d0:00:5e:01")));
    assert_eq!(recs[1].frame_len, 1500);
    assert_eq!(recs[1].rssi_dbm, Some(-48));
    assert_eq!(recs[1].ts_us, 1_700_000_100_250_000);
}

#[test]
fn every_truncation_reports_offset() {
    for cut in 0..BEACON.len() {
        match parse_pcap_radiotap(&BEACON[..cut], 0) {
            Ok((recs, _)) => assert!(cut == 24 && recs.is_empty(), "cut {cut} parsed"),
            Err(PcapError::Truncated { offset, .. }) => assert!(offset <= cut),
            Err(PcapError::BadMagic(_)) => panic!("cut {cut}: magic misread"),
            Err(e) => panic!("cut {cut}: {e}"),
        }
    }
}

#[test]
fn excerpt_golden_roundtrip() {
    let (cs, rep) = parse_capture_records(Cursor::new(EXCERPT)).unwrap();
    assert_eq!(rep.malformed_count(), 0);
    assert_eq!(cs.len(), 6);
    assert_eq!(cs.sniffer_count(), 3);
    let mut out = Vec::new();
    write_capture_records(&cs, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), EXCERPT);
}

fn arb_mac() -> impl Strategy<Value = Mac> {
    any::<[u8; 6]>().prop_map(Mac)
}

fn arb_wifi_record() -> impl Strategy<Value = FrameRecord> {
    (
        0u64..4_000_000_000_000_000,
        0u8..3,
        arb_mac(),
        proptest::option::of(arb_mac().prop_filter("not broadcast", |m| !m.is_broadcast())),
        // 24-byte header + 12 fixed beacon bytes + a 2+32 byte SSID element fit in 70
        72u32..3000,
        proptest::option::of(-120i8..=0),
        prop_oneof![Just(Proto::WifiData), Just(Proto::WifiBeacon), Just(Proto::WifiProbeReq)],
        proptest::option::of(proptest::collection::vec(any::<u8>(), 1..=32)),
    )
        .prop_map(|(ts, sn, src, dst, len, rssi, proto, ssid)| {
            let mut r = FrameRecord::new(ts, sn, src, len, proto);
            r.dst_mac = dst;
            r.rssi_dbm = rssi;
            if proto != Proto::WifiData {
                if let Some(s) = ssid {
                    r.info.insert(InfoKey::Ssid, s);
                }
            }
            r
        })
}

fn arb_any_record() -> impl Strategy<Value = FrameRecord> {
    (
        0u64..100_000_000,
        0u8..3,
        prop_oneof![Just(Mac([1; 6])), Just(Mac([2; 6])), arb_mac()],
        0u32..3000,
        proptest::option::of(-120i8..=0),
        prop_oneof![Just(Proto::WifiData), Just(Proto::BleAdv), Just(Proto::WifiBeacon)],
        proptest::option::of(proptest::collection::vec(any::<u8>(), 0..20)),
    )
        .prop_map(|(ts, sn, src, len, rssi, proto, info)| {
            let mut r = FrameRecord::new(ts, sn, src, len, proto);
            r.rssi_dbm = rssi;
            if let Some(v) = info {
                r.info.insert(InfoKey::MdnsName, v);
            }
            r
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pcap_roundtrip(recs in proptest::collection::vec(arb_wifi_record(), 0..40), sniffer in 0u8..3) {
        let recs: Vec<FrameRecord> = recs.into_iter().map(|mut r| { r.sniffer_id = sniffer; r }).collect();
        let bytes = write_pcap_radiotap(&recs).unwrap();
        let (back, rep) = parse_pcap_radiotap(&bytes, sniffer).unwrap();
        prop_assert_eq!(rep.records, recs.len());
        prop_assert_eq!(back, recs);
    }

    #[test]
    fn wwcap_roundtrip_and_sorted(recs in proptest::collection::vec(arb_any_record(), 0..60)) {
        let cs = CaptureSet::new(recs, None).unwrap();
        prop_assert!(cs.is_sorted());
        let mut out = Vec::new();
        write_capture_records(&cs, &mut out).unwrap();
        let (back, _) = parse_capture_records(Cursor::new(out)).unwrap();
        prop_assert_eq!(back, cs);
    }

    #[test]
    fn merge_sorts_shuffled_inputs(recs in proptest::collection::vec(arb_any_record(), 0..90)) {
        let mut parts: [Vec<FrameRecord>; 3] = Default::default();
        for r in recs.iter().cloned() {
            parts[r.sniffer_id as usize].push(r);
        }
        let sets: Vec<CaptureSet> = parts.into_iter().map(|p| CaptureSet::new(p, None).unwrap()).collect();
        let (m, _) = merge_sniffers(sets, DEFAULT_MAX_SKEW_US).unwrap();
        prop_assert!(m.is_sorted());
        prop_assert_eq!(m.len(), recs.len());
        let mut expect = recs;
        expect.sort();
        prop_assert_eq!(m.records(), &expect[..]);
    }

    #[test]
    fn binning_conserves_and_rebins(recs in proptest::collection::vec(arb_any_record(), 1..80), w in 1u32..7, k in 1u32..5) {
        let cs = CaptureSet::new(recs, Some((0, 100_000_000))).unwrap();
        let m = Mac([1; 6]);
        let expect = cs.records().iter().filter(|r| r.src_mac == m).count() as u64;
        let fine = bin_traffic(&cs, m, w).unwrap();
        prop_assert_eq!(fine.total_frames(), expect);
        prop_assert_eq!(fine.counts.len(), fine.bytes.len());
        prop_assert_eq!(fine.counts.len() as u64, 100u64.div_ceil(w as u64));
        if 100 % (w * k) == 0 {
            let coarse = bin_traffic(&cs, m, w * k).unwrap();
            let summed: Vec<u32> = fine.counts.chunks(k as usize).map(|c| c.iter().sum()).collect();
            prop_assert_eq!(summed, coarse.counts);
        }
    }
}
