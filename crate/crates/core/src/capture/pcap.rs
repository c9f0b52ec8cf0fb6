//! Classic pcap files with radiotap (linktype 127) link headers.
//!
//! Only the header subset needed for metadata is decoded: the radiotap
//! antenna-signal field and the 802.11 frame control and address fields.
//! Data, beacon and probe-request frames become records; everything else is
//! skipped and counted.

use serde::Serialize;
use thiserror::Error;

use super::{FrameRecord, InfoKey, Proto, RSSI_MAX_DBM, RSSI_MIN_DBM};
use crate::mac::Mac;

pub const LINKTYPE_RADIOTAP: u32 = 127;
const MAGIC: u32 = 0xa1b2_c3d4;
const MAGIC_SWAPPED: u32 = 0xd4c3_b2a1;
const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;
const SNAPLEN: u32 = 65_535;
const WLAN_HEADER_LEN: usize = 24;
const BEACON_FIXED_LEN: usize = 12;
const MAX_SSID_LEN: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PcapError {
    #[error("unsupported format: magic 0x{0:08x} is not a classic pcap magic")]
    BadMagic(u32),
    #[error("unsupported pcap version {0}.{1}")]
    UnsupportedVersion(u16, u16),
    #[error("unsupported linktype {0} (only 127, radiotap, is handled)")]
    UnsupportedLinktype(u32),
    #[error("truncated input at byte offset {offset}: {what}")]
    Truncated { offset: usize, what: &'static str },
    #[error("malformed record at byte offset {offset}: {what}")]
    Malformed { offset: usize, what: String },
    #[error("cannot encode record at {ts_us} us: {what}")]
    Unencodable { ts_us: u64, what: String },
}

/// Per-file ingestion statistics.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PcapReport {
    pub packets: usize,
    pub records: usize,
    pub skipped_other_type: usize,
    pub skipped_short: usize,
    pub skipped_rssi_range: usize,
}

struct Reader<'a> {
    buf: &'a [u8],
    swapped: bool,
}

impl<'a> Reader<'a> {
    fn u16_at(&self, off: usize) -> u16 {
        let b = [self.buf[off], self.buf[off + 1]];
        if self.swapped {
            u16::from_be_bytes(b)
        } else {
            u16::from_le_bytes(b)
        }
    }

    fn u32_at(&self, off: usize) -> u32 {
        let b = [self.buf[off], self.buf[off + 1], self.buf[off + 2], self.buf[off + 3]];
        if self.swapped {
            u32::from_be_bytes(b)
        } else {
            u32::from_le_bytes(b)
        }
    }
}

/// Parses a pcap byte stream. Every record is attributed to `sniffer_id`.
/// Records are returned in file order.
pub fn parse_pcap_radiotap(bytes: &[u8], sniffer_id: u8) -> Result<(Vec<FrameRecord>, PcapReport), PcapError> {
    if bytes.len() < 4 {
        return Err(PcapError::Truncated { offset: bytes.len(), what: "global header" });
    }
    let magic = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    let swapped = match magic {
        MAGIC => false,
        MAGIC_SWAPPED => true,
        m => return Err(PcapError::BadMagic(m)),
    };
    if bytes.len() < GLOBAL_HEADER_LEN {
        return Err(PcapError::Truncated { offset: bytes.len(), what: "global header" });
    }
    let rd = Reader { buf: bytes, swapped };
    let (major, minor) = (rd.u16_at(4), rd.u16_at(6));
    if major != 2 {
        return Err(PcapError::UnsupportedVersion(major, minor));
    }
    let linktype = rd.u32_at(20);
    if linktype != LINKTYPE_RADIOTAP {
        return Err(PcapError::UnsupportedLinktype(linktype));
    }

    let mut report = PcapReport::default();
    let mut out = Vec::new();
    let mut off = GLOBAL_HEADER_LEN;
    while off < bytes.len() {
        if bytes.len() - off < RECORD_HEADER_LEN {
            return Err(PcapError::Truncated { offset: off, what: "record header" });
        }
        let ts_sec = rd.u32_at(off) as u64;
        let ts_usec = rd.u32_at(off + 4) as u64;
        let incl = rd.u32_at(off + 8);
        let orig = rd.u32_at(off + 12);
        if ts_usec >= 1_000_000 {
            return Err(PcapError::Malformed { offset: off, what: format!("sub-second field {ts_usec} >= 1e6") });
        }
        if incl > orig || incl > SNAPLEN {
            return Err(PcapError::Malformed { offset: off, what: format!("captured length {incl} vs original {orig}") });
        }
        let data_off = off + RECORD_HEADER_LEN;
        let incl = incl as usize;
        if bytes.len() - data_off < incl {
            return Err(PcapError::Truncated { offset: data_off, what: "packet data" });
        }
        let pkt = &bytes[data_off..data_off + incl];
        report.packets += 1;
        let ts_us = ts_sec * 1_000_000 + ts_usec;
        match decode_packet(pkt, orig as usize, data_off)? {
            Decoded::Record { src, dst, frame_len, rssi, proto, ssid } => {
                if let Some(r) = rssi {
                    if !(RSSI_MIN_DBM..=RSSI_MAX_DBM).contains(&r) {
                        report.skipped_rssi_range += 1;
                        off = data_off + incl;
                        continue;
                    }
                }
                let mut rec = FrameRecord::new(ts_us, sniffer_id, src, frame_len, proto);
                rec.dst_mac = dst;
                rec.rssi_dbm = rssi;
                if let Some(s) = ssid {
                    rec.info.insert(InfoKey::Ssid, s);
                }
                out.push(rec);
                report.records += 1;
            }
            Decoded::Short => report.skipped_short += 1,
            Decoded::Other => report.skipped_other_type += 1,
        }
        off = data_off + incl;
    }
    Ok((out, report))
}

enum Decoded {
    Record { src: Mac, dst: Option<Mac>, frame_len: u32, rssi: Option<i8>, proto: Proto, ssid: Option<Vec<u8>> },
    Short,
    Other,
}

/// Known radiotap fields preceding antenna signal: (size, alignment) for bits 0..=4.
const RT_FIELDS: [(usize, usize); 5] = [(8, 8), (1, 1), (1, 1), (4, 2), (2, 1)];
const RT_ANTENNA_SIGNAL: u32 = 5;
const RT_FLAGS_FCS: u8 = 0x10;

struct Radiotap {
    len: usize,
    rssi: Option<i8>,
    fcs: bool,
}

fn parse_radiotap(pkt: &[u8], base: usize) -> Result<Radiotap, PcapError> {
    if pkt.len() < 8 {
        return Err(PcapError::Truncated { offset: base + pkt.len(), what: "radiotap header" });
    }
    if pkt[0] != 0 {
        return Err(PcapError::Malformed { offset: base, what: format!("radiotap version {}", pkt[0]) });
    }
    let len = u16::from_le_bytes([pkt[2], pkt[3]]) as usize;
    if len < 8 || len > pkt.len() {
        return Err(PcapError::Malformed { offset: base + 2, what: format!("radiotap length {len}") });
    }
    let hdr = &pkt[..len];
    // Walk the present-word chain; fields start after the last word.
    let mut words = Vec::with_capacity(2);
    let mut p = 4;
    loop {
        if p + 4 > len {
            return Err(PcapError::Malformed { offset: base + p, what: "present bitmask chain overruns header".into() });
        }
        let w = u32::from_le_bytes([hdr[p], hdr[p + 1], hdr[p + 2], hdr[p + 3]]);
        words.push(w);
        p += 4;
        if w & (1 << 31) == 0 {
            break;
        }
    }
    let present = words[0];
    let mut rssi = None;
    let mut fcs = false;
    let mut cur = p;
    for bit in 0..=RT_ANTENNA_SIGNAL {
        if present & (1 << bit) == 0 {
            continue;
        }
        let (size, align) = if bit == RT_ANTENNA_SIGNAL { (1, 1) } else { RT_FIELDS[bit as usize] };
        cur = cur.div_ceil(align) * align;
        if cur + size > len {
            return Err(PcapError::Malformed { offset: base + cur, what: format!("radiotap field {bit} overruns header") });
        }
        match bit {
            1 => fcs = hdr[cur] & RT_FLAGS_FCS != 0,
            5 => rssi = Some(hdr[cur] as i8),
            _ => {}
        }
        cur += size;
    }
    Ok(Radiotap { len, rssi, fcs })
}

fn mac_at(b: &[u8], off: usize) -> Mac {
    let mut m = [0u8; 6];
    m.copy_from_slice(&b[off..off + 6]);
    Mac(m)
}

fn decode_packet(pkt: &[u8], orig_len: usize, base: usize) -> Result<Decoded, PcapError> {
    let rt = parse_radiotap(pkt, base)?;
    let wlan = &pkt[rt.len..];
    let wbase = base + rt.len;
    let fcs_len = if rt.fcs { 4 } else { 0 };
    if orig_len < rt.len + fcs_len {
        return Err(PcapError::Malformed { offset: base, what: format!("original length {orig_len} shorter than radiotap header") });
    }
    let frame_len = (orig_len - rt.len - fcs_len) as u32;
    if wlan.len() < 2 {
        return Ok(Decoded::Short);
    }
    let fc = wlan[0];
    if fc & 0x03 != 0 {
        return Ok(Decoded::Other);
    }
    let ftype = (fc >> 2) & 0x03;
    let subtype = fc >> 4;
    let proto = match (ftype, subtype) {
        (2, _) => Proto::WifiData,
        (0, 8) => Proto::WifiBeacon,
        (0, 4) => Proto::WifiProbeReq,
        _ => return Ok(Decoded::Other),
    };
    if wlan.len() < WLAN_HEADER_LEN || (frame_len as usize) < WLAN_HEADER_LEN {
        return Ok(Decoded::Short);
    }
    let addr1 = mac_at(wlan, 4);
    let src = mac_at(wlan, 10);
    let dst = if addr1.is_broadcast() { None } else { Some(addr1) };
    let ssid = match proto {
        Proto::WifiData => None,
        Proto::WifiBeacon => find_ssid(wlan, WLAN_HEADER_LEN + BEACON_FIXED_LEN, frame_len as usize, wbase)?,
        Proto::WifiProbeReq => find_ssid(wlan, WLAN_HEADER_LEN, frame_len as usize, wbase)?,
        Proto::BleAdv => unreachable!(),
    };
    Ok(Decoded::Record { src, dst, frame_len, rssi: rt.rssi, proto, ssid })
}

/// Scans information elements for the SSID. Stops quietly where the capture
/// was cut short by the snap length; an element overrunning the original
/// frame is malformed.
fn find_ssid(wlan: &[u8], start: usize, frame_len: usize, base: usize) -> Result<Option<Vec<u8>>, PcapError> {
    let mut p = start;
    let end = wlan.len().min(frame_len);
    while p + 2 <= end {
        let (id, l) = (wlan[p], wlan[p + 1] as usize);
        if p + 2 + l > frame_len {
            return Err(PcapError::Malformed { offset: base + p, what: format!("element {id} length {l} overruns frame") });
        }
        if p + 2 + l > end {
            return Ok(None);
        }
        if id == 0 {
            if l > MAX_SSID_LEN {
                return Err(PcapError::Malformed { offset: base + p, what: format!("SSID length {l}") });
            }
            let v = &wlan[p + 2..p + 2 + l];
            return Ok(if v.is_empty() { None } else { Some(v.to_vec()) });
        }
        p += 2 + l;
    }
    Ok(None)
}

/// Serializes WiFi records to a little-endian pcap. Only header bytes are
/// written: the original length carries `frame_len`, the payload is absent.
pub fn write_pcap_radiotap(records: &[FrameRecord]) -> Result<Vec<u8>, PcapError> {
    let mut out = Vec::with_capacity(GLOBAL_HEADER_LEN + records.len() * 64);
    out.extend_from_slice(&MAGIC.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&0i32.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&SNAPLEN.to_le_bytes());
    out.extend_from_slice(&LINKTYPE_RADIOTAP.to_le_bytes());
    for r in records {
        encode_record(r, &mut out)?;
    }
    Ok(out)
}

fn encode_record(r: &FrameRecord, out: &mut Vec<u8>) -> Result<(), PcapError> {
    let bad = |what: &str| PcapError::Unencodable { ts_us: r.ts_us, what: what.to_string() };
    let ts_sec = u32::try_from(r.ts_us / 1_000_000).map_err(|_| bad("timestamp exceeds 32-bit seconds"))?;
    let ts_usec = (r.ts_us % 1_000_000) as u32;

    let mut pkt = Vec::with_capacity(80);
    // radiotap
    pkt.extend_from_slice(&[0, 0]);
    match r.rssi_dbm {
        Some(v) => {
            pkt.extend_from_slice(&9u16.to_le_bytes());
            pkt.extend_from_slice(&(1u32 << RT_ANTENNA_SIGNAL).to_le_bytes());
            pkt.push(v as u8);
        }
        None => {
            pkt.extend_from_slice(&8u16.to_le_bytes());
            pkt.extend_from_slice(&0u32.to_le_bytes());
        }
    }
    let rt_len = pkt.len();

    let fc: u8 = match r.proto {
        Proto::WifiData => 0x08,
        Proto::WifiBeacon => 0x80,
        Proto::WifiProbeReq => 0x40,
        Proto::BleAdv => return Err(bad("BLE advertisements have no 802.11 encoding")),
    };
    for (k, _) in r.info.iter() {
        if k != InfoKey::Ssid || r.proto == Proto::WifiData {
            return Err(bad(&format!("info field {} not representable", k.keyword())));
        }
    }
    if r.dst_mac.is_some_and(|d| d.is_broadcast()) {
        return Err(bad("explicit broadcast destination is implied by an absent one"));
    }
    let addr1 = r.dst_mac.unwrap_or(Mac::BROADCAST);
    pkt.extend_from_slice(&[fc, 0, 0, 0]);
    pkt.extend_from_slice(&addr1.0);
    pkt.extend_from_slice(&r.src_mac.0);
    pkt.extend_from_slice(&r.src_mac.0);
    pkt.extend_from_slice(&[0, 0]);
    if r.proto == Proto::WifiBeacon {
        pkt.extend_from_slice(&[0; 8]);
        pkt.extend_from_slice(&100u16.to_le_bytes());
        pkt.extend_from_slice(&0x0431u16.to_le_bytes());
    }
    if r.proto != Proto::WifiData {
        let ssid = r.info.get(InfoKey::Ssid).unwrap_or(&[]);
        if r.info.get(InfoKey::Ssid).is_some_and(<[u8]>::is_empty) {
            return Err(bad("empty SSID is indistinguishable from a hidden one"));
        }
        if ssid.len() > MAX_SSID_LEN {
            return Err(bad("SSID longer than 32 bytes"));
        }
        pkt.push(0);
        pkt.push(ssid.len() as u8);
        pkt.extend_from_slice(ssid);
    }
    let wlan_len = pkt.len() - rt_len;
    if (r.frame_len as usize) < wlan_len {
        return Err(bad(&format!("frame_len {} shorter than its {wlan_len}-byte header", r.frame_len)));
    }
    let orig = rt_len as u64 + r.frame_len as u64;
    let orig = u32::try_from(orig).map_err(|_| bad("frame_len too large"))?;

    out.extend_from_slice(&ts_sec.to_le_bytes());
    out.extend_from_slice(&ts_usec.to_le_bytes());
    out.extend_from_slice(&(pkt.len() as u32).to_le_bytes());
    out.extend_from_slice(&orig.to_le_bytes());
    out.extend_from_slice(&pkt);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_magic() {
        let mut b = vec![0x78, 0x56, 0x34, 0x12];
        b.resize(24, 0);
        assert_eq!(parse_pcap_radiotap(&b, 0).unwrap_err(), PcapError::BadMagic(0x1234_5678));
    }

    #[test]
    fn linktype_is_named() {
        let mut b = write_pcap_radiotap(&[]).unwrap();
        b[20] = 105;
        let e = parse_pcap_radiotap(&b, 0).unwrap_err();
        assert_eq!(e, PcapError::UnsupportedLinktype(105));
        assert!(e.to_string().contains("105"));
    }

    #[test]
    fn swapped_magic_reads_big_endian() {
        let mut b = Vec::new();
        b.extend_from_slice(&MAGIC.to_be_bytes());
        b.extend_from_slice(&2u16.to_be_bytes());
        b.extend_from_slice(&4u16.to_be_bytes());
        b.extend_from_slice(&[0; 8]);
        b.extend_from_slice(&SNAPLEN.to_be_bytes());
        b.extend_from_slice(&LINKTYPE_RADIOTAP.to_be_bytes());
        let (recs, rep) = parse_pcap_radiotap(&b, 0).unwrap();
        assert!(recs.is_empty());
        assert_eq!(rep.packets, 0);
    }

    #[test]
    fn control_frame_skipped() {
        let mut b = write_pcap_radiotap(&[]).unwrap();
        let pkt: Vec<u8> = [0u8, 0, 8, 0, 0, 0, 0, 0].into_iter().chain([0xd4, 0, 0, 0]).chain([0xff; 6]).collect();
        b.extend_from_slice(&1u32.to_le_bytes());
        b.extend_from_slice(&0u32.to_le_bytes());
        b.extend_from_slice(&(pkt.len() as u32).to_le_bytes());
        b.extend_from_slice(&(pkt.len() as u32).to_le_bytes());
        b.extend_from_slice(&pkt);
        let (recs, rep) = parse_pcap_radiotap(&b, 0).unwrap();
        assert!(recs.is_empty());
        assert_eq!(rep.skipped_other_type, 1);
    }

    #[test]
    fn extended_present_words_are_skipped() {
        // present word 0 has bit 31 (ext) and bit 5; a second word follows
        let mut pkt = vec![0u8, 0, 13, 0];
        pkt.extend_from_slice(&((1u32 << 31) | (1 << 5)).to_le_bytes());
        pkt.extend_from_slice(&0u32.to_le_bytes());
        pkt.push((-61i8) as u8);
        pkt.extend_from_slice(&[0x08, 0, 0, 0]);
        pkt.extend_from_slice(&[0xff; 6]);
        pkt.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        pkt.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        pkt.extend_from_slice(&[0, 0]);
        let mut b = write_pcap_radiotap(&[]).unwrap();
        b.extend_from_slice(&7u32.to_le_bytes());
        b.extend_from_slice(&0u32.to_le_bytes());
        b.extend_from_slice(&(pkt.len() as u32).to_le_bytes());
        b.extend_from_slice(&(pkt.len() as u32 + 100).to_le_bytes());
        b.extend_from_slice(&pkt);
        let (recs, _) = parse_pcap_radiotap(&b, 2).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].rssi_dbm, Some(-61));
        assert_eq!(recs[0].frame_len, 124);
        assert_eq!(recs[0].sniffer_id, 2);
        assert_eq!(recs[0].src_mac, Mac([1, 2, 3, 4, 5, 6]));
    }

    #[test]
    fn tsft_alignment_before_signal() {
        // TSFT (8 bytes, 8-aligned) then Flags then antenna signal
        let mut pkt = vec![0u8, 0, 18, 0];
        pkt.extend_from_slice(&0b100011u32.to_le_bytes());
        pkt.extend_from_slice(&[0xaa; 8]);
        pkt.push(0);
        pkt.push((-42i8) as u8);
        pkt.extend_from_slice(&[0x08, 0, 0, 0]);
        pkt.extend_from_slice(&[0xff; 6]);
        pkt.extend_from_slice(&[9; 6]);
        pkt.extend_from_slice(&[9; 6]);
        pkt.extend_from_slice(&[0, 0]);
        let mut b = write_pcap_radiotap(&[]).unwrap();
        b.extend_from_slice(&[0; 4]);
        b.extend_from_slice(&[0; 4]);
        b.extend_from_slice(&(pkt.len() as u32).to_le_bytes());
        b.extend_from_slice(&(pkt.len() as u32).to_le_bytes());
        b.extend_from_slice(&pkt);
        let (recs, _) = parse_pcap_radiotap(&b, 0).unwrap();
        assert_eq!(recs[0].rssi_dbm, Some(-42));
        assert_eq!(recs[0].frame_len, 24);
    }

    #[test]
    fn writer_rejects_unrepresentable() {
        let m = Mac([2; 6]);
        assert!(write_pcap_radiotap(&[FrameRecord::new(0, 0, m, 30, Proto::BleAdv)]).is_err());
        assert!(write_pcap_radiotap(&[FrameRecord::new(0, 0, m, 10, Proto::WifiData)]).is_err());
        assert!(write_pcap_radiotap(&[FrameRecord::new(0, 0, m, 60, Proto::WifiData).with_info(InfoKey::Ssid, "x")]).is_err());
    }
}
