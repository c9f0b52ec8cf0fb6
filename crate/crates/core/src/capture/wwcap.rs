//! Canonical `.wwcap` capture format.
//!
//! UTF-8, one record per line, tab-separated fields in fixed order:
//!
//! ```text
//! ts_us  sniffer_id  src_mac  dst_mac|-  frame_len  rssi_dbm|-  proto  [key=hexvalue ...]
//! ```
//!
//! Lines starting with `#` are comments. Two comment directives are
//! understood: `# window <t_start_us> <t_end_us>` and `# sniffers <n>`.

use std::io::{BufRead, Write};

use serde::Serialize;

use super::{CaptureError, CaptureSet, FrameRecord, InfoKey, Proto, RSSI_MAX_DBM, RSSI_MIN_DBM};
use crate::mac::Mac;

pub const FORMAT_HEADER: &str = "# wwcap 1";
/// Sniffer ids are 0, 1 or 2.
pub const MAX_SNIFFERS: u8 = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

/// Outcome of a tolerant parse: how many lines were seen and which ones failed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    pub record_lines: usize,
    pub records: usize,
    pub malformed: Vec<LineError>,
}

impl ParseReport {
    pub fn malformed_count(&self) -> usize {
        self.malformed.len()
    }
}

/// Parses a `.wwcap` stream. Malformed lines are collected in the report;
/// more than half of the record lines malformed fails the whole file.
pub fn parse_capture_records<R: BufRead>(mut reader: R) -> Result<(CaptureSet, ParseReport), CaptureError> {
    let mut report = ParseReport::default();
    let mut records = Vec::new();
    let mut window: Option<(u64, u64)> = None;
    let mut sniffers: Option<u8> = None;
    let mut buf = String::new();
    let mut line_no = 0usize;
    loop {
        buf.clear();
        if reader.read_line(&mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let line = buf.trim_end_matches(['\n', '\r']);
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            parse_directive(comment.trim(), &mut window, &mut sniffers);
            continue;
        }
        report.record_lines += 1;
        match parse_line(line) {
            Ok(rec) => records.push(rec),
            Err(message) => report.malformed.push(LineError { line: line_no, message }),
        }
    }

    if let Some((s, e)) = window {
        let mut kept = Vec::with_capacity(records.len());
        for rec in records {
            if rec.ts_us < s || rec.ts_us > e {
                report.malformed.push(LineError { line: 0, message: format!("timestamp {} outside declared window [{s}, {e}]", rec.ts_us) });
            } else {
                kept.push(rec);
            }
        }
        records = kept;
    }

    let bad = report.malformed.len();
    if bad * 2 > report.record_lines {
        let first = report.malformed.first().cloned().unwrap_or(LineError { line: 0, message: String::new() });
        return Err(CaptureError::TooManyMalformed { malformed: bad, total: report.record_lines, first_line: first.line, first_message: first.message });
    }
    report.records = records.len();
    let window = match window {
        Some(w) if w.0 <= w.1 => Some(w),
        _ => None,
    };
    let mut set = CaptureSet::new(records, window)?;
    if let Some(n) = sniffers {
        set = set.with_sniffer_count(n);
    }
    Ok((set, report))
}

fn parse_directive(comment: &str, window: &mut Option<(u64, u64)>, sniffers: &mut Option<u8>) {
    let mut it = comment.split_whitespace();
    match it.next() {
        Some("window") => {
            let s = it.next().and_then(|v| v.parse().ok());
            let e = it.next().and_then(|v| v.parse().ok());
            if let (Some(s), Some(e)) = (s, e) {
                *window = Some((s, e));
            }
        }
        Some("sniffers") => {
            if let Some(n) = it.next().and_then(|v| v.parse().ok()) {
                *sniffers = Some(n);
            }
        }
        _ => {}
    }
}

fn parse_line(line: &str) -> Result<FrameRecord, String> {
    let mut fields = line.split('\t');
    let mut next = |name: &str| fields.next().ok_or_else(|| format!("missing field {name}"));

    let ts_us: u64 = next("ts_us")?.parse().map_err(|_| "bad ts_us".to_string())?;
    let sniffer_id: u8 = next("sniffer_id")?.parse().map_err(|_| "bad sniffer_id".to_string())?;
    if sniffer_id >= MAX_SNIFFERS {
        return Err(format!("sniffer_id {sniffer_id} out of range"));
    }
    let src_mac: Mac = next("src_mac")?.parse().map_err(|e| format!("{e}"))?;
    let dst_mac = match next("dst_mac")? {
        "-" => None,
        s => Some(s.parse::<Mac>().map_err(|e| format!("{e}"))?),
    };
    let frame_len: u32 = next("frame_len")?.parse().map_err(|_| "bad frame_len".to_string())?;
    let rssi_dbm = match next("rssi_dbm")? {
        "-" => None,
        s => {
            let v: i8 = s.parse().map_err(|_| format!("bad rssi_dbm {s:?}"))?;
            if !(RSSI_MIN_DBM..=RSSI_MAX_DBM).contains(&v) {
                return Err(format!("rssi_dbm {v} out of range"));
            }
            Some(v)
        }
    };
    let proto: Proto = next("proto")?.parse()?;
    let mut rec = FrameRecord { ts_us, sniffer_id, src_mac, dst_mac, frame_len, rssi_dbm, proto, info: Default::default() };
    for pair in fields {
        let (k, v) = pair.split_once('=').ok_or_else(|| format!("info pair without '=': {pair:?}"))?;
        let key: InfoKey = k.parse()?;
        let value = hex::decode(v).map_err(|e| format!("info {k}: {e}"))?;
        rec.info.insert(key, value);
    }
    Ok(rec)
}

/// Writes `capture` in canonical form, header directives first.
pub fn write_capture_records<W: Write>(capture: &CaptureSet, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{FORMAT_HEADER}")?;
    writeln!(w, "# window {} {}", capture.t_start_us(), capture.t_end_us())?;
    writeln!(w, "# sniffers {}", capture.sniffer_count())?;
    for r in capture.records() {
        write_record(r, &mut w)?;
    }
    Ok(())
}

fn write_record<W: Write>(r: &FrameRecord, w: &mut W) -> std::io::Result<()> {
    write!(w, "{}\t{}\t{}\t", r.ts_us, r.sniffer_id, r.src_mac)?;
    match r.dst_mac {
        Some(d) => write!(w, "{d}\t")?,
        None => w.write_all(b"-\t")?,
    }
    write!(w, "{}\t", r.frame_len)?;
    match r.rssi_dbm {
        Some(v) => write!(w, "{v}\t")?,
        None => w.write_all(b"-\t")?,
    }
    w.write_all(r.proto.keyword().as_bytes())?;
    for (k, v) in r.info.iter() {
        write!(w, "\t{}={}", k.keyword(), hex::encode(v))?;
    }
    w.write_all(b"\n")
}
