//! Plaintext leaks: setup-AP SSIDs, probed SSIDs, mDNS names, cleartext credentials.

use std::collections::BTreeMap;
use std::io::BufRead;

use glob::{MatchOptions, Pattern};

use super::{IdentifyError, LeakEvent, LeakKind};
use crate::capture::{CaptureSet, FrameRecord, InfoKey, Proto};
use crate::mac::Mac;

const BUILTIN: &str = include_str!("../../data/setup_patterns.txt");
const CASELESS: MatchOptions = MatchOptions { case_sensitive: false, require_literal_separator: false, require_literal_leading_dot: false };

/// Glob patterns recognising vendor setup access points.
#[derive(Clone, Debug, Default)]
pub struct SetupPatterns {
    patterns: Vec<Pattern>,
}

impl SetupPatterns {
    pub fn builtin() -> Self {
        Self::load(BUILTIN.as_bytes()).expect("builtin patterns are valid")
    }

    /// One glob per line, `#` comments.
    pub fn load<R: BufRead>(reader: R) -> Result<Self, IdentifyError> {
        let mut patterns = Vec::new();
        for line in reader.lines() {
            let line = line.map_err(|e| IdentifyError::Io(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            patterns.push(Pattern::new(line).map_err(|e| IdentifyError::BadPattern { pattern: line.to_string(), message: e.to_string() })?);
        }
        Ok(Self { patterns })
    }

    pub fn from_globs<S: AsRef<str>>(globs: &[S]) -> Result<Self, IdentifyError> {
        let text = globs.iter().map(|g| g.as_ref()).collect::<Vec<_>>().join("\n");
        Self::load(text.as_bytes())
    }

    pub fn matches(&self, ssid: &str) -> bool {
        self.patterns.iter().any(|p| p.matches_with(ssid, CASELESS))
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }
}

/// Leaks carried by a single record, if any.
pub(crate) fn record_leaks(r: &FrameRecord, patterns: &SetupPatterns, out: &mut Vec<LeakEvent>) {
    if r.info.is_empty() {
        return;
    }
    let mut push = |kind, value: String| {
        if !value.is_empty() {
            out.push(LeakEvent { ts_us: r.ts_us, mac: r.src_mac, kind, value });
        }
    };
    if let Some(ssid) = r.info.get_str(InfoKey::Ssid) {
        match r.proto {
            Proto::WifiBeacon if patterns.matches(&ssid) => push(LeakKind::SetupSsid, ssid),
            Proto::WifiProbeReq => push(LeakKind::ProbeSsid, ssid),
            // an SSID inside a data frame only exists on an unencrypted setup link
            Proto::WifiData => push(LeakKind::PlaintextCredentials, ssid),
            _ => {}
        }
    }
    if let Some(name) = r.info.get_str(InfoKey::MdnsName) {
        push(LeakKind::MdnsName, name);
    }
}

/// Keeps the earliest event per (mac, kind, value) and orders by time.
pub(crate) fn dedup_leaks(events: Vec<LeakEvent>) -> Vec<LeakEvent> {
    let mut first: BTreeMap<(Mac, LeakKind, String), u64> = BTreeMap::new();
    for e in events {
        let slot = first.entry((e.mac, e.kind, e.value)).or_insert(e.ts_us);
        *slot = (*slot).min(e.ts_us);
    }
    let mut out: Vec<LeakEvent> = first.into_iter().map(|((mac, kind, value), ts_us)| LeakEvent { ts_us, mac, kind, value }).collect();
    out.sort();
    out
}

/// Scans a capture for plaintext leaks.
pub fn extract_setup_leaks(capture: &CaptureSet, patterns: &SetupPatterns) -> Vec<LeakEvent> {
    let mut raw = Vec::new();
    for r in capture.records() {
        record_leaks(r, patterns, &mut raw);
    }
    dedup_leaks(raw)
}
