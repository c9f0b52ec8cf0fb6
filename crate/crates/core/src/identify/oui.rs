//! OUI prefix → vendor registry.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::Serialize;

use super::{IdentifyError, Identity};
use crate::mac::Mac;

const BUILTIN: &str = include_str!("../../data/oui.tsv");

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OuiRegistry {
    map: BTreeMap<[u8; 3], String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OuiLoadReport {
    pub rows: usize,
    pub duplicates: usize,
    pub warnings: Vec<String>,
}

impl OuiRegistry {
    /// The registry fixture shipped with the crate.
    pub fn builtin() -> Self {
        load_oui_registry(BUILTIN.as_bytes()).expect("builtin registry is valid").0
    }

    pub fn get(&self, oui: [u8; 3]) -> Option<&str> {
        self.map.get(&oui).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

fn parse_prefix(s: &str) -> Option<[u8; 3]> {
    let hex: String = s.chars().filter(|c| !matches!(c, ':' | '-')).collect();
    if hex.len() != 6 {
        return None;
    }
    let b = hex::decode(hex).ok()?;
    Some([b[0], b[1], b[2]])
}

/// Reads `XX:XX:XX<TAB>Vendor` rows; `#` starts a comment. Duplicate
/// prefixes keep the last row and add a warning.
pub fn load_oui_registry<R: BufRead>(reader: R) -> Result<(OuiRegistry, OuiLoadReport), IdentifyError> {
    let mut reg = OuiRegistry::default();
    let mut rep = OuiLoadReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| IdentifyError::Io(e.to_string()))?;
        let line = line.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let Some((prefix, vendor)) = line.split_once('\t') else {
            rep.warnings.push(format!("line {}: expected prefix<TAB>vendor", i + 1));
            continue;
        };
        let vendor = vendor.trim();
        let Some(p) = parse_prefix(prefix.trim()) else {
            rep.warnings.push(format!("line {}: bad prefix {prefix:?}", i + 1));
            continue;
        };
        if vendor.is_empty() {
            rep.warnings.push(format!("line {}: empty vendor", i + 1));
            continue;
        }
        rep.rows += 1;
        if reg.map.insert(p, vendor.to_string()).is_some() {
            rep.duplicates += 1;
            rep.warnings.push(format!("line {}: duplicate prefix {}, last row wins", i + 1, prefix.trim()));
        }
    }
    if reg.map.is_empty() {
        return Err(IdentifyError::EmptyRegistry);
    }
    Ok((reg, rep))
}

/// Randomized if the locally-administered bit is set, else the registry vendor, else unknown.
pub fn lookup_vendor(mac: Mac, registry: &OuiRegistry) -> Identity {
    if mac.is_locally_administered() {
        return Identity::Randomized;
    }
    match registry.get(mac.oui()) {
        Some(v) => Identity::VendorOnly { vendor: v.to_string() },
        None => Identity::Unknown,
    }
}
