//! Device inventory from MAC prefixes, BLE names and installation-phase leaks.

pub mod ble;
pub mod inventory;
pub mod leaks;
pub mod oui;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mac::Mac;

pub use ble::{parse_ble_adv, AdFields, AD_COMPLETE_LOCAL_NAME, AD_SHORT_LOCAL_NAME};
pub use inventory::{build_inventory, Inventory, DEFAULT_MIN_FRAMES};
pub use leaks::{extract_setup_leaks, SetupPatterns};
pub use oui::{load_oui_registry, lookup_vendor, OuiLoadReport, OuiRegistry};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdentifyError {
    #[error("OUI registry has no valid rows")]
    EmptyRegistry,
    #[error("I/O error: {0}")]
    Io(String),
    #[error("BLE advertisement truncated at byte {offset}: structure claims {claimed} bytes, {remaining} remain")]
    BleTruncated { offset: usize, claimed: usize, remaining: usize },
    #[error("invalid setup pattern {pattern:?}: {message}")]
    BadPattern { pattern: String, message: String },
}

/// What the attacker can say about a device.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Identity {
    ExactModel { name: String },
    VendorOnly { vendor: String },
    Randomized,
    Unknown,
}

impl Identity {
    pub fn class(&self) -> &'static str {
        match self {
            Identity::ExactModel { .. } => "exact_model",
            Identity::VendorOnly { .. } => "vendor_only",
            Identity::Randomized => "randomized",
            Identity::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Identity::ExactModel { name } => f.write_str(name),
            Identity::VendorOnly { vendor } => write!(f, "{vendor} device"),
            Identity::Randomized => f.write_str("randomized MAC"),
            Identity::Unknown => f.write_str("unknown"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Oui,
    BleName,
    SetupLeak,
    TrafficShape,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficProfile {
    Autonomous,
    Interactive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mobility {
    Static,
    Mobile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub mac: Mac,
    pub identity: Identity,
    pub sources: BTreeSet<Source>,
    /// Registry vendor, kept even when a more specific identity wins.
    pub vendor: Option<String>,
    pub profile: Option<TrafficProfile>,
    pub mobility: Option<Mobility>,
    pub first_seen_us: u64,
    pub last_seen_us: u64,
    pub frames: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakKind {
    SetupSsid,
    PlaintextCredentials,
    MdnsName,
    ProbeSsid,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LeakEvent {
    pub ts_us: u64,
    pub mac: Mac,
    pub kind: LeakKind,
    pub value: String,
}

/// Turns a leaked SSID, BLE or mDNS name into a model label:
/// separators become spaces and a trailing `-<hex>` per-unit suffix is dropped.
pub fn model_name(raw: &str) -> String {
    let trimmed = match raw.rsplit_once('-') {
        Some((head, tail)) if tail.len() >= 4 && tail.chars().all(|c| c.is_ascii_hexdigit()) && tail.chars().any(|c| c.is_ascii_digit()) => head,
        _ => raw,
    };
    trimmed.replace(['_', '-'], " ").split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_names() {
        assert_eq!(model_name("Tapo_Bulb_E225"), "Tapo Bulb E225");
        assert_eq!(model_name("ShellyPlusHT-08B6"), "ShellyPlusHT");
        assert_eq!(model_name("Redmi-Note-8-Pro"), "Redmi Note 8 Pro");
        assert_eq!(model_name("ShellyMotion2-8CF6815D2A03"), "ShellyMotion2");
        assert_eq!(model_name("[LG] webOS TV UQ75009LF"), "[LG] webOS TV UQ75009LF");
    }
}
