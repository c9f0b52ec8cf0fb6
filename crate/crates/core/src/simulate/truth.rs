//! Ground truth written beside simulated captures.

use serde::{Deserialize, Serialize};

use crate::har::EventKind;
use crate::identify::{Mobility, TrafficProfile};
use crate::mac::Mac;
use crate::states::{Segment, State};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub start_us: u64,
    pub end_us: u64,
    pub utc_offset_s: i32,
    pub sniffers: [[f64; 2]; 3],
    pub devices: Vec<TruthDevice>,
    pub subjects: Vec<TruthSubject>,
    pub events: Vec<TruthEvent>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthDevice {
    pub mac: Mac,
    pub name: String,
    /// "exact_model", "vendor_only" or "randomized"
    pub identity_class: String,
    pub model: Option<String>,
    pub profile: TrafficProfile,
    pub mobility: Mobility,
    pub position: Option<[f64; 2]>,
    pub track: Vec<TrackStop>,
    pub segments: Vec<Segment>,
    pub frames: u64,
    /// Records delivered and frames lost below the sensitivity floor, per sniffer.
    pub records: [u64; 3],
    pub dropped: [u64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackStop {
    pub t_us: u64,
    pub room: String,
    pub position: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthSubject {
    pub alias: String,
    pub phone: Mac,
    pub guest: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TruthEvent {
    pub t_start_us: u64,
    /// Equal to `t_start_us` for instant events.
    pub t_end_us: u64,
    pub kind: EventKind,
    pub subject: String,
}

impl GroundTruth {
    pub fn device(&self, mac: Mac) -> Option<&TruthDevice> {
        self.devices.iter().find(|d| d.mac == mac)
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &TruthEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

impl TruthDevice {
    pub fn state_at(&self, ts_us: u64) -> Option<State> {
        let i = self.segments.partition_point(|s| s.t_end_us <= ts_us);
        self.segments.get(i).filter(|s| s.t_start_us <= ts_us).map(|s| s.state)
    }

    pub fn position_at(&self, ts_us: u64) -> Option<[f64; 2]> {
        if self.track.is_empty() {
            return self.position;
        }
        let i = self.track.partition_point(|s| s.t_us <= ts_us);
        Some(self.track[i.saturating_sub(1)].position)
    }

    /// Instants where the state changes.
    pub fn transitions_us(&self) -> Vec<u64> {
        self.segments.iter().skip(1).map(|s| s.t_start_us).collect()
    }
}
