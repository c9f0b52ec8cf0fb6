//! Operational state, traffic profile and mobility per device.

pub mod classify;
pub mod mobility;
pub mod profile;
pub mod thresholds;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mac::Mac;

pub use crate::identify::{Mobility, TrafficProfile};
pub use classify::{classify_states, raw_labels, smooth_labels};
pub use mobility::{classify_mobility, MobilityVerdict, DEFAULT_SIGMA_MAX_DB};
pub use profile::{activity_autocorrelation, classify_profile, ProfileParams, ProfileVerdict};
pub use thresholds::{calibrate_per_day, calibrate_thresholds, percentile_nearest_rank, Thresholds};

#[derive(Debug, Error, PartialEq)]
pub enum StatesError {
    #[error("series spans {have_s} s, at least {need_s} s needed")]
    TooShort { have_s: u64, need_s: u64 },
    #[error("{nonzero} nonzero bins; profile needs at least 2")]
    UnknownProfile { nonzero: usize },
    #[error("RSSI on 2+ sniffers in only {bins} bins; mobility needs {need}")]
    InsufficientRssi { bins: usize, need: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum State {
    Off,
    Idle,
    Active,
}

impl State {
    pub fn as_str(self) -> &'static str {
        match self {
            State::Off => "off",
            State::Idle => "idle",
            State::Active => "active",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start_us: u64,
    pub t_end_us: u64,
    pub state: State,
}

impl Segment {
    pub fn duration_s(&self) -> f64 {
        (self.t_end_us - self.t_start_us) as f64 / 1e6
    }

    pub fn overlaps(&self, start_us: u64, end_us: u64) -> bool {
        self.t_start_us < end_us && start_us < self.t_end_us
    }
}

/// Maximal labeled segments tiling a device's observation window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateTimeline {
    pub mac: Mac,
    pub segments: Vec<Segment>,
}

impl StateTimeline {
    /// Builds maximal segments from per-bin labels.
    pub fn from_labels(mac: Mac, t0_us: u64, bin_us: u64, labels: &[State]) -> Self {
        let mut segments: Vec<Segment> = Vec::new();
        for (i, &s) in labels.iter().enumerate() {
            let start = t0_us + i as u64 * bin_us;
            match segments.last_mut() {
                Some(last) if last.state == s => last.t_end_us = start + bin_us,
                _ => segments.push(Segment { t_start_us: start, t_end_us: start + bin_us, state: s }),
            }
        }
        Self { mac, segments }
    }

    pub fn t_start_us(&self) -> u64 {
        self.segments.first().map_or(0, |s| s.t_start_us)
    }

    pub fn t_end_us(&self) -> u64 {
        self.segments.last().map_or(0, |s| s.t_end_us)
    }

    /// Index of the segment containing `ts_us`.
    pub fn segment_index_at(&self, ts_us: u64) -> Option<usize> {
        let i = self.segments.partition_point(|s| s.t_end_us <= ts_us);
        (i < self.segments.len() && self.segments[i].t_start_us <= ts_us).then_some(i)
    }

    pub fn state_at(&self, ts_us: u64) -> Option<State> {
        self.segment_index_at(ts_us).map(|i| self.segments[i].state)
    }

    /// Segments clipped to `[start_us, end_us)`, paired with their index.
    pub fn clipped(&self, start_us: u64, end_us: u64) -> Vec<(usize, Segment)> {
        let lo = self.segments.partition_point(|s| s.t_end_us <= start_us);
        self.segments[lo..]
            .iter()
            .enumerate()
            .take_while(|(_, s)| s.t_start_us < end_us)
            .map(|(j, s)| (lo + j, Segment { t_start_us: s.t_start_us.max(start_us), t_end_us: s.t_end_us.min(end_us), state: s.state }))
            .collect()
    }

    /// Seconds per state inside `[start_us, end_us)`.
    pub fn time_in(&self, start_us: u64, end_us: u64, state: State) -> f64 {
        self.clipped(start_us, end_us).iter().filter(|(_, s)| s.state == state).map(|(_, s)| s.duration_s()).sum()
    }

    /// True when segments are contiguous and maximal.
    pub fn is_well_formed(&self) -> bool {
        self.segments.iter().all(|s| s.t_start_us < s.t_end_us)
            && self.segments.windows(2).all(|w| w[0].t_end_us == w[1].t_start_us && w[0].state != w[1].state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_from_labels() {
        use State::*;
        let tl = StateTimeline::from_labels(Mac([1; 6]), 100, 10, &[Off, Off, Idle, Active, Active, Idle]);
        assert!(tl.is_well_formed());
        assert_eq!(tl.segments.len(), 4);
        assert_eq!((tl.t_start_us(), tl.t_end_us()), (100, 160));
        assert_eq!(tl.state_at(125), Some(Idle));
        assert_eq!(tl.state_at(130), Some(Active));
        assert_eq!(tl.state_at(160), None);
        assert_eq!(tl.clipped(105, 135).len(), 3);
        assert_eq!(tl.time_in(100, 160, Active), 20e-6);
    }
}
