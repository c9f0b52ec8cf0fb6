//! Deterministic household simulator: three-sniffer captures plus ground truth.

pub mod generate;
pub mod propagation;
pub mod rng;
pub mod scenario;
pub mod score;
pub mod truth;

use thiserror::Error;

pub use generate::{generate, room_stops, state_runs};
pub use scenario::{DeviceKind, DeviceSpec, Propagation, Room, Scenario, Wall, When, SCHEMA_VERSION};
pub use score::{report_from_truth, score, MetricsReport, ScoreConfig, ScoreError};
pub use truth::{GroundTruth, TrackStop, TruthDevice, TruthEvent, TruthSubject};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

pub const HOUSEHOLD_TOML: &str = include_str!("../../data/scenarios/household.toml");
pub const GUEST_NIGHT_TOML: &str = include_str!("../../data/scenarios/guest_night.toml");
pub const PHONE_DAY_TOML: &str = include_str!("../../data/scenarios/phone_day.toml");

/// The three-week household with all ten baseline devices.
pub fn household() -> Scenario {
    Scenario::from_toml(HOUSEHOLD_TOML).expect("bundled scenario is valid")
}

/// Five days of the household with two guests staying overnight from day 3.
pub fn guest_night() -> Scenario {
    Scenario::from_toml(GUEST_NIGHT_TOML).expect("bundled scenario is valid")
}

/// One day of a phone: off until 05:00, idle, streaming 09:00–10:30, idle.
pub fn phone_day() -> Scenario {
    Scenario::from_toml(PHONE_DAY_TOML).expect("bundled scenario is valid")
}

impl Scenario {
    pub fn with_duration(mut self, duration_s: u64) -> Self {
        self.duration_s = duration_s;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn zero_noise(mut self) -> Self {
        self.propagation.sigma_db = 0.0;
        self
    }

    pub fn without_walls(mut self) -> Self {
        self.walls.clear();
        self
    }
}

impl Scenario {
    /// Analysis settings an observer of this scenario would pick: sniffer
    /// positions, the named subjects, and every stationary device in the
    /// sniffers' own room left out of direction finding. Without subjects
    /// there is nothing for har to do, so it is dropped.
    pub fn analysis_config(&self) -> crate::pipeline::AnalysisConfig {
        use crate::pipeline::{AnalysisConfig, GuestAlias};
        let c = crate::locate::SnifferGeometry { positions: self.sniffers }.centroid();
        let home = self.rooms.iter().find(|r| r.contains(c));
        let mut cfg = AnalysisConfig { geometry: Some(self.sniffers), ..Default::default() };
        cfg.har.utc_offset_s = self.utc_offset_s;
        if let Some(home) = home {
            cfg.locate.exclude = self
                .devices
                .iter()
                .filter(|d| d.kind != DeviceKind::MobileInteractive && self.static_position(d).is_some_and(|p| home.contains(p)))
                .map(|d| d.mac)
                .collect();
        }
        for s in &self.subjects {
            if s.guest {
                cfg.guests.push(GuestAlias { mac: s.phone, alias: s.alias.clone() });
            } else {
                cfg.subjects.push(crate::har::Subject { alias: s.alias.clone(), phone: s.phone, work: s.work.clone(), leisure: s.leisure.clone() });
            }
        }
        if cfg.subjects.is_empty() {
            cfg.stages.retain(|s| *s != crate::pipeline::Stage::Har);
        }
        cfg
    }
}
