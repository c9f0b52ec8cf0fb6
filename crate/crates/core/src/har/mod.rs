//! Activity inference from device states and directions: presence, sleep,
//! guests, work/leisure sessions and the weekly routine.

pub mod day;
pub mod guests;
pub mod presence;
pub mod sleep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mac::Mac;
use crate::time::{self, DAY_S};

pub use day::{synthesize_day, ActivityTimeline, DayInputs};
pub use guests::detect_guests;
pub use presence::{detect_presence, weekly_schedule, HourCell, Presence, WeekdayRow, WeeklySchedule};
pub use sleep::{infer_sleep, SleepInference};

#[derive(Debug, Error, PartialEq)]
pub enum HarError {
    #[error("subject {0}: no interactive device timeline to infer from")]
    NoInteractiveDevices(String),
    #[error("{days:.1} days of history, at least 7 needed")]
    InsufficientHistory { days: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Present,
    Absent,
    Sleep,
    Wake,
    GuestArrive,
    GuestDepart,
    WorkSession,
    LeisureSession,
    Transition,
}

impl EventKind {
    pub const ALL: [EventKind; 9] = [
        EventKind::Present,
        EventKind::Absent,
        EventKind::Sleep,
        EventKind::Wake,
        EventKind::GuestArrive,
        EventKind::GuestDepart,
        EventKind::WorkSession,
        EventKind::LeisureSession,
        EventKind::Transition,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Present => "present",
            EventKind::Absent => "absent",
            EventKind::Sleep => "sleep",
            EventKind::Wake => "wake",
            EventKind::GuestArrive => "guest_arrive",
            EventKind::GuestDepart => "guest_depart",
            EventKind::WorkSession => "work_session",
            EventKind::LeisureSession => "leisure_session",
            EventKind::Transition => "transition",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Low,
    High,
}

/// Pointer into the inputs an event was derived from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EvidenceRef {
    /// Index into a device's StateTimeline segments.
    Segment { mac: Mac, index: usize },
    /// Index into a device's direction track.
    Estimate { mac: Mac, index: usize },
    /// The device's inventory profile.
    Profile { mac: Mac },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActivityEvent {
    pub t_start_us: u64,
    /// Equal to `t_start_us` for instant events.
    pub t_end_us: u64,
    pub kind: EventKind,
    pub subject: String,
    pub confidence: Confidence,
    pub evidence: Vec<EvidenceRef>,
}

impl ActivityEvent {
    pub fn instant(ts_us: u64, kind: EventKind, subject: &str, evidence: Vec<EvidenceRef>) -> Self {
        Self::interval(ts_us, ts_us, kind, subject, evidence)
    }

    pub fn interval(t_start_us: u64, t_end_us: u64, kind: EventKind, subject: &str, evidence: Vec<EvidenceRef>) -> Self {
        Self { t_start_us, t_end_us, kind, subject: subject.to_string(), confidence: Confidence::High, evidence }
    }

    pub fn with_confidence(mut self, c: Confidence) -> Self {
        self.confidence = c;
        self
    }

    pub fn duration_s(&self) -> f64 {
        (self.t_end_us - self.t_start_us) as f64 / 1e6
    }
}

/// A person and the devices attributed to them. The phone stands in for
/// the person; this mapping is an input, never inferred.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subject {
    pub alias: String,
    pub phone: Mac,
    #[serde(default)]
    pub work: Vec<Mac>,
    #[serde(default)]
    pub leisure: Vec<Mac>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarParams {
    pub absence_min_s: u64,
    pub depart_gap_s: u64,
    pub warmup_s: u64,
    pub sleep_min_s: u64,
    /// Longest active interruption that does not end a sleep episode.
    pub interruption_max_s: u64,
    /// Shortest quiet run that an interruption can join onto an episode.
    pub neighbour_min_s: u64,
    /// Night window, local "HH:MM"; the end is on the following day.
    pub night_start: String,
    pub night_end: String,
    /// A sleep must begin by this local time (the night's second day).
    pub latest_onset: String,
    pub session_min_s: u64,
    /// Active runs closer than this are one session.
    pub session_gap_s: u64,
    pub transition_min_s: u64,
    /// Phone sectors are majority-voted over this many windows either side.
    pub transition_vote: usize,
    pub recurring_max: f64,
    pub recurring_min_obs: u32,
    pub utc_offset_s: i32,
}

impl Default for HarParams {
    fn default() -> Self {
        Self {
            absence_min_s: 1800,
            depart_gap_s: 3600,
            warmup_s: 3 * DAY_S,
            sleep_min_s: 3 * 3600,
            interruption_max_s: 1200,
            neighbour_min_s: 3600,
            night_start: "21:00".into(),
            night_end: "11:00".into(),
            latest_onset: "05:00".into(),
            session_min_s: 1800,
            session_gap_s: 120,
            transition_min_s: 300,
            transition_vote: 5,
            recurring_max: 0.25,
            recurring_min_obs: 2,
            utc_offset_s: 0,
        }
    }
}

impl HarParams {
    pub fn night_window_s(&self) -> (u64, u64) {
        (time::parse_hhmm(&self.night_start).unwrap_or(21 * 3600), time::parse_hhmm(&self.night_end).unwrap_or(11 * 3600))
    }

    pub fn validate(&self) -> Result<(), String> {
        if [&self.night_start, &self.night_end, &self.latest_onset].iter().any(|t| time::parse_hhmm(t).is_none()) {
            return Err("har.night_start / night_end / latest_onset must be HH:MM".into());
        }
        if !(0.0..=1.0).contains(&self.recurring_max) {
            return Err("har.recurring_max must be in [0, 1]".into());
        }
        if self.sleep_min_s == 0 || self.session_min_s == 0 {
            return Err("har durations must be positive".into());
        }
        Ok(())
    }
}

/// Merges `[a, b)` intervals that overlap or are closer than `gap_us`.
pub(crate) fn merge_intervals(mut v: Vec<(u64, u64)>, gap_us: u64) -> Vec<(u64, u64)> {
    v.sort_unstable();
    let mut out: Vec<(u64, u64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(l) if a <= l.1 + gap_us => l.1 = l.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}
