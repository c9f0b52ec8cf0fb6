//! Scenario files: floor plan, sniffers, devices and their scripted routines.
//!
//! Routines are rules painted in file order onto a per-device timeline, so a
//! later rule overrides an earlier one. A rule applies either to an absolute
//! span (`start_s`/`end_s`) or daily between `from` and `to` on the listed
//! `days`, optionally limited to a `day_range` of day indices. A `to` earlier
//! than `from` wraps past midnight.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::har::EventKind;
use crate::mac::Mac;
use crate::states::State;
use crate::time::{self, DAY_S};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    /// Unix seconds of scenario time 0; must be a local midnight.
    pub start_unix_s: u64,
    #[serde(default)]
    pub utc_offset_s: i32,
    pub duration_s: u64,
    /// Length of the installation window opened by each device's `setup_at_s`.
    #[serde(default = "default_setup_s")]
    pub setup_s: u64,
    #[serde(default)]
    pub home_ssid: Option<String>,
    /// Destination of ordinary data frames.
    #[serde(default)]
    pub router: Option<Mac>,
    #[serde(default)]
    pub propagation: Propagation,
    pub sniffers: [[f64; 2]; 3],
    #[serde(default)]
    pub rooms: Vec<Room>,
    #[serde(default)]
    pub walls: Vec<Wall>,
    pub devices: Vec<DeviceSpec>,
    #[serde(default)]
    pub subjects: Vec<SubjectSpec>,
    /// Scripted ground-truth events that cannot be read off device states (sleep, wake).
    #[serde(default)]
    pub events: Vec<EventRule>,
}

fn default_setup_s() -> u64 {
    1800
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Propagation {
    pub pl0_db: f64,
    pub d0_m: f64,
    pub exponent: f64,
    pub wall_db: f64,
    pub sigma_db: f64,
    pub floor_dbm: f64,
}

impl Default for Propagation {
    fn default() -> Self {
        Self { pl0_db: 40.0, d0_m: 1.0, exponent: 2.5, wall_db: 6.0, sigma_db: 4.0, floor_dbm: -95.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Room {
    pub name: String,
    /// x0, y0, x1, y1
    pub rect: [f64; 4],
    /// Where a mobile device sits while in this room; defaults to the centre.
    #[serde(default)]
    pub anchor: Option<[f64; 2]>,
}

impl Room {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let [x0, y0, x1, y1] = self.rect;
        (x0..=x1).contains(&p[0]) && (y0..=y1).contains(&p[1])
    }

    pub fn anchor(&self) -> [f64; 2] {
        let [x0, y0, x1, y1] = self.rect;
        self.anchor.unwrap_or([(x0 + x1) / 2.0, (y0 + y1) / 2.0])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wall {
    pub a: [f64; 2],
    pub b: [f64; 2],
    #[serde(default)]
    pub atten_db: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceKind {
    Autonomous,
    Interactive,
    MobileInteractive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BleSpec {
    pub name: String,
    pub period_s: f64,
    #[serde(default = "half")]
    pub phase_s: f64,
    #[serde(default)]
    pub tx_power_dbm: f64,
    /// Advertise only inside the installation window.
    #[serde(default)]
    pub setup_only: bool,
}

fn half() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub mac: Mac,
    pub name: String,
    pub kind: DeviceKind,
    #[serde(default = "default_tx")]
    pub tx_power_dbm: f64,
    #[serde(default)]
    pub position: Option<[f64; 2]>,
    /// Static devices: fallback position (room anchor). Mobile: starting room.
    #[serde(default)]
    pub room: Option<String>,

    #[serde(default)]
    pub period_s: Option<f64>,
    #[serde(default = "default_jitter")]
    pub jitter_s: f64,
    #[serde(default = "half")]
    pub phase_s: f64,
    #[serde(default = "default_frame_len")]
    pub frame_len: [u32; 2],

    #[serde(default = "default_rate")]
    pub rate_fps: [u32; 2],
    #[serde(default = "default_active_len")]
    pub active_len: [u32; 2],
    #[serde(default = "default_idle_gap")]
    pub idle_gap_s: [f64; 2],

    #[serde(default = "default_state")]
    pub default_state: State,
    #[serde(default)]
    pub schedule: Vec<StateRule>,
    #[serde(default)]
    pub moves: Vec<MoveRule>,

    #[serde(default)]
    pub ble: Option<BleSpec>,
    #[serde(default)]
    pub setup_ssid: Option<String>,
    #[serde(default)]
    pub setup_at_s: u64,
    #[serde(default)]
    pub beacon_ssid: Option<String>,
    #[serde(default)]
    pub mdns_names: Vec<String>,
    #[serde(default)]
    pub probe_ssids: Vec<String>,
    #[serde(default)]
    pub credentials_to: Vec<Mac>,
}

fn default_tx() -> f64 {
    15.0
}
fn default_jitter() -> f64 {
    0.05
}
fn default_frame_len() -> [u32; 2] {
    [60, 200]
}
fn default_rate() -> [u32; 2] {
    [3, 3]
}
fn default_active_len() -> [u32; 2] {
    [400, 1500]
}
fn default_idle_gap() -> [f64; 2] {
    [20.0, 50.0]
}
fn default_state() -> State {
    State::Idle
}

/// Absolute or daily time selector shared by all rule kinds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct When {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub days: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub day_range: Option<[u64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_s: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_s: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRule {
    #[serde(flatten)]
    pub when: When,
    pub state: State,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveRule {
    #[serde(flatten)]
    pub when: When,
    /// Daily time of the move ("HH:MM"); alternative to `at_s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at_s: Option<u64>,
    pub room: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRule {
    pub kind: EventKind,
    pub subject: String,
    #[serde(flatten)]
    pub when: When,
    /// Instant events: daily "HH:MM" or absolute `at_s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at_s: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectSpec {
    pub alias: String,
    pub phone: Mac,
    #[serde(default)]
    pub guest: bool,
    #[serde(default)]
    pub work: Vec<Mac>,
    #[serde(default)]
    pub leisure: Vec<Mac>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let sc: Scenario = toml::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn start_us(&self) -> u64 {
        self.start_unix_s * time::US
    }

    pub fn days(&self) -> u64 {
        self.duration_s.div_ceil(DAY_S)
    }

    pub fn room(&self, name: &str) -> Option<&Room> {
        self.rooms.iter().find(|r| r.name == name)
    }

    pub fn device(&self, mac: Mac) -> Option<&DeviceSpec> {
        self.devices.iter().find(|d| d.mac == mac)
    }

    /// Static position of a device (explicit, else its room anchor).
    pub fn static_position(&self, d: &DeviceSpec) -> Option<[f64; 2]> {
        d.position.or_else(|| d.room.as_deref().and_then(|r| self.room(r)).map(Room::anchor))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |what: String| Err(SimError::Invalid(what));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} unsupported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.start_unix_s as i64 % DAY_S as i64 != (-(self.utc_offset_s as i64)).rem_euclid(DAY_S as i64) {
            return bad("start_unix_s must be a local midnight".into());
        }
        if crate::locate::SnifferGeometry::new(self.sniffers).is_err() {
            return bad("sniffers are collinear".into());
        }
        let p = &self.propagation;
        if !(p.d0_m > 0.0 && p.exponent > 0.0 && p.sigma_db >= 0.0 && p.wall_db >= 0.0) {
            return bad("propagation: d0_m and exponent must be positive, sigma_db and wall_db non-negative".into());
        }
        let inside = |q: [f64; 2]| self.rooms.is_empty() || self.rooms.iter().any(|r| r.contains(q));
        let mut macs = BTreeSet::new();
        for (i, d) in self.devices.iter().enumerate() {
            let at = format!("devices[{i}] ({})", d.mac);
            if !macs.insert(d.mac) {
                return bad(format!("{at}: duplicate mac"));
            }
            match d.kind {
                DeviceKind::Autonomous => {
                    if !d.period_s.is_some_and(|p| p > 0.0) {
                        return bad(format!("{at}: autonomous devices need period_s > 0"));
                    }
                    if d.jitter_s < 0.0 || d.period_s.is_some_and(|p| d.jitter_s * 2.0 >= p) {
                        return bad(format!("{at}: jitter_s must be in [0, period_s/2)"));
                    }
                }
                DeviceKind::Interactive | DeviceKind::MobileInteractive => {
                    if d.rate_fps[0] == 0 || d.rate_fps[0] > d.rate_fps[1] || d.rate_fps[1] > 16 {
                        return bad(format!("{at}: rate_fps must satisfy 1 <= lo <= hi <= 16"));
                    }
                    if !(d.idle_gap_s[0] > 0.0 && d.idle_gap_s[0] <= d.idle_gap_s[1]) {
                        return bad(format!("{at}: idle_gap_s must satisfy 0 < lo <= hi"));
                    }
                }
            }
            if d.frame_len[0] > d.frame_len[1] || d.active_len[0] > d.active_len[1] || d.frame_len[0] == 0 {
                return bad(format!("{at}: length ranges must be non-empty and positive"));
            }
            if !d.moves.is_empty() && d.kind != DeviceKind::MobileInteractive {
                return bad(format!("{at}: moves are only allowed on mobile_interactive devices"));
            }
            if d.kind == DeviceKind::MobileInteractive {
                let start = d.room.as_deref().ok_or_else(|| SimError::Invalid(format!("{at}: mobile devices need a starting room")))?;
                for r in std::iter::once(start).chain(d.moves.iter().map(|m| m.room.as_str())) {
                    if self.room(r).is_none() {
                        return bad(format!("{at}: unknown room '{r}'"));
                    }
                }
            } else {
                match self.static_position(d) {
                    None => return bad(format!("{at}: needs a position or a known room")),
                    Some(q) if !inside(q) => return bad(format!("{at}: position {q:?} outside the floor plan")),
                    _ => {}
                }
            }
            if let Some(b) = &d.ble {
                if !(b.period_s > 0.0) || b.name.is_empty() || b.name.len() > 29 {
                    return bad(format!("{at}: ble needs period_s > 0 and a 1..=29 byte name"));
                }
            }
            for s in d.setup_ssid.iter().chain(&d.beacon_ssid).chain(&d.probe_ssids) {
                if s.is_empty() || s.len() > 32 {
                    return bad(format!("{at}: SSIDs must be 1..=32 bytes"));
                }
            }
            if d.setup_at_s > self.duration_s && (d.setup_ssid.is_some() || !d.mdns_names.is_empty()) {
                return bad(format!("{at}: setup_at_s beyond duration"));
            }
            for (j, r) in d.schedule.iter().enumerate() {
                self.check_when(&r.when, &format!("{at}.schedule[{j}]"))?;
            }
            for (j, m) in d.moves.iter().enumerate() {
                let w = format!("{at}.moves[{j}]");
                self.check_when(&m.when, &w)?;
                if m.at.is_some() == m.at_s.is_some() {
                    return bad(format!("{w}: exactly one of at / at_s"));
                }
                if m.at.as_deref().is_some_and(|a| time::parse_hhmm(a).is_none()) {
                    return bad(format!("{w}: bad time"));
                }
            }
        }
        for (i, s) in self.subjects.iter().enumerate() {
            for m in std::iter::once(&s.phone).chain(&s.work).chain(&s.leisure) {
                if !macs.contains(m) {
                    return bad(format!("subjects[{i}]: unknown device {m}"));
                }
            }
        }
        for (i, e) in self.events.iter().enumerate() {
            let w = format!("events[{i}]");
            self.check_when(&e.when, &w)?;
            if !self.subjects.iter().any(|s| s.alias == e.subject) {
                return bad(format!("{w}: unknown subject '{}'", e.subject));
            }
            if e.at.as_deref().is_some_and(|a| time::parse_hhmm(a).is_none()) {
                return bad(format!("{w}: bad time"));
            }
        }
        Ok(())
    }

    fn check_when(&self, w: &When, at: &str) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Invalid(format!("{at}: {m}")));
        if let Some(days) = &w.days {
            if days.iter().any(|d| time::parse_weekday(d).is_none()) {
                return bad("unknown weekday");
            }
        }
        for t in w.from.iter().chain(&w.to) {
            if time::parse_hhmm(t).is_none() {
                return bad("bad time, expected HH:MM");
            }
        }
        let absolute = w.start_s.is_some() || w.end_s.is_some();
        if absolute && (w.days.is_some() || w.from.is_some() || w.to.is_some() || w.day_range.is_some()) {
            return bad("absolute start_s/end_s cannot be combined with daily fields");
        }
        if let (Some(s), Some(e)) = (w.start_s, w.end_s) {
            if s > e {
                return bad("start_s after end_s");
            }
        }
        if w.start_s.is_some_and(|s| s > self.duration_s) {
            return bad("start_s beyond duration");
        }
        if let Some([a, b]) = w.day_range {
            if a > b {
                return bad("day_range reversed");
            }
        }
        Ok(())
    }

    /// Spans `[a, b)` in scenario seconds selected by `w`, clipped to the duration.
    pub fn spans(&self, w: &When) -> Vec<(u64, u64)> {
        let dur = self.duration_s;
        if w.start_s.is_some() || w.end_s.is_some() {
            let a = w.start_s.unwrap_or(0).min(dur);
            let b = w.end_s.unwrap_or(dur).min(dur);
            return if a < b { vec![(a, b)] } else { vec![] };
        }
        let from = w.from.as_deref().and_then(time::parse_hhmm).unwrap_or(0);
        let to = w.to.as_deref().and_then(time::parse_hhmm).unwrap_or(DAY_S);
        let len = if to > from { to - from } else { to + DAY_S - from };
        self.matching_days(w)
            .filter_map(|d| {
                let a = (d * DAY_S + from).min(dur);
                let b = (d * DAY_S + from + len).min(dur);
                (a < b).then_some((a, b))
            })
            .collect()
    }

    /// Instants selected by a daily `at` or absolute `at_s` together with `w`.
    pub fn instants(&self, w: &When, at: Option<&str>, at_s: Option<u64>) -> Vec<u64> {
        if let Some(t) = at_s {
            return if t <= self.duration_s { vec![t] } else { vec![] };
        }
        let Some(t) = at.and_then(time::parse_hhmm) else { return vec![] };
        self.matching_days(w).map(|d| d * DAY_S + t).filter(|&t| t <= self.duration_s).collect()
    }

    fn matching_days<'a>(&'a self, w: &'a When) -> impl Iterator<Item = u64> + 'a {
        let days: Option<Vec<chrono::Weekday>> = w.days.as_ref().map(|v| v.iter().filter_map(|d| time::parse_weekday(d)).collect());
        (0..self.days()).filter(move |&d| {
            let wd = time::weekday(self.start_us() + d * DAY_S * time::US, self.utc_offset_s);
            days.as_ref().is_none_or(|v| v.contains(&wd)) && w.day_range.is_none_or(|[a, b]| (a..=b).contains(&d))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI: &str = r#"
schema_version = 1
name = "mini"
seed = 1
start_unix_s = 1740960000
duration_s = 172800
sniffers = [[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]]

[[devices]]
mac = "d8:f1:5b:00:00:01"
name = "bulb"
kind = "autonomous"
period_s = 30.0
position = [1.0, 1.0]

[[devices]]
mac = "9c:fc:e8:00:00:01"
name = "laptop"
kind = "interactive"
position = [2.0, 1.0]
schedule = [
  { days = ["tue"], from = "23:00", to = "01:00", state = "active" },
  { start_s = 100, end_s = 200, state = "off" },
]
"#;

    #[test]
    fn parses_and_expands() {
        let sc = Scenario::from_toml(MINI).unwrap();
        let r = &sc.devices[1].schedule;
        // Monday start: Tuesday is day 1, the span wraps and is clipped at the end.
        assert_eq!(sc.spans(&r[0].when), vec![(DAY_S + 23 * 3600, 2 * DAY_S)]);
        assert_eq!(sc.spans(&r[1].when), vec![(100, 200)]);
    }

    #[test]
    fn rejects_unknown_field_and_bad_period() {
        assert!(matches!(Scenario::from_toml(&MINI.replace("name = \"bulb\"", "name = \"bulb\"\ncolour = 3")), Err(SimError::Parse(_))));
        assert!(matches!(Scenario::from_toml(&MINI.replace("period_s = 30.0", "period_s = 0.0")), Err(SimError::Invalid(_))));
        assert!(matches!(Scenario::from_toml(&MINI.replace("1740960000", "1740960001")), Err(SimError::Invalid(_))));
    }
}
