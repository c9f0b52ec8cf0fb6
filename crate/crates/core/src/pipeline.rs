//! The staged analysis: identify → states → locate → har.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::capture::series::{bin_traffic_indexed, mac_index};
use crate::capture::{CaptureSet, FrameRecord};
use crate::har::guests::baseline_macs;
use crate::har::{
    detect_guests, detect_presence, infer_sleep, synthesize_day, weekly_schedule, ActivityEvent, ActivityTimeline, DayInputs, HarParams, Presence,
    SleepInference, Subject, WeeklySchedule,
};
use crate::identify::{build_inventory, Inventory, Mobility, OuiRegistry, SetupPatterns, TrafficProfile, DEFAULT_MIN_FRAMES};
use crate::locate::{
    cluster_sectors, direction_vector, fingerprint_records, path_disjointness, track_records, DirectionEstimate, SectorMap, SnifferGeometry, TrackPoint,
    DEFAULT_BETA, DEFAULT_GAP_DEG,
};
use crate::mac::Mac;
use crate::states::{
    calibrate_per_day, classify_mobility, classify_profile, classify_states, MobilityVerdict, ProfileParams, ProfileVerdict, StateTimeline, Thresholds,
    DEFAULT_SIGMA_MAX_DB,
};
use crate::time::{self, DAY_S, US};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Identify,
    States,
    Locate,
    Har,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Identify, Stage::States, Stage::Locate, Stage::Har];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Identify => "identify",
            Stage::States => "states",
            Stage::Locate => "locate",
            Stage::Har => "har",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|st| st.as_str() == s.trim())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocateParams {
    pub beta: f64,
    pub gap_deg: f64,
    /// Devices left out of direction finding (e.g. those in the sniffer room).
    pub exclude: Vec<Mac>,
    pub track_window_s: u64,
    pub track_stride_s: u64,
}

impl Default for LocateParams {
    fn default() -> Self {
        Self { beta: DEFAULT_BETA, gap_deg: DEFAULT_GAP_DEG, exclude: vec![], track_window_s: 120, track_stride_s: 60 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuestAlias {
    pub mac: Mac,
    pub alias: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub schema_version: u32,
    /// Three per-sniffer capture files or one merged file.
    pub inputs: Vec<PathBuf>,
    pub geometry: Option<[[f64; 2]; 3]>,
    pub oui_registry: Option<PathBuf>,
    pub setup_patterns: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub stages: Vec<Stage>,
    pub min_frames: u64,
    pub bin_width_s: u32,
    /// Thresholds are calibrated per chunk of this length and the median kept.
    pub calibration_day_s: u64,
    pub off_gap_s: u32,
    pub smooth_window_s: u32,
    pub profile: ProfileParams,
    pub sigma_max_db: f64,
    pub locate: LocateParams,
    pub har: HarParams,
    pub subjects: Vec<Subject>,
    pub guests: Vec<GuestAlias>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            inputs: vec![],
            geometry: None,
            oui_registry: None,
            setup_patterns: None,
            out_dir: None,
            stages: Stage::ALL.to_vec(),
            min_frames: DEFAULT_MIN_FRAMES,
            bin_width_s: 1,
            calibration_day_s: DAY_S,
            off_gap_s: crate::states::thresholds::DEFAULT_OFF_GAP_S,
            smooth_window_s: crate::states::thresholds::DEFAULT_SMOOTH_WINDOW_S,
            profile: ProfileParams::default(),
            sigma_max_db: DEFAULT_SIGMA_MAX_DB,
            locate: LocateParams::default(),
            har: HarParams::default(),
            subjects: vec![],
            guests: vec![],
        }
    }
}

impl AnalysisConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let c: AnalysisConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        Ok(c)
    }

    pub fn enabled(&self, s: Stage) -> bool {
        self.stages.contains(&s)
    }

    /// Checks constants and stage prerequisites; file existence is checked by the CLI.
    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != REPORT_SCHEMA_VERSION {
            return Err(format!("schema_version {} unsupported (expected {REPORT_SCHEMA_VERSION})", self.schema_version));
        }
        if self.bin_width_s == 0 || self.bin_width_s > 60 {
            return Err("bin_width_s must be in 1..=60".into());
        }
        if self.off_gap_s < self.smooth_window_s {
            return Err("off_gap_s must be at least smooth_window_s".into());
        }
        if !(self.sigma_max_db > 0.0) || !(self.locate.beta > 0.0) || !(self.locate.gap_deg > 0.0 && self.locate.gap_deg < 360.0) {
            return Err("sigma_max_db, locate.beta and locate.gap_deg must be positive (gap below 360)".into());
        }
        if !(0.0..=1.0).contains(&self.profile.p_min) {
            return Err("profile.p_min must be in [0, 1]".into());
        }
        self.har.validate()?;
        let needs = |s: Stage, pre: Stage| -> Result<(), String> {
            if self.enabled(s) && !self.enabled(pre) {
                return Err(format!("stage {} needs stage {}", s.as_str(), pre.as_str()));
            }
            Ok(())
        };
        needs(Stage::States, Stage::Identify)?;
        needs(Stage::Locate, Stage::Identify)?;
        needs(Stage::Har, Stage::States)?;
        if self.enabled(Stage::Locate) {
            let g = self.geometry.ok_or("stage locate needs sniffer geometry")?;
            SnifferGeometry::new(g).map_err(|e| e.to_string())?;
        }
        if self.enabled(Stage::Har) && self.subjects.is_empty() {
            return Err("stage har needs at least one subject".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageStatus {
    /// "ok", "skipped" or "failed"
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl StageStatus {
    fn ok() -> Self {
        Self { status: "ok".into(), message: None }
    }
    fn skipped() -> Self {
        Self { status: "skipped".into(), message: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CaptureSummary {
    pub t_start_us: u64,
    pub t_end_us: u64,
    pub records: u64,
    pub sniffers: u8,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceStates {
    pub mac: Mac,
    pub thresholds: Option<Thresholds>,
    pub profile: Option<ProfileVerdict>,
    pub mobility: Option<MobilityVerdict>,
    pub timeline: StateTimeline,
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LocateReport {
    pub geometry: Option<[[f64; 2]; 3]>,
    pub estimates: Vec<DirectionEstimate>,
    pub sectors: SectorMap,
    pub tracks: BTreeMap<Mac, Vec<TrackPoint>>,
    pub disjointness: BTreeMap<Mac, f64>,
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HarReport {
    pub presence: Vec<Presence>,
    pub sleep: Vec<SleepInference>,
    pub guests: Vec<ActivityEvent>,
    pub days: Vec<ActivityTimeline>,
    pub weekly: Vec<WeeklySchedule>,
    /// Every event above, deduplicated and in time order.
    pub events: Vec<ActivityEvent>,
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: AnalysisConfig,
    pub capture: CaptureSummary,
    pub stages: BTreeMap<String, StageStatus>,
    pub inventory: Option<Inventory>,
    pub states: Option<Vec<DeviceStates>>,
    pub locate: Option<LocateReport>,
    pub har: Option<HarReport>,
}

impl Report {
    pub fn timelines(&self) -> BTreeMap<Mac, StateTimeline> {
        self.states.iter().flatten().map(|d| (d.mac, d.timeline.clone())).collect()
    }

    pub fn device_states(&self, mac: Mac) -> Option<&DeviceStates> {
        self.states.as_ref()?.iter().find(|d| d.mac == mac)
    }
}

/// Runs the enabled stages over an in-memory capture. Stage failures are
/// recorded in the report; nothing here touches the filesystem.
pub fn analyze(capture: &CaptureSet, cfg: &AnalysisConfig, registry: &OuiRegistry, patterns: &SetupPatterns) -> Report {
    let mut stages = BTreeMap::new();
    for s in Stage::ALL {
        stages.insert(s.as_str().to_string(), StageStatus::skipped());
    }
    let summary = CaptureSummary {
        t_start_us: capture.t_start_us(),
        t_end_us: capture.t_end_us(),
        records: capture.len() as u64,
        sniffers: capture.sniffer_count(),
        warnings: vec![],
    };
    let mut report =
        Report { schema_version: REPORT_SCHEMA_VERSION, config: cfg.clone(), capture: summary, stages, inventory: None, states: None, locate: None, har: None };
    if !cfg.enabled(Stage::Identify) {
        return report;
    }
    let mut inventory = build_inventory(capture, registry, patterns, cfg.min_frames);
    report.stages.insert("identify".into(), StageStatus::ok());

    let index = if cfg.enabled(Stage::States) || cfg.enabled(Stage::Locate) { mac_index(capture) } else { BTreeMap::new() };
    if cfg.enabled(Stage::States) {
        let states = run_states(capture, &index, &mut inventory, cfg);
        report.stages.insert("states".into(), StageStatus::ok());
        report.states = Some(states);
    }
    if cfg.enabled(Stage::Locate) {
        let loc = run_locate(capture, &index, &inventory, cfg);
        let status = if loc.estimates.is_empty() {
            StageStatus { status: "failed".into(), message: Some(loc.errors.first().cloned().unwrap_or_else(|| "no device could be located".into())) }
        } else {
            StageStatus::ok()
        };
        report.stages.insert("locate".into(), status);
        report.locate = Some(loc);
    }
    report.inventory = Some(inventory);
    if cfg.enabled(Stage::Har) {
        let har = run_har(&report, capture, cfg);
        let status = if har.events.is_empty() && !har.errors.is_empty() {
            StageStatus { status: "failed".into(), message: har.errors.first().cloned() }
        } else {
            StageStatus::ok()
        };
        report.stages.insert("har".into(), status);
        report.har = Some(har);
    }
    report
}

fn run_states(capture: &CaptureSet, index: &BTreeMap<Mac, Vec<u32>>, inventory: &mut Inventory, cfg: &AnalysisConfig) -> Vec<DeviceStates> {
    let mut out = Vec::with_capacity(inventory.len());
    for p in inventory.profiles.iter_mut() {
        let empty = Vec::new();
        let pos = index.get(&p.mac).unwrap_or(&empty);
        let series = match bin_traffic_indexed(capture, p.mac, pos, cfg.bin_width_s) {
            Ok(s) => s,
            Err(e) => {
                out.push(DeviceStates {
                    mac: p.mac,
                    thresholds: None,
                    profile: None,
                    mobility: None,
                    timeline: StateTimeline { mac: p.mac, segments: vec![] },
                    errors: vec![e.to_string()],
                });
                continue;
            }
        };
        let mut errors = Vec::new();
        let thresholds = match calibrate_per_day(&series, cfg.calibration_day_s) {
            Ok(mut th) => {
                th.off_gap_s = cfg.off_gap_s;
                th.smooth_window_s = cfg.smooth_window_s;
                Some(th)
            }
            Err(e) => {
                errors.push(format!("thresholds: {e}"));
                None
            }
        };
        let timeline = match &thresholds {
            Some(th) => classify_states(&series, th),
            None => StateTimeline { mac: p.mac, segments: vec![] },
        };
        let profile = classify_profile(&series, &cfg.profile).map_err(|e| errors.push(format!("profile: {e}"))).ok();
        let mobility = classify_mobility(&series, cfg.sigma_max_db).map_err(|e| errors.push(format!("mobility: {e}"))).ok();
        p.profile = profile.as_ref().map(|v| v.profile);
        p.mobility = mobility.map(|m| m.mobility);
        out.push(DeviceStates { mac: p.mac, thresholds, profile, mobility, timeline, errors });
    }
    out
}

fn run_locate(capture: &CaptureSet, index: &BTreeMap<Mac, Vec<u32>>, inventory: &Inventory, cfg: &AnalysisConfig) -> LocateReport {
    let lp = &cfg.locate;
    let geom = SnifferGeometry::new(cfg.geometry.expect("validated")).expect("validated");
    let recs = capture.records();
    let empty = Vec::new();
    let mut out = LocateReport { geometry: cfg.geometry, ..Default::default() };
    let mut mobile = Vec::new();
    for p in &inventory.profiles {
        if lp.exclude.contains(&p.mac) {
            continue;
        }
        if p.mobility == Some(Mobility::Mobile) {
            mobile.push(p.mac);
            continue;
        }
        let mine = index.get(&p.mac).unwrap_or(&empty).iter().map(|&i| &recs[i as usize]);
        match fingerprint_records(mine, p.mac, capture.t_start_us(), capture.t_end_us() + 1).and_then(|fp| direction_vector(&fp, &geom, lp.beta)) {
            Ok(e) => out.estimates.push(e),
            Err(e) => out.errors.push(e.to_string()),
        }
    }
    out.sectors = cluster_sectors(&out.estimates, lp.gap_deg);
    for mac in mobile {
        let mine: Vec<&FrameRecord> = index.get(&mac).unwrap_or(&empty).iter().map(|&i| &recs[i as usize]).collect();
        let track = track_records(&mine, mac, (capture.t_start_us(), capture.t_end_us()), lp.track_window_s, lp.track_stride_s, &geom, &out.sectors, lp.beta);
        if let Some(d) = path_disjointness(&track) {
            out.disjointness.insert(mac, d);
        }
        out.tracks.insert(mac, track);
    }
    out
}

fn run_har(report: &Report, capture: &CaptureSet, cfg: &AnalysisConfig) -> HarReport {
    let hp = &cfg.har;
    let mut out = HarReport::default();
    let inventory = report.inventory.as_ref().expect("identify ran");
    let timelines = report.timelines();
    let interactive: BTreeSet<Mac> = inventory.profiles.iter().filter(|p| p.profile == Some(TrafficProfile::Interactive)).map(|p| p.mac).collect();
    let empty_tracks = BTreeMap::new();
    let tracks = report.locate.as_ref().map_or(&empty_tracks, |l| &l.tracks);
    let device_sectors: BTreeMap<Mac, usize> =
        report.locate.as_ref().map(|l| l.estimates.iter().zip(&l.sectors.assignment).map(|(e, &s)| (e.mac, s)).collect()).unwrap_or_default();

    let (t0, t1) = (capture.t_start_us(), capture.t_end_us());
    for subject in &cfg.subjects {
        let presence = match detect_presence(subject, &timelines, &interactive, hp) {
            Ok(p) => Some(p),
            Err(e) => {
                out.errors.push(e.to_string());
                None
            }
        };
        let sleep = timelines.get(&subject.phone).map(|tl| infer_sleep(&subject.alias, tl, hp));
        let inputs =
            DayInputs { timelines: &timelines, tracks, device_sectors: &device_sectors, presence: presence.as_ref(), sleep: sleep.as_ref(), params: hp };
        let mut day = time::local_midnight_us(t0, hp.utc_offset_s);
        while day < t1 {
            out.days.push(synthesize_day(subject, &inputs, day));
            day += DAY_S * US;
        }
        if let Some(p) = &presence {
            match weekly_schedule(p, hp) {
                Ok(w) => out.weekly.push(w),
                Err(e) => out.errors.push(format!("{}: {e}", subject.alias)),
            }
            out.presence.push(p.clone());
        }
        if let Some(s) = sleep {
            out.sleep.push(s);
        }
    }

    let baseline = baseline_macs(inventory, t0, hp);
    let aliases: BTreeMap<Mac, String> = cfg.guests.iter().map(|g| (g.mac, g.alias.clone())).collect();
    out.guests = detect_guests(inventory, &baseline, &timelines, (t0, t1), &aliases, hp);
    let guest_macs: BTreeSet<Mac> = inventory
        .profiles
        .iter()
        .filter(|p| out.guests.iter().any(|e| e.evidence.contains(&crate::har::EvidenceRef::Profile { mac: p.mac })))
        .map(|p| p.mac)
        .collect();
    for mac in guest_macs {
        if let Some(tl) = timelines.get(&mac) {
            let who = aliases.get(&mac).cloned().unwrap_or_else(|| mac.to_string());
            out.sleep.push(infer_sleep(&who, tl, hp));
        }
    }

    let mut events: Vec<ActivityEvent> = out.days.iter().flat_map(|d| d.events.iter().cloned()).collect();
    events.extend(out.guests.iter().cloned());
    for s in &out.sleep {
        events.extend(s.sleeps.iter().chain(&s.wakes).cloned());
    }
    events.sort();
    events.dedup();
    out.events = events;
    out
}
