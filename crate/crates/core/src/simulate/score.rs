//! Scoring an analysis report against simulator ground truth.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::truth::{GroundTruth, TruthDevice};
use crate::har::{ActivityEvent, EventKind, HarParams};
use crate::identify::{DeviceProfile, Identity, Inventory};
use crate::locate::{angle_of, cluster_sectors, sector_of, DirectionEstimate, SnifferGeometry, DEFAULT_GAP_DEG};
use crate::mac::Mac;
use crate::pipeline::{AnalysisConfig, CaptureSummary, DeviceStates, HarReport, LocateReport, Report, Stage, StageStatus, REPORT_SCHEMA_VERSION};
use crate::states::{State, StateTimeline};
use crate::time::US;

pub const METRICS_SCHEMA_VERSION: u32 = 1;
/// Seconds either side of a true transition left out of state accuracy.
pub const STATE_GUARD_S: u64 = 60;
/// Event start times within this many seconds of the truth match.
pub const EVENT_TOLERANCE_S: u64 = 300;

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("report and truth share no device MAC")]
    MacMismatch,
    #[error("report subjects {report:?} do not appear in truth {truth:?}")]
    SubjectMismatch { report: Vec<String>, truth: Vec<String> },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeviceScore {
    pub mac: Mac,
    pub name: String,
    pub found: bool,
    pub identity_ok: Option<bool>,
    pub profile_ok: Option<bool>,
    pub mobility_ok: Option<bool>,
    pub state_accuracy: Option<f64>,
    pub angle_error_deg: Option<f64>,
    pub sector_ok: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EventScore {
    pub true_positives: u32,
    pub false_positives: u32,
    pub false_negatives: u32,
    pub precision: f64,
    pub recall: f64,
}

impl EventScore {
    fn finish(mut self) -> Self {
        let tp = self.true_positives as f64;
        let p = tp + self.false_positives as f64;
        let r = tp + self.false_negatives as f64;
        self.precision = if p > 0.0 { tp / p } else { 1.0 };
        self.recall = if r > 0.0 { tp / r } else { 1.0 };
        self
    }

    fn add(&mut self, o: &EventScore) {
        self.true_positives += o.true_positives;
        self.false_positives += o.false_positives;
        self.false_negatives += o.false_negatives;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    /// Flat metric name → value; only metrics whose stage ran appear.
    pub values: BTreeMap<String, f64>,
    pub devices: Vec<DeviceScore>,
    pub events: BTreeMap<String, EventScore>,
    /// Metrics outside the configured floors or ceilings.
    #[serde(default)]
    pub failed_gates: Vec<String>,
}

/// CI gate: metric name → lowest (floors) or highest (ceilings) accepted value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub schema_version: u32,
    pub floors: BTreeMap<String, f64>,
    pub ceilings: BTreeMap<String, f64>,
}

impl MetricsReport {
    /// Records and returns the gates that fail. A gated metric that was not
    /// computed fails too.
    pub fn apply_gates(&mut self, cfg: &ScoreConfig) -> &[String] {
        self.failed_gates.clear();
        for (k, &min) in &cfg.floors {
            match self.values.get(k) {
                Some(&v) if v >= min => {}
                Some(&v) => self.failed_gates.push(format!("{k} = {v:.4} below floor {min}")),
                None => self.failed_gates.push(format!("{k} not computed (floor {min})")),
            }
        }
        for (k, &max) in &cfg.ceilings {
            match self.values.get(k) {
                Some(&v) if v <= max => {}
                Some(&v) => self.failed_gates.push(format!("{k} = {v:.4} above ceiling {max}")),
                None => self.failed_gates.push(format!("{k} not computed (ceiling {max})")),
            }
        }
        &self.failed_gates
    }
}

fn ratio(ok: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| ok as f64 / n as f64)
}

/// Compares a report with the ground truth it was simulated from.
pub fn score(report: &Report, truth: &GroundTruth) -> Result<MetricsReport, ScoreError> {
    let mut values = BTreeMap::new();
    let mut devices: Vec<DeviceScore> = truth.devices.iter().map(|d| DeviceScore { mac: d.mac, name: d.name.clone(), ..Default::default() }).collect();

    if let Some(inv) = &report.inventory {
        let found: BTreeSet<Mac> = inv.profiles.iter().map(|p| p.mac).collect();
        let hit = truth.devices.iter().filter(|d| found.contains(&d.mac)).count();
        if hit == 0 && !truth.devices.is_empty() && !found.is_empty() {
            return Err(ScoreError::MacMismatch);
        }
        values.insert("inventory.precision".into(), ratio(hit, found.len()).unwrap_or(1.0));
        // a device that never reached a sniffer cannot be inventoried
        let heard: Vec<&TruthDevice> = truth.devices.iter().filter(|d| d.records.iter().any(|&r| r > 0)).collect();
        let heard_hit = heard.iter().filter(|d| found.contains(&d.mac)).count();
        values.insert("inventory.recall".into(), ratio(heard_hit, heard.len()).unwrap_or(1.0));
        let (mut id_ok, mut pr_ok, mut pr_n, mut mo_ok, mut mo_n) = (0, 0, 0, 0, 0);
        for (d, s) in truth.devices.iter().zip(devices.iter_mut()) {
            let Some(p) = inv.get(d.mac) else { continue };
            s.found = true;
            let ok = p.identity.class() == d.identity_class;
            id_ok += ok as usize;
            s.identity_ok = Some(ok);
            if let Some(pp) = p.profile {
                s.profile_ok = Some(pp == d.profile);
                pr_ok += (pp == d.profile) as usize;
                pr_n += 1;
            }
            if let Some(m) = p.mobility {
                s.mobility_ok = Some(m == d.mobility);
                mo_ok += (m == d.mobility) as usize;
                mo_n += 1;
            }
        }
        values.insert("identity.accuracy".into(), ratio(id_ok, hit).unwrap_or(1.0));
        if let Some(v) = ratio(pr_ok, pr_n) {
            values.insert("profile.accuracy".into(), v);
        }
        if let Some(v) = ratio(mo_ok, mo_n) {
            values.insert("mobility.accuracy".into(), v);
        }
    }

    if let Some(states) = &report.states {
        let (mut ok, mut n) = (0u64, 0u64);
        for (d, s) in truth.devices.iter().zip(devices.iter_mut()) {
            let Some(ds) = states.iter().find(|x| x.mac == d.mac) else { continue };
            let (o, c) = state_agreement(d, &ds.timeline);
            if c > 0 {
                s.state_accuracy = Some(o as f64 / c as f64);
            }
            ok += o;
            n += c;
        }
        if n > 0 {
            values.insert("states.accuracy".into(), ok as f64 / n as f64);
        }
    }

    if let Some(loc) = &report.locate {
        let c = SnifferGeometry { positions: truth.sniffers }.centroid();
        let (mut err_sum, mut n, mut sec_ok) = (0.0, 0usize, 0usize);
        for (i, e) in loc.estimates.iter().enumerate() {
            let Some(pos) = truth.device(e.mac).and_then(|d| d.position) else { continue };
            let bearing = angle_of([pos[0] - c[0], pos[1] - c[1]]);
            let err = crate::locate::angular_distance(bearing, e.angle_deg);
            let good = sector_of(bearing, &loc.sectors).is_some_and(|s| Some(&s) == loc.sectors.assignment.get(i));
            if let Some(s) = devices.iter_mut().find(|s| s.mac == e.mac) {
                s.angle_error_deg = Some(err);
                s.sector_ok = Some(good);
            }
            err_sum += err;
            n += 1;
            sec_ok += good as usize;
        }
        if n > 0 {
            values.insert("direction.mean_error_deg".into(), err_sum / n as f64);
            values.insert("direction.sector_rate".into(), sec_ok as f64 / n as f64);
        }
        values.insert("direction.sectors".into(), loc.sectors.sectors.len() as f64);
    }

    let mut events = BTreeMap::new();
    if let Some(har) = &report.har {
        let truth_subjects: BTreeSet<&str> = truth.events.iter().map(|e| e.subject.as_str()).collect();
        let rep_subjects: BTreeSet<&str> = har.events.iter().map(|e| e.subject.as_str()).collect();
        if !rep_subjects.is_empty() && !truth_subjects.is_empty() && rep_subjects.is_disjoint(&truth_subjects) {
            return Err(ScoreError::SubjectMismatch {
                report: rep_subjects.into_iter().map(String::from).collect(),
                truth: truth_subjects.into_iter().map(String::from).collect(),
            });
        }
        let mut total = EventScore::default();
        for kind in EventKind::ALL {
            let pred: Vec<&ActivityEvent> = har.events.iter().filter(|e| e.kind == kind).collect();
            let tru: Vec<_> = truth.events_of(kind).collect();
            if pred.is_empty() && tru.is_empty() {
                continue;
            }
            let mut pairs = Vec::new();
            for (i, t) in tru.iter().enumerate() {
                for (j, p) in pred.iter().enumerate() {
                    let dt = t.t_start_us.abs_diff(p.t_start_us);
                    if p.subject == t.subject && dt <= EVENT_TOLERANCE_S * US {
                        pairs.push((dt, i, j));
                    }
                }
            }
            pairs.sort();
            let (mut ut, mut up) = (vec![false; tru.len()], vec![false; pred.len()]);
            let mut tp = 0;
            for (_, i, j) in pairs {
                if !ut[i] && !up[j] {
                    ut[i] = true;
                    up[j] = true;
                    tp += 1;
                }
            }
            let es =
                EventScore { true_positives: tp, false_positives: (pred.len() as u32) - tp, false_negatives: (tru.len() as u32) - tp, ..Default::default() };
            total.add(&es);
            let es = es.finish();
            values.insert(format!("events.{}.precision", kind.as_str()), es.precision);
            values.insert(format!("events.{}.recall", kind.as_str()), es.recall);
            events.insert(kind.as_str().to_string(), es);
        }
        let total = total.finish();
        values.insert("events.precision".into(), total.precision);
        values.insert("events.recall".into(), total.recall);
    }
    Ok(MetricsReport {
        schema_version: METRICS_SCHEMA_VERSION,
        scenario: truth.scenario.clone(),
        seed: truth.seed,
        values,
        devices,
        events,
        failed_gates: vec![],
    })
}

/// (agreeing seconds, compared seconds), skipping the guard band around
/// every true transition.
fn state_agreement(d: &TruthDevice, tl: &StateTimeline) -> (u64, u64) {
    let (Some(first), Some(last)) = (d.segments.first(), d.segments.last()) else { return (0, 0) };
    let (a, b) = (first.t_start_us.max(tl.t_start_us()), last.t_end_us.min(tl.t_end_us()));
    let guard = STATE_GUARD_S * US;
    let trans: Vec<u64> = d.transitions_us();
    let (mut ok, mut n) = (0, 0);
    let (mut i, mut j, mut k) = (0, 0, 0);
    let mut t = a / US * US;
    if t < a {
        t += US;
    }
    while t < b {
        while k < trans.len() && trans[k] + guard < t {
            k += 1;
        }
        if k < trans.len() && trans[k] <= t + guard {
            t += US;
            continue;
        }
        while i < d.segments.len() && d.segments[i].t_end_us <= t {
            i += 1;
        }
        while j < tl.segments.len() && tl.segments[j].t_end_us <= t {
            j += 1;
        }
        if let (Some(x), Some(y)) = (d.segments.get(i), tl.segments.get(j)) {
            n += 1;
            ok += (x.state == y.state) as u64;
        }
        t += US;
    }
    (ok, n)
}

/// A report carrying the ground truth itself; scoring it gives 1.0 throughout.
pub fn report_from_truth(truth: &GroundTruth) -> Report {
    let profiles = truth
        .devices
        .iter()
        .map(|d| DeviceProfile {
            mac: d.mac,
            identity: match d.identity_class.as_str() {
                "exact_model" => Identity::ExactModel { name: d.model.clone().unwrap_or_default() },
                "vendor_only" => Identity::VendorOnly { vendor: String::new() },
                "randomized" => Identity::Randomized,
                _ => Identity::Unknown,
            },
            sources: Default::default(),
            vendor: None,
            profile: Some(d.profile),
            mobility: Some(d.mobility),
            first_seen_us: d.segments.iter().find(|s| s.state != State::Off).map_or(truth.start_us, |s| s.t_start_us),
            last_seen_us: truth.end_us,
            frames: d.frames,
        })
        .collect();
    let states = truth
        .devices
        .iter()
        .map(|d| DeviceStates {
            mac: d.mac,
            thresholds: None,
            profile: None,
            mobility: None,
            timeline: StateTimeline { mac: d.mac, segments: d.segments.clone() },
            errors: vec![],
        })
        .collect();
    let c = SnifferGeometry { positions: truth.sniffers }.centroid();
    let estimates: Vec<DirectionEstimate> = truth
        .devices
        .iter()
        .filter_map(|d| {
            let p = d.position?;
            let v = [p[0] - c[0], p[1] - c[1]];
            let n = v[0].hypot(v[1]);
            (n > 0.0).then(|| DirectionEstimate {
                mac: d.mac,
                t_start_us: truth.start_us,
                t_end_us: truth.end_us,
                vector: [v[0] / n, v[1] / n],
                angle_deg: angle_of(v),
                confidence: 1.0,
            })
        })
        .collect();
    let sectors = cluster_sectors(&estimates, DEFAULT_GAP_DEG);
    let events = truth.events.iter().map(|e| ActivityEvent::interval(e.t_start_us, e.t_end_us, e.kind, &e.subject, vec![])).collect();
    let cfg =
        AnalysisConfig { geometry: Some(truth.sniffers), har: HarParams { utc_offset_s: truth.utc_offset_s, ..Default::default() }, ..Default::default() };
    let stages = Stage::ALL.iter().map(|s| (s.as_str().to_string(), StageStatus { status: "ok".into(), message: None })).collect();
    Report {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg,
        capture: CaptureSummary { t_start_us: truth.start_us, t_end_us: truth.end_us, records: 0, sniffers: 3, warnings: vec![] },
        stages,
        inventory: Some(Inventory { profiles, leaks: vec![] }),
        states: Some(states),
        locate: Some(LocateReport { geometry: Some(truth.sniffers), estimates, sectors, ..Default::default() }),
        har: Some(HarReport { events, ..Default::default() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_scores_perfectly() {
        let sc = crate::simulate::phone_day().with_duration(6 * 3600);
        let (_, truth) = crate::simulate::generate(&sc).unwrap();
        let m = score(&report_from_truth(&truth), &truth).unwrap();
        for (k, v) in &m.values {
            if k != "direction.mean_error_deg" && k != "direction.sectors" {
                assert_eq!(*v, 1.0, "{k}");
            }
        }
        assert_eq!(m.values["direction.mean_error_deg"], 0.0);
    }

    #[test]
    fn disjoint_macs_are_rejected() {
        let sc = crate::simulate::phone_day().with_duration(600);
        let (_, truth) = crate::simulate::generate(&sc).unwrap();
        let mut r = report_from_truth(&truth);
        for p in &mut r.inventory.as_mut().unwrap().profiles {
            p.mac = Mac([2, 0, 0, 0, 0, 9]);
        }
        assert_eq!(score(&r, &truth), Err(ScoreError::MacMismatch));
    }
}
