//! Rule-based synthesis of one subject's day.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{merge_intervals, ActivityEvent, Confidence, EventKind, EvidenceRef, HarParams, Presence, SleepInference, Subject};
use crate::locate::TrackPoint;
use crate::mac::Mac;
use crate::states::{State, StateTimeline};
use crate::time::{DAY_S, US};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivityTimeline {
    pub subject: String,
    pub day_start_us: u64,
    pub day_end_us: u64,
    pub events: Vec<ActivityEvent>,
}

pub struct DayInputs<'a> {
    pub timelines: &'a BTreeMap<Mac, StateTimeline>,
    /// Direction track per mobile device.
    pub tracks: &'a BTreeMap<Mac, Vec<TrackPoint>>,
    /// Sector of each stationary device.
    pub device_sectors: &'a BTreeMap<Mac, usize>,
    pub presence: Option<&'a Presence>,
    pub sleep: Option<&'a SleepInference>,
    pub params: &'a HarParams,
}

/// Active runs of `mac` inside `[a, b)`, joined across short gaps, with the
/// indices of the segments they cover.
fn active_runs(tl: &StateTimeline, a: u64, b: u64, gap_us: u64) -> Vec<(u64, u64, Vec<usize>)> {
    let segs: Vec<(usize, u64, u64)> =
        tl.clipped(a, b).into_iter().filter(|(_, s)| s.state == State::Active).map(|(i, s)| (i, s.t_start_us, s.t_end_us)).collect();
    merge_intervals(segs.iter().map(|&(_, x, y)| (x, y)).collect(), gap_us)
        .into_iter()
        .map(|(x, y)| (x, y, segs.iter().filter(|s| s.1 >= x && s.2 <= y).map(|s| s.0).collect()))
        .collect()
}

/// Majority sector among the located windows within `k` of each window.
/// Needs more than `k` votes; ties go to the window's own sector, else none.
fn vote_sectors(track: &[(usize, &TrackPoint)], k: usize) -> Vec<Option<usize>> {
    (0..track.len())
        .map(|i| {
            let lo = i.saturating_sub(k);
            let hi = (i + k + 1).min(track.len());
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for (_, w) in &track[lo..hi] {
                if let Some(s) = w.sector {
                    *counts.entry(s).or_default() += 1;
                }
            }
            if counts.values().sum::<usize>() <= k {
                return None;
            }
            let best = *counts.values().max()?;
            let top: Vec<usize> = counts.iter().filter(|(_, &c)| c == best).map(|(&s, _)| s).collect();
            match top.as_slice() {
                [s] => Some(*s),
                _ => track[i].1.sector.filter(|s| top.contains(s)),
            }
        })
        .collect()
}

pub fn synthesize_day(subject: &Subject, inputs: &DayInputs, day_start_us: u64) -> ActivityTimeline {
    let p = inputs.params;
    let (d0, d1) = (day_start_us, day_start_us + DAY_S * US);
    let who = subject.alias.as_str();
    let mut events = Vec::new();
    let track = inputs.tracks.get(&subject.phone);
    let day_track: Vec<(usize, &TrackPoint)> =
        track.map(|t| t.iter().enumerate().filter(|(_, w)| w.t_start_us >= d0 && w.t_start_us < d1).collect()).unwrap_or_default();

    // (a) work sessions
    let mut last_work_end = None;
    for m in &subject.work {
        let Some(tl) = inputs.timelines.get(m) else { continue };
        for (a, b, segs) in active_runs(tl, d0, d1, p.session_gap_s * US) {
            if b - a < p.session_min_s * US {
                continue;
            }
            let mut ev: Vec<EvidenceRef> = segs.iter().map(|&index| EvidenceRef::Segment { mac: *m, index }).collect();
            let located: Vec<(usize, usize)> =
                day_track.iter().filter(|(_, w)| w.t_start_us >= a && w.t_end_us <= b).filter_map(|(i, w)| w.sector.map(|s| (*i, s))).collect();
            let confidence = match inputs.device_sectors.get(m) {
                Some(&home) if !located.is_empty() => {
                    let with: Vec<usize> = located.iter().filter(|(_, s)| *s == home).map(|(i, _)| *i).collect();
                    if with.len() * 2 < located.len() {
                        continue; // phone elsewhere: someone else at the laptop
                    }
                    ev.extend(with.into_iter().map(|index| EvidenceRef::Estimate { mac: subject.phone, index }));
                    Confidence::High
                }
                _ => Confidence::Low,
            };
            last_work_end = last_work_end.max(Some(b));
            events.push(ActivityEvent::interval(a, b, EventKind::WorkSession, who, ev).with_confidence(confidence));
        }
    }

    // (b) room transitions of the phone
    let voted = vote_sectors(&day_track, p.transition_vote);
    let mut runs: Vec<(usize, Vec<usize>)> = Vec::new();
    for ((i, _), s) in day_track.iter().zip(&voted) {
        let Some(s) = *s else { continue };
        match runs.last_mut() {
            Some(r) if r.0 == s => r.1.push(*i),
            _ => runs.push((s, vec![*i])),
        }
    }
    let mut current: Option<usize> = None;
    if let Some(t) = track {
        for (s, idx) in runs {
            let first = &t[idx[0]];
            let last = &t[*idx.last().unwrap()];
            if idx.len() < 2 || last.t_end_us - first.t_start_us < p.transition_min_s * US {
                continue;
            }
            if current.is_some_and(|c| c != s) {
                let ev = idx.iter().map(|&index| EvidenceRef::Estimate { mac: subject.phone, index }).collect();
                events.push(ActivityEvent::instant(first.t_start_us, EventKind::Transition, who, ev));
            }
            current = Some(s);
        }
    }

    // (c) leisure after the working day
    for m in &subject.leisure {
        let Some(tl) = inputs.timelines.get(m) else { continue };
        for (a, b, segs) in active_runs(tl, d0, d1, p.session_gap_s * US) {
            if b - a >= p.session_min_s * US && last_work_end.is_none_or(|w| a >= w) {
                let ev = segs.into_iter().map(|index| EvidenceRef::Segment { mac: *m, index }).collect();
                events.push(ActivityEvent::interval(a, b, EventKind::LeisureSession, who, ev));
            }
        }
    }

    // (d) presence, sleep and wake
    if let Some(pr) = inputs.presence {
        for a in pr.absences.iter().filter(|e| e.t_start_us < d1 && d0 < e.t_end_us) {
            let mut e = a.clone();
            e.t_start_us = e.t_start_us.max(d0);
            e.t_end_us = e.t_end_us.min(d1);
            events.push(e);
        }
    }
    if let Some(sl) = inputs.sleep {
        events.extend(sl.sleeps.iter().chain(&sl.wakes).filter(|e| e.t_start_us >= d0 && e.t_start_us < d1).cloned());
    }
    events.sort();
    ActivityTimeline { subject: subject.alias.clone(), day_start_us: d0, day_end_us: d1, events }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::Segment;

    const H: u64 = 3600 * US;

    #[test]
    fn work_without_directions_is_low_confidence() {
        let laptop = Mac([3; 6]);
        let mut tls = BTreeMap::new();
        tls.insert(
            laptop,
            StateTimeline {
                mac: laptop,
                segments: vec![
                    Segment { t_start_us: 0, t_end_us: 9 * H, state: State::Idle },
                    Segment { t_start_us: 9 * H, t_end_us: 12 * H, state: State::Active },
                    Segment { t_start_us: 12 * H, t_end_us: 24 * H, state: State::Idle },
                ],
            },
        );
        let subject = Subject { alias: "r".into(), phone: Mac([2; 6]), work: vec![laptop], leisure: vec![] };
        let params = HarParams::default();
        let empty_t = BTreeMap::new();
        let empty_s = BTreeMap::new();
        let inputs = DayInputs { timelines: &tls, tracks: &empty_t, device_sectors: &empty_s, presence: None, sleep: None, params: &params };
        let day = synthesize_day(&subject, &inputs, 0);
        assert_eq!(day.events.len(), 1);
        let e = &day.events[0];
        assert_eq!((e.kind, e.t_start_us, e.t_end_us, e.confidence), (EventKind::WorkSession, 9 * H, 12 * H, Confidence::Low));
        assert_eq!(e.evidence, vec![EvidenceRef::Segment { mac: laptop, index: 1 }]);
    }
}
