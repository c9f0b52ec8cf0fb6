//! Presence from phone and interactive-device states, and its weekly fold.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{merge_intervals, ActivityEvent, EventKind, EvidenceRef, HarError, HarParams, Subject};
use crate::mac::Mac;
use crate::states::{State, StateTimeline};
use crate::time::{self, DAY_S, US, WEEKDAYS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Presence {
    pub subject: String,
    pub t_start_us: u64,
    pub t_end_us: u64,
    /// Maximal present intervals (gaps shorter than `absence_min_s` bridged).
    pub present: Vec<(u64, u64)>,
    pub absences: Vec<ActivityEvent>,
}

impl Presence {
    /// Present seconds inside `[a, b)`.
    pub fn present_s(&self, a: u64, b: u64) -> f64 {
        self.present.iter().map(|&(x, y)| y.min(b).saturating_sub(x.max(a))).sum::<u64>() as f64 / 1e6
    }
}

/// The subject is present while their phone is not off or any interactive
/// device is active. Gaps of at least `absence_min_s` are absences.
pub fn detect_presence(
    subject: &Subject,
    timelines: &BTreeMap<Mac, StateTimeline>,
    interactive: &BTreeSet<Mac>,
    params: &HarParams,
) -> Result<Presence, HarError> {
    let Some(phone) = timelines.get(&subject.phone).filter(|_| interactive.contains(&subject.phone)) else {
        return Err(HarError::NoInteractiveDevices(subject.alias.clone()));
    };
    let (t0, t1) = (phone.t_start_us(), phone.t_end_us());
    let mut cover: Vec<(u64, u64)> = phone.segments.iter().filter(|s| s.state != State::Off).map(|s| (s.t_start_us, s.t_end_us)).collect();
    for m in interactive {
        if let Some(tl) = timelines.get(m) {
            cover.extend(tl.segments.iter().filter(|s| s.state == State::Active).map(|s| (s.t_start_us.max(t0), s.t_end_us.min(t1))));
        }
    }
    cover.retain(|(a, b)| a < b);
    let cover = merge_intervals(cover, 0);

    let min_us = params.absence_min_s * US;
    let mut gaps = Vec::new();
    let mut cursor = t0;
    for &(a, b) in &cover {
        if a > cursor {
            gaps.push((cursor, a));
        }
        cursor = cursor.max(b);
    }
    if cursor < t1 {
        gaps.push((cursor, t1));
    }
    let absences: Vec<ActivityEvent> = gaps
        .into_iter()
        .filter(|(a, b)| b - a >= min_us)
        .map(|(a, b)| {
            let evidence = phone.clipped(a, b).into_iter().map(|(index, _)| EvidenceRef::Segment { mac: subject.phone, index }).collect();
            ActivityEvent::interval(a, b, EventKind::Absent, &subject.alias, evidence)
        })
        .collect();
    let mut present = Vec::new();
    let mut cursor = t0;
    for a in &absences {
        if a.t_start_us > cursor {
            present.push((cursor, a.t_start_us));
        }
        cursor = a.t_end_us;
    }
    if cursor < t1 {
        present.push((cursor, t1));
    }
    Ok(Presence { subject: subject.alias.clone(), t_start_us: t0, t_end_us: t1, present, absences })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HourCell {
    pub hour: u8,
    /// Mean fraction of the hour present over the observed same weekdays.
    pub presence: Option<f64>,
    pub observations: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeekdayRow {
    pub weekday: String,
    pub hours: Vec<HourCell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeeklySchedule {
    pub subject: String,
    pub days_observed: f64,
    pub rows: Vec<WeekdayRow>,
    /// (weekday, hour) cells with presence ≤ recurring_max on enough observations.
    pub recurring_absence: Vec<(String, u8)>,
}

/// Folds presence into a weekday × hour table. Only hours lying wholly
/// inside the observation window count.
pub fn weekly_schedule(presence: &Presence, params: &HarParams) -> Result<WeeklySchedule, HarError> {
    let days = (presence.t_end_us - presence.t_start_us) as f64 / (DAY_S * US) as f64;
    if days < 7.0 {
        return Err(HarError::InsufficientHistory { days });
    }
    let mut sum = [[0f64; 24]; 7];
    let mut obs = [[0u32; 24]; 7];
    let off = params.utc_offset_s;
    let mut hour_start = time::local_midnight_us(presence.t_start_us, off);
    while hour_start + 3600 * US <= presence.t_end_us {
        if hour_start >= presence.t_start_us {
            let wd = time::weekday(hour_start, off).num_days_from_monday() as usize;
            let h = (time::second_of_day(hour_start, off) / 3600) as usize;
            sum[wd][h] += presence.present_s(hour_start, hour_start + 3600 * US) / 3600.0;
            obs[wd][h] += 1;
        }
        hour_start += 3600 * US;
    }
    let mut rows = Vec::with_capacity(7);
    let mut recurring = Vec::new();
    for (wd, w) in WEEKDAYS.iter().enumerate() {
        let name = time::weekday_short(*w).to_string();
        let hours = (0..24)
            .map(|h| {
                let n = obs[wd][h];
                let p = (n > 0).then(|| (sum[wd][h] / n as f64).clamp(0.0, 1.0));
                if n >= params.recurring_min_obs && p.is_some_and(|p| p <= params.recurring_max) {
                    recurring.push((name.clone(), h as u8));
                }
                HourCell { hour: h as u8, presence: p, observations: n }
            })
            .collect();
        rows.push(WeekdayRow { weekday: name, hours });
    }
    Ok(WeeklySchedule { subject: presence.subject.clone(), days_observed: days, rows, recurring_absence: recurring })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::Segment;

    const H: u64 = 3600 * US;
    // 2025-03-03, a Monday
    const T0: u64 = 1_740_960_000 * US;

    fn tl(mac: Mac, segs: &[(u64, u64, State)]) -> StateTimeline {
        StateTimeline { mac, segments: segs.iter().map(|&(a, b, s)| Segment { t_start_us: T0 + a, t_end_us: T0 + b, state: s }).collect() }
    }

    fn subject() -> Subject {
        Subject { alias: "r".into(), phone: Mac([2; 6]), work: vec![Mac([3; 6])], leisure: vec![] }
    }

    fn inputs(phone: &[(u64, u64, State)], laptop: &[(u64, u64, State)]) -> (BTreeMap<Mac, StateTimeline>, BTreeSet<Mac>) {
        let mut t = BTreeMap::new();
        t.insert(Mac([2; 6]), tl(Mac([2; 6]), phone));
        t.insert(Mac([3; 6]), tl(Mac([3; 6]), laptop));
        (t, [Mac([2; 6]), Mac([3; 6])].into())
    }

    #[test]
    fn phone_and_laptop_off_is_absence() {
        use State::*;
        let (t, i) =
            inputs(&[(0, 10 * H, Idle), (10 * H, 16 * H, Off), (16 * H, 24 * H, Idle)], &[(0, 10 * H, Idle), (10 * H, 16 * H, Off), (16 * H, 24 * H, Active)]);
        let p = detect_presence(&subject(), &t, &i, &HarParams::default()).unwrap();
        assert_eq!(p.absences.len(), 1);
        assert_eq!((p.absences[0].t_start_us, p.absences[0].t_end_us), (T0 + 10 * H, T0 + 16 * H));
        assert_eq!(p.absences[0].evidence, vec![EvidenceRef::Segment { mac: Mac([2; 6]), index: 1 }]);
    }

    #[test]
    fn short_gap_and_active_laptop_keep_presence() {
        use State::*;
        let m = 60 * US;
        let (t, i) = inputs(&[(0, 100 * m, Idle), (100 * m, 120 * m, Off), (120 * m, 24 * H, Idle)], &[(0, 24 * H, Idle)]);
        assert!(detect_presence(&subject(), &t, &i, &HarParams::default()).unwrap().absences.is_empty());
        let (t, i) = inputs(&[(0, 2 * H, Off), (2 * H, 24 * H, Idle)], &[(0, 2 * H, Active), (2 * H, 24 * H, Idle)]);
        assert!(detect_presence(&subject(), &t, &i, &HarParams::default()).unwrap().absences.is_empty());
    }

    #[test]
    fn phone_missing_is_an_error() {
        let (t, _) = inputs(&[(0, H, State::Idle)], &[(0, H, State::Idle)]);
        assert!(detect_presence(&subject(), &t, &BTreeSet::new(), &HarParams::default()).is_err());
    }

    #[test]
    fn weekly_needs_a_week() {
        let p = Presence { subject: "r".into(), t_start_us: T0, t_end_us: T0 + 6 * 24 * H, present: vec![(T0, T0 + 6 * 24 * H)], absences: vec![] };
        assert!(matches!(weekly_schedule(&p, &HarParams::default()), Err(HarError::InsufficientHistory { .. })));
    }

    #[test]
    fn recurring_monday_morning() {
        let end = T0 + 14 * 24 * H;
        let present = vec![(T0, T0 + 8 * H), (T0 + 14 * H, T0 + 7 * 24 * H + 8 * H), (T0 + 7 * 24 * H + 14 * H, end)];
        let p = Presence { subject: "r".into(), t_start_us: T0, t_end_us: end, present, absences: vec![] };
        let w = weekly_schedule(&p, &HarParams::default()).unwrap();
        let want: Vec<(String, u8)> = (8..14).map(|h| ("mon".to_string(), h)).collect();
        assert_eq!(w.recurring_absence, want);
        assert_eq!(w.rows[0].hours[8].observations, 2);
        assert_eq!(w.rows[1].hours[8].presence, Some(1.0));
    }
}
