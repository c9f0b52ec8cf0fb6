//! Sleep episodes from quiet night-time phone traffic.

use serde::{Deserialize, Serialize};

use super::{ActivityEvent, EventKind, EvidenceRef, HarParams};
use crate::states::{Segment, State, StateTimeline};
use crate::time::{self, DAY_S, US};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SleepInference {
    pub subject: String,
    pub sleeps: Vec<ActivityEvent>,
    pub wakes: Vec<ActivityEvent>,
    /// Night windows (start) where the phone was off throughout: subject likely away.
    pub away_nights_us: Vec<u64>,
}

#[derive(Clone, Debug)]
struct Run {
    start: u64,
    end: u64,
    quiet: bool,
    idle_us: u64,
    segs: Vec<usize>,
}

impl Run {
    fn len(&self) -> u64 {
        self.end - self.start
    }
}

fn runs_of(clipped: &[(usize, Segment)]) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::new();
    for (i, s) in clipped {
        let quiet = s.state != State::Active;
        let idle = if s.state == State::Idle { s.t_end_us - s.t_start_us } else { 0 };
        match out.last_mut() {
            Some(r) if r.quiet == quiet => {
                r.end = s.t_end_us;
                r.idle_us += idle;
                r.segs.push(*i);
            }
            _ => out.push(Run { start: s.t_start_us, end: s.t_end_us, quiet, idle_us: idle, segs: vec![*i] }),
        }
    }
    out
}

/// Sleep = a quiet (off or idle, mostly idle) run of at least `sleep_min_s`
/// inside the night window, starting no later than `latest_onset`. A run
/// already under way when the timeline starts yields only its wake. Short active interruptions between quiet runs
/// split the episode and each emits a wake; the final wake is the first
/// active segment after the episode.
pub fn infer_sleep(subject: &str, tl: &StateTimeline, params: &HarParams) -> SleepInference {
    let mut out = SleepInference { subject: subject.to_string(), ..Default::default() };
    if tl.segments.is_empty() {
        return out;
    }
    let (t0, t1) = (tl.t_start_us(), tl.t_end_us());
    let (ns, ne) = params.night_window_s();
    let span = if ne > ns { ne - ns } else { ne + DAY_S - ns };
    let mev = |r: &Run| r.segs.iter().map(|&index| EvidenceRef::Segment { mac: tl.mac, index }).collect::<Vec<_>>();
    let sleepy = |r: &Run| r.quiet && r.idle_us * 2 >= r.len();

    let mut midnight = time::local_midnight_us(t0, params.utc_offset_s).saturating_sub(DAY_S * US);
    while midnight < t1 {
        let (wa, wb) = (midnight + ns * US, midnight + (ns + span) * US);
        let onset_by = midnight + (DAY_S + time::parse_hhmm(&params.latest_onset).unwrap_or(5 * 3600)) * US;
        midnight += DAY_S * US;
        let (a, b) = (wa.max(t0), wb.min(t1));
        if a >= b {
            continue;
        }
        let clipped = tl.clipped(a, b);
        if clipped.iter().all(|(_, s)| s.state == State::Off) {
            if a == wa && b == wb {
                out.away_nights_us.push(wa);
            }
            continue;
        }
        let runs = runs_of(&clipped);
        let mut used = vec![false; runs.len()];
        for core in 0..runs.len() {
            let r = &runs[core];
            if used[core] || !sleepy(r) || r.len() < params.sleep_min_s * US || r.start > onset_by {
                continue;
            }
            let (mut lo, mut hi) = (core, core);
            while lo >= 2
                && !runs[lo - 1].quiet
                && runs[lo - 1].len() <= params.interruption_max_s * US
                && sleepy(&runs[lo - 2])
                && runs[lo - 2].len() >= params.neighbour_min_s * US
            {
                lo -= 2;
            }
            while hi + 2 < runs.len()
                && !runs[hi + 1].quiet
                && runs[hi + 1].len() <= params.interruption_max_s * US
                && sleepy(&runs[hi + 2])
                && runs[hi + 2].len() >= params.neighbour_min_s * US
            {
                hi += 2;
            }
            for k in lo..=hi {
                used[k] = true;
                let r = &runs[k];
                if r.quiet && r.start == t0 {
                    // began before the capture: only the wake is observed
                } else if r.quiet {
                    out.sleeps.push(ActivityEvent::interval(r.start, r.end, EventKind::Sleep, subject, mev(r)));
                } else {
                    out.wakes.push(ActivityEvent::instant(r.start, EventKind::Wake, subject, mev(r)));
                }
            }
            // final wake: the next active segment, possibly past the window
            let last_end = runs[hi].end;
            let next = tl.segments.iter().enumerate().skip_while(|(_, s)| s.t_end_us <= last_end).find(|(_, s)| s.state == State::Active);
            if let Some((index, s)) = next {
                if s.t_start_us < last_end + DAY_S * US / 2 {
                    out.wakes.push(ActivityEvent::instant(
                        s.t_start_us.max(last_end),
                        EventKind::Wake,
                        subject,
                        vec![EvidenceRef::Segment { mac: tl.mac, index }],
                    ));
                }
            }
        }
    }
    out.sleeps.sort();
    out.sleeps.dedup();
    out.wakes.sort();
    out.wakes.dedup();
    out
}
