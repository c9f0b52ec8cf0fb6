//! Visitors: interactive MACs that first show up after the warm-up window.

use std::collections::{BTreeMap, BTreeSet};

use super::{merge_intervals, ActivityEvent, EventKind, EvidenceRef, HarParams};
use crate::identify::{Inventory, TrafficProfile};
use crate::mac::Mac;
use crate::states::{State, StateTimeline};
use crate::time::US;

/// MACs whose first sighting falls inside the warm-up window.
pub fn baseline_macs(inventory: &Inventory, capture_start_us: u64, params: &HarParams) -> BTreeSet<Mac> {
    let end = capture_start_us + params.warmup_s * US;
    inventory.profiles.iter().filter(|p| p.first_seen_us < end).map(|p| p.mac).collect()
}

/// One visit per stretch of presence; stretches closer than `depart_gap_s`
/// belong to the same visit. A departure needs `depart_gap_s` of silence
/// before the capture ends. Subjects are named by `aliases` when mapped,
/// else by MAC.
pub fn detect_guests(
    inventory: &Inventory,
    baseline: &BTreeSet<Mac>,
    timelines: &BTreeMap<Mac, StateTimeline>,
    capture: (u64, u64),
    aliases: &BTreeMap<Mac, String>,
    params: &HarParams,
) -> Vec<ActivityEvent> {
    let warm_end = capture.0 + params.warmup_s * US;
    let gap = params.depart_gap_s * US;
    let mut out = Vec::new();
    for p in &inventory.profiles {
        if baseline.contains(&p.mac) || p.profile != Some(TrafficProfile::Interactive) || p.first_seen_us < warm_end {
            continue;
        }
        let who = aliases.get(&p.mac).cloned().unwrap_or_else(|| p.mac.to_string());
        let (visits, segs): (Vec<(u64, u64)>, Vec<(usize, u64, u64)>) = match timelines.get(&p.mac) {
            Some(tl) => {
                let on: Vec<(usize, u64, u64)> =
                    tl.segments.iter().enumerate().filter(|(_, s)| s.state != State::Off).map(|(i, s)| (i, s.t_start_us, s.t_end_us)).collect();
                (merge_intervals(on.iter().map(|&(_, a, b)| (a, b)).collect(), gap.saturating_sub(1)), on)
            }
            None => (vec![(p.first_seen_us, p.last_seen_us)], vec![]),
        };
        for (a, b) in visits {
            let a = a.max(p.first_seen_us);
            let b = b.min(p.last_seen_us + US).max(a);
            let mut ev = vec![EvidenceRef::Profile { mac: p.mac }];
            ev.extend(segs.iter().filter(|&&(_, x, y)| x < b && a < y).map(|&(index, _, _)| EvidenceRef::Segment { mac: p.mac, index }));
            out.push(ActivityEvent::instant(a, EventKind::GuestArrive, &who, ev.clone()));
            if capture.1.saturating_sub(b) >= gap {
                out.push(ActivityEvent::instant(b, EventKind::GuestDepart, &who, ev));
            }
        }
    }
    out.sort();
    out
}
