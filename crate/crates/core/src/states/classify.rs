//! Per-bin state labels and their smoothing into a timeline.

use super::{State, StateTimeline, Thresholds};
use crate::capture::TrafficSeries;

/// Unsmoothed labels. A zero bin is idle unless it sits in a zero run of at
/// least `off_gap_s`, in which case it is off.
pub fn raw_labels(counts: &[u32], th: &Thresholds, bin_width_s: u32) -> Vec<State> {
    let gap_bins = (th.off_gap_s as usize).div_ceil(bin_width_s.max(1) as usize).max(1);
    let mut out: Vec<State> = counts
        .iter()
        .map(|&c| {
            if c >= th.t_active {
                State::Active
            } else if c > 0 {
                State::Idle
            } else {
                State::Off
            }
        })
        .collect();
    let mut i = 0;
    while i < out.len() {
        if counts[i] != 0 {
            i += 1;
            continue;
        }
        let start = i;
        while i < out.len() && counts[i] == 0 {
            i += 1;
        }
        if i - start < gap_bins {
            out[start..i].fill(State::Idle);
        }
    }
    out
}

/// Centered majority vote over `2·half + 1` bins (clipped at the edges).
/// Ties keep the bin's own label when it is among the winners, otherwise the
/// most active winner.
pub fn smooth_labels(labels: &[State], half: usize) -> Vec<State> {
    if half == 0 || labels.is_empty() {
        return labels.to_vec();
    }
    let n = labels.len();
    let mut pre = vec![[0u32; 3]; n + 1];
    for (i, &s) in labels.iter().enumerate() {
        pre[i + 1] = pre[i];
        pre[i + 1][s as usize] += 1;
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            let votes: [u32; 3] = std::array::from_fn(|k| pre[hi][k] - pre[lo][k]);
            let best = *votes.iter().max().unwrap();
            let own = labels[i];
            if votes[own as usize] == best {
                own
            } else {
                [State::Active, State::Idle, State::Off].into_iter().find(|s| votes[*s as usize] == best).unwrap()
            }
        })
        .collect()
}

/// Raw labels, majority smoothing over `smooth_window_s`, then maximal segments.
pub fn classify_states(series: &TrafficSeries, th: &Thresholds) -> StateTimeline {
    let raw = raw_labels(&series.counts, th, series.bin_width_s);
    let half = (th.smooth_window_s / series.bin_width_s.max(1)) as usize / 2;
    let smooth = smooth_labels(&raw, half);
    StateTimeline::from_labels(series.mac, series.t0_us, series.bin_width_us(), &smooth)
}
