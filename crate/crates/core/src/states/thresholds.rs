//! Percentile thresholds separating off, idle and active traffic.

use serde::{Deserialize, Serialize};

use super::StatesError;
use crate::capture::TrafficSeries;

pub const DEFAULT_OFF_GAP_S: u32 = 300;
pub const DEFAULT_SMOOTH_WINDOW_S: u32 = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Frames per bin at or above which a bin is active.
    pub t_active: u32,
    /// Typical frames per bin of background traffic.
    pub t_idle: u32,
    pub off_gap_s: u32,
    pub smooth_window_s: u32,
    /// Set when calibrated on an all-zero series.
    pub degenerate: bool,
}

impl Thresholds {
    pub fn new(t_idle: u32, t_active: u32) -> Self {
        Self { t_active, t_idle, off_gap_s: DEFAULT_OFF_GAP_S, smooth_window_s: DEFAULT_SMOOTH_WINDOW_S, degenerate: false }
    }

    fn degenerate() -> Self {
        Self { degenerate: true, ..Self::new(1, 2) }
    }

    pub fn is_valid(&self) -> bool {
        0 < self.t_idle && self.t_idle <= self.t_active && self.off_gap_s >= self.smooth_window_s
    }
}

/// Nearest-rank percentile of `sorted` (ascending, non-empty), `p` in (0, 100].
pub fn percentile_nearest_rank(sorted: &[u32], p: f64) -> u32 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

/// `t_idle` = max(1, p90 of nonzero counts in the quietest contiguous quarter);
/// `t_active` = max(2·t_idle, p75 of all nonzero counts).
pub fn calibrate_thresholds(series: &TrafficSeries) -> Result<Thresholds, StatesError> {
    let span = series.len() as u64 * series.bin_width_s as u64;
    if span < 3600 {
        return Err(StatesError::TooShort { have_s: span, need_s: 3600 });
    }
    let c = &series.counts;
    if c.iter().all(|&x| x == 0) {
        return Ok(Thresholds::degenerate());
    }
    let q = (c.len() / 4).max(1);
    let mut sum: u64 = c[..q].iter().map(|&x| x as u64).sum();
    let (mut best, mut best_at) = (sum, 0);
    for i in q..c.len() {
        sum += c[i] as u64;
        sum -= c[i - q] as u64;
        if sum < best {
            best = sum;
            best_at = i + 1 - q;
        }
    }
    let mut quiet: Vec<u32> = c[best_at..best_at + q].iter().copied().filter(|&x| x > 0).collect();
    quiet.sort_unstable();
    let t_idle = if quiet.is_empty() { 1 } else { percentile_nearest_rank(&quiet, 90.0).max(1) };
    let mut all: Vec<u32> = c.iter().copied().filter(|&x| x > 0).collect();
    all.sort_unstable();
    let t_active = (2 * t_idle).max(percentile_nearest_rank(&all, 75.0));
    Ok(Thresholds::new(t_idle, t_active))
}

/// Calibrates each `day_s` chunk separately and takes the lower median of the
/// non-degenerate results. Long series mix many regimes, so one global
/// quarter-window is a poor idle reference.
pub fn calibrate_per_day(series: &TrafficSeries, day_s: u64) -> Result<Thresholds, StatesError> {
    let per_day = (day_s / series.bin_width_s as u64).max(1) as usize;
    let mut idle = Vec::new();
    let mut active = Vec::new();
    let mut lo = 0;
    while lo < series.len() {
        let hi = (lo + per_day).min(series.len());
        if let Ok(th) = calibrate_thresholds(&series.slice_bins(lo, hi)) {
            if !th.degenerate {
                idle.push(th.t_idle);
                active.push(th.t_active);
            }
        }
        lo = hi;
    }
    if idle.is_empty() {
        return calibrate_thresholds(series);
    }
    idle.sort_unstable();
    active.sort_unstable();
    let t_idle = idle[(idle.len() - 1) / 2];
    let t_active = active[(active.len() - 1) / 2].max(2 * t_idle);
    Ok(Thresholds::new(t_idle, t_active))
}
