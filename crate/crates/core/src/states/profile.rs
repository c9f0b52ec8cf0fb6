//! Autonomous vs. interactive traffic from activity periodicity.

use serde::{Deserialize, Serialize};

use super::{StatesError, TrafficProfile};
use crate::capture::TrafficSeries;
use crate::mac::Mac;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub p_min: f64,
    pub burstiness_max: f64,
    pub min_lag_s: u32,
    pub max_lag_s: u32,
    pub min_span_s: u64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self { p_min: 0.5, burstiness_max: 2.0, min_lag_s: 5, max_lag_s: 600, min_span_s: 6 * 3600 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileVerdict {
    pub mac: Mac,
    pub profile: TrafficProfile,
    pub periodicity_score: f64,
    pub burstiness: f64,
    /// Lag (seconds) where the periodicity score peaked.
    pub best_lag_s: u32,
}

struct Bits {
    words: Vec<u64>,
    n: usize,
}

impl Bits {
    fn from_counts(counts: &[u32]) -> Self {
        let mut words = vec![0u64; counts.len().div_ceil(64)];
        for (i, &c) in counts.iter().enumerate() {
            if c > 0 {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        Self { words, n: counts.len() }
    }

    /// Number of i with bit i and bit i+k both set.
    fn lag_overlap(&self, k: usize) -> u64 {
        let (q, r) = (k / 64, (k % 64) as u32);
        let w = &self.words;
        let mut s = 0u64;
        for i in 0..w.len().saturating_sub(q) {
            let lo = w[i + q] >> r;
            let hi = if r > 0 { w.get(i + q + 1).map_or(0, |x| x << (64 - r)) } else { 0 };
            s += (w[i] & (lo | hi)).count_ones() as u64;
        }
        s
    }
}

/// Normalized autocorrelation r(k) of the binary activity sequence.
pub fn activity_autocorrelation(counts: &[u32], lags: impl IntoIterator<Item = usize>) -> Vec<(usize, f64)> {
    let bits = Bits::from_counts(counts);
    let n = bits.n as f64;
    let m = bits.words.iter().map(|w| w.count_ones() as u64).sum::<u64>() as f64;
    let p = m / n;
    let var = p * (1.0 - p);
    lags.into_iter()
        .filter(|&k| k < bits.n)
        .map(|k| {
            if var == 0.0 {
                return (k, 1.0);
            }
            let s = bits.lag_overlap(k) as f64 / (bits.n - k) as f64;
            (k, (s - p * p) / var)
        })
        .collect()
}

/// Periodicity = max over lags of r(k) minus the lowest r at any shorter lag,
/// clamped to [0, 1]. Long activity bursts lift r(k) at every lag without
/// producing a peak, so the rise above the running minimum is what counts.
pub fn classify_profile(series: &TrafficSeries, params: &ProfileParams) -> Result<ProfileVerdict, StatesError> {
    let w = series.bin_width_s.max(1);
    let span = series.len() as u64 * w as u64;
    if span < params.min_span_s {
        return Err(StatesError::TooShort { have_s: span, need_s: params.min_span_s });
    }
    let nonzero: Vec<f64> = series.counts.iter().filter(|&&c| c > 0).map(|&c| c as f64).collect();
    if nonzero.len() < 2 {
        return Err(StatesError::UnknownProfile { nonzero: nonzero.len() });
    }
    let mean = nonzero.iter().sum::<f64>() / nonzero.len() as f64;
    let var = nonzero.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nonzero.len() as f64;
    let burstiness = var.sqrt() / mean;

    let (lo, hi) = ((params.min_lag_s / w).max(1) as usize, (params.max_lag_s / w) as usize);
    let (periodicity_score, best_lag_s) = if nonzero.len() == series.len() {
        (1.0, params.min_lag_s)
    } else {
        let r = activity_autocorrelation(&series.counts, lo..=hi);
        let mut run_min = f64::INFINITY;
        let mut best = (0.0f64, params.min_lag_s);
        for (k, rk) in r {
            run_min = run_min.min(rk);
            let prom = rk - run_min;
            if prom > best.0 {
                best = (prom, k as u32 * w);
            }
        }
        (best.0.clamp(0.0, 1.0), best.1)
    };
    let profile =
        if periodicity_score >= params.p_min && burstiness < params.burstiness_max { TrafficProfile::Autonomous } else { TrafficProfile::Interactive };
    Ok(ProfileVerdict { mac: series.mac, profile, periodicity_score, burstiness, best_lag_s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::thresholds::tests::series;

    fn naive(counts: &[u32], k: usize) -> u64 {
        (0..counts.len() - k).filter(|&i| counts[i] > 0 && counts[i + k] > 0).count() as u64
    }

    #[test]
    fn bitset_matches_naive() {
        let counts: Vec<u32> = (0..1000u32).map(|i| ((i * 7919) % 13 < 4) as u32).collect();
        let b = Bits::from_counts(&counts);
        for k in [1, 5, 63, 64, 65, 127, 128, 500, 999] {
            assert_eq!(b.lag_overlap(k), naive(&counts, k), "lag {k}");
        }
    }

    #[test]
    fn comb_is_autonomous() {
        let c: Vec<u32> = (0..6 * 3600).map(|i| (i % 30 == 7) as u32 * 3).collect();
        let v = classify_profile(&series(c), &ProfileParams::default()).unwrap();
        assert_eq!(v.profile, TrafficProfile::Autonomous);
        assert!(v.periodicity_score >= 0.9);
        assert_eq!(v.best_lag_s, 30);
    }

    #[test]
    fn constant_is_autonomous() {
        let v = classify_profile(&series(vec![4; 6 * 3600]), &ProfileParams::default()).unwrap();
        assert_eq!((v.profile, v.periodicity_score, v.burstiness), (TrafficProfile::Autonomous, 1.0, 0.0));
    }

    #[test]
    fn one_long_burst_is_interactive() {
        let mut c = vec![0u32; 6 * 3600];
        c[3600..9000].fill(9);
        c[15000] = 3;
        let v = classify_profile(&series(c), &ProfileParams::default()).unwrap();
        assert_eq!(v.profile, TrafficProfile::Interactive);
    }

    #[test]
    fn needs_two_nonzero_bins() {
        let mut c = vec![0u32; 6 * 3600];
        c[5] = 1;
        assert_eq!(classify_profile(&series(c), &ProfileParams::default()).unwrap_err(), StatesError::UnknownProfile { nonzero: 1 });
    }
}
