//! Static vs. mobile from the drift of per-sniffer RSSI.

use serde::{Deserialize, Serialize};

use super::{Mobility, StatesError};
use crate::capture::TrafficSeries;

pub const DEFAULT_SIGMA_MAX_DB: f64 = 4.0;
const WINDOW_S: u32 = 600;
const MIN_BINS_PER_WINDOW: usize = 3;
const MIN_RSSI_BINS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobilityVerdict {
    pub mobility: Mobility,
    /// Largest across-window std of 10-minute mean RSSI over all sniffers, dB.
    pub spread_db: f64,
}

/// Each sniffer's bins are averaged per 10-minute window (windows with fewer
/// than 3 RSSI bins are dropped); the std of those window means measures how
/// far the device's mean signal wanders. Mobile iff the largest such std
/// exceeds `sigma_max_db`. Per-frame noise averages out inside a window,
/// movement between rooms does not.
pub fn classify_mobility(series: &TrafficSeries, sigma_max_db: f64) -> Result<MobilityVerdict, StatesError> {
    let n = series.len();
    let multi = (0..n).filter(|&i| series.rssi_mean.iter().filter(|s| s[i].is_some()).count() >= 2).count();
    if multi < MIN_RSSI_BINS {
        return Err(StatesError::InsufficientRssi { bins: multi, need: MIN_RSSI_BINS });
    }
    let per = (WINDOW_S / series.bin_width_s.max(1)).max(1) as usize;
    let mut spread = 0.0f64;
    for col in &series.rssi_mean {
        let means: Vec<f64> = col
            .chunks(per)
            .filter_map(|w| {
                let v: Vec<f64> = w.iter().flatten().map(|&x| x as f64).collect();
                (v.len() >= MIN_BINS_PER_WINDOW).then(|| v.iter().sum::<f64>() / v.len() as f64)
            })
            .collect();
        if means.len() < 2 {
            continue;
        }
        let mu = means.iter().sum::<f64>() / means.len() as f64;
        let sd = (means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / means.len() as f64).sqrt();
        spread = spread.max(sd);
    }
    let mobility = if spread > sigma_max_db { Mobility::Mobile } else { Mobility::Static };
    Ok(MobilityVerdict { mobility, spread_db: spread })
}
