//! Angular sectors cut at wide circular gaps.

use serde::{Deserialize, Serialize};

use super::DirectionEstimate;
use crate::mac::Mac;

pub const DEFAULT_GAP_DEG: f64 = 45.0;

/// Counter-clockwise arc from `start_deg` to `end_deg` (may wrap through 0°).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub id: usize,
    pub start_deg: f64,
    pub end_deg: f64,
    pub members: Vec<Mac>,
}

impl Sector {
    pub fn span_deg(&self) -> f64 {
        (self.end_deg - self.start_deg).rem_euclid(360.0)
    }

    pub fn contains(&self, angle: f64) -> bool {
        (angle - self.start_deg).rem_euclid(360.0) <= self.span_deg()
    }

    pub fn label(&self) -> String {
        format!("{:.0}°–{:.0}°", self.start_deg, self.end_deg)
    }

    /// Degrees outside the arc; 0 inside.
    pub fn distance(&self, angle: f64) -> f64 {
        if self.contains(angle) {
            0.0
        } else {
            angular_distance(angle, self.start_deg).min(angular_distance(angle, self.end_deg))
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SectorMap {
    pub gap_deg: f64,
    pub sectors: Vec<Sector>,
    /// Sector id per input estimate, in input order.
    pub assignment: Vec<usize>,
}

impl SectorMap {
    pub fn sector_of_mac(&self, mac: Mac) -> Option<usize> {
        self.sectors.iter().find(|s| s.members.contains(&mac)).map(|s| s.id)
    }
}

pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Sorts by angle and cuts at every circular gap of at least `gap_deg`.
/// Sectors are numbered counter-clockwise starting from the one that
/// contains the smallest angle.
pub fn cluster_sectors(estimates: &[DirectionEstimate], gap_deg: f64) -> SectorMap {
    let n = estimates.len();
    if n == 0 {
        return SectorMap { gap_deg, ..Default::default() };
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| estimates[a].angle_deg.total_cmp(&estimates[b].angle_deg).then(estimates[a].mac.cmp(&estimates[b].mac)));
    let ang = |k: usize| estimates[order[k]].angle_deg;
    // gap after sorted position k (to k+1, wrapping)
    let cuts: Vec<usize> = (0..n)
        .filter(|&k| {
            let g = if k + 1 < n { ang(k + 1) - ang(k) } else { ang(0) + 360.0 - ang(n - 1) };
            n > 1 && g >= gap_deg
        })
        .collect();

    let mut groups: Vec<Vec<usize>> = Vec::new();
    if cuts.is_empty() {
        // one sector; start after the widest gap
        let widest = (0..n)
            .max_by(|&a, &b| {
                let ga = if a + 1 < n { ang(a + 1) - ang(a) } else { ang(0) + 360.0 - ang(n - 1) };
                let gb = if b + 1 < n { ang(b + 1) - ang(b) } else { ang(0) + 360.0 - ang(n - 1) };
                ga.total_cmp(&gb).then(b.cmp(&a))
            })
            .unwrap();
        groups.push((1..=n).map(|j| (widest + j) % n).collect());
    } else {
        for (ci, &c) in cuts.iter().enumerate() {
            let next = cuts[(ci + 1) % cuts.len()];
            let mut g = Vec::new();
            let mut k = (c + 1) % n;
            loop {
                g.push(k);
                if k == next {
                    break;
                }
                k = (k + 1) % n;
            }
            groups.push(g);
        }
        // number from the group holding sorted position 0
        let first = groups.iter().position(|g| g.contains(&0)).unwrap();
        groups.rotate_left(first);
    }

    let mut assignment = vec![0; n];
    let sectors = groups
        .into_iter()
        .enumerate()
        .map(|(id, g)| {
            let mut members: Vec<Mac> = g.iter().map(|&k| estimates[order[k]].mac).collect();
            members.sort();
            members.dedup();
            for &k in &g {
                assignment[order[k]] = id;
            }
            Sector { id, start_deg: ang(g[0]), end_deg: ang(*g.last().unwrap()), members }
        })
        .collect();
    SectorMap { gap_deg, sectors, assignment }
}

/// The sector whose arc contains `angle`, else the nearest one if it lies
/// within `gap_deg / 2` of it.
pub fn sector_of(angle: f64, map: &SectorMap) -> Option<usize> {
    map.sectors
        .iter()
        .map(|s| (s.distance(angle), s.id))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .filter(|(d, _)| *d <= map.gap_deg / 2.0)
        .map(|(_, id)| id)
}
