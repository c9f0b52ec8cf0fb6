//! Flat CSV exports of the report sections.

use std::io::Write;

use serde::Serialize;

use crate::identify::{Mobility, TrafficProfile};
use crate::pipeline::Report;
use crate::time;

fn profile_str(p: Option<TrafficProfile>) -> &'static str {
    match p {
        Some(TrafficProfile::Autonomous) => "autonomous",
        Some(TrafficProfile::Interactive) => "interactive",
        None => "",
    }
}

fn mobility_str(m: Option<Mobility>) -> &'static str {
    match m {
        Some(Mobility::Static) => "static",
        Some(Mobility::Mobile) => "mobile",
        None => "",
    }
}

/// Header first, so empty tables still name their columns.
fn write_rows<W: Write, T: Serialize>(w: W, header: &[&str], rows: impl IntoIterator<Item = T>) -> csv::Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

const INVENTORY_HEADER: &[&str] = &["mac", "identity_class", "identity", "vendor", "sources", "profile", "mobility", "first_seen", "last_seen", "frames"];

#[derive(Serialize)]
struct InventoryRow<'a> {
    mac: String,
    identity_class: &'a str,
    identity: String,
    vendor: &'a str,
    sources: String,
    profile: &'a str,
    mobility: &'a str,
    first_seen: String,
    last_seen: String,
    frames: u64,
}

pub fn inventory<W: Write>(report: &Report, w: W) -> csv::Result<()> {
    let off = report.config.har.utc_offset_s;
    let Some(inv) = &report.inventory else { return write_rows::<_, InventoryRow>(w, INVENTORY_HEADER, []) };
    write_rows(
        w,
        INVENTORY_HEADER,
        inv.profiles.iter().map(|p| InventoryRow {
            mac: p.mac.to_string(),
            identity_class: p.identity.class(),
            identity: p.identity.to_string(),
            vendor: p.vendor.as_deref().unwrap_or(""),
            sources: p.sources.iter().map(|s| format!("{s:?}").to_lowercase()).collect::<Vec<_>>().join(";"),
            profile: profile_str(p.profile),
            mobility: mobility_str(p.mobility),
            first_seen: time::iso(p.first_seen_us, off),
            last_seen: time::iso(p.last_seen_us, off),
            frames: p.frames,
        }),
    )
}

const TIMELINE_HEADER: &[&str] = &["mac", "t_start", "t_end", "state"];

#[derive(Serialize)]
struct TimelineRow {
    mac: String,
    t_start: String,
    t_end: String,
    state: &'static str,
}

pub fn timelines<W: Write>(report: &Report, w: W) -> csv::Result<()> {
    let off = report.config.har.utc_offset_s;
    write_rows(
        w,
        TIMELINE_HEADER,
        report.states.iter().flatten().flat_map(|d| {
            d.timeline.segments.iter().map(move |s| TimelineRow {
                mac: d.mac.to_string(),
                t_start: time::iso(s.t_start_us, off),
                t_end: time::iso(s.t_end_us, off),
                state: s.state.as_str(),
            })
        }),
    )
}

const THRESHOLD_HEADER: &[&str] = &["mac", "t_idle", "t_active", "off_gap_s", "smooth_window_s", "profile", "mobility", "spread_db"];

#[derive(Serialize)]
struct ThresholdRow {
    mac: String,
    t_idle: Option<u32>,
    t_active: Option<u32>,
    off_gap_s: Option<u32>,
    smooth_window_s: Option<u32>,
    profile: &'static str,
    mobility: &'static str,
    spread_db: Option<f64>,
}

pub fn thresholds<W: Write>(report: &Report, w: W) -> csv::Result<()> {
    write_rows(
        w,
        THRESHOLD_HEADER,
        report.states.iter().flatten().map(|d| ThresholdRow {
            mac: d.mac.to_string(),
            t_idle: d.thresholds.map(|t| t.t_idle),
            t_active: d.thresholds.map(|t| t.t_active),
            off_gap_s: d.thresholds.map(|t| t.off_gap_s),
            smooth_window_s: d.thresholds.map(|t| t.smooth_window_s),
            profile: profile_str(d.profile.as_ref().map(|p| p.profile)),
            mobility: mobility_str(d.mobility.as_ref().map(|m| m.mobility)),
            spread_db: d.mobility.as_ref().map(|m| (m.spread_db * 1000.0).round() / 1000.0),
        }),
    )
}

const DIRECTION_HEADER: &[&str] = &["mac", "angle_deg", "x", "y", "confidence", "sector"];

#[derive(Serialize)]
struct DirectionRow {
    mac: String,
    angle_deg: String,
    x: String,
    y: String,
    confidence: String,
    sector: Option<usize>,
}

pub fn directions<W: Write>(report: &Report, w: W) -> csv::Result<()> {
    let Some(loc) = &report.locate else { return write_rows::<_, DirectionRow>(w, DIRECTION_HEADER, []) };
    write_rows(
        w,
        DIRECTION_HEADER,
        loc.estimates.iter().enumerate().map(|(i, e)| DirectionRow {
            mac: e.mac.to_string(),
            angle_deg: format!("{:.2}", e.angle_deg),
            x: format!("{:.4}", e.vector[0]),
            y: format!("{:.4}", e.vector[1]),
            confidence: format!("{:.3}", e.confidence),
            sector: loc.sectors.assignment.get(i).copied(),
        }),
    )
}

const EVENT_HEADER: &[&str] = &["subject", "kind", "t_start", "t_end", "confidence", "evidence"];

#[derive(Serialize)]
struct EventRow<'a> {
    subject: &'a str,
    kind: &'static str,
    t_start: String,
    t_end: String,
    confidence: &'static str,
    evidence: usize,
}

pub fn events<W: Write>(report: &Report, w: W) -> csv::Result<()> {
    let off = report.config.har.utc_offset_s;
    write_rows(
        w,
        EVENT_HEADER,
        report.har.iter().flat_map(|h| &h.events).map(|e| EventRow {
            subject: &e.subject,
            kind: e.kind.as_str(),
            t_start: time::iso(e.t_start_us, off),
            t_end: time::iso(e.t_end_us, off),
            confidence: match e.confidence {
                crate::har::Confidence::Low => "low",
                crate::har::Confidence::High => "high",
            },
            evidence: e.evidence.len(),
        }),
    )
}

const WEEKLY_HEADER: &[&str] = &["subject", "weekday", "hour", "presence", "observations", "recurring_absence"];

#[derive(Serialize)]
struct WeeklyRow<'a> {
    subject: &'a str,
    weekday: &'a str,
    hour: u8,
    presence: Option<String>,
    observations: u32,
    recurring_absence: bool,
}

pub fn weekly<W: Write>(report: &Report, w: W) -> csv::Result<()> {
    write_rows(
        w,
        WEEKLY_HEADER,
        report.har.iter().flat_map(|h| &h.weekly).flat_map(|ws| {
            ws.rows.iter().flat_map(move |row| {
                row.hours.iter().map(move |c| WeeklyRow {
                    subject: &ws.subject,
                    weekday: &row.weekday,
                    hour: c.hour,
                    presence: c.presence.map(|p| format!("{p:.3}")),
                    observations: c.observations,
                    recurring_absence: ws.recurring_absence.iter().any(|(d, h)| d == &row.weekday && *h == c.hour),
                })
            })
        }),
    )
}
