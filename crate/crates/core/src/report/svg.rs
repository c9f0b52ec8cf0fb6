//! Deterministic SVG plots. Numbers are printed at fixed precision and
//! nothing time-of-run dependent is embedded.

use std::fmt::Write;

use crate::har::{EventKind, WeeklySchedule};
use crate::locate::DirectionEstimate;
use crate::pipeline::Report;
use crate::states::{State, Thresholds};
use crate::time::{self, DAY_S, US};

const FONT: &str = "font-family=\"monospace\" font-size=\"11\"";

struct Svg {
    body: String,
    w: f64,
    h: f64,
}

impl Svg {
    fn new(w: f64, h: f64) -> Self {
        Self { body: String::new(), w, h }
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(self.body, "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"{fill}\"/>");
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, dash: bool) {
        let d = if dash { " stroke-dasharray=\"4 3\"" } else { "" };
        let _ = writeln!(self.body, "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{stroke}\"{d}/>");
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        let _ = writeln!(self.body, "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"{anchor}\" {FONT}>{}</text>", escape(s));
    }

    fn raw(&mut self, s: &str) {
        self.body.push_str(s);
        self.body.push('\n');
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.w,
            h = self.h
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn state_color(s: State) -> &'static str {
    match s {
        State::Off => "#dddddd",
        State::Idle => "#9ecae1",
        State::Active => "#e6550d",
    }
}

const LABEL_W: f64 = 150.0;
const HOUR_W: f64 = 32.0;

fn hour_axis(svg: &mut Svg, y0: f64, y1: f64) {
    for h in 0..=24 {
        let x = LABEL_W + h as f64 * HOUR_W;
        svg.line(x, y0, x, y1, "#eeeeee", false);
        if h % 3 == 0 {
            svg.text(x, y1 + 12.0, "middle", &format!("{h:02}"));
        }
    }
}

/// One row per device: its states over the local day starting at `day_start_us`.
pub fn day_strip(report: &Report, day_start_us: u64) -> String {
    let devices: Vec<_> = report.states.iter().flatten().collect();
    let row = 18.0;
    let top = 24.0;
    let mut svg = Svg::new(LABEL_W + 24.0 * HOUR_W + 20.0, top + row * devices.len() as f64 + 30.0);
    let off = report.config.har.utc_offset_s;
    svg.text(LABEL_W, 14.0, "start", &format!("device states {}", &time::iso(day_start_us, off)[..10]));
    hour_axis(&mut svg, top, top + row * devices.len() as f64);
    let day_end = day_start_us + DAY_S * US;
    let scale = HOUR_W / (3600.0 * US as f64);
    for (i, d) in devices.iter().enumerate() {
        let y = top + i as f64 * row;
        let name = report.inventory.as_ref().and_then(|inv| inv.get(d.mac)).map_or_else(|| d.mac.to_string(), |p| p.identity.to_string());
        svg.text(LABEL_W - 6.0, y + 13.0, "end", &format!("{} {}", &d.mac.to_string()[..5], truncate(&name, 14)));
        for (_, s) in d.timeline.clipped(day_start_us, day_end) {
            let x = LABEL_W + (s.t_start_us - day_start_us) as f64 * scale;
            let w = (s.t_end_us - s.t_start_us) as f64 * scale;
            svg.rect(x, y + 2.0, w, row - 4.0, state_color(s.state));
        }
    }
    svg.finish()
}

fn truncate(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

/// Per-minute peak frames per bin with the two thresholds drawn across.
pub fn threshold_plot(label: &str, minute_peaks: &[u32], th: &Thresholds) -> String {
    let (w, h, left, top) = (24.0 * HOUR_W, 220.0, 50.0, 20.0);
    let mut svg = Svg::new(left + w + 20.0, top + h + 40.0);
    svg.text(left, 14.0, "start", label);
    let ymax = minute_peaks.iter().copied().max().unwrap_or(0).max(th.t_active + 1) as f64 * 1.1;
    let y = |v: f64| top + h - v / ymax * h;
    let bw = w / minute_peaks.len().max(1) as f64;
    let mut path = String::from("<path fill=\"none\" stroke=\"#3182bd\" stroke-width=\"1\" d=\"");
    for (i, &c) in minute_peaks.iter().enumerate() {
        let _ = write!(path, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, left + i as f64 * bw, y(c as f64));
    }
    path.push_str("\"/>");
    svg.raw(&path);
    svg.line(left, top + h, left + w, top + h, "black", false);
    svg.line(left, top, left, top + h, "black", false);
    for (v, name, color) in [(th.t_idle, "t_idle", "#31a354"), (th.t_active, "t_active", "#e6550d")] {
        svg.line(left, y(v as f64), left + w, y(v as f64), color, true);
        svg.text(left + w - 2.0, y(v as f64) - 3.0, "end", &format!("{name} = {v}"));
    }
    for hr in (0..=24).step_by(3) {
        svg.text(left + hr as f64 / 24.0 * w, top + h + 14.0, "middle", &format!("{hr:02}"));
    }
    svg.text(left - 4.0, y(0.0), "end", "0");
    svg.finish()
}

/// Direction estimates on the unit circle around the sniffer centroid,
/// sectors shaded.
pub fn polar(report: &Report) -> String {
    let (cx, cy, r) = (260.0, 250.0, 190.0);
    let mut svg = Svg::new(560.0, 500.0);
    svg.text(20.0, 18.0, "start", "direction estimates (0° = +x, counter-clockwise)");
    svg.raw(&format!("<circle cx=\"{cx}\" cy=\"{cy}\" r=\"{r}\" fill=\"none\" stroke=\"#999999\"/>"));
    svg.line(cx - r, cy, cx + r, cy, "#dddddd", false);
    svg.line(cx, cy - r, cx, cy + r, "#dddddd", false);
    let Some(loc) = &report.locate else { return svg.finish() };
    let pt = |deg: f64, rad: f64| (cx + rad * deg.to_radians().cos(), cy - rad * deg.to_radians().sin());
    let palette = ["#fdd0a2", "#c7e9c0", "#dadaeb", "#fcbba1", "#c6dbef", "#d9d9d9"];
    for s in &loc.sectors.sectors {
        let span = s.span_deg().max(1.0);
        let (x0, y0) = pt(s.start_deg, r);
        let (x1, y1) = pt(s.start_deg + span, r);
        let large = if span > 180.0 { 1 } else { 0 };
        svg.raw(&format!(
            "<path d=\"M{cx},{cy} L{x0:.2},{y0:.2} A{r},{r} 0 {large} 0 {x1:.2},{y1:.2} Z\" fill=\"{}\" fill-opacity=\"0.7\"/>",
            palette[s.id % palette.len()]
        ));
        let (lx, ly) = pt(s.start_deg + span / 2.0, r + 18.0);
        svg.text(lx, ly, "middle", &format!("S{} {}", s.id, s.label()));
    }
    // labels closer than 12° to the previous one step inward
    let mut order: Vec<&DirectionEstimate> = loc.estimates.iter().collect();
    order.sort_by(|a, b| a.angle_deg.total_cmp(&b.angle_deg));
    let mut prev: Option<(f64, bool)> = None;
    for e in order {
        let (x, y) = pt(e.angle_deg, r * 0.85);
        svg.raw(&format!("<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"#08519c\"/>"));
        let inner = matches!(prev, Some((a, was)) if e.angle_deg - a < 12.0 && !was);
        prev = Some((e.angle_deg, inner));
        let (lx, ly) = pt(e.angle_deg, r * if inner { 0.48 } else { 0.62 });
        svg.text(lx, ly, "middle", &e.mac.to_string()[..5]);
    }
    svg.finish()
}

/// Weekday × hour presence, darker = more often away.
pub fn week_heat(ws: &WeeklySchedule) -> String {
    let (cell, left, top) = (22.0, 50.0, 30.0);
    let mut svg = Svg::new(left + 24.0 * cell + 20.0, top + 7.0 * cell + 40.0);
    svg.text(left, 16.0, "start", &format!("{}: presence by weekday and hour ({:.1} days)", ws.subject, ws.days_observed));
    for (d, row) in ws.rows.iter().enumerate() {
        let y = top + d as f64 * cell;
        svg.text(left - 6.0, y + 15.0, "end", &row.weekday);
        for c in &row.hours {
            let x = left + c.hour as f64 * cell;
            let fill = match c.presence {
                Some(p) => {
                    let v = (255.0 * p).round() as u8;
                    format!("#{v:02x}{v:02x}{:02x}", v.max(60))
                }
                None => "#ffffff".into(),
            };
            svg.rect(x + 1.0, y + 1.0, cell - 2.0, cell - 2.0, &fill);
            if ws.recurring_absence.iter().any(|(wd, h)| wd == &row.weekday && *h == c.hour) {
                svg.raw(&format!(
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#e6550d\" stroke-width=\"2\"/>",
                    x + 1.0,
                    y + 1.0,
                    cell - 2.0,
                    cell - 2.0
                ));
            }
        }
    }
    for h in (0..24).step_by(3) {
        svg.text(left + h as f64 * cell + cell / 2.0, top + 7.0 * cell + 14.0, "middle", &format!("{h:02}"));
    }
    svg.finish()
}

/// Guest arrivals and departures plus every sleep and wake during the
/// guests' stay, as a table.
pub fn guest_table(report: &Report) -> String {
    let off = report.config.har.utc_offset_s;
    let mut rows: Vec<(u64, String, String)> = Vec::new();
    if let Some(har) = &report.har {
        let span = har.guests.iter().map(|e| e.t_start_us).min().zip(har.guests.iter().map(|e| e.t_start_us).max());
        for e in &har.guests {
            rows.push((e.t_start_us, e.subject.clone(), e.kind.as_str().replace('_', " ")));
        }
        if let Some((a, b)) = span {
            for e in har.events.iter().filter(|e| matches!(e.kind, EventKind::Sleep | EventKind::Wake) && e.t_start_us >= a && e.t_start_us <= b) {
                rows.push((e.t_start_us, e.subject.clone(), e.kind.as_str().to_string()));
            }
        }
    }
    rows.sort();
    rows.dedup();
    let row_h = 18.0;
    let mut svg = Svg::new(560.0, 40.0 + row_h * (rows.len() + 1) as f64);
    svg.text(10.0, 16.0, "start", "guest timeline");
    let cols = [10.0, 230.0, 380.0];
    for (x, h) in cols.iter().zip(["time", "subject", "event"]) {
        svg.text(*x, 36.0, "start", h);
    }
    svg.line(10.0, 40.0, 550.0, 40.0, "black", false);
    for (i, (t, who, what)) in rows.iter().enumerate() {
        let y = 40.0 + row_h * (i + 1) as f64 - 4.0;
        svg.text(cols[0], y, "start", &time::iso(*t, off)[..16].replace('T', " "));
        svg.text(cols[1], y, "start", who);
        svg.text(cols[2], y, "start", what);
    }
    svg.finish()
}
