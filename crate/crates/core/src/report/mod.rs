//! Writing a report to disk: JSON, CSV tables and SVG plots.

pub mod csv;
pub mod svg;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::capture::{bin_traffic, CaptureSet};
use crate::identify::TrafficProfile;
use crate::mac::Mac;
use crate::pipeline::Report;
use crate::time::{self, DAY_S, US};

/// The local day plotted in the day strip and threshold plots: the first
/// full day of the capture, else the day it starts in.
pub fn plot_day(report: &Report) -> u64 {
    let off = report.config.har.utc_offset_s;
    let (a, b) = (report.capture.t_start_us, report.capture.t_end_us);
    let m = time::local_midnight_us(a, off);
    if m >= a && m + DAY_S * US <= b {
        m
    } else if m + 2 * DAY_S * US <= b {
        m + DAY_S * US
    } else {
        m
    }
}

/// Largest per-second frame count in each minute of the day.
pub fn minute_peaks(capture: &CaptureSet, mac: Mac, day_start_us: u64) -> Vec<u32> {
    let day = capture.restrict(day_start_us, day_start_us + DAY_S * US);
    let mut peaks = vec![0u32; 1440];
    if let Ok(s) = bin_traffic(&day, mac, 1) {
        for (i, &c) in s.counts.iter().enumerate() {
            let t = s.bin_start_us(i);
            if t >= day_start_us {
                let m = ((t - day_start_us) / (60 * US)) as usize;
                if let Some(p) = peaks.get_mut(m) {
                    *p = (*p).max(c);
                }
            }
        }
    }
    peaks
}

fn create(dir: &Path, name: &str, written: &mut Vec<PathBuf>) -> io::Result<BufWriter<File>> {
    let p = dir.join(name);
    written.push(p.clone());
    Ok(BufWriter::new(File::create(p)?))
}

fn csv_err(e: ::csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Writes every output into `dir` and returns the paths in write order.
/// Threshold plots need the capture; they are skipped without it.
pub fn write_outputs(report: &Report, capture: Option<&CaptureSet>, dir: &Path) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut f = create(dir, "report.json", &mut written)?;
    serde_json::to_writer_pretty(&mut f, report).map_err(io::Error::other)?;
    f.write_all(b"\n")?;
    f.flush()?;

    type CsvFn = fn(&Report, &mut BufWriter<File>) -> ::csv::Result<()>;
    let tables: [(&str, CsvFn); 6] = [
        ("inventory.csv", |r, w| csv::inventory(r, w)),
        ("timelines.csv", |r, w| csv::timelines(r, w)),
        ("thresholds.csv", |r, w| csv::thresholds(r, w)),
        ("directions.csv", |r, w| csv::directions(r, w)),
        ("events.csv", |r, w| csv::events(r, w)),
        ("weekly.csv", |r, w| csv::weekly(r, w)),
    ];
    for (name, write) in tables {
        let mut f = create(dir, name, &mut written)?;
        write(report, &mut f).map_err(csv_err)?;
        f.flush()?;
    }

    let day = plot_day(report);
    if report.states.is_some() {
        create(dir, "day_strip.svg", &mut written)?.write_all(svg::day_strip(report, day).as_bytes())?;
    }
    if let (Some(cap), Some(states)) = (capture, &report.states) {
        let mut macs: Vec<Mac> = report.config.subjects.iter().map(|s| s.phone).collect();
        if macs.is_empty() {
            macs = report.inventory.iter().flat_map(|i| &i.profiles).filter(|p| p.profile == Some(TrafficProfile::Interactive)).map(|p| p.mac).collect();
        }
        for mac in macs {
            let Some(th) = states.iter().find(|d| d.mac == mac).and_then(|d| d.thresholds) else { continue };
            let label = format!("{mac} peak frames/s per minute, {}", &time::iso(day, report.config.har.utc_offset_s)[..10]);
            let name = format!("thresholds_{}.svg", mac.to_string().replace(':', ""));
            create(dir, &name, &mut written)?.write_all(svg::threshold_plot(&label, &minute_peaks(cap, mac, day), &th).as_bytes())?;
        }
    }
    if report.locate.is_some() {
        create(dir, "polar.svg", &mut written)?.write_all(svg::polar(report).as_bytes())?;
    }
    if let Some(har) = &report.har {
        for ws in &har.weekly {
            create(dir, &format!("week_{}.svg", ws.subject), &mut written)?.write_all(svg::week_heat(ws).as_bytes())?;
        }
        create(dir, "guests.svg", &mut written)?.write_all(svg::guest_table(report).as_bytes())?;
    }
    Ok(written)
}
