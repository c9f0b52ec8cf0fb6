//! Local-time helpers. All local time is a fixed UTC offset; no DST.

use chrono::{DateTime, Datelike, FixedOffset, TimeZone, Timelike, Weekday};

pub const DAY_S: u64 = 86_400;
pub const US: u64 = 1_000_000;

pub const WEEKDAYS: [Weekday; 7] = [Weekday::Mon, Weekday::Tue, Weekday::Wed, Weekday::Thu, Weekday::Fri, Weekday::Sat, Weekday::Sun];

pub fn offset(utc_offset_s: i32) -> FixedOffset {
    FixedOffset::east_opt(utc_offset_s).unwrap_or_else(|| FixedOffset::east_opt(0).unwrap())
}

pub fn local(ts_us: u64, utc_offset_s: i32) -> DateTime<FixedOffset> {
    let secs = (ts_us / US) as i64;
    let nanos = ((ts_us % US) * 1000) as u32;
    offset(utc_offset_s).timestamp_opt(secs, nanos).single().expect("timestamp in range")
}

/// RFC 3339 with the local offset and whole seconds.
pub fn iso(ts_us: u64, utc_offset_s: i32) -> String {
    local(ts_us, utc_offset_s).format("%Y-%m-%dT%H:%M:%S%:z").to_string()
}

/// Seconds since local midnight.
pub fn second_of_day(ts_us: u64, utc_offset_s: i32) -> u64 {
    let t = local(ts_us, utc_offset_s);
    t.num_seconds_from_midnight() as u64
}

pub fn weekday(ts_us: u64, utc_offset_s: i32) -> Weekday {
    local(ts_us, utc_offset_s).weekday()
}

/// Timestamp of the local midnight at or before `ts_us`.
pub fn local_midnight_us(ts_us: u64, utc_offset_s: i32) -> u64 {
    ts_us - second_of_day(ts_us, utc_offset_s) * US - ts_us % US
}

/// "HH:MM" or "HH:MM:SS" to seconds; "24:00" is allowed as end of day.
pub fn parse_hhmm(s: &str) -> Option<u64> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    if !(2..=3).contains(&parts.len()) {
        return None;
    }
    let n: Vec<u64> = parts.iter().map(|p| p.parse().ok()).collect::<Option<_>>()?;
    let (h, m, s) = (n[0], n[1], n.get(2).copied().unwrap_or(0));
    if m >= 60 || s >= 60 || h > 24 || (h == 24 && (m, s) != (0, 0)) {
        return None;
    }
    Some(h * 3600 + m * 60 + s)
}

pub fn fmt_hhmm(sec_of_day: u64) -> String {
    format!("{:02}:{:02}", sec_of_day / 3600, sec_of_day % 3600 / 60)
}

pub fn weekday_short(w: Weekday) -> &'static str {
    match w {
        Weekday::Mon => "mon",
        Weekday::Tue => "tue",
        Weekday::Wed => "wed",
        Weekday::Thu => "thu",
        Weekday::Fri => "fri",
        Weekday::Sat => "sat",
        Weekday::Sun => "sun",
    }
}

pub fn parse_weekday(s: &str) -> Option<Weekday> {
    let head = s.get(..3).filter(|_| s.len() >= 3)?;
    WEEKDAYS.iter().copied().find(|w| weekday_short(*w).eq_ignore_ascii_case(head))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monday_epoch() {
        // 2025-03-03 00:00 UTC
        assert_eq!(weekday(1_740_960_000 * US, 0), Weekday::Mon);
        assert_eq!(iso(1_740_960_000 * US + 3_723 * US, 3600), "2025-03-03T02:02:03+01:00");
        assert_eq!(local_midnight_us(1_740_960_000 * US + 5 * US + 7, 0), 1_740_960_000 * US);
    }

    #[test]
    fn hhmm() {
        assert_eq!(parse_hhmm("07:30"), Some(27_000));
        assert_eq!(parse_hhmm("24:00"), Some(DAY_S));
        assert_eq!(parse_hhmm("24:01"), None);
        assert_eq!(parse_hhmm("7"), None);
        assert_eq!(fmt_hhmm(27_000), "07:30");
        assert_eq!(parse_weekday("Wednesday"), Some(Weekday::Wed));
        assert_eq!(parse_weekday("we"), None);
    }
}
