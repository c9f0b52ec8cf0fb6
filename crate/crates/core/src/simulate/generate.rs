//! Frame emission and per-sniffer reception.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::propagation::{path_loss_db, quantize};
use super::rng::{KeyedRng, Stream};
use super::scenario::{DeviceKind, DeviceSpec, Scenario};
use super::truth::{GroundTruth, TrackStop, TruthDevice, TruthEvent, TruthSubject};
use super::SimError;
use crate::capture::{CaptureSet, FrameRecord, InfoKey, Proto};
use crate::har::EventKind;
use crate::identify::{model_name, Mobility, TrafficProfile};
use crate::mac::Mac;
use crate::states::{Segment, State};
use crate::time::US;

const MDNS_GROUP: Mac = Mac([0x01, 0x00, 0x5e, 0x00, 0x00, 0xfb]);
const SETUP_BEACON_SPAN_S: u64 = 600;
const SETUP_BEACON_EVERY_S: u64 = 2;

/// Painted state runs `(start_s, end_s, state)` tiling the scenario.
pub type Runs = Vec<(u64, u64, State)>;

fn paint(runs: &mut Runs, a: u64, b: u64, s: State) {
    if a >= b {
        return;
    }
    let mut out = Vec::with_capacity(runs.len() + 2);
    for &(x, y, t) in runs.iter() {
        if y <= a {
            out.push((x, y, t));
        } else if x < a {
            out.push((x, a, t));
        }
    }
    out.push((a, b, s));
    for &(x, y, t) in runs.iter() {
        if x >= b {
            out.push((x, y, t));
        } else if y > b {
            out.push((b, y, t));
        }
    }
    *runs = merge_runs(out);
}

fn merge_runs(runs: Runs) -> Runs {
    let mut out: Runs = Vec::with_capacity(runs.len());
    for r in runs {
        match out.last_mut() {
            Some(l) if l.2 == r.2 && l.1 == r.0 => l.1 = r.1,
            _ => out.push(r),
        }
    }
    out
}

/// The scripted state runs of a device. Autonomous devices are never active.
pub fn state_runs(sc: &Scenario, d: &DeviceSpec) -> Runs {
    let mut runs = if sc.duration_s > 0 { vec![(0, sc.duration_s, d.default_state)] } else { vec![] };
    for r in &d.schedule {
        for (a, b) in sc.spans(&r.when) {
            paint(&mut runs, a, b, r.state);
        }
    }
    if d.kind == DeviceKind::Autonomous {
        runs = merge_runs(runs.into_iter().map(|(a, b, s)| (a, b, if s == State::Active { State::Idle } else { s })).collect());
    }
    runs
}

fn state_at(runs: &Runs, t: f64) -> State {
    let s = t.max(0.0) as u64;
    let i = runs.partition_point(|r| r.1 <= s);
    runs.get(i).map_or(State::Off, |r| r.2)
}

/// Room stops `(t_s, room)` of a mobile device, starting at its initial room.
pub fn room_stops(sc: &Scenario, d: &DeviceSpec) -> Vec<(u64, String)> {
    let Some(first) = d.room.clone() else { return vec![] };
    if d.kind != DeviceKind::MobileInteractive {
        return vec![];
    }
    let mut stops = vec![(0, first)];
    for m in &d.moves {
        for t in sc.instants(&m.when, m.at.as_deref(), m.at_s) {
            if t < sc.duration_s {
                stops.push((t, m.room.clone()));
            }
        }
    }
    // stable: among equal times the later rule wins
    stops.sort_by_key(|s| s.0);
    let mut out: Vec<(u64, String)> = Vec::with_capacity(stops.len());
    for s in stops {
        match out.last_mut() {
            Some(l) if l.0 == s.0 => *l = s,
            Some(l) if l.1 == s.1 => {}
            _ => out.push(s),
        }
    }
    out
}

struct Frame {
    t: f64,
    len: u32,
    proto: Proto,
    dst: Option<Mac>,
    info: Option<(InfoKey, Vec<u8>)>,
    tx: f64,
}

struct Emitter<'a> {
    sc: &'a Scenario,
    sigma: f64,
    floor: f64,
    start_us: u64,
    dur_us: u64,
    recs: [Vec<FrameRecord>; 3],
    loss: HashMap<(u64, u64), [f64; 3]>,
}

struct DeviceCtx {
    mac: Mac,
    static_pos: Option<[f64; 2]>,
    stops: Vec<(u64, [f64; 2])>,
    frames: u64,
    records: [u64; 3],
    dropped: [u64; 3],
}

impl DeviceCtx {
    fn pos(&self, t: f64) -> [f64; 2] {
        if self.stops.is_empty() {
            return self.static_pos.unwrap_or([0.0, 0.0]);
        }
        let s = t.max(0.0) as u64;
        let i = self.stops.partition_point(|p| p.0 <= s);
        self.stops[i.saturating_sub(1)].1
    }
}

impl Emitter<'_> {
    fn loss(&mut self, p: [f64; 2]) -> [f64; 3] {
        let sc = self.sc;
        *self
            .loss
            .entry((p[0].to_bits(), p[1].to_bits()))
            .or_insert_with(|| std::array::from_fn(|i| path_loss_db(&sc.propagation, &sc.walls, p, sc.sniffers[i])))
    }

    /// One transmitted frame, heard (or not) by each sniffer. Noise is drawn
    /// for all three sniffers so that drops never shift later draws.
    fn emit(&mut self, dev: &mut DeviceCtx, f: Frame, rng: &mut ChaCha8Rng) {
        if !(f.t >= 0.0) {
            return;
        }
        let off_us = (f.t * 1e6).round() as u64;
        if off_us >= self.dur_us {
            return;
        }
        let ts = self.start_us + off_us;
        let loss = self.loss(dev.pos(f.t));
        dev.frames += 1;
        for (i, l) in loss.iter().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            let rssi = f.tx - l + self.sigma * z;
            match quantize(rssi, self.floor) {
                Some(q) => {
                    let mut r = FrameRecord::new(ts, i as u8, dev.mac, f.len, f.proto).with_rssi(q);
                    r.dst_mac = f.dst;
                    if let Some((k, v)) = &f.info {
                        r.info.insert(*k, v.clone());
                    }
                    self.recs[i].push(r);
                    dev.records[i] += 1;
                }
                None => dev.dropped[i] += 1,
            }
        }
    }
}

fn uniform_len(rng: &mut ChaCha8Rng, r: [u32; 2]) -> u32 {
    rng.random_range(r[0]..=r[1])
}

fn ble_payload(name: &str) -> Vec<u8> {
    let mut p = vec![name.len() as u8 + 1, 0x09];
    p.extend_from_slice(name.as_bytes());
    p
}

fn emit_device(em: &mut Emitter, d: &DeviceSpec, runs: &Runs, dev: &mut DeviceCtx) {
    let sc = em.sc;
    let seed = sc.seed;
    let dur = sc.duration_s as f64;
    let data_dst = sc.router.filter(|&r| r != d.mac);
    let setup = (d.setup_at_s, d.setup_at_s + sc.setup_s);

    match d.kind {
        DeviceKind::Autonomous => {
            let p = d.period_s.unwrap_or(1.0);
            let key = KeyedRng::new(seed, d.mac, Stream::Autonomous);
            let mut k = 0u64;
            loop {
                let base = d.phase_s + k as f64 * p;
                if base - d.jitter_s >= dur {
                    break;
                }
                let mut rng = key.at(k);
                let j = if d.jitter_s > 0.0 { rng.random_range(-d.jitter_s..d.jitter_s) } else { 0.0 };
                let t = base + j;
                if t >= 0.0 && t < dur && state_at(runs, t) != State::Off {
                    let len = uniform_len(&mut rng, d.frame_len);
                    let f = match &d.beacon_ssid {
                        Some(s) => {
                            Frame { t, len, proto: Proto::WifiBeacon, dst: None, info: Some((InfoKey::Ssid, s.as_bytes().to_vec())), tx: d.tx_power_dbm }
                        }
                        None => Frame { t, len, proto: Proto::WifiData, dst: data_dst, info: None, tx: d.tx_power_dbm },
                    };
                    em.emit(dev, f, &mut rng);
                }
                k += 1;
            }
        }
        DeviceKind::Interactive | DeviceKind::MobileInteractive => {
            let act = KeyedRng::new(seed, d.mac, Stream::Active);
            let idle = KeyedRng::new(seed, d.mac, Stream::Idle);
            for &(a, b, s) in runs {
                match s {
                    State::Off => {}
                    State::Active => {
                        for sec in a..b {
                            let mut rng = act.at(sec);
                            let r = rng.random_range(d.rate_fps[0]..=d.rate_fps[1]);
                            for j in 0..r {
                                let t = sec as f64 + (j as f64 + 0.5 + rng.random_range(-0.1..0.1)) / r as f64;
                                let len = uniform_len(&mut rng, d.active_len);
                                em.emit(dev, Frame { t, len, proto: Proto::WifiData, dst: data_dst, info: None, tx: d.tx_power_dbm }, &mut rng);
                            }
                        }
                    }
                    State::Idle => {
                        let mut rng = idle.at(a);
                        let mut t = a as f64 + rng.random_range(0.0..5.0);
                        while t < b as f64 {
                            let len = uniform_len(&mut rng, d.frame_len);
                            em.emit(dev, Frame { t, len, proto: Proto::WifiData, dst: data_dst, info: None, tx: d.tx_power_dbm }, &mut rng);
                            t += rng.random_range(d.idle_gap_s[0]..=d.idle_gap_s[1]);
                        }
                    }
                }
            }
        }
    }

    if let Some(b) = &d.ble {
        let key = KeyedRng::new(seed, d.mac, Stream::Ble);
        let payload = ble_payload(&b.name);
        let mut k = 0u64;
        loop {
            let t = b.phase_s + k as f64 * b.period_s;
            if t >= dur {
                break;
            }
            let in_setup = (setup.0 as f64..setup.1 as f64).contains(&t);
            if state_at(runs, t) != State::Off && (!b.setup_only || in_setup) {
                let f = Frame {
                    t,
                    len: payload.len() as u32 + 12,
                    proto: Proto::BleAdv,
                    dst: None,
                    info: Some((InfoKey::BleAdv, payload.clone())),
                    tx: b.tx_power_dbm,
                };
                em.emit(dev, f, &mut key.at(k));
            }
            k += 1;
        }
    }

    if let Some(ssid) = &d.setup_ssid {
        let key = KeyedRng::new(seed, d.mac, Stream::Setup);
        let n = SETUP_BEACON_SPAN_S.min(sc.setup_s) / SETUP_BEACON_EVERY_S;
        for k in 0..n {
            let t = (setup.0 + k * SETUP_BEACON_EVERY_S) as f64 + 0.25;
            let f = Frame { t, len: 180, proto: Proto::WifiBeacon, dst: None, info: Some((InfoKey::Ssid, ssid.as_bytes().to_vec())), tx: d.tx_power_dbm };
            em.emit(dev, f, &mut key.at(k));
        }
    }

    let once = KeyedRng::new(seed, d.mac, Stream::Oneshot);
    for (i, name) in d.mdns_names.iter().enumerate() {
        let t = (setup.0 + 30 * (i as u64 + 1)) as f64 + 0.75;
        let f = Frame {
            t,
            len: 90 + name.len() as u32,
            proto: Proto::WifiData,
            dst: Some(MDNS_GROUP),
            info: Some((InfoKey::MdnsName, name.as_bytes().to_vec())),
            tx: d.tx_power_dbm,
        };
        em.emit(dev, f, &mut once.at(i as u64));
    }
    if let Some(home) = &sc.home_ssid {
        for (i, to) in d.credentials_to.iter().enumerate() {
            let t = (setup.0 + 300 + 60 * i as u64) as f64 + 0.75;
            let f = Frame { t, len: 150, proto: Proto::WifiData, dst: Some(*to), info: Some((InfoKey::Ssid, home.as_bytes().to_vec())), tx: d.tx_power_dbm };
            em.emit(dev, f, &mut once.at(1_000 + i as u64));
        }
    }
    if !d.probe_ssids.is_empty() {
        let mut n = 0u64;
        for (idx, &(a, b, s)) in runs.iter().enumerate() {
            let powered_on = s != State::Off && (idx == 0 || runs[idx - 1].2 == State::Off);
            if !powered_on {
                continue;
            }
            for (i, ssid) in d.probe_ssids.iter().enumerate() {
                let t = (a + 1 + i as u64) as f64 + 0.25;
                if t < b as f64 {
                    let f = Frame {
                        t,
                        len: 40 + ssid.len() as u32,
                        proto: Proto::WifiProbeReq,
                        dst: None,
                        info: Some((InfoKey::Ssid, ssid.as_bytes().to_vec())),
                        tx: d.tx_power_dbm,
                    };
                    em.emit(dev, f, &mut once.at(10_000 + n));
                    n += 1;
                }
            }
        }
    }
}

fn truth_identity(d: &DeviceSpec) -> (String, Option<String>) {
    let leaked = d.setup_ssid.clone().or_else(|| d.ble.as_ref().map(|b| b.name.clone())).or_else(|| d.mdns_names.iter().find(|n| !n.starts_with('_')).cloned());
    match leaked {
        Some(n) => ("exact_model".into(), Some(model_name(&n))),
        None if d.mac.is_locally_administered() => ("randomized".into(), None),
        None => ("vendor_only".into(), None),
    }
}

fn to_segments(start_us: u64, runs: &Runs) -> Vec<Segment> {
    runs.iter().map(|&(a, b, s)| Segment { t_start_us: start_us + a * US, t_end_us: start_us + b * US, state: s }).collect()
}

/// Renders the scenario into three per-sniffer captures and its ground truth.
pub fn generate(sc: &Scenario) -> Result<(Vec<CaptureSet>, GroundTruth), SimError> {
    sc.validate()?;
    let start_us = sc.start_us();
    let dur_us = sc.duration_s * US;
    let mut em =
        Emitter { sc, sigma: sc.propagation.sigma_db, floor: sc.propagation.floor_dbm, start_us, dur_us, recs: Default::default(), loss: HashMap::new() };
    let mut devices = Vec::with_capacity(sc.devices.len());
    let mut all_runs: HashMap<Mac, Runs> = HashMap::new();
    let mut all_stops: HashMap<Mac, Vec<(u64, String)>> = HashMap::new();
    for d in &sc.devices {
        let runs = state_runs(sc, d);
        let stops = room_stops(sc, d);
        let mut ctx = DeviceCtx {
            mac: d.mac,
            static_pos: sc.static_position(d),
            stops: stops.iter().map(|(t, r)| (*t, sc.room(r).expect("validated room").anchor())).collect(),
            frames: 0,
            records: [0; 3],
            dropped: [0; 3],
        };
        emit_device(&mut em, d, &runs, &mut ctx);
        let (identity_class, model) = truth_identity(d);
        devices.push(TruthDevice {
            mac: d.mac,
            name: d.name.clone(),
            identity_class,
            model,
            profile: if d.kind == DeviceKind::Autonomous { TrafficProfile::Autonomous } else { TrafficProfile::Interactive },
            mobility: if d.kind == DeviceKind::MobileInteractive { Mobility::Mobile } else { Mobility::Static },
            position: if stops.is_empty() { ctx.static_pos } else { None },
            track: stops
                .iter()
                .map(|(t, r)| TrackStop { t_us: start_us + t * US, room: r.clone(), position: sc.room(r).expect("validated room").anchor() })
                .collect(),
            segments: to_segments(start_us, &runs),
            frames: ctx.frames,
            records: ctx.records,
            dropped: ctx.dropped,
        });
        all_runs.insert(d.mac, runs);
        all_stops.insert(d.mac, stops);
    }

    let events = truth_events(sc, &all_runs, &all_stops);
    let window = Some((start_us, start_us + dur_us));
    let recs = std::mem::take(&mut em.recs);
    let captures = recs
        .into_iter()
        .enumerate()
        .map(|(i, r)| CaptureSet::new(r, window).map(|c| c.with_sniffer_count(i as u8 + 1)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| SimError::Invalid(e.to_string()))?;
    let truth = GroundTruth {
        schema_version: super::scenario::SCHEMA_VERSION,
        scenario: sc.name.clone(),
        seed: sc.seed,
        start_us,
        end_us: start_us + dur_us,
        utc_offset_s: sc.utc_offset_s,
        sniffers: sc.sniffers,
        devices,
        subjects: sc.subjects.iter().map(|s| TruthSubject { alias: s.alias.clone(), phone: s.phone, guest: s.guest }).collect(),
        events,
    };
    Ok((captures, truth))
}

pub const ABSENCE_MIN_S: u64 = 1800;
pub const SESSION_MIN_S: u64 = 1800;
pub const TRANSITION_MIN_S: u64 = 120;

fn truth_events(sc: &Scenario, runs: &HashMap<Mac, Runs>, stops: &HashMap<Mac, Vec<(u64, String)>>) -> Vec<TruthEvent> {
    let at = |s: u64| sc.start_us() + s * US;
    let mut ev = Vec::new();
    let mut push = |kind, subject: &str, a: u64, b: u64| ev.push(TruthEvent { t_start_us: at(a), t_end_us: at(b), kind, subject: subject.to_string() });
    for s in &sc.subjects {
        let phone = &runs[&s.phone];
        if s.guest {
            for (i, &(a, b, st)) in phone.iter().enumerate() {
                if st == State::Off {
                    continue;
                }
                if i > 0 && phone[i - 1].2 == State::Off {
                    push(EventKind::GuestArrive, &s.alias, a, a);
                }
                if b < sc.duration_s && phone.get(i + 1).is_some_and(|n| n.2 == State::Off) {
                    push(EventKind::GuestDepart, &s.alias, b, b);
                }
            }
        } else {
            for &(a, b, st) in phone {
                if st == State::Off && b - a >= ABSENCE_MIN_S {
                    push(EventKind::Absent, &s.alias, a, b);
                }
            }
        }
        for (macs, kind) in [(&s.work, EventKind::WorkSession), (&s.leisure, EventKind::LeisureSession)] {
            for m in macs {
                for &(a, b, st) in &runs[m] {
                    if st == State::Active && b - a >= SESSION_MIN_S {
                        push(kind, &s.alias, a, b);
                    }
                }
            }
        }
        let st = &stops[&s.phone];
        for w in 1..st.len() {
            let end = st.get(w + 1).map_or(sc.duration_s, |n| n.0);
            if end - st[w].0 >= TRANSITION_MIN_S {
                push(EventKind::Transition, &s.alias, st[w].0, st[w].0);
            }
        }
    }
    for e in &sc.events {
        if e.at.is_some() || e.at_s.is_some() {
            for t in sc.instants(&e.when, e.at.as_deref(), e.at_s) {
                push(e.kind, &e.subject, t, t);
            }
        } else {
            for (a, b) in sc.spans(&e.when) {
                push(e.kind, &e.subject, a, b);
            }
        }
    }
    ev.sort();
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paint_overrides_and_merges() {
        let mut r: Runs = vec![(0, 100, State::Idle)];
        paint(&mut r, 10, 20, State::Active);
        paint(&mut r, 50, 100, State::Off);
        paint(&mut r, 15, 30, State::Idle);
        assert_eq!(r, vec![(0, 10, State::Idle), (10, 15, State::Active), (15, 50, State::Idle), (50, 100, State::Off)]);
    }
}
