//! CSV ingestion, feature engineering and the synthetic scenario generator.
//!
//! Raw inputs are three CSV files: radar track hits, safety-related flight
//! events and hourly weather. Each flight is reduced to one feature row taken
//! at its TMA entry point, enriched with sliding-window traffic and event
//! counts and the weather of the entry hour.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson, Uniform};
use serde::{Deserialize, Serialize};

use crate::domain::{
    weight_class_of, FeatureSchema, FeatureVector, Flight, EV_LOOP_600_INDEX,
};

/// Earth radius used for all great-circle distances, nautical miles.
pub const EARTH_RADIUS_NM: f64 = 3440.065;

/// A flight whose final track hit lies within this distance of the airport
/// reference point is considered landed, which makes its duration observable.
pub const TOUCHDOWN_RADIUS_NM: f64 = 1.0;

/// Airport reference point used by the scenario generator.
pub const AIRPORT_REF: (f64, f64) = (33.6367, -84.4281);

/// TMA ring radii in nautical miles, outermost first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TmaRadii {
    pub outer_nm: f64,
    pub entry_nm: f64,
    pub inner_nm: f64,
}

impl Default for TmaRadii {
    fn default() -> Self {
        TmaRadii { outer_nm: 200.0, entry_nm: 100.0, inner_nm: 40.0 }
    }
}

impl TmaRadii {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.outer_nm > self.entry_nm && self.entry_nm > self.inner_nm && self.inner_nm > 0.0 {
            Ok(())
        } else {
            Err(IngestError::InvalidRadii {
                outer: self.outer_nm,
                entry: self.entry_nm,
                inner: self.inner_nm,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestError {
    #[error("{file}: {message}")]
    Io { file: String, message: String },
    #[error("{file} line {line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("flight {flight_id}: no weather record for hour bucket {hour_bucket}")]
    MissingWeather { flight_id: String, hour_bucket: i64 },
    #[error("flight {0}: no track point inside the TMA entry ring")]
    MissingBoundaryCrossing(String),
    #[error("TMA radii must be strictly decreasing and positive, got {outer}/{entry}/{inner}")]
    InvalidRadii { outer: f64, entry: f64, inner: f64 },
    #[error("aircraft type {0} missing from the schema dictionary")]
    UnknownAcType(String),
}

/// One radar hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub flight_id: String,
    pub timestamp: f64,
    pub latitude: f64,
    pub longitude: f64,
    pub altitude_ft: f64,
    pub ground_speed_kt: f64,
}

/// Identity columns repeated on every track row of a flight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightMeta {
    pub callsign: String,
    pub ac_type: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventType {
    Rrt,
    Loop,
    Goa,
    Other,
}

impl EventType {
    pub fn parse(s: &str) -> EventType {
        match s.trim() {
            "EV_RRT" => EventType::Rrt,
            "EV_LOOP" => EventType::Loop,
            "EV_GOA" => EventType::Goa,
            _ => EventType::Other,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EventType::Rrt => "EV_RRT",
            EventType::Loop => "EV_LOOP",
            EventType::Goa => "EV_GOA",
            EventType::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightEvent {
    pub flight_id: String,
    pub timestamp: f64,
    pub event_type: EventType,
}

/// Hourly weather joined onto flights by the entry hour bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    /// Whole hours since the Unix epoch.
    pub hour_bucket: i64,
    pub windspeed: f64,
    pub winddir: f64,
    pub cloudcover: f64,
    pub visibility: f64,
    pub humidity: f64,
}

/// Conditional-predictor stage, keyed on the EV_LOOP_600 count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    I,
    II,
    III,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::I, Stage::II, Stage::III];

    pub fn index(self) -> usize {
        match self {
            Stage::I => 0,
            Stage::II => 1,
            Stage::III => 2,
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        match s.trim() {
            "I" => Some(Stage::I),
            "II" => Some(Stage::II),
            "III" => Some(Stage::III),
            _ => None,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::I => "I",
            Stage::II => "II",
            Stage::III => "III",
        })
    }
}

/// Stage routing: EV_LOOP_600 up to 10 is I, up to 40 is II, above is III.
pub fn assign_stage(fv: &FeatureVector) -> Stage {
    stage_of_loop_count(fv.get(EV_LOOP_600_INDEX))
}

pub fn stage_of_loop_count(ev_loop_600: f64) -> Stage {
    if ev_loop_600 <= 10.0 {
        Stage::I
    } else if ev_loop_600 <= 40.0 {
        Stage::II
    } else {
        Stage::III
    }
}

/// Great-circle distance between two (lat, lon) degree pairs, nautical miles.
pub fn haversine_nm(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2)
        + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_NM * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Half-open look-back window `[t0 - w, t0)`.
    Ahead,
    /// Closed look-forward window `[t0, t0 + w]`.
    Behind,
}

fn in_window(ts: f64, t0: f64, window: f64, direction: Direction) -> bool {
    match direction {
        Direction::Ahead => ts >= t0 - window && ts < t0,
        Direction::Behind => ts >= t0 && ts <= t0 + window,
    }
}

/// Count events of one type inside the window around `t0`.
pub fn count_events(
    events: &[FlightEvent],
    t0: f64,
    window: f64,
    direction: Direction,
    event_type: EventType,
) -> usize {
    events
        .iter()
        .filter(|e| e.event_type == event_type && in_window(e.timestamp, t0, window, direction))
        .count()
}

/// Count other flights whose TMA entry falls inside the window around `t0`.
/// The target flight itself is excluded.
pub fn count_aircraft(
    entries: &[(String, f64)],
    self_id: &str,
    t0: f64,
    window: f64,
    direction: Direction,
) -> usize {
    entries
        .iter()
        .filter(|(id, ts)| id != self_id && in_window(*ts, t0, window, direction))
        .count()
}

/// Whole-hour bucket of a timestamp, nearest hour with ties rounding up.
pub fn hour_bucket(timestamp: f64) -> i64 {
    ((timestamp + 1800.0) / 3600.0).floor() as i64
}

/// First track point at or inside the entry ring, in timestamp order.
fn entry_point<'a>(
    points: &'a [TrackPoint],
    airport: (f64, f64),
    radii: &TmaRadii,
) -> Option<&'a TrackPoint> {
    points
        .iter()
        .find(|p| haversine_nm((p.latitude, p.longitude), airport) <= radii.entry_nm)
}

/// Build the feature row for one flight, taken at its TMA entry point.
#[allow(clippy::too_many_arguments)]
pub fn build_features(
    schema: &FeatureSchema,
    flight_id: &str,
    meta: &FlightMeta,
    points: &[TrackPoint],
    events: &[FlightEvent],
    weather: &BTreeMap<i64, WeatherRecord>,
    fleet_entries: &[(String, f64)],
    airport: (f64, f64),
    radii: &TmaRadii,
) -> Result<Flight, IngestError> {
    radii.validate()?;
    let entry = entry_point(points, airport, radii)
        .ok_or_else(|| IngestError::MissingBoundaryCrossing(flight_id.to_string()))?;
    let t0 = entry.timestamp;
    let bucket = hour_bucket(t0);
    let wx = weather.get(&bucket).ok_or(IngestError::MissingWeather {
        flight_id: flight_id.to_string(),
        hour_bucket: bucket,
    })?;
    let ac_index = schema
        .ac_type_index(&meta.ac_type)
        .ok_or_else(|| IngestError::UnknownAcType(meta.ac_type.clone()))? as f64;
    let distance = haversine_nm((entry.latitude, entry.longitude), airport);

    let mut named: Vec<(&str, f64)> = vec![
        ("acType", ac_index),
        ("Latitude", entry.latitude),
        ("Longitude", entry.longitude),
        ("Altitude", entry.altitude_ft),
        ("Distance", distance),
        ("Time", t0.rem_euclid(86400.0)),
        ("Hour", bucket.rem_euclid(24) as f64),
        ("GroundSpeed", entry.ground_speed_kt),
    ];
    for (name, direction) in
        [("ahead", Direction::Ahead), ("behind", Direction::Behind)]
    {
        for window in [600.0, 1800.0, 3600.0] {
            let count = count_aircraft(fleet_entries, flight_id, t0, window, direction);
            named.push((
                leaked(format!("AC_{}_{}", window as i64, name)),
                count as f64,
            ));
        }
    }
    for ev in [EventType::Rrt, EventType::Loop, EventType::Goa] {
        for window in [600.0, 1800.0, 3600.0] {
            let count = count_events(events, t0, window, Direction::Ahead, ev);
            named.push((
                leaked(format!("{}_{}", ev.name(), window as i64)),
                count as f64,
            ));
        }
    }
    named.push(("windspeed", wx.windspeed));
    named.push(("winddir", wx.winddir));
    named.push(("cloudcover", wx.cloudcover));
    named.push(("visibility", wx.visibility));
    named.push(("humidity", wx.humidity));

    let features = FeatureVector::from_named(schema, &named)
        .expect("feature construction covers the closed schema");

    let last = points.last().expect("entry point implies a non-empty track");
    let observed_duration = if last.timestamp > t0
        && haversine_nm((last.latitude, last.longitude), airport) <= TOUCHDOWN_RADIUS_NM
    {
        Some(last.timestamp - t0)
    } else {
        None
    };

    Ok(Flight {
        id: flight_id.to_string(),
        callsign: meta.callsign.clone(),
        ac_type: meta.ac_type.clone(),
        weight_class: weight_class_of(&meta.ac_type),
        entry_time: t0,
        features,
        observed_duration,
    })
}

/// Column names are built dynamically but `from_named` takes `&str`; the
/// handful of distinct names is interned once.
fn leaked(name: String) -> &'static str {
    use std::collections::HashMap;
    use std::sync::Mutex;
    use std::sync::OnceLock;
    static INTERN: OnceLock<Mutex<HashMap<String, &'static str>>> = OnceLock::new();
    let mut map = INTERN.get_or_init(|| Mutex::new(HashMap::new())).lock().unwrap();
    if let Some(&s) = map.get(&name) {
        return s;
    }
    let leaked: &'static str = Box::leak(name.clone().into_boxed_str());
    map.insert(name, leaked);
    leaked
}

/// Everything `build_dataset` produces: one `Flight` per track group that
/// crossed the entry ring, plus the flights that had to be rejected.
#[derive(Debug, Clone)]
pub struct IngestReport {
    pub schema: FeatureSchema,
    /// Sorted by entry time, ties by id.
    pub flights: Vec<Flight>,
    pub rejects: Vec<(String, IngestError)>,
}

/// Turn parsed raw inputs into feature rows for every flight in the track
/// file. Per-flight failures (no boundary crossing, missing weather hour)
/// are collected as rejects instead of failing the batch.
pub fn build_dataset(
    points: &[TrackPoint],
    meta: &BTreeMap<String, FlightMeta>,
    events: &[FlightEvent],
    weather: &[WeatherRecord],
    airport: (f64, f64),
    radii: &TmaRadii,
) -> Result<IngestReport, IngestError> {
    radii.validate()?;
    let mut by_flight: BTreeMap<&str, Vec<TrackPoint>> = BTreeMap::new();
    for p in points {
        by_flight.entry(&p.flight_id).or_default().push(p.clone());
    }
    for track in by_flight.values_mut() {
        track.sort_by(|a, b| a.timestamp.partial_cmp(&b.timestamp).unwrap());
    }
    let weather_map: BTreeMap<i64, WeatherRecord> =
        weather.iter().map(|w| (w.hour_bucket, w.clone())).collect();
    let schema = FeatureSchema::standard(meta.values().map(|m| m.ac_type.clone()).collect());

    let mut fleet_entries: Vec<(String, f64)> = Vec::new();
    let mut no_crossing: Vec<String> = Vec::new();
    for (id, track) in &by_flight {
        match entry_point(track, airport, radii) {
            Some(p) => fleet_entries.push((id.to_string(), p.timestamp)),
            None => no_crossing.push(id.to_string()),
        }
    }

    let mut flights = Vec::new();
    let mut rejects: Vec<(String, IngestError)> = no_crossing
        .into_iter()
        .map(|id| {
            let err = IngestError::MissingBoundaryCrossing(id.clone());
            (id, err)
        })
        .collect();
    let default_meta = FlightMeta { callsign: String::new(), ac_type: String::new() };
    for (id, track) in &by_flight {
        if rejects.iter().any(|(r, _)| r == id) {
            continue;
        }
        let m = meta.get(*id).unwrap_or(&default_meta);
        match build_features(
            &schema, id, m, track, events, &weather_map, &fleet_entries, airport, radii,
        ) {
            Ok(flight) => flights.push(flight),
            Err(e) => rejects.push((id.to_string(), e)),
        }
    }
    flights.sort_by(|a, b| {
        a.entry_time
            .partial_cmp(&b.entry_time)
            .unwrap()
            .then_with(|| a.id.cmp(&b.id))
    });
    Ok(IngestReport { schema, flights, rejects })
}

fn io_err(file: &Path, e: impl fmt::Display) -> IngestError {
    IngestError::Io { file: file.display().to_string(), message: e.to_string() }
}

fn parse_err(file: &Path, line: usize, message: impl fmt::Display) -> IngestError {
    IngestError::Parse {
        file: file.display().to_string(),
        line,
        message: message.to_string(),
    }
}

fn field<T: std::str::FromStr>(
    file: &Path,
    line: usize,
    record: &csv::StringRecord,
    idx: usize,
    name: &str,
) -> Result<T, IngestError>
where
    T::Err: fmt::Display,
{
    let raw = record
        .get(idx)
        .ok_or_else(|| parse_err(file, line, format!("missing column {name}")))?;
    raw.trim()
        .parse()
        .map_err(|e| parse_err(file, line, format!("bad {name} {raw:?}: {e}")))
}

fn check_header(
    file: &Path,
    reader: &mut csv::Reader<std::fs::File>,
    want: &[&str],
) -> Result<(), IngestError> {
    let got = reader.headers().map_err(|e| io_err(file, e))?;
    let got: Vec<&str> = got.iter().map(|h| h.trim()).collect();
    if got != want {
        return Err(parse_err(
            file,
            1,
            format!("expected header {}, got {}", want.join(","), got.join(",")),
        ));
    }
    Ok(())
}

pub const TRACKS_HEADER: [&str; 8] =
    ["flight_id", "callsign", "ac_type", "timestamp", "lat", "lon", "alt_ft", "gs_kt"];
pub const EVENTS_HEADER: [&str; 3] = ["flight_id", "timestamp", "event_type"];
pub const WEATHER_HEADER: [&str; 6] =
    ["hour_iso", "windspeed", "winddir", "cloudcover", "visibility", "humidity"];

pub fn read_tracks(
    path: &Path,
) -> Result<(Vec<TrackPoint>, BTreeMap<String, FlightMeta>), IngestError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    check_header(path, &mut reader, &TRACKS_HEADER)?;
    let mut points = Vec::new();
    let mut meta = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| io_err(path, e))?;
        let flight_id: String = field(path, line, &record, 0, "flight_id")?;
        let callsign: String = field(path, line, &record, 1, "callsign")?;
        let ac_type: String = field(path, line, &record, 2, "ac_type")?;
        let point = TrackPoint {
            flight_id: flight_id.clone(),
            timestamp: field(path, line, &record, 3, "timestamp")?,
            latitude: field(path, line, &record, 4, "lat")?,
            longitude: field(path, line, &record, 5, "lon")?,
            altitude_ft: field(path, line, &record, 6, "alt_ft")?,
            ground_speed_kt: field(path, line, &record, 7, "gs_kt")?,
        };
        if !point.timestamp.is_finite()
            || point.latitude.abs() > 90.0
            || point.longitude.abs() > 180.0
        {
            return Err(parse_err(path, line, "coordinate or timestamp out of range"));
        }
        points.push(point);
        meta.entry(flight_id).or_insert(FlightMeta { callsign, ac_type });
    }
    Ok((points, meta))
}

pub fn write_tracks(
    path: &Path,
    points: &[TrackPoint],
    meta: &BTreeMap<String, FlightMeta>,
) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    writer.write_record(TRACKS_HEADER).map_err(|e| io_err(path, e))?;
    let default_meta = FlightMeta { callsign: String::new(), ac_type: String::new() };
    for p in points {
        let m = meta.get(&p.flight_id).unwrap_or(&default_meta);
        writer
            .write_record([
                p.flight_id.as_str(),
                m.callsign.as_str(),
                m.ac_type.as_str(),
                &p.timestamp.to_string(),
                &p.latitude.to_string(),
                &p.longitude.to_string(),
                &p.altitude_ft.to_string(),
                &p.ground_speed_kt.to_string(),
            ])
            .map_err(|e| io_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

pub fn read_events(path: &Path) -> Result<Vec<FlightEvent>, IngestError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    check_header(path, &mut reader, &EVENTS_HEADER)?;
    let mut events = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| io_err(path, e))?;
        events.push(FlightEvent {
            flight_id: field(path, line, &record, 0, "flight_id")?,
            timestamp: field(path, line, &record, 1, "timestamp")?,
            event_type: EventType::parse(record.get(2).unwrap_or("")),
        });
    }
    Ok(events)
}

pub fn write_events(path: &Path, events: &[FlightEvent]) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    writer.write_record(EVENTS_HEADER).map_err(|e| io_err(path, e))?;
    for e in events {
        writer
            .write_record([
                e.flight_id.as_str(),
                &e.timestamp.to_string(),
                e.event_type.name(),
            ])
            .map_err(|err| io_err(path, err))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

fn hour_bucket_of_iso(path: &Path, line: usize, raw: &str) -> Result<i64, IngestError> {
    let raw = raw.trim();
    let naive = DateTime::parse_from_rfc3339(raw)
        .map(|dt| dt.naive_utc())
        .or_else(|_| NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S"))
        .map_err(|e| parse_err(path, line, format!("bad hour_iso {raw:?}: {e}")))?;
    let secs = naive.and_utc().timestamp();
    if secs % 3600 != 0 {
        return Err(parse_err(path, line, format!("hour_iso {raw:?} is not a whole hour")));
    }
    Ok(secs / 3600)
}

fn iso_of_hour_bucket(bucket: i64) -> String {
    let dt = DateTime::from_timestamp(bucket * 3600, 0).expect("bucket in range");
    dt.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

pub fn read_weather(path: &Path) -> Result<Vec<WeatherRecord>, IngestError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    check_header(path, &mut reader, &WEATHER_HEADER)?;
    let mut records = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| io_err(path, e))?;
        let rec = WeatherRecord {
            hour_bucket: hour_bucket_of_iso(path, line, record.get(0).unwrap_or(""))?,
            windspeed: field(path, line, &record, 1, "windspeed")?,
            winddir: field(path, line, &record, 2, "winddir")?,
            cloudcover: field(path, line, &record, 3, "cloudcover")?,
            visibility: field(path, line, &record, 4, "visibility")?,
            humidity: field(path, line, &record, 5, "humidity")?,
        };
        if !(0.0..360.0).contains(&rec.winddir) {
            return Err(parse_err(path, line, format!("winddir {} out of [0,360)", rec.winddir)));
        }
        records.push(rec);
    }
    Ok(records)
}

pub fn write_weather(path: &Path, records: &[WeatherRecord]) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    writer.write_record(WEATHER_HEADER).map_err(|e| io_err(path, e))?;
    for w in records {
        writer
            .write_record([
                iso_of_hour_bucket(w.hour_bucket).as_str(),
                &w.windspeed.to_string(),
                &w.winddir.to_string(),
                &w.cloudcover.to_string(),
                &w.visibility.to_string(),
                &w.humidity.to_string(),
            ])
            .map_err(|e| io_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

/// Feature table as stored in `features.csv`: the schema columns in order,
/// then `stage` and `label_duration_s` (empty when the flight never landed
/// inside the observation window).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub schema: FeatureSchema,
    pub rows: Vec<FeatureVector>,
    pub stages: Vec<Stage>,
    pub labels: Vec<Option<f64>>,
}

pub fn write_features(path: &Path, schema: &FeatureSchema, flights: &[Flight]) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut header: Vec<&str> = schema.columns.iter().map(|c| c.as_str()).collect();
    header.push("stage");
    header.push("label_duration_s");
    writer.write_record(&header).map_err(|e| io_err(path, e))?;
    for f in flights {
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        for (i, v) in f.features.values().iter().enumerate() {
            if i == crate::domain::AC_TYPE_INDEX {
                record.push(schema.ac_types[*v as usize].clone());
            } else {
                record.push(v.to_string());
            }
        }
        record.push(assign_stage(&f.features).to_string());
        record.push(f.observed_duration.map(|d| d.to_string()).unwrap_or_default());
        writer.write_record(&record).map_err(|e| io_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

pub fn read_features(path: &Path) -> Result<FeatureTable, IngestError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let want: Vec<String> = crate::domain::FEATURE_COLUMNS
        .iter()
        .map(|(n, _)| n.to_string())
        .chain(["stage".to_string(), "label_duration_s".to_string()])
        .collect();
    {
        let got = reader.headers().map_err(|e| io_err(path, e))?;
        let got: Vec<&str> = got.iter().map(|h| h.trim()).collect();
        if got != want.iter().map(|s| s.as_str()).collect::<Vec<_>>() {
            return Err(parse_err(path, 1, format!("expected header {}", want.join(","))));
        }
    }
    let records: Vec<csv::StringRecord> = reader
        .records()
        .collect::<Result<_, _>>()
        .map_err(|e| io_err(path, e))?;
    // acType is stored as the designator string; the dictionary is rebuilt
    // from the file so category indices are stable for a given file.
    let ac_types: Vec<String> = records
        .iter()
        .map(|r| r.get(0).unwrap_or("").trim().to_string())
        .collect();
    let schema = FeatureSchema::standard(ac_types);
    let n_cols = schema.n_columns();
    let mut rows = Vec::with_capacity(records.len());
    let mut stages = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    for (i, record) in records.iter().enumerate() {
        let line = i + 2;
        let mut values = Vec::with_capacity(n_cols);
        for c in 0..n_cols {
            if c == crate::domain::AC_TYPE_INDEX {
                let raw = record.get(c).unwrap_or("").trim();
                let idx = schema
                    .ac_type_index(raw)
                    .ok_or_else(|| IngestError::UnknownAcType(raw.to_string()))?;
                values.push(idx as f64);
            } else {
                values.push(field(path, line, record, c, &schema.columns[c])?);
            }
        }
        let stage_raw = record.get(n_cols).unwrap_or("");
        let stage = Stage::parse(stage_raw)
            .ok_or_else(|| parse_err(path, line, format!("bad stage {stage_raw:?}")))?;
        let label_raw = record.get(n_cols + 1).unwrap_or("").trim();
        let label = if label_raw.is_empty() {
            None
        } else {
            Some(field::<f64>(path, line, record, n_cols + 1, "label_duration_s")?)
        };
        rows.push(FeatureVector::from_values(&schema, values).expect("arity checked"));
        stages.push(stage);
        labels.push(label);
    }
    Ok(FeatureTable { schema, rows, stages, labels })
}

/// Traffic intensity knob for the scenario generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Congestion {
    Low,
    Medium,
    High,
}

impl Congestion {
    pub fn parse(s: &str) -> Option<Congestion> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" => Some(Congestion::Low),
            "medium" => Some(Congestion::Medium),
            "high" => Some(Congestion::High),
            _ => None,
        }
    }

    /// Mean gap between consecutive TMA entries, seconds.
    fn mean_entry_gap(self) -> f64 {
        match self {
            Congestion::Low => 300.0,
            Congestion::Medium => 120.0,
            Congestion::High => 40.0,
        }
    }

    /// Candidate looping-event rates per second for one 600 s block, with
    /// their selection weights. The three High regimes put roughly 3, 24 and
    /// 72 events into a 600 s look-back window, one per stage.
    fn loop_rate_menu(self) -> (&'static [f64], &'static [f64]) {
        match self {
            Congestion::Low => (&[0.004], &[1.0]),
            Congestion::Medium => (&[0.005, 0.04], &[0.5, 0.5]),
            Congestion::High => (&[0.005, 0.04, 0.12], &[0.3, 0.4, 0.3]),
        }
    }
}

/// Noise level per stage, seconds.
const STAGE_NOISE_SD: [f64; 3] = [25.0, 60.0, 110.0];

/// Log-scale shape of the skewed delay noise.
const NOISE_SHAPE: f64 = 0.8;

/// Ground truth the generator knows about one flight: the noiseless mean
/// duration and the noise level that was applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioTruth {
    pub mean_duration: f64,
    pub sigma: f64,
}

/// A full synthetic scenario: raw CSV-shaped artifacts plus the feature rows
/// derived from them with the same code path real ingestion uses.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub schema: FeatureSchema,
    /// Sorted by entry time; labels are set on every flight.
    pub flights: Vec<Flight>,
    /// Aligned with `flights`.
    pub truth: Vec<ScenarioTruth>,
    pub points: Vec<TrackPoint>,
    pub meta: BTreeMap<String, FlightMeta>,
    pub events: Vec<FlightEvent>,
    pub weather: Vec<WeatherRecord>,
}

const GENERATOR_AC_TYPES: [&str; 8] =
    ["A320", "A321", "B712", "B738", "B739", "CRJ9", "E75L", "MD88"];

/// Expected duration before noise: cruise time for the entry distance plus a
/// congestion delay that is piecewise linear in the looping-event count
/// (continuous at the stage boundaries), plus traffic and weather terms.
fn mean_duration(
    entry_distance_nm: f64,
    gs_kt: f64,
    loop_600: f64,
    ac_600_ahead: f64,
    windspeed: f64,
    visibility: f64,
) -> f64 {
    let base = entry_distance_nm / gs_kt * 3600.0;
    let congestion = if loop_600 <= 10.0 {
        4.0 * loop_600
    } else if loop_600 <= 40.0 {
        40.0 + 18.0 * (loop_600 - 10.0)
    } else {
        580.0 + 35.0 * (loop_600 - 40.0)
    };
    // Queue pressure bites harder the more saturated the terminal area is:
    // each aircraft immediately ahead costs more seconds in later stages.
    let ahead_cost = match stage_of_loop_count(loop_600) {
        Stage::I => 6.0,
        Stage::II => 12.0,
        Stage::III => 24.0,
    };
    base + congestion + ahead_cost * ac_600_ahead + 3.0 * windspeed + 8.0 * (10.0 - visibility)
}

/// Generate a deterministic synthetic arrival scenario.
///
/// Durations follow a documented generative model: cruise time from the entry
/// ring at the sampled ground speed, plus a delay that grows with the
/// looping-event count and the number of aircraft just ahead, plus weather
/// terms and stage-dependent Gaussian noise (floored at 200 s). Congestion
/// scales both the entry rate and the looping-event intensity, so High
/// scenarios populate all three stages.
pub fn generate_scenario(seed: u64, n_flights: usize, congestion: Congestion) -> Scenario {
    assert!(n_flights >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let airport = AIRPORT_REF;
    let radii = TmaRadii::default();

    let gap = Exp::new(1.0 / congestion.mean_entry_gap()).unwrap();
    let speed: Normal<f64> = Normal::new(250.0, 15.0).unwrap();
    let start = 4000.0;
    let mut entry_times = Vec::with_capacity(n_flights);
    let mut t = start;
    for _ in 0..n_flights {
        t += gap.sample(&mut rng);
        entry_times.push(t);
    }
    let horizon = entry_times.last().unwrap() + 3600.0;

    // Global safety-event stream in 600 s blocks. Each block draws a looping
    // intensity from the congestion menu; reroutes and go-arounds follow at
    // fixed fractions of it.
    let (rates, weights) = congestion.loop_rate_menu();
    let mut events = Vec::new();
    let n_blocks = (horizon / 600.0).ceil() as usize;
    let block_uniform = Uniform::new(0.0, 600.0).unwrap();
    for b in 0..n_blocks {
        let pick: f64 = rng.random();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut rate = rates[rates.len() - 1];
        for (r, w) in rates.iter().zip(weights) {
            acc += w / total;
            if pick < acc {
                rate = *r;
                break;
            }
        }
        for (ev, fraction) in
            [(EventType::Loop, 1.0), (EventType::Rrt, 0.3), (EventType::Goa, 0.1)]
        {
            let lambda = rate * fraction * 600.0;
            let count = Poisson::new(lambda).unwrap().sample(&mut rng) as usize;
            for _ in 0..count {
                events.push(FlightEvent {
                    flight_id: format!("f{:04}", rng.random_range(0..n_flights)),
                    timestamp: b as f64 * 600.0 + block_uniform.sample(&mut rng),
                    event_type: ev,
                });
            }
        }
    }
    events.sort_by(|a, b| {
        a.timestamp
            .partial_cmp(&b.timestamp)
            .unwrap()
            .then_with(|| a.flight_id.cmp(&b.flight_id))
    });

    // Hourly weather covering the scenario.
    let mut weather = Vec::new();
    let last_bucket = hour_bucket(horizon + mean_duration(radii.entry_nm, 180.0, 200.0, 20.0, 30.0, 2.0));
    for bucket in 0..=last_bucket {
        weather.push(WeatherRecord {
            hour_bucket: bucket,
            windspeed: rng.random_range(0.0..30.0),
            winddir: rng.random_range(0.0..360.0),
            cloudcover: rng.random_range(0.0..100.0),
            visibility: rng.random_range(2.0..10.0),
            humidity: rng.random_range(20.0..100.0),
        });
    }
    let weather_map: BTreeMap<i64, WeatherRecord> =
        weather.iter().map(|w| (w.hour_bucket, w.clone())).collect();

    let fleet_entries: Vec<(String, f64)> = entry_times
        .iter()
        .enumerate()
        .map(|(i, &ts)| (format!("f{i:04}"), ts))
        .collect();

    let mut points = Vec::new();
    let mut meta = BTreeMap::new();
    let mut truth_by_id: BTreeMap<String, ScenarioTruth> = BTreeMap::new();
    for (i, &entry_time) in entry_times.iter().enumerate() {
        let id = format!("f{i:04}");
        let ac_type = GENERATOR_AC_TYPES[rng.random_range(0..GENERATOR_AC_TYPES.len())];
        let gs: f64 = speed.sample(&mut rng).clamp(210.0, 290.0);
        let bearing: f64 = rng.random_range(0.0..std::f64::consts::TAU);

        let loop_600 =
            count_events(&events, entry_time, 600.0, Direction::Ahead, EventType::Loop) as f64;
        let ac_600 = count_aircraft(&fleet_entries, &id, entry_time, 600.0, Direction::Ahead) as f64;
        let wx = &weather_map[&hour_bucket(entry_time)];

        let entry_distance = radii.entry_nm - 0.05;
        let mean =
            mean_duration(entry_distance, gs, loop_600, ac_600, wx.windspeed, wx.visibility);
        let stage = stage_of_loop_count(loop_600);
        let sigma = STAGE_NOISE_SD[stage.index()];
        // Right-skewed delay noise (centered lognormal): median 0, standard
        // deviation `sigma`. Arrival delays pile up on the late side.
        let s2 = NOISE_SHAPE * NOISE_SHAPE;
        let unit_sd = (s2.exp_m1() * s2.exp()).sqrt();
        let z: f64 = Normal::new(0.0, 1.0).unwrap().sample(&mut rng);
        let noise = sigma / unit_sd * ((NOISE_SHAPE * z).exp() - 1.0);
        let duration = (mean + noise).max(200.0);

        let mut push = |ts: f64, dist_nm: f64, alt_ft: f64| {
            let (lat, lon) = offset_point(airport, dist_nm, bearing);
            points.push(TrackPoint {
                flight_id: id.clone(),
                timestamp: ts,
                latitude: lat,
                longitude: lon,
                altitude_ft: alt_ft,
                ground_speed_kt: gs,
            });
        };
        push(entry_time - 8.0 / gs * 3600.0, 108.0, 32000.0);
        push(entry_time, entry_distance, 30000.0);
        push(entry_time + duration / 2.0, 50.0, 15000.0);
        push(entry_time + duration, 0.5, 0.0);

        meta.insert(
            id.clone(),
            FlightMeta { callsign: format!("SYN{:03}", i + 1), ac_type: ac_type.to_string() },
        );
        truth_by_id.insert(id, ScenarioTruth { mean_duration: mean, sigma });
    }

    let report = build_dataset(&points, &meta, &events, &weather, airport, &radii)
        .expect("generated inputs are well formed");
    assert!(report.rejects.is_empty(), "generator produced a reject: {:?}", report.rejects);
    let truth = report.flights.iter().map(|f| truth_by_id[&f.id]).collect();
    Scenario {
        schema: report.schema,
        flights: report.flights,
        truth,
        points,
        meta,
        events,
        weather,
    }
}

/// Point at `dist_nm` from `origin` along `bearing` (radians, clockwise from
/// north) on the sphere used by `haversine_nm`.
fn offset_point(origin: (f64, f64), dist_nm: f64, bearing: f64) -> (f64, f64) {
    let d = dist_nm / EARTH_RADIUS_NM;
    let lat1 = origin.0.to_radians();
    let lon1 = origin.1.to_radians();
    let lat2 = (lat1.sin() * d.cos() + lat1.cos() * d.sin() * bearing.cos()).asin();
    let lon2 = lon1
        + (bearing.sin() * d.sin() * lat1.cos()).atan2(d.cos() - lat1.sin() * lat2.sin());
    (lat2.to_degrees(), lon2.to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haversine_reference_points() {
        let a = (33.6367, -84.4281);
        assert_eq!(haversine_nm(a, a), 0.0);
        // Antipodal half circumference.
        let half = haversine_nm((0.0, 0.0), (0.0, 180.0));
        assert!((half - std::f64::consts::PI * EARTH_RADIUS_NM).abs() < 1e-6, "{half}");
        // One degree of longitude at this latitude, checked against a
        // spherical law-of-cosines calculation.
        let d = haversine_nm(a, (33.6367, -83.4281));
        assert!((d - 49.98748774150038).abs() < 1e-6, "{d}");
        // Symmetry.
        let b = (40.0, -74.0);
        assert_eq!(haversine_nm(a, b), haversine_nm(b, a));
    }

    #[test]
    fn offset_point_round_trip() {
        for (dist, bearing) in [(0.5, 0.3), (50.0, 2.0), (99.95, 4.5), (108.0, 6.0)] {
            let p = offset_point(AIRPORT_REF, dist, bearing);
            let back = haversine_nm(AIRPORT_REF, p);
            assert!((back - dist).abs() < 1e-6, "dist {dist} back {back}");
        }
    }

    fn ev(ts: f64) -> FlightEvent {
        FlightEvent { flight_id: "x".into(), timestamp: ts, event_type: EventType::Loop }
    }

    #[test]
    fn event_window_semantics() {
        let events = vec![ev(700.0), ev(900.0)];
        assert_eq!(count_events(&events, 1000.0, 600.0, Direction::Ahead, EventType::Loop), 2);
        assert_eq!(count_events(&[], 1000.0, 600.0, Direction::Ahead, EventType::Loop), 0);
        // Behind is closed on both ends: 1000 and 1599 count, 400 does not.
        let events = vec![ev(400.0), ev(1000.0), ev(1599.0)];
        assert_eq!(count_events(&events, 1000.0, 600.0, Direction::Behind, EventType::Loop), 2);
        // An event exactly at t0 counts once across the two directions.
        let events = vec![ev(1000.0)];
        let ahead = count_events(&events, 1000.0, 600.0, Direction::Ahead, EventType::Loop);
        let behind = count_events(&events, 1000.0, 600.0, Direction::Behind, EventType::Loop);
        assert_eq!(ahead + behind, 1);
        // Type filter.
        assert_eq!(count_events(&events, 1000.0, 600.0, Direction::Behind, EventType::Goa), 0);
    }

    #[test]
    fn aircraft_window_semantics() {
        let entries = vec![("self".to_string(), 1000.0)];
        assert_eq!(count_aircraft(&entries, "self", 1000.0, 600.0, Direction::Ahead), 0);
        assert_eq!(count_aircraft(&entries, "self", 1000.0, 600.0, Direction::Behind), 0);
        let entries = vec![("a".to_string(), 900.0), ("b".to_string(), 300.0)];
        assert_eq!(count_aircraft(&entries, "self", 1000.0, 600.0, Direction::Ahead), 1);
        let entries = vec![("a".to_string(), 1001.0), ("b".to_string(), 4600.0)];
        assert_eq!(count_aircraft(&entries, "self", 1000.0, 3600.0, Direction::Behind), 2);
    }

    #[test]
    fn hour_rounding() {
        // 13:29 rounds down, 13:31 rounds up, 13:30 ties up.
        assert_eq!(hour_bucket(13.0 * 3600.0 + 29.0 * 60.0), 13);
        assert_eq!(hour_bucket(13.0 * 3600.0 + 31.0 * 60.0), 14);
        assert_eq!(hour_bucket(13.0 * 3600.0 + 30.0 * 60.0), 14);
    }

    #[test]
    fn stage_boundaries() {
        assert_eq!(stage_of_loop_count(0.0), Stage::I);
        assert_eq!(stage_of_loop_count(10.0), Stage::I);
        assert_eq!(stage_of_loop_count(10.5), Stage::II);
        assert_eq!(stage_of_loop_count(11.0), Stage::II);
        assert_eq!(stage_of_loop_count(40.0), Stage::II);
        assert_eq!(stage_of_loop_count(41.0), Stage::III);
    }

    #[test]
    fn generator_low_congestion_is_stage_one() {
        let s = generate_scenario(1, 9, Congestion::Low);
        assert_eq!(s.flights.len(), 9);
        for f in &s.flights {
            assert_eq!(assign_stage(&f.features), Stage::I, "{}", f.id);
            let d = f.observed_duration.unwrap();
            assert!(d > 0.0);
        }
    }

    #[test]
    fn generator_deterministic() {
        let a = generate_scenario(7, 20, Congestion::Medium);
        let b = generate_scenario(7, 20, Congestion::Medium);
        assert_eq!(a.flights, b.flights);
        assert_eq!(a.events, b.events);
        assert_eq!(a.weather, b.weather);
    }

    #[test]
    fn generator_high_congestion_covers_all_stages() {
        let s = generate_scenario(2, 100, Congestion::High);
        let mut counts = [0usize; 3];
        for f in &s.flights {
            counts[assign_stage(&f.features).index()] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0), "{counts:?}");
    }

    #[test]
    fn generator_label_matches_track() {
        let s = generate_scenario(3, 5, Congestion::Low);
        for f in &s.flights {
            let track: Vec<&TrackPoint> =
                s.points.iter().filter(|p| p.flight_id == f.id).collect();
            let last = track.last().unwrap();
            assert!((f.entry_time + f.observed_duration.unwrap() - last.timestamp).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_round_trip_reproduces_features() {
        let dir = std::env::temp_dir().join(format!("ingest_rt_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let s = generate_scenario(11, 12, Congestion::Medium);
        let tracks_path = dir.join("tracks.csv");
        let events_path = dir.join("events.csv");
        let weather_path = dir.join("weather.csv");
        write_tracks(&tracks_path, &s.points, &s.meta).unwrap();
        write_events(&events_path, &s.events).unwrap();
        write_weather(&weather_path, &s.weather).unwrap();

        let (points, meta) = read_tracks(&tracks_path).unwrap();
        let events = read_events(&events_path).unwrap();
        let weather = read_weather(&weather_path).unwrap();
        assert_eq!(points, s.points);
        assert_eq!(events, s.events);
        assert_eq!(weather, s.weather);

        let report =
            build_dataset(&points, &meta, &events, &weather, AIRPORT_REF, &TmaRadii::default())
                .unwrap();
        assert!(report.rejects.is_empty());
        assert_eq!(report.flights, s.flights);

        let features_path = dir.join("features.csv");
        write_features(&features_path, &report.schema, &report.flights).unwrap();
        let table = read_features(&features_path).unwrap();
        assert_eq!(table.rows.len(), s.flights.len());
        for (row, f) in table.rows.iter().zip(&s.flights) {
            assert_eq!(row, &f.features);
        }
        for (label, f) in table.labels.iter().zip(&s.flights) {
            assert_eq!(*label, f.observed_duration);
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn missing_inputs_are_rejected_per_flight() {
        let s = generate_scenario(5, 3, Congestion::Low);
        // Drop all weather: every flight is rejected with MissingWeather.
        let report =
            build_dataset(&s.points, &s.meta, &s.events, &[], AIRPORT_REF, &TmaRadii::default())
                .unwrap();
        assert!(report.flights.is_empty());
        assert_eq!(report.rejects.len(), 3);
        assert!(matches!(report.rejects[0].1, IngestError::MissingWeather { .. }));

        // A flight that never enters the TMA is rejected without affecting
        // the others.
        let mut points = s.points.clone();
        let mut meta = s.meta.clone();
        points.push(TrackPoint {
            flight_id: "ghost".into(),
            timestamp: 5000.0,
            latitude: 45.0,
            longitude: -100.0,
            altitude_ft: 35000.0,
            ground_speed_kt: 420.0,
        });
        meta.insert(
            "ghost".into(),
            FlightMeta { callsign: "GHO1".into(), ac_type: "B738".into() },
        );
        let report =
            build_dataset(&points, &meta, &s.events, &s.weather, AIRPORT_REF, &TmaRadii::default())
                .unwrap();
        assert_eq!(report.flights.len(), 3);
        assert_eq!(report.rejects.len(), 1);
        assert!(matches!(
            report.rejects[0].1,
            IngestError::MissingBoundaryCrossing(_)
        ));
    }

    #[test]
    fn invalid_radii_rejected() {
        let radii = TmaRadii { outer_nm: 100.0, entry_nm: 100.0, inner_nm: 40.0 };
        assert!(radii.validate().is_err());
        assert!(TmaRadii::default().validate().is_ok());
    }
}
