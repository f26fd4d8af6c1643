//! File input and output: networks, patterns, marks, trip logs and results.
//!
//! Text outputs render floats as `{:.16e}` (17 significant digits, lossless
//! round trip), use LF line endings and a fixed column order, so equal inputs
//! give byte-identical files.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime};
use serde::Serialize;

use crate::envel::{EnvelopeResult, SurfaceEnvelopeResult};
use crate::error::{Error, Result};
use crate::estim::{SummaryCurve, SummarySurface};
use crate::marks::{FunctionalMark, MarkedPattern, TimeGrid};
use crate::netgeom::Coord;
use crate::netgeom::{build_network, LinearNetwork, NetworkPoint, RawSegment};

/// Default maximum distance between a station and the network.
pub const DEFAULT_STATION_SNAP_LIMIT: f64 = 250.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkFormat {
    Csv,
    GeoJson,
}

impl NetworkFormat {
    /// Guess from the file extension; anything but `.geojson`/`.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("geojson") | Some("json") => Self::GeoJson,
            _ => Self::Csv,
        }
    }
}

impl FromStr for NetworkFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "geojson" => Ok(Self::GeoJson),
            _ => Err(Error::InvalidArgument(format!("unknown network format '{s}'; expected csv or geojson"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }

    /// JSON for `.json` paths, CSV otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Self::Json,
            _ => Self::Csv,
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::InvalidArgument(format!("unknown output format '{s}'; expected csv or json"))),
        }
    }
}

/// Float rendering used by every text export.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn source_name(path: &Path) -> String {
    path.display().to_string()
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(r)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn csv_err(source: &str, record: usize, e: csv::Error) -> Error {
    Error::parse(source, record, e)
}

/// Header positions of the named columns; the first alias found wins.
fn columns(source: &str, headers: &csv::StringRecord, wanted: &[&[&str]]) -> Result<Vec<usize>> {
    wanted
        .iter()
        .map(|aliases| {
            headers
                .iter()
                .position(|h| aliases.iter().any(|a| h.eq_ignore_ascii_case(a)))
                .ok_or_else(|| Error::parse(source, 0, format!("missing column '{}'", aliases[0])))
        })
        .collect()
}

fn field<T: FromStr>(source: &str, record: usize, rec: &csv::StringRecord, col: usize, name: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(col).unwrap_or("");
    raw.parse().map_err(|e| Error::parse(source, record, format!("column {name}: cannot parse '{raw}': {e}")))
}

fn finite(source: &str, record: usize, v: f64, name: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::parse(source, record, format!("column {name}: value {v} is not finite")))
    }
}

// ---------------------------------------------------------------------------
// networks

/// Segments from a `seg_id,x1,y1,x2,y2` CSV. Records are numbered from 1
/// after the header.
pub fn parse_network_csv<R: Read>(reader: R, source: &str) -> Result<Vec<RawSegment>> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err(source, 0, e))?.clone();
    let cols = columns(source, &headers, &[&["seg_id"], &["x1"], &["y1"], &["x2"], &["y2"]])?;
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let record = k + 1;
        let rec = rec.map_err(|e| csv_err(source, record, e))?;
        let id: u64 = field(source, record, &rec, cols[0], "seg_id")?;
        let mut xy = [0.0; 4];
        for (slot, (c, name)) in xy.iter_mut().zip(cols[1..].iter().zip(["x1", "y1", "x2", "y2"])) {
            *slot = finite(source, record, field(source, record, &rec, *c, name)?, name)?;
        }
        out.push(RawSegment::new(id, [xy[0], xy[1]], [xy[2], xy[3]]));
    }
    Ok(out)
}

/// Segments from GeoJSON `LineString`/`MultiLineString` geometries, each
/// polyline decomposed into consecutive segments numbered from 0 in file
/// order. Repeated consecutive vertices are dropped; other geometry types
/// are skipped.
pub fn parse_network_geojson(text: &str, source: &str) -> Result<Vec<RawSegment>> {
    use geojson::{GeoJson, Value};

    let gj: GeoJson = text.parse().map_err(|e| Error::parse(source, 0, e))?;
    let geometries: Vec<Option<geojson::Geometry>> = match gj {
        GeoJson::FeatureCollection(fc) => fc.features.into_iter().map(|f| f.geometry).collect(),
        GeoJson::Feature(f) => vec![f.geometry],
        GeoJson::Geometry(g) => vec![Some(g)],
    };

    fn position(source: &str, feature: usize, p: &[f64]) -> Result<Coord> {
        match p {
            [x, y, ..] if x.is_finite() && y.is_finite() => Ok([*x, *y]),
            _ => Err(Error::parse(source, feature, format!("invalid position {p:?}"))),
        }
    }

    let mut out = Vec::new();
    let mut skipped = 0usize;
    for (feature, geom) in geometries.into_iter().enumerate() {
        let lines = match geom.map(|g| g.value) {
            Some(Value::LineString(l)) => vec![l],
            Some(Value::MultiLineString(ls)) => ls,
            _ => {
                skipped += 1;
                continue;
            }
        };
        for line in lines {
            let mut pts: Vec<Coord> = Vec::with_capacity(line.len());
            for p in &line {
                let c = position(source, feature, p)?;
                if pts.last() != Some(&c) {
                    pts.push(c);
                }
            }
            if pts.len() < 2 {
                return Err(Error::parse(source, feature, "line string has fewer than 2 distinct vertices"));
            }
            for w in pts.windows(2) {
                out.push(RawSegment::new(out.len() as u64, w[0], w[1]));
            }
        }
    }
    if skipped > 0 {
        log::warn!("{source}: skipped {skipped} non-line features");
    }
    Ok(out)
}

pub fn read_network_segments(path: &Path, format: NetworkFormat) -> Result<Vec<RawSegment>> {
    let source = source_name(path);
    match format {
        NetworkFormat::Csv => parse_network_csv(fs::File::open(path)?, &source),
        NetworkFormat::GeoJson => parse_network_geojson(&fs::read_to_string(path)?, &source),
    }
}

/// Read and build a network, logging its size.
pub fn load_network(path: &Path, format: NetworkFormat, snap_tol: f64) -> Result<LinearNetwork> {
    let net = build_network(&read_network_segments(path, format)?, snap_tol)?;
    log::info!(
        "{}: {} nodes, {} segments, {} components, total length {:.1}",
        path.display(),
        net.nodes().len(),
        net.segments().len(),
        net.n_components(),
        net.total_length()
    );
    Ok(net)
}

/// `seg_id,x1,y1,x2,y2` rendering of a network's segments.
pub fn render_network_csv(net: &LinearNetwork) -> Result<String> {
    let mut w = csv_writer();
    w.write_record(["seg_id", "x1", "y1", "x2", "y2"]).map_err(csv_io)?;
    for s in net.segments() {
        w.write_record([s.id.to_string(), fmt_f64(s.u[0]), fmt_f64(s.u[1]), fmt_f64(s.v[0]), fmt_f64(s.v[1])])
            .map_err(csv_io)?;
    }
    finish(w)
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

// ---------------------------------------------------------------------------
// patterns and marks

/// Points read from a pattern file, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternInput {
    pub ids: Vec<String>,
    pub points: Vec<NetworkPoint>,
    /// Distance moved by snapping; `None` when the file gave network positions.
    pub snap_distances: Option<Vec<f64>>,
}

/// Points from `point_id,seg_id,offset` or `point_id,x,y` (snapped to the
/// nearest segment).
pub fn parse_pattern_csv<R: Read>(reader: R, source: &str, net: &LinearNetwork) -> Result<PatternInput> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err(source, 0, e))?.clone();
    let on_network = headers.iter().any(|h| h == "seg_id");
    let cols = if on_network {
        columns(source, &headers, &[&["point_id"], &["seg_id"], &["offset"]])?
    } else {
        columns(source, &headers, &[&["point_id"], &["x"], &["y"]])?
    };
    let mut input = PatternInput { ids: Vec::new(), points: Vec::new(), snap_distances: (!on_network).then(Vec::new) };
    for (k, rec) in rdr.records().enumerate() {
        let record = k + 1;
        let rec = rec.map_err(|e| csv_err(source, record, e))?;
        input.ids.push(rec.get(cols[0]).unwrap_or("").to_string());
        if on_network {
            let seg_id: u64 = field(source, record, &rec, cols[1], "seg_id")?;
            let segment = net
                .segment_index(seg_id)
                .ok_or_else(|| Error::parse(source, record, format!("unknown segment {seg_id}")))?;
            let offset = field(source, record, &rec, cols[2], "offset")?;
            let p = NetworkPoint::new(segment, offset);
            net.validate_point(&p).map_err(|e| Error::parse(source, record, e))?;
            input.points.push(p);
        } else {
            let x = finite(source, record, field(source, record, &rec, cols[1], "x")?, "x")?;
            let y = finite(source, record, field(source, record, &rec, cols[2], "y")?, "y")?;
            let (p, d) = net.snap([x, y]);
            input.points.push(p);
            input.snap_distances.as_mut().expect("snap mode").push(d);
        }
    }
    Ok(input)
}

pub fn read_pattern(path: &Path, net: &LinearNetwork) -> Result<PatternInput> {
    parse_pattern_csv(fs::File::open(path)?, &source_name(path), net)
}

/// `point_id,seg_id,offset` rendering.
pub fn render_pattern_csv(ids: &[String], points: &[NetworkPoint], net: &LinearNetwork) -> Result<String> {
    let mut w = csv_writer();
    w.write_record(["point_id", "seg_id", "offset"]).map_err(csv_io)?;
    for (id, p) in ids.iter().zip(points) {
        let seg = net
            .segment(p.segment)
            .ok_or_else(|| Error::InvalidPoint(format!("segment index {} out of range", p.segment)))?;
        w.write_record([id.clone(), seg.id.to_string(), fmt_f64(p.offset)]).map_err(csv_io)?;
    }
    finish(w)
}

/// Marks read from a marks file, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct MarksInput {
    pub ids: Vec<String>,
    pub grid: TimeGrid,
    pub marks: Vec<FunctionalMark>,
}

/// Marks from `point_id,t_1,...,t_T`. A header `t_<number>` sets that
/// timestamp; otherwise timestamps are the column positions `1..=T`.
pub fn parse_marks_csv<R: Read>(reader: R, source: &str) -> Result<MarksInput> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err(source, 0, e))?.clone();
    if headers.get(0) != Some("point_id") || headers.len() < 2 {
        return Err(Error::parse(source, 0, "expected header point_id,t_1,...,t_T"));
    }
    let names: Vec<&str> = headers.iter().skip(1).collect();
    let parsed: Option<Vec<f64>> = names.iter().map(|h| h.strip_prefix("t_").and_then(|v| v.parse().ok())).collect();
    let grid = match parsed {
        Some(ts) => TimeGrid::new(ts).map_err(|e| Error::parse(source, 0, e))?,
        None => TimeGrid::unit(names.len())?,
    };
    let mut input = MarksInput { ids: Vec::new(), grid, marks: Vec::new() };
    for (k, rec) in rdr.records().enumerate() {
        let record = k + 1;
        let rec = rec.map_err(|e| csv_err(source, record, e))?;
        input.ids.push(rec.get(0).unwrap_or("").to_string());
        let values = (1..rec.len())
            .map(|c| finite(source, record, field(source, record, &rec, c, names[c - 1])?, names[c - 1]))
            .collect::<Result<Vec<f64>>>()?;
        input.marks.push(FunctionalMark(values));
    }
    Ok(input)
}

pub fn read_marks(path: &Path) -> Result<MarksInput> {
    parse_marks_csv(fs::File::open(path)?, &source_name(path))
}

/// `point_id,t_<t1>,...` rendering; timestamps use the shortest exact form.
pub fn render_marks_csv(ids: &[String], grid: &TimeGrid, marks: &[FunctionalMark]) -> Result<String> {
    let mut w = csv_writer();
    let mut header = vec!["point_id".to_string()];
    header.extend(grid.values().iter().map(|t| format!("t_{t}")));
    w.write_record(&header).map_err(csv_io)?;
    for (id, m) in ids.iter().zip(marks) {
        let mut row = vec![id.clone()];
        row.extend(m.values().iter().map(|&v| fmt_f64(v)));
        w.write_record(&row).map_err(csv_io)?;
    }
    finish(w)
}

/// Join points and marks by `point_id` into a pattern, in pattern order.
pub fn assemble_pattern(net: Arc<LinearNetwork>, pattern: &PatternInput, marks: &MarksInput) -> Result<MarkedPattern> {
    let mut by_id: HashMap<&str, usize> = HashMap::with_capacity(marks.ids.len());
    for (k, id) in marks.ids.iter().enumerate() {
        if by_id.insert(id.as_str(), k).is_some() {
            return Err(Error::GridMismatch(format!("duplicate point_id '{id}' in marks")));
        }
    }
    if marks.ids.len() != pattern.ids.len() {
        return Err(Error::GridMismatch(format!("{} points but {} mark rows", pattern.ids.len(), marks.ids.len())));
    }
    let ordered = pattern
        .ids
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .map(|&k| marks.marks[k].clone())
                .ok_or_else(|| Error::GridMismatch(format!("point '{id}' has no marks")))
        })
        .collect::<Result<Vec<_>>>()?;
    MarkedPattern::new(net, pattern.points.clone(), ordered, marks.grid.clone())
}

// ---------------------------------------------------------------------------
// trips

#[derive(Debug, Clone, PartialEq)]
pub struct TripRecord {
    pub station_id: String,
    pub departure_time: NaiveDateTime,
    pub distance: f64,
}

/// Parse an ISO-8601 timestamp. Offsets are accepted and ignored: the wall
/// clock time as written decides the calendar day.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_local());
    }
    for f in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, f) {
            return Some(dt);
        }
    }
    for f in ["%Y-%m-%dT%H:%M:%S%.f%:z", "%Y-%m-%d %H:%M:%S%.f%:z", "%Y-%m-%d %H:%M:%S%.f%#z"] {
        if let Ok(dt) = DateTime::parse_from_str(s, f) {
            return Some(dt.naive_local());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().and_then(|d| d.and_hms_opt(0, 0, 0))
}

/// Trips from `station_id,departure_time,distance_m`. The Mobi export
/// headers `Departure station`, `Departure` and `Covered distance (m)` are
/// accepted as aliases. With `skip_invalid`, unparseable rows are counted
/// and dropped instead of failing the load.
pub fn parse_trips_csv<R: Read>(reader: R, source: &str, skip_invalid: bool) -> Result<(Vec<TripRecord>, usize)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err(source, 0, e))?.clone();
    let cols = columns(
        source,
        &headers,
        &[
            &["station_id", "departure station"],
            &["departure_time", "departure"],
            &["distance_m", "covered distance (m)"],
        ],
    )?;
    let mut trips = Vec::new();
    let mut skipped = 0;
    for (k, rec) in rdr.records().enumerate() {
        let record = k + 1;
        let row = rec.map_err(|e| csv_err(source, record, e)).and_then(|rec| {
            let station_id = rec.get(cols[0]).unwrap_or("").to_string();
            if station_id.is_empty() {
                return Err(Error::parse(source, record, "empty station_id"));
            }
            let raw_time = rec.get(cols[1]).unwrap_or("");
            let departure_time = parse_timestamp(raw_time)
                .ok_or_else(|| Error::parse(source, record, format!("cannot parse timestamp '{raw_time}'")))?;
            let distance: f64 = field(source, record, &rec, cols[2], "distance_m")?;
            if !(distance >= 0.0 && distance.is_finite()) {
                return Err(Error::parse(source, record, format!("invalid distance {distance}")));
            }
            Ok(TripRecord { station_id, departure_time, distance })
        });
        match row {
            Ok(t) => trips.push(t),
            Err(_) if skip_invalid => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((trips, skipped))
}

pub fn read_trips(path: &Path, skip_invalid: bool) -> Result<(Vec<TripRecord>, usize)> {
    parse_trips_csv(fs::File::open(path)?, &source_name(path), skip_invalid)
}

/// A calendar month `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Month {
    pub year: i32,
    pub month: u32,
}

impl Month {
    pub fn days(self) -> u32 {
        let first = NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month");
        let next = if self.month == 12 {
            NaiveDate::from_ymd_opt(self.year + 1, 1, 1)
        } else {
            NaiveDate::from_ymd_opt(self.year, self.month + 1, 1)
        }
        .expect("valid month");
        (next - first).num_days() as u32
    }

    pub fn contains(self, t: &NaiveDateTime) -> bool {
        t.year() == self.year && t.month() == self.month
    }
}

impl FromStr for Month {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("month must be YYYY-MM, got '{s}'"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let month = Month { year: y.parse().map_err(|_| bad())?, month: m.parse().map_err(|_| bad())? };
        NaiveDate::from_ymd_opt(month.year, month.month, 1).ok_or_else(bad)?;
        Ok(month)
    }
}

impl std::fmt::Display for Month {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// One station's daily trip counts and mean distances; day `d` is index `d - 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationDays {
    pub station_id: String,
    pub counts: Vec<usize>,
    pub means: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonthTotals {
    pub n_stations: usize,
    pub n_trips: usize,
    pub mean_distance: f64,
}

/// Per-(station, day) average trip distance for one month. Stations with no
/// departures in the month are absent; stations are sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripAggregate {
    pub month: Month,
    pub stations: Vec<StationDays>,
    pub totals: MonthTotals,
}

pub fn aggregate_trips(trips: &[TripRecord], month: Month) -> Result<TripAggregate> {
    let days = month.days() as usize;
    let mut acc: BTreeMap<&str, (Vec<usize>, Vec<f64>)> = BTreeMap::new();
    let (mut n_trips, mut total) = (0usize, 0.0);
    for t in trips.iter().filter(|t| month.contains(&t.departure_time)) {
        let (counts, sums) = acc.entry(t.station_id.as_str()).or_insert_with(|| (vec![0; days], vec![0.0; days]));
        let d = t.departure_time.day0() as usize;
        counts[d] += 1;
        sums[d] += t.distance;
        n_trips += 1;
        total += t.distance;
    }
    if n_trips == 0 {
        return Err(Error::EmptyMonth(month.to_string()));
    }
    let stations: Vec<StationDays> = acc
        .into_iter()
        .map(|(id, (counts, sums))| StationDays {
            station_id: id.to_string(),
            means: counts.iter().zip(&sums).map(|(&c, &s)| if c > 0 { s / c as f64 } else { f64::NAN }).collect(),
            counts,
        })
        .collect();
    Ok(TripAggregate {
        month,
        totals: MonthTotals { n_stations: stations.len(), n_trips, mean_distance: total / n_trips as f64 },
        stations,
    })
}

/// Daily profiles on the day grid `1..=days`. Days without trips take the
/// station's month mean (trip-weighted) and are flagged in `filled`.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyProfiles {
    pub station_ids: Vec<String>,
    pub grid: TimeGrid,
    pub marks: Vec<FunctionalMark>,
    pub filled: Vec<Vec<bool>>,
}

pub fn daily_profiles(table: &TripAggregate) -> Result<DailyProfiles> {
    let grid = TimeGrid::unit(table.month.days() as usize)?;
    let mut out = DailyProfiles {
        station_ids: Vec::with_capacity(table.stations.len()),
        grid,
        marks: Vec::with_capacity(table.stations.len()),
        filled: Vec::with_capacity(table.stations.len()),
    };
    for s in &table.stations {
        let n: usize = s.counts.iter().sum();
        let month_mean =
            s.counts.iter().zip(&s.means).filter(|(&c, _)| c > 0).map(|(&c, &m)| c as f64 * m).sum::<f64>() / n as f64;
        let filled: Vec<bool> = s.counts.iter().map(|&c| c == 0).collect();
        let values = s.means.iter().zip(&filled).map(|(&m, &f)| if f { month_mean } else { m }).collect();
        out.station_ids.push(s.station_id.clone());
        out.marks.push(FunctionalMark(values));
        out.filled.push(filled);
    }
    Ok(out)
}

/// Station coordinates from `station_id,x,y`.
pub fn parse_station_coords<R: Read>(reader: R, source: &str) -> Result<BTreeMap<String, Coord>> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err(source, 0, e))?.clone();
    let cols = columns(source, &headers, &[&["station_id"], &["x"], &["y"]])?;
    let mut out = BTreeMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let record = k + 1;
        let rec = rec.map_err(|e| csv_err(source, record, e))?;
        let id = rec.get(cols[0]).unwrap_or("").to_string();
        let x = finite(source, record, field(source, record, &rec, cols[1], "x")?, "x")?;
        let y = finite(source, record, field(source, record, &rec, cols[2], "y")?, "y")?;
        if out.insert(id.clone(), [x, y]).is_some() {
            return Err(Error::parse(source, record, format!("duplicate station '{id}'")));
        }
    }
    Ok(out)
}

pub fn read_station_coords(path: &Path) -> Result<BTreeMap<String, Coord>> {
    parse_station_coords(fs::File::open(path)?, &source_name(path))
}

/// Monthly station profiles attached to network positions.
#[derive(Debug, Clone)]
pub struct StationProfiles {
    pub pattern: MarkedPattern,
    pub station_ids: Vec<String>,
    pub coords: Vec<Coord>,
    pub snap_distances: Vec<f64>,
    pub filled: Vec<Vec<bool>>,
    pub month: Month,
}

/// Snap every station with trips to its nearest network point and build
/// the pattern of daily profiles.
pub fn profiles_from_aggregate(
    table: &TripAggregate,
    net: Arc<LinearNetwork>,
    station_coords: &BTreeMap<String, Coord>,
    snap_limit: f64,
) -> Result<StationProfiles> {
    let profiles = daily_profiles(table)?;
    let mut points = Vec::with_capacity(profiles.station_ids.len());
    let mut coords = Vec::with_capacity(profiles.station_ids.len());
    let mut snap_distances = Vec::with_capacity(profiles.station_ids.len());
    for id in &profiles.station_ids {
        let c =
            *station_coords.get(id).ok_or_else(|| Error::InvalidPoint(format!("no coordinates for station '{id}'")))?;
        let (p, d) = net.snap(c);
        if d > snap_limit {
            return Err(Error::SnapTooFar { station: id.clone(), distance: d, limit: snap_limit });
        }
        points.push(p);
        coords.push(c);
        snap_distances.push(d);
    }
    let pattern = MarkedPattern::new(net, points, profiles.marks, profiles.grid)?;
    Ok(StationProfiles {
        pattern,
        station_ids: profiles.station_ids,
        coords,
        snap_distances,
        filled: profiles.filled,
        month: table.month,
    })
}

// ---------------------------------------------------------------------------
// result exports

#[derive(Serialize)]
struct CurveRow {
    r: f64,
    value: f64,
    masked: bool,
}

#[derive(Serialize)]
struct CurveJson<'a> {
    stat: &'a str,
    bandwidth: f64,
    rows: Vec<CurveRow>,
}

#[derive(Serialize)]
struct SurfaceRow {
    r: f64,
    t: f64,
    value: f64,
    masked: bool,
}

#[derive(Serialize)]
struct SurfaceJson<'a> {
    stat: &'a str,
    bandwidth: f64,
    rows: Vec<SurfaceRow>,
}

#[derive(Serialize)]
struct EnvelopeRow {
    r: f64,
    observed: f64,
    lower: f64,
    upper: f64,
    outside: bool,
}

#[derive(Serialize)]
struct EnvelopeJson<'a> {
    stat: &'a str,
    p_value: f64,
    n_perm: usize,
    alpha: f64,
    rows: Vec<EnvelopeRow>,
}

#[derive(Serialize)]
struct SurfaceEnvelopeRow {
    r: f64,
    t: f64,
    observed: f64,
    lower: f64,
    upper: f64,
    outside: bool,
}

#[derive(Serialize)]
struct SurfaceEnvelopeJson<'a> {
    stat: &'a str,
    p_value: f64,
    n_perm: usize,
    alpha: f64,
    rows: Vec<SurfaceEnvelopeRow>,
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serialises");
    s.push('\n');
    s
}

fn bool_str(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

/// Curve as `stat,r,value,masked` CSV or the equivalent JSON.
pub fn render_curve(c: &SummaryCurve, format: OutputFormat) -> String {
    let rows = c.rgrid.values().iter().zip(&c.values).enumerate();
    match format {
        OutputFormat::Csv => {
            let mut s = String::from("stat,r,value,masked\n");
            for (i, (&r, &v)) in rows {
                s += &format!("{},{},{},{}\n", c.stat, fmt_f64(r), fmt_f64(v), bool_str(c.is_masked(i)));
            }
            s
        }
        OutputFormat::Json => json(&CurveJson {
            stat: c.stat.name(),
            bandwidth: c.rgrid.bandwidth(),
            rows: rows.map(|(i, (&r, &value))| CurveRow { r, value, masked: c.is_masked(i) }).collect(),
        }),
    }
}

/// Surface as `stat,r,t,value,masked` CSV (r outer, t inner) or JSON.
pub fn render_surface(s: &SummarySurface, format: OutputFormat) -> String {
    let t_len = s.grid.len();
    let cells = (0..s.values.len()).map(|x| {
        let (i, k) = (x / t_len, x % t_len);
        (i, k, s.rgrid.values()[i], s.grid.values()[k], s.values[x], s.is_masked(i, k))
    });
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("stat,r,t,value,masked\n");
            for (_, _, r, t, v, m) in cells {
                out += &format!("{},{},{},{},{}\n", s.stat, fmt_f64(r), fmt_f64(t), fmt_f64(v), bool_str(m));
            }
            out
        }
        OutputFormat::Json => json(&SurfaceJson {
            stat: s.stat.name(),
            bandwidth: s.rgrid.bandwidth(),
            rows: cells.map(|(_, _, r, t, value, masked)| SurfaceRow { r, t, value, masked }).collect(),
        }),
    }
}

/// Envelope as a `# p_value=...` comment line followed by
/// `r,observed,lower,upper,outside` CSV, or JSON.
pub fn render_envelope(e: &EnvelopeResult, format: OutputFormat) -> String {
    let rows = (0..e.lower.len()).map(|i| EnvelopeRow {
        r: e.observed.rgrid.values()[i],
        observed: e.observed.values[i],
        lower: e.lower[i],
        upper: e.upper[i],
        outside: e.outside[i],
    });
    match format {
        OutputFormat::Csv => {
            let mut s = format!(
                "# p_value={}\n# stat={} n_perm={} alpha={}\nr,observed,lower,upper,outside\n",
                fmt_f64(e.p_value),
                e.observed.stat,
                e.n_perm,
                e.alpha
            );
            for row in rows {
                s += &format!(
                    "{},{},{},{},{}\n",
                    fmt_f64(row.r),
                    fmt_f64(row.observed),
                    fmt_f64(row.lower),
                    fmt_f64(row.upper),
                    bool_str(row.outside)
                );
            }
            s
        }
        OutputFormat::Json => json(&EnvelopeJson {
            stat: e.observed.stat.name(),
            p_value: e.p_value,
            n_perm: e.n_perm,
            alpha: e.alpha,
            rows: rows.collect(),
        }),
    }
}

/// Surface envelope with an extra `t` column.
pub fn render_surface_envelope(e: &SurfaceEnvelopeResult, format: OutputFormat) -> String {
    let t_len = e.observed.grid.len();
    let rows = (0..e.lower.len()).map(|x| SurfaceEnvelopeRow {
        r: e.observed.rgrid.values()[x / t_len],
        t: e.observed.grid.values()[x % t_len],
        observed: e.observed.values[x],
        lower: e.lower[x],
        upper: e.upper[x],
        outside: e.outside[x],
    });
    match format {
        OutputFormat::Csv => {
            let mut s = format!(
                "# p_value={}\n# stat={} n_perm={} alpha={}\nr,t,observed,lower,upper,outside\n",
                fmt_f64(e.p_value),
                e.observed.stat,
                e.n_perm,
                e.alpha
            );
            for row in rows {
                s += &format!(
                    "{},{},{},{},{},{}\n",
                    fmt_f64(row.r),
                    fmt_f64(row.t),
                    fmt_f64(row.observed),
                    fmt_f64(row.lower),
                    fmt_f64(row.upper),
                    bool_str(row.outside)
                );
            }
            s
        }
        OutputFormat::Json => json(&SurfaceEnvelopeJson {
            stat: e.observed.stat.name(),
            p_value: e.p_value,
            n_perm: e.n_perm,
            alpha: e.alpha,
            rows: rows.collect(),
        }),
    }
}

pub fn export_curve(c: &SummaryCurve, path: &Path, format: OutputFormat) -> Result<()> {
    Ok(fs::write(path, render_curve(c, format))?)
}

pub fn export_surface(s: &SummarySurface, path: &Path, format: OutputFormat) -> Result<()> {
    Ok(fs::write(path, render_surface(s, format))?)
}

pub fn export_envelope(e: &EnvelopeResult, path: &Path, format: OutputFormat) -> Result<()> {
    Ok(fs::write(path, render_envelope(e, format))?)
}
