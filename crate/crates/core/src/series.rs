//! Hourly series container, CSV ingestion and crowding thresholds.
//!
//! A [`TimeSeries`] holds one slot per hour starting at an hour-aligned UTC
//! timestamp. Missing hours are explicit `None` slots, never implicit jumps.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, FixedOffset, SecondsFormat, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on occupancy counts unless overridden.
pub const DEFAULT_OCCUPANCY_CEILING: u32 = 200;

/// Default crowding quantile (highest quartile).
pub const DEFAULT_QUANTILE: f64 = 0.75;

/// What a series counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Arrivals,
    Occupancy,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::Arrivals, Target::Occupancy];

    pub fn as_str(&self) -> &'static str {
        match self {
            Target::Arrivals => "arrivals",
            Target::Occupancy => "occupancy",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "arrivals" => Ok(Target::Arrivals),
            "occupancy" => Ok(Target::Occupancy),
            other => Err(Error::InvalidArgument(format!("unknown target `{other}`"))),
        }
    }
}

/// Returns true when `ts` has zero minutes, seconds and sub-seconds.
pub fn is_hour_aligned(ts: &DateTime<Utc>) -> bool {
    ts.minute() == 0 && ts.second() == 0 && ts.nanosecond() == 0
}

/// Hour of day on the local clock `utc_offset_hours` away from UTC.
pub fn local_hour(ts: &DateTime<Utc>, utc_offset_hours: i32) -> u32 {
    (ts.hour() as i32 + utc_offset_hours).rem_euclid(24) as u32
}

/// ISO-8601 rendering used by every file this crate writes.
pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, false)
}

/// Parses an ISO-8601 timestamp with an explicit offset and converts it to UTC.
pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>> {
    DateTime::<FixedOffset>::parse_from_rfc3339(s.trim())
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| Error::InvalidArgument(format!("bad timestamp `{}`: {e}", s.trim())))
}

pub(crate) fn hours_between(from: &DateTime<Utc>, to: &DateTime<Utc>) -> i64 {
    (*to - *from).num_hours()
}

/// Hourly observations of one target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeSeries {
    target: Target,
    start: DateTime<Utc>,
    values: Vec<Option<u32>>,
}

impl TimeSeries {
    /// Builds a series, checking occupancy against [`DEFAULT_OCCUPANCY_CEILING`].
    pub fn new(target: Target, start: DateTime<Utc>, values: Vec<Option<u32>>) -> Result<Self> {
        Self::with_ceiling(target, start, values, DEFAULT_OCCUPANCY_CEILING)
    }

    pub fn with_ceiling(
        target: Target,
        start: DateTime<Utc>,
        values: Vec<Option<u32>>,
        occupancy_ceiling: u32,
    ) -> Result<Self> {
        if !is_hour_aligned(&start) {
            return Err(Error::InvalidSeries(format!("start {} is not hour-aligned", format_timestamp(&start))));
        }
        if target == Target::Occupancy {
            if let Some((i, v)) =
                values.iter().enumerate().find_map(|(i, v)| v.filter(|v| *v > occupancy_ceiling).map(|v| (i, v)))
            {
                return Err(Error::InvalidSeries(format!(
                    "occupancy {v} at {} exceeds ceiling {occupancy_ceiling}",
                    format_timestamp(&(start + Duration::hours(i as i64)))
                )));
            }
        }
        Ok(Self { target, start, values })
    }

    pub fn target(&self) -> Target {
        self.target
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    /// Exclusive end: the first hour after the last slot.
    pub fn end(&self) -> DateTime<Utc> {
        self.start + Duration::hours(self.values.len() as i64)
    }

    pub fn values(&self) -> &[Option<u32>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + Duration::hours(index as i64)
    }

    /// Slot index for `ts`, if it falls inside the series.
    pub fn index_of(&self, ts: &DateTime<Utc>) -> Option<usize> {
        if !is_hour_aligned(ts) {
            return None;
        }
        let offset = hours_between(&self.start, ts);
        (offset >= 0 && (offset as usize) < self.values.len()).then_some(offset as usize)
    }

    /// Observed value at `ts`; `None` for gaps and out-of-range hours.
    pub fn get(&self, ts: &DateTime<Utc>) -> Option<u32> {
        self.index_of(ts).and_then(|i| self.values[i])
    }

    pub fn present(&self) -> impl Iterator<Item = u32> + '_ {
        self.values.iter().flatten().copied()
    }

    pub fn present_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn gap_count(&self) -> usize {
        self.values.len() - self.present_count()
    }

    /// Sub-series covering `[from, to)` clipped to this series.
    pub fn window(&self, from: &DateTime<Utc>, to: &DateTime<Utc>) -> TimeSeries {
        let lo = hours_between(&self.start, from).clamp(0, self.len() as i64) as usize;
        let hi = hours_between(&self.start, to).clamp(lo as i64, self.len() as i64) as usize;
        TimeSeries { target: self.target, start: self.timestamp(lo), values: self.values[lo..hi].to_vec() }
    }

    /// Returns a copy with the slot at `ts` replaced.
    pub fn with_value(&self, ts: &DateTime<Utc>, value: Option<u32>) -> Result<TimeSeries> {
        let i = self
            .index_of(ts)
            .ok_or_else(|| Error::InvalidArgument(format!("{} outside series", format_timestamp(ts))))?;
        let mut out = self.clone();
        out.values[i] = value;
        Ok(out)
    }

    /// Renders the `timestamp,value` CSV form. Gaps are written with an empty value.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.len() + 1));
        out.push_str("timestamp,value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format_timestamp(&self.timestamp(i)));
            out.push(',');
            if let Some(v) = v {
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Parses a `timestamp,value` CSV with the default occupancy ceiling.
pub fn parse_hourly_csv(text: &str, target: Target) -> Result<TimeSeries> {
    parse_hourly_csv_with(text, target, DEFAULT_OCCUPANCY_CEILING)
}

/// Parses a `timestamp,value` CSV. Hours missing between rows become gaps, as
/// do rows with an empty value field.
pub fn parse_hourly_csv_with(text: &str, target: Target, occupancy_ceiling: u32) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());

    let headers = reader.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "timestamp" || &headers[1] != "value" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header `timestamp,value`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut start: Option<DateTime<Utc>> = None;
    let mut values: Vec<Option<u32>> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record?;
        if record.len() != 2 {
            return Err(Error::Parse { line, msg: format!("expected 2 fields, found {}", record.len()) });
        }
        let ts = parse_timestamp(&record[0]).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        if !is_hour_aligned(&ts) {
            return Err(Error::Parse { line, msg: format!("timestamp {} is not hour-aligned", format_timestamp(&ts)) });
        }
        let value = match record[1].trim() {
            "" => None,
            raw => {
                let parsed: i64 =
                    raw.parse().map_err(|_| Error::Parse { line, msg: format!("value `{raw}` is not an integer") })?;
                if parsed < 0 {
                    return Err(Error::Parse { line, msg: format!("negative value {parsed}") });
                }
                let v = u32::try_from(parsed)
                    .map_err(|_| Error::Parse { line, msg: format!("value {parsed} out of range") })?;
                if target == Target::Occupancy && v > occupancy_ceiling {
                    return Err(Error::Parse {
                        line,
                        msg: format!("occupancy {v} exceeds ceiling {occupancy_ceiling}"),
                    });
                }
                Some(v)
            }
        };

        let start_ts = *start.get_or_insert(ts);
        let offset = hours_between(&start_ts, &ts);
        let next = values.len() as i64;
        if offset < next {
            let kind = if offset == next - 1 { "duplicate" } else { "out-of-order" };
            return Err(Error::Parse { line, msg: format!("{kind} timestamp {}", format_timestamp(&ts)) });
        }
        values.resize(offset as usize, None);
        values.push(value);
    }

    let start = start.ok_or_else(|| Error::EmptySeries("csv has no data rows".into()))?;
    TimeSeries::with_ceiling(target, start, values, occupancy_ceiling)
}

/// q-quantile of the present values, interpolated linearly at rank
/// `q * (n - 1)` over the sorted values and rounded half-up.
pub fn quartile_threshold(series: &TimeSeries, q: f64) -> Result<u32> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!("quantile {q} not in (0, 1)")));
    }
    let mut sorted: Vec<u32> = series.present().collect();
    if sorted.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "quantile needs at least 4 present values, found {}",
            sorted.len()
        )));
    }
    sorted.sort_unstable();
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    let value = sorted[lo] as f64 + frac * (sorted[hi] as f64 - sorted[lo] as f64);
    Ok((value + 0.5).floor() as u32)
}

/// How the crowding threshold is chosen relative to the evaluated period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdWindow {
    /// Over the whole evaluated period.
    #[default]
    Full,
    /// Over the history preceding the first forecast origin.
    Trailing,
}

impl FromStr for ThresholdWindow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(Self::Full),
            "trailing" => Ok(Self::Trailing),
            other => Err(Error::InvalidArgument(format!("unknown threshold window `{other}`"))),
        }
    }
}

/// Occupancy level at or above which the ED counts as crowded.
#[derive(Debug, Clone, PartialEq)]
pub struct CrowdingConfig {
    pub threshold: u32,
    pub quantile: f64,
    /// `[start, end)` the threshold was estimated on.
    pub estimation_window: (DateTime<Utc>, DateTime<Utc>),
}

impl CrowdingConfig {
    /// Estimates the threshold on `series` restricted to `[from, to)`.
    pub fn estimate(series: &TimeSeries, quantile: f64, from: DateTime<Utc>, to: DateTime<Utc>) -> Result<Self> {
        let window = series.window(&from, &to);
        let threshold = quartile_threshold(&window, quantile)?;
        Ok(Self { threshold, quantile, estimation_window: (window.start(), window.end()) })
    }

    /// Fixed threshold with no estimation provenance, mostly for tests.
    pub fn fixed(threshold: u32) -> Self {
        let epoch = DateTime::<Utc>::UNIX_EPOCH;
        Self { threshold, quantile: DEFAULT_QUANTILE, estimation_window: (epoch, epoch) }
    }

    pub fn is_crowded(&self, occupancy: f64) -> bool {
        occupancy >= self.threshold as f64
    }
}

/// Label per slot: crowded iff the value reaches the threshold. Gaps stay gaps.
pub fn crowding_labels(series: &TimeSeries, cfg: &CrowdingConfig) -> Result<Vec<Option<bool>>> {
    if series.target() != Target::Occupancy {
        return Err(Error::InvalidArgument(format!(
            "crowding labels need an occupancy series, got {}",
            series.target()
        )));
    }
    Ok(series.values().iter().map(|v| v.map(|v| v >= cfg.threshold)).collect())
}

/// Everything observed strictly before `origin`.
pub fn slice_history(series: &TimeSeries, origin: &DateTime<Utc>) -> Result<TimeSeries> {
    if *origin <= series.start() {
        return Err(Error::EmptySeries(format!(
            "no history before {} (series starts {})",
            format_timestamp(origin),
            format_timestamp(&series.start())
        )));
    }
    Ok(series.window(&series.start(), origin))
}
