use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ets::{ModelKind, DEFAULT_PERIOD};
use crate::series::{format_timestamp, is_hour_aligned, parse_timestamp, Target, ThresholdWindow, DEFAULT_QUANTILE};

/// Half-open hour range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeRange {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl TimeRange {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Result<Self> {
        if !(is_hour_aligned(&start) && is_hour_aligned(&end)) {
            return Err(Error::InvalidArgument("range bounds must be hour-aligned".into()));
        }
        if end <= start {
            return Err(Error::InvalidArgument(format!(
                "empty range {} / {}",
                format_timestamp(&start),
                format_timestamp(&end)
            )));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, ts: &DateTime<Utc>) -> bool {
        *ts >= self.start && *ts < self.end
    }

    pub fn hours(&self) -> i64 {
        (self.end - self.start).num_hours()
    }
}

impl FromStr for TimeRange {
    type Err = Error;

    /// `start/end`, both ISO-8601 with offsets.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) =
            s.split_once('/').ok_or_else(|| Error::InvalidArgument(format!("range `{s}` is not `start/end`")))?;
        TimeRange::new(parse_timestamp(a)?, parse_timestamp(b)?)
    }
}

impl std::fmt::Display for TimeRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", format_timestamp(&self.start), format_timestamp(&self.end))
    }
}

/// Settings for the forecasting service. Built from a flat TOML file with
/// command-line overrides applied on top.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub arrivals: Option<PathBuf>,
    pub occupancy: Option<PathBuf>,
    pub store: PathBuf,
    pub models: Vec<ModelKind>,
    pub targets: Vec<Target>,
    pub refit_cadence: u32,
    pub period: usize,
    pub utc_offset: i32,
    pub downtime: Vec<TimeRange>,
    /// Replay range, also the expected origin range for coverage.
    pub range: Option<TimeRange>,
    pub quantile: f64,
    pub threshold_window: ThresholdWindow,
    /// Record wall-clock fit durations. Off by default so stores are reproducible.
    pub record_fit_time: bool,
    pub seed: u64,
    /// Occupancy ceiling applied when reading truth files.
    pub occupancy_ceiling: u32,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            arrivals: None,
            occupancy: None,
            store: PathBuf::from("predictions.csv"),
            models: ModelKind::ALL.to_vec(),
            targets: Target::ALL.to_vec(),
            refit_cadence: 1,
            period: DEFAULT_PERIOD,
            utc_offset: 2,
            downtime: Vec::new(),
            range: None,
            quantile: DEFAULT_QUANTILE,
            threshold_window: ThresholdWindow::Full,
            record_fit_time: false,
            seed: 0,
            occupancy_ceiling: crate::series::DEFAULT_OCCUPANCY_CEILING,
        }
    }
}

/// On-disk form: every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    arrivals: Option<PathBuf>,
    occupancy: Option<PathBuf>,
    store: Option<PathBuf>,
    models: Option<Vec<String>>,
    targets: Option<Vec<String>>,
    refit_cadence: Option<u32>,
    period: Option<usize>,
    utc_offset: Option<i32>,
    downtime: Option<Vec<String>>,
    start: Option<String>,
    end: Option<String>,
    quantile: Option<f64>,
    threshold_window: Option<String>,
    record_fit_time: Option<bool>,
    seed: Option<u64>,
    occupancy_ceiling: Option<u32>,
}

fn parse_list<T: FromStr<Err = Error>>(items: &[String]) -> Result<Vec<T>> {
    items.iter().map(|s| s.parse()).collect()
}

impl ServiceConfig {
    /// Parses a config file. Relative paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let resolve = |p: PathBuf| match base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p,
        };
        let mut cfg = ServiceConfig {
            arrivals: file.arrivals.map(resolve),
            occupancy: file.occupancy.map(resolve),
            ..ServiceConfig::default()
        };
        if let Some(store) = file.store {
            cfg.store = resolve(store);
        }
        if let Some(models) = file.models {
            cfg.models = parse_list(&models)?;
        }
        if let Some(targets) = file.targets {
            cfg.targets = parse_list(&targets)?;
        }
        if let Some(v) = file.refit_cadence {
            cfg.refit_cadence = v;
        }
        if let Some(v) = file.period {
            cfg.period = v;
        }
        if let Some(v) = file.utc_offset {
            cfg.utc_offset = v;
        }
        if let Some(ranges) = file.downtime {
            cfg.downtime = parse_list(&ranges)?;
        }
        match (file.start, file.end) {
            (Some(a), Some(b)) => cfg.range = Some(TimeRange::new(parse_timestamp(&a)?, parse_timestamp(&b)?)?),
            (None, None) => {}
            _ => return Err(Error::Config("`start` and `end` must be given together".into())),
        }
        if let Some(v) = file.quantile {
            cfg.quantile = v;
        }
        if let Some(v) = file.threshold_window {
            cfg.threshold_window = v.parse()?;
        }
        if let Some(v) = file.record_fit_time {
            cfg.record_fit_time = v;
        }
        if let Some(v) = file.seed {
            cfg.seed = v;
        }
        if let Some(v) = file.occupancy_ceiling {
            cfg.occupancy_ceiling = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() || self.targets.is_empty() {
            return Err(Error::Config("at least one model and one target must be enabled".into()));
        }
        if self.refit_cadence == 0 {
            return Err(Error::Config("refit_cadence must be positive".into()));
        }
        if self.period < 2 {
            return Err(Error::Config("period must be at least 2".into()));
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(Error::Config(format!("quantile {} not in (0, 1)", self.quantile)));
        }
        Ok(())
    }

    pub fn in_downtime(&self, ts: &DateTime<Utc>) -> bool {
        self.downtime.iter().any(|r| r.contains(ts))
    }

    pub fn truth_path(&self, target: Target) -> Option<&Path> {
        match target {
            Target::Arrivals => self.arrivals.as_deref(),
            Target::Occupancy => self.occupancy.as_deref(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let text = r#"
store = "preds.csv"
occupancy = "/data/occ.csv"
models = ["AHWM", "hwdm"]
targets = ["occupancy"]
refit_cadence = 24
utc_offset = 3
downtime = ["2022-02-14T00:00:00Z/2022-02-28T00:00:00Z"]
start = "2022-01-15T00:00:00+00:00"
end = "2022-05-26T01:00:00+00:00"
"#;
        let cfg = ServiceConfig::from_toml_str(text, Some(Path::new("/work"))).unwrap();
        assert_eq!(cfg.store, PathBuf::from("/work/preds.csv"));
        assert_eq!(cfg.occupancy, Some(PathBuf::from("/data/occ.csv")));
        assert_eq!(cfg.models, vec![ModelKind::Additive, ModelKind::Damped]);
        assert_eq!(cfg.downtime[0].hours(), 14 * 24);
        assert_eq!(cfg.range.unwrap().hours(), 3145);
        assert_eq!(cfg.utc_offset, 3);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(ServiceConfig::from_toml_str("models = []\n", None).is_err());
        assert!(ServiceConfig::from_toml_str("unknown_key = 1\n", None).is_err());
        assert!(ServiceConfig::from_toml_str("start = \"2022-01-01T00:00:00Z\"\n", None).is_err());
        assert!(ServiceConfig::from_toml_str("models = [\"ARIMA\"]\n", None).is_err());
        assert!(
            ServiceConfig::from_toml_str("downtime = [\"2022-01-02T00:00:00Z/2022-01-01T00:00:00Z\"]\n", None).is_err()
        );
    }

    #[test]
    fn range_parsing() {
        let r: TimeRange = "2022-01-01T00:00:00Z/2022-01-02T00:00:00+02:00".parse().unwrap();
        assert_eq!(r.hours(), 22);
        assert!("2022-01-01T00:00:00Z".parse::<TimeRange>().is_err());
        assert!("2022-01-01T00:30:00Z/2022-01-02T00:00:00Z".parse::<TimeRange>().is_err());
    }
}
