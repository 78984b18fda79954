use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};

use crate::error::{Error, Result};
use crate::ets::ModelKind;
use crate::series::{format_timestamp, Target};

/// Forecast steps per record.
pub const HORIZON: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordKey {
    pub model: ModelKind,
    pub target: Target,
    pub origin: DateTime<Utc>,
}

impl std::fmt::Display for RecordKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}@{}", self.model, self.target, format_timestamp(&self.origin))
    }
}

/// One model's 24-step forecast issued at `origin` for one target.
///
/// `forecasts[h - 1]` is the prediction for the hour starting at
/// `origin + (h - 1)` hours; the origin hour itself is the first one not yet
/// observed.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRecord {
    pub origin: DateTime<Utc>,
    pub model: ModelKind,
    pub target: Target,
    pub forecasts: Vec<f64>,
    pub converged: bool,
    pub fit_ms: Option<u64>,
}

impl ForecastRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey { model: self.model, target: self.target, origin: self.origin }
    }

    pub fn target_hour(&self, h: usize) -> DateTime<Utc> {
        self.origin + Duration::hours(h as i64 - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.forecasts.len() != HORIZON {
            return Err(Error::InvalidArgument(format!(
                "record {} has {} horizons, expected {HORIZON}",
                self.key(),
                self.forecasts.len()
            )));
        }
        if let Some(v) = self.forecasts.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("record {} has non-finite forecast {v}", self.key())));
        }
        Ok(())
    }
}

/// Forecast records, at most one per (model, target, origin).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ForecastLog {
    records: BTreeMap<RecordKey, ForecastRecord>,
}

impl ForecastLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: ForecastRecord) -> Result<()> {
        record.validate()?;
        let key = record.key();
        if self.records.contains_key(&key) {
            return Err(Error::Duplicate(key.to_string()));
        }
        self.records.insert(key, record);
        Ok(())
    }

    pub fn contains(&self, key: &RecordKey) -> bool {
        self.records.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in (model, target, origin) order.
    pub fn records(&self) -> impl Iterator<Item = &ForecastRecord> {
        self.records.values()
    }

    pub fn for_target(&self, target: Target) -> impl Iterator<Item = &ForecastRecord> {
        self.records.values().filter(move |r| r.target == target)
    }

    /// Distinct models present for `target`, in sorted order.
    pub fn models(&self, target: Target) -> Vec<ModelKind> {
        let mut models: Vec<ModelKind> = self.for_target(target).map(|r| r.model).collect();
        models.dedup();
        models
    }

    /// Distinct (model, target) pairs present, in sorted order.
    pub fn series_keys(&self) -> Vec<(ModelKind, Target)> {
        let mut keys: Vec<(ModelKind, Target)> = self.records.keys().map(|k| (k.model, k.target)).collect();
        keys.dedup();
        keys
    }

    /// Earliest origin and latest origin present.
    pub fn origin_span(&self) -> Option<(DateTime<Utc>, DateTime<Utc>)> {
        let first = self.records.values().map(|r| r.origin).min()?;
        let last = self.records.values().map(|r| r.origin).max()?;
        Some((first, last))
    }
}

impl FromIterator<ForecastRecord> for Result<ForecastLog> {
    fn from_iter<I: IntoIterator<Item = ForecastRecord>>(iter: I) -> Self {
        let mut log = ForecastLog::new();
        for r in iter {
            log.insert(r)?;
        }
        Ok(log)
    }
}
