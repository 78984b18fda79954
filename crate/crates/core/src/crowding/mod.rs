//! Evaluation of a forecast log against observed truth.
//!
//! Three views are produced: pooled continuous errors per (target, model),
//! binary crowding performance per forecast horizon (PFFH), and binary
//! crowding performance per local origin hour over the following 24 hours
//! (PFFO). Coverage accounting reports which expected origins never got a
//! forecast.

mod log;
mod report;

use chrono::{DateTime, Duration, Utc};

use crate::error::{Error, Result};
use crate::ets::ModelKind;
use crate::metrics::{self, classification_metrics, ClassificationMetrics, ConfusionCounts, ScoredLabel};
use crate::series::{local_hour, CrowdingConfig, Target, TimeSeries};

pub use log::{ForecastLog, ForecastRecord, RecordKey, HORIZON};
pub use report::{EvalReport, REPORT_FILES};

/// Pooled continuous errors for one (target, model).
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousRow {
    pub target: Target,
    pub model: ModelKind,
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub n_pairs: usize,
    /// Pairs dropped because the actual hour is a gap or outside the truth.
    pub excluded: usize,
}

/// Pools every (forecast, actual) pair over all origins and horizons.
///
/// `truths` holds at most one series per target; records for targets without
/// truth are ignored.
pub fn continuous_summary(log: &ForecastLog, truths: &[&TimeSeries]) -> Result<Vec<ContinuousRow>> {
    if log.is_empty() {
        return Err(Error::InsufficientData("forecast log is empty".into()));
    }
    let mut rows = Vec::new();
    for (model, target) in log.series_keys() {
        let Some(truth) = truths.iter().find(|t| t.target() == target) else { continue };
        let mut predicted = Vec::new();
        let mut actual = Vec::new();
        let mut excluded = 0;
        for record in log.for_target(target).filter(|r| r.model == model) {
            for (i, f) in record.forecasts.iter().enumerate() {
                match truth.get(&record.target_hour(i + 1)) {
                    Some(v) => {
                        predicted.push(*f);
                        actual.push(v as f64);
                    }
                    None => excluded += 1,
                }
            }
        }
        if predicted.is_empty() {
            continue;
        }
        rows.push(ContinuousRow {
            target,
            model,
            mae: metrics::mae(&predicted, &actual)?,
            mse: metrics::mse(&predicted, &actual)?,
            rmse: metrics::rmse(&predicted, &actual)?,
            n_pairs: predicted.len(),
            excluded,
        });
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData("no forecast overlaps an observed hour".into()));
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    /// Per forecast horizon.
    Pffh,
    /// Per local origin hour.
    Pffo,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Pffh => "PFFH",
            Phase::Pffo => "PFFO",
        }
    }
}

/// Binary performance in one PFFH horizon or PFFO origin-hour cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryCell {
    pub model: ModelKind,
    pub phase: Phase,
    /// Horizon 1..=24 for PFFH, local origin hour 0..=23 for PFFO.
    pub index: u32,
    pub auc: Option<f64>,
    pub metrics: ClassificationMetrics,
    pub confusion: ConfusionCounts,
    /// Scored pairs (PFFH) or windows (PFFO) included.
    pub n: usize,
    /// Pairs or windows dropped because the truth has gaps or ends early.
    pub excluded: usize,
}

impl BinaryCell {
    fn from_items(
        model: ModelKind,
        phase: Phase,
        index: u32,
        items: &[ScoredLabel],
        cfg: &CrowdingConfig,
        excluded: usize,
    ) -> Result<Self> {
        let mut confusion = ConfusionCounts::default();
        for item in items {
            confusion.add(cfg.is_crowded(item.score), item.label);
        }
        let metrics =
            if items.is_empty() { ClassificationMetrics::default() } else { classification_metrics(&confusion)? };
        let auc = match metrics::roc_auc(items) {
            Ok(a) => Some(a),
            Err(Error::UndefinedAuc(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self { model, phase, index, auc, metrics, confusion, n: items.len(), excluded })
    }
}

fn require_occupancy(series: &TimeSeries) -> Result<()> {
    if series.target() != Target::Occupancy {
        return Err(Error::InvalidArgument(format!("crowding needs occupancy truth, got {}", series.target())));
    }
    Ok(())
}

/// Scored labels of every occupancy record at horizon `h`, plus exclusions.
pub fn horizon_items(
    log: &ForecastLog,
    model: ModelKind,
    occupancy: &TimeSeries,
    cfg: &CrowdingConfig,
    h: usize,
) -> (Vec<ScoredLabel>, usize) {
    let mut items = Vec::new();
    let mut excluded = 0;
    for record in log.for_target(Target::Occupancy).filter(|r| r.model == model) {
        match occupancy.get(&record.target_hour(h)) {
            Some(actual) => items.push(ScoredLabel::new(record.forecasts[h - 1], actual >= cfg.threshold)),
            None => excluded += 1,
        }
    }
    (items, excluded)
}

/// Performance as a function of forecast horizon.
///
/// Each horizon pools the h-step forecasts of all origins. The score is the
/// forecast value and the unadjusted prediction is `forecast >= threshold`.
pub fn pffh(log: &ForecastLog, occupancy: &TimeSeries, cfg: &CrowdingConfig) -> Result<Vec<BinaryCell>> {
    require_occupancy(occupancy)?;
    let mut cells = Vec::new();
    for model in log.models(Target::Occupancy) {
        for h in 1..=HORIZON {
            let (items, excluded) = horizon_items(log, model, occupancy, cfg, h);
            cells.push(BinaryCell::from_items(model, Phase::Pffh, h as u32, &items, cfg, excluded)?);
        }
    }
    Ok(cells)
}

/// Scored windows of every occupancy record whose origin falls on local hour
/// `hour`, plus exclusions.
pub fn origin_items(
    log: &ForecastLog,
    model: ModelKind,
    occupancy: &TimeSeries,
    cfg: &CrowdingConfig,
    hour: u32,
    utc_offset_hours: i32,
) -> (Vec<ScoredLabel>, usize) {
    let mut items = Vec::new();
    let mut excluded = 0;
    for record in log
        .for_target(Target::Occupancy)
        .filter(|r| r.model == model && local_hour(&r.origin, utc_offset_hours) == hour)
    {
        let window: Option<Vec<u32>> = (1..=HORIZON).map(|h| occupancy.get(&record.target_hour(h))).collect();
        match window {
            Some(actual) => {
                let crowded = actual.iter().any(|v| *v >= cfg.threshold);
                let score = record.forecasts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                items.push(ScoredLabel::new(score, crowded));
            }
            None => excluded += 1,
        }
    }
    (items, excluded)
}

/// Performance as a function of forecast origin.
///
/// A window is crowded if any of its 24 hours reaches the threshold. The score
/// is the maximum of the 24 forecasts, so the unadjusted prediction is "some
/// forecast reaches the threshold". Windows touching a truth gap or running
/// past the end of the truth are excluded.
pub fn pffo(
    log: &ForecastLog,
    occupancy: &TimeSeries,
    cfg: &CrowdingConfig,
    utc_offset_hours: i32,
) -> Result<Vec<BinaryCell>> {
    require_occupancy(occupancy)?;
    let mut cells = Vec::new();
    for model in log.models(Target::Occupancy) {
        for hour in 0..24u32 {
            let (items, excluded) = origin_items(log, model, occupancy, cfg, hour, utc_offset_hours);
            cells.push(BinaryCell::from_items(model, Phase::Pffo, hour, &items, cfg, excluded)?);
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub model: ModelKind,
    pub target: Target,
    pub expected: usize,
    pub present: usize,
    pub missing: usize,
    pub missing_fraction: f64,
    /// Longest run of consecutive missing origins, in hours.
    pub longest_gap: usize,
}

/// Missing-origin accounting over `[start, end)` for each (model, target) in
/// `keys`, or for every pair present in the log when `keys` is empty.
pub fn coverage_report(
    log: &ForecastLog,
    start: DateTime<Utc>,
    end: DateTime<Utc>,
    keys: &[(ModelKind, Target)],
) -> Vec<CoverageRow> {
    let keys = if keys.is_empty() { log.series_keys() } else { keys.to_vec() };
    let expected = (end - start).num_hours().max(0) as usize;
    keys.into_iter()
        .map(|(model, target)| {
            let mut present = 0;
            let mut run = 0;
            let mut longest = 0;
            for i in 0..expected {
                let origin = start + Duration::hours(i as i64);
                if log.contains(&RecordKey { model, target, origin }) {
                    present += 1;
                    run = 0;
                } else {
                    run += 1;
                    longest = longest.max(run);
                }
            }
            let missing = expected - present;
            CoverageRow {
                model,
                target,
                expected,
                present,
                missing,
                missing_fraction: if expected == 0 { 0.0 } else { missing as f64 / expected as f64 },
                longest_gap: longest,
            }
        })
        .collect()
}
