//! Hourly forecast cycles, offline replay and report generation.
//!
//! A cycle at origin `o` fits (or reuses) each enabled model on the history
//! strictly before `o`, forecasts the next 24 hours and appends one record per
//! (model, target) to the store. Refits happen at origins aligned to the refit
//! cadence (counted in whole hours since the Unix epoch); in between, the last
//! fitted parameters are reused and the state is filtered forward. Because the
//! refit schedule depends only on the origin, a resumed replay produces the
//! same store as an uninterrupted one.

mod config;
mod store;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use chrono::{DateTime, Duration, Utc};
use log::{info, warn};
use rayon::prelude::*;

use crate::crowding::{self, EvalReport, ForecastLog, ForecastRecord, RecordKey, HORIZON};
use crate::error::{Error, Result};
use crate::ets::{self, EtsConfig, EtsModel, ModelKind};
use crate::series::{
    format_timestamp, is_hour_aligned, parse_hourly_csv_with, slice_history, CrowdingConfig, Target, ThresholdWindow,
    TimeSeries,
};

pub use config::{ServiceConfig, TimeRange};
pub use store::{format_record, header as store_header, load_log, parse_record, PredictionStore};

/// What happened to one (model, target) in a cycle.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Appended,
    Duplicate,
    Downtime,
    /// Not enough history (or no truth file) to forecast.
    Skipped(String),
    /// The model failed on this data.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleReport {
    pub origin: DateTime<Utc>,
    pub outcomes: Vec<(ModelKind, Target, Outcome)>,
}

impl CycleReport {
    pub fn appended(&self) -> usize {
        self.count(|o| matches!(o, Outcome::Appended))
    }

    pub fn count(&self, pred: impl Fn(&Outcome) -> bool) -> usize {
        self.outcomes.iter().filter(|(_, _, o)| pred(o)).count()
    }

    /// True when every enabled (model, target) was appended.
    pub fn is_complete(&self) -> bool {
        self.appended() == self.outcomes.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplaySummary {
    pub origins: usize,
    pub cycles: usize,
    pub resumed: usize,
    pub downtime: usize,
    pub appended: usize,
    pub skipped: usize,
    pub failed: usize,
}

struct CachedFit {
    /// The fitted model, or the outcome to report for every origin that
    /// shares this anchor.
    model: std::result::Result<Arc<EtsModel>, Outcome>,
    fit_ms: u64,
}

type FitKey = (ModelKind, Target, DateTime<Utc>);

/// Runs forecast cycles against in-memory truth series.
pub struct Forecaster {
    config: ServiceConfig,
    truths: BTreeMap<Target, TimeSeries>,
    fits: HashMap<FitKey, CachedFit>,
}

impl Forecaster {
    pub fn new(config: ServiceConfig, truths: Vec<TimeSeries>) -> Result<Self> {
        config.validate()?;
        let truths = truths.into_iter().map(|s| (s.target(), s)).collect();
        Ok(Self { config, truths, fits: HashMap::new() })
    }

    /// Loads the truth files named in `config` for every enabled target.
    pub fn from_config(config: ServiceConfig) -> Result<Self> {
        let truths = load_truths(&config, &config.targets)?;
        Self::new(config, truths)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn truth(&self, target: Target) -> Option<&TimeSeries> {
        self.truths.get(&target)
    }

    fn anchor(&self, origin: &DateTime<Utc>) -> DateTime<Utc> {
        let cadence = self.config.refit_cadence as i64;
        let hours = origin.timestamp().div_euclid(3600);
        *origin - Duration::hours(hours.rem_euclid(cadence))
    }

    fn ets_config(&self, kind: ModelKind) -> EtsConfig {
        EtsConfig { kind, period: self.config.period, refit_cadence: self.config.refit_cadence }
    }

    fn keys(&self) -> Vec<(ModelKind, Target)> {
        let mut keys = Vec::new();
        for &target in &self.config.targets {
            for &model in &self.config.models {
                keys.push((model, target));
            }
        }
        keys
    }

    /// One forecast cycle at `now`.
    ///
    /// Per-model problems are recorded as outcomes; only store failures and an
    /// invalid origin return an error.
    pub fn run_cycle(&mut self, store: &mut PredictionStore, now: DateTime<Utc>) -> Result<CycleReport> {
        if !is_hour_aligned(&now) {
            return Err(Error::InvalidArgument(format!("origin {} is not hour-aligned", format_timestamp(&now))));
        }
        let keys = self.keys();
        if self.config.in_downtime(&now) {
            info!("{}: inside a downtime window, no forecasts", format_timestamp(&now));
            return Ok(CycleReport {
                origin: now,
                outcomes: keys.into_iter().map(|(m, t)| (m, t, Outcome::Downtime)).collect(),
            });
        }

        let anchor = self.anchor(&now);
        let mut outcomes: Vec<(ModelKind, Target, Option<Outcome>)> = keys
            .iter()
            .map(|&(model, target)| {
                let outcome = if store.contains(&RecordKey { model, target, origin: now }) {
                    Some(Outcome::Duplicate)
                } else if !self.truths.contains_key(&target) {
                    Some(Outcome::Skipped(format!("no {target} truth loaded")))
                } else {
                    None
                };
                (model, target, outcome)
            })
            .collect();

        // fit whatever the cache lacks, in parallel
        let missing: Vec<FitKey> = outcomes
            .iter()
            .filter(|(_, _, o)| o.is_none())
            .map(|&(m, t, _)| (m, t, anchor))
            .filter(|k| !self.fits.contains_key(k))
            .collect();
        let fresh: Vec<(FitKey, CachedFit)> = missing
            .par_iter()
            .map(|&(model, target, at)| {
                let started = Instant::now();
                let fitted =
                    slice_history(&self.truths[&target], &at).and_then(|h| ets::fit(&h, &self.ets_config(model)));
                let fit_ms = started.elapsed().as_millis() as u64;
                ((model, target, at), CachedFit { model: fitted.map(Arc::new).map_err(classify), fit_ms })
            })
            .collect();
        self.fits.retain(|(_, _, at), _| *at >= anchor);
        self.fits.extend(fresh);

        let mut records = Vec::new();
        for (model, target, outcome) in outcomes.iter_mut() {
            if outcome.is_some() {
                continue;
            }
            let cached = &self.fits[&(*model, *target, anchor)];
            let fitted = match &cached.model {
                Ok(fitted) => fitted,
                Err(o) => {
                    *outcome = Some(o.clone());
                    continue;
                }
            };
            let result = slice_history(&self.truths[target], &now)
                .and_then(|history| fitted.advance(&history))
                .and_then(|advanced| advanced.forecast(HORIZON));
            *outcome = Some(match result {
                Ok(forecasts) => {
                    records.push(ForecastRecord {
                        origin: now,
                        model: *model,
                        target: *target,
                        forecasts,
                        converged: fitted.converged,
                        fit_ms: self.config.record_fit_time.then_some(cached.fit_ms),
                    });
                    Outcome::Appended
                }
                Err(e) => classify(e),
            });
            if let Some(Outcome::Failed(msg)) = outcome {
                warn!("{} {model}/{target}: {msg}", format_timestamp(&now));
            }
        }

        store.append(&records)?;
        Ok(CycleReport { origin: now, outcomes: outcomes.into_iter().map(|(m, t, o)| (m, t, o.unwrap())).collect() })
    }

    /// Runs a cycle for every hour in `range`, skipping downtime and origins
    /// whose records are all already stored.
    pub fn run_replay(&mut self, store: &mut PredictionStore, range: TimeRange) -> Result<ReplaySummary> {
        let keys = self.keys();
        let mut summary = ReplaySummary::default();
        let total = range.hours();
        for i in 0..total {
            let origin = range.start + Duration::hours(i);
            summary.origins += 1;
            if self.config.in_downtime(&origin) {
                summary.downtime += 1;
                continue;
            }
            if keys.iter().all(|&(model, target)| store.contains(&RecordKey { model, target, origin })) {
                summary.resumed += 1;
                continue;
            }
            let report = self.run_cycle(store, origin)?;
            summary.cycles += 1;
            summary.appended += report.appended();
            summary.skipped += report.count(|o| matches!(o, Outcome::Skipped(_)));
            summary.failed += report.count(|o| matches!(o, Outcome::Failed(_)));
            if (i + 1) % 24 == 0 {
                info!("replay {}/{} origins, {} records", i + 1, total, summary.appended);
            }
        }
        Ok(summary)
    }
}

fn classify(e: Error) -> Outcome {
    match e {
        Error::InsufficientData(_) | Error::EmptySeries(_) => Outcome::Skipped(e.to_string()),
        other => Outcome::Failed(other.to_string()),
    }
}

/// Reads the truth CSV for each of `targets` that has a configured path.
pub fn load_truths(config: &ServiceConfig, targets: &[Target]) -> Result<Vec<TimeSeries>> {
    let mut out = Vec::new();
    for &target in targets {
        if let Some(path) = config.truth_path(target) {
            let text =
                std::fs::read_to_string(path).map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
            out.push(parse_hourly_csv_with(&text, target, config.occupancy_ceiling)?);
        }
    }
    Ok(out)
}

/// Builds the full evaluation report for a log.
///
/// The crowding threshold comes from the occupancy truth, either over the
/// evaluated period or over the history before the first origin.
pub fn evaluate(config: &ServiceConfig, log: &ForecastLog, truths: &[TimeSeries]) -> Result<EvalReport> {
    let (first, last) = log.origin_span().ok_or_else(|| Error::InsufficientData("prediction store is empty".into()))?;
    let needed_end = last + Duration::hours(HORIZON as i64);
    let occupancy = truths
        .iter()
        .find(|t| t.target() == Target::Occupancy)
        .ok_or_else(|| Error::Config("evaluation needs an occupancy truth file".into()))?;

    for truth in truths {
        let lo = truth.start().max(first);
        let hi = truth.end().min(needed_end);
        if lo >= hi {
            return Err(Error::RangeMismatch(format!(
                "{} truth covers {} to {}, forecasts need {} to {}",
                truth.target(),
                format_timestamp(&truth.start()),
                format_timestamp(&truth.end()),
                format_timestamp(&first),
                format_timestamp(&needed_end)
            )));
        }
        if truth.start() > first || truth.end() < needed_end {
            warn!(
                "{} truth only partly covers the forecasts; using overlap {} to {}",
                truth.target(),
                format_timestamp(&lo),
                format_timestamp(&hi)
            );
        }
    }

    let crowding = match config.threshold_window {
        ThresholdWindow::Full => CrowdingConfig::estimate(occupancy, config.quantile, first, needed_end)?,
        ThresholdWindow::Trailing => CrowdingConfig::estimate(occupancy, config.quantile, occupancy.start(), first)?,
    };

    let truth_refs: Vec<&TimeSeries> = truths.iter().collect();
    let continuous = crowding::continuous_summary(log, &truth_refs)?;
    let pffh = crowding::pffh(log, occupancy, &crowding)?;
    let pffo = crowding::pffo(log, occupancy, &crowding, config.utc_offset)?;

    let expected = config.range.unwrap_or(TimeRange { start: first, end: last + Duration::hours(1) });
    let mut keys = Vec::new();
    for &target in &config.targets {
        for &model in &config.models {
            keys.push((model, target));
        }
    }
    let coverage = crowding::coverage_report(log, expected.start, expected.end, &keys);

    Ok(EvalReport { crowding, continuous, pffh, pffo, coverage })
}

/// Loads the store and truth files named by `config`, evaluates, and writes
/// the report files into `out_dir`.
pub fn evaluate_to_dir(config: &ServiceConfig, out_dir: &Path) -> Result<EvalReport> {
    let log = load_log(&config.store)?;
    let truths = load_truths(config, &Target::ALL)?;
    let report = evaluate(config, &log, &truths)?;
    report.write_dir(out_dir)?;
    Ok(report)
}

/// Renders the report CSVs in `dir` as plain-text tables.
pub fn render_report(dir: &Path) -> Result<String> {
    use std::fmt::Write as _;

    let read = |name: &str| -> Result<Vec<csv::StringRecord>> {
        let mut reader = csv::Reader::from_path(dir.join(name))?;
        reader.records().map(|r| r.map_err(Error::from)).collect()
    };
    let threshold = read("threshold.csv")?;
    let table1 = read("table1_continuous.csv")?;
    let table2 = read("table2_binary.csv")?;
    let coverage = read("coverage.csv")?;

    let mut out = String::new();
    if let Some(t) = threshold.first() {
        let _ = writeln!(out, "Crowding threshold: occupancy >= {} (q = {}, {} to {})\n", &t[0], &t[1], &t[2], &t[3]);
    }

    let _ = writeln!(out, "Continuous errors (all horizons pooled)");
    let _ = writeln!(out, "{:<10} {:<5} {:>10} {:>12} {:>10} {:>8}", "target", "model", "MAE", "MSE", "RMSE", "pairs");
    for r in &table1 {
        let _ = writeln!(
            out,
            "{:<10} {:<5} {:>10} {:>12} {:>10} {:>8}",
            &r[0],
            &r[1],
            short(&r[2]),
            short(&r[3]),
            short(&r[4]),
            &r[5]
        );
    }

    let mut models: Vec<String> = table2.iter().map(|r| r[0].to_string()).collect();
    models.sort();
    models.dedup();
    let mut absent = 0;
    for (kind, label) in [("PFFH", "horizon"), ("PFFO", "origin")] {
        let _ = write!(out, "\nAUC by {label} ({kind})\n{label:<8}");
        for m in &models {
            let _ = write!(out, " {m:>6}");
        }
        out.push('\n');
        let mut indices: Vec<u32> = table2.iter().filter(|r| &r[1] == kind).filter_map(|r| r[2].parse().ok()).collect();
        indices.sort();
        indices.dedup();
        for i in indices {
            let name = if kind == "PFFH" { format!("t+{i}") } else { i.to_string() };
            let _ = write!(out, "{name:<8}");
            for m in &models {
                let cell = table2.iter().find(|r| &r[0] == m.as_str() && &r[1] == kind && r[2] == *i.to_string());
                let auc = cell.map(|r| r[3].to_string()).unwrap_or_default();
                if auc.is_empty() {
                    absent += 1;
                    let _ = write!(out, " {:>6}", "-");
                } else {
                    let _ = write!(out, " {:>6}", format!("{:.2}", auc.parse::<f64>().unwrap_or(f64::NAN)));
                }
            }
            out.push('\n');
        }
    }
    if absent > 0 {
        let _ = writeln!(out, "\n- : AUC undefined (single class), {absent} cell(s)");
    }

    let _ = writeln!(out, "\nCoverage");
    for r in &coverage {
        let _ = writeln!(
            out,
            "{:<5} {:<10} missing {}/{} ({}), longest gap {} h",
            &r[0],
            &r[1],
            &r[4],
            &r[2],
            short(&r[5]),
            &r[6]
        );
    }
    Ok(out)
}

fn short(v: &str) -> String {
    v.parse::<f64>().map(|x| format!("{x:.4}")).unwrap_or_else(|_| v.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim;
    use chrono::TimeZone;
    use std::fs::OpenOptions;

    #[test]
    fn store_failure_aborts_the_cycle() {
        let Ok(full) = OpenOptions::new().append(true).open("/dev/full") else { return };
        let run = sim::simulate(&sim::default_profile(), 20, 1).unwrap();
        let mut f = Forecaster::new(ServiceConfig::default(), vec![run.arrivals, run.occupancy]).unwrap();
        let mut store = PredictionStore::from_file(Path::new("/dev/full"), full);
        let now = Utc.with_ymd_and_hms(2021, 1, 10, 0, 0, 0).unwrap();
        assert!(matches!(f.run_cycle(&mut store, now), Err(Error::Store(_))));
    }

    #[test]
    fn anchors_follow_the_epoch_grid() {
        let cfg = ServiceConfig { refit_cadence: 24, ..ServiceConfig::default() };
        let f = Forecaster::new(cfg, Vec::new()).unwrap();
        let t = Utc.with_ymd_and_hms(2022, 3, 4, 17, 0, 0).unwrap();
        assert_eq!(f.anchor(&t), Utc.with_ymd_and_hms(2022, 3, 4, 0, 0, 0).unwrap());
        let midnight = Utc.with_ymd_and_hms(2022, 3, 4, 0, 0, 0).unwrap();
        assert_eq!(f.anchor(&midnight), midnight);
    }
}
