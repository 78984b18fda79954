use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};

use crowdcast::error::{Error, Result};
use crowdcast::ets::ModelKind;
use crowdcast::series::{
    format_timestamp, parse_hourly_csv_with, parse_timestamp, quartile_threshold, Target, ThresholdWindow,
};
use crowdcast::service::{self, Forecaster, Outcome, PredictionStore, ServiceConfig, TimeRange};
use crowdcast::sim::{self, EdProfile, SimClock};

#[derive(Parser)]
#[command(name = "crowdcast", version, about = "Hourly ED forecasting and crowding early-warning evaluation")]
struct Cli {
    /// Flat TOML config file; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Hours added to UTC to get the local clock.
    #[arg(long, global = true, allow_hyphen_values = true)]
    utc_offset: Option<i32>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long, global = true)]
    arrivals: Option<PathBuf>,
    #[arg(long, global = true)]
    occupancy: Option<PathBuf>,
    /// Prediction store file.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// Comma-separated model ids (AHWM, MHWM, HWDM).
    #[arg(long, global = true, value_delimiter = ',')]
    models: Option<Vec<ModelKind>>,
    /// Comma-separated targets (arrivals, occupancy).
    #[arg(long, global = true, value_delimiter = ',')]
    targets: Option<Vec<Target>>,
    #[arg(long, global = true)]
    refit_cadence: Option<u32>,
    #[arg(long, global = true)]
    period: Option<usize>,
    /// Downtime window `start/end`; repeatable. Replaces the configured list.
    #[arg(long, global = true)]
    downtime: Option<Vec<TimeRange>>,
    /// First replay origin.
    #[arg(long, global = true)]
    start: Option<String>,
    /// End of the replay range (exclusive).
    #[arg(long, global = true)]
    end: Option<String>,
    #[arg(long, global = true)]
    quantile: Option<f64>,
    /// `full` (evaluated period) or `trailing` (history before the first origin).
    #[arg(long, global = true)]
    threshold_window: Option<ThresholdWindow>,
    #[arg(long, global = true)]
    record_fit_time: Option<bool>,
    #[arg(long, global = true)]
    occupancy_ceiling: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic arrivals.csv and occupancy.csv.
    Simulate {
        #[arg(long, default_value_t = 365)]
        days: u32,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// ED profile (TOML); defaults to the built-in profile.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Run a forecast cycle for every hour of the configured range.
    Replay,
    /// Run one forecast cycle.
    Cycle {
        #[arg(long)]
        now: String,
    },
    /// Score the store against the truth files and write report CSVs.
    Evaluate {
        #[arg(long, default_value = "report")]
        out_dir: PathBuf,
    },
    /// Render the report CSVs in a directory to report.txt.
    Report {
        #[arg(long, default_value = "report")]
        dir: PathBuf,
        /// Also print the rendered report.
        #[arg(long)]
        print: bool,
    },
    /// Print the crowding threshold of an occupancy CSV.
    Threshold {
        #[arg(long)]
        input: PathBuf,
    },
}

fn build_config(cli: &Cli) -> Result<ServiceConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ServiceConfig::load(path)?,
        None => ServiceConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.utc_offset {
        cfg.utc_offset = v;
    }
    if o.arrivals.is_some() {
        cfg.arrivals = o.arrivals.clone();
    }
    if o.occupancy.is_some() {
        cfg.occupancy = o.occupancy.clone();
    }
    if let Some(v) = &o.store {
        cfg.store = v.clone();
    }
    if let Some(v) = &o.models {
        cfg.models = v.clone();
    }
    if let Some(v) = &o.targets {
        cfg.targets = v.clone();
    }
    if let Some(v) = o.refit_cadence {
        cfg.refit_cadence = v;
    }
    if let Some(v) = o.period {
        cfg.period = v;
    }
    if let Some(v) = &o.downtime {
        cfg.downtime = v.clone();
    }
    match (&o.start, &o.end, cfg.range) {
        (None, None, _) => {}
        (Some(a), Some(b), _) => cfg.range = Some(TimeRange::new(parse_timestamp(a)?, parse_timestamp(b)?)?),
        (Some(a), None, Some(r)) => cfg.range = Some(TimeRange::new(parse_timestamp(a)?, r.end)?),
        (None, Some(b), Some(r)) => cfg.range = Some(TimeRange::new(r.start, parse_timestamp(b)?)?),
        // a lone --start is the simulation start; replay reports the missing range
        _ => {}
    }
    if let Some(v) = o.quantile {
        cfg.quantile = v;
    }
    if let Some(v) = o.threshold_window {
        cfg.threshold_window = v;
    }
    if let Some(v) = o.record_fit_time {
        cfg.record_fit_time = v;
    }
    if let Some(v) = o.occupancy_ceiling {
        cfg.occupancy_ceiling = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Summary line and whether the run fully succeeded.
type RunSummary = (String, bool);

fn simulate(cli: &Cli, cfg: &ServiceConfig, days: u32, out_dir: &Path, profile: Option<&Path>) -> Result<RunSummary> {
    let profile = match profile {
        Some(p) => EdProfile::load(p)?,
        None => sim::default_profile(),
    };
    let mut clock = SimClock { utc_offset_hours: cfg.utc_offset, ..SimClock::default() };
    if let Some(start) = &cli.overrides.start {
        clock.start = parse_timestamp(start)?;
    }
    let run = sim::simulate_with(&profile, &clock, days, cfg.seed)?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("arrivals.csv"), run.arrivals.to_csv())?;
    std::fs::write(out_dir.join("occupancy.csv"), run.occupancy.to_csv())?;

    #[derive(serde::Serialize)]
    struct Meta<'a> {
        seed: u64,
        days: u32,
        start: String,
        utc_offset: i32,
        profile: &'a EdProfile,
    }
    let meta = Meta {
        seed: cfg.seed,
        days,
        start: format_timestamp(&clock.start),
        utc_offset: clock.utc_offset_hours,
        profile: &profile,
    };
    let meta = toml::to_string(&meta).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(out_dir.join("simulation.toml"), meta)?;

    let visits: u64 = run.arrivals.present().map(u64::from).sum();
    Ok((
        format!(
            "simulate: {days} days from {} seed {}, {visits} arrivals, written to {}",
            format_timestamp(&clock.start),
            cfg.seed,
            out_dir.display()
        ),
        true,
    ))
}

fn replay(cfg: ServiceConfig) -> Result<RunSummary> {
    let range = cfg.range.ok_or_else(|| Error::Config("replay needs a range (`start`/`end`)".into()))?;
    let mut store = PredictionStore::open(&cfg.store)?;
    let mut forecaster = Forecaster::from_config(cfg)?;
    let s = forecaster.run_replay(&mut store, range)?;
    let ok = s.failed == 0 && s.skipped == 0;
    Ok((
        format!(
            "replay {range}: {} origins, {} cycles, {} resumed, {} downtime, {} records appended, {} skipped, {} failed",
            s.origins, s.cycles, s.resumed, s.downtime, s.appended, s.skipped, s.failed
        ),
        ok,
    ))
}

fn cycle(cfg: ServiceConfig, now: &str) -> Result<RunSummary> {
    let now: DateTime<Utc> = parse_timestamp(now)?;
    let mut store = PredictionStore::open(&cfg.store)?;
    let mut forecaster = Forecaster::from_config(cfg)?;
    let report = forecaster.run_cycle(&mut store, now)?;
    let downtime = report.count(|o| matches!(o, Outcome::Downtime));
    let duplicate = report.count(|o| matches!(o, Outcome::Duplicate));
    let skipped = report.count(|o| matches!(o, Outcome::Skipped(_)));
    let failed = report.count(|o| matches!(o, Outcome::Failed(_)));
    for (model, target, outcome) in &report.outcomes {
        if let Outcome::Skipped(msg) | Outcome::Failed(msg) = outcome {
            log::warn!("{model}/{target}: {msg}");
        }
    }
    let ok = report.appended() + downtime == report.outcomes.len();
    Ok((
        format!(
            "cycle {}: {} appended, {duplicate} duplicate, {downtime} downtime, {skipped} skipped, {failed} failed",
            format_timestamp(&now),
            report.appended()
        ),
        ok,
    ))
}

fn evaluate(cfg: ServiceConfig, out_dir: &Path) -> Result<RunSummary> {
    let report = service::evaluate_to_dir(&cfg, out_dir)?;
    let records: usize = report.coverage.iter().map(|c| c.present).sum();
    Ok((
        format!(
            "evaluate: threshold {}, {records} records, {} undefined AUC cells, reports in {}",
            report.crowding.threshold,
            report.absent_auc_cells(),
            out_dir.display()
        ),
        true,
    ))
}

fn report(dir: &Path, print: bool) -> Result<RunSummary> {
    let text = service::render_report(dir)?;
    let path = dir.join("report.txt");
    std::fs::write(&path, &text)?;
    if print {
        emit(&text);
    }
    Ok((format!("report: written to {}", path.display()), true))
}

fn threshold(cfg: &ServiceConfig, input: &Path) -> Result<RunSummary> {
    let text = std::fs::read_to_string(input)?;
    let series = parse_hourly_csv_with(&text, Target::Occupancy, cfg.occupancy_ceiling)?;
    Ok((quartile_threshold(&series, cfg.quantile)?.to_string(), true))
}

// A closed pipe (e.g. `| head`) is not an error worth panicking over.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn run(cli: &Cli) -> Result<RunSummary> {
    let cfg = build_config(cli)?;
    match &cli.command {
        Command::Simulate { days, out_dir, profile } => simulate(cli, &cfg, *days, out_dir, profile.as_deref()),
        Command::Replay => replay(cfg),
        Command::Cycle { now } => cycle(cfg, now),
        Command::Evaluate { out_dir } => evaluate(cfg, out_dir),
        Command::Report { dir, print } => report(dir, *print),
        Command::Threshold { input } => threshold(&cfg, input),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok((line, ok)) => {
            emit(&format!("{line}\n"));
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
