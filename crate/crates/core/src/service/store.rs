//! Append-only prediction file.
//!
//! ```text
//! origin,model,target,h1,...,h24,converged,fit_ms
//! 2022-01-15T00:00:00+00:00,AHWM,occupancy,31.2,...,40.9,true,
//! ```
//!
//! Forecast values use the shortest representation that round-trips, so a
//! store read back yields bit-identical forecasts. `fit_ms` is empty unless
//! fit timing is enabled.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::crowding::{ForecastLog, ForecastRecord, RecordKey, HORIZON};
use crate::error::{Error, Result};
use crate::series::{format_timestamp, parse_timestamp};

pub fn header() -> String {
    let mut h = String::from("origin,model,target");
    for i in 1..=HORIZON {
        h.push_str(&format!(",h{i}"));
    }
    h.push_str(",converged,fit_ms");
    h
}

pub fn format_record(r: &ForecastRecord) -> String {
    let mut line = format!("{},{},{}", format_timestamp(&r.origin), r.model, r.target);
    for v in &r.forecasts {
        line.push(',');
        line.push_str(&v.to_string());
    }
    line.push_str(if r.converged { ",true," } else { ",false," });
    if let Some(ms) = r.fit_ms {
        line.push_str(&ms.to_string());
    }
    line
}

pub fn parse_record(line: &str, line_no: usize) -> Result<ForecastRecord> {
    let err = |msg: String| Error::Parse { line: line_no, msg };
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != HORIZON + 5 {
        return Err(err(format!("expected {} fields, found {}", HORIZON + 5, fields.len())));
    }
    let origin = parse_timestamp(fields[0]).map_err(|e| err(e.to_string()))?;
    let model = fields[1].parse().map_err(|e: Error| err(e.to_string()))?;
    let target = fields[2].parse().map_err(|e: Error| err(e.to_string()))?;
    let forecasts = fields[3..3 + HORIZON]
        .iter()
        .map(|f| f.parse::<f64>().map_err(|_| err(format!("bad forecast `{f}`"))))
        .collect::<Result<Vec<_>>>()?;
    let converged = match fields[3 + HORIZON] {
        "true" => true,
        "false" => false,
        other => return Err(err(format!("bad convergence flag `{other}`"))),
    };
    let fit_ms = match fields[4 + HORIZON] {
        "" => None,
        v => Some(v.parse().map_err(|_| err(format!("bad fit_ms `{v}`")))?),
    };
    let record = ForecastRecord { origin, model, target, forecasts, converged, fit_ms };
    record.validate().map_err(|e| err(e.to_string()))?;
    Ok(record)
}

/// Reads every record of a store file.
pub fn load_log(path: &Path) -> Result<ForecastLog> {
    let reader = BufReader::new(File::open(path)?);
    let mut log = ForecastLog::new();
    let expected = header();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line != expected {
                return Err(Error::Store(format!("{} has an unexpected header", path.display())));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        log.insert(parse_record(&line, i + 1)?)?;
    }
    Ok(log)
}

/// Single writer over an append-only store file.
#[derive(Debug)]
pub struct PredictionStore {
    path: PathBuf,
    keys: HashSet<RecordKey>,
    file: File,
}

impl PredictionStore {
    /// Opens `path`, creating it with a header if missing or empty.
    pub fn open(path: &Path) -> Result<Self> {
        let existing = match std::fs::read(path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let mut keys = HashSet::new();
        if !existing.is_empty() {
            if existing.last() != Some(&b'\n') {
                return Err(Error::Store(format!("{} ends with a truncated line", path.display())));
            }
            keys = load_log(path)?.records().map(|r| r.key()).collect();
        }
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if existing.is_empty() {
            writeln!(file, "{}", header())?;
            file.flush()?;
        }
        Ok(Self { path: path.to_path_buf(), keys, file })
    }

    /// Store writing to an already open file, for exercising write failures.
    #[cfg(test)]
    pub(crate) fn from_file(path: &Path, file: File) -> Self {
        Self { path: path.to_path_buf(), keys: HashSet::new(), file }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn contains(&self, key: &RecordKey) -> bool {
        self.keys.contains(key)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Appends `records` in order. Nothing is written if any record is
    /// invalid or already present.
    pub fn append(&mut self, records: &[ForecastRecord]) -> Result<usize> {
        let mut batch = HashSet::new();
        for r in records {
            r.validate()?;
            let key = r.key();
            if self.keys.contains(&key) || !batch.insert(key) {
                return Err(Error::Duplicate(key.to_string()));
            }
        }
        let mut buf = String::new();
        for r in records {
            buf.push_str(&format_record(r));
            buf.push('\n');
        }
        self.file
            .write_all(buf.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| Error::Store(format!("writing {}: {e}", self.path.display())))?;
        self.keys.extend(batch);
        Ok(records.len())
    }
}
