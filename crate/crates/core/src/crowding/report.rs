use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::series::{format_timestamp, CrowdingConfig};

use super::{BinaryCell, ContinuousRow, CoverageRow, Phase};

/// File names written by [`EvalReport::write_dir`].
pub const REPORT_FILES: [&str; 6] = [
    "table1_continuous.csv",
    "table2_binary.csv",
    "coverage.csv",
    "figure_pffh.csv",
    "figure_pffo.csv",
    "threshold.csv",
];

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub crowding: CrowdingConfig,
    pub continuous: Vec<ContinuousRow>,
    pub pffh: Vec<BinaryCell>,
    pub pffo: Vec<BinaryCell>,
    pub coverage: Vec<CoverageRow>,
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn opt(v: Option<f64>) -> String {
    v.filter(|v| v.is_finite()).map(num).unwrap_or_default()
}

impl EvalReport {
    pub fn table1_csv(&self) -> String {
        let mut out = String::from("target,model,mae,mse,rmse,n_pairs\n");
        for r in &self.continuous {
            let _ =
                writeln!(out, "{},{},{},{},{},{}", r.target, r.model, num(r.mae), num(r.mse), num(r.rmse), r.n_pairs);
        }
        out
    }

    pub fn table2_csv(&self) -> String {
        let mut out = String::from("model,kind,index,auc,accuracy,sensitivity,specificity,f1,n,excluded\n");
        let mut cells: Vec<&BinaryCell> = self.pffh.iter().chain(&self.pffo).collect();
        cells.sort_by_key(|c| (c.model, c.phase, c.index));
        for c in cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                c.model,
                c.phase.as_str(),
                c.index,
                opt(c.auc),
                opt(c.metrics.accuracy),
                opt(c.metrics.sensitivity),
                opt(c.metrics.specificity),
                opt(c.metrics.f1),
                c.n,
                c.excluded
            );
        }
        out
    }

    pub fn coverage_csv(&self) -> String {
        let mut out = String::from("model,target,expected,present,missing,missing_fraction,longest_gap\n");
        for r in &self.coverage {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.model,
                r.target,
                r.expected,
                r.present,
                r.missing,
                num(r.missing_fraction),
                r.longest_gap
            );
        }
        out
    }

    /// Plot data for the accuracy / sensitivity / specificity / F1 panels:
    /// one row per (panel, index) with one column per model.
    pub fn figure_csv(&self, phase: Phase) -> String {
        let cells = match phase {
            Phase::Pffh => &self.pffh,
            Phase::Pffo => &self.pffo,
        };
        let mut models: Vec<_> = cells.iter().map(|c| c.model).collect();
        models.sort();
        models.dedup();
        let index_name = match phase {
            Phase::Pffh => "horizon",
            Phase::Pffo => "origin_hour",
        };
        let mut out = format!("panel,{index_name}");
        for m in &models {
            let _ = write!(out, ",{m}");
        }
        out.push('\n');

        type Pick = fn(&BinaryCell) -> Option<f64>;
        let panels: [(&str, Pick); 5] = [
            ("auc", |c| c.auc),
            ("accuracy", |c| c.metrics.accuracy),
            ("sensitivity", |c| c.metrics.sensitivity),
            ("specificity", |c| c.metrics.specificity),
            ("f1", |c| c.metrics.f1),
        ];
        let mut indices: Vec<u32> = cells.iter().map(|c| c.index).collect();
        indices.sort();
        indices.dedup();
        for (panel, pick) in panels {
            for &index in &indices {
                let _ = write!(out, "{panel},{index}");
                for m in &models {
                    let v = cells.iter().find(|c| c.model == *m && c.index == index).and_then(pick);
                    let _ = write!(out, ",{}", opt(v));
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn threshold_csv(&self) -> String {
        let (from, to) = &self.crowding.estimation_window;
        format!(
            "threshold,quantile,window_start,window_end\n{},{},{},{}\n",
            self.crowding.threshold,
            self.crowding.quantile,
            format_timestamp(from),
            format_timestamp(to)
        )
    }

    /// Number of AUC cells that are undefined (single-class cells).
    pub fn absent_auc_cells(&self) -> usize {
        self.pffh.iter().chain(&self.pffo).filter(|c| c.auc.is_none()).count()
    }

    /// Writes every table and figure file into `dir`, returning the paths.
    pub fn write_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let contents = [
            self.table1_csv(),
            self.table2_csv(),
            self.coverage_csv(),
            self.figure_csv(Phase::Pffh),
            self.figure_csv(Phase::Pffo),
            self.threshold_csv(),
        ];
        let mut paths = Vec::new();
        for (name, body) in REPORT_FILES.iter().zip(contents) {
            let path = dir.join(name);
            fs::write(&path, body)?;
            paths.push(path);
        }
        Ok(paths)
    }
}
