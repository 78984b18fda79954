//! Holt-Winters seasonal exponential smoothing.
//!
//! Three variants share one recurrence: additive seasonality (AHWM),
//! multiplicative seasonality (MHWM) and additive seasonality with a damped
//! trend (HWDM). Smoothing parameters are chosen by minimizing the one-step
//! squared error, which is the Gaussian maximum-likelihood estimate for an
//! additive error term.

mod filter;
mod fit;
mod init;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{format_timestamp, TimeSeries};

pub use filter::{filter, filter_sse, FilterOutput};
pub use fit::{fit, fit_with, FitOptions};
pub use init::init_state;

/// Hours per daily cycle.
pub const DEFAULT_PERIOD: usize = 24;

/// Lower bound for multiplicative seasonal indices and level-plus-trend
/// denominators. Hours with zero counts would otherwise zero out an index.
pub const MULTIPLICATIVE_FLOOR: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "AHWM")]
    Additive,
    #[serde(rename = "MHWM")]
    Multiplicative,
    #[serde(rename = "HWDM")]
    Damped,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Additive, ModelKind::Damped, ModelKind::Multiplicative];

    pub fn id(&self) -> &'static str {
        match self {
            ModelKind::Additive => "AHWM",
            ModelKind::Multiplicative => "MHWM",
            ModelKind::Damped => "HWDM",
        }
    }

    pub fn is_multiplicative(&self) -> bool {
        matches!(self, ModelKind::Multiplicative)
    }

    pub fn is_damped(&self) -> bool {
        matches!(self, ModelKind::Damped)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "AHWM" => Ok(ModelKind::Additive),
            "MHWM" => Ok(ModelKind::Multiplicative),
            // both abbreviations of the damped variant are in circulation
            "HWDM" | "DHWM" => Ok(ModelKind::Damped),
            other => Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EtsConfig {
    pub kind: ModelKind,
    /// Seasonal period in hours.
    pub period: usize,
    /// Hours between full refits; states are filtered forward in between.
    pub refit_cadence: u32,
}

impl EtsConfig {
    pub fn new(kind: ModelKind) -> Self {
        Self { kind, period: DEFAULT_PERIOD, refit_cadence: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.period < 2 {
            return Err(Error::InvalidArgument(format!("seasonal period {} < 2", self.period)));
        }
        if self.refit_cadence == 0 {
            return Err(Error::InvalidArgument("refit cadence must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtsParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Trend damping. 1 for the undamped variants.
    pub phi: f64,
}

impl EtsParams {
    pub const PHI_MIN: f64 = 0.8;
    pub const PHI_MAX: f64 = 0.999;

    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma, phi: 1.0 }
    }

    pub fn damped(alpha: f64, beta: f64, gamma: f64, phi: f64) -> Self {
        Self { alpha, beta, gamma, phi }
    }

    /// Checks the closed bounds. The filter also accepts `phi = 1` for the
    /// damped variant, which collapses it onto the additive one.
    pub fn validate(&self, kind: ModelKind) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} = {v} outside [0, 1]")));
            }
        }
        let phi_ok = if kind.is_damped() { (Self::PHI_MIN..=1.0).contains(&self.phi) } else { self.phi == 1.0 };
        if !phi_ok {
            return Err(Error::InvalidArgument(format!("phi = {} invalid for {kind}", self.phi)));
        }
        Ok(())
    }
}

/// Level, trend and the last `m` seasonal terms, most recent last.
#[derive(Debug, Clone, PartialEq)]
pub struct EtsState {
    pub level: f64,
    pub trend: f64,
    pub seasonal: Vec<f64>,
}

/// A fitted model positioned just before `train_end`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtsModel {
    pub config: EtsConfig,
    pub params: EtsParams,
    pub state: EtsState,
    /// First hour not covered by the training data; the next forecast starts here.
    pub train_end: DateTime<Utc>,
    pub sse: f64,
    /// Number of one-step errors in `sse`.
    pub n_train: usize,
    pub converged: bool,
}

impl EtsModel {
    /// Point forecasts for the next `horizon` hours, clamped at zero.
    pub fn forecast(&self, horizon: usize) -> Result<Vec<f64>> {
        forecast_state(self.config.kind, &self.params, &self.state, horizon)
    }

    /// Filters the observations in `series` from `train_end` onward with the
    /// fitted parameters, moving the state to the end of `series`.
    pub fn advance(&self, series: &TimeSeries) -> Result<EtsModel> {
        let offset = crate::series::hours_between(&series.start(), &self.train_end);
        if offset < 0 {
            return Err(Error::InvalidArgument(format!(
                "series starts {} after the model end {}",
                format_timestamp(&series.start()),
                format_timestamp(&self.train_end)
            )));
        }
        let from = offset as usize;
        if from > series.len() {
            return Err(Error::InvalidArgument(format!(
                "series ends {} before the model end {}",
                format_timestamp(&series.end()),
                format_timestamp(&self.train_end)
            )));
        }
        let run = filter::run(
            self.config.kind,
            &self.params,
            self.state.clone(),
            &series.values()[from..],
            self.train_end,
            false,
        )?;
        Ok(EtsModel {
            state: run.terminal,
            train_end: series.end(),
            sse: self.sse + run.sse,
            n_train: self.n_train + run.n_errors,
            ..self.clone()
        })
    }

    /// Timestamp the `h`-step forecast refers to (`h` starts at 1).
    pub fn target_hour(&self, h: usize) -> DateTime<Utc> {
        self.train_end + Duration::hours(h as i64 - 1)
    }
}

/// Point forecasts from an explicit state.
///
/// Horizon `h` uses the seasonal term from one period earlier, i.e. the
/// `(h - 1)`-th entry of the most-recent-last seasonal vector.
pub fn forecast_state(kind: ModelKind, params: &EtsParams, state: &EtsState, horizon: usize) -> Result<Vec<f64>> {
    let m = state.seasonal.len();
    if horizon == 0 || horizon > m {
        return Err(Error::InvalidArgument(format!("horizon {horizon} outside 1..={m}")));
    }
    let mut damp_sum = 0.0;
    let mut damp_pow = 1.0;
    let mut out = Vec::with_capacity(horizon);
    for h in 1..=horizon {
        damp_pow *= params.phi;
        damp_sum += damp_pow;
        let season = state.seasonal[(h - 1) % m];
        let value = match kind {
            ModelKind::Additive | ModelKind::Damped => state.level + damp_sum * state.trend + season,
            ModelKind::Multiplicative => (state.level + damp_sum * state.trend) * season,
        };
        out.push(value.max(0.0));
    }
    Ok(out)
}
