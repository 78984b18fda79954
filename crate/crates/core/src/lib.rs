//! Hourly emergency department arrivals and occupancy forecasting with
//! seasonal Holt-Winters models, plus tools to judge the forecasts as a
//! crowding early-warning signal.

pub mod crowding;
pub mod error;
pub mod ets;
pub mod metrics;
pub mod optim;
pub mod series;
pub mod service;
pub mod sim;

pub use error::{Error, Result};
pub use ets::{EtsConfig, EtsModel, EtsParams, EtsState, ModelKind};
pub use series::{CrowdingConfig, Target, TimeSeries};
