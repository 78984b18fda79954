use chrono::{DateTime, Duration, Utc};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

use super::init::init_from_values;
use super::{EtsConfig, EtsParams, EtsState, ModelKind, MULTIPLICATIVE_FLOOR};

/// Result of running the recurrences over a whole series.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub sse: f64,
    /// One-step errors counted in `sse`.
    pub n_errors: usize,
    /// State after the last slot of the series.
    pub terminal: EtsState,
    /// One-step errors aligned to the input; `None` in the initialization
    /// window and at gaps.
    pub residuals: Vec<Option<f64>>,
}

pub(crate) struct Run {
    pub sse: f64,
    pub n_errors: usize,
    pub terminal: EtsState,
    pub residuals: Vec<Option<f64>>,
}

/// Initializes from the first two seasons and filters the rest of `series`.
pub fn filter(series: &TimeSeries, config: &EtsConfig, params: &EtsParams) -> Result<FilterOutput> {
    config.validate()?;
    params.validate(config.kind)?;
    let m = config.period;
    let state = init_from_values(series.values(), config.kind, m)?;
    let run = run(config.kind, params, state, &series.values()[2 * m..], series.timestamp(2 * m), true)?;
    let mut residuals = vec![None; 2 * m];
    residuals.extend(run.residuals);
    Ok(FilterOutput { sse: run.sse, n_errors: run.n_errors, terminal: run.terminal, residuals })
}

/// One-step sum of squared errors and the terminal state.
pub fn filter_sse(series: &TimeSeries, config: &EtsConfig, params: &EtsParams) -> Result<(f64, EtsState)> {
    let out = filter(series, config, params)?;
    Ok((out.sse, out.terminal))
}

/// Runs the error-correction recurrences from `state` over `values`, the first
/// of which is observed at `first_ts`. A gap is treated as an observation equal
/// to its own prediction, so the state propagates without correction.
pub(crate) fn run(
    kind: ModelKind,
    params: &EtsParams,
    state: EtsState,
    values: &[Option<u32>],
    first_ts: DateTime<Utc>,
    keep_residuals: bool,
) -> Result<Run> {
    let EtsParams { alpha, beta, gamma, phi } = *params;
    let m = state.seasonal.len();
    let mut ring = state.seasonal;
    let mut head = 0usize;
    let mut level = state.level;
    let mut trend = state.trend;
    let mut sse = 0.0;
    let mut n_errors = 0usize;
    let mut residuals = Vec::with_capacity(if keep_residuals { values.len() } else { 0 });

    for (i, obs) in values.iter().enumerate() {
        let season = ring[head];
        let damped = phi * trend;
        let base = level + damped;
        let predicted = if kind.is_multiplicative() { base * season } else { base + season };
        let y = match obs {
            Some(v) => {
                let y = *v as f64;
                let e = y - predicted;
                sse += e * e;
                n_errors += 1;
                if keep_residuals {
                    residuals.push(Some(e));
                }
                y
            }
            None => {
                if keep_residuals {
                    residuals.push(None);
                }
                predicted
            }
        };

        let (new_level, new_season) = if kind.is_multiplicative() {
            let l = alpha * (y / season) + (1.0 - alpha) * base;
            let s = gamma * (y / base.max(MULTIPLICATIVE_FLOOR)) + (1.0 - gamma) * season;
            (l, s.max(MULTIPLICATIVE_FLOOR))
        } else {
            (alpha * (y - season) + (1.0 - alpha) * base, gamma * (y - base) + (1.0 - gamma) * season)
        };
        trend = beta * (new_level - level) + (1.0 - beta) * damped;
        level = new_level;
        ring[head] = new_season;
        head = (head + 1) % m;

        if !(level.is_finite() && trend.is_finite() && new_season.is_finite() && sse.is_finite()) {
            return Err(Error::NonFinite { at: first_ts + Duration::hours(i as i64) });
        }
    }

    let seasonal = (0..m).map(|i| ring[(head + i) % m]).collect();
    Ok(Run { sse, n_errors, terminal: EtsState { level, trend, seasonal }, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Target;
    use chrono::TimeZone;

    fn series(v: Vec<Option<u32>>) -> TimeSeries {
        TimeSeries::new(Target::Arrivals, Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap(), v).unwrap()
    }

    #[test]
    fn constant_series_zero_params() {
        let s = series(vec![Some(9); 100]);
        for kind in ModelKind::ALL {
            let params =
                if kind.is_damped() { EtsParams::damped(0.0, 0.0, 0.0, 0.9) } else { EtsParams::new(0.0, 0.0, 0.0) };
            let (sse, st) = filter_sse(&s, &EtsConfig::new(kind), &params).unwrap();
            assert!(sse < 1e-20, "{kind}: {sse}");
            assert!((st.level - 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_series_with_frozen_seasonality() {
        let p: Vec<u32> = (0..24).map(|h| 3 + (h * 7 % 11) as u32).collect();
        let s = series(p.iter().cycle().take(24 * 10).map(|v| Some(*v)).collect());
        let cfg = EtsConfig::new(ModelKind::Additive);
        let out = filter(&s, &cfg, &EtsParams::new(0.4, 0.2, 0.0)).unwrap();
        assert!(out.sse < 1e-18, "{}", out.sse);
        assert_eq!(out.n_errors, 24 * 8);
    }

    #[test]
    fn gaps_propagate_without_error_terms() {
        let mut v: Vec<Option<u32>> = (0..120).map(|t| Some(10 + (t % 24) as u32)).collect();
        v[70] = None;
        v[71] = None;
        let out = filter(&series(v), &EtsConfig::new(ModelKind::Additive), &EtsParams::new(0.3, 0.1, 0.2)).unwrap();
        assert_eq!(out.n_errors, 120 - 48 - 2);
        assert_eq!(out.residuals[70], None);
        assert!(out.residuals[72].is_some());
    }

    #[test]
    fn damped_with_unit_phi_is_additive() {
        let v: Vec<Option<u32>> = (0..200).map(|t| Some(((t * 37 + 11) % 29) as u32)).collect();
        let s = series(v);
        let p = EtsParams::new(0.31, 0.07, 0.22);
        let a = filter(&s, &EtsConfig::new(ModelKind::Additive), &p).unwrap();
        let d = filter(&s, &EtsConfig::new(ModelKind::Damped), &p).unwrap();
        assert_eq!(a, d);
    }

    #[test]
    fn non_finite_state_reports_timestamp() {
        let st = EtsState { level: f64::MAX, trend: f64::MAX, seasonal: vec![0.0; 24] };
        let err = run(
            ModelKind::Additive,
            &EtsParams::new(0.5, 0.5, 0.5),
            st,
            &[Some(1)],
            Utc.with_ymd_and_hms(2022, 3, 1, 5, 0, 0).unwrap(),
            false,
        );
        match err {
            Err(Error::NonFinite { at }) => assert_eq!(at, Utc.with_ymd_and_hms(2022, 3, 1, 5, 0, 0).unwrap()),
            _ => panic!("expected NonFinite"),
        }
    }
}
