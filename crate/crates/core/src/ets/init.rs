use crate::error::{Error, Result};
use crate::series::TimeSeries;

use super::{EtsState, ModelKind, MULTIPLICATIVE_FLOOR};

/// Heuristic starting state from the first two seasons.
///
/// The trend is the difference of the two season means divided by `m`. The
/// seasonal terms are per-slot deviations (or ratios) from the trend line
/// through each season mean, averaged over both seasons and renormalized to
/// sum 0 (or mean 1). The level is the trend line evaluated at the last hour
/// of the second season, so the returned state sits right after index `2m - 1`.
pub fn init_state(series: &TimeSeries, kind: ModelKind, period: usize) -> Result<EtsState> {
    init_from_values(series.values(), kind, period)
}

pub(crate) fn init_from_values(values: &[Option<u32>], kind: ModelKind, m: usize) -> Result<EtsState> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("seasonal period {m} < 2")));
    }
    if values.len() < 2 * m {
        return Err(Error::InsufficientData(format!(
            "initialization needs {} hours, series has {}",
            2 * m,
            values.len()
        )));
    }
    let mut head = Vec::with_capacity(2 * m);
    for (i, v) in values[..2 * m].iter().enumerate() {
        match v {
            Some(v) => head.push(*v as f64),
            None => return Err(Error::InsufficientData(format!("gap at hour {i} inside the initialization window"))),
        }
    }

    let mean1 = head[..m].iter().sum::<f64>() / m as f64;
    let mean2 = head[m..].iter().sum::<f64>() / m as f64;
    let trend = (mean2 - mean1) / m as f64;
    let centre = (m as f64 - 1.0) / 2.0;
    let line = |mean: f64, slot: usize| mean + trend * (slot as f64 - centre);

    let mut seasonal = vec![0.0; m];
    if kind.is_multiplicative() {
        if mean1 <= 0.0 || mean2 <= 0.0 {
            return Err(Error::Multiplicative("a season in the initialization window has zero mean".into()));
        }
        for (i, s) in seasonal.iter_mut().enumerate() {
            let (d1, d2) = (line(mean1, i), line(mean2, i));
            if d1 <= 0.0 || d2 <= 0.0 {
                return Err(Error::Multiplicative(format!("non-positive detrended base at slot {i}")));
            }
            *s = (0.5 * (head[i] / d1 + head[m + i] / d2)).max(MULTIPLICATIVE_FLOOR);
        }
        let mean = seasonal.iter().sum::<f64>() / m as f64;
        seasonal.iter_mut().for_each(|s| *s /= mean);
    } else {
        for (i, s) in seasonal.iter_mut().enumerate() {
            *s = 0.5 * ((head[i] - line(mean1, i)) + (head[m + i] - line(mean2, i)));
        }
        let mean = seasonal.iter().sum::<f64>() / m as f64;
        seasonal.iter_mut().for_each(|s| *s -= mean);
    }

    Ok(EtsState { level: mean2 + trend * centre, trend, seasonal })
}
