#![allow(dead_code)]

use chrono::{DateTime, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crowdcast::ets::{EtsParams, ModelKind, MULTIPLICATIVE_FLOOR};
use crowdcast::metrics::ScoredLabel;
use crowdcast::series::{Target, TimeSeries};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap()
}

pub fn ts(y: i32, mo: u32, d: u32, h: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(y, mo, d, h, 0, 0).unwrap()
}

pub fn series(target: Target, values: Vec<Option<u32>>) -> TimeSeries {
    TimeSeries::with_ceiling(target, t0(), values, u32::MAX).unwrap()
}

/// Noisy level + trend + daily cycle, rounded and kept at least 1.
pub fn noisy_seasonal(rng: &mut ChaCha8Rng, len: usize, m: usize) -> Vec<Option<u32>> {
    let level = rng.random_range(20.0..80.0);
    let slope = rng.random_range(-0.02..0.05);
    let amp = rng.random_range(5.0..0.6 * level);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let noise = Normal::new(0.0, rng.random_range(0.5..6.0)).unwrap();
    (0..len)
        .map(|t| {
            let angle = std::f64::consts::TAU * (t % m) as f64 / m as f64 + phase;
            let y = level + slope * t as f64 + amp * angle.sin() + noise.sample(rng);
            Some(y.round().max(1.0) as u32)
        })
        .collect()
}

pub fn random_params(rng: &mut ChaCha8Rng, kind: ModelKind, phi_range: (f64, f64)) -> EtsParams {
    let (a, b, g) = (rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>());
    if kind.is_damped() {
        EtsParams::damped(a, b, g, rng.random_range(phi_range.0..=phi_range.1))
    } else {
        EtsParams::new(a, b, g)
    }
}

/// Straightforward re-implementation of initialization plus the
/// error-correction recurrences, keeping the full seasonal history in a
/// vector indexed by time. Returns the one-step SSE.
pub fn naive_sse(y: &[Option<u32>], kind: ModelKind, p: &EtsParams, m: usize) -> f64 {
    let mult = kind == ModelKind::Multiplicative;
    let obs: Vec<f64> = y[..2 * m].iter().map(|v| v.unwrap() as f64).collect();
    let mean1: f64 = obs[..m].iter().sum::<f64>() / m as f64;
    let mean2: f64 = obs[m..].iter().sum::<f64>() / m as f64;
    let b0 = (mean2 - mean1) / m as f64;
    let c = (m as f64 - 1.0) / 2.0;

    let mut s = vec![0.0; y.len()];
    for i in 0..m {
        let d1 = mean1 + b0 * (i as f64 - c);
        let d2 = mean2 + b0 * (i as f64 - c);
        s[m + i] = if mult {
            (0.5 * (obs[i] / d1 + obs[m + i] / d2)).max(MULTIPLICATIVE_FLOOR)
        } else {
            0.5 * ((obs[i] - d1) + (obs[m + i] - d2))
        };
    }
    let avg: f64 = s[m..2 * m].iter().sum::<f64>() / m as f64;
    for v in &mut s[m..2 * m] {
        if mult {
            *v /= avg;
        } else {
            *v -= avg;
        }
    }

    let mut l = mean2 + b0 * c;
    let mut b = b0;
    let mut sse = 0.0;
    for t in 2 * m..y.len() {
        let lb = l + p.phi * b;
        let yhat = if mult { lb * s[t - m] } else { lb + s[t - m] };
        let yt = match y[t] {
            Some(v) => {
                let v = v as f64;
                sse += (v - yhat) * (v - yhat);
                v
            }
            None => yhat,
        };
        let l_new;
        if mult {
            l_new = p.alpha * yt / s[t - m] + (1.0 - p.alpha) * lb;
            s[t] = (p.gamma * yt / lb.max(MULTIPLICATIVE_FLOOR) + (1.0 - p.gamma) * s[t - m]).max(MULTIPLICATIVE_FLOOR);
        } else {
            l_new = p.alpha * (yt - s[t - m]) + (1.0 - p.alpha) * lb;
            s[t] = p.gamma * (yt - lb) + (1.0 - p.gamma) * s[t - m];
        }
        b = p.beta * (l_new - l) + (1.0 - p.beta) * p.phi * b;
        l = l_new;
    }
    sse
}

/// Fraction of (positive, negative) pairs ordered correctly, ties counted half.
pub fn pairwise_auc(items: &[ScoredLabel]) -> Option<f64> {
    let pos: Vec<f64> = items.iter().filter(|i| i.label).map(|i| i.score).collect();
    let neg: Vec<f64> = items.iter().filter(|i| !i.label).map(|i| i.score).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Some(wins / (pos.len() * neg.len()) as f64)
}

/// Random scored labels with deliberate ties.
pub fn random_scored(rng: &mut ChaCha8Rng, n: usize) -> Vec<ScoredLabel> {
    let coarse = rng.random_bool(0.5);
    (0..n)
        .map(|_| {
            let label = rng.random_bool(0.3);
            let raw: f64 = rng.random::<f64>() + if label { 0.3 } else { 0.0 };
            let score = if coarse { (raw * 10.0).floor() } else { raw };
            ScoredLabel { score, label }
        })
        .collect()
}
