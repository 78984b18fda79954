//! Synthetic hourly ED arrivals and occupancy.
//!
//! Arrivals per hour are Poisson with an hour-of-day intensity scaled by a
//! weekday multiplier and a per-day lognormal busyness factor. Each patient
//! stays for a gamma-distributed length of stay. Occupancy for an hour counts
//! every patient present at any moment during that hour.

use std::path::Path;

use chrono::{DateTime, Datelike, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{is_hour_aligned, local_hour, Target, TimeSeries};

pub const MIN_DAYS: u32 = 14;

// Independent random streams derived from one seed.
const STREAM_DAYS: u64 = 1;
const STREAM_ARRIVALS: u64 = 2;
const STREAM_STAYS: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdProfile {
    /// Expected arrivals per local hour of day.
    pub hourly_intensity: [f64; 24],
    /// Monday first.
    pub weekday_multipliers: [f64; 7],
    pub los_mean_hours: f64,
    /// Coefficient of variation of the length of stay.
    pub los_dispersion: f64,
    /// Standard deviation of the log daily busyness factor, truncated at
    /// three standard deviations; 0 disables it.
    pub daily_variation: f64,
    pub capacity_soft: u32,
}

impl Default for EdProfile {
    fn default() -> Self {
        default_profile()
    }
}

/// Profile matching a large combined ED: about 2 arrivals an hour in the early
/// morning, a peak of about 13 at 16:00, and occupancy medians near 20 at the
/// morning trough and mid-70s around 17:00-18:00.
pub fn default_profile() -> EdProfile {
    EdProfile {
        hourly_intensity: [
            4.6, 3.6, 3.0, 2.5, 2.2, 2.0, 2.0, 2.7, 4.5, 7.0, 9.0, 10.5, //
            11.5, 12.3, 13.0, 13.4, 13.6, 13.0, 12.0, 10.6, 9.2, 7.8, 6.4, 5.4,
        ],
        weekday_multipliers: [1.0; 7],
        los_mean_hours: 5.5,
        los_dispersion: 0.5,
        daily_variation: 0.2,
        capacity_soft: 106,
    }
}

impl EdProfile {
    pub fn validate(&self) -> Result<()> {
        if self.hourly_intensity.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("hourly intensities must be finite and non-negative".into()));
        }
        if self.weekday_multipliers.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument("weekday multipliers must be positive".into()));
        }
        if !(self.los_mean_hours > 0.0 && self.los_dispersion > 0.0) {
            return Err(Error::InvalidArgument("length of stay mean and dispersion must be positive".into()));
        }
        if !(self.daily_variation >= 0.0 && self.daily_variation.is_finite()) {
            return Err(Error::InvalidArgument("daily variation must be non-negative".into()));
        }
        Ok(())
    }

    /// Reads a flat key-value (TOML) profile; omitted keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let profile: EdProfile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut p = self.clone();
        p.hourly_intensity.iter_mut().for_each(|v| *v *= factor);
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    /// First simulated hour (UTC).
    pub start: DateTime<Utc>,
    /// Offset of the local clock that drives the daily pattern.
    pub utc_offset_hours: i32,
}

impl Default for SimClock {
    fn default() -> Self {
        Self { start: Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap(), utc_offset_hours: 2 }
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub arrivals: TimeSeries,
    pub occupancy: TimeSeries,
    pub seed: u64,
}

pub fn simulate(profile: &EdProfile, days: u32, seed: u64) -> Result<Simulation> {
    simulate_with(profile, &SimClock::default(), days, seed)
}

pub fn simulate_with(profile: &EdProfile, clock: &SimClock, days: u32, seed: u64) -> Result<Simulation> {
    if days < MIN_DAYS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_DAYS} days, got {days}")));
    }
    if !is_hour_aligned(&clock.start) {
        return Err(Error::InvalidArgument("simulation start must be hour-aligned".into()));
    }
    profile.validate()?;

    let hours = days as usize * 24;
    let offset = Duration::hours(clock.utc_offset_hours as i64);

    let stream = |id: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id);
        rng
    };
    let mut day_rng = stream(STREAM_DAYS);
    let mut arrival_rng = stream(STREAM_ARRIVALS);
    let mut stay_rng = stream(STREAM_STAYS);

    let sigma = profile.daily_variation;
    let busyness = LogNormal::new(-sigma * sigma / 2.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    // truncate the day factor at three standard deviations in log space
    let (factor_lo, factor_hi) = ((-3.0 * sigma).exp(), (3.0 * sigma).exp());
    let shape = 1.0 / (profile.los_dispersion * profile.los_dispersion);
    let stay = Gamma::new(shape, profile.los_mean_hours / shape).map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let mut arrivals = vec![0u32; hours];
    // occupancy difference array: +1 on the arrival hour, -1 after the departure hour
    let mut delta = vec![0i64; hours + 1];
    let mut current_day = None;
    let mut day_factor = 1.0;

    for (t, slot) in arrivals.iter_mut().enumerate() {
        let utc = clock.start + Duration::hours(t as i64);
        let local = utc + offset;
        let day = local.date_naive();
        if current_day != Some(day) {
            current_day = Some(day);
            let weekday = profile.weekday_multipliers[local.weekday().num_days_from_monday() as usize];
            let noise = if sigma > 0.0 { busyness.sample(&mut day_rng).clamp(factor_lo, factor_hi) } else { 1.0 };
            day_factor = weekday * noise;
        }
        let lambda = profile.hourly_intensity[local_hour(&utc, clock.utc_offset_hours) as usize] * day_factor;
        let n = if lambda > 0.0 {
            Poisson::new(lambda).map_err(|e| Error::InvalidArgument(e.to_string()))?.sample(&mut arrival_rng) as u32
        } else {
            0
        };
        *slot = n;
        for _ in 0..n {
            let arrived = t as f64 + arrival_rng.random::<f64>();
            let left = arrived + stay.sample(&mut stay_rng);
            delta[t] += 1;
            let last_hour = (left.floor() as usize).min(hours - 1);
            delta[last_hour + 1] -= 1;
        }
    }

    let mut occupancy = Vec::with_capacity(hours);
    let mut present = 0i64;
    for d in &delta[..hours] {
        present += d;
        occupancy.push(Some(present as u32));
    }

    Ok(Simulation {
        arrivals: TimeSeries::with_ceiling(
            Target::Arrivals,
            clock.start,
            arrivals.into_iter().map(Some).collect(),
            u32::MAX,
        )?,
        occupancy: TimeSeries::with_ceiling(Target::Occupancy, clock.start, occupancy, u32::MAX)?,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn values(s: &TimeSeries) -> Vec<u32> {
        s.values().iter().map(|v| v.unwrap()).collect()
    }

    fn median(mut v: Vec<u32>) -> f64 {
        v.sort_unstable();
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2] as f64
        } else {
            (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
        }
    }

    fn by_local_hour(s: &TimeSeries, hour: u32, offset: i32) -> Vec<u32> {
        (0..s.len()).filter(|i| local_hour(&s.timestamp(*i), offset) == hour).map(|i| s.values()[i].unwrap()).collect()
    }

    #[test]
    fn default_profile_shape() {
        let p = default_profile();
        assert!(p.hourly_intensity[16] > p.hourly_intensity[6]);
        let peak = p.hourly_intensity.iter().cloned().fold(0.0, f64::max);
        assert_eq!(p.hourly_intensity[16], peak);
        for h in 5..=7 {
            assert!(p.hourly_intensity[h] <= p.hourly_intensity.iter().cloned().fold(f64::INFINITY, f64::min) + 1.0);
        }
        assert!(p.weekday_multipliers.iter().all(|m| *m > 0.0));
    }

    #[test]
    fn zero_intensity_is_empty() {
        let mut p = default_profile();
        p.hourly_intensity = [0.0; 24];
        let sim = simulate(&p, 14, 1).unwrap();
        assert!(values(&sim.arrivals).iter().all(|v| *v == 0));
        assert!(values(&sim.occupancy).iter().all(|v| *v == 0));
    }

    #[test]
    fn same_seed_same_series() {
        let a = simulate(&default_profile(), 20, 42).unwrap();
        let b = simulate(&default_profile(), 20, 42).unwrap();
        assert_eq!(a.arrivals, b.arrivals);
        assert_eq!(a.occupancy, b.occupancy);
        let c = simulate(&default_profile(), 20, 43).unwrap();
        assert_ne!(a.arrivals, c.arrivals);
    }

    #[test]
    fn occupancy_conservation() {
        let sim = simulate(&default_profile(), 60, 3).unwrap();
        let arr = values(&sim.arrivals);
        let occ = values(&sim.occupancy);
        assert!(occ[0] <= arr[0]);
        let mut cumulative = 0u64;
        for t in 1..occ.len() {
            assert!(occ[t] <= occ[t - 1] + arr[t], "hour {t}");
            cumulative += arr[t] as u64;
            // departures so far = arrivals so far - still present >= 0
            assert!(occ[t] as u64 <= cumulative + arr[0] as u64);
        }
    }

    #[test]
    fn too_few_days() {
        assert!(simulate(&default_profile(), 13, 1).is_err());
    }

    #[test]
    fn calibrated_medians() {
        let sim = simulate(&default_profile(), 365, 7).unwrap();
        let occ17 = median(by_local_hour(&sim.occupancy, 17, 2));
        assert!((64.0..=84.0).contains(&occ17), "occupancy median at 17: {occ17}");
        let arr16 = median(by_local_hour(&sim.arrivals, 16, 2));
        assert!((11.0..=15.0).contains(&arr16), "arrivals median at 16: {arr16}");
        let early: Vec<u32> = (5..=7).flat_map(|h| by_local_hour(&sim.arrivals, h, 2)).collect();
        assert!((1.0..=3.0).contains(&median(early)));
        let trough: Vec<u32> = (6..=8).flat_map(|h| by_local_hour(&sim.occupancy, h, 2)).collect();
        assert!((13.0..=33.0).contains(&median(trough)));
    }

    #[test]
    fn crowding_concentrates_in_the_afternoon() {
        let sim = simulate(&default_profile(), 365, 11).unwrap();
        let threshold = crate::series::quartile_threshold(&sim.occupancy, 0.75).unwrap();
        let mut late = 0;
        let mut total = 0;
        for (i, v) in sim.occupancy.values().iter().enumerate() {
            if v.unwrap() >= threshold {
                total += 1;
                if local_hour(&sim.occupancy.timestamp(i), 2) >= 14 {
                    late += 1;
                }
            }
        }
        assert!(late as f64 >= 0.9 * total as f64, "{late}/{total}");
    }

    #[test]
    fn doubling_intensity_doubles_occupancy() {
        let base = simulate(&default_profile(), 365, 5).unwrap();
        let double = simulate(&default_profile().scaled(2.0), 365, 5).unwrap();
        let mean = |s: &TimeSeries| values(s).iter().map(|v| *v as f64).sum::<f64>() / s.len() as f64;
        let ratio = mean(&double.occupancy) / mean(&base.occupancy);
        assert!((ratio - 2.0).abs() < 0.3, "{ratio}");
    }

    #[test]
    fn profile_from_toml() {
        let p = EdProfile::from_toml_str("los_mean_hours = 4.5\ncapacity_soft = 90\n").unwrap();
        assert_eq!(p.los_mean_hours, 4.5);
        assert_eq!(p.capacity_soft, 90);
        assert_eq!(p.hourly_intensity, default_profile().hourly_intensity);
        assert!(EdProfile::from_toml_str("bogus = 1\n").is_err());
        assert!(EdProfile::from_toml_str("los_mean_hours = -1.0\n").is_err());
    }
}
