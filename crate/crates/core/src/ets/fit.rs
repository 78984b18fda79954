use crate::error::Result;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::series::TimeSeries;

use super::filter::run;
use super::init::init_from_values;
use super::{EtsConfig, EtsModel, EtsParams, ModelKind};

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub optimizer: NelderMeadOptions,
    /// Seed point of the search.
    pub start: EtsParams,
    /// Also screen a fixed lattice of parameter points and start the simplex
    /// from whichever of those and `start` scores best.
    pub screen_lattice: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            optimizer: NelderMeadOptions::default(),
            start: EtsParams::damped(0.3, 0.05, 0.2, 0.95),
            screen_lattice: true,
        }
    }
}

const ALPHAS: [f64; 3] = [0.1, 0.5, 0.9];
const BETAS: [f64; 2] = [0.01, 0.2];
const GAMMAS: [f64; 3] = [0.05, 0.3, 0.7];
const PHIS: [f64; 2] = [0.9, 0.98];

fn bounds(kind: ModelKind) -> Vec<(f64, f64)> {
    let mut b = vec![(0.0, 1.0); 3];
    if kind.is_damped() {
        b.push((EtsParams::PHI_MIN, EtsParams::PHI_MAX));
    }
    b
}

fn to_params(kind: ModelKind, x: &[f64]) -> EtsParams {
    if kind.is_damped() {
        EtsParams::damped(x[0], x[1], x[2], x[3])
    } else {
        EtsParams::new(x[0], x[1], x[2])
    }
}

fn to_vec(kind: ModelKind, p: &EtsParams) -> Vec<f64> {
    let mut x = vec![p.alpha, p.beta, p.gamma];
    if kind.is_damped() {
        x.push(p.phi);
    }
    x
}

fn lattice(kind: ModelKind) -> Vec<Vec<f64>> {
    let phis: &[f64] = if kind.is_damped() { &PHIS } else { &[1.0] };
    let mut out = Vec::new();
    for &a in &ALPHAS {
        for &b in &BETAS {
            for &g in &GAMMAS {
                for &phi in phis {
                    out.push(to_vec(kind, &EtsParams::damped(a, b, g, phi)));
                }
            }
        }
    }
    out
}

/// Fits with the default search settings.
pub fn fit(series: &TimeSeries, config: &EtsConfig) -> Result<EtsModel> {
    fit_with(series, config, &FitOptions::default())
}

/// Chooses smoothing parameters minimizing the one-step SSE over `series`.
///
/// If the optimizer exhausts its budget the best point found is returned with
/// `converged = false`.
pub fn fit_with(series: &TimeSeries, config: &EtsConfig, opts: &FitOptions) -> Result<EtsModel> {
    config.validate()?;
    let kind = config.kind;
    let m = config.period;
    let init = init_from_values(series.values(), kind, m)?;
    let tail = &series.values()[2 * m..];
    let tail_start = series.timestamp(2 * m);

    let objective = |x: &[f64]| -> f64 {
        match run(kind, &to_params(kind, x), init.clone(), tail, tail_start, false) {
            Ok(r) => r.sse,
            Err(_) => f64::INFINITY,
        }
    };

    let mut start = to_vec(kind, &EtsParams { phi: if kind.is_damped() { opts.start.phi } else { 1.0 }, ..opts.start });
    if opts.screen_lattice {
        let mut best = objective(&start);
        for candidate in lattice(kind) {
            let f = objective(&candidate);
            if f < best {
                best = f;
                start = candidate;
            }
        }
    }

    let result = nelder_mead(objective, &start, &bounds(kind), &opts.optimizer)?;
    let params = to_params(kind, &result.x);
    let fitted = run(kind, &params, init, tail, tail_start, false)?;

    Ok(EtsModel {
        config: *config,
        params,
        state: fitted.terminal,
        train_end: series.end(),
        sse: fitted.sse,
        n_train: fitted.n_errors,
        converged: result.converged,
    })
}
