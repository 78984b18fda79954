//! Bounded Nelder-Mead simplex search.
//!
//! Each coordinate is mapped through a scaled logistic so the simplex moves
//! in an unbounded space while every evaluated point stays inside its box.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Stop once `f_worst - f_best < ftol * max(1, |f_best|)`.
    pub ftol: f64,
    /// Evaluation budget per dimension.
    pub max_evals_per_dim: usize,
    /// Initial simplex edge in the unbounded coordinates.
    pub initial_step: f64,
    /// Restarts from the incumbent after convergence.
    pub max_restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { ftol: 1e-8, max_evals_per_dim: 500, initial_step: 0.5, max_restarts: 4 }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

// Keeps starts strictly inside the box so the logit stays finite.
const EDGE: f64 = 1e-6;

struct BoxMap<'a> {
    bounds: &'a [(f64, f64)],
}

impl BoxMap<'_> {
    fn to_unbounded(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.bounds)
            .map(|(&v, &(lo, hi))| {
                let p = ((v - lo) / (hi - lo)).clamp(EDGE, 1.0 - EDGE);
                (p / (1.0 - p)).ln()
            })
            .collect()
    }

    fn to_bounded(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(self.bounds).map(|(&v, &(lo, hi))| lo + (hi - lo) / (1.0 + (-v).exp())).collect()
    }
}

/// Minimizes `objective` inside `bounds` starting from `start`.
///
/// Non-finite objective values away from the start are treated as `+inf`.
pub fn nelder_mead<F>(
    mut objective: F,
    start: &[f64],
    bounds: &[(f64, f64)],
    opts: &NelderMeadOptions,
) -> Result<NelderMeadResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let k = start.len();
    if k == 0 || bounds.len() != k {
        return Err(Error::InvalidArgument(format!("start has {k} coordinates but {} bounds given", bounds.len())));
    }
    if let Some((lo, hi)) = bounds.iter().find(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
        return Err(Error::InvalidArgument(format!("bad bound [{lo}, {hi}]")));
    }

    let map = BoxMap { bounds };
    let budget = opts.max_evals_per_dim * k;
    let mut evals = 0usize;
    let mut eval = |u: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let fx = objective(&map.to_bounded(u));
        if fx.is_finite() {
            fx
        } else {
            f64::INFINITY
        }
    };

    let u0 = map.to_unbounded(start);
    let f0 = eval(&u0, &mut evals);
    if !f0.is_finite() {
        return Err(Error::InvalidArgument("objective is not finite at the start point".into()));
    }

    let mut best = (u0, f0);
    let mut converged = false;
    for _ in 0..=opts.max_restarts {
        let (u, fx, done) = run_simplex(&mut eval, &mut evals, best.clone(), budget, opts);
        let improved = best.1 - fx > opts.ftol * best.1.abs().max(1.0);
        if fx < best.1 {
            best = (u, fx);
        }
        converged = done;
        if !done || !improved {
            break;
        }
    }

    Ok(NelderMeadResult { x: map.to_bounded(&best.0), fx: best.1, evaluations: evals, converged })
}

fn run_simplex<E>(
    eval: &mut E,
    evals: &mut usize,
    (u0, f0): (Vec<f64>, f64),
    budget: usize,
    opts: &NelderMeadOptions,
) -> (Vec<f64>, f64, bool)
where
    E: FnMut(&[f64], &mut usize) -> f64,
{
    let k = u0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k + 1);
    simplex.push((u0.clone(), f0));
    for i in 0..k {
        let mut u = u0.clone();
        u[i] += opts.initial_step;
        let f = eval(&u, evals);
        simplex.push((u, f));
    }

    loop {
        // Stable sort keeps earlier vertices ahead on ties, so a flat objective
        // returns the start untouched.
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let f_best = simplex[0].1;
        let f_worst = simplex[k].1;
        if f_worst - f_best < opts.ftol * f_best.abs().max(1.0) {
            let (u, f) = simplex.swap_remove(0);
            return (u, f, true);
        }
        if *evals >= budget {
            let (u, f) = simplex.swap_remove(0);
            return (u, f, false);
        }

        let mut centroid = vec![0.0; k];
        for (u, _) in &simplex[..k] {
            for (c, v) in centroid.iter_mut().zip(u) {
                *c += v / k as f64;
            }
        }
        let toward = |coef: f64, from: &[f64]| -> Vec<f64> {
            centroid.iter().zip(from).map(|(c, w)| c + coef * (c - w)).collect()
        };

        let worst = simplex[k].0.clone();
        let reflected = toward(REFLECT, &worst);
        let f_reflected = eval(&reflected, evals);

        if f_reflected < f_best {
            let expanded = toward(EXPAND, &worst);
            let f_expanded = eval(&expanded, evals);
            simplex[k] = if f_expanded < f_reflected { (expanded, f_expanded) } else { (reflected, f_reflected) };
            continue;
        }
        if f_reflected < simplex[k - 1].1 {
            simplex[k] = (reflected, f_reflected);
            continue;
        }

        let outside = f_reflected < f_worst;
        let from = if outside { &reflected } else { &worst };
        let contracted: Vec<f64> = centroid.iter().zip(from).map(|(c, p)| c + CONTRACT * (p - c)).collect();
        let f_contracted = eval(&contracted, evals);
        let accept = if outside { f_contracted <= f_reflected } else { f_contracted < f_worst };
        if accept {
            simplex[k] = (contracted, f_contracted);
            continue;
        }

        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let u: Vec<f64> = anchor.iter().zip(&vertex.0).map(|(a, v)| a + SHRINK * (v - a)).collect();
            let f = eval(&u, evals);
            *vertex = (u, f);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_quadratic() {
        let r = nelder_mead(|x| (x[0] - 0.3).powi(2), &[0.5], &[(0.0, 1.0)], &NelderMeadOptions::default()).unwrap();
        assert!((r.x[0] - 0.3).abs() < 1e-4, "{:?}", r);
        assert!(r.converged);
    }

    #[test]
    fn two_dimensional_quadratic() {
        let f = |x: &[f64]| (x[0] - 0.2).powi(2) + 3.0 * (x[1] - 0.7).powi(2) + 0.5 * (x[0] - 0.2) * (x[1] - 0.7);
        let r = nelder_mead(f, &[0.5, 0.5], &[(0.0, 1.0), (0.0, 1.0)], &NelderMeadOptions::default()).unwrap();
        assert!((r.x[0] - 0.2).abs() < 1e-4 && (r.x[1] - 0.7).abs() < 1e-4, "{:?}", r);
    }

    #[test]
    fn flat_objective_returns_start() {
        let start = [0.3, 0.05, 0.2];
        let r = nelder_mead(|_| 4.0, &start, &[(0.0, 1.0); 3], &NelderMeadOptions::default()).unwrap();
        for (a, b) in r.x.iter().zip(start) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(r.converged);
    }

    #[test]
    fn iterates_stay_in_bounds() {
        let bounds = [(0.8, 0.999), (0.0, 1.0)];
        let r = nelder_mead(
            |x| {
                assert!(x[0] >= 0.8 && x[0] <= 0.999 && x[1] >= 0.0 && x[1] <= 1.0);
                -x[0] - x[1]
            },
            &[0.95, 0.5],
            &bounds,
            &NelderMeadOptions::default(),
        )
        .unwrap();
        assert!(r.x[0] > 0.99 && r.x[1] > 0.99);
    }

    #[test]
    fn rejects_non_finite_start() {
        assert!(nelder_mead(|_| f64::NAN, &[0.5], &[(0.0, 1.0)], &NelderMeadOptions::default()).is_err());
        assert!(nelder_mead(|_| 0.0, &[0.5], &[(1.0, 0.0)], &NelderMeadOptions::default()).is_err());
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let opts = NelderMeadOptions { max_evals_per_dim: 3, ..Default::default() };
        let r =
            nelder_mead(|x| (x[0] - 0.3).powi(2) + (x[1] - 0.6).powi(2), &[0.9, 0.1], &[(0.0, 1.0); 2], &opts).unwrap();
        assert!(!r.converged);
    }
}
