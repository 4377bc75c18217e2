//! Minimizing the horizon-sweep bound over the piecewise-linear generator
//! family with a derivative-free simplex search plus random restarts.
//!
//! Every candidate generator yields a sound upper bound, so optimizer
//! quality only affects tightness: the returned value is the best bound
//! seen across all evaluations, never worse than the first candidate's.

use super::{horizon_sweep, Task};
use crate::divergence::{piecewise_linear_family, FGenerator, PiecewiseLinearF};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    pub initial_step: f64,
    pub spread_tolerance: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iterations: 250,
            initial_step: 0.5,
            spread_tolerance: 1e-7,
        }
    }
}

/// Standard Nelder-Mead simplex descent. Returns the best point seen.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut objective: F,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> (Vec<f64>, f64) {
    let dim = x0.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut p = x0.to_vec();
        p[i] += opts.initial_step;
        simplex.push(p);
    }
    let mut scores: Vec<f64> = simplex.iter().map(|p| objective(p)).collect();

    for _ in 0..opts.max_iterations {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| {
            scores[a]
                .partial_cmp(&scores[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];
        if (scores[worst] - scores[best]).abs() < opts.spread_tolerance {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for &idx in order[..dim].iter() {
            for d in 0..dim {
                centroid[d] += simplex[idx][d];
            }
        }
        centroid.iter_mut().for_each(|c| *c /= dim as f64);

        let blend = |a: &[f64], b: &[f64], w: f64| -> Vec<f64> {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x + w * (x - y))
                .collect()
        };

        let reflected = blend(&centroid, &simplex[worst], alpha);
        let score_r = objective(&reflected);
        if score_r < scores[best] {
            let expanded = blend(&centroid, &simplex[worst], gamma);
            let score_e = objective(&expanded);
            if score_e < score_r {
                simplex[worst] = expanded;
                scores[worst] = score_e;
            } else {
                simplex[worst] = reflected;
                scores[worst] = score_r;
            }
        } else if score_r < scores[second_worst] {
            simplex[worst] = reflected;
            scores[worst] = score_r;
        } else {
            let contracted = blend(&centroid, &simplex[worst], -rho);
            let score_c = objective(&contracted);
            if score_c < scores[worst] {
                simplex[worst] = contracted;
                scores[worst] = score_c;
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[best].clone();
                for idx in 0..=dim {
                    if idx == best {
                        continue;
                    }
                    for d in 0..dim {
                        simplex[idx][d] = anchor[d] + sigma * (simplex[idx][d] - anchor[d]);
                    }
                    scores[idx] = objective(&simplex[idx]);
                }
            }
        }
    }

    let mut best_idx = 0;
    for i in 1..=dim {
        if scores[i] < scores[best_idx] {
            best_idx = i;
        }
    }
    (simplex[best_idx].clone(), scores[best_idx])
}

/// Minimize the horizon-sweep bound over convex piecewise-linear generators
/// with `n_pieces` pieces, using `restarts` random initializations.
///
/// Returns the best generator and its bound. The bound of every candidate
/// is valid, so the result is sound regardless of how well the search does.
pub fn optimize_f<T: Task>(
    task: &T,
    n_pieces: usize,
    restarts: usize,
    rng_seed: u64,
) -> Result<(PiecewiseLinearF, f64)> {
    if n_pieces < 2 {
        return Err(Error::Domain(format!(
            "n_pieces = {n_pieces} must be at least 2"
        )));
    }
    if restarts == 0 {
        return Err(Error::Domain("need at least one restart".into()));
    }

    let objective = |params: &[f64]| -> f64 {
        match piecewise_linear_family(n_pieces, params) {
            Ok(f) => match horizon_sweep(task, &f) {
                Ok(report) => report.best_bound,
                Err(_) => f64::INFINITY,
            },
            Err(_) => f64::INFINITY,
        }
    };

    let mut best_params: Option<Vec<f64>> = None;
    let mut best_value = f64::INFINITY;

    for restart in 0..restarts {
        let mut rng = Rng::substream(rng_seed, restart as u64);
        let x0: Vec<f64> = if restart == 0 {
            // Deterministic first candidate: a gentle convex kink at 1.
            let mut v = vec![0.0; n_pieces];
            v[0] = -1.0;
            v
        } else {
            (0..n_pieces).map(|_| rng.normal()).collect()
        };
        let mut tracked_best = f64::INFINITY;
        let mut tracked_params = x0.clone();
        {
            let mut wrapped = |p: &[f64]| {
                let v = objective(p);
                if v < tracked_best {
                    tracked_best = v;
                    tracked_params = p.to_vec();
                }
                v
            };
            let _ = nelder_mead(&mut wrapped, &x0, &NelderMeadOptions::default());
        }
        if tracked_best < best_value {
            best_value = tracked_best;
            best_params = Some(tracked_params);
        }
    }

    let params =
        best_params.ok_or_else(|| Error::Domain("optimizer saw no finite candidate".into()))?;
    match piecewise_linear_family(n_pieces, &params)? {
        FGenerator::PiecewiseLinear(pl) => Ok((pl, best_value)),
        _ => unreachable!("family always builds the piecewise-linear variant"),
    }
}
