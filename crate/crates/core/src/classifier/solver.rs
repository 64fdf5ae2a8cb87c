//! Dual coordinate descent for the L2-regularized L2-loss linear SVM
//!
//! ```text
//! min_w  1/2 |w|^2 + C * sum_i max(0, 1 - y_i w.x_i)^2
//! ```
//!
//! solved through its dual
//!
//! ```text
//! min_a  1/2 a^T (Q + D) a - e^T a,   a_i >= 0,
//! Q_ij = y_i y_j x_i.x_j,   D = I / (2C)
//! ```
//!
//! one variable at a time, keeping `w = sum_i a_i y_i x_i` up to date.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::TrainConfig;
use crate::error::{Error, Result};
use crate::featurizer::FeatureVector;

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    /// Length `dim`, plus one trailing bias weight when the bias is enabled.
    pub weights: Vec<f64>,
    pub alpha: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

struct Problem<'a> {
    data: &'a [FeatureVector],
    y: &'a [f64],
    dim: usize,
    bias: bool,
    diag: f64,
}

impl Problem<'_> {
    fn margin(&self, i: usize, w: &[f64]) -> f64 {
        let mut s = self.data[i].dot(w);
        if self.bias {
            s += w[self.dim];
        }
        self.y[i] * s
    }

    fn gradient(&self, i: usize, w: &[f64], alpha: &[f64]) -> f64 {
        self.margin(i, w) - 1.0 + self.diag * alpha[i]
    }

    #[cfg(debug_assertions)]
    fn dual_objective(&self, w: &[f64], alpha: &[f64]) -> f64 {
        let wnorm: f64 = w.iter().map(|v| v * v).sum();
        let a2: f64 = alpha.iter().map(|a| a * a).sum();
        let a1: f64 = alpha.iter().sum();
        0.5 * wnorm + 0.5 * self.diag * a2 - a1
    }
}

fn projected(gradient: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        gradient.min(0.0)
    } else {
        gradient
    }
}

/// Trains one binary problem. `polarity[i]` must be `+1.0` or `-1.0`.
pub fn solve_binary_dual_cd(
    data: &[FeatureVector],
    polarity: &[f64],
    config: &TrainConfig,
) -> Result<BinarySolution> {
    config.validate()?;
    let first = data.first().ok_or(Error::EmptyTrainingSet)?;
    if polarity.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            found: polarity.len(),
        });
    }
    if polarity.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::Config("polarity must be +1 or -1".into()));
    }
    let dim = first.dim;
    for x in data {
        if x.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.dim,
            });
        }
        if !x.is_finite() {
            return Err(Error::NonFinite);
        }
    }

    let problem = Problem {
        data,
        y: polarity,
        dim,
        bias: config.bias,
        diag: 0.5 / config.cost,
    };
    let n = data.len();
    let bias_sq = if config.bias { 1.0 } else { 0.0 };
    let qd: Vec<f64> = data
        .iter()
        .map(|x| x.norm_sq() + bias_sq + problem.diag)
        .collect();
    let mut w = vec![0.0; dim + usize::from(config.bias)];
    let mut alpha = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut iterations = 0;
    let mut converged = false;
    #[cfg(debug_assertions)]
    let mut last_objective: f64 = 0.0;
    while iterations < config.max_outer_iters {
        order.shuffle(&mut rng);
        let mut max_violation: f64 = 0.0;
        for &i in &order {
            let g = problem.gradient(i, &w, &alpha);
            let pg = projected(g, alpha[i]);
            max_violation = max_violation.max(pg.abs());
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / qd[i]).max(0.0);
                let step = (alpha[i] - old) * polarity[i];
                data[i].axpy(step, &mut w);
                if config.bias {
                    w[dim] += step;
                }
            }
        }
        iterations += 1;

        #[cfg(debug_assertions)]
        {
            let objective = problem.dual_objective(&w, &alpha);
            debug_assert!(
                objective <= last_objective + 1e-9 * last_objective.abs().max(1.0),
                "dual objective increased: {last_objective} -> {objective}"
            );
            last_objective = objective;
        }

        // Updates later in a pass shift the gradients seen earlier, so a
        // quiet pass is confirmed against the final weights.
        if max_violation < config.eps
            && (0..n).all(|i| projected(problem.gradient(i, &w, &alpha), alpha[i]).abs() < config.eps)
        {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "dual coordinate descent stopped after {} passes without reaching eps={}",
            iterations,
            config.eps
        );
    }
    Ok(BinarySolution {
        weights: w,
        alpha,
        iterations,
        converged,
    })
}

/// `1/2 |w|^2 + C * sum_i max(0, 1 - y_i w.x_i)^2`, bias included in `w`.
pub fn primal_objective(data: &[FeatureVector], polarity: &[f64], weights: &[f64], cost: f64) -> f64 {
    let dim = data.first().map_or(weights.len(), |x| x.dim);
    let bias = weights.get(dim).copied().unwrap_or(0.0);
    let loss: f64 = data
        .iter()
        .zip(polarity)
        .map(|(x, y)| {
            let slack = (1.0 - y * (x.dot(weights) + bias)).max(0.0);
            slack * slack
        })
        .sum();
    0.5 * weights.iter().map(|v| v * v).sum::<f64>() + cost * loss
}

/// Largest projected-gradient violation of a dual point.
pub fn max_projected_gradient(
    data: &[FeatureVector],
    polarity: &[f64],
    solution: &BinarySolution,
    config: &TrainConfig,
) -> f64 {
    let problem = Problem {
        data,
        y: polarity,
        dim: data.first().map_or(0, |x| x.dim),
        bias: config.bias,
        diag: 0.5 / config.cost,
    };
    (0..data.len())
        .map(|i| projected(problem.gradient(i, &solution.weights, &solution.alpha), solution.alpha[i]).abs())
        .fold(0.0, f64::max)
}
