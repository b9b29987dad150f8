//! C-SVM on a precomputed kernel, solved by sequential minimal optimization.
//!
//! The dual is written as a minimization,
//!
//! ```text
//! min_a  1/2 a^T Q a - e^T a   s.t.  y^T a = 0,  0 <= a_i <= C,
//! Q_ij = y_i y_j K_ij
//! ```
//!
//! Each iteration picks the maximal violating pair
//! `i = argmax_{t in I_up} -y_t g_t`, `j = argmin_{t in I_low} -y_t g_t` and
//! solves the two-variable subproblem exactly.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Curvature floor for pairs with `K_ii + K_jj - 2 K_ij <= 0`.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmParams {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { c: 1.0, tol: 1e-3, max_iter: 10_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub support_indices: Vec<usize>,
    /// Training labels, `+1.0` / `-1.0`.
    pub labels: Vec<f64>,
    pub iterations: usize,
    /// Final maximal KKT violation `m(a) - M(a)`.
    pub violation: f64,
}

impl SvmModel {
    /// Dual objective in maximization form, `e^T a - 1/2 a^T Q a`.
    pub fn dual_objective(&self, k: &DMatrix<f64>) -> f64 {
        dual_objective(k, &self.labels, &self.alphas)
    }

    pub fn decision_values(&self, k_cross: &DMatrix<f64>) -> Result<Vec<f64>> {
        decision_values(self, k_cross)
    }
}

pub fn dual_objective(k: &DMatrix<f64>, y: &[f64], alpha: &[f64]) -> f64 {
    let m = alpha.len();
    let mut quad = 0.0;
    for i in 0..m {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..m {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[(i, j)];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Trains on the square training kernel `k` and labels in `{-1, +1}`.
pub fn smo_train(k: &DMatrix<f64>, labels: &[i8], params: &SvmParams) -> Result<SvmModel> {
    let m = labels.len();
    if k.nrows() != m || k.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, got: k.nrows() });
    }
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::Config(format!("C must be positive, got {}", params.c)));
    }
    if !(params.tol > 0.0) {
        return Err(Error::Config(format!("tol must be positive, got {}", params.tol)));
    }
    if labels.iter().any(|&l| l != 1 && l != -1) {
        return Err(Error::invalid("labels must be -1 or +1"));
    }
    if !(labels.contains(&1) && labels.contains(&-1)) {
        return Err(Error::Degenerate("svm training needs both classes".into()));
    }
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("kernel matrix has non-finite entries"));
    }

    let c = params.c;
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let mut alpha = vec![0.0; m];
    // Gradient of the minimization objective: Q a - e.
    let mut grad = vec![-1.0; m];
    let up = |t: usize, a: &[f64]| (y[t] > 0.0 && a[t] < c) || (y[t] < 0.0 && a[t] > 0.0);
    let low = |t: usize, a: &[f64]| (y[t] > 0.0 && a[t] > 0.0) || (y[t] < 0.0 && a[t] < c);

    let mut iterations = 0;
    let violation = loop {
        let mut i = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut g_min = f64::INFINITY;
        for t in 0..m {
            let v = -y[t] * grad[t];
            if up(t, &alpha) && v > g_max {
                g_max = v;
                i = t;
            }
            if low(t, &alpha) && v < g_min {
                g_min = v;
                j = t;
            }
        }
        let gap = g_max - g_min;
        if i == usize::MAX || j == usize::MAX || gap < params.tol {
            break gap.max(0.0);
        }
        if iterations >= params.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                detail: format!("SMO stopped with KKT violation {gap:.3e} (tol {:.1e})", params.tol),
            });
        }
        iterations += 1;

        let (ai, aj) = (alpha[i], alpha[j]);
        let curvature = (k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)]).max(TAU);
        // Move along y_i d_i = -y_j d_j; step size in the direction that
        // closes the violation.
        let step = (g_max - g_min) / curvature;
        let (mut new_i, mut new_j) = (ai + y[i] * step, aj - y[j] * step);
        // Clip to the box while preserving y_i a_i + y_j a_j.
        let sum = y[i] * ai + y[j] * aj;
        clip_pair(&mut new_i, &mut new_j, y[i], y[j], sum, c);
        let (di, dj) = (new_i - ai, new_j - aj);
        alpha[i] = new_i;
        alpha[j] = new_j;
        for t in 0..m {
            grad[t] += y[t] * (y[i] * k[(t, i)] * di + y[j] * k[(t, j)] * dj);
        }
    };

    let bias = bias_from_gradient(&y, &alpha, &grad, c);
    let support_indices = (0..m).filter(|&t| alpha[t] > 0.0).collect();
    Ok(SvmModel { alphas: alpha, bias, c, support_indices, labels: y, iterations, violation })
}

/// Clips `(a_i, a_j)` onto `[0, C]^2 ∩ {y_i a_i + y_j a_j = sum}`.
fn clip_pair(ai: &mut f64, aj: &mut f64, yi: f64, yj: f64, sum: f64, c: f64) {
    // a_j = (sum - y_i a_i) / y_j = y_j (sum - y_i a_i); feasible a_i range:
    let (lo, hi) = if yi == yj {
        // a_i + a_j = y_i sum
        let s = yi * sum;
        ((s - c).max(0.0), s.min(c))
    } else {
        // a_i - a_j = y_i sum
        let d = yi * sum;
        (d.max(0.0), (c + d).min(c))
    };
    *ai = ai.clamp(lo, hi.max(lo));
    *aj = yj * (sum - yi * *ai);
    *aj = aj.clamp(0.0, c);
}

/// `b = -rho`, with `rho` the mean of `y_t g_t` over free variables, or the
/// midpoint of the feasible interval when none are free.
fn bias_from_gradient(y: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..y.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg)
            } else {
                lb = lb.max(yg)
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg)
            } else {
                lb = lb.max(yg)
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { 0.5 * (ub + lb) };
    -rho
}

/// `f(x) = sum_i a_i y_i K(x, x_i) + b` for each row of the
/// `test × train` block.
pub fn decision_values(model: &SvmModel, k_cross: &DMatrix<f64>) -> Result<Vec<f64>> {
    let m = model.alphas.len();
    if k_cross.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, got: k_cross.ncols() });
    }
    Ok((0..k_cross.nrows())
        .map(|r| {
            model.support_indices.iter().map(|&i| model.alphas[i] * model.labels[i] * k_cross[(r, i)]).sum::<f64>()
                + model.bias
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_kernel(xs: &[Vec<f64>]) -> DMatrix<f64> {
        DMatrix::from_fn(xs.len(), xs.len(), |i, j| xs[i].iter().zip(&xs[j]).map(|(a, b)| a * b).sum())
    }

    #[test]
    fn two_point_closed_form() {
        // x = -1 (class -1) and x = +1 (class +1), linear kernel.
        // Hard-margin solution: w = 1, b = 0, alpha = 1/2 each.
        let xs = vec![vec![-1.0], vec![1.0]];
        let k = linear_kernel(&xs);
        let model = smo_train(&k, &[-1, 1], &SvmParams { c: 10.0, tol: 1e-10, ..Default::default() }).unwrap();
        assert_eq!(model.support_indices, vec![0, 1]);
        assert!((model.alphas[0] - 0.5).abs() < 1e-9);
        assert!(model.bias.abs() < 1e-9);
        // Midpoint x = 0 has kernel profile [0, 0]: decision value equals the bias.
        let probe = DMatrix::from_row_slice(1, 2, &[0.0, 0.0]);
        assert!(model.decision_values(&probe).unwrap()[0].abs() < 1e-9);
    }

    #[test]
    fn equidistant_probe_returns_bias() {
        let xs = vec![vec![-1.0], vec![1.0]];
        let model =
            smo_train(&linear_kernel(&xs), &[-1, 1], &SvmParams { c: 10.0, tol: 1e-10, ..Default::default() }).unwrap();
        let probe = DMatrix::from_row_slice(1, 2, &[0.3, 0.3]);
        assert!((model.decision_values(&probe).unwrap()[0] - model.bias).abs() < 1e-12);
    }

    #[test]
    fn zero_block_gives_bias() {
        let xs = vec![vec![-1.0, 0.5], vec![1.0, 0.2], vec![0.8, 1.0]];
        let model = smo_train(&linear_kernel(&xs), &[-1, 1, 1], &SvmParams::default()).unwrap();
        let zeros = DMatrix::zeros(4, 3);
        assert!(model.decision_values(&zeros).unwrap().iter().all(|&v| v == model.bias));
    }

    #[test]
    fn training_block_consistency() {
        let xs = vec![vec![-1.0, 0.5], vec![1.0, 0.2], vec![0.8, 1.0], vec![-0.3, -0.9]];
        let k = linear_kernel(&xs);
        let model = smo_train(&k, &[-1, 1, 1, -1], &SvmParams::default()).unwrap();
        let a = model.decision_values(&k).unwrap();
        let b = decision_values(&model, &k.clone()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_checks() {
        let k = DMatrix::identity(2, 2);
        assert!(smo_train(&k, &[1, -1, 1], &SvmParams::default()).is_err());
        assert!(smo_train(&k, &[1, 1], &SvmParams::default()).is_err());
        let model = smo_train(&k, &[1, -1], &SvmParams::default()).unwrap();
        assert!(model.decision_values(&DMatrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn iteration_cap_reports_violation() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![(i as f64).sin(), (i as f64 * 0.7).cos()]).collect();
        let y: Vec<i8> = (0..10).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let err = smo_train(&linear_kernel(&xs), &y, &SvmParams { c: 100.0, tol: 1e-12, max_iter: 1 });
        assert!(matches!(err, Err(Error::NonConvergence { .. })));
    }
}
