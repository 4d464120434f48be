//! L2-regularized logistic regression.
//!
//! The objective is the summed logistic loss over labels in {-1, +1} plus
//! `lambda * ||w||^2`. The bias is not penalized. Features are z-scored with
//! statistics from the training data before fitting, and the fitted weights
//! live in that standardized space.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::Dataset;

/// Per-feature z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    /// Population statistics per column. Constant columns get std 1.
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mean: Vec<f64> = x.sum_axis(Axis(0)).iter().map(|s| s / n).collect();
        let std = x
            .axis_iter(Axis(1))
            .zip(&mean)
            .map(|(col, m)| {
                let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardization { mean, std }
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}

/// Both solvers are deterministic, full-batch and use Armijo backtracking;
/// they differ in the search direction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Newton direction from the exact Hessian.
    #[default]
    Newton,
    /// Negative gradient, with Barzilai-Borwein initial steps.
    GradientDescent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegOptions {
    /// Stop once the gradient's infinity norm falls to this value.
    pub tolerance: f64,
    pub max_iters: usize,
    #[serde(default)]
    pub solver: Solver,
}

impl Default for LogRegOptions {
    fn default() -> Self {
        LogRegOptions {
            tolerance: 1e-6,
            max_iters: 1000,
            solver: Solver::Newton,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    pub standardization: Standardization,
    /// Objective value at the returned weights.
    #[serde(default)]
    pub objective: f64,
    #[serde(default)]
    pub iterations: usize,
}

impl LinearModel {
    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    /// Linear score `w . x~ + b` on the standardized input.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        let s = &self.standardization;
        Ok(x.iter()
            .zip(&self.weights)
            .zip(s.mean.iter().zip(&s.std))
            .map(|((v, w), (m, sd))| w * (v - m) / sd)
            .sum::<f64>()
            + self.bias)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.decision(x)?))
    }

    pub fn predict_rows(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: x.ncols(),
            });
        }
        // Fold the standardization into the weights: w~_j = w_j / sd_j.
        let s = &self.standardization;
        let scaled: Array1<f64> = self
            .weights
            .iter()
            .zip(&s.std)
            .map(|(w, sd)| w / sd)
            .collect();
        let offset = self.bias
            - scaled
                .iter()
                .zip(&s.mean)
                .map(|(w, m)| w * m)
                .sum::<f64>();
        Ok(x.dot(&scaled).iter().map(|z| sigmoid(z + offset)).collect())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn check_dims(weights: &[f64], x: &ArrayView2<f64>, labels: &[f64]) -> Result<()> {
    if x.ncols() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            got: x.ncols(),
        });
    }
    if x.nrows() != labels.len() {
        return Err(Error::LengthMismatch(x.nrows(), labels.len()));
    }
    Ok(())
}

/// Regularized logistic loss. `labels` holds -1/+1; `x` is used as given.
pub fn logreg_objective(
    weights: &[f64],
    bias: f64,
    x: ArrayView2<f64>,
    labels: &[f64],
    lambda: f64,
) -> Result<f64> {
    check_dims(weights, &x, labels)?;
    let w = ArrayView1::from(weights);
    let margins = x.dot(&w);
    Ok(loss_from_margins(margins.view(), bias, labels) + lambda * w.dot(&w))
}

/// Analytic gradient of [`logreg_objective`]: `(d/dw, d/db)`.
pub fn logreg_gradient(
    weights: &[f64],
    bias: f64,
    x: ArrayView2<f64>,
    labels: &[f64],
    lambda: f64,
) -> Result<(Vec<f64>, f64)> {
    check_dims(weights, &x, labels)?;
    let w = ArrayView1::from(weights);
    let margins = x.dot(&w);
    let (gw, gb) = gradient_from_margins(x, margins.view(), bias, labels, w, lambda);
    Ok((gw.to_vec(), gb))
}

fn loss_from_margins(margins: ArrayView1<f64>, bias: f64, labels: &[f64]) -> f64 {
    margins
        .iter()
        .zip(labels)
        .map(|(z, y)| softplus(-y * (z + bias)))
        .sum()
}

/// `x' v`, accumulated row by row so a row-major `x` is read contiguously.
fn xt_dot(x: ArrayView2<f64>, v: &Array1<f64>) -> Array1<f64> {
    let mut out = Array1::<f64>::zeros(x.ncols());
    for (row, vi) in x.rows().into_iter().zip(v) {
        out.scaled_add(*vi, &row);
    }
    out
}

fn gradient_from_margins(
    x: ArrayView2<f64>,
    margins: ArrayView1<f64>,
    bias: f64,
    labels: &[f64],
    w: ArrayView1<f64>,
    lambda: f64,
) -> (Array1<f64>, f64) {
    // d/dz log(1 + exp(-y z)) = -y * sigmoid(-y z)
    let r: Array1<f64> = margins
        .iter()
        .zip(labels)
        .map(|(z, y)| -y * sigmoid(-y * (z + bias)))
        .collect();
    let gw = xt_dot(x, &r) + &(&w * (2.0 * lambda));
    (gw, r.sum())
}

/// Fits the model on `data`, standardizing features internally.
pub fn train_logreg(data: &Dataset, lambda: f64, options: &LogRegOptions) -> Result<LinearModel> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    data.check_trainable()?;
    let standardization = Standardization::fit(data.features.view());
    let xs = standardization.apply(data.features.view());
    let labels: Vec<f64> = data.labels.iter().map(|l| l.sign()).collect();
    let fit = match options.solver {
        Solver::Newton => newton(xs.view(), &labels, lambda, options),
        Solver::GradientDescent => gradient_descent(xs.view(), &labels, lambda, options),
    };
    Ok(LinearModel {
        weights: fit.weights.to_vec(),
        bias: fit.bias,
        lambda,
        standardization,
        objective: fit.objective,
        iterations: fit.iterations,
    })
}

struct Fit {
    weights: Array1<f64>,
    bias: f64,
    objective: f64,
    iterations: usize,
}

/// Gradient descent with Armijo backtracking. Trial steps start from the
/// Barzilai-Borwein estimate of the previous iteration.
fn gradient_descent(x: ArrayView2<f64>, labels: &[f64], lambda: f64, options: &LogRegOptions) -> Fit {
    const ARMIJO: f64 = 1e-4;
    let (n, d) = x.dim();
    let mut w = Array1::<f64>::zeros(d);
    let mut b = 0.0;
    let mut margins = Array1::<f64>::zeros(n);
    let mut f = loss_from_margins(margins.view(), b, labels);
    let (mut gw, mut gb) = gradient_from_margins(x, margins.view(), b, labels, w.view(), lambda);
    // Standardized columns have squared norm n, so this bounds the curvature.
    let mut step = 1.0 / (0.25 * n as f64 * (d as f64 + 1.0) + 2.0 * lambda);
    let mut iterations = 0;

    while iterations < options.max_iters {
        let gnorm_inf = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
        if gnorm_inf <= options.tolerance {
            break;
        }
        iterations += 1;
        let gsq = gw.dot(&gw) + gb * gb;
        let dir_margins = x.dot(&gw);
        let ww = w.dot(&w);
        let wg = w.dot(&gw);
        let gg = gw.dot(&gw);

        let mut accepted = None;
        let mut trial = step;
        for _ in 0..60 {
            let b_new = b - trial * gb;
            let loss: f64 = margins
                .iter()
                .zip(&dir_margins)
                .zip(labels)
                .map(|((z, dz), y)| softplus(-y * (z - trial * dz + b_new)))
                .sum();
            let penalty = lambda * (ww - 2.0 * trial * wg + trial * trial * gg);
            let f_new = loss + penalty;
            if f_new <= f - ARMIJO * trial * gsq {
                accepted = Some((trial, f_new));
                break;
            }
            trial *= 0.5;
        }
        let Some((alpha, f_new)) = accepted else {
            break;
        };

        let w_new = &w - &(&gw * alpha);
        let b_new = b - alpha * gb;
        margins.scaled_add(-alpha, &dir_margins);
        let (gw_new, gb_new) =
            gradient_from_margins(x, margins.view(), b_new, labels, w_new.view(), lambda);

        // BB1 step: s.s / s.y with s = -alpha g.
        let s_dot_s = alpha * alpha * gsq;
        let s_dot_y = -alpha * ((&gw_new - &gw).dot(&gw) + (gb_new - gb) * gb);
        step = if s_dot_y > 0.0 {
            s_dot_s / s_dot_y
        } else {
            alpha * 2.0
        };

        w = w_new;
        b = b_new;
        f = f_new;
        gw = gw_new;
        gb = gb_new;
    }

    // Recompute exactly rather than trusting the incrementally updated margins.
    let exact_margins = x.dot(&w);
    let objective = loss_from_margins(exact_margins.view(), b, labels) + lambda * w.dot(&w);
    Fit {
        weights: w,
        bias: b,
        objective,
        iterations,
    }
}

/// Damped Newton iterations. The Hessian of the summed loss is
/// `X' S X` with `S = diag(p (1 - p))`, plus `2 lambda` on the weight block.
fn newton(x: ArrayView2<f64>, labels: &[f64], lambda: f64, options: &LogRegOptions) -> Fit {
    const ARMIJO: f64 = 1e-4;
    let (n, d) = x.dim();
    let mut w = Array1::<f64>::zeros(d);
    let mut b = 0.0;
    let mut margins = Array1::<f64>::zeros(n);
    let mut f = loss_from_margins(margins.view(), b, labels);
    let mut iterations = 0;

    while iterations < options.max_iters {
        let (gw, gb) = gradient_from_margins(x, margins.view(), b, labels, w.view(), lambda);
        let gnorm_inf = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
        if gnorm_inf <= options.tolerance {
            break;
        }
        iterations += 1;

        let s: Vec<f64> = margins
            .iter()
            .map(|z| {
                let p = sigmoid(z + b);
                p * (1.0 - p)
            })
            .collect();
        let mut scaled = x.to_owned();
        for (mut row, si) in scaled.rows_mut().into_iter().zip(&s) {
            row *= si.sqrt();
        }
        let xtsx = scaled.t().dot(&scaled);
        let xts = xt_dot(x, &Array1::from(s.clone()));
        let mut h = Array2::<f64>::zeros((d + 1, d + 1));
        h.slice_mut(ndarray::s![..d, ..d]).assign(&xtsx);
        for j in 0..d {
            h[[j, j]] += 2.0 * lambda;
            h[[j, d]] = xts[j];
            h[[d, j]] = xts[j];
        }
        h[[d, d]] = s.iter().sum();
        let mut g = gw.to_vec();
        g.push(gb);
        let step = solve_spd(h, &g);
        // Descent direction is the negated solution.
        let dw = Array1::from_iter(step[..d].iter().map(|v| -v));
        let db = -step[d];
        let slope: f64 = g.iter().zip(&step).map(|(gi, si)| -gi * si).sum();
        if !(slope < 0.0) {
            break;
        }

        let dir_margins = x.dot(&dw);
        // Near the optimum the predicted decrease drops below the rounding
        // error of the summed loss and Armijo can no longer tell steps apart;
        // the full Newton step is then taken unchecked.
        let resolvable = -slope > 1e-11 * f.abs().max(1.0);
        let mut accepted = None;
        let mut alpha = 1.0;
        if !resolvable {
            let w_try = &w + &dw;
            let loss: f64 = margins
                .iter()
                .zip(&dir_margins)
                .zip(labels)
                .map(|((z, dz), y)| softplus(-y * (z + dz + b + db)))
                .sum();
            accepted = Some((1.0, loss + lambda * w_try.dot(&w_try)));
        }
        for _ in 0..60 {
            if accepted.is_some() {
                break;
            }
            let w_try = &w + &(&dw * alpha);
            let b_try = b + alpha * db;
            let loss: f64 = margins
                .iter()
                .zip(&dir_margins)
                .zip(labels)
                .map(|((z, dz), y)| softplus(-y * (z + alpha * dz + b_try)))
                .sum();
            let f_new = loss + lambda * w_try.dot(&w_try);
            if f_new <= f + ARMIJO * alpha * slope {
                accepted = Some((alpha, f_new));
                break;
            }
            alpha *= 0.5;
        }
        let Some((alpha, f_new)) = accepted else {
            break;
        };
        w.scaled_add(alpha, &dw);
        b += alpha * db;
        margins.scaled_add(alpha, &dir_margins);
        f = f_new;
    }

    let exact_margins = x.dot(&w);
    let objective = loss_from_margins(exact_margins.view(), b, labels) + lambda * w.dot(&w);
    Fit {
        weights: w,
        bias: b,
        objective,
        iterations,
    }
}

/// Solves `a x = rhs` for symmetric positive semi-definite `a`. A diagonal
/// jitter, growing tenfold, is added until the Cholesky factorization
/// succeeds; with `lambda = 0` and collinear columns the Hessian can be
/// singular.
fn solve_spd(a: Array2<f64>, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let a = nalgebra::DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
    let b = nalgebra::DVector::from_column_slice(rhs);
    let scale = a.diagonal().max().max(1.0);
    let mut jitter = 0.0;
    loop {
        let shifted = &a + nalgebra::DMatrix::<f64>::identity(n, n) * jitter;
        if let Some(chol) = shifted.cholesky() {
            return chol.solve(&b).iter().copied().collect();
        }
        jitter = if jitter == 0.0 { scale * 1e-12 } else { jitter * 10.0 };
    }
}
