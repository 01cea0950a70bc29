//! Binary logistic regression with an L1 or L2 penalty.
//!
//! The objective is the mean negative log-likelihood plus `λ‖w‖₁` (L1) or
//! `λ/2 ‖w‖²` (L2); the intercept is not penalized. It is minimized with an
//! accelerated proximal-gradient method:
//!
//! - columns are centered implicitly, which changes only the intercept and
//!   leaves the penalty untouched;
//! - steps use a diagonal metric built from the column variances, scaled by a
//!   backtracked constant;
//! - momentum is dropped whenever it would raise the objective, so accepted
//!   iterates never increase it.
//!
//! Everything is sequential and deterministic.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;
use crate::sparse::CsrMatrix;

/// Regularization strengths tried during tuning.
pub const LAMBDA_GRID: [f64; 10] = [0.0, 1.0, 5.0, 10.0, 25.0, 50.0, 100.0, 250.0, 500.0, 1000.0];

#[derive(Debug, Error)]
pub enum GlmError {
    #[error("no training instances")]
    Empty,
    #[error("all training labels are equal and λ = 0: the optimum is unbounded")]
    SingleClass,
    #[error("non-finite value in column {col} of row {row}")]
    NonFinite { row: usize, col: usize },
    #[error("{rows} rows but {labels} labels")]
    Shape { rows: usize, labels: usize },
    #[error("invalid λ {0}")]
    Lambda(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Penalty {
    L2,
    L1,
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Penalty::L1 => "L1",
            Penalty::L2 => "L2",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    /// Stop once the objective changes by less than `tol * (1 + |F|)` on
    /// two consecutive iterations.
    pub tol: f64,
    pub max_iter: usize,
    /// Keep the objective value of every iterate.
    pub record_trace: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 10_000, record_trace: false }
    }
}

/// Raw optimizer output in column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub penalty: Penalty,
    pub lambda: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the starting point and after every iteration, when
    /// requested.
    pub trace: Vec<f64>,
}

impl Fit {
    pub fn linear(&self, x: &CsrMatrix, row: usize) -> f64 {
        self.intercept + x.row_dot(row, &self.coef)
    }

    pub fn predict_prob(&self, x: &CsrMatrix, row: usize) -> f64 {
        sigmoid(self.linear(x, row))
    }

    /// Predicted label; a probability of exactly 0.5 predicts 1.
    pub fn predict_label(&self, x: &CsrMatrix, row: usize) -> bool {
        self.linear(x, row) >= 0.0
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

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn penalty_value(penalty: Penalty, lambda: f64, w: &[f64]) -> f64 {
    match penalty {
        Penalty::L1 => lambda * w.iter().map(|v| v.abs()).sum::<f64>(),
        Penalty::L2 => 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>(),
    }
}

fn mean_nll(eta: &[f64], y: &[f64]) -> f64 {
    eta.iter().zip(y).map(|(&e, &t)| softplus(e) - t * e).sum::<f64>() / eta.len() as f64
}

fn labels_as_f64(y: &[bool]) -> Vec<f64> {
    y.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

/// Full objective at `(intercept, coef)`.
pub fn objective(x: &CsrMatrix, y: &[bool], intercept: f64, coef: &[f64], penalty: Penalty, lambda: f64) -> f64 {
    let eta: Vec<f64> = x.mul_vec(coef).into_iter().map(|v| v + intercept).collect();
    mean_nll(&eta, &labels_as_f64(y)) + penalty_value(penalty, lambda, coef)
}

/// Value and gradient of the mean negative log-likelihood plus
/// `l2/2 ‖coef‖²`. Returns `(value, d/d intercept, d/d coef)`.
pub fn loss_gradient(x: &CsrMatrix, y: &[bool], intercept: f64, coef: &[f64], l2: f64) -> (f64, f64, Vec<f64>) {
    let n = x.n_rows() as f64;
    let t = labels_as_f64(y);
    let eta: Vec<f64> = x.mul_vec(coef).into_iter().map(|v| v + intercept).collect();
    let value = mean_nll(&eta, &t) + penalty_value(Penalty::L2, l2, coef);
    let r: Vec<f64> = eta.iter().zip(&t).map(|(&e, &ti)| (sigmoid(e) - ti) / n).collect();
    let mut g = x.tr_mul_vec(&r);
    for (gj, wj) in g.iter_mut().zip(coef) {
        *gj += l2 * wj;
    }
    (value, r.iter().sum(), g)
}

fn validate(x: &CsrMatrix, y: &[bool], lambda: f64) -> Result<(), GlmError> {
    if x.n_rows() != y.len() {
        return Err(GlmError::Shape { rows: x.n_rows(), labels: y.len() });
    }
    if y.is_empty() {
        return Err(GlmError::Empty);
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(GlmError::Lambda(lambda));
    }
    for i in 0..x.n_rows() {
        let (idx, val) = x.row(i);
        if let Some(k) = val.iter().position(|v| !v.is_finite()) {
            return Err(GlmError::NonFinite { row: i, col: idx[k] as usize });
        }
    }
    if lambda == 0.0 && (y.iter().all(|&b| b) || y.iter().all(|&b| !b)) {
        return Err(GlmError::SingleClass);
    }
    Ok(())
}

struct Problem<'a> {
    x: &'a CsrMatrix,
    y: Vec<f64>,
    mean: Vec<f64>,
    // diagonal metric: intercept first, then coefficients
    h: Vec<f64>,
    penalty: Penalty,
    lambda: f64,
}

impl<'a> Problem<'a> {
    fn new(x: &'a CsrMatrix, y: &[bool], penalty: Penalty, lambda: f64) -> Self {
        let n = x.n_rows() as f64;
        let (mean, var) = x.column_moments();
        let scale = if x.n_rows() > 1 { (n - 1.0) / n } else { 1.0 };
        let mut h = Vec::with_capacity(mean.len() + 1);
        h.push(0.25);
        h.extend(var.iter().map(|&v| {
            let v = v * scale;
            if v > 1e-12 {
                0.25 * v
            } else {
                0.25
            }
        }));
        Self { x, y: labels_as_f64(y), mean, h, penalty, lambda }
    }

    /// Linear predictor `c + X_c w` for centered-intercept parameters.
    fn eta(&self, theta: &[f64]) -> Vec<f64> {
        let w = &theta[1..];
        let shift = theta[0] - dot(&self.mean, w);
        self.x.mul_vec(w).into_iter().map(|v| v + shift).collect()
    }

    fn smooth_grad(&self, eta: &[f64]) -> Vec<f64> {
        let n = eta.len() as f64;
        let r: Vec<f64> = eta.iter().zip(&self.y).map(|(&e, &t)| (sigmoid(e) - t) / n).collect();
        let rsum: f64 = r.iter().sum();
        let xr = self.x.tr_mul_vec(&r);
        let mut g = Vec::with_capacity(xr.len() + 1);
        g.push(rsum);
        g.extend(xr.iter().zip(&self.mean).map(|(a, m)| a - m * rsum));
        g
    }

    fn prox(&self, v: f64, j: usize, step_scale: f64) -> f64 {
        if j == 0 {
            return v;
        }
        let t = self.lambda / (step_scale * self.h[j]);
        match self.penalty {
            Penalty::L1 => v.signum() * (v.abs() - t).max(0.0),
            Penalty::L2 => v / (1.0 + t),
        }
    }

    fn pen(&self, theta: &[f64]) -> f64 {
        penalty_value(self.penalty, self.lambda, &theta[1..])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits one model. `warm` seeds the optimizer with an earlier solution on
/// the same columns.
pub fn fit(
    x: &CsrMatrix,
    y: &[bool],
    penalty: Penalty,
    lambda: f64,
    opts: &TrainOptions,
    warm: Option<&Fit>,
) -> Result<Fit, GlmError> {
    validate(x, y, lambda)?;
    let prob = Problem::new(x, y, penalty, lambda);
    let p = x.n_cols();

    let mut theta = vec![0.0; p + 1];
    match warm {
        Some(w) if w.coef.len() == p => {
            theta[1..].copy_from_slice(&w.coef);
            theta[0] = w.intercept + dot(&prob.mean, &w.coef);
        }
        _ => {
            let rate = prob.y.iter().sum::<f64>() / prob.y.len() as f64;
            let rate = rate.clamp(1e-6, 1.0 - 1e-6);
            theta[0] = (rate / (1.0 - rate)).ln();
        }
    }

    let mut eta_x = prob.eta(&theta);
    let mut f_x = mean_nll(&eta_x, &prob.y);
    let mut obj_x = f_x + prob.pen(&theta);
    let mut prev = theta.clone();
    let mut eta_prev = eta_x.clone();
    let mut t = 1.0f64;
    let mut scale = 1.0f64;
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(obj_x);
    }

    let mut quiet = 0;
    let mut converged = false;
    let mut iterations = 0;
    let mut y_pt = vec![0.0; p + 1];
    let mut eta_y = vec![0.0; eta_x.len()];
    let mut z = vec![0.0; p + 1];

    while iterations < opts.max_iter {
        iterations += 1;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mut beta = (t - 1.0) / t_next;
        let mut restarted = false;
        let (f_z, eta_z) = loop {
            for j in 0..=p {
                y_pt[j] = theta[j] + beta * (theta[j] - prev[j]);
            }
            for i in 0..eta_y.len() {
                eta_y[i] = eta_x[i] + beta * (eta_x[i] - eta_prev[i]);
            }
            let f_y = if beta == 0.0 { f_x } else { mean_nll(&eta_y, &prob.y) };
            let g = prob.smooth_grad(&eta_y);
            scale = (scale * 0.9).max(1e-8);
            let (f_z, eta_z) = loop {
                for j in 0..=p {
                    z[j] = prob.prox(y_pt[j] - g[j] / (scale * prob.h[j]), j, scale);
                }
                let eta_z = prob.eta(&z);
                let f_z = mean_nll(&eta_z, &prob.y);
                let mut model = f_y;
                for j in 0..=p {
                    let d = z[j] - y_pt[j];
                    model += g[j] * d + 0.5 * scale * prob.h[j] * d * d;
                }
                if f_z <= model + 1e-12 * (1.0 + f_y.abs()) || scale > 1e12 {
                    break (f_z, eta_z);
                }
                scale *= 2.0;
            };
            let obj_z = f_z + prob.pen(&z);
            if obj_z <= obj_x || beta == 0.0 {
                break (f_z, eta_z);
            }
            // momentum overshot: restart from the current iterate
            beta = 0.0;
            restarted = true;
        };
        let obj_z = f_z + prob.pen(&z);
        let change = obj_x - obj_z;
        if obj_z <= obj_x {
            prev.copy_from_slice(&theta);
            theta.copy_from_slice(&z);
            eta_prev = std::mem::replace(&mut eta_x, eta_z);
            f_x = f_z;
            obj_x = obj_z;
        }
        t = if restarted { 1.0 } else { t_next };
        if opts.record_trace {
            trace.push(obj_x);
        }
        if change.abs() <= opts.tol * (1.0 + obj_x.abs()) {
            quiet += 1;
            if quiet >= 2 {
                converged = true;
                break;
            }
        } else {
            quiet = 0;
        }
    }

    let coef = theta[1..].to_vec();
    let intercept = theta[0] - dot(&prob.mean, &coef);
    Ok(Fit { intercept, coef, penalty, lambda, objective: obj_x, iterations, converged, trace })
}

/// Fits every λ in `lambdas`, largest first, each warm-started from the
/// previous solution. Results are returned in the order of `lambdas`.
pub fn fit_path(
    x: &CsrMatrix,
    y: &[bool],
    penalty: Penalty,
    lambdas: &[f64],
    opts: &TrainOptions,
) -> Vec<Result<Fit, GlmError>> {
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]).then(a.cmp(&b)));
    let mut out: Vec<Option<Result<Fit, GlmError>>> = (0..lambdas.len()).map(|_| None).collect();
    let mut warm: Option<Fit> = None;
    for i in order {
        let res = fit(x, y, penalty, lambdas[i], opts, warm.as_ref());
        if let Ok(f) = &res {
            warm = Some(f.clone());
        }
        out[i] = Some(res);
    }
    out.into_iter().map(|r| r.expect("every λ fitted")).collect()
}

/// A trained model keyed by feature identifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelWeights {
    pub weights: BTreeMap<String, f64>,
    pub intercept: f64,
    pub penalty: Penalty,
    pub lambda: f64,
}

impl ModelWeights {
    pub fn from_fit(names: &[String], fit: &Fit) -> Self {
        assert_eq!(names.len(), fit.coef.len(), "one name per coefficient");
        Self {
            weights: names.iter().cloned().zip(fit.coef.iter().copied()).collect(),
            intercept: fit.intercept,
            penalty: fit.penalty,
            lambda: fit.lambda,
        }
    }

    pub fn zero(names: impl IntoIterator<Item = String>) -> Self {
        Self {
            weights: names.into_iter().map(|n| (n, 0.0)).collect(),
            intercept: 0.0,
            penalty: Penalty::L2,
            lambda: 0.0,
        }
    }

    /// Intercept plus the dot product; features without a weight contribute 0.
    pub fn linear(&self, x: &FeatureVector) -> f64 {
        self.intercept + x.iter().filter_map(|(k, v)| self.weights.get(k).map(|w| w * v)).sum::<f64>()
    }

    pub fn predict_prob(&self, x: &FeatureVector) -> f64 {
        sigmoid(self.linear(x))
    }

    /// 1 iff the probability is at least 0.5.
    pub fn predict_label(&self, x: &FeatureVector) -> bool {
        self.predict_prob(x) >= 0.5
    }

    pub fn nonzero(&self) -> usize {
        self.weights.values().filter(|w| **w != 0.0).count()
    }

    /// The `n` largest and the `n` smallest coefficients, ties broken by
    /// identifier.
    pub fn top_features(&self, n: usize) -> (Vec<(&str, f64)>, Vec<(&str, f64)>) {
        let mut all: Vec<(&str, f64)> = self.weights.iter().map(|(k, &v)| (k.as_str(), v)).collect();
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        let positive = all.iter().take(n).copied().collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(b.0)));
        let negative = all.iter().take(n).copied().collect();
        (positive, negative)
    }

    /// Tab-separated `feature, coefficient` lines sorted by decreasing
    /// magnitude, intercept first.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "feature\tcoefficient")?;
        writeln!(w, "(intercept)\t{}", self.intercept)?;
        let mut all: Vec<(&String, &f64)> = self.weights.iter().collect();
        all.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(b.0)));
        for (k, v) in all {
            writeln!(w, "{k}\t{v}")?;
        }
        Ok(())
    }
}

/// Builds the design matrix for labelled feature vectors. Columns are the
/// sorted union of identifiers.
pub fn design_matrix(instances: &[(FeatureVector, bool)]) -> (Vec<String>, CsrMatrix, Vec<bool>) {
    let names: Vec<String> = instances
        .iter()
        .flat_map(|(fv, _)| fv.names().map(str::to_string).collect::<Vec<_>>())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&str, u32> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i as u32)).collect();
    let x = CsrMatrix::from_rows(
        names.len(),
        instances.iter().map(|(fv, _)| fv.iter().map(|(k, v)| (index[k], v)).collect::<Vec<_>>()),
    );
    let y = instances.iter().map(|(_, l)| *l).collect();
    (names, x, y)
}

/// Trains on labelled feature vectors.
pub fn train(
    instances: &[(FeatureVector, bool)],
    penalty: Penalty,
    lambda: f64,
    opts: &TrainOptions,
) -> Result<ModelWeights, GlmError> {
    let (names, x, y) = design_matrix(instances);
    let f = fit(&x, &y, penalty, lambda, opts, None)?;
    Ok(ModelWeights::from_fit(&names, &f))
}
