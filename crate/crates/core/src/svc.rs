//! Linear soft-margin support vector classifier trained by dual coordinate
//! descent.
//!
//! The bias is learned as the weight of an extra constant feature equal to 1,
//! so the solved problem is
//!
//! ```text
//! min_{w,b}  ½(‖w‖² + b²) + C Σ_i max(0, 1 − s_i (w·x_i + b)),   s_i = ±1
//! ```
//!
//! and its dual has only box constraints `0 ≤ α_i ≤ C`. Each pass updates
//! every coordinate once, in index order, so training is deterministic.

use std::fmt::Write as _;

use crate::data::Dataset;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvcConfig {
    pub c: f64,
    /// Relative duality gap at which training stops.
    pub tolerance: f64,
    pub max_passes: usize,
}

impl Default for SvcConfig {
    fn default() -> Self {
        SvcConfig {
            c: 1.0,
            tolerance: 1e-4,
            max_passes: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSvcModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub trained: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvcTrace {
    /// Dual objective after each pass.
    pub dual_objective: Vec<f64>,
    /// Primal minus dual after each pass.
    pub duality_gap: Vec<f64>,
    pub passes: usize,
    pub converged: bool,
    pub alphas: Vec<f64>,
}

fn signed(label: u8) -> f64 {
    if label == 1 {
        1.0
    } else {
        -1.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(primal, dual)` objective values for the augmented problem.
fn objectives(data: &Dataset, c: f64, w: &[f64], b: f64, alphas: &[f64]) -> (f64, f64) {
    let norm_sq = dot(w, w) + b * b;
    let hinge: f64 = data
        .features
        .iter()
        .zip(&data.labels)
        .map(|(x, &y)| (1.0 - signed(y) * (dot(w, x) + b)).max(0.0))
        .sum();
    let primal = 0.5 * norm_sq + c * hinge;
    let dual = alphas.iter().sum::<f64>() - 0.5 * norm_sq;
    (primal, dual)
}

pub fn svc_train(data: &Dataset, c: f64, tolerance: f64, max_passes: usize) -> Result<LinearSvcModel> {
    svc_train_traced(
        data,
        &SvcConfig {
            c,
            tolerance,
            max_passes,
        },
    )
    .map(|(m, _)| m)
}

pub fn svc_train_traced(data: &Dataset, config: &SvcConfig) -> Result<(LinearSvcModel, SvcTrace)> {
    if data.len() < 2 {
        return Err(Error::InvalidInput("SVC needs at least two rows".into()));
    }
    let (neg, pos) = data.label_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::InvalidInput(
            "SVC needs both classes present; the separating hyperplane is undefined".into(),
        ));
    }
    if !(config.c > 0.0) || !(config.tolerance > 0.0) || config.max_passes == 0 {
        return Err(Error::Spec(format!("invalid SVC settings {config:?}")));
    }

    let n = data.len();
    let d = data.n_features();
    let c = config.c;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut alphas = vec![0.0; n];
    // Diagonal of the Gram matrix, constant feature included.
    let q_diag: Vec<f64> = data.features.iter().map(|x| dot(x, x) + 1.0).collect();

    let mut trace = SvcTrace {
        dual_objective: Vec::new(),
        duality_gap: Vec::new(),
        passes: 0,
        converged: false,
        alphas: Vec::new(),
    };

    for _ in 0..config.max_passes {
        for i in 0..n {
            let x = &data.features[i];
            let s = signed(data.labels[i]);
            let grad = s * (dot(&w, x) + b) - 1.0;
            let old = alphas[i];
            let new = (old - grad / q_diag[i]).clamp(0.0, c);
            let delta = new - old;
            if delta != 0.0 {
                alphas[i] = new;
                for (wk, xk) in w.iter_mut().zip(x) {
                    *wk += delta * s * xk;
                }
                b += delta * s;
            }
        }
        trace.passes += 1;
        let (primal, dual) = objectives(data, c, &w, b, &alphas);
        let gap = primal - dual;
        trace.dual_objective.push(dual);
        trace.duality_gap.push(gap);
        if gap <= config.tolerance * primal.abs().max(1.0) {
            trace.converged = true;
            break;
        }
    }
    if !trace.converged {
        log::warn!(
            "SVC stopped after {} passes with duality gap {:e}",
            trace.passes,
            trace.duality_gap.last().copied().unwrap_or(f64::NAN)
        );
    }
    trace.alphas = alphas;
    Ok((
        LinearSvcModel {
            weights: w,
            bias: b,
            c,
            trained: true,
        },
        trace,
    ))
}

impl LinearSvcModel {
    pub fn decision_function(&self, x: &[f64]) -> Result<f64> {
        if !self.trained {
            return Err(Error::Untrained);
        }
        if x.len() != self.weights.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} features, got {}",
                self.weights.len(),
                x.len()
            )));
        }
        Ok(dot(&self.weights, x) + self.bias)
    }

    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>> {
        rows.iter().map(|x| svc_predict(self, x)).collect()
    }

    /// Text record with the weights and bias at full precision.
    pub fn to_record(&self) -> String {
        let mut out = String::from("model=linear_svc\n");
        let _ = writeln!(out, "c={}", self.c);
        let _ = writeln!(out, "trained={}", self.trained);
        let w: Vec<String> = self.weights.iter().map(f64::to_string).collect();
        let _ = writeln!(out, "weights={}", w.join(","));
        let _ = writeln!(out, "bias={}", self.bias);
        out
    }
}

/// 1 if `w·x + b > 0`, otherwise 0.
pub fn svc_predict(model: &LinearSvcModel, x: &[f64]) -> Result<u8> {
    Ok(u8::from(model.decision_function(x)? > 0.0))
}
