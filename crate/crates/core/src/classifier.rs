//! The variational classifier: feature map, ansatz, readout and training.
//!
//! A row `x` is encoded as `U_phi(x)|0...0>`, the ansatz `U_theta` is applied,
//! and the class probabilities are read off the final state exactly. With
//! the default parity readout, even-parity basis states vote for class 0 and
//! odd-parity states for class 1.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuits::{
    build_feature_map, build_real_amplitudes, AnsatzSpec, Circuit, Entanglement, FeatureMapKind,
    FeatureMapSpec,
};
use crate::data::Dataset;
use crate::optimizer::{minimize, CobylaConfig, Termination};
use crate::statevector::{Parity, StateVector};
use crate::{Error, Result};

/// Probabilities are clamped to `[EPS, 1 - EPS]` before taking logs.
pub const PROBABILITY_CLAMP: f64 = 1e-10;

const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Readout {
    /// Class = parity of the measured bitstring.
    Parity,
    /// Class = value of a single measured qubit.
    Qubit(usize),
}

impl fmt::Display for Readout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Readout::Parity => f.write_str("parity"),
            Readout::Qubit(q) => write!(f, "qubit:{q}"),
        }
    }
}

impl FromStr for Readout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "parity" {
            return Ok(Readout::Parity);
        }
        s.strip_prefix("qubit:")
            .and_then(|q| q.parse().ok())
            .map(Readout::Qubit)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown readout `{s}` (expected parity or qubit:<index>)"
                ))
            })
    }
}

fn clamp_probability(q: f64) -> f64 {
    q.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
}

fn check_distribution(p: &[f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.is_empty() || p.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "{p:?} is not a probability distribution"
        )));
    }
    Ok(())
}

/// `H(p) = -Σ p_c ln p_c`, with `0 ln 0 = 0`.
pub fn entropy(p: &[f64]) -> Result<f64> {
    check_distribution(p)?;
    Ok(-p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>())
}

/// `H(p, q) = -Σ p_c ln q_c`, with `q` clamped away from 0.
pub fn cross_entropy(p: &[f64], q: &[f64]) -> Result<f64> {
    check_distribution(p)?;
    check_distribution(q)?;
    if p.len() != q.len() {
        return Err(Error::InvalidInput("distributions differ in length".into()));
    }
    Ok(-p
        .iter()
        .zip(q)
        .filter(|(&pc, _)| pc > 0.0)
        .map(|(pc, &qc)| pc * clamp_probability(qc).ln())
        .sum::<f64>())
}

/// `D_KL(p‖q) = Σ p_c ln(p_c / q_c)`, which equals `H(p, q) - H(p) >= 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    check_distribution(p)?;
    check_distribution(q)?;
    if p.len() != q.len() {
        return Err(Error::InvalidInput("distributions differ in length".into()));
    }
    Ok(p.iter()
        .zip(q)
        .filter(|(&pc, _)| pc > 0.0)
        .map(|(&pc, &qc)| pc * (pc / clamp_probability(qc)).ln())
        .sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub max_iterations: usize,
    pub seed: u64,
    pub rho_begin: f64,
    pub rho_end: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let cobyla = CobylaConfig::default();
        TrainConfig {
            max_iterations: 150,
            seed: 0,
            rho_begin: cobyla.rho_begin,
            rho_end: cobyla.rho_end,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// Loss at every optimizer iteration, initial simplex excluded.
    pub loss_curve: Vec<f64>,
    pub initial_theta: Vec<f64>,
    pub final_theta: Vec<f64>,
    pub final_loss: f64,
    pub iterations_used: usize,
    pub evaluations: usize,
    pub termination: Termination,
    pub wall_time_secs: f64,
}

impl TrainReport {
    /// False when the optimizer gave up for numerical reasons.
    pub fn optimizer_ok(&self) -> bool {
        self.termination != Termination::RoundoffLimited
    }
}

#[derive(Clone, Debug)]
pub struct VqcModel {
    pub feature_map: FeatureMapSpec,
    pub ansatz: AnsatzSpec,
    pub readout: Readout,
    pub theta: Vec<f64>,
    pub trained: bool,
    feature_circuit: Circuit,
    ansatz_circuit: Circuit,
}

impl PartialEq for VqcModel {
    fn eq(&self, other: &Self) -> bool {
        self.feature_map == other.feature_map
            && self.ansatz == other.ansatz
            && self.readout == other.readout
            && self.trained == other.trained
            && self.theta.len() == other.theta.len()
            && self
                .theta
                .iter()
                .zip(&other.theta)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Exact class probabilities of a state under a readout rule.
pub fn readout_probabilities(state: &StateVector, readout: Readout) -> Result<(f64, f64)> {
    match readout {
        Readout::Parity => {
            let q1 = state.parity_probability(Parity::Odd);
            Ok((state.parity_probability(Parity::Even), q1))
        }
        Readout::Qubit(q) => {
            let q1 = state.qubit_one_probability(q)?;
            Ok((1.0 - q1, q1))
        }
    }
}

impl VqcModel {
    /// An untrained model with all variational angles at zero.
    pub fn new(feature_map: FeatureMapSpec, ansatz: AnsatzSpec, readout: Readout) -> Result<Self> {
        if feature_map.n_features != ansatz.n_qubits {
            return Err(Error::Spec(format!(
                "feature map has {} qubits but the ansatz has {}",
                feature_map.n_features, ansatz.n_qubits
            )));
        }
        if let Readout::Qubit(q) = readout {
            if q >= ansatz.n_qubits {
                return Err(Error::Spec(format!(
                    "readout qubit {q} outside a {}-qubit register",
                    ansatz.n_qubits
                )));
            }
        }
        let feature_circuit = build_feature_map(&feature_map)?;
        let ansatz_circuit = build_real_amplitudes(&ansatz)?;
        Ok(VqcModel {
            feature_map,
            ansatz,
            readout,
            theta: vec![0.0; ansatz.n_parameters()],
            trained: false,
            feature_circuit,
            ansatz_circuit,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.ansatz.n_qubits
    }

    pub fn n_parameters(&self) -> usize {
        self.ansatz.n_parameters()
    }

    pub fn set_theta(&mut self, theta: Vec<f64>) -> Result<()> {
        if theta.len() != self.n_parameters() {
            return Err(Error::Binding(format!(
                "ansatz has {} parameters, got {}",
                self.n_parameters(),
                theta.len()
            )));
        }
        self.theta = theta;
        Ok(())
    }

    /// `U_phi(x)|0...0>`.
    pub fn encode(&self, x: &[f64]) -> Result<StateVector> {
        if x.len() != self.feature_map.n_features {
            return Err(Error::InvalidInput(format!(
                "expected {} features, got {}",
                self.feature_map.n_features,
                x.len()
            )));
        }
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            log::warn!("feature vector {x:?} has components outside [0, 1]");
        }
        let mut state = StateVector::zero(self.n_qubits())?;
        state.apply_circuit(&self.feature_circuit.bind(x)?)?;
        Ok(state)
    }

    fn probabilities_with(&self, encoded: &StateVector, bound_ansatz: &Circuit) -> Result<(f64, f64)> {
        let mut state = encoded.clone();
        state.apply_circuit(bound_ansatz)?;
        readout_probabilities(&state, self.readout)
    }

    /// `(q_0, q_1)` for one row under the current `theta`.
    pub fn class_probabilities(&self, x: &[f64]) -> Result<(f64, f64)> {
        let encoded = self.encode(x)?;
        self.probabilities_with(&encoded, &self.ansatz_circuit.bind(&self.theta)?)
    }

    pub fn cross_entropy_loss(&self, data: &Dataset) -> Result<f64> {
        LossEvaluator::new(self, data)?.loss(&self.theta)
    }

    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        if !self.trained {
            return Err(Error::Untrained);
        }
        let (q0, q1) = self.class_probabilities(x)?;
        Ok(argmax_label(q0, q1))
    }

    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>> {
        if !self.trained {
            return Err(Error::Untrained);
        }
        let bound = self.ansatz_circuit.bind(&self.theta)?;
        rows.par_iter()
            .map(|x| {
                let encoded = self.encode(x)?;
                let (q0, q1) = self.probabilities_with(&encoded, &bound)?;
                Ok(argmax_label(q0, q1))
            })
            .collect()
    }

    /// Minimises the mean cross-entropy with COBYLA from a seeded uniform
    /// draw in `[-pi, pi]^k`. The model keeps the best point seen.
    pub fn train(&mut self, data: &Dataset, config: &TrainConfig) -> Result<TrainReport> {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let initial_theta: Vec<f64> = (0..self.n_parameters())
            .map(|_| rng.gen_range(-PI..=PI))
            .collect();

        let evaluator = LossEvaluator::new(self, data)?;
        let cobyla = CobylaConfig {
            rho_begin: config.rho_begin,
            rho_end: config.rho_end,
            max_iterations: config.max_iterations,
            seed: config.seed,
        };
        let mut failure = None;
        let result = minimize(
            |theta| match evaluator.loss(theta) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            &initial_theta,
            &cobyla,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }

        let n_initial = self.n_parameters() + 1;
        self.theta = result.best_point.clone();
        self.trained = true;
        Ok(TrainReport {
            loss_curve: result.history.get(n_initial..).unwrap_or_default().to_vec(),
            initial_theta,
            final_theta: result.best_point,
            final_loss: result.best_value,
            iterations_used: result.iterations,
            evaluations: result.evaluations,
            termination: result.termination,
            wall_time_secs: start.elapsed().as_secs_f64(),
        })
    }

    /// Self-describing `key=value` record; `theta` round-trips bit-exactly.
    pub fn to_record(&self) -> String {
        let theta: Vec<String> = self.theta.iter().map(f64::to_string).collect();
        format!(
            "model=vqc\n\
             feature_map={}\n\
             n_features={}\n\
             feature_map_reps={}\n\
             feature_map_entanglement={}\n\
             ansatz_reps={}\n\
             ansatz_entanglement={}\n\
             readout={}\n\
             trained={}\n\
             theta={}\n",
            self.feature_map.kind,
            self.feature_map.n_features,
            self.feature_map.reps,
            self.feature_map.entanglement,
            self.ansatz.reps,
            self.ansatz.entanglement,
            self.readout,
            self.trained,
            theta.join(","),
        )
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let mut fields = std::collections::HashMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("model record line `{line}` has no `=`")))?;
            fields.insert(k.trim(), v.trim());
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| Error::Config(format!("model record is missing `{k}`")))
        };
        let num = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::Config(format!("`{k}` is not an integer")))
        };
        if get("model")? != "vqc" {
            return Err(Error::Config("not a vqc model record".into()));
        }
        let kind: FeatureMapKind = get("feature_map")?.parse()?;
        let n = num("n_features")?;
        let feature_map = FeatureMapSpec {
            kind,
            n_features: n,
            reps: num("feature_map_reps")?,
            entanglement: get("feature_map_entanglement")?.parse::<Entanglement>()?,
        };
        let ansatz = AnsatzSpec {
            n_qubits: n,
            reps: num("ansatz_reps")?,
            entanglement: get("ansatz_entanglement")?.parse()?,
        };
        let mut model = VqcModel::new(feature_map, ansatz, get("readout")?.parse()?)?;
        let theta_text = get("theta")?;
        let theta = if theta_text.is_empty() {
            Vec::new()
        } else {
            theta_text
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad theta entry `{v}`")))
                })
                .collect::<Result<Vec<_>>>()?
        };
        model.set_theta(theta)?;
        model.trained = match get("trained")? {
            "true" => true,
            "false" => false,
            other => return Err(Error::Config(format!("bad trained flag `{other}`"))),
        };
        Ok(model)
    }
}

/// Ties resolve to class 0.
pub fn argmax_label(q0: f64, q1: f64) -> u8 {
    if (q0 - q1).abs() < TIE_TOLERANCE || q0 > q1 {
        0
    } else {
        1
    }
}

/// Mean cross-entropy over a fixed dataset. The feature-map states do not
/// depend on `theta`, so they are encoded once up front.
pub struct LossEvaluator<'a> {
    model: &'a VqcModel,
    encoded: Vec<StateVector>,
    labels: Vec<u8>,
}

impl<'a> LossEvaluator<'a> {
    pub fn new(model: &'a VqcModel, data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidInput("cross-entropy of an empty dataset".into()));
        }
        let encoded = data
            .features
            .par_iter()
            .map(|x| model.encode(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(LossEvaluator {
            model,
            encoded,
            labels: data.labels.clone(),
        })
    }

    /// `-(1/N) Σ ln q_{y_i}(x_i)`. Rows are evaluated in parallel and summed
    /// in index order.
    pub fn loss(&self, theta: &[f64]) -> Result<f64> {
        let bound = self.model.ansatz_circuit.bind(theta)?;
        let per_row = self
            .encoded
            .par_iter()
            .zip(self.labels.par_iter())
            .map(|(state, &y)| {
                let (q0, q1) = self.model.probabilities_with(state, &bound)?;
                let q = if y == 1 { q1 } else { q0 };
                Ok(-clamp_probability(q).ln())
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(per_row.iter().sum::<f64>() / per_row.len() as f64)
    }
}
