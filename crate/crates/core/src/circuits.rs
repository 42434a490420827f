//! Feature maps and the variational ansatz as symbolic circuits.
//!
//! Angle conventions follow the usual Pauli-expansion encodings: the
//! first-order phase on qubit `i` is `2 x_i` and the second-order phase on a
//! pair `(i, j)` is `2 (pi - x_i)(pi - x_j)`. Pairs are visited in
//! lexicographic order with the lower index as CX control.

use std::fmt;
use std::str::FromStr;

use crate::statevector::{Angle, AngleExpr, Gate, GateKind, MAX_QUBITS};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Entanglement {
    /// Every pair `i < j`.
    Full,
    /// Nearest neighbours `(i, i + 1)`.
    Linear,
}

impl Entanglement {
    pub fn pairs(self, n_qubits: usize) -> Vec<(usize, usize)> {
        match self {
            Entanglement::Full => (0..n_qubits)
                .flat_map(|i| (i + 1..n_qubits).map(move |j| (i, j)))
                .collect(),
            Entanglement::Linear => (1..n_qubits).map(|j| (j - 1, j)).collect(),
        }
    }
}

impl fmt::Display for Entanglement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Entanglement::Full => "full",
            Entanglement::Linear => "linear",
        })
    }
}

impl FromStr for Entanglement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(Entanglement::Full),
            "linear" => Ok(Entanglement::Linear),
            other => Err(Error::Config(format!(
                "unknown entanglement `{other}` (expected full or linear)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureMapKind {
    Z,
    ZZ,
}

impl fmt::Display for FeatureMapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMapKind::Z => "Z",
            FeatureMapKind::ZZ => "ZZ",
        })
    }
}

impl FromStr for FeatureMapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "Z" => Ok(FeatureMapKind::Z),
            "ZZ" => Ok(FeatureMapKind::ZZ),
            other => Err(Error::Config(format!("unknown feature map `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FeatureMapSpec {
    pub kind: FeatureMapKind,
    /// One qubit per feature.
    pub n_features: usize,
    pub reps: usize,
    /// Pair topology of the second-order terms; unused by the `Z` map.
    pub entanglement: Entanglement,
}

impl FeatureMapSpec {
    pub fn new(kind: FeatureMapKind, n_features: usize, reps: usize) -> Self {
        FeatureMapSpec {
            kind,
            n_features,
            reps,
            entanglement: Entanglement::Full,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_features == 0 || self.n_features > MAX_QUBITS {
            return Err(Error::Spec(format!(
                "feature map over {} features",
                self.n_features
            )));
        }
        if self.reps == 0 {
            return Err(Error::Spec("feature map needs reps >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    pub reps: usize,
    pub entanglement: Entanglement,
}

impl AnsatzSpec {
    pub fn new(n_qubits: usize, reps: usize) -> Self {
        AnsatzSpec {
            n_qubits,
            reps,
            entanglement: Entanglement::Full,
        }
    }

    pub fn n_parameters(&self) -> usize {
        self.n_qubits * (self.reps + 1)
    }
}

/// An ordered gate list over a fixed register, with positional symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    symbols: Vec<String>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            gates: Vec::new(),
            symbols: Vec::new(),
        }
    }

    /// Builds a circuit with declared symbols, validating every gate against
    /// the register size and the symbol table.
    pub fn from_parts(n_qubits: usize, gates: Vec<Gate>, symbols: Vec<String>) -> Result<Self> {
        let mut circuit = Circuit {
            n_qubits,
            gates: Vec::with_capacity(gates.len()),
            symbols,
        };
        for g in gates {
            circuit.push(g)?;
        }
        Ok(circuit)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn is_bound(&self) -> bool {
        self.symbols.is_empty() && self.gates.iter().all(Gate::is_bound)
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        if let Some(Angle::Symbolic(expr)) = gate.angle {
            if expr.max_symbol() >= self.symbols.len() {
                return Err(Error::Binding(format!(
                    "gate `{gate}` refers to symbol {} but only {} are declared",
                    expr.max_symbol(),
                    self.symbols.len()
                )));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Appends `other`'s gates; its symbols are renumbered after ours.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::Size(format!(
                "cannot append a {}-qubit circuit to a {}-qubit circuit",
                other.n_qubits, self.n_qubits
            )));
        }
        let offset = self.symbols.len();
        self.symbols.extend(other.symbols.iter().cloned());
        self.gates.extend(other.gates.iter().map(|g| match g.angle {
            Some(Angle::Symbolic(expr)) => Gate {
                angle: Some(Angle::Symbolic(expr.shifted(offset))),
                ..*g
            },
            _ => *g,
        }));
        Ok(())
    }

    /// Replaces every symbol positionally; the result has no symbols.
    pub fn bind(&self, values: &[f64]) -> Result<Circuit> {
        if values.len() != self.symbols.len() {
            return Err(Error::Binding(format!(
                "circuit has {} symbols, got {} values",
                self.symbols.len(),
                values.len()
            )));
        }
        Ok(Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().map(|g| g.bound(values)).collect(),
            symbols: Vec::new(),
        })
    }

    /// Plain-text gate list, one `KIND target [control] [angle]` per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            out.push_str(g.kind.name());
            out.push(' ');
            out.push_str(&g.target.to_string());
            if let Some(c) = g.control {
                out.push(' ');
                out.push_str(&c.to_string());
            }
            match g.angle {
                Some(Angle::Fixed(v)) => {
                    out.push(' ');
                    out.push_str(&v.to_string());
                }
                Some(Angle::Symbolic(expr)) => {
                    out.push(' ');
                    out.push_str(&expr.render(&self.symbols));
                }
                None => {}
            }
            out.push('\n');
        }
        out
    }
}

fn feature_symbols(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

fn first_order_phase(i: usize) -> AngleExpr {
    AngleExpr::Scaled {
        symbol: i,
        factor: 2.0,
    }
}

/// First-order Pauli expansion: per repetition, H on every qubit then
/// `P(2 x_i)` on qubit `i`. No entangling gates.
pub fn build_z_feature_map(spec: &FeatureMapSpec) -> Result<Circuit> {
    if spec.kind != FeatureMapKind::Z {
        return Err(Error::Spec(format!(
            "build_z_feature_map called with a {} spec",
            spec.kind
        )));
    }
    spec.validate()?;
    let d = spec.n_features;
    let mut circuit = Circuit {
        n_qubits: d,
        gates: Vec::with_capacity(spec.reps * 2 * d),
        symbols: feature_symbols(d),
    };
    for _ in 0..spec.reps {
        for q in 0..d {
            circuit.push(Gate::h(q))?;
        }
        for q in 0..d {
            circuit.push(Gate::p(q, first_order_phase(q)))?;
        }
    }
    Ok(circuit)
}

/// Second-order Pauli expansion: the first-order block followed, for each
/// entangled pair `(i, j)`, by `CX(i, j) P(2 (pi - x_i)(pi - x_j)) CX(i, j)`.
pub fn build_zz_feature_map(spec: &FeatureMapSpec) -> Result<Circuit> {
    if spec.kind != FeatureMapKind::ZZ {
        return Err(Error::Spec(format!(
            "build_zz_feature_map called with a {} spec",
            spec.kind
        )));
    }
    spec.validate()?;
    let d = spec.n_features;
    if d < 2 {
        return Err(Error::Spec(
            "the ZZ feature map needs at least two features".into(),
        ));
    }
    let pairs = spec.entanglement.pairs(d);
    let mut circuit = Circuit {
        n_qubits: d,
        gates: Vec::with_capacity(spec.reps * (2 * d + 3 * pairs.len())),
        symbols: feature_symbols(d),
    };
    for _ in 0..spec.reps {
        for q in 0..d {
            circuit.push(Gate::h(q))?;
        }
        for q in 0..d {
            circuit.push(Gate::p(q, first_order_phase(q)))?;
        }
        for &(i, j) in &pairs {
            circuit.push(Gate::cx(i, j))?;
            circuit.push(Gate::p(j, AngleExpr::PairPhase { a: i, b: j }))?;
            circuit.push(Gate::cx(i, j))?;
        }
    }
    Ok(circuit)
}

pub fn build_feature_map(spec: &FeatureMapSpec) -> Result<Circuit> {
    match spec.kind {
        FeatureMapKind::Z => build_z_feature_map(spec),
        FeatureMapKind::ZZ => build_zz_feature_map(spec),
    }
}

/// `RealAmplitudes`: an RY layer, then `reps` rounds of (CX block, RY layer).
/// Symbols are `theta0 .. theta{n(r+1)-1}` in layer-major, qubit-minor order.
pub fn build_real_amplitudes(spec: &AnsatzSpec) -> Result<Circuit> {
    let n = spec.n_qubits;
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Spec(format!("ansatz over {n} qubits")));
    }
    if spec.reps == 0 {
        return Err(Error::Spec("ansatz needs reps >= 1".into()));
    }
    let pairs = spec.entanglement.pairs(n);
    let n_params = spec.n_parameters();
    let mut circuit = Circuit {
        n_qubits: n,
        gates: Vec::with_capacity(n_params + spec.reps * pairs.len()),
        symbols: (0..n_params).map(|k| format!("theta{k}")).collect(),
    };
    let mut next = 0;
    let mut rotation_layer = |circuit: &mut Circuit| -> Result<()> {
        for q in 0..n {
            circuit.push(Gate::ry(
                q,
                AngleExpr::Scaled {
                    symbol: next,
                    factor: 1.0,
                },
            ))?;
            next += 1;
        }
        Ok(())
    };
    rotation_layer(&mut circuit)?;
    for _ in 0..spec.reps {
        for &(i, j) in &pairs {
            circuit.push(Gate::cx(i, j))?;
        }
        rotation_layer(&mut circuit)?;
    }
    Ok(circuit)
}

/// Maps a variational-parameter budget to ansatz repetitions: `n(r+1) = k`.
pub fn params_to_reps(n_params: usize, n_qubits: usize) -> Result<usize> {
    if n_qubits == 0 || !n_params.is_multiple_of(n_qubits) {
        return Err(Error::Spec(format!(
            "{n_params} parameters is not a multiple of {n_qubits} qubits"
        )));
    }
    let layers = n_params / n_qubits;
    if layers < 2 {
        return Err(Error::Spec(format!(
            "{n_params} parameters on {n_qubits} qubits leaves no entangling repetition"
        )));
    }
    Ok(layers - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::{run_circuit, zero_state};

    fn z(d: usize, reps: usize) -> FeatureMapSpec {
        FeatureMapSpec::new(FeatureMapKind::Z, d, reps)
    }

    fn zz(d: usize, reps: usize) -> FeatureMapSpec {
        FeatureMapSpec::new(FeatureMapKind::ZZ, d, reps)
    }

    #[test]
    fn z_map_gate_tally() {
        let c = build_z_feature_map(&z(5, 2)).unwrap();
        assert_eq!(c.gates().len(), 20);
        assert_eq!(c.symbols().len(), 5);
        assert_eq!(c.count(GateKind::Cx), 0);
        // Enumerate per kind as an independent tally.
        let mut h = 0;
        let mut p = 0;
        for g in c.gates() {
            match g.kind {
                GateKind::H => h += 1,
                GateKind::P => p += 1,
                _ => panic!("unexpected gate {g}"),
            }
        }
        assert_eq!((h, p), (10, 10));
    }

    #[test]
    fn z_map_single_feature_at_zero() {
        let c = build_z_feature_map(&z(1, 1)).unwrap();
        let bound = c.bind(&[0.0]).unwrap();
        assert_eq!(bound.dump(), "H 0\nP 0 0\n");
        let s = run_circuit(&bound, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0].re - h).abs() < 1e-12);
        assert!((s.amplitudes()[1].re - h).abs() < 1e-12);
    }

    #[test]
    fn z_map_at_origin_is_identity() {
        let c = build_z_feature_map(&z(5, 2)).unwrap().bind(&[0.0; 5]).unwrap();
        let s = run_circuit(&c, 5).unwrap();
        let zero = zero_state(5).unwrap();
        for (a, b) in s.amplitudes().iter().zip(zero.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn zz_map_two_features_sequence() {
        let c = build_zz_feature_map(&zz(2, 1)).unwrap();
        assert_eq!(
            c.dump(),
            "H 0\nH 1\nP 0 2*x0\nP 1 2*x1\nCX 1 0\nP 1 2*(pi-x0)*(pi-x1)\nCX 1 0\n"
        );
    }

    #[test]
    fn zz_map_cx_count() {
        let c = build_zz_feature_map(&zz(5, 2)).unwrap();
        assert_eq!(c.count(GateKind::Cx), 40);
        let mut linear = zz(5, 2);
        linear.entanglement = Entanglement::Linear;
        assert_eq!(build_zz_feature_map(&linear).unwrap().count(GateKind::Cx), 16);
    }

    #[test]
    fn zz_map_needs_two_features() {
        assert!(matches!(build_zz_feature_map(&zz(1, 1)), Err(Error::Spec(_))));
        assert!(matches!(build_zz_feature_map(&z(3, 1)), Err(Error::Spec(_))));
        assert!(matches!(build_z_feature_map(&zz(3, 1)), Err(Error::Spec(_))));
    }

    #[test]
    fn real_amplitudes_parameter_counts() {
        for (reps, expected) in [(1, 10), (2, 15), (9, 50)] {
            let c = build_real_amplitudes(&AnsatzSpec::new(5, reps)).unwrap();
            assert_eq!(c.symbols().len(), expected);
            assert_eq!(c.count(GateKind::Ry), expected);
            assert_eq!(c.count(GateKind::Cx), reps * 10);
        }
    }

    #[test]
    fn real_amplitudes_at_zero_fixes_ground_state() {
        let c = build_real_amplitudes(&AnsatzSpec::new(5, 2)).unwrap();
        let s = run_circuit(&c.bind(&[0.0; 15]).unwrap(), 5).unwrap();
        assert!((s.amplitudes()[0].re - 1.0).abs() < 1e-12);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn real_amplitudes_layer_structure() {
        let c = build_real_amplitudes(&AnsatzSpec::new(2, 1)).unwrap();
        assert_eq!(
            c.dump(),
            "RY 0 theta0\nRY 1 theta1\nCX 1 0\nRY 0 theta2\nRY 1 theta3\n"
        );
    }

    #[test]
    fn bind_rules() {
        let empty = Circuit::new(2);
        assert_eq!(empty.bind(&[]).unwrap(), empty);

        let c = build_z_feature_map(&z(5, 2)).unwrap();
        let bound = c.bind(&[0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        assert!(bound.is_bound());
        let angles: Vec<f64> = bound
            .gates()
            .iter()
            .filter_map(|g| match g.angle {
                Some(Angle::Fixed(v)) => Some(v),
                _ => None,
            })
            .collect();
        assert_eq!(angles, vec![0.2, 0.4, 0.6, 0.8, 1.0, 0.2, 0.4, 0.6, 0.8, 1.0]);

        assert!(matches!(c.bind(&[0.1; 4]), Err(Error::Binding(_))));
    }

    #[test]
    fn params_to_reps_grid() {
        assert_eq!(params_to_reps(15, 5).unwrap(), 2);
        assert_eq!(params_to_reps(10, 5).unwrap(), 1);
        assert_eq!(params_to_reps(50, 5).unwrap(), 9);
        let built = build_real_amplitudes(&AnsatzSpec::new(5, 9)).unwrap();
        assert_eq!(built.symbols().len(), 50);
        assert!(params_to_reps(12, 5).is_err());
        assert!(params_to_reps(5, 5).is_err());
    }

    #[test]
    fn append_renumbers_symbols() {
        let mut c = build_z_feature_map(&z(2, 1)).unwrap();
        c.append(&build_real_amplitudes(&AnsatzSpec::new(2, 1)).unwrap())
            .unwrap();
        assert_eq!(c.symbols().len(), 6);
        assert!(c.dump().ends_with("RY 0 theta2\nRY 1 theta3\n"));
        assert!(c.bind(&[0.0; 6]).unwrap().is_bound());
    }

    #[test]
    fn push_rejects_undeclared_symbol() {
        let mut c = Circuit::new(1);
        let g = Gate::ry(0, AngleExpr::Scaled { symbol: 0, factor: 1.0 });
        assert!(matches!(c.push(g), Err(Error::Binding(_))));
    }
}
