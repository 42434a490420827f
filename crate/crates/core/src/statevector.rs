//! Dense statevector simulation over the gate set {H, P, RY, CX}.
//!
//! Amplitudes are stored little-endian: bit `q` of a basis index is the value
//! of qubit `q`. Gates are applied in place by iterating over amplitude pairs
//! that differ only in the target bit, so no gate matrix is ever built.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use num_complex::Complex64;

use crate::circuits::Circuit;
use crate::{Error, Result};

/// Largest register the simulator will allocate (2^24 amplitudes, 256 MiB).
pub const MAX_QUBITS: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    P,
    Ry,
    Cx,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::P => "P",
            GateKind::Ry => "RY",
            GateKind::Cx => "CX",
        }
    }
}

/// A symbolic angle, evaluated against the positional symbol values of the
/// circuit that owns the gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AngleExpr {
    /// `factor * s[symbol]`.
    Scaled { symbol: usize, factor: f64 },
    /// `2 (pi - s[a]) (pi - s[b])`, the second-order Pauli-expansion phase.
    PairPhase { a: usize, b: usize },
}

impl AngleExpr {
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        match *self {
            AngleExpr::Scaled { symbol, factor } => factor * values[symbol],
            AngleExpr::PairPhase { a, b } => 2.0 * (PI - values[a]) * (PI - values[b]),
        }
    }

    pub(crate) fn shifted(self, offset: usize) -> Self {
        match self {
            AngleExpr::Scaled { symbol, factor } => AngleExpr::Scaled {
                symbol: symbol + offset,
                factor,
            },
            AngleExpr::PairPhase { a, b } => AngleExpr::PairPhase {
                a: a + offset,
                b: b + offset,
            },
        }
    }

    pub(crate) fn max_symbol(&self) -> usize {
        match *self {
            AngleExpr::Scaled { symbol, .. } => symbol,
            AngleExpr::PairPhase { a, b } => a.max(b),
        }
    }

    pub(crate) fn render(&self, symbols: &[String]) -> String {
        let name = |i: usize| {
            symbols
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("${i}"))
        };
        match *self {
            AngleExpr::Scaled { symbol, factor } if factor == 1.0 => name(symbol),
            AngleExpr::Scaled { symbol, factor } => format!("{factor}*{}", name(symbol)),
            AngleExpr::PairPhase { a, b } => format!("2*(pi-{})*(pi-{})", name(a), name(b)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Angle {
    Fixed(f64),
    Symbolic(AngleExpr),
}

impl From<f64> for Angle {
    fn from(value: f64) -> Self {
        Angle::Fixed(value)
    }
}

impl From<AngleExpr> for Angle {
    fn from(expr: AngleExpr) -> Self {
        Angle::Symbolic(expr)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    /// Present only for `CX`.
    pub control: Option<usize>,
    /// Present only for `P` and `RY`.
    pub angle: Option<Angle>,
}

impl Gate {
    pub fn h(target: usize) -> Self {
        Gate {
            kind: GateKind::H,
            target,
            control: None,
            angle: None,
        }
    }

    pub fn p(target: usize, angle: impl Into<Angle>) -> Self {
        Gate {
            kind: GateKind::P,
            target,
            control: None,
            angle: Some(angle.into()),
        }
    }

    pub fn ry(target: usize, angle: impl Into<Angle>) -> Self {
        Gate {
            kind: GateKind::Ry,
            target,
            control: None,
            angle: Some(angle.into()),
        }
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Gate {
            kind: GateKind::Cx,
            target,
            control: Some(control),
            angle: None,
        }
    }

    pub fn is_bound(&self) -> bool {
        !matches!(self.angle, Some(Angle::Symbolic(_)))
    }

    /// Resolves a symbolic angle against positional values.
    pub fn bound(&self, values: &[f64]) -> Gate {
        let angle = self.angle.map(|a| match a {
            Angle::Symbolic(expr) => Angle::Fixed(expr.evaluate(values)),
            fixed => fixed,
        });
        Gate { angle, ..*self }
    }

    /// The fixed angle of a bound `P`/`RY` gate.
    fn fixed_angle(&self) -> Result<f64> {
        match self.angle {
            Some(Angle::Fixed(v)) => Ok(v),
            Some(Angle::Symbolic(_)) => Err(Error::Binding(format!(
                "{} on qubit {} has an unbound symbolic angle",
                self.kind.name(),
                self.target
            ))),
            None => Err(Error::Spec(format!(
                "{} on qubit {} is missing its angle",
                self.kind.name(),
                self.target
            ))),
        }
    }

    pub(crate) fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.target >= n_qubits {
            return Err(Error::Size(format!(
                "target qubit {} out of range for {n_qubits} qubits",
                self.target
            )));
        }
        match (self.kind, self.control) {
            (GateKind::Cx, Some(c)) if c >= n_qubits => Err(Error::Size(format!(
                "control qubit {c} out of range for {n_qubits} qubits"
            ))),
            (GateKind::Cx, Some(c)) if c == self.target => Err(Error::Spec(format!(
                "CX control and target are both qubit {c}"
            ))),
            (GateKind::Cx, None) => Err(Error::Spec("CX without a control qubit".into())),
            (_, Some(_)) if self.kind != GateKind::Cx => Err(Error::Spec(format!(
                "{} does not take a control qubit",
                self.kind.name()
            ))),
            _ => Ok(()),
        }
    }
}

/// `KIND target [control] [angle]`.
impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind.name(), self.target)?;
        if let Some(c) = self.control {
            write!(f, " {c}")?;
        }
        match self.angle {
            Some(Angle::Fixed(v)) => write!(f, " {v}"),
            Some(Angle::Symbolic(expr)) => write!(f, " {}", expr.render(&[])),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros basis state `|0...0>`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps explicit amplitudes. The length must be a power of two; the
    /// vector is not renormalised.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Size(format!(
                "{len} amplitudes is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        Ok(StateVector {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match gate.kind {
            GateKind::H => {
                self.apply_hadamard(gate.target);
            }
            GateKind::P => {
                let phase = Complex64::from_polar(1.0, gate.fixed_angle()?);
                self.apply_phase(gate.target, phase);
            }
            GateKind::Ry => {
                let half = 0.5 * gate.fixed_angle()?;
                self.apply_ry(gate.target, half.cos(), half.sin());
            }
            GateKind::Cx => {
                // validate() guarantees the control is present.
                self.apply_cx(gate.control.unwrap_or_default(), gate.target);
            }
        }
        Ok(())
    }

    /// Applies every gate of a bound circuit, in order, to this state.
    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits() != self.n_qubits {
            return Err(Error::Size(format!(
                "circuit acts on {} qubits, state has {}",
                circuit.n_qubits(),
                self.n_qubits
            )));
        }
        circuit.gates().iter().try_for_each(|g| self.apply(g))
    }

    /// Total probability of the basis states whose popcount has the given parity.
    pub fn parity_probability(&self, parity: Parity) -> f64 {
        debug_assert!(
            (self.norm_sqr() - 1.0).abs() < 1e-8,
            "parity readout on an unnormalised state"
        );
        let want_odd = parity == Parity::Odd;
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(z, _)| (z.count_ones() % 2 == 1) == want_odd)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Probability that measuring `qubit` yields 1.
    pub fn qubit_one_probability(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.n_qubits {
            return Err(Error::Size(format!(
                "readout qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        let mask = 1usize << qubit;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(z, _)| z & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    fn apply_hadamard(&mut self, target: usize) {
        let stride = 1usize << target;
        for base in (0..self.amplitudes.len()).step_by(stride << 1) {
            for i in base..base + stride {
                let a = self.amplitudes[i];
                let b = self.amplitudes[i + stride];
                self.amplitudes[i] = (a + b) * FRAC_1_SQRT_2;
                self.amplitudes[i + stride] = (a - b) * FRAC_1_SQRT_2;
            }
        }
    }

    fn apply_phase(&mut self, target: usize, phase: Complex64) {
        let stride = 1usize << target;
        for base in (0..self.amplitudes.len()).step_by(stride << 1) {
            for amp in &mut self.amplitudes[base + stride..base + 2 * stride] {
                *amp *= phase;
            }
        }
    }

    fn apply_ry(&mut self, target: usize, cos: f64, sin: f64) {
        let stride = 1usize << target;
        for base in (0..self.amplitudes.len()).step_by(stride << 1) {
            for i in base..base + stride {
                let a = self.amplitudes[i];
                let b = self.amplitudes[i + stride];
                self.amplitudes[i] = a * cos - b * sin;
                self.amplitudes[i + stride] = a * sin + b * cos;
            }
        }
    }

    fn apply_cx(&mut self, control: usize, target: usize) {
        let cmask = 1usize << control;
        let tmask = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
    }
}

fn check_qubits(n_qubits: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n_qubits) {
        Ok(())
    } else {
        Err(Error::Size(format!(
            "{n_qubits} qubits outside the supported range 1..={MAX_QUBITS}"
        )))
    }
}

pub fn zero_state(n_qubits: usize) -> Result<StateVector> {
    StateVector::zero(n_qubits)
}

pub fn apply_gate(mut state: StateVector, gate: &Gate) -> Result<StateVector> {
    state.apply(gate)?;
    Ok(state)
}

/// Folds the circuit's gates over `|0...0>`.
pub fn run_circuit(circuit: &Circuit, n_qubits: usize) -> Result<StateVector> {
    let mut state = StateVector::zero(n_qubits)?;
    state.apply_circuit(circuit)?;
    Ok(state)
}

pub fn probability_of_parity(state: &StateVector, parity: Parity) -> f64 {
    state.parity_probability(parity)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn assert_close(state: &StateVector, expected: &[Complex64]) {
        assert_eq!(state.amplitudes().len(), expected.len());
        for (a, b) in state.amplitudes().iter().zip(expected) {
            assert!((a - b).norm() < 1e-12, "{a} != {b}");
        }
    }

    #[test]
    fn zero_state_has_unit_first_amplitude() {
        assert_close(&zero_state(1).unwrap(), &[c(1.0), c(0.0)]);
        assert_close(&zero_state(2).unwrap(), &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        let s = zero_state(5).unwrap();
        assert_eq!(s.amplitudes().len(), 32);
        assert_eq!(s.amplitudes()[0], c(1.0));
        assert!(s.amplitudes()[1..].iter().all(|a| *a == c(0.0)));
    }

    #[test]
    fn zero_state_rejects_bad_sizes() {
        assert!(matches!(zero_state(0), Err(Error::Size(_))));
        assert!(matches!(zero_state(MAX_QUBITS + 1), Err(Error::Size(_))));
    }

    #[test]
    fn hadamard_makes_plus_state() {
        let s = apply_gate(zero_state(1).unwrap(), &Gate::h(0)).unwrap();
        assert_close(&s, &[c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)]);
    }

    #[test]
    fn ry_zero_is_identity() {
        let mut s = zero_state(2).unwrap();
        s.apply(&Gate::h(0)).unwrap();
        s.apply(&Gate::p(0, 0.7)).unwrap();
        let before = s.clone();
        s.apply(&Gate::ry(1, 0.0)).unwrap();
        s.apply(&Gate::ry(0, 0.0)).unwrap();
        assert_close(&s, before.amplitudes());
    }

    #[test]
    fn cx_truth_table() {
        // |10> in ket notation: qubit 1 carries the 1, basis index 0b10.
        let mut amps = vec![c(0.0); 4];
        amps[0b10] = c(1.0);
        let s = StateVector::from_amplitudes(amps).unwrap();
        let s = apply_gate(s, &Gate::cx(1, 0)).unwrap();
        let mut expected = vec![c(0.0); 4];
        expected[0b11] = c(1.0);
        assert_close(&s, &expected);

        // Control at 0 leaves the state alone.
        let mut amps = vec![c(0.0); 4];
        amps[0b10] = c(1.0);
        let s = StateVector::from_amplitudes(amps.clone()).unwrap();
        let s = apply_gate(s, &Gate::cx(0, 1)).unwrap();
        assert_close(&s, &amps);
    }

    #[test]
    fn unbound_angle_is_a_binding_error() {
        let g = Gate::p(0, AngleExpr::Scaled { symbol: 0, factor: 2.0 });
        let err = apply_gate(zero_state(1).unwrap(), &g).unwrap_err();
        assert!(matches!(err, Error::Binding(_)));
    }

    #[test]
    fn bad_indices_are_size_errors() {
        let s = zero_state(2).unwrap();
        assert!(matches!(
            apply_gate(s.clone(), &Gate::h(2)),
            Err(Error::Size(_))
        ));
        assert!(matches!(
            apply_gate(s.clone(), &Gate::cx(3, 0)),
            Err(Error::Size(_))
        ));
        assert!(matches!(apply_gate(s, &Gate::cx(1, 1)), Err(Error::Spec(_))));
    }

    #[test]
    fn parity_readout() {
        let s = zero_state(5).unwrap();
        assert_eq!(probability_of_parity(&s, Parity::Even), 1.0);

        let h = 0.5f64.sqrt();
        let bell = StateVector::from_amplitudes(vec![c(h), c(0.0), c(0.0), c(h)]).unwrap();
        assert!((probability_of_parity(&bell, Parity::Even) - 1.0).abs() < 1e-12);

        let plus = StateVector::from_amplitudes(vec![c(h), c(h)]).unwrap();
        assert!((probability_of_parity(&plus, Parity::Odd) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn qubit_readout() {
        let mut s = zero_state(3).unwrap();
        s.apply(&Gate::ry(1, PI)).unwrap();
        assert!((s.qubit_one_probability(1).unwrap() - 1.0).abs() < 1e-12);
        assert!(s.qubit_one_probability(0).unwrap().abs() < 1e-12);
        assert!(s.qubit_one_probability(3).is_err());
    }

    #[test]
    fn gate_display() {
        assert_eq!(Gate::h(3).to_string(), "H 3");
        assert_eq!(Gate::cx(0, 2).to_string(), "CX 2 0");
        assert_eq!(Gate::ry(1, 0.25).to_string(), "RY 1 0.25");
    }
}
