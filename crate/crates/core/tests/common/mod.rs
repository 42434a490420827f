//! Dense-matrix reference simulator. Gates are expanded to full `2^n x 2^n`
//! operators with Kronecker products and multiplied onto the state, with no
//! code shared with the stride-based simulator.

#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;

pub type Matrix = Vec<Vec<Complex64>>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> Matrix {
    (0..dim)
        .map(|i| (0..dim).map(|j| c(if i == j { 1.0 } else { 0.0 })).collect())
        .collect()
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn add(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

pub fn mat_vec(m: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn h() -> Matrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![vec![c(s), c(s)], vec![c(s), c(-s)]]
}

pub fn phase(phi: f64) -> Matrix {
    vec![
        vec![c(1.0), c(0.0)],
        vec![c(0.0), Complex64::from_polar(1.0, phi)],
    ]
}

pub fn ry(theta: f64) -> Matrix {
    let (s, co) = (theta / 2.0).sin_cos();
    vec![vec![c(co), c(-s)], vec![c(s), c(co)]]
}

fn x() -> Matrix {
    vec![vec![c(0.0), c(1.0)], vec![c(1.0), c(0.0)]]
}

fn projector(bit: usize) -> Matrix {
    let mut m = vec![vec![c(0.0); 2]; 2];
    m[bit][bit] = c(1.0);
    m
}

/// Tensor product with qubit `n-1` leftmost, so qubit 0 is the least
/// significant bit of the basis index.
fn embed(n: usize, ops: &[(usize, Matrix)]) -> Matrix {
    let mut full = vec![vec![c(1.0)]];
    for q in (0..n).rev() {
        let factor = ops
            .iter()
            .find(|(t, _)| *t == q)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(|| identity(2));
        full = kron(&full, &factor);
    }
    full
}

pub fn single(n: usize, target: usize, m: Matrix) -> Matrix {
    embed(n, &[(target, m)])
}

pub fn cx(n: usize, control: usize, target: usize) -> Matrix {
    add(
        &embed(n, &[(control, projector(0))]),
        &embed(n, &[(control, projector(1)), (target, x())]),
    )
}

/// Full operator list for the first- or second-order Pauli feature map.
pub fn feature_map_ops(x: &[f64], reps: usize, second_order: bool, pairs: &[(usize, usize)]) -> Vec<Matrix> {
    let n = x.len();
    let mut ops = Vec::new();
    for _ in 0..reps {
        for q in 0..n {
            ops.push(single(n, q, h()));
        }
        for q in 0..n {
            ops.push(single(n, q, phase(2.0 * x[q])));
        }
        if second_order {
            for &(i, j) in pairs {
                ops.push(cx(n, i, j));
                ops.push(single(n, j, phase(2.0 * (PI - x[i]) * (PI - x[j]))));
                ops.push(cx(n, i, j));
            }
        }
    }
    ops
}

/// Full operator list for the RY/CX ansatz, angles layer-major.
pub fn ansatz_ops(n: usize, theta: &[f64], pairs: &[(usize, usize)]) -> Vec<Matrix> {
    let layers = theta.len() / n;
    let mut ops = Vec::new();
    for l in 0..layers {
        if l > 0 {
            for &(i, j) in pairs {
                ops.push(cx(n, i, j));
            }
        }
        for q in 0..n {
            ops.push(single(n, q, ry(theta[l * n + q])));
        }
    }
    ops
}

pub fn full_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

pub fn linear_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect()
}

pub fn run_ops(n: usize, ops: &[Matrix]) -> Vec<Complex64> {
    let mut state = vec![c(0.0); 1 << n];
    state[0] = c(1.0);
    for m in ops {
        state = mat_vec(m, &state);
    }
    state
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
