//! Dense-matrix reference implementations used as independent oracles in
//! tests. Everything here builds explicit 2^n x 2^n matrices from first
//! principles and never calls the simulator's gate application code.

use num_complex::Complex64;

use crate::sim::{Gate, StateVector};

pub type Matrix = Vec<Vec<Complex64>>;

pub fn identity(dim: usize) -> Matrix {
    let mut m = vec![vec![Complex64::ZERO; dim]; dim];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::ONE;
    }
    m
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    assert_eq!(a[0].len(), k);
    let mut out = vec![vec![Complex64::ZERO; m]; n];
    for i in 0..n {
        for l in 0..k {
            let ail = a[i][l];
            if ail == Complex64::ZERO {
                continue;
            }
            for j in 0..m {
                out[i][j] += ail * b[l][j];
            }
        }
    }
    out
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (an, bn) = (a.len(), b.len());
    let mut out = vec![vec![Complex64::ZERO; an * bn]; an * bn];
    for i in 0..an {
        for j in 0..an {
            for k in 0..bn {
                for l in 0..bn {
                    out[i * bn + k][j * bn + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn apply_matrix(m: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    m.iter().map(|row| row.iter().zip(v).map(|(c, a)| c * a).sum()).collect()
}

fn pauli_1q(c: char) -> Matrix {
    let (z, o, i) = (Complex64::ZERO, Complex64::ONE, Complex64::I);
    match c {
        'I' => vec![vec![o, z], vec![z, o]],
        'X' => vec![vec![z, o], vec![o, z]],
        'Y' => vec![vec![z, -i], vec![i, z]],
        'Z' => vec![vec![o, z], vec![z, -o]],
        _ => panic!("unknown Pauli {c:?}"),
    }
}

/// Tensor product of single-qubit Paulis, leftmost character on qubit 0.
pub fn pauli_string(s: &str) -> Matrix {
    s.chars().map(pauli_1q).reduce(|acc, m| kron(&acc, &m)).expect("empty Pauli string")
}

/// exp(i t P) = cos(t) I + i sin(t) P for a Pauli string P.
pub fn pauli_exponential(s: &str, t: f64) -> Matrix {
    let p = pauli_string(s);
    let dim = p.len();
    let (c, is) = (Complex64::from(t.cos()), Complex64::new(0.0, t.sin()));
    let mut out = identity(dim);
    for i in 0..dim {
        for j in 0..dim {
            out[i][j] = if i == j { c } else { Complex64::ZERO } + is * p[i][j];
        }
    }
    out
}

/// Embeds a gate's defining matrix into the full 2^n-dimensional space,
/// with qubit 0 as the most significant index bit.
pub fn gate_matrix(n: usize, gate: &Gate) -> Matrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (z, o) = (Complex64::ZERO, Complex64::ONE);
    let single = |q: usize, m: Matrix| embed(n, &[q], &m);
    match *gate {
        Gate::H(q) => single(q, vec![vec![s.into(), s.into()], vec![s.into(), (-s).into()]]),
        Gate::X(q) => single(q, pauli_1q('X')),
        Gate::Rx(q, t) => {
            let (c, ms) = (Complex64::from((t / 2.0).cos()), Complex64::new(0.0, -(t / 2.0).sin()));
            single(q, vec![vec![c, ms], vec![ms, c]])
        }
        Gate::Ry(q, t) => {
            let (c, sn) = ((t / 2.0).cos(), (t / 2.0).sin());
            single(q, vec![vec![c.into(), (-sn).into()], vec![sn.into(), c.into()]])
        }
        Gate::Rz(q, t) => {
            let ph = Complex64::from_polar(1.0, t / 2.0);
            single(q, vec![vec![ph.conj(), z], vec![z, ph]])
        }
        Gate::Cnot { control, target } => {
            let m = vec![
                vec![o, z, z, z],
                vec![z, o, z, z],
                vec![z, z, z, o],
                vec![z, z, o, z],
            ];
            embed(n, &[control, target], &m)
        }
        Gate::Xx(a, b, t) => embed(n, &[a, b], &pauli_exponential("XX", t)),
        Gate::CPhase(a, b, t) => {
            let mut m = identity(4);
            m[3][3] = Complex64::from_polar(1.0, t);
            embed(n, &[a, b], &m)
        }
    }
}

/// Product of a gate sequence as one matrix; gates apply left to right in
/// time, so later gates end up on the left of the product.
pub fn gate_list_matrix(n: usize, gates: &[Gate]) -> Matrix {
    gates.iter().fold(identity(1 << n), |acc, g| mat_mul(&gate_matrix(n, g), &acc))
}

fn embed(n: usize, qubits: &[usize], m: &Matrix) -> Matrix {
    let dim = 1usize << n;
    let k = qubits.len();
    assert_eq!(m.len(), 1 << k);
    let bit = |index: usize, q: usize| (index >> (n - 1 - q)) & 1;
    let mut out = vec![vec![Complex64::ZERO; dim]; dim];
    for col in 0..dim {
        let mcol = qubits.iter().fold(0usize, |acc, &q| (acc << 1) | bit(col, q));
        for mrow in 0..1 << k {
            if m[mrow][mcol] == Complex64::ZERO {
                continue;
            }
            // Scatter the gate's output bits back into the full index.
            let mut row = col;
            for (i, &q) in qubits.iter().enumerate() {
                let b = (mrow >> (k - 1 - i)) & 1;
                let mask = 1usize << (n - 1 - q);
                row = (row & !mask) | (b << (n - 1 - q));
            }
            out[row][col] = m[mrow][mcol];
        }
    }
    out
}

pub fn state_from_amps(n: usize, amps: Vec<Complex64>) -> StateVector {
    StateVector::from_amplitudes(n, amps)
}

pub fn assert_states_close(got: &[Complex64], expect: &[Complex64], eps: f64) {
    assert_eq!(got.len(), expect.len());
    for (k, (g, e)) in got.iter().zip(expect).enumerate() {
        assert!((g - e).norm() <= eps, "amplitude {k}: got {g}, expected {e}");
    }
}

/// Elementwise comparison after aligning the global phase on the largest
/// expected amplitude.
pub fn assert_states_close_up_to_phase(got: &[Complex64], expect: &[Complex64], eps: f64) {
    assert_eq!(got.len(), expect.len());
    let k = expect
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .map(|(k, _)| k)
        .unwrap();
    assert!(expect[k].norm() > 1e-12, "expected state is numerically zero");
    let phase = (got[k] / expect[k]) / (got[k] / expect[k]).norm();
    assert!((phase.norm() - 1.0).abs() < 1e-6, "states differ by more than a phase");
    for (i, (g, e)) in got.iter().zip(expect).enumerate() {
        let aligned = e * phase;
        assert!((g - aligned).norm() <= eps, "amplitude {i}: got {g}, expected {aligned}");
    }
}

pub fn assert_matrices_close(got: &Matrix, expect: &Matrix, eps: f64) {
    assert_eq!(got.len(), expect.len());
    for (i, (gr, er)) in got.iter().zip(expect).enumerate() {
        for (j, (g, e)) in gr.iter().zip(er).enumerate() {
            assert!((g - e).norm() <= eps, "entry ({i},{j}): got {g}, expected {e}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_exponential_of_z_is_a_phase_pair() {
        let m = pauli_exponential("Z", 0.4);
        let expect = Complex64::from_polar(1.0, 0.4);
        assert!((m[0][0] - expect).norm() < 1e-12);
        assert!((m[1][1] - expect.conj()).norm() < 1e-12);
    }

    #[test]
    fn embedding_respects_msb_convention() {
        // X on qubit 0 of two swaps the high-order index bit.
        let m = gate_matrix(2, &Gate::X(0));
        assert_eq!(m[0b10][0b00], Complex64::ONE);
        assert_eq!(m[0b01][0b11], Complex64::ONE);
    }

    #[test]
    fn cnot_embedding_with_reversed_operands() {
        let m = gate_matrix(2, &Gate::Cnot { control: 1, target: 0 });
        assert_eq!(m[0b11][0b01], Complex64::ONE);
        assert_eq!(m[0b01][0b11], Complex64::ONE);
        assert_eq!(m[0b00][0b00], Complex64::ONE);
    }
}
