//! Dense statevector simulator with mid-circuit measurement collapse.
//!
//! Qubit 0 is the most significant bit of the basis index, so a register
//! listed as [q0, q1, q2] reads its value MSB first. Gates are applied in
//! place; measurements draw exactly one uniform f64 from the caller's RNG
//! and collapse the state.

use num_complex::Complex64;
use rand::Rng;

pub const MAX_QUBITS: usize = 24;

/// Elementary gate set. Angle conventions:
/// Rx/Ry/Rz(t) = exp(-i t P/2), Xx(t) = exp(+i t X⊗X),
/// CPhase(t) = diag(1, 1, 1, e^{i t}).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    Cnot { control: usize, target: usize },
    Xx(usize, usize, f64),
    CPhase(usize, usize, f64),
}

/// Single-qubit measurement frames. `ZPlusX` and `ZMinusX` name the
/// operators (Z ± X)/√2; outcome 0 labels the +1 eigenstate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Basis {
    Z,
    X,
    ZPlusX,
    ZMinusX,
}

#[derive(Clone, Debug)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0...0⟩ on `n` qubits.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1 && n <= MAX_QUBITS, "qubit count {n} out of range");
        let mut amps = vec![Complex64::ZERO; 1 << n];
        amps[0] = Complex64::ONE;
        StateVector { n, amps }
    }

    /// Builds a state directly from amplitudes; the vector must already be
    /// normalized and of length 2^n.
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Self {
        assert!(n >= 1 && n <= MAX_QUBITS, "qubit count {n} out of range");
        assert_eq!(amps.len(), 1 << n, "amplitude count must be 2^n");
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-9, "state not normalized (norm^2 = {norm})");
        StateVector { n, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    fn mask(&self, qubit: usize) -> usize {
        assert!(qubit < self.n, "qubit {qubit} out of range");
        1 << (self.n - 1 - qubit)
    }

    /// Value of the listed qubits within basis index `k`, MSB first.
    pub fn register_value(&self, k: usize, qubits: &[usize]) -> u64 {
        qubits.iter().fold(0u64, |acc, &q| (acc << 1) | ((k & self.mask(q)) != 0) as u64)
    }

    pub fn apply(&mut self, gate: Gate) {
        match gate {
            Gate::H(q) => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                self.single(q, [[s.into(), s.into()], [s.into(), (-s).into()]]);
            }
            Gate::X(q) => {
                self.single(q, [[Complex64::ZERO, Complex64::ONE], [Complex64::ONE, Complex64::ZERO]]);
            }
            Gate::Rx(q, t) => {
                let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
                let mis = Complex64::new(0.0, -s);
                self.single(q, [[c.into(), mis], [mis, c.into()]]);
            }
            Gate::Ry(q, t) => {
                let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
                self.single(q, [[c.into(), (-s).into()], [s.into(), c.into()]]);
            }
            Gate::Rz(q, t) => {
                let ph = Complex64::from_polar(1.0, t / 2.0);
                self.single(q, [[ph.conj(), Complex64::ZERO], [Complex64::ZERO, ph]]);
            }
            Gate::Cnot { control, target } => {
                assert_ne!(control, target, "control and target must differ");
                let (cm, tm) = (self.mask(control), self.mask(target));
                for k in 0..self.amps.len() {
                    if k & cm != 0 && k & tm == 0 {
                        self.amps.swap(k, k | tm);
                    }
                }
            }
            Gate::Xx(a, b, t) => {
                assert_ne!(a, b, "gate qubits must differ");
                let (am, bm) = (self.mask(a), self.mask(b));
                let (c, is) = (Complex64::from(t.cos()), Complex64::new(0.0, t.sin()));
                for k in 0..self.amps.len() {
                    if k & am == 0 && k & bm == 0 {
                        let (k00, k01, k10, k11) = (k, k | bm, k | am, k | am | bm);
                        let (a00, a01, a10, a11) =
                            (self.amps[k00], self.amps[k01], self.amps[k10], self.amps[k11]);
                        self.amps[k00] = c * a00 + is * a11;
                        self.amps[k11] = c * a11 + is * a00;
                        self.amps[k01] = c * a01 + is * a10;
                        self.amps[k10] = c * a10 + is * a01;
                    }
                }
            }
            Gate::CPhase(a, b, t) => {
                assert_ne!(a, b, "gate qubits must differ");
                let (am, bm) = (self.mask(a), self.mask(b));
                let ph = Complex64::from_polar(1.0, t);
                for k in 0..self.amps.len() {
                    if k & am != 0 && k & bm != 0 {
                        self.amps[k] *= ph;
                    }
                }
            }
        }
    }

    fn single(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let mask = self.mask(q);
        for k in 0..self.amps.len() {
            if k & mask == 0 {
                let (a0, a1) = (self.amps[k], self.amps[k | mask]);
                self.amps[k] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[k | mask] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn apply_all(&mut self, gates: &[Gate]) {
        for &g in gates {
            self.apply(g);
        }
    }

    /// Multiplies each basis amplitude by e^{i phase(v)} where v is the
    /// value of the listed qubits. This is the uncompiled route for a
    /// diagonal unitary.
    pub fn apply_diagonal_phase(&mut self, qubits: &[usize], phase: impl Fn(u64) -> f64) {
        let m = 1u64 << qubits.len();
        let table: Vec<Complex64> =
            (0..m).map(|v| Complex64::from_polar(1.0, phase(v))).collect();
        for k in 0..self.amps.len() {
            let v = self.register_value(k, qubits) as usize;
            self.amps[k] *= table[v];
        }
    }

    /// Fourier transform on a register: |y⟩ → M^{-1/2} Σ_w e^{+2πi wy/M}|w⟩.
    pub fn qft(&mut self, qubits: &[usize]) {
        self.fourier(qubits, 1.0);
    }

    /// Inverse Fourier transform: |y⟩ → M^{-1/2} Σ_w e^{-2πi wy/M}|w⟩.
    pub fn qft_inv(&mut self, qubits: &[usize]) {
        self.fourier(qubits, -1.0);
    }

    fn fourier(&mut self, qubits: &[usize], sign: f64) {
        let m = 1usize << qubits.len();
        let scatter: Vec<usize> = (0..m)
            .map(|v| {
                qubits
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (i, &q)| {
                        if v & (1 << (qubits.len() - 1 - i)) != 0 { acc | self.mask(q) } else { acc }
                    })
            })
            .collect();
        let reg_mask: usize = qubits.iter().map(|&q| self.mask(q)).sum();
        let root = sign * 2.0 * std::f64::consts::PI / m as f64;
        let f: Vec<Complex64> = (0..m * m)
            .map(|i| Complex64::from_polar(1.0 / (m as f64).sqrt(), root * ((i / m * (i % m)) % m) as f64))
            .collect();
        let mut out = vec![Complex64::ZERO; self.amps.len()];
        for base in 0..self.amps.len() {
            if base & reg_mask != 0 {
                continue;
            }
            for w in 0..m {
                let mut acc = Complex64::ZERO;
                for y in 0..m {
                    acc += f[w * m + y] * self.amps[base | scatter[y]];
                }
                out[base | scatter[w]] = acc;
            }
        }
        self.amps = out;
    }

    /// Probability distribution over the values of a register.
    pub fn register_distribution(&self, qubits: &[usize]) -> Vec<f64> {
        let mut probs = vec![0.0; 1 << qubits.len()];
        for (k, amp) in self.amps.iter().enumerate() {
            probs[self.register_value(k, qubits) as usize] += amp.norm_sqr();
        }
        probs
    }

    /// Projective measurement of a register in the computational basis.
    /// Samples by the Born rule, collapses in place, and returns the
    /// outcome with its pre-collapse probability.
    pub fn measure_register(&mut self, qubits: &[usize], rng: &mut impl Rng) -> (u64, f64) {
        let probs = self.register_distribution(qubits);
        let total: f64 = probs.iter().sum();
        assert!(total > 1e-12, "state has lost its norm");
        let mut u = rng.gen::<f64>() * total;
        let mut outcome = probs.len() - 1;
        for (v, p) in probs.iter().enumerate() {
            if u < *p {
                outcome = v;
                break;
            }
            u -= p;
        }
        let p = probs[outcome];
        let scale = 1.0 / p.sqrt();
        for k in 0..self.amps.len() {
            if self.register_value(k, qubits) as usize == outcome {
                self.amps[k] *= scale;
            } else {
                self.amps[k] = Complex64::ZERO;
            }
        }
        (outcome as u64, p)
    }

    /// Measures one qubit in the given frame and collapses to the named
    /// operator's eigenstate. Outcome 0 labels the +1 eigenvalue.
    pub fn measure_in_basis(&mut self, qubit: usize, basis: Basis, rng: &mut impl Rng) -> (u8, f64) {
        let (into, back) = match basis {
            Basis::Z => (None, None),
            Basis::X => (Some(Gate::H(qubit)), Some(Gate::H(qubit))),
            Basis::ZPlusX => (
                Some(Gate::Ry(qubit, -std::f64::consts::FRAC_PI_4)),
                Some(Gate::Ry(qubit, std::f64::consts::FRAC_PI_4)),
            ),
            Basis::ZMinusX => (
                Some(Gate::Ry(qubit, std::f64::consts::FRAC_PI_4)),
                Some(Gate::Ry(qubit, -std::f64::consts::FRAC_PI_4)),
            ),
        };
        if let Some(g) = into {
            self.apply(g);
        }
        let (v, p) = self.measure_register(&[qubit], rng);
        if let Some(g) = back {
            self.apply(g);
        }
        (v as u8, p)
    }

    /// ⟨self|other⟩.
    pub fn inner_product(&self, other: &StateVector) -> Complex64 {
        assert_eq!(self.n, other.n);
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}
