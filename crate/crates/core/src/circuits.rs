//! Commit-circuit construction for both protocols.
//!
//! The squaring commit applies the diagonal unitary U|x,y⟩ =
//! e^{2πi x²y/N}|x,y⟩ between Hadamard layers and an inverse QFT on the
//! image register. U is available in two equivalent builds: a direct
//! diagonal-phase table, and a compiled gate sequence obtained by expanding
//! x²y over bits into Z, Z⊗Z, and Z⊗Z⊗Z terms, the last realized through
//! an XX cascade conjugated into the Y⊗Z⊗X frame.
//!
//! The LWE commit evaluates each row of Ax + b·y into a Fourier-encoded
//! accumulator with controlled phases, copies the rounded MSB out, and
//! uncomputes, leaving the accumulator exactly cleared.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::numtheory::BitString;
use crate::sim::{Gate, StateVector};
use crate::tcf::{LweInstance, RabinInstance};

/// One executable step of a circuit plan. Diagonal and Fourier steps exist
/// so a plan can choose between compiled gates and the simulator's direct
/// transforms; both routes are equivalence-tested.
#[derive(Clone, Debug)]
pub enum PlanStep {
    Gate(Gate),
    /// Multiply each basis amplitude by e^{i phases[v]}, v read from the
    /// listed qubits MSB first.
    DiagonalPhase { qubits: Vec<usize>, phases: Vec<f64> },
    Qft { qubits: Vec<usize> },
    InverseQft { qubits: Vec<usize> },
}

/// Whether a plan spells structured operations out as elementary gates or
/// leans on the simulator's direct implementations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuildMode {
    Compiled,
    Direct,
}

pub fn run_plan(sv: &mut StateVector, steps: &[PlanStep]) {
    for step in steps {
        match step {
            PlanStep::Gate(g) => sv.apply(*g),
            PlanStep::DiagonalPhase { qubits, phases } => {
                sv.apply_diagonal_phase(qubits, |v| phases[v as usize]);
            }
            PlanStep::Qft { qubits } => sv.qft(qubits),
            PlanStep::InverseQft { qubits } => sv.qft_inv(qubits),
        }
    }
}

pub fn gate_count(steps: &[PlanStep]) -> usize {
    steps
        .iter()
        .map(|s| match s {
            PlanStep::Gate(_) => 1,
            // A width-k Fourier transform costs k Hadamards, k(k-1)/2
            // controlled phases, and floor(k/2) swaps of three CNOTs each.
            PlanStep::Qft { qubits } | PlanStep::InverseQft { qubits } => {
                let k = qubits.len();
                k + k * (k - 1) / 2 + 3 * (k / 2)
            }
            PlanStep::DiagonalPhase { .. } => 1,
        })
        .sum()
}

/// Coefficients of the phase 2π x²y/N written over Pauli-Z eigenvalues:
/// phase(x, y) = constant + Σ single + Σ pair + Σ triple, each Pauli term
/// contributing coefficient × product of (±1) bit signs.
#[derive(Clone, Debug, Default)]
pub struct PhaseTerms {
    pub constant: f64,
    /// (qubit, coefficient) of Z terms.
    pub single: Vec<(usize, f64)>,
    /// (qubit, qubit, coefficient) of Z⊗Z terms.
    pub pair: Vec<(usize, usize, f64)>,
    /// (x qubit, x qubit, y qubit, coefficient) of Z⊗Z⊗Z terms.
    pub triple: Vec<(usize, usize, usize, f64)>,
}

fn wrap_angle(t: f64) -> f64 {
    let t = t % (2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else if t <= -PI {
        t + 2.0 * PI
    } else {
        t
    }
}

/// Expands 2π x²y/N over the bits of x and y. Qubit layout matches the
/// commit plan: x on qubits 0..n_x, y on qubits n_x..n_x+n_y, both MSB
/// first. Substituting bit = (1 - z)/2 turns each bit product into Pauli-Z
/// monomials; like terms merge and angles reduce into (-π, π].
pub fn factoring_phase_terms(inst: &RabinInstance) -> PhaseTerms {
    let (n_x, n_y) = (inst.n_x as usize, inst.n_y as usize);
    let mut constant = 0.0;
    let mut single = vec![0.0; n_x + n_y];
    let mut pair = std::collections::BTreeMap::<(usize, usize), f64>::new();
    let mut triple = std::collections::BTreeMap::<(usize, usize, usize), f64>::new();
    let mut add_pair = |a: usize, b: usize, c: f64| {
        let key = (a.min(b), a.max(b));
        *pair.entry(key).or_insert(0.0) += c;
    };
    for i in 0..n_x {
        for j in 0..n_x {
            for k in 0..n_y {
                let weight = 1u64 << ((n_x - 1 - i) + (n_x - 1 - j) + (n_y - 1 - k));
                let theta = 2.0 * PI * weight as f64 / inst.modulus as f64;
                let yq = n_x + k;
                if i == j {
                    // x_i² = x_i, so the term is bilinear in (x_i, y_k).
                    let c = theta / 4.0;
                    constant += c;
                    single[i] -= c;
                    single[yq] -= c;
                    add_pair(i, yq, c);
                } else {
                    let c = theta / 8.0;
                    constant += c;
                    single[i] -= c;
                    single[j] -= c;
                    single[yq] -= c;
                    add_pair(i, j, c);
                    add_pair(i, yq, c);
                    add_pair(j, yq, c);
                    *triple.entry((i.min(j), i.max(j), yq)).or_insert(0.0) -= c;
                }
            }
        }
    }
    PhaseTerms {
        constant: wrap_angle(constant),
        single: single
            .into_iter()
            .enumerate()
            .map(|(q, c)| (q, wrap_angle(c)))
            .filter(|(_, c)| c.abs() > 1e-15)
            .collect(),
        pair: pair
            .into_iter()
            .map(|((a, b), c)| (a, b, wrap_angle(c)))
            .filter(|(_, _, c)| c.abs() > 1e-15)
            .collect(),
        triple: triple
            .into_iter()
            .map(|((a, b, t), c)| (a, b, t, wrap_angle(c)))
            .filter(|(_, _, _, c)| c.abs() > 1e-15)
            .collect(),
    }
}

/// exp(iφ Y⊗Y) from the XX primitive by conjugating both qubits with S.
fn yy(a: usize, b: usize, phi: f64) -> Vec<Gate> {
    vec![
        Gate::Rz(a, -FRAC_PI_2),
        Gate::Rz(b, -FRAC_PI_2),
        Gate::Xx(a, b, phi),
        Gate::Rz(a, FRAC_PI_2),
        Gate::Rz(b, FRAC_PI_2),
    ]
}

/// Π_t exp(-iθ_t Y_a Z_b X_t) as one YY(π/4), the XX(θ_t) chain on
/// (b, target), and YY(-π/4). All targets sharing the (a, b) pair ride the
/// same conjugation.
pub fn zzz_cascade(a: usize, b: usize, targets: &[(usize, f64)]) -> Vec<Gate> {
    let mut gates = yy(a, b, FRAC_PI_4);
    for &(t, theta) in targets {
        gates.push(Gate::Xx(b, t, theta));
    }
    gates.extend(yy(a, b, -FRAC_PI_4));
    gates
}

/// Π_t exp(i c_t Z_a Z_b Z_t): the cascade above with the frame rotated so
/// Y_a and X_t both read as Z.
pub fn zzz_term_group(a: usize, b: usize, terms: &[(usize, f64)]) -> Vec<Gate> {
    let mut gates = vec![Gate::H(a), Gate::Rz(a, FRAC_PI_2)];
    gates.extend(terms.iter().map(|&(t, _)| Gate::H(t)));
    let flipped: Vec<(usize, f64)> = terms.iter().map(|&(t, c)| (t, -c)).collect();
    gates.extend(zzz_cascade(a, b, &flipped));
    gates.push(Gate::Rz(a, -FRAC_PI_2));
    gates.push(Gate::H(a));
    gates.extend(terms.iter().map(|&(t, _)| Gate::H(t)));
    gates
}

/// exp(i c Z⊗Z) from the XX primitive by Hadamard conjugation.
pub fn zz_term(a: usize, b: usize, c: f64) -> Vec<Gate> {
    vec![Gate::H(a), Gate::H(b), Gate::Xx(a, b, c), Gate::H(a), Gate::H(b)]
}

/// exp(i c Z).
pub fn z_term(q: usize, c: f64) -> Gate {
    Gate::Rz(q, -2.0 * c)
}

/// Compiles the full phase oracle, grouping triples by their x-bit pair so
/// each pair pays for its YY conjugation once. The constant term is a
/// global phase and is not emitted.
pub fn compile_phase_terms(terms: &PhaseTerms) -> Vec<Gate> {
    let mut gates = Vec::new();
    let mut grouped = std::collections::BTreeMap::<(usize, usize), Vec<(usize, f64)>>::new();
    for &(a, b, t, c) in &terms.triple {
        grouped.entry((a, b)).or_default().push((t, c));
    }
    for ((a, b), targets) in grouped {
        gates.extend(zzz_term_group(a, b, &targets));
    }
    for &(a, b, c) in &terms.pair {
        gates.extend(zz_term(a, b, c));
    }
    for &(q, c) in &terms.single {
        gates.push(z_term(q, c));
    }
    gates
}

fn swap(a: usize, b: usize) -> [Gate; 3] {
    [
        Gate::Cnot { control: a, target: b },
        Gate::Cnot { control: b, target: a },
        Gate::Cnot { control: a, target: b },
    ]
}

fn fourier_gates(qubits: &[usize], sign: f64) -> Vec<Gate> {
    // Textbook transform: Hadamard each qubit MSB down, with controlled
    // phases halving per distance, then reverse the register order.
    let k = qubits.len();
    let mut gates = Vec::new();
    for i in 0..k {
        gates.push(Gate::H(qubits[i]));
        for j in i + 1..k {
            let angle = sign * 2.0 * PI / (1u64 << (j - i + 1)) as f64;
            gates.push(Gate::CPhase(qubits[j], qubits[i], angle));
        }
    }
    for i in 0..k / 2 {
        gates.extend(swap(qubits[i], qubits[k - 1 - i]));
    }
    gates
}

/// Gate decomposition of the register Fourier transform,
/// |y⟩ → M^{-1/2} Σ_w e^{+2πi wy/M}|w⟩.
pub fn qft_gates(qubits: &[usize]) -> Vec<Gate> {
    fourier_gates(qubits, 1.0)
}

/// Gate decomposition of the inverse transform (negated phases).
pub fn qft_inv_gates(qubits: &[usize]) -> Vec<Gate> {
    let mut gates = fourier_gates(qubits, -1.0);
    gates.reverse();
    gates
}

fn fourier_step(qubits: &[usize], inverse: bool, mode: BuildMode) -> Vec<PlanStep> {
    match mode {
        BuildMode::Compiled => {
            let gates = if inverse { qft_inv_gates(qubits) } else { qft_gates(qubits) };
            gates.into_iter().map(PlanStep::Gate).collect()
        }
        BuildMode::Direct => {
            let qubits = qubits.to_vec();
            vec![if inverse { PlanStep::InverseQft { qubits } } else { PlanStep::Qft { qubits } }]
        }
    }
}

/// Qubit roles in the squaring commit: x input, y image register, one
/// ancilla reserved for the interference branch.
#[derive(Clone, Debug)]
pub struct FactoringLayout {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub ancilla: usize,
}

#[derive(Clone, Debug)]
pub struct FactoringCommit {
    pub n_qubits: usize,
    pub steps: Vec<PlanStep>,
    pub layout: FactoringLayout,
}

/// Builds the squaring commit: Hadamards on x and y, the phase oracle, and
/// the inverse QFT that turns the phase-encoded image into the y register.
pub fn build_factoring_commit(inst: &RabinInstance, mode: BuildMode) -> FactoringCommit {
    let (n_x, n_y) = (inst.n_x as usize, inst.n_y as usize);
    let layout = FactoringLayout {
        x: (0..n_x).collect(),
        y: (n_x..n_x + n_y).collect(),
        ancilla: n_x + n_y,
    };
    let mut steps: Vec<PlanStep> =
        (0..n_x + n_y).map(|q| PlanStep::Gate(Gate::H(q))).collect();
    match mode {
        BuildMode::Compiled => {
            let terms = factoring_phase_terms(inst);
            steps.extend(compile_phase_terms(&terms).into_iter().map(PlanStep::Gate));
        }
        BuildMode::Direct => {
            let qubits: Vec<usize> = layout.x.iter().chain(&layout.y).copied().collect();
            let m = 1u64 << n_y;
            let n = inst.modulus as f64;
            let phases = (0..1u64 << (n_x + n_y))
                .map(|v| {
                    let (x, y) = (v >> n_y, v & (m - 1));
                    2.0 * PI * (x * x * y) as f64 / n
                })
                .collect();
            steps.push(PlanStep::DiagonalPhase { qubits, phases });
        }
    }
    steps.extend(fourier_step(&layout.y, true, mode));
    FactoringCommit { n_qubits: n_x + n_y + 1, steps, layout }
}

/// Qubit roles in the LWE commit: branch bit, x components, the Fourier
/// accumulator, and one output bit per matrix row.
#[derive(Clone, Debug)]
pub struct LweLayout {
    pub b: usize,
    pub x: Vec<usize>,
    pub accumulator: Vec<usize>,
    pub output: Vec<usize>,
}

impl LweLayout {
    /// The (b, x) register in encoding order.
    pub fn preimage(&self) -> Vec<usize> {
        let mut q = vec![self.b];
        q.extend(&self.x);
        q
    }
}

#[derive(Clone, Debug)]
pub struct LweCommit {
    pub n_qubits: usize,
    pub steps: Vec<PlanStep>,
    pub layout: LweLayout,
}

/// Builds the LWE commit. Row by row, the accumulator picks up
/// A_i·x + b·y_i as Fourier phases from controlled rotations, an inverse
/// QFT exposes the value, a CNOT copies its MSB (the rounded bit) to the
/// output register, and the adjoint sequence returns the accumulator to
/// zero exactly.
pub fn build_lwe_commit(inst: &LweInstance, mode: BuildMode) -> LweCommit {
    let cb = inst.component_bits() as usize;
    let (m, n, q) = (inst.rows_len(), inst.dim(), inst.q);
    let x_start = 1;
    let acc_start = x_start + n * cb;
    let out_start = acc_start + cb;
    let layout = LweLayout {
        b: 0,
        x: (x_start..acc_start).collect(),
        accumulator: (acc_start..out_start).collect(),
        output: (out_start..out_start + m).collect(),
    };
    let mut steps: Vec<PlanStep> = Vec::new();
    steps.push(PlanStep::Gate(Gate::H(layout.b)));
    steps.extend(layout.x.iter().map(|&q| PlanStep::Gate(Gate::H(q))));

    // Phase rotations encoding row i: qubit (j,l) of x carries value weight
    // 2^(cb-1-l), accumulator qubit u carries Fourier weight 2^(cb-1-u).
    let row_phases = |i: usize, sign: f64| -> Vec<PlanStep> {
        let mut out = Vec::new();
        for j in 0..n {
            let coeff = inst.row(i).get(j);
            if coeff == 0 {
                continue;
            }
            for l in 0..cb {
                for u in 0..cb {
                    let weight = (coeff << ((cb - 1 - l) + (cb - 1 - u))) % q;
                    let angle = sign * 2.0 * PI * weight as f64 / q as f64;
                    if weight != 0 {
                        out.push(PlanStep::Gate(Gate::CPhase(
                            layout.x[j * cb + l],
                            layout.accumulator[u],
                            angle,
                        )));
                    }
                }
            }
        }
        let yi = inst.y.get(i);
        if yi != 0 {
            for u in 0..cb {
                let weight = (yi << (cb - 1 - u)) % q;
                let angle = sign * 2.0 * PI * weight as f64 / q as f64;
                if weight != 0 {
                    out.push(PlanStep::Gate(Gate::CPhase(
                        layout.b,
                        layout.accumulator[u],
                        angle,
                    )));
                }
            }
        }
        out
    };

    for i in 0..m {
        // H⊗cb puts the zeroed accumulator into the Fourier frame of 0.
        steps.extend(layout.accumulator.iter().map(|&q| PlanStep::Gate(Gate::H(q))));
        steps.extend(row_phases(i, 1.0));
        steps.extend(fourier_step(&layout.accumulator, true, mode));
        // MSB of the accumulator is the rounded bit for this row.
        steps.push(PlanStep::Gate(Gate::Cnot {
            control: layout.accumulator[0],
            target: layout.output[i],
        }));
        steps.extend(fourier_step(&layout.accumulator, false, mode));
        steps.extend(row_phases(i, -1.0));
        steps.extend(layout.accumulator.iter().map(|&q| PlanStep::Gate(Gate::H(q))));
    }
    LweCommit { n_qubits: out_start + m, steps, layout }
}

/// Measurement suffix for one challenge branch: gates to apply, then the
/// register to read in the computational basis.
#[derive(Clone, Debug)]
pub struct Suffix {
    pub gates: Vec<Gate>,
    pub measure: Vec<usize>,
}

/// Standard-basis branch for the squaring protocol: read x directly.
pub fn factoring_suffix_standard(layout: &FactoringLayout) -> Suffix {
    Suffix { gates: Vec::new(), measure: layout.x.clone() }
}

/// Interference branch for the squaring protocol: fan the parity r·x into
/// the ancilla, then rotate x into the X basis and read it as d. The
/// ancilla stays unmeasured for the later Z±X challenge.
pub fn factoring_suffix_interference(layout: &FactoringLayout, r: &BitString) -> Suffix {
    assert_eq!(r.len(), layout.x.len(), "challenge length must match x register");
    assert!(!r.is_zero(), "challenge string must be nonzero");
    let mut gates = Vec::new();
    for (i, &xq) in layout.x.iter().enumerate() {
        if r.bit(i) == 1 {
            gates.push(Gate::Cnot { control: xq, target: layout.ancilla });
        }
    }
    gates.extend(layout.x.iter().map(|&q| Gate::H(q)));
    Suffix { gates, measure: layout.x.clone() }
}

/// Standard-basis branch for LWE: read (b, x) directly.
pub fn lwe_suffix_standard(layout: &LweLayout) -> Suffix {
    Suffix { gates: Vec::new(), measure: layout.preimage() }
}

/// Interference branch for LWE: X-basis read of the whole (b, x) register.
pub fn lwe_suffix_interference(layout: &LweLayout) -> Suffix {
    let preimage = layout.preimage();
    Suffix { gates: preimage.iter().map(|&q| Gate::H(q)).collect(), measure: preimage }
}
