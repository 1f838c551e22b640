//! Verifier, honest prover, and the shot runner.
//!
//! Each shot walks one commit/challenge/response round. The verifier holds
//! the trapdoor, rebuilds the claw behind every commitment, and scores the
//! response; the prover only ever sees the instance. Challenge order is the
//! one knob between the two schemes: interactive reveals the commitment
//! before the challenge arrives, delayed hands the prover the challenge up
//! front and collects the commitment last.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::{
    build_factoring_commit, build_lwe_commit, factoring_suffix_interference,
    factoring_suffix_standard, lwe_suffix_interference, lwe_suffix_standard, run_plan, BuildMode,
    FactoringCommit, LweCommit,
};
use crate::numtheory::{BitString, ResidueVector};
use crate::sim::{Basis, StateVector};
use crate::tcf::{
    lwe_encode_preimage, lwe_eval, lwe_invert, rabin_invert, LweClaw, LweInstance, LweInversion,
    LweTrapdoor, RabinClaw, RabinInstance, RabinInversion, RabinTrapdoor,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Factoring,
    Lwe,
}

/// Challenge order: `Interactive` commits first, `Delayed` challenges
/// first and measures the commitment register at the end of the shot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Interactive,
    Delayed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchKind {
    Standard,
    Interference,
}

/// What the verifier decided about one shot. Discards are protocol law,
/// not errors: commitments without a full claw and all-zero interference
/// responses never score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotStatus {
    Counted,
    DiscardedCommitment,
    DiscardedZeroResponse,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Challenge {
    Standard,
    /// `parity` carries the r string for the squaring protocol and is
    /// absent for LWE, whose interference read needs no steering.
    Interference { parity: Option<BitString> },
}

/// Everything one shot produced, in verifier's-eye order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot: u64,
    pub branch: BranchKind,
    pub commitment: BitString,
    pub challenge: Option<BitString>,
    pub response: BitString,
    pub basis: Option<Basis>,
    pub basis_outcome: Option<u8>,
    pub status: ShotStatus,
    pub accepted: Option<bool>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchTally {
    pub raw: u64,
    pub discarded_commitment: u64,
    pub discarded_zero_response: u64,
    pub counted: u64,
    pub accepted: u64,
}

impl BranchTally {
    pub fn rate(&self) -> f64 {
        if self.counted == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.counted as f64
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunTally {
    pub standard: BranchTally,
    pub interference: BranchTally,
}

impl RunTally {
    pub fn record(&mut self, rec: &ShotRecord) {
        let side = match rec.branch {
            BranchKind::Standard => &mut self.standard,
            BranchKind::Interference => &mut self.interference,
        };
        side.raw += 1;
        match rec.status {
            ShotStatus::DiscardedCommitment => side.discarded_commitment += 1,
            ShotStatus::DiscardedZeroResponse => side.discarded_zero_response += 1,
            ShotStatus::Counted => {
                side.counted += 1;
                if rec.accepted == Some(true) {
                    side.accepted += 1;
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub shots_standard: u64,
    pub shots_interference: u64,
    pub mode: Mode,
    pub seed: u64,
}

impl RunConfig {
    pub fn total_shots(&self) -> u64 {
        self.shots_standard + self.shots_interference
    }
}

/// Per-shot RNG stream: both parties derive from the run seed, on disjoint
/// stream lanes, so a shot's randomness is a pure function of
/// (seed, lane, shot) no matter which transport drives the interaction.
pub const LANE_PROVER: u64 = 0;
pub const LANE_VERIFIER: u64 = 1;

pub fn shot_rng(seed: u64, lane: u64, shot: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(2 * shot + lane);
    rng
}

/// Instance plus trapdoor, the verifier's private side.
#[derive(Clone, Debug)]
pub enum VerifierSetup {
    Factoring { instance: RabinInstance, trapdoor: RabinTrapdoor },
    Lwe { instance: LweInstance, trapdoor: LweTrapdoor },
}

/// The prover-visible half of a setup: the function, never the trapdoor.
/// This is the payload a verifier may put on the wire.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case", deny_unknown_fields)]
pub enum PublicInstance {
    Factoring { instance: RabinInstance },
    Lwe { instance: LweInstance },
}

impl PublicInstance {
    pub fn kind(&self) -> ProtocolKind {
        match self {
            PublicInstance::Factoring { .. } => ProtocolKind::Factoring,
            PublicInstance::Lwe { .. } => ProtocolKind::Lwe,
        }
    }
}

enum ClawTable {
    /// Claw for each image-register value, or None where the decoded image
    /// has fewer than two domain roots.
    Factoring(Vec<Option<RabinClaw>>),
    /// Claw and the XOR of the two encoded preimages for each image.
    Lwe(Vec<Option<(LweClaw, BitString)>>),
}

pub struct Verifier {
    setup: VerifierSetup,
    claws: ClawTable,
}

impl Verifier {
    pub fn new(setup: VerifierSetup) -> Self {
        let claws = match &setup {
            VerifierSetup::Factoring { instance, trapdoor } => ClawTable::Factoring(
                (0..1u64 << instance.n_y)
                    .map(|w| {
                        let v = decode_image(instance, w);
                        match rabin_invert(instance, trapdoor, v) {
                            RabinInversion::Claw(c) => Some(c),
                            RabinInversion::InvalidImage => None,
                        }
                    })
                    .collect(),
            ),
            VerifierSetup::Lwe { instance, trapdoor } => ClawTable::Lwe(
                (0..1u64 << instance.rows_len())
                    .map(|w| {
                        let image = BitString::from_value(w, instance.rows_len());
                        match lwe_invert(instance, trapdoor, &image) {
                            LweInversion::Claw(c) => {
                                let delta = lwe_encode_preimage(instance, 0, &c.x0)
                                    .xor(&lwe_encode_preimage(instance, 1, &c.x1));
                                Some((c, delta))
                            }
                            LweInversion::Anomaly { .. } => None,
                        }
                    })
                    .collect(),
            ),
        };
        Verifier { setup, claws }
    }

    pub fn kind(&self) -> ProtocolKind {
        match self.setup {
            VerifierSetup::Factoring { .. } => ProtocolKind::Factoring,
            VerifierSetup::Lwe { .. } => ProtocolKind::Lwe,
        }
    }

    pub fn setup(&self) -> &VerifierSetup {
        &self.setup
    }

    pub fn public_instance(&self) -> PublicInstance {
        match &self.setup {
            VerifierSetup::Factoring { instance, .. } => {
                PublicInstance::Factoring { instance: instance.clone() }
            }
            VerifierSetup::Lwe { instance, .. } => {
                PublicInstance::Lwe { instance: instance.clone() }
            }
        }
    }

    pub fn commitment_bits(&self) -> usize {
        match &self.setup {
            VerifierSetup::Factoring { instance, .. } => instance.n_y as usize,
            VerifierSetup::Lwe { instance, .. } => instance.rows_len(),
        }
    }

    pub fn factoring_claw(&self, w: u64) -> Option<&RabinClaw> {
        match &self.claws {
            ClawTable::Factoring(t) => t[w as usize].as_ref(),
            ClawTable::Lwe(_) => None,
        }
    }

    pub fn lwe_claw(&self, w: u64) -> Option<&(LweClaw, BitString)> {
        match &self.claws {
            ClawTable::Lwe(t) => t[w as usize].as_ref(),
            ClawTable::Factoring(_) => None,
        }
    }

    /// The challenge for a given shot index: the first `shots_standard`
    /// shots read the preimage register, the rest take the interference
    /// branch, cycling r over the nonzero parity strings in order.
    pub fn challenge_for(&self, cfg: &RunConfig, shot: u64) -> Challenge {
        if shot < cfg.shots_standard {
            return Challenge::Standard;
        }
        let parity = match &self.setup {
            VerifierSetup::Factoring { instance, .. } => {
                let n_x = instance.n_x as usize;
                let nonzero = (1u64 << n_x) - 1;
                let i = shot - cfg.shots_standard;
                Some(BitString::from_value(1 + i % nonzero, n_x))
            }
            VerifierSetup::Lwe { .. } => None,
        };
        Challenge::Interference { parity }
    }

    /// Basis request for a squaring-protocol interference shot, drawn from
    /// the verifier's stream for that shot.
    pub fn basis_for(&self, cfg: &RunConfig, shot: u64) -> Basis {
        let mut rng = shot_rng(cfg.seed, LANE_VERIFIER, shot);
        if rng.gen::<u64>() & 1 == 0 {
            Basis::ZPlusX
        } else {
            Basis::ZMinusX
        }
    }

    /// The outcome the ancilla challenge should favor, given the claw
    /// behind w and the prover's d: the ideal residual state is
    /// (-1)^{d·x0}|r·x0⟩ + (-1)^{d·x1}|r·x1⟩, and the prediction is its
    /// likelier basis outcome. A cancelling d (impossible for an honest
    /// device) leaves nothing to predict.
    pub fn ancilla_prediction(
        &self,
        w: &BitString,
        r: &BitString,
        d: &BitString,
        basis: Basis,
    ) -> Option<u8> {
        let claw = self.factoring_claw(w.value())?;
        let n_x = r.len();
        let mut amp = [0.0f64; 2];
        for x in [claw.x0, claw.x1] {
            let xb = BitString::from_value(x, n_x);
            let sign = if d.dot(&xb) == 1 { -1.0 } else { 1.0 };
            amp[r.dot(&xb) as usize] += sign;
        }
        if amp[0] == 0.0 && amp[1] == 0.0 {
            return None;
        }
        let s = match basis {
            Basis::ZPlusX => 1.0,
            Basis::ZMinusX => -1.0,
            _ => panic!("ancilla challenge uses the tilted bases"),
        };
        let (c, t) = ((std::f64::consts::FRAC_PI_8).cos(), (std::f64::consts::FRAC_PI_8).sin());
        let overlap = c * amp[0] + s * t * amp[1];
        let p_plus = overlap * overlap / (amp[0] * amp[0] + amp[1] * amp[1]);
        assert!((p_plus - 0.5).abs() > 1e-9, "degenerate prediction");
        Some(if p_plus > 0.5 { 0 } else { 1 })
    }

    /// Scores one completed shot.
    pub fn judge(
        &self,
        branch: BranchKind,
        commitment: &BitString,
        challenge: Option<&BitString>,
        response: &BitString,
        basis: Option<Basis>,
        basis_outcome: Option<u8>,
    ) -> (ShotStatus, Option<bool>) {
        match (&self.setup, branch) {
            (VerifierSetup::Factoring { instance, .. }, BranchKind::Standard) => {
                let Some(claw) = self.factoring_claw(commitment.value()) else {
                    return (ShotStatus::DiscardedCommitment, None);
                };
                let x = response.value();
                let ok = x < instance.domain_size() && x * x % instance.modulus == claw.image;
                (ShotStatus::Counted, Some(ok))
            }
            (VerifierSetup::Factoring { .. }, BranchKind::Interference) => {
                if self.factoring_claw(commitment.value()).is_none() {
                    return (ShotStatus::DiscardedCommitment, None);
                }
                let r = challenge.expect("interference shot carries a parity challenge");
                let basis = basis.expect("interference shot carries a basis request");
                let outcome = basis_outcome.expect("interference shot carries a basis outcome");
                let ok = self
                    .ancilla_prediction(commitment, r, response, basis)
                    .map_or(false, |predicted| predicted == outcome);
                (ShotStatus::Counted, Some(ok))
            }
            (VerifierSetup::Lwe { instance, .. }, BranchKind::Standard) => {
                if self.lwe_claw(commitment.value()).is_none() {
                    return (ShotStatus::DiscardedCommitment, None);
                }
                let (b, x) = decode_lwe_preimage(instance, response);
                let ok = lwe_eval(instance, b, &x) == *commitment;
                (ShotStatus::Counted, Some(ok))
            }
            (VerifierSetup::Lwe { .. }, BranchKind::Interference) => {
                let Some((_, delta)) = self.lwe_claw(commitment.value()) else {
                    return (ShotStatus::DiscardedCommitment, None);
                };
                if response.is_zero() {
                    return (ShotStatus::DiscardedZeroResponse, None);
                }
                (ShotStatus::Counted, Some(response.dot(delta) == 0))
            }
        }
    }
}

/// Round-to-nearest decode from the 2^n_y image register onto residues
/// mod N. For power-of-two N the registers coincide and this is the
/// identity.
pub fn decode_image(inst: &RabinInstance, w: u64) -> u64 {
    let m = 1u64 << inst.n_y;
    ((2 * inst.modulus * w + m) / (2 * m)) % inst.modulus
}

/// Splits the measured (b, x) register back into the branch bit and the
/// residue vector.
pub fn decode_lwe_preimage(inst: &LweInstance, bits: &BitString) -> (u8, ResidueVector) {
    let cb = inst.component_bits() as usize;
    let b = bits.bit(0);
    let comps = (0..inst.dim())
        .map(|j| {
            (0..cb).fold(0u64, |acc, l| (acc << 1) | bits.bit(1 + j * cb + l) as u64)
        })
        .collect();
    (b, ResidueVector::new(comps, inst.q))
}

/// One prover's side of the interaction. `commit` and
/// `finish_delayed_commit` read the same register; which one the runner
/// calls depends on the challenge order.
pub trait Prover {
    fn begin_shot(&mut self, shot: u64);
    fn commit(&mut self) -> BitString;
    fn finish_delayed_commit(&mut self) -> BitString;
    fn respond_standard(&mut self) -> BitString;
    fn respond_interference(&mut self, parity: Option<&BitString>) -> BitString;
    fn measure_ancilla(&mut self, basis: Basis) -> u8;
}

enum HonestCircuit {
    Factoring(FactoringCommit),
    Lwe(LweCommit),
}

/// Statevector prover. The commit unitary is prepared once per instance;
/// every shot clones that state and spends its measurements on it.
pub struct HonestProver {
    circuit: HonestCircuit,
    prepared: StateVector,
    state: StateVector,
    rng: ChaCha12Rng,
    seed: u64,
}

impl HonestProver {
    pub fn for_instance(inst: &PublicInstance, mode: BuildMode, seed: u64) -> Self {
        match inst {
            PublicInstance::Factoring { instance } => Self::factoring(instance, mode, seed),
            PublicInstance::Lwe { instance } => Self::lwe(instance, mode, seed),
        }
    }

    pub fn factoring(inst: &RabinInstance, mode: BuildMode, seed: u64) -> Self {
        let commit = build_factoring_commit(inst, mode);
        let mut prepared = StateVector::new(commit.n_qubits);
        run_plan(&mut prepared, &commit.steps);
        let state = prepared.clone();
        HonestProver {
            circuit: HonestCircuit::Factoring(commit),
            prepared,
            state,
            rng: shot_rng(seed, LANE_PROVER, 0),
            seed,
        }
    }

    pub fn lwe(inst: &LweInstance, mode: BuildMode, seed: u64) -> Self {
        let commit = build_lwe_commit(inst, mode);
        let mut prepared = StateVector::new(commit.n_qubits);
        run_plan(&mut prepared, &commit.steps);
        let state = prepared.clone();
        HonestProver {
            circuit: HonestCircuit::Lwe(commit),
            prepared,
            state,
            rng: shot_rng(seed, LANE_PROVER, 0),
            seed,
        }
    }

    fn measure(&mut self, qubits: &[usize]) -> BitString {
        let (v, _) = self.state.measure_register(qubits, &mut self.rng);
        BitString::from_value(v, qubits.len())
    }

    fn commitment_register(&self) -> Vec<usize> {
        match &self.circuit {
            HonestCircuit::Factoring(c) => c.layout.y.clone(),
            HonestCircuit::Lwe(c) => c.layout.output.clone(),
        }
    }
}

impl Prover for HonestProver {
    fn begin_shot(&mut self, shot: u64) {
        self.state = self.prepared.clone();
        self.rng = shot_rng(self.seed, LANE_PROVER, shot);
    }

    fn commit(&mut self) -> BitString {
        let reg = self.commitment_register();
        self.measure(&reg)
    }

    fn finish_delayed_commit(&mut self) -> BitString {
        let reg = self.commitment_register();
        self.measure(&reg)
    }

    fn respond_standard(&mut self) -> BitString {
        let suffix = match &self.circuit {
            HonestCircuit::Factoring(c) => factoring_suffix_standard(&c.layout),
            HonestCircuit::Lwe(c) => lwe_suffix_standard(&c.layout),
        };
        self.state.apply_all(&suffix.gates);
        self.measure(&suffix.measure)
    }

    fn respond_interference(&mut self, parity: Option<&BitString>) -> BitString {
        let suffix = match &self.circuit {
            HonestCircuit::Factoring(c) => {
                let r = parity.expect("the squaring protocol steers interference with r");
                factoring_suffix_interference(&c.layout, r)
            }
            HonestCircuit::Lwe(c) => lwe_suffix_interference(&c.layout),
        };
        self.state.apply_all(&suffix.gates);
        self.measure(&suffix.measure)
    }

    fn measure_ancilla(&mut self, basis: Basis) -> u8 {
        let ancilla = match &self.circuit {
            HonestCircuit::Factoring(c) => c.layout.ancilla,
            HonestCircuit::Lwe(_) => panic!("the LWE protocol has no ancilla challenge"),
        };
        self.state.measure_in_basis(ancilla, basis, &mut self.rng).0
    }
}

/// Drives `cfg.total_shots()` shots between verifier and prover, streaming
/// every record through `on_record` and returning branch totals.
pub fn run_protocol(
    verifier: &Verifier,
    prover: &mut dyn Prover,
    cfg: &RunConfig,
    mut on_record: impl FnMut(&ShotRecord),
) -> RunTally {
    let mut tally = RunTally::default();
    for shot in 0..cfg.total_shots() {
        let rec = run_shot(verifier, prover, cfg, shot);
        tally.record(&rec);
        on_record(&rec);
    }
    tally
}

/// One full shot at the given index, in either challenge order.
pub fn run_shot(
    verifier: &Verifier,
    prover: &mut dyn Prover,
    cfg: &RunConfig,
    shot: u64,
) -> ShotRecord {
    let challenge = verifier.challenge_for(cfg, shot);
    prover.begin_shot(shot);

    let early_commitment = match cfg.mode {
        Mode::Interactive => Some(prover.commit()),
        Mode::Delayed => None,
    };

    let (branch, challenge_bits, response, basis, basis_outcome) = match &challenge {
        Challenge::Standard => {
            (BranchKind::Standard, None, prover.respond_standard(), None, None)
        }
        Challenge::Interference { parity } => {
            let response = prover.respond_interference(parity.as_ref());
            let (basis, outcome) = match verifier.kind() {
                ProtocolKind::Factoring => {
                    let basis = verifier.basis_for(cfg, shot);
                    let outcome = prover.measure_ancilla(basis);
                    (Some(basis), Some(outcome))
                }
                ProtocolKind::Lwe => (None, None),
            };
            (BranchKind::Interference, parity.clone(), response, basis, outcome)
        }
    };

    let commitment = match early_commitment {
        Some(w) => w,
        None => prover.finish_delayed_commit(),
    };

    let (status, accepted) = verifier.judge(
        branch,
        &commitment,
        challenge_bits.as_ref(),
        &response,
        basis,
        basis_outcome,
    );
    ShotRecord {
        shot,
        branch,
        commitment,
        challenge: challenge_bits,
        response,
        basis,
        basis_outcome,
        status,
        accepted,
    }
}

/// Builds the verifier for a named study instance of either protocol.
pub fn study_verifier(kind: ProtocolKind, id: u64) -> Verifier {
    match kind {
        ProtocolKind::Factoring => {
            let (instance, trapdoor) = crate::tcf::rabin_study_keygen(id);
            Verifier::new(VerifierSetup::Factoring { instance, trapdoor })
        }
        ProtocolKind::Lwe => {
            let study = crate::tcf::lwe_study_instance(id as usize);
            Verifier::new(VerifierSetup::Lwe {
                instance: study.instance,
                trapdoor: study.trapdoor,
            })
        }
    }
}

/// Builds the honest prover matching a verifier's public instance.
pub fn honest_prover_for(verifier: &Verifier, mode: BuildMode, seed: u64) -> HonestProver {
    HonestProver::for_instance(&verifier.public_instance(), mode, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(a: u64, b: u64, mode: Mode, seed: u64) -> RunConfig {
        RunConfig { shots_standard: a, shots_interference: b, mode, seed }
    }

    #[test]
    fn decode_image_rounds_to_nearest_residue() {
        let (inst, _) = crate::tcf::rabin_study_keygen(15);
        // 16-point register onto residues mod 15: w=10 sits nearest 9.375,
        // w=15 wraps to 14.0625 -> 14, w=8 -> 7.5 rounds up to 8.
        assert_eq!(decode_image(&inst, 0), 0);
        assert_eq!(decode_image(&inst, 1), 1);
        assert_eq!(decode_image(&inst, 8), 8);
        assert_eq!(decode_image(&inst, 10), 9);
        assert_eq!(decode_image(&inst, 15), 14);
        let (inst8, _) = crate::tcf::rabin_study_keygen(8);
        for w in 0..8 {
            assert_eq!(decode_image(&inst8, w), w);
        }
    }

    #[test]
    fn verifier_claw_table_matches_direct_inversion() {
        let verifier = study_verifier(ProtocolKind::Factoring, 8);
        // Only w=1 has two domain roots (1 and 3); 0 and 4 have one each.
        assert!(verifier.factoring_claw(1).is_some());
        assert!(verifier.factoring_claw(0).is_none());
        assert!(verifier.factoring_claw(4).is_none());
        let claw = verifier.factoring_claw(1).unwrap();
        assert_eq!((claw.x0, claw.x1), (1, 3));

        let lwe = study_verifier(ProtocolKind::Lwe, 0);
        for w in 0..16 {
            assert!(lwe.lwe_claw(w).is_some(), "every 4-bit image has one claw");
        }
    }

    #[test]
    fn ancilla_prediction_known_cases() {
        let verifier = study_verifier(ProtocolKind::Factoring, 8);
        let w: BitString = "001".parse().unwrap();
        let r: BitString = "10".parse().unwrap();
        // Claw (1, 3): r.x0 = 0, r.x1 = 1. d = 00 keeps both signs +, the
        // residual is |0>+|1>, tilted toward +1 in the Z+X basis.
        let d0: BitString = "00".parse().unwrap();
        assert_eq!(verifier.ancilla_prediction(&w, &r, &d0, Basis::ZPlusX), Some(0));
        assert_eq!(verifier.ancilla_prediction(&w, &r, &d0, Basis::ZMinusX), Some(1));
        // d = 10 flips the x1 sign: |0>-|1> leans the other way.
        let d2: BitString = "10".parse().unwrap();
        assert_eq!(verifier.ancilla_prediction(&w, &r, &d2, Basis::ZPlusX), Some(1));
        assert_eq!(verifier.ancilla_prediction(&w, &r, &d2, Basis::ZMinusX), Some(0));
        // r = 01 collapses both roots to the same parity bit; a d of odd
        // relative parity cancels the residual outright.
        let r1: BitString = "01".parse().unwrap();
        assert_eq!(verifier.ancilla_prediction(&w, &r1, &d2, Basis::ZPlusX), None);
        // d = 00 keeps both: the residual is the pure |1>, which leans
        // toward the -1 outcome in the Z+X basis.
        assert_eq!(verifier.ancilla_prediction(&w, &r1, &d0, Basis::ZPlusX), Some(1));
    }

    #[test]
    fn challenge_schedule_cycles_parities() {
        let verifier = study_verifier(ProtocolKind::Factoring, 8);
        let c = cfg(2, 5, Mode::Interactive, 7);
        assert_eq!(verifier.challenge_for(&c, 0), Challenge::Standard);
        assert_eq!(verifier.challenge_for(&c, 1), Challenge::Standard);
        let rs: Vec<String> = (2..7)
            .map(|s| match verifier.challenge_for(&c, s) {
                Challenge::Interference { parity: Some(r) } => r.to_string(),
                _ => panic!("expected interference"),
            })
            .collect();
        assert_eq!(rs, ["01", "10", "11", "01", "10"]);
    }

    #[test]
    fn honest_lwe_scores_perfectly_both_orders() {
        for mode in [Mode::Interactive, Mode::Delayed] {
            let verifier = study_verifier(ProtocolKind::Lwe, 0);
            let mut prover = honest_prover_for(&verifier, BuildMode::Direct, 11);
            let c = cfg(60, 60, mode, 11);
            let tally = run_protocol(&verifier, &mut prover, &c, |_| {});
            assert_eq!(tally.standard.counted, 60);
            assert_eq!(tally.standard.accepted, 60, "{mode:?}");
            assert_eq!(
                tally.interference.counted + tally.interference.discarded_zero_response,
                60
            );
            assert_eq!(tally.interference.accepted, tally.interference.counted, "{mode:?}");
        }
    }

    #[test]
    fn honest_factoring_standard_branch_is_exact_on_kept_shots() {
        let verifier = study_verifier(ProtocolKind::Factoring, 8);
        let mut prover = honest_prover_for(&verifier, BuildMode::Direct, 3);
        let c = cfg(200, 0, Mode::Interactive, 3);
        let tally = run_protocol(&verifier, &mut prover, &c, |_| {});
        // Half the commitment mass decodes to single-root images.
        assert!(tally.standard.discarded_commitment > 50);
        assert_eq!(tally.standard.accepted, tally.standard.counted);
        assert!(tally.standard.counted > 50);
    }

    #[test]
    fn honest_factoring_interference_stays_near_ideal() {
        let verifier = study_verifier(ProtocolKind::Factoring, 8);
        let mut prover = honest_prover_for(&verifier, BuildMode::Direct, 5);
        let c = cfg(0, 600, Mode::Interactive, 5);
        let tally = run_protocol(&verifier, &mut prover, &c, |_| {});
        let p = tally.interference.rate();
        let ideal = (std::f64::consts::FRAC_PI_8).cos().powi(2);
        let se = (ideal * (1.0 - ideal) / tally.interference.counted as f64).sqrt();
        assert!((p - ideal).abs() < 4.0 * se, "p_B = {p}, want near {ideal}");
    }

    #[test]
    fn same_seed_reproduces_the_record_stream() {
        let run = |seed: u64| -> Vec<String> {
            let verifier = study_verifier(ProtocolKind::Lwe, 1);
            let mut prover = honest_prover_for(&verifier, BuildMode::Direct, seed);
            let c = cfg(20, 20, Mode::Delayed, seed);
            let mut lines = Vec::new();
            run_protocol(&verifier, &mut prover, &c, |rec| {
                lines.push(serde_json::to_string(rec).unwrap());
            });
            lines
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }

    #[test]
    fn delayed_and_interactive_agree_statistically() {
        // Identical registers commute with the commitment read, so the two
        // challenge orders sample the same distribution. Pin that with a
        // modest-size run and a loose binomial bound.
        let run = |mode: Mode| -> (f64, u64) {
            let verifier = study_verifier(ProtocolKind::Factoring, 16);
            let mut prover = honest_prover_for(&verifier, BuildMode::Direct, 9);
            let c = cfg(0, 800, mode, 9);
            let t = run_protocol(&verifier, &mut prover, &c, |_| {});
            (t.interference.rate(), t.interference.counted)
        };
        let (p_i, n_i) = run(Mode::Interactive);
        let (p_d, n_d) = run(Mode::Delayed);
        let pool = (p_i * n_i as f64 + p_d * n_d as f64) / (n_i + n_d) as f64;
        let z = (p_i - p_d) / (pool * (1.0 - pool) * (1.0 / n_i as f64 + 1.0 / n_d as f64)).sqrt();
        assert!(z.abs() < 4.0, "z = {z}");
    }

    #[test]
    fn record_serialization_is_stable() {
        let verifier = study_verifier(ProtocolKind::Factoring, 8);
        let mut prover = honest_prover_for(&verifier, BuildMode::Direct, 1);
        let c = cfg(1, 1, Mode::Interactive, 1);
        let mut lines = Vec::new();
        run_protocol(&verifier, &mut prover, &c, |rec| {
            lines.push(serde_json::to_string(rec).unwrap());
        });
        for line in &lines {
            let back: ShotRecord = serde_json::from_str(line).unwrap();
            assert_eq!(&serde_json::to_string(&back).unwrap(), line);
        }
        assert!(lines[0].starts_with("{\"shot\":0,\"branch\":\"standard\""));
    }
}
