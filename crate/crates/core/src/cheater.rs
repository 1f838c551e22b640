//! Classical baseline provers.
//!
//! Both strategies run the full interaction without any quantum state. The
//! known-preimage cheater plays as well as classical knowledge allows: it
//! picks one preimage, commits to its true image, and answers the standard
//! branch perfectly, which leaves the interference branch at chance. The
//! random cheater guesses everything. Either way the interference branch
//! caps the combined score at the classical bound.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::numtheory::{BitString, ResidueVector};
use crate::protocol::{shot_rng, Prover, PublicInstance, LANE_PROVER};
use crate::sim::Basis;
use crate::tcf::{lwe_encode_preimage, lwe_eval, rabin_eval, LweInstance, RabinInstance};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheaterKind {
    KnownPreimage,
    Random,
}

enum Target {
    Factoring(RabinInstance),
    Lwe(LweInstance),
}

/// State the cheater carries through one shot.
#[derive(Default)]
struct ShotState {
    /// Chosen preimage, as the response-register bit pattern.
    preimage: Option<BitString>,
    /// r·x for the chosen preimage, fixed when the parity challenge lands.
    parity_bit: Option<u8>,
}

pub struct Cheater {
    kind: CheaterKind,
    target: Target,
    rng: ChaCha12Rng,
    seed: u64,
    shot: ShotState,
}

/// Encodes a residue onto the 2^n_y image register, inverting the
/// verifier's round-to-nearest decode.
pub fn encode_image(inst: &RabinInstance, v: u64) -> u64 {
    let m = 1u64 << inst.n_y;
    ((2 * m * v + inst.modulus) / (2 * inst.modulus)) % m
}

impl Cheater {
    pub fn new(public: &PublicInstance, kind: CheaterKind, seed: u64) -> Self {
        let target = match public {
            PublicInstance::Factoring { instance } => Target::Factoring(instance.clone()),
            PublicInstance::Lwe { instance } => Target::Lwe(instance.clone()),
        };
        Cheater { kind, target, rng: shot_rng(seed, LANE_PROVER, 0), seed, shot: ShotState::default() }
    }

    fn response_bits(&self) -> usize {
        match &self.target {
            Target::Factoring(inst) => inst.n_x as usize,
            Target::Lwe(inst) => inst.preimage_bits(),
        }
    }

    fn commitment_bits(&self) -> usize {
        match &self.target {
            Target::Factoring(inst) => inst.n_y as usize,
            Target::Lwe(inst) => inst.rows_len(),
        }
    }

    fn random_bits(&mut self, len: usize) -> BitString {
        BitString::from_value(self.rng.gen::<u64>() & ((1 << len) - 1), len)
    }

    /// The commitment this shot stands behind: the true image of the
    /// chosen preimage, or noise for the random strategy.
    fn commitment(&mut self) -> BitString {
        match self.kind {
            CheaterKind::Random => self.random_bits(self.commitment_bits()),
            CheaterKind::KnownPreimage => {
                let preimage = self.shot.preimage.as_ref().expect("preimage drawn at shot start");
                match &self.target {
                    Target::Factoring(inst) => {
                        let v = rabin_eval(inst, preimage.value());
                        BitString::from_value(encode_image(inst, v), inst.n_y as usize)
                    }
                    Target::Lwe(inst) => {
                        let (b, x) = crate::protocol::decode_lwe_preimage(inst, preimage);
                        lwe_eval(inst, b, &x)
                    }
                }
            }
        }
    }
}

impl Prover for Cheater {
    fn begin_shot(&mut self, shot: u64) {
        self.rng = shot_rng(self.seed, LANE_PROVER, shot);
        self.shot = ShotState::default();
        if self.kind == CheaterKind::KnownPreimage {
            self.shot.preimage = Some(self.random_bits(self.response_bits()));
        }
    }

    fn commit(&mut self) -> BitString {
        self.commitment()
    }

    fn finish_delayed_commit(&mut self) -> BitString {
        self.commitment()
    }

    fn respond_standard(&mut self) -> BitString {
        match self.kind {
            CheaterKind::KnownPreimage => self.shot.preimage.clone().unwrap(),
            CheaterKind::Random => self.random_bits(self.response_bits()),
        }
    }

    fn respond_interference(&mut self, parity: Option<&BitString>) -> BitString {
        if self.kind == CheaterKind::KnownPreimage {
            if let (Some(r), Some(x)) = (parity, self.shot.preimage.as_ref()) {
                self.shot.parity_bit = Some(r.dot(x));
            }
        }
        // One preimage gives no phase relation between the pair, so the
        // best either strategy can do for d is guess.
        self.random_bits(self.response_bits())
    }

    fn measure_ancilla(&mut self, basis: Basis) -> u8 {
        match self.kind {
            CheaterKind::Random => self.rng.gen::<u64>() as u8 & 1,
            CheaterKind::KnownPreimage => {
                // The ancilla the verifier will model holds |r·x⟩ for the
                // one known preimage; a tilted read of that state is a
                // biased coin, which classical dice reproduce exactly.
                let bit = self.shot.parity_bit.expect("parity challenge seen first");
                let p0 = match basis {
                    Basis::ZPlusX | Basis::ZMinusX => {
                        let c = (std::f64::consts::FRAC_PI_8).cos();
                        let t = (std::f64::consts::FRAC_PI_8).sin();
                        if bit == 0 {
                            c * c
                        } else {
                            t * t
                        }
                    }
                    _ => panic!("ancilla challenge uses the tilted bases"),
                };
                u8::from(self.rng.gen::<f64>() >= p0)
            }
        }
    }
}

/// A preimage vector for the chosen (b, x): used by tests to cross-check
/// the cheater's standard branch against direct evaluation.
pub fn lwe_encoding_of(inst: &LweInstance, b: u8, x: &[u64]) -> BitString {
    lwe_encode_preimage(inst, b, &ResidueVector::new(x.to_vec(), inst.q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{run_protocol, study_verifier, Mode, ProtocolKind, RunConfig};
    use crate::tcf::rabin_study_keygen;

    fn run(
        kind: ProtocolKind,
        id: u64,
        cheat: CheaterKind,
        shots: u64,
        seed: u64,
    ) -> crate::protocol::RunTally {
        let verifier = study_verifier(kind, id);
        let mut cheater = Cheater::new(&verifier.public_instance(), cheat, seed);
        let cfg = RunConfig {
            shots_standard: shots,
            shots_interference: shots,
            mode: Mode::Interactive,
            seed,
        };
        run_protocol(&verifier, &mut cheater, &cfg, |_| {})
    }

    #[test]
    fn encode_image_inverts_decode_on_every_image() {
        for modulus in [8u64, 15, 16, 21] {
            let (inst, _) = rabin_study_keygen(modulus);
            for x in 0..inst.domain_size() {
                let v = rabin_eval(&inst, x);
                let w = encode_image(&inst, v);
                assert_eq!(crate::protocol::decode_image(&inst, w), v, "N={modulus} x={x}");
            }
        }
    }

    #[test]
    fn known_preimage_cheater_aces_the_standard_branch() {
        for (kind, id) in [(ProtocolKind::Factoring, 15), (ProtocolKind::Lwe, 2)] {
            let tally = run(kind, id, CheaterKind::KnownPreimage, 1500, 21);
            assert_eq!(tally.standard.accepted, tally.standard.counted, "{kind:?}");
            assert!(tally.standard.counted > 500);
        }
    }

    #[test]
    fn known_preimage_cheater_is_at_chance_on_interference() {
        let tally = run(ProtocolKind::Factoring, 8, CheaterKind::KnownPreimage, 4000, 33);
        let n = tally.interference.counted as f64;
        let p = tally.interference.rate();
        assert!((p - 0.5).abs() < 4.0 * (0.25 / n).sqrt(), "p_B = {p}");

        let tally = run(ProtocolKind::Lwe, 0, CheaterKind::KnownPreimage, 4000, 34);
        // Uniform d is discarded at 1/32 and otherwise hits the claw
        // relation on 15 of the 31 nonzero strings.
        let n = tally.interference.counted as f64;
        let p = tally.interference.rate();
        let ideal = 15.0 / 31.0;
        assert!((p - ideal).abs() < 4.0 * (ideal * (1.0 - ideal) / n).sqrt(), "p_B = {p}");
        assert!(tally.interference.discarded_zero_response > 0);
    }

    #[test]
    fn random_cheater_standard_branch_matches_guessing_rate() {
        let tally = run(ProtocolKind::Lwe, 3, CheaterKind::Random, 6000, 55);
        let n = tally.standard.counted as f64;
        let p = tally.standard.rate();
        let ideal = 2.0 / 32.0;
        assert!((p - ideal).abs() < 4.0 * (ideal * (1.0 - ideal) / n).sqrt(), "p_A = {p}");
    }

    #[test]
    fn cheaters_complete_delayed_runs_too() {
        let verifier = study_verifier(ProtocolKind::Factoring, 21);
        let mut cheater = Cheater::new(&verifier.public_instance(), CheaterKind::KnownPreimage, 77);
        let cfg = RunConfig {
            shots_standard: 300,
            shots_interference: 300,
            mode: Mode::Delayed,
            seed: 77,
        };
        let tally = run_protocol(&verifier, &mut cheater, &cfg, |_| {});
        assert_eq!(tally.standard.raw, 300);
        assert_eq!(tally.standard.accepted, tally.standard.counted);
    }
}
