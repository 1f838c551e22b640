//! The two trapdoor claw-free function families: squaring mod N with the
//! factors as trapdoor, and MSB-rounded LWE with the secret shift as trapdoor.
//!
//! Instances are the public data a prover sees; trapdoors stay on the
//! verifier side and never appear in instance types.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numtheory::{sqrt_mod_semiprime, BitString, ResidueVector};

/// Public data of a squaring instance: modulus N, a domain of `n_x`-bit
/// inputs, and an `n_y`-bit image register.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RabinInstance {
    pub modulus: u64,
    pub n_x: u32,
    pub n_y: u32,
}

impl RabinInstance {
    fn validate(&self) {
        let n = self.modulus;
        assert!(n >= 3, "modulus too small");
        // The domain [0, 2^n_x) must not contain both members of any
        // x, N-x pair, and the image register must hold any value below N.
        assert!(1u64 << self.n_x <= n / 2 + 1, "domain exceeds half the modulus");
        assert!(1u64 << self.n_y >= n, "image register cannot hold all residues");
    }

    pub fn domain_size(&self) -> u64 {
        1 << self.n_x
    }
}

/// Verifier-side secret for inverting a squaring instance.
///
/// Semiprime moduli invert through CRT square roots; the power-of-two demo
/// moduli 8 and 16 have no odd prime factorization and fall back to scanning
/// the (tiny) domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum RabinTrapdoor {
    Factors { p: u64, q: u64 },
    ExhaustiveSearch,
}

/// A colliding input pair for one image value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RabinClaw {
    pub x0: u64,
    pub x1: u64,
    pub image: u64,
}

/// Inversion outcome: a claw, or the report that the image has fewer than
/// two preimages in the domain. The latter is an ordinary value; the
/// protocol discards such commitments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RabinInversion {
    Claw(RabinClaw),
    InvalidImage,
}

fn is_odd_prime(n: u64) -> bool {
    if n < 3 || n % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Builds a squaring instance over N = p*q together with its trapdoor.
pub fn rabin_keygen(p: u64, q: u64, n_x: u32, n_y: u32) -> (RabinInstance, RabinTrapdoor) {
    assert!(is_odd_prime(p) && is_odd_prime(q), "factors must be odd primes");
    assert!(p != q, "factors must be distinct");
    let inst = RabinInstance { modulus: p * q, n_x, n_y };
    inst.validate();
    (inst, RabinTrapdoor::Factors { p, q })
}

/// Demo instance for the power-of-two moduli 8 and 16, inverted by domain
/// scan instead of CRT.
pub fn rabin_demo_keygen(modulus: u64, n_x: u32, n_y: u32) -> (RabinInstance, RabinTrapdoor) {
    assert!(modulus == 8 || modulus == 16, "demo moduli are 8 and 16");
    let inst = RabinInstance { modulus, n_x, n_y };
    inst.validate();
    (inst, RabinTrapdoor::ExhaustiveSearch)
}

/// The four study instances: N = 8 and 16 as demo moduli, N = 15 = 3*5 and
/// N = 21 = 3*7 with CRT trapdoors, using the published register sizes.
pub fn rabin_study_keygen(modulus: u64) -> (RabinInstance, RabinTrapdoor) {
    match modulus {
        8 => rabin_demo_keygen(8, 2, 3),
        15 => rabin_keygen(3, 5, 3, 4),
        16 => rabin_demo_keygen(16, 3, 4),
        21 => rabin_keygen(3, 7, 3, 5),
        _ => panic!("no study instance for modulus {modulus}"),
    }
}

/// f(x) = x^2 mod N on the domain [0, 2^n_x).
pub fn rabin_eval(inst: &RabinInstance, x: u64) -> u64 {
    assert!(x < inst.domain_size(), "input outside domain");
    x * x % inst.modulus
}

/// Recovers the two domain preimages of `image`, or reports the image
/// invalid when it has fewer than two.
pub fn rabin_invert(inst: &RabinInstance, td: &RabinTrapdoor, image: u64) -> RabinInversion {
    assert!(image < inst.modulus, "image must be a residue mod N");
    let mut roots: Vec<u64> = match td {
        RabinTrapdoor::Factors { p, q } => {
            assert_eq!(p * q, inst.modulus, "trapdoor does not match instance");
            sqrt_mod_semiprime(image, *p, *q)
                .into_iter()
                .filter(|&x| x < inst.domain_size())
                .collect()
        }
        RabinTrapdoor::ExhaustiveSearch => {
            (0..inst.domain_size()).filter(|&x| rabin_eval(inst, x) == image).collect()
        }
    };
    roots.sort_unstable();
    match roots.as_slice() {
        &[x0, x1] => RabinInversion::Claw(RabinClaw { x0, x1, image }),
        _ => RabinInversion::InvalidImage,
    }
}

/// Public data of an MSB-rounded LWE instance: an m x n matrix A over Z_q
/// and the masked column y = As + e.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LweInstance {
    rows: Vec<ResidueVector>,
    pub y: ResidueVector,
    pub q: u64,
}

impl LweInstance {
    pub fn new(rows: Vec<ResidueVector>, y: ResidueVector, q: u64) -> Self {
        assert!(q.is_power_of_two() && q >= 2, "modulus must be a power of two");
        assert!(!rows.is_empty(), "matrix must have rows");
        let n = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == n && r.modulus() == q), "ragged matrix");
        assert_eq!(y.len(), rows.len(), "y length must match row count");
        assert_eq!(y.modulus(), q, "y modulus mismatch");
        LweInstance { rows, y, q }
    }

    /// Number of equations m.
    pub fn rows_len(&self) -> usize {
        self.rows.len()
    }

    /// Secret dimension n.
    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, i: usize) -> &ResidueVector {
        &self.rows[i]
    }

    /// Bits per Z_q component.
    pub fn component_bits(&self) -> u32 {
        self.q.trailing_zeros()
    }

    /// Qubits needed to hold (b, x): 1 + n*log2(q).
    pub fn preimage_bits(&self) -> usize {
        1 + self.dim() * self.component_bits() as usize
    }

    pub fn a_times(&self, x: &ResidueVector) -> ResidueVector {
        let entries = self.rows.iter().map(|r| r.dot(x)).collect();
        ResidueVector::new(entries, self.q)
    }
}

/// Verifier-side secret: the binary shift s relating the two claw branches,
/// and the error vector with y = As + e.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LweTrapdoor {
    pub s: Vec<u8>,
    pub e: ResidueVector,
}

/// A colliding pair: f(0, x0) = f(1, x1) with x0 = x1 + s componentwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LweClaw {
    pub x0: ResidueVector,
    pub x1: ResidueVector,
    pub image: BitString,
}

/// Inversion outcome. Images whose preimage set is not exactly one claw
/// pair are reported as anomalies and excluded from scoring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LweInversion {
    Claw(LweClaw),
    Anomaly { preimages: usize, claws: usize },
}

/// f(b, x) = MSB(Ax + b*y), one bit per row.
pub fn lwe_eval(inst: &LweInstance, b: u8, x: &ResidueVector) -> BitString {
    assert!(b <= 1, "branch bit must be 0 or 1");
    let mut v = inst.a_times(x);
    if b == 1 {
        v = v.add(&inst.y);
    }
    let half = inst.q / 2;
    BitString::new(v.entries().iter().map(|&c| u8::from(c >= half)).collect())
}

/// Concatenates the branch bit and the component bits of x, MSB first.
/// This is the qubit layout of the preimage register.
pub fn lwe_encode_preimage(inst: &LweInstance, b: u8, x: &ResidueVector) -> BitString {
    assert!(b <= 1);
    assert_eq!(x.len(), inst.dim());
    let cb = inst.component_bits() as usize;
    let mut bits = vec![b];
    for &c in x.entries() {
        bits.extend(BitString::from_value(c, cb).bits());
    }
    BitString::new(bits)
}

fn all_inputs(inst: &LweInstance) -> impl Iterator<Item = ResidueVector> + '_ {
    let (n, q) = (inst.dim(), inst.q);
    (0..q.pow(n as u32)).map(move |mut v| {
        let mut entries = vec![0u64; n];
        for e in entries.iter_mut().rev() {
            *e = v % q;
            v /= q;
        }
        ResidueVector::new(entries, q)
    })
}

/// Recovers the unique claw of `image` through the trapdoor shift, or
/// reports an anomaly when the preimage set is not exactly that pair.
pub fn lwe_invert(inst: &LweInstance, td: &LweTrapdoor, image: &BitString) -> LweInversion {
    assert_eq!(image.len(), inst.rows_len(), "image length must be m");
    let s = ResidueVector::new(td.s.iter().map(|&b| b as u64).collect(), inst.q);
    let mut preimages = 0usize;
    let mut claws = Vec::new();
    for x in all_inputs(inst) {
        if lwe_eval(inst, 0, &x) == *image {
            preimages += 1;
        }
        if lwe_eval(inst, 1, &x) == *image {
            preimages += 1;
            let x0 = x.add(&s);
            if lwe_eval(inst, 0, &x0) == *image {
                claws.push(LweClaw { x0, x1: x, image: image.clone() });
            }
        }
    }
    match (claws.len(), preimages) {
        (1, 2) => LweInversion::Claw(claws.pop().unwrap()),
        (claws, preimages) => LweInversion::Anomaly { preimages, claws },
    }
}

/// Samples an instance: uniform A, uniform binary secret, discrete Gaussian
/// error of width sigma, y = As + e.
pub fn lwe_keygen(
    m: usize,
    n: usize,
    q: u64,
    sigma: f64,
    rng: &mut impl Rng,
) -> (LweInstance, LweTrapdoor) {
    let s: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
    lwe_keygen_with_secret(m, n, q, &s, sigma, rng)
}

/// Keygen with the binary secret pinned; used by the loader and by tests.
pub fn lwe_keygen_with_secret(
    m: usize,
    n: usize,
    q: u64,
    s: &[u8],
    sigma: f64,
    rng: &mut impl Rng,
) -> (LweInstance, LweTrapdoor) {
    assert!(q.is_power_of_two() && q >= 2, "modulus must be a power of two");
    assert_eq!(s.len(), n);
    assert!(s.iter().all(|&b| b <= 1), "secret must be binary");
    let rows: Vec<ResidueVector> = (0..m)
        .map(|_| ResidueVector::new((0..n).map(|_| rng.gen_range(0..q)).collect(), q))
        .collect();
    let e = ResidueVector::new(
        (0..m).map(|_| crate::numtheory::discrete_gaussian_sample(sigma, q, rng)).collect(),
        q,
    );
    let sv = ResidueVector::new(s.iter().map(|&b| b as u64).collect(), q);
    let asv = ResidueVector::new(rows.iter().map(|r| r.dot(&sv)).collect(), q);
    let y = asv.add(&e);
    (LweInstance::new(rows, y, q), LweTrapdoor { s: s.to_vec(), e })
}

/// A published study instance together with its trapdoor and the error
/// vector exactly as printed.
#[derive(Clone, Debug)]
pub struct StudyLweInstance {
    pub instance: LweInstance,
    pub trapdoor: LweTrapdoor,
    /// The error vector as published. Instance 3's printed vector does not
    /// satisfy y = As + e for any binary s; the trapdoor carries the
    /// effective error y - As instead and `printed_error_consistent` is
    /// false for that instance.
    pub printed_error: ResidueVector,
    pub printed_error_consistent: bool,
}

/// Loads one of the four published 4x2 instances over Z_4.
///
/// The tables print A transposed and the secret as (0 1); under row-major A
/// the secret that satisfies y = As + e is s = (1, 0), which also gives
/// every image exactly one claw pair. The loader pins that convention and
/// verifies it.
pub fn lwe_study_instance(id: usize) -> StudyLweInstance {
    // (columns of A as printed, printed e, y)
    let (at, e, y): ([[u64; 4]; 2], [u64; 4], [u64; 4]) = match id {
        0 => ([[0, 2, 0, 1], [2, 0, 1, 2]], [0, 1, 0, 0], [0, 3, 0, 1]),
        1 => ([[0, 2, 3, 2], [2, 3, 0, 0]], [0, 0, 0, 1], [0, 2, 3, 3]),
        2 => ([[2, 0, 0, 1], [0, 3, 2, 1]], [1, 0, 1, 0], [3, 0, 1, 1]),
        3 => ([[0, 1, 3, 0], [3, 0, 0, 2]], [1, 0, 1, 0], [0, 1, 3, 1]),
        _ => panic!("study instances are numbered 0 through 3"),
    };
    let q = 4u64;
    let rows: Vec<ResidueVector> =
        (0..4).map(|i| ResidueVector::new(vec![at[0][i], at[1][i]], q)).collect();
    let y = ResidueVector::new(y.to_vec(), q);
    let instance = LweInstance::new(rows, y.clone(), q);
    let s = vec![1u8, 0];
    let sv = ResidueVector::new(vec![1, 0], q);
    let effective_e = y.sub(&instance.a_times(&sv));
    // The effective error must stay small, or the claw structure would break.
    assert!(
        effective_e.entries().iter().all(|&c| c == 0 || c == 1 || c == q - 1),
        "effective error too large for instance {id}"
    );
    let printed_error = ResidueVector::new(e.to_vec(), q);
    let printed_error_consistent = printed_error == effective_e;
    StudyLweInstance {
        instance,
        trapdoor: LweTrapdoor { s, e: effective_e },
        printed_error,
        printed_error_consistent,
    }
}
