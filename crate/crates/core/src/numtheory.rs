//! Bit strings, residue vectors, and the modular arithmetic the trapdoor
//! functions are built on.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Fixed-length string of bits, most significant first.
///
/// Used for function images, measured register values, challenge strings and
/// X-basis outcomes. Serializes as a compact string like `"0110"`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new(bits: Vec<u8>) -> Self {
        assert!(bits.iter().all(|&b| b <= 1), "bits must be 0 or 1");
        BitString(bits)
    }

    pub fn zeros(len: usize) -> Self {
        BitString(vec![0; len])
    }

    /// Encodes `value` as `width` bits, most significant first.
    pub fn from_value(value: u64, width: usize) -> Self {
        assert!(width <= 63, "width {width} out of range");
        assert!(value < 1 << width, "value {value} does not fit in {width} bits");
        let bits = (0..width).map(|i| ((value >> (width - 1 - i)) & 1) as u8).collect();
        BitString(bits)
    }

    /// The integer this bit string encodes, most significant bit first.
    pub fn value(&self) -> u64 {
        assert!(self.len() <= 63, "bit string too long for u64");
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    pub fn xor(&self, other: &BitString) -> BitString {
        assert_eq!(self.len(), other.len(), "bit length mismatch");
        BitString(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect())
    }

    /// Inner product mod 2.
    pub fn dot(&self, other: &BitString) -> u8 {
        assert_eq!(self.len(), other.len(), "bit length mismatch");
        self.0.iter().zip(&other.0).map(|(a, b)| a & b).fold(0, |acc, x| acc ^ x)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(format!("invalid bit character {c:?}")),
            })
            .collect::<Result<Vec<u8>, _>>()
            .map(BitString)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Vector over Z_q with every entry reduced mod q.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResidueVector {
    entries: Vec<u64>,
    q: u64,
}

impl ResidueVector {
    pub fn new(entries: Vec<u64>, q: u64) -> Self {
        assert!(q >= 2, "modulus must be at least 2");
        assert!(entries.iter().all(|&v| v < q), "entry not reduced mod {q}");
        ResidueVector { entries, q }
    }

    pub fn zeros(len: usize, q: u64) -> Self {
        ResidueVector { entries: vec![0; len], q }
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> u64 {
        self.entries[i]
    }

    pub fn add(&self, other: &ResidueVector) -> ResidueVector {
        self.zip_with(other, |a, b| (a + b) % self.q)
    }

    pub fn sub(&self, other: &ResidueVector) -> ResidueVector {
        self.zip_with(other, |a, b| (a + self.q - b) % self.q)
    }

    /// Componentwise dot product mod q.
    pub fn dot(&self, other: &ResidueVector) -> u64 {
        assert_eq!(self.q, other.q, "modulus mismatch");
        assert_eq!(self.len(), other.len(), "length mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(0u64, |acc, (&a, &b)| (acc + mul_mod(a, b, self.q)) % self.q)
    }

    fn zip_with(&self, other: &ResidueVector, f: impl Fn(u64, u64) -> u64) -> ResidueVector {
        assert_eq!(self.q, other.q, "modulus mismatch");
        assert_eq!(self.len(), other.len(), "length mismatch");
        let entries = self.entries.iter().zip(&other.entries).map(|(&a, &b)| f(a, b)).collect();
        ResidueVector { entries, q: self.q }
    }
}

impl fmt::Debug for ResidueVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ResidueVector({:?} mod {})", self.entries, self.q)
    }
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    assert!(m >= 1);
    let mut acc: u64 = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Multiplicative inverse of `a` mod `m`; panics unless gcd(a, m) = 1.
pub fn inv_mod(a: u64, m: u64) -> u64 {
    let (g, x, _) = egcd(a as i128, m as i128);
    assert_eq!(g, 1, "{a} is not invertible mod {m}");
    (x.rem_euclid(m as i128)) as u64
}

fn egcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = egcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// All square roots of `a` modulo an odd prime `p`, sorted ascending.
///
/// Returns `[0]` when `a ≡ 0`, both roots when `a` is a quadratic residue,
/// and nothing otherwise. Uses Tonelli-Shanks, so `p ≡ 1 (mod 4)` works too.
pub fn sqrt_mod_prime(a: u64, p: u64) -> Vec<u64> {
    assert!(p >= 3 && p % 2 == 1, "modulus must be an odd prime");
    let a = a % p;
    if a == 0 {
        return vec![0];
    }
    // Euler's criterion: a^((p-1)/2) is 1 for residues, p-1 otherwise.
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return Vec::new();
    }
    let r = if p % 4 == 3 {
        pow_mod(a, (p + 1) / 4, p)
    } else {
        tonelli_shanks(a, p)
    };
    let mut roots = vec![r, p - r];
    roots.sort_unstable();
    roots.dedup();
    roots
}

fn tonelli_shanks(a: u64, p: u64) -> u64 {
    // Write p - 1 = s * 2^e with s odd.
    let mut s = p - 1;
    let mut e = 0u32;
    while s % 2 == 0 {
        s /= 2;
        e += 1;
    }
    // Any quadratic non-residue serves as the twiddle base.
    let mut n = 2;
    while pow_mod(n, (p - 1) / 2, p) != p - 1 {
        n += 1;
    }
    let mut x = pow_mod(a, (s + 1) / 2, p);
    let mut b = pow_mod(a, s, p);
    let mut g = pow_mod(n, s, p);
    let mut r = e;
    loop {
        // Order of b divides 2^(r-1); find the exact power.
        let mut t = b;
        let mut m = 0u32;
        while t != 1 {
            t = mul_mod(t, t, p);
            m += 1;
        }
        if m == 0 {
            return x;
        }
        let gs = pow_mod(g, 1 << (r - m - 1), p);
        x = mul_mod(x, gs, p);
        g = mul_mod(gs, gs, p);
        b = mul_mod(b, g, p);
        r = m;
    }
}

/// All square roots of `a` modulo `n = p * q` for distinct odd primes,
/// combined from the per-prime roots by the Chinese remainder theorem.
/// Sorted ascending; empty when `a` is a non-residue mod either prime.
pub fn sqrt_mod_semiprime(a: u64, p: u64, q: u64) -> Vec<u64> {
    assert!(p != q, "prime factors must be distinct");
    let n = p * q;
    let a = a % n;
    let rp = sqrt_mod_prime(a, p);
    let rq = sqrt_mod_prime(a, q);
    let (pinv_q, qinv_p) = (inv_mod(p % q, q), inv_mod(q % p, p));
    let mut roots = Vec::with_capacity(rp.len() * rq.len());
    for &xp in &rp {
        for &xq in &rq {
            // x = xp (mod p), x = xq (mod q)
            let t1 = mul_mod(mul_mod(xp, q % n, n), qinv_p, n);
            let t2 = mul_mod(mul_mod(xq, p % n, n), pinv_q, n);
            roots.push((t1 + t2) % n);
        }
    }
    roots.sort_unstable();
    roots.dedup();
    roots
}

/// Draws from the discrete Gaussian with width `sigma`, truncated at
/// ±⌈6σ⌉, and reduces the signed sample mod q.
pub fn discrete_gaussian_sample(sigma: f64, q: u64, rng: &mut impl Rng) -> u64 {
    assert!(sigma >= 0.0, "sigma must be nonnegative");
    if sigma == 0.0 {
        return 0;
    }
    let bound = (6.0 * sigma).ceil() as i64;
    let weights: Vec<f64> =
        (-bound..=bound).map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            let k = i as i64 - bound;
            return k.rem_euclid(q as i64) as u64;
        }
    }
    // Floating-point slack can leave u marginally positive; take the top bin.
    (bound as u64) % q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn sqrt_by_search(a: u64, n: u64) -> Vec<u64> {
        (0..n).filter(|&x| x * x % n == a % n).collect()
    }

    #[test]
    fn bitstring_roundtrips_values() {
        for width in 0..=10 {
            for value in 0..1u64 << width {
                let bs = BitString::from_value(value, width);
                assert_eq!(bs.len(), width);
                assert_eq!(bs.value(), value);
                assert_eq!(bs.to_string().parse::<BitString>().unwrap(), bs);
            }
        }
    }

    #[test]
    fn bitstring_display_is_msb_first() {
        assert_eq!(BitString::from_value(6, 4).to_string(), "0110");
        assert_eq!(BitString::from_value(1, 3).to_string(), "001");
    }

    #[test]
    fn bitstring_xor_and_dot() {
        let a: BitString = "1101".parse().unwrap();
        let b: BitString = "1011".parse().unwrap();
        assert_eq!(a.xor(&b).to_string(), "0110");
        assert_eq!(a.dot(&b), 0); // overlap at the first and last position
        assert_eq!(a.dot(&a), 1);
        assert_eq!(BitString::zeros(4).dot(&a), 0);
    }

    #[test]
    #[should_panic(expected = "length mismatch")]
    fn bitstring_dot_rejects_length_mismatch() {
        let a: BitString = "01".parse().unwrap();
        let b: BitString = "011".parse().unwrap();
        let _ = a.dot(&b);
    }

    #[test]
    fn bitstring_serde_uses_string_form() {
        let a: BitString = "0110".parse().unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), "\"0110\"");
        let back: BitString = serde_json::from_str("\"0110\"").unwrap();
        assert_eq!(back, a);
        assert!(serde_json::from_str::<BitString>("\"012\"").is_err());
    }

    #[test]
    fn residue_vector_arithmetic() {
        let a = ResidueVector::new(vec![1, 3, 2], 4);
        let b = ResidueVector::new(vec![3, 3, 1], 4);
        assert_eq!(a.add(&b).entries(), &[0, 2, 3]);
        assert_eq!(a.sub(&b).entries(), &[2, 0, 1]);
        assert_eq!(a.dot(&b), (3 + 9 + 2) % 4);
    }

    #[test]
    #[should_panic(expected = "not reduced")]
    fn residue_vector_rejects_unreduced_entries() {
        let _ = ResidueVector::new(vec![4], 4);
    }

    #[test]
    fn sqrt_mod_prime_matches_search() {
        for p in [3u64, 5, 7, 11, 13, 17, 97, 101, 1009] {
            for a in 0..p.min(200) {
                let mut expect = sqrt_by_search(a, p);
                expect.sort_unstable();
                assert_eq!(sqrt_mod_prime(a, p), expect, "a={a} p={p}");
            }
        }
    }

    #[test]
    fn sqrt_mod_semiprime_matches_search() {
        for (p, q) in [(3u64, 5u64), (3, 7), (5, 7), (7, 11)] {
            let n = p * q;
            for a in 0..n {
                assert_eq!(sqrt_mod_semiprime(a, p, q), sqrt_by_search(a, n), "a={a} n={n}");
            }
        }
    }

    #[test]
    fn sqrt_mod_semiprime_known_values() {
        assert_eq!(sqrt_mod_semiprime(4, 3, 5), vec![2, 7, 8, 13]);
        assert_eq!(sqrt_mod_semiprime(1, 3, 5), vec![1, 4, 11, 14]);
        assert!(sqrt_mod_semiprime(5, 3, 5).is_empty());
    }

    #[test]
    fn gaussian_sigma_zero_is_degenerate() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(discrete_gaussian_sample(0.0, 8, &mut rng), 0);
        }
    }

    #[test]
    fn gaussian_sample_mean_is_near_zero() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let q = 64u64;
        let n = 100_000;
        let mut sum = 0f64;
        for _ in 0..n {
            let v = discrete_gaussian_sample(1.0, q, &mut rng);
            // Signed representative in (-q/2, q/2].
            let signed = if v > q / 2 { v as f64 - q as f64 } else { v as f64 };
            assert!(signed.abs() <= 6.0, "sample beyond truncation bound");
            sum += signed;
        }
        let mean = sum / n as f64;
        // 4 sigma / sqrt(n) tolerance for a unit-width Gaussian.
        assert!(mean.abs() < 4.0 / (n as f64).sqrt() * 1.0 + 0.02, "mean {mean}");
    }

    #[test]
    fn inv_mod_agrees_with_definition() {
        for m in [3u64, 4, 5, 15, 16, 21, 97] {
            for a in 1..m {
                if gcd(a, m) == 1 {
                    assert_eq!(mul_mod(a, inv_mod(a, m), m), 1, "a={a} m={m}");
                }
            }
        }
    }
}
