//! Polar codes for heterogeneous binary symmetric channels: construction via
//! Bhattacharyya-parameter propagation, encoding, successive-cancellation
//! decoding, and the syndrome form used by the secure sketch.
//!
//! Everything shares one ordering convention: the transform is the plain
//! Kronecker power of the `(1 0; 1 1)` kernel in natural order (no bit-reversal
//! permutation), the SC recursion splits the input into halves, and the
//! construction propagates per-position parameters through the same recursion
//! tree. The transform is involutory over GF(2), which is what makes the
//! syndrome extraction a plain restriction of the transform output.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spectral::hex;

/// LLR magnitude used as the surrogate for certainty (`p = 0`).
pub const LLR_SAT: f64 = 40.0;

/// Largest supported block length.
pub const MAX_BLOCK: usize = 4096;

// --- bit strings -----------------------------------------------------------------

/// Fixed-length sequence of bits, stored one bit per byte.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<u8>,
}

impl std::fmt::Debug for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitString[{}](", self.bits.len())?;
        for &b in self.bits.iter().take(64) {
            write!(f, "{b}")?;
        }
        if self.bits.len() > 64 {
            write!(f, "…")?;
        }
        write!(f, ")")
    }
}

impl BitString {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Parameter("bits must be 0 or 1".into()));
        }
        Ok(Self { bits })
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![0; n] }
    }

    pub fn ones(n: usize) -> Self {
        Self { bits: vec![1; n] }
    }

    pub fn random<R: rand::Rng>(rng: &mut R, n: usize) -> Self {
        Self {
            bits: (0..n).map(|_| rng.random_range(0..=1u8)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, b: u8) {
        debug_assert!(b <= 1);
        self.bits[i] = b;
    }

    pub fn as_bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "xor of lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(BitString {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    pub fn complement(&self) -> BitString {
        BitString {
            bits: self.bits.iter().map(|b| b ^ 1).collect(),
        }
    }

    pub fn hamming(&self, other: &BitString) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "hamming of lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count())
    }

    /// Pack to bytes, bit `i` going to byte `i / 8` at position `i % 8`
    /// (least significant first).
    pub fn to_packed_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            out[i / 8] |= b << (i % 8);
        }
        out
    }

    pub fn from_packed_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::Shape(format!(
                "{} bytes cannot hold exactly {len} bits",
                bytes.len()
            )));
        }
        let bits = (0..len).map(|i| (bytes[i / 8] >> (i % 8)) & 1).collect();
        Ok(Self { bits })
    }
}

// --- channels -----------------------------------------------------------------------

/// Per-position crossover probabilities of the bit channels feeding the code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub p: Vec<f64>,
}

impl ChannelSpec {
    pub fn uniform(n: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; n])
    }

    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.iter().any(|&x| !(0.0..=0.5).contains(&x)) {
            return Err(Error::Parameter(
                "crossover probabilities must be in [0, 0.5]".into(),
            ));
        }
        Ok(Self { p })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// LLR magnitude `ln((1-p)/p)` saturated at [`LLR_SAT`].
    pub fn llr_magnitude(&self, i: usize) -> f64 {
        let p = self.p[i];
        if p <= 0.0 {
            LLR_SAT
        } else {
            (((1.0 - p) / p).ln()).min(LLR_SAT)
        }
    }

    /// Channel LLRs for an observed word: positive favors bit 0.
    pub fn llrs(&self, observed: &BitString) -> Result<Vec<f64>> {
        if observed.len() != self.len() {
            return Err(Error::Shape(format!(
                "observed length {} vs {} channels",
                observed.len(),
                self.len()
            )));
        }
        Ok((0..self.len())
            .map(|i| (1.0 - 2.0 * f64::from(observed.bit(i))) * self.llr_magnitude(i))
            .collect())
    }
}

// --- transform -----------------------------------------------------------------------

fn check_block_len(n: usize) -> Result<()> {
    if !(2..=MAX_BLOCK).contains(&n) || !n.is_power_of_two() {
        return Err(Error::Shape(format!(
            "block length must be a power of two in [2, {MAX_BLOCK}], got {n}"
        )));
    }
    Ok(())
}

/// Apply the Kronecker-power transform `x = u * F^{(x) log2 n}` over GF(2).
/// The transform is its own inverse.
pub fn polar_transform(u: &BitString) -> Result<BitString> {
    check_block_len(u.len())?;
    let mut x = u.clone();
    let n = x.len();
    let mut h = 1;
    while h < n {
        let mut i = 0;
        while i < n {
            for j in i..i + h {
                let b = x.bit(j) ^ x.bit(j + h);
                x.set(j, b);
            }
            i += 2 * h;
        }
        h *= 2;
    }
    Ok(x)
}

// --- code construction ----------------------------------------------------------------

/// A constructed polar code: block length, message length, frozen positions,
/// per-position unreliability scores, and the channel profile it was designed
/// for.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCode {
    n: usize,
    m: usize,
    frozen_set: Vec<usize>,
    reliabilities: Vec<f64>,
    channel_p: Vec<f64>,
}

/// Serialized form of a [`PolarCode`]; its content hash binds helper records
/// to the exact code they were issued under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeDescriptor {
    pub n: usize,
    pub m: usize,
    pub frozen_set: Vec<usize>,
    pub p: Vec<f64>,
}

impl CodeDescriptor {
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("descriptor serializes");
        hex(&Sha256::digest(&bytes))
    }
}

/// Propagate Bhattacharyya parameters through the polarization recursion.
/// Pair `(z_j, z_{j+half})`; the worse synthesized channel (left subtree)
/// gets `min(z_a + z_b - z_a z_b, 1)`, the better one `z_a z_b`.
fn propagate_bhattacharyya(z: &[f64]) -> Vec<f64> {
    if z.len() == 1 {
        return z.to_vec();
    }
    let half = z.len() / 2;
    let mut worse = Vec::with_capacity(half);
    let mut better = Vec::with_capacity(half);
    for j in 0..half {
        let (a, b) = (z[j], z[j + half]);
        worse.push((a + b - a * b).min(1.0));
        better.push(a * b);
    }
    let mut out = propagate_bhattacharyya(&worse);
    out.extend(propagate_bhattacharyya(&better));
    out
}

/// Build a code for the given channel profile: initialize
/// `Z_i = 2 sqrt(p_i (1 - p_i))`, polarize, and freeze the `n - m` positions
/// with the largest final parameters (ties freeze the lower index).
///
/// `m = 0` is accepted as the fully-frozen degenerate code.
pub fn construct(channels: &ChannelSpec, m: usize) -> Result<PolarCode> {
    let n = channels.len();
    check_block_len(n)?;
    if m > n {
        return Err(Error::Parameter(format!("m = {m} exceeds n = {n}")));
    }
    let z0: Vec<f64> = channels.p.iter().map(|&p| 2.0 * (p * (1.0 - p)).sqrt()).collect();
    let reliabilities = propagate_bhattacharyya(&z0);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        reliabilities[b]
            .partial_cmp(&reliabilities[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut frozen_set: Vec<usize> = order[..n - m].to_vec();
    frozen_set.sort_unstable();

    Ok(PolarCode {
        n,
        m,
        frozen_set,
        reliabilities,
        channel_p: channels.p.clone(),
    })
}

impl PolarCode {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn frozen_set(&self) -> &[usize] {
        &self.frozen_set
    }

    pub fn reliabilities(&self) -> &[f64] {
        &self.reliabilities
    }

    pub fn channels(&self) -> Result<ChannelSpec> {
        ChannelSpec::new(self.channel_p.clone())
    }

    pub fn descriptor(&self) -> CodeDescriptor {
        CodeDescriptor {
            n: self.n,
            m: self.m,
            frozen_set: self.frozen_set.clone(),
            p: self.channel_p.clone(),
        }
    }

    pub fn content_hash(&self) -> String {
        self.descriptor().content_hash()
    }

    /// Rebuild from a descriptor, verifying that the frozen set matches the
    /// stated channel profile.
    pub fn from_descriptor(desc: &CodeDescriptor) -> Result<PolarCode> {
        let channels = ChannelSpec::new(desc.p.clone())?;
        let code = construct(&channels, desc.m)?;
        if code.frozen_set != desc.frozen_set {
            return Err(Error::Configuration(
                "descriptor frozen set does not match its channel profile".into(),
            ));
        }
        Ok(code)
    }

    fn forced_values(&self, frozen_values: &BitString) -> Result<Vec<Option<u8>>> {
        if frozen_values.len() != self.n - self.m {
            return Err(Error::Shape(format!(
                "frozen values length {} vs {}",
                frozen_values.len(),
                self.n - self.m
            )));
        }
        let mut forced = vec![None; self.n];
        for (i, &pos) in self.frozen_set.iter().enumerate() {
            forced[pos] = Some(frozen_values.bit(i));
        }
        Ok(forced)
    }
}

// --- encoding ---------------------------------------------------------------------------

/// Place the message on unfrozen positions and `frozen_values` on frozen ones
/// (both in ascending position order), then apply the transform.
pub fn encode(
    code: &PolarCode,
    message: &BitString,
    frozen_values: &BitString,
) -> Result<BitString> {
    if message.len() != code.m {
        return Err(Error::Shape(format!(
            "message length {} vs m = {}",
            message.len(),
            code.m
        )));
    }
    let forced = code.forced_values(frozen_values)?;
    let mut u = BitString::zeros(code.n);
    let mut mi = 0;
    for (i, f) in forced.iter().enumerate() {
        match f {
            Some(b) => u.set(i, *b),
            None => {
                u.set(i, message.bit(mi));
                mi += 1;
            }
        }
    }
    polar_transform(&u)
}

// --- successive cancellation -----------------------------------------------------------

/// Exact log-domain check-node combine `2 atanh(tanh(a/2) tanh(b/2))`,
/// evaluated in the numerically stable form. With the `min-sum` feature the
/// magnitude correction terms are dropped.
fn f_combine(a: f64, b: f64) -> f64 {
    let base = a.signum() * b.signum() * a.abs().min(b.abs());
    #[cfg(feature = "min-sum")]
    {
        base
    }
    #[cfg(not(feature = "min-sum"))]
    {
        base + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
    }
}

fn g_combine(a: f64, b: f64, partial: u8) -> f64 {
    if partial == 1 {
        b - a
    } else {
        b + a
    }
}

fn sc_recurse(llr: &[f64], base: usize, forced: &[Option<u8>], u: &mut [u8]) -> Vec<u8> {
    let n = llr.len();
    if n == 1 {
        let bit = match forced[base] {
            Some(b) => b,
            None => u8::from(llr[0] < 0.0),
        };
        u[base] = bit;
        return vec![bit];
    }
    let half = n / 2;
    let left: Vec<f64> = (0..half).map(|j| f_combine(llr[j], llr[j + half])).collect();
    let s_left = sc_recurse(&left, base, forced, u);
    let right: Vec<f64> = (0..half)
        .map(|j| g_combine(llr[j], llr[j + half], s_left[j]))
        .collect();
    let s_right = sc_recurse(&right, base + half, forced, u);
    let mut partial = Vec::with_capacity(n);
    for j in 0..half {
        partial.push(s_left[j] ^ s_right[j]);
    }
    partial.extend_from_slice(&s_right);
    partial
}

/// Successive-cancellation decoding from per-position channel LLRs
/// (positive favors bit 0). Frozen positions are forced to `frozen_values`.
/// Returns the decoded message and the full transform-domain vector; a zero
/// LLR at an unfrozen leaf decides 0.
pub fn sc_decode(
    code: &PolarCode,
    llr: &[f64],
    frozen_values: &BitString,
) -> Result<(BitString, BitString)> {
    if llr.len() != code.n {
        return Err(Error::Shape(format!(
            "llr length {} vs n = {}",
            llr.len(),
            code.n
        )));
    }
    if llr.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parameter("llrs must be finite".into()));
    }
    let forced = code.forced_values(frozen_values)?;
    let mut u = vec![0u8; code.n];
    sc_recurse(llr, 0, &forced, &mut u);
    let message: Vec<u8> = (0..code.n)
        .filter(|i| forced[*i].is_none())
        .map(|i| u[i])
        .collect();
    Ok((
        BitString::from_bits(message)?,
        BitString::from_bits(u)?,
    ))
}

// --- syndrome form -----------------------------------------------------------------------

/// Syndrome of a word: the transform output restricted to the frozen set.
/// Valid because the transform is involutory, so `u = k * F^{(x) log2 n}`.
pub fn syndrome(code: &PolarCode, k: &BitString) -> Result<BitString> {
    if k.len() != code.n {
        return Err(Error::Shape(format!(
            "word length {} vs n = {}",
            k.len(),
            code.n
        )));
    }
    let u = polar_transform(k)?;
    BitString::from_bits(code.frozen_set.iter().map(|&i| u.bit(i)).collect())
}

/// Decode `noisy` to the member of the coset with frozen-position values `r`
/// that best explains the observation: SC with channel LLRs signed by the
/// observed bits and frozen values `r`. The output always satisfies
/// `syndrome(out) == r`.
pub fn syndrome_decode(
    code: &PolarCode,
    noisy: &BitString,
    r: &BitString,
    channels: &ChannelSpec,
) -> Result<BitString> {
    if channels.len() != code.n {
        return Err(Error::Shape(format!(
            "channel count {} vs n = {}",
            channels.len(),
            code.n
        )));
    }
    let llr = channels.llrs(noisy)?;
    let (_, u_hat) = sc_decode(code, &llr, r)?;
    polar_transform(&u_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Dense GF(2) Kronecker-power matrix, used as an independent reference.
    fn kronecker_matrix(n: usize) -> Vec<Vec<u8>> {
        let mut g = vec![vec![1u8]];
        let mut size = 1;
        while size < n {
            let mut next = vec![vec![0u8; 2 * size]; 2 * size];
            for (i, row) in g.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    // F = (1 0; 1 1): blocks (g 0; g g).
                    next[i][j] = v;
                    next[i + size][j] = v;
                    next[i + size][j + size] = v;
                }
            }
            g = next;
            size *= 2;
        }
        g
    }

    fn dense_transform(u: &BitString) -> BitString {
        let g = kronecker_matrix(u.len());
        let bits = (0..u.len())
            .map(|j| {
                (0..u.len())
                    .map(|i| u.bit(i) & g[i][j])
                    .fold(0, |acc, b| acc ^ b)
            })
            .collect();
        BitString::from_bits(bits).unwrap()
    }

    #[test]
    fn kernel_case_n2() {
        for (u0, u1) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let u = BitString::from_bits(vec![u0, u1]).unwrap();
            let x = polar_transform(&u).unwrap();
            assert_eq!(x.as_bits(), &[u0 ^ u1, u1]);
        }
    }

    #[test]
    fn transform_matches_dense_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [4usize, 8, 16] {
            for _ in 0..20 {
                let u = BitString::random(&mut rng, n);
                assert_eq!(polar_transform(&u).unwrap(), dense_transform(&u));
            }
        }
        // Worked case: n=4, u = 1000.
        let u = BitString::from_bits(vec![1, 0, 0, 0]).unwrap();
        let x = polar_transform(&u).unwrap();
        assert_eq!(x.as_bits(), &[1, 0, 0, 0]);
        let u = BitString::from_bits(vec![0, 1, 0, 0]).unwrap();
        assert_eq!(polar_transform(&u).unwrap().as_bits(), &[1, 1, 0, 0]);
    }

    #[test]
    fn transform_is_involutory() {
        // Exhaustive for n = 8, randomized for n = 1024.
        for bits in 0..256u32 {
            let u = BitString::from_bits((0..8).map(|i| ((bits >> i) & 1) as u8).collect())
                .unwrap();
            let back = polar_transform(&polar_transform(&u).unwrap()).unwrap();
            assert_eq!(back, u);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let u = BitString::random(&mut rng, 1024);
            let back = polar_transform(&polar_transform(&u).unwrap()).unwrap();
            assert_eq!(back, u);
        }
    }

    #[test]
    fn transform_rejects_bad_lengths() {
        assert!(polar_transform(&BitString::zeros(3)).is_err());
        assert!(polar_transform(&BitString::zeros(0)).is_err());
        assert!(polar_transform(&BitString::zeros(8192)).is_err());
    }

    /// Independent two-stage recursion for n = 4, written out by hand.
    fn hand_z4(p: f64) -> [f64; 4] {
        let z = 2.0 * (p * (1.0 - p)).sqrt();
        let zw = (2.0 * z - z * z).min(1.0);
        let zb = z * z;
        [
            (2.0 * zw - zw * zw).min(1.0),
            zw * zw,
            (2.0 * zb - zb * zb).min(1.0),
            zb * zb,
        ]
    }

    #[test]
    fn construct_n4_uniform_channel() {
        let channels = ChannelSpec::uniform(4, 0.11).unwrap();
        let code = construct(&channels, 2).unwrap();
        let expected = hand_z4(0.11);
        for (a, b) in code.reliabilities().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        // Position 0 is the worst channel, position 3 the best.
        assert!(code.reliabilities()[0] > code.reliabilities()[1]);
        assert!(code.reliabilities()[1] > code.reliabilities()[2]);
        assert!(code.reliabilities()[2] > code.reliabilities()[3]);
        assert_eq!(code.frozen_set(), &[0, 1]);
    }

    #[test]
    fn construct_tie_break_freezes_lower_index() {
        // A perfect channel polarizes to all-zero parameters: every position
        // ties and the frozen set must be the lowest indices.
        let channels = ChannelSpec::uniform(8, 0.0).unwrap();
        let code = construct(&channels, 3).unwrap();
        assert_eq!(code.frozen_set(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn construct_rejects_bad_m() {
        let channels = ChannelSpec::uniform(8, 0.1).unwrap();
        assert!(construct(&channels, 9).is_err());
        assert!(construct(&channels, 0).is_ok());
    }

    #[test]
    fn encode_zero_is_zero_and_full_rate_is_transform() {
        let channels = ChannelSpec::uniform(16, 0.1).unwrap();
        let code = construct(&channels, 8).unwrap();
        let c = encode(&code, &BitString::zeros(8), &BitString::zeros(8)).unwrap();
        assert_eq!(c, BitString::zeros(16));

        let full = construct(&channels, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let msg = BitString::random(&mut rng, 16);
        let c = encode(&full, &msg, &BitString::zeros(0)).unwrap();
        assert_eq!(c, polar_transform(&msg).unwrap());
    }

    #[test]
    fn encode_matches_dense_oracle_n8() {
        let channels = ChannelSpec::uniform(8, 0.11).unwrap();
        let code = construct(&channels, 4).unwrap();
        let msg = BitString::from_bits(vec![1, 0, 1, 1]).unwrap();
        let frozen = BitString::from_bits(vec![0, 1, 0, 0]).unwrap();
        let got = encode(&code, &msg, &frozen).unwrap();

        let mut u = BitString::zeros(8);
        let mut mi = 0;
        let mut fi = 0;
        for i in 0..8 {
            if code.frozen_set().contains(&i) {
                u.set(i, frozen.bit(fi));
                fi += 1;
            } else {
                u.set(i, msg.bit(mi));
                mi += 1;
            }
        }
        assert_eq!(got, dense_transform(&u));
    }

    fn noiseless_llrs(x: &BitString) -> Vec<f64> {
        x.as_bits()
            .iter()
            .map(|&b| if b == 0 { LLR_SAT } else { -LLR_SAT })
            .collect()
    }

    #[test]
    fn sc_decodes_noiseless_small() {
        let channels = ChannelSpec::uniform(64, 0.05).unwrap();
        let code = construct(&channels, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..25 {
            let msg = BitString::random(&mut rng, 32);
            let frozen = BitString::random(&mut rng, 32);
            let x = encode(&code, &msg, &frozen).unwrap();
            let (decoded, u_hat) = sc_decode(&code, &noiseless_llrs(&x), &frozen).unwrap();
            assert_eq!(decoded, msg);
            assert_eq!(polar_transform(&u_hat).unwrap(), x);
        }
    }

    #[test]
    fn single_llr_flip_on_full_rate_code_matches_dense_oracle() {
        // Full-rate n = 4: flipping the observation at position 3 decodes the
        // transform of x XOR e_3, i.e. the message shifts by row 3 of the
        // dense matrix (all ones).
        let channels = ChannelSpec::uniform(4, 0.05).unwrap();
        let code = construct(&channels, 4).unwrap();
        let msg = BitString::from_bits(vec![1, 0, 1, 0]).unwrap();
        let x = encode(&code, &msg, &BitString::zeros(0)).unwrap();
        let mut llr = noiseless_llrs(&x);
        llr[3] = -llr[3];
        let (decoded, _) = sc_decode(&code, &llr, &BitString::zeros(0)).unwrap();

        let mut flipped = x.clone();
        flipped.set(3, x.bit(3) ^ 1);
        let expected = dense_transform(&flipped);
        assert_eq!(decoded, expected);
        // Row 3 of the n = 4 matrix is all ones, so every message bit flips.
        assert_eq!(decoded, msg.complement());
    }

    #[test]
    fn syndrome_of_zero_frozen_codeword_is_zero() {
        let channels = ChannelSpec::uniform(32, 0.08).unwrap();
        let code = construct(&channels, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let msg = BitString::random(&mut rng, 12);
            let c = encode(&code, &msg, &BitString::zeros(20)).unwrap();
            assert_eq!(syndrome(&code, &c).unwrap(), BitString::zeros(20));
        }
    }

    #[test]
    fn syndrome_is_linear() {
        let channels = ChannelSpec::uniform(64, 0.08).unwrap();
        let code = construct(&channels, 24).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let a = BitString::random(&mut rng, 64);
            let b = BitString::random(&mut rng, 64);
            let lhs = syndrome(&code, &a.xor(&b).unwrap()).unwrap();
            let rhs = syndrome(&code, &a)
                .unwrap()
                .xor(&syndrome(&code, &b).unwrap())
                .unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn syndrome_matches_dense_oracle_n8() {
        let channels = ChannelSpec::uniform(8, 0.11).unwrap();
        let code = construct(&channels, 3).unwrap();
        let k = BitString::from_bits(vec![1, 1, 0, 1, 0, 0, 1, 0]).unwrap();
        let u = dense_transform(&k);
        let expected: Vec<u8> = code.frozen_set().iter().map(|&i| u.bit(i)).collect();
        assert_eq!(syndrome(&code, &k).unwrap().as_bits(), &expected[..]);
    }

    #[test]
    fn syndrome_decode_zero_errors_is_identity() {
        let channels = ChannelSpec::uniform(64, 0.05).unwrap();
        let code = construct(&channels, 20).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let k = BitString::random(&mut rng, 64);
            let r = syndrome(&code, &k).unwrap();
            let k_hat = syndrome_decode(&code, &k, &r, &channels).unwrap();
            assert_eq!(k_hat, k);
        }
    }

    #[test]
    fn syndrome_decode_always_lands_in_the_coset() {
        let channels = ChannelSpec::uniform(32, 0.2).unwrap();
        let code = construct(&channels, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let garbage = BitString::random(&mut rng, 32);
            let r = BitString::random(&mut rng, 24);
            let k_hat = syndrome_decode(&code, &garbage, &r, &channels).unwrap();
            assert_eq!(syndrome(&code, &k_hat).unwrap(), r);
        }
    }

    #[test]
    fn descriptor_round_trip_and_hash() {
        let p: Vec<f64> = (0..16).map(|i| 0.02 + 0.01 * i as f64).collect();
        let channels = ChannelSpec::new(p).unwrap();
        let code = construct(&channels, 6).unwrap();
        let desc = code.descriptor();
        let json = serde_json::to_string(&desc).unwrap();
        let back: CodeDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, desc);
        assert_eq!(back.content_hash(), code.content_hash());
        let rebuilt = PolarCode::from_descriptor(&back).unwrap();
        assert_eq!(rebuilt, code);

        let mut tampered = desc.clone();
        tampered.frozen_set[0] = 15;
        assert!(PolarCode::from_descriptor(&tampered).is_err());
    }

    #[test]
    fn bitstring_packing_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for len in [1usize, 7, 8, 9, 640, 1024] {
            let b = BitString::random(&mut rng, len);
            let packed = b.to_packed_bytes();
            assert_eq!(packed.len(), len.div_ceil(8));
            let back = BitString::from_packed_bytes(&packed, len).unwrap();
            assert_eq!(back, b);
        }
    }

    #[test]
    fn llr_saturation() {
        let channels = ChannelSpec::new(vec![0.0, 0.5, 0.05]).unwrap();
        assert_eq!(channels.llr_magnitude(0), LLR_SAT);
        assert_eq!(channels.llr_magnitude(1), 0.0);
        assert!((channels.llr_magnitude(2) - (0.95f64 / 0.05).ln()).abs() < 1e-12);
        assert!(ChannelSpec::new(vec![0.6]).is_err());
        assert!(ChannelSpec::new(vec![-0.1]).is_err());
    }
}
