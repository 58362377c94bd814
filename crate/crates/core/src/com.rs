//! Stage-2 helper data: the code-offset secure sketch, salted hashing, and a
//! random-codebook baseline.
//!
//! `gen2` stores the syndrome of the stage-1 bit string under a polar code
//! together with a salted hash of the string; `rep2` recovers the nearest
//! coset member from a noisy string and accepts only on a hash match. The
//! stored record never reveals the string itself.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::polar::{self, BitString, ChannelSpec, PolarCode};
use crate::spectral::SpectralKind;

/// Salt length in bytes (128 bits).
pub const SALT_LEN: usize = 16;

/// Source of fresh 128-bit salts. Deterministic when seeded; per-process
/// uniqueness comes from the generator's state.
#[derive(Debug, Clone)]
pub struct SaltSource {
    rng: ChaCha8Rng,
}

impl SaltSource {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn from_entropy() -> Self {
        Self {
            rng: ChaCha8Rng::from_os_rng(),
        }
    }

    pub fn next_salt(&mut self) -> [u8; SALT_LEN] {
        let mut salt = [0u8; SALT_LEN];
        self.rng.fill(&mut salt);
        salt
    }

    /// Uniform indices in `[0, bound)`, used by the random-codebook baseline.
    pub fn next_indices(&mut self, count: usize, bound: usize) -> Vec<usize> {
        (0..count).map(|_| self.rng.random_range(0..bound)).collect()
    }
}

/// 256-bit digest binding a bit string to a salt: `SHA-256(packed bits || salt)`.
pub fn digest_key(k: &BitString, salt: &[u8; SALT_LEN]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(k.to_packed_bytes());
    hasher.update(salt);
    hasher.finalize().into()
}

/// Stage-2 helper data for one enrollment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sketch {
    pub syndrome: BitString,
    pub salt: [u8; SALT_LEN],
    pub digest: [u8; 32],
    /// Content hash of the code descriptor this sketch was issued under.
    pub code_hash: String,
}

/// Compute the sketch: syndrome, fresh salt, and salted digest of `k`.
pub fn gen2(k: &BitString, code: &PolarCode, salts: &mut SaltSource) -> Result<Sketch> {
    let syndrome = polar::syndrome(code, k)?;
    let salt = salts.next_salt();
    let digest = digest_key(k, &salt);
    Ok(Sketch {
        syndrome,
        salt,
        digest,
        code_hash: code.content_hash(),
    })
}

/// Result of a reproduction attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rep2Outcome {
    /// Hash matched; carries the recovered string.
    Accept(BitString),
    Reject,
}

impl Rep2Outcome {
    pub fn accepted(&self) -> bool {
        matches!(self, Rep2Outcome::Accept(_))
    }
}

/// Reproduce from a noisy string: decode within the stored coset and compare
/// the salted hash. A code-hash mismatch is a configuration error, not a
/// reject.
pub fn rep2(
    k_prime: &BitString,
    sketch: &Sketch,
    code: &PolarCode,
    channels: &ChannelSpec,
) -> Result<Rep2Outcome> {
    if sketch.code_hash != code.content_hash() {
        return Err(Error::Configuration(format!(
            "sketch was issued under code {} but decode uses {}",
            sketch.code_hash,
            code.content_hash()
        )));
    }
    let k_hat = polar::syndrome_decode(code, k_prime, &sketch.syndrome, channels)?;
    if digest_key(&k_hat, &sketch.salt) == sketch.digest {
        Ok(Rep2Outcome::Accept(k_hat))
    } else {
        Ok(Rep2Outcome::Reject)
    }
}

/// Syndrome decoder in the error-pattern form: the most likely error pattern
/// with syndrome `s` under the per-position crossover priors.
pub fn syndec_error_pattern(
    code: &PolarCode,
    s: &BitString,
    channels: &ChannelSpec,
) -> Result<BitString> {
    if channels.len() != code.n() {
        return Err(Error::Shape(format!(
            "channel count {} vs n = {}",
            channels.len(),
            code.n()
        )));
    }
    let llr: Vec<f64> = (0..code.n()).map(|i| channels.llr_magnitude(i)).collect();
    let (_, u_hat) = polar::sc_decode(code, &llr, s)?;
    polar::polar_transform(&u_hat)
}

/// The xor-form reconstruction `k_hat = k' ^ SynDec(r ^ Syn k')`.
/// For a linear code this is the same coset decode as [`rep2`] performs
/// directly; tests assert the equivalence.
pub fn reconstruct_xor_form(
    k_prime: &BitString,
    r: &BitString,
    code: &PolarCode,
    channels: &ChannelSpec,
) -> Result<BitString> {
    let shifted = r.xor(&polar::syndrome(code, k_prime)?)?;
    let error_pattern = syndec_error_pattern(code, &shifted, channels)?;
    k_prime.xor(&error_pattern)
}

// --- full helper record -------------------------------------------------------------

/// Enrollment policy echo carried inside a record so verification can rebuild
/// the same reconstruction boundaries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyEcho {
    pub method: String,
    pub t: usize,
}

/// Everything stored for one enrollment: stage-1 helper values for all
/// components, the retained-component mask, the stage-2 sketch, and the
/// configuration echo that pins grid, quantizer, kinds, and policy.
#[derive(Debug, Clone, PartialEq)]
pub struct HelperRecord {
    /// One helper value in `[0, 1)` per component, in canonical order.
    pub helper: Vec<f64>,
    /// Sorted indices of the retained components; its length equals the code's
    /// block length.
    pub reliable_mask: Vec<usize>,
    pub sketch: Sketch,
    pub n_intervals: usize,
    pub grid_hash: String,
    pub kinds: Vec<SpectralKind>,
    pub policy: PolicyEcho,
}

/// On-disk JSON form: float and byte payloads as base64 blobs.
#[derive(Serialize, Deserialize)]
struct HelperRecordFile {
    version: u32,
    kinds: Vec<SpectralKind>,
    grid_hash: String,
    n_intervals: usize,
    policy_method: String,
    policy_t: usize,
    n_components: usize,
    /// Helper values as little-endian float64 bytes, base64.
    helper_b64: String,
    reliable_mask: Vec<usize>,
    syndrome_bits: usize,
    /// Packed syndrome bits, base64.
    syndrome_b64: String,
    salt_b64: String,
    digest_b64: String,
    code_hash: String,
}

const RECORD_VERSION: u32 = 1;

impl HelperRecord {
    pub fn to_json(&self) -> Result<String> {
        let mut helper_bytes = Vec::with_capacity(8 * self.helper.len());
        for w in &self.helper {
            helper_bytes.extend_from_slice(&w.to_le_bytes());
        }
        let file = HelperRecordFile {
            version: RECORD_VERSION,
            kinds: self.kinds.clone(),
            grid_hash: self.grid_hash.clone(),
            n_intervals: self.n_intervals,
            policy_method: self.policy.method.clone(),
            policy_t: self.policy.t,
            n_components: self.helper.len(),
            helper_b64: BASE64.encode(&helper_bytes),
            reliable_mask: self.reliable_mask.clone(),
            syndrome_bits: self.sketch.syndrome.len(),
            syndrome_b64: BASE64.encode(self.sketch.syndrome.to_packed_bytes()),
            salt_b64: BASE64.encode(self.sketch.salt),
            digest_b64: BASE64.encode(self.sketch.digest),
            code_hash: self.sketch.code_hash.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: HelperRecordFile = serde_json::from_str(text)?;
        if file.version != RECORD_VERSION {
            return Err(Error::Configuration(format!(
                "unsupported record version {}",
                file.version
            )));
        }
        let decode = |field: &str, s: &str| -> Result<Vec<u8>> {
            BASE64
                .decode(s)
                .map_err(|e| Error::Serialization(format!("bad base64 in {field}: {e}")))
        };
        let helper_bytes = decode("helper_b64", &file.helper_b64)?;
        if helper_bytes.len() != 8 * file.n_components {
            return Err(Error::Shape(format!(
                "helper blob holds {} bytes for {} components",
                helper_bytes.len(),
                file.n_components
            )));
        }
        let helper: Vec<f64> = helper_bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let syndrome = BitString::from_packed_bytes(
            &decode("syndrome_b64", &file.syndrome_b64)?,
            file.syndrome_bits,
        )?;
        let salt: [u8; SALT_LEN] = decode("salt_b64", &file.salt_b64)?
            .try_into()
            .map_err(|_| Error::Serialization("salt must be 16 bytes".into()))?;
        let digest: [u8; 32] = decode("digest_b64", &file.digest_b64)?
            .try_into()
            .map_err(|_| Error::Serialization("digest must be 32 bytes".into()))?;
        if !file.reliable_mask.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Parameter(
                "reliable_mask must be strictly increasing".into(),
            ));
        }
        Ok(HelperRecord {
            helper,
            reliable_mask: file.reliable_mask,
            sketch: Sketch {
                syndrome,
                salt,
                digest,
                code_hash: file.code_hash,
            },
            n_intervals: file.n_intervals,
            grid_hash: file.grid_hash,
            kinds: file.kinds,
            policy: PolicyEcho {
                method: file.policy_method,
                t: file.policy_t,
            },
        })
    }
}

// --- random codebook baseline ----------------------------------------------------------

/// Number of groups the 1024 reliable bits are split into.
pub const CODEBOOK_GROUPS: usize = 4;
/// Bits per group.
pub const CODEBOOK_GROUP_BITS: usize = 256;
/// Total input length of the codebook scheme.
pub const CODEBOOK_INPUT_BITS: usize = CODEBOOK_GROUPS * CODEBOOK_GROUP_BITS;
/// Largest supported per-group message length (table memory bound).
pub const CODEBOOK_MAX_ELL: usize = 16;

/// Four tables of `2^ell` random 256-bit codewords.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomCodebook {
    groups: Vec<Vec<BitString>>,
    ell: usize,
}

impl RandomCodebook {
    pub fn generate(ell: usize, seed: u64) -> Result<Self> {
        if ell == 0 || ell > CODEBOOK_MAX_ELL {
            return Err(Error::Parameter(format!(
                "ell must be in [1, {CODEBOOK_MAX_ELL}], got {ell}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let groups = (0..CODEBOOK_GROUPS)
            .map(|_| {
                (0..1usize << ell)
                    .map(|_| BitString::random(&mut rng, CODEBOOK_GROUP_BITS))
                    .collect()
            })
            .collect();
        Ok(Self { groups, ell })
    }

    /// Build from explicit codewords (used for degenerate baselines in tests).
    pub fn from_codewords(groups: Vec<Vec<BitString>>) -> Result<Self> {
        if groups.len() != CODEBOOK_GROUPS {
            return Err(Error::Shape(format!(
                "expected {CODEBOOK_GROUPS} groups, got {}",
                groups.len()
            )));
        }
        let size = groups[0].len();
        if !size.is_power_of_two() || !(2..=1 << CODEBOOK_MAX_ELL).contains(&size) {
            return Err(Error::Shape(format!("bad codebook size {size}")));
        }
        for g in &groups {
            if g.len() != size || g.iter().any(|c| c.len() != CODEBOOK_GROUP_BITS) {
                return Err(Error::Shape("ragged codebook".into()));
            }
        }
        Ok(Self {
            ell: size.trailing_zeros() as usize,
            groups,
        })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }
}

/// Codebook offsets plus the salted digest of the chosen message indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookRecord {
    pub offsets: Vec<BitString>,
    pub salt: [u8; SALT_LEN],
    pub digest: [u8; 32],
}

fn message_bits(indices: &[usize], ell: usize) -> BitString {
    let bits = indices
        .iter()
        .flat_map(|&c| (0..ell).map(move |b| ((c >> b) & 1) as u8))
        .collect();
    BitString::from_bits(bits).expect("message bits are 0/1")
}

fn group_slice(k: &BitString, g: usize) -> BitString {
    let bits = (g * CODEBOOK_GROUP_BITS..(g + 1) * CODEBOOK_GROUP_BITS)
        .map(|i| k.bit(i))
        .collect();
    BitString::from_bits(bits).expect("bits are 0/1")
}

/// Per group: pick a random message index and store `k_g ^ codeword(c_g)`.
pub fn codebook_gen2(
    k: &BitString,
    book: &RandomCodebook,
    salts: &mut SaltSource,
) -> Result<CodebookRecord> {
    if k.len() != CODEBOOK_INPUT_BITS {
        return Err(Error::Shape(format!(
            "codebook input must be {CODEBOOK_INPUT_BITS} bits, got {}",
            k.len()
        )));
    }
    let indices = salts.next_indices(CODEBOOK_GROUPS, 1 << book.ell);
    let offsets = (0..CODEBOOK_GROUPS)
        .map(|g| group_slice(k, g).xor(&book.groups[g][indices[g]]))
        .collect::<Result<Vec<_>>>()?;
    let salt = salts.next_salt();
    let digest = digest_key(&message_bits(&indices, book.ell), &salt);
    Ok(CodebookRecord {
        offsets,
        salt,
        digest,
    })
}

/// Decode each group by minimum Hamming distance (ties to the lowest index)
/// and accept only if every recovered message bit hash-matches.
pub fn codebook_rep2(
    k_prime: &BitString,
    record: &CodebookRecord,
    book: &RandomCodebook,
) -> Result<(bool, Vec<usize>)> {
    if k_prime.len() != CODEBOOK_INPUT_BITS {
        return Err(Error::Shape(format!(
            "codebook input must be {CODEBOOK_INPUT_BITS} bits, got {}",
            k_prime.len()
        )));
    }
    if record.offsets.len() != CODEBOOK_GROUPS {
        return Err(Error::Shape("record must carry one offset per group".into()));
    }
    let mut indices = Vec::with_capacity(CODEBOOK_GROUPS);
    for g in 0..CODEBOOK_GROUPS {
        let target = record.offsets[g].xor(&group_slice(k_prime, g))?;
        let mut best = (usize::MAX, 0usize);
        for (j, codeword) in book.groups[g].iter().enumerate() {
            let d = target.hamming(codeword)?;
            if d < best.0 {
                best = (d, j);
            }
        }
        indices.push(best.1);
    }
    let accept = digest_key(&message_bits(&indices, book.ell), &record.salt) == record.digest;
    Ok((accept, indices))
}
