//! End-to-end enrollment and verification: spectral transform, normalization,
//! stage-1 quantization, reliable-component selection, and the stage-2 sketch.
//!
//! Three enrollment policies are supported: a single image (E1), the
//! `superfinger' average of `t` normalized maps (E2), and bitwise majority
//! voting over `t` per-image strings with E2-style helper data (E3).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::com::{self, HelperRecord, PolicyEcho, Rep2Outcome, SaltSource};
use crate::error::{Error, Result};
use crate::minutiae::MinutiaSet;
use crate::polar::{BitString, ChannelSpec, PolarCode};
use crate::spectral::{
    normalize, spectral_xbeta, spectral_xtheta, SpectralGrid, SpectralKind, SpectralMap,
};
use crate::zlhds::{
    ber_integral, components_of, estimate_stats, gen1_map, rec1_map, ChannelStats,
    QuantizerConfig, StageOneOutput,
};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Enrollment method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnrollMethod {
    E1,
    E2,
    E3,
}

impl std::fmt::Display for EnrollMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EnrollMethod::E1 => write!(f, "e1"),
            EnrollMethod::E2 => write!(f, "e2"),
            EnrollMethod::E3 => write!(f, "e3"),
        }
    }
}

impl std::str::FromStr for EnrollMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "e1" => Ok(EnrollMethod::E1),
            "e2" => Ok(EnrollMethod::E2),
            "e3" => Ok(EnrollMethod::E3),
            other => Err(Error::Parameter(format!("unknown enroll method {other:?}"))),
        }
    }
}

/// Enrollment policy: method, number of enrollment images, and which spectral
/// functions feed the bit string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrollmentPolicy {
    pub method: EnrollMethod,
    pub t: usize,
    pub kinds: Vec<SpectralKind>,
}

impl EnrollmentPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::Parameter("t must be >= 1".into()));
        }
        match self.method {
            EnrollMethod::E1 if self.t != 1 => {
                Err(Error::Parameter(format!("E1 requires t = 1, got {}", self.t)))
            }
            EnrollMethod::E3 if self.t.is_multiple_of(2) => Err(Error::Parameter(format!(
                "E3 majority voting requires odd t, got {}",
                self.t
            ))),
            _ => {
                if self.kinds.is_empty() {
                    return Err(Error::Parameter("policy needs at least one kind".into()));
                }
                for (i, k) in self.kinds.iter().enumerate() {
                    if self.kinds[..i].contains(k) {
                        return Err(Error::Parameter(format!("duplicate kind {k}")));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn echo(&self) -> PolicyEcho {
        PolicyEcho {
            method: self.method.to_string(),
            t: self.t,
        }
    }

    /// Statistics seen by this policy's quantizer and reconstructor.
    pub fn effective_stats(&self, stats: &ChannelStats) -> ChannelStats {
        match self.method {
            EnrollMethod::E1 => stats.clone(),
            EnrollMethod::E2 | EnrollMethod::E3 => stats.superfinger(self.t),
        }
    }
}

/// Globally selected component subset, ranked by noise-to-signal ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliableSelection {
    /// Retained component indices, ascending.
    pub retained: Vec<usize>,
    pub target: usize,
}

impl ReliableSelection {
    /// Keep every component.
    pub fn all(count: usize) -> Self {
        Self {
            retained: (0..count).collect(),
            target: count,
        }
    }

    pub fn apply_bits(&self, bits: &[u8]) -> Result<BitString> {
        if self.retained.iter().any(|&i| i >= bits.len()) {
            return Err(Error::Shape("selection index out of range".into()));
        }
        BitString::from_bits(self.retained.iter().map(|&i| bits[i]).collect())
    }
}

/// Rank components ascending by `sigma_v / sigma_x` (dead components last,
/// ties by lower index) and retain the first `count`.
///
/// The ranking is a global property of the channel statistics; it never sees
/// an individual's data.
pub fn select_reliable(stats: &ChannelStats, count: usize) -> Result<ReliableSelection> {
    if count == 0 || count > stats.len() {
        return Err(Error::Parameter(format!(
            "retain count must be in [1, {}], got {count}",
            stats.len()
        )));
    }
    let mut order: Vec<usize> = (0..stats.len()).collect();
    order.sort_by(|&a, &b| {
        stats.components[a]
            .noise_ratio()
            .partial_cmp(&stats.components[b].noise_ratio())
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut retained: Vec<usize> = order[..count].to_vec();
    retained.sort_unstable();
    Ok(ReliableSelection {
        retained,
        target: count,
    })
}

/// Transform one image into normalized maps for the given kinds.
pub fn transform_normalized(
    set: &MinutiaSet,
    grid: &SpectralGrid,
    kinds: &[SpectralKind],
) -> Result<Vec<SpectralMap>> {
    kinds
        .iter()
        .map(|kind| {
            let map = match kind {
                SpectralKind::XTheta => spectral_xtheta(set, grid)?,
                SpectralKind::XBeta => spectral_xbeta(set, grid)?,
            };
            normalize(&map)
        })
        .collect()
}

/// Estimate channel statistics for all kinds from a corpus grouped by finger.
pub fn estimate_corpus_stats(
    corpus: &[Vec<MinutiaSet>],
    grid: &SpectralGrid,
    kinds: &[SpectralKind],
) -> Result<ChannelStats> {
    let parts = kinds
        .iter()
        .map(|&kind| {
            let maps_by_finger = map_corpus_kind(corpus, grid, kind)?;
            estimate_stats(&maps_by_finger)
        })
        .collect::<Result<Vec<_>>>()?;
    ChannelStats::concat(parts)
}

fn map_corpus_kind(
    corpus: &[Vec<MinutiaSet>],
    grid: &SpectralGrid,
    kind: SpectralKind,
) -> Result<Vec<Vec<SpectralMap>>> {
    let one = |set: &MinutiaSet| -> Result<SpectralMap> {
        let map = match kind {
            SpectralKind::XTheta => spectral_xtheta(set, grid)?,
            SpectralKind::XBeta => spectral_xbeta(set, grid)?,
        };
        normalize(&map)
    };
    #[cfg(feature = "parallel")]
    {
        corpus
            .par_iter()
            .map(|finger| finger.par_iter().map(one).collect())
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        corpus
            .iter()
            .map(|finger| finger.iter().map(one).collect())
            .collect()
    }
}

/// Pointwise average of per-image normalized maps, renormalized.
/// With a single image the maps pass through untouched.
pub fn average_maps(per_image_maps: &[Vec<SpectralMap>]) -> Result<Vec<SpectralMap>> {
    if per_image_maps.is_empty() {
        return Err(Error::Parameter("no images to average".into()));
    }
    if per_image_maps.len() == 1 {
        return Ok(per_image_maps[0].clone());
    }
    let n_kinds = per_image_maps[0].len();
    let mut out = Vec::with_capacity(n_kinds);
    for k in 0..n_kinds {
        let first = &per_image_maps[0][k];
        let mut acc = vec![Complex64::new(0.0, 0.0); first.values.len()];
        for image in per_image_maps {
            let map = &image[k];
            if map.kind != first.kind || map.grid != first.grid {
                return Err(Error::Shape("images disagree on kinds or grids".into()));
            }
            for (a, v) in acc.iter_mut().zip(&map.values) {
                *a += v;
            }
        }
        let scale = 1.0 / per_image_maps.len() as f64;
        for a in &mut acc {
            *a *= scale;
        }
        out.push(normalize(&SpectralMap {
            grid: first.grid.clone(),
            kind: first.kind,
            values: acc,
        })?);
    }
    Ok(out)
}

fn majority_bits(strings: &[Vec<u8>]) -> Result<Vec<u8>> {
    let t = strings.len();
    let len = strings[0].len();
    if strings.iter().any(|s| s.len() != len) {
        return Err(Error::Shape("majority over unequal lengths".into()));
    }
    Ok((0..len)
        .map(|i| {
            let ones: usize = strings.iter().map(|s| usize::from(s[i])).sum();
            u8::from(2 * ones > t)
        })
        .collect())
}

/// Stage-1 enrollment from precomputed normalized per-image maps.
///
/// E1 quantizes the single image; E2 quantizes the renormalized average; E3
/// majority-votes per-image symbol strings and takes helper data from the
/// E2-style average, so reconstruction boundaries follow the superfinger.
pub fn stage1_enroll(
    per_image_maps: &[Vec<SpectralMap>],
    policy: &EnrollmentPolicy,
    effective: &ChannelStats,
    config: &QuantizerConfig,
) -> Result<StageOneOutput> {
    policy.validate()?;
    if per_image_maps.len() != policy.t {
        return Err(Error::Parameter(format!(
            "policy wants t = {}, got {} images",
            policy.t,
            per_image_maps.len()
        )));
    }
    match policy.method {
        EnrollMethod::E1 => gen1_map(&per_image_maps[0], effective, config),
        EnrollMethod::E2 => {
            let avg = average_maps(per_image_maps)?;
            gen1_map(&avg, effective, config)
        }
        EnrollMethod::E3 => {
            let strings = per_image_maps
                .iter()
                .map(|maps| Ok(gen1_map(maps, effective, config)?.symbols))
                .collect::<Result<Vec<_>>>()?;
            let symbols = majority_bits(&strings)?;
            let avg = average_maps(per_image_maps)?;
            let helper = gen1_map(&avg, effective, config)?.helper;
            Ok(StageOneOutput { symbols, helper })
        }
    }
}

/// Hard-threshold binarization without helper data: bit = 1 iff the component
/// value is positive.
pub fn hard_threshold_components(maps: &[SpectralMap]) -> Result<Vec<u8>> {
    Ok(components_of(maps)?
        .iter()
        .map(|&v| u8::from(v > 0.0))
        .collect())
}

/// Predicted per-component bit error probabilities for the retained
/// components, used to tune the code to the individual grid points.
pub fn design_channels(
    effective: &ChannelStats,
    selection: &ReliableSelection,
    config: &QuantizerConfig,
) -> Result<ChannelSpec> {
    if config.n_intervals() != 2 {
        return Err(Error::Parameter(
            "channel design requires the binary quantizer".into(),
        ));
    }
    let p = selection
        .retained
        .iter()
        .map(|&i| {
            let c = effective
                .components
                .get(i)
                .ok_or_else(|| Error::Shape("selection index out of range".into()))?;
            if c.dead {
                return Err(Error::DegenerateInput(format!("component {i} is dead")));
            }
            Ok(ber_integral(c.lambda, c.sigma_x, c.sigma_v).min(0.5))
        })
        .collect::<Result<Vec<f64>>>()?;
    ChannelSpec::new(p)
}

/// Enroll a finger from `t` images of it.
#[allow(clippy::too_many_arguments)]
pub fn enroll(
    images: &[MinutiaSet],
    policy: &EnrollmentPolicy,
    grid: &SpectralGrid,
    stats: &ChannelStats,
    config: &QuantizerConfig,
    selection: &ReliableSelection,
    code: &PolarCode,
    salts: &mut SaltSource,
) -> Result<HelperRecord> {
    policy.validate()?;
    if images.len() != policy.t {
        return Err(Error::Parameter(format!(
            "policy wants t = {} images, got {}",
            policy.t,
            images.len()
        )));
    }
    if images.windows(2).any(|w| w[0].finger_id != w[1].finger_id) {
        return Err(Error::Parameter(
            "all enrollment images must come from one finger".into(),
        ));
    }
    if config.n_intervals() != 2 {
        return Err(Error::Parameter("stage 2 requires N = 2".into()));
    }
    if code.n() != selection.retained.len() {
        return Err(Error::Parameter(format!(
            "code length {} must equal retained component count {}",
            code.n(),
            selection.retained.len()
        )));
    }

    let per_image_maps = images
        .iter()
        .map(|img| transform_normalized(img, grid, &policy.kinds))
        .collect::<Result<Vec<_>>>()?;
    let effective = policy.effective_stats(stats);
    let stage1 = stage1_enroll(&per_image_maps, policy, &effective, config)?;
    let k = selection.apply_bits(&stage1.bit_symbols()?)?;
    let sketch = com::gen2(&k, code, salts)?;

    Ok(HelperRecord {
        helper: stage1.helper,
        reliable_mask: selection.retained.clone(),
        sketch,
        n_intervals: config.n_intervals(),
        grid_hash: grid.content_hash(),
        kinds: policy.kinds.clone(),
        policy: policy.echo(),
    })
}

/// Verify one image against a stored record. Configuration mismatches (grid,
/// code) surface as errors, not rejects.
pub fn verify(
    image: &MinutiaSet,
    record: &HelperRecord,
    grid: &SpectralGrid,
    stats: &ChannelStats,
    config: &QuantizerConfig,
    code: &PolarCode,
    channels: &ChannelSpec,
) -> Result<bool> {
    if record.grid_hash != grid.content_hash() {
        return Err(Error::Configuration(
            "record was enrolled under a different grid".into(),
        ));
    }
    if record.n_intervals != config.n_intervals() {
        return Err(Error::Configuration(format!(
            "record uses N = {}, config has N = {}",
            record.n_intervals,
            config.n_intervals()
        )));
    }
    let method: EnrollMethod = record.policy.method.parse()?;
    let policy = EnrollmentPolicy {
        method,
        t: record.policy.t,
        kinds: record.kinds.clone(),
    };
    policy.validate()?;

    let maps = transform_normalized(image, grid, &record.kinds)?;
    let effective = policy.effective_stats(stats);
    let symbols = rec1_map(&maps, &record.helper, &effective, config)?;
    let selection = ReliableSelection {
        retained: record.reliable_mask.clone(),
        target: record.reliable_mask.len(),
    };
    let k_prime = selection.apply_bits(&symbols)?;
    Ok(com::rep2(&k_prime, &record.sketch, code, channels)?.accepted())
}

/// Convenience wrapper returning the recovered string as well.
pub fn verify_with_recovery(
    image: &MinutiaSet,
    record: &HelperRecord,
    grid: &SpectralGrid,
    stats: &ChannelStats,
    config: &QuantizerConfig,
    code: &PolarCode,
    channels: &ChannelSpec,
) -> Result<Rep2Outcome> {
    if record.grid_hash != grid.content_hash() {
        return Err(Error::Configuration(
            "record was enrolled under a different grid".into(),
        ));
    }
    let method: EnrollMethod = record.policy.method.parse()?;
    let policy = EnrollmentPolicy {
        method,
        t: record.policy.t,
        kinds: record.kinds.clone(),
    };
    let maps = transform_normalized(image, grid, &record.kinds)?;
    let effective = policy.effective_stats(stats);
    let symbols = rec1_map(&maps, &record.helper, &effective, config)?;
    let selection = ReliableSelection {
        retained: record.reliable_mask.clone(),
        target: record.reliable_mask.len(),
    };
    let k_prime = selection.apply_bits(&symbols)?;
    com::rep2(&k_prime, &record.sketch, code, channels)
}
