//! Synthetic-corpus evaluation harness: computes spectral maps once per image,
//! then sweeps genuine and impostor comparisons through the analog, hard
//! threshold, and zero-leakage reconstruction routes.
//!
//! Pairing protocol: genuine comparisons are ordered (enrollment, probe)
//! pairs, which doubles symmetric modes' pair counts without biasing their
//! statistics and matches the asymmetric helper-data route. For E2/E3 the
//! superfinger built from the first `t` images is compared against the
//! remaining images. Impostor comparisons run either against every image of
//! every other finger or against one random image per impostor finger.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::minutiae::MinutiaSet;
use crate::pipeline::{
    average_maps, hard_threshold_components, stage1_enroll, transform_normalized, EnrollMethod,
    EnrollmentPolicy, ReliableSelection,
};
use crate::polar::BitString;
use crate::spectral::{similarity, SpectralGrid, SpectralKind, SpectralMap};
use crate::zlhds::{classify, components_of, rec1_boundaries, ChannelStats, QuantizerConfig};

use super::{AttemptCorpus, ScoreSample};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Normalized spectral maps for a whole corpus: `fingers[f][i]` holds the
/// kind-maps of image `i` of finger `f`.
#[derive(Debug, Clone)]
pub struct CorpusMaps {
    pub grid: SpectralGrid,
    pub kinds: Vec<SpectralKind>,
    pub fingers: Vec<Vec<Vec<SpectralMap>>>,
}

/// Transform and normalize every image of the corpus.
pub fn compute_corpus_maps(
    corpus: &[Vec<MinutiaSet>],
    grid: &SpectralGrid,
    kinds: &[SpectralKind],
) -> Result<CorpusMaps> {
    let one = |set: &MinutiaSet| transform_normalized(set, grid, kinds);
    #[cfg(feature = "parallel")]
    let fingers: Result<Vec<Vec<Vec<SpectralMap>>>> = corpus
        .par_iter()
        .map(|finger| finger.par_iter().map(one).collect())
        .collect();
    #[cfg(not(feature = "parallel"))]
    let fingers: Result<Vec<Vec<Vec<SpectralMap>>>> = corpus
        .iter()
        .map(|finger| finger.iter().map(one).collect())
        .collect();
    Ok(CorpusMaps {
        grid: grid.clone(),
        kinds: kinds.to_vec(),
        fingers: fingers?,
    })
}

/// How stage-1 strings are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinarizationMode {
    /// Zero-leakage quantizer with helper data.
    Zlhds,
    /// Sign of each component, no helper data.
    HardThreshold,
}

/// Impostor pairing policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpostorPolicy {
    /// Every image of every other finger.
    AllVsAll,
    /// One random image per impostor finger, drawn deterministically.
    OneRandomPerFinger { seed: u64 },
}

/// Hamming statistics of reconstruction attempts: `(distance, length)` per
/// comparison.
#[derive(Debug, Clone, Default)]
pub struct AttemptStats {
    pub genuine: Vec<(usize, usize)>,
    pub impostor: Vec<(usize, usize)>,
}

impl AttemptStats {
    /// Mean normalized Hamming distance per label.
    pub fn ber(&self) -> Result<(f64, f64)> {
        let mean = |v: &[(usize, usize)]| -> Result<f64> {
            if v.is_empty() {
                return Err(Error::Parameter("no attempts".into()));
            }
            Ok(v.iter().map(|&(d, n)| d as f64 / n as f64).sum::<f64>() / v.len() as f64)
        };
        Ok((mean(&self.genuine)?, mean(&self.impostor)?))
    }

    /// Normalized distances as labeled scores (lower is genuine).
    pub fn hamming_samples(&self) -> Vec<ScoreSample> {
        self.genuine
            .iter()
            .map(|&(d, n)| ScoreSample {
                genuine: true,
                value: d as f64 / n as f64,
            })
            .chain(self.impostor.iter().map(|&(d, n)| ScoreSample {
                genuine: false,
                value: d as f64 / n as f64,
            }))
            .collect()
    }
}

struct Enrollment {
    finger: usize,
    /// Probe images of the same finger.
    genuine_targets: Vec<usize>,
    /// Selected enrolled bits.
    k: BitString,
    /// Per-retained-component decision boundaries (helper-data route only).
    boundaries: Option<Vec<Vec<f64>>>,
}

struct ProbeCache {
    /// Canonical component values per image.
    values: Vec<Vec<Vec<f64>>>,
    /// Selected hard-threshold bits per image.
    hard: Vec<Vec<BitString>>,
}

fn build_probe_cache(maps: &CorpusMaps, selection: &ReliableSelection) -> Result<ProbeCache> {
    let mut values = Vec::with_capacity(maps.fingers.len());
    let mut hard = Vec::with_capacity(maps.fingers.len());
    for finger in &maps.fingers {
        let mut fv = Vec::with_capacity(finger.len());
        let mut fh = Vec::with_capacity(finger.len());
        for image in finger {
            let v = components_of(image)?;
            fh.push(selection.apply_bits(&hard_threshold_components(image)?)?);
            fv.push(v);
        }
        values.push(fv);
        hard.push(fh);
    }
    Ok(ProbeCache { values, hard })
}

fn build_enrollments(
    maps: &CorpusMaps,
    effective: &ChannelStats,
    config: &QuantizerConfig,
    policy: &EnrollmentPolicy,
    selection: &ReliableSelection,
    mode: BinarizationMode,
) -> Result<Vec<Enrollment>> {
    policy.validate()?;
    if maps.kinds != policy.kinds {
        return Err(Error::Shape("corpus maps do not match policy kinds".into()));
    }
    let mut out = Vec::new();
    for (f, finger) in maps.fingers.iter().enumerate() {
        match policy.method {
            EnrollMethod::E1 => {
                for i in 0..finger.len() {
                    let targets: Vec<usize> = (0..finger.len()).filter(|&j| j != i).collect();
                    out.push(make_enrollment(
                        f,
                        targets,
                        std::slice::from_ref(&finger[i]),
                        effective,
                        config,
                        policy,
                        selection,
                        mode,
                    )?);
                }
            }
            EnrollMethod::E2 | EnrollMethod::E3 => {
                if finger.len() <= policy.t {
                    return Err(Error::Parameter(format!(
                        "finger {f} has {} images; policy t = {} leaves no probes",
                        finger.len(),
                        policy.t
                    )));
                }
                let targets: Vec<usize> = (policy.t..finger.len()).collect();
                out.push(make_enrollment(
                    f,
                    targets,
                    &finger[..policy.t],
                    effective,
                    config,
                    policy,
                    selection,
                    mode,
                )?);
            }
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn make_enrollment(
    finger: usize,
    genuine_targets: Vec<usize>,
    images: &[Vec<SpectralMap>],
    effective: &ChannelStats,
    config: &QuantizerConfig,
    policy: &EnrollmentPolicy,
    selection: &ReliableSelection,
    mode: BinarizationMode,
) -> Result<Enrollment> {
    match mode {
        BinarizationMode::Zlhds => {
            let stage1 = stage1_enroll(images, policy, effective, config)?;
            let k = selection.apply_bits(&stage1.bit_symbols()?)?;
            let all_bounds = rec1_boundaries(&stage1.helper, effective, config)?;
            let boundaries = selection
                .retained
                .iter()
                .map(|&c| all_bounds[c].clone())
                .collect();
            Ok(Enrollment {
                finger,
                genuine_targets,
                k,
                boundaries: Some(boundaries),
            })
        }
        BinarizationMode::HardThreshold => {
            let bits = match policy.method {
                EnrollMethod::E1 => hard_threshold_components(&images[0])?,
                EnrollMethod::E2 => hard_threshold_components(&average_maps(images)?)?,
                EnrollMethod::E3 => {
                    let strings: Vec<Vec<u8>> = images
                        .iter()
                        .map(|m| hard_threshold_components(m))
                        .collect::<Result<_>>()?;
                    let t = strings.len();
                    (0..strings[0].len())
                        .map(|i| {
                            let ones: usize =
                                strings.iter().map(|s| usize::from(s[i])).sum();
                            u8::from(2 * ones > t)
                        })
                        .collect()
                }
            };
            Ok(Enrollment {
                finger,
                genuine_targets,
                k: selection.apply_bits(&bits)?,
                boundaries: None,
            })
        }
    }
}

fn reconstruct(
    enrollment: &Enrollment,
    probe_values: &[f64],
    probe_hard: &BitString,
    selection: &ReliableSelection,
) -> BitString {
    match &enrollment.boundaries {
        Some(bounds) => {
            let bits = selection
                .retained
                .iter()
                .zip(bounds)
                .map(|(&c, taus)| classify(probe_values[c], taus) as u8)
                .collect();
            BitString::from_bits(bits).expect("classify yields bits")
        }
        None => probe_hard.clone(),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_attempts<T: Send>(
    maps: &CorpusMaps,
    stats: &ChannelStats,
    config: &QuantizerConfig,
    policy: &EnrollmentPolicy,
    selection: &ReliableSelection,
    mode: BinarizationMode,
    impostors: ImpostorPolicy,
    collect: impl Fn(&BitString, &BitString) -> T + Send + Sync,
) -> Result<(Vec<T>, Vec<T>)> {
    let effective = policy.effective_stats(stats);
    let enrollments = build_enrollments(maps, &effective, config, policy, selection, mode)?;
    let probes = build_probe_cache(maps, selection)?;

    let per_enrollment = |(idx, e): (usize, &Enrollment)| -> (Vec<T>, Vec<T>) {
        let mut genuine = Vec::with_capacity(e.genuine_targets.len());
        for &j in &e.genuine_targets {
            let k_hat = reconstruct(e, &probes.values[e.finger][j], &probes.hard[e.finger][j], selection);
            genuine.push(collect(&e.k, &k_hat));
        }
        let mut impostor = Vec::new();
        let mut rng = match impostors {
            ImpostorPolicy::OneRandomPerFinger { seed } => Some(ChaCha8Rng::seed_from_u64(
                seed.wrapping_add(0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(idx as u64 + 1)),
            )),
            ImpostorPolicy::AllVsAll => None,
        };
        for (g, other) in maps.fingers.iter().enumerate() {
            if g == e.finger {
                continue;
            }
            let images: Vec<usize> = match &mut rng {
                Some(rng) => vec![rng.random_range(0..other.len())],
                None => (0..other.len()).collect(),
            };
            for j in images {
                let k_hat = reconstruct(e, &probes.values[g][j], &probes.hard[g][j], selection);
                impostor.push(collect(&e.k, &k_hat));
            }
        }
        (genuine, impostor)
    };

    #[cfg(feature = "parallel")]
    let parts: Vec<(Vec<T>, Vec<T>)> = enrollments
        .par_iter()
        .enumerate()
        .map(per_enrollment)
        .collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(Vec<T>, Vec<T>)> = enrollments
        .iter()
        .enumerate()
        .map(per_enrollment)
        .collect();

    let mut genuine = Vec::new();
    let mut impostor = Vec::new();
    for (g, i) in parts {
        genuine.extend(g);
        impostor.extend(i);
    }
    Ok((genuine, impostor))
}

/// Hamming statistics of stage-1 reconstructions across the corpus.
#[allow(clippy::too_many_arguments)]
pub fn stage1_attempt_stats(
    maps: &CorpusMaps,
    stats: &ChannelStats,
    config: &QuantizerConfig,
    policy: &EnrollmentPolicy,
    selection: &ReliableSelection,
    mode: BinarizationMode,
    impostors: ImpostorPolicy,
) -> Result<AttemptStats> {
    let (genuine, impostor) = run_attempts(
        maps,
        stats,
        config,
        policy,
        selection,
        mode,
        impostors,
        |k, k_hat| (k.hamming(k_hat).expect("equal lengths"), k.len()),
    )?;
    Ok(AttemptStats { genuine, impostor })
}

/// Full `(enrolled, reconstructed)` bit strings, as consumed by the
/// operating-point sweeps. Prefer [`ImpostorPolicy::OneRandomPerFinger`] on
/// large corpora; the strings are kept in memory.
#[allow(clippy::too_many_arguments)]
pub fn stage1_attempt_corpus(
    maps: &CorpusMaps,
    stats: &ChannelStats,
    config: &QuantizerConfig,
    policy: &EnrollmentPolicy,
    selection: &ReliableSelection,
    mode: BinarizationMode,
    impostors: ImpostorPolicy,
) -> Result<AttemptCorpus> {
    let (genuine, impostor) = run_attempts(
        maps,
        stats,
        config,
        policy,
        selection,
        mode,
        impostors,
        |k, k_hat| (k.clone(), k_hat.clone()),
    )?;
    Ok(AttemptCorpus { genuine, impostor })
}

/// One analog comparison: per-kind similarity scores.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogSample {
    pub genuine: bool,
    pub per_kind: Vec<f64>,
}

/// Analog-domain correlation scores across the corpus under the policy's
/// enrollment representation (single map for E1, superfinger average for
/// E2/E3).
pub fn analog_scores(
    maps: &CorpusMaps,
    policy: &EnrollmentPolicy,
    impostors: ImpostorPolicy,
) -> Result<Vec<AnalogSample>> {
    policy.validate()?;
    if maps.kinds != policy.kinds {
        return Err(Error::Shape("corpus maps do not match policy kinds".into()));
    }
    struct AnalogEnrollment {
        finger: usize,
        targets: Vec<usize>,
        maps: Vec<SpectralMap>,
    }
    let mut enrollments = Vec::new();
    for (f, finger) in maps.fingers.iter().enumerate() {
        match policy.method {
            EnrollMethod::E1 => {
                for i in 0..finger.len() {
                    enrollments.push(AnalogEnrollment {
                        finger: f,
                        targets: (0..finger.len()).filter(|&j| j != i).collect(),
                        maps: finger[i].clone(),
                    });
                }
            }
            EnrollMethod::E2 | EnrollMethod::E3 => {
                if finger.len() <= policy.t {
                    return Err(Error::Parameter(format!(
                        "finger {f} has {} images; policy t = {} leaves no probes",
                        finger.len(),
                        policy.t
                    )));
                }
                enrollments.push(AnalogEnrollment {
                    finger: f,
                    targets: (policy.t..finger.len()).collect(),
                    maps: average_maps(&finger[..policy.t])?,
                });
            }
        }
    }

    let score = |e: &AnalogEnrollment, probe: &[SpectralMap]| -> Result<Vec<f64>> {
        e.maps
            .iter()
            .zip(probe)
            .map(|(a, b)| similarity(a, b))
            .collect()
    };

    let mut out = Vec::new();
    for (idx, e) in enrollments.iter().enumerate() {
        for &j in &e.targets {
            out.push(AnalogSample {
                genuine: true,
                per_kind: score(e, &maps.fingers[e.finger][j])?,
            });
        }
        let mut rng = match impostors {
            ImpostorPolicy::OneRandomPerFinger { seed } => Some(ChaCha8Rng::seed_from_u64(
                seed.wrapping_add(0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(idx as u64 + 1)),
            )),
            ImpostorPolicy::AllVsAll => None,
        };
        for (g, other) in maps.fingers.iter().enumerate() {
            if g == e.finger {
                continue;
            }
            let images: Vec<usize> = match &mut rng {
                Some(rng) => vec![rng.random_range(0..other.len())],
                None => (0..other.len()).collect(),
            };
            for j in images {
                out.push(AnalogSample {
                    genuine: false,
                    per_kind: score(e, &other[j])?,
                });
            }
        }
    }
    Ok(out)
}

/// Project analog samples onto one kind (`Some(i)`) or onto the fused sum of
/// all kinds (`None`).
pub fn analog_roc_samples(samples: &[AnalogSample], kind_index: Option<usize>) -> Vec<ScoreSample> {
    samples
        .iter()
        .map(|s| ScoreSample {
            genuine: s.genuine,
            value: match kind_index {
                Some(i) => s.per_kind[i],
                None => s.per_kind.iter().sum(),
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minutiae::{generate_corpus, NoiseModel};
    use crate::pipeline::{estimate_corpus_stats, select_reliable};

    fn small_fixture() -> (CorpusMaps, ChannelStats, QuantizerConfig, ReliableSelection) {
        let grid = SpectralGrid {
            r_values: vec![20.0, 40.0, 60.0, 80.0],
            q_values: vec![1, 2, 3, 4],
            sigma: 3.2,
        };
        let noise = NoiseModel {
            jitter_sigma: 1.0,
            angle_sigma: 0.06,
            drop_prob: 0.03,
            insert_rate: 0.5,
            global_shift_max: 4.0,
            global_rot_max: 0.02,
            seed: 0,
        };
        let corpus = generate_corpus(5, 4, 30.0, 400.0, 400.0, &noise, 1.0, 77).unwrap();
        let kinds = vec![SpectralKind::XTheta];
        let stats = estimate_corpus_stats(&corpus, &grid, &kinds).unwrap();
        let maps = compute_corpus_maps(&corpus, &grid, &kinds).unwrap();
        let config = QuantizerConfig::equiprobable(2).unwrap();
        let selection = select_reliable(&stats, 24).unwrap();
        (maps, stats, config, selection)
    }

    #[test]
    fn e1_attempt_counts() {
        let (maps, stats, config, selection) = small_fixture();
        let policy = EnrollmentPolicy {
            method: EnrollMethod::E1,
            t: 1,
            kinds: vec![SpectralKind::XTheta],
        };
        let stats_out = stage1_attempt_stats(
            &maps,
            &stats,
            &config,
            &policy,
            &selection,
            BinarizationMode::Zlhds,
            ImpostorPolicy::AllVsAll,
        )
        .unwrap();
        // 5 fingers x 4 images, ordered genuine pairs: 5 * 4 * 3.
        assert_eq!(stats_out.genuine.len(), 60);
        // Each of the 20 enrollments vs 4 images of 4 other fingers.
        assert_eq!(stats_out.impostor.len(), 20 * 16);
        assert!(stats_out.genuine.iter().all(|&(_, n)| n == 24));
    }

    #[test]
    fn e2_attempt_counts_and_one_random_policy() {
        let (maps, stats, config, selection) = small_fixture();
        let policy = EnrollmentPolicy {
            method: EnrollMethod::E2,
            t: 3,
            kinds: vec![SpectralKind::XTheta],
        };
        let out = stage1_attempt_stats(
            &maps,
            &stats,
            &config,
            &policy,
            &selection,
            BinarizationMode::Zlhds,
            ImpostorPolicy::OneRandomPerFinger { seed: 5 },
        )
        .unwrap();
        // One enrollment per finger, one probe left per finger.
        assert_eq!(out.genuine.len(), 5);
        // Each enrollment vs one random image of each of 4 other fingers.
        assert_eq!(out.impostor.len(), 20);
    }

    #[test]
    fn genuine_attempts_beat_impostor_attempts() {
        let (maps, stats, config, selection) = small_fixture();
        let policy = EnrollmentPolicy {
            method: EnrollMethod::E1,
            t: 1,
            kinds: vec![SpectralKind::XTheta],
        };
        for mode in [BinarizationMode::Zlhds, BinarizationMode::HardThreshold] {
            let out = stage1_attempt_stats(
                &maps,
                &stats,
                &config,
                &policy,
                &selection,
                mode,
                ImpostorPolicy::AllVsAll,
            )
            .unwrap();
            let (gen_ber, imp_ber) = out.ber().unwrap();
            assert!(
                gen_ber < imp_ber,
                "{mode:?}: genuine {gen_ber} vs impostor {imp_ber}"
            );
        }
    }

    #[test]
    fn attempt_corpus_matches_stats() {
        let (maps, stats, config, selection) = small_fixture();
        let policy = EnrollmentPolicy {
            method: EnrollMethod::E1,
            t: 1,
            kinds: vec![SpectralKind::XTheta],
        };
        let s = stage1_attempt_stats(
            &maps,
            &stats,
            &config,
            &policy,
            &selection,
            BinarizationMode::Zlhds,
            ImpostorPolicy::AllVsAll,
        )
        .unwrap();
        let c = stage1_attempt_corpus(
            &maps,
            &stats,
            &config,
            &policy,
            &selection,
            BinarizationMode::Zlhds,
            ImpostorPolicy::AllVsAll,
        )
        .unwrap();
        assert_eq!(c.genuine.len(), s.genuine.len());
        for ((k, k_hat), &(d, n)) in c.genuine.iter().zip(&s.genuine) {
            assert_eq!(k.len(), n);
            assert_eq!(k.hamming(k_hat).unwrap(), d);
        }
    }

    #[test]
    fn analog_scores_separate_labels() {
        let (maps, _, _, _) = small_fixture();
        let policy = EnrollmentPolicy {
            method: EnrollMethod::E1,
            t: 1,
            kinds: vec![SpectralKind::XTheta],
        };
        let samples = analog_scores(&maps, &policy, ImpostorPolicy::AllVsAll).unwrap();
        let scores = analog_roc_samples(&samples, Some(0));
        let gmean: f64 = scores
            .iter()
            .filter(|s| s.genuine)
            .map(|s| s.value)
            .sum::<f64>()
            / scores.iter().filter(|s| s.genuine).count() as f64;
        let imean: f64 = scores
            .iter()
            .filter(|s| !s.genuine)
            .map(|s| s.value)
            .sum::<f64>()
            / scores.iter().filter(|s| !s.genuine).count() as f64;
        assert!(gmean > imean, "genuine {gmean} vs impostor {imean}");
    }
}
