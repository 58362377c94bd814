//! Metrics and sweeps: bit error rates, FAR/FRR threshold sweeps, ROC curves
//! with equal error rates, and per-code operating points.

pub mod harness;

use serde::{Deserialize, Serialize};

use crate::com::{self, RandomCodebook, SaltSource};
use crate::error::{Error, Result};
use crate::polar::{BitString, ChannelSpec, PolarCode};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Whether larger values indicate genuine attempts (similarity scores) or
/// smaller ones do (Hamming distances).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherIsGenuine,
    LowerIsGenuine,
}

/// One labeled score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreSample {
    pub genuine: bool,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

/// FAR/FRR sweep over all distinct sample values, ordered from the loosest
/// threshold to the tightest, plus the equal error rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub eer: f64,
    pub direction: Direction,
}

fn count_below(sorted: &[f64], x: f64) -> usize {
    sorted.partition_point(|&v| v < x)
}

fn count_at_or_below(sorted: &[f64], x: f64) -> usize {
    sorted.partition_point(|&v| v <= x)
}

/// Sweep every distinct value as a decision threshold. The equal error rate
/// interpolates linearly between the two thresholds where `FAR - FRR` changes
/// sign.
pub fn roc(samples: &[ScoreSample], direction: Direction) -> Result<RocCurve> {
    let mut genuine: Vec<f64> = Vec::new();
    let mut impostor: Vec<f64> = Vec::new();
    for s in samples {
        if !s.value.is_finite() {
            return Err(Error::Parameter(format!("non-finite score {}", s.value)));
        }
        if s.genuine {
            genuine.push(s.value);
        } else {
            impostor.push(s.value);
        }
    }
    if genuine.is_empty() || impostor.is_empty() {
        return Err(Error::Parameter(
            "roc needs at least one sample of each label".into(),
        ));
    }
    genuine.sort_by(|a, b| a.partial_cmp(b).unwrap());
    impostor.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut thresholds: Vec<f64> = samples.iter().map(|s| s.value).collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();
    // Loosest first; append a sentinel that accepts nothing.
    match direction {
        Direction::HigherIsGenuine => thresholds.push(*thresholds.last().unwrap() + 1.0),
        Direction::LowerIsGenuine => {
            thresholds.reverse();
            thresholds.push(thresholds.last().unwrap() - 1.0);
        }
    }

    let (ng, ni) = (genuine.len() as f64, impostor.len() as f64);
    let points: Vec<RocPoint> = thresholds
        .iter()
        .map(|&threshold| {
            let (far, frr) = match direction {
                // Accept iff value >= threshold.
                Direction::HigherIsGenuine => (
                    (impostor.len() - count_below(&impostor, threshold)) as f64 / ni,
                    count_below(&genuine, threshold) as f64 / ng,
                ),
                // Accept iff value <= threshold.
                Direction::LowerIsGenuine => (
                    count_at_or_below(&impostor, threshold) as f64 / ni,
                    (genuine.len() - count_at_or_below(&genuine, threshold)) as f64 / ng,
                ),
            };
            RocPoint {
                threshold,
                far,
                frr,
            }
        })
        .collect();

    debug_assert!(points
        .windows(2)
        .all(|w| w[1].far <= w[0].far && w[1].frr >= w[0].frr));

    let eer = interpolate_eer(&points)?;
    Ok(RocCurve {
        points,
        eer,
        direction,
    })
}

fn interpolate_eer(points: &[RocPoint]) -> Result<f64> {
    for pair in points.windows(2) {
        let d0 = pair[0].far - pair[0].frr;
        let d1 = pair[1].far - pair[1].frr;
        if d0 == 0.0 {
            return Ok(pair[0].far);
        }
        if d0 > 0.0 && d1 <= 0.0 {
            let t = d0 / (d0 - d1);
            return Ok(pair[0].far + t * (pair[1].far - pair[0].far));
        }
    }
    if let Some(last) = points.last() {
        if last.far - last.frr == 0.0 {
            return Ok(last.far);
        }
    }
    Err(Error::Parameter("no FAR/FRR crossing found".into()))
}

/// Mean normalized Hamming distance over pairs.
pub fn mean_ber(pairs: &[(BitString, BitString)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Parameter("no pairs".into()));
    }
    let mut acc = 0.0;
    for (a, b) in pairs {
        acc += a.hamming(b)? as f64 / a.len() as f64;
    }
    Ok(acc / pairs.len() as f64)
}

/// Genuine and impostor bit error rates.
pub fn ber(
    genuine: &[(BitString, BitString)],
    impostor: &[(BitString, BitString)],
) -> Result<(f64, f64)> {
    Ok((mean_ber(genuine)?, mean_ber(impostor)?))
}

/// Reconstruction attempts: `(enrolled string, stage-1 reconstruction)` per
/// genuine and impostor comparison.
#[derive(Debug, Clone, Default)]
pub struct AttemptCorpus {
    pub genuine: Vec<(BitString, BitString)>,
    pub impostor: Vec<(BitString, BitString)>,
}

/// FAR/FRR of one code over an attempt corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub n: usize,
    pub m: usize,
    pub far: f64,
    pub frr: f64,
}

/// Evaluate each code by full sketch generation and reproduction over the
/// corpus: FRR is the fraction of genuine attempts rejected, FAR the fraction
/// of impostor attempts accepted.
pub fn code_operating_points(
    codes: &[PolarCode],
    channels: &ChannelSpec,
    corpus: &AttemptCorpus,
    salt_seed: u64,
) -> Result<Vec<OperatingPoint>> {
    if corpus.genuine.is_empty() || corpus.impostor.is_empty() {
        return Err(Error::Parameter(
            "operating points need genuine and impostor attempts".into(),
        ));
    }
    codes
        .iter()
        .map(|code| {
            let accept = |(idx, (k, k_prime)): (usize, &(BitString, BitString))| -> Result<bool> {
                let mut salts = SaltSource::from_seed(
                    salt_seed ^ (code.m() as u64) << 40 ^ idx as u64,
                );
                let sketch = com::gen2(k, code, &mut salts)?;
                Ok(com::rep2(k_prime, &sketch, code, channels)?.accepted())
            };

            let run = |attempts: &[(BitString, BitString)]| -> Result<usize> {
                #[cfg(feature = "parallel")]
                let outcomes: Result<Vec<bool>> =
                    attempts.par_iter().enumerate().map(accept).collect();
                #[cfg(not(feature = "parallel"))]
                let outcomes: Result<Vec<bool>> =
                    attempts.iter().enumerate().map(accept).collect();
                Ok(outcomes?.into_iter().filter(|&a| a).count())
            };

            let genuine_accepts = run(&corpus.genuine)?;
            let impostor_accepts = run(&corpus.impostor)?;
            Ok(OperatingPoint {
                n: code.n(),
                m: code.m(),
                far: impostor_accepts as f64 / corpus.impostor.len() as f64,
                frr: 1.0 - genuine_accepts as f64 / corpus.genuine.len() as f64,
            })
        })
        .collect()
}

/// FAR/FRR of one random codebook over an attempt corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodebookPoint {
    pub ell: usize,
    /// Total message bits (4 * ell).
    pub message_bits: usize,
    pub far: f64,
    pub frr: f64,
}

/// Evaluate random codebooks over the same attempt corpus (input must be
/// 1024-bit strings).
pub fn codebook_operating_points(
    books: &[RandomCodebook],
    corpus: &AttemptCorpus,
    salt_seed: u64,
) -> Result<Vec<CodebookPoint>> {
    if corpus.genuine.is_empty() || corpus.impostor.is_empty() {
        return Err(Error::Parameter(
            "operating points need genuine and impostor attempts".into(),
        ));
    }
    books
        .iter()
        .map(|book| {
            let accept = |(idx, (k, k_prime)): (usize, &(BitString, BitString))| -> Result<bool> {
                let mut salts = SaltSource::from_seed(
                    salt_seed ^ (book.ell() as u64) << 40 ^ idx as u64,
                );
                let record = com::codebook_gen2(k, book, &mut salts)?;
                Ok(com::codebook_rep2(k_prime, &record, book)?.0)
            };
            let run = |attempts: &[(BitString, BitString)]| -> Result<usize> {
                #[cfg(feature = "parallel")]
                let outcomes: Result<Vec<bool>> =
                    attempts.par_iter().enumerate().map(accept).collect();
                #[cfg(not(feature = "parallel"))]
                let outcomes: Result<Vec<bool>> =
                    attempts.iter().enumerate().map(accept).collect();
                Ok(outcomes?.into_iter().filter(|&a| a).count())
            };
            let genuine_accepts = run(&corpus.genuine)?;
            let impostor_accepts = run(&corpus.impostor)?;
            Ok(CodebookPoint {
                ell: book.ell(),
                message_bits: 4 * book.ell(),
                far: impostor_accepts as f64 / corpus.impostor.len() as f64,
                frr: 1.0 - genuine_accepts as f64 / corpus.genuine.len() as f64,
            })
        })
        .collect()
}
