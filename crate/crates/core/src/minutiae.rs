//! Minutia domain types, text-file I/O, and a synthetic generator with a
//! controllable noise model.
//!
//! The generator stands in for real fingerprint databases: it draws a set of
//! feature points uniformly over a rectangular field and `perturb` simulates
//! repeated captures of the same finger (global misalignment, per-point jitter,
//! dropouts and spurious detections). Everything is a pure function of its seed.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of minutiae accepted for processing; bounds the O(Z^2)
/// pair loops downstream.
pub const MAX_MINUTIAE: usize = 512;

/// Default per-image severity spread for synthetic corpora; see
/// [`generate_corpus`].
pub const DEFAULT_SEVERITY_SPREAD: f64 = 4.0;

/// A single fingerprint feature point: position in pixels, orientation in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minutia {
    pub x: f64,
    pub y: f64,
    /// Orientation in `[0, 2*pi)`.
    pub theta: f64,
}

impl Minutia {
    pub fn new(x: f64, y: f64, theta: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() || !theta.is_finite() {
            return Err(Error::Parameter(format!(
                "minutia coordinates must be finite, got ({x}, {y}, {theta})"
            )));
        }
        Ok(Self {
            x,
            y,
            theta: normalize_angle(theta),
        })
    }
}

/// Wrap an angle into `[0, 2*pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// One fingerprint image: an ordered list of minutiae plus opaque identifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinutiaSet {
    pub minutiae: Vec<Minutia>,
    pub finger_id: String,
    pub image_id: String,
}

impl MinutiaSet {
    pub fn new(minutiae: Vec<Minutia>, finger_id: &str, image_id: &str) -> Result<Self> {
        if minutiae.len() < 2 || minutiae.len() > MAX_MINUTIAE {
            return Err(Error::Parameter(format!(
                "minutia count must be in [2, {MAX_MINUTIAE}], got {}",
                minutiae.len()
            )));
        }
        for id in [finger_id, image_id] {
            if id.is_empty() || id.chars().any(char::is_whitespace) {
                return Err(Error::Parameter(format!(
                    "identifiers must be non-empty and whitespace-free, got {id:?}"
                )));
            }
        }
        Ok(Self {
            minutiae,
            finger_id: finger_id.to_owned(),
            image_id: image_id.to_owned(),
        })
    }

    pub fn len(&self) -> usize {
        self.minutiae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minutiae.is_empty()
    }
}

/// Capture-noise model applied by [`perturb`].
///
/// The global shift/rotation model intra-finger misalignment between captures;
/// the per-minutia terms model detection noise. `drop_prob` removes existing
/// minutiae, `insert_rate` is the expected count of spurious ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Std of per-minutia positional noise, pixels.
    pub jitter_sigma: f64,
    /// Std of per-minutia orientation noise, radians.
    pub angle_sigma: f64,
    /// Probability that an existing minutia disappears.
    pub drop_prob: f64,
    /// Expected number of spurious minutiae (Poisson).
    pub insert_rate: f64,
    /// Global translation bound, pixels (uniform in +-bound, per axis).
    pub global_shift_max: f64,
    /// Global rotation bound about the centroid, radians (uniform in +-bound).
    pub global_rot_max: f64,
    pub seed: u64,
}

impl NoiseModel {
    /// The all-zero model; `perturb` becomes the identity on minutia values.
    pub fn noiseless(seed: u64) -> Self {
        Self {
            jitter_sigma: 0.0,
            angle_sigma: 0.0,
            drop_prob: 0.0,
            insert_rate: 0.0,
            global_shift_max: 0.0,
            global_rot_max: 0.0,
            seed,
        }
    }

    /// Default capture-noise model for synthetic experiments, paired with
    /// [`DEFAULT_SEVERITY_SPREAD`]. The global rotation stays small because
    /// no rotation search is applied during reconstruction.
    pub fn default_synthetic(seed: u64) -> Self {
        Self {
            jitter_sigma: 1.3,
            angle_sigma: 0.10,
            drop_prob: 0.08,
            insert_rate: 2.5,
            global_shift_max: 8.0,
            global_rot_max: 0.05,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("jitter_sigma", self.jitter_sigma),
            ("angle_sigma", self.angle_sigma),
            ("insert_rate", self.insert_rate),
            ("global_shift_max", self.global_shift_max),
            ("global_rot_max", self.global_rot_max),
        ];
        for (name, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Parameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.drop_prob) {
            return Err(Error::Parameter(format!(
                "drop_prob must be in [0, 1], got {}",
                self.drop_prob
            )));
        }
        Ok(())
    }
}

/// Draw a synthetic fingerprint: Z ~ Poisson(`z_mean`) clamped to `[2, 512]`,
/// positions uniform over the field, orientations uniform over `[0, 2*pi)`.
pub fn generate_finger(
    z_mean: f64,
    field_width: f64,
    field_height: f64,
    seed: u64,
) -> Result<MinutiaSet> {
    if z_mean < 2.0 {
        return Err(Error::Parameter(format!("z_mean must be >= 2, got {z_mean}")));
    }
    if field_width <= 0.0 || field_height <= 0.0 || !field_width.is_finite() || !field_height.is_finite() {
        return Err(Error::Parameter(format!(
            "field dimensions must be positive, got {field_width} x {field_height}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poisson = Poisson::new(z_mean)
        .map_err(|e| Error::Parameter(format!("invalid Poisson mean {z_mean}: {e}")))?;
    let z = (poisson.sample(&mut rng) as usize).clamp(2, MAX_MINUTIAE);
    let minutiae = (0..z)
        .map(|_| Minutia {
            x: rng.random_range(0.0..field_width),
            y: rng.random_range(0.0..field_height),
            theta: rng.random_range(0.0..TAU),
        })
        .collect();
    MinutiaSet::new(minutiae, &format!("f{seed}"), &format!("f{seed}-i0"))
}

/// Simulate a fresh capture of `set` under `model`.
///
/// Applies one global shift and one global rotation about the centroid, then
/// per-minutia jitter, angle noise, Bernoulli dropouts, and Poisson insertions
/// (uniform over the input's bounding box). The output keeps `finger_id` and
/// gets an image id derived from the model seed. Deterministic given
/// `(set, model)`.
pub fn perturb(set: &MinutiaSet, model: &NoiseModel) -> Result<MinutiaSet> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);

    let shift_x = sym_uniform(&mut rng, model.global_shift_max);
    let shift_y = sym_uniform(&mut rng, model.global_shift_max);
    let rot = sym_uniform(&mut rng, model.global_rot_max);

    let cx = set.minutiae.iter().map(|m| m.x).sum::<f64>() / set.len() as f64;
    let cy = set.minutiae.iter().map(|m| m.y).sum::<f64>() / set.len() as f64;
    let (sin_r, cos_r) = rot.sin_cos();

    let jitter = Normal::new(0.0, model.jitter_sigma)
        .map_err(|e| Error::Parameter(format!("bad jitter_sigma: {e}")))?;
    let angle = Normal::new(0.0, model.angle_sigma)
        .map_err(|e| Error::Parameter(format!("bad angle_sigma: {e}")))?;

    let mut out = Vec::with_capacity(set.len());
    for m in &set.minutiae {
        // Rotate about the centroid, then translate. Zero rotation must be a
        // bit-exact identity, so skip the centroid arithmetic entirely.
        let (rx, ry) = if rot != 0.0 {
            let dx = m.x - cx;
            let dy = m.y - cy;
            (cx + dx * cos_r - dy * sin_r, cy + dx * sin_r + dy * cos_r)
        } else {
            (m.x, m.y)
        };
        let x = rx + shift_x + jitter.sample(&mut rng);
        let y = ry + shift_y + jitter.sample(&mut rng);
        let theta = normalize_angle(m.theta + rot + angle.sample(&mut rng));
        let dropped = model.drop_prob > 0.0 && rng.random_bool(model.drop_prob);
        if !dropped {
            out.push(Minutia { x, y, theta });
        }
    }

    if model.insert_rate > 0.0 {
        let (min_x, max_x, min_y, max_y) = bounding_box(&set.minutiae);
        let poisson = Poisson::new(model.insert_rate)
            .map_err(|e| Error::Parameter(format!("bad insert_rate: {e}")))?;
        let n_insert = poisson.sample(&mut rng) as usize;
        for _ in 0..n_insert {
            if out.len() >= MAX_MINUTIAE {
                break;
            }
            out.push(Minutia {
                x: uniform_in(&mut rng, min_x, max_x),
                y: uniform_in(&mut rng, min_y, max_y),
                theta: rng.random_range(0.0..TAU),
            });
        }
    }

    if out.len() < 2 {
        return Err(Error::DegenerateOutput(format!(
            "perturb left {} minutiae of finger {}",
            out.len(),
            set.finger_id
        )));
    }
    MinutiaSet::new(
        out,
        &set.finger_id,
        &format!("{}-p{:016x}", set.image_id, model.seed),
    )
}

fn sym_uniform(rng: &mut ChaCha8Rng, bound: f64) -> f64 {
    if bound > 0.0 {
        rng.random_range(-bound..=bound)
    } else {
        0.0
    }
}

fn uniform_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn bounding_box(minutiae: &[Minutia]) -> (f64, f64, f64, f64) {
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for m in minutiae {
        min_x = min_x.min(m.x);
        max_x = max_x.max(m.x);
        min_y = min_y.min(m.y);
        max_y = max_y.max(m.y);
    }
    (min_x, max_x, min_y, max_y)
}

/// Generate a whole corpus: `fingers` fingers with `images_per_finger`
/// perturbed captures each, with per-image seeds derived from `seed`.
///
/// `severity_spread` models uneven capture quality: each image scales the
/// noise model's jitter, angle noise, dropout, and insertion rate by a
/// log-uniform factor in `[1/sqrt(spread), sqrt(spread)]`. A spread of 1
/// applies the model unchanged.
#[allow(clippy::too_many_arguments)]
pub fn generate_corpus(
    fingers: usize,
    images_per_finger: usize,
    z_mean: f64,
    field_width: f64,
    field_height: f64,
    noise: &NoiseModel,
    severity_spread: f64,
    seed: u64,
) -> Result<Vec<Vec<MinutiaSet>>> {
    if fingers == 0 || images_per_finger == 0 {
        return Err(Error::Parameter(
            "corpus must have at least one finger and one image".into(),
        ));
    }
    if severity_spread < 1.0 || !severity_spread.is_finite() {
        return Err(Error::Parameter(format!(
            "severity_spread must be >= 1, got {severity_spread}"
        )));
    }
    let mut corpus = Vec::with_capacity(fingers);
    for f in 0..fingers {
        let base_seed = seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(f as u64);
        let mut base = generate_finger(z_mean, field_width, field_height, base_seed)?;
        base.finger_id = format!("f{f:04}");
        let mut images = Vec::with_capacity(images_per_finger);
        for i in 0..images_per_finger {
            let image_seed = base_seed ^ (0x5851_f42d_4c95_7f2d_u64.wrapping_mul(i as u64 + 1));
            let mut m = noise.clone();
            if severity_spread > 1.0 {
                let mut sev_rng = ChaCha8Rng::seed_from_u64(image_seed ^ 0x7365_7665_7269_7479);
                let u: f64 = sev_rng.random_range(0.0..1.0);
                let severity = severity_spread.powf(u - 0.5);
                m.jitter_sigma *= severity;
                m.angle_sigma *= severity;
                m.drop_prob = (m.drop_prob * severity).min(1.0);
                m.insert_rate *= severity;
            }
            m.seed = image_seed;
            let mut img = perturb(&base, &m)?;
            img.image_id = format!("f{f:04}-i{i}");
            images.push(img);
        }
        corpus.push(images);
    }
    Ok(corpus)
}

// --- text file I/O ----------------------------------------------------------
//
// Record header line `# finger=<id> image=<id>`, then one minutia per line as
// `x y theta` (decimal, single spaces, theta in radians). A blank line ends a
// record; multiple records per file are allowed.

pub fn write_minutia_file(sets: &[MinutiaSet], path: &Path) -> Result<()> {
    let mut buf = String::new();
    for set in sets {
        let _ = writeln!(buf, "# finger={} image={}", set.finger_id, set.image_id);
        for m in &set.minutiae {
            let _ = writeln!(buf, "{:.6} {:.6} {:.6}", m.x, m.y, m.theta);
        }
        buf.push('\n');
    }
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_minutia_file(path: &Path) -> Result<Vec<MinutiaSet>> {
    let text = std::fs::read_to_string(path)?;
    parse_minutia_text(&text)
}

pub fn parse_minutia_text(text: &str) -> Result<Vec<MinutiaSet>> {
    let mut sets = Vec::new();
    let mut header: Option<(String, String, usize)> = None;
    let mut current: Vec<Minutia> = Vec::new();

    let mut flush = |header: &mut Option<(String, String, usize)>,
                     current: &mut Vec<Minutia>|
     -> Result<()> {
        if let Some((finger, image, line)) = header.take() {
            let set = MinutiaSet::new(std::mem::take(current), &finger, &image)
                .map_err(|e| Error::Parse {
                    line,
                    msg: format!("record rejected: {e}"),
                })?;
            sets.push(set);
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            flush(&mut header, &mut current)?;
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            flush(&mut header, &mut current)?;
            header = Some(parse_header(rest, lineno)?);
            continue;
        }
        if header.is_none() {
            return Err(Error::Parse {
                line: lineno,
                msg: "minutia line before any record header".into(),
            });
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected `x y theta`, got {} fields", fields.len()),
            });
        }
        let mut vals = [0.0f64; 3];
        for (i, f) in fields.iter().enumerate() {
            vals[i] = f.parse().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("bad number {f:?}: {e}"),
            })?;
        }
        let m = Minutia::new(vals[0], vals[1], vals[2]).map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        current.push(m);
    }
    flush(&mut header, &mut current)?;
    Ok(sets)
}

fn parse_header(rest: &str, lineno: usize) -> Result<(String, String, usize)> {
    let mut finger = None;
    let mut image = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("finger=") {
            finger = Some(v.to_owned());
        } else if let Some(v) = tok.strip_prefix("image=") {
            image = Some(v.to_owned());
        } else {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("unrecognized header token {tok:?}"),
            });
        }
    }
    match (finger, image) {
        (Some(f), Some(i)) => Ok((f, i, lineno)),
        _ => Err(Error::Parse {
            line: lineno,
            msg: "header must carry finger=<id> and image=<id>".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic() {
        let a = generate_finger(35.0, 500.0, 500.0, 1).unwrap();
        let b = generate_finger(35.0, 500.0, 500.0, 1).unwrap();
        assert_eq!(a, b);
        let c = generate_finger(35.0, 500.0, 500.0, 2).unwrap();
        assert_ne!(a.minutiae, c.minutiae);
    }

    #[test]
    fn generator_respects_field_and_count() {
        let set = generate_finger(35.0, 500.0, 500.0, 1).unwrap();
        assert!(set.len() >= 2 && set.len() <= MAX_MINUTIAE);
        // Poisson(35) should land in a loose band around the mean.
        assert!(set.len() >= 10 && set.len() <= 80, "Z = {}", set.len());
        for m in &set.minutiae {
            assert!((0.0..500.0).contains(&m.x));
            assert!((0.0..500.0).contains(&m.y));
            assert!((0.0..TAU).contains(&m.theta));
        }
    }

    #[test]
    fn generator_rejects_bad_dimensions() {
        assert!(generate_finger(35.0, 0.0, 500.0, 1).is_err());
        assert!(generate_finger(35.0, 500.0, -1.0, 1).is_err());
        assert!(generate_finger(1.0, 500.0, 500.0, 1).is_err());
    }

    #[test]
    fn perturb_with_zero_noise_is_identity() {
        let set = generate_finger(35.0, 500.0, 500.0, 7).unwrap();
        let out = perturb(&set, &NoiseModel::noiseless(3)).unwrap();
        assert_eq!(out.len(), set.len());
        for (a, b) in set.minutiae.iter().zip(&out.minutiae) {
            assert_eq!(a.x, b.x);
            assert_eq!(a.y, b.y);
            assert_eq!(a.theta, b.theta);
        }
        assert_eq!(out.finger_id, set.finger_id);
        assert_ne!(out.image_id, set.image_id);
    }

    #[test]
    fn perturb_is_deterministic_given_seed() {
        let set = generate_finger(35.0, 500.0, 500.0, 7).unwrap();
        let model = NoiseModel {
            jitter_sigma: 1.0,
            angle_sigma: 0.1,
            drop_prob: 0.1,
            insert_rate: 2.0,
            global_shift_max: 5.0,
            global_rot_max: 0.05,
            seed: 99,
        };
        let a = perturb(&set, &model).unwrap();
        let b = perturb(&set, &model).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn perturb_drop_all_is_degenerate() {
        let set = generate_finger(35.0, 500.0, 500.0, 7).unwrap();
        let mut model = NoiseModel::noiseless(1);
        model.drop_prob = 1.0;
        match perturb(&set, &model) {
            Err(Error::DegenerateOutput(_)) => {}
            other => panic!("expected degenerate output, got {other:?}"),
        }
    }

    #[test]
    fn theta_is_normalized() {
        let m = Minutia::new(0.0, 0.0, -1.0).unwrap();
        assert!((0.0..TAU).contains(&m.theta));
        assert!((m.theta - (TAU - 1.0)).abs() < 1e-12);
        let m2 = Minutia::new(0.0, 0.0, 3.0 * TAU + 0.5).unwrap();
        assert!((m2.theta - 0.5).abs() < 1e-12);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.mnt");
        let sets: Vec<MinutiaSet> = (0..3)
            .map(|i| generate_finger(20.0, 400.0, 400.0, i).unwrap())
            .collect();
        write_minutia_file(&sets, &path).unwrap();
        let back = read_minutia_file(&path).unwrap();
        assert_eq!(back.len(), sets.len());
        for (a, b) in sets.iter().zip(&back) {
            assert_eq!(a.finger_id, b.finger_id);
            assert_eq!(a.image_id, b.image_id);
            assert_eq!(a.len(), b.len());
            for (ma, mb) in a.minutiae.iter().zip(&b.minutiae) {
                assert!((ma.x - mb.x).abs() <= 1e-6);
                assert!((ma.y - mb.y).abs() <= 1e-6);
                assert!((ma.theta - mb.theta).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn single_minutia_record_parses() {
        let text = "# finger=a image=b\n10.0 20.0 1.5708\n30.0 4.0 0.2\n";
        let sets = parse_minutia_text(text).unwrap();
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].len(), 2);
        assert_eq!(sets[0].minutiae[0].x, 10.0);
    }

    #[test]
    fn empty_body_is_rejected() {
        let text = "# finger=a image=b\n\n";
        match parse_minutia_text(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_carries_line_number() {
        let text = "# finger=a image=b\n1.0 2.0 0.1\nnot a number here\n";
        match parse_minutia_text(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn corpus_shape_and_ids() {
        let noise = NoiseModel::noiseless(0);
        let corpus = generate_corpus(3, 2, 20.0, 400.0, 400.0, &noise, 1.0, 5).unwrap();
        assert_eq!(corpus.len(), 3);
        for (f, images) in corpus.iter().enumerate() {
            assert_eq!(images.len(), 2);
            for img in images {
                assert_eq!(img.finger_id, format!("f{f:04}"));
            }
        }
        // Distinct fingers get distinct geometry.
        assert_ne!(corpus[0][0].minutiae, corpus[1][0].minutiae);
    }
}
