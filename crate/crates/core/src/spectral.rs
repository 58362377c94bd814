//! Minutia-pair spectral functions on a fixed `(q, R)` grid.
//!
//! Every unordered minutia pair `(a, b)` contributes a phase factor built from
//! the pair's connecting angle `phi_ab` and the two orientations, weighted by a
//! Gaussian window in the pair distance `R_ab`. Two variants are evaluated:
//!
//! * `xtheta`: phase `q*phi_ab + (theta_b - theta_a)` — uses the orientation
//!   difference, invariant under translation, covariant under rotation
//!   (each harmonic `q` picks up `exp(i*q*delta)`).
//! * `xbeta`:  phase `(q-2)*phi_ab + (theta_a + theta_b)` — uses the
//!   orientation sum, complementary information, also translation invariant.
//!
//! The connecting angle is computed with the full two-argument arctangent;
//! a half-plane ambiguity would corrupt odd harmonics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::minutiae::MinutiaSet;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Which spectral function a map holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralKind {
    XTheta,
    XBeta,
}

impl std::fmt::Display for SpectralKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpectralKind::XTheta => write!(f, "xtheta"),
            SpectralKind::XBeta => write!(f, "xbeta"),
        }
    }
}

/// Evaluation grid: radii in pixels, integer harmonics, Gaussian width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub r_values: Vec<f64>,
    pub q_values: Vec<i32>,
    pub sigma: f64,
}

impl SpectralGrid {
    /// The standard grid: `R in {16, 22, ..., 130}` (20 radii) and
    /// `q in {1, ..., 16}`.
    pub fn default_grid(sigma: f64) -> Self {
        Self {
            r_values: (0..20).map(|i| 16.0 + 6.0 * i as f64).collect(),
            q_values: (1..=16).collect(),
            sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma <= 0.0 || !self.sigma.is_finite() {
            return Err(Error::Parameter(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if self.r_values.is_empty() || self.q_values.is_empty() {
            return Err(Error::Parameter("grid must be non-empty".into()));
        }
        if !self
            .r_values
            .windows(2)
            .all(|w| w[0] < w[1] && w[0] > 0.0)
            || self.r_values[0] <= 0.0
        {
            return Err(Error::Parameter(
                "r_values must be strictly increasing and positive".into(),
            ));
        }
        if !self.q_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Parameter(
                "q_values must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.r_values.len() * self.q_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in canonical order: harmonic-major, radius-minor.
    pub fn points(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.q_values
            .iter()
            .flat_map(move |&q| self.r_values.iter().map(move |&r| (q, r)))
    }

    /// Content hash binding stored artifacts to this grid.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("grid serializes");
        hex(&Sha256::digest(&bytes))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Complex values of one spectral function over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMap {
    pub grid: SpectralGrid,
    pub kind: SpectralKind,
    /// One value per grid point, in [`SpectralGrid::points`] order.
    pub values: Vec<Complex64>,
}

impl SpectralMap {
    /// CSV dump: header `kind,q,R,re,im`, one row per grid point,
    /// values with 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,q,R,re,im\n");
        for ((q, r), v) in self.grid.points().zip(&self.values) {
            out.push_str(&format!("{},{},{},{:.8e},{:.8e}\n", self.kind, q, r, v.re, v.im));
        }
        out
    }
}

/// Pairwise geometry shared by both spectral functions.
struct PairGeometry {
    r_ab: f64,
    phi_ab: f64,
    /// `theta_b - theta_a` for xtheta, `theta_a + theta_b` for xbeta.
    theta_diff: f64,
    theta_sum: f64,
}

/// Invariant angle of an endpoint: from its orientation to the connecting
/// line toward the other endpoint. Unchanged by translation and rotation of
/// the whole set, and independent of minutia list order.
fn invariant_angle(from: &crate::minutiae::Minutia, to: &crate::minutiae::Minutia) -> f64 {
    crate::minutiae::normalize_angle((to.y - from.y).atan2(to.x - from.x) - from.theta)
}

fn pair_geometry(set: &MinutiaSet) -> Result<Vec<PairGeometry>> {
    if set.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "need at least 2 minutiae, got {}",
            set.len()
        )));
    }
    let ms = &set.minutiae;
    let mut pairs = Vec::with_capacity(ms.len() * (ms.len() - 1) / 2);
    for i in 0..ms.len() {
        for j in (i + 1)..ms.len() {
            // The pair term is not symmetric under swapping the endpoint
            // roles (the connecting angle moves by pi), so the roles are
            // fixed canonically from the invariant angles. This keeps the
            // map independent of list order while preserving the exact
            // rotation law. Ties occur only when the two orientations
            // differ by exactly pi; they fall back to a fixed ordering.
            let (a, b) = if canonical_order(&ms[i], &ms[j]) {
                (&ms[i], &ms[j])
            } else {
                (&ms[j], &ms[i])
            };
            let dx = a.x - b.x;
            let dy = a.y - b.y;
            pairs.push(PairGeometry {
                r_ab: (dx * dx + dy * dy).sqrt(),
                phi_ab: dy.atan2(dx),
                theta_diff: b.theta - a.theta,
                theta_sum: a.theta + b.theta,
            });
        }
    }
    Ok(pairs)
}

/// True when `(first, second)` is the canonical role assignment.
fn canonical_order(first: &crate::minutiae::Minutia, second: &crate::minutiae::Minutia) -> bool {
    let beta_first = invariant_angle(first, second);
    let beta_second = invariant_angle(second, first);
    if beta_first != beta_second {
        return beta_first < beta_second;
    }
    (first.theta, first.x, first.y) <= (second.theta, second.x, second.y)
}

fn evaluate(set: &MinutiaSet, grid: &SpectralGrid, kind: SpectralKind) -> Result<SpectralMap> {
    grid.validate()?;
    let pairs = pair_geometry(set)?;
    let inv_two_sigma_sq = 1.0 / (2.0 * grid.sigma * grid.sigma);
    let points: Vec<(i32, f64)> = grid.points().collect();

    let eval_point = |&(q, r): &(i32, f64)| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in &pairs {
            let d = r - p.r_ab;
            let window = (-d * d * inv_two_sigma_sq).exp();
            let phase = match kind {
                SpectralKind::XTheta => f64::from(q) * p.phi_ab + p.theta_diff,
                SpectralKind::XBeta => f64::from(q - 2) * p.phi_ab + p.theta_sum,
            };
            let (s, c) = phase.sin_cos();
            acc += Complex64::new(window * c, window * s);
        }
        acc
    };

    #[cfg(feature = "parallel")]
    let values: Vec<Complex64> = points.par_iter().map(eval_point).collect();
    #[cfg(not(feature = "parallel"))]
    let values: Vec<Complex64> = points.iter().map(eval_point).collect();

    Ok(SpectralMap {
        grid: grid.clone(),
        kind,
        values,
    })
}

/// Evaluate the orientation-difference spectral function.
pub fn spectral_xtheta(set: &MinutiaSet, grid: &SpectralGrid) -> Result<SpectralMap> {
    evaluate(set, grid, SpectralKind::XTheta)
}

/// Evaluate the orientation-sum spectral function.
pub fn spectral_xbeta(set: &MinutiaSet, grid: &SpectralGrid) -> Result<SpectralMap> {
    evaluate(set, grid, SpectralKind::XBeta)
}

/// Apply the rotation law for `xtheta` maps: harmonic `q` picks up
/// `exp(i*q*delta)`. Rejects `xbeta` maps, whose transformation law is
/// not asserted.
pub fn rotate_map(map: &SpectralMap, delta: f64) -> Result<SpectralMap> {
    if map.kind != SpectralKind::XTheta {
        return Err(Error::UnsupportedKind(format!(
            "rotate_map is defined for xtheta only, got {}",
            map.kind
        )));
    }
    let mut out = map.clone();
    let mut idx = 0;
    for &q in &map.grid.q_values {
        let rot = Complex64::from_polar(1.0, f64::from(q) * delta);
        for _ in 0..map.grid.r_values.len() {
            out.values[idx] *= rot;
            idx += 1;
        }
    }
    Ok(out)
}

/// Normalize to pooled zero mean and unit variance, treating all real and
/// imaginary parts of the map as one sample.
pub fn normalize(map: &SpectralMap) -> Result<SpectralMap> {
    if map.values.len() < 2 {
        return Err(Error::DegenerateInput(
            "normalize needs at least 2 grid points".into(),
        ));
    }
    let n = (2 * map.values.len()) as f64;
    let mean = map.values.iter().map(|v| v.re + v.im).sum::<f64>() / n;
    let var = map
        .values
        .iter()
        .map(|v| (v.re - mean).powi(2) + (v.im - mean).powi(2))
        .sum::<f64>()
        / n;
    if var <= 0.0 || !var.is_finite() {
        return Err(Error::DegenerateInput(format!(
            "map has zero or non-finite pooled variance ({var})"
        )));
    }
    let scale = 1.0 / var.sqrt();
    let mut out = map.clone();
    for v in &mut out.values {
        v.re = (v.re - mean) * scale;
        v.im = (v.im - mean) * scale;
    }
    Ok(out)
}

/// Pooled mean and population variance of a map's real and imaginary parts.
pub fn pooled_stats(map: &SpectralMap) -> (f64, f64) {
    let n = (2 * map.values.len()) as f64;
    let mean = map.values.iter().map(|v| v.re + v.im).sum::<f64>() / n;
    let var = map
        .values
        .iter()
        .map(|v| (v.re - mean).powi(2) + (v.im - mean).powi(2))
        .sum::<f64>()
        / n;
    (mean, var)
}

/// Correlation score between two normalized maps of the same kind and grid:
/// mean over grid points of `Re(a * conj(b))`.
pub fn similarity(a: &SpectralMap, b: &SpectralMap) -> Result<f64> {
    if a.kind != b.kind || a.grid != b.grid || a.values.len() != b.values.len() {
        return Err(Error::Shape(
            "similarity requires identical grid and kind".into(),
        ));
    }
    let sum: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x * y.conj()).re)
        .sum();
    Ok(sum / a.values.len() as f64)
}

/// Analog-domain fusion of two similarity scores.
pub fn fuse_scores(s1: f64, s2: f64) -> f64 {
    s1 + s2
}
