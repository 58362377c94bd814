//! Stage-1 zero-leakage helper data system.
//!
//! Each spectral-map component (one real or imaginary part of one grid point)
//! is modeled as a zero-mean Gaussian. `gen1` quantizes an enrollment value
//! into one of `N` equiprobable intervals and emits helper data
//! `w = [F(x) - cum_s] / p_s`, which is uniform on `[0, 1)` and independent of
//! the symbol. `rec1` recovers the symbol from a noisy verification value using
//! the likelihood decision boundaries `tau_{alpha,w}`.
//!
//! Channel statistics (`sigma_x`, `sigma_v`, `lambda`) are estimated per
//! component from a database of maps; `tradeoff_curve` reproduces the
//! information/error tradeoff between `N = 2` and `N = 3` by Monte Carlo.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::spectral::{pooled_stats, SpectralKind, SpectralMap};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Quantile clamp: `F_inv` arguments are kept inside
/// `[P_CLAMP, 1 - P_CLAMP]` so the inverse stays finite. Only values beyond
/// roughly seven standard deviations are affected.
pub const P_CLAMP: f64 = 1e-12;

/// Attenuation floor applied when the noise estimate exceeds the signal
/// estimate on small samples.
pub const LAMBDA_FLOOR: f64 = 1e-6;

// --- Gaussian model ----------------------------------------------------------

/// Zero-mean Gaussian source model for one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    pub std: f64,
}

impl GaussianModel {
    pub fn new(std: f64) -> Result<Self> {
        if std <= 0.0 || !std.is_finite() {
            return Err(Error::Parameter(format!("std must be > 0, got {std}")));
        }
        Ok(Self { std })
    }

    pub fn standard() -> Self {
        Self { std: 1.0 }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        0.5 * erfc(-x / (self.std * SQRT_2))
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let z = x / self.std;
        (-0.5 * z * z).exp() / (self.std * (2.0 * std::f64::consts::PI).sqrt())
    }

    /// Quantile function with the [`P_CLAMP`] convention. Two Newton steps on
    /// top of the `erfc_inv` seed keep `cdf(inverse_cdf(p))` within 1e-10 of
    /// `p` across the clamped domain.
    pub fn inverse_cdf(&self, p: f64) -> f64 {
        let p = p.clamp(P_CLAMP, 1.0 - P_CLAMP);
        let mut x = -SQRT_2 * erfc_inv(2.0 * p) * self.std;
        for _ in 0..2 {
            let err = self.cdf(x) - p;
            let slope = self.pdf(x);
            if slope > 0.0 {
                x -= err / slope;
            }
        }
        x
    }
}

/// Gaussian upper tail `Q(z) = 1 - Phi(z)` for the standard normal.
pub fn q_tail(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

// --- quantizer ----------------------------------------------------------------

/// Interval layout of the stage-1 quantizer.
///
/// `N` intervals with probabilities `p_0..p_{N-1}`; boundaries are the source
/// quantiles of the cumulative probabilities. Equiprobable intervals are the
/// supported configuration (`N` in {2, 3}); general probabilities are accepted
/// for the scalar ops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizerConfig {
    probs: Vec<f64>,
    cum: Vec<f64>,
}

impl QuantizerConfig {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::Parameter("need at least 2 intervals".into()));
        }
        if probs.iter().any(|&p| p <= 0.0 || !p.is_finite()) {
            return Err(Error::Parameter("interval probabilities must be > 0".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!(
                "interval probabilities must sum to 1, got {total}"
            )));
        }
        let mut cum = Vec::with_capacity(probs.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for &p in &probs {
            acc += p;
            cum.push(acc);
        }
        *cum.last_mut().unwrap() = 1.0;
        Ok(Self { probs, cum })
    }

    pub fn equiprobable(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn n_intervals(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, s: usize) -> f64 {
        self.probs[s]
    }

    /// Cumulative probability below interval `s`.
    pub fn cum_below(&self, s: usize) -> f64 {
        self.cum[s]
    }

    /// Finite quantization boundaries `Omega_1..Omega_{N-1}`.
    pub fn boundaries(&self, model: &GaussianModel) -> Vec<f64> {
        self.cum[1..self.probs.len()]
            .iter()
            .map(|&c| model.inverse_cdf(c))
            .collect()
    }
}

// --- Gen1 / Rec1 ---------------------------------------------------------------

/// Quantize an enrollment value: returns the symbol and helper data `w` in
/// `[0, 1)`.
pub fn gen1(x: f64, model: &GaussianModel, config: &QuantizerConfig) -> Result<(usize, f64)> {
    if !x.is_finite() {
        return Err(Error::Parameter(format!("x must be finite, got {x}")));
    }
    let f = model.cdf(x);
    let n = config.n_intervals();
    let mut s = n - 1;
    for alpha in (0..n).rev() {
        if f >= config.cum_below(alpha) {
            s = alpha;
            break;
        }
    }
    let fc = f.clamp(P_CLAMP, 1.0 - P_CLAMP);
    let w = ((fc - config.cum_below(s)) / config.prob(s)).clamp(0.0, 1.0 - P_CLAMP);
    Ok((s, w))
}

/// Inverse map: the enrollment value implied by `(s, w)`.
pub fn xi(s: usize, w: f64, model: &GaussianModel, config: &QuantizerConfig) -> f64 {
    model.inverse_cdf(config.cum_below(s) + w * config.prob(s))
}

/// Per-component reconstruction channel: source model plus attenuation and
/// verification-noise standard deviation.
#[derive(Debug, Clone, Copy)]
pub struct ComponentChannel {
    pub model: GaussianModel,
    pub lambda: f64,
    pub sigma_v: f64,
}

/// Likelihood decision boundaries `tau_1..tau_{N-1}` for helper value `w`.
///
/// For equiprobable intervals the log-ratio term vanishes and each boundary is
/// the attenuated midpoint of the adjacent reconstruction points.
pub fn decision_boundaries(
    w: f64,
    channel: &ComponentChannel,
    config: &QuantizerConfig,
) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&w) {
        return Err(Error::Parameter(format!("w must be in [0, 1), got {w}")));
    }
    if channel.lambda <= 0.0 {
        return Err(Error::ChannelUseless);
    }
    let n = config.n_intervals();
    let xis: Vec<f64> = (0..n).map(|s| xi(s, w, &channel.model, config)).collect();
    let mut taus = Vec::with_capacity(n - 1);
    for alpha in 1..n {
        let lo = xis[alpha - 1];
        let hi = xis[alpha];
        let mut tau = channel.lambda * (lo + hi) / 2.0;
        let log_ratio = (config.prob(alpha - 1) / config.prob(alpha)).ln();
        if log_ratio != 0.0 {
            let gap = channel.lambda * (hi - lo);
            if gap.abs() > f64::MIN_POSITIVE {
                tau += channel.sigma_v * channel.sigma_v * log_ratio / gap;
            }
        }
        taus.push(tau);
    }
    Ok(taus)
}

/// Classify a verification value against precomputed boundaries.
/// A value exactly on a boundary takes the higher symbol, mirroring the
/// `x >= Omega_alpha` convention of `gen1`.
pub fn classify(y: f64, taus: &[f64]) -> usize {
    let mut s = 0;
    for &tau in taus {
        if y >= tau {
            s += 1;
        } else {
            break;
        }
    }
    s
}

/// Reconstruct the symbol from a noisy value and the stored helper data.
pub fn rec1(
    y: f64,
    w: f64,
    channel: &ComponentChannel,
    config: &QuantizerConfig,
) -> Result<usize> {
    let taus = decision_boundaries(w, channel, config)?;
    Ok(classify(y, &taus))
}

// --- channel statistics ---------------------------------------------------------

/// Estimated channel parameters for one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentStat {
    /// Population standard deviation over all images.
    pub sigma_x: f64,
    /// Within-finger noise standard deviation, averaged over fingers.
    pub sigma_v: f64,
    /// Attenuation from the identical-conditions relation
    /// `lambda^2 = 1 - sigma_v^2 / sigma_x^2`, floored at [`LAMBDA_FLOOR`].
    pub lambda: f64,
    /// Component had zero population variance; excluded downstream.
    pub dead: bool,
}

impl ComponentStat {
    pub fn channel(&self) -> Result<ComponentChannel> {
        if self.dead {
            return Err(Error::DegenerateInput("dead component".into()));
        }
        Ok(ComponentChannel {
            model: GaussianModel::new(self.sigma_x)?,
            lambda: self.lambda,
            sigma_v: self.sigma_v,
        })
    }

    /// Noise-to-signal ratio used for reliable-component ranking.
    /// Dead components rank after everything else.
    pub fn noise_ratio(&self) -> f64 {
        if self.dead {
            f64::INFINITY
        } else {
            self.sigma_v / self.sigma_x
        }
    }
}

/// Per-component channel statistics for a fixed kind order and grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub kinds: Vec<SpectralKind>,
    pub grid_hash: String,
    pub components: Vec<ComponentStat>,
}

impl ChannelStats {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Concatenate per-kind statistics in the given order.
    pub fn concat(parts: Vec<ChannelStats>) -> Result<ChannelStats> {
        let mut kinds = Vec::new();
        let mut components = Vec::new();
        let mut grid_hash: Option<String> = None;
        for part in parts {
            match &grid_hash {
                None => grid_hash = Some(part.grid_hash.clone()),
                Some(h) if *h == part.grid_hash => {}
                Some(_) => {
                    return Err(Error::Configuration(
                        "cannot concatenate stats from different grids".into(),
                    ))
                }
            }
            if part.kinds.iter().any(|k| kinds.contains(k)) {
                return Err(Error::Parameter("duplicate kind in stats".into()));
            }
            kinds.extend(part.kinds);
            components.extend(part.components);
        }
        Ok(ChannelStats {
            kinds,
            grid_hash: grid_hash.ok_or_else(|| Error::Parameter("no stats given".into()))?,
            components,
        })
    }

    /// Effective statistics when the enrollment value is the average of `t`
    /// independent captures, renormalized. The enrollment-side noise shrinks
    /// by `sqrt(t)`, so the raw averaged spread per component is
    /// `sigma_u^2 + sigma_v^2 / t` with `sigma_u = lambda * sigma_x` the
    /// underlying-signal spread; renormalizing the averaged map scales every
    /// component back up by the pooled shrink factor. The attenuation follows
    /// from the enrollment-side relation in raw units, mapped into the
    /// renormalized units the quantizer sees. The reconstruction side keeps
    /// the single-image `sigma_v`. `t = 1` returns the statistics unchanged.
    pub fn superfinger(&self, t: usize) -> ChannelStats {
        if t <= 1 {
            return self.clone();
        }
        // Pooled shrink of the averaged map relative to a single map.
        let mut raw_sq_sum = 0.0;
        let mut orig_sq_sum = 0.0;
        for c in &self.components {
            if c.dead {
                continue;
            }
            let sigma_u_sq = (c.lambda * c.sigma_x).powi(2);
            raw_sq_sum += sigma_u_sq + c.sigma_v * c.sigma_v / t as f64;
            orig_sq_sum += c.sigma_x * c.sigma_x;
        }
        let shrink = if orig_sq_sum > 0.0 {
            (raw_sq_sum / orig_sq_sum).sqrt()
        } else {
            1.0
        };

        let components = self
            .components
            .iter()
            .map(|c| {
                if c.dead {
                    return *c;
                }
                let sigma_u_sq = (c.lambda * c.sigma_x).powi(2);
                let noise_sq = c.sigma_v * c.sigma_v / t as f64;
                let raw_sq = sigma_u_sq + noise_sq;
                let lambda_raw = (1.0 - noise_sq / raw_sq).max(0.0).sqrt();
                ComponentStat {
                    sigma_x: raw_sq.sqrt() / shrink,
                    sigma_v: c.sigma_v,
                    lambda: (lambda_raw * shrink).clamp(LAMBDA_FLOOR, 1.0),
                    dead: false,
                }
            })
            .collect();
        ChannelStats {
            kinds: self.kinds.clone(),
            grid_hash: self.grid_hash.clone(),
            components,
        }
    }
}

fn check_normalized(map: &SpectralMap) -> Result<()> {
    let (mean, var) = pooled_stats(map);
    if mean.abs() > 1e-6 || (var - 1.0).abs() > 1e-6 {
        return Err(Error::Parameter(format!(
            "map is not normalized (mean {mean:.2e}, var {var:.6})"
        )));
    }
    Ok(())
}

/// Flatten maps into the canonical component order: kinds in list order,
/// within each kind all real parts in grid order, then all imaginary parts.
pub fn components_of(maps: &[SpectralMap]) -> Result<Vec<f64>> {
    if maps.is_empty() {
        return Err(Error::Parameter("no maps given".into()));
    }
    let mut out = Vec::with_capacity(maps.len() * 2 * maps[0].values.len());
    for (i, map) in maps.iter().enumerate() {
        if map.grid != maps[0].grid {
            return Err(Error::Shape("maps use different grids".into()));
        }
        if maps[..i].iter().any(|m| m.kind == map.kind) {
            return Err(Error::Parameter(format!("duplicate kind {}", map.kind)));
        }
        out.extend(map.values.iter().map(|v| v.re));
        out.extend(map.values.iter().map(|v| v.im));
    }
    Ok(out)
}

/// Estimate channel statistics for one kind from normalized maps grouped by
/// finger. Needs at least two fingers and two images per finger.
pub fn estimate_stats(maps_by_finger: &[Vec<SpectralMap>]) -> Result<ChannelStats> {
    if maps_by_finger.len() < 2 {
        return Err(Error::Parameter("need at least 2 fingers".into()));
    }
    let first = maps_by_finger
        .first()
        .and_then(|f| f.first())
        .ok_or_else(|| Error::Parameter("empty database".into()))?;
    let kind = first.kind;
    let grid = first.grid.clone();
    let n_components = 2 * first.values.len();

    for finger in maps_by_finger {
        if finger.len() < 2 {
            return Err(Error::Parameter("need at least 2 images per finger".into()));
        }
        for map in finger {
            if map.kind != kind || map.grid != grid {
                return Err(Error::Shape("mixed kinds or grids in database".into()));
            }
            check_normalized(map)?;
        }
    }

    let component_value = |map: &SpectralMap, c: usize| -> f64 {
        let m = map.values.len();
        if c < m {
            map.values[c].re
        } else {
            map.values[c - m].im
        }
    };

    let total_images: usize = maps_by_finger.iter().map(|f| f.len()).sum();
    let mut components = Vec::with_capacity(n_components);
    // Two-pass variances avoid catastrophic cancellation on near-constant
    // components.
    let variance = |values: &[f64]| -> f64 {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    };
    let mut all_values = Vec::with_capacity(total_images);
    let mut finger_values: Vec<f64> = Vec::new();
    for c in 0..n_components {
        all_values.clear();
        let mut var_v_acc = 0.0;
        for finger in maps_by_finger {
            finger_values.clear();
            for map in finger {
                let v = component_value(map, c);
                finger_values.push(v);
                all_values.push(v);
            }
            var_v_acc += variance(&finger_values);
        }
        let var_x = variance(&all_values);
        let var_v = var_v_acc / maps_by_finger.len() as f64;

        let dead = var_x <= 1e-24;
        let (sigma_x, sigma_v, lambda) = if dead {
            (0.0, var_v.sqrt(), 0.0)
        } else {
            let sx = var_x.sqrt();
            let sv = var_v.sqrt();
            let lam = (1.0 - var_v / var_x).max(0.0).sqrt().max(LAMBDA_FLOOR);
            (sx, sv, lam)
        };
        components.push(ComponentStat {
            sigma_x,
            sigma_v,
            lambda,
            dead,
        });
    }

    Ok(ChannelStats {
        kinds: vec![kind],
        grid_hash: grid.content_hash(),
        components,
    })
}

// --- componentwise map operations -------------------------------------------------

/// Output of stage-1 enrollment over all components.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOneOutput {
    /// One symbol per component, in canonical order.
    pub symbols: Vec<u8>,
    /// One helper value in `[0, 1)` per component.
    pub helper: Vec<f64>,
}

impl StageOneOutput {
    /// The symbols as bits; only valid for `N = 2`.
    pub fn bit_symbols(&self) -> Result<Vec<u8>> {
        if self.symbols.iter().any(|&s| s > 1) {
            return Err(Error::Parameter(
                "symbols are not bits; stage 2 requires N = 2".into(),
            ));
        }
        Ok(self.symbols.clone())
    }
}

fn check_map_stats(maps: &[SpectralMap], stats: &ChannelStats) -> Result<usize> {
    let map_kinds: Vec<SpectralKind> = maps.iter().map(|m| m.kind).collect();
    if map_kinds != stats.kinds {
        return Err(Error::Shape(format!(
            "kind order mismatch: maps {map_kinds:?} vs stats {:?}",
            stats.kinds
        )));
    }
    if maps[0].grid.content_hash() != stats.grid_hash {
        return Err(Error::Configuration("grid hash mismatch".into()));
    }
    let count: usize = maps.iter().map(|m| 2 * m.values.len()).sum();
    if count != stats.len() {
        return Err(Error::Shape(format!(
            "component count mismatch: {count} vs {}",
            stats.len()
        )));
    }
    Ok(count)
}

/// Stage-1 enrollment over all components of the given maps.
pub fn gen1_map(
    maps: &[SpectralMap],
    stats: &ChannelStats,
    config: &QuantizerConfig,
) -> Result<StageOneOutput> {
    check_map_stats(maps, stats)?;
    let values = components_of(maps)?;
    let mut symbols = Vec::with_capacity(values.len());
    let mut helper = Vec::with_capacity(values.len());
    for (v, stat) in values.iter().zip(&stats.components) {
        let channel = stat.channel()?;
        let (s, w) = gen1(*v, &channel.model, config)?;
        symbols.push(s as u8);
        helper.push(w);
    }
    Ok(StageOneOutput { symbols, helper })
}

/// Decision boundaries for every component given stored helper data.
/// Precomputing these makes repeated verifications against one enrollment
/// a per-component comparison.
pub fn rec1_boundaries(
    helper: &[f64],
    stats: &ChannelStats,
    config: &QuantizerConfig,
) -> Result<Vec<Vec<f64>>> {
    if helper.len() != stats.len() {
        return Err(Error::Shape(format!(
            "helper length {} vs {} components",
            helper.len(),
            stats.len()
        )));
    }
    helper
        .iter()
        .zip(&stats.components)
        .map(|(w, stat)| decision_boundaries(*w, &stat.channel()?, config))
        .collect()
}

/// Classify every component of the given maps against precomputed boundaries.
pub fn classify_components(values: &[f64], boundaries: &[Vec<f64>]) -> Result<Vec<u8>> {
    if values.len() != boundaries.len() {
        return Err(Error::Shape(format!(
            "value count {} vs {} boundary sets",
            values.len(),
            boundaries.len()
        )));
    }
    Ok(values
        .iter()
        .zip(boundaries)
        .map(|(v, taus)| classify(*v, taus) as u8)
        .collect())
}

/// Stage-1 reconstruction over all components of the given maps.
pub fn rec1_map(
    maps: &[SpectralMap],
    helper: &[f64],
    stats: &ChannelStats,
    config: &QuantizerConfig,
) -> Result<Vec<u8>> {
    check_map_stats(maps, stats)?;
    let values = components_of(maps)?;
    let boundaries = rec1_boundaries(helper, stats, config)?;
    classify_components(&values, &boundaries)
}

// --- tradeoff curve -----------------------------------------------------------------

/// One point of the noise/information tradeoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub ratio: f64,
    /// Conditional mutual information between enrolled and reconstructed
    /// symbol given the helper data, in bits (symmetric-channel form).
    pub mutual_information: f64,
    pub error_rate: f64,
}

fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Mutual information of an `N`-ary symmetric channel with total error
/// probability `eps`: `log2 N - h(eps) - eps * log2(N - 1)`.
pub fn symmetric_channel_mi(n: usize, eps: f64) -> f64 {
    let cap = (n as f64).log2();
    (cap - binary_entropy(eps) - eps * ((n - 1) as f64).log2()).max(0.0)
}

/// Predicted bit error probability of the `N = 2` scheme for one component,
/// by quadrature over the helper value:
/// `err = integral over w of Q(lambda * sigma_x * (xi_1 - xi_0) / (2 sigma_v))`.
///
/// The quantile-gap profile `xi_1(w) - xi_0(w)` is component-independent and
/// cached across calls.
pub fn ber_integral(lambda: f64, sigma_x: f64, sigma_v: f64) -> f64 {
    if sigma_v <= 0.0 {
        return 0.0;
    }
    static GAPS: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
    let gaps = GAPS.get_or_init(|| {
        let model = GaussianModel::standard();
        let n = 4000;
        (0..n)
            .map(|i| {
                let w = (i as f64 + 0.5) / n as f64;
                model.inverse_cdf(0.5 + 0.5 * w) - model.inverse_cdf(0.5 * w)
            })
            .collect()
    });
    let scale = lambda * sigma_x / (2.0 * sigma_v);
    gaps.iter().map(|&g| q_tail(scale * g)).sum::<f64>() / gaps.len() as f64
}

/// Number of helper-data strata used by the Monte-Carlo tradeoff estimate.
pub const TRADEOFF_STRATA: usize = 64;

/// Monte-Carlo estimate of symbol error rate and conditional mutual
/// information across noise-to-signal ratios, under identical conditions
/// (`lambda = sqrt(1 - ratio^2)`). Deterministic given `seed` and independent
/// of thread count.
pub fn tradeoff_curve(
    n_intervals: usize,
    ratios: &[f64],
    samples_per_ratio: usize,
    seed: u64,
) -> Result<Vec<TradeoffPoint>> {
    let config = QuantizerConfig::equiprobable(n_intervals)?;
    if ratios.iter().any(|&r| r <= 0.0 || r >= 1.0 || !r.is_finite()) {
        return Err(Error::Parameter("ratios must lie in (0, 1)".into()));
    }
    if samples_per_ratio == 0 {
        return Err(Error::Parameter("need at least one sample".into()));
    }
    ratios
        .iter()
        .enumerate()
        .map(|(ri, &ratio)| {
            let (err_counts, totals) =
                simulate_ratio(&config, ratio, samples_per_ratio, seed ^ (ri as u64) << 32)?;
            let total: u64 = totals.iter().sum();
            let errors: u64 = err_counts.iter().sum();
            let mut mi = 0.0;
            for (e, t) in err_counts.iter().zip(&totals) {
                if *t > 0 {
                    let eps = *e as f64 / *t as f64;
                    mi += (*t as f64 / total as f64)
                        * symmetric_channel_mi(n_intervals, eps);
                }
            }
            Ok(TradeoffPoint {
                ratio,
                mutual_information: mi,
                error_rate: errors as f64 / total as f64,
            })
        })
        .collect()
}

/// Error and sample counts per helper-data stratum.
fn simulate_ratio(
    config: &QuantizerConfig,
    ratio: f64,
    samples: usize,
    seed: u64,
) -> Result<(Vec<u64>, Vec<u64>)> {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    let lambda = (1.0 - ratio * ratio).max(0.0).sqrt().max(LAMBDA_FLOOR);
    let channel = ComponentChannel {
        model: GaussianModel::standard(),
        lambda,
        sigma_v: ratio,
    };

    const CHUNKS: usize = 256;
    let per_chunk = samples.div_ceil(CHUNKS);

    let run_chunk = |chunk: usize| -> Result<(Vec<u64>, Vec<u64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed.wrapping_add(0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(chunk as u64 + 1)),
        );
        let n = per_chunk.min(samples - (chunk * per_chunk).min(samples));
        let mut errs = vec![0u64; TRADEOFF_STRATA];
        let mut tots = vec![0u64; TRADEOFF_STRATA];
        for _ in 0..n {
            let x: f64 = rng.sample(StandardNormal);
            let (s, w) = gen1(x, &channel.model, config)?;
            let noise: f64 = rng.sample(StandardNormal);
            let y = lambda * x + ratio * noise;
            let s_hat = rec1(y, w, &channel, config)?;
            let bin = ((w * TRADEOFF_STRATA as f64) as usize).min(TRADEOFF_STRATA - 1);
            tots[bin] += 1;
            if s_hat != s {
                errs[bin] += 1;
            }
        }
        Ok((errs, tots))
    };

    #[cfg(feature = "parallel")]
    let partials: Vec<Result<(Vec<u64>, Vec<u64>)>> =
        (0..CHUNKS).into_par_iter().map(run_chunk).collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<Result<(Vec<u64>, Vec<u64>)>> = (0..CHUNKS).map(run_chunk).collect();

    let mut errs = vec![0u64; TRADEOFF_STRATA];
    let mut tots = vec![0u64; TRADEOFF_STRATA];
    for partial in partials {
        let (e, t) = partial?;
        for i in 0..TRADEOFF_STRATA {
            errs[i] += e[i];
            tots[i] += t[i];
        }
    }
    Ok((errs, tots))
}
