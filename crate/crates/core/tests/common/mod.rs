//! Shared test oracles, written independently of the library's evaluation
//! paths: a literal triple-loop spectral evaluator, quadrature for the
//! binary-quantizer error probability, and small statistical tests.

#![allow(dead_code)]

use pairspec_core::minutiae::{normalize_angle, MinutiaSet};
use pairspec_core::spectral::{SpectralGrid, SpectralKind, SpectralMap};
use statrs::function::erf::{erfc, erfc_inv};

/// Literal reference evaluator: for every grid point, loop over unordered
/// minutia pairs, fix the endpoint roles by comparing the invariant angles,
/// and accumulate the complex term from scratch.
pub fn brute_force_spectral(
    set: &MinutiaSet,
    grid: &SpectralGrid,
    kind: SpectralKind,
) -> Vec<(f64, f64)> {
    let ms = &set.minutiae;
    let mut out = Vec::new();
    for &q in &grid.q_values {
        for &r in &grid.r_values {
            let mut re = 0.0;
            let mut im = 0.0;
            for i in 0..ms.len() {
                for j in (i + 1)..ms.len() {
                    let beta_i =
                        normalize_angle((ms[j].y - ms[i].y).atan2(ms[j].x - ms[i].x) - ms[i].theta);
                    let beta_j =
                        normalize_angle((ms[i].y - ms[j].y).atan2(ms[i].x - ms[j].x) - ms[j].theta);
                    let i_first = if beta_i != beta_j {
                        beta_i < beta_j
                    } else {
                        (ms[i].theta, ms[i].x, ms[i].y) <= (ms[j].theta, ms[j].x, ms[j].y)
                    };
                    let (a, b) = if i_first { (&ms[i], &ms[j]) } else { (&ms[j], &ms[i]) };

                    let dx = a.x - b.x;
                    let dy = a.y - b.y;
                    let r_ab = (dx * dx + dy * dy).sqrt();
                    let phi_ab = dy.atan2(dx);
                    let window = (-(r - r_ab) * (r - r_ab) / (2.0 * grid.sigma * grid.sigma)).exp();
                    let phase = match kind {
                        SpectralKind::XTheta => q as f64 * phi_ab + (b.theta - a.theta),
                        SpectralKind::XBeta => (q - 2) as f64 * phi_ab + (a.theta + b.theta),
                    };
                    re += window * phase.cos();
                    im += window * phase.sin();
                }
            }
            out.push((re, im));
        }
    }
    out
}

/// Largest absolute difference between a map and reference values, scaled by
/// the map's peak magnitude (floored at 1).
pub fn max_scaled_deviation(map: &SpectralMap, reference: &[(f64, f64)]) -> f64 {
    let peak = map
        .values
        .iter()
        .map(|v| v.norm())
        .fold(1.0f64, f64::max);
    map.values
        .iter()
        .zip(reference)
        .map(|(v, (re, im))| ((v.re - re).hypot(v.im - im)) / peak)
        .fold(0.0, f64::max)
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn std_normal_quantile(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

pub fn q_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Quadrature oracle for the binary zero-leakage scheme's error probability:
/// average over the helper value of `Q(lambda(xi_1 - xi_0) / (2 sigma_v))`,
/// for a unit-variance source.
pub fn ber_quadrature_oracle(lambda: f64, sigma_v: f64) -> f64 {
    let n = 20_000;
    let mut acc = 0.0;
    for i in 0..n {
        let w = (i as f64 + 0.5) / n as f64;
        let xi0 = std_normal_quantile(0.5 * w);
        let xi1 = std_normal_quantile(0.5 + 0.5 * w);
        acc += q_tail(lambda * (xi1 - xi0) / (2.0 * sigma_v));
    }
    acc / n as f64
}

/// One-sample Kolmogorov-Smirnov p-value against the uniform distribution on
/// `[0, 1)`.
pub fn ks_uniform_p_value(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &w) in samples.iter().enumerate() {
        let lo = w - i as f64 / n;
        let hi = (i as f64 + 1.0) / n - w;
        d = d.max(lo).max(hi);
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    kolmogorov_tail(lambda)
}

fn kolmogorov_tail(lambda: f64) -> f64 {
    let mut sum = 0.0;
    for j in 1..=100 {
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Plug-in mutual information in bits between a binned `[0, 1)` variable and
/// a small discrete symbol.
pub fn binned_mutual_information(ws: &[f64], symbols: &[usize], w_bins: usize, n_symbols: usize) -> f64 {
    assert_eq!(ws.len(), symbols.len());
    let n = ws.len() as f64;
    let mut joint = vec![vec![0.0f64; n_symbols]; w_bins];
    for (&w, &s) in ws.iter().zip(symbols) {
        let b = ((w * w_bins as f64) as usize).min(w_bins - 1);
        joint[b][s] += 1.0;
    }
    let mut p_w = vec![0.0; w_bins];
    let mut p_s = vec![0.0; n_symbols];
    for (b, row) in joint.iter().enumerate() {
        for (s, &c) in row.iter().enumerate() {
            p_w[b] += c / n;
            p_s[s] += c / n;
        }
    }
    let mut mi = 0.0;
    for (b, row) in joint.iter().enumerate() {
        for (s, &c) in row.iter().enumerate() {
            if c > 0.0 {
                let p = c / n;
                mi += p * (p / (p_w[b] * p_s[s])).log2();
            }
        }
    }
    mi
}

/// Chi-square p-value for uniformity over `bins` equal-width bins of
/// `[0, range)`.
pub fn chi_square_uniform_p_value(samples: &[f64], range: f64, bins: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let mut counts = vec![0.0f64; bins];
    for &x in samples {
        let b = ((x / range * bins as f64) as usize).min(bins - 1);
        counts[b] += 1.0;
    }
    let expected = samples.len() as f64 / bins as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&o| (o - expected) * (o - expected) / expected)
        .sum();
    let dist = ChiSquared::new((bins - 1) as f64).unwrap();
    1.0 - dist.cdf(chi2)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    pearson(&ra, &rb)
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).unwrap());
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va.sqrt() * vb.sqrt())
}
