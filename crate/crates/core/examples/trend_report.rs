//! Prints the headline trend metrics on a synthetic corpus: bit error rates
//! and equal error rates across the processing stages, for each enrollment
//! method. Handy for eyeballing how noise-model changes move the numbers.
//!
//! Usage: cargo run --release -p pairspec-core --example trend_report [seed]

use pairspec_core::eval::harness::{
    analog_roc_samples, analog_scores, compute_corpus_maps, stage1_attempt_stats,
    BinarizationMode, CorpusMaps, ImpostorPolicy,
};
use pairspec_core::eval::{roc, Direction};
use pairspec_core::minutiae::{generate_corpus, NoiseModel, DEFAULT_SEVERITY_SPREAD};
use pairspec_core::pipeline::{
    estimate_corpus_stats, select_reliable, EnrollMethod, EnrollmentPolicy,
};
use pairspec_core::spectral::{SpectralGrid, SpectralKind};
use pairspec_core::zlhds::QuantizerConfig;

fn kind_subset(maps: &CorpusMaps, kinds: &[SpectralKind]) -> CorpusMaps {
    let idx: Vec<usize> = kinds
        .iter()
        .map(|k| maps.kinds.iter().position(|m| m == k).unwrap())
        .collect();
    CorpusMaps {
        grid: maps.grid.clone(),
        kinds: kinds.to_vec(),
        fingers: maps
            .fingers
            .iter()
            .map(|f| {
                f.iter()
                    .map(|img| idx.iter().map(|&i| img[i].clone()).collect())
                    .collect()
            })
            .collect(),
    }
}

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2024);
    let grid = SpectralGrid::default_grid(3.2);
    let noise = NoiseModel::default_synthetic(0);
    println!("noise model: {noise:?}");
    let corpus = generate_corpus(100, 6, 35.0, 500.0, 500.0, &noise, DEFAULT_SEVERITY_SPREAD, seed).unwrap();
    let kinds = vec![SpectralKind::XTheta, SpectralKind::XBeta];
    let stats = estimate_corpus_stats(&corpus, &grid, &kinds).unwrap();
    let maps = compute_corpus_maps(&corpus, &grid, &kinds).unwrap();
    let config = QuantizerConfig::equiprobable(2).unwrap();

    let ratios: Vec<f64> = stats
        .components
        .iter()
        .map(|c| c.noise_ratio())
        .collect();
    let mut sorted = ratios.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!(
        "noise-to-signal ratio: min {:.3}  median {:.3}  max {:.3}",
        sorted[0],
        sorted[sorted.len() / 2],
        sorted[sorted.len() - 1]
    );

    let theta_maps = kind_subset(&maps, &[SpectralKind::XTheta]);
    let theta_stats = {
        let comps = stats.components[..640].to_vec();
        pairspec_core::zlhds::ChannelStats {
            kinds: vec![SpectralKind::XTheta],
            grid_hash: stats.grid_hash.clone(),
            components: comps,
        }
    };

    for (label, method, t) in [
        ("E1", EnrollMethod::E1, 1usize),
        ("E2 t=3", EnrollMethod::E2, 3),
        ("E3 t=3", EnrollMethod::E3, 3),
    ] {
        let policy = EnrollmentPolicy {
            method,
            t,
            kinds: vec![SpectralKind::XTheta],
        };
        let all = select_reliable(&theta_stats, 640).unwrap();
        let sel = select_reliable(&theta_stats, 512).unwrap();
        let impostors = ImpostorPolicy::OneRandomPerFinger { seed: 7 };
        let hard = stage1_attempt_stats(
            &theta_maps,
            &theta_stats,
            &config,
            &policy,
            &all,
            BinarizationMode::HardThreshold,
            impostors,
        )
        .unwrap();
        let zl = stage1_attempt_stats(
            &theta_maps,
            &theta_stats,
            &config,
            &policy,
            &all,
            BinarizationMode::Zlhds,
            impostors,
        )
        .unwrap();
        let zl_sel = stage1_attempt_stats(
            &theta_maps,
            &theta_stats,
            &config,
            &policy,
            &sel,
            BinarizationMode::Zlhds,
            impostors,
        )
        .unwrap();
        let (hg, hi) = hard.ber().unwrap();
        let (zg, zi) = zl.ber().unwrap();
        let eer_hard = roc(&hard.hamming_samples(), Direction::LowerIsGenuine)
            .unwrap()
            .eer;
        let eer_zl = roc(&zl.hamming_samples(), Direction::LowerIsGenuine)
            .unwrap()
            .eer;
        let eer_sel = roc(&zl_sel.hamming_samples(), Direction::LowerIsGenuine)
            .unwrap()
            .eer;
        println!(
            "{label:7} BER hard {hg:.3}/{hi:.3}  zlhds {zg:.3}/{zi:.3}  EER hard {:.4} zlhds {:.4} zlhds+rc {:.4}",
            eer_hard, eer_zl, eer_sel
        );
    }

    // Analog-domain comparison, E1.
    let policy = EnrollmentPolicy {
        method: EnrollMethod::E1,
        t: 1,
        kinds: kinds.clone(),
    };
    let samples = analog_scores(&maps, &policy, ImpostorPolicy::OneRandomPerFinger { seed: 7 })
        .unwrap();
    let eer_theta = roc(
        &analog_roc_samples(&samples, Some(0)),
        Direction::HigherIsGenuine,
    )
    .unwrap()
    .eer;
    let eer_beta = roc(
        &analog_roc_samples(&samples, Some(1)),
        Direction::HigherIsGenuine,
    )
    .unwrap()
    .eer;
    let eer_fused = roc(
        &analog_roc_samples(&samples, None),
        Direction::HigherIsGenuine,
    )
    .unwrap()
    .eer;
    println!(
        "analog E1: EER xtheta {eer_theta:.4}  xbeta {eer_beta:.4}  fused {eer_fused:.4}"
    );
}
