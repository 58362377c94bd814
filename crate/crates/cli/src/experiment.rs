//! Orchestration of the experiment flow behind the CLI subcommands: corpus
//! synthesis, statistics estimation, code design, enrollment, verification,
//! and the evaluation sweep that emits `roc.csv`, `summary.json`, and
//! `codes.csv`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use pairspec_core::com::{HelperRecord, RandomCodebook, SaltSource};
use pairspec_core::eval::harness::{
    compute_corpus_maps, stage1_attempt_corpus, stage1_attempt_stats, BinarizationMode,
    CorpusMaps, ImpostorPolicy,
};
use pairspec_core::eval::{
    code_operating_points, codebook_operating_points, roc, CodebookPoint, Direction,
    OperatingPoint, RocCurve,
};
use pairspec_core::minutiae::{
    generate_corpus, read_minutia_file, write_minutia_file, MinutiaSet,
};
use pairspec_core::pipeline::{
    design_channels, enroll, estimate_corpus_stats, select_reliable, verify, ReliableSelection,
};
use pairspec_core::polar::{construct, CodeDescriptor, PolarCode};
use pairspec_core::zlhds::{ChannelStats, QuantizerConfig};

use crate::config::{ImpostorChoice, RunConfig};

pub fn synthesize_corpus(config: &RunConfig, seed: u64) -> Result<Vec<Vec<MinutiaSet>>> {
    generate_corpus(
        config.corpus.fingers,
        config.corpus.images_per_finger,
        config.corpus.z_mean,
        config.corpus.field_width,
        config.corpus.field_height,
        &config.noise.model(seed),
        config.corpus.severity_spread,
        seed,
    )
    .context("corpus synthesis failed")
}

/// Group a flat minutia file back into per-finger image lists, in first-seen
/// finger order.
pub fn group_by_finger(sets: Vec<MinutiaSet>) -> Vec<Vec<MinutiaSet>> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: std::collections::HashMap<String, Vec<MinutiaSet>> =
        std::collections::HashMap::new();
    for set in sets {
        if !groups.contains_key(&set.finger_id) {
            order.push(set.finger_id.clone());
        }
        groups.entry(set.finger_id.clone()).or_default().push(set);
    }
    order.into_iter().map(|id| groups.remove(&id).unwrap()).collect()
}

pub fn read_corpus(path: &Path) -> Result<Vec<Vec<MinutiaSet>>> {
    let sets = read_minutia_file(path)
        .with_context(|| format!("minutiae: reading {}", path.display()))?;
    if sets.is_empty() {
        bail!("minutiae: {} holds no records", path.display());
    }
    Ok(group_by_finger(sets))
}

pub fn estimate_stats_for(config: &RunConfig, corpus: &[Vec<MinutiaSet>]) -> Result<ChannelStats> {
    estimate_corpus_stats(corpus, &config.grid.grid(), &config.policy.kinds.kinds())
        .context("zlhds: channel statistics estimation failed")
}

pub fn write_stats(stats: &ChannelStats, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(stats)?)
        .with_context(|| format!("writing {}", path.display()))
}

pub fn read_stats(path: &Path) -> Result<ChannelStats> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing stats {}", path.display()))
}

/// Selection and per-position channel profile for the configured policy.
pub fn selection_and_channels(
    config: &RunConfig,
    stats: &ChannelStats,
) -> Result<(ReliableSelection, pairspec_core::polar::ChannelSpec)> {
    let selection = select_reliable(stats, config.selection.reliable_count)
        .context("pipeline: reliable-component selection failed")?;
    let effective = config.policy.policy().effective_stats(stats);
    let quantizer = QuantizerConfig::equiprobable(config.quantizer.n_intervals)
        .context("zlhds: bad quantizer")?;
    let channels = design_channels(&effective, &selection, &quantizer)
        .context("pipeline: channel design failed")?;
    Ok((selection, channels))
}

pub fn design_code(config: &RunConfig, stats: &ChannelStats, m: usize) -> Result<PolarCode> {
    let (_, channels) = selection_and_channels(config, stats)?;
    construct(&channels, m).context("polar: code construction failed")
}

pub fn write_code(code: &PolarCode, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(&code.descriptor())?)
        .with_context(|| format!("writing {}", path.display()))
}

pub fn read_code(path: &Path) -> Result<PolarCode> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let descriptor: CodeDescriptor = serde_json::from_str(&text)
        .with_context(|| format!("parsing code descriptor {}", path.display()))?;
    PolarCode::from_descriptor(&descriptor).context("polar: descriptor verification failed")
}

pub fn enroll_finger(
    config: &RunConfig,
    images: &[MinutiaSet],
    stats: &ChannelStats,
    code: &PolarCode,
    salts: &mut SaltSource,
) -> Result<HelperRecord> {
    let policy = config.policy.policy();
    if images.len() < policy.t {
        bail!(
            "pipeline: need {} enrollment images, file holds {}",
            policy.t,
            images.len()
        );
    }
    let quantizer = QuantizerConfig::equiprobable(config.quantizer.n_intervals)?;
    let selection = select_reliable(stats, config.selection.reliable_count)
        .context("pipeline: reliable-component selection failed")?;
    enroll(
        &images[..policy.t],
        &policy,
        &config.grid.grid(),
        stats,
        &quantizer,
        &selection,
        code,
        salts,
    )
    .context("pipeline: enrollment failed")
}

pub fn verify_image(
    config: &RunConfig,
    image: &MinutiaSet,
    record: &HelperRecord,
    stats: &ChannelStats,
    code: &PolarCode,
) -> Result<bool> {
    let quantizer = QuantizerConfig::equiprobable(config.quantizer.n_intervals)?;
    let (_, channels) = selection_and_channels(config, stats)?;
    verify(
        image,
        record,
        &config.grid.grid(),
        stats,
        &quantizer,
        code,
        &channels,
    )
    .context("pipeline: verification failed")
}

#[derive(Debug, Serialize)]
pub struct EvaluationSummary {
    pub seed: u64,
    pub eer: f64,
    pub genuine_ber: f64,
    pub impostor_ber: f64,
    pub genuine_count: usize,
    pub impostor_count: usize,
    pub config: RunConfig,
}

pub struct EvaluationOutput {
    pub curve: RocCurve,
    pub summary: EvaluationSummary,
    pub code_points: Vec<OperatingPoint>,
    pub codebook_points: Vec<CodebookPoint>,
}

fn impostor_policy(config: &RunConfig, seed: u64) -> ImpostorPolicy {
    match config.eval.impostor_policy {
        ImpostorChoice::All => ImpostorPolicy::AllVsAll,
        ImpostorChoice::OneRandom => ImpostorPolicy::OneRandomPerFinger {
            seed: seed ^ 0x1e7a_57a9,
        },
    }
}

pub fn evaluate(
    config: &RunConfig,
    corpus: &[Vec<MinutiaSet>],
    stats: &ChannelStats,
    seed: u64,
) -> Result<EvaluationOutput> {
    let grid = config.grid.grid();
    let kinds = config.policy.kinds.kinds();
    let policy = config.policy.policy();
    let quantizer = QuantizerConfig::equiprobable(config.quantizer.n_intervals)?;
    let (selection, channels) = selection_and_channels(config, stats)?;
    let impostors = impostor_policy(config, seed);

    let maps: CorpusMaps =
        compute_corpus_maps(corpus, &grid, &kinds).context("spectral: corpus transform failed")?;

    let attempt_stats = stage1_attempt_stats(
        &maps,
        stats,
        &quantizer,
        &policy,
        &selection,
        BinarizationMode::Zlhds,
        impostors,
    )
    .context("eval: reconstruction sweep failed")?;
    let curve = roc(&attempt_stats.hamming_samples(), Direction::LowerIsGenuine)
        .context("eval: roc failed")?;
    let (genuine_ber, impostor_ber) = attempt_stats.ber().context("eval: ber failed")?;

    let attempt_corpus = stage1_attempt_corpus(
        &maps,
        stats,
        &quantizer,
        &policy,
        &selection,
        BinarizationMode::Zlhds,
        impostors,
    )
    .context("eval: attempt corpus failed")?;
    let codes: Vec<PolarCode> = config
        .code
        .message_lengths
        .iter()
        .map(|&m| construct(&channels, m))
        .collect::<pairspec_core::Result<_>>()
        .context("polar: code family construction failed")?;
    let code_points = code_operating_points(&codes, &channels, &attempt_corpus, seed)
        .context("eval: code operating points failed")?;

    let codebook_points = if config.eval.codebook_ells.is_empty() {
        Vec::new()
    } else {
        let books: Vec<RandomCodebook> = config
            .eval
            .codebook_ells
            .iter()
            .map(|&ell| RandomCodebook::generate(ell, seed ^ (ell as u64) << 8))
            .collect::<pairspec_core::Result<_>>()
            .context("com: codebook generation failed")?;
        codebook_operating_points(&books, &attempt_corpus, seed)
            .context("eval: codebook operating points failed")?
    };

    Ok(EvaluationOutput {
        summary: EvaluationSummary {
            seed,
            eer: curve.eer,
            genuine_ber,
            impostor_ber,
            genuine_count: attempt_stats.genuine.len(),
            impostor_count: attempt_stats.impostor.len(),
            config: config.clone(),
        },
        curve,
        code_points,
        codebook_points,
    })
}

pub fn roc_csv(curve: &RocCurve) -> String {
    let mut out = String::from("threshold,far,frr\n");
    for p in &curve.points {
        let _ = writeln!(out, "{},{},{}", p.threshold, p.far, p.frr);
    }
    out
}

pub fn codes_csv(points: &[OperatingPoint]) -> String {
    let mut out = String::from("n,m,far,frr\n");
    for p in points {
        let _ = writeln!(out, "{},{},{},{}", p.n, p.m, p.far, p.frr);
    }
    out
}

pub fn codebooks_csv(points: &[CodebookPoint]) -> String {
    let mut out = String::from("ell,message_bits,far,frr\n");
    for p in points {
        let _ = writeln!(out, "{},{},{},{}", p.ell, p.message_bits, p.far, p.frr);
    }
    out
}

pub fn write_evaluation(out_dir: &Path, output: &EvaluationOutput) -> Result<()> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    fs::write(out_dir.join("roc.csv"), roc_csv(&output.curve))?;
    fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&output.summary)?,
    )?;
    fs::write(out_dir.join("codes.csv"), codes_csv(&output.code_points))?;
    if !output.codebook_points.is_empty() {
        fs::write(
            out_dir.join("codebooks.csv"),
            codebooks_csv(&output.codebook_points),
        )?;
    }
    Ok(())
}

/// The full experiment: synthesize, estimate, design, enroll every finger,
/// evaluate, and drop all artifacts into `out_dir`. Deterministic given the
/// seed except for enrollment salts and the digests they feed.
pub fn run_experiment(config: &RunConfig, out_dir: &Path, seed: u64) -> Result<()> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    let corpus = synthesize_corpus(config, seed)?;
    let flat: Vec<MinutiaSet> = corpus.iter().flatten().cloned().collect();
    write_minutia_file(&flat, &out_dir.join("corpus.mnt"))
        .context("minutiae: writing corpus failed")?;

    let stats = estimate_stats_for(config, &corpus)?;
    write_stats(&stats, &out_dir.join("stats.json"))?;

    let (_, channels) = selection_and_channels(config, &stats)?;
    let mut codes = Vec::new();
    for &m in &config.code.message_lengths {
        let code = construct(&channels, m).context("polar: code construction failed")?;
        write_code(&code, &out_dir.join(format!("code-m{m}.json")))?;
        codes.push(code);
    }

    let records_dir = out_dir.join("records");
    fs::create_dir_all(&records_dir)?;
    let mut salts = SaltSource::from_entropy();
    for finger in &corpus {
        let record = enroll_finger(config, finger, &stats, &codes[0], &mut salts)?;
        let path = records_dir.join(format!("{}.json", finger[0].finger_id));
        fs::write(&path, record.to_json().context("com: record serialization")?)
            .with_context(|| format!("writing {}", path.display()))?;
    }

    let output = evaluate(config, &corpus, &stats, seed)?;
    write_evaluation(out_dir, &output)?;
    Ok(())
}
