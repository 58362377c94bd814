//! `pairspec`: synthetic fingerprint template-protection experiments from the
//! command line. Every subcommand reads one TOML/JSON config file plus
//! positional paths; `--seed` overrides the config seed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use pairspec_cli::config::RunConfig;
use pairspec_cli::experiment;
use pairspec_core::com::{HelperRecord, SaltSource};
use pairspec_core::minutiae::{read_minutia_file, write_minutia_file, MinutiaSet};
use pairspec_core::spectral::{spectral_xbeta, spectral_xtheta, SpectralKind};

const CONFIG_KEYS: &str = "\
Config file keys (TOML; JSON accepted with the same structure):
  seed                              base seed for all randomized steps
  [corpus]  fingers, images_per_finger, z_mean, field_width, field_height,
            severity_spread         per-image noise-severity factor band (>= 1)
  [noise]   jitter_sigma, angle_sigma, drop_prob, insert_rate,
            global_shift_max, global_rot_max
  [grid]    sigma, r_values (optional), q_values (optional)
  [quantizer] n_intervals           2 or 3 (stage 2 requires 2)
  [policy]  method (e1|e2|e3), t, kinds (xtheta|xbeta|fusion)
  [selection] reliable_count        retained components = code length (power of two)
  [code]    message_lengths         polar message lengths to design/evaluate
  [eval]    impostor_policy (all|one-random), codebook_ells (needs 1024 retained)";

#[derive(Parser)]
#[command(
    name = "pairspec",
    version,
    about = "Minutia-pair spectral representations with a two-stage helper-data system",
    after_long_help = CONFIG_KEYS
)]
struct Cli {
    /// Override the config file's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Size of the worker thread pool (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a corpus of minutia sets and write it as a minutia file.
    #[command(after_long_help = CONFIG_KEYS)]
    GenData {
        config: PathBuf,
        /// Output minutia file.
        out: PathBuf,
    },
    /// Dump the spectral maps of one record as CSV (kind,q,R,re,im).
    #[command(after_long_help = CONFIG_KEYS)]
    Transform {
        config: PathBuf,
        /// Input minutia file.
        input: PathBuf,
        /// Output CSV path.
        out: PathBuf,
        /// Which record of the input file to transform.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Estimate per-component channel statistics from a corpus.
    #[command(after_long_help = CONFIG_KEYS)]
    Stats {
        config: PathBuf,
        /// Corpus minutia file (>= 2 fingers, >= 2 images each).
        corpus: PathBuf,
        /// Output statistics JSON.
        out: PathBuf,
    },
    /// Construct a polar code tuned to the estimated channel statistics.
    #[command(after_long_help = CONFIG_KEYS)]
    DesignCode {
        config: PathBuf,
        /// Statistics JSON from `stats`.
        stats: PathBuf,
        /// Output code descriptor JSON.
        out: PathBuf,
        /// Message length; defaults to the first entry of [code].message_lengths.
        #[arg(long)]
        message_len: Option<usize>,
    },
    /// Enroll a finger from the first t records of a minutia file.
    #[command(after_long_help = CONFIG_KEYS)]
    Enroll {
        config: PathBuf,
        /// Minutia file holding the enrollment images (one finger).
        images: PathBuf,
        /// Statistics JSON.
        stats: PathBuf,
        /// Code descriptor JSON.
        code: PathBuf,
        /// Output helper-record JSON.
        out: PathBuf,
    },
    /// Verify one image against a helper record.
    /// Exits 0 on accept, 1 on reject, 2 on error.
    #[command(after_long_help = CONFIG_KEYS)]
    Verify {
        config: PathBuf,
        /// Minutia file whose record `--index` is the probe image.
        image: PathBuf,
        /// Helper-record JSON from `enroll`.
        record: PathBuf,
        /// Statistics JSON.
        stats: PathBuf,
        /// Code descriptor JSON.
        code: PathBuf,
        /// Which record of the image file to verify.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Sweep the corpus and emit roc.csv, summary.json, and codes.csv.
    #[command(after_long_help = CONFIG_KEYS)]
    Evaluate {
        config: PathBuf,
        /// Corpus minutia file.
        corpus: PathBuf,
        /// Output directory.
        out_dir: PathBuf,
    },
    /// Run the whole experiment into a fresh artifact directory.
    #[command(after_long_help = CONFIG_KEYS)]
    Run {
        config: PathBuf,
        /// Output directory.
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore a failure to rebuild the pool; it only happens if it was
        // already initialized, in which case the default stands.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match dispatch(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Accept) => {
            println!("accept");
            ExitCode::SUCCESS
        }
        Ok(Outcome::Reject) => {
            println!("reject");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("pairspec: {err:#}");
            ExitCode::from(2)
        }
    }
}

enum Outcome {
    Done,
    Accept,
    Reject,
}

fn load_config(path: &Path, seed_override: Option<u64>) -> Result<(RunConfig, u64)> {
    let config = RunConfig::load(path)?;
    let seed = seed_override.unwrap_or(config.seed);
    Ok((config, seed))
}

fn record_at(path: &Path, index: usize) -> Result<MinutiaSet> {
    let sets = read_minutia_file(path)
        .with_context(|| format!("minutiae: reading {}", path.display()))?;
    sets.into_iter()
        .nth(index)
        .with_context(|| format!("minutiae: {} has no record {index}", path.display()))
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::GenData { config, out } => {
            let (config, seed) = load_config(&config, cli.seed)?;
            let corpus = experiment::synthesize_corpus(&config, seed)?;
            let flat: Vec<MinutiaSet> = corpus.into_iter().flatten().collect();
            write_minutia_file(&flat, &out).context("minutiae: writing corpus failed")?;
            println!("wrote {} records to {}", flat.len(), out.display());
            Ok(Outcome::Done)
        }
        Command::Transform {
            config,
            input,
            out,
            index,
        } => {
            let (config, _) = load_config(&config, cli.seed)?;
            let set = record_at(&input, index)?;
            let grid = config.grid.grid();
            let mut csv = String::new();
            for kind in config.policy.kinds.kinds() {
                let map = match kind {
                    SpectralKind::XTheta => spectral_xtheta(&set, &grid),
                    SpectralKind::XBeta => spectral_xbeta(&set, &grid),
                }
                .context("spectral: transform failed")?;
                if csv.is_empty() {
                    csv = map.to_csv();
                } else {
                    // Keep a single header across kinds.
                    csv.push_str(map.to_csv().split_once('\n').unwrap().1);
                }
            }
            std::fs::write(&out, csv).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote spectral dump to {}", out.display());
            Ok(Outcome::Done)
        }
        Command::Stats {
            config,
            corpus,
            out,
        } => {
            let (config, _) = load_config(&config, cli.seed)?;
            let corpus = experiment::read_corpus(&corpus)?;
            let stats = experiment::estimate_stats_for(&config, &corpus)?;
            experiment::write_stats(&stats, &out)?;
            println!("wrote statistics for {} components to {}", stats.len(), out.display());
            Ok(Outcome::Done)
        }
        Command::DesignCode {
            config,
            stats,
            out,
            message_len,
        } => {
            let (config, _) = load_config(&config, cli.seed)?;
            let stats = experiment::read_stats(&stats)?;
            let m = message_len.unwrap_or(config.code.message_lengths[0]);
            if !config.code.message_lengths.contains(&m) && message_len.is_none() {
                bail!("no message length configured");
            }
            let code = experiment::design_code(&config, &stats, m)?;
            experiment::write_code(&code, &out)?;
            println!("wrote code descriptor n={} m={} to {}", code.n(), code.m(), out.display());
            Ok(Outcome::Done)
        }
        Command::Enroll {
            config,
            images,
            stats,
            code,
            out,
        } => {
            let (config, seed) = load_config(&config, cli.seed)?;
            let sets = read_minutia_file(&images)
                .with_context(|| format!("minutiae: reading {}", images.display()))?;
            let stats = experiment::read_stats(&stats)?;
            let code = experiment::read_code(&code)?;
            // A fixed --seed makes the whole record reproducible, salts
            // included; without it salts come from the OS.
            let mut salts = if cli.seed.is_some() {
                SaltSource::from_seed(seed)
            } else {
                SaltSource::from_entropy()
            };
            let record = experiment::enroll_finger(&config, &sets, &stats, &code, &mut salts)?;
            std::fs::write(&out, record.to_json().context("com: record serialization")?)
                .with_context(|| format!("writing {}", out.display()))?;
            println!("enrolled finger {} to {}", sets[0].finger_id, out.display());
            Ok(Outcome::Done)
        }
        Command::Verify {
            config,
            image,
            record,
            stats,
            code,
            index,
        } => {
            let (config, _) = load_config(&config, cli.seed)?;
            let probe = record_at(&image, index)?;
            let record_text = std::fs::read_to_string(&record)
                .with_context(|| format!("reading {}", record.display()))?;
            let record =
                HelperRecord::from_json(&record_text).context("com: record parse failed")?;
            let stats = experiment::read_stats(&stats)?;
            let code = experiment::read_code(&code)?;
            let accept = experiment::verify_image(&config, &probe, &record, &stats, &code)?;
            Ok(if accept {
                Outcome::Accept
            } else {
                Outcome::Reject
            })
        }
        Command::Evaluate {
            config,
            corpus,
            out_dir,
        } => {
            let (config, seed) = load_config(&config, cli.seed)?;
            let corpus = experiment::read_corpus(&corpus)?;
            let stats = experiment::estimate_stats_for(&config, &corpus)?;
            let output = experiment::evaluate(&config, &corpus, &stats, seed)?;
            experiment::write_evaluation(&out_dir, &output)?;
            experiment::write_stats(&stats, &out_dir.join("stats.json"))?;
            println!(
                "eer {:.4}, genuine ber {:.4}, impostor ber {:.4} -> {}",
                output.summary.eer,
                output.summary.genuine_ber,
                output.summary.impostor_ber,
                out_dir.display()
            );
            Ok(Outcome::Done)
        }
        Command::Run { config, out_dir } => {
            let (config, seed) = load_config(&config, cli.seed)?;
            experiment::run_experiment(&config, &out_dir, seed)?;
            println!("experiment artifacts in {}", out_dir.display());
            Ok(Outcome::Done)
        }
    }
}
