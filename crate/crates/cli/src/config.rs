//! Experiment configuration: one TOML (or JSON) file defines the corpus, the
//! grid, the quantizer, the enrollment policy, component selection, code
//! family, and evaluation protocol.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use pairspec_core::minutiae::NoiseModel;
use pairspec_core::pipeline::{EnrollMethod, EnrollmentPolicy};
use pairspec_core::spectral::{SpectralGrid, SpectralKind};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub corpus: CorpusConfig,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub quantizer: QuantizerSection,
    pub policy: PolicyConfig,
    pub selection: SelectionConfig,
    pub code: CodeConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub fingers: usize,
    pub images_per_finger: usize,
    #[serde(default = "default_z_mean")]
    pub z_mean: f64,
    #[serde(default = "default_field")]
    pub field_width: f64,
    #[serde(default = "default_field")]
    pub field_height: f64,
    /// Per-image noise-severity spread (log-uniform factor band); 1 disables.
    #[serde(default = "default_severity")]
    pub severity_spread: f64,
}

fn default_z_mean() -> f64 {
    35.0
}
fn default_field() -> f64 {
    500.0
}
fn default_severity() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub jitter_sigma: f64,
    pub angle_sigma: f64,
    pub drop_prob: f64,
    pub insert_rate: f64,
    #[serde(default)]
    pub global_shift_max: f64,
    #[serde(default)]
    pub global_rot_max: f64,
}

impl NoiseConfig {
    pub fn model(&self, seed: u64) -> NoiseModel {
        NoiseModel {
            jitter_sigma: self.jitter_sigma,
            angle_sigma: self.angle_sigma,
            drop_prob: self.drop_prob,
            insert_rate: self.insert_rate,
            global_shift_max: self.global_shift_max,
            global_rot_max: self.global_rot_max,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Radii in pixels; defaults to 16, 22, ..., 130.
    #[serde(default)]
    pub r_values: Option<Vec<f64>>,
    /// Integer harmonics; defaults to 1..=16.
    #[serde(default)]
    pub q_values: Option<Vec<i32>>,
}

fn default_sigma() -> f64 {
    3.2
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            sigma: default_sigma(),
            r_values: None,
            q_values: None,
        }
    }
}

impl GridConfig {
    pub fn grid(&self) -> SpectralGrid {
        let mut grid = SpectralGrid::default_grid(self.sigma);
        if let Some(r) = &self.r_values {
            grid.r_values = r.clone();
        }
        if let Some(q) = &self.q_values {
            grid.q_values = q.clone();
        }
        grid
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizerSection {
    #[serde(default = "default_intervals")]
    pub n_intervals: usize,
}

fn default_intervals() -> usize {
    2
}

impl Default for QuantizerSection {
    fn default() -> Self {
        Self {
            n_intervals: default_intervals(),
        }
    }
}

/// Which spectral functions feed the bit string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindsChoice {
    XTheta,
    XBeta,
    Fusion,
}

impl KindsChoice {
    pub fn kinds(&self) -> Vec<SpectralKind> {
        match self {
            KindsChoice::XTheta => vec![SpectralKind::XTheta],
            KindsChoice::XBeta => vec![SpectralKind::XBeta],
            KindsChoice::Fusion => vec![SpectralKind::XTheta, SpectralKind::XBeta],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub method: EnrollMethod,
    #[serde(default = "default_t")]
    pub t: usize,
    pub kinds: KindsChoice,
}

fn default_t() -> usize {
    1
}

impl PolicyConfig {
    pub fn policy(&self) -> EnrollmentPolicy {
        EnrollmentPolicy {
            method: self.method,
            t: self.t,
            kinds: self.kinds.kinds(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    pub reliable_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeConfig {
    pub message_lengths: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImpostorChoice {
    All,
    OneRandom,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    #[serde(default = "default_impostors")]
    pub impostor_policy: ImpostorChoice,
    /// Random-codebook sizes to evaluate; requires 1024 retained components.
    #[serde(default)]
    pub codebook_ells: Vec<usize>,
}

fn default_impostors() -> ImpostorChoice {
    ImpostorChoice::All
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            impostor_policy: default_impostors(),
            codebook_ells: Vec::new(),
        }
    }
}

impl RunConfig {
    /// Load from TOML (default) or JSON (`.json` extension).
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)
                .with_context(|| format!("parsing JSON config {}", path.display()))?
        } else {
            toml::from_str(&text)
                .with_context(|| format!("parsing TOML config {}", path.display()))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.policy
            .policy()
            .validate()
            .context("invalid [policy]")?;
        self.noise
            .model(0)
            .validate()
            .context("invalid [noise]")?;
        self.grid.grid().validate().context("invalid [grid]")?;
        let components = 2 * self.grid.grid().len() * self.policy.kinds.kinds().len();
        if self.selection.reliable_count == 0 || self.selection.reliable_count > components {
            bail!(
                "[selection] reliable_count must be in [1, {components}], got {}",
                self.selection.reliable_count
            );
        }
        // The code operates on exactly the retained bits; no padding.
        if !self.selection.reliable_count.is_power_of_two() {
            bail!(
                "[selection] reliable_count must be a power of two to match the code length, got {}",
                self.selection.reliable_count
            );
        }
        if self.quantizer.n_intervals != 2 && self.quantizer.n_intervals != 3 {
            bail!(
                "[quantizer] n_intervals must be 2 or 3, got {}",
                self.quantizer.n_intervals
            );
        }
        if self.code.message_lengths.is_empty() {
            bail!("[code] message_lengths must not be empty");
        }
        for &m in &self.code.message_lengths {
            if m > self.selection.reliable_count {
                bail!(
                    "[code] message length {m} exceeds the retained bit count {}",
                    self.selection.reliable_count
                );
            }
        }
        if self.corpus.images_per_finger <= self.policy.t
            && !matches!(self.policy.method, EnrollMethod::E1)
        {
            bail!(
                "[corpus] images_per_finger = {} leaves no probe images for t = {}",
                self.corpus.images_per_finger,
                self.policy.t
            );
        }
        if !self.eval.codebook_ells.is_empty() && self.selection.reliable_count != 1024 {
            bail!("[eval] codebook_ells requires reliable_count = 1024");
        }
        Ok(())
    }
}
