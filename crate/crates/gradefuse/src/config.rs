//! Settings from command-line flags and an optional flat key-value file.
//!
//! The file is TOML without tables; its keys are the long flag names:
//!
//! ```toml
//! rough-alpha = 1.0
//! greedy-fraction = 0.8
//! representation = "rank"
//! students = 60        # simulator keys live in the same file
//! ```
//!
//! The `config` object echoed in a JSON report is also accepted (its enum
//! spellings are aliases), so a report's settings can be replayed.
//!
//! Flags win over the file. `GRADEFUSE_CONFIG` names a default file when
//! `--config` is not given.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use gradefuse_core::fse::{ReliabilityForm, WeightMode};
use gradefuse_core::simulator::SimSpec;
use gradefuse_core::{Config, Representation, ReviewerId};
use serde::Deserialize;

use crate::Error;

pub const CONFIG_ENV: &str = "GRADEFUSE_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepresentationArg {
    #[serde(alias = "raw_scores")]
    Raw,
    #[serde(alias = "rank_surrogate")]
    Rank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightModeArg {
    #[serde(alias = "paper_literal")]
    Literal,
    #[serde(alias = "renormalized")]
    Renorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReliabilityArg {
    /// Proportional to retained-score counts.
    #[serde(alias = "retained_count")]
    Retained,
    /// Inverse screened counts, normalized.
    #[serde(alias = "inverse_screened")]
    Inverse,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PipelineArgs {
    /// Rough-screen multiplier on the per-student standard deviation [default: 1.0]
    #[arg(long)]
    pub rough_alpha: Option<f64>,
    /// Share of rough flags confirmed greedily [default: 0.8]
    #[arg(long)]
    pub greedy_fraction: Option<f64>,
    /// Significance level of the class comparison tests [default: 0.05]
    #[arg(long)]
    pub test_alpha: Option<f64>,
    /// Blend weight of the rescaling transforms [default: test-alpha]
    #[arg(long)]
    pub blend_alpha: Option<f64>,
    /// Values used for screening [default: raw for 1 class, rank otherwise]
    #[arg(long, value_enum)]
    pub representation: Option<RepresentationArg>,
    /// Handling of screened cells during fusion [default: literal]
    #[arg(long, value_enum)]
    pub weight_mode: Option<WeightModeArg>,
    /// Reliability weight form [default: retained]
    #[arg(long, value_enum)]
    pub reliability: Option<ReliabilityArg>,
    /// Reviewer whose score range frames the display scores [default: first]
    #[arg(long)]
    pub reference_reviewer: Option<String>,
    /// Recompute decreases after each confirmed removal
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub strict_greedy: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
}

const PIPELINE_KEYS: &[&str] = &[
    "rough-alpha",
    "greedy-fraction",
    "test-alpha",
    "blend-alpha",
    "representation",
    "weight-mode",
    "reliability",
    "reference-reviewer",
    "strict-greedy",
    "seed",
];

impl PipelineArgs {
    /// Field-wise `self` if set, else `fallback`.
    pub fn or(self, fallback: Self) -> Self {
        Self {
            rough_alpha: self.rough_alpha.or(fallback.rough_alpha),
            greedy_fraction: self.greedy_fraction.or(fallback.greedy_fraction),
            test_alpha: self.test_alpha.or(fallback.test_alpha),
            blend_alpha: self.blend_alpha.or(fallback.blend_alpha),
            representation: self.representation.or(fallback.representation),
            weight_mode: self.weight_mode.or(fallback.weight_mode),
            reliability: self.reliability.or(fallback.reliability),
            reference_reviewer: self.reference_reviewer.or(fallback.reference_reviewer),
            strict_greedy: self.strict_greedy.or(fallback.strict_greedy),
            seed: self.seed.or(fallback.seed),
        }
    }

    pub fn to_config(&self) -> Config {
        let d = Config::default();
        Config {
            rough_alpha: self.rough_alpha.unwrap_or(d.rough_alpha),
            greedy_fraction: self.greedy_fraction.unwrap_or(d.greedy_fraction),
            test_alpha: self.test_alpha.unwrap_or(d.test_alpha),
            blend_alpha: self.blend_alpha,
            representation: self.representation.map(|r| match r {
                RepresentationArg::Raw => Representation::RawScores,
                RepresentationArg::Rank => Representation::RankSurrogate,
            }),
            weight_mode: match self.weight_mode {
                Some(WeightModeArg::Renorm) => WeightMode::Renormalized,
                Some(WeightModeArg::Literal) | None => WeightMode::PaperLiteral,
            },
            reliability: match self.reliability {
                Some(ReliabilityArg::Inverse) => ReliabilityForm::InverseScreened,
                Some(ReliabilityArg::Retained) | None => ReliabilityForm::RetainedCount,
            },
            reference_reviewer: self.reference_reviewer.as_deref().map(ReviewerId::from),
            strict_greedy: self.strict_greedy.unwrap_or(d.strict_greedy),
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimArgs {
    /// Students per class [default: 50]
    #[arg(long)]
    pub students: Option<usize>,
    /// [default: 3]
    #[arg(long)]
    pub reviewers: Option<usize>,
    /// [default: 1]
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub ability_min: Option<f64>,
    #[arg(long)]
    pub ability_max: Option<f64>,
    #[arg(long)]
    pub bias_min: Option<f64>,
    #[arg(long)]
    pub bias_max: Option<f64>,
    #[arg(long)]
    pub scale_min: Option<f64>,
    #[arg(long)]
    pub scale_max: Option<f64>,
    #[arg(long)]
    pub class_bias_min: Option<f64>,
    #[arg(long)]
    pub class_bias_max: Option<f64>,
    /// [default: 3]
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// [default: 0.1]
    #[arg(long)]
    pub anomaly_rate: Option<f64>,
    /// [default: 20]
    #[arg(long)]
    pub anomaly_magnitude: Option<f64>,
}

const SIM_KEYS: &[&str] = &[
    "students",
    "reviewers",
    "classes",
    "ability-min",
    "ability-max",
    "bias-min",
    "bias-max",
    "scale-min",
    "scale-max",
    "class-bias-min",
    "class-bias-max",
    "noise-std",
    "anomaly-rate",
    "anomaly-magnitude",
];

impl SimArgs {
    pub fn or(self, fallback: Self) -> Self {
        Self {
            students: self.students.or(fallback.students),
            reviewers: self.reviewers.or(fallback.reviewers),
            classes: self.classes.or(fallback.classes),
            ability_min: self.ability_min.or(fallback.ability_min),
            ability_max: self.ability_max.or(fallback.ability_max),
            bias_min: self.bias_min.or(fallback.bias_min),
            bias_max: self.bias_max.or(fallback.bias_max),
            scale_min: self.scale_min.or(fallback.scale_min),
            scale_max: self.scale_max.or(fallback.scale_max),
            class_bias_min: self.class_bias_min.or(fallback.class_bias_min),
            class_bias_max: self.class_bias_max.or(fallback.class_bias_max),
            noise_std: self.noise_std.or(fallback.noise_std),
            anomaly_rate: self.anomaly_rate.or(fallback.anomaly_rate),
            anomaly_magnitude: self.anomaly_magnitude.or(fallback.anomaly_magnitude),
        }
    }

    pub fn to_spec(&self, seed: u64) -> SimSpec {
        let d = SimSpec::default();
        SimSpec {
            students: self.students.unwrap_or(d.students),
            reviewers: self.reviewers.unwrap_or(d.reviewers),
            classes: self.classes.unwrap_or(d.classes),
            ability_min: self.ability_min.unwrap_or(d.ability_min),
            ability_max: self.ability_max.unwrap_or(d.ability_max),
            bias_min: self.bias_min.unwrap_or(d.bias_min),
            bias_max: self.bias_max.unwrap_or(d.bias_max),
            scale_min: self.scale_min.unwrap_or(d.scale_min),
            scale_max: self.scale_max.unwrap_or(d.scale_max),
            class_bias_min: self.class_bias_min.unwrap_or(d.class_bias_min),
            class_bias_max: self.class_bias_max.unwrap_or(d.class_bias_max),
            noise_std: self.noise_std.unwrap_or(d.noise_std),
            anomaly_rate: self.anomaly_rate.unwrap_or(d.anomaly_rate),
            anomaly_magnitude: self.anomaly_magnitude.unwrap_or(d.anomaly_magnitude),
            seed,
        }
    }
}

/// Settings read from a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileSettings {
    pub pipeline: PipelineArgs,
    pub sim: SimArgs,
}

fn config_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Config(format!("{}: {}", path.display(), message.into()))
}

pub fn parse_file(text: &str, path: &Path) -> Result<FileSettings, Error> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| config_error(path, e.to_string()))?;
    let mut pipeline = toml::Table::new();
    let mut sim = toml::Table::new();
    for (key, value) in table {
        if value.is_table() {
            return Err(config_error(path, format!("{key}: nested tables are not allowed")));
        }
        if PIPELINE_KEYS.contains(&key.as_str()) {
            pipeline.insert(key, value);
        } else if SIM_KEYS.contains(&key.as_str()) {
            sim.insert(key, value);
        } else {
            return Err(config_error(path, format!("unknown key {key:?}")));
        }
    }
    Ok(FileSettings {
        pipeline: pipeline
            .try_into()
            .map_err(|e: toml::de::Error| config_error(path, e.to_string()))?,
        sim: sim
            .try_into()
            .map_err(|e: toml::de::Error| config_error(path, e.to_string()))?,
    })
}

/// `--config` if given, else `$GRADEFUSE_CONFIG` if set.
pub fn config_path(flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from))
}

pub fn load(path: Option<&Path>) -> Result<FileSettings, Error> {
    let Some(path) = path else {
        return Ok(FileSettings::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_file(&text, path)
}
