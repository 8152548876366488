//! Flat `key = value` pipeline configuration. Every key has a default;
//! unknown keys are rejected. A written manifest is itself a valid config.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use watermass::embedding::EmbeddingParams;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMode {
    Volume,
    Count,
}

impl FromStr for WeightMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "volume" => Ok(Self::Volume),
            "count" => Ok(Self::Count),
            _ => Err(format!("expected `volume` or `count`, got `{s}`")),
        }
    }
}

impl WeightMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Volume => "volume",
            Self::Count => "count",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Integer that marks noise in input and output files.
    pub noise_label: i64,
    pub base_seed: u64,
    pub impute: bool,
    pub impute_k: usize,
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub n_components: usize,
    pub n_epochs: usize,
    pub negative_sample_rate: usize,
    pub learning_rate: f64,
    pub epsilon: f64,
    pub min_samples: usize,
    pub shuffle_order: bool,
    pub n_runs: usize,
    pub weight_mode: WeightMode,
    /// Members tried as the fusion base; 0 tries all.
    pub base_candidates: usize,
    pub scores: bool,
    pub cvnn_k: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let e = EmbeddingParams::default();
        Self {
            input: None,
            out_dir: PathBuf::from("watermass-out"),
            noise_label: -1,
            base_seed: 0,
            impute: true,
            impute_k: 5,
            n_neighbors: e.n_neighbors,
            min_dist: e.min_dist,
            n_components: e.n_components,
            n_epochs: e.n_epochs,
            negative_sample_rate: e.negative_sample_rate,
            learning_rate: e.learning_rate,
            epsilon: 0.10661017,
            min_samples: 4,
            shuffle_order: true,
            n_runs: 10,
            weight_mode: WeightMode::Volume,
            base_candidates: 0,
            scores: true,
            cvnn_k: 10,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::usage("config", format!("`{key}`: cannot parse `{value}`: {e}")))
}

impl PipelineConfig {
    pub const KEYS: [&'static str; 20] = [
        "input",
        "out_dir",
        "noise_label",
        "base_seed",
        "impute",
        "impute_k",
        "n_neighbors",
        "min_dist",
        "n_components",
        "n_epochs",
        "negative_sample_rate",
        "learning_rate",
        "epsilon",
        "min_samples",
        "shuffle_order",
        "n_runs",
        "weight_mode",
        "base_candidates",
        "scores",
        "cvnn_k",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "input" => self.input = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "noise_label" => self.noise_label = parse(key, value)?,
            "base_seed" => self.base_seed = parse(key, value)?,
            "impute" => self.impute = parse(key, value)?,
            "impute_k" => self.impute_k = parse(key, value)?,
            "n_neighbors" => self.n_neighbors = parse(key, value)?,
            "min_dist" => self.min_dist = parse(key, value)?,
            "n_components" => self.n_components = parse(key, value)?,
            "n_epochs" => self.n_epochs = parse(key, value)?,
            "negative_sample_rate" => self.negative_sample_rate = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "min_samples" => self.min_samples = parse(key, value)?,
            "shuffle_order" => self.shuffle_order = parse(key, value)?,
            "n_runs" => self.n_runs = parse(key, value)?,
            "weight_mode" => self.weight_mode = parse(key, value)?,
            "base_candidates" => self.base_candidates = parse(key, value)?,
            "scores" => self.scores = parse(key, value)?,
            "cvnn_k" => self.cvnn_k = parse(key, value)?,
            _ => return Err(CliError::usage("config", format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key=value` text: one pair per line, `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage("config", format!("line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Applies a single `key=value` override.
    pub fn apply_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::usage("config", format!("`{pair}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn embedding(&self) -> EmbeddingParams {
        EmbeddingParams {
            n_neighbors: self.n_neighbors,
            min_dist: self.min_dist,
            n_components: self.n_components,
            n_epochs: self.n_epochs,
            negative_sample_rate: self.negative_sample_rate,
            learning_rate: self.learning_rate,
            seed: self.base_seed,
            ..EmbeddingParams::default()
        }
    }

    fn value(&self, key: &str) -> String {
        match key {
            "input" => self.input.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            "out_dir" => self.out_dir.display().to_string(),
            "noise_label" => self.noise_label.to_string(),
            "base_seed" => self.base_seed.to_string(),
            "impute" => self.impute.to_string(),
            "impute_k" => self.impute_k.to_string(),
            "n_neighbors" => self.n_neighbors.to_string(),
            "min_dist" => self.min_dist.to_string(),
            "n_components" => self.n_components.to_string(),
            "n_epochs" => self.n_epochs.to_string(),
            "negative_sample_rate" => self.negative_sample_rate.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "epsilon" => self.epsilon.to_string(),
            "min_samples" => self.min_samples.to_string(),
            "shuffle_order" => self.shuffle_order.to_string(),
            "n_runs" => self.n_runs.to_string(),
            "weight_mode" => self.weight_mode.as_str().to_string(),
            "base_candidates" => self.base_candidates.to_string(),
            "scores" => self.scores.to_string(),
            "cvnn_k" => self.cvnn_k.to_string(),
            _ => unreachable!("key list and accessor out of sync"),
        }
    }

    /// Every key with its resolved value, preceded by comment lines.
    pub fn to_manifest(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# watermass {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# run i embeds and orders DBSCAN with seed base_seed + i");
        for key in Self::KEYS {
            let _ = writeln!(out, "{key} = {}", self.value(key));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let mut c = PipelineConfig::default();
        c.apply_text("input = a.csv\nn_runs=3 # short\nweight_mode = count\nmin_dist = 0.25").unwrap();
        let mut back = PipelineConfig::default();
        back.apply_text(&c.to_manifest()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.n_runs, 3);
        assert_eq!(back.weight_mode, WeightMode::Count);
    }

    #[test]
    fn unknown_and_malformed_keys_fail() {
        let mut c = PipelineConfig::default();
        assert!(c.apply_text("bogus = 1").is_err());
        assert!(c.apply_text("n_runs").is_err());
        assert!(c.apply_pair("n_runs=many").is_err());
        assert!(c.apply_pair("weight_mode=area").is_err());
    }

    #[test]
    fn defaults_match_library() {
        let c = PipelineConfig::default();
        assert_eq!(c.embedding().n_neighbors, 20);
        assert_eq!(c.epsilon, 0.10661017);
        for key in PipelineConfig::KEYS {
            c.value(key);
        }
    }
}
