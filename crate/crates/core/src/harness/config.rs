use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::types::{StepCostModel, DEFAULT_L_CAP};

/// Experiment configuration, read from TOML.
///
/// ```toml
/// master_seed = 7
///
/// [corpus]
/// n_utterances = 1000
/// vocab_size = 64
/// ngram_order = 3
/// eos_bias = 0.005
/// min_len = 100        # accepted greedy lengths, inclusive
/// max_len = 400
///
/// [corruption]
/// sub_rate = 0.02      # fixed rate ...
/// ins_rate = [0.0, 0.01]  # ... or a [lo, hi] range drawn per utterance
/// del_rate = 0.0
///
/// [run]
/// k_values = [1, 3, 5, 7, 9]
/// l_cap = 1024
/// threads = 0          # 0 = all cores
///
/// [cost]
/// verify_pass_cost = 1.0
/// ar_step_cost = 1.0
/// draft_step_cost = 0.0
///
/// [report]
/// bin_width_pct = 5.0
/// high_ratio_threshold = 0.95
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub corruption: CorruptionConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub cost: StepCostModel,
    #[serde(default)]
    pub report: ReportConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub n_utterances: usize,
    pub vocab_size: u32,
    pub ngram_order: usize,
    pub eos_bias: f64,
    #[serde(default)]
    pub min_len: usize,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    /// Model seeds tried per utterance before giving up on the length target.
    #[serde(default = "default_max_attempts")]
    pub max_attempts: usize,
}

fn default_max_len() -> usize {
    DEFAULT_L_CAP
}

fn default_max_attempts() -> usize {
    1000
}

/// A fixed rate or an inclusive `[lo, hi]` range sampled per utterance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateSetting {
    Fixed(f64),
    Range([f64; 2]),
}

impl Default for RateSetting {
    fn default() -> Self {
        RateSetting::Fixed(0.0)
    }
}

impl RateSetting {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            RateSetting::Fixed(r) => (r, r),
            RateSetting::Range([lo, hi]) => (lo, hi),
        }
    }

    /// Maps a uniform draw `u` in `[0, 1)` into the range.
    pub fn sample(self, u: f64) -> f64 {
        let (lo, hi) = self.bounds();
        if lo == hi {
            lo
        } else {
            lo + (hi - lo) * u
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptionConfig {
    #[serde(default)]
    pub sub_rate: RateSetting,
    #[serde(default)]
    pub ins_rate: RateSetting,
    #[serde(default)]
    pub del_rate: RateSetting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_k_values")]
    pub k_values: Vec<usize>,
    #[serde(default = "default_max_len")]
    pub l_cap: usize,
    #[serde(default)]
    pub threads: usize,
}

fn default_k_values() -> Vec<usize> {
    vec![1, 3, 5, 7, 9]
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k_values: default_k_values(),
            l_cap: DEFAULT_L_CAP,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    #[serde(default = "default_bin_width")]
    pub bin_width_pct: f64,
    #[serde(default = "default_high_ratio")]
    pub high_ratio_threshold: f64,
}

fn default_bin_width() -> f64 {
    5.0
}

fn default_high_ratio() -> f64 {
    0.95
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            bin_width_pct: default_bin_width(),
            high_ratio_threshold: default_high_ratio(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        let c = &self.corpus;
        if c.n_utterances == 0 {
            return bad("corpus.n_utterances must be at least 1".into());
        }
        if c.vocab_size < 2 {
            return bad(format!("corpus.vocab_size must be at least 2, got {}", c.vocab_size));
        }
        if !(1..=3).contains(&c.ngram_order) {
            return bad(format!("corpus.ngram_order must be 1, 2 or 3, got {}", c.ngram_order));
        }
        if !(0.0..=1.0).contains(&c.eos_bias) {
            return bad(format!("corpus.eos_bias must lie in [0, 1], got {}", c.eos_bias));
        }
        if c.min_len > c.max_len {
            return bad(format!("corpus.min_len {} exceeds max_len {}", c.min_len, c.max_len));
        }
        if c.max_len > self.run.l_cap {
            return bad(format!("corpus.max_len {} exceeds run.l_cap {}", c.max_len, self.run.l_cap));
        }
        if c.max_attempts == 0 {
            return bad("corpus.max_attempts must be at least 1".into());
        }
        for (name, rate) in [
            ("sub_rate", self.corruption.sub_rate),
            ("ins_rate", self.corruption.ins_rate),
            ("del_rate", self.corruption.del_rate),
        ] {
            let (lo, hi) = rate.bounds();
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return bad(format!("corruption.{name} must be a rate or [lo, hi] within [0, 1]"));
            }
        }
        if self.run.k_values.is_empty() {
            return bad("run.k_values must not be empty".into());
        }
        if self.run.k_values.contains(&0) {
            return bad("run.k_values must all be at least 1".into());
        }
        self.cost
            .validate()
            .map_err(|e| HarnessError::Config(format!("cost: {e}")))?;
        if !(self.report.bin_width_pct > 0.0) {
            return bad("report.bin_width_pct must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
master_seed = 3
[corpus]
n_utterances = 4
vocab_size = 16
ngram_order = 2
eos_bias = 0.05
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.run.k_values, vec![1, 3, 5, 7, 9]);
        assert_eq!(c.run.l_cap, 1024);
        assert_eq!(c.cost, StepCostModel::default());
        assert_eq!(c.report.bin_width_pct, 5.0);
        assert_eq!(c.corruption.sub_rate, RateSetting::Fixed(0.0));
    }

    #[test]
    fn rates_accept_scalars_and_ranges() {
        let text = format!("{MINIMAL}[corruption]\nsub_rate = 0.02\nins_rate = [0.0, 0.3]\n");
        let c = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(c.corruption.sub_rate, RateSetting::Fixed(0.02));
        assert_eq!(c.corruption.ins_rate, RateSetting::Range([0.0, 0.3]));
        assert_eq!(c.corruption.ins_rate.sample(0.5), 0.15);
    }

    #[test]
    fn invalid_configs_rejected() {
        for patch in [
            ("n_utterances = 4", "n_utterances = 0"),
            ("ngram_order = 2", "ngram_order = 5"),
            ("eos_bias = 0.05", "eos_bias = 1.5"),
        ] {
            let text = MINIMAL.replace(patch.0, patch.1);
            assert!(ExperimentConfig::from_toml_str(&text).is_err(), "{}", patch.1);
        }
        let text = format!("{MINIMAL}[run]\nk_values = []\n");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
        let text = format!("{MINIMAL}[run]\nk_values = [0, 3]\n");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
        let text = format!("{MINIMAL}[corruption]\nsub_rate = [0.3, 0.1]\n");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
        let text = format!("{MINIMAL}bogus = 1\n");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }
}
