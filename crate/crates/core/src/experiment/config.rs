use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;
use crate::fair_train::{AdversaryScope, FairnessHyperparams};
use crate::graph::{SplitSpec, SyntheticSpec};
use crate::metrics::ShadowConfig;
use crate::nn::ModelDims;

/// Pipeline variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Pre-trained estimator, covariance and adversary terms.
    Full,
    /// Estimator starts untrained and is only fitted inside the main loop.
    NoSae,
    /// Plain GCN: no covariance term, no adversary.
    NoFc,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Full, Variant::NoSae, Variant::NoFc];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoSae => "no_sae",
            Variant::NoFc => "no_fc",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}` (full, no_sae, no_fc)")))
    }
}

/// Every knob of an experiment, read from a flat TOML file.
///
/// Values are resolved in this order, later wins: built-in defaults, the
/// config file, `--set key=value` overrides, dedicated command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// `"synthetic"`, or a directory holding `edges.txt` and `nodes.csv`.
    pub dataset: String,

    pub synthetic_nodes: usize,
    pub synthetic_features: usize,
    pub synthetic_homophily: f64,
    pub synthetic_bias: f64,
    pub synthetic_avg_degree: f64,
    /// The synthetic graph is fixed across repeats; only splits and
    /// initialisations follow `seed`.
    pub synthetic_seed: u64,

    pub train_fraction: f64,
    pub val_fraction: f64,
    pub forget_fraction: f64,
    pub sensitive_known_fraction: f64,

    pub hidden: usize,
    pub output: usize,
    pub estimator_hidden: usize,

    pub estimator_epochs: usize,
    pub estimator_lr: f64,

    pub alpha: f64,
    pub beta: f64,
    pub epochs: usize,
    pub adversary_steps: usize,
    pub lr_classifier: f64,
    pub lr_estimator: f64,
    pub lr_adversary: f64,
    pub freeze_estimator: bool,
    pub patience: usize,
    pub adversary_scope: AdversaryScope,

    pub gamma: f64,
    pub lambda: f64,

    pub shadow_epochs: usize,
    pub shadow_lr: f64,

    pub variant: Variant,
    pub seed: u64,
    pub repeats: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let synth = SyntheticSpec::default();
        let split = SplitSpec::default();
        ExperimentConfig {
            name: "experiment".into(),
            dataset: "synthetic".into(),
            synthetic_nodes: synth.nodes,
            synthetic_features: synth.features,
            synthetic_homophily: synth.homophily,
            synthetic_bias: synth.bias_strength,
            synthetic_avg_degree: synth.avg_degree,
            synthetic_seed: 0,
            train_fraction: split.train_fraction,
            val_fraction: split.val_fraction,
            forget_fraction: split.forget_fraction,
            sensitive_known_fraction: split.sensitive_known_fraction,
            hidden: 16,
            output: 16,
            estimator_hidden: 16,
            estimator_epochs: 300,
            estimator_lr: 0.01,
            alpha: 0.5,
            beta: 10.0,
            epochs: 300,
            adversary_steps: 1,
            lr_classifier: 0.01,
            lr_estimator: 0.01,
            lr_adversary: 0.01,
            freeze_estimator: false,
            patience: 100,
            adversary_scope: AdversaryScope::AllNodes,
            gamma: 2.0,
            lambda: 1.0,
            shadow_epochs: 300,
            shadow_lr: 0.01,
            variant: Variant::Full,
            seed: 0,
            repeats: 5,
        }
    }
}

fn in_open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {v} must lie in (0, 1)")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are plain TOML values")
    }

    /// Applies one `key=value` override. The value is read as a TOML
    /// literal, falling back to a bare string.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        let mut table = toml::Table::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        if !table.contains_key(key) {
            return Err(Error::Config(format!("unknown config key `{key}`")));
        }
        table.insert(key.to_string(), value);
        let updated: ExperimentConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("{key}: {e}")))?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        in_open_unit("train_fraction", self.train_fraction)?;
        in_open_unit("forget_fraction", self.forget_fraction)?;
        in_open_unit("sensitive_known_fraction", self.sensitive_known_fraction)?;
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config(format!(
                "val_fraction = {} must lie in [0, 1)",
                self.val_fraction
            )));
        }
        for (name, v) in [
            ("hidden", self.hidden),
            ("output", self.output),
            ("estimator_hidden", self.estimator_hidden),
            ("epochs", self.epochs),
            ("repeats", self.repeats),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma = {} must be non-negative", self.gamma)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda = {} must be positive", self.lambda)));
        }
        self.hyperparams(self.variant).validate()
    }

    pub fn dataset_paths(&self) -> Option<(PathBuf, PathBuf)> {
        if self.dataset == "synthetic" {
            return None;
        }
        let dir = PathBuf::from(&self.dataset);
        Some((dir.join("edges.txt"), dir.join("nodes.csv")))
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            nodes: self.synthetic_nodes,
            features: self.synthetic_features,
            homophily: self.synthetic_homophily,
            bias_strength: self.synthetic_bias,
            avg_degree: self.synthetic_avg_degree,
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            val_fraction: self.val_fraction,
            forget_fraction: self.forget_fraction,
            sensitive_known_fraction: self.sensitive_known_fraction,
        }
    }

    pub fn dims(&self, input: usize) -> ModelDims {
        ModelDims::new(input, self.hidden, self.output, self.estimator_hidden)
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig {
            epochs: self.estimator_epochs,
            lr: self.estimator_lr,
        }
    }

    /// Training hyperparameters with the variant's overrides applied.
    pub fn hyperparams(&self, variant: Variant) -> FairnessHyperparams {
        let base = FairnessHyperparams {
            alpha: self.alpha,
            beta: self.beta,
            epochs: self.epochs,
            adversary_steps_per_epoch: self.adversary_steps,
            lr_classifier: self.lr_classifier,
            lr_estimator: self.lr_estimator,
            lr_adversary: self.lr_adversary,
            freeze_estimator: self.freeze_estimator,
            patience: self.patience,
            adversary_scope: self.adversary_scope,
        };
        match variant {
            Variant::Full => base,
            Variant::NoSae => FairnessHyperparams {
                freeze_estimator: false,
                ..base
            },
            Variant::NoFc => FairnessHyperparams {
                alpha: 0.0,
                beta: 0.0,
                adversary_steps_per_epoch: 0,
                ..base
            },
        }
    }

    pub fn shadow_config(&self) -> ShadowConfig {
        ShadowConfig {
            epochs: self.shadow_epochs,
            lr: self.shadow_lr,
        }
    }

    /// Seeds of the repeats: `seed, seed + 1, ...`.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.repeats as u64).map(|i| self.seed + i).collect()
    }
}
