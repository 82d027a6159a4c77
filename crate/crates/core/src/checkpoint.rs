//! Model checkpoint container.
//!
//! A checkpoint is a JSON document:
//!
//! ```text
//! {
//!   "schema": "fair-unlearn/checkpoint/v1",
//!   "dims": { "input": d, "hidden": h, "output": o, "estimator_hidden": e },
//!   "seed": u64,
//!   "classifier": [w1 (d×h, row-major), b1, w2 (h×o), b2, head],
//!   "estimator":  [w (d×e), b, head, head_bias],
//!   "adversary":  [weight, bias],
//!   "train_importance": null | { "source_set_size": n, "values": [...] },
//!   "masks": null | { "train_ids": [...], ... }
//! }
//! ```
//!
//! Each parameter group is stored flat in the order shown. Floats are
//! written in shortest round-trip form, so save followed by load is
//! bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SplitMasks;
use crate::nn::{ModelDims, ModelParams, ParamGroup};
use crate::unlearn::{ImportanceMap, ImportanceSource};

pub const CHECKPOINT_SCHEMA: &str = "fair-unlearn/checkpoint/v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub train_importance: Option<ImportanceMap>,
    pub masks: Option<SplitMasks>,
}

#[derive(Serialize, Deserialize)]
struct StoredImportance {
    source_set_size: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Stored {
    schema: String,
    dims: ModelDims,
    seed: u64,
    classifier: Vec<f64>,
    estimator: Vec<f64>,
    adversary: Vec<f64>,
    train_importance: Option<StoredImportance>,
    masks: Option<SplitMasks>,
}

impl Checkpoint {
    pub fn new(params: ModelParams) -> Self {
        Checkpoint {
            params,
            train_importance: None,
            masks: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let p = &self.params;
        let stored = Stored {
            schema: CHECKPOINT_SCHEMA.to_string(),
            dims: p.dims,
            seed: p.seed,
            classifier: p.classifier.to_flat(),
            estimator: p.estimator.to_flat(),
            adversary: p.adversary.to_flat(),
            train_importance: self.train_importance.as_ref().map(|m| StoredImportance {
                source_set_size: m.source_set_size,
                values: m.to_flat(),
            }),
            masks: self.masks.clone(),
        };
        Ok(serde_json::to_string_pretty(&stored)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let stored: Stored = serde_json::from_str(text)?;
        if stored.schema != CHECKPOINT_SCHEMA {
            return Err(Error::Format(format!(
                "checkpoint schema `{}`, expected `{CHECKPOINT_SCHEMA}`",
                stored.schema
            )));
        }
        let mut params = ModelParams::zeros(stored.dims, stored.seed);
        params.classifier.set_flat(&stored.classifier)?;
        params.estimator.set_flat(&stored.estimator)?;
        params.adversary.set_flat(&stored.adversary)?;
        let train_importance = match stored.train_importance {
            Some(s) => {
                let mut values = params.classifier.zeros_like();
                values.set_flat(&s.values)?;
                Some(ImportanceMap {
                    values,
                    source_set_size: s.source_set_size,
                    source: ImportanceSource::Train,
                })
            }
            None => None,
        };
        Ok(Checkpoint {
            params,
            train_importance,
            masks: stored.masks,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_json(&text)
    }
}
