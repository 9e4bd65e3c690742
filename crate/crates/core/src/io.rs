//! JSON file formats: trees, weights, spectral data and invariants.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, CanonicalInvariant, SplitStrategy};
use crate::operator::{RayWeights, ShiftSpec, SpectralData};
use crate::tree::TreeSkeleton;

/// Agreement required between explicit weights and the ones a rule regenerates.
pub const RULE_AGREEMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightRule {
    #[serde(rename = "uwrem-equal")]
    UwremEqual,
    #[serde(rename = "uwrem-random")]
    UwremRandom,
}

/// `{"weights": {label: [re, im], ..}, "rule": .., "x": .., "seed": .., "ray": ..}`.
///
/// With a rule the weights are regenerated from `x` (and `seed`); any weights
/// listed explicitly must agree with the regenerated ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightFile {
    #[serde(default)]
    pub weights: BTreeMap<String, Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<WeightRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ray: Option<RayWeights>,
}

impl WeightFile {
    /// Applies the file to a tree.
    pub fn to_spec(&self, tree: &TreeSkeleton) -> Result<ShiftSpec> {
        let Some(rule) = self.rule else {
            let ray = match (self.ray, self.x) {
                (Some(r), _) => r,
                (None, Some(x)) => RayWeights::Xi { x },
                (None, None) => {
                    return Err(Error::InvalidWeights("explicit weights need either \"ray\" or \"x\"".into()))
                }
            };
            let spec = ShiftSpec::Tree { tree: tree.clone(), weights: self.weights.clone(), ray };
            spec.validate()?;
            return Ok(spec);
        };
        let x = self.x.ok_or_else(|| Error::InvalidWeights("a weight rule needs \"x\"".into()))?;
        let strategy = match rule {
            WeightRule::UwremEqual => SplitStrategy::Equal,
            WeightRule::UwremRandom => SplitStrategy::Random {
                seed: self.seed.ok_or_else(|| Error::InvalidWeights("uwrem-random needs \"seed\"".into()))?,
            },
        };
        let spec = model::build_weights_uwrem(tree, x, strategy)?;
        if let ShiftSpec::Tree { weights, .. } = &spec {
            for (v, w) in &self.weights {
                let expected = weights
                    .get(v)
                    .ok_or_else(|| Error::InvalidWeights(format!("weight given for unknown vertex {v:?}")))?;
                if (w - expected).norm() > RULE_AGREEMENT_TOL {
                    return Err(Error::InvalidWeights(format!(
                        "weight at {v:?} is {w}, but the rule gives {expected}"
                    )));
                }
            }
        }
        Ok(spec)
    }

    /// Explicit weights of a tree spec, tagged with the rule that produced them if known.
    pub fn from_spec(spec: &ShiftSpec, rule: Option<WeightRule>, seed: Option<u64>) -> Result<Self> {
        let ShiftSpec::Tree { weights, ray, .. } = spec else {
            return Err(Error::InvalidWeights("weight files describe tree shifts only".into()));
        };
        let x = match ray {
            RayWeights::Xi { x } => Some(*x),
            RayWeights::Constant { .. } => None,
        };
        Ok(Self { weights: weights.clone(), rule, x, seed, ray: Some(*ray) })
    }
}

fn read<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn load_tree(path: &Path) -> Result<TreeSkeleton> {
    read(path)
}

pub fn load_weights(path: &Path) -> Result<WeightFile> {
    read(path)
}

pub fn load_spectral(path: &Path) -> Result<SpectralData> {
    let s: SpectralData = read(path)?;
    s.validate()?;
    Ok(s)
}

pub fn load_invariant(path: &Path) -> Result<CanonicalInvariant> {
    read(path)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)? + "\n")?;
    Ok(())
}
