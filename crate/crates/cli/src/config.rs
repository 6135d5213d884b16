//! Experiment configuration: a TOML file resolvable to a model, a
//! training setup, and the parameter samples to train and evaluate on.

use std::path::Path;

use serde::{Deserialize, Serialize};

use dbsn_core::model::{DbsnModel, PinningPlan, TrainConfig};
use dbsn_core::net::Activation;
use dbsn_core::physics::{FamilyKind, PdeFamily};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: String,
    pub seed: u64,
    pub out_dir: String,
    /// Optional directory of pre-generated oracle datasets; when absent,
    /// commands that need data generate it from the oracles.
    #[serde(default)]
    pub dataset_dir: Option<String>,
    pub basis: BasisConfig,
    pub net: NetConfig,
    pub train: TrainSection,
    pub params: ParamsSection,
    #[serde(default)]
    pub eval: Option<ParamsSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub counts: Vec<usize>,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetConfig {
    pub hidden: Vec<usize>,
    pub activation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub physics_weight: f64,
    pub data_weight: f64,
    pub colloc_nodes: Vec<usize>,
    pub learning_rate: f64,
    #[serde(default)]
    pub resample_colloc: bool,
}

/// Parameter samples: explicit lists of u and alpha vectors, combined
/// either pairwise ("zip") or as a full cross product ("cross").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    #[serde(default)]
    pub u: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    #[serde(default = "default_pairing")]
    pub pairing: String,
}

fn default_pairing() -> String {
    "cross".into()
}

impl ParamsSection {
    /// Expands into concrete (u, alpha) pairs.
    pub fn pairs(&self) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        let us: Vec<Vec<f64>> =
            if self.u.is_empty() { vec![Vec::new()] } else { self.u.clone() };
        match self.pairing.as_str() {
            "cross" => {
                let mut out = Vec::new();
                for u in &us {
                    for a in &self.alpha {
                        out.push((u.clone(), a.clone()));
                    }
                }
                Ok(out)
            }
            "zip" => {
                if us.len() != self.alpha.len() {
                    return Err(CliError::Config(format!(
                        "zip pairing needs equal counts, got {} u and {} alpha",
                        us.len(),
                        self.alpha.len()
                    )));
                }
                Ok(us.into_iter().zip(self.alpha.iter().cloned()).collect())
            }
            other => Err(CliError::Config(format!("unknown pairing '{other}'"))),
        }
    }
}

pub fn family_kind(name: &str) -> Result<FamilyKind> {
    Ok(match name {
        "convection_diffusion" | "recovery" => FamilyKind::ConvectionDiffusion,
        "heat3d" => FamilyKind::Heat3d,
        "burgers" => FamilyKind::Burgers,
        "advection" | "advection_linear" => FamilyKind::AdvectionLinear,
        "advection_nonlinear" => FamilyKind::AdvectionNonlinear,
        "trapezoid" | "trapezoid_diffusion" => FamilyKind::TrapezoidDiffusion,
        other => return Err(CliError::Config(format!("unknown family '{other}'"))),
    })
}

pub fn family_name(kind: FamilyKind) -> &'static str {
    match kind {
        FamilyKind::ConvectionDiffusion => "convection_diffusion",
        FamilyKind::Heat3d => "heat3d",
        FamilyKind::Burgers => "burgers",
        FamilyKind::AdvectionLinear => "advection_linear",
        FamilyKind::AdvectionNonlinear => "advection_nonlinear",
        FamilyKind::TrapezoidDiffusion => "trapezoid_diffusion",
    }
}

pub fn parse_activation(name: &str) -> Result<Activation> {
    Ok(match name {
        "relu" => Activation::Relu,
        "tanh" => Activation::Tanh,
        other => return Err(CliError::Config(format!("unknown activation '{other}'"))),
    })
}

pub fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Relu => "relu",
        Activation::Tanh => "tanh",
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn family(&self) -> Result<PdeFamily> {
        Ok(PdeFamily::new(family_kind(&self.family)?))
    }

    /// Builds the model with a freshly seeded network.
    pub fn build_model(&self, seed: u64) -> Result<DbsnModel> {
        let family = self.family()?;
        let model = DbsnModel::new(
            family,
            self.basis.counts.clone(),
            self.basis.order,
            self.net.hidden.clone(),
            parse_activation(&self.net.activation)?,
            seed,
        )?;
        Ok(model)
    }

    pub fn pinning(&self) -> Result<PinningPlan> {
        Ok(PinningPlan::for_family(&self.family()?))
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            physics_weight: self.train.physics_weight,
            data_weight: self.train.data_weight,
            colloc_nodes: self.train.colloc_nodes.clone(),
            learning_rate: self.train.learning_rate,
            seed,
            resample_colloc: self.train.resample_colloc,
        }
    }

    /// Evaluation parameter pairs; falls back to the training set.
    pub fn eval_pairs(&self) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        match &self.eval {
            Some(section) => section.pairs(),
            None => self.params.pairs(),
        }
    }
}
