use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Hyperparameters of one training run. Loaded from TOML; absent keys take
/// the per-model defaults of [`EmbeddingConfig::defaults_for`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub model: ModelKind,
    pub entity_dim: usize,
    pub relation_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Multiplied into the learning rate after every epoch.
    pub decay_rate: f64,
    pub optimizer: OptimizerKind,
    /// TransE margin.
    pub margin: f64,
    /// Corrupted triples per positive for the sampled-negative models.
    pub negatives: usize,
    /// Resample corruptions that are themselves training triples.
    pub resample_known_true: bool,
    /// L2 weight (DistMult, ComplEx) or N3 weight (ComplEx-N3).
    pub regularization: f64,
    pub label_smoothing: f64,
    pub input_dropout: f64,
    pub hidden_dropout1: f64,
    pub hidden_dropout2: f64,
    pub seed: u64,
}

impl EmbeddingConfig {
    pub fn defaults_for(model: ModelKind) -> Self {
        let base = Self {
            model,
            entity_dim: 100,
            relation_dim: 100,
            epochs: 100,
            batch_size: 128,
            learning_rate: 0.01,
            decay_rate: 1.0,
            optimizer: OptimizerKind::Adam,
            margin: 1.0,
            negatives: 1,
            resample_known_true: true,
            regularization: 0.0,
            label_smoothing: 0.0,
            input_dropout: 0.0,
            hidden_dropout1: 0.0,
            hidden_dropout2: 0.0,
            seed: 0,
        };
        match model {
            ModelKind::TransE => Self {
                optimizer: OptimizerKind::Sgd,
                learning_rate: 0.01,
                ..base
            },
            ModelKind::DistMult | ModelKind::ComplEx => Self {
                optimizer: OptimizerKind::Sgd,
                learning_rate: 0.1,
                regularization: 1e-3,
                negatives: 4,
                ..base
            },
            ModelKind::ComplExN3 => Self {
                regularization: 1e-2,
                learning_rate: 0.05,
                ..base
            },
            ModelKind::TuckER => Self {
                entity_dim: 200,
                relation_dim: 200,
                learning_rate: 5e-4,
                label_smoothing: 0.1,
                input_dropout: 0.3,
                hidden_dropout1: 0.4,
                hidden_dropout2: 0.5,
                ..base
            },
        }
    }

    /// Parses TOML. `model` is required; every other key is optional.
    pub fn from_toml(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Head {
            model: ModelKind,
        }
        let head: Head = toml::from_str(text)
            .map_err(|e| Error::Config(format!("training config: {e}")))?;
        let mut merged = toml::Value::try_from(Self::defaults_for(head.model))
            .map_err(|e| Error::Config(e.to_string()))?;
        let given: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("training config: {e}")))?;
        if let toml::Value::Table(t) = &mut merged {
            for (k, v) in given {
                t.insert(k, v);
            }
        }
        let cfg: Self = merged
            .try_into()
            .map_err(|e| Error::Config(format!("training config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.entity_dim == 0 || self.relation_dim == 0 {
            return bad("dimensions must be positive".into());
        }
        if self.model != ModelKind::TuckER && self.entity_dim != self.relation_dim {
            return bad(format!("{} needs entity_dim == relation_dim", self.model));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.decay_rate > 0.0 && self.decay_rate <= 1.0) {
            return bad(format!("decay_rate must be in (0, 1], got {}", self.decay_rate));
        }
        for (name, p) in [
            ("label_smoothing", self.label_smoothing),
            ("input_dropout", self.input_dropout),
            ("hidden_dropout1", self.hidden_dropout1),
            ("hidden_dropout2", self.hidden_dropout2),
        ] {
            if !(0.0..1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1), got {p}"));
            }
        }
        if self.regularization < 0.0 || self.margin < 0.0 {
            return bad("regularization and margin must be non-negative".into());
        }
        if matches!(self.model, ModelKind::TransE | ModelKind::DistMult | ModelKind::ComplEx)
            && self.negatives == 0
        {
            return bad("negatives must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_keeps_model_defaults() {
        let cfg = EmbeddingConfig::from_toml("model = \"tucker\"\nepochs = 3\nentity_dim = 8\nrelation_dim = 4\n").unwrap();
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.label_smoothing, 0.1);
        assert_eq!(cfg.hidden_dropout2, 0.5);
        assert_eq!(cfg.relation_dim, 4);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(EmbeddingConfig::from_toml("model = \"transe\"\nwarmup = 3\n").is_err());
        assert!(EmbeddingConfig::from_toml("model = \"transe\"\nrelation_dim = 7\n").is_err());
        assert!(EmbeddingConfig::from_toml("model = \"tucker\"\ninput_dropout = 1.0\n").is_err());
        assert!(EmbeddingConfig::from_toml("epochs = 3\n").is_err());
    }
}
