//! Versioned JSON model checkpoints.

use std::path::Path;

use gyrocompass_core::learn::{BiLstmModel, ModelShape};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};
use crate::manifest::{read_json, write_json};

pub const FORMAT: &str = "gyrocompass-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub shape: ModelShape,
    pub init_seed: u64,
    /// Multiplier on deg/hr inputs.
    pub input_scale: f64,
    /// Degrees per unit of summed head output.
    pub output_scale: f64,
    pub model_rate: f64,
    pub parameter_count: usize,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn from_model(model: &BiLstmModel, model_rate: f64) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            shape: model.shape(),
            init_seed: model.init_seed(),
            input_scale: model.input_scale(),
            output_scale: model.output_scale(),
            model_rate,
            parameter_count: model.parameter_count(),
            params: model.params().to_vec(),
        }
    }

    pub fn to_model(&self, path: &Path) -> Result<BiLstmModel> {
        if self.format != FORMAT {
            return Err(AppError::schema(path, format!("not a checkpoint (format {:?})", self.format)));
        }
        if self.version != VERSION {
            return Err(AppError::schema(path, format!("unsupported checkpoint version {}", self.version)));
        }
        if self.parameter_count != self.params.len() {
            return Err(AppError::schema(path, "parameter_count disagrees with the stored parameters"));
        }
        BiLstmModel::from_parts(self.shape, self.params.clone(), self.init_seed, self.input_scale, self.output_scale)
            .map_err(|e| AppError::schema(path, e.to_string()))
    }
}

pub fn save_checkpoint(model: &BiLstmModel, model_rate: f64, path: &Path) -> Result<()> {
    write_json(&Checkpoint::from_model(model, model_rate), path)
}

/// Load a checkpoint; with `expect`, also reject a different architecture.
pub fn load_checkpoint(path: &Path, expect: Option<ModelShape>) -> Result<(BiLstmModel, f64)> {
    let ck: Checkpoint = read_json(path)?;
    let model = ck.to_model(path)?;
    if let Some(shape) = expect {
        if shape != model.shape() {
            return Err(AppError::schema(
                path,
                format!("checkpoint shape {:?} does not match expected {:?}", model.shape(), shape),
            ));
        }
    }
    Ok((model, ck.model_rate))
}
