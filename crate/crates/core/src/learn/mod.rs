//! Bidirectional LSTM heading regressor trained with a cyclic loss.

pub mod loss;
pub mod model;
pub mod optim;
pub mod train;

pub use loss::{cmse_gradient, cmse_loss, cyclic_diff_deg};
pub use model::{BiLstmModel, ModelShape, Workspace};
pub use optim::OptimizerKind;
pub use train::{crmse, train, train_with_progress, EpochStats, TrainConfig, TrainReport};

use crate::align::{cyclic_error_deg, HeadingEstimate, Method};
use crate::dataset::Sample;
use crate::error::Result;

/// Wrapped model heading for a sample, with its error against the label.
pub fn predict(model: &BiLstmModel, sample: &Sample) -> Result<HeadingEstimate> {
    let yaw = model.predict_deg(&sample.sequence)?;
    Ok(HeadingEstimate {
        yaw,
        window_s: sample.window_s,
        n_samples: sample.len(),
        method: Method::Learned,
        error_deg: Some(cyclic_error_deg(sample.label, yaw)),
    })
}
