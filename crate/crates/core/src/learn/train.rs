use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{cmse_gradient, cmse_loss};
use super::model::{BiLstmModel, Workspace};
use super::optim::{clip_global_norm, Optimizer, OptimizerKind};
use crate::dataset::Sample;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
    /// Stop after this many epochs without a validation improvement.
    pub patience: Option<usize>,
    /// Global gradient-norm limit.
    pub clip_norm: Option<f64>,
    /// Learning rate multiplier applied after every epoch.
    #[serde(default = "unit")]
    pub lr_decay: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            batch_size: 100,
            learning_rate: 0.0015,
            optimizer: OptimizerKind::Adam,
            seed: 0,
            patience: None,
            clip_norm: Some(5.0),
            lr_decay: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(invalid("epochs and batch size must be positive"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(invalid("learning rate must be positive"));
        }
        if !(self.lr_decay.is_finite() && self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(invalid("learning rate decay must lie in (0, 1]"));
        }
        if self.patience == Some(0) {
            return Err(invalid("patience must be positive"));
        }
        if let Some(c) = self.clip_norm {
            if !(c.is_finite() && c > 0.0) {
                return Err(invalid("clip norm must be positive"));
            }
        }
        Ok(())
    }
}

/// Per-epoch learning curve. CRMSE values are in degrees.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Root of the mean minibatch loss over each epoch.
    pub train_crmse: Vec<f64>,
    pub val_crmse: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_crmse: f64,
    pub stopped_early: bool,
}

impl TrainReport {
    pub fn epochs_run(&self) -> usize {
        self.val_crmse.len()
    }
}

/// Summary handed to the progress callback after each epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_crmse: f64,
    pub val_crmse: f64,
    pub best_val_crmse: f64,
}

/// Validation CRMSE (deg) of `model` on `samples`.
pub fn crmse(model: &BiLstmModel, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("no samples"));
    }
    let mut ws = Workspace::default();
    let mut y = Vec::with_capacity(samples.len());
    let mut y_hat = Vec::with_capacity(samples.len());
    for s in samples {
        y.push(s.label);
        y_hat.push(model.forward_ws(&s.sequence, &mut ws)?);
    }
    Ok(cmse_loss(&y, &y_hat)?.sqrt())
}

/// Minibatch training that keeps the best-validation parameters.
pub fn train(
    model: &BiLstmModel,
    train_set: &[Sample],
    validation: &[Sample],
    cfg: &TrainConfig,
) -> Result<(BiLstmModel, TrainReport)> {
    train_with_progress(model, train_set, validation, cfg, &mut |_| {})
}

pub fn train_with_progress(
    model: &BiLstmModel,
    train_set: &[Sample],
    validation: &[Sample],
    cfg: &TrainConfig,
    progress: &mut dyn FnMut(&EpochStats),
) -> Result<(BiLstmModel, TrainReport)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Empty("empty training set"));
    }
    if validation.is_empty() {
        return Err(Error::Empty("empty validation set"));
    }
    let mut current = model.clone();
    let mut best = model.clone();
    let mut report = TrainReport { best_val_crmse: f64::INFINITY, ..Default::default() };
    let n_params = current.parameter_count();
    let mut opt = Optimizer::new(cfg.optimizer, n_params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut ws = Workspace::default();
    let mut grads = vec![0.0; n_params];
    let mut since_best = 0;
    let mut lr = cfg.learning_rate;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            grads.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_loss = 0.0;
            // the loss gradient of each element depends on that element alone
            for &i in batch {
                let s = &train_set[i];
                let y_hat = current.forward_ws(&s.sequence, &mut ws)?;
                if !y_hat.is_finite() {
                    return Err(diverged(epoch, report));
                }
                batch_loss += cmse_loss(&[s.label], &[y_hat])?;
                let d_out = cmse_gradient(&[s.label], &[y_hat])?[0] / batch.len() as f64;
                current.backward_ws(d_out, &mut ws, &mut grads)?;
            }
            loss_sum += batch_loss / batch.len() as f64;
            batches += 1;
            if let Some(c) = cfg.clip_norm {
                clip_global_norm(&mut grads, c);
            }
            if grads.iter().any(|g| !g.is_finite()) {
                return Err(diverged(epoch, report));
            }
            opt.step(current.params_mut(), &grads, lr);
        }
        if current.params().iter().any(|p| !p.is_finite()) {
            return Err(diverged(epoch, report));
        }
        lr *= cfg.lr_decay;
        let train_crmse = (loss_sum / batches as f64).sqrt();
        let val = crmse(&current, validation)?;
        report.train_crmse.push(train_crmse);
        report.val_crmse.push(val);
        if val < report.best_val_crmse {
            report.best_val_crmse = val;
            report.best_epoch = epoch;
            best.params_mut().copy_from_slice(current.params());
            since_best = 0;
        } else {
            since_best += 1;
        }
        progress(&EpochStats {
            epoch,
            train_crmse,
            val_crmse: val,
            best_val_crmse: report.best_val_crmse,
        });
        if cfg.patience.is_some_and(|p| since_best >= p) {
            report.stopped_early = true;
            break;
        }
    }
    Ok((best, report))
}

fn diverged(epoch: usize, report: TrainReport) -> Error {
    Error::Divergence { epoch, report: alloc::boxed::Box::new(report) }
}
