use serde::{Deserialize, Serialize};

use super::input::{ModelInput, Supervision};
use super::loss::{masked_accuracy, masked_nll, masked_nll_grad};
use super::model::{Dropout, SageModel};
use super::optim::{cosine_lr, Adam, AdamConfig, EarlyStopping};
use crate::error::{Error, Result};
use crate::graph::Split;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub base_lr: f64,
    pub dropout: f64,
    pub seed: u64,
    #[serde(default)]
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 1000,
            patience: 50,
            base_lr: 1e-3,
            dropout: 0.5,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.patience >= self.max_epochs {
            return Err(Error::Config(format!(
                "patience {} must be below max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if !self.base_lr.is_finite() || self.base_lr <= 0.0 {
            return Err(Error::Config(format!("base_lr {} must be positive", self.base_lr)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<usize>,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub lr: f64,
}

/// Curriculum stage summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub batches: Vec<usize>,
    pub active_ids: usize,
    pub first_epoch: usize,
    pub epochs: usize,
    pub best_val_loss: f64,
}

/// A trained network, its optimizer moments and the full history.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub model: SageModel,
    pub optimizer: Adam,
    pub config: TrainConfig,
    pub history: Vec<EpochRecord>,
    pub stages: Vec<StageRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

/// One full-batch optimization loop; the cosine counter and Adam state live
/// here so a curriculum can drive it stage by stage.
pub struct Trainer<'a> {
    input: &'a ModelInput,
    supervision: &'a Supervision,
    val_mask: Vec<bool>,
    config: TrainConfig,
    model: SageModel,
    optimizer: Adam,
    history: Vec<EpochRecord>,
    best: Option<(usize, f64, SageModel)>,
}

impl<'a> Trainer<'a> {
    pub fn new(model: SageModel, input: &'a ModelInput, supervision: &'a Supervision, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if supervision.len() != input.target_ids().len() {
            return Err(Error::shape("supervision rows", input.target_ids().len(), supervision.len()));
        }
        let val_mask = supervision.mask(Split::Val);
        if !val_mask.iter().any(|&b| b) {
            return Err(Error::Config("validation split is empty".into()));
        }
        let optimizer = Adam::new(&model, config.adam);
        Ok(Self {
            input,
            supervision,
            val_mask,
            config,
            model,
            optimizer,
            history: Vec::new(),
            best: None,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn epochs_run(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> &[EpochRecord] {
        &self.history
    }

    pub fn model(&self) -> &SageModel {
        &self.model
    }

    /// One optimizer step on `train_mask`, then a dropout-free validation pass.
    /// `schedule_step` is the cosine counter (zero-based).
    pub fn epoch(&mut self, train_mask: &[bool], schedule_step: usize, stage: Option<usize>) -> Result<EpochRecord> {
        let epoch = self.history.len() + 1;
        let lr = cosine_lr(self.config.base_lr, schedule_step, self.config.max_epochs)?;
        let labels = &self.supervision.labels;
        let seed = crate::seed::derive(self.config.seed, &format!("dropout/{epoch}"));
        let pass = self.model.forward(
            self.input,
            Dropout::Sample {
                rate: self.config.dropout,
                seed,
            },
        )?;
        let train_loss = masked_nll(pass.logp.view(), labels, train_mask)?;
        if !train_loss.is_finite() {
            return Err(Error::Training {
                epoch,
                reason: format!("train loss {train_loss}"),
            });
        }
        let dlogits = masked_nll_grad(pass.logp.view(), labels, train_mask)?;
        let grads = self.model.backward(self.input, &pass, dlogits.view())?;
        self.optimizer.update(&mut self.model, &grads, lr);
        if !self.model.is_finite() {
            return Err(Error::Training {
                epoch,
                reason: "non-finite parameters after update".into(),
            });
        }
        let eval = self.model.forward(self.input, Dropout::Off)?;
        let val_loss = masked_nll(eval.logp.view(), labels, &self.val_mask)?;
        if !val_loss.is_finite() {
            return Err(Error::Training {
                epoch,
                reason: format!("validation loss {val_loss}"),
            });
        }
        let val_accuracy = masked_accuracy(eval.logp.view(), labels, &self.val_mask)?;
        let rec = EpochRecord {
            epoch,
            stage,
            train_loss,
            val_loss,
            val_accuracy,
            lr,
        };
        if self.best.as_ref().is_none_or(|b| val_loss < b.1) {
            self.best = Some((epoch, val_loss, self.model.clone()));
        }
        self.history.push(rec.clone());
        Ok(rec)
    }

    /// Packages the best-validation weights with the live optimizer state.
    pub fn finish(self, stages: Vec<StageRecord>) -> Result<ModelState> {
        let (best_epoch, best_val_loss, model) = self
            .best
            .ok_or_else(|| Error::Config("no epochs were run".into()))?;
        Ok(ModelState {
            model,
            optimizer: self.optimizer,
            config: self.config,
            history: self.history,
            stages,
            best_epoch,
            best_val_loss,
        })
    }
}

/// Early-stopped full-batch training on the train split.
pub fn train(model: SageModel, input: &ModelInput, supervision: &Supervision, config: &TrainConfig) -> Result<ModelState> {
    let train_mask = supervision.mask(Split::Train);
    if !train_mask.iter().any(|&b| b) {
        return Err(Error::Config("training split is empty".into()));
    }
    let mut trainer = Trainer::new(model, input, supervision, config.clone())?;
    let mut stop = EarlyStopping::new(config.patience);
    for step in 0..config.max_epochs {
        let rec = trainer.epoch(&train_mask, step, None)?;
        stop.observe(rec.epoch, rec.val_loss);
        if stop.should_stop() {
            break;
        }
    }
    log::debug!("training stopped after {} epochs", trainer.epochs_run());
    trainer.finish(Vec::new())
}
