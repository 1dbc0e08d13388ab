//! Reliability-ordered curriculum: ten score-quintile batches introduced
//! symmetrically from the most clear-cut examples inward.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::{EarlyStopping, ModelInput, ModelState, SageModel, StageRecord, Supervision, TrainConfig, Trainer};
use crate::graph::{Label, Split};

pub const NUM_BATCHES: usize = 10;
pub const NUM_STAGES: usize = NUM_BATCHES / 2;
pub const STAGE_PATIENCE: usize = 10;

/// Batches `d1..d10`: reliable quintiles first (d1 highest score), then
/// unreliable quintiles (d10 lowest score).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumSchedule {
    pub batches: Vec<Vec<String>>,
    pub stage_patience: usize,
}

fn quintiles(mut members: Vec<(&str, f64)>, class: Label) -> Result<Vec<Vec<String>>> {
    if members.len() < 5 {
        return Err(Error::Config(format!(
            "{} class has {} training members, need at least 5",
            class.as_str(),
            members.len()
        )));
    }
    members.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let q = members.len() / 5;
    let mut out = Vec::with_capacity(5);
    for k in 0..5 {
        let end = if k == 4 { members.len() } else { (k + 1) * q };
        out.push(members[k * q..end].iter().map(|m| m.0.to_string()).collect());
    }
    Ok(out)
}

/// Quintiles are taken within each class, ordered by score descending and id
/// ascending; leftovers join the class's last quintile.
pub fn build_quintile_batches(train: &[(String, f64, Label)]) -> Result<CurriculumSchedule> {
    for (id, s, _) in train {
        if !s.is_finite() {
            return Err(Error::Data(format!("non-finite score for `{id}`")));
        }
    }
    let pick = |c: Label| train.iter().filter(|t| t.2 == c).map(|t| (t.0.as_str(), t.1)).collect::<Vec<_>>();
    let mut batches = quintiles(pick(Label::Reliable), Label::Reliable)?;
    batches.extend(quintiles(pick(Label::Unreliable), Label::Unreliable)?);
    Ok(CurriculumSchedule {
        batches,
        stage_patience: STAGE_PATIENCE,
    })
}

impl CurriculumSchedule {
    /// 1-based batch numbers active at 1-based `stage`.
    pub fn stage_batches(&self, stage: usize) -> Result<Vec<usize>> {
        let k = self.batches.len();
        if stage == 0 || stage > k / 2 {
            return Err(Error::Schedule(format!("stage {stage} outside 1..={}", k / 2)));
        }
        let mut out: Vec<usize> = (1..=stage).chain(k + 1 - stage..=k).collect();
        out.dedup();
        Ok(out)
    }

    pub fn stages(&self) -> usize {
        self.batches.len() / 2
    }

    /// Target-row mask of the batches active at `stage`.
    pub fn active_mask(&self, stage: usize, ids: &[String]) -> Result<Vec<bool>> {
        let row: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut mask = vec![false; ids.len()];
        for b in self.stage_batches(stage)? {
            let batch = &self.batches[b - 1];
            if batch.is_empty() {
                return Err(Error::Schedule(format!("batch d{b} is empty")));
            }
            for id in batch {
                let &i = row
                    .get(id.as_str())
                    .ok_or_else(|| Error::Schedule(format!("scheduled id `{id}` is not a model row")))?;
                mask[i] = true;
            }
        }
        Ok(mask)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumConfig {
    pub stage_patience: usize,
    /// Restart the cosine counter at every stage instead of running it globally.
    pub reset_schedule: bool,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            stage_patience: STAGE_PATIENCE,
            reset_schedule: false,
        }
    }
}

/// Rows of the train split that carry labels.
pub fn train_scores(input: &ModelInput, supervision: &Supervision, scores: &BTreeMap<String, f64>) -> Result<Vec<(String, f64, Label)>> {
    let mut out = Vec::new();
    for (i, id) in input.target_ids().iter().enumerate() {
        if supervision.splits[i] != Split::Train {
            continue;
        }
        let Some(c) = supervision.labels[i] else { continue };
        let s = *scores
            .get(id)
            .ok_or_else(|| Error::Data(format!("no reliability score for training domain `{id}`")))?;
        out.push((id.clone(), s, Label::from_index(c)));
    }
    Ok(out)
}

/// Stages 1..k/2-1 stop after `stage_patience` epochs without a new
/// stage-best val loss; the last stage (all batches) uses the config's
/// patience. Adam state and the epoch budget are shared across stages.
pub fn babysteps_train(
    model: SageModel,
    schedule: &CurriculumSchedule,
    input: &ModelInput,
    supervision: &Supervision,
    config: &TrainConfig,
    curriculum: &CurriculumConfig,
) -> Result<ModelState> {
    let train_rows = supervision.mask(Split::Train);
    let mut trainer = Trainer::new(model, input, supervision, config.clone())?;
    let mut stages = Vec::new();
    let mut global_step = 0;
    for stage in 1..=schedule.stages() {
        let active = schedule.active_mask(stage, input.target_ids())?;
        if active.iter().zip(&train_rows).any(|(&a, &t)| a && !t) {
            return Err(Error::Schedule("schedule contains rows outside the training split".into()));
        }
        let patience = if stage == schedule.stages() { config.patience } else { curriculum.stage_patience };
        let mut stop = EarlyStopping::new(patience);
        let first_epoch = trainer.epochs_run() + 1;
        let mut stage_step = 0;
        while trainer.epochs_run() < config.max_epochs {
            let step = if curriculum.reset_schedule { stage_step } else { global_step };
            let rec = trainer.epoch(&active, step, Some(stage))?;
            global_step += 1;
            stage_step += 1;
            stop.observe(rec.epoch, rec.val_loss);
            if stop.should_stop() {
                break;
            }
        }
        if stage_step == 0 {
            break;
        }
        stages.push(StageRecord {
            stage,
            batches: schedule.stage_batches(stage)?,
            active_ids: active.iter().filter(|&&a| a).count(),
            first_epoch,
            epochs: stage_step,
            best_val_loss: stop.best().map(|b| b.1).unwrap_or(f64::INFINITY),
        });
        log::debug!("curriculum stage {stage} ran {stage_step} epochs");
    }
    trainer.finish(stages)
}
