use std::path::Path;

use serde::{Deserialize, Serialize};

use super::input::InputSchema;
use super::model::{Architecture, SageModel};
use super::optim::{Adam, AdamConfig};
use super::train::{EpochRecord, ModelState, StageRecord, TrainConfig};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Tensor {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Weights {
    schema: InputSchema,
    arch: Architecture,
    tensors: Vec<Tensor>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Moments {
    config: AdamConfig,
    step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    config: TrainConfig,
    best_epoch: usize,
    best_val_loss: f64,
    weights: Weights,
    optimizer: Moments,
    history: Vec<EpochRecord>,
    stages: Vec<StageRecord>,
}

fn dump(model: &SageModel) -> Vec<Tensor> {
    model
        .tensors()
        .into_iter()
        .zip(model.tensor_shapes())
        .map(|((name, data), shape)| Tensor {
            name,
            shape,
            data: data.to_vec(),
        })
        .collect()
}

fn fill(model: &mut SageModel, tensors: &[Tensor]) -> Result<()> {
    let shapes = model.tensor_shapes();
    let slots = model.tensors_mut();
    if slots.len() != tensors.len() {
        return Err(Error::Serialization(format!(
            "checkpoint holds {} tensors, architecture needs {}",
            tensors.len(),
            slots.len()
        )));
    }
    for (((name, slot), shape), t) in slots.into_iter().zip(shapes).zip(tensors) {
        if t.name != name || t.shape != shape || t.data.len() != slot.len() {
            return Err(Error::Serialization(format!(
                "tensor `{}` {:?} does not fit slot `{name}` {shape:?}",
                t.name, t.shape
            )));
        }
        slot.copy_from_slice(&t.data);
    }
    Ok(())
}

pub fn model_to_json(state: &ModelState) -> Result<String> {
    let file = CheckpointFile {
        format_version: CHECKPOINT_VERSION,
        config: state.config.clone(),
        best_epoch: state.best_epoch,
        best_val_loss: state.best_val_loss,
        weights: Weights {
            schema: state.model.schema.clone(),
            arch: state.model.arch.clone(),
            tensors: dump(&state.model),
        },
        optimizer: Moments {
            config: state.optimizer.config,
            step: state.optimizer.step,
            m: dump(&state.optimizer.m),
            v: dump(&state.optimizer.v),
        },
        history: state.history.clone(),
        stages: state.stages.clone(),
    };
    serde_json::to_string(&file).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn model_from_json(text: &str) -> Result<ModelState> {
    let file: CheckpointFile = serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
    if file.format_version != CHECKPOINT_VERSION {
        return Err(Error::Serialization(format!(
            "unsupported checkpoint version {}",
            file.format_version
        )));
    }
    let mut model = SageModel::init(file.weights.schema, file.weights.arch, 0)?;
    fill(&mut model, &file.weights.tensors)?;
    let mut optimizer = Adam::new(&model, file.optimizer.config);
    optimizer.step = file.optimizer.step;
    fill(&mut optimizer.m, &file.optimizer.m)?;
    fill(&mut optimizer.v, &file.optimizer.v)?;
    Ok(ModelState {
        model,
        optimizer,
        config: file.config,
        history: file.history,
        stages: file.stages,
        best_epoch: file.best_epoch,
        best_val_loss: file.best_val_loss,
    })
}

pub fn save_checkpoint(path: &Path, state: &ModelState) -> Result<()> {
    std::fs::write(path, model_to_json(state)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelState> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}
