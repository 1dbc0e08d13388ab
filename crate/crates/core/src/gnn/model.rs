use std::collections::{BTreeMap, BTreeSet};

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::input::{InputSchema, ModelInput};
use super::layer::{project_features, sage_forward, NeighborIndex, Projection, SageLayer};
use super::loss::log_softmax;
use crate::error::{Error, Result};

pub const HIDDEN_DIM: usize = 512;
pub const NUM_CLASSES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub hidden: usize,
    pub classes: usize,
    /// Node types whose raw features are first projected to the given width.
    #[serde(default)]
    pub projections: BTreeMap<String, usize>,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            hidden: HIDDEN_DIM,
            classes: NUM_CLASSES,
            projections: BTreeMap::new(),
        }
    }
}

/// Parameters of a two-layer relation-wise convolution network.
#[derive(Debug, Clone, PartialEq)]
pub struct SageModel {
    pub schema: InputSchema,
    pub arch: Architecture,
    pub projections: BTreeMap<String, Projection>,
    pub layer1: BTreeMap<String, SageLayer>,
    pub layer2: BTreeMap<String, SageLayer>,
}

/// How dropout masks are obtained for a forward pass.
#[derive(Debug, Clone)]
pub enum Dropout {
    Off,
    /// Inverted dropout applied to the layer-2 input.
    Sample { rate: f64, seed: u64 },
    /// Reuse masks from an earlier pass (one per input type, `None` where
    /// the type has no hidden state).
    Fixed(Vec<Option<Array2<f64>>>),
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub x0: Vec<Array2<f64>>,
    pub agg1: Vec<Array2<f64>>,
    pub pre1: Vec<Option<Array2<f64>>>,
    pub masks: Vec<Option<Array2<f64>>>,
    pub h1: Vec<Option<Array2<f64>>>,
    pub agg2: BTreeMap<usize, Array2<f64>>,
    pub logits: Array2<f64>,
    pub logp: Array2<f64>,
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

struct Plan {
    dims: BTreeMap<String, usize>,
    layer2: BTreeSet<String>,
}

fn plan(schema: &InputSchema, arch: &Architecture) -> Result<Plan> {
    let mut dims = BTreeMap::new();
    for (name, d) in &schema.types {
        let width = arch.projections.get(name).copied().unwrap_or(*d);
        dims.insert(name.clone(), width);
    }
    for name in arch.projections.keys() {
        if !dims.contains_key(name) {
            return Err(Error::ModelSchema(format!("projection for unknown node type `{name}`")));
        }
    }
    let hidden_types: BTreeSet<String> = schema.relations.iter().map(|r| r.2.clone()).collect();
    if !hidden_types.contains(&schema.target) {
        return Err(Error::ModelSchema(format!(
            "target type `{}` receives no relation",
            schema.target
        )));
    }
    let layer2 = schema
        .relations
        .iter()
        .filter(|r| r.2 == schema.target && hidden_types.contains(&r.1))
        .map(|r| r.0.clone())
        .collect();
    Ok(Plan {
        dims,

        layer2,
    })
}

impl SageModel {
    pub fn init(schema: InputSchema, arch: Architecture, seed: u64) -> Result<Self> {
        if arch.hidden == 0 || arch.classes < 2 {
            return Err(Error::Config("hidden width must be positive and classes at least 2".into()));
        }
        let p = plan(&schema, &arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive(seed, "init"));
        let mut projections = BTreeMap::new();
        for (name, &out) in &arch.projections {
            let input = schema.type_dim(name).expect("planned");
            projections.insert(name.clone(), Projection::init(input, out, &mut rng));
        }
        let rels: BTreeMap<&String, (&String, &String)> =
            schema.relations.iter().map(|r| (&r.0, (&r.1, &r.2))).collect();
        let mut layer1 = BTreeMap::new();
        for (name, (src, dst)) in &rels {
            layer1.insert((*name).clone(), SageLayer::init(p.dims[*dst], p.dims[*src], arch.hidden, &mut rng));
        }
        let mut layer2 = BTreeMap::new();
        for name in &p.layer2 {
            layer2.insert(name.clone(), SageLayer::init(arch.hidden, arch.hidden, arch.classes, &mut rng));
        }
        Ok(Self {
            schema,
            arch,
            projections,
            layer1,
            layer2,
        })
    }

    /// Same structure with every parameter zero (used for gradients and moments).
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, t) in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    /// All parameter tensors in a fixed order, flattened row-major.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        for (n, p) in &self.projections {
            out.push((format!("proj.{n}.weight"), p.weight.as_slice().expect("standard layout")));
            out.push((format!("proj.{n}.bias"), p.bias.as_slice().expect("standard layout")));
        }
        for (tag, layers) in [("l1", &self.layer1), ("l2", &self.layer2)] {
            for (n, l) in layers {
                out.push((format!("{tag}.{n}.w_self"), l.w_self.as_slice().expect("standard layout")));
                out.push((format!("{tag}.{n}.w_neigh"), l.w_neigh.as_slice().expect("standard layout")));
                out.push((format!("{tag}.{n}.bias"), l.bias.as_slice().expect("standard layout")));
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = Vec::new();
        for (n, p) in self.projections.iter_mut() {
            out.push((format!("proj.{n}.weight"), p.weight.as_slice_mut().expect("standard layout")));
            out.push((format!("proj.{n}.bias"), p.bias.as_slice_mut().expect("standard layout")));
        }
        for (tag, layers) in [("l1", &mut self.layer1), ("l2", &mut self.layer2)] {
            for (n, l) in layers.iter_mut() {
                out.push((format!("{tag}.{n}.w_self"), l.w_self.as_slice_mut().expect("standard layout")));
                out.push((format!("{tag}.{n}.w_neigh"), l.w_neigh.as_slice_mut().expect("standard layout")));
                out.push((format!("{tag}.{n}.bias"), l.bias.as_slice_mut().expect("standard layout")));
            }
        }
        out
    }

    /// Shapes aligned with [`tensors`](Self::tensors).
    pub fn tensor_shapes(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for p in self.projections.values() {
            out.push(p.weight.shape().to_vec());
            out.push(p.bias.shape().to_vec());
        }
        for l in self.layer1.values().chain(self.layer2.values()) {
            out.push(l.w_self.shape().to_vec());
            out.push(l.w_neigh.shape().to_vec());
            out.push(l.bias.shape().to_vec());
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.1.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.1.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, input: &ModelInput) -> Result<()> {
        let got = input.schema();
        if got.target != self.schema.target {
            return Err(Error::ModelSchema(format!(
                "input target `{}` but model was built for `{}`",
                got.target, self.schema.target
            )));
        }
        for (name, d) in &got.types {
            match self.schema.type_dim(name) {
                Some(e) if e == *d => {}
                Some(e) => return Err(Error::shape(format!("feature dim of `{name}`"), e, *d)),
                None => return Err(Error::ModelSchema(format!("no parameters for node type `{name}`"))),
            }
        }
        for r in &got.relations {
            if !self.schema.relations.contains(r) {
                return Err(Error::ModelSchema(format!(
                    "no parameters for edge type `{}` ({} -> {})",
                    r.0, r.1, r.2
                )));
            }
        }
        if got.relations.len() != self.schema.relations.len() {
            return Err(Error::ModelSchema("input lacks edge types the model was built with".into()));
        }
        Ok(())
    }

    pub fn forward(&self, input: &ModelInput, dropout: Dropout) -> Result<ForwardPass> {
        self.check_input(input)?;
        let nt = input.types.len();
        let mut x0 = Vec::with_capacity(nt);
        for t in &input.types {
            x0.push(match self.projections.get(&t.name) {
                Some(p) => project_features(t.features.view(), p)?,
                None => t.features.clone(),
            });
        }

        let mut agg1 = Vec::with_capacity(input.relations.len());
        let mut pre1: Vec<Option<Array2<f64>>> = vec![None; nt];
        for r in &input.relations {
            let layer = &self.layer1[&r.name];
            let agg = r.index.aggregate(x0[r.src].view())?;
            let out = layer.apply(x0[r.dst].view(), agg.view())?;
            pre1[r.dst] = Some(match pre1[r.dst].take() {
                None => out,
                Some(acc) => acc + &out,
            });
            agg1.push(agg);
        }

        let masks: Vec<Option<Array2<f64>>> = match dropout {
            Dropout::Off => vec![None; nt],
            Dropout::Fixed(m) => {
                if m.len() != nt {
                    return Err(Error::shape("dropout masks", nt, m.len()));
                }
                m
            }
            Dropout::Sample { rate, seed } if rate > 0.0 => {
                if rate >= 1.0 {
                    return Err(Error::Config(format!("dropout {rate} outside [0, 1)")));
                }
                let keep = 1.0 - rate;
                let scale = 1.0 / keep;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                pre1.iter()
                    .map(|p| {
                        p.as_ref().map(|p| {
                            Array2::from_shape_fn(p.raw_dim(), |_| if rng.gen::<f64>() < keep { scale } else { 0.0 })
                        })
                    })
                    .collect()
            }
            Dropout::Sample { .. } => vec![None; nt],
        };

        let h1: Vec<Option<Array2<f64>>> = pre1
            .iter()
            .zip(&masks)
            .map(|(p, m)| {
                p.as_ref().map(|p| {
                    let h = p.mapv(relu);
                    match m {
                        Some(m) => h * m,
                        None => h,
                    }
                })
            })
            .collect();

        let tgt = input.target;
        let h_tgt = h1[tgt].as_ref().ok_or_else(|| Error::ModelSchema("target type has no hidden state".into()))?;
        let mut logits: Option<Array2<f64>> = None;
        let mut agg2 = BTreeMap::new();
        for (ri, r) in input.relations.iter().enumerate() {
            let Some(layer) = self.layer2.get(&r.name) else { continue };
            let h_src = h1[r.src].as_ref().expect("planned relation source has hidden state");
            let agg = r.index.aggregate(h_src.view())?;
            let out = layer.apply(h_tgt.view(), agg.view())?;
            logits = Some(match logits.take() {
                None => out,
                Some(acc) => acc + &out,
            });
            agg2.insert(ri, agg);
        }
        let logits = logits.ok_or_else(|| Error::ModelSchema("no relation reaches the target type".into()))?;
        let logp = log_softmax(logits.view());
        Ok(ForwardPass {
            x0,
            agg1,
            pre1,
            masks,
            h1,
            agg2,
            logits,
            logp,
        })
    }

    /// Exact reverse-mode gradients given `dlogits`.
    pub fn backward(&self, input: &ModelInput, pass: &ForwardPass, dlogits: ArrayView2<f64>) -> Result<SageModel> {
        if dlogits.dim() != pass.logits.dim() {
            return Err(Error::shape("logit gradient rows", pass.logits.nrows(), dlogits.nrows()));
        }
        let mut g = self.zeros_like();
        let nt = input.types.len();
        let tgt = input.target;

        let mut dh1: Vec<Option<Array2<f64>>> = pass.h1.iter().map(|h| h.as_ref().map(|h| Array2::zeros(h.raw_dim()))).collect();
        let h_tgt = pass.h1[tgt].as_ref().expect("forward checked");
        for (&ri, agg) in &pass.agg2 {
            let r = &input.relations[ri];
            let layer = &self.layer2[&r.name];
            let gl = g.layer2.get_mut(&r.name).expect("same structure");
            gl.w_self.assign(&dlogits.t().dot(h_tgt));
            gl.w_neigh.assign(&dlogits.t().dot(agg));
            gl.bias.assign(&dlogits.sum_axis(Axis(0)));
            *dh1[tgt].as_mut().expect("target hidden") += &dlogits.dot(&layer.w_self);
            let dagg = dlogits.dot(&layer.w_neigh);
            r.index.scatter_transpose(dagg.view(), dh1[r.src].as_mut().expect("source hidden"));
        }

        let dpre: Vec<Option<Array2<f64>>> = (0..nt)
            .map(|t| {
                let (Some(d), Some(pre)) = (dh1[t].take(), pass.pre1[t].as_ref()) else { return None };
                let mut d = match &pass.masks[t] {
                    Some(m) => d * m,
                    None => d,
                };
                ndarray::Zip::from(&mut d).and(pre).for_each(|d, &p| {
                    if p <= 0.0 {
                        *d = 0.0;
                    }
                });
                Some(d)
            })
            .collect();

        let mut dx0: Vec<Option<Array2<f64>>> = input
            .types
            .iter()
            .enumerate()
            .map(|(t, ty)| self.projections.contains_key(&ty.name).then(|| Array2::zeros(pass.x0[t].raw_dim())))
            .collect();
        for (ri, r) in input.relations.iter().enumerate() {
            let d = dpre[r.dst].as_ref().expect("relation destination has hidden state");
            let layer = &self.layer1[&r.name];
            let gl = g.layer1.get_mut(&r.name).expect("same structure");
            gl.w_self.assign(&d.t().dot(&pass.x0[r.dst]));
            gl.w_neigh.assign(&d.t().dot(&pass.agg1[ri]));
            gl.bias.assign(&d.sum_axis(Axis(0)));
            if let Some(dx) = dx0[r.dst].as_mut() {
                *dx += &d.dot(&layer.w_self);
            }
            if let Some(dx) = dx0[r.src].as_mut() {
                let dagg = d.dot(&layer.w_neigh);
                r.index.scatter_transpose(dagg.view(), dx);
            }
        }

        for (t, ty) in input.types.iter().enumerate() {
            if let (Some(dx), Some(gp)) = (dx0[t].as_ref(), g.projections.get_mut(&ty.name)) {
                gp.weight.assign(&dx.t().dot(&ty.features));
                gp.bias.assign(&dx.sum_axis(Axis(0)));
            }
        }
        Ok(g)
    }
}

/// Two stacked single-relation convolutions on one node set, with ReLU
/// in between and log-softmax on top.
pub fn homogeneous_forward(
    layer1: &SageLayer,
    layer2: &SageLayer,
    x: ArrayView2<f64>,
    index: &NeighborIndex,
) -> Result<Array2<f64>> {
    let h = sage_forward(layer1, x, index)?.mapv(relu);
    let logits = sage_forward(layer2, h.view(), index)?;
    Ok(log_softmax(logits.view()))
}

/// Class probabilities of one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub domain: String,
    pub p_reliable: f64,
    pub p_unreliable: f64,
}

impl Prediction {
    /// Confidence that the domain is unreliable.
    pub fn confidence(&self) -> f64 {
        self.p_unreliable
    }
}

/// Dropout-free probabilities for every domain row of the input.
pub fn predict(model: &SageModel, input: &ModelInput) -> Result<Vec<Prediction>> {
    let pass = model.forward(input, Dropout::Off)?;
    let ids = input.target_ids();
    Ok(input
        .domain_rows
        .iter()
        .map(|&r| Prediction {
            domain: ids[r].clone(),
            p_reliable: pass.logp[[r, 0]].exp(),
            p_unreliable: pass.logp[[r, 1]].exp(),
        })
        .collect())
}
