use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::graph::{DomainRecord, EdgeType, HeteroGraph, Label, NodeType, Split};
use crate::ingest::VectorTable;

fn rand_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((r, c), |_| rng.gen_range(-1.0..1.0))
}

fn rand_edges(ns: usize, nd: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, f64)> {
    (0..m)
        .map(|_| (rng.gen_range(0..ns), rng.gen_range(0..nd), rng.gen_range(1..5) as f64))
        .collect()
}

fn ty(name: &str, n: usize, dim: usize, rng: &mut ChaCha8Rng) -> TypeInput {
    TypeInput {
        name: name.into(),
        ids: (0..n).map(|i| format!("{name}{i}")).collect(),
        features: rand_matrix(n, dim, rng),
    }
}

fn rel(name: &str, src: usize, dst: usize, ns: usize, nd: usize, m: usize, weighted: bool, rng: &mut ChaCha8Rng) -> RelationInput {
    RelationInput {
        name: name.into(),
        src,
        dst,
        index: NeighborIndex::new(ns, nd, &rand_edges(ns, nd, m, rng), weighted).unwrap(),
    }
}

/// 20 nodes: 10 domains, 6 users, 4 dredge words, with reverse relations.
fn hetero_input(seed: u64) -> ModelInput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let types = vec![ty("domain", 10, 5, &mut rng), ty("user", 6, 7, &mut rng), ty("dredge", 4, 3, &mut rng)];
    let relations = vec![
        rel("phi1", 0, 0, 10, 10, 18, false, &mut rng),
        rel("phi2", 1, 0, 6, 10, 14, true, &mut rng),
        rel("rev_phi2", 0, 1, 10, 6, 14, false, &mut rng),
        rel("phi4", 2, 0, 4, 10, 8, false, &mut rng),
        rel("rev_phi4", 0, 2, 10, 4, 8, false, &mut rng),
    ];
    ModelInput::new(types, relations, 0).unwrap()
}

fn homo_input(n: usize, dim: usize, m: usize, seed: u64) -> ModelInput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let types = vec![ty("node", n, dim, &mut rng)];
    let relations = vec![rel("edge", 0, 0, n, n, m, false, &mut rng)];
    ModelInput::new(types, relations, 0).unwrap()
}

fn labels_for(n: usize, rng: &mut ChaCha8Rng) -> (Vec<Option<usize>>, Vec<bool>) {
    let labels: Vec<Option<usize>> = (0..n).map(|i| if i % 5 == 4 { None } else { Some(rng.gen_range(0..2)) }).collect();
    let mask = labels.iter().map(Option::is_some).collect();
    (labels, mask)
}

fn small_arch(projections: &[(&str, usize)]) -> Architecture {
    Architecture {
        hidden: 8,
        classes: 2,
        projections: projections.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

fn loss_at(model: &SageModel, input: &ModelInput, labels: &[Option<usize>], mask: &[bool], d: &Dropout) -> f64 {
    let pass = model.forward(input, d.clone()).unwrap();
    masked_nll(pass.logp.view(), labels, mask).unwrap()
}

/// Largest relative error between analytic and central-difference gradients.
fn max_fd_error(model: &mut SageModel, input: &ModelInput, labels: &[Option<usize>], mask: &[bool], dropout: Dropout) -> (f64, String) {
    let pass = model.forward(input, dropout.clone()).unwrap();
    let fixed = Dropout::Fixed(pass.masks.clone());
    let dl = masked_nll_grad(pass.logp.view(), labels, mask).unwrap();
    let grads = model.backward(input, &pass, dl.view()).unwrap();
    let analytic: Vec<(String, Vec<f64>)> = grads.tensors().into_iter().map(|(n, g)| (n, g.to_vec())).collect();
    let eps = 1e-5;
    let mut worst = (0.0, String::new());
    for (k, (name, ga)) in analytic.iter().enumerate() {
        for i in 0..ga.len() {
            let orig = model.tensors_mut()[k].1[i];
            model.tensors_mut()[k].1[i] = orig + eps;
            let lp = loss_at(model, input, labels, mask, &fixed);
            model.tensors_mut()[k].1[i] = orig - eps;
            let lm = loss_at(model, input, labels, mask, &fixed);
            model.tensors_mut()[k].1[i] = orig;
            let num = (lp - lm) / (2.0 * eps);
            let rel = (ga[i] - num).abs() / (ga[i].abs() + num.abs()).max(1e-6);
            if rel > worst.0 {
                worst = (rel, format!("{name}[{i}]"));
            }
        }
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    for point in 0..3u64 {
        let input = hetero_input(100 + point);
        let mut rng = ChaCha8Rng::seed_from_u64(point);
        let (labels, mask) = labels_for(10, &mut rng);
        let mut model = SageModel::init(input.schema(), small_arch(&[("user", 4)]), point).unwrap();
        let (err, at) = max_fd_error(&mut model, &input, &labels, &mask, Dropout::Sample { rate: 0.5, seed: point });
        assert!(err < 1e-4, "hetero point {point}: {err} at {at}");

        let homo = homo_input(20, 6, 45, 200 + point);
        let (labels, mask) = labels_for(20, &mut rng);
        let mut model = SageModel::init(homo.schema(), small_arch(&[]), point).unwrap();
        let (err, at) = max_fd_error(&mut model, &homo, &labels, &mask, Dropout::Off);
        assert!(err < 1e-4, "homo point {point}: {err} at {at}");
    }
}

#[test]
fn projection_gradient_passes_fd() {
    let input = homo_input(20, 9, 40, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (labels, mask) = labels_for(20, &mut rng);
    let mut model = SageModel::init(input.schema(), small_arch(&[("node", 5)]), 3).unwrap();
    let (err, at) = max_fd_error(&mut model, &input, &labels, &mask, Dropout::Sample { rate: 0.3, seed: 1 });
    assert!(err < 1e-4, "{err} at {at}");
}

#[test]
fn sage_forward_matches_dense_oracle() {
    for g in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(g);
        let n = 50;
        let edges = rand_edges(n, n, 150, &mut rng);
        let idx = NeighborIndex::new(n, n, &edges, false).unwrap();
        let x = rand_matrix(n, 6, &mut rng);
        let layer = SageLayer::init(6, 6, 4, &mut rng);
        let h = sage_forward(&layer, x.view(), &idx).unwrap();

        // row-normalized adjacency over distinct (src, dst) multiplicities
        let mut a = Array2::<f64>::zeros((n, n));
        for &(s, d, _) in &edges {
            a[[d, s]] += 1.0;
        }
        for mut row in a.rows_mut() {
            let deg = row.sum();
            if deg > 0.0 {
                row /= deg;
            }
        }
        let dense = a.dot(&x).dot(&layer.w_neigh.t()) + x.dot(&layer.w_self.t()) + &layer.bias;
        let diff = (&h - &dense).mapv(f64::abs).fold(0.0f64, |m, &v| m.max(v));
        assert!(diff < 1e-6, "graph {g}: {diff}");
    }
}

#[test]
fn single_relation_hetero_is_bitwise_homogeneous() {
    let input = homo_input(30, 5, 70, 11);
    let model = SageModel::init(input.schema(), Architecture::default(), 5).unwrap();
    let hetero = model.forward(&input, Dropout::Off).unwrap().logp;
    let homo = homogeneous_forward(&model.layer1["edge"], &model.layer2["edge"], input.types[0].features.view(), &input.relations[0].index).unwrap();
    assert_eq!(hetero, homo);
}

fn domain_graph(n: usize, edges: &[(usize, usize)]) -> HeteroGraph {
    let mut b = HeteroGraph::builder();
    for i in 0..n {
        let label = if i % 2 == 0 { Label::Reliable } else { Label::Unreliable };
        let score = if label == Label::Reliable { 0.9 } else { 0.1 };
        let split = [Split::Train, Split::Train, Split::Val, Split::Test][i % 4];
        b.add_domain(DomainRecord::new(format!("d{i}.com"), vec![0.0; 23], Some((score, label))).unwrap().with_split(split))
            .unwrap();
    }
    for &(s, t) in edges {
        b.add_edge(&format!("d{s}.com"), &format!("d{t}.com"), EdgeType::DomainDomain, Some(1)).unwrap();
    }
    b.build().unwrap()
}

fn features_for(graph: &HeteroGraph, dims: &[(NodeType, usize)], seed: u64) -> BTreeMap<NodeType, VectorTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BTreeMap::new();
    for &(kind, dim) in dims {
        let mut t = VectorTable::new(dim);
        for (_, node) in graph.nodes_of(kind) {
            t.insert(node.id.clone(), (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        }
        out.insert(kind, t);
    }
    out
}

#[test]
fn phi1_only_graph_degenerates_to_homogeneous() {
    let edges: Vec<(usize, usize)> = (0..12).flat_map(|i| [(i, (i + 1) % 12), (i, (i + 5) % 12)]).collect();
    let g = domain_graph(12, &edges);
    let feats = features_for(&g, &[(NodeType::Domain, 4)], 1);
    let het = ModelInput::heterogeneous(&g, &feats, ReverseEdges::default(), false).unwrap();
    let hom = ModelInput::homogeneous(&g, &feats, ReverseEdges::default(), false).unwrap();
    let mh = SageModel::init(het.schema(), small_arch(&[]), 9).unwrap();
    let out_het = mh.forward(&het, Dropout::Off).unwrap().logp;
    let out_hom = homogeneous_forward(&mh.layer1["phi1"], &mh.layer2["phi1"], hom.types[0].features.view(), &hom.relations[0].index).unwrap();
    assert_eq!(out_het, out_hom);
    for row in out_het.rows() {
        assert!((row.iter().map(|v| v.exp()).sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

fn naive_layer(l: &SageLayer, x_self: &[f64], neigh: &[&[f64]]) -> Vec<f64> {
    let out = l.out_dim();
    let mut h = vec![0.0; out];
    for o in 0..out {
        let mut acc = l.bias[o];
        for (k, v) in x_self.iter().enumerate() {
            acc += l.w_self[[o, k]] * v;
        }
        if !neigh.is_empty() {
            for k in 0..l.in_neigh() {
                let mean = neigh.iter().map(|n| n[k]).sum::<f64>() / neigh.len() as f64;
                acc += l.w_neigh[[o, k]] * mean;
            }
        }
        h[o] = acc;
    }
    h
}

#[test]
fn three_type_toy_matches_hand_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let types = vec![ty("domain", 4, 3, &mut rng), ty("user", 3, 2, &mut rng), ty("dredge", 2, 2, &mut rng)];
    let lists: Vec<(&str, usize, usize, Vec<(usize, usize)>)> = vec![
        ("phi1", 0, 0, vec![(0, 1), (2, 1), (3, 0)]),
        ("phi2", 1, 0, vec![(0, 0), (1, 0), (2, 3), (1, 2)]),
        ("rev_phi2", 0, 1, vec![(0, 0), (0, 1), (3, 2), (2, 1)]),
        ("phi4", 2, 0, vec![(0, 1), (1, 1), (1, 3)]),
        ("rev_phi4", 0, 2, vec![(1, 0), (1, 1), (3, 1)]),
    ];
    let relations: Vec<RelationInput> = lists
        .iter()
        .map(|(name, s, d, e)| RelationInput {
            name: name.to_string(),
            src: *s,
            dst: *d,
            index: NeighborIndex::new(
                types[*s].ids.len(),
                types[*d].ids.len(),
                &e.iter().map(|&(a, b)| (a, b, 1.0)).collect::<Vec<_>>(),
                false,
            )
            .unwrap(),
        })
        .collect();
    let input = ModelInput::new(types, relations, 0).unwrap();
    let model = SageModel::init(input.schema(), small_arch(&[]), 4).unwrap();
    let got = model.forward(&input, Dropout::Off).unwrap().logp;

    let feat = |t: usize, i: usize| input.types[t].features.row(i).to_vec();
    let mut hidden: Vec<Vec<Vec<f64>>> = (0..3).map(|t| vec![vec![0.0; 8]; input.types[t].ids.len()]).collect();
    for (name, s, d, e) in &lists {
        for v in 0..input.types[*d].ids.len() {
            let nb: Vec<Vec<f64>> = e.iter().filter(|p| p.1 == v).map(|p| feat(*s, p.0)).collect();
            let refs: Vec<&[f64]> = nb.iter().map(Vec::as_slice).collect();
            let h = naive_layer(&model.layer1[*name], &feat(*d, v), &refs);
            for k in 0..8 {
                hidden[*d][v][k] += h[k];
            }
        }
    }
    for t in hidden.iter_mut() {
        for row in t.iter_mut() {
            for v in row.iter_mut() {
                *v = v.max(0.0);
            }
        }
    }
    for v in 0..4 {
        let mut logits = [0.0; 2];
        for (name, s, d, e) in &lists {
            if *d != 0 {
                continue;
            }
            let refs: Vec<&[f64]> = e.iter().filter(|p| p.1 == v).map(|p| hidden[*s][p.0].as_slice()).collect();
            let o = naive_layer(&model.layer2[*name], &hidden[0][v], &refs);
            logits[0] += o[0];
            logits[1] += o[1];
        }
        let lse = (logits[0].exp() + logits[1].exp()).ln();
        for c in 0..2 {
            assert!((got[[v, c]] - (logits[c] - lse)).abs() < 1e-9);
        }
    }
}

#[test]
fn missing_relation_parameters_is_schema_error() {
    let input = hetero_input(3);
    let model = SageModel::init(input.schema(), small_arch(&[]), 0).unwrap();
    let mut other = input.clone();
    other.relations[1].name = "phi3".into();
    assert!(matches!(model.forward(&other, Dropout::Off), Err(crate::Error::ModelSchema(_))));
}

#[test]
fn excluded_nodes_do_not_affect_masked_loss() {
    // component A: domains 0..6 + user 0..2; component B: domains 6..10 + users 3..5
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let types = vec![ty("domain", 10, 4, &mut rng), ty("user", 6, 3, &mut rng)];
    let a: Vec<(usize, usize, f64)> = vec![(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0), (4, 5, 1.0), (7, 8, 1.0), (9, 6, 1.0)];
    let ud: Vec<(usize, usize, f64)> = vec![(0, 0, 1.0), (1, 3, 1.0), (2, 5, 1.0), (3, 7, 1.0), (4, 9, 1.0), (5, 6, 1.0)];
    let du: Vec<_> = ud.iter().map(|&(u, d, w)| (d, u, w)).collect();
    let relations = vec![
        RelationInput { name: "phi1".into(), src: 0, dst: 0, index: NeighborIndex::new(10, 10, &a, false).unwrap() },
        RelationInput { name: "phi2".into(), src: 1, dst: 0, index: NeighborIndex::new(6, 10, &ud, false).unwrap() },
        RelationInput { name: "rev_phi2".into(), src: 0, dst: 1, index: NeighborIndex::new(10, 6, &du, false).unwrap() },
    ];
    let input = ModelInput::new(types, relations, 0).unwrap();
    let labels: Vec<Option<usize>> = (0..10).map(|i| Some(i % 2)).collect();
    let mask: Vec<bool> = (0..10).map(|i| i < 6).collect();
    let model = SageModel::init(input.schema(), small_arch(&[("user", 3)]), 1).unwrap();
    let base = loss_at(&model, &input, &labels, &mask, &Dropout::Off);

    let mut perturbed = input.clone();
    for i in 6..10 {
        perturbed.types[0].features.row_mut(i).mapv_inplace(|v| v * 3.0 + 1.0);
    }
    for u in 3..6 {
        perturbed.types[1].features.row_mut(u).fill(7.5);
    }
    let mut flipped = labels.clone();
    for l in flipped.iter_mut().skip(6) {
        *l = l.map(|c| 1 - c);
    }
    assert_eq!(loss_at(&model, &perturbed, &flipped, &mask, &Dropout::Off), base);

    // the user projection only sees users wired into component A through rows 0..3
    let pass = model.forward(&input, Dropout::Off).unwrap();
    let only_b: Vec<bool> = (0..10).map(|i| i >= 6).collect();
    let dl = masked_nll_grad(pass.logp.view(), &labels, &only_b).unwrap();
    let g = model.backward(&input, &pass, dl.view()).unwrap();
    let pw = &g.projections["user"].weight;
    assert!(pw.iter().any(|&v| v != 0.0));
    let dl_a = masked_nll_grad(pass.logp.view(), &labels, &mask).unwrap();
    let ga = model.backward(&input, &pass, dl_a.view()).unwrap();
    // users 3..5 only connect to component B; zeroing their features leaves component-A gradients fixed
    let mut zeroed = input.clone();
    for u in 3..6 {
        zeroed.types[1].features.row_mut(u).fill(0.0);
    }
    let pz = model.forward(&zeroed, Dropout::Off).unwrap();
    let gz = model.backward(&zeroed, &pz, masked_nll_grad(pz.logp.view(), &labels, &mask).unwrap().view()).unwrap();
    assert_eq!(ga.projections["user"], gz.projections["user"]);
}

#[test]
fn perfect_fit_has_zero_gradient() {
    let input = homo_input(12, 3, 20, 2);
    let mut model = SageModel::init(input.schema(), small_arch(&[]), 2).unwrap();
    for (name, t) in model.tensors_mut() {
        if name == "l2.edge.bias" {
            t.copy_from_slice(&[0.0, -1000.0]);
        } else {
            t.fill(0.0);
        }
    }
    let labels = vec![Some(0); 12];
    let mask = vec![true; 12];
    let pass = model.forward(&input, Dropout::Off).unwrap();
    assert_eq!(masked_nll(pass.logp.view(), &labels, &mask).unwrap(), 0.0);
    let g = model.backward(&input, &pass, masked_nll_grad(pass.logp.view(), &labels, &mask).unwrap().view()).unwrap();
    assert!(g.tensors().iter().all(|t| t.1.iter().all(|&v| v == 0.0)));
}

#[test]
fn permutation_equivariance() {
    let input = homo_input(25, 4, 60, 13);
    let model = SageModel::init(input.schema(), small_arch(&[]), 8).unwrap();
    let out = model.forward(&input, Dropout::Off).unwrap().logp;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut perm: Vec<usize> = (0..25).collect();
    rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
    let idx = &input.relations[0].index;
    let mut edges = Vec::new();
    for d in 0..25 {
        for (s, _) in idx.neighbors(d) {
            edges.push((perm[s], perm[d], 1.0));
        }
    }
    let mut x = Array2::zeros((25, 4));
    for i in 0..25 {
        x.row_mut(perm[i]).assign(&input.types[0].features.row(i));
    }
    let permuted = ModelInput::new(
        vec![TypeInput { name: "node".into(), ids: input.types[0].ids.clone(), features: x }],
        vec![RelationInput { name: "edge".into(), src: 0, dst: 0, index: NeighborIndex::new(25, 25, &edges, false).unwrap() }],
        0,
    )
    .unwrap();
    let out_p = model.forward(&permuted, Dropout::Off).unwrap().logp;
    for i in 0..25 {
        for c in 0..2 {
            assert!((out[[i, c]] - out_p[[perm[i], c]]).abs() < 1e-12);
        }
    }
}

/// Two planted blocks of domains whose features and links follow the label.
pub(crate) fn planted(n: usize, seed: u64) -> (HeteroGraph, BTreeMap<NodeType, VectorTable>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = HeteroGraph::builder();
    let mut feats = VectorTable::new(23);
    for i in 0..n {
        let unreliable = i % 2 == 1;
        let label = if unreliable { Label::Unreliable } else { Label::Reliable };
        let score = if unreliable { rng.gen_range(0.0..0.5) } else { rng.gen_range(0.55..1.0) };
        let split = match i % 10 {
            8 => Split::Val,
            9 => Split::Test,
            _ => Split::Train,
        };
        let id = format!("d{i}.com");
        let attrs: Vec<f64> = (0..23).map(|_| rng.gen_range(0.0..1.0) + if unreliable { 0.3 } else { 0.0 }).collect();
        feats.insert(id.clone(), attrs.clone()).unwrap();
        b.add_domain(DomainRecord::new(id, attrs, Some((score, label))).unwrap().with_split(split)).unwrap();
    }
    for i in 0..n {
        for j in 0..n {
            let same = i % 2 == j % 2;
            if i != j && rng.gen::<f64>() < if same { 0.08 } else { 0.008 } {
                b.add_edge(&format!("d{i}.com"), &format!("d{j}.com"), EdgeType::DomainDomain, Some(1)).unwrap();
            }
        }
    }
    let mut m = BTreeMap::new();
    m.insert(NodeType::Domain, feats);
    (b.build().unwrap(), m)
}

fn quick_config(seed: u64) -> TrainConfig {
    TrainConfig {
        max_epochs: 200,
        patience: 30,
        base_lr: 1e-2,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn training_separates_planted_blocks() {
    let (g, f) = planted(200, 1);
    let input = ModelInput::heterogeneous(&g, &f, ReverseEdges::default(), false).unwrap();
    let sup = Supervision::from_graph(&g, &input);
    let model = SageModel::init(input.schema(), Architecture { hidden: 32, ..Architecture::default() }, 1).unwrap();
    let state = train(model, &input, &sup, &quick_config(1)).unwrap();
    let best = &state.history[state.best_epoch - 1];
    assert!(best.val_accuracy >= 0.9, "val accuracy {}", best.val_accuracy);
    // returned weights are the best-val epoch's weights
    let pass = state.model.forward(&input, Dropout::Off).unwrap();
    let vl = masked_nll(pass.logp.view(), &sup.labels, &sup.mask(Split::Val)).unwrap();
    assert_eq!(vl, state.best_val_loss);
    let min = state.history.iter().map(|r| r.val_loss).fold(f64::INFINITY, f64::min);
    assert_eq!(min, state.best_val_loss);
    assert!(state.history.windows(2).all(|w| w[1].epoch == w[0].epoch + 1));
}

#[test]
fn training_is_reproducible_and_checkpoints_round_trip() {
    let (g, f) = planted(80, 2);
    let input = ModelInput::heterogeneous(&g, &f, ReverseEdges::default(), false).unwrap();
    let sup = Supervision::from_graph(&g, &input);
    let cfg = TrainConfig { max_epochs: 40, patience: 10, ..quick_config(3) };
    let arch = Architecture { hidden: 16, ..Architecture::default() };
    let a = train(SageModel::init(input.schema(), arch.clone(), 3).unwrap(), &input, &sup, &cfg).unwrap();
    let b = train(SageModel::init(input.schema(), arch, 3).unwrap(), &input, &sup, &cfg).unwrap();
    assert_eq!(a, b);
    let restored = model_from_json(&model_to_json(&a).unwrap()).unwrap();
    assert_eq!(restored, a);
    let p1 = predict(&restored.model, &input).unwrap();
    let p2 = predict(&a.model, &input).unwrap();
    assert_eq!(p1, p2);
    for p in &p1 {
        assert!((0.0..=1.0).contains(&p.p_unreliable));
        assert!((p.p_reliable + p.p_unreliable - 1.0).abs() < 1e-12);
    }
}

#[test]
fn argmax_agrees_with_fitted_train_labels() {
    let (g, f) = planted(60, 4);
    let input = ModelInput::heterogeneous(&g, &f, ReverseEdges::default(), false).unwrap();
    let sup = Supervision::from_graph(&g, &input);
    let cfg = TrainConfig { max_epochs: 300, patience: 299, base_lr: 1e-2, dropout: 0.0, seed: 4, ..TrainConfig::default() };
    let model = SageModel::init(input.schema(), Architecture { hidden: 32, ..Architecture::default() }, 4).unwrap();
    let state = train(model, &input, &sup, &cfg).unwrap();
    let preds = predict(&state.model, &input).unwrap();
    let train = sup.mask(Split::Train);
    let agree = preds
        .iter()
        .enumerate()
        .filter(|(i, _)| train[*i])
        .filter(|(i, p)| usize::from(p.p_unreliable > p.p_reliable) == sup.labels[*i].unwrap())
        .count();
    let total = train.iter().filter(|&&b| b).count();
    assert!(agree as f64 / total as f64 >= 0.95, "{agree}/{total}");
}

#[test]
fn divergence_reports_epoch() {
    let (g, f) = planted(40, 5);
    let input = ModelInput::heterogeneous(&g, &f, ReverseEdges::default(), false).unwrap();
    let sup = Supervision::from_graph(&g, &input);
    let cfg = TrainConfig { max_epochs: 20, patience: 5, base_lr: 1e306, ..TrainConfig::default() };
    let model = SageModel::init(input.schema(), Architecture { hidden: 8, ..Architecture::default() }, 0).unwrap();
    match train(model, &input, &sup, &cfg) {
        Err(crate::Error::Training { epoch, .. }) => assert!(epoch >= 1 && epoch <= 20),
        other => panic!("expected divergence, got {:?}", other.map(|s| s.best_epoch)),
    }
}

#[test]
fn config_validation() {
    assert!(TrainConfig { patience: 1000, ..TrainConfig::default() }.validate().is_err());
    assert!(TrainConfig { base_lr: 0.0, ..TrainConfig::default() }.validate().is_err());
    assert!(TrainConfig::default().validate().is_ok());
    let _ = Array1::<f64>::zeros(1);
}
