use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EmbeddingTable, WalkCorpus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkipGramConfig {
    pub dim: usize,
    /// Window radius on each side of the center token.
    pub context: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate; decays linearly towards `lr * 1e-4`.
    pub lr: f64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        Self {
            dim: 23,
            context: 10,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SkipGramRun {
    pub table: EmbeddingTable,
    /// Objective on a fixed evaluation sample, measured after each epoch.
    pub epoch_losses: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Skip-gram with negative sampling. Noise words are drawn in proportion
/// to corpus frequency raised to 0.75; a noise draw equal to the positive
/// context is skipped. Single-threaded and deterministic under `seed`.
pub fn train_skipgram(corpus: &WalkCorpus, ids: &[String], cfg: &SkipGramConfig, seed: u64) -> Result<SkipGramRun> {
    if cfg.dim < 1 {
        return Err(Error::Config("embedding dimension must be >= 1".into()));
    }
    if corpus.walks.is_empty() {
        return Err(Error::Input("empty walk corpus".into()));
    }
    let vocab = ids.len();
    let dim = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut freq = vec![0.0f64; vocab];
    for w in &corpus.walks {
        for &t in w {
            if t >= vocab {
                return Err(Error::shape("walk token vocabulary", vocab, t + 1));
            }
            freq[t] += 1.0;
        }
    }
    let noise = WeightedIndex::new(freq.iter().map(|f| f.powf(0.75)))
        .map_err(|e| Error::Input(format!("noise distribution: {e}")))?;

    let bound = 0.5 / dim as f64;
    let mut input: Vec<f64> = (0..vocab * dim).map(|_| rng.gen_range(-bound..bound)).collect();
    let mut output = vec![0.0f64; vocab * dim];
    let mut grad = vec![0.0f64; dim];

    // Fixed evaluation pairs and noise draws, reused after every epoch.
    let eval_set = evaluation_pairs(corpus, cfg, &noise, seed);

    let total = (corpus.token_count() * cfg.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        for walk in &corpus.walks {
            for (i, &center) in walk.iter().enumerate() {
                let lr = cfg.lr * (1.0 - processed as f64 / total).max(1e-4);
                processed += 1;
                let lo = i.saturating_sub(cfg.context);
                let hi = (i + cfg.context).min(walk.len() - 1);
                for (j, &ctx) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let inp = &mut input[ctx * dim..(ctx + 1) * dim];
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for k in 0..=cfg.negatives {
                        let (target, positive) = if k == 0 {
                            (center, true)
                        } else {
                            let t = noise.sample(&mut rng);
                            if t == center {
                                continue;
                            }
                            (t, false)
                        };
                        let out = &mut output[target * dim..(target + 1) * dim];
                        let score: f64 = inp.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
                        let s = sigmoid(score);
                        let g = if positive { 1.0 - s } else { -s } * lr;
                        for d in 0..dim {
                            grad[d] += g * out[d];
                            out[d] += g * inp[d];
                        }
                    }
                    for d in 0..dim {
                        inp[d] += grad[d];
                    }
                }
            }
        }
        epoch_losses.push(objective(&eval_set, &input, &output, dim));
    }

    let vectors = input.chunks(dim).map(<[f64]>::to_vec).collect();
    Ok(SkipGramRun {
        table: EmbeddingTable::new(dim, ids.to_vec(), vectors)?,
        epoch_losses,
    })
}

/// (context, center, noise draws) triples used to evaluate the objective.
struct EvalPair {
    input: usize,
    positive: usize,
    negatives: Vec<usize>,
}

const MAX_EVAL_PAIRS: usize = 20_000;

fn evaluation_pairs(corpus: &WalkCorpus, cfg: &SkipGramConfig, noise: &WeightedIndex<f64>, seed: u64) -> Vec<EvalPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let all: usize = corpus
        .walks
        .iter()
        .map(|w| (0..w.len()).map(|i| (i + cfg.context).min(w.len() - 1) - i.saturating_sub(cfg.context)).sum::<usize>())
        .sum();
    let stride = all.div_ceil(MAX_EVAL_PAIRS).max(1);
    let mut out = Vec::new();
    let mut n = 0usize;
    for walk in &corpus.walks {
        for (i, &center) in walk.iter().enumerate() {
            let lo = i.saturating_sub(cfg.context);
            let hi = (i + cfg.context).min(walk.len() - 1);
            for (j, &ctx) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                if j == i {
                    continue;
                }
                if n.is_multiple_of(stride) {
                    let negatives = (0..cfg.negatives)
                        .map(|_| noise.sample(&mut rng))
                        .filter(|&t| t != center)
                        .collect();
                    out.push(EvalPair { input: ctx, positive: center, negatives });
                }
                n += 1;
            }
        }
    }
    out
}

/// Mean negative-sampling loss over the evaluation pairs.
fn objective(pairs: &[EvalPair], input: &[f64], output: &[f64], dim: usize) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let dot = |a: usize, b: usize| -> f64 {
        input[a * dim..(a + 1) * dim]
            .iter()
            .zip(&output[b * dim..(b + 1) * dim])
            .map(|(x, y)| x * y)
            .sum()
    };
    let mut loss = 0.0;
    for p in pairs {
        loss -= sigmoid(dot(p.input, p.positive)).max(1e-300).ln();
        for &n in &p.negatives {
            loss -= (1.0 - sigmoid(dot(p.input, n))).max(1e-300).ln();
        }
    }
    loss / pairs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{cosine, generate_walks, WalkConfig, WalkGraph};

    /// Two 6-cliques joined by a 2-node path.
    pub(crate) fn barbell() -> WalkGraph {
        let mut edges = Vec::new();
        for base in [0, 8] {
            for a in 0..6 {
                for b in a + 1..6 {
                    edges.push((base + a, base + b));
                }
            }
        }
        edges.extend([(5, 6), (6, 7), (7, 8)]);
        WalkGraph::from_edges((0..14).map(|i| format!("n{i}")).collect(), edges)
    }

    fn clique_separation(table: &EmbeddingTable) -> (f64, f64) {
        let (left, right): (Vec<usize>, Vec<usize>) = ((0..6).collect(), (8..14).collect());
        let mut intra = Vec::new();
        let mut inter = Vec::new();
        for side in [&left, &right] {
            for (x, &a) in side.iter().enumerate() {
                for &b in &side[x + 1..] {
                    intra.push(cosine(table.vector(a), table.vector(b)));
                }
            }
        }
        for &a in &left {
            for &b in &right {
                inter.push(cosine(table.vector(a), table.vector(b)));
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        (mean(&intra), mean(&inter))
    }

    #[test]
    fn shapes_and_finiteness() {
        let g = barbell();
        let c = generate_walks(&g, &WalkConfig::default(), 1).unwrap();
        let run = train_skipgram(&c, g.ids(), &SkipGramConfig::default(), 2).unwrap();
        assert_eq!(run.table.len(), 14);
        assert_eq!(run.table.dim(), 23);
        assert!((0..14).all(|i| run.table.vector(i).iter().all(|x| x.is_finite())));
    }

    #[test]
    fn barbell_cliques_separate() {
        let g = barbell();
        let c = generate_walks(&g, &WalkConfig::default(), 11).unwrap();
        let run = train_skipgram(&c, g.ids(), &SkipGramConfig::default(), 12).unwrap();
        let (intra, inter) = clique_separation(&run.table);
        assert!(intra > inter, "intra {intra} <= inter {inter}");
    }

    #[test]
    fn single_node_corpus() {
        let g = WalkGraph::from_edges(vec!["solo".into()], std::iter::empty());
        let c = generate_walks(&g, &WalkConfig::default(), 0).unwrap();
        let run = train_skipgram(&c, g.ids(), &SkipGramConfig::default(), 0).unwrap();
        assert_eq!(run.table.len(), 1);
        assert!(run.epoch_losses.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn loss_decreases_over_first_epochs() {
        let g = barbell();
        let c = generate_walks(&g, &WalkConfig::default(), 4).unwrap();
        let run = train_skipgram(&c, g.ids(), &SkipGramConfig::default(), 5).unwrap();
        for w in run.epoch_losses.windows(2) {
            assert!(w[1] <= w[0], "epoch losses {:?}", run.epoch_losses);
        }
    }

    #[test]
    fn zero_dim_rejected() {
        let g = barbell();
        let c = generate_walks(&g, &WalkConfig::default(), 4).unwrap();
        let cfg = SkipGramConfig { dim: 0, ..SkipGramConfig::default() };
        assert!(matches!(train_skipgram(&c, g.ids(), &cfg, 0), Err(Error::Config(_))));
    }

    #[test]
    fn deterministic() {
        let g = barbell();
        let c = generate_walks(&g, &WalkConfig::default(), 4).unwrap();
        let a = train_skipgram(&c, g.ids(), &SkipGramConfig::default(), 9).unwrap();
        let b = train_skipgram(&c, g.ids(), &SkipGramConfig::default(), 9).unwrap();
        assert_eq!(a.table, b.table);
    }
}
