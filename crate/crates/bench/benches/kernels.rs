use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dredge::embed::{generate_walks, train_skipgram, SkipGramConfig, WalkConfig};
use dredge::gnn::{masked_nll_grad, Architecture, Dropout, SageModel};
use dredge_bench::{heterogeneous, homogeneous, labels, walk_graph};
use std::hint::black_box;

fn sage(c: &mut Criterion) {
    let mut group = c.benchmark_group("sage");
    group.sample_size(20);
    for n in [500usize, 2000] {
        let input = homogeneous(n, 23, 8, 1);
        let model = SageModel::init(input.schema(), Architecture::default(), 1).unwrap();
        group.bench_with_input(BenchmarkId::new("forward_homogeneous", n), &input, |b, input| {
            b.iter(|| model.forward(black_box(input), Dropout::Off).unwrap())
        });
        let (y, mask) = labels(n);
        group.bench_with_input(BenchmarkId::new("backward_homogeneous", n), &input, |b, input| {
            b.iter(|| {
                let pass = model.forward(input, Dropout::Sample { rate: 0.5, seed: 3 }).unwrap();
                let dl = masked_nll_grad(pass.logp.view(), &y, &mask).unwrap();
                model.backward(input, &pass, dl.view()).unwrap()
            })
        });
    }
    let input = heterogeneous(500, 200, 8, 2);
    let model = SageModel::init(input.schema(), Architecture::default(), 2).unwrap();
    group.bench_function("forward_heterogeneous/500+200", |b| {
        b.iter(|| model.forward(black_box(&input), Dropout::Off).unwrap())
    });
    group.finish();
}

fn embeddings(c: &mut Criterion) {
    let mut group = c.benchmark_group("node2vec");
    group.sample_size(10);
    let graph = walk_graph(1000, 10, 4);
    let cfg = WalkConfig::default();
    group.bench_function("walks/1000", |b| b.iter(|| generate_walks(black_box(&graph), &cfg, 5).unwrap()));
    let biased = WalkConfig { p: 0.5, q: 2.0, ..cfg };
    group.bench_function("biased_walks/1000", |b| b.iter(|| generate_walks(black_box(&graph), &biased, 5).unwrap()));
    let corpus = generate_walks(&graph, &cfg, 5).unwrap();
    let sg = SkipGramConfig { epochs: 1, ..SkipGramConfig::default() };
    group.bench_function("skipgram_epoch/1000", |b| {
        b.iter(|| train_skipgram(black_box(&corpus), graph.ids(), &sg, 6).unwrap())
    });
    group.finish();
}

criterion_group!(benches, sage, embeddings);
criterion_main!(benches);
