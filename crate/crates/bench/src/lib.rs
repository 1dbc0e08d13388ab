//! Deterministic inputs shared by the benchmarks.

use dredge::embed::WalkGraph;
use dredge::gnn::{ModelInput, NeighborIndex, RelationInput, TypeInput};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn type_input(name: &str, n: usize, dim: usize, rng: &mut ChaCha8Rng) -> TypeInput {
    TypeInput {
        name: name.into(),
        ids: (0..n).map(|i| format!("{name}{i}")).collect(),
        features: Array2::from_shape_fn((n, dim), |_| rng.gen_range(-1.0..1.0)),
    }
}

fn relation(name: &str, src: (usize, usize), dst: (usize, usize), m: usize, rng: &mut ChaCha8Rng) -> RelationInput {
    let edges: Vec<(usize, usize, f64)> = (0..m)
        .map(|_| (rng.gen_range(0..src.1), rng.gen_range(0..dst.1), rng.gen_range(1..10) as f64))
        .collect();
    RelationInput {
        name: name.into(),
        src: src.0,
        dst: dst.0,
        index: NeighborIndex::new(src.1, dst.1, &edges, true).expect("valid edges"),
    }
}

/// One node type with `n` nodes, `dim` features and about `degree` in-edges per node.
pub fn homogeneous(n: usize, dim: usize, degree: usize, seed: u64) -> ModelInput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let types = vec![type_input("domain", n, dim, &mut rng)];
    let relations = vec![relation("phi1", (0, n), (0, n), n * degree, &mut rng)];
    ModelInput::new(types, relations, 0).expect("valid input")
}

/// Domains and users with domain links, user links and reverse user links.
pub fn heterogeneous(domains: usize, users: usize, degree: usize, seed: u64) -> ModelInput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let types = vec![type_input("domain", domains, 23, &mut rng), type_input("user", users, 23, &mut rng)];
    let relations = vec![
        relation("phi1", (0, domains), (0, domains), domains * degree, &mut rng),
        relation("phi2", (1, users), (0, domains), domains * degree, &mut rng),
        relation("rev_phi2", (0, domains), (1, users), domains * degree, &mut rng),
    ];
    ModelInput::new(types, relations, 0).expect("valid input")
}

/// Undirected random graph for walk benchmarks.
pub fn walk_graph(n: usize, degree: usize, seed: u64) -> WalkGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<(usize, usize)> = (0..n * degree / 2)
        .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
        .filter(|(a, b)| a != b)
        .collect();
    WalkGraph::from_edges((0..n).map(|i| format!("n{i}")).collect(), edges)
}

/// Alternating class labels, every row in the loss mask.
pub fn labels(n: usize) -> (Vec<Option<usize>>, Vec<bool>) {
    ((0..n).map(|i| Some(i % 2)).collect(), vec![true; n])
}
