use dredge_bench::{heterogeneous, homogeneous, labels, walk_graph};

#[test]
fn fixtures_are_deterministic_and_well_formed() {
    let a = homogeneous(50, 4, 3, 1);
    let b = homogeneous(50, 4, 3, 1);
    assert_eq!(a.types[0].features, b.types[0].features);
    assert_eq!(a.relations[0].index.nnz(), b.relations[0].index.nnz());

    let h = heterogeneous(40, 10, 2, 2);
    assert_eq!(h.types.len(), 2);
    assert_eq!(h.relations.len(), 3);

    let g = walk_graph(30, 4, 3);
    assert_eq!(g.len(), 30);
    for v in 0..g.len() {
        for &u in g.neighbors(v) {
            assert!(g.has_edge(u, v));
        }
    }
    let (y, mask) = labels(5);
    assert_eq!(y.len(), mask.len());
}
