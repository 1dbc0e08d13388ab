use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// In-neighbor lists of destination nodes, stored CSR-style with the
/// aggregation coefficient of every entry (`1/deg` for a plain mean).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborIndex {
    n_src: usize,
    offsets: Vec<usize>,
    sources: Vec<usize>,
    coeffs: Vec<f64>,
}

impl NeighborIndex {
    /// Builds a mean aggregator from `(source, destination, weight)` triples.
    /// With `weighted`, coefficients are `w / sum(w)` over each destination's
    /// in-edges; otherwise every in-neighbor counts equally.
    pub fn new(n_src: usize, n_dst: usize, edges: &[(usize, usize, f64)], weighted: bool) -> Result<Self> {
        let mut lists: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_dst];
        for &(s, d, w) in edges {
            if s >= n_src || d >= n_dst {
                return Err(Error::Schema(format!(
                    "edge ({s}, {d}) out of range for {n_src} sources / {n_dst} destinations"
                )));
            }
            if w.is_nan() || w <= 0.0 {
                return Err(Error::Data(format!("edge weight {w} must be positive")));
            }
            lists[d].push((s, if weighted { w } else { 1.0 }));
        }
        let mut offsets = Vec::with_capacity(n_dst + 1);
        let mut sources = Vec::with_capacity(edges.len());
        let mut coeffs = Vec::with_capacity(edges.len());
        offsets.push(0);
        for mut list in lists {
            list.sort_by_key(|p| p.0);
            let total: f64 = list.iter().map(|p| p.1).sum();
            for (s, w) in list {
                sources.push(s);
                coeffs.push(w / total);
            }
            offsets.push(sources.len());
        }
        Ok(Self {
            n_src,
            offsets,
            sources,
            coeffs,
        })
    }

    pub fn n_src(&self) -> usize {
        self.n_src
    }

    pub fn n_dst(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.sources.len()
    }

    pub fn in_degree(&self, dst: usize) -> usize {
        self.offsets[dst + 1] - self.offsets[dst]
    }

    pub fn neighbors(&self, dst: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[dst]..self.offsets[dst + 1];
        self.sources[r.clone()].iter().copied().zip(self.coeffs[r].iter().copied())
    }

    /// Row `v` of the result is the (weighted) mean of `x[u]` over in-neighbors
    /// `u` of `v`; rows without in-neighbors are zero.
    pub fn aggregate(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.nrows() != self.n_src {
            return Err(Error::shape("aggregation source rows", self.n_src, x.nrows()));
        }
        let mut out = Array2::zeros((self.n_dst(), x.ncols()));
        for (d, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
            for (s, c) in self.neighbors(d) {
                row.scaled_add(c, &x.row(s));
            }
        }
        Ok(out)
    }

    /// Adjoint of [`aggregate`](Self::aggregate): scatters destination
    /// gradients back onto source rows.
    pub fn scatter_transpose(&self, grad: ArrayView2<f64>, into: &mut Array2<f64>) {
        for d in 0..self.n_dst() {
            let g = grad.row(d);
            for (s, c) in self.neighbors(d) {
                into.row_mut(s).scaled_add(c, &g);
            }
        }
    }
}

/// One mean-aggregation convolution: `h = x_self W_selfᵀ + mean(x_neigh) W_neighᵀ + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SageLayer {
    pub w_self: Array2<f64>,
    pub w_neigh: Array2<f64>,
    pub bias: Array1<f64>,
}

pub(crate) fn uniform(rows: usize, cols: usize, bound: f64, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..=bound))
}

impl SageLayer {
    /// Uniform initialization in `±1/sqrt(fan_in)` per weight matrix.
    pub fn init(in_self: usize, in_neigh: usize, out: usize, rng: &mut impl Rng) -> Self {
        let bs = 1.0 / (in_self.max(1) as f64).sqrt();
        let bn = 1.0 / (in_neigh.max(1) as f64).sqrt();
        Self {
            w_self: uniform(out, in_self, bs, rng),
            w_neigh: uniform(out, in_neigh, bn, rng),
            bias: Array1::from_shape_fn(out, |_| rng.gen_range(-bn..=bn)),
        }
    }

    pub fn zeros(in_self: usize, in_neigh: usize, out: usize) -> Self {
        Self {
            w_self: Array2::zeros((out, in_self)),
            w_neigh: Array2::zeros((out, in_neigh)),
            bias: Array1::zeros(out),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn in_self(&self) -> usize {
        self.w_self.ncols()
    }

    pub fn in_neigh(&self) -> usize {
        self.w_neigh.ncols()
    }

    /// Layer output from destination features and already-aggregated
    /// neighbor features.
    pub fn apply(&self, x_self: ArrayView2<f64>, aggregated: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x_self.ncols() != self.in_self() {
            return Err(Error::shape("layer self input dim", self.in_self(), x_self.ncols()));
        }
        if aggregated.ncols() != self.in_neigh() {
            return Err(Error::shape("layer neighbor input dim", self.in_neigh(), aggregated.ncols()));
        }
        let mut h = x_self.dot(&self.w_self.t());
        h += &aggregated.dot(&self.w_neigh.t());
        h += &self.bias;
        Ok(h)
    }

    pub fn is_finite(&self) -> bool {
        self.w_self.iter().chain(self.w_neigh.iter()).chain(self.bias.iter()).all(|x| x.is_finite())
    }
}

/// Single-relation convolution where sources and destinations share one node set.
pub fn sage_forward(layer: &SageLayer, x: ArrayView2<f64>, index: &NeighborIndex) -> Result<Array2<f64>> {
    let agg = index.aggregate(x)?;
    layer.apply(x, agg.view())
}

/// Affine map of a node type's input features onto the shared width.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Projection {
    pub fn init(input: usize, output: usize, rng: &mut impl Rng) -> Self {
        let b = 1.0 / (input.max(1) as f64).sqrt();
        Self {
            weight: uniform(output, input, b, rng),
            bias: Array1::from_shape_fn(output, |_| rng.gen_range(-b..=b)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            weight: Array2::eye(dim),
            bias: Array1::zeros(dim),
        }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Array2::zeros((output, input)),
            bias: Array1::zeros(output),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }
}

pub fn project_features(x: ArrayView2<f64>, projection: &Projection) -> Result<Array2<f64>> {
    if x.ncols() != projection.in_dim() {
        return Err(Error::shape("projection input dim", projection.in_dim(), x.ncols()));
    }
    let mut out = x.dot(&projection.weight.t());
    out += &projection.bias;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_in_zero_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut layer = SageLayer::init(4, 4, 3, &mut rng);
        layer.bias.fill(0.0);
        let idx = NeighborIndex::new(5, 5, &[(0, 1, 1.0), (2, 1, 1.0), (3, 4, 1.0)], false).unwrap();
        let h = sage_forward(&layer, Array2::zeros((5, 4)).view(), &idx).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_node_hand_computation() {
        let layer = SageLayer {
            w_self: Array2::eye(2),
            w_neigh: Array2::eye(2),
            bias: Array1::zeros(2),
        };
        let x = array![[1.0, 0.0], [0.0, 1.0]];
        // edge 2 -> 1 (0-based: 1 -> 0)
        let idx = NeighborIndex::new(2, 2, &[(1, 0, 1.0)], false).unwrap();
        let h = sage_forward(&layer, x.view(), &idx).unwrap();
        assert_eq!(h.row(0).to_vec(), vec![1.0, 1.0]);
        // node 2 has no in-neighbors: zero neighbor mean
        assert_eq!(h.row(1).to_vec(), vec![0.0, 1.0]);
    }

    #[test]
    fn weighted_mean() {
        let idx = NeighborIndex::new(3, 1, &[(0, 0, 1.0), (1, 0, 3.0)], true).unwrap();
        let x = array![[4.0], [8.0], [100.0]];
        assert_eq!(idx.aggregate(x.view()).unwrap()[[0, 0]], 7.0);
        let plain = NeighborIndex::new(3, 1, &[(0, 0, 1.0), (1, 0, 3.0)], false).unwrap();
        assert_eq!(plain.aggregate(x.view()).unwrap()[[0, 0]], 6.0);
    }

    #[test]
    fn dimension_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let layer = SageLayer::init(4, 4, 3, &mut rng);
        let idx = NeighborIndex::new(2, 2, &[], false).unwrap();
        assert!(matches!(sage_forward(&layer, Array2::zeros((2, 5)).view(), &idx), Err(Error::Shape { .. })));
        let p = Projection::identity(3);
        assert!(matches!(project_features(Array2::zeros((2, 4)).view(), &p), Err(Error::Shape { .. })));
    }

    #[test]
    fn projections() {
        let x = array![[1.0, -2.0, 3.5], [0.25, 0.0, 9.0]];
        assert_eq!(project_features(x.view(), &Projection::identity(3)).unwrap(), x);
        let z = project_features(x.view(), &Projection::zeros(3, 5)).unwrap();
        assert_eq!(z.dim(), (2, 5));
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn transpose_is_adjoint() {
        // <A x, g> == <x, A^T g>
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let edges: Vec<(usize, usize, f64)> = (0..20).map(|_| (rng.gen_range(0..6), rng.gen_range(0..4), rng.gen_range(1.0..3.0))).collect();
        let idx = NeighborIndex::new(6, 4, &edges, true).unwrap();
        let x = uniform(6, 3, 1.0, &mut rng);
        let g = uniform(4, 3, 1.0, &mut rng);
        let lhs = (&idx.aggregate(x.view()).unwrap() * &g).sum();
        let mut back = Array2::zeros((6, 3));
        idx.scatter_transpose(g.view(), &mut back);
        let rhs = (&x * &back).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
