use ndarray::{Array2, ArrayView2};

use super::Graph;

/// Compressed sparse row matrix of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// `self · dense`, accumulated row by row in column order.
    pub fn matmul(&self, dense: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(
            self.n_cols,
            dense.nrows(),
            "sparse·dense inner dimensions differ"
        );
        let mut out = Array2::<f64>::zeros((self.n_rows, dense.ncols()));
        for (i, mut out_row) in out.rows_mut().into_iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out_row.scaled_add(v, &dense.row(j));
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::<f64>::zeros((self.n_rows, self.n_cols));
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out[[i, j]] = v;
            }
        }
        out
    }
}

/// The GCN propagation operator `D̃^{-1/2} (A + I) D̃^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    matrix: SparseMatrix,
    degrees: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Degrees of `A + I`.
    pub fn self_loop_degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn num_nodes(&self) -> usize {
        self.matrix.n_rows
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        self.matrix.row(i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn propagate(&self, dense: ArrayView2<'_, f64>) -> Array2<f64> {
        self.matrix.matmul(dense)
    }
}

pub fn build_normalized_adjacency(graph: &Graph) -> NormalizedAdjacency {
    let n = graph.num_nodes();
    let degrees: Vec<f64> = (0..n)
        .map(|i| (graph.neighbors(i).len() + 1) as f64)
        .collect();
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();

    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(2 * graph.num_edges() + n);
    let mut values = Vec::with_capacity(indices.capacity());
    indptr.push(0);
    for i in 0..n {
        let nbrs = graph.neighbors(i);
        // neighbours are sorted; splice the self-loop into place
        let split = nbrs.partition_point(|&j| j < i);
        for &j in &nbrs[..split] {
            indices.push(j);
            values.push(inv_sqrt[i] * inv_sqrt[j]);
        }
        indices.push(i);
        values.push(inv_sqrt[i] * inv_sqrt[i]);
        for &j in &nbrs[split..] {
            indices.push(j);
            values.push(inv_sqrt[i] * inv_sqrt[j]);
        }
        indptr.push(indices.len());
    }

    NormalizedAdjacency {
        matrix: SparseMatrix {
            n_rows: n,
            n_cols: n,
            indptr,
            indices,
            values,
        },
        degrees,
    }
}
