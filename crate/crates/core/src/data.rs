//! Row-major sample containers used as datasets by the estimators.

/// A dataset the MP engine can grow, resample and clear.
pub trait Dataset: Clone + Send + Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// An empty dataset with the same shape (dimension, input width).
    fn empty_like(&self) -> Self;

    fn extend_from(&mut self, other: &Self);

    fn clear(&mut self);

    /// Rows at `indices`, in order; repeated indices repeat rows.
    fn select(&self, indices: &[usize]) -> Self;
}

/// `len` observations of dimension `dim`, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    dim: usize,
    rows: usize,
    values: Vec<f64>,
}

impl Samples {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "sample dimension must be positive");
        Samples {
            dim,
            rows: 0,
            values: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        let mut s = Samples::new(dim);
        s.values.reserve(dim * rows);
        s
    }

    pub fn from_rows<R: AsRef<[f64]>>(dim: usize, rows: &[R]) -> Self {
        let mut s = Samples::with_capacity(dim, rows.len());
        for r in rows {
            s.push(r.as_ref());
        }
        s
    }

    /// Scalar observations (`dim = 1`).
    pub fn from_scalars(values: &[f64]) -> Self {
        Samples {
            dim: 1,
            rows: values.len(),
            values: values.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.dim, "row has wrong dimension");
        self.values.extend_from_slice(row);
        self.rows += 1;
    }

    /// Appends a zeroed row and returns it for in-place filling.
    pub fn push_zeroed(&mut self) -> &mut [f64] {
        let start = self.values.len();
        self.values.resize(start + self.dim, 0.0);
        self.rows += 1;
        &mut self.values[start..]
    }

    /// Sets the row count to `rows`; new rows are zeroed, kept rows keep their values.
    pub fn resize_rows(&mut self, rows: usize) {
        self.values.resize(rows * self.dim, 0.0);
        self.rows = rows;
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Rows `start..` as one slice.
    pub fn tail(&self, start: usize) -> &[f64] {
        &self.values[start * self.dim..]
    }
}

impl Dataset for Samples {
    fn len(&self) -> usize {
        self.rows
    }

    fn empty_like(&self) -> Self {
        Samples::new(self.dim)
    }

    fn extend_from(&mut self, other: &Self) {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.values.extend_from_slice(&other.values);
        self.rows += other.rows;
    }

    fn clear(&mut self) {
        self.values.clear();
        self.rows = 0;
    }

    fn select(&self, indices: &[usize]) -> Self {
        let mut out = Samples::with_capacity(self.dim, indices.len());
        for &i in indices {
            out.push(self.row(i));
        }
        out
    }
}
