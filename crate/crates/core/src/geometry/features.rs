use nalgebra::DMatrix;

use crate::error::GeometryError;

/// Dense `N x d` node feature (or embedding) matrix, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: DMatrix<f64>,
}

impl FeatureMatrix {
    /// Wraps a matrix after checking every entry is finite.
    pub fn new(values: DMatrix<f64>) -> Result<Self, GeometryError> {
        for c in 0..values.ncols() {
            for r in 0..values.nrows() {
                if !values[(r, c)].is_finite() {
                    return Err(GeometryError::NonFinite { row: r, col: c });
                }
            }
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GeometryError> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut values = DMatrix::zeros(n, d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(GeometryError::RowMismatch {
                    rows: row.len(),
                    expected: d,
                });
            }
            for (j, &x) in row.iter().enumerate() {
                values[(i, j)] = x;
            }
        }
        Self::new(values)
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.values
    }

    pub fn squared_distance(&self, i: usize, j: usize) -> f64 {
        (0..self.dim())
            .map(|c| {
                let d = self.values[(i, c)] - self.values[(j, c)];
                d * d
            })
            .sum()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.squared_distance(i, j).sqrt()
    }

    /// Rows reordered so that new row `r` is old row `order[r]`.
    pub fn select_rows(&self, order: &[usize]) -> Self {
        let values = DMatrix::from_fn(order.len(), self.dim(), |r, c| self.values[(order[r], c)]);
        Self { values }
    }

    /// Each row scaled to unit Euclidean norm (zero rows stay zero).
    pub fn row_normalized(&self) -> Self {
        let mut values = self.values.clone();
        for mut row in values.row_iter_mut() {
            let norm = row.norm();
            if norm > 0.0 {
                row /= norm;
            }
        }
        Self { values }
    }

    /// Columns centred and scaled to unit variance (constant columns are
    /// only centred).
    pub fn standardized(&self) -> Self {
        let n = self.rows().max(1) as f64;
        let mut values = self.values.clone();
        for mut col in values.column_iter_mut() {
            let mean = col.sum() / n;
            col.add_scalar_mut(-mean);
            let sd = (col.norm_squared() / n).sqrt();
            if sd > 0.0 {
                col /= sd;
            }
        }
        Self { values }
    }
}
