use serde::{Deserialize, Serialize};

use super::FeatureError;

/// Sorted `(index, value)` pairs over a fixed dimensionality. Indices are
/// strictly increasing and explicit zeros are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from arbitrary-order pairs. Duplicate indices are summed and
    /// zeros dropped.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Result<Self, FeatureError> {
        pairs.sort_by_key(|p| p.0);
        let mut v = SparseVector::zeros(dim);
        for (i, x) in pairs {
            if i >= dim {
                return Err(FeatureError::IndexOutOfRange { index: i, dim });
            }
            if v.indices.last() == Some(&i) {
                *v.values.last_mut().expect("parallel arrays") += x;
            } else {
                v.indices.push(i);
                v.values.push(x);
            }
        }
        v.prune();
        Ok(v)
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let mut v = SparseVector::zeros(values.len());
        for (i, &x) in values.iter().enumerate() {
            if x != 0.0 {
                v.indices.push(i);
                v.values.push(x);
            }
        }
        v
    }

    fn prune(&mut self) {
        let mut keep = 0;
        for k in 0..self.indices.len() {
            if self.values[k] != 0.0 {
                self.indices[keep] = self.indices[k];
                self.values[keep] = self.values[k];
                keep += 1;
            }
        }
        self.indices.truncate(keep);
        self.values.truncate(keep);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(k) => self.values[k],
            Err(_) => 0.0,
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|x| *x *= factor);
        self.prune();
    }

    /// Dot product with a dense vector of at least `dim` entries.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, x)| x * dense[i]).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, x) in self.iter() {
            out[i] = x;
        }
        out
    }

    /// Appends `other` after this vector's coordinates.
    pub fn concat(&self, other: &SparseVector) -> SparseVector {
        let mut out = self.clone();
        out.indices.extend(other.indices.iter().map(|i| i + self.dim));
        out.values.extend_from_slice(&other.values);
        out.dim += other.dim;
        out
    }

    /// Maps every stored value through `f`, dropping results equal to 0.
    pub fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> SparseVector {
        let mut out = self.clone();
        for (k, &i) in out.indices.iter().enumerate() {
            out.values[k] = f(i, out.values[k]);
        }
        out.prune();
        out
    }
}
