//! Dense index arrays of ħ-series.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::HbarSeries;

/// `dim^rank` series addressed by 0-based index tuples, last index fastest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tensor {
    dim: usize,
    rank: usize,
    data: Vec<HbarSeries>,
}

/// Every index tuple of the given shape in row-major order.
pub fn index_tuples(dim: usize, rank: usize) -> Vec<Vec<usize>> {
    let total = dim.pow(rank as u32);
    (0..total)
        .map(|mut code| {
            let mut idx = vec![0; rank];
            for slot in (0..rank).rev() {
                idx[slot] = code % dim;
                code /= dim;
            }
            idx
        })
        .collect()
}

/// 1-based rendering of an index tuple, e.g. `1212`.
pub fn label(idx: &[usize]) -> String {
    idx.iter()
        .map(|i| (i + 1).to_string())
        .collect::<Vec<_>>()
        .join(if idx.iter().any(|&i| i >= 9) { "," } else { "" })
}

impl Tensor {
    pub fn zeros(dim: usize, rank: usize, n: usize) -> Self {
        Tensor {
            dim,
            rank,
            data: vec![HbarSeries::zero(n); dim.pow(rank as u32)],
        }
    }

    /// Builds every entry from its index tuple; entries are computed in parallel.
    pub fn try_from_fn<F>(dim: usize, rank: usize, f: F) -> Result<Self>
    where
        F: Fn(&[usize]) -> Result<HbarSeries> + Sync,
    {
        let data = index_tuples(dim, rank)
            .par_iter()
            .map(|idx| f(idx))
            .collect::<Result<Vec<_>>>()?;
        Ok(Tensor { dim, rank, data })
    }

    pub fn from_vec(dim: usize, rank: usize, data: Vec<HbarSeries>) -> Result<Self> {
        if data.len() != dim.pow(rank as u32) {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a rank-{rank} array in dimension {dim}",
                data.len()
            )));
        }
        Ok(Tensor { dim, rank, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn truncation(&self) -> usize {
        self.data.first().map_or(0, HbarSeries::truncation)
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.dim);
            acc * self.dim + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> &HbarSeries {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: HbarSeries) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, &HbarSeries)> {
        index_tuples(self.dim, self.rank)
            .into_iter()
            .zip(self.data.iter())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(HbarSeries::is_zero)
    }

    pub fn map<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&[usize], &HbarSeries) -> Result<HbarSeries> + Sync,
    {
        Tensor::try_from_fn(self.dim, self.rank, |idx| f(idx, self.get(idx)))
    }

    /// First index tuple and ħ-order where the arrays differ.
    pub fn first_difference(&self, other: &Tensor) -> Result<Option<(Vec<usize>, usize)>> {
        if self.dim != other.dim || self.rank != other.rank {
            return Err(Error::ShapeMismatch("arrays of different shape".into()));
        }
        for (idx, a) in self.entries() {
            if let Some(q) = a.first_difference(other.get(&idx))? {
                return Ok(Some((idx, q)));
            }
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuples_are_row_major() {
        let t = index_tuples(2, 2);
        assert_eq!(t, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(label(&[0, 1, 0, 1]), "1212");
    }

    #[test]
    fn get_set() {
        let mut t = Tensor::zeros(3, 3, 2);
        t.set(&[2, 0, 1], HbarSeries::from_ints(2, &[1]));
        assert_eq!(t.get(&[2, 0, 1]), &HbarSeries::from_ints(2, &[1]));
        let u = Tensor::zeros(3, 3, 2);
        assert_eq!(t.first_difference(&u).unwrap(), Some((vec![2, 0, 1], 0)));
    }
}
