//! Equal-frequency feature binning.
//!
//! Each feature gets an ascending list of at most `max_bins - 1` cut values
//! taken from the training data itself. A value's bin is the number of cuts
//! strictly below it, so bin 0 holds the smallest values and "bin <= b" is
//! the same predicate as "value <= cuts[b]". Because cuts are data values, a
//! strictly increasing transform of a feature maps its cuts along with its
//! values and every bin assignment is unchanged.

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GbdtError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMapper {
    /// Per feature, strictly increasing cut values.
    pub cuts: Vec<Vec<f64>>,
}

/// Training features as bin ids, stored column by column.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<u8>,
}

impl BinnedMatrix {
    #[inline]
    pub fn column(&self, f: usize) -> &[u8] {
        &self.data[f * self.rows..(f + 1) * self.rows]
    }

    #[inline]
    pub fn get(&self, row: usize, f: usize) -> u8 {
        self.data[f * self.rows + row]
    }
}

pub(crate) fn check_finite(x: &ArrayView2<'_, f64>) -> Result<()> {
    for ((row, column), v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(GbdtError::NonFiniteFeature { row, column });
        }
    }
    Ok(())
}

fn feature_cuts(mut values: Vec<f64>, max_bins: usize) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let mut distinct = values.clone();
    distinct.dedup();
    if distinct.len() <= max_bins {
        distinct.pop();
        return distinct;
    }
    // cut k closes the k-th equal-frequency bucket; never cut at the maximum
    let max = values[n - 1];
    let mut cuts: Vec<f64> = Vec::with_capacity(max_bins - 1);
    for k in 1..max_bins {
        let v = values[(k * n).div_ceil(max_bins) - 1];
        if v < max && cuts.last().is_none_or(|&c| c < v) {
            cuts.push(v);
        }
    }
    cuts
}

impl BinMapper {
    pub fn fit(x: ArrayView2<'_, f64>, max_bins: usize) -> Result<Self> {
        check_finite(&x)?;
        let cuts = (0..x.ncols()).into_par_iter().map(|f| feature_cuts(x.column(f).to_vec(), max_bins)).collect();
        Ok(Self { cuts })
    }

    pub fn n_features(&self) -> usize {
        self.cuts.len()
    }

    pub fn n_bins(&self, f: usize) -> usize {
        self.cuts[f].len() + 1
    }

    #[inline]
    pub fn bin(&self, f: usize, v: f64) -> u8 {
        self.cuts[f].partition_point(|&c| c < v) as u8
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<BinnedMatrix> {
        if x.ncols() != self.n_features() {
            return Err(GbdtError::WidthMismatch { expected: self.n_features(), got: x.ncols() });
        }
        check_finite(&x)?;
        let rows = x.nrows();
        let mut data = vec![0u8; rows * x.ncols()];
        data.par_chunks_mut(rows.max(1)).enumerate().take(x.ncols()).for_each(|(f, out)| {
            for (o, &v) in out.iter_mut().zip(x.column(f)) {
                *o = self.bin(f, v);
            }
        });
        Ok(BinnedMatrix { rows, cols: x.ncols(), data })
    }
}
