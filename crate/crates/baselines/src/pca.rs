//! Reconstruction-error detector on a principal subspace of the training
//! features.
//!
//! Features are centered (not scaled) with the training means. The retained
//! rank is the smallest `k` whose leading eigenvalues explain at least the
//! variance target. A row's score is the Euclidean norm of its residual after
//! projection onto the retained components.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_width, BaselineError, Result};

pub const DEFAULT_VARIANCE_TARGET: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaDetector {
    pub variance_target: f64,
    pub mean: Vec<f64>,
    /// `k` orthonormal rows of length `D`.
    pub components: Vec<Vec<f64>>,
    /// Eigenvalues of the retained components (population covariance).
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
}

fn to_nalgebra(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Eigenpairs sorted by descending eigenvalue; ties keep nalgebra's order.
fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

impl PcaDetector {
    pub fn fit(x: ArrayView2<'_, f64>, variance_target: f64) -> Result<Self> {
        if !(variance_target > 0.0 && variance_target <= 1.0) {
            return Err(BaselineError::InvalidConfig(format!(
                "variance target must lie in (0, 1], got {variance_target}"
            )));
        }
        check_finite(&x)?;
        let (n, d) = x.dim();
        if n < 2 || d == 0 {
            return Err(BaselineError::DegenerateData(format!("{n} rows x {d} columns")));
        }
        let mean: Array1<f64> = x.mean_axis(Axis(0)).expect("non-empty");
        let centered = &x - &mean;
        let nf = n as f64;

        // Eigen-decompose whichever of the covariance (D x D) and the Gram
        // matrix (N x N) is smaller; they share the non-zero spectrum.
        let (values, directions) = if d <= n {
            let cov = centered.t().dot(&centered) / nf;
            sorted_eigen(to_nalgebra(&cov))
        } else {
            let gram = centered.dot(&centered.t()) / nf;
            let (values, u) = sorted_eigen(to_nalgebra(&gram));
            // v = X^T u / sqrt(n * lambda)
            let mut v = DMatrix::zeros(d, values.len());
            for (c, &lambda) in values.iter().enumerate() {
                if lambda <= 0.0 {
                    continue;
                }
                let scale = 1.0 / (nf * lambda).sqrt();
                for j in 0..d {
                    let mut s = 0.0;
                    for i in 0..n {
                        s += centered[[i, j]] * u[(i, c)];
                    }
                    v[(j, c)] = s * scale;
                }
            }
            (values, v)
        };

        let total: f64 = values.iter().sum();
        if !(total > 0.0) {
            return Err(BaselineError::DegenerateData("training features have zero variance".into()));
        }
        let mut k = 0;
        let mut acc = 0.0;
        while k < values.len() {
            acc += values[k];
            k += 1;
            if acc / total >= variance_target - 1e-12 {
                break;
            }
        }
        let components = (0..k).map(|c| (0..d).map(|j| directions[(j, c)]).collect()).collect();
        Ok(Self {
            variance_target,
            mean: mean.to_vec(),
            components,
            explained_variance: values[..k].to_vec(),
            total_variance: total,
        })
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Residual norms, unnormalized.
    pub fn residuals(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        check_width(self.mean.len(), x.ncols())?;
        check_finite(&x)?;
        let mut out = Vec::with_capacity(x.nrows());
        let mut r = vec![0.0; self.mean.len()];
        for row in x.rows() {
            for ((ri, xi), mi) in r.iter_mut().zip(row).zip(&self.mean) {
                *ri = xi - mi;
            }
            let coords: Vec<f64> = self.components.iter().map(|c| c.iter().zip(&r).map(|(a, b)| a * b).sum()).collect();
            let mut norm2 = 0.0;
            for (j, rj) in r.iter().enumerate() {
                let recon: f64 = self.components.iter().zip(&coords).map(|(c, p)| c[j] * p).sum();
                let e = rj - recon;
                norm2 += e * e;
            }
            out.push(norm2.sqrt());
        }
        Ok(out)
    }

    /// Residual norms min-max scaled to `[0, 1]` over the given rows.
    pub fn score(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        Ok(telemine_core::eval::min_max_normalize(&self.residuals(x)?))
    }
}
