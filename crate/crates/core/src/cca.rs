//! Regularized canonical correlation analysis between two views.
//!
//! Each view is standardized (constant columns dropped) and whitened under
//! the ridge-regularized covariance `C + εI`. Whitening uses the thin SVD of
//! the standardized data, obtained from whichever of `XᵀX` and `XXᵀ` is
//! smaller, so a view with far more columns than rows costs `O(n²)` memory.
//! The canonical directions are the singular vectors of the whitened
//! cross-covariance.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;
use crate::sparse::CsrMatrix;

pub const DEFAULT_RIDGE: f64 = 1e-6;

/// Eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CcaError {
    #[error("views have {0} and {1} rows")]
    RowMismatch(usize, usize),
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("{k} components requested but at most {max} are available ({reason})")]
    TooManyComponents { k: usize, max: usize, reason: String },
    #[error("ridge must be finite and nonnegative, got {0}")]
    Ridge(f64),
    #[error("non-finite value in view {view}")]
    NonFinite { view: usize },
    #[error("{0} names for {1} columns")]
    Names(usize, usize),
}

/// Standardization and projection for one view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewProjection {
    /// Names of the input columns, when known.
    pub names: Option<Vec<String>>,
    /// Input column count.
    pub n_inputs: usize,
    /// Input columns kept after dropping constant ones.
    pub kept: Vec<usize>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// `kept.len() × k`, acting on standardized inputs.
    pub projection: DMatrix<f64>,
}

impl ViewProjection {
    /// Canonical variates of one sample given as `(input column, value)`
    /// pairs; columns not kept at fit time are ignored.
    pub fn variates(&self, entries: impl IntoIterator<Item = (usize, f64)>) -> Vec<f64> {
        let k = self.projection.ncols();
        let mut pos = vec![usize::MAX; self.n_inputs];
        for (i, &c) in self.kept.iter().enumerate() {
            pos[c] = i;
        }
        let mut z = self.offset();
        for (c, v) in entries {
            if let Some(&i) = pos.get(c).filter(|&&i| i != usize::MAX) {
                let s = v / self.scale[i];
                for j in 0..k {
                    z[j] += s * self.projection[(i, j)];
                }
            }
        }
        z
    }

    /// Variates of the all-zero input: `-Σ mean_i/scale_i · projection_i`.
    pub fn offset(&self) -> Vec<f64> {
        let k = self.projection.ncols();
        let mut z = vec![0.0; k];
        for (i, (&m, &s)) in self.mean.iter().zip(&self.scale).enumerate() {
            for (j, zj) in z.iter_mut().enumerate() {
                *zj -= m / s * self.projection[(i, j)];
            }
        }
        z
    }

    fn truncate(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.projection = self.projection.columns(0, k).into_owned();
        out
    }

    fn name_index(&self) -> Option<HashMap<&str, usize>> {
        self.names.as_ref().map(|n| n.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcaModel {
    pub views: [ViewProjection; 2],
    /// Canonical correlations, nonincreasing, in `[0, 1]`.
    pub correlations: Vec<f64>,
    pub ridge: f64,
}

struct Standardized {
    x: CsrMatrix,
    kept: Vec<usize>,
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardized {
    fn new(x: &CsrMatrix, view: usize) -> Result<Self, CcaError> {
        for i in 0..x.n_rows() {
            if x.row(i).1.iter().any(|v| !v.is_finite()) {
                return Err(CcaError::NonFinite { view });
            }
        }
        let (mean, var) = x.column_moments();
        let kept: Vec<usize> =
            (0..x.n_cols()).filter(|&j| var[j] > 1e-12 * (1.0 + mean[j] * mean[j])).collect();
        let x = x.select_columns(&kept);
        let mean = kept.iter().map(|&j| mean[j]).collect();
        let scale = kept.iter().map(|&j| var[j].sqrt()).collect();
        Ok(Self { x, kept, mean, scale })
    }

    fn m(&self) -> usize {
        self.kept.len()
    }

    /// Dense standardized row `i`.
    fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut row: Vec<f64> = self.mean.iter().zip(&self.scale).map(|(m, s)| -m / s).collect();
        let (idx, val) = self.x.row(i);
        for (&c, &v) in idx.iter().zip(val) {
            row[c as usize] += v / self.scale[c as usize];
        }
        row
    }

    /// Whitening basis `B` (`m × r`) and whitened training data `Z = X_s B`
    /// (`n × r`) for the ridge-regularized covariance.
    fn whiten(&self, ridge: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.x.n_rows();
        let m = self.m();
        let dof = (n - 1) as f64;
        if m <= n {
            // eigenvectors of X_sᵀX_s are the right singular vectors
            let mut g = DMatrix::<f64>::zeros(m, m);
            for i in 0..n {
                let r = self.dense_row(i);
                for a in 0..m {
                    if r[a] == 0.0 {
                        continue;
                    }
                    for b in a..m {
                        g[(a, b)] += r[a] * r[b];
                    }
                }
            }
            symmetrize(&mut g);
            let eig = SymmetricEigen::new(g);
            let cols = ranked_columns(&eig.eigenvalues);
            let mut basis = DMatrix::zeros(m, cols.len());
            for (j, &c) in cols.iter().enumerate() {
                let d = 1.0 / (eig.eigenvalues[c] / dof + ridge).sqrt();
                basis.set_column(j, &(eig.eigenvectors.column(c) * d));
            }
            let z = self.times(&basis);
            (basis, z)
        } else {
            // eigenvectors of X_sX_sᵀ are the left singular vectors
            let rows: Vec<Vec<f64>> = (0..n).map(|i| self.dense_row(i)).collect();
            let mut g = DMatrix::<f64>::zeros(n, n);
            for a in 0..n {
                for b in a..n {
                    g[(a, b)] = rows[a].iter().zip(&rows[b]).map(|(x, y)| x * y).sum();
                }
            }
            symmetrize(&mut g);
            let eig = SymmetricEigen::new(g);
            let cols = ranked_columns(&eig.eigenvalues);
            let r = cols.len();
            let mut z = DMatrix::zeros(n, r);
            // B = X_sᵀ U S⁻¹ D, Z = U S D
            let mut us = DMatrix::zeros(n, r);
            for (j, &c) in cols.iter().enumerate() {
                let lam = eig.eigenvalues[c];
                let s = lam.sqrt();
                let d = 1.0 / (lam / dof + ridge).sqrt();
                let u = eig.eigenvectors.column(c);
                z.set_column(j, &(u * (s * d)));
                us.set_column(j, &(u * (d / s)));
            }
            let mut basis = DMatrix::zeros(m, r);
            for (i, row) in rows.iter().enumerate() {
                for (a, &v) in row.iter().enumerate() {
                    if v != 0.0 {
                        for j in 0..r {
                            basis[(a, j)] += v * us[(i, j)];
                        }
                    }
                }
            }
            (basis, z)
        }
    }

    /// `X_s · M` for a dense `M` with `m` rows.
    fn times(&self, mat: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.x.n_rows();
        let k = mat.ncols();
        let mut out = DMatrix::zeros(n, k);
        let mut shift = vec![0.0; k];
        for (a, (&m, &s)) in self.mean.iter().zip(&self.scale).enumerate() {
            for j in 0..k {
                shift[j] -= m / s * mat[(a, j)];
            }
        }
        for i in 0..n {
            let (idx, val) = self.x.row(i);
            for j in 0..k {
                let mut acc = shift[j];
                for (&c, &v) in idx.iter().zip(val) {
                    acc += v / self.scale[c as usize] * mat[(c as usize, j)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }
}

fn symmetrize(g: &mut DMatrix<f64>) {
    let m = g.nrows();
    for a in 0..m {
        for b in 0..a {
            g[(a, b)] = g[(b, a)];
        }
    }
}

/// Indices of eigenvalues above the rank tolerance, largest first.
fn ranked_columns(values: &nalgebra::DVector<f64>) -> Vec<usize> {
    let max = values.iter().cloned().fold(0.0, f64::max);
    let mut cols: Vec<usize> = (0..values.len()).filter(|&i| values[i] > RANK_TOLERANCE * max && max > 0.0).collect();
    cols.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    cols
}

impl CcaModel {
    /// Fits `k` canonical components. Rows of the two views are paired.
    pub fn fit(view1: &CsrMatrix, view2: &CsrMatrix, k: usize, ridge: f64) -> Result<Self, CcaError> {
        let n = view1.n_rows();
        if view2.n_rows() != n {
            return Err(CcaError::RowMismatch(n, view2.n_rows()));
        }
        if n < 2 {
            return Err(CcaError::TooFewSamples(n));
        }
        if !(ridge.is_finite() && ridge >= 0.0) {
            return Err(CcaError::Ridge(ridge));
        }
        let s1 = Standardized::new(view1, 1)?;
        let s2 = Standardized::new(view2, 2)?;
        let max = s1.m().min(s2.m()).min(n - 1);
        if k == 0 || k > max {
            return Err(CcaError::TooManyComponents {
                k,
                max,
                reason: format!("{} and {} non-constant columns, {} samples", s1.m(), s2.m(), n),
            });
        }
        let (b1, z1) = s1.whiten(ridge);
        let (b2, z2) = s2.whiten(ridge);
        let rank = z1.ncols().min(z2.ncols());
        if k > rank {
            return Err(CcaError::TooManyComponents { k, max: rank, reason: "numerical rank".into() });
        }
        let dof = (n - 1) as f64;
        let cross = z1.transpose() * &z2 / dof;
        let svd = SVD::new(cross, true, true);
        let u = svd.u.expect("left vectors requested");
        let vt = svd.v_t.expect("right vectors requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));

        let mut a1 = DMatrix::zeros(s1.m(), k);
        let mut a2 = DMatrix::zeros(s2.m(), k);
        let mut correlations = Vec::with_capacity(k);
        for (j, &c) in order.iter().take(k).enumerate() {
            let p = u.column(c);
            let q = vt.row(c).transpose();
            let mut col1 = &b1 * p;
            let mut col2 = &b2 * &q;
            // unit training variance for each variate
            let v1 = (&z1 * p).norm_squared() / dof;
            let v2 = (&z2 * &q).norm_squared() / dof;
            col1 /= v1.sqrt();
            col2 /= v2.sqrt();
            // deterministic sign: the largest view-1 loading is positive
            let lead = col1.iter().cloned().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            if lead < 0.0 {
                col1 = -col1;
                col2 = -col2;
            }
            a1.set_column(j, &col1);
            a2.set_column(j, &col2);
            correlations.push(svd.singular_values[c].clamp(0.0, 1.0));
        }
        let view = |s: Standardized, n_inputs: usize, projection| ViewProjection {
            names: None,
            n_inputs,
            kept: s.kept,
            mean: s.mean,
            scale: s.scale,
            projection,
        };
        Ok(Self {
            views: [view(s1, view1.n_cols(), a1), view(s2, view2.n_cols(), a2)],
            correlations,
            ridge,
        })
    }

    /// As [`CcaModel::fit`], recording column names for [`CcaModel::transform`].
    pub fn fit_named(
        names1: &[String],
        view1: &CsrMatrix,
        names2: &[String],
        view2: &CsrMatrix,
        k: usize,
        ridge: f64,
    ) -> Result<Self, CcaError> {
        if names1.len() != view1.n_cols() {
            return Err(CcaError::Names(names1.len(), view1.n_cols()));
        }
        if names2.len() != view2.n_cols() {
            return Err(CcaError::Names(names2.len(), view2.n_cols()));
        }
        let mut model = Self::fit(view1, view2, k, ridge)?;
        model.views[0].names = Some(names1.to_vec());
        model.views[1].names = Some(names2.to_vec());
        Ok(model)
    }

    pub fn fit_dense(view1: &DMatrix<f64>, view2: &DMatrix<f64>, k: usize, ridge: f64) -> Result<Self, CcaError> {
        Self::fit(&CsrMatrix::from_dense(view1), &CsrMatrix::from_dense(view2), k, ridge)
    }

    pub fn k(&self) -> usize {
        self.correlations.len()
    }

    /// The first `k` components.
    pub fn truncate(&self, k: usize) -> Self {
        assert!(k >= 1 && k <= self.k(), "cannot truncate {} components to {k}", self.k());
        Self {
            views: [self.views[0].truncate(k), self.views[1].truncate(k)],
            correlations: self.correlations[..k].to_vec(),
            ridge: self.ridge,
        }
    }

    /// View-1 variates followed by view-2 variates for one sample given in
    /// input-column coordinates.
    pub fn transform_row(&self, row1: &[(u32, f64)], row2: &[(u32, f64)]) -> Vec<f64> {
        let mut out = self.views[0].variates(row1.iter().map(|&(c, v)| (c as usize, v)));
        out.extend(self.views[1].variates(row2.iter().map(|&(c, v)| (c as usize, v))));
        out
    }

    /// Both views' variates for every row, as `n × 2k`.
    pub fn transform_matrix(&self, view1: &CsrMatrix, view2: &CsrMatrix) -> DMatrix<f64> {
        let n = view1.n_rows();
        let mut out = DMatrix::zeros(n, 2 * self.k());
        for i in 0..n {
            let (i1, v1) = view1.row(i);
            let (i2, v2) = view2.row(i);
            let r1: Vec<(u32, f64)> = i1.iter().copied().zip(v1.iter().copied()).collect();
            let r2: Vec<(u32, f64)> = i2.iter().copied().zip(v2.iter().copied()).collect();
            for (j, v) in self.transform_row(&r1, &r2).into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// Features `cca.v1.<i>` and `cca.v2.<i>` (1-based) for a sample given by
    /// feature name; names unseen at fit time are ignored. Requires a model
    /// fitted with [`CcaModel::fit_named`].
    pub fn transform(&self, view1: &FeatureVector, view2: &FeatureVector) -> FeatureVector {
        let mut fv = FeatureVector::new();
        for (v, input) in [view1, view2].into_iter().enumerate() {
            let index = self.views[v].name_index().expect("model fitted with names");
            let z = self.views[v].variates(input.iter().filter_map(|(k, x)| index.get(k).map(|&c| (c, x))));
            for (i, value) in z.into_iter().enumerate() {
                fv.insert(format!("cca.v{}.{}", v + 1, i + 1), value).expect("unique and finite");
            }
        }
        fv
    }

    /// Writes the model as pretty JSON.
    pub fn write_json<W: Write>(&self, w: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(w, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, m, |_, _| StandardNormal.sample(&mut rng))
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn linear_image_is_perfectly_correlated() {
        let x = gaussian(200, 4, 1);
        let a = gaussian(4, 3, 2);
        let y = &x * a;
        let m = CcaModel::fit_dense(&x, &y, 1, DEFAULT_RIDGE).unwrap();
        assert!(m.correlations[0] >= 0.999);
    }

    #[test]
    fn two_points_correlate_exactly() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 5.0, 3.0, -2.0]);
        let y = DMatrix::from_row_slice(2, 1, &[7.0, 0.5]);
        let m = CcaModel::fit_dense(&x, &y, 1, 0.0).unwrap();
        assert!((m.correlations[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_views_are_weakly_correlated() {
        let m = CcaModel::fit_dense(&gaussian(2000, 5, 3), &gaussian(2000, 5, 4), 1, DEFAULT_RIDGE).unwrap();
        assert!(m.correlations[0] <= 0.2, "{}", m.correlations[0]);
    }

    #[test]
    fn wide_view_variates_have_unit_variance() {
        // 30 samples, 60 columns in the second view forces the Gram route
        let x = gaussian(30, 3, 5);
        let y = gaussian(30, 60, 6);
        let m = CcaModel::fit_dense(&x, &y, 2, 1e-3).unwrap();
        let t = m.transform_matrix(&CsrMatrix::from_dense(&x), &CsrMatrix::from_dense(&y));
        for j in 0..2 {
            let (a, b): (Vec<f64>, Vec<f64>) = (0..30).map(|i| (t[(i, j)], t[(i, 2 + j)])).unzip();
            let var = a.iter().map(|v| v * v).sum::<f64>() / 29.0;
            assert!((var - 1.0).abs() < 1e-9);
            // with ridge the sample correlation is at least the shrunken value
            assert!(correlation(&a, &b) >= m.correlations[j] - 1e-9);
        }
    }

    #[test]
    fn zero_input_maps_to_projected_negative_mean() {
        let x1 = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 2.0, 1.0]);
        let x2 = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 1.0, 0.0, 3.0, 3.0]);
        let m = CcaModel::fit_dense(&x1, &x2, 1, 1e-3).unwrap();
        let z = m.transform_row(&[], &[]);
        let v = &m.views[1];
        let by_hand: f64 = (0..2).map(|i| -v.mean[i] / v.scale[i] * v.projection[(i, 0)]).sum();
        assert!((z[1] - by_hand).abs() < 1e-12);
        assert_eq!(z.len(), 2);
    }

    #[test]
    fn named_transform_ignores_unknown_features() {
        let x = gaussian(50, 2, 7);
        let y = gaussian(50, 2, 8);
        let n1 = vec!["a".to_string(), "b".to_string()];
        let n2 = vec!["u".to_string(), "v".to_string()];
        let m = CcaModel::fit_named(&n1, &CsrMatrix::from_dense(&x), &n2, &CsrMatrix::from_dense(&y), 2, DEFAULT_RIDGE)
            .unwrap();
        let mut f1 = FeatureVector::new();
        f1.insert("a", x[(0, 0)]).unwrap();
        f1.insert("b", x[(0, 1)]).unwrap();
        let mut f2 = FeatureVector::new();
        f2.insert("u", y[(0, 0)]).unwrap();
        f2.insert("v", y[(0, 1)]).unwrap();
        let base = m.transform(&f1, &f2);
        f2.insert("never_seen", 4.0).unwrap();
        assert_eq!(m.transform(&f1, &f2), base);
        assert_eq!(base.len(), 4);
        let t = m.transform_matrix(&CsrMatrix::from_dense(&x), &CsrMatrix::from_dense(&y));
        assert!((base.get("cca.v2.1").unwrap() - t[(0, 2)]).abs() < 1e-12);
    }

    #[test]
    fn parameter_errors() {
        let x = gaussian(10, 2, 9);
        assert!(matches!(CcaModel::fit_dense(&x, &gaussian(9, 2, 1), 1, 0.0), Err(CcaError::RowMismatch(10, 9))));
        assert!(matches!(CcaModel::fit_dense(&x, &gaussian(10, 2, 1), 3, 0.0), Err(CcaError::TooManyComponents { .. })));
        let mut constant = gaussian(10, 2, 1);
        constant.column_mut(1).fill(4.0);
        assert!(CcaModel::fit_dense(&x, &constant, 2, 0.0).is_err());
        assert_eq!(CcaModel::fit_dense(&x, &constant, 1, 0.0).unwrap().views[1].kept, vec![0]);
    }
}
