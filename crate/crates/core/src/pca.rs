//! PCA parameterization of contour windows.
//!
//! Window columns are mean-shifted and decomposed with a thin SVD of the shifted
//! data matrix. The left singular vectors are the eigenvectors of the covariance
//! `C = G G^T` and the squared singular values its eigenvalues. The thin basis is
//! completed to a full orthonormal `2K x 2K` basis so that contours can also be
//! projected onto every direction (used by local target generation).

use std::io::Write;

use nalgebra::{DMatrix, DMatrixView, DVector};

use crate::contour::{format_scalar, Contour};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Subspace coordinates of a contour.
pub type FeatureVector<T> = DVector<T>;

/// Which spectrum the explained variance is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceConvention {
    /// Eigenvalues of the covariance `C` (squared data singular values).
    #[default]
    CovarianceEigenvalues,
    /// Singular values of the mean-shifted data matrix.
    DataSingularValues,
}

/// `M` contours sharing the same sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeWindow<T: Real> {
    contours: Vec<Contour<T>>,
}

impl<T: Real> ShapeWindow<T> {
    pub fn new(contours: Vec<Contour<T>>) -> Result<Self> {
        let first = contours.first().ok_or(Error::InvalidParameter("empty shape window".into()))?;
        if let Some(bad) = contours.iter().find(|c| c.len() != first.len()) {
            return Err(Error::IncomparableContours { left: first.len(), right: bad.len() });
        }
        Ok(Self { contours })
    }

    pub fn contours(&self) -> &[Contour<T>] {
        &self.contours
    }

    /// Number of columns `M`.
    pub fn len(&self) -> usize {
        self.contours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contours.is_empty()
    }

    /// Flattened contour dimension `2K`.
    pub fn dim(&self) -> usize {
        self.contours[0].flat().len()
    }

    /// Data matrix with one contour per column.
    pub fn data_matrix(&self) -> DMatrix<T> {
        DMatrix::from_columns(&self.contours.iter().map(|c| c.flat().clone()).collect::<Vec<_>>())
    }

    pub fn mean(&self) -> DVector<T> {
        let m = T::from_usize(self.len()).expect("window size fits scalar");
        self.contours.iter().fold(DVector::zeros(self.dim()), |acc, c| acc + c.flat()) / m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBasis<T: Real> {
    mean: DVector<T>,
    /// Full orthonormal basis, columns ordered by decreasing variance.
    u: DMatrix<T>,
    /// Data singular values padded with zeros to `2K`.
    singular_values: DVector<T>,
    k: usize,
}

/// Fits the PCA basis of a window and keeps the first `k` columns as features.
pub fn fit_basis<T: Real>(window: &ShapeWindow<T>, k: usize) -> Result<ProjectionBasis<T>> {
    let m = window.len();
    let dim = window.dim();
    if m < 2 {
        return Err(Error::InvalidParameter(format!("PCA window needs >= 2 contours, got {m}")));
    }
    if k == 0 || k > dim.min(m) {
        return Err(Error::InvalidParameter(format!("feature dimension {k} outside 1..={}", dim.min(m))));
    }
    let mean = window.mean();
    let data = window.data_matrix();
    let mut shifted = data.clone();
    for mut col in shifted.column_iter_mut() {
        col -= &mean;
    }
    // Columns equal up to rounding of the mean count as identical.
    if data.norm() == T::zero() || shifted.norm() <= T::eps() * T::lit(1e3) * data.norm() {
        return Err(Error::DegenerateWindow);
    }

    let svd = shifted.svd(true, false);
    let thin_u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap_or(std::cmp::Ordering::Equal)
    });
    let r = order.len();
    let mut singular_values = DVector::zeros(dim);
    let mut seed = DMatrix::zeros(dim, r + dim);
    for (dst, &src) in order.iter().enumerate() {
        singular_values[dst] = svd.singular_values[src];
        seed.set_column(dst, &thin_u.column(src));
    }
    seed.view_mut((0, r), (dim, dim)).fill_with_identity();
    let mut u = seed.qr().q();
    for mut col in u.column_iter_mut() {
        let (imax, _) = col.iter().enumerate().fold((0, T::zero()), |(bi, bv), (i, v)| {
            if v.abs() > bv {
                (i, v.abs())
            } else {
                (bi, bv)
            }
        });
        if col[imax] < T::zero() {
            col.neg_mut();
        }
    }
    Ok(ProjectionBasis { mean, u, singular_values, k })
}

impl<T: Real> ProjectionBasis<T> {
    pub fn mean(&self) -> &DVector<T> {
        &self.mean
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Contour dimension `2K`.
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// The full `2K x 2K` orthonormal basis.
    pub fn full_basis(&self) -> &DMatrix<T> {
        &self.u
    }

    /// First `k` basis columns.
    pub fn basis_k(&self) -> DMatrixView<'_, T> {
        self.u.columns(0, self.k)
    }

    /// Covariance eigenvalues `sigma_1 >= ... >= sigma_2K`.
    pub fn sigma(&self) -> DVector<T> {
        self.singular_values.map(|s| s * s)
    }

    pub fn singular_values(&self) -> &DVector<T> {
        &self.singular_values
    }

    /// Same basis with a different number of retained features.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.dim() {
            return Err(Error::InvalidParameter(format!("feature dimension {k} outside 1..={}", self.dim())));
        }
        Ok(Self { k, ..self.clone() })
    }

    fn check_dim(&self, contour: &Contour<T>) -> Result<()> {
        if contour.flat().len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: contour.flat().len() });
        }
        Ok(())
    }

    /// `U(k)^T (c - mean)`.
    pub fn project(&self, contour: &Contour<T>) -> Result<FeatureVector<T>> {
        self.check_dim(contour)?;
        Ok(self.basis_k().tr_mul(&(contour.flat() - &self.mean)))
    }

    /// `U^T (c - mean)` over all `2K` directions.
    pub fn project_full(&self, contour: &Contour<T>) -> Result<DVector<T>> {
        self.check_dim(contour)?;
        Ok(self.u.tr_mul(&(contour.flat() - &self.mean)))
    }

    /// Projects every column of a window, one feature vector per column.
    pub fn project_window(&self, window: &ShapeWindow<T>) -> Result<DMatrix<T>> {
        let cols = window.contours().iter().map(|c| self.project(c)).collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_columns(&cols))
    }

    /// `mean + U(k) s`.
    pub fn reconstruct(&self, features: &FeatureVector<T>) -> Result<Contour<T>> {
        if features.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: features.len() });
        }
        Contour::from_flat(&self.mean + self.basis_k() * features)
    }

    /// Fraction of the spectrum captured by the first `k` components.
    pub fn explained_variance(&self, k: usize) -> Result<T> {
        self.explained_variance_with(k, VarianceConvention::default())
    }

    pub fn explained_variance_with(&self, k: usize, convention: VarianceConvention) -> Result<T> {
        if k == 0 || k > self.dim() {
            return Err(Error::InvalidParameter(format!("k = {k} outside 1..={}", self.dim())));
        }
        let spectrum = match convention {
            VarianceConvention::CovarianceEigenvalues => self.sigma(),
            VarianceConvention::DataSingularValues => self.singular_values.clone(),
        };
        let total = spectrum.sum();
        if total <= T::zero() {
            return Err(Error::DegenerateWindow);
        }
        Ok(spectrum.rows(0, k).sum() / total)
    }

    /// Writes `index,mean,u1..uk,sigma` with one row per contour coordinate.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["index".to_string(), "mean".to_string()];
        header.extend((1..=self.k).map(|j| format!("u{j}")));
        header.push("sigma".into());
        wtr.write_record(&header)?;
        let sigma = self.sigma();
        for i in 0..self.dim() {
            let mut row = vec![i.to_string(), format_scalar(self.mean[i])];
            row.extend((0..self.k).map(|j| format_scalar(self.u[(i, j)])));
            row.push(format_scalar(sigma[i]));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn planar_window() -> (ShapeWindow<f64>, DVector<f64>, DVector<f64>, DVector<f64>) {
        // c = base + a u + b w with u, w fixed: exactly a 2-d affine subspace
        let base = DVector::from_fn(12, |i, _| (i as f64 * 0.7).sin() * 3.0);
        let u = DVector::from_fn(12, |i, _| if i % 2 == 0 { 1.0 } else { 0.0 });
        let w = DVector::from_fn(12, |i, _| i as f64 / 12.0 - 0.3);
        let coeffs = [(0.0, 0.0), (1.0, -0.5), (-0.3, 2.0)];
        let cs = coeffs
            .iter()
            .map(|&(a, b)| Contour::from_flat(&base + &u * a + &w * b).unwrap())
            .collect();
        (ShapeWindow::new(cs).unwrap(), base, u, w)
    }

    #[test]
    fn two_dimensional_data_is_fully_explained() {
        let (window, ..) = planar_window();
        let basis = fit_basis(&window, 2).unwrap();
        assert_relative_eq!(basis.explained_variance(2).unwrap(), 1.0, epsilon = 1e-12);
        let sigma = basis.sigma();
        assert!(sigma.iter().skip(2).all(|&s| s < 1e-20 * sigma[0]));
        for c in window.contours() {
            let back = basis.reconstruct(&basis.project(c).unwrap()).unwrap();
            assert_relative_eq!(back.flat(), c.flat(), epsilon = 1e-12);
        }
    }

    #[test]
    fn mean_and_basis_vectors_project_as_expected() {
        let (window, ..) = planar_window();
        let basis = fit_basis(&window, 2).unwrap();
        let mean = Contour::from_flat(basis.mean().clone()).unwrap();
        assert!(basis.project(&mean).unwrap().norm() < 1e-14);
        assert!(basis.project_full(&mean).unwrap().norm() < 1e-14);
        let c = Contour::from_flat(basis.mean() + basis.full_basis().column(0) * 2.5).unwrap();
        let s = basis.project(&c).unwrap();
        assert_relative_eq!(s[0], 2.5, epsilon = 1e-12);
        assert!(s[1].abs() < 1e-12);
    }

    #[test]
    fn full_projection_preserves_norm_and_prefix() {
        let (window, ..) = planar_window();
        let basis = fit_basis(&window, 2).unwrap();
        let c = Contour::from_flat(DVector::from_fn(12, |i, _| (i * i) as f64 * 0.1)).unwrap();
        let full = basis.project_full(&c).unwrap();
        assert_relative_eq!(full.norm(), (c.flat() - basis.mean()).norm(), epsilon = 1e-12);
        assert_relative_eq!(full.rows(0, 2).into_owned(), basis.project(&c).unwrap(), epsilon = 1e-14);
        let u = basis.full_basis();
        assert_relative_eq!(u.tr_mul(u), DMatrix::identity(12, 12), epsilon = 1e-12);
    }

    #[test]
    fn explained_variance_edges() {
        let (window, ..) = planar_window();
        let basis = fit_basis(&window, 1).unwrap();
        assert_relative_eq!(basis.explained_variance(12).unwrap(), 1.0, epsilon = 1e-14);
        assert!(basis.explained_variance(0).is_err());
        assert!(basis.explained_variance(13).is_err());
        let sv = basis.explained_variance_with(1, VarianceConvention::DataSingularValues).unwrap();
        let ev = basis.explained_variance(1).unwrap();
        assert!(sv <= ev + 1e-15);
    }

    #[test]
    fn identical_columns_are_degenerate() {
        let c = Contour::from_slice(&[0.1, 0.2, 0.3, 0.7]).unwrap();
        let w = ShapeWindow::new(vec![c.clone(), c.clone(), c]).unwrap();
        assert!(matches!(fit_basis(&w, 1), Err(Error::DegenerateWindow)));
    }

    #[test]
    fn argument_errors() {
        let (window, ..) = planar_window();
        assert!(fit_basis(&window, 0).is_err());
        assert!(fit_basis(&window, 4).is_err());
        let one = ShapeWindow::new(vec![window.contours()[0].clone()]).unwrap();
        assert!(fit_basis(&one, 1).is_err());
        let basis = fit_basis(&window, 2).unwrap();
        let wrong = Contour::from_slice(&[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(basis.project(&wrong), Err(Error::DimensionMismatch { .. })));
        assert!(basis.project_full(&wrong).is_err());
    }

    #[test]
    fn sign_convention_makes_largest_entry_positive() {
        let (window, ..) = planar_window();
        let basis = fit_basis(&window, 2).unwrap();
        for col in basis.full_basis().column_iter() {
            let (imax, _) = col
                .iter()
                .enumerate()
                .fold((0, 0.0), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
            assert!(col[imax] > 0.0);
        }
    }

    #[test]
    fn csv_export_shape() {
        let (window, ..) = planar_window();
        let basis = fit_basis(&window, 2).unwrap();
        let mut buf = Vec::new();
        basis.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "index,mean,u1,u2,sigma");
        assert_eq!(lines.count(), 12);
    }
}
