use nalgebra::{DMatrix, DVector};

use super::window::SlidingWindow;
use crate::error::{Error, Result};
use crate::pca::{FeatureVector, ProjectionBasis};
use crate::pose::Pose2D;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteractionForm {
    /// `k x 3` matrix mapping motion increments to feature increments.
    Direct,
    /// `3 x k` matrix mapping feature increments to motion increments.
    Inverse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionModel<T: Real> {
    form: InteractionForm,
    matrix: DMatrix<T>,
    basis: Option<ProjectionBasis<T>>,
}

impl<T: Real> InteractionModel<T> {
    pub fn new(form: InteractionForm, matrix: DMatrix<T>) -> Result<Self> {
        let motion_rows = match form {
            InteractionForm::Direct => matrix.ncols(),
            InteractionForm::Inverse => matrix.nrows(),
        };
        if motion_rows != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: motion_rows });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("interaction matrix must be finite".into()));
        }
        Ok(Self { form, matrix, basis: None })
    }

    pub fn with_basis(mut self, basis: ProjectionBasis<T>) -> Self {
        self.basis = Some(basis);
        self
    }

    pub fn form(&self) -> InteractionForm {
        self.form
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    /// Basis the model was estimated in, if any.
    pub fn basis(&self) -> Option<&ProjectionBasis<T>> {
        self.basis.as_ref()
    }

    pub fn feature_dim(&self) -> usize {
        match self.form {
            InteractionForm::Direct => self.matrix.nrows(),
            InteractionForm::Inverse => self.matrix.ncols(),
        }
    }
}

/// `target * design^T * (design * design^T + lambda I)^{-1}`.
///
/// With `lambda == 0` a rank-deficient design is reported instead of inverted.
pub fn regularized_fit<T: Real>(target: &DMatrix<T>, design: &DMatrix<T>, lambda: T) -> Result<DMatrix<T>> {
    if target.ncols() != design.ncols() {
        return Err(Error::DimensionMismatch { expected: design.ncols(), got: target.ncols() });
    }
    let q = design.nrows();
    let mut normal = design * design.transpose();
    if lambda == T::zero() {
        let eig = normal.clone().symmetric_eigen();
        let max = eig.eigenvalues.amax();
        let min = eig.eigenvalues.iter().fold(max, |m, &v| m.min(v));
        if max == T::zero() || min <= max * T::lit(1e-12) {
            return Err(Error::SingularNormalMatrix);
        }
    } else {
        for i in 0..q {
            normal[(i, i)] += lambda;
        }
    }
    // normal is symmetric: X normal = B  <=>  normal X^T = B^T
    let rhs = design * target.transpose();
    let solved = match normal.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => normal.lu().solve(&rhs).ok_or(Error::SingularNormalMatrix)?,
    };
    Ok(solved.transpose())
}

/// Feature increments `Delta S` of the window: project every contour with `basis`
/// and difference consecutive columns.
pub fn feature_increments<T: Real>(window: &SlidingWindow<T>, basis: &ProjectionBasis<T>) -> Result<DMatrix<T>> {
    let features = basis.project_window(&window.shape_window())?;
    let m = features.ncols() - 1;
    Ok(features.columns(1, m) - features.columns(0, m))
}

/// Direct form `L = dS dR^T (dR dR^T + lambda I)^{-1}`.
pub fn estimate_interaction<T: Real>(
    window: &SlidingWindow<T>,
    basis: &ProjectionBasis<T>,
    lambda: T,
) -> Result<InteractionModel<T>> {
    let ds = feature_increments(window, basis)?;
    let dr = window.motion_matrix();
    let l = regularized_fit(&ds, &dr, lambda)?;
    Ok(InteractionModel::new(InteractionForm::Direct, l)?.with_basis(basis.clone()))
}

/// Inverse form `L+ = dR dS^T (dS dS^T + lambda I)^{-1}`.
pub fn estimate_inverse_interaction<T: Real>(
    window: &SlidingWindow<T>,
    basis: &ProjectionBasis<T>,
    lambda: T,
) -> Result<InteractionModel<T>> {
    let ds = feature_increments(window, basis)?;
    let dr = window.motion_matrix();
    let l = regularized_fit(&dr, &ds, lambda)?;
    Ok(InteractionModel::new(InteractionForm::Inverse, l)?.with_basis(basis.clone()))
}

/// SVD pseudo-inverse; singular values below `1e-10 * sigma_max` are dropped.
pub fn pseudo_inverse<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    let svd = m.clone().svd(true, true);
    let cutoff = svd.singular_values.amax() * T::lit(1e-10);
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > T::zero() {
            out += vt.row(i).transpose() * u.column(i).transpose() / s;
        }
    }
    out
}

/// One-step command `-alpha * L^+ (s - s*)` (direct) or `-alpha * L+ (s - s*)` (inverse).
pub fn control_step<T: Real>(
    model: &InteractionModel<T>,
    features: &FeatureVector<T>,
    target_features: &FeatureVector<T>,
    alpha: T,
) -> Result<Pose2D<T>> {
    let k = model.feature_dim();
    for v in [features, target_features] {
        if v.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: v.len() });
        }
    }
    let error = features - target_features;
    let gain = match model.form {
        InteractionForm::Direct => pseudo_inverse(&model.matrix),
        InteractionForm::Inverse => model.matrix.clone(),
    };
    let dr: DVector<T> = gain * error * (-alpha);
    let pose = Pose2D::from_dvector(&dr);
    if !pose.is_finite() {
        return Err(Error::NonFiniteControl);
    }
    Ok(pose)
}

/// Rank-one secant correction `L + beta (ds - L dr) dr^T / (dr^T dr)`.
pub fn broyden_update<T: Real>(
    previous: &InteractionModel<T>,
    delta_s: &FeatureVector<T>,
    delta_r: &Pose2D<T>,
    beta: T,
) -> Result<InteractionModel<T>> {
    if previous.form != InteractionForm::Direct {
        return Err(Error::PredictionRequiresDirectForm);
    }
    if delta_s.len() != previous.matrix.nrows() {
        return Err(Error::DimensionMismatch { expected: previous.matrix.nrows(), got: delta_s.len() });
    }
    let dr = delta_r.to_dvector();
    let norm2 = dr.norm_squared();
    if norm2 == T::zero() {
        return Err(Error::ZeroMotion);
    }
    let residual = delta_s - &previous.matrix * &dr;
    let matrix = &previous.matrix + residual * dr.transpose() * (beta / norm2);
    Ok(InteractionModel { form: InteractionForm::Direct, matrix, basis: previous.basis.clone() })
}

/// `s + L dr`.
pub fn predict_one_step<T: Real>(
    model: &InteractionModel<T>,
    features: &FeatureVector<T>,
    delta_r: &Pose2D<T>,
) -> Result<FeatureVector<T>> {
    if model.form != InteractionForm::Direct {
        return Err(Error::PredictionRequiresDirectForm);
    }
    if features.len() != model.matrix.nrows() {
        return Err(Error::DimensionMismatch { expected: model.matrix.nrows(), got: features.len() });
    }
    Ok(features + &model.matrix * delta_r.to_dvector())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn plant() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[2.0, 0.5, -1.0, 0.3, -1.5, 0.2, 0.1, 0.4, 3.0])
    }

    #[test]
    fn regularized_fit_recovers_linear_map() {
        let dr = DMatrix::from_row_slice(3, 5, &[
            0.1, -0.2, 0.05, 0.3, -0.1, 0.0, 0.15, -0.1, 0.2, 0.05, 0.02, 0.01, -0.3, 0.1, 0.2,
        ]);
        let ds = plant() * &dr;
        let l = regularized_fit(&ds, &dr, 0.0).unwrap();
        assert_relative_eq!(l, plant(), epsilon = 1e-10);
    }

    #[test]
    fn singular_design_needs_regularization() {
        let dr = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        let ds = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(regularized_fit(&ds, &dr, 0.0), Err(Error::SingularNormalMatrix)));
        assert!(regularized_fit(&ds, &dr, 0.01).is_ok());
    }

    #[test]
    fn zero_features_give_zero_model() {
        let dr = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let l = regularized_fit(&DMatrix::zeros(3, 3), &dr, 0.01).unwrap();
        assert_eq!(l, DMatrix::zeros(3, 3));
    }

    #[test]
    fn control_is_zero_at_target() {
        let model = InteractionModel::new(InteractionForm::Direct, plant()).unwrap();
        let s = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        assert!(control_step(&model, &s, &s, 0.5).unwrap().is_zero());
        let inv = InteractionModel::new(InteractionForm::Inverse, plant()).unwrap();
        assert!(control_step(&inv, &s, &s, 0.5).unwrap().is_zero());
        assert!(control_step(&inv, &s, &DVector::zeros(2), 0.5).is_err());
    }

    #[test]
    fn pseudo_inverse_of_invertible_is_inverse() {
        let p = pseudo_inverse(&plant());
        assert_relative_eq!(p * plant(), DMatrix::identity(3, 3), epsilon = 1e-12);
        let rank1 = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 0.0]);
        let p = pseudo_inverse(&rank1);
        assert_relative_eq!(&rank1 * &p * &rank1, rank1, epsilon = 1e-12);
    }

    #[test]
    fn broyden_cases() {
        let model = InteractionModel::new(InteractionForm::Direct, plant()).unwrap();
        let dr = Pose2D::new(0.1, -0.2, 0.05);
        let exact = plant() * dr.to_dvector();
        let same = broyden_update(&model, &exact, &dr, 0.7).unwrap();
        assert_relative_eq!(same.matrix(), model.matrix(), epsilon = 1e-15);
        let ds = DVector::from_column_slice(&[1.0, -1.0, 0.5]);
        let upd = broyden_update(&model, &ds, &dr, 1.0).unwrap();
        assert!((upd.matrix() * dr.to_dvector() - &ds).norm() < 1e-12);
        let frozen = broyden_update(&model, &ds, &dr, 0.0).unwrap();
        assert_eq!(frozen.matrix(), model.matrix());
        assert!(matches!(broyden_update(&model, &ds, &Pose2D::identity(), 1.0), Err(Error::ZeroMotion)));
        let inv = InteractionModel::new(InteractionForm::Inverse, plant()).unwrap();
        assert!(broyden_update(&inv, &ds, &dr, 1.0).is_err());
    }

    #[test]
    fn prediction() {
        let model = InteractionModel::new(InteractionForm::Direct, plant()).unwrap();
        let s = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        assert_eq!(predict_one_step(&model, &s, &Pose2D::identity()).unwrap(), s);
        let inv = InteractionModel::new(InteractionForm::Inverse, plant()).unwrap();
        assert!(matches!(
            predict_one_step(&inv, &s, &Pose2D::identity()),
            Err(Error::PredictionRequiresDirectForm)
        ));
    }
}
