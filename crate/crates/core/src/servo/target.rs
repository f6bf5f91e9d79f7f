use crate::contour::{interpolate_toward, Contour};
use crate::error::{Error, Result};
use crate::pca::{FeatureVector, ProjectionBasis};
use crate::scalar::Real;

/// An intermediate target on the segment from the current contour to the final one.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTarget<T: Real> {
    pub contour: Contour<T>,
    /// First `k` coordinates of the full projection.
    pub features: FeatureVector<T>,
    pub eta: usize,
    pub psi: T,
    /// The search hit `eta_max` without meeting either exit condition.
    pub capped: bool,
}

/// Share of the l1 mass of the full projection carried by the first `k` coordinates.
fn psi<T: Real>(full: &nalgebra::DVector<T>, k: usize) -> T {
    let total = full.iter().fold(T::zero(), |acc, v| acc + v.abs());
    if total == T::zero() {
        return T::zero();
    }
    full.rows(0, k).iter().fold(T::zero(), |acc, v| acc + v.abs()) / total
}

/// Searches `eta = 1, 2, ...` for the local target `c + (c* - c) / eta`.
///
/// Accepts the first `eta` whose `Psi >= epsilon`. When `Psi` drops below the
/// previous candidate's value the previous candidate is returned. After `eta_max`
/// candidates the best one seen is returned with `capped` set.
pub fn local_target<T: Real>(
    basis: &ProjectionBasis<T>,
    current: &Contour<T>,
    final_target: &Contour<T>,
    epsilon: T,
    eta_max: usize,
) -> Result<LocalTarget<T>> {
    if current.len() != final_target.len() {
        return Err(Error::IncomparableContours { left: current.len(), right: final_target.len() });
    }
    if eta_max == 0 {
        return Err(Error::InvalidParameter("eta_max must be >= 1".into()));
    }
    let k = basis.k();
    let candidate = |eta: usize| -> Result<LocalTarget<T>> {
        let fraction = T::one() / T::from_usize(eta).expect("eta fits scalar");
        let contour = interpolate_toward(current, final_target, fraction)?;
        let full = basis.project_full(&contour)?;
        Ok(LocalTarget { psi: psi(&full, k), features: full.rows(0, k).into_owned(), contour, eta, capped: false })
    };

    if current == final_target {
        return candidate(1);
    }
    let mut previous: Option<LocalTarget<T>> = None;
    let mut best: Option<LocalTarget<T>> = None;
    for eta in 1..=eta_max {
        let cand = candidate(eta)?;
        if cand.psi >= epsilon {
            return Ok(cand);
        }
        if let Some(prev) = previous.take() {
            if cand.psi < prev.psi {
                return Ok(prev);
            }
        }
        if best.as_ref().is_none_or(|b| cand.psi > b.psi) {
            best = Some(cand.clone());
        }
        previous = Some(cand);
    }
    let mut best = best.expect("at least one candidate evaluated");
    best.capped = true;
    Ok(best)
}
