use crate::error::{Error, Result};
use crate::scalar::Real;

/// Controller parameters. Defaults follow the cable experiments: `M = 5`,
/// `lambda = 0.01`, `epsilon = 0.8`, `alpha = 0.01`, `k = 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig<T: Real> {
    /// Window size `M` (motions kept; `M + 1` contours).
    pub window_size: usize,
    /// Tikhonov factor.
    pub lambda: T,
    /// Local target acceptance threshold on `Psi`.
    pub epsilon_psi: T,
    /// Control gain in `(0, 1]`.
    pub alpha: T,
    /// Feature dimension (equal to the 3 planar degrees of freedom by default).
    pub feature_dim: usize,
    /// Cap on the local target search.
    pub eta_max: usize,
    /// Estimate the inverse interaction matrix directly and use it for control.
    pub use_inverse_form: bool,
    /// Rescale every control command to length `alpha` (the gain becomes a step length).
    pub normalize_command: bool,
}

impl<T: Real> Default for ControllerConfig<T> {
    fn default() -> Self {
        Self {
            window_size: 5,
            lambda: T::lit(0.01),
            epsilon_psi: T::lit(0.8),
            alpha: T::lit(0.01),
            feature_dim: 3,
            eta_max: 64,
            use_inverse_form: true,
            normalize_command: false,
        }
    }
}

impl<T: Real> ControllerConfig<T> {
    // negated comparisons so NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.window_size < 1 {
            return bad("window size must be >= 1".into());
        }
        if !(self.lambda >= T::zero()) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.epsilon_psi >= T::zero() && self.epsilon_psi <= T::one()) {
            return bad(format!("epsilon must lie in [0, 1], got {}", self.epsilon_psi));
        }
        if !(self.alpha > T::zero() && self.alpha <= T::one()) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if self.feature_dim == 0 || self.feature_dim > self.window_size + 1 {
            return bad(format!("feature dimension must lie in 1..=M+1, got {}", self.feature_dim));
        }
        if self.eta_max < 1 {
            return bad("eta_max must be >= 1".into());
        }
        Ok(())
    }
}

/// Amplitude of the uniform random motions used to fill the initial window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitEnvelope<T: Real> {
    /// Per-axis translation bound (absolute length).
    pub translation: T,
    /// Rotation bound (radians).
    pub rotation: T,
}

impl<T: Real> InitEnvelope<T> {
    /// +-5% of the characteristic length and +-5 degrees.
    pub fn for_length(characteristic_length: T) -> Self {
        Self { translation: characteristic_length * T::lit(0.05), rotation: T::lit(5.0f64.to_radians()) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoConfig<T: Real> {
    pub controller: ControllerConfig<T>,
    pub init: InitEnvelope<T>,
    /// Convergence threshold on the average sample error.
    pub termination_ase: T,
    /// Total actuation budget, initialization motions included.
    pub max_iterations: usize,
}

impl<T: Real> ServoConfig<T> {
    pub fn new(controller: ControllerConfig<T>, init: InitEnvelope<T>) -> Self {
        Self { controller, init, termination_ase: T::one(), max_iterations: 5000 }
    }

    // negated comparisons so NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        self.controller.validate()?;
        if !(self.termination_ase > T::zero()) {
            return Err(Error::InvalidParameter("termination threshold must be positive".into()));
        }
        if !(self.init.translation >= T::zero() && self.init.rotation >= T::zero()) {
            return Err(Error::InvalidParameter("initialization envelope must be non-negative".into()));
        }
        Ok(())
    }
}
