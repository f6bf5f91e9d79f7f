//! Model-free shape servoing of planar contours.
//!
//! Contours are reduced to a few PCA features fitted on a short receding window of
//! recent observations; the map from end-effector motion to feature change is
//! re-estimated on the same window with Tikhonov-regularized least squares and
//! inverted in a one-step proportional law. Local targets along the segment to the
//! final contour keep each step inside the region the current basis describes.
//!
//! Two simulated plants are provided: an inextensible elastic cable whose static
//! shape minimizes bending energy, and a rigid planar shape.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for `f32` and
//! `f64`); the `*64`/`*32` aliases below name the common instantiations.

pub mod cable;
pub mod contour;
pub mod error;
pub mod pca;
pub mod pose;
pub mod rigid;
pub mod scalar;
pub mod servo;

pub use cable::{sample_contour, CableBoundary, CableModel, CableSolver, CableState, SolverOptions};
pub use contour::{average_sample_error, interpolate_toward, resample_uniform, Contour, ResampleParams, Resampled};
pub use error::{Error, Result};
pub use pca::{fit_basis, FeatureVector, ProjectionBasis, ShapeWindow, VarianceConvention};
pub use pose::{wrap_angle, Pose2D};
pub use rigid::{rectangle_template, RigidShape};
pub use scalar::Real;

pub type Contour64 = Contour<f64>;
pub type Contour32 = Contour<f32>;
pub type Pose2D64 = Pose2D<f64>;
pub type Pose2D32 = Pose2D<f32>;
pub type ProjectionBasis64 = ProjectionBasis<f64>;
pub type ProjectionBasis32 = ProjectionBasis<f32>;
pub type CableState64 = CableState<f64>;
pub type CableSolver64 = CableSolver<f64>;
pub type RigidShape64 = RigidShape<f64>;
pub type InteractionModel64 = servo::InteractionModel<f64>;
pub type Trace64 = servo::Trace<f64>;
