//! Rigid planar object whose contour follows the end-effector pose.

use nalgebra::Point2;

use crate::contour::{resample_uniform, Contour, ResampleParams};
use crate::error::{Error, Result};
use crate::pose::{wrap_angle, Pose2D};
use crate::scalar::Real;

/// A body-frame template and its world pose.
///
/// The template's first sample is the grasp point; it sits at the body origin so the
/// pose position is the grasp position and rotations happen about it.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidShape<T: Real> {
    template: Contour<T>,
    pose: Pose2D<T>,
}

impl<T: Real> RigidShape<T> {
    pub fn new(template: Contour<T>, pose: Pose2D<T>) -> Result<Self> {
        if !pose.is_finite() {
            return Err(Error::InvalidParameter("rigid pose must be finite".into()));
        }
        let mut pose = pose;
        pose.theta = wrap_angle(pose.theta);
        Ok(Self { template, pose })
    }

    /// Uniformly sampled rectangle of `width x height`, `k` samples starting at the
    /// grasp corner and running clockwise. The grasp corner is the body origin and the
    /// rectangle extends along `+x` and `+y`.
    pub fn rectangle(width: T, height: T, k: usize, pose: Pose2D<T>) -> Result<Self> {
        Self::new(rectangle_template(width, height, k)?, pose)
    }

    pub fn template(&self) -> &Contour<T> {
        &self.template
    }

    pub fn pose(&self) -> Pose2D<T> {
        self.pose
    }

    /// Template points rotated by `theta` and translated by `(x, y)`, order preserved.
    pub fn world_contour(&self) -> Contour<T> {
        let pose = self.pose;
        self.template.map_points(|p| pose.transform_point(&p))
    }

    /// Applies an end-effector increment (world translation, rotation about the grasp point).
    pub fn apply_motion(&self, delta: &Pose2D<T>) -> Self {
        Self { template: self.template.clone(), pose: self.pose.offset_wrapped(delta) }
    }

    pub fn set_pose(&mut self, pose: Pose2D<T>) {
        self.pose = pose;
        self.pose.theta = wrap_angle(pose.theta);
    }
}

/// Rectangle perimeter sampled uniformly, clockwise from the origin corner.
pub fn rectangle_template<T: Real>(width: T, height: T, k: usize) -> Result<Contour<T>> {
    if !(width > T::zero() && height > T::zero()) {
        return Err(Error::InvalidParameter("rectangle sides must be positive".into()));
    }
    let z = T::zero();
    // Clockwise with y up: origin -> up the left side -> across the top -> down -> back.
    let corners = [
        Point2::new(z, z),
        Point2::new(z, height),
        Point2::new(width, height),
        Point2::new(width, z),
        Point2::new(z, z),
    ];
    Ok(resample_uniform(&corners, ResampleParams::new(k))?.contour)
}
