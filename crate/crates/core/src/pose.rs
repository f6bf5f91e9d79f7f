use std::ops::{Add, Neg, Sub};

use nalgebra::{DVector, Point2, Rotation2, Vector2, Vector3};

use crate::scalar::Real;

/// Planar pose `(x, y, theta)`, also used for end-effector increments `delta r`.
///
/// Two compositions are available:
/// * [`Pose2D::offset`] applies an increment the way the robot executes it: translation
///   in the world frame and rotation about the pose's own origin. This is the group
///   `R^2 x SO(2)` and is what the plants use.
/// * [`Pose2D::compose`] is the usual SE(2) product, used for frame changes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose2D<T: Real> {
    pub x: T,
    pub y: T,
    pub theta: T,
}

impl<T: Real> Pose2D<T> {
    pub fn new(x: T, y: T, theta: T) -> Self {
        Self { x, y, theta }
    }

    pub fn identity() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn from_vector(v: &Vector3<T>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn from_dvector(v: &DVector<T>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_vector(&self) -> Vector3<T> {
        Vector3::new(self.x, self.y, self.theta)
    }

    pub fn to_dvector(&self) -> DVector<T> {
        DVector::from_column_slice(&[self.x, self.y, self.theta])
    }

    pub fn translation(&self) -> Vector2<T> {
        Vector2::new(self.x, self.y)
    }

    pub fn position(&self) -> Point2<T> {
        Point2::new(self.x, self.y)
    }

    pub fn rotation(&self) -> Rotation2<T> {
        Rotation2::new(self.theta)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.x == T::zero() && self.y == T::zero() && self.theta == T::zero()
    }

    /// Applies an end-effector increment: world-frame translation, rotation about this pose's origin.
    pub fn offset(&self, delta: &Self) -> Self {
        Self::new(self.x + delta.x, self.y + delta.y, self.theta + delta.theta)
    }

    /// Same as [`Pose2D::offset`] with the angle wrapped to `(-pi, pi]`.
    pub fn offset_wrapped(&self, delta: &Self) -> Self {
        let mut p = self.offset(delta);
        p.theta = wrap_angle(p.theta);
        p
    }

    /// SE(2) product `self * other`.
    pub fn compose(&self, other: &Self) -> Self {
        let t = self.rotation() * other.translation();
        Self::new(self.x + t.x, self.y + t.y, self.theta + other.theta)
    }

    /// SE(2) inverse.
    pub fn inverse(&self) -> Self {
        let t = self.rotation().inverse() * self.translation();
        Self::new(-t.x, -t.y, -self.theta)
    }

    /// Maps a body-frame point into the world frame.
    pub fn transform_point(&self, p: &Point2<T>) -> Point2<T> {
        self.rotation() * p + self.translation()
    }

    /// Maps a body-frame heading into the world frame.
    pub fn transform_angle(&self, angle: T) -> T {
        self.theta + angle
    }
}

impl<T: Real> Add for Pose2D<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.offset(&rhs)
    }
}

impl<T: Real> Sub for Pose2D<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.theta - rhs.theta)
    }
}

impl<T: Real> Neg for Pose2D<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.theta)
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle<T: Real>(angle: T) -> T {
    let two_pi = T::two_pi();
    let mut a = angle % two_pi;
    if a <= -T::pi() {
        a += two_pi;
    } else if a > T::pi() {
        a -= two_pi;
    }
    a
}
