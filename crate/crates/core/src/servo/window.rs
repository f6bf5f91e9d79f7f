use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::contour::Contour;
use crate::error::{Error, Result};
use crate::pca::ShapeWindow;
use crate::pose::Pose2D;
use crate::scalar::Real;

/// FIFO of the last `M` motions and the `M + 1` contours they connect.
///
/// Motion `j` moved the object from contour `j` to contour `j + 1`; the newest
/// data sits at the back.
#[derive(Debug, Clone, PartialEq)]
pub struct SlidingWindow<T: Real> {
    capacity: usize,
    motions: VecDeque<Pose2D<T>>,
    contours: VecDeque<Contour<T>>,
}

impl<T: Real> SlidingWindow<T> {
    pub fn new(capacity: usize, initial: Contour<T>) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParameter("window size must be >= 1".into()));
        }
        let mut contours = VecDeque::with_capacity(capacity + 1);
        contours.push_back(initial);
        Ok(Self { capacity, motions: VecDeque::with_capacity(capacity), contours })
    }

    /// Adds the pair `(delta_r, new_contour)`, evicting the oldest pair once full.
    pub fn push_sample(&mut self, delta_r: Pose2D<T>, new_contour: Contour<T>) -> Result<()> {
        let k = self.contours[0].len();
        if new_contour.len() != k {
            return Err(Error::DimensionMismatch { expected: 2 * k, got: new_contour.flat().len() });
        }
        if self.is_full() {
            self.motions.pop_front();
            self.contours.pop_front();
        }
        self.motions.push_back(delta_r);
        self.contours.push_back(new_contour);
        Ok(())
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_full(&self) -> bool {
        self.motions.len() == self.capacity
    }

    pub fn motions(&self) -> &VecDeque<Pose2D<T>> {
        &self.motions
    }

    pub fn contours(&self) -> &VecDeque<Contour<T>> {
        &self.contours
    }

    pub fn latest(&self) -> &Contour<T> {
        self.contours.back().expect("window holds at least one contour")
    }

    /// Motions as columns of a `3 x M` matrix.
    pub fn motion_matrix(&self) -> DMatrix<T> {
        DMatrix::from_fn(3, self.motions.len(), |r, c| self.motions[c].to_vector()[r])
    }

    pub fn shape_window(&self) -> ShapeWindow<T> {
        ShapeWindow::new(self.contours.iter().cloned().collect()).expect("window contours share K")
    }
}
