//! Simulated plants seen through an axis-aligned camera.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use shapeservo::cable::{sample_contour, CableBoundary, CableModel, CableSolver, CableState};
use shapeservo::servo::Plant;
use shapeservo::{Contour, Error, Pose2D, Result, RigidShape};

/// Orthographic camera: world coordinates scaled to pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub pixels_per_unit: f64,
}

impl Camera {
    pub fn new(pixels_per_unit: f64) -> Result<Self> {
        if !(pixels_per_unit > 0.0 && pixels_per_unit.is_finite()) {
            return Err(Error::InvalidParameter(format!("pixels per unit must be positive, got {pixels_per_unit}")));
        }
        Ok(Self { pixels_per_unit })
    }

    pub fn image(&self, world: &Contour<f64>) -> Contour<f64> {
        let s = self.pixels_per_unit;
        world.map_points(|p| p * s)
    }
}

/// Cable held at a fixed left end; the robot moves the right end.
#[derive(Debug, Clone)]
pub struct CablePlant {
    solver: CableSolver<f64>,
    state: CableState<f64>,
    samples: usize,
    camera: Camera,
    reach: f64,
}

impl CablePlant {
    /// Fraction of the cable length the controlled end may move away from the fixed end.
    pub const DEFAULT_REACH: f64 = 0.99;

    pub fn new(model: CableModel<f64>, boundary: CableBoundary<f64>, samples: usize, camera: Camera) -> Result<Self> {
        let mut solver = CableSolver::default();
        let state = solver.solve_static_shape(&model, &boundary, None)?;
        Ok(Self { solver, state, samples, camera, reach: Self::DEFAULT_REACH })
    }

    pub fn state(&self) -> &CableState<f64> {
        &self.state
    }

    pub fn world_contour(&self) -> Result<Contour<f64>> {
        sample_contour(&self.state, self.samples)
    }

    /// Moves the right end to `pose` in short steps so the shape follows one
    /// continuous branch.
    pub fn move_to(&mut self, pose: Pose2D<f64>, max_step: f64) -> Result<()> {
        let start = self.state.boundary().right;
        let diff = pose - start;
        let len = self.state.model().length();
        let span = (diff.translation().norm() / (max_step * len)).max(diff.theta.abs() / max_step);
        let steps = span.ceil().max(1.0) as usize;
        for i in 1..=steps {
            let t = i as f64 / steps as f64;
            let waypoint = start.offset(&Pose2D::new(diff.x * t, diff.y * t, diff.theta * t));
            let boundary = CableBoundary::new(self.state.boundary().left, waypoint);
            self.state = self.solver.solve_static_shape(self.state.model(), &boundary, Some(&self.state))?;
        }
        Ok(())
    }

    /// Executed tip motion: the requested one, with the translation pulled back
    /// onto the reachable disk when it would stretch the cable.
    fn clamp(&self, delta: &Pose2D<f64>) -> Pose2D<f64> {
        let b = self.state.boundary();
        let limit = self.reach * self.state.model().length();
        let rel = b.right.offset(delta).translation() - b.left.translation();
        if rel.norm() <= limit {
            return *delta;
        }
        let clamped = b.left.translation() + rel * (limit / rel.norm());
        Pose2D::new(clamped.x - b.right.x, clamped.y - b.right.y, delta.theta)
    }
}

impl Plant<f64> for CablePlant {
    fn observe(&mut self) -> Result<Contour<f64>> {
        Ok(self.camera.image(&self.world_contour()?))
    }

    fn actuate(&mut self, delta: &Pose2D<f64>) -> Result<()> {
        let delta = self.clamp(delta);
        self.state = self.solver.apply_tip_motion(&self.state, &delta)?;
        Ok(())
    }
}

/// Rigid object rigidly attached to the end-effector.
#[derive(Debug, Clone)]
pub struct RigidPlant {
    shape: RigidShape<f64>,
    camera: Camera,
}

impl RigidPlant {
    pub fn new(shape: RigidShape<f64>, camera: Camera) -> Self {
        Self { shape, camera }
    }

    pub fn shape(&self) -> &RigidShape<f64> {
        &self.shape
    }
}

impl Plant<f64> for RigidPlant {
    fn observe(&mut self) -> Result<Contour<f64>> {
        Ok(self.camera.image(&self.shape.world_contour()))
    }

    fn actuate(&mut self, delta: &Pose2D<f64>) -> Result<()> {
        self.shape = self.shape.apply_motion(delta);
        Ok(())
    }
}

/// Adds i.i.d. Gaussian noise to every observed coordinate.
#[derive(Debug, Clone)]
pub struct NoisyPlant<P> {
    inner: P,
    noise: Normal<f64>,
    rng: ChaCha8Rng,
}

impl<P> NoisyPlant<P> {
    /// `sigma` is in image units (pixels).
    pub fn new(inner: P, sigma: f64, seed: u64) -> Result<Self> {
        let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(format!("noise sigma: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Ok(Self { inner, noise, rng })
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Plant<f64>> Plant<f64> for NoisyPlant<P> {
    fn observe(&mut self) -> Result<Contour<f64>> {
        let clean = self.inner.observe()?;
        let noisy = clean.flat().map(|v| v + self.noise.sample(&mut self.rng));
        Contour::from_flat(noisy)
    }

    fn actuate(&mut self, delta: &Pose2D<f64>) -> Result<()> {
        self.inner.actuate(delta)
    }
}
