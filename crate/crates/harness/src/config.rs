//! JSON scenario files.
//!
//! ```json
//! {
//!   "name": "reachable",
//!   "seed": 7,
//!   "plant": { "kind": "cable", "length": 1.0, "right": [0.7, 0.0, 0.0] },
//!   "target": [0.55, 0.2, 0.6],
//!   "noise_sigma": 0.01
//! }
//! ```
//!
//! Poses are `[x, y, theta]` in world units and radians. For a cable the pose is
//! the controlled right end (tangent angle along the cable); for a rigid object it
//! is the grasp corner. `noise_sigma` is in world units and is scaled by the camera
//! like the contour itself.

use std::path::Path;

use serde::{Deserialize, Serialize};
use shapeservo::cable::{CableBoundary, CableModel, DEFAULT_SEGMENTS};
use shapeservo::servo::{ControllerConfig, InitEnvelope, ServoConfig};
use shapeservo::{Error, Pose2D, Result, RigidShape};

use crate::plant::{Camera, CablePlant, RigidPlant};

pub type PoseArray = [f64; 3];

fn pose(p: PoseArray) -> Pose2D<f64> {
    Pose2D::new(p[0], p[1], p[2])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantSpec {
    Cable {
        #[serde(default = "one")]
        length: f64,
        #[serde(default = "default_segments")]
        segments: usize,
        #[serde(default = "one")]
        stiffness: f64,
        #[serde(default)]
        left: PoseArray,
        right: PoseArray,
    },
    Rigid {
        #[serde(default = "one")]
        width: f64,
        #[serde(default = "half")]
        height: f64,
        #[serde(default)]
        pose: PoseArray,
    },
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn default_segments() -> usize {
    DEFAULT_SEGMENTS
}

impl PlantSpec {
    /// Cable length or rigid width; scales the initialization envelope.
    pub fn characteristic_length(&self) -> f64 {
        match self {
            PlantSpec::Cable { length, .. } => *length,
            PlantSpec::Rigid { width, .. } => *width,
        }
    }

    pub fn cable_model(&self) -> Result<Option<CableModel<f64>>> {
        match self {
            PlantSpec::Cable { length, segments, stiffness, .. } => {
                Ok(Some(CableModel::new(*length, *segments, *stiffness)?))
            }
            PlantSpec::Rigid { .. } => Ok(None),
        }
    }
}

/// Controller settings; every field falls back to the library default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSpec {
    pub window_size: usize,
    pub lambda: f64,
    pub epsilon_psi: f64,
    pub alpha: f64,
    pub feature_dim: usize,
    pub eta_max: usize,
    pub use_inverse_form: bool,
    pub normalize_command: bool,
}

impl Default for ControllerSpec {
    fn default() -> Self {
        let c = ControllerConfig::<f64>::default();
        Self {
            window_size: c.window_size,
            lambda: c.lambda,
            epsilon_psi: c.epsilon_psi,
            alpha: c.alpha,
            feature_dim: c.feature_dim,
            eta_max: c.eta_max,
            use_inverse_form: c.use_inverse_form,
            normalize_command: c.normalize_command,
        }
    }
}

impl From<&ControllerSpec> for ControllerConfig<f64> {
    fn from(s: &ControllerSpec) -> Self {
        Self {
            window_size: s.window_size,
            lambda: s.lambda,
            epsilon_psi: s.epsilon_psi,
            alpha: s.alpha,
            feature_dim: s.feature_dim,
            eta_max: s.eta_max,
            use_inverse_form: s.use_inverse_form,
            normalize_command: s.normalize_command,
        }
    }
}

/// Random initialization envelope as fractions of the characteristic length and degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeSpec {
    pub translation_fraction: f64,
    pub rotation_deg: f64,
}

impl Default for EnvelopeSpec {
    fn default() -> Self {
        Self { translation_fraction: 0.05, rotation_deg: 5.0 }
    }
}

impl EnvelopeSpec {
    pub fn envelope(&self, characteristic_length: f64) -> InitEnvelope<f64> {
        InitEnvelope {
            translation: self.translation_fraction * characteristic_length,
            rotation: self.rotation_deg.to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub plant: PlantSpec,
    /// End pose that produces the target contour by forward simulation.
    pub target: PoseArray,
    /// Cable only: fixed-end pose used when generating the target. A value different
    /// from the plant's own fixed end makes the target unreachable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_left: Option<PoseArray>,
    #[serde(default)]
    pub controller: ControllerSpec,
    #[serde(default)]
    pub init: EnvelopeSpec,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_ppu")]
    pub pixels_per_unit: f64,
    /// Convergence threshold on ASE, in pixels.
    #[serde(default = "one")]
    pub termination_ase: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Standard deviation of contour noise in world units.
    #[serde(default)]
    pub noise_sigma: Option<f64>,
}

fn default_samples() -> usize {
    50
}

fn default_ppu() -> f64 {
    200.0
}

fn default_max_iterations() -> usize {
    5000
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn camera(&self) -> Result<Camera> {
        Camera::new(self.pixels_per_unit)
    }

    pub fn servo_config(&self) -> ServoConfig<f64> {
        ServoConfig {
            controller: (&self.controller).into(),
            init: self.init.envelope(self.plant.characteristic_length()),
            termination_ase: self.termination_ase,
            max_iterations: self.max_iterations,
        }
    }

    /// Checks everything that can be checked without simulating.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::InvalidParameter(format!("scenario name {:?} must be [A-Za-z0-9_-]+", self.name)));
        }
        if self.samples < 2 {
            return Err(Error::TooFewPoints(self.samples));
        }
        self.camera()?;
        self.servo_config().validate()?;
        self.plant.cable_model()?;
        if let Some(s) = self.noise_sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!("noise sigma must be >= 0, got {s}")));
            }
        }
        if self.target_left.is_some() && !matches!(self.plant, PlantSpec::Cable { .. }) {
            return Err(Error::InvalidParameter("target_left applies to cable plants only".into()));
        }
        if self.target.iter().chain(self.target_left.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("target pose must be finite".into()));
        }
        Ok(())
    }

    pub fn cable_plant(&self) -> Result<Option<CablePlant>> {
        let PlantSpec::Cable { left, .. } = &self.plant else { return Ok(None) };
        self.cable_plant_with_left(*left).map(Some)
    }

    pub(crate) fn cable_plant_with_left(&self, left: PoseArray) -> Result<CablePlant> {
        let PlantSpec::Cable { right, .. } = &self.plant else {
            return Err(Error::InvalidParameter("not a cable scenario".into()));
        };
        let model = self.plant.cable_model()?.expect("cable spec");
        let boundary = CableBoundary::new(pose(left), pose(*right));
        CablePlant::new(model, boundary, self.samples, self.camera()?)
    }

    pub fn rigid_plant(&self) -> Result<Option<RigidPlant>> {
        let PlantSpec::Rigid { width, height, pose: p } = &self.plant else { return Ok(None) };
        let shape = RigidShape::rectangle(*width, *height, self.samples, pose(*p))?;
        Ok(Some(RigidPlant::new(shape, self.camera()?)))
    }

    pub fn target_pose(&self) -> Pose2D<f64> {
        pose(self.target)
    }
}
