//! Scenario runner and experiment studies on top of `shapeservo`.

pub mod config;
pub mod plant;
pub mod presets;
pub mod scenario;
pub mod studies;

pub use config::{ControllerSpec, EnvelopeSpec, PlantSpec, Scenario};
pub use plant::{CablePlant, Camera, NoisyPlant, RigidPlant};
pub use scenario::{run_scenario, run_scenario_with, write_summary, write_trace, Outcome, SummaryRow};
pub use studies::{Preset, StudyReport};
