use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use shapeservo::servo::{servo_loop, Plant, ServoObserver, Trace};
use shapeservo::{Contour, Result};

use crate::config::{PlantSpec, Scenario};
use crate::plant::NoisyPlant;

/// Translation step (fraction of the length) and rotation step (radians) used when
/// forward-simulating a cable toward the target pose.
pub const TARGET_PATH_STEP: f64 = 0.02;

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub seed: u64,
    pub plant: &'static str,
    pub iterations: usize,
    pub converged: bool,
    pub initial_ase: f64,
    /// ASE at the stopping iteration: the sample that met the threshold when
    /// converged, the last sample otherwise.
    pub final_ase: f64,
    pub min_ase: f64,
}

impl SummaryRow {
    pub fn from_trace(scenario: &Scenario, trace: &Trace<f64>) -> Self {
        let ase = trace.ase_series();
        let nan = f64::NAN;
        Self {
            scenario: scenario.name.clone(),
            seed: scenario.seed,
            plant: scenario.plant_kind(),
            iterations: trace.rows.len().saturating_sub(1),
            converged: trace.converged(),
            initial_ase: ase.first().copied().unwrap_or(nan),
            final_ase: trace.final_ase().unwrap_or(nan),
            min_ase: ase.iter().copied().fold(nan, f64::min),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub target: Contour<f64>,
    pub trace: Trace<f64>,
    pub summary: SummaryRow,
}

impl Scenario {
    pub fn plant_kind(&self) -> &'static str {
        match self.plant {
            PlantSpec::Cable { .. } => "cable",
            PlantSpec::Rigid { .. } => "rigid",
        }
    }

    /// Noise-free target contour, in pixels, obtained by driving a copy of the plant
    /// to the target pose.
    pub fn target_contour(&self) -> Result<Contour<f64>> {
        if let PlantSpec::Cable { left, .. } = &self.plant {
            let mut cable = self.cable_plant_with_left(self.target_left.unwrap_or(*left))?;
            cable.move_to(self.target_pose(), TARGET_PATH_STEP)?;
            return cable.observe();
        }
        let mut shape = self.rigid_plant()?.expect("plant is cable or rigid").shape().clone();
        shape.set_pose(self.target_pose());
        crate::plant::RigidPlant::new(shape, self.camera()?).observe()
    }

    /// The plant the controller drives, with sensor noise when configured.
    pub fn plant(&self) -> Result<Box<dyn Plant<f64> + Send>> {
        let plant: Box<dyn Plant<f64> + Send> = match self.cable_plant()? {
            Some(c) => Box::new(c),
            None => Box::new(self.rigid_plant()?.expect("plant is cable or rigid")),
        };
        match self.noise_sigma {
            Some(s) if s > 0.0 => Ok(Box::new(NoisyPlant::new(plant, s * self.pixels_per_unit, self.seed)?)),
            _ => Ok(plant),
        }
    }

    /// Controller random stream; sensor noise uses a separate stream of the same seed.
    pub fn controller_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Runs a scenario with an observer attached to every control iteration.
pub fn run_scenario_with<O: ServoObserver<f64> + ?Sized>(scenario: &Scenario, observer: &mut O) -> Result<Outcome> {
    scenario.validate()?;
    let target = scenario.target_contour()?;
    let mut plant = scenario.plant()?;
    let mut rng = scenario.controller_rng();
    let trace = servo_loop(&mut plant, &target, &scenario.servo_config(), &mut rng, observer)?;
    let summary = SummaryRow::from_trace(scenario, &trace);
    Ok(Outcome { target, trace, summary })
}

pub fn run_scenario(scenario: &Scenario) -> Result<Outcome> {
    run_scenario_with(scenario, &mut ())
}

/// Writes `trace_<name>.csv` into `dir`.
pub fn write_trace(dir: &Path, scenario: &Scenario, trace: &Trace<f64>) -> Result<std::path::PathBuf> {
    let path = dir.join(format!("trace_{}.csv", scenario.name));
    let mut w = BufWriter::new(File::create(&path)?);
    trace.write_csv(&mut w)?;
    w.flush()?;
    Ok(path)
}

/// Writes `summary.csv` with one row per run.
pub fn write_summary(dir: &Path, rows: &[SummaryRow]) -> Result<std::path::PathBuf> {
    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(path)
}
