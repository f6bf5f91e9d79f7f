//! Built-in scenarios used by the `study` presets and the acceptance suite.

use std::f64::consts::FRAC_PI_2;

use crate::config::{ControllerSpec, EnvelopeSpec, PlantSpec, Scenario};
use crate::studies::{CorrelationSpec, MotionEnvelope, VarianceTrialSpec};

/// Controller defaults with unit-length commands.
pub fn servo_controller() -> ControllerSpec {
    ControllerSpec { normalize_command: true, ..ControllerSpec::default() }
}

fn cable(right: [f64; 3]) -> PlantSpec {
    PlantSpec::Cable { length: 1.0, segments: 100, stiffness: 1.0, left: [0.0; 3], right }
}

fn scenario(name: &str, seed: u64, plant: PlantSpec, target: [f64; 3]) -> Scenario {
    Scenario {
        name: name.into(),
        seed,
        plant,
        target,
        target_left: None,
        controller: servo_controller(),
        init: EnvelopeSpec::default(),
        samples: 50,
        pixels_per_unit: 200.0,
        termination_ase: 1.0,
        max_iterations: 5000,
        noise_sigma: None,
    }
}

/// Unit cable with ends 0.7 apart, asked to rise and bend its free end upward.
pub fn reachable_cable(seed: u64) -> Scenario {
    scenario(&format!("reachable_s{seed}"), seed, cable([0.7, 0.0, 0.0]), [0.35, 0.35, 1.6])
}

/// [`reachable_cable`] with `sigma` world units of contour noise.
pub fn noisy_cable(seed: u64, sigma: f64) -> Scenario {
    let mut s = reachable_cable(seed);
    s.name = format!("noisy_s{seed}");
    s.noise_sigma = Some(sigma);
    s
}

/// Target generated with the fixed end raised and tilted, so no tip pose reproduces it.
pub fn unreachable_cable(seed: u64) -> Scenario {
    let mut s = scenario(&format!("unreachable_s{seed}"), seed, cable([0.7, 0.0, 0.0]), [0.6, 0.1, 0.3]);
    s.target_left = Some([0.0, 0.1, 0.8]);
    s
}

/// Rigid 1 x 0.5 rectangle grasped at a corner; targets translate and rotate it.
pub fn rigid_targets() -> Vec<[f64; 3]> {
    vec![[0.3, 0.2, 0.3], [-0.2, 0.25, -0.4], [0.15, -0.3, 0.6], [0.4, 0.0, -0.2]]
}

pub fn rigid(seed: u64, index: usize) -> Scenario {
    let targets = rigid_targets();
    let plant = PlantSpec::Rigid { width: 1.0, height: 0.5, pose: [0.0; 3] };
    scenario(&format!("rigid_{index}_s{seed}"), seed, plant, targets[index % targets.len()])
}

/// Six distinct cable configurations for the feature-dimension study.
pub fn variance_shapes() -> Vec<[f64; 3]> {
    vec![
        [0.7, 0.0, 0.0],
        [0.6, 0.2, 0.5],
        [0.5, -0.1, -0.6],
        [0.8, 0.1, 0.3],
        [0.4, 0.3, 1.2],
        [0.65, -0.25, -0.2],
        [0.55, 0.0, 0.9],
        [0.75, 0.2, -0.4],
        [0.45, -0.2, 0.2],
        [0.6, 0.3, 0.0],
    ]
}

/// Small envelope: `+-5%` of the length and `+-5` degrees, ten motions, 50 samples.
pub fn small_motion_trials(seed: u64) -> Vec<VarianceTrialSpec> {
    variance_trials(seed, 6, MotionEnvelope { translation: 0.05, rotation: 5f64.to_radians() }, "small")
}

/// Large envelope: rotations over `[-pi/2, pi/2]` and translations up to 106% of the length.
pub fn large_motion_trials(seed: u64) -> Vec<VarianceTrialSpec> {
    variance_trials(seed, 10, MotionEnvelope { translation: 1.06, rotation: FRAC_PI_2 }, "large")
}

fn variance_trials(seed: u64, count: usize, envelope: MotionEnvelope, tag: &str) -> Vec<VarianceTrialSpec> {
    variance_shapes()
        .into_iter()
        .take(count)
        .enumerate()
        .map(|(i, right)| VarianceTrialSpec {
            name: format!("{tag}_{i}"),
            seed: seed.wrapping_add(i as u64),
            length: 1.0,
            left: [0.0; 3],
            right,
            motions: 10,
            samples: 50,
            envelope,
        })
        .collect()
}

/// Rigid motions for the correlation study: rotation in `[-0.11, 0.09]`, translation
/// within 10% of the width along x and 15% along y.
///
/// Equal x and y ranges give the two translation components nearly equal variance,
/// and PCA is then free to mix them.
pub fn correlation_spec(seed: u64) -> CorrelationSpec {
    CorrelationSpec {
        seed,
        width: 1.0,
        height: 0.5,
        samples: 50,
        motions: 100,
        translation_x: 0.1,
        translation_y: 0.15,
        rotation: (-0.11, 0.09),
    }
}
