//! Experiment studies. Each study is a pure function of its inputs and seeds; trials
//! run on the rayon pool and are collected in input order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use shapeservo::cable::{CableBoundary, CableModel};
use shapeservo::servo::{
    broyden_update, predict_one_step, pseudo_inverse, ControlStep, InteractionForm, InteractionModel, ServoObserver,
};
use shapeservo::{fit_basis, Contour, Error, FeatureVector, Pose2D, ProjectionBasis, Result, RigidShape, ShapeWindow};

use crate::config::Scenario;
use crate::plant::{CablePlant, Camera};
use crate::scenario::{run_scenario, run_scenario_with, SummaryRow, TARGET_PATH_STEP};

/// Named study presets of the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Variance,
    Noise,
    Broyden,
    Correlation,
    Unreachable,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::Variance, Preset::Noise, Preset::Broyden, Preset::Correlation, Preset::Unreachable];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Variance => "variance",
            Preset::Noise => "noise",
            Preset::Broyden => "broyden",
            Preset::Correlation => "correlation",
            Preset::Unreachable => "unreachable",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown preset {s:?}")))
    }
}

/// Tabular study output plus the per-run summaries it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub study: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summaries: Vec<SummaryRow>,
}

impl StudyReport {
    fn new(study: &str, header: &[&str]) -> Self {
        Self { study: study.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new(), summaries: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Writes `report_<study>.csv`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("report_{}.csv", self.study));
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))?.flush()?;
        Ok(path)
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

// ---------------------------------------------------------------------------
// Explained variance

/// Per-axis translation bound (world units per unit length) and rotation bound (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionEnvelope {
    pub translation: f64,
    pub rotation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceTrialSpec {
    pub name: String,
    pub seed: u64,
    pub length: f64,
    pub left: [f64; 3],
    pub right: [f64; 3],
    /// Number of random motions `M`.
    pub motions: usize,
    /// Contour samples `K`.
    pub samples: usize,
    pub envelope: MotionEnvelope,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceTrial {
    pub name: String,
    /// `upsilon[k - 1]` is the explained variance of the first `k` components.
    pub upsilon: Vec<f64>,
    /// Random poses redrawn because the solver could not follow them.
    pub redrawn: usize,
}

impl VarianceTrial {
    pub fn at(&self, k: usize) -> f64 {
        self.upsilon[k - 1]
    }
}

const MAX_REDRAWS: usize = 20;

/// Fits PCA on the `M` shapes reached by independent random tip offsets around an
/// initial shape and tabulates `Upsilon(k)` for every `k`.
///
/// Offsets are uniform per axis, capped at the envelope radius, and pulled back onto
/// the disk the cable can reach.
pub fn explained_variance_trial(spec: &VarianceTrialSpec) -> Result<VarianceTrial> {
    let model = CableModel::new(spec.length, shapeservo::cable::DEFAULT_SEGMENTS, 1.0)?;
    let pose = |p: [f64; 3]| Pose2D::new(p[0], p[1], p[2]);
    let boundary = CableBoundary::new(pose(spec.left), pose(spec.right));
    let start = CablePlant::new(model, boundary, spec.samples, Camera::new(1.0)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let radius = spec.envelope.translation * spec.length;
    let reach = CablePlant::DEFAULT_REACH * spec.length;
    let mut contours = Vec::with_capacity(spec.motions);
    let mut redrawn = 0;
    while contours.len() < spec.motions {
        let mut d = nalgebra::Vector2::new(rng.random_range(-radius..=radius), rng.random_range(-radius..=radius));
        if d.norm() > radius {
            d *= radius / d.norm();
        }
        let rel = nalgebra::Vector2::new(spec.right[0] + d.x - spec.left[0], spec.right[1] + d.y - spec.left[1]);
        if rel.norm() > reach {
            d = rel * (reach / rel.norm()) - nalgebra::Vector2::new(spec.right[0] - spec.left[0], spec.right[1] - spec.left[1]);
        }
        let dt = rng.random_range(-spec.envelope.rotation..=spec.envelope.rotation);
        let goal = boundary.right.offset(&Pose2D::new(d.x, d.y, dt));
        let mut plant = start.clone();
        match plant.move_to(goal, TARGET_PATH_STEP) {
            Ok(()) => contours.push(plant.world_contour()?),
            Err(Error::SolverNotConverged { .. }) if redrawn < MAX_REDRAWS => redrawn += 1,
            Err(e) => return Err(e),
        }
    }
    let window = ShapeWindow::new(contours)?;
    let dim = window.dim();
    let basis = fit_basis(&window, 1)?;
    let upsilon = (1..=dim).map(|k| basis.explained_variance(k)).collect::<Result<Vec<_>>>()?;
    Ok(VarianceTrial { name: spec.name.clone(), upsilon, redrawn })
}

/// Runs every trial; a failing trial becomes an error row instead of aborting the study.
pub fn study_explained_variance(trials: &[VarianceTrialSpec], k_values: &[usize]) -> (Vec<Result<VarianceTrial>>, StudyReport) {
    let results: Vec<_> = trials.par_iter().map(explained_variance_trial).collect();
    let mut header = vec!["trial".to_string(), "seed".into(), "motions".into(), "translation".into(), "rotation".into()];
    header.extend(k_values.iter().map(|k| format!("upsilon_{k}")));
    header.extend(["redrawn".to_string(), "error".into()]);
    let mut report = StudyReport { study: "variance".into(), header, rows: Vec::new(), summaries: Vec::new() };
    for (spec, res) in trials.iter().zip(&results) {
        let mut row = vec![
            spec.name.clone(),
            spec.seed.to_string(),
            spec.motions.to_string(),
            num(spec.envelope.translation),
            num(spec.envelope.rotation),
        ];
        match res {
            Ok(t) => {
                row.extend(k_values.iter().map(|&k| opt(t.upsilon.get(k.wrapping_sub(1)).copied())));
                row.extend([t.redrawn.to_string(), String::new()]);
            }
            Err(e) => {
                row.extend(k_values.iter().map(|_| String::new()));
                row.extend([String::new(), e.to_string()]);
            }
        }
        report.push(row);
    }
    (results, report)
}

// ---------------------------------------------------------------------------
// Servo runs (noise, unreachable)

/// Runs scenarios in parallel and tabulates one summary per run.
pub fn study_runs(study: &str, scenarios: &[Scenario]) -> (Vec<Result<crate::Outcome>>, StudyReport) {
    let outcomes: Vec<_> = scenarios.par_iter().map(run_scenario).collect();
    let mut report = StudyReport::new(
        study,
        &["scenario", "seed", "noise_sigma", "iterations", "converged", "initial_ase", "final_ase", "min_ase", "plateau_change", "max_ase", "error"],
    );
    for (sc, out) in scenarios.iter().zip(&outcomes) {
        let sigma = opt(sc.noise_sigma);
        match out {
            Ok(o) => {
                let ase = o.trace.ase_series();
                let s = &o.summary;
                report.push(vec![
                    s.scenario.clone(),
                    s.seed.to_string(),
                    sigma,
                    s.iterations.to_string(),
                    s.converged.to_string(),
                    num(s.initial_ase),
                    num(s.final_ase),
                    num(s.min_ase),
                    opt(plateau_change(&ase, PLATEAU_WINDOW)),
                    num(ase.iter().copied().fold(f64::NAN, f64::max)),
                    String::new(),
                ]);
                report.summaries.push(s.clone());
            }
            Err(e) => {
                let mut row = vec![sc.name.clone(), sc.seed.to_string(), sigma];
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.push(e.to_string());
                report.push(row);
            }
        }
    }
    (outcomes, report)
}

pub const PLATEAU_WINDOW: usize = 500;

/// Relative change between the means of the last two `window`-long stretches of `ase`.
pub fn plateau_change(ase: &[f64], window: usize) -> Option<f64> {
    if window == 0 || ase.len() < 2 * window {
        return None;
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let last = mean(&ase[ase.len() - window..]);
    let before = mean(&ase[ase.len() - 2 * window..ase.len() - window]);
    Some((last - before).abs() / last)
}

// ---------------------------------------------------------------------------
// Receding horizon versus Broyden

/// One-step prediction errors at one control iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub iteration: usize,
    pub receding: f64,
    /// One entry per Broyden gain, `None` until that estimator exists.
    pub broyden: Vec<f64>,
}

struct Pending {
    iteration: usize,
    basis: ProjectionBasis<f64>,
    features: FeatureVector<f64>,
    command: Pose2D<f64>,
    receding: FeatureVector<f64>,
    broyden: Vec<FeatureVector<f64>>,
}

/// The controller's model as a feature-from-motion map; an inverse-form estimate is
/// pseudo-inverted.
pub fn direct_model(model: &InteractionModel<f64>) -> Result<InteractionModel<f64>> {
    match model.form() {
        InteractionForm::Direct => Ok(model.clone()),
        InteractionForm::Inverse => InteractionModel::new(InteractionForm::Direct, pseudo_inverse(model.matrix())),
    }
}

/// What a one-step prediction `s_i + L dr_i` is scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroundTruth {
    /// `s_{i+1}` as the controller sees it, in the basis refitted at `i + 1`. Broyden
    /// updates then use `s_{i+1} - s_i` across the basis change.
    #[default]
    Observed,
    /// The next contour projected with the basis of iteration `i`.
    SameBasis,
}

/// Observer comparing the receding-window estimate with Broyden-updated estimates on
/// the trajectory the receding-window controller produces.
///
/// Broyden estimates start from the first receding-window estimate and are then
/// carried from iteration to iteration, changed only by their rank-one updates.
pub struct PredictionComparison {
    betas: Vec<f64>,
    truth: GroundTruth,
    models: Vec<InteractionModel<f64>>,
    pending: Option<Pending>,
    pub rows: Vec<PredictionRow>,
    /// Largest `|L dr - ds|` seen right after a `beta = 1` update.
    pub max_secant_residual: f64,
    pub skipped_updates: usize,
}

impl PredictionComparison {
    pub fn new(betas: &[f64], truth: GroundTruth) -> Self {
        Self {
            betas: betas.to_vec(),
            truth,
            models: Vec::new(),
            pending: None,
            rows: Vec::new(),
            max_secant_residual: 0.0,
            skipped_updates: 0,
        }
    }

    fn resolve(&mut self, truth: FeatureVector<f64>) -> Result<()> {
        let Some(p) = self.pending.take() else { return Ok(()) };
        let receding = (&p.receding - &truth).norm();
        let broyden = p.broyden.iter().map(|b| (b - &truth).norm()).collect();
        self.rows.push(PredictionRow { iteration: p.iteration, receding, broyden });
        if p.command.is_zero() {
            self.skipped_updates += 1;
            return Ok(());
        }
        let ds = &truth - &p.features;
        for (model, &beta) in self.models.iter_mut().zip(&self.betas) {
            *model = broyden_update(model, &ds, &p.command, beta)?;
            if beta == 1.0 {
                let residual = (model.matrix() * p.command.to_dvector() - &ds).amax();
                self.max_secant_residual = self.max_secant_residual.max(residual);
            }
        }
        Ok(())
    }

    /// Scores the outstanding prediction with the contour seen after the last command.
    /// Only possible when truth lives in the predicting basis.
    pub fn finish(&mut self, last: &Contour<f64>) -> Result<()> {
        if self.truth == GroundTruth::SameBasis {
            if let Some(p) = &self.pending {
                let truth = p.basis.project(last)?;
                self.resolve(truth)?;
            }
        }
        self.pending = None;
        Ok(())
    }

    /// Mean receding-window error and mean error per Broyden gain.
    pub fn mean_errors(&self) -> (f64, Vec<f64>) {
        let n = self.rows.len().max(1) as f64;
        let receding = self.rows.iter().map(|r| r.receding).sum::<f64>() / n;
        let broyden = (0..self.betas.len()).map(|j| self.rows.iter().map(|r| r.broyden[j]).sum::<f64>() / n).collect();
        (receding, broyden)
    }
}

impl ServoObserver<f64> for PredictionComparison {
    fn on_control(&mut self, step: &ControlStep<'_, f64>) -> Result<()> {
        if let Some(p) = &self.pending {
            let truth = match self.truth {
                GroundTruth::Observed => step.features.clone(),
                GroundTruth::SameBasis => p.basis.project(step.contour)?,
            };
            self.resolve(truth)?;
        }
        let model = direct_model(step.model)?;
        if self.models.is_empty() {
            self.models = vec![model.clone(); self.betas.len()];
        }
        let receding = predict_one_step(&model, step.features, &step.command)?;
        let broyden = self.models.iter().map(|m| predict_one_step(m, step.features, &step.command)).collect::<Result<_>>()?;
        self.pending = Some(Pending {
            iteration: step.iteration,
            basis: step.basis.clone(),
            features: step.features.clone(),
            command: step.command,
            receding,
            broyden,
        });
        Ok(())
    }
}

/// Runs one servo trajectory and scores one-step predictions along it.
pub fn study_estimator_comparison(
    scenario: &Scenario,
    betas: &[f64],
    truth: GroundTruth,
) -> Result<(PredictionComparison, StudyReport)> {
    let mut cmp = PredictionComparison::new(betas, truth);
    let outcome = run_scenario_with(scenario, &mut cmp)?;
    if let Some(last) = outcome.trace.rows.last() {
        cmp.finish(&last.contour)?;
    }
    let mut header = vec!["iteration".to_string(), "receding".into()];
    header.extend(betas.iter().map(|b| format!("broyden_{b}")));
    let mut report = StudyReport { study: "broyden".into(), header, rows: Vec::new(), summaries: vec![outcome.summary] };
    for r in &cmp.rows {
        let mut row = vec![r.iteration.to_string(), num(r.receding)];
        row.extend(r.broyden.iter().map(|v| num(*v)));
        report.push(row);
    }
    let (mean_rh, mean_b) = cmp.mean_errors();
    let mut row = vec!["mean".to_string(), num(mean_rh)];
    row.extend(mean_b.into_iter().map(num));
    report.push(row);
    Ok((cmp, report))
}

// ---------------------------------------------------------------------------
// Rigid feature/pose correlation

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationSpec {
    pub seed: u64,
    pub width: f64,
    pub height: f64,
    pub samples: usize,
    pub motions: usize,
    /// Translation bounds as fractions of the width.
    pub translation_x: f64,
    pub translation_y: f64,
    /// Rotation interval in radians.
    pub rotation: (f64, f64),
}

/// `rho[i][j]` correlates feature `i` with pose variable `j` of `(x, y, theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub rho: [[Option<f64>; 3]; 3],
}

impl CorrelationMatrix {
    /// Pose variable each feature is most strongly correlated with.
    pub fn strongest(&self) -> [Option<usize>; 3] {
        self.rho.map(|row| {
            (0..3)
                .filter_map(|j| row[j].map(|r| (j, r.abs())))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(j, _)| j)
        })
    }
}

/// Pearson correlation; `None` when either series has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Random rigid poses around the identity, a PCA basis fitted on all of them and the
/// correlations between the first three features and the pose.
pub fn rigid_correlation(spec: &CorrelationSpec) -> Result<CorrelationMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let shape = RigidShape::rectangle(spec.width, spec.height, spec.samples, Pose2D::identity())?;
    let (tx, ty) = (spec.translation_x * spec.width, spec.translation_y * spec.width);
    let mut poses = Vec::with_capacity(spec.motions);
    let mut contours = Vec::with_capacity(spec.motions);
    for _ in 0..spec.motions {
        let p = Pose2D::new(rng.random_range(-tx..=tx), rng.random_range(-ty..=ty), rng.random_range(spec.rotation.0..=spec.rotation.1));
        let mut s = shape.clone();
        s.set_pose(p);
        contours.push(s.world_contour());
        poses.push(p);
    }
    let window = ShapeWindow::new(contours)?;
    let basis = fit_basis(&window, 3)?;
    let features: DMatrix<f64> = basis.project_window(&window)?;
    let pose_series = [
        poses.iter().map(|p| p.x).collect::<Vec<_>>(),
        poses.iter().map(|p| p.y).collect(),
        poses.iter().map(|p| p.theta).collect(),
    ];
    let mut rho = [[None; 3]; 3];
    for (i, row) in rho.iter_mut().enumerate() {
        let f: Vec<f64> = features.row(i).iter().copied().collect();
        for (j, series) in pose_series.iter().enumerate() {
            row[j] = pearson(&f, series);
        }
    }
    Ok(CorrelationMatrix { rho })
}

pub fn study_rigid_correlation(specs: &[CorrelationSpec]) -> (Vec<Result<CorrelationMatrix>>, StudyReport) {
    let results: Vec<_> = specs.par_iter().map(rigid_correlation).collect();
    let mut report = StudyReport::new("correlation", &["seed", "feature", "rho_x", "rho_y", "rho_theta", "strongest", "error"]);
    for (spec, res) in specs.iter().zip(&results) {
        match res {
            Ok(m) => {
                let strongest = m.strongest();
                for (i, best) in strongest.iter().enumerate() {
                    let label = best.map(|j| ["x", "y", "theta"][j].to_string()).unwrap_or_default();
                    report.push(vec![
                        spec.seed.to_string(),
                        format!("s{}", i + 1),
                        opt(m.rho[i][0]),
                        opt(m.rho[i][1]),
                        opt(m.rho[i][2]),
                        label,
                        String::new(),
                    ]);
                }
            }
            Err(e) => {
                let mut row = vec![spec.seed.to_string()];
                row.extend(std::iter::repeat_n(String::new(), 5));
                row.push(e.to_string());
                report.push(row);
            }
        }
    }
    (results, report)
}

// ---------------------------------------------------------------------------
// Presets

/// Feature dimensions tabulated by the variance preset (100 is `2K` for 50 samples).
pub const VARIANCE_K: [usize; 6] = [1, 2, 3, 4, 5, 100];
pub const BROYDEN_BETAS: [f64; 3] = [0.1, 0.5, 1.0];
pub const NOISE_SIGMA: f64 = 0.01;
/// Runs per seeded preset: seeds `seed, seed + 1, ...`.
pub const PRESET_RUNS: u64 = 3;

fn reseeded(base: &Scenario, seed: u64, name: String) -> Scenario {
    Scenario { seed, name, ..base.clone() }
}

/// Runs a named study and writes its report, summaries and run traces into `out`.
///
/// `base` replaces the built-in scenario of the servo presets (noise, broyden,
/// unreachable); the variance and correlation presets take no scenario.
pub fn run_preset(preset: Preset, seed: u64, base: Option<&Scenario>, out: &Path) -> Result<StudyReport> {
    use crate::presets;
    if base.is_some() && matches!(preset, Preset::Variance | Preset::Correlation) {
        return Err(Error::InvalidParameter(format!("the {} preset does not take a scenario", preset.name())));
    }
    let seeds = seed..seed.wrapping_add(PRESET_RUNS);
    let report = match preset {
        Preset::Variance => {
            let mut trials = presets::small_motion_trials(seed);
            trials.extend(presets::large_motion_trials(seed));
            study_explained_variance(&trials, &VARIANCE_K).1
        }
        Preset::Correlation => {
            let specs: Vec<_> = seeds.map(presets::correlation_spec).collect();
            study_rigid_correlation(&specs).1
        }
        Preset::Broyden => {
            let scenario = match base {
                Some(b) => reseeded(b, seed, b.name.clone()),
                None => presets::reachable_cable(seed),
            };
            study_estimator_comparison(&scenario, &BROYDEN_BETAS, GroundTruth::default())?.1
        }
        Preset::Noise | Preset::Unreachable => {
            let scenarios: Vec<Scenario> = match (preset, base) {
                (Preset::Noise, None) => seeds
                    .flat_map(|s| [presets::reachable_cable(s), presets::noisy_cable(s, NOISE_SIGMA)])
                    .collect(),
                (Preset::Noise, Some(b)) => seeds
                    .flat_map(|s| {
                        let clean = Scenario { noise_sigma: None, ..reseeded(b, s, format!("{}_clean_s{s}", b.name)) };
                        let noisy = Scenario { noise_sigma: Some(NOISE_SIGMA), ..reseeded(b, s, format!("{}_noisy_s{s}", b.name)) };
                        [clean, noisy]
                    })
                    .collect(),
                (_, None) => seeds.map(presets::unreachable_cable).collect(),
                (_, Some(b)) => seeds.map(|s| reseeded(b, s, format!("{}_s{s}", b.name))).collect(),
            };
            let (outcomes, report) = study_runs(preset.name(), &scenarios);
            for (sc, o) in scenarios.iter().zip(&outcomes) {
                if let Ok(o) = o {
                    crate::scenario::write_trace(out, sc, &o.trace)?;
                }
            }
            report
        }
    };
    report.write(out)?;
    if !report.summaries.is_empty() {
        crate::scenario::write_summary(out, &report.summaries)?;
    }
    Ok(report)
}
