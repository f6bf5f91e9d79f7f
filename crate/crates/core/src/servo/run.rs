use std::io::Write;

use rand::Rng;

use super::config::ServoConfig;
use super::interaction::{control_step, estimate_interaction, estimate_inverse_interaction, InteractionModel};
use super::target::{local_target, LocalTarget};
use super::window::SlidingWindow;
use crate::contour::{average_sample_error, format_scalar, Contour};
use crate::error::{Error, Result};
use crate::pca::{fit_basis, FeatureVector, ProjectionBasis};
use crate::pose::Pose2D;
use crate::scalar::Real;

/// Something the controller can move and look at.
pub trait Plant<T: Real> {
    /// Current contour as seen by the sensor.
    fn observe(&mut self) -> Result<Contour<T>>;
    /// Executes an end-effector increment.
    fn actuate(&mut self, delta: &Pose2D<T>) -> Result<()>;
}

impl<T: Real, P: Plant<T> + ?Sized> Plant<T> for Box<P> {
    fn observe(&mut self) -> Result<Contour<T>> {
        (**self).observe()
    }

    fn actuate(&mut self, delta: &Pose2D<T>) -> Result<()> {
        (**self).actuate(delta)
    }
}

/// Everything the controller computed at one control iteration.
#[derive(Debug)]
pub struct ControlStep<'a, T: Real> {
    pub iteration: usize,
    pub contour: &'a Contour<T>,
    pub window: &'a SlidingWindow<T>,
    pub basis: &'a ProjectionBasis<T>,
    pub features: &'a FeatureVector<T>,
    pub local_target: &'a LocalTarget<T>,
    pub model: &'a InteractionModel<T>,
    pub command: Pose2D<T>,
}

/// Hook into the loop, e.g. to evaluate alternative estimators on the same trajectory.
pub trait ServoObserver<T: Real> {
    fn on_control(&mut self, _step: &ControlStep<'_, T>) -> Result<()> {
        Ok(())
    }
}

impl<T: Real> ServoObserver<T> for () {}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow<T: Real> {
    pub iteration: usize,
    pub contour: Contour<T>,
    pub ase: T,
    /// Features in the basis fitted at this iteration (control iterations only).
    pub features: Option<FeatureVector<T>>,
    /// Motion executed after this observation.
    pub command: Option<Pose2D<T>>,
    pub eta: Option<usize>,
    pub psi: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `ASE_i` below threshold and `ASE_{i+1} >= ASE_i`.
    Converged,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T: Real> {
    pub rows: Vec<TraceRow<T>>,
    pub termination: Termination,
    /// Number of initialization motions at the start of the trace.
    pub init_motions: usize,
    pub feature_dim: usize,
}

impl<T: Real> Trace<T> {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    /// ASE at the stopping iteration `i`. A converged trace ends with the sample
    /// `i + 1` that confirmed the stop, which is skipped here.
    pub fn final_ase(&self) -> Option<T> {
        let skip = usize::from(self.converged());
        self.rows.len().checked_sub(1 + skip).map(|j| self.rows[j].ase)
    }

    pub fn ase_series(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.ase).collect()
    }

    /// Writes `iteration,ase,s1..sk,dx,dy,dtheta,eta,psi`; unavailable cells are empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["iteration".to_string(), "ase".to_string()];
        header.extend((1..=self.feature_dim).map(|j| format!("s{j}")));
        header.extend(["dx", "dy", "dtheta", "eta", "psi"].map(String::from));
        wtr.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.iteration.to_string(), format_scalar(row.ase)];
            match &row.features {
                Some(s) => rec.extend(s.iter().map(|v| format_scalar(*v))),
                None => rec.extend(std::iter::repeat_n(String::new(), self.feature_dim)),
            }
            match &row.command {
                Some(d) => rec.extend([d.x, d.y, d.theta].map(format_scalar)),
                None => rec.extend(std::iter::repeat_n(String::new(), 3)),
            }
            rec.push(row.eta.map(|e| e.to_string()).unwrap_or_default());
            rec.push(row.psi.map(format_scalar).unwrap_or_default());
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn plant_err(iteration: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::Plant { iteration, source: Box::new(e) }
}

/// Runs the receding-window servo loop until convergence or the iteration cap.
///
/// The first `M` actuations are uniform random motions inside `config.init`. Every
/// later iteration refits the PCA basis on the window, generates a local target,
/// re-estimates the interaction model in that basis and executes one control step.
/// The run stops at the first `i` with `ASE_i < threshold` and `ASE_{i+1} >= ASE_i`.
pub fn servo_loop<T, P, R, O>(
    plant: &mut P,
    target: &Contour<T>,
    config: &ServoConfig<T>,
    rng: &mut R,
    observer: &mut O,
) -> Result<Trace<T>>
where
    T: Real,
    P: Plant<T> + ?Sized,
    R: Rng + ?Sized,
    O: ServoObserver<T> + ?Sized,
{
    config.validate()?;
    let ctrl = &config.controller;
    let m = ctrl.window_size;
    let mut trace = Trace {
        rows: Vec::new(),
        termination: Termination::IterationCap,
        init_motions: m.min(config.max_iterations),
        feature_dim: ctrl.feature_dim,
    };
    if config.max_iterations == 0 {
        return Ok(trace);
    }

    let first = plant.observe().map_err(plant_err(0))?;
    let ase0 = average_sample_error(&first, target)?;
    let mut window = SlidingWindow::new(m, first.clone())?;
    trace.rows.push(TraceRow { iteration: 0, contour: first, ase: ase0, features: None, command: None, eta: None, psi: None });

    for iteration in 0..config.max_iterations {
        let current = window.latest().clone();
        let command = if iteration < m {
            let row = trace.rows.last_mut().expect("trace has the current row");
            let t = config.init.translation;
            let a = config.init.rotation;
            let sample = |rng: &mut R, bound: T| -> T {
                if bound == T::zero() {
                    T::zero()
                } else {
                    T::lit(rng.random_range(-1.0..=1.0)) * bound
                }
            };
            let delta = Pose2D::new(sample(rng, t), sample(rng, t), sample(rng, a));
            row.command = Some(delta);
            delta
        } else {
            let basis = fit_basis(&window.shape_window(), ctrl.feature_dim)?;
            let features = basis.project(&current)?;
            let lt = local_target(&basis, &current, target, ctrl.epsilon_psi, ctrl.eta_max)?;
            let model = if ctrl.use_inverse_form {
                estimate_inverse_interaction(&window, &basis, ctrl.lambda)?
            } else {
                estimate_interaction(&window, &basis, ctrl.lambda)?
            };
            let mut delta = control_step(&model, &features, &lt.features, ctrl.alpha)?;
            if ctrl.normalize_command {
                let norm = delta.to_vector().norm();
                if norm > T::zero() {
                    delta = Pose2D::from_vector(&(delta.to_vector() * (ctrl.alpha / norm)));
                }
            }
            observer.on_control(&ControlStep {
                iteration,
                contour: &current,
                window: &window,
                basis: &basis,
                features: &features,
                local_target: &lt,
                model: &model,
                command: delta,
            })?;
            let row = trace.rows.last_mut().expect("trace has the current row");
            row.features = Some(features);
            row.command = Some(delta);
            row.eta = Some(lt.eta);
            row.psi = Some(lt.psi);
            delta
        };

        plant.actuate(&command).map_err(plant_err(iteration))?;
        let next = plant.observe().map_err(plant_err(iteration + 1))?;
        let ase = average_sample_error(&next, target)?;
        let previous_ase = trace.rows.last().expect("trace has the current row").ase;
        window.push_sample(command, next.clone())?;
        trace.rows.push(TraceRow {
            iteration: iteration + 1,
            contour: next,
            ase,
            features: None,
            command: None,
            eta: None,
            psi: None,
        });
        if previous_ase < config.termination_ase && ase >= previous_ase {
            trace.termination = Termination::Converged;
            break;
        }
    }
    Ok(trace)
}
