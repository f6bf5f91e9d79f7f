//! Receding-window shape servoing: local targets, interaction estimation and control.

mod config;
mod interaction;
mod run;
mod target;
mod window;

pub use config::{ControllerConfig, InitEnvelope, ServoConfig};
pub use interaction::{
    broyden_update, control_step, estimate_interaction, estimate_inverse_interaction, feature_increments,
    predict_one_step, pseudo_inverse, regularized_fit, InteractionForm, InteractionModel,
};
pub use run::{servo_loop, Plant, ServoObserver, ControlStep, Termination, Trace, TraceRow};
pub use target::{local_target, LocalTarget};
pub use window::SlidingWindow;
