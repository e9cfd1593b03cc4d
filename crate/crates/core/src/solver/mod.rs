//! Time stepping: a linearly-implicit scheme treating `2 γ_xxxx / |γ_x|^4`
//! implicitly and everything else explicitly, an explicit Runge–Kutta
//! alternative, and the run driver.

mod assemble;
mod explicit;
mod run;
mod step;

use std::sync::Once;

use serde::{Deserialize, Serialize};

pub use assemble::{assemble, LinearStep, RowCounts, RowKind};
pub use explicit::{explicit_stability_limit, step_explicit, step_explicit_unchecked};
pub use run::{run, FailureKind, RunOptions, RunOutput, Termination};
pub use step::{project_boundary, step, StepOutcome};

use crate::model::Tolerances;
use crate::monitors::Thresholds;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    Implicit,
    ExplicitRk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub max_halvings: usize,
    pub tolerances: Tolerances,
    pub thresholds: Thresholds,
    /// Re-freezings of the third-order rows per step.
    pub max_refreeze: usize,
}

impl StepConfig {
    pub fn new(dt: f64, tolerances: Tolerances, thresholds: Thresholds) -> Self {
        StepConfig {
            dt,
            scheme: Scheme::Implicit,
            max_halvings: 8,
            tolerances,
            thresholds,
            max_refreeze: 8,
        }
    }
}

/// Pins the dense kernels inside the sparse LU to one thread, which keeps
/// every run bit-reproducible.
pub(crate) fn init_linear_algebra() {
    static INIT: Once = Once::new();
    INIT.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}
