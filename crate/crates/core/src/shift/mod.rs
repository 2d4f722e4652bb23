//! Continuous-space hill-climbing algorithms, each emitting a
//! [`Trajectory`](crate::trajectory::Trajectory) with per-step diagnostics.

mod continuous;
mod diagnostics;
mod inner;
mod meanshift;

pub use continuous::{
    euler_shift, euler_shift_variant, level_shift, line_search_shift, max_shift, max_slope_shift,
};
pub use diagnostics::{step_diagnostics, AlgorithmKind, StepReport};
pub use meanshift::mean_shift;

use crate::density::SmoothnessBounds;

/// Termination thresholds shared by the algorithms.
#[derive(Debug, Clone, Copy)]
pub struct StopRule {
    /// Stop argmax-style algorithms once the best in-neighborhood point
    /// improves the density by no more than this.
    pub f_improve_tol: f64,
    /// Stop Euler-style algorithms (and Mean Shift) once the displacement
    /// falls below this.
    pub displacement_tol: f64,
    pub max_iters: usize,
}

/// Step modulation for the Euler Shift variants: `x += rho phi(f(x)) grad f(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepModulation {
    /// `phi = 1`: plain Euler Shift.
    Constant,
    /// `phi(a) = 1/a`: the log-density flow.
    InverseDensity,
}

/// Inner ball/annulus maximization settings.
#[derive(Debug, Clone, Copy)]
pub struct InnerSolverConfig {
    /// Gradient norm treated as critical when certifying interior maxima.
    pub grad_tol: f64,
    /// Gradient norm above which "no improving point in the ball" is a
    /// solver failure rather than legitimate convergence.
    pub stationary_grad_tol: f64,
    /// Projected-gradient refinement iterations.
    pub refine_steps: usize,
    /// Step-halving backtracks per refinement iteration.
    pub max_backtracks: usize,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        InnerSolverConfig {
            grad_tol: 1e-10,
            stationary_grad_tol: 1e-4,
            refine_steps: 20,
            max_backtracks: 30,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShiftConfig {
    /// Neighborhood size epsilon (argmax algorithms) or step size rho
    /// (Euler-family algorithms).
    pub neighborhood: f64,
    /// Annulus fraction c in (0,1) for Max Slope Shift. A value of 0 selects
    /// the unregularized variant, exposed for tests only: the paper's own
    /// remark shows it converges to inflection points instead of modes.
    pub slope_fraction: f64,
    pub phi: StepModulation,
    /// Gradient-norm guard nu_min for Level Shift.
    pub level_guard: f64,
    pub stop: StopRule,
    pub inner: InnerSolverConfig,
    /// Estimated sup Hessian norm, used for step-size sanity warnings and
    /// validity conditions when available.
    pub kappa2: Option<f64>,
}

impl ShiftConfig {
    pub fn new(neighborhood: f64) -> Self {
        ShiftConfig {
            neighborhood,
            slope_fraction: 0.5,
            phi: StepModulation::Constant,
            level_guard: 0.05,
            stop: StopRule {
                f_improve_tol: 0.0,
                displacement_tol: 1e-10 * neighborhood,
                max_iters: 100_000,
            },
            inner: InnerSolverConfig::default(),
            kappa2: None,
        }
    }

    /// Defaults tied to the model scale: improvement floor `1e-14 kappa0`,
    /// displacement floor `1e-10` neighborhoods, and a warning when the
    /// Euler step exceeds the `2/kappa2` hill-climbing range.
    pub fn for_model(bounds: &SmoothnessBounds, neighborhood: f64) -> Self {
        let mut cfg = ShiftConfig::new(neighborhood);
        cfg.stop.f_improve_tol = 1e-14 * bounds.kappa0;
        cfg.kappa2 = Some(bounds.kappa2);
        if bounds.kappa2 > 0.0 && neighborhood >= 2.0 / bounds.kappa2 {
            log::warn!(
                "step size {neighborhood} is at or above 2/kappa2 = {}; hill-climbing not guaranteed",
                2.0 / bounds.kappa2
            );
        }
        cfg
    }

    pub fn with_slope_fraction(mut self, c: f64) -> Self {
        self.slope_fraction = c;
        self
    }

    pub fn with_phi(mut self, phi: StepModulation) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_max_iters(mut self, n: usize) -> Self {
        self.stop.max_iters = n;
        self
    }

    pub fn with_displacement_tol(mut self, tol: f64) -> Self {
        self.stop.displacement_tol = tol;
        self
    }

    pub fn with_level_guard(mut self, nu: f64) -> Self {
        self.level_guard = nu;
        self
    }

    pub(crate) fn validate(&self) -> crate::error::Result<()> {
        if !(self.neighborhood > 0.0) || !self.neighborhood.is_finite() {
            return Err(crate::error::Error::param(
                "neighborhood",
                "must be positive and finite",
            ));
        }
        if !(0.0..1.0).contains(&self.slope_fraction) {
            return Err(crate::error::Error::param(
                "slope_fraction",
                "must lie in [0, 1); 0 is the unregularized test variant",
            ));
        }
        if self.stop.max_iters == 0 {
            return Err(crate::error::Error::param("max_iters", "must be at least 1"));
        }
        Ok(())
    }
}
