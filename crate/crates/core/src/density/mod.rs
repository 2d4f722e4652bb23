//! Evaluatable densities: the [`Density`] trait, analytic Gaussian mixtures,
//! mode enumeration, and grid estimates of global smoothness bounds.

mod bounds;
mod gaussian;
mod modes;

pub use bounds::{estimate_bounds, SmoothnessBounds};
pub use gaussian::{standard_normal_1d, ComponentSpec, GaussianMixture, MixtureSpec};
pub use modes::{default_mode_seeds, find_modes, ModeFindConfig, ModeList};

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// A twice-differentiable density on R^d.
///
/// Implementations must be pure and safe to share across threads; all
/// algorithms in this crate query densities concurrently.
pub trait Density: Sync {
    fn dim(&self) -> usize;

    /// Density value at `x` (nonnegative).
    fn value(&self, x: &[f64]) -> f64;

    /// Gradient written into `out` (length `dim`).
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);

    /// Hessian matrix at `x`.
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(x, &mut g);
        g
    }

    /// Value and gradient together; implementations override this when the
    /// two share work.
    fn value_and_gradient_into(&self, x: &[f64], out: &mut [f64]) -> f64 {
        self.gradient_into(x, out);
        self.value(x)
    }
}

fn check_dim(model: &dyn Density, x: &[f64]) -> Result<()> {
    if x.len() != model.dim() {
        Err(Error::dim(model.dim(), x.len()))
    } else {
        Ok(())
    }
}

/// Density value with input validation.
pub fn eval_f(model: &dyn Density, x: &[f64]) -> Result<f64> {
    check_dim(model, x)?;
    Ok(model.value(x))
}

/// Gradient with input validation.
pub fn eval_grad(model: &dyn Density, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(model, x)?;
    Ok(model.gradient(x))
}

/// Hessian with input validation.
pub fn eval_hess(model: &dyn Density, x: &[f64]) -> Result<DMatrix<f64>> {
    check_dim(model, x)?;
    Ok(model.hessian(x))
}

/// Unit vector in the gradient direction. Fails with
/// [`Error::NearCritical`] when the gradient norm is at or below `grad_tol`,
/// signaling the caller to stop.
pub fn eval_normalized_grad(model: &dyn Density, x: &[f64], grad_tol: f64) -> Result<Vec<f64>> {
    check_dim(model, x)?;
    let mut g = model.gradient(x);
    let n = crate::point::norm(&g);
    if n <= grad_tol {
        return Err(Error::NearCritical { norm: n, tol: grad_tol });
    }
    for v in &mut g {
        *v /= n;
    }
    Ok(g)
}

/// Spectral norm of a symmetric matrix (largest eigenvalue magnitude).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0, |acc, &l| acc.max(l.abs()))
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::NEG_INFINITY, |acc, &l| acc.max(l))
}
