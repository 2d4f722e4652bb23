//! Euler Shift and variants, Level Shift, Line Search Shift, Max Shift, and
//! Max Slope Shift over an analytic (or estimated) density.

use super::inner::{annulus_slope_argmax, ball_argmax, certify_local_max, direction_set, line_argmax};
use super::{ShiftConfig, StepModulation};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::point::norm;
use crate::trajectory::{Terminal, Trajectory};

fn check_start(model: &dyn Density, x0: &[f64], cfg: &ShiftConfig) -> Result<()> {
    cfg.validate()?;
    if x0.len() != model.dim() {
        return Err(Error::dim(model.dim(), x0.len()));
    }
    Ok(())
}

/// `x(k+1) = x(k) + rho grad f(x(k))`.
pub fn euler_shift(model: &dyn Density, x0: &[f64], cfg: &ShiftConfig) -> Result<Trajectory> {
    let mut cfg = cfg.clone();
    cfg.phi = StepModulation::Constant;
    euler_shift_variant(model, x0, &cfg)
}

/// `x(k+1) = x(k) + rho phi(f(x(k))) grad f(x(k))` with a nonincreasing
/// positive `phi`. `phi = 1` reproduces `euler_shift` bit for bit.
pub fn euler_shift_variant(model: &dyn Density, x0: &[f64], cfg: &ShiftConfig) -> Result<Trajectory> {
    check_start(model, x0, cfg)?;
    let rho = cfg.neighborhood;
    let d = model.dim();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; d];
    let mut f = model.value_and_gradient_into(&x, &mut g);
    if let (Some(k2), StepModulation::InverseDensity) = (cfg.kappa2, cfg.phi) {
        if f > 0.0 && 0.5 * k2 * rho / f > 1.0 {
            log::warn!("euler variant: (kappa2/2) rho phi(f(x0)) > 1; hill-climbing not guaranteed");
        }
    }
    let mut traj = Trajectory::start(x.clone(), f);
    for _ in 0..cfg.stop.max_iters {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "euler shift gradient" });
        }
        let scale = match cfg.phi {
            StepModulation::Constant => rho,
            StepModulation::InverseDensity => {
                if f <= 0.0 {
                    return Err(Error::StepUndefined(
                        "phi(a) = 1/a undefined at zero density".into(),
                    ));
                }
                rho / f
            }
        };
        let disp = scale * norm(&g);
        if disp < cfg.stop.displacement_tol {
            traj.terminal = Terminal::NearCritical;
            return Ok(traj);
        }
        let grad_prev = g.clone();
        for i in 0..d {
            x[i] += scale * g[i];
        }
        f = model.value_and_gradient_into(&x, &mut g);
        traj.push(x.clone(), f, &grad_prev);
    }
    traj.terminal = Terminal::MaxIterations;
    Ok(traj)
}

/// `x(k+1) = x(k) + rho grad f / ||grad f||^2`: each valid step raises the
/// density by about `rho`. Terminates `Stalled` when the gradient guard
/// `nu_min` trips, which is the expected exit near modes.
pub fn level_shift(model: &dyn Density, x0: &[f64], cfg: &ShiftConfig) -> Result<Trajectory> {
    check_start(model, x0, cfg)?;
    let rho = cfg.neighborhood;
    let d = model.dim();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; d];
    let mut f = model.value_and_gradient_into(&x, &mut g);
    let mut traj = Trajectory::start(x.clone(), f);
    for _ in 0..cfg.stop.max_iters {
        let gn = norm(&g);
        if !gn.is_finite() {
            return Err(Error::NonFinite { context: "level shift gradient" });
        }
        if gn <= cfg.level_guard {
            traj.terminal = Terminal::Stalled;
            return Ok(traj);
        }
        let grad_prev = g.clone();
        let scale = rho / (gn * gn);
        for i in 0..d {
            x[i] += scale * g[i];
        }
        f = model.value_and_gradient_into(&x, &mut g);
        traj.push(x.clone(), f, &grad_prev);
    }
    traj.terminal = Terminal::MaxIterations;
    Ok(traj)
}

/// `x(k+1) = x(k) + rho_k grad f(x(k))` with `rho_k` maximizing the density
/// along the gradient ray over `[0, rho]`; monotone by construction.
pub fn line_search_shift(model: &dyn Density, x0: &[f64], cfg: &ShiftConfig) -> Result<Trajectory> {
    check_start(model, x0, cfg)?;
    let rho = cfg.neighborhood;
    if let Some(k2) = cfg.kappa2 {
        if k2 * rho > 0.5 {
            log::warn!("line search: kappa2 rho > 1/2; the [rho/2, rho] step law may not hold");
        }
    }
    let d = model.dim();
    let tol_ls = 1e-10 * rho;
    let mut x = x0.to_vec();
    let mut g = vec![0.0; d];
    let mut f = model.value_and_gradient_into(&x, &mut g);
    let mut traj = Trajectory::start(x.clone(), f);
    let mut ray = vec![0.0; d];
    for _ in 0..cfg.stop.max_iters {
        let gn = norm(&g);
        if !gn.is_finite() || !f.is_finite() {
            return Err(Error::NonFinite { context: "line search evaluation" });
        }
        if gn == 0.0 {
            traj.terminal = Terminal::NearCritical;
            return Ok(traj);
        }
        let mut line = |r: f64| {
            for i in 0..d {
                ray[i] = x[i] + r * g[i];
            }
            model.value(&ray)
        };
        let (r_star, f_star) = line_argmax(&mut line, rho, f, tol_ls);
        if f_star - f <= cfg.stop.f_improve_tol || r_star == 0.0 {
            traj.terminal = Terminal::NearCritical;
            return Ok(traj);
        }
        if r_star * gn < cfg.stop.displacement_tol {
            traj.terminal = Terminal::NearCritical;
            return Ok(traj);
        }
        let grad_prev = g.clone();
        for i in 0..d {
            x[i] += r_star * g[i];
        }
        f = model.value_and_gradient_into(&x, &mut g);
        traj.push(x.clone(), f, &grad_prev);
    }
    traj.terminal = Terminal::MaxIterations;
    Ok(traj)
}

/// `x(k+1) in argmax f` over the closed epsilon-ball; stops at the first
/// step with no strict improvement.
pub fn max_shift(model: &dyn Density, x0: &[f64], cfg: &ShiftConfig) -> Result<Trajectory> {
    check_start(model, x0, cfg)?;
    let eps = cfg.neighborhood;
    let d = model.dim();
    let dirs = direction_set(d);
    let mut x = x0.to_vec();
    let mut g = vec![0.0; d];
    let mut f = model.value_and_gradient_into(&x, &mut g);
    let mut traj = Trajectory::start(x.clone(), f);
    for _ in 0..cfg.stop.max_iters {
        let best = ball_argmax(model, &x, eps, f, &g, &dirs, &cfg.inner);
        if best.value - f <= cfg.stop.f_improve_tol {
            let gn = norm(&g);
            if gn > cfg.inner.stationary_grad_tol {
                return Err(Error::SolverFailure(format!(
                    "no improving point in the {eps}-ball although the gradient norm is {gn:.3e}"
                )));
            }
            traj.terminal = Terminal::NearCritical;
            return Ok(traj);
        }
        let grad_prev = g.clone();
        x = best.point;
        f = model.value_and_gradient_into(&x, &mut g);
        traj.push(x.clone(), f, &grad_prev);
    }
    traj.terminal = Terminal::MaxIterations;
    Ok(traj)
}

/// Regularized Max Slope Shift: jump to a certified local maximum strictly
/// inside the open ball when one exists, otherwise maximize the difference
/// quotient over the annulus `[c eps, eps]`. All non-terminal steps have
/// length in `[c eps, eps]`.
pub fn max_slope_shift(model: &dyn Density, x0: &[f64], cfg: &ShiftConfig) -> Result<Trajectory> {
    check_start(model, x0, cfg)?;
    let eps = cfg.neighborhood;
    let c_eps = cfg.slope_fraction * eps;
    let d = model.dim();
    let dirs = direction_set(d);
    let mut x = x0.to_vec();
    let mut g = vec![0.0; d];
    let mut f = model.value_and_gradient_into(&x, &mut g);
    let mut traj = Trajectory::start(x.clone(), f);
    for _ in 0..cfg.stop.max_iters {
        // Local maxima strictly inside the open ball take precedence.
        let ball = ball_argmax(model, &x, eps, f, &g, &dirs, &cfg.inner);
        if ball.interior {
            if let Some(z) = certify_local_max(model, &ball.point, &x, eps, &cfg.inner) {
                let fz = model.value(&z);
                if fz - f <= cfg.stop.f_improve_tol {
                    // Already at (or numerically indistinguishable from)
                    // that maximum.
                    traj.terminal = Terminal::NearCritical;
                    return Ok(traj);
                }
                let grad_prev = g.clone();
                x = z;
                f = model.value_and_gradient_into(&x, &mut g);
                traj.push(x.clone(), f, &grad_prev);
                continue;
            }
        }
        let best = annulus_slope_argmax(model, &x, eps, c_eps, f, &g, &dirs, &cfg.inner);
        if best.slope <= 0.0 || best.value - f <= cfg.stop.f_improve_tol {
            let gn = norm(&g);
            if c_eps > 0.0 && gn > cfg.inner.stationary_grad_tol {
                return Err(Error::SolverFailure(format!(
                    "no improving annulus point although the gradient norm is {gn:.3e}"
                )));
            }
            traj.terminal = Terminal::NearCritical;
            return Ok(traj);
        }
        let grad_prev = g.clone();
        x = best.point;
        f = model.value_and_gradient_into(&x, &mut g);
        traj.push(x.clone(), f, &grad_prev);
    }
    traj.terminal = Terminal::MaxIterations;
    Ok(traj)
}
