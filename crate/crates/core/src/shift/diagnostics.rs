//! Per-step property checks on a finished trajectory: monotone density,
//! step-length laws, and gradient-alignment bounds.

use super::ShiftConfig;
use crate::density::{Density, SmoothnessBounds};
use crate::point::norm;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmKind {
    Euler,
    EulerVariant,
    LevelShift,
    LineSearch,
    MaxShift,
    MaxSlopeShift,
    MeanShift,
    MedoidMaxShift,
    MedoidMaxSlopeShift,
    MedoidShift,
    QuickShift,
    Oracle,
}

impl AlgorithmKind {
    /// Shifts exactly aligned with the gradient at their start.
    fn exact_alignment(&self) -> bool {
        matches!(
            self,
            AlgorithmKind::Euler
                | AlgorithmKind::EulerVariant
                | AlgorithmKind::LevelShift
                | AlgorithmKind::LineSearch
                | AlgorithmKind::MeanShift
        )
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepReport {
    pub n_steps: usize,
    pub monotone_violations: usize,
    pub steplaw_violations: usize,
    pub angle_violations: usize,
    pub min_cosine: f64,
    pub min_step: f64,
    pub max_step: f64,
}

/// Evaluate the per-step properties of `traj`.
///
/// `model` supplies gradients for the angle bounds of the argmax-style
/// algorithms; pass the density the algorithm climbed. `bounds` supplies
/// kappa2 for the Max Shift angle bound `cos >= 1 - kappa2 eps / ||grad||`.
pub fn step_diagnostics(
    traj: &Trajectory,
    model: Option<&dyn Density>,
    kind: AlgorithmKind,
    cfg: &ShiftConfig,
    bounds: Option<&SmoothnessBounds>,
) -> StepReport {
    let mut rep = StepReport {
        n_steps: traj.n_steps(),
        min_cosine: f64::INFINITY,
        min_step: f64::INFINITY,
        max_step: 0.0,
        ..Default::default()
    };
    if traj.n_steps() == 0 {
        rep.min_cosine = f64::NAN;
        rep.min_step = f64::NAN;
        rep.max_step = f64::NAN;
        return rep;
    }

    let fmax = traj
        .f_values
        .iter()
        .fold(0.0_f64, |a, v| a.max(v.abs()))
        .max(1e-300);
    let f_slack = 1e-12 * fmax;
    for w in traj.f_values.windows(2) {
        if w[1] < w[0] - f_slack {
            rep.monotone_violations += 1;
        }
    }

    let eps = cfg.neighborhood;
    let n = traj.step_lengths.len();
    for (k, &s) in traj.step_lengths.iter().enumerate() {
        rep.min_step = rep.min_step.min(s);
        rep.max_step = rep.max_step.max(s);
        let last = k + 1 == n;
        match kind {
            AlgorithmKind::MaxShift => {
                // Exactly eps except possibly the very last shift.
                if !last && !(s >= eps - 1e-6 && s <= eps * (1.0 + 1e-9)) {
                    rep.steplaw_violations += 1;
                }
            }
            AlgorithmKind::MaxSlopeShift => {
                let c_eps = cfg.slope_fraction * eps;
                if !last && !(s >= c_eps - 1e-9 && s <= eps * (1.0 + 1e-9)) {
                    rep.steplaw_violations += 1;
                }
            }
            AlgorithmKind::LineSearch => {
                // step = rho_k ||grad||, rho_k in [rho/2, rho] while the
                // kappa2 rho <= 1/2 condition holds.
                let applies = bounds.map_or(false, |b| b.kappa2 * eps <= 0.5);
                if applies && !last {
                    if let Some(m) = model {
                        let gn = norm(&m.gradient(&traj.points[k]));
                        if gn > 0.0 {
                            let rho_k = s / gn;
                            if !(rho_k >= eps / 2.0 - 1e-9 && rho_k <= eps * (1.0 + 1e-9)) {
                                rep.steplaw_violations += 1;
                            }
                        }
                    }
                }
            }
            AlgorithmKind::MedoidMaxShift => {
                // Alternating law: no two consecutive non-final steps both
                // at or below eps / 2.
                if k + 2 < n + 1 && k >= 1 {
                    let prev = traj.step_lengths[k - 1];
                    if !last && prev <= eps / 2.0 && s <= eps / 2.0 {
                        rep.steplaw_violations += 1;
                    }
                }
            }
            _ => {}
        }

        let cos = traj.align_cosines[k];
        if cos.is_finite() {
            rep.min_cosine = rep.min_cosine.min(cos);
        }
        if kind.exact_alignment() {
            if cos.is_finite() && cos < 1.0 - 1e-12 {
                rep.angle_violations += 1;
            }
        } else if matches!(kind, AlgorithmKind::MaxShift | AlgorithmKind::MaxSlopeShift) && !last {
            if let (Some(m), Some(b)) = (model, bounds) {
                let gn = norm(&m.gradient(&traj.points[k]));
                if gn > 0.0 {
                    let bound = 1.0 - b.kappa2 * eps / gn;
                    if bound > -1.0 && cos.is_finite() && cos < bound - 1e-9 {
                        rep.angle_violations += 1;
                    }
                }
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::standard_normal_1d;
    use crate::density::estimate_bounds;
    use crate::grid::GridSpec;
    use crate::shift::{euler_shift, max_shift, max_slope_shift};

    fn cfg_and_bounds(step: f64) -> (ShiftConfig, SmoothnessBounds) {
        let m = standard_normal_1d();
        let grid = GridSpec::uniform(vec![-6.0], vec![6.0], 1201).unwrap();
        let b = estimate_bounds(&m, &grid).unwrap();
        (ShiftConfig::for_model(&b, step), b)
    }

    #[test]
    fn euler_alignment_is_exact() {
        let m = standard_normal_1d();
        let (cfg, b) = cfg_and_bounds(0.2);
        let t = euler_shift(&m, &[-2.0], &cfg).unwrap();
        let rep = step_diagnostics(&t, Some(&m), AlgorithmKind::Euler, &cfg, Some(&b));
        assert_eq!(rep.angle_violations, 0);
        assert!(rep.min_cosine >= 1.0 - 1e-12);
    }

    #[test]
    fn max_shift_step_law_and_angle_bound_hold() {
        let m = standard_normal_1d();
        let (cfg, b) = cfg_and_bounds(0.25);
        let t = max_shift(&m, &[-2.4], &cfg).unwrap();
        let rep = step_diagnostics(&t, Some(&m), AlgorithmKind::MaxShift, &cfg, Some(&b));
        assert_eq!(rep.monotone_violations, 0);
        assert_eq!(rep.steplaw_violations, 0);
        assert_eq!(rep.angle_violations, 0);
    }

    #[test]
    fn slope_shift_steps_in_annulus_bounds() {
        let m = standard_normal_1d();
        let (cfg, b) = cfg_and_bounds(0.3);
        let t = max_slope_shift(&m, &[-2.2], &cfg).unwrap();
        let rep = step_diagnostics(&t, Some(&m), AlgorithmKind::MaxSlopeShift, &cfg, Some(&b));
        assert_eq!(rep.monotone_violations, 0);
        assert_eq!(rep.steplaw_violations, 0);
    }
}
