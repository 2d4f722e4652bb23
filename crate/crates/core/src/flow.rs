//! The ground-truth gradient-flow oracle: adaptive embedded Runge-Kutta
//! integration of `dx/dt = grad f(x)` (or the unit-speed field), basin
//! assignment by endpoint snapping, and Hausdorff distance between
//! trajectories seen as polylines.

use crate::density::{max_eigenvalue, spectral_norm, Density, ModeList, SmoothnessBounds};
use crate::error::{Error, Result};
use crate::point::{dist, norm, Point};
use crate::trajectory::{Terminal, Trajectory};

#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub initial_step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Gradient norm at which the flow is declared converged.
    pub grad_stop_tol: f64,
    /// Safety cap on total curve length.
    pub max_arc_length: f64,
    /// Radius for snapping the endpoint to a listed mode.
    pub mode_match_radius: f64,
    /// Integrate the unit-speed field N(x) instead of grad f.
    pub unit_speed: bool,
    pub max_steps: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            initial_step: 1e-2,
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            grad_stop_tol: 1e-9,
            max_arc_length: 1e3,
            mode_match_radius: 1e-3,
            unit_speed: false,
            max_steps: 200_000,
        }
    }
}

impl FlowConfig {
    /// Derive the stopping scales from estimated bounds and the mode list:
    /// relative gradient stop `1e-8 kappa1`, match radius `1e-3` of the mode
    /// separation, arc-length cap 50 domain diameters.
    pub fn for_model(bounds: &SmoothnessBounds, modes: &ModeList, diameter: f64) -> Self {
        let sep = if modes.min_separation.is_finite() {
            modes.min_separation
        } else {
            diameter.max(1.0)
        };
        FlowConfig {
            initial_step: 1e-3 * diameter.max(1.0),
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            grad_stop_tol: 1e-8 * bounds.kappa1,
            max_arc_length: 50.0 * diameter.max(1.0),
            mode_match_radius: 1e-3 * sep,
            unit_speed: false,
            max_steps: 200_000,
        }
    }
}

/// Where a start point's gradient flow terminates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasinAssignment {
    Mode(usize),
    /// Endpoint near a non-maximum critical point, or no listed mode within
    /// the match radius: a measure-zero start we refuse to tie-break.
    Unresolved,
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate the ascent flow from `x0` until the gradient falls below
/// `grad_stop_tol`, the arc-length cap is hit, or the step size underflows.
/// When `modes` is given, a converged endpoint within the match radius is
/// labeled `ConvergedToMode`.
pub fn integrate_flow(
    model: &dyn Density,
    x0: &[f64],
    modes: Option<&ModeList>,
    cfg: &FlowConfig,
) -> Result<Trajectory> {
    let d = model.dim();
    if x0.len() != d {
        return Err(Error::dim(d, x0.len()));
    }
    let field = |x: &[f64], out: &mut [f64]| -> Result<f64> {
        let f = model.value_and_gradient_into(x, out);
        if !f.is_finite() || out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "gradient flow field" });
        }
        let gn = norm(out);
        if cfg.unit_speed {
            if gn > 0.0 {
                for v in out.iter_mut() {
                    *v /= gn;
                }
            }
        }
        Ok(gn)
    };

    let mut x = x0.to_vec();
    let mut g = vec![0.0; d];
    let gn0 = field(&x, &mut g)?;
    let f0 = model.value(&x);
    let mut traj = Trajectory::start(x.clone(), f0);

    if gn0 <= cfg.grad_stop_tol {
        traj.terminal = Terminal::NearCritical;
        if let Some(ml) = modes {
            traj.snap_to_modes(ml, cfg.mode_match_radius);
        }
        return Ok(traj);
    }

    let mut h = cfg.initial_step;
    let mut arc = 0.0;
    let mut k = vec![vec![0.0; d]; 7];
    k[0].copy_from_slice(&g);
    let mut grad_at_x = model.gradient(&x);
    let mut last_gn = gn0;

    for _ in 0..cfg.max_steps {
        // Stage evaluations (k[0] already holds the field at x).
        let mut stage_fail = false;
        for s in 1..7 {
            let mut xs = x.clone();
            for j in 0..s {
                let a = A[s - 1][j];
                if a != 0.0 {
                    for i in 0..d {
                        xs[i] += h * a * k[j][i];
                    }
                }
            }
            let mut ks = vec![0.0; d];
            if field(&xs, &mut ks).is_err() {
                stage_fail = true;
                break;
            }
            k[s] = ks;
        }
        if stage_fail {
            h *= 0.5;
            if h < 1e-15 {
                traj.terminal = Terminal::Stalled;
                return Ok(traj);
            }
            continue;
        }

        // Candidate point and embedded error estimate.
        let mut x5 = x.clone();
        let mut err = 0.0_f64;
        for i in 0..d {
            let mut s5 = 0.0;
            let mut s4 = 0.0;
            for j in 0..7 {
                s5 += B5[j] * k[j][i];
                s4 += B4[j] * k[j][i];
            }
            x5[i] += h * s5;
            let scale = cfg.abs_tol + cfg.rel_tol * x[i].abs().max(x5[i].abs());
            let e = h * (s5 - s4) / scale;
            err += e * e;
        }
        err = (err / d as f64).sqrt();

        if err <= 1.0 {
            // Accept.
            arc += dist(&x5, &x);
            let f5 = model.value(&x5);
            traj.push(x5.clone(), f5, &grad_at_x);
            x = x5;
            let gn = field(&x, &mut g)?;
            last_gn = gn;
            k[0].copy_from_slice(&g);
            grad_at_x = model.gradient(&x);
            if gn <= cfg.grad_stop_tol {
                traj.terminal = Terminal::NearCritical;
                if let Some(ml) = modes {
                    traj.snap_to_modes(ml, cfg.mode_match_radius);
                }
                return Ok(traj);
            }
            if arc > cfg.max_arc_length {
                traj.terminal = Terminal::MaxIterations;
                return Ok(traj);
            }
        }

        // Step-size control, with an extra shrink near critical points
        // driven by the local Hessian scale.
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
        let lam = spectral_norm(&model.hessian(&x));
        if lam > 0.0 {
            h = h.min(0.1_f64.max(cfg.initial_step) / lam).max(1e-14);
            if cfg.unit_speed {
                // The unit-speed field flips direction across the critical
                // point; bound the step by the distance scale so the flow
                // creeps in instead of oscillating.
                h = h.min((0.5 * last_gn / lam).max(1e-12));
            }
        }
        if h < 1e-15 {
            traj.terminal = Terminal::Stalled;
            return Ok(traj);
        }
    }
    traj.terminal = Terminal::MaxIterations;
    Ok(traj)
}

/// Run the flow and snap the endpoint to a mode. Endpoints whose Hessian is
/// not negative definite are `Unresolved`, mirroring the measure-zero role
/// of non-maximum basins.
pub fn assign_basin(
    model: &dyn Density,
    x0: &[f64],
    modes: &ModeList,
    cfg: &FlowConfig,
) -> Result<BasinAssignment> {
    if modes.is_empty() {
        return Err(Error::param("modes", "mode list is empty"));
    }
    let traj = integrate_flow(model, x0, Some(modes), cfg)?;
    Ok(classify_endpoint(model, &traj, modes, cfg))
}

/// Classification used by `assign_basin`, exposed so callers holding a
/// trajectory can reuse it without re-integrating.
pub fn classify_endpoint(
    model: &dyn Density,
    traj: &Trajectory,
    modes: &ModeList,
    cfg: &FlowConfig,
) -> BasinAssignment {
    match traj.terminal {
        Terminal::ConvergedToMode(i) => BasinAssignment::Mode(i),
        Terminal::NearCritical => {
            let end = traj.endpoint();
            if max_eigenvalue(&model.hessian(end)) >= 0.0 {
                return BasinAssignment::Unresolved;
            }
            match modes.match_point(end, cfg.mode_match_radius) {
                Some(i) => BasinAssignment::Mode(i),
                None => BasinAssignment::Unresolved,
            }
        }
        _ => BasinAssignment::Unresolved,
    }
}

fn point_segment_dist(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let d = p.len();
    let mut ab2 = 0.0;
    let mut ap_ab = 0.0;
    for i in 0..d {
        let e = b[i] - a[i];
        ab2 += e * e;
        ap_ab += (p[i] - a[i]) * e;
    }
    if ab2 == 0.0 {
        return dist(p, a);
    }
    let t = (ap_ab / ab2).clamp(0.0, 1.0);
    let mut s = 0.0;
    for i in 0..d {
        let proj = a[i] + t * (b[i] - a[i]);
        s += (p[i] - proj) * (p[i] - proj);
    }
    s.sqrt()
}

fn point_polyline_dist(p: &[f64], poly: &[Point]) -> f64 {
    if poly.len() == 1 {
        return dist(p, &poly[0]);
    }
    poly.windows(2)
        .map(|w| point_segment_dist(p, &w[0], &w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Symmetric Hausdorff distance between two trajectories, with vertices
/// measured against the opposite polyline's segments.
pub fn trajectory_hausdorff(ta: &Trajectory, tb: &Trajectory) -> Result<f64> {
    if ta.is_empty() || tb.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if ta.points[0].len() != tb.points[0].len() {
        return Err(Error::dim(ta.points[0].len(), tb.points[0].len()));
    }
    let d_ab = ta
        .points
        .iter()
        .map(|p| point_polyline_dist(p, &tb.points))
        .fold(0.0, f64::max);
    let d_ba = tb
        .points
        .iter()
        .map(|p| point_polyline_dist(p, &ta.points))
        .fold(0.0, f64::max);
    Ok(d_ab.max(d_ba))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::standard_normal_1d;
    use crate::density::{
        default_mode_seeds, estimate_bounds, find_modes, GaussianMixture, ModeFindConfig,
    };
    use crate::grid::GridSpec;
    use nalgebra::DMatrix;

    fn bimodal_1d() -> GaussianMixture {
        GaussianMixture::isotropic(vec![(0.5, vec![-2.0], 1.0), (0.5, vec![2.0], 1.0)]).unwrap()
    }

    fn mixture_2d() -> GaussianMixture {
        let c1 = DMatrix::from_row_slice(2, 2, &[0.8, 0.15, 0.15, 0.6]);
        let c2 = DMatrix::from_row_slice(2, 2, &[0.7, -0.1, -0.1, 0.7]);
        let c3 = DMatrix::from_row_slice(2, 2, &[0.6, 0.1, 0.1, 0.9]);
        GaussianMixture::new(vec![
            (0.35, vec![-3.0, -1.5], c1),
            (0.35, vec![3.0, -1.5], c2),
            (0.30, vec![0.0, 3.5], c3),
        ])
        .unwrap()
    }

    fn setup(model: &GaussianMixture) -> (crate::density::ModeList, FlowConfig) {
        let modes = find_modes(model, &default_mode_seeds(model), &ModeFindConfig::default()).unwrap();
        let (lo, hi) = model.suggested_box(5.0);
        let grid = GridSpec::new(lo.clone(), hi.clone(), vec![61; model.dim()]).unwrap();
        let bounds = estimate_bounds(model, &grid).unwrap();
        let diam = dist(&lo, &hi);
        let cfg = FlowConfig::for_model(&bounds, &modes, diam);
        (modes, cfg)
    }

    #[test]
    fn flow_from_a_mode_is_a_fixed_point() {
        let m = standard_normal_1d();
        let (modes, cfg) = setup(&m);
        let t = integrate_flow(&m, &modes.modes[0], Some(&modes), &cfg).unwrap();
        assert_eq!(t.n_steps(), 0);
        assert!(matches!(t.terminal, Terminal::ConvergedToMode(0)));
    }

    #[test]
    fn standard_normal_flow_reaches_origin_monotonically() {
        let m = standard_normal_1d();
        let (modes, cfg) = setup(&m);
        let t = integrate_flow(&m, &[-3.0], Some(&modes), &cfg).unwrap();
        assert!(t.endpoint()[0].abs() < 1e-6, "endpoint {:?}", t.endpoint());
        for w in t.f_values.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "density decreased along the flow");
        }
        assert!(matches!(t.terminal, Terminal::ConvergedToMode(0)));
        // Endpoint criticality.
        assert!(norm(&m.gradient(t.endpoint())) <= cfg.grad_stop_tol);
    }

    #[test]
    fn halving_tolerance_barely_moves_endpoints() {
        let m = mixture_2d();
        let (modes, cfg) = setup(&m);
        let mut tighter = cfg.clone();
        tighter.abs_tol *= 0.5;
        tighter.rel_tol *= 0.5;
        let mut rng_state = 777u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 33) as f64 / (1u64 << 31) as f64
        };
        for _ in 0..50 {
            let x0 = vec![next() * 10.0 - 5.0, next() * 10.0 - 4.0];
            let ta = integrate_flow(&m, &x0, Some(&modes), &cfg).unwrap();
            let tb = integrate_flow(&m, &x0, Some(&modes), &tighter).unwrap();
            if matches!(ta.terminal, Terminal::ConvergedToMode(_)) {
                assert!(
                    dist(ta.endpoint(), tb.endpoint()) < 1e-8,
                    "endpoints moved: {:?} vs {:?}",
                    ta.endpoint(),
                    tb.endpoint()
                );
            }
        }
    }

    #[test]
    fn basins_split_at_the_symmetric_saddle() {
        let m = bimodal_1d();
        let (modes, cfg) = setup(&m);
        assert_eq!(modes.len(), 2);
        let left = assign_basin(&m, &[-0.4], &modes, &cfg).unwrap();
        let right = assign_basin(&m, &[0.4], &modes, &cfg).unwrap();
        let li = match left {
            BasinAssignment::Mode(i) => i,
            _ => panic!("left start unresolved"),
        };
        let ri = match right {
            BasinAssignment::Mode(i) => i,
            _ => panic!("right start unresolved"),
        };
        assert_ne!(li, ri);
        assert!(modes.modes[li][0] < 0.0);
        assert!(modes.modes[ri][0] > 0.0);
        // Exactly at the saddle: measure-zero start stays unresolved.
        assert_eq!(
            assign_basin(&m, &[0.0], &modes, &cfg).unwrap(),
            BasinAssignment::Unresolved
        );
    }

    #[test]
    fn assignment_invariant_along_the_flow() {
        let m = mixture_2d();
        let (modes, cfg) = setup(&m);
        let x0 = vec![-1.0, 0.8];
        let t = integrate_flow(&m, &x0, Some(&modes), &cfg).unwrap();
        let mid = t.points[t.len() / 2].clone();
        assert_eq!(
            assign_basin(&m, &x0, &modes, &cfg).unwrap(),
            assign_basin(&m, &mid, &modes, &cfg).unwrap()
        );
    }

    #[test]
    fn hausdorff_identity_and_translation() {
        let m = mixture_2d();
        let (modes, cfg) = setup(&m);
        let t = integrate_flow(&m, &[-1.0, 0.0], Some(&modes), &cfg).unwrap();
        assert_eq!(trajectory_hausdorff(&t, &t).unwrap(), 0.0);

        let mut shifted = t.clone();
        for p in &mut shifted.points {
            p[0] += 0.3;
            p[1] -= 0.4;
        }
        let h = trajectory_hausdorff(&t, &shifted).unwrap();
        assert!((h - 0.5).abs() < 1e-9, "translated Hausdorff {h}");
    }

    #[test]
    fn nearby_starts_have_close_trajectories() {
        let m = mixture_2d();
        let (modes, cfg) = setup(&m);
        let a = integrate_flow(&m, &[-1.1, 0.6], Some(&modes), &cfg).unwrap();
        let b = integrate_flow(&m, &[-1.1 + 1e-3, 0.6], Some(&modes), &cfg).unwrap();
        let h = trajectory_hausdorff(&a, &b).unwrap();
        assert!(h <= 1e-2, "continuity violated: {h}");
    }

    #[test]
    fn unit_speed_flow_reaches_the_same_mode() {
        let m = bimodal_1d();
        let (modes, mut cfg) = setup(&m);
        cfg.unit_speed = true;
        let t = integrate_flow(&m, &[-3.5], Some(&modes), &cfg).unwrap();
        assert!(matches!(t.terminal, Terminal::ConvergedToMode(_)));
        assert!(dist(t.endpoint(), &modes.modes[0]) < 1e-3 || dist(t.endpoint(), &modes.modes[1]) < 1e-3);
    }

    #[test]
    fn empty_trajectory_errors() {
        let t = Trajectory::start(vec![0.0], 0.1);
        let empty = Trajectory {
            points: vec![],
            f_values: vec![],
            step_lengths: vec![],
            align_cosines: vec![],
            terminal: Terminal::Stalled,
        };
        assert!(trajectory_hausdorff(&t, &empty).is_err());
    }
}
