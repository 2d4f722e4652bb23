//! Inner solvers: deterministic ball maximization, annulus slope
//! maximization, interior-maximum certification, and the seeded
//! golden-section line search.
//!
//! Determinism is part of the contract: the direction set is fixed, all
//! ties break lexicographically, and no call touches global state.

use super::InnerSolverConfig;
use crate::density::{max_eigenvalue, Density};
use crate::point::{dist, lex_cmp, norm, Point};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// `+-e_i` plus a fixed low-discrepancy set of `4d` unit directions.
pub fn direction_set(dim: usize) -> Vec<Point> {
    let mut dirs = Vec::with_capacity(6 * dim);
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        dirs.push(e.clone());
        e[i] = -1.0;
        dirs.push(e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_D1CE);
    for _ in 0..(4 * dim) {
        loop {
            let v: Point = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let n = norm(&v);
            if n > 1e-6 {
                dirs.push(v.iter().map(|x| x / n).collect());
                break;
            }
        }
    }
    dirs
}

/// Candidate ordering: higher density first, then lexicographically smaller
/// point ("ties are broken in an arbitrary but deterministic way").
fn better(f_new: f64, p_new: &[f64], f_best: f64, p_best: &[f64]) -> bool {
    match f_new.partial_cmp(&f_best) {
        Some(std::cmp::Ordering::Greater) => true,
        Some(std::cmp::Ordering::Equal) => lex_cmp(p_new, p_best) == std::cmp::Ordering::Less,
        _ => false,
    }
}

pub struct BallMax {
    pub point: Point,
    pub value: f64,
    /// Strictly inside the ball (with margin), i.e. not pinned to the sphere.
    pub interior: bool,
}

/// Approximate `argmax f` over the closed ball `B(center, eps)`:
/// sample the direction set and the gradient direction on the sphere, then
/// refine the best candidate by projected gradient ascent with backtracking.
/// Whenever the projection clips, the iterate lands exactly on the sphere.
pub fn ball_argmax(
    model: &dyn Density,
    center: &[f64],
    eps: f64,
    f_center: f64,
    grad_center: &[f64],
    dirs: &[Point],
    inner: &InnerSolverConfig,
) -> BallMax {
    let d = center.len();
    let mut best = center.to_vec();
    let mut fbest = f_center;

    let try_candidate = |p: Point, best: &mut Point, fbest: &mut f64| {
        let fp = model.value(&p);
        if better(fp, &p, *fbest, best) {
            *best = p;
            *fbest = fp;
        }
    };

    for u in dirs {
        let p: Point = (0..d).map(|i| center[i] + eps * u[i]).collect();
        try_candidate(p, &mut best, &mut fbest);
    }
    let gn = norm(grad_center);
    if gn > 0.0 {
        let p: Point = (0..d).map(|i| center[i] + eps * grad_center[i] / gn).collect();
        try_candidate(p, &mut best, &mut fbest);
    }

    // Projected-gradient polish of the best candidate.
    let mut y = best;
    let mut fy = fbest;
    let mut step = eps / 4.0;
    let mut g = vec![0.0; d];
    for _ in 0..inner.refine_steps {
        model.gradient_into(&y, &mut g);
        let gy = norm(&g);
        if gy <= 0.0 {
            break;
        }
        let mut s = step;
        let mut improved = false;
        for _ in 0..inner.max_backtracks {
            let mut cand: Point = (0..d).map(|i| y[i] + s * g[i] / gy).collect();
            let r = dist(&cand, center);
            if r > eps {
                for i in 0..d {
                    cand[i] = center[i] + eps * (cand[i] - center[i]) / r;
                }
            }
            let fc = model.value(&cand);
            if fc > fy {
                y = cand;
                fy = fc;
                step = (s * 2.0).min(eps / 2.0);
                improved = true;
                break;
            }
            s *= 0.5;
            if s < eps * 1e-13 {
                break;
            }
        }
        if !improved {
            break;
        }
    }

    let interior = dist(&y, center) < eps * (1.0 - 1e-9);
    BallMax { point: y, value: fy, interior }
}

/// Newton-certify a strict local maximum near `start`, staying inside the
/// open ball `B(center, eps)`. Succeeds only when the gradient drops below
/// `inner.grad_tol` and the Hessian is negative definite there.
pub fn certify_local_max(
    model: &dyn Density,
    start: &[f64],
    center: &[f64],
    eps: f64,
    inner: &InnerSolverConfig,
) -> Option<Point> {
    let d = start.len();
    let mut x = start.to_vec();
    let mut g = model.gradient(&x);
    let mut gn = norm(&g);
    for _ in 0..50 {
        if gn <= inner.grad_tol {
            break;
        }
        let h = model.hessian(&x);
        let rhs = nalgebra::DVector::from_iterator(d, g.iter().map(|v| -v));
        let p = h.lu().solve(&rhs)?;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand: Point = (0..d).map(|i| x[i] + scale * p[i]).collect();
            let cg = model.gradient(&cand);
            let cgn = norm(&cg);
            if cgn.is_finite() && cgn < gn {
                x = cand;
                g = cg;
                gn = cgn;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return None;
        }
        if dist(&x, center) >= eps {
            return None;
        }
    }
    if gn <= inner.grad_tol
        && dist(&x, center) < eps
        && max_eigenvalue(&model.hessian(&x)) < 0.0
    {
        Some(x)
    } else {
        None
    }
}

pub struct AnnulusMax {
    pub point: Point,
    pub value: f64,
    pub slope: f64,
}

/// Approximate argmax of the difference quotient
/// `(f(y) - f(center)) / ||y - center||` over the annulus
/// `c_eps <= ||y - center|| <= eps`. With `c_eps = 0` the inner radius is
/// only bounded away from zero by a floor, realizing the unregularized
/// variant.
pub fn annulus_slope_argmax(
    model: &dyn Density,
    center: &[f64],
    eps: f64,
    c_eps: f64,
    f_center: f64,
    grad_center: &[f64],
    dirs: &[Point],
    inner: &InnerSolverConfig,
) -> AnnulusMax {
    let d = center.len();
    let r_floor = if c_eps > 0.0 { c_eps } else { eps * 1e-12 };
    let slope_of = |p: &[f64], fp: f64| {
        let r = dist(p, center);
        if r > 0.0 {
            (fp - f_center) / r
        } else {
            f64::NEG_INFINITY
        }
    };

    let mut radii = vec![c_eps, (c_eps + eps) / 2.0, eps];
    radii.retain(|r| *r > 0.0);

    let mut best: Option<(Point, f64, f64)> = None;
    let mut consider = |p: Point| {
        let fp = model.value(&p);
        let q = slope_of(&p, fp);
        let replace = match &best {
            None => true,
            Some((bp, _, bq)) => {
                q > *bq || (q == *bq && lex_cmp(&p, bp) == std::cmp::Ordering::Less)
            }
        };
        if replace {
            best = Some((p, fp, q));
        }
    };

    for u in dirs {
        for &r in &radii {
            consider((0..d).map(|i| center[i] + r * u[i]).collect());
        }
    }
    let gn = norm(grad_center);
    if gn > 0.0 {
        for &r in &radii {
            consider((0..d).map(|i| center[i] + r * grad_center[i] / gn).collect());
        }
    }
    let (mut y, mut fy, mut qy) = best.expect("direction set is never empty");

    // Projected ascent on the quotient, clamping the radius into the annulus.
    let mut step = eps / 4.0;
    let mut g = vec![0.0; d];
    for _ in 0..inner.refine_steps {
        let r = dist(&y, center);
        model.gradient_into(&y, &mut g);
        // grad of the quotient: grad f / r - (f - f0)(y - x) / r^3
        let mut dq: Point = (0..d)
            .map(|i| g[i] / r - (fy - f_center) * (y[i] - center[i]) / (r * r * r))
            .collect();
        let dqn = norm(&dq);
        if dqn <= 0.0 || !dqn.is_finite() {
            break;
        }
        for v in &mut dq {
            *v /= dqn;
        }
        let mut s = step;
        let mut improved = false;
        for _ in 0..inner.max_backtracks {
            let mut cand: Point = (0..d).map(|i| y[i] + s * dq[i]).collect();
            let rc = dist(&cand, center);
            let clamped = rc.clamp(r_floor, eps);
            if rc > 0.0 && (rc < r_floor || rc > eps) {
                for i in 0..d {
                    cand[i] = center[i] + clamped * (cand[i] - center[i]) / rc;
                }
            }
            let fc = model.value(&cand);
            let qc = slope_of(&cand, fc);
            if qc > qy {
                y = cand;
                fy = fc;
                qy = qc;
                step = (s * 2.0).min(eps / 2.0);
                improved = true;
                break;
            }
            s *= 0.5;
            if s < eps * 1e-13 {
                break;
            }
        }
        if !improved {
            break;
        }
    }

    AnnulusMax { point: y, value: fy, slope: qy }
}

/// Maximize `r -> value(r)` over `[0, rho]`: a 9-point seeding grid guards
/// against local dips, then golden-section polishes the winning bracket to
/// `tol`. A monotone tail on the grid accepts the right endpoint directly.
pub fn line_argmax(value: &mut dyn FnMut(f64) -> f64, rho: f64, f_at_zero: f64, tol: f64) -> (f64, f64) {
    const GRID: usize = 8;
    let mut fs = [0.0; GRID + 1];
    fs[0] = f_at_zero;
    let mut jbest = 0;
    for j in 1..=GRID {
        fs[j] = value(rho * j as f64 / GRID as f64);
        if fs[j] > fs[jbest] {
            jbest = j;
        }
    }
    if jbest == GRID && fs[GRID] >= fs[GRID - 1] && fs[GRID - 1] >= fs[GRID - 2] {
        return (rho, fs[GRID]);
    }
    let lo = rho * jbest.saturating_sub(1) as f64 / GRID as f64;
    let hi = rho * (jbest + 1).min(GRID) as f64 / GRID as f64;

    // Golden-section (maximization), tracking the best evaluation seen.
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = value(x1);
    let mut f2 = value(x2);
    let mut best = (rho * jbest as f64 / GRID as f64, fs[jbest]);
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f > best.1 {
            best = (x, f);
        }
    }
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = value(x2);
            if f2 > best.1 {
                best = (x2, f2);
            }
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = value(x1);
            if f1 > best.1 {
                best = (x1, f1);
            }
        }
    }
    best
}
