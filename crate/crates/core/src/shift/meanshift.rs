//! Mean Shift: iterated kernel-weighted sample means.
//!
//! By the shadow identity this is the Euler scheme for the shadow KDE with
//! step `h^2 / (2c f_K)`, so the recorded `f_values` (and alignment
//! gradients) come from the shadow estimator - the function the algorithm
//! actually climbs.

use super::StopRule;
use crate::density::Density;
use crate::error::{Error, Result};
use crate::kde::Kde;
use crate::point::norm;
use crate::trajectory::{Terminal, Trajectory};

/// One fused window pass: mean-shift vector, shadow value, shadow gradient.
fn fused_step(kde: &Kde, shadow: &Kde, x: &[f64]) -> Option<(Vec<f64>, f64, Vec<f64>)> {
    let d = x.len();
    let h = kde.bandwidth();
    let h2 = h * h;
    let kp = kde.profile();
    let lp = shadow.profile();
    let n = kde.n() as f64;
    let pref_l = lp.normalizer(d) / (n * h.powi(d as i32));

    let window = kde.window(x);
    let mut wsum = 0.0;
    let mut mean = vec![0.0; d];
    let mut lsum = 0.0;
    let mut lgrad = vec![0.0; d];
    for &i in &window {
        let p = &kde.sample()[i];
        let u = p
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / h2;
        let w = kp.k(u);
        wsum += w;
        for a in 0..d {
            mean[a] += w * p[a];
        }
        lsum += lp.k(u);
        let dl = lp.dk(u);
        for a in 0..d {
            lgrad[a] += dl * 2.0 * (x[a] - p[a]) / h2;
        }
    }
    if wsum <= 0.0 {
        return None;
    }
    for a in 0..d {
        mean[a] = mean[a] / wsum - x[a];
        lgrad[a] *= pref_l;
    }
    Some((mean, pref_l * lsum, lgrad))
}

/// Iterate `x(k+1) = x(k) + MS_h(x(k))` until the displacement drops below
/// the stop tolerance. An empty window at the start is `Stalled`.
pub fn mean_shift(kde: &Kde, x0: &[f64], stop: &StopRule) -> Result<Trajectory> {
    if x0.len() != kde.dim() {
        return Err(Error::dim(kde.dim(), x0.len()));
    }
    let shadow = kde.shadow_estimator()?;
    let mut x = x0.to_vec();

    let first = fused_step(kde, &shadow, &x);
    let f0 = shadow.value(&x);
    let mut traj = Trajectory::start(x.clone(), f0);
    let (mut ms, mut _fl, mut gl) = match first {
        Some(t) => t,
        None => {
            traj.terminal = Terminal::Stalled;
            return Ok(traj);
        }
    };

    for _ in 0..stop.max_iters {
        let disp = norm(&ms);
        if disp < stop.displacement_tol {
            traj.terminal = Terminal::NearCritical;
            return Ok(traj);
        }
        let grad_prev = gl.clone();
        for a in 0..x.len() {
            x[a] += ms[a];
        }
        match fused_step(kde, &shadow, &x) {
            Some((m2, f2, g2)) => {
                traj.push(x.clone(), f2, &grad_prev);
                ms = m2;
                _fl = f2;
                gl = g2;
            }
            None => {
                traj.push(x.clone(), shadow.value(&x), &grad_prev);
                traj.terminal = Terminal::Stalled;
                return Ok(traj);
            }
        }
    }
    traj.terminal = Terminal::MaxIterations;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kde::{Bandwidth, KernelProfile};

    fn stop() -> StopRule {
        StopRule {
            f_improve_tol: 0.0,
            displacement_tol: 1e-12,
            max_iters: 10_000,
        }
    }

    #[test]
    fn single_point_sample_converges_in_one_step() {
        let kde = Kde::new(
            vec![vec![0.7, -0.2]],
            Bandwidth::Fixed(1.0),
            KernelProfile::triweight(),
        )
        .unwrap();
        let t = mean_shift(&kde, &[0.3, 0.1], &stop()).unwrap();
        assert_eq!(t.n_steps(), 1);
        assert!(crate::point::dist(t.endpoint(), &[0.7, -0.2]) < 1e-12);
    }

    #[test]
    fn symmetric_pair_has_fixed_point_at_center() {
        let kde = Kde::new(
            vec![vec![-1.0], vec![1.0]],
            Bandwidth::Fixed(3.0),
            KernelProfile::triweight(),
        )
        .unwrap();
        let t = mean_shift(&kde, &[0.0], &stop()).unwrap();
        assert_eq!(t.n_steps(), 0);
        assert_eq!(t.endpoint()[0], 0.0);
    }

    #[test]
    fn isolated_start_stalls() {
        let kde = Kde::new(
            vec![vec![0.0]],
            Bandwidth::Fixed(0.5),
            KernelProfile::triweight(),
        )
        .unwrap();
        let t = mean_shift(&kde, &[4.0], &stop()).unwrap();
        assert_eq!(t.terminal, Terminal::Stalled);
        assert_eq!(t.n_steps(), 0);
    }

    #[test]
    fn shadow_values_climb() {
        let m = crate::density::GaussianMixture::isotropic(vec![
            (0.5, vec![-2.0], 0.5),
            (0.5, vec![2.0], 0.5),
        ])
        .unwrap();
        let sample = m.sample(800, 9).unwrap();
        let kde = Kde::new(sample, Bandwidth::Scott, KernelProfile::triweight()).unwrap();
        let t = mean_shift(&kde, &[-3.0], &stop()).unwrap();
        assert!(t.n_steps() > 1);
        for w in t.f_values.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "shadow density decreased");
        }
        assert!((t.endpoint()[0] + 2.0).abs() < 0.3, "endpoint {}", t.endpoint()[0]);
    }
}
