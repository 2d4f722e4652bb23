//! Central finite differences of a [`Density`](crate::density::Density).
//!
//! These deliberately go through `value` only, so they stay independent of
//! the analytic gradient/Hessian paths they are used to cross-check.

use crate::density::Density;
use nalgebra::DMatrix;

/// Central-difference gradient with step `h` per coordinate.
pub fn fd_gradient(f: &dyn Density, x: &[f64], h: f64) -> Vec<f64> {
    let d = x.len();
    let mut g = vec![0.0; d];
    let mut xp = x.to_vec();
    for i in 0..d {
        xp[i] = x[i] + h;
        let fp = f.value(&xp);
        xp[i] = x[i] - h;
        let fm = f.value(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Central-difference Hessian with step `h`.
pub fn fd_hessian(f: &dyn Density, x: &[f64], h: f64) -> DMatrix<f64> {
    let d = x.len();
    let mut m = DMatrix::zeros(d, d);
    let f0 = f.value(x);
    let mut xp = x.to_vec();
    for i in 0..d {
        // Diagonal second difference.
        xp[i] = x[i] + h;
        let fp = f.value(&xp);
        xp[i] = x[i] - h;
        let fm = f.value(&xp);
        xp[i] = x[i];
        m[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in (i + 1)..d {
            xp[i] = x[i] + h;
            xp[j] = x[j] + h;
            let fpp = f.value(&xp);
            xp[j] = x[j] - h;
            let fpm = f.value(&xp);
            xp[i] = x[i] - h;
            let fmm = f.value(&xp);
            xp[j] = x[j] + h;
            let fmp = f.value(&xp);
            xp[i] = x[i];
            xp[j] = x[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}
