//! Kernel density estimator over a fixed sample with compact support.
//!
//! Windowed sums are exact: only sample points within radius `h` of the
//! query contribute, found through the spatial index and accumulated in
//! ascending sample order so results are reproducible bit for bit.

use super::profile::{shadow, KernelProfile, ShadowProfile};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::point::Point;
use crate::spatial::SpatialIndex;
use nalgebra::DMatrix;

/// Bandwidth, explicit or by rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Fixed(f64),
    /// `h = n^(-1/(d+4))` times the average per-dimension standard deviation.
    Scott,
}

impl Bandwidth {
    pub fn resolve(&self, sample: &[Point]) -> Result<f64> {
        match self {
            Bandwidth::Fixed(h) => {
                if *h > 0.0 && h.is_finite() {
                    Ok(*h)
                } else {
                    Err(Error::param("bandwidth", "must be positive and finite"))
                }
            }
            Bandwidth::Scott => {
                let n = sample.len();
                if n < 2 {
                    return Err(Error::param("bandwidth", "scott rule needs n >= 2"));
                }
                let d = sample[0].len();
                let mut avg_sd = 0.0;
                for a in 0..d {
                    let mean = sample.iter().map(|p| p[a]).sum::<f64>() / n as f64;
                    let var = sample
                        .iter()
                        .map(|p| (p[a] - mean) * (p[a] - mean))
                        .sum::<f64>()
                        / (n as f64 - 1.0);
                    avg_sd += var.sqrt();
                }
                avg_sd /= d as f64;
                Ok((n as f64).powf(-1.0 / (d as f64 + 4.0)) * avg_sd)
            }
        }
    }
}

pub struct Kde {
    index: SpatialIndex,
    h: f64,
    profile: KernelProfile,
    dim: usize,
    /// normalizer(d) / (n h^d)
    prefactor: f64,
}

impl Kde {
    pub fn new(sample: Vec<Point>, bandwidth: Bandwidth, profile: KernelProfile) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::param("sample", "KDE sample is empty"));
        }
        let dim = sample[0].len();
        if dim == 0 || sample.iter().any(|p| p.len() != dim) {
            return Err(Error::param("sample", "inconsistent point dimensions"));
        }
        let h = bandwidth.resolve(&sample)?;
        let n = sample.len();
        let prefactor = profile.normalizer(dim) / (n as f64 * h.powi(dim as i32));
        Ok(Kde {
            index: SpatialIndex::build(sample, h),
            h,
            profile,
            dim,
            prefactor,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn profile(&self) -> &KernelProfile {
        &self.profile
    }

    pub fn sample(&self) -> &[Point] {
        self.index.points()
    }

    pub fn n(&self) -> usize {
        self.index.len()
    }

    /// The estimator with the shadow kernel over the same sample and
    /// bandwidth (the density Mean Shift actually climbs).
    pub fn shadow_estimator(&self) -> Result<Kde> {
        let sp = self.shadow_profile()?;
        Kde::new(
            self.sample().to_vec(),
            Bandwidth::Fixed(self.h),
            sp.kernel(),
        )
    }

    pub fn shadow_profile(&self) -> Result<ShadowProfile> {
        shadow(&self.profile)
    }

    /// Indices of sample points within the kernel window at `x`, ascending.
    pub fn window(&self, x: &[f64]) -> Vec<usize> {
        self.index.within(x, self.h)
    }

    /// Kernel-weighted mean of the in-window sample points, minus `x`.
    /// Fails with [`Error::IsolatedQuery`] when the window is empty.
    pub fn mean_shift_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::dim(self.dim, x.len()));
        }
        let window = self.window(x);
        let mut wsum = 0.0;
        let mut mean = vec![0.0; self.dim];
        for &i in &window {
            let p = self.index.point(i);
            let u = sq_dist(p, x) / (self.h * self.h);
            let w = self.profile.k(u);
            wsum += w;
            for a in 0..self.dim {
                mean[a] += w * p[a];
            }
        }
        if wsum <= 0.0 {
            return Err(Error::IsolatedQuery);
        }
        for a in 0..self.dim {
            mean[a] = mean[a] / wsum - x[a];
        }
        Ok(mean)
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Density for Kde {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let h2 = self.h * self.h;
        let mut s = 0.0;
        for i in self.window(x) {
            s += self.profile.k(sq_dist(self.index.point(i), x) / h2);
        }
        self.prefactor * s
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        let h2 = self.h * self.h;
        out.fill(0.0);
        for i in self.window(x) {
            let p = self.index.point(i);
            let du = self.profile.dk(sq_dist(p, x) / h2);
            for a in 0..self.dim {
                out[a] += du * 2.0 * (x[a] - p[a]) / h2;
            }
        }
        for v in out.iter_mut() {
            *v *= self.prefactor;
        }
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(x.len(), self.dim);
        let d = self.dim;
        let h2 = self.h * self.h;
        let mut m = DMatrix::zeros(d, d);
        for i in self.window(x) {
            let p = self.index.point(i);
            let u = sq_dist(p, x) / h2;
            let du = self.profile.dk(u);
            let d2u = self.profile.d2k(u);
            for a in 0..d {
                for b in 0..d {
                    m[(a, b)] += d2u * 4.0 * (x[a] - p[a]) * (x[b] - p[b]) / (h2 * h2);
                }
                m[(a, a)] += du * 2.0 / h2;
            }
        }
        m * self.prefactor
    }
}

/// KDE value with input validation.
pub fn kde_eval(kde: &Kde, x: &[f64]) -> Result<f64> {
    crate::density::eval_f(kde, x)
}

/// KDE gradient with input validation.
pub fn kde_grad(kde: &Kde, x: &[f64]) -> Result<Vec<f64>> {
    crate::density::eval_grad(kde, x)
}

/// KDE Hessian; requires a profile that is at least C^2.
pub fn kde_hess(kde: &Kde, x: &[f64]) -> Result<DMatrix<f64>> {
    if kde.profile().smoothness_class() < 2 {
        return Err(Error::param(
            "profile",
            format!(
                "profile '{}' has smoothness class {} < 2",
                kde.profile().name(),
                kde.profile().smoothness_class()
            ),
        ));
    }
    crate::density::eval_hess(kde, x)
}
