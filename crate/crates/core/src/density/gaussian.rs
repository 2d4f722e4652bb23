//! Gaussian mixtures with exact value, gradient, and Hessian.

use super::Density;
use crate::error::{Error, Result};
use crate::point::Point;
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// On-disk mixture description: `{"dim": d, "components": [{"weight", "mean", "cov"}]}`,
/// covariances row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub dim: usize,
    pub components: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

struct Component {
    weight: f64,
    mean: Vec<f64>,
    cov: DMatrix<f64>,
    /// Row-major inverse covariance, unrolled for the hot evaluation loops.
    inv_cov: Vec<f64>,
    /// Lower-triangular Cholesky factor, row-major, for sampling.
    chol: Vec<f64>,
    /// (2 pi)^{-d/2} (det Sigma)^{-1/2}.
    norm: f64,
}

/// A mixture of full-covariance Gaussians. Immutable after construction and
/// safe to share across threads.
pub struct GaussianMixture {
    dim: usize,
    comps: Vec<Component>,
    /// Cumulative weights for component sampling.
    cum_weights: Vec<f64>,
}

impl GaussianMixture {
    /// Build a mixture from `(weight, mean, covariance)` triples.
    ///
    /// Weights must be strictly positive; they are normalized to sum to one,
    /// with a warning when the raw sum is off by more than 1e-9. Covariances
    /// must be symmetric positive-definite.
    pub fn new(components: Vec<(f64, Vec<f64>, DMatrix<f64>)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::param("components", "mixture needs at least one component"));
        }
        let dim = components[0].1.len();
        if dim == 0 {
            return Err(Error::param("mean", "zero-dimensional mean"));
        }
        let raw_sum: f64 = components.iter().map(|c| c.0).sum();
        if components.iter().any(|c| c.0 <= 0.0) {
            return Err(Error::param("weight", "weights must be strictly positive"));
        }
        if (raw_sum - 1.0).abs() > 1e-9 {
            log::warn!("mixture weights sum to {raw_sum:.12}; normalizing");
        }
        let mut comps = Vec::with_capacity(components.len());
        for (w, mean, cov) in components {
            if mean.len() != dim {
                return Err(Error::dim(dim, mean.len()));
            }
            if cov.nrows() != dim || cov.ncols() != dim {
                return Err(Error::dim(dim, cov.nrows()));
            }
            let scale = cov.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);
            for i in 0..dim {
                for j in 0..dim {
                    if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                        return Err(Error::param("cov", "covariance not symmetric"));
                    }
                }
            }
            let chol = cov
                .clone()
                .cholesky()
                .ok_or_else(|| Error::param("cov", "covariance not positive definite"))?;
            let det = chol.determinant();
            let inv = chol.inverse();
            let norm =
                (2.0 * std::f64::consts::PI).powf(-(dim as f64) / 2.0) / det.sqrt();
            let l = chol.l();
            comps.push(Component {
                weight: w / raw_sum,
                mean,
                cov,
                inv_cov: (0..dim)
                    .flat_map(|i| (0..dim).map(move |j| (i, j)))
                    .map(|(i, j)| inv[(i, j)])
                    .collect(),
                chol: (0..dim)
                    .flat_map(|i| (0..dim).map(move |j| (i, j)))
                    .map(|(i, j)| l[(i, j)])
                    .collect(),
                norm,
            });
        }
        let mut cum = Vec::with_capacity(comps.len());
        let mut acc = 0.0;
        for c in &comps {
            acc += c.weight;
            cum.push(acc);
        }
        // Guard against rounding: the last bucket absorbs everything.
        *cum.last_mut().unwrap() = f64::INFINITY;
        Ok(GaussianMixture { dim, comps, cum_weights: cum })
    }

    /// Isotropic convenience constructor: `(weight, mean, sigma^2 I)`.
    pub fn isotropic(components: Vec<(f64, Vec<f64>, f64)>) -> Result<Self> {
        let comps = components
            .into_iter()
            .map(|(w, m, var)| {
                let d = m.len();
                (w, m, DMatrix::identity(d, d) * var)
            })
            .collect();
        GaussianMixture::new(comps)
    }

    pub fn from_spec(spec: &MixtureSpec) -> Result<Self> {
        let comps = spec
            .components
            .iter()
            .map(|c| {
                if c.cov.len() != spec.dim || c.cov.iter().any(|r| r.len() != spec.dim) {
                    return Err(Error::param("cov", "covariance shape does not match dim"));
                }
                let cov = DMatrix::from_fn(spec.dim, spec.dim, |i, j| c.cov[i][j]);
                Ok((c.weight, c.mean.clone(), cov))
            })
            .collect::<Result<Vec<_>>>()?;
        GaussianMixture::new(comps)
    }

    pub fn to_spec(&self) -> MixtureSpec {
        MixtureSpec {
            dim: self.dim,
            components: self
                .comps
                .iter()
                .map(|c| ComponentSpec {
                    weight: c.weight,
                    mean: c.mean.clone(),
                    cov: (0..self.dim)
                        .map(|i| (0..self.dim).map(|j| c.cov[(i, j)]).collect())
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: MixtureSpec = serde_json::from_str(&text)?;
        GaussianMixture::from_spec(&spec)
    }

    pub fn n_components(&self) -> usize {
        self.comps.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c.weight).collect()
    }

    pub fn means(&self) -> Vec<Point> {
        self.comps.iter().map(|c| c.mean.clone()).collect()
    }

    /// Largest componentwise standard deviation over the mixture
    /// (square root of the largest covariance eigenvalue).
    pub fn max_sigma(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| super::max_eigenvalue(&c.cov).sqrt())
            .fold(0.0, f64::max)
    }

    /// Axis-aligned box covering all means inflated by `k` top standard
    /// deviations; the default domain for grids and seeds.
    pub fn suggested_box(&self, k: f64) -> (Vec<f64>, Vec<f64>) {
        let pad = k * self.max_sigma();
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for c in &self.comps {
            for a in 0..self.dim {
                lo[a] = lo[a].min(c.mean[a] - pad);
                hi[a] = hi[a].max(c.mean[a] + pad);
            }
        }
        (lo, hi)
    }

    /// Quadratic form (x-mu)' Sigma^{-1} (x-mu) for one component.
    #[inline]
    fn quad(&self, c: &Component, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut q = 0.0;
        for i in 0..d {
            let di = x[i] - c.mean[i];
            let mut s = 0.0;
            for j in 0..d {
                s += c.inv_cov[i * d + j] * (x[j] - c.mean[j]);
            }
            q += di * s;
        }
        q
    }

    /// Draw `n` points; deterministic given `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Point>> {
        Ok(self.sample_with_labels(n, seed)?.0)
    }

    /// Draw `n` points along with the index of the generating component.
    pub fn sample_with_labels(&self, n: usize, seed: u64) -> Result<(Vec<Point>, Vec<usize>)> {
        if n == 0 {
            return Err(Error::param("n", "sample size must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.dim;
        let mut pts = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        let mut z = vec![0.0; d];
        for _ in 0..n {
            let u: f64 = rng.gen();
            let k = self
                .cum_weights
                .iter()
                .position(|&cw| u < cw)
                .unwrap_or(self.comps.len() - 1);
            let c = &self.comps[k];
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            let mut x = c.mean.clone();
            for i in 0..d {
                let mut s = 0.0;
                for j in 0..=i {
                    s += c.chol[i * d + j] * z[j];
                }
                x[i] += s;
            }
            pts.push(x);
            labels.push(k);
        }
        Ok((pts, labels))
    }
}

impl Density for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.comps
            .iter()
            .map(|c| c.weight * c.norm * (-0.5 * self.quad(c, x)).exp())
            .sum()
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.value_and_gradient_into(x, out);
    }

    fn value_and_gradient_into(&self, x: &[f64], out: &mut [f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let d = self.dim;
        out.fill(0.0);
        let mut f = 0.0;
        for c in &self.comps {
            let phi = c.weight * c.norm * (-0.5 * self.quad(c, x)).exp();
            f += phi;
            // grad += -phi * Sigma^{-1} (x - mu)
            for i in 0..d {
                let mut s = 0.0;
                for j in 0..d {
                    s += c.inv_cov[i * d + j] * (x[j] - c.mean[j]);
                }
                out[i] -= phi * s;
            }
        }
        f
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(x.len(), self.dim);
        let d = self.dim;
        let mut h = DMatrix::zeros(d, d);
        let mut v = vec![0.0; d];
        for c in &self.comps {
            let phi = c.weight * c.norm * (-0.5 * self.quad(c, x)).exp();
            for i in 0..d {
                let mut s = 0.0;
                for j in 0..d {
                    s += c.inv_cov[i * d + j] * (x[j] - c.mean[j]);
                }
                v[i] = s;
            }
            for i in 0..d {
                for j in 0..d {
                    h[(i, j)] += phi * (v[i] * v[j] - c.inv_cov[i * d + j]);
                }
            }
        }
        h
    }
}

/// 1-D standard normal density, handy in tests and reference configs.
pub fn standard_normal_1d() -> GaussianMixture {
    GaussianMixture::isotropic(vec![(1.0, vec![0.0], 1.0)]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{eval_f, eval_grad, eval_hess, eval_normalized_grad};
    use crate::numdiff::{fd_gradient, fd_hessian};
    use crate::point::norm;
    use approx::assert_abs_diff_eq;

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

    #[test]
    fn standard_normal_peak_in_2d() {
        let m = GaussianMixture::isotropic(vec![(1.0, vec![0.0, 0.0], 1.0)]).unwrap();
        let v = eval_f(&m, &[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(v, 1.0 / (2.0 * std::f64::consts::PI), epsilon = 1e-15);
    }

    #[test]
    fn symmetric_mixture_is_even() {
        let m = bimodal_1d();
        for x in [0.3, 1.7, -2.9, 0.0] {
            assert_abs_diff_eq!(
                eval_f(&m, &[x]).unwrap(),
                eval_f(&m, &[-x]).unwrap(),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn bimodal_value_at_origin_matches_closed_form() {
        // 0.5 phi(2) + 0.5 phi(-2) = phi(2)
        let m = bimodal_1d();
        let expected = (-2.0_f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert_abs_diff_eq!(eval_f(&m, &[0.0]).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 0.05399096651318806, epsilon = 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = bimodal_1d();
        assert!(eval_f(&m, &[0.0, 1.0]).is_err());
        assert!(eval_grad(&m, &[]).is_err());
        assert!(eval_hess(&m, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn gradient_zero_at_isolated_mode() {
        let m = GaussianMixture::isotropic(vec![(1.0, vec![1.5, -0.5], 0.7)]).unwrap();
        let g = eval_grad(&m, &[1.5, -0.5]).unwrap();
        assert!(norm(&g) <= 1e-12);
    }

    #[test]
    fn standard_normal_gradient_closed_form() {
        // f'(x) = -x phi(x); at x = -1 the gradient is +phi(1).
        let m = standard_normal_1d();
        let g = eval_grad(&m, &[-1.0]).unwrap();
        assert_abs_diff_eq!(g[0], 0.24197072451914337, epsilon = 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = mixture_2d();
        let mut rng = rand::rngs::StdRng::seed_from_u64(42);
        let mut checked = 0;
        while checked < 100 {
            let x = [
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-4.0..6.0),
            ];
            if m.value(&x) < 1e-5 {
                continue;
            }
            let g = m.gradient(&x);
            let fd = fd_gradient(&m, &x, 1e-5);
            for i in 0..2 {
                let denom = g[i].abs().max(1e-8);
                assert!(
                    (g[i] - fd[i]).abs() / denom < 1e-6,
                    "grad mismatch at {x:?}: {g:?} vs {fd:?}"
                );
            }
            checked += 1;
        }
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let m = mixture_2d();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 40 {
            let x = [
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-4.0..6.0),
            ];
            if m.value(&x) < 1e-4 {
                continue;
            }
            let h = m.hessian(&x);
            let fd = fd_hessian(&m, &x, 1e-4);
            let scale = h.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-8);
            assert!((&h - &fd).iter().all(|v| v.abs() / scale < 1e-5));
            checked += 1;
        }
    }

    #[test]
    fn odd_gradient_under_mirror_symmetry() {
        let m = bimodal_1d();
        for x in [0.4, 1.1, 2.6] {
            let gp = eval_grad(&m, &[x]).unwrap()[0];
            let gm = eval_grad(&m, &[-x]).unwrap()[0];
            assert_abs_diff_eq!(gp, -gm, epsilon = 1e-15);
        }
    }

    #[test]
    fn normalized_gradient_is_unit_and_points_uphill() {
        let m = standard_normal_1d();
        let n = eval_normalized_grad(&m, &[-1.0], 1e-12).unwrap();
        assert_abs_diff_eq!(n[0], 1.0, epsilon = 1e-12);
        // Near the critical point the call must fail.
        assert!(eval_normalized_grad(&m, &[0.0], 1e-12).is_err());
    }

    #[test]
    fn normalized_gradient_matches_definition_in_2d() {
        let m = mixture_2d();
        let x = [1.0, 0.5];
        let g = m.gradient(&x);
        let n = eval_normalized_grad(&m, &x, 0.0).unwrap();
        let ng = norm(&g);
        for i in 0..2 {
            assert_abs_diff_eq!(n[i], g[i] / ng, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(norm(&n), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_and_unbiased() {
        let m = standard_normal_1d();
        let a = m.sample(1000, 99).unwrap();
        let b = m.sample(1000, 99).unwrap();
        assert_eq!(a, b);

        let big = m.sample(100_000, 5).unwrap();
        let mean: f64 = big.iter().map(|p| p[0]).sum::<f64>() / big.len() as f64;
        assert!(mean.abs() < 0.02, "sample mean {mean}");
    }

    #[test]
    fn component_counts_follow_weights() {
        let m = GaussianMixture::isotropic(vec![
            (0.3, vec![-5.0], 1.0),
            (0.7, vec![5.0], 1.0),
        ])
        .unwrap();
        let n = 10_000;
        let (_, labels) = m.sample_with_labels(n, 17).unwrap();
        let c0 = labels.iter().filter(|&&l| l == 0).count() as f64;
        let slack = 3.0 * (n as f64).sqrt();
        assert!((c0 - 0.3 * n as f64).abs() < slack, "count {c0}");
    }

    #[test]
    fn total_mass_one_in_1d_and_2d() {
        let m1 = bimodal_1d();
        let mass1 = crate::quadrature::simpson_1d(|x| m1.value(&[x]), -10.0, 10.0, 4000);
        assert!((mass1 - 1.0).abs() < 1e-4, "1-D mass {mass1}");

        let m2 = mixture_2d();
        let mass2 = crate::quadrature::simpson_2d(
            |x, y| m2.value(&[x, y]),
            (-11.0, -10.0),
            (11.0, 12.0),
            400,
        );
        assert!((mass2 - 1.0).abs() < 1e-4, "2-D mass {mass2}");
    }

    #[test]
    fn invalid_mixtures_are_rejected() {
        assert!(GaussianMixture::isotropic(vec![]).is_err());
        assert!(GaussianMixture::isotropic(vec![(0.0, vec![0.0], 1.0)]).is_err());
        assert!(GaussianMixture::isotropic(vec![(1.0, vec![0.0], -1.0)]).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        assert!(GaussianMixture::new(vec![(1.0, vec![0.0, 0.0], asym)]).is_err());
    }

    #[test]
    fn spec_roundtrip() {
        let m = mixture_2d();
        let spec = m.to_spec();
        let text = serde_json::to_string(&spec).unwrap();
        let back = GaussianMixture::from_spec(&serde_json::from_str(&text).unwrap()).unwrap();
        let x = [0.7, -0.3];
        assert_abs_diff_eq!(m.value(&x), back.value(&x), epsilon = 1e-15);
    }

    #[test]
    fn weights_autonormalize() {
        let m = GaussianMixture::isotropic(vec![
            (3.0, vec![-1.0], 1.0),
            (1.0, vec![1.0], 1.0),
        ])
        .unwrap();
        let w = m.weights();
        assert_abs_diff_eq!(w[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }
}
