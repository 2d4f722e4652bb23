//! Kernel profiles, shadow construction, the kernel density estimator, and
//! sup-norm deviation between two densities on a grid.

mod estimator;
mod profile;

pub use estimator::{kde_eval, kde_grad, kde_hess, Bandwidth, Kde};
pub use profile::{shadow, KernelProfile, ShadowProfile};

use crate::density::{spectral_norm, Density};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::point::norm;

/// Grid maxima of the value / gradient / Hessian deviations between two
/// densities: `(eta0, eta1, eta2)`. These are diagnostics, not true suprema.
pub fn sup_deviation(
    fa: &dyn Density,
    fb: &dyn Density,
    grid: &GridSpec,
) -> Result<(f64, f64, f64)> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if fa.dim() != fb.dim() || grid.dim() != fa.dim() {
        return Err(Error::dim(fa.dim(), grid.dim()));
    }
    let d = fa.dim();
    let mut eta0 = 0.0_f64;
    let mut eta1 = 0.0_f64;
    let mut eta2 = 0.0_f64;
    let mut ga = vec![0.0; d];
    let mut gb = vec![0.0; d];
    for x in grid.iter() {
        eta0 = eta0.max((fa.value(&x) - fb.value(&x)).abs());
        fa.gradient_into(&x, &mut ga);
        fb.gradient_into(&x, &mut gb);
        let gd: Vec<f64> = ga.iter().zip(&gb).map(|(a, b)| a - b).collect();
        eta1 = eta1.max(norm(&gd));
        eta2 = eta2.max(spectral_norm(&(fa.hessian(&x) - fb.hessian(&x))));
    }
    Ok((eta0, eta1, eta2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::standard_normal_1d;
    use nalgebra::DMatrix;

    /// Test shim: a density plus a constant offset (not a real density, but
    /// exactly what the deviation diagnostics need to see).
    struct Offset<'a>(&'a dyn Density, f64);

    impl Density for Offset<'_> {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn value(&self, x: &[f64]) -> f64 {
            self.0.value(x) + self.1
        }
        fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
            self.0.gradient_into(x, out);
        }
        fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
            self.0.hessian(x)
        }
    }

    #[test]
    fn identical_densities_have_zero_deviation() {
        let m = standard_normal_1d();
        let grid = GridSpec::uniform(vec![-4.0], vec![4.0], 101).unwrap();
        let (e0, e1, e2) = sup_deviation(&m, &m, &grid).unwrap();
        assert_eq!((e0, e1, e2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn constant_offset_shows_up_only_in_eta0() {
        let m = standard_normal_1d();
        let shifted = Offset(&m, 0.01);
        let grid = GridSpec::uniform(vec![-4.0], vec![4.0], 101).unwrap();
        let (e0, e1, e2) = sup_deviation(&m, &shifted, &grid).unwrap();
        assert!((e0 - 0.01).abs() < 1e-15);
        assert_eq!(e1, 0.0);
        assert_eq!(e2, 0.0);
    }

    #[test]
    fn kde_deviation_shrinks_with_sample_size() {
        // h = n^(-1/5) in 1-D; eta0 at n = 80k must beat eta0 at n = 20k.
        let m = standard_normal_1d();
        let grid = GridSpec::uniform(vec![-3.0], vec![3.0], 201).unwrap();
        let mut etas = Vec::new();
        for n in [20_000usize, 80_000] {
            let sample = m.sample(n, 31).unwrap();
            let h = (n as f64).powf(-0.2);
            let kde = Kde::new(sample, Bandwidth::Fixed(h), KernelProfile::triweight()).unwrap();
            let (e0, _, _) = sup_deviation(&kde, &m, &grid).unwrap();
            etas.push(e0);
        }
        assert!(
            etas[1] < etas[0],
            "eta0 did not shrink: {} -> {}",
            etas[0],
            etas[1]
        );
    }

    #[test]
    fn empty_grid_is_rejected() {
        let m = standard_normal_1d();
        assert!(GridSpec::new(vec![], vec![], vec![]).is_err());
        let g = GridSpec::uniform(vec![0.0, 0.0], vec![1.0, 1.0], 2).unwrap();
        assert!(sup_deviation(&m, &m, &g).is_err());
    }
}
