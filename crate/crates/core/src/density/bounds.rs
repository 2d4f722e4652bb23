//! Grid estimates of the global smoothness bounds kappa0/kappa1/kappa2.
//!
//! These are maxima over a finite grid and therefore lower estimates of the
//! true suprema; the algorithms only consume them as step-size safety
//! heuristics (e.g. `rho < 2 / kappa2`).

use super::{spectral_norm, Density};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::point::norm;

#[derive(Debug, Clone, Copy)]
pub struct SmoothnessBounds {
    /// Estimated sup of the density value.
    pub kappa0: f64,
    /// Estimated sup of the gradient norm.
    pub kappa1: f64,
    /// Estimated sup of the Hessian spectral norm.
    pub kappa2: f64,
    /// Largest grid spacing used for the estimate.
    pub grid_resolution: f64,
}

pub fn estimate_bounds(model: &dyn Density, grid: &GridSpec) -> Result<SmoothnessBounds> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.dim() != model.dim() {
        return Err(Error::dim(model.dim(), grid.dim()));
    }
    let mut kappa0 = 0.0_f64;
    let mut kappa1 = 0.0_f64;
    let mut kappa2 = 0.0_f64;
    let mut g = vec![0.0; model.dim()];
    for x in grid.iter() {
        let f = model.value_and_gradient_into(&x, &mut g);
        kappa0 = kappa0.max(f);
        kappa1 = kappa1.max(norm(&g));
        kappa2 = kappa2.max(spectral_norm(&model.hessian(&x)));
    }
    Ok(SmoothnessBounds {
        kappa0,
        kappa1,
        kappa2,
        grid_resolution: grid.max_spacing(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::standard_normal_1d;
    use crate::density::GaussianMixture;
    use nalgebra::DMatrix;

    #[test]
    fn standard_normal_bounds_match_closed_form() {
        // kappa0 = phi(0), kappa1 = phi(1) (attained at x = +-1),
        // kappa2 = |f''(0)| = phi(0).
        let m = standard_normal_1d();
        let grid = GridSpec::uniform(vec![-5.0], vec![5.0], 2001).unwrap();
        let b = estimate_bounds(&m, &grid).unwrap();
        assert!((b.kappa0 - 0.3989422804014327).abs() < 1e-6);
        assert!((b.kappa1 - 0.24197072451914337).abs() < 1e-6);
        assert!((b.kappa2 - 0.3989422804014327).abs() < 1e-6);
        assert!(b.grid_resolution > 0.0);
    }

    #[test]
    fn refinement_changes_estimate_by_under_two_percent() {
        let c1 = DMatrix::from_row_slice(2, 2, &[0.8, 0.15, 0.15, 0.6]);
        let c2 = DMatrix::from_row_slice(2, 2, &[0.7, -0.1, -0.1, 0.7]);
        let m = GaussianMixture::new(vec![
            (0.5, vec![-1.5, 0.0], c1),
            (0.5, vec![1.5, 0.5], c2),
        ])
        .unwrap();
        let (lo, hi) = m.suggested_box(4.0);
        let coarse = estimate_bounds(&m, &GridSpec::new(lo.clone(), hi.clone(), vec![81, 81]).unwrap()).unwrap();
        let fine = estimate_bounds(&m, &GridSpec::new(lo, hi, vec![161, 161]).unwrap()).unwrap();
        for (c, f) in [
            (coarse.kappa0, fine.kappa0),
            (coarse.kappa1, fine.kappa1),
            (coarse.kappa2, fine.kappa2),
        ] {
            assert!(c <= f + 1e-12, "grid max may only grow under refinement");
            assert!((f - c) / f < 0.02, "refinement moved estimate too much: {c} vs {f}");
        }
    }

    #[test]
    fn empty_grid_is_an_error() {
        let m = standard_normal_1d();
        assert!(GridSpec::uniform(vec![], vec![], 5).is_err());
        let g = GridSpec::uniform(vec![0.0, 0.0], vec![1.0, 1.0], 3).unwrap();
        assert!(estimate_bounds(&m, &g).is_err());
    }
}
