//! Newton-refined mode enumeration with deduplication.

use super::{max_eigenvalue, Density};
use crate::error::{Error, Result};
use crate::point::{dist, lex_cmp, norm, Point};

#[derive(Debug, Clone)]
pub struct ModeFindConfig {
    /// Gradient norm below which a refined point counts as critical.
    pub mode_tol: f64,
    /// Modes closer than this are merged.
    pub dedupe_radius: f64,
    pub max_iters: usize,
    /// Seeds whose iterates leave this box are discarded; `None` disables
    /// the escape check.
    pub escape_box: Option<(Vec<f64>, Vec<f64>)>,
}

impl Default for ModeFindConfig {
    fn default() -> Self {
        ModeFindConfig {
            mode_tol: 1e-10,
            dedupe_radius: 1e-6,
            max_iters: 100,
            escape_box: None,
        }
    }
}

/// Deduplicated local maxima with their gradient residuals.
#[derive(Debug, Clone)]
pub struct ModeList {
    pub modes: Vec<Point>,
    pub gradient_norms: Vec<f64>,
    /// Smallest pairwise distance; `f64::INFINITY` for fewer than two modes.
    pub min_separation: f64,
}

impl ModeList {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Index of the mode within `radius` of `x`, if any (nearest wins).
    pub fn match_point(&self, x: &[f64], radius: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, m) in self.modes.iter().enumerate() {
            let d = dist(m, x);
            if d <= radius && best.map_or(true, |(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Largest mode density under `model`.
    pub fn max_value(&self, model: &dyn Density) -> f64 {
        self.modes
            .iter()
            .map(|m| model.value(m))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Component means plus a coarse grid over the means' bounding box
/// inflated by three top standard deviations.
pub fn default_mode_seeds(model: &super::GaussianMixture) -> Vec<Point> {
    let mut seeds = model.means();
    let (lo, hi) = model.suggested_box(3.0);
    let d = model.dim();
    let per_axis = match d {
        1 => 33,
        2 => 11,
        3 => 7,
        _ => 5,
    };
    if let Ok(grid) = crate::grid::GridSpec::uniform(lo, hi, per_axis) {
        seeds.extend(grid.iter());
    }
    seeds
}

/// Newton refinement of local maxima from `seeds`, with damping when a step
/// increases the gradient norm. Divergent seeds are discarded, not fatal.
pub fn find_modes(model: &dyn Density, seeds: &[Point], cfg: &ModeFindConfig) -> Result<ModeList> {
    if seeds.is_empty() {
        return Err(Error::param("seeds", "seed list is empty"));
    }
    let d = model.dim();
    let mut candidates: Vec<(Point, f64)> = Vec::new();
    'seed: for seed in seeds {
        if seed.len() != d {
            return Err(Error::dim(d, seed.len()));
        }
        let mut x = seed.clone();
        let mut g = model.gradient(&x);
        let mut gn = norm(&g);
        for _ in 0..cfg.max_iters {
            if gn <= cfg.mode_tol {
                break;
            }
            let h = model.hessian(&x);
            let rhs = nalgebra::DVector::from_iterator(d, g.iter().map(|v| -v));
            let step = match h.lu().solve(&rhs) {
                Some(s) => s,
                None => {
                    log::debug!("mode seed {seed:?}: singular Hessian, discarded");
                    continue 'seed;
                }
            };
            // Damp by halving while the step increases the gradient norm.
            let mut scale = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let cand: Point = (0..d).map(|i| x[i] + scale * step[i]).collect();
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
                log::debug!("mode seed {seed:?}: Newton stalled, discarded");
                continue 'seed;
            }
            if let Some((lo, hi)) = &cfg.escape_box {
                if (0..d).any(|i| x[i] < lo[i] || x[i] > hi[i]) {
                    log::debug!("mode seed {seed:?}: escaped search box, discarded");
                    continue 'seed;
                }
            }
        }
        if gn > cfg.mode_tol {
            log::debug!("mode seed {seed:?}: no convergence in {} iters", cfg.max_iters);
            continue;
        }
        // Keep only strict local maxima.
        if max_eigenvalue(&model.hessian(&x)) >= 0.0 {
            continue;
        }
        candidates.push((x, gn));
    }

    // Merge duplicates; the representative is the best-refined point.
    candidates.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    let mut modes: Vec<Point> = Vec::new();
    let mut gradient_norms: Vec<f64> = Vec::new();
    for (x, gn) in candidates {
        match modes.iter().position(|m| dist(m, &x) < cfg.dedupe_radius) {
            Some(i) => {
                if gn < gradient_norms[i] {
                    modes[i] = x;
                    gradient_norms[i] = gn;
                }
            }
            None => {
                modes.push(x);
                gradient_norms.push(gn);
            }
        }
    }

    let mut min_separation = f64::INFINITY;
    for i in 0..modes.len() {
        for j in (i + 1)..modes.len() {
            min_separation = min_separation.min(dist(&modes[i], &modes[j]));
        }
    }
    Ok(ModeList { modes, gradient_norms, min_separation })
}
