//! Rectangular evaluation grids used for bound estimation, covering radii,
//! sup-norm deviations, and experiment start points.

use crate::error::{Error, Result};
use crate::point::Point;

/// An axis-aligned box sampled at evenly spaced points (endpoints included).
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Number of points along each axis (each >= 1).
    pub steps: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, steps: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != steps.len() {
            return Err(Error::param("grid", "lo/hi/steps length mismatch"));
        }
        if lo.is_empty() {
            return Err(Error::EmptyGrid);
        }
        for i in 0..lo.len() {
            if !(lo[i] <= hi[i]) {
                return Err(Error::param("grid", format!("lo[{i}] > hi[{i}]")));
            }
            if steps[i] == 0 {
                return Err(Error::EmptyGrid);
            }
        }
        Ok(GridSpec { lo, hi, steps })
    }

    /// Uniform resolution on all axes.
    pub fn uniform(lo: Vec<f64>, hi: Vec<f64>, n: usize) -> Result<Self> {
        let d = lo.len();
        GridSpec::new(lo, hi, vec![n; d])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.steps.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest spacing over the axes; reported as the estimation resolution.
    pub fn max_spacing(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                if self.steps[i] > 1 {
                    (self.hi[i] - self.lo[i]) / (self.steps[i] - 1) as f64
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn point(&self, mut flat: usize) -> Point {
        let d = self.dim();
        let mut x = vec![0.0; d];
        for i in (0..d).rev() {
            let n = self.steps[i];
            let j = flat % n;
            flat /= n;
            x[i] = if n == 1 {
                0.5 * (self.lo[i] + self.hi[i])
            } else {
                self.lo[i] + (self.hi[i] - self.lo[i]) * j as f64 / (n - 1) as f64
            };
        }
        x
    }

    pub fn iter(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |k| self.point(k))
    }

    pub fn points(&self) -> Vec<Point> {
        self.iter().collect()
    }
}
