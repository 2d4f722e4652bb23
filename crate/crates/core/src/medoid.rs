//! Discrete-space (medoid) hill-climbing over a finite point set with exact
//! radius queries, plus Quick Shift and covering-radius measurement.
//!
//! The algorithm cores are generic over [`MedoidSpace`], which exposes only
//! counts, density values, and pairwise distances. That is the whole
//! interface: the dynamics port unchanged to any metric space.

use crate::density::Density;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::kde::KernelProfile;
use crate::point::{lex_cmp, Point};
use crate::spatial::SpatialIndex;
use crate::trajectory::{Terminal, Trajectory};

/// The decision surface of every medoid algorithm: f-values and distances,
/// nothing else.
pub trait MedoidSpace {
    fn n(&self) -> usize;
    fn f(&self, i: usize) -> f64;
    fn dist(&self, i: usize, j: usize) -> f64;
    /// Indices within distance `r` of medoid `i`, ascending.
    fn within(&self, i: usize, r: f64) -> Vec<usize>;
}

/// A finite point set with precomputed density values and an exact spatial
/// index. Immutable after build.
pub struct MedoidSet {
    index: SpatialIndex,
    f_values: Vec<f64>,
}

impl MedoidSet {
    pub fn new(points: Vec<Point>, f_values: Vec<f64>, cell_hint: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::param("points", "medoid set is empty"));
        }
        if points.len() != f_values.len() {
            return Err(Error::param("f_values", "length mismatch with points"));
        }
        if f_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "medoid f_values" });
        }
        Ok(MedoidSet { index: SpatialIndex::build(points, cell_hint), f_values })
    }

    /// Build with `f_values[i] = model(points[i])` exactly.
    pub fn from_density(points: Vec<Point>, model: &dyn Density, cell_hint: f64) -> Result<Self> {
        let f_values = points.iter().map(|p| model.value(p)).collect();
        MedoidSet::new(points, f_values, cell_hint)
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.index.point(i)
    }

    pub fn points(&self) -> &[Point] {
        self.index.points()
    }

    pub fn f_value(&self, i: usize) -> f64 {
        self.f_values[i]
    }

    /// Exactly `{i : ||points[i] - x|| <= r}` in ascending index order.
    pub fn radius_query(&self, x: &[f64], r: f64) -> Result<Vec<usize>> {
        if x.len() != self.dim() {
            return Err(Error::dim(self.dim(), x.len()));
        }
        if r < 0.0 {
            return Err(Error::param("r", "radius must be nonnegative"));
        }
        Ok(self.index.within(x, r))
    }

    /// Recompute the stored density values against `model`; true when every
    /// entry matches exactly.
    pub fn verify_f_values(&self, model: &dyn Density) -> bool {
        self.points()
            .iter()
            .zip(&self.f_values)
            .all(|(p, &f)| model.value(p).to_bits() == f.to_bits())
    }

    fn nearest(&self, x: &[f64]) -> Option<(usize, f64)> {
        self.index.nearest(x)
    }
}

impl MedoidSpace for MedoidSet {
    fn n(&self) -> usize {
        self.len()
    }
    fn f(&self, i: usize) -> f64 {
        self.f_values[i]
    }
    fn dist(&self, i: usize, j: usize) -> f64 {
        crate::point::dist(self.point(i), self.point(j))
    }
    fn within(&self, i: usize, r: f64) -> Vec<usize> {
        self.index.within(self.point(i), r)
    }
}

/// A medoid run: the trajectory plus the visited medoid indices
/// (one per trajectory point from the first medoid onward).
#[derive(Debug, Clone)]
pub struct MedoidRun {
    pub trajectory: Trajectory,
    pub indices: Vec<usize>,
}

impl MedoidRun {
    pub fn endpoint_index(&self) -> Option<usize> {
        self.indices.last().copied()
    }
}

/// Where a medoid run starts: at a medoid, or at a free point whose density
/// value the caller supplies (the algorithms themselves never evaluate f
/// off the medoid set).
#[derive(Debug, Clone, Copy)]
pub enum Start<'a> {
    Medoid(usize),
    Free { x: &'a [f64], f: f64 },
}

fn start_of<'a>(set: &'a MedoidSet, start: Start<'_>) -> Result<(Point, f64, Option<usize>)> {
    match start {
        Start::Medoid(i) => {
            if i >= set.len() {
                return Err(Error::param("start", format!("medoid index {i} out of range")));
            }
            Ok((set.point(i).to_vec(), set.f_value(i), Some(i)))
        }
        Start::Free { x, f } => {
            if x.len() != set.dim() {
                return Err(Error::dim(set.dim(), x.len()));
            }
            Ok((x.to_vec(), f, None))
        }
    }
}

/// Argmax of f over `cands` (already ascending), ties to the smallest index.
fn argmax_f<S: MedoidSpace>(space: &S, cands: &[usize]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for &i in cands {
        match best {
            None => best = Some(i),
            Some(b) if space.f(i) > space.f(b) => best = Some(i),
            _ => {}
        }
    }
    best
}

fn max_shift_core<S: MedoidSpace>(space: &S, i0: usize, eps: f64) -> (Vec<usize>, Terminal) {
    let mut path = vec![i0];
    let mut cur = i0;
    for _ in 0..space.n() + 1 {
        let cands = space.within(cur, eps);
        let best = argmax_f(space, &cands).unwrap_or(cur);
        if space.f(best) <= space.f(cur) {
            return (path, Terminal::NearCritical);
        }
        cur = best;
        path.push(cur);
    }
    (path, Terminal::MaxIterations)
}

fn max_slope_core<S: MedoidSpace>(space: &S, i0: usize, eps: f64) -> (Vec<usize>, Terminal) {
    let mut path = vec![i0];
    let mut cur = i0;
    for _ in 0..space.n() + 1 {
        let cands = space.within(cur, eps);
        let mut best: Option<(usize, f64)> = None;
        for &i in &cands {
            let d = space.dist(cur, i);
            if d == 0.0 {
                continue;
            }
            let q = (space.f(i) - space.f(cur)) / d;
            match best {
                None => best = Some((i, q)),
                Some((_, bq)) if q > bq => best = Some((i, q)),
                _ => {}
            }
        }
        match best {
            Some((i, q)) if q > 0.0 => {
                cur = i;
                path.push(cur);
            }
            _ => return (path, Terminal::NearCritical),
        }
    }
    (path, Terminal::MaxIterations)
}

fn quick_shift_core<S: MedoidSpace>(
    space: &S,
    i0: usize,
    eps: f64,
    tie_break: impl Fn(usize, usize) -> std::cmp::Ordering,
) -> (Vec<usize>, Terminal) {
    let mut path = vec![i0];
    let mut cur = i0;
    for _ in 0..space.n() + 1 {
        let cands = space.within(cur, eps);
        let mut best: Option<(usize, f64)> = None;
        for &i in &cands {
            if space.f(i) <= space.f(cur) {
                continue;
            }
            let d = space.dist(cur, i);
            let replace = match best {
                None => true,
                Some((bi, bd)) => {
                    d < bd || (d == bd && tie_break(i, bi) == std::cmp::Ordering::Less)
                }
            };
            if replace {
                best = Some((i, d));
            }
        }
        match best {
            Some((i, _)) => {
                cur = i;
                path.push(cur);
            }
            None => return (path, Terminal::NearCritical),
        }
    }
    (path, Terminal::MaxIterations)
}

/// Medoid-shift objective around anchor `cur`:
/// weights `k(dist(j, cur)^2 / h^2)` over the in-bandwidth window, candidate
/// cost `sum_j w_j dist(j, y)^2`, argmin over all of Y.
fn medoid_shift_core<S: MedoidSpace>(
    space: &S,
    i0: usize,
    h: f64,
    profile: &KernelProfile,
    max_iters: usize,
) -> (Vec<usize>, Terminal) {
    let mut path = vec![i0];
    let mut cur = i0;
    for _ in 0..max_iters {
        let window = space.within(cur, h);
        let weights: Vec<(usize, f64)> = window
            .iter()
            .map(|&j| {
                let d = space.dist(j, cur);
                (j, profile.k(d * d / (h * h)))
            })
            .filter(|&(_, w)| w > 0.0)
            .collect();
        if weights.is_empty() {
            return (path, Terminal::Stalled);
        }
        let mut best = cur;
        let mut best_cost = f64::INFINITY;
        for y in 0..space.n() {
            let cost: f64 = weights
                .iter()
                .map(|&(j, w)| {
                    let d = space.dist(j, y);
                    w * d * d
                })
                .sum();
            if cost < best_cost {
                best_cost = cost;
                best = y;
            }
        }
        if best == cur {
            return (path, Terminal::NearCritical);
        }
        cur = best;
        path.push(cur);
    }
    (path, Terminal::MaxIterations)
}

fn record_run(set: &MedoidSet, start: Start<'_>, path: &[usize], terminal: Terminal) -> MedoidRun {
    let (x0, f0, _) = start_of(set, start).expect("validated by caller");
    let mut traj = Trajectory::start(x0, f0);
    let mut iter = path.iter();
    if matches!(start, Start::Medoid(_)) {
        iter.next(); // the start point already opens the trajectory
    }
    for &i in iter {
        traj.push(set.point(i).to_vec(), set.f_value(i), &[]);
    }
    traj.terminal = terminal;
    MedoidRun { trajectory: traj, indices: path.to_vec() }
}

fn enter_set(set: &MedoidSet, start: Start<'_>, eps: f64) -> Result<std::result::Result<usize, MedoidRun>> {
    let (x0, f0, idx) = start_of(set, start)?;
    if let Some(i) = idx {
        return Ok(Ok(i));
    }
    // Free start: hop to the f-argmax medoid within eps, or stall.
    let cands = set.radius_query(&x0, eps)?;
    match argmax_f(set, &cands) {
        Some(i) => Ok(Ok(i)),
        None => {
            let mut traj = Trajectory::start(x0, f0);
            traj.terminal = Terminal::Stalled;
            Ok(Err(MedoidRun { trajectory: traj, indices: vec![] }))
        }
    }
}

/// `x(k+1) in argmax f` over the medoids within `eps`; strictly increasing
/// density and finite termination.
pub fn medoid_max_shift(set: &MedoidSet, start: Start<'_>, eps: f64) -> Result<MedoidRun> {
    if eps <= 0.0 {
        return Err(Error::param("eps", "must be positive"));
    }
    let i0 = match enter_set(set, start, eps)? {
        Ok(i) => i,
        Err(run) => return Ok(run),
    };
    let (path, terminal) = max_shift_core(set, i0, eps);
    Ok(finish(set, start, path, terminal))
}

/// `x(k+1)` maximizes `(f(y) - f(x)) / ||y - x||` over in-ball medoids;
/// needs no regularization in the discrete setting.
pub fn medoid_max_slope_shift(set: &MedoidSet, start: Start<'_>, eps: f64) -> Result<MedoidRun> {
    if eps <= 0.0 {
        return Err(Error::param("eps", "must be positive"));
    }
    let i0 = match enter_set(set, start, eps)? {
        Ok(i) => i,
        Err(run) => return Ok(run),
    };
    let (path, terminal) = max_slope_core(set, i0, eps);
    Ok(finish(set, start, path, terminal))
}

/// Quick Shift: nearest in-ball medoid with strictly larger density;
/// distance ties break to the lexicographically smaller point.
pub fn quick_shift(set: &MedoidSet, start: Start<'_>, eps: f64) -> Result<MedoidRun> {
    if eps <= 0.0 {
        return Err(Error::param("eps", "must be positive"));
    }
    let i0 = match enter_set(set, start, eps)? {
        Ok(i) => i,
        Err(run) => return Ok(run),
    };
    let tie = |a: usize, b: usize| lex_cmp(set.point(a), set.point(b)).then(a.cmp(&b));
    let (path, terminal) = quick_shift_core(set, i0, eps, tie);
    Ok(finish(set, start, path, terminal))
}

/// Medoid Shift with weights anchored at the current point,
/// `k(||y* - x(k)||^2 / h^2)`. See [`medoid_shift_printed_target`] for the
/// printed-formula variant whose weights ignore the current point.
pub fn medoid_shift(
    set: &MedoidSet,
    start: Start<'_>,
    h: f64,
    profile: &KernelProfile,
) -> Result<MedoidRun> {
    if h <= 0.0 {
        return Err(Error::param("h", "must be positive"));
    }
    let i0 = match enter_set(set, start, h)? {
        Ok(i) => i,
        Err(run) => return Ok(run),
    };
    let (path, terminal) = medoid_shift_core(set, i0, h, profile, set.len() + 10);
    Ok(finish(set, start, path, terminal))
}

/// The medoid-shift formula as printed weights by `k(||y* - y||^2 / h^2)`,
/// making the argmin a single global target independent of the current
/// point. Exposed for comparison only.
pub fn medoid_shift_printed_target(
    set: &MedoidSet,
    h: f64,
    profile: &KernelProfile,
) -> Result<usize> {
    if h <= 0.0 {
        return Err(Error::param("h", "must be positive"));
    }
    let mut best = 0;
    let mut best_cost = f64::INFINITY;
    for y in 0..set.len() {
        let window = MedoidSpace::within(set, y, h);
        let cost: f64 = window
            .iter()
            .map(|&j| {
                let d = set.dist(j, y);
                d * d * profile.k(d * d / (h * h))
            })
            .sum();
        if cost < best_cost {
            best_cost = cost;
            best = y;
        }
    }
    Ok(best)
}

fn finish(set: &MedoidSet, start: Start<'_>, path: Vec<usize>, terminal: Terminal) -> MedoidRun {
    record_run(set, start, &path, terminal)
}

/// Measured covering radius: the worst distance from an in-level grid point
/// to its nearest medoid.
#[derive(Debug, Clone, Copy)]
pub struct CoveringRadius {
    pub level: f64,
    pub alpha: f64,
    pub grid_resolution: f64,
}

pub fn covering_radius(
    set: &MedoidSet,
    model: &dyn Density,
    level: f64,
    grid: &GridSpec,
) -> Result<CoveringRadius> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.dim() != set.dim() || model.dim() != set.dim() {
        return Err(Error::dim(set.dim(), grid.dim()));
    }
    let mut alpha: Option<f64> = None;
    for x in grid.iter() {
        if model.value(&x) >= level {
            let (_, d) = set.nearest(&x).expect("medoid set nonempty");
            alpha = Some(alpha.map_or(d, |a: f64| a.max(d)));
        }
    }
    match alpha {
        Some(alpha) => Ok(CoveringRadius { level, alpha, grid_resolution: grid.max_spacing() }),
        None => Err(Error::LevelTooHigh { level }),
    }
}
