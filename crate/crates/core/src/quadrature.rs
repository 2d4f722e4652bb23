//! Composite-Simpson quadrature on boxes, used for mass checks and kernel
//! normalization cross-checks.

/// Composite Simpson on `[a, b]` with `n` subintervals (`n` made even).
pub fn simpson_1d(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n.max(2) } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Tensor-product Simpson on a 2-D box with `n x n` subintervals.
pub fn simpson_2d(
    f: impl Fn(f64, f64) -> f64,
    lo: (f64, f64),
    hi: (f64, f64),
    n: usize,
) -> f64 {
    simpson_1d(
        |x| simpson_1d(|y| f(x, y), lo.1, hi.1, n),
        lo.0,
        hi.0,
        n,
    )
}

/// Integral of a radial function `x -> g(||x||^2)` over R^d (support in the
/// unit ball is fine; `rmax` bounds the radial range). Uses the surface area
/// of the unit sphere times a radial Simpson rule.
pub fn radial_integral(g: impl Fn(f64) -> f64, dim: usize, rmax: f64, n: usize) -> f64 {
    let surface = unit_sphere_area(dim);
    surface * simpson_1d(|r| r.powi(dim as i32 - 1) * g(r * r), 0.0, rmax, n)
}

/// Surface area of the unit sphere S^{d-1} in R^d.
pub fn unit_sphere_area(dim: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(dim as f64 / 2.0) / gamma_half(dim)
}

/// Gamma(d/2) for integer d >= 1, exact via the recurrence.
pub fn gamma_half(d: usize) -> f64 {
    // Gamma(1/2) = sqrt(pi), Gamma(1) = 1, Gamma(z+1) = z Gamma(z).
    let mut z = d as f64 / 2.0;
    let mut acc = 1.0;
    while z > 1.0 {
        z -= 1.0;
        acc *= z;
    }
    if (z - 0.5).abs() < 1e-12 {
        acc * std::f64::consts::PI.sqrt()
    } else {
        acc // z == 1
    }
}
