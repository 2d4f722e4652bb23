//! Compactly supported kernel profiles and their shadows.
//!
//! A profile is the function `k` in `K(x) = normalizer(d) * k(||x||^2)`.
//! The family implemented here is `k(u) = (1-u)^p` on `[0,1]`: uniform
//! (p = 0), Epanechnikov (p = 1), biweight (p = 2), triweight (p = 3, the
//! default). The shadow of degree p is the normalized degree-(p+1) kernel,
//! and every normalization constant is closed-form in the gamma function.

use crate::error::{Error, Result};
use crate::quadrature::gamma_half;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelProfile {
    degree: u32,
}

impl KernelProfile {
    pub const fn polynomial(degree: u32) -> Self {
        KernelProfile { degree }
    }

    /// Default profile: `k(u) = (1-u)^3`. Value, first, and second
    /// derivative all vanish at the support boundary, so the kernel is C^2.
    pub const fn triweight() -> Self {
        KernelProfile::polynomial(3)
    }

    /// Flat profile `k(u) = 1` on `[0,1]`. Not even continuous at the
    /// boundary; kept for tests and for the mean-shift weighted-mean form.
    pub const fn uniform() -> Self {
        KernelProfile::polynomial(0)
    }

    pub const fn epanechnikov() -> Self {
        KernelProfile::polynomial(1)
    }

    pub const fn biweight() -> Self {
        KernelProfile::polynomial(2)
    }

    pub fn name(&self) -> String {
        match self.degree {
            0 => "uniform".into(),
            1 => "epanechnikov".into(),
            2 => "biweight".into(),
            3 => "triweight".into(),
            p => format!("poly{p}"),
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Number of continuous derivatives of the kernel across the support
    /// boundary; >= 2 is required for Hessian estimation.
    pub fn smoothness_class(&self) -> u32 {
        self.degree.saturating_sub(1)
    }

    /// Raw profile value `k(u)`, nonincreasing, zero for `u >= 1`
    /// (the uniform profile closes the support at `u = 1`).
    #[inline]
    pub fn k(&self, u: f64) -> f64 {
        if self.degree == 0 {
            return if u <= 1.0 { 1.0 } else { 0.0 };
        }
        if u >= 1.0 {
            0.0
        } else {
            (1.0 - u).powi(self.degree as i32)
        }
    }

    /// First derivative `k'(u)`.
    #[inline]
    pub fn dk(&self, u: f64) -> f64 {
        let p = self.degree;
        if p == 0 || u >= 1.0 {
            0.0
        } else {
            -(p as f64) * (1.0 - u).powi(p as i32 - 1)
        }
    }

    /// Second derivative `k''(u)`.
    #[inline]
    pub fn d2k(&self, u: f64) -> f64 {
        let p = self.degree;
        if p <= 1 || u >= 1.0 {
            0.0
        } else {
            (p as f64) * (p as f64 - 1.0) * (1.0 - u).powi(p as i32 - 2)
        }
    }

    /// Constant making `K(x) = normalizer(d) * k(||x||^2)` integrate to one
    /// over R^d: `Gamma(d/2 + p + 1) / (Gamma(p + 1) pi^{d/2})`.
    pub fn normalizer(&self, dim: usize) -> f64 {
        let p = self.degree as usize;
        gamma_half(dim + 2 * (p + 1)) / (factorial(p) * std::f64::consts::PI.powf(dim as f64 / 2.0))
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// The shadow pairing of a profile: `l(u) = c * integral_u^inf k_eff(v) dv`
/// with `k_eff` the normalized base profile and `c` chosen so that
/// `L(x) = l(||x||^2)` integrates to one. The shift `x + MS_h(x)` of the
/// kernel-weighted sample mean then equals
/// `x + (h^2 / 2c) grad(shadow KDE) / base KDE` exactly.
#[derive(Debug, Clone, Copy)]
pub struct ShadowProfile {
    pub base: KernelProfile,
    shadow: KernelProfile,
}

impl ShadowProfile {
    /// The shadow kernel's own profile (degree p + 1, normalized).
    pub fn kernel(&self) -> KernelProfile {
        self.shadow
    }

    /// Shadow normalization constant in dimension `dim`:
    /// `(d + 2p + 2) / 2` for the polynomial family.
    pub fn c(&self, dim: usize) -> f64 {
        (dim as f64 + 2.0 * self.base.degree() as f64 + 2.0) / 2.0
    }

    /// The fully normalized shadow profile value `l(u)` in dimension `dim`.
    pub fn l(&self, u: f64, dim: usize) -> f64 {
        self.shadow.normalizer(dim) * self.shadow.k(u)
    }
}

/// Construct the shadow of a profile.
pub fn shadow(profile: &KernelProfile) -> Result<ShadowProfile> {
    // Every polynomial profile is integrable; the guard is for future
    // profile families.
    if profile.normalizer(1) <= 0.0 || !profile.normalizer(1).is_finite() {
        return Err(Error::param("profile", "profile is not integrable"));
    }
    Ok(ShadowProfile {
        base: *profile,
        shadow: KernelProfile::polynomial(profile.degree() + 1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::radial_integral;

    #[test]
    fn triweight_normalizer_1d_is_35_over_32() {
        let k = KernelProfile::triweight();
        assert!((k.normalizer(1) - 35.0 / 32.0).abs() < 1e-14);
    }

    #[test]
    fn kernels_integrate_to_one() {
        for p in [0u32, 1, 2, 3, 4] {
            let k = KernelProfile::polynomial(p);
            for d in 1..=3usize {
                let mass = radial_integral(|u| k.normalizer(d) * k.k(u), d, 1.0, 4000);
                assert!(
                    (mass - 1.0).abs() < 1e-8,
                    "profile p={p} d={d}: mass {mass}"
                );
            }
        }
    }

    #[test]
    fn flat_shadow_is_linear_tail() {
        // For k(u) = 1 on [0,1], the tail integral is (1-u)_+, so the shadow
        // profile must be proportional to (1-u), i.e. Epanechnikov.
        let s = shadow(&KernelProfile::uniform()).unwrap();
        for d in 1..=3usize {
            let c = s.c(d);
            let keff = |u: f64| KernelProfile::uniform().normalizer(d) * KernelProfile::uniform().k(u);
            for u in [0.0, 0.2, 0.5, 0.9, 1.0, 1.5] {
                // tail integral of k_eff from u
                let tail = if u >= 1.0 { 0.0 } else { keff(0.0) * (1.0 - u) };
                assert!(
                    (s.l(u, d) - c * tail).abs() < 1e-12,
                    "d={d} u={u}: l={} vs c*tail={}",
                    s.l(u, d),
                    c * tail
                );
            }
        }
    }

    #[test]
    fn triweight_shadow_is_quartic_tail() {
        // l(u) = c * integral_u^1 k_eff(v) dv with k_eff = a_K (1-v)^3, so
        // l(u) = c * a_K * (1-u)^4 / 4. Checked pointwise and by quadrature.
        let base = KernelProfile::triweight();
        let s = shadow(&base).unwrap();
        for d in 1..=3usize {
            let c = s.c(d);
            let ak = base.normalizer(d);
            for u in [0.0_f64, 0.1, 0.33, 0.66, 0.99, 1.0] {
                let tail = if u >= 1.0 { 0.0 } else { ak * (1.0 - u).powi(4) / 4.0 };
                assert!((s.l(u, d) - c * tail).abs() < 1e-12);
            }
            let mass = radial_integral(|u| s.l(u, d), d, 1.0, 4000);
            assert!((mass - 1.0).abs() < 1e-10, "shadow mass d={d}: {mass}");
        }
    }

    #[test]
    fn shadow_constant_closed_form() {
        // d=1, p=3: c = (1 + 8) / 2 = 4.5
        let s = shadow(&KernelProfile::triweight()).unwrap();
        assert!((s.c(1) - 4.5).abs() < 1e-14);
        assert!((s.c(2) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn profile_derivatives_are_consistent() {
        let k = KernelProfile::triweight();
        for u in [0.05, 0.3, 0.7, 0.95] {
            let h = 1e-6;
            let dk_fd = (k.k(u + h) - k.k(u - h)) / (2.0 * h);
            assert!((k.dk(u) - dk_fd).abs() < 1e-8);
            let d2k_fd = (k.dk(u + h) - k.dk(u - h)) / (2.0 * h);
            assert!((k.d2k(u) - d2k_fd).abs() < 1e-8);
        }
        // C^2 at the boundary: value and both derivatives vanish at u = 1.
        assert_eq!(k.k(1.0), 0.0);
        assert_eq!(k.dk(1.0), 0.0);
        assert_eq!(k.d2k(1.0), 0.0);
        assert!(k.smoothness_class() >= 2);
    }
}
