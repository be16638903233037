//! The kernel K_ij(y) = ∂_i∂_j (4π|y|)^{-1} and the smooth cutoff family θ_R.
//!
//! Index convention: the API takes 0-based indices, so `i = 0` is the first
//! coordinate direction (written 1 in the usual mathematical notation).

use crate::error::{Error, Result};
use crate::geom::{dot, norm, Sym3, Vec3};
use crate::quad::SphereRule;
use std::f64::consts::PI;

const FOUR_PI: f64 = 4.0 * PI;

/// K_ij(y) = (−δ_ij|y|² + 3 y_i y_j) / (4π|y|⁵).
pub fn kernel_k(i: usize, j: usize, y: Vec3) -> Result<f64> {
    if i > 2 || j > 2 {
        return Err(Error::InvalidArgument(format!("kernel index ({i},{j}) out of range 0..3")));
    }
    let r2 = dot(y, y);
    if r2 == 0.0 {
        return Err(Error::Singular);
    }
    let delta = if i == j { 1.0 } else { 0.0 };
    let r = r2.sqrt();
    Ok((-delta * r2 + 3.0 * (y[i] * y[j])) / (FOUR_PI * r2 * r2 * r))
}

/// Σ_ij K_ij(z) S_ij for symmetric S. Returns 0 at z = 0.
#[inline]
pub fn kernel_contract(z: Vec3, s: &Sym3) -> f64 {
    let r2 = dot(z, z);
    if r2 == 0.0 {
        return 0.0;
    }
    let r = r2.sqrt();
    (3.0 * s.quad(z) - r2 * s.trace()) / (FOUR_PI * r2 * r2 * r)
}

/// Radial smooth step Θ: 1 on [0, 2], 0 on [4, ∞).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile;

#[inline]
fn g(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

impl Profile {
    pub const INNER: f64 = 2.0;
    pub const OUTER: f64 = 4.0;

    /// Θ(ρ) for ρ = |x| ≥ 0.
    #[inline]
    pub fn value(rho: f64) -> f64 {
        let s = 0.5 * (rho - Self::INNER);
        if s <= 0.0 {
            1.0
        } else if s >= 1.0 {
            0.0
        } else {
            let a = g(1.0 - s);
            a / (a + g(s))
        }
    }

    /// dΘ/dρ.
    #[inline]
    pub fn derivative(rho: f64) -> f64 {
        let s = 0.5 * (rho - Self::INNER);
        if s <= 0.0 || s >= 1.0 {
            return 0.0;
        }
        let a = g(1.0 - s);
        let b = g(s);
        let d = a + b;
        let ds = -a * b * (1.0 / ((1.0 - s) * (1.0 - s)) + 1.0 / (s * s)) / (d * d);
        0.5 * ds
    }

    /// sup |dΘ/dρ| from a dense sweep of the transition, padded to cover the sampling gap.
    pub fn gradient_bound() -> f64 {
        static BOUND: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
        *BOUND.get_or_init(|| {
            (0..=4000)
                .map(|k| Self::derivative(2.0 + 2.0 * k as f64 / 4000.0).abs())
                .fold(0.0, f64::max)
                * (1.0 + 1e-4)
        })
    }
}

/// θ_R(x) = Θ(|x|/R).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub r: f64,
}

impl CutoffSpec {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("cutoff scale must be positive, got {r}")));
        }
        Ok(Self { r })
    }

    #[inline]
    pub fn theta_radial(&self, rho: f64) -> f64 {
        Profile::value(rho / self.r)
    }

    #[inline]
    pub fn theta(&self, x: Vec3) -> f64 {
        self.theta_radial(norm(x))
    }

    /// d/dρ θ_R(ρ).
    #[inline]
    pub fn theta_radial_derivative(&self, rho: f64) -> f64 {
        Profile::derivative(rho / self.r) / self.r
    }

    /// ‖∇θ_R‖_∞ = C/R.
    pub fn gradient_bound(&self) -> f64 {
        Profile::gradient_bound() / self.r
    }
}

/// Ball B_R(x0) with its cutoff at scale R.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallSpec {
    pub x0: Vec3,
    pub r: f64,
    pub cutoff: CutoffSpec,
}

impl BallSpec {
    pub fn new(x0: Vec3, r: f64) -> Result<Self> {
        Ok(Self { x0, r, cutoff: CutoffSpec::new(r)? })
    }

    pub fn contains(&self, x: Vec3) -> bool {
        norm(crate::geom::sub(x, self.x0)) < self.r
    }

    /// θ_R(x0 − y).
    #[inline]
    pub fn theta_at(&self, y: Vec3) -> f64 {
        self.cutoff.theta(crate::geom::sub(self.x0, y))
    }
}

/// K_ij(x)(1 − θ_R(x)); the ball only supplies the scale.
pub fn kernel_k_truncated(i: usize, j: usize, x: Vec3, ball: &BallSpec) -> Result<f64> {
    let th = ball.cutoff.theta(x);
    if th == 1.0 {
        if i > 2 || j > 2 {
            return Err(Error::InvalidArgument(format!("kernel index ({i},{j}) out of range 0..3")));
        }
        return Ok(0.0);
    }
    Ok(kernel_k(i, j, x)? * (1.0 - th))
}

/// Sphere average with an order-n vs order-2n residual.
#[derive(Debug, Clone, Copy)]
pub struct SphereAverage {
    pub value: f64,
    pub residual: f64,
    pub flagged: bool,
}

/// Surface average of K_ij over the sphere |y| = r with an `n_quad`-point rule in cos(polar).
pub fn sphere_average_k(i: usize, j: usize, r: f64, n_quad: usize) -> Result<SphereAverage> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let n = n_quad.max(1);
    let avg = |n: usize| -> Result<f64> {
        let rule = SphereRule::new(n, 2 * n);
        let mut acc = 0.0;
        for (d, w) in rule.dirs.iter().zip(&rule.weights) {
            acc += w * kernel_k(i, j, [r * d[0], r * d[1], r * d[2]])?;
        }
        Ok(acc / FOUR_PI)
    };
    let value = avg(n)?;
    let fine = avg(2 * n)?;
    let residual = (value - fine).abs();
    let scale = 1.0 / (FOUR_PI * r * r * r);
    Ok(SphereAverage { value, residual, flagged: residual > 1e-10 * scale.max(1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert!((kernel_k(0, 0, [1.0, 0.0, 0.0]).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert_eq!(kernel_k(0, 1, [0.0, 0.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(kernel_k(0, 0, [0.0; 3]), Err(Error::Singular)));
    }

    #[test]
    fn contract_matches_components() {
        let s = Sym3([1.0, -2.0, 0.5, 0.3, -0.7, 1.1]);
        let z = [0.3, -1.2, 0.8];
        let mut direct = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                direct += kernel_k(i, j, z).unwrap() * s.get(i, j);
            }
        }
        assert!((direct - kernel_contract(z, &s)).abs() < 1e-14);
    }

    #[test]
    fn profile_edges_and_derivative() {
        assert_eq!(Profile::value(2.0), 1.0);
        assert_eq!(Profile::value(4.0), 0.0);
        assert!((Profile::value(3.0) - 0.5).abs() < 1e-15);
        for &rho in &[2.3, 2.9, 3.4, 3.8] {
            let e = 1e-6;
            let fd = (Profile::value(rho + e) - Profile::value(rho - e)) / (2.0 * e);
            assert!((fd - Profile::derivative(rho)).abs() < 1e-8);
        }
    }

    #[test]
    fn truncated_kernel_regions() {
        let ball = BallSpec::new([0.0; 3], 1.5).unwrap();
        assert_eq!(kernel_k_truncated(0, 0, [1.5, 0.0, 0.0], &ball).unwrap(), 0.0);
        let far = [0.0, 12.0, 0.0];
        assert_eq!(kernel_k_truncated(1, 1, far, &ball).unwrap(), kernel_k(1, 1, far).unwrap());
    }
}
