//! Normalized radial test bumps β with ∫β = 1, and the kernel W = ∇³N_β
//! (N_β the Newtonian potential of β) used to pair pressures with ∂_kβ.

use crate::error::{Error, Result};
use crate::geom::{norm, scale, sub, Sym3, Vec3};
use crate::quad::GaussLegendre;
use std::f64::consts::PI;

/// m(s) = exp(−1/(1−s²)) on [0, 1), zero beyond.
#[inline]
fn m0(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// (m, m′, m″) at s.
#[inline]
fn m_derivs(s: f64) -> [f64; 3] {
    if s >= 1.0 {
        return [0.0; 3];
    }
    let q = 1.0 - s * s;
    let m = (-1.0 / q).exp();
    let g = -2.0 * s / (q * q);
    let dg = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
    [m, m * g, m * (g * g + dg)]
}

/// β(x) = A·m(|x − c|/a), normalized so that ∫β = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestBump {
    pub center: Vec3,
    pub radius: f64,
    amp: f64,
}

fn unit_mass() -> f64 {
    static MASS: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *MASS.get_or_init(|| {
        let gl = GaussLegendre::new(200);
        4.0 * PI * gl.integrate(0.0, 1.0, |s| s * s * m0(s))
    })
}

impl TestBump {
    pub fn new(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("bump radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius, amp: 1.0 / (unit_mass() * radius.powi(3)) })
    }

    /// Default bump: centred at the origin, supported in B₁(0).
    pub fn standard() -> Self {
        Self::new([0.0; 3], 1.0).expect("unit bump")
    }

    /// Radial profile b(r) with first and second derivatives.
    #[inline]
    pub fn radial(&self, r: f64) -> [f64; 3] {
        let [m, dm, ddm] = m_derivs(r / self.radius);
        let a = self.radius;
        [self.amp * m, self.amp * dm / a, self.amp * ddm / (a * a)]
    }

    pub fn value(&self, x: Vec3) -> f64 {
        self.amp * m0(norm(sub(x, self.center)) / self.radius)
    }

    pub fn gradient(&self, x: Vec3) -> Vec3 {
        let z = sub(x, self.center);
        let r = norm(z);
        if r == 0.0 || r >= self.radius {
            return [0.0; 3];
        }
        scale(z, self.radial(r)[1] / r)
    }

    pub fn laplacian(&self, x: Vec3) -> f64 {
        let r = norm(sub(x, self.center));
        let [_, d1, d2] = self.radial(r);
        if r < 1e-12 * self.radius {
            3.0 * d2
        } else {
            d2 + 2.0 * d1 / r
        }
    }

    /// Mass of β inside radius r around its centre.
    pub fn enclosed_mass(&self, r: f64) -> f64 {
        if r >= self.radius {
            return 1.0;
        }
        if r <= 0.0 {
            return 0.0;
        }
        let gl = GaussLegendre::cached(64);
        let f = |s: f64| 4.0 * PI * s * s * self.radial(s)[0];
        if r <= 0.5 * self.radius {
            gl.integrate(0.0, r, f)
        } else {
            1.0 - gl.integrate(r, self.radius, f)
        }
    }

    /// Σ_ij f_ij W_ijk(y − c) for k = 1..3, W = ∂_i∂_j∂_k N_β.
    pub fn w_contract(&self, y: Vec3, f: &Sym3) -> Vec3 {
        let z = sub(y, self.center);
        let r = norm(z);
        let a_r = self.radius;
        if r < 1e-3 * a_r {
            // a = −⅖β₂r², b′ = −⅖β₂r, a′ = −⅘β₂r with β₂ = b″(0)/2, so
            // f:W = −⅘β₂ f z − ⅖β₂ tr(f) z
            let beta2 = 0.5 * self.radial(0.0)[2];
            let fz = f.apply(z);
            let tr = f.trace();
            return [0, 1, 2].map(|k| -0.8 * beta2 * fz[k] - 0.4 * beta2 * tr * z[k]);
        }
        let yh = scale(z, 1.0 / r);
        let [beta, dbeta, _] = self.radial(r);
        let mass = self.enclosed_mass(r);
        let c3 = mass / (4.0 * PI * r * r * r);
        let a = -beta + 3.0 * c3;
        let db = -beta / r + 3.0 * c3 / r;
        let da = -dbeta + 3.0 * beta / r - 9.0 * c3 / r;
        let fy = f.apply(yh);
        let q = crate::geom::dot(yh, fy);
        let tr = f.trace();
        let c1 = da - 2.0 * a / r;
        let c2 = 2.0 * a / r;
        [0, 1, 2].map(|k| c1 * q * yh[k] + c2 * fy[k] + db * tr * yh[k])
    }

    /// β̂(ξ) = ∫β(x − c) e^{−iξ·(x−c)} dx for |ξ| = k (real, radial).
    pub fn fourier(&self, k: f64) -> f64 {
        if k == 0.0 {
            return 1.0;
        }
        let n = 96 + (2.0 * k * self.radius) as usize;
        let gl = GaussLegendre::cached(n.min(2000));
        gl.integrate(0.0, self.radius, |r| {
            let kr = k * r;
            let sinc = if kr < 1e-8 { 1.0 - kr * kr / 6.0 } else { kr.sin() / kr };
            4.0 * PI * r * r * self.radial(r)[0] * sinc
        })
    }

    /// The same bump rescaled: β_R(x) = R⁻³ β(x/R).
    pub fn scaled(&self, r: f64) -> Result<ScaledBump> {
        ScaledBump::new(*self, r)
    }
}

/// β_R(x) = R⁻³β(x/R): a bump of radius aR centred at R·c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledBump {
    pub base: TestBump,
    pub r: f64,
    pub bump: TestBump,
}

impl ScaledBump {
    pub fn new(base: TestBump, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {r}")));
        }
        let bump = TestBump::new(scale(base.center, r), base.radius * r)?;
        Ok(Self { base, r, bump })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{ball_rule, SphereRule};

    #[test]
    fn unit_integral_and_scaling() {
        let s = SphereRule::new(8, 16);
        for (c, a) in [([0.0; 3], 1.0), ([0.3, -0.2, 1.0], 2.5)] {
            let b = TestBump::new(c, a).unwrap();
            let gl = GaussLegendre::new(200);
            let mass: f64 = gl.integrate(0.0, a, |r| 4.0 * PI * r * r * b.radial(r)[0]);
            assert!((mass - 1.0).abs() < 1e-12);
            let q: f64 = ball_rule(c, a, 120, &s).iter().map(|(y, w)| w * b.value(*y)).sum();
            assert!((q - 1.0).abs() < 1e-10);
        }
        let sb = TestBump::standard().scaled(8.0).unwrap();
        let x = [1.0, 2.0, -0.5];
        assert!((sb.bump.value(x) - TestBump::standard().value(scale(x, 1.0 / 8.0)) / 512.0).abs() < 1e-18);
    }

    #[test]
    fn derivatives_match_differences() {
        let b = TestBump::new([0.1, 0.0, -0.2], 1.3).unwrap();
        let x = [0.4, 0.3, 0.1];
        let e = 1e-5;
        let g = b.gradient(x);
        let mut lap = 0.0;
        for d in 0..3 {
            let mut p = x;
            let mut m = x;
            p[d] += e;
            m[d] -= e;
            assert!(((b.value(p) - b.value(m)) / (2.0 * e) - g[d]).abs() < 1e-7);
            lap += (b.value(p) - 2.0 * b.value(x) + b.value(m)) / (e * e);
        }
        assert!((lap - b.laplacian(x)).abs() < 1e-3 * b.laplacian(x).abs().max(1.0));
    }

    #[test]
    fn w_kernel_matches_point_source_outside() {
        // outside the support N_β = 1/(4π|z|), so W = ∇K
        let b = TestBump::standard();
        let f = Sym3([0.3, -1.0, 0.7, 0.2, -0.4, 0.5]);
        let y = [1.7, -0.9, 1.2];
        let w = b.w_contract(y, &f);
        let e = 1e-5;
        for k in 0..3 {
            let mut p = y;
            let mut m = y;
            p[k] += e;
            m[k] -= e;
            let fd = (crate::kernels::kernel_contract(p, &f) - crate::kernels::kernel_contract(m, &f)) / (2.0 * e);
            assert!((fd - w[k]).abs() < 1e-8, "k={k} fd={fd} w={}", w[k]);
        }
    }

    #[test]
    fn w_kernel_continuous_at_taylor_switch() {
        let b = TestBump::standard();
        let f = Sym3([1.0, 0.5, -0.2, 0.3, 0.1, -0.6]);
        let dir = [0.6, 0.0, 0.8];
        // W is linear in r near 0, so compare W/r across the switch
        let inside = scale(b.w_contract(scale(dir, 0.999e-3), &f), 1.0 / 0.999e-3);
        let outside = scale(b.w_contract(scale(dir, 1.001e-3), &f), 1.0 / 1.001e-3);
        for k in 0..3 {
            assert!((inside[k] - outside[k]).abs() < 1e-5 * (1.0 + outside[k].abs()), "{inside:?} {outside:?}");
        }
    }

    #[test]
    fn fourier_transform_small_k() {
        let b = TestBump::new([0.0; 3], 1.5).unwrap();
        assert!((b.fourier(1e-9) - 1.0).abs() < 1e-12);
        assert!(b.fourier(3.0) < 1.0);
    }
}
