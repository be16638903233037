use super::{
    check_divergence_claim, DecayClass, DriftSpec, Envelope, FieldMeta, ScalarField, SField,
    Support, VField, VecMode, VectorField,
};
use crate::error::{Error, Result};
use crate::geom::{dot, norm, sub, Vec3};
use crate::quad::GaussLegendre;
use rustfft::num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

/// Taylor–Green velocity e^{−2νt}(cos x₁ sin x₂, −sin x₁ cos x₂, 0).
pub struct TaylorGreen {
    pub nu: f64,
    meta: FieldMeta,
}

/// Taylor–Green pressure −(e^{−4νt}/4)(cos 2x₁ + cos 2x₂).
pub struct TaylorGreenPressure {
    pub nu: f64,
    meta: FieldMeta,
}

impl VectorField for TaylorGreen {
    fn eval(&self, x: Vec3, t: f64) -> Vec3 {
        let a = (-2.0 * self.nu * t).exp();
        let (s1, c1) = x[0].sin_cos();
        let (s2, c2) = x[1].sin_cos();
        [a * c1 * s2, -a * s1 * c2, 0.0]
    }

    fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    fn jacobian(&self, x: Vec3, t: f64) -> [[f64; 3]; 3] {
        let a = (-2.0 * self.nu * t).exp();
        let (s1, c1) = x[0].sin_cos();
        let (s2, c2) = x[1].sin_cos();
        [
            [-a * s1 * s2, a * c1 * c2, 0.0],
            [-a * c1 * c2, a * s1 * s2, 0.0],
            [0.0, 0.0, 0.0],
        ]
    }

    fn modes(&self, t: f64) -> Option<Vec<VecMode>> {
        let a = (-2.0 * self.nu * t).exp();
        let mut out = Vec::with_capacity(4);
        for s1 in [-1.0, 1.0] {
            for s2 in [-1.0, 1.0] {
                let z = Complex64::new(0.0, 0.0);
                out.push(VecMode {
                    k: [s1, s2, 0.0],
                    amp: [Complex64::new(0.0, -0.25 * s2 * a), Complex64::new(0.0, 0.25 * s1 * a), z],
                });
            }
        }
        Some(out)
    }
}

impl ScalarField for TaylorGreenPressure {
    fn eval(&self, x: Vec3, t: f64) -> f64 {
        -0.25 * (-4.0 * self.nu * t).exp() * ((2.0 * x[0]).cos() + (2.0 * x[1]).cos())
    }

    fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    fn gradient(&self, x: Vec3, t: f64) -> Vec3 {
        let a = 0.5 * (-4.0 * self.nu * t).exp();
        [a * (2.0 * x[0]).sin(), a * (2.0 * x[1]).sin(), 0.0]
    }
}

pub fn make_taylor_green(nu: f64) -> Result<(VField, SField)> {
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::InvalidArgument(format!("viscosity must be nonnegative, got {nu}")));
    }
    let mut meta = FieldMeta::new("taylor-green", DecayClass::BoundedPeriodic);
    meta.divergence_free = true;
    meta.sup_bound = 1.0;
    meta.bandwidth = 2f64.sqrt();
    meta.period = Some(2.0 * PI);
    let u = TaylorGreen { nu, meta };
    check_divergence_claim(&u)?;
    let mut pm = FieldMeta::new("taylor-green-pressure", DecayClass::BoundedPeriodic);
    pm.sup_bound = 0.5;
    pm.bandwidth = 2.0;
    pm.period = Some(2.0 * PI);
    Ok((Arc::new(u), Arc::new(TaylorGreenPressure { nu, meta: pm })))
}

/// u = ∇×(ψ e₃), ψ = a e^{−λt} exp(−|x − c|²/σ²).
pub struct GaussianVortex {
    pub amplitude: f64,
    pub width: f64,
    pub center: Vec3,
    pub decay_rate: f64,
    meta: FieldMeta,
}

impl GaussianVortex {
    fn psi(&self, z: Vec3, t: f64) -> f64 {
        let s2 = self.width * self.width;
        self.amplitude * (-self.decay_rate * t).exp() * (-dot(z, z) / s2).exp()
    }
}

impl VectorField for GaussianVortex {
    fn eval(&self, x: Vec3, t: f64) -> Vec3 {
        let z = sub(x, self.center);
        let q = 2.0 * self.psi(z, t) / (self.width * self.width);
        [-q * z[1], q * z[0], 0.0]
    }

    fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    fn jacobian(&self, x: Vec3, t: f64) -> [[f64; 3]; 3] {
        let z = sub(x, self.center);
        let s2 = self.width * self.width;
        let q = 2.0 * self.psi(z, t) / s2;
        // ∂_k q = −(2 z_k/σ²) q
        let dq = z.map(|zk| -2.0 * zk / s2 * q);
        [
            [-dq[0] * z[1], -dq[1] * z[1] - q, -dq[2] * z[1]],
            [dq[0] * z[0] + q, dq[1] * z[0], dq[2] * z[0]],
            [0.0; 3],
        ]
    }
}

pub fn make_gaussian_vortex(amplitude: f64, width: f64) -> Result<VField> {
    make_gaussian_vortex_at(amplitude, width, [0.0; 3], 0.0)
}

/// Gaussian vortex centred at `center` whose amplitude decays like e^{−λt}.
pub fn make_gaussian_vortex_at(amplitude: f64, width: f64, center: Vec3, decay_rate: f64) -> Result<VField> {
    if !(width > 0.0 && width.is_finite()) || !amplitude.is_finite() {
        return Err(Error::InvalidArgument(format!("bad vortex parameters a={amplitude}, sigma={width}")));
    }
    if !(decay_rate >= 0.0) {
        return Err(Error::InvalidArgument(format!("decay rate must be nonnegative, got {decay_rate}")));
    }
    let mut meta = FieldMeta::new("gaussian-vortex", DecayClass::Gaussian);
    meta.divergence_free = true;
    meta.sup_bound = amplitude.abs() * 2f64.sqrt() * (-0.5f64).exp() / width;
    meta.bandwidth = 10.0 / width;
    meta.support = Some(Support { center, radius: 6.0 * width });
    meta.envelope = Some(Envelope::GaussianDipole { amp: 2.0 * amplitude.abs() / width, width });
    let u = GaussianVortex { amplitude, width, center, decay_rate, meta };
    check_divergence_claim(&u)?;
    Ok(Arc::new(u))
}

/// Spatially constant vector field.
pub struct ConstantField {
    pub value: Vec3,
    meta: FieldMeta,
}

impl VectorField for ConstantField {
    fn eval(&self, _x: Vec3, _t: f64) -> Vec3 {
        self.value
    }

    fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    fn jacobian(&self, _x: Vec3, _t: f64) -> [[f64; 3]; 3] {
        [[0.0; 3]; 3]
    }

    fn modes(&self, _t: f64) -> Option<Vec<VecMode>> {
        if self.value == [0.0; 3] {
            return Some(Vec::new());
        }
        Some(vec![VecMode { k: [0.0; 3], amp: self.value.map(|v| Complex64::new(v, 0.0)) }])
    }
}

pub fn make_constant(value: Vec3) -> VField {
    let mut meta = FieldMeta::new("constant", DecayClass::BoundedPeriodic);
    meta.divergence_free = true;
    meta.sup_bound = norm(value);
    meta.bandwidth = 0.0;
    Arc::new(ConstantField { value, meta })
}

/// u ≡ 0, classed as compactly supported so every pressure route applies.
pub fn make_zero_vector() -> VField {
    let mut meta = FieldMeta::new("zero", DecayClass::CompactSupport);
    meta.divergence_free = true;
    meta.sup_bound = 0.0;
    meta.bandwidth = 0.0;
    meta.support = Some(Support { center: [0.0; 3], radius: 1.0 });
    meta.envelope = Some(Envelope::Compact { amp: 0.0 });
    Arc::new(ConstantField { value: [0.0; 3], meta })
}

pub struct ZeroScalar {
    meta: FieldMeta,
}

impl ScalarField for ZeroScalar {
    fn eval(&self, _x: Vec3, _t: f64) -> f64 {
        0.0
    }
    fn meta(&self) -> &FieldMeta {
        &self.meta
    }
    fn ball_integral_sq(&self, _c: Vec3, _r: f64, _t: f64) -> Option<f64> {
        Some(0.0)
    }
    fn gradient(&self, _x: Vec3, _t: f64) -> Vec3 {
        [0.0; 3]
    }
}

pub fn make_zero_scalar() -> SField {
    let mut meta = FieldMeta::new("zero", DecayClass::CompactSupport);
    meta.sup_bound = 0.0;
    meta.bandwidth = 0.0;
    meta.support = Some(Support { center: [0.0; 3], radius: 1.0 });
    Arc::new(ZeroScalar { meta })
}

/// Control field (x₁, 0, 0)·b(|x|/r) with b the exp(−1/(1−s²)) bump; not divergence-free.
pub struct NonDivFreeBump {
    pub radius: f64,
    meta: FieldMeta,
}

fn mollifier(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

impl VectorField for NonDivFreeBump {
    fn eval(&self, x: Vec3, _t: f64) -> Vec3 {
        [x[0] * mollifier(norm(x) / self.radius), 0.0, 0.0]
    }

    fn meta(&self) -> &FieldMeta {
        &self.meta
    }
}

pub fn make_nondivfree_bump(radius: f64) -> Result<VField> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("bump radius must be positive, got {radius}")));
    }
    let mut meta = FieldMeta::new("nondivfree-bump", DecayClass::CompactSupport);
    meta.divergence_free = false;
    meta.sup_bound = radius * (-1.0f64).exp();
    meta.bandwidth = 40.0 / radius;
    meta.support = Some(Support { center: [0.0; 3], radius });
    meta.envelope = Some(Envelope::Compact { amp: meta.sup_bound });
    Ok(Arc::new(NonDivFreeBump { radius, meta }))
}

/// ũ(x, t) = u(x − Φ(t), t) + φ(t).
pub struct DriftedVelocity {
    pub base: VField,
    pub drift: Arc<dyn DriftSpec>,
    meta: FieldMeta,
}

impl VectorField for DriftedVelocity {
    fn eval(&self, x: Vec3, t: f64) -> Vec3 {
        let v = self.base.eval(sub(x, self.drift.big_phi(t)), t);
        let p = self.drift.phi(t);
        [v[0] + p[0], v[1] + p[1], v[2] + p[2]]
    }

    fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    fn jacobian(&self, x: Vec3, t: f64) -> [[f64; 3]; 3] {
        self.base.jacobian(sub(x, self.drift.big_phi(t)), t)
    }

    fn modes(&self, t: f64) -> Option<Vec<VecMode>> {
        let big = self.drift.big_phi(t);
        let mut out: Vec<VecMode> = self
            .base
            .modes(t)?
            .into_iter()
            .map(|m| {
                let ph = -dot(m.k, big);
                let e = Complex64::new(ph.cos(), ph.sin());
                VecMode { k: m.k, amp: m.amp.map(|a| a * e) }
            })
            .collect();
        let phi = self.drift.phi(t);
        let add = phi.map(|v| Complex64::new(v, 0.0));
        match out.iter_mut().find(|m| m.k == [0.0; 3]) {
            Some(m) => (0..3).for_each(|c| m.amp[c] += add[c]),
            None => out.push(VecMode { k: [0.0; 3], amp: add }),
        }
        Some(out)
    }
}

/// p̃(x, t) = p(x − Φ(t), t) − φ′(t)·x.
pub struct DriftedPressure {
    pub base: SField,
    pub drift: Arc<dyn DriftSpec>,
    meta: FieldMeta,
}

impl ScalarField for DriftedPressure {
    fn eval(&self, x: Vec3, t: f64) -> f64 {
        self.base.eval(sub(x, self.drift.big_phi(t)), t) - dot(self.drift.dphi(t), x)
    }

    fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    fn gradient(&self, x: Vec3, t: f64) -> Vec3 {
        let g = self.base.gradient(sub(x, self.drift.big_phi(t)), t);
        let d = self.drift.dphi(t);
        [g[0] - d[0], g[1] - d[1], g[2] - d[2]]
    }
}

/// Wrap u with a drift; the result keeps Fourier data when u has it.
pub fn drifted_velocity(u: VField, drift: Arc<dyn DriftSpec>) -> VField {
    let m = u.meta();
    let mut meta = m.clone();
    meta.name = format!("{}+drift", m.name);
    meta.sup_bound = m.sup_bound + drift.sup_bound();
    meta.decay_class = if drift.sup_bound() == 0.0 {
        m.decay_class
    } else if u.modes(0.0).is_some() {
        DecayClass::BoundedPeriodic
    } else {
        DecayClass::UlocOnly
    };
    if meta.decay_class != m.decay_class {
        meta.support = None;
        meta.envelope = None;
    }
    Arc::new(DriftedVelocity { base: u, drift, meta })
}

/// Transgalilean transform (u, p) ↦ (u(x−Φ)+φ, p(x−Φ) − φ′·x); the drift is validated on [0, 1].
pub fn inject_drift(u: VField, p: SField, drift: Arc<dyn DriftSpec>) -> Result<(VField, SField)> {
    super::validate_drift(drift.as_ref(), 1.0)?;
    let mut pm = p.meta().clone();
    pm.name = format!("{}+drift", pm.name);
    pm.decay_class = DecayClass::UlocOnly;
    pm.period = None;
    let pt: SField = Arc::new(DriftedPressure { base: p, drift: drift.clone(), meta: pm });
    Ok((drifted_velocity(u, drift), pt))
}

/// Indicator of the unit-radius cylinder along the x₁ axis.
pub struct CylinderIndicator {
    meta: FieldMeta,
}

/// Area of the intersection of discs with radii a, b and centre distance d.
fn lens_area(a: f64, b: f64, d: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 || d >= a + b {
        return 0.0;
    }
    if d <= (a - b).abs() {
        let m = a.min(b);
        return PI * m * m;
    }
    let ca = ((d * d + a * a - b * b) / (2.0 * d * a)).clamp(-1.0, 1.0);
    let cb = ((d * d + b * b - a * a) / (2.0 * d * b)).clamp(-1.0, 1.0);
    let k = ((-d + a + b) * (d + a - b) * (d - a + b) * (d + a + b)).max(0.0);
    a * a * ca.acos() + b * b * cb.acos() - 0.5 * k.sqrt()
}

impl ScalarField for CylinderIndicator {
    fn eval(&self, x: Vec3, _t: f64) -> f64 {
        if x[1] * x[1] + x[2] * x[2] <= 1.0 {
            1.0
        } else {
            0.0
        }
    }

    fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    fn gradient(&self, _x: Vec3, _t: f64) -> Vec3 {
        [0.0; 3]
    }

    fn ball_integral_sq(&self, c: Vec3, r: f64, _t: f64) -> Option<f64> {
        if r <= 0.0 {
            return Some(0.0);
        }
        let d = (c[1] * c[1] + c[2] * c[2]).sqrt();
        if d < 1e-14 {
            let m = r.min(1.0);
            return Some(4.0 * PI / 3.0 * (r.powi(3) - (r * r - m * m).max(0.0).powf(1.5)));
        }
        // slices along x₁: disc of radius √(r²−z²) at offset d against the unit disc
        let mut cuts = vec![-r, r];
        for a in [(d - 1.0).abs(), d + 1.0] {
            if a < r {
                let z = (r * r - a * a).sqrt();
                cuts.push(z);
                cuts.push(-z);
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let gl = GaussLegendre::cached(96);
        let mut v = 0.0;
        for w in cuts.windows(2) {
            if w[1] - w[0] < 1e-15 {
                continue;
            }
            // z = mid + half·sin(πs/2) clusters nodes at the kinks
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for (s, ws) in gl.on(-1.0, 1.0) {
                let arg = 0.5 * PI * s;
                let z = mid + half * arg.sin();
                let jac = half * 0.5 * PI * arg.cos();
                v += ws * jac * lens_area((r * r - z * z).max(0.0).sqrt(), 1.0, d);
            }
        }
        Some(v)
    }
}

pub fn make_cylinder_indicator() -> SField {
    let mut meta = FieldMeta::new("cylinder", DecayClass::UlocOnly);
    meta.sup_bound = 1.0;
    meta.bandwidth = f64::INFINITY;
    Arc::new(CylinderIndicator { meta })
}

/// Σ_{k=1}^{k_max} χ_{B_k((2^k, 0, 0))}.
pub struct DyadicBalls {
    pub k_max: u32,
    meta: FieldMeta,
}

impl DyadicBalls {
    pub fn center(k: u32) -> Vec3 {
        [2f64.powi(k as i32), 0.0, 0.0]
    }

    /// Beyond this distance from the origin the truncated field vanishes.
    pub fn truncation_radius(&self) -> f64 {
        2f64.powi(self.k_max as i32) + self.k_max as f64
    }

    fn balls(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (1..=self.k_max).map(|k| (2f64.powi(k as i32), k as f64))
    }
}

/// π ∫ max(0, min_i q_i(x)) dx for q_i(x) = r_i² − (x − c_i)²: the volume of
/// the intersection of balls centred on one axis.
fn axial_intersection_volume(balls: &[(f64, f64)]) -> f64 {
    let lo = balls.iter().map(|&(c, r)| c - r).fold(f64::NEG_INFINITY, f64::max);
    let hi = balls.iter().map(|&(c, r)| c + r).fold(f64::INFINITY, f64::min);
    if hi <= lo {
        return 0.0;
    }
    let mut cuts = vec![lo, hi];
    for (i, &(ci, ri)) in balls.iter().enumerate() {
        for &(cj, rj) in &balls[i + 1..] {
            // q_i = q_j is linear in x
            let den = 2.0 * (ci - cj);
            if den.abs() > 1e-300 {
                let x = (ri * ri - rj * rj + cj * cj - ci * ci) / -den;
                if x > lo && x < hi {
                    cuts.push(x);
                }
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut v = 0.0;
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let &(c, r) = balls
            .iter()
            .min_by(|a, b| {
                let qa = a.1 * a.1 - (mid - a.0).powi(2);
                let qb = b.1 * b.1 - (mid - b.0).powi(2);
                qa.partial_cmp(&qb).unwrap()
            })
            .unwrap();
        // ∫ r² − (x − c)² dx
        let prim = |x: f64| r * r * x - (x - c).powi(3) / 3.0;
        v += prim(w[1]) - prim(w[0]);
    }
    PI * v
}

impl ScalarField for DyadicBalls {
    fn eval(&self, x: Vec3, _t: f64) -> f64 {
        self.balls()
            .filter(|&(c, r)| norm(sub(x, [c, 0.0, 0.0])) <= r)
            .count() as f64
    }

    fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    fn gradient(&self, _x: Vec3, _t: f64) -> Vec3 {
        [0.0; 3]
    }

    /// Exact for centres on the x₁ axis (f² = Σ_{i,j} χ_i χ_j, axial intersections).
    fn ball_integral_sq(&self, c: Vec3, r: f64, _t: f64) -> Option<f64> {
        if c[1] != 0.0 || c[2] != 0.0 {
            return None;
        }
        let near: Vec<(f64, f64)> =
            self.balls().filter(|&(bc, br)| (bc - c[0]).abs() < br + r).collect();
        let mut total = 0.0;
        for (i, &bi) in near.iter().enumerate() {
            total += axial_intersection_volume(&[(c[0], r), bi]);
            for &bj in &near[i + 1..] {
                total += 2.0 * axial_intersection_volume(&[(c[0], r), bi, bj]);
            }
        }
        Some(total)
    }
}

pub fn make_dyadic_balls(k_max: u32) -> Result<SField> {
    if k_max == 0 || k_max > 40 {
        return Err(Error::InvalidArgument(format!("k_max must be in 1..=40, got {k_max}")));
    }
    let mut meta = FieldMeta::new("dyadic-balls", DecayClass::UlocOnly);
    meta.sup_bound = 2.0;
    meta.bandwidth = f64::INFINITY;
    let f = DyadicBalls { k_max, meta };
    let rt = f.truncation_radius();
    let mut f = f;
    f.meta.support = Some(Support { center: [0.0; 3], radius: rt });
    Ok(Arc::new(f))
}
