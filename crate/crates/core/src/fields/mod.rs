//! Field representations: analytic evaluators with decay metadata, optional
//! finite Fourier data, and sampled grids.

mod drift_spec;
mod generators;
mod sampled;

pub use drift_spec::{
    validate_drift, DriftSpec, NegatedDrift, PiecewiseLinearDrift, SinDrift, ZeroDrift,
};
pub use generators::{
    drifted_velocity, inject_drift, make_constant, make_cylinder_indicator, make_dyadic_balls, make_gaussian_vortex,
    make_gaussian_vortex_at, make_nondivfree_bump, make_taylor_green, make_zero_scalar,
    make_zero_vector, ConstantField, CylinderIndicator, DriftedPressure, DriftedVelocity,
    DyadicBalls, GaussianVortex, NonDivFreeBump, TaylorGreen, TaylorGreenPressure, ZeroScalar,
};
pub use sampled::{sample, sample_scalar, sample_vector, Grid3, Rank, SampledField, TimeGrid};

use crate::error::{Error, Result};
use crate::geom::{Sym3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Decay class of a field; selects the far-field strategy and tail bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayClass {
    CompactSupport,
    Gaussian,
    BoundedPeriodic,
    UlocOnly,
}

impl DecayClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            DecayClass::CompactSupport => "compact-support",
            DecayClass::Gaussian => "gaussian",
            DecayClass::BoundedPeriodic => "bounded-periodic",
            DecayClass::UlocOnly => "uloc-only",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "compact-support" => DecayClass::CompactSupport,
            "gaussian" => DecayClass::Gaussian,
            "bounded-periodic" => DecayClass::BoundedPeriodic,
            "uloc-only" => DecayClass::UlocOnly,
            _ => return None,
        })
    }

    pub fn decays(&self) -> bool {
        matches!(self, DecayClass::CompactSupport | DecayClass::Gaussian)
    }
}

/// Region outside of which the field is negligible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub center: Vec3,
    pub radius: f64,
}

/// Pointwise bound |u(x)| ≤ env(|x − center|), used for rigorous tail bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Envelope {
    /// amp · (r/width) · exp(−r²/width²)
    GaussianDipole { amp: f64, width: f64 },
    /// `amp` inside the support radius, zero beyond
    Compact { amp: f64 },
}

impl Envelope {
    pub fn at(&self, r: f64, support_radius: f64) -> f64 {
        match *self {
            Envelope::GaussianDipole { amp, width } => {
                let s = r / width;
                amp * s * (-s * s).exp()
            }
            Envelope::Compact { amp } => {
                if r <= support_radius {
                    amp
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub name: String,
    pub decay_class: DecayClass,
    pub divergence_free: bool,
    /// sup over space-time of |u|
    pub sup_bound: f64,
    /// wavenumber beyond which the spectrum is negligible
    pub bandwidth: f64,
    pub support: Option<Support>,
    pub envelope: Option<Envelope>,
    pub period: Option<f64>,
}

impl FieldMeta {
    pub fn new(name: &str, decay_class: DecayClass) -> Self {
        Self {
            name: name.to_string(),
            decay_class,
            divergence_free: false,
            sup_bound: 1.0,
            bandwidth: 1.0,
            support: None,
            envelope: None,
            period: None,
        }
    }
}

/// One Fourier mode of a vector field: amp · e^{i k·x}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VecMode {
    pub k: Vec3,
    pub amp: [Complex64; 3],
}

/// One Fourier mode of a symmetric tensor field: amp · e^{i k·x}, `Sym3` ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorMode {
    pub k: Vec3,
    pub amp: [Complex64; 6],
}

impl TensorMode {
    pub fn real_part(&self) -> Sym3 {
        Sym3(self.amp.map(|c| c.re))
    }

    pub fn imag_part(&self) -> Sym3 {
        Sym3(self.amp.map(|c| c.im))
    }
}

fn same_k(a: Vec3, b: Vec3) -> bool {
    (0..3).all(|i| (a[i] - b[i]).abs() < 1e-12)
}

/// Merge modes with equal wavevectors and drop vanishing ones.
pub fn merge_tensor_modes(modes: Vec<TensorMode>) -> Vec<TensorMode> {
    let mut out: Vec<TensorMode> = Vec::new();
    for m in modes {
        if let Some(o) = out.iter_mut().find(|o| same_k(o.k, m.k)) {
            for c in 0..6 {
                o.amp[c] += m.amp[c];
            }
        } else {
            out.push(m);
        }
    }
    out.retain(|m| m.amp.iter().any(|a| a.norm() > 1e-300));
    out
}

#[inline]
fn phase(k: Vec3, x: Vec3) -> Complex64 {
    let ph = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
    Complex64::new(ph.cos(), ph.sin())
}

/// Real part of a vector mode sum at x.
pub fn eval_vec_modes(modes: &[VecMode], x: Vec3) -> Vec3 {
    let mut out = [0.0; 3];
    for m in modes {
        let e = phase(m.k, x);
        for c in 0..3 {
            out[c] += (m.amp[c] * e).re;
        }
    }
    out
}

/// Real part of a tensor mode sum at x.
pub fn eval_tensor_modes(modes: &[TensorMode], x: Vec3) -> Sym3 {
    let mut out = [0.0; 6];
    for m in modes {
        let e = phase(m.k, x);
        for c in 0..6 {
            out[c] += (m.amp[c] * e).re;
        }
    }
    Sym3(out)
}

/// Analytic vector field u(x, t).
pub trait VectorField: Send + Sync {
    fn eval(&self, x: Vec3, t: f64) -> Vec3;
    fn meta(&self) -> &FieldMeta;

    /// Jacobian `[i][j] = ∂_j u_i`; fourth-order central differences unless overridden.
    fn jacobian(&self, x: Vec3, t: f64) -> [[f64; 3]; 3] {
        fd_jacobian(|p| self.eval(p, t), x, 1e-3)
    }

    /// Finite conjugate-closed Fourier representation at time t, if the field has one.
    fn modes(&self, _t: f64) -> Option<Vec<VecMode>> {
        None
    }
}

/// Analytic scalar field f(x, t).
pub trait ScalarField: Send + Sync {
    fn eval(&self, x: Vec3, t: f64) -> f64;
    fn meta(&self) -> &FieldMeta;

    /// Exact ∫_{B_r(c)} f² dx when the geometry is known in closed form.
    fn ball_integral_sq(&self, _center: Vec3, _r: f64, _t: f64) -> Option<f64> {
        None
    }

    fn gradient(&self, x: Vec3, t: f64) -> Vec3 {
        let h = 1e-3;
        let mut g = [0.0; 3];
        for (d, gd) in g.iter_mut().enumerate() {
            let at = |s: f64| {
                let mut p = x;
                p[d] += s * h;
                self.eval(p, t)
            };
            *gd = (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * h);
        }
        g
    }
}

pub type VField = Arc<dyn VectorField>;
pub type SField = Arc<dyn ScalarField>;

/// A field handle of either rank.
#[derive(Clone)]
pub enum AnalyticField {
    Vector(VField),
    Scalar(SField),
}

impl AnalyticField {
    pub fn meta(&self) -> &FieldMeta {
        match self {
            AnalyticField::Vector(v) => v.meta(),
            AnalyticField::Scalar(s) => s.meta(),
        }
    }

    pub fn rank(&self) -> Rank {
        match self {
            AnalyticField::Vector(_) => Rank::Vector,
            AnalyticField::Scalar(_) => Rank::Scalar,
        }
    }

    /// |u|² at (x, t).
    pub fn sq(&self, x: Vec3, t: f64) -> f64 {
        match self {
            AnalyticField::Vector(v) => {
                let u = v.eval(x, t);
                crate::geom::dot(u, u)
            }
            AnalyticField::Scalar(s) => {
                let f = s.eval(x, t);
                f * f
            }
        }
    }

    pub fn abs(&self, x: Vec3, t: f64) -> f64 {
        self.sq(x, t).sqrt()
    }

    /// Closed-form ∫_{B_r(c)} |u|² when available.
    pub fn exact_ball_sq(&self, c: Vec3, r: f64, t: f64) -> Option<f64> {
        match self {
            AnalyticField::Scalar(s) => s.ball_integral_sq(c, r, t),
            AnalyticField::Vector(_) => None,
        }
    }
}

/// Fourth-order central difference Jacobian `[i][j] = ∂_j u_i`.
pub fn fd_jacobian<F: Fn(Vec3) -> Vec3>(f: F, x: Vec3, h: f64) -> [[f64; 3]; 3] {
    let mut jac = [[0.0; 3]; 3];
    for j in 0..3 {
        let at = |s: f64| {
            let mut p = x;
            p[j] += s * h;
            f(p)
        };
        let (p1, m1, p2, m2) = (at(1.0), at(-1.0), at(2.0), at(-2.0));
        for i in 0..3 {
            jac[i][j] = (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * h);
        }
    }
    jac
}

fn check_box(meta: &FieldMeta) -> (Vec3, f64) {
    if let Some(s) = meta.support {
        (s.center, s.radius)
    } else if let Some(p) = meta.period {
        ([0.0; 3], p)
    } else {
        ([0.0; 3], 8.0)
    }
}

/// Largest |∇·u| over `n` seeded random space-time points, and where it occurs.
pub fn max_divergence(u: &dyn VectorField, n: usize, seed: u64) -> (f64, Vec3) {
    let (c, half) = check_box(u.meta());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (0.0, c);
    for _ in 0..n {
        let x = [
            c[0] + rng.gen_range(-half..half),
            c[1] + rng.gen_range(-half..half),
            c[2] + rng.gen_range(-half..half),
        ];
        let t = rng.gen_range(0.0..1.0);
        let j = u.jacobian(x, t);
        let d = (j[0][0] + j[1][1] + j[2][2]).abs();
        if d > worst.0 {
            worst = (d, x);
        }
    }
    worst
}

/// Enforce a field's divergence-free claim at 1000 seeded points.
pub fn check_divergence_claim(u: &dyn VectorField) -> Result<()> {
    let meta = u.meta();
    if !meta.divergence_free {
        return Ok(());
    }
    let (d, at) = max_divergence(u, 1000, 0x5eed);
    if d > 1e-8 * meta.sup_bound.max(1.0) {
        return Err(Error::NotDivergenceFree { name: meta.name.clone(), max_div: d, at });
    }
    Ok(())
}

/// Symmetric tensor source f_ij(y, t) fed to the pressure operators.
pub trait TensorSource: Send + Sync {
    fn eval(&self, y: Vec3, t: f64) -> Sym3;
    fn meta(&self) -> &FieldMeta;

    fn modes(&self, _t: f64) -> Option<Vec<TensorMode>> {
        None
    }

    /// Bound on the Frobenius norm |f(y)| in terms of |y − support centre|.
    fn envelope(&self, _r: f64) -> Option<f64> {
        None
    }
}

/// f = u ⊗ u.
pub struct Quadratic {
    pub u: VField,
    meta: FieldMeta,
}

impl Quadratic {
    pub fn new(u: VField) -> Self {
        let m = u.meta();
        let mut meta = m.clone();
        meta.name = format!("{0}*{0}", m.name);
        meta.sup_bound = m.sup_bound * m.sup_bound;
        meta.bandwidth = 2.0 * m.bandwidth;
        meta.divergence_free = false;
        Self { u, meta }
    }
}

impl TensorSource for Quadratic {
    fn eval(&self, y: Vec3, t: f64) -> Sym3 {
        let v = self.u.eval(y, t);
        Sym3::outer(v, v)
    }

    fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    fn modes(&self, t: f64) -> Option<Vec<TensorMode>> {
        let m = self.u.modes(t)?;
        let mut out = Vec::with_capacity(m.len() * m.len());
        for a in &m {
            for b in &m {
                out.push(TensorMode { k: crate::geom::add(a.k, b.k), amp: outer_c(a.amp, b.amp) });
            }
        }
        Some(merge_tensor_modes(out))
    }

    fn envelope(&self, r: f64) -> Option<f64> {
        let s = self.meta.support?;
        let e = self.u.meta().envelope?;
        let v = e.at(r, s.radius);
        Some(v * v)
    }
}

/// Time-dependent constant vector c(t).
pub type TimeVector = Arc<dyn Fn(f64) -> Vec3 + Send + Sync>;

/// f_ij = sym(c_i(t) u_j).
pub struct Cross {
    pub c: TimeVector,
    pub u: VField,
    meta: FieldMeta,
}

impl Cross {
    pub fn new(c: TimeVector, c_sup: f64, u: VField) -> Self {
        let m = u.meta();
        let mut meta = m.clone();
        meta.name = format!("c*{}", m.name);
        meta.sup_bound = c_sup * m.sup_bound;
        meta.divergence_free = false;
        Self { c, u, meta }
    }
}

impl TensorSource for Cross {
    fn eval(&self, y: Vec3, t: f64) -> Sym3 {
        Sym3::outer((self.c)(t), self.u.eval(y, t))
    }

    fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    fn modes(&self, t: f64) -> Option<Vec<TensorMode>> {
        let cc = (self.c)(t).map(|x| Complex64::new(x, 0.0));
        let m = self.u.modes(t)?;
        Some(merge_tensor_modes(
            m.iter().map(|a| TensorMode { k: a.k, amp: outer_c(cc, a.amp) }).collect(),
        ))
    }

    fn envelope(&self, r: f64) -> Option<f64> {
        let s = self.meta.support?;
        let e = self.u.meta().envelope?;
        let c_sup = self.meta.sup_bound / self.u.meta().sup_bound.max(f64::MIN_POSITIVE);
        Some(e.at(r, s.radius) * c_sup)
    }
}

fn outer_c(a: [Complex64; 3], b: [Complex64; 3]) -> [Complex64; 6] {
    [
        a[0] * b[0],
        a[1] * b[1],
        a[2] * b[2],
        (a[0] * b[1] + a[1] * b[0]) * 0.5,
        (a[0] * b[2] + a[2] * b[0]) * 0.5,
        (a[1] * b[2] + a[2] * b[1]) * 0.5,
    ]
}

/// Tensor source given by a closure and caller-supplied metadata.
pub struct FnSource<F: Fn(Vec3, f64) -> Sym3 + Send + Sync> {
    pub f: F,
    pub meta: FieldMeta,
}

impl<F: Fn(Vec3, f64) -> Sym3 + Send + Sync> TensorSource for FnSource<F> {
    fn eval(&self, y: Vec3, t: f64) -> Sym3 {
        (self.f)(y, t)
    }

    fn meta(&self) -> &FieldMeta {
        &self.meta
    }
}
