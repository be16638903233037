//! Far part ∫ (K(x−y) − K(x₀−y))(1 − θ_R(x₀−y)) f(y) dy on a ball.

use crate::error::{Error, Result};
use crate::fields::{Envelope, TensorMode, TensorSource};
use crate::geom::{dot, norm, scale, sub, Sym3, Vec3};
use crate::kernels::{kernel_contract, Profile};
use crate::quad::{composite, GaussLegendre, SphereRule};
use crate::special::{legendre_table, spherical_jn_all};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Bound on |∇_z (K(z):S)| per unit Frobenius norm of S, times |z|⁴.
const KERNEL_GRAD_CONST: f64 = 4.6;

/// Far-field evaluator for one ball and one time.
pub enum FarField {
    Zero,
    Modal(ModalFar),
    Shells(ShellFar),
}

impl FarField {
    pub fn eval(&self, x: Vec3) -> f64 {
        match self {
            FarField::Zero => 0.0,
            FarField::Modal(m) => m.eval(x),
            FarField::Shells(s) => s.eval(x),
        }
    }

    /// Bound on the truncation error of `eval` for |x − x₀| ≤ R.
    pub fn tail_bound(&self) -> f64 {
        match self {
            FarField::Zero => 0.0,
            FarField::Modal(m) => m.tail,
            FarField::Shells(s) => s.tail,
        }
    }

    /// Picks the evaluator from the source's representation and decay class.
    pub fn build(src: &dyn TensorSource, x0: Vec3, r: f64, t: f64, tol: f64, l_max: usize) -> Result<Self> {
        if let Some(modes) = src.modes(t) {
            return Ok(FarField::Modal(ModalFar::new(&modes, x0, r, l_max)));
        }
        let meta = src.meta();
        if !meta.decay_class.decays() {
            return Err(Error::NoTailBound(meta.decay_class.as_str().into()));
        }
        if meta.support.is_none() {
            return Err(Error::NoTailBound(format!("{} (no support metadata)", meta.decay_class.as_str())));
        }
        Ok(FarField::Shells(ShellFar::new(src, x0, r, t, tol)?))
    }
}

struct ModalTerm {
    khat: Vec3,
    /// F e^{ik·x₀}, real and imaginary parts
    fr: Sym3,
    fi: Sym3,
    /// J_l for l = 0..=l_max
    jl: Vec<f64>,
}

/// Closed-form far part for finite Fourier sources.
///
/// Per mode F e^{ik·y}, far = F:∇²Ψ(x) − F:∇²Ψ(x₀) with
/// Ψ(x₀+w) = e^{ik·x₀} Σ_l i^l J_l |w|^l P_l(ŵ·k̂), and
/// J_l = −(R^{2−l}/κ) ∫₂⁴ Θ′(t) t^{1−l} j_{l−1}(κt) dt, κ = |k|R.
/// Terms with l ≤ 2 have constant Hessian and drop out.
pub struct ModalFar {
    x0: Vec3,
    r: f64,
    terms: Vec<ModalTerm>,
    l_max: usize,
    pub tail: f64,
}

/// J̃_l(κ) for l = 0..=l_max (entries below 2 are left at zero).
pub fn modal_radial_coefficients(kappa: f64, l_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; l_max + 1];
    let n = 128 + (4.0 * kappa).ceil() as usize;
    let gl = GaussLegendre::cached(n.min(4000));
    for (t, w) in gl.on(Profile::INNER, Profile::OUTER) {
        let d = Profile::derivative(t);
        if d == 0.0 {
            continue;
        }
        let j = spherical_jn_all(l_max, kappa * t);
        let mut tp = 1.0 / t; // t^{1−l} at l = 2
        for l in 2..=l_max {
            out[l] += -w * d * tp * j[l - 1] / kappa;
            tp /= t;
        }
    }
    out
}

impl ModalFar {
    pub fn new(modes: &[TensorMode], x0: Vec3, r: f64, l_max: usize) -> Self {
        let l_max = l_max.max(4);
        let mut terms = Vec::new();
        let mut tail = 0.0;
        for m in modes {
            let kmag = norm(m.k);
            if kmag == 0.0 {
                continue;
            }
            let ph = dot(m.k, x0);
            let e = rustfft::num_complex::Complex64::new(ph.cos(), ph.sin());
            let amp = m.amp.map(|a| a * e);
            let fr = Sym3(amp.map(|a| a.re));
            let fi = Sym3(amp.map(|a| a.im));
            let kappa = kmag * r;
            let mut jl = modal_radial_coefficients(kappa, l_max);
            let mut rl = 1.0; // R^{2−l} at l = 2
            for j in jl.iter_mut().skip(2) {
                *j *= rl;
                rl /= r;
            }
            // |J̃_l| ≤ 2^{1−l}/κ and |∇²(r^l P_l)| ≤ 3 l⁴ R^{l−2} on B_R
            let fnorm = (fr.contract(&fr) + fi.contract(&fi)).sqrt();
            let mut l = l_max + 1;
            let mut s = 0.0;
            loop {
                let lf = l as f64;
                let term = 3.0 * lf.powi(4) * 2f64.powi(1 - l as i32) / kappa;
                s += term;
                if term < 1e-20 * s || l > l_max + 200 {
                    break;
                }
                l += 1;
            }
            tail += fnorm * s;
            terms.push(ModalTerm { khat: scale(m.k, 1.0 / kmag), fr, fi, jl });
        }
        Self { x0, r, terms, l_max, tail }
    }

    pub fn eval(&self, x: Vec3) -> f64 {
        let w = sub(x, self.x0);
        let rr = norm(w);
        if rr < 1e-14 * self.r {
            return 0.0;
        }
        let mut total = 0.0;
        for m in &self.terms {
            let mu = (dot(w, m.khat) / rr).clamp(-1.0, 1.0);
            let tab = legendre_table(self.l_max, mu);
            let fwr = m.fr.apply(w);
            let fwi = m.fi.apply(w);
            let s1 = [dot(w, fwr), dot(w, fwi)];
            let s2 = [dot(m.khat, fwr), dot(m.khat, fwi)];
            let s3 = [m.fr.trace(), m.fi.trace()];
            let s5 = [m.fr.quad(m.khat), m.fi.quad(m.khat)];
            // r^{l−4} at l = 3
            let mut rp = 1.0 / rr;
            for l in 3..=self.l_max {
                let lf = l as f64;
                let [p, dp, ddp] = tab[l];
                let qa = lf * p - mu * dp;
                let dqa = (lf - 1.0) * dp - mu * ddp;
                let qb = dp;
                let dqb = ddp;
                let r2 = rp * rr * rr; // r^{l−2}
                let r3 = rp * rr; // r^{l−3}
                let a = r2 * qa;
                let alpha = rp * ((lf - 2.0) * qa - mu * dqa);
                let beta = r3 * dqa;
                let gamma = r3 * ((lf - 1.0) * qb - mu * dqb);
                let delta = r2 * dqb;
                let h = |c: usize| alpha * s1[c] + (beta + gamma) * s2[c] + a * s3[c] + delta * s5[c];
                let j = m.jl[l];
                total += match l % 4 {
                    0 => j * h(0),
                    1 => -j * h(1),
                    2 => -j * h(0),
                    _ => j * h(1),
                };
                rp *= rr;
            }
        }
        total
    }
}

/// Quadrature nodes (y, weight·radial_weight(|y − c|)·f(y)) over a spherical shell.
pub fn shell_sources(
    src: &dyn TensorSource,
    t: f64,
    center: Vec3,
    breaks: &[f64],
    radial_weight: &(dyn Fn(f64) -> f64 + Sync),
    level: usize,
) -> Vec<(Vec3, Sym3)> {
    let n_r = 16 << level;
    let degree = 16 << level;
    let sphere = SphereRule::for_degree(degree);
    let mut radial = Vec::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            radial.extend(composite(w[0], w[1], 1, n_r));
        }
    }
    radial
        .par_iter()
        .flat_map_iter(|&(rad, wr)| {
            let rw = radial_weight(rad);
            let sphere = &sphere;
            sphere.dirs.iter().zip(&sphere.weights).filter_map(move |(d, wa)| {
                if rw == 0.0 {
                    return None;
                }
                let y = [center[0] + rad * d[0], center[1] + rad * d[1], center[2] + rad * d[2]];
                let f = src.eval(y, t);
                if f.max_abs() == 0.0 {
                    return None;
                }
                Some((y, f.scaled(wr * wa * rad * rad * rw)))
            })
        })
        .collect()
}

/// Breakpoints covering [a, b] with dyadic panel growth starting at `first`.
fn dyadic_breaks(a: f64, b: f64, first: f64) -> Vec<f64> {
    let mut out = vec![a];
    let mut next = first;
    let mut step = first - a;
    while next < b {
        out.push(next);
        step *= 2.0;
        next += step;
    }
    out.push(b);
    out
}

/// Envelope bound of the far integral beyond `rho_s` from the support centre.
fn envelope_tail(src: &dyn TensorSource, x0: Vec3, r: f64) -> f64 {
    let meta = src.meta();
    let Some(s) = meta.support else { return f64::INFINITY };
    let dc = norm(sub(s.center, x0));
    let width = match meta.envelope {
        Some(Envelope::GaussianDipole { width, .. }) => width,
        Some(Envelope::Compact { .. }) => return 0.0,
        None => return f64::INFINITY,
    };
    let gl = GaussLegendre::cached(200);
    let hi = s.radius + 12.0 * width;
    gl.integrate(s.radius, hi, |rho| {
        let env = src.envelope(rho).unwrap_or(f64::INFINITY);
        let dist = (rho - dc).max(2.0 * r);
        env * 4.0 * PI * rho * rho * KERNEL_GRAD_CONST * r * 16.0 / dist.powi(4)
    })
}

/// Far part of a decaying source from x₀-centred shells.
pub struct ShellFar {
    x0: Vec3,
    sources: Vec<(Vec3, Sym3)>,
    pub tail: f64,
    pub level: usize,
}

impl ShellFar {
    pub fn new(src: &dyn TensorSource, x0: Vec3, r: f64, t: f64, tol: f64) -> Result<Self> {
        let meta = src.meta();
        let s = meta.support.ok_or_else(|| Error::NoTailBound("no support metadata".into()))?;
        let tail_env = envelope_tail(src, x0, r);
        let r_end = norm(sub(s.center, x0)) + s.radius;
        let inner = 2.0 * r;
        if r_end <= inner {
            return Ok(Self { x0, sources: Vec::new(), tail: tail_env, level: 0 });
        }
        let breaks = dyadic_breaks(inner, r_end, (4.0 * r).min(r_end));
        let cut = crate::kernels::CutoffSpec { r };
        let weight = move |rho: f64| 1.0 - cut.theta_radial(rho);
        let probes: Vec<Vec3> = std::iter::once(x0)
            .chain((0..3).flat_map(|d| {
                [0.9, -0.9].map(|s| {
                    let mut p = x0;
                    p[d] += s * r;
                    p
                })
            }))
            .collect();
        let mut prev: Option<(Vec<f64>, Vec<(Vec3, Sym3)>)> = None;
        let max_level = 3;
        for level in 0..=max_level {
            let sources = shell_sources(src, t, x0, &breaks, &weight, level);
            let far = ShellFar { x0, sources, tail: 0.0, level };
            let vals: Vec<f64> = probes.iter().map(|&p| far.eval(p)).collect();
            if let Some((pv, _)) = &prev {
                let change = vals.iter().zip(pv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if change < tol / 10.0 || level == max_level {
                    return Ok(ShellFar { tail: tail_env + change, ..far });
                }
            }
            prev = Some((vals, far.sources));
        }
        unreachable!("loop returns at max level")
    }

    pub fn eval(&self, x: Vec3) -> f64 {
        let mut acc = 0.0;
        for (y, s) in &self.sources {
            acc += kernel_contract(sub(x, *y), s) - kernel_contract(sub(self.x0, *y), s);
        }
        acc
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }
}
