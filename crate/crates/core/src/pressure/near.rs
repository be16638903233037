//! Near part R_iR_j(θ f) on a ball: pointwise by polar quadrature, on lattices spectrally.

use crate::error::{Error, Result};
use crate::fields::{Grid3, TensorSource};
use crate::geom::{frame_from_axis, norm, scale, sub, Vec3};
use crate::kernels::{kernel_contract, BallSpec, Profile};
use crate::quad::{composite, GaussLegendre};
use crate::spectral::{riesz_contract, Embedding};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Σ_ij R_iR_j(θ_R(x₀ − ·) f_ij)(x) for one point.
///
/// Principal value in polar coordinates centred at x: the sphere mean of K
/// vanishes, so the radial integrand (1/ρ)∫K(ω):f(x+ρω)θ dω is bounded at ρ → 0.
pub fn near_pointwise(src: &dyn TensorSource, ball: &BallSpec, x: Vec3, t: f64) -> f64 {
    let meta = src.meta();
    let r = ball.r;
    let band = meta.bandwidth.max(1.0 / r);
    let dv = sub(ball.x0, x);
    let d = norm(dv);
    let centred = d <= 1e-12 * r;
    let e = if centred { [0.0, 0.0, 1.0] } else { scale(dv, 1.0 / d) };
    let frame = frame_from_axis(e);

    let mut rho_max = 4.0 * r + d;
    let mut breaks = vec![0.0, 2.0 * r - d, 2.0 * r + d, 4.0 * r - d];
    if meta.decay_class.decays() {
        if let Some(s) = meta.support {
            let sc = norm(sub(x, s.center));
            breaks.push(sc - s.radius);
            breaks.push(sc + s.radius);
            rho_max = rho_max.min(sc + s.radius);
        }
    }
    if rho_max <= 0.0 {
        return -src.eval(x, t).trace() / 3.0;
    }
    breaks.push(rho_max);
    breaks.retain(|&b| b >= 0.0 && b <= rho_max);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * r);

    let mut nodes = Vec::new();
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        let n = 24 + (0.5 * band * len).ceil() as usize + (32.0 * len / r).ceil() as usize;
        let panels = n.div_ceil(128);
        nodes.extend(composite(w[0], w[1], panels, n.div_ceil(panels)));
    }
    let integral: f64 = nodes
        .par_iter()
        .map(|&(rho, wr)| wr * sphere_integral(src, ball, x, t, rho, d, &frame, band) / rho)
        .sum();
    integral - src.eval(x, t).trace() / 3.0
}

/// ∫_{S²} K(ω):f(x+ρω) θ_R(x₀ − x − ρω) dω, polar axis towards x₀.
#[allow(clippy::too_many_arguments)]
fn sphere_integral(
    src: &dyn TensorSource,
    ball: &BallSpec,
    x: Vec3,
    t: f64,
    rho: f64,
    d: f64,
    frame: &[Vec3; 3],
    band: f64,
) -> f64 {
    let r = ball.r;
    let ring = |mu: f64| -> f64 {
        let s = (1.0 - mu * mu).max(0.0).sqrt();
        let n_phi = (band * rho * s).ceil() as usize + 16;
        let dphi = 2.0 * PI / n_phi as f64;
        let mut acc = 0.0;
        for j in 0..n_phi {
            let (sp, cp) = (j as f64 * dphi).sin_cos();
            let om = [0, 1, 2].map(|c| mu * frame[2][c] + s * (cp * frame[0][c] + sp * frame[1][c]));
            let y = [x[0] + rho * om[0], x[1] + rho * om[1], x[2] + rho * om[2]];
            acc += kernel_contract(om, &src.eval(y, t));
        }
        acc * dphi
    };
    let n_mu = |span: f64| (0.5 * band * rho * span).ceil() as usize + 16;

    if d <= 1e-12 * r {
        let th = Profile::value(rho / r);
        if th == 0.0 {
            return 0.0;
        }
        let gl = GaussLegendre::cached(n_mu(2.0));
        return th * gl.integrate(-1.0, 1.0, ring);
    }
    let mu_of = |q: f64| (rho * rho + d * d - q * q) / (2.0 * rho * d);
    let mut total = 0.0;
    // θ = 1 where |y − x₀| ≤ 2R
    let mu_a = mu_of(2.0 * r);
    if mu_a < 1.0 {
        let lo = mu_a.max(-1.0);
        let gl = GaussLegendre::cached(n_mu(1.0 - lo));
        total += gl.integrate(lo, 1.0, &ring);
    }
    // transition 2R < |y − x₀| < 4R, integrated in q = |y − x₀|
    let q_lo = (2.0 * r).max((rho - d).abs());
    let q_hi = (4.0 * r).min(rho + d);
    if q_hi > q_lo {
        let span = mu_of(q_lo) - mu_of(q_hi);
        let n = (64 + (0.5 * band * (q_hi - q_lo)).ceil() as usize).max(n_mu(span));
        let gl = GaussLegendre::cached(n);
        total += gl.integrate(q_lo, q_hi, |q| q / (rho * d) * Profile::value(q / r) * ring(mu_of(q)));
    }
    total
}

/// Window of lattice nodes anchor + h·(lo + i).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeWindow {
    pub anchor: Vec3,
    pub h: f64,
    pub lo: [i64; 3],
    pub dims: [usize; 3],
}

impl LatticeWindow {
    /// Smallest lattice box covering [a, b] plus `margin` extra nodes on each side.
    pub fn covering(anchor: Vec3, h: f64, a: Vec3, b: Vec3, margin: i64) -> Self {
        let lo = [0, 1, 2].map(|d| ((a[d] - anchor[d]) / h - 1e-9).floor() as i64 - margin);
        let hi = [0, 1, 2].map(|d| ((b[d] - anchor[d]) / h + 1e-9).ceil() as i64 + margin);
        let dims = [0, 1, 2].map(|d| (hi[d] - lo[d] + 1) as usize);
        Self { anchor, h, lo, dims }
    }

    /// The window matching an existing grid (its origin is the anchor).
    pub fn from_grid(g: &Grid3) -> Self {
        Self { anchor: g.origin, h: g.h, lo: [0; 3], dims: g.dims }
    }

    pub fn grid(&self) -> Result<Grid3> {
        Grid3::new(self.node([0, 0, 0]), self.h, self.dims)
    }

    pub fn node(&self, i: [usize; 3]) -> Vec3 {
        [0, 1, 2].map(|d| self.anchor[d] + (self.lo[d] + i[d] as i64) as f64 * self.h)
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn unflat(&self, n: usize) -> [usize; 3] {
        [n % self.dims[0], (n / self.dims[0]) % self.dims[1], n / (self.dims[0] * self.dims[1])]
    }

    /// Offset of `inner` inside `self`, when `inner` lies on the same lattice.
    pub fn offset_of(&self, inner: &LatticeWindow) -> Option<[usize; 3]> {
        if self.anchor != inner.anchor || self.h != inner.h {
            return None;
        }
        let mut off = [0usize; 3];
        for d in 0..3 {
            let o = inner.lo[d] - self.lo[d];
            if o < 0 || o as usize + inner.dims[d] > self.dims[d] {
                return None;
            }
            off[d] = o as usize;
        }
        Some(off)
    }
}

/// Near part at the nodes of `target`, computed on a free-space embedding of
/// the window containing supp(θ f).
pub fn near_on_lattice(src: &dyn TensorSource, ball: &BallSpec, target: &LatticeWindow, t: f64) -> Result<Vec<f64>> {
    let r = ball.r;
    let x0 = ball.x0;
    let cut = ball.cutoff;
    let a = x0.map(|c| c - 4.0 * r);
    let b = x0.map(|c| c + 4.0 * r);
    riesz_on_lattice(src, Some((a, b)), target, t, move |y| cut.theta(sub(x0, y)))
}

/// Σ R_iR_j(w f) at the nodes of `target` for a weight w vanishing outside
/// the box `bounds` (or everywhere outside the source support when `None`).
pub fn riesz_on_lattice(
    src: &dyn TensorSource,
    bounds: Option<(Vec3, Vec3)>,
    target: &LatticeWindow,
    t: f64,
    weight: impl Fn(Vec3) -> f64 + Sync,
) -> Result<Vec<f64>> {
    let h = target.h;
    let meta = src.meta();
    let support = if meta.decay_class.decays() { meta.support } else { None };
    let (mut a, mut b) = match (bounds, support) {
        (Some(bx), _) => bx,
        (None, Some(s)) => (s.center.map(|c| c - s.radius), s.center.map(|c| c + s.radius)),
        (None, None) => return Err(Error::NoDecay(meta.name.clone())),
    };
    if let Some(s) = support {
        for d in 0..3 {
            a[d] = a[d].max(s.center[d] - s.radius);
            b[d] = b[d].min(s.center[d] + s.radius);
        }
    }
    let t_lo = target.node([0, 0, 0]);
    let t_hi = target.node(target.dims.map(|n| n - 1));
    for d in 0..3 {
        if a[d] > b[d] {
            a[d] = t_lo[d];
            b[d] = t_hi[d];
        }
        a[d] = a[d].min(t_lo[d]);
        b[d] = b[d].max(t_hi[d]);
    }
    let win = LatticeWindow::covering(target.anchor, h, a, b, 2);
    let off = win
        .offset_of(target)
        .ok_or_else(|| Error::WindowTooSmall("target window not on the source lattice".into()))?;
    let n = win.len();
    let samples: Vec<[f64; 6]> = (0..n)
        .into_par_iter()
        .map(|k| {
            let y = win.node(win.unflat(k));
            let th = weight(y);
            if th == 0.0 {
                [0.0; 6]
            } else {
                src.eval(y, t).scaled(th).0
            }
        })
        .collect();
    let comps: [Vec<f64>; 6] = std::array::from_fn(|c| samples.iter().map(|s| s[c]).collect());
    drop(samples);
    let full = riesz_contract(&comps, win.dims, h, Embedding::FreeSpace)?;
    let mut out = Vec::with_capacity(target.len());
    for i2 in 0..target.dims[2] {
        for i1 in 0..target.dims[1] {
            for i0 in 0..target.dims[0] {
                let j = [i0 + off[0], i1 + off[1], i2 + off[2]];
                out.push(full[(j[2] * win.dims[1] + j[1]) * win.dims[0] + j[0]]);
            }
        }
    }
    Ok(out)
}
