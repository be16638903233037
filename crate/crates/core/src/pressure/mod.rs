//! Ball-localized pressure expansion, glue constants, the global expansion
//! and the classical Riesz pressure.
//!
//! On a ball B = B_R(x₀) with cutoff θ = θ_R(x₀ − ·), and f = u⊗u:
//!
//! p̄^B(x) = Σ R_iR_j(θ f_ij)(x) + ∫ (K(x−y) − K(x₀−y)):f(y) (1 − θ(y)) dy.
//!
//! Per-ball results are defined up to a function of time; the grid output is
//! reported mean-zero over the ball nodes.

pub mod far;
pub mod near;

use crate::bump::TestBump;
use crate::error::{Error, Result};
use crate::fields::{
    eval_tensor_modes, FieldMeta, Grid3, Quadratic, Rank, SampledField, TensorSource, TimeGrid, VField,
};
use crate::geom::{dot, norm, scale, sub, Sym3, Vec3};
use crate::kernels::{kernel_contract, BallSpec, CutoffSpec, Profile};
use crate::quad::GaussLegendre;
use crate::special::spherical_jn_all;
use crate::spectral::{riesz_contract, Embedding};
pub use far::{FarField, ModalFar, ShellFar};
pub use near::{near_on_lattice, near_pointwise, riesz_on_lattice, LatticeWindow};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Quadrature and grid settings shared by the pressure operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureConfig {
    /// absolute tolerance for far-field quadrature
    pub tol_far: f64,
    /// highest multipole order in the modal far field
    pub l_max: usize,
    /// lattice spacing; `None` picks min(R/8, π/bandwidth)
    pub h: Option<f64>,
}

impl Default for PressureConfig {
    fn default() -> Self {
        Self { tol_far: 1e-6, l_max: 60, h: None }
    }
}

impl PressureConfig {
    pub fn spacing(&self, r: f64, bandwidth: f64) -> f64 {
        self.h.unwrap_or_else(|| (r / 8.0).min(PI / bandwidth.max(1e-12)))
    }
}

/// Near and far parts of one ball's expansion on the lattice nodes of the ball's bounding box.
#[derive(Debug, Clone)]
pub struct PressureExpansion {
    pub ball: BallSpec,
    pub near: SampledField,
    pub far: SampledField,
    /// c̄_k(t) for k = 2..n per time level; empty for a single ball
    pub glue: Vec<Vec<f64>>,
    pub far_tail_bound: f64,
    /// per time, the ball mean of near + far removed by `total`
    pub ball_mean: Vec<f64>,
    /// whether each node lies in the closed ball
    pub inside: Vec<bool>,
}

impl PressureExpansion {
    pub fn grid(&self) -> &Grid3 {
        &self.near.grid
    }

    /// Mean-zero near + far at time index `it` and flat node index `n`.
    pub fn value(&self, it: usize, n: usize) -> f64 {
        let k = it * self.grid().len() + n;
        self.near.values[k] + self.far.values[k] - self.ball_mean[it]
    }

    /// Mean-zero expansion as one field (zero outside the ball).
    pub fn total(&self) -> Result<SampledField> {
        let len = self.grid().len();
        let mut values = vec![0.0; self.near.values.len()];
        for it in 0..self.near.times.n_t {
            for n in 0..len {
                if self.inside[n] {
                    values[it * len + n] = self.value(it, n);
                }
            }
        }
        let mut meta = self.near.meta.clone();
        meta.name = format!("pbar[{}]", self.near.meta.name);
        SampledField::new(*self.grid(), self.near.times, Rank::Scalar, values, meta)
    }

    /// Flat indices of the nodes inside the ball.
    pub fn inside_nodes(&self) -> Vec<usize> {
        (0..self.inside.len()).filter(|&n| self.inside[n]).collect()
    }
}

/// Lattice window covering the closed ball.
pub fn ball_window(ball: &BallSpec, h: f64) -> LatticeWindow {
    let a = ball.x0.map(|c| c - ball.r);
    let b = ball.x0.map(|c| c + ball.r);
    let lo = [0, 1, 2].map(|d| (a[d] / h + 1e-9).ceil() as i64);
    let hi = [0, 1, 2].map(|d| (b[d] / h - 1e-9).floor() as i64);
    let dims = [0, 1, 2].map(|d| (hi[d] - lo[d] + 1).max(2) as usize);
    LatticeWindow { anchor: [0.0; 3], h, lo, dims }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("time must be finite, got {t}")))
    }
}

/// Σ R_iR_j(θ f_ij) on the lattice nodes of the ball's bounding box, one block per time.
pub fn near_pressure(src: &dyn TensorSource, ball: &BallSpec, times: &TimeGrid, cfg: &PressureConfig) -> Result<SampledField> {
    let h = cfg.spacing(ball.r, src.meta().bandwidth);
    let win = ball_window(ball, h);
    let mut values = Vec::with_capacity(win.len() * times.n_t);
    for t in times.times() {
        check_time(t)?;
        values.extend(near_on_lattice(src, ball, &win, t)?);
    }
    let mut meta = src.meta().clone();
    meta.name = format!("near[{}]", meta.name);
    SampledField::new(win.grid()?, *times, Rank::Scalar, values, meta)
}

/// Far part at one point of the ball, with its truncation bound.
pub fn far_pressure(src: &dyn TensorSource, ball: &BallSpec, x: Vec3, t: f64, cfg: &PressureConfig) -> Result<(f64, f64)> {
    check_time(t)?;
    if norm(sub(x, ball.x0)) > ball.r * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!("point {x:?} outside the ball")));
    }
    let far = FarField::build(src, ball.x0, ball.r, t, cfg.tol_far, cfg.l_max)?;
    Ok((far.eval(x), far.tail_bound()))
}

/// Pointwise p̄^B(x, t) (near + far, no normalization).
pub fn expansion_at(src: &dyn TensorSource, ball: &BallSpec, x: Vec3, t: f64, cfg: &PressureConfig) -> Result<f64> {
    let (far, _) = far_pressure(src, ball, x, t, cfg)?;
    Ok(near_pointwise(src, ball, x, t) + far)
}

/// Pointwise p̄^B at many points sharing one far-field evaluator.
pub fn expansion_at_points(
    src: &dyn TensorSource,
    ball: &BallSpec,
    xs: &[Vec3],
    t: f64,
    cfg: &PressureConfig,
) -> Result<(Vec<f64>, f64)> {
    check_time(t)?;
    let far = FarField::build(src, ball.x0, ball.r, t, cfg.tol_far, cfg.l_max)?;
    let vals = xs.iter().map(|&x| near_pointwise(src, ball, x, t) + far.eval(x)).collect();
    Ok((vals, far.tail_bound()))
}

/// Near + far on the ball nodes for every time level.
pub fn local_expansion(src: &dyn TensorSource, ball: &BallSpec, times: &TimeGrid, cfg: &PressureConfig) -> Result<PressureExpansion> {
    let h = cfg.spacing(ball.r, src.meta().bandwidth);
    let win = ball_window(ball, h);
    let grid = win.grid()?;
    let len = win.len();
    let inside: Vec<bool> =
        (0..len).map(|n| norm(sub(win.node(win.unflat(n)), ball.x0)) <= ball.r * (1.0 + 1e-12)).collect();
    let n_in = inside.iter().filter(|&&b| b).count();
    if n_in == 0 {
        return Err(Error::WindowTooSmall(format!("no lattice nodes inside the ball at h = {h}")));
    }
    let mut near_vals = Vec::with_capacity(len * times.n_t);
    let mut far_vals = Vec::with_capacity(len * times.n_t);
    let mut means = Vec::with_capacity(times.n_t);
    let mut tail: f64 = 0.0;
    for t in times.times() {
        check_time(t)?;
        let mut near = near_on_lattice(src, ball, &win, t)?;
        let far = FarField::build(src, ball.x0, ball.r, t, cfg.tol_far, cfg.l_max)?;
        tail = tail.max(far.tail_bound());
        let mut farv: Vec<f64> = (0..len)
            .into_par_iter()
            .map(|n| if inside[n] { far.eval(win.node(win.unflat(n))) } else { 0.0 })
            .collect();
        for n in 0..len {
            if !inside[n] {
                near[n] = 0.0;
                farv[n] = 0.0;
            }
        }
        let mean = (0..len).filter(|&n| inside[n]).map(|n| near[n] + farv[n]).sum::<f64>() / n_in as f64;
        means.push(mean);
        near_vals.extend(near);
        far_vals.extend(farv);
    }
    let mut meta = src.meta().clone();
    let base = meta.name.clone();
    meta.name = format!("near[{base}]");
    let near = SampledField::new(grid, *times, Rank::Scalar, near_vals, meta.clone())?;
    meta.name = format!("far[{base}]");
    let far = SampledField::new(grid, *times, Rank::Scalar, far_vals, meta)?;
    Ok(PressureExpansion { ball: *ball, near, far, glue: Vec::new(), far_tail_bound: tail, ball_mean: means, inside })
}

/// Convenience wrapper taking the velocity field.
pub fn local_expansion_u(u: &VField, ball: &BallSpec, times: &TimeGrid, cfg: &PressureConfig) -> Result<PressureExpansion> {
    local_expansion(&Quadratic::new(u.clone()), ball, times, cfg)
}

/// ∫₀^∞ w(r) j₂(κr)/r dr for w = θ_n − θ_{n−1}, which lives on [2(n−1), 4n].
fn glue_radial(kappa: f64, n: usize) -> f64 {
    let nf = n as f64;
    let (a, b) = (nf - 1.0, nf);
    let mut br = vec![2.0 * a, 2.0 * b, 4.0 * a, 4.0 * b];
    br.sort_by(f64::total_cmp);
    br.dedup();
    let mut acc = 0.0;
    for w in br.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let gl = GaussLegendre::cached(64 + (kappa * len) as usize);
        acc += gl.integrate(w[0], w[1], |r| {
            let wt = Profile::value(r / b) - Profile::value(r / a);
            if wt == 0.0 {
                0.0
            } else {
                wt * spherical_jn_all(2, kappa * r)[2] / r
            }
        });
    }
    acc
}

/// c̄_n(t) = −∫ K(−y):f(y) (θ_n(−y) − θ_{n−1}(−y)) dy.
pub fn glue_constant(src: &dyn TensorSource, n: usize, t: f64, cfg: &PressureConfig) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("glue index must be ≥ 2, got {n}")));
    }
    check_time(t)?;
    if let Some(modes) = src.modes(t) {
        let mut acc = 0.0;
        for m in &modes {
            let kmag = norm(m.k);
            if kmag == 0.0 {
                continue;
            }
            let kh = scale(m.k, 1.0 / kmag);
            let p = Sym3::outer(kh, kh).scaled(3.0);
            let mut q = p;
            q.0[0] -= 1.0;
            q.0[1] -= 1.0;
            q.0[2] -= 1.0;
            let fr = m.real_part();
            acc += fr.contract(&q) * glue_radial(kmag, n);
        }
        return Ok(acc);
    }
    let meta = src.meta();
    if !meta.decay_class.decays() {
        return Err(Error::NoTailBound(meta.decay_class.as_str().into()));
    }
    let s = meta.support.ok_or_else(|| Error::NoTailBound("no support metadata".into()))?;
    let nf = n as f64;
    let dc = norm(s.center);
    let lo = (2.0 * (nf - 1.0)).max(dc - s.radius);
    let hi = (4.0 * nf).min(dc + s.radius);
    if hi <= lo {
        return Ok(0.0);
    }
    let mut br: Vec<f64> = [lo, hi, 2.0 * nf, 4.0 * (nf - 1.0)].into_iter().filter(|&b| b >= lo && b <= hi).collect();
    br.sort_by(f64::total_cmp);
    br.dedup();
    let (cn, cm) = (CutoffSpec { r: nf }, CutoffSpec { r: nf - 1.0 });
    let weight = move |rho: f64| cn.theta_radial(rho) - cm.theta_radial(rho);
    let mut prev: Option<f64> = None;
    for level in 0..=3 {
        let sources = far::shell_sources(src, t, [0.0; 3], &br, &weight, level);
        let v = -sources.iter().map(|(y, f)| kernel_contract(scale(*y, -1.0), f)).sum::<f64>();
        if let Some(p) = prev {
            if (v - p).abs() < cfg.tol_far / 10.0 || level == 3 {
                return Ok(v);
            }
        }
        prev = Some(v);
    }
    unreachable!("loop returns at the last level")
}

/// c̄_k(t) for k = 2..=n.
pub fn glue_constants(src: &dyn TensorSource, n: usize, t: f64, cfg: &PressureConfig) -> Result<Vec<f64>> {
    (2..=n).map(|k| glue_constant(src, k, t, cfg)).collect()
}

/// Smallest n ≥ 1 with |x| < n.
pub fn shell_index(x: Vec3) -> usize {
    (norm(x).floor() as usize + 1).max(1)
}

/// p̄^{B_n(0)}(x) + Σ_{k=2}^n c̄_k for a given n (x must lie in B_n(0)).
pub fn global_expansion_with(src: &dyn TensorSource, x: Vec3, t: f64, n: usize, cfg: &PressureConfig) -> Result<f64> {
    if n < shell_index(x) {
        return Err(Error::InvalidArgument(format!("point {x:?} not in B_{n}(0)")));
    }
    let ball = BallSpec::new([0.0; 3], n as f64)?;
    let base = expansion_at(src, &ball, x, t, cfg)?;
    let glue: f64 = if n >= 2 { glue_constants(src, n, t, cfg)?.iter().sum() } else { 0.0 };
    Ok(base + glue)
}

/// p̄(x, t) with the minimal shell index.
pub fn global_expansion(src: &dyn TensorSource, x: Vec3, t: f64, cfg: &PressureConfig) -> Result<f64> {
    global_expansion_with(src, x, t, shell_index(x), cfg)
}

/// Σ R_iR_j f_ij on `grid` for each time.
///
/// Finite Fourier sources are evaluated mode by mode, except on a grid that
/// tiles one period, where the torus FFT is used. Decaying sources use a
/// free-space embedding of a window covering the grid and the support.
pub fn classical_pressure(src: &dyn TensorSource, grid: &Grid3, times: &TimeGrid) -> Result<SampledField> {
    let meta = src.meta();
    let mut values = Vec::with_capacity(grid.len() * times.n_t);
    let torus = meta.period.is_some_and(|p| grid.dims.iter().all(|&n| (n as f64 * grid.h - p).abs() < 1e-9 * p));
    for t in times.times() {
        check_time(t)?;
        if torus {
            let mut comps: [Vec<f64>; 6] = std::array::from_fn(|_| Vec::with_capacity(grid.len()));
            for n in 0..grid.len() {
                let f = src.eval(grid.node(grid.unflat(n)), t);
                for (c, v) in comps.iter_mut().enumerate() {
                    v.push(f.0[c]);
                }
            }
            let mut p = riesz_contract(&comps, grid.dims, grid.h, Embedding::Torus)?;
            // the classical periodic pressure carries no zero mode
            let mean = p.iter().sum::<f64>() / p.len() as f64;
            p.iter_mut().for_each(|v| *v -= mean);
            values.extend(p);
        } else if let Some(modes) = src.modes(t) {
            let pm: Vec<(Vec3, rustfft::num_complex::Complex64)> = modes
                .iter()
                .filter(|m| norm(m.k) > 0.0)
                .map(|m| {
                    let k2 = dot(m.k, m.k);
                    let a = m.amp;
                    let kk = [m.k[0] * m.k[0], m.k[1] * m.k[1], m.k[2] * m.k[2], 2.0 * m.k[0] * m.k[1], 2.0 * m.k[0] * m.k[2], 2.0 * m.k[1] * m.k[2]];
                    let s: rustfft::num_complex::Complex64 = (0..6).map(|c| a[c] * kk[c]).sum();
                    (m.k, -s / k2)
                })
                .collect();
            values.extend((0..grid.len()).into_par_iter().map(|n| {
                let x = grid.node(grid.unflat(n));
                pm.iter().map(|(k, c)| (c * rustfft::num_complex::Complex64::from_polar(1.0, dot(*k, x))).re).sum::<f64>()
            }).collect::<Vec<_>>());
        } else if meta.decay_class.decays() && meta.support.is_some() {
            let win = LatticeWindow::from_grid(grid);
            values.extend(riesz_on_lattice(src, None, &win, t, |_| 1.0)?);
        } else {
            return Err(Error::NoDecay(meta.decay_class.as_str().into()));
        }
    }
    let mut m = meta.clone();
    m.name = format!("p[{}]", meta.name);
    SampledField::new(*grid, *times, Rank::Scalar, values, m)
}

/// ⟨p̄(t), ∂_kβ⟩ for k = 1..3. Independent of the ball used for p̄ since ∫∂_kβ = 0.
///
/// Equals ∫ f:W_k with W = ∇³N_β, N_β the Newtonian potential of β.
pub fn pair_with_bump_gradient(src: &dyn TensorSource, bump: &TestBump, t: f64, cfg: &PressureConfig) -> Result<Vec3> {
    check_time(t)?;
    if let Some(modes) = src.modes(t) {
        let mut out = [0.0; 3];
        for m in &modes {
            let k2 = dot(m.k, m.k);
            if k2 == 0.0 {
                continue;
            }
            let a = m.amp;
            let kk = [m.k[0] * m.k[0], m.k[1] * m.k[1], m.k[2] * m.k[2], 2.0 * m.k[0] * m.k[1], 2.0 * m.k[0] * m.k[2], 2.0 * m.k[1] * m.k[2]];
            let s: rustfft::num_complex::Complex64 = (0..6).map(|c| a[c] * kk[c]).sum();
            let ph = rustfft::num_complex::Complex64::from_polar(1.0, dot(m.k, bump.center));
            let b = bump.fourier(k2.sqrt());
            let z = s * ph * rustfft::num_complex::Complex64::new(0.0, 1.0) * (b / k2);
            for d in 0..3 {
                out[d] += (z * m.k[d]).re;
            }
        }
        return Ok(out);
    }
    let meta = src.meta();
    if !meta.decay_class.decays() {
        return Err(Error::NoTailBound(meta.decay_class.as_str().into()));
    }
    let s = meta.support.ok_or_else(|| Error::NoTailBound("no support metadata".into()))?;
    let dc = norm(sub(s.center, bump.center));
    let lo = (dc - s.radius).max(0.0);
    let hi = dc + s.radius;
    let mut br: Vec<f64> = vec![lo, hi];
    if bump.radius > lo && bump.radius < hi {
        br.push(bump.radius);
    }
    br.sort_by(f64::total_cmp);
    let one = |_: f64| 1.0;
    let mut prev: Option<Vec3> = None;
    for level in 0..=3 {
        let sources = far::shell_sources(src, t, bump.center, &br, &one, level);
        let v = sources
            .par_iter()
            .map(|(y, f)| bump.w_contract(*y, f))
            .reduce(|| [0.0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
        if let Some(p) = prev {
            let change = (0..3).map(|d| (v[d] - p[d]).abs()).fold(0.0, f64::max);
            if change < cfg.tol_far / 10.0 || level == 3 {
                return Ok(v);
            }
        }
        prev = Some(v);
    }
    unreachable!("loop returns at the last level")
}

/// Bound on |p_far| over the ball from dyadic shells 2^iR ≤ |y − x₀| < 2^{i+1}R:
/// Σ_i 16·C_K·R/(2^iR)⁴ · N_i · ‖u‖²_{L²_uloc}, N_i unit balls covering shell i.
pub fn far_shell_bound(r: f64, uloc_sq: f64) -> f64 {
    let ck = 4.6 * 16.0;
    let side = 2.0 / 3f64.sqrt();
    let mut acc = 0.0;
    for i in 1..200 {
        let ri = 2f64.powi(i) * r;
        let cells = (2.0 * 2.0 * ri / side + 2.0).powi(3);
        let term = ck * r / ri.powi(4) * cells * uloc_sq;
        acc += term;
        if term < 1e-17 * acc {
            break;
        }
    }
    acc
}

/// sup_x ∫_{B₁(x)} |u|² bounded by |B₁|·sup|u|².
pub fn uloc_sq_bound(meta: &FieldMeta) -> f64 {
    4.0 * PI / 3.0 * meta.sup_bound * meta.sup_bound
}

/// Σ R_iR_j f_ij at one point for a finite Fourier source.
pub fn modal_classical_at(src: &dyn TensorSource, x: Vec3, t: f64) -> Option<f64> {
    let modes = src.modes(t)?;
    let mut acc = 0.0;
    for m in &modes {
        let k2 = dot(m.k, m.k);
        if k2 == 0.0 {
            continue;
        }
        let kh = scale(m.k, 1.0 / k2.sqrt());
        let f = eval_tensor_modes(std::slice::from_ref(m), x);
        acc -= f.quad(kh);
    }
    Some(acc)
}

#[cfg(test)]
mod tests;
