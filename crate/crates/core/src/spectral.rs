//! 3D FFTs and the Riesz pair R_iR_j as a Fourier multiplier.
//!
//! Convention: R_iR_j has symbol −ξ_iξ_j/|ξ|², so Σ_i R_iR_i = −Id and
//! R_iR_jΔψ = −∂_i∂_jψ.

use crate::error::{Error, Result};
use crate::fields::{Rank, SampledField};
use crate::geom::SYM_PAIRS;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// The multiplier convention in force, recorded in output metadata.
pub struct RieszConvention;

impl RieszConvention {
    pub const SYMBOL: &'static str = "-xi_i xi_j / |xi|^2";
    /// Sign s in R_iR_jΔψ = s ∂_i∂_jψ.
    pub const LAPLACIAN_SIGN: f64 = -1.0;
}

/// How a compactly supported window is embedded before applying the multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Embedding {
    /// Zero padding by 2× and the periodic symbol.
    Periodic,
    /// Free-space convolution: Green's function truncated beyond the window diameter.
    FreeSpace,
    /// Input already covers one period; no padding.
    Torus,
}

/// Smallest 2^a 3^b 5^c ≥ n.
pub fn good_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// In-place 3D FFT of an x₁-fastest array. The inverse is unnormalized.
pub fn fft3(data: &mut [Complex64], dims: [usize; 3], inverse: bool) {
    let [n0, n1, n2] = dims;
    assert_eq!(data.len(), n0 * n1 * n2, "fft3: buffer size mismatch");
    let mut planner = FftPlanner::<f64>::new();
    let plan = |p: &mut FftPlanner<f64>, n: usize| {
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    };
    plan(&mut planner, n0).process(data);
    for (axis, n) in [(1usize, n1), (2usize, n2)] {
        if n == 1 {
            continue;
        }
        let f = plan(&mut planner, n);
        let lines = data.len() / n;
        let mut buf = vec![Complex64::new(0.0, 0.0); data.len()];
        let stride = if axis == 1 { n0 } else { n0 * n1 };
        let line_start = |l: usize| -> usize {
            if axis == 1 {
                let i0 = l % n0;
                let i2 = l / n0;
                i2 * n0 * n1 + i0
            } else {
                l
            }
        };
        for l in 0..lines {
            let s = line_start(l);
            for m in 0..n {
                buf[l * n + m] = data[s + m * stride];
            }
        }
        f.process(&mut buf);
        for l in 0..lines {
            let s = line_start(l);
            for m in 0..n {
                data[s + m * stride] = buf[l * n + m];
            }
        }
    }
}

/// Angular wavenumbers for an n-point axis of spacing h, with a Nyquist flag.
fn wavenumbers(n: usize, h: f64) -> Vec<(f64, bool)> {
    let scale = 2.0 * PI / (n as f64 * h);
    (0..n)
        .map(|m| {
            let s = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            (s * scale, n % 2 == 0 && m == n / 2)
        })
        .collect()
}

/// Periodic symbol of R_iR_j at ξ. The zero mode carries the isotropic value −δ_ij/3;
/// off-diagonal entries vanish on Nyquist planes, where the sign of ξ is ambiguous.
#[inline]
pub fn riesz_symbol(i: usize, j: usize, xi: [f64; 3], nyquist: [bool; 3]) -> f64 {
    let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    if k2 == 0.0 {
        return if i == j { -1.0 / 3.0 } else { 0.0 };
    }
    if i != j && (nyquist[i] || nyquist[j]) {
        return 0.0;
    }
    -xi[i] * xi[j] / k2
}

/// Free-space symbol: −ξ_iξ_j Ĝ_L(ξ), with Ĝ_L the transform of 1/(4π|y|) cut at |y| = L.
#[inline]
fn free_space_symbol(i: usize, j: usize, xi: [f64; 3], nyquist: [bool; 3], l: f64) -> f64 {
    let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    if k2 == 0.0 {
        return 0.0;
    }
    if i != j && (nyquist[i] || nyquist[j]) {
        return 0.0;
    }
    let k = k2.sqrt();
    // (1 − cos kL)/k², written with sin² to avoid cancellation
    let s = (0.5 * k * l).sin();
    -xi[i] * xi[j] * 2.0 * s * s / k2
}

/// Ratio of the largest boundary value to the largest value of a window.
pub fn boundary_ratio(values: &[f64], dims: [usize; 3]) -> f64 {
    let mut inner: f64 = 0.0;
    let mut edge: f64 = 0.0;
    for i2 in 0..dims[2] {
        for i1 in 0..dims[1] {
            for i0 in 0..dims[0] {
                let v = values[(i2 * dims[1] + i1) * dims[0] + i0].abs();
                inner = inner.max(v);
                let on_edge = i0 == 0
                    || i1 == 0
                    || i2 == 0
                    || i0 + 1 == dims[0]
                    || i1 + 1 == dims[1]
                    || i2 + 1 == dims[2];
                if on_edge {
                    edge = edge.max(v);
                }
            }
        }
    }
    if inner == 0.0 {
        0.0
    } else {
        edge / inner
    }
}

/// Boundary values above this fraction of the maximum count as touching the box.
pub const SUPPORT_TOLERANCE: f64 = 1e-12;

/// Σ_ij w_ij R_iR_j f_ij on one window, for `terms` = (i, j, weight, values).
/// All value arrays share `dims` and spacing `h`; the result lives on the same window.
pub fn riesz_combine(terms: &[(usize, usize, f64, &[f64])], dims: [usize; 3], h: f64, embedding: Embedding) -> Result<Vec<f64>> {
    let n_in = dims[0] * dims[1] * dims[2];
    if embedding != Embedding::Torus {
        for (_, _, _, v) in terms {
            let ratio = boundary_ratio(v, dims);
            if ratio > SUPPORT_TOLERANCE {
                return Err(Error::SupportTouchesBoundary { ratio });
            }
        }
    }
    let pdims = match embedding {
        Embedding::Torus => dims,
        Embedding::Periodic => dims.map(|n| good_size(2 * n)),
        Embedding::FreeSpace => {
            let diam = h * ((dims[0] * dims[0] + dims[1] * dims[1] + dims[2] * dims[2]) as f64).sqrt();
            dims.map(|n| good_size(n + (diam / h).ceil() as usize + 2))
        }
    };
    let l_cut = match embedding {
        Embedding::FreeSpace => {
            h * ((dims[0] * dims[0] + dims[1] * dims[1] + dims[2] * dims[2]) as f64).sqrt() * 1.01
        }
        _ => 0.0,
    };
    let total = pdims[0] * pdims[1] * pdims[2];
    let ks: Vec<Vec<(f64, bool)>> = (0..3).map(|d| wavenumbers(pdims[d], h)).collect();
    let mut acc = vec![Complex64::new(0.0, 0.0); total];
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    for &(i, j, w, vals) in terms {
        if vals.len() != n_in {
            return Err(Error::InvalidArgument("riesz window size mismatch".into()));
        }
        if w == 0.0 || vals.iter().all(|&v| v == 0.0) {
            continue;
        }
        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for i2 in 0..dims[2] {
            for i1 in 0..dims[1] {
                let src = (i2 * dims[1] + i1) * dims[0];
                let dst = (i2 * pdims[1] + i1) * pdims[0];
                for i0 in 0..dims[0] {
                    buf[dst + i0] = Complex64::new(vals[src + i0], 0.0);
                }
            }
        }
        fft3(&mut buf, pdims, false);
        for m2 in 0..pdims[2] {
            for m1 in 0..pdims[1] {
                for m0 in 0..pdims[0] {
                    let (k0, q0) = ks[0][m0];
                    let (k1, q1) = ks[1][m1];
                    let (k2, q2) = ks[2][m2];
                    let xi = [k0, k1, k2];
                    let nyq = [q0, q1, q2];
                    let s = match embedding {
                        Embedding::FreeSpace => free_space_symbol(i, j, xi, nyq, l_cut),
                        _ => riesz_symbol(i, j, xi, nyq),
                    };
                    let idx = (m2 * pdims[1] + m1) * pdims[0] + m0;
                    acc[idx] += buf[idx] * (w * s);
                }
            }
        }
    }
    fft3(&mut acc, pdims, true);
    let norm = 1.0 / total as f64;
    let mut out = vec![0.0; n_in];
    for i2 in 0..dims[2] {
        for i1 in 0..dims[1] {
            let src = (i2 * pdims[1] + i1) * pdims[0];
            let dst = (i2 * dims[1] + i1) * dims[0];
            for i0 in 0..dims[0] {
                out[dst + i0] = acc[src + i0].re * norm;
            }
        }
    }
    Ok(out)
}

/// Σ_ij R_iR_j f_ij for a symmetric tensor given by its six `Sym3`-ordered components.
pub fn riesz_contract(components: &[Vec<f64>; 6], dims: [usize; 3], h: f64, embedding: Embedding) -> Result<Vec<f64>> {
    let terms: Vec<(usize, usize, f64, &[f64])> = SYM_PAIRS
        .iter()
        .zip(components.iter())
        .map(|(&(i, j), v)| (i, j, if i == j { 1.0 } else { 2.0 }, v.as_slice()))
        .collect();
    riesz_combine(&terms, dims, h, embedding)
}

/// R_iR_j f (0-based i, j) for a compactly supported scalar field, per time level,
/// on a 2× zero-padded periodic embedding.
pub fn riesz_pair_apply(f: &SampledField, i: usize, j: usize) -> Result<SampledField> {
    riesz_pair_apply_with(f, i, j, Embedding::Periodic)
}

pub fn riesz_pair_apply_with(f: &SampledField, i: usize, j: usize, embedding: Embedding) -> Result<SampledField> {
    if i > 2 || j > 2 {
        return Err(Error::InvalidArgument(format!("Riesz index ({i},{j}) out of range 0..3")));
    }
    if f.rank != Rank::Scalar {
        return Err(Error::InvalidArgument("riesz_pair_apply needs a scalar field".into()));
    }
    let mut values = Vec::with_capacity(f.values.len());
    for t in 0..f.times.n_t {
        values.extend(riesz_combine(&[(i, j, 1.0, f.slice(t))], f.grid.dims, f.grid.h, embedding)?);
    }
    let mut meta = f.meta.clone();
    meta.name = format!("R{}R{}({})", i + 1, j + 1, f.meta.name);
    SampledField::new(f.grid, f.times, Rank::Scalar, values, meta)
}
