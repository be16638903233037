//! Gauss–Legendre rules and the product rules built from them.
//!
//! Nodes come from Newton iteration on the Legendre three-term recurrence,
//! seeded with the Tricomi asymptotic guess. Rules are cached per order.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let k = i as f64 + 1.0;
            let mut x = ((4.0 * k - 1.0) * PI / (4.0 * nf + 2.0)).cos()
                * (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf));
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared cached rule of order `n`.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::new(n)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (m + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// P_n(x) and P_n'(x).
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = if (1.0 - x * x).abs() < 1e-300 {
        0.5 * nf * (nf + 1.0) * x.powi(n as i32 + 1)
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, d)
}

/// Composite rule: `panels` equal panels of an `order`-point rule on [a, b].
pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::cached(order);
    let step = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * step;
        out.extend(gl.on(lo, lo + step));
    }
    out
}

/// Product rule on the unit sphere: Gauss–Legendre in cos(polar), trapezoid in azimuth.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub dirs: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// `n_mu` Gauss nodes in cos(polar) and `n_phi` equispaced azimuths; weights sum to 4π.
    pub fn new(n_mu: usize, n_phi: usize) -> Self {
        let gl = GaussLegendre::cached(n_mu);
        let mut dirs = Vec::with_capacity(n_mu * n_phi);
        let mut weights = Vec::with_capacity(n_mu * n_phi);
        let dphi = 2.0 * PI / n_phi as f64;
        for (&mu, &w) in gl.nodes.iter().zip(&gl.weights) {
            let s = (1.0 - mu * mu).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                dirs.push([s * phi.cos(), s * phi.sin(), mu]);
                weights.push(w * dphi);
            }
        }
        Self { dirs, weights }
    }

    /// Rule resolving spherical harmonics up to degree about `degree`.
    pub fn for_degree(degree: usize) -> Self {
        let n_mu = degree / 2 + 2;
        Self::new(n_mu, 2 * n_mu)
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    /// Surface average of `f` over the sphere of radius `r` centred at `c`.
    pub fn average<F: FnMut([f64; 3]) -> f64>(&self, c: [f64; 3], r: f64, mut f: F) -> f64 {
        let mut acc = 0.0;
        for (d, w) in self.dirs.iter().zip(&self.weights) {
            acc += w * f([c[0] + r * d[0], c[1] + r * d[1], c[2] + r * d[2]]);
        }
        acc / (4.0 * PI)
    }
}

/// Ball rule: radial Gauss on [0, r] with `n_r` nodes times a sphere rule.
pub fn ball_rule(center: [f64; 3], radius: f64, n_r: usize, sphere: &SphereRule) -> Vec<([f64; 3], f64)> {
    let gl = GaussLegendre::cached(n_r);
    let mut out = Vec::with_capacity(n_r * sphere.len());
    for (r, wr) in gl.on(0.0, radius) {
        for (d, wa) in sphere.dirs.iter().zip(&sphere.weights) {
            out.push((
                [center[0] + r * d[0], center[1] + r * d[1], center[2] + r * d[2]],
                wr * wa * r * r,
            ));
        }
    }
    out
}

/// Shell rule on r in [r0, r1] with `panels` radial panels.
pub fn shell_rule(
    center: [f64; 3],
    r0: f64,
    r1: f64,
    panels: usize,
    n_r: usize,
    sphere: &SphereRule,
) -> Vec<([f64; 3], f64)> {
    let radial = composite(r0, r1, panels, n_r);
    let mut out = Vec::with_capacity(radial.len() * sphere.len());
    for (r, wr) in radial {
        for (d, wa) in sphere.dirs.iter().zip(&sphere.weights) {
            out.push((
                [center[0] + r * d[0], center[1] + r * d[1], center[2] + r * d[2]],
                wr * wa * r * r,
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 64, 200] {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let gl = GaussLegendre::new(7);
        for p in 0..14 {
            let q = gl.integrate(-1.0, 1.0, |x| x.powi(p));
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "p={p}");
        }
    }

    #[test]
    fn sphere_rule_area_and_moments() {
        let s = SphereRule::new(6, 12);
        let area: f64 = s.weights.iter().sum();
        assert!((area - 4.0 * PI).abs() < 1e-12);
        let zz = s.average([0.0; 3], 1.0, |x| x[2] * x[2]);
        assert!((zz - 1.0 / 3.0).abs() < 1e-14);
        let xy = s.average([0.0; 3], 1.0, |x| x[0] * x[1]);
        assert!(xy.abs() < 1e-15);
    }

    #[test]
    fn ball_volume() {
        let s = SphereRule::new(4, 8);
        let v: f64 = ball_rule([1.0, 2.0, 3.0], 2.0, 6, &s).iter().map(|p| p.1).sum();
        assert!((v - 4.0 / 3.0 * PI * 8.0).abs() < 1e-12);
    }
}
