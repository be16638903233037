//! Parasitic drift φ(t) from the five-term momentum functional, its primitive Φ,
//! and the transgalilean normalization.
//!
//! φ_k(t) = ∫u_kβ − ∫u_{0k}β − ν∫₀ᵗ∫u_kΔβ − ∫₀ᵗ∫u_ku_j∂_jβ − ∫₀ᵗ⟨p̄, ∂_kβ⟩.

use crate::bump::TestBump;
use crate::error::{Error, Result};
use crate::fields::{drifted_velocity, DriftSpec, NegatedDrift, PiecewiseLinearDrift, Quadratic, TimeGrid, VField};
use crate::geom::{norm, sub, Vec3};
use crate::pressure::{pair_with_bump_gradient, PressureConfig};
use crate::quad::{ball_rule, SphereRule};
use rayon::prelude::*;
use std::io::Write;
use std::sync::Arc;

/// Default number of time samples on [0, T].
pub const DEFAULT_TIME_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftConfig {
    /// viscosity multiplying the Δβ term
    pub nu: f64,
    pub pressure: PressureConfig,
    /// extra radial nodes for the bump quadrature
    pub radial_boost: usize,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self { nu: 1.0, pressure: PressureConfig::default(), radial_boost: 0 }
    }
}

/// Names of the five contributions, in `DriftRecord::terms` order.
pub const TERM_NAMES: [&str; 5] = ["momentum", "initial", "heat", "flux", "pressure"];

/// φ, Φ and the five signed contributions per time sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftRecord {
    pub times: TimeGrid,
    pub phi: Vec<Vec3>,
    pub big_phi: Vec<Vec3>,
    /// [∫uβ, ∫u₀β, ν∫∫uΔβ, ∫∫u⊗u∇β, ∫⟨p̄,∇β⟩]; φ = t₀ − t₁ − t₂ − t₃ − t₄
    pub terms: Vec<[Vec3; 5]>,
}

impl DriftRecord {
    pub fn sup_phi(&self) -> f64 {
        self.phi.iter().map(|p| norm(*p)).fold(0.0, f64::max)
    }

    /// Trapezoid ∫₀ᵀ|φ| dt.
    pub fn l1_phi(&self) -> f64 {
        let mags: Vec<f64> = self.phi.iter().map(|p| norm(*p)).collect();
        trapezoid_total(&mags, self.times.dt())
    }

    pub fn sup_big_phi(&self) -> f64 {
        self.big_phi.iter().map(|p| norm(*p)).fold(0.0, f64::max)
    }

    /// CSV with columns t, φ₁..₃, Φ₁..₃ and the five terms per component.
    pub fn write_csv<W: Write>(&self, mut w: W, config_hash: Option<&str>) -> std::io::Result<()> {
        if let Some(h) = config_hash {
            writeln!(w, "# config_hash={h}")?;
        }
        let mut header = vec!["t".to_string()];
        header.extend((1..=3).map(|c| format!("phi{c}")));
        header.extend((1..=3).map(|c| format!("Phi{c}")));
        for name in TERM_NAMES {
            header.extend((1..=3).map(|c| format!("{name}{c}")));
        }
        writeln!(w, "{}", header.join(","))?;
        for (n, t) in self.times.times().into_iter().enumerate() {
            let mut row = vec![format!("{t:.17e}")];
            row.extend(self.phi[n].iter().map(|v| format!("{v:.17e}")));
            row.extend(self.big_phi[n].iter().map(|v| format!("{v:.17e}")));
            for term in &self.terms[n] {
                row.extend(term.iter().map(|v| format!("{v:.17e}")));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// φ as a piecewise-linear drift, Φ its exact primitive.
    pub fn as_drift(&self) -> Result<PiecewiseLinearDrift> {
        PiecewiseLinearDrift::new(self.times.times(), self.phi.clone())
    }
}

fn trapezoid_total(v: &[f64], dt: f64) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    dt * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]))
}

/// Cumulative trapezoid Φ(t_n) = ∫₀^{t_n} φ with Φ(t₀) = 0.
#[allow(non_snake_case)]
pub fn integrate_Phi(phi: &[Vec3], dt: f64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(phi.len());
    let mut acc = [0.0; 3];
    for (n, p) in phi.iter().enumerate() {
        if n > 0 {
            for c in 0..3 {
                acc[c] += 0.5 * dt * (phi[n - 1][c] + p[c]);
            }
        }
        out.push(acc);
    }
    out
}

fn cumulative(v: &[Vec3], dt: f64) -> Vec<Vec3> {
    integrate_Phi(v, dt)
}

/// Quadrature nodes over supp β, shrunk to the support of u when that is smaller.
fn bump_nodes(u: &VField, bump: &TestBump, boost: usize) -> Vec<(Vec3, f64)> {
    let meta = u.meta();
    let (center, radius) = match (meta.decay_class.decays(), meta.support) {
        (true, Some(s)) if s.radius < bump.radius && norm(sub(s.center, bump.center)) < bump.radius + s.radius => {
            (s.center, s.radius)
        }
        (true, Some(s)) if norm(sub(s.center, bump.center)) >= bump.radius + s.radius => return Vec::new(),
        _ => (bump.center, bump.radius),
    };
    let band = meta.bandwidth + 6.0 / bump.radius;
    let n_r = 64 + boost + (0.75 * band * radius).ceil() as usize;
    let degree = 32 + (1.5 * band * radius).ceil() as usize;
    ball_rule(center, radius, n_r, &SphereRule::for_degree(degree))
}

/// Instantaneous integrands at one time: (∫uβ, ∫uΔβ, ∫u_ku_j∂_jβ).
fn spatial_terms(u: &VField, bump: &TestBump, nodes: &[(Vec3, f64)], t: f64) -> [Vec3; 3] {
    nodes
        .par_iter()
        .map(|&(x, w)| {
            let b = bump.value(x);
            let g = bump.gradient(x);
            if b == 0.0 && g == [0.0; 3] {
                return [[0.0; 3]; 3];
            }
            let v = u.eval(x, t);
            let lap = bump.laplacian(x);
            let ug = v[0] * g[0] + v[1] * g[1] + v[2] * g[2];
            [v.map(|c| w * c * b), v.map(|c| w * c * lap), v.map(|c| w * c * ug)]
        })
        .reduce(
            || [[0.0; 3]; 3],
            |a, b| std::array::from_fn(|i| std::array::from_fn(|c| a[i][c] + b[i][c])),
        )
}

/// φ on every sample of `times` (which must start at t = 0).
pub fn drift_record(u: &VField, u0: &VField, bump: &TestBump, times: &TimeGrid, cfg: &DriftConfig) -> Result<DriftRecord> {
    if times.t_start != 0.0 {
        return Err(Error::InvalidArgument(format!("drift time grid must start at 0, got {}", times.t_start)));
    }
    let nodes = bump_nodes(u, bump, cfg.radial_boost);
    let nodes0 = bump_nodes(u0, bump, cfg.radial_boost);
    let src = Quadratic::new(u.clone());
    let ts = times.times();
    let init = spatial_terms(u0, bump, &nodes0, 0.0)[0];
    let per_t: Vec<([Vec3; 3], Vec3)> = ts
        .iter()
        .map(|&t| {
            let s = spatial_terms(u, bump, &nodes, t);
            let pr = pair_with_bump_gradient(&src, bump, t, &cfg.pressure)?;
            Ok((s, pr))
        })
        .collect::<Result<_>>()?;
    let dt = times.dt();
    let heat = cumulative(&per_t.iter().map(|(s, _)| s[1].map(|v| cfg.nu * v)).collect::<Vec<_>>(), dt);
    let flux = cumulative(&per_t.iter().map(|(s, _)| s[2]).collect::<Vec<_>>(), dt);
    let pres = cumulative(&per_t.iter().map(|(_, p)| *p).collect::<Vec<_>>(), dt);
    let mut phi = Vec::with_capacity(ts.len());
    let mut terms = Vec::with_capacity(ts.len());
    for n in 0..ts.len() {
        let mom = per_t[n].0[0];
        let tn = [mom, init, heat[n], flux[n], pres[n]];
        phi.push(std::array::from_fn(|c| tn[0][c] - tn[1][c] - tn[2][c] - tn[3][c] - tn[4][c]));
        terms.push(tn);
    }
    let big_phi = integrate_Phi(&phi, dt);
    Ok(DriftRecord { times: *times, phi, big_phi, terms })
}

/// φ(t) for a single time; `times` supplies the quadrature grid on [0, t_end].
pub fn drift_phi(u: &VField, u0: &VField, bump: &TestBump, times: &TimeGrid, t: f64, cfg: &DriftConfig) -> Result<Vec3> {
    let n = times.index_of(t).ok_or(Error::TimeOutOfRange { t, t0: times.t_start, t1: times.t_end })?;
    if n == 0 {
        return Ok([0.0; 3]);
    }
    let rec = drift_record(u, u0, bump, &TimeGrid::new(0.0, times.time(n), n + 1)?, cfg)?;
    Ok(*rec.phi.last().expect("nonempty"))
}

/// The same functional with β_R(x) = R⁻³β(x/R).
pub fn drift_record_scaled(
    u: &VField,
    u0: &VField,
    base: &TestBump,
    r: f64,
    times: &TimeGrid,
    cfg: &DriftConfig,
) -> Result<DriftRecord> {
    let sb = base.scaled(r)?;
    drift_record(u, u0, &sb.bump, times, cfg)
}

/// Normalized field ũ(x,t) = u(x + Φ(t), t) − φ(t) and the record used to build it.
pub struct Normalized {
    pub u: VField,
    pub record: DriftRecord,
    pub drift: Arc<dyn DriftSpec>,
}

pub fn normalize(u: &VField, u0: &VField, bump: &TestBump, times: &TimeGrid, cfg: &DriftConfig) -> Result<Normalized> {
    let record = drift_record(u, u0, bump, times, cfg)?;
    let pl: Arc<dyn DriftSpec> = Arc::new(record.as_drift()?);
    let neg: Arc<dyn DriftSpec> = Arc::new(NegatedDrift(pl));
    let ut = drifted_velocity(u.clone(), neg.clone());
    Ok(Normalized { u: ut, record, drift: neg })
}
