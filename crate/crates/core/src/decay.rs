//! Space-time decay conditions (A), (B), (C), the initial-data condition,
//! log-log scaling fits and the implication/counterexample matrix.

use crate::error::{Error, Result};
use crate::fields::{
    make_cylinder_indicator, make_dyadic_balls, make_gaussian_vortex_at, AnalyticField, DyadicBalls,
};
use crate::geom::{frame_from_axis, norm, scale, sub, Vec3};
use crate::quad::{ball_rule, composite, GaussLegendre, SphereRule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    A,
    B,
    C,
    #[serde(rename = "data-A0")]
    DataA0,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::A => "A",
            Condition::B => "B",
            Condition::C => "C",
            Condition::DataA0 => "data-A0",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Vanishes,
    Persists,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Vanishes => "vanishes",
            Verdict::Persists => "persists",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Quadrature settings for the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayConfig {
    /// final time T
    pub t_end: f64,
    /// Gauss nodes in time
    pub n_time: usize,
    /// minimum radial Gauss nodes per ball
    pub n_radial: usize,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self { t_end: 1.0, n_time: 4, n_radial: 48 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub condition: Condition,
    /// (sweep parameter, estimator value), sorted by parameter
    pub sweep: Vec<(f64, f64)>,
    /// log-log slope and RMS log residual, when the fit is defined
    pub fit: Option<(f64, f64)>,
    pub verdict: Verdict,
    /// the sup over centres was taken over a finite candidate set
    pub lower_bound: bool,
    pub note: String,
}

impl DecayReport {
    pub fn write_csv<W: Write>(&self, mut w: W, config_hash: Option<&str>) -> std::io::Result<()> {
        if let Some(h) = config_hash {
            writeln!(w, "# config_hash={h}")?;
        }
        writeln!(w, "# {}", self.summary())?;
        writeln!(w, "param,value")?;
        for (p, v) in &self.sweep {
            writeln!(w, "{p:.17e},{v:.17e}")?;
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        let fit = match self.fit {
            Some((s, r)) => format!("exponent={s:.6} residual={r:.3e}"),
            None => "exponent=n/a".to_string(),
        };
        format!(
            "condition={} verdict={} {fit} lower_bound={}{}",
            self.condition,
            self.verdict,
            self.lower_bound,
            if self.note.is_empty() { String::new() } else { format!(" note=\"{}\"", self.note) }
        )
    }
}

/// Resolution for a ball of radius r given the field bandwidth.
fn ball_nodes(c: Vec3, r: f64, band: f64, n_min: usize, breaks: &[f64]) -> Vec<(Vec3, f64)> {
    let band = if band.is_finite() { band } else { 8.0 };
    let degree = (24 + (band * r).ceil() as usize).min(400);
    let sphere = SphereRule::for_degree(degree);
    let mut cuts: Vec<f64> = std::iter::once(0.0).chain(breaks.iter().cloned().filter(|&b| b > 0.0 && b < r)).collect();
    cuts.push(r);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let n = n_min + (0.5 * band * (w[1] - w[0])).ceil() as usize;
        for (rad, wr) in composite(w[0], w[1], n.div_ceil(128), n.min(128)) {
            for (d, wa) in sphere.dirs.iter().zip(&sphere.weights) {
                out.push(([c[0] + rad * d[0], c[1] + rad * d[1], c[2] + rad * d[2]], wr * wa * rad * rad));
            }
        }
    }
    out
}

/// Nodes for B_r(c) ∩ B_s(sc) in spherical coordinates about c with the polar
/// axis toward sc; each radial shell only covers the cap inside B_s(sc).
fn cap_nodes(c: Vec3, sc: Vec3, s: f64, r: f64, band: f64, n_min: usize) -> Vec<(Vec3, f64)> {
    let d = sub(sc, c);
    let dc = norm(d);
    let [a, b, e] = frame_from_axis(scale(d, 1.0 / dc));
    let band = if band.is_finite() { band } else { 8.0 };
    let (r0, r1) = ((dc - s).max(0.0), r.min(dc + s));
    let mut cuts = vec![r0, r1];
    if s > dc && s - dc < r1 {
        cuts.insert(1, s - dc);
    }
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let n = n_min + (0.5 * band * (w[1] - w[0])).ceil() as usize;
        for (rho, wr) in composite(w[0], w[1], n.div_ceil(128), n.min(128)) {
            let mu0 = ((rho * rho + dc * dc - s * s) / (2.0 * rho * dc)).clamp(-1.0, 1.0);
            let alpha = mu0.acos();
            let n_mu = 16 + (0.5 * band * rho * alpha).ceil() as usize;
            let n_phi = 16 + (band * rho * if alpha > PI / 2.0 { 1.0 } else { alpha.sin() }).ceil() as usize;
            let dphi = 2.0 * PI / n_phi as f64;
            for (mu, wm) in GaussLegendre::cached(n_mu).on(mu0, 1.0) {
                let st = (1.0 - mu * mu).max(0.0).sqrt();
                for k in 0..n_phi {
                    let (sp, cp) = (k as f64 * dphi).sin_cos();
                    let dir = [0, 1, 2].map(|i| mu * e[i] + st * (cp * a[i] + sp * b[i]));
                    out.push(([0, 1, 2].map(|i| c[i] + rho * dir[i]), wr * wm * dphi * rho * rho));
                }
            }
        }
    }
    out
}

/// ∫_{B_r(c)} g(x) dx where g is |u|² (squared) or |u|.
fn ball_integral(u: &AnalyticField, c: Vec3, r: f64, t: f64, squared: bool, cfg: &DecayConfig) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if squared {
        if let Some(v) = u.exact_ball_sq(c, r, t) {
            return v;
        }
    }
    let meta = u.meta();
    let g = |x: Vec3| if squared { u.sq(x, t) } else { u.abs(x, t) };
    let nodes = match (meta.decay_class.decays(), meta.support) {
        (true, Some(s)) => {
            let dc = norm(sub(s.center, c));
            if dc + s.radius <= r {
                // support inside the ball: integrate over the support only
                ball_rule(s.center, s.radius, cfg.n_radial + (0.5 * meta.bandwidth * s.radius).ceil() as usize, &SphereRule::for_degree(24 + (meta.bandwidth * s.radius).ceil() as usize))
            } else if dc >= r + s.radius {
                return 0.0;
            } else {
                cap_nodes(c, s.center, s.radius, r, meta.bandwidth, cfg.n_radial)
            }
        }
        _ => ball_nodes(c, r, meta.bandwidth, cfg.n_radial, &[]),
    };
    nodes.par_iter().map(|&(x, w)| w * g(x)).sum()
}

/// ∫₀^{t1} ∫_{B_r(c)} |u|² dx dt by Gauss in time.
fn space_time_sq(u: &AnalyticField, c: Vec3, r: f64, t1: f64, cfg: &DecayConfig) -> f64 {
    if t1 <= 0.0 {
        return 0.0;
    }
    let gl = GaussLegendre::cached(cfg.n_time.max(1));
    gl.on(0.0, t1).map(|(t, w)| w * ball_integral(u, c, r, t, true, cfg)).sum()
}

/// ∫₀^{min(R², T)} ∫_{B_R(x₀)} |u|²; the flag is set when R² > T cut the time range.
pub fn cond_a_estimator(u: &AnalyticField, x0: Vec3, r: f64, cfg: &DecayConfig) -> (f64, bool) {
    let t1 = (r * r).min(cfg.t_end);
    (space_time_sq(u, x0, r, t1, cfg), r * r > cfg.t_end)
}

/// Candidate centres for the sup in (B): origin, the support centre, and
/// points at distances R/2, R, 2R, 4R along ±e₁, ±e₂, ±e₃.
pub fn default_candidates(u: &AnalyticField, r: f64) -> Vec<Vec3> {
    let mut out = vec![[0.0; 3]];
    if let Some(s) = u.meta().support {
        out.push(s.center);
    }
    for d in 0..3 {
        for s in [0.5, 1.0, 2.0, 4.0] {
            for sign in [1.0, -1.0] {
                let mut p = [0.0; 3];
                p[d] = sign * s * r;
                out.push(p);
            }
        }
    }
    out
}

/// max over `candidates` of (1/R³)∫₀ᵀ∫_{B_R(x₀)}|u|² (a lower bound for the sup).
pub fn cond_b_estimator(u: &AnalyticField, r: f64, candidates: &[Vec3], cfg: &DecayConfig) -> f64 {
    candidates
        .iter()
        .map(|&c| space_time_sq(u, c, r, cfg.t_end, cfg) / r.powi(3))
        .fold(0.0, f64::max)
}

/// (1/R³)∫₀ᵀ∫_{B_R(0)}|u|².
pub fn cond_c_estimator(u: &AnalyticField, r: f64, cfg: &DecayConfig) -> f64 {
    space_time_sq(u, [0.0; 3], r, cfg.t_end, cfg) / r.powi(3)
}

/// (1/R³)∫_{B_R(0)}|u₀|.
pub fn data_decay_estimator(u0: &AnalyticField, r: f64, cfg: &DecayConfig) -> f64 {
    ball_integral(u0, [0.0; 3], r, 0.0, false, cfg) / r.powi(3)
}

/// Least-squares slope of log(value) against log(param), with RMS log residual.
pub fn scaling_fit(sweep: &[(f64, f64)]) -> Result<(f64, f64)> {
    if sweep.len() < 3 {
        return Err(Error::InvalidArgument(format!("scaling fit needs at least 3 points, got {}", sweep.len())));
    }
    if let Some(i) = sweep.iter().position(|&(p, v)| !(p > 0.0 && v > 0.0)) {
        return Err(Error::NonPositiveSweep(i));
    }
    let xs: Vec<f64> = sweep.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = sweep.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    Ok((slope, (rss / n).sqrt()))
}

/// Verdict for a sweep, optionally backed by an analytic envelope
/// (values of an upper bound at the same parameters).
pub fn verdict(sweep: &[(f64, f64)], envelope: Option<&[f64]>) -> (Verdict, Option<(f64, f64)>, String) {
    if sweep.is_empty() {
        return (Verdict::Inconclusive, None, "empty sweep".into());
    }
    let vals: Vec<f64> = sweep.iter().map(|p| p.1).collect();
    let max = vals.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return (Verdict::Vanishes, None, "identically zero".into());
    }
    let fit = scaling_fit(sweep).ok();
    if let Some((s, r)) = fit {
        if s < -0.5 && r < 0.1 {
            return (Verdict::Vanishes, fit, String::new());
        }
    }
    let last = *vals.last().expect("nonempty");
    let decreasing = vals.windows(2).all(|w| w[1] < w[0]);
    if decreasing && vals.len() >= 3 && last <= 1e-6 * max {
        return (Verdict::Vanishes, fit, "super-algebraic decay".into());
    }
    if let Some(env) = envelope {
        let under = vals.iter().zip(env).all(|(v, e)| *v <= *e);
        let env_last = *env.last().expect("nonempty");
        if under && env.len() == vals.len() && env_last <= 0.5 * env[0] && decreasing {
            return (Verdict::Vanishes, fit, "under analytic envelope".into());
        }
    }
    let nonincreasing = vals.windows(2).all(|w| w[1] <= w[0]);
    if nonincreasing && vals.len() >= 3 && last == 0.0 {
        return (Verdict::Vanishes, fit, "reaches exact zero (compact support)".into());
    }
    let min_tail = vals[vals.len() / 2..].iter().cloned().fold(f64::INFINITY, f64::min);
    let flat = fit.is_some_and(|(s, _)| s.abs() < 0.25);
    if flat && min_tail >= 0.25 * max {
        return (Verdict::Persists, fit, String::new());
    }
    (Verdict::Inconclusive, fit, String::new())
}

fn report(condition: Condition, sweep: Vec<(f64, f64)>, envelope: Option<&[f64]>, lower_bound: bool, extra: &str) -> DecayReport {
    let (v, fit, note) = verdict(&sweep, envelope);
    let note = match (note.is_empty(), extra.is_empty()) {
        (true, _) => extra.to_string(),
        (false, true) => note,
        (false, false) => format!("{note}; {extra}"),
    };
    DecayReport { condition, sweep, fit, verdict: v, lower_bound, note }
}

/// (A) along x₀ = d·e₁ at fixed R.
pub fn cond_a_sweep(u: &AnalyticField, r: f64, distances: &[f64], cfg: &DecayConfig) -> DecayReport {
    let mut cut = false;
    let sweep = distances
        .iter()
        .map(|&d| {
            let (v, c) = cond_a_estimator(u, [d, 0.0, 0.0], r, cfg);
            cut |= c;
            (d, v)
        })
        .collect();
    report(Condition::A, sweep, None, false, if cut { "time range cut at T" } else { "" })
}

/// (B) over radii with the default candidate set plus `extra` centres per radius.
pub fn cond_b_sweep(u: &AnalyticField, radii: &[f64], extra: &dyn Fn(f64) -> Vec<Vec3>, cfg: &DecayConfig) -> DecayReport {
    let sweep = radii
        .iter()
        .map(|&r| {
            let mut c = default_candidates(u, r);
            c.extend(extra(r));
            (r, cond_b_estimator(u, r, &c, cfg))
        })
        .collect();
    report(Condition::B, sweep, None, true, "sup over a finite candidate set")
}

pub fn cond_c_sweep(u: &AnalyticField, radii: &[f64], envelope: Option<&[f64]>, cfg: &DecayConfig) -> DecayReport {
    let sweep = radii.iter().map(|&r| (r, cond_c_estimator(u, r, cfg))).collect();
    report(Condition::C, sweep, envelope, false, "")
}

pub fn data_sweep(u0: &AnalyticField, radii: &[f64], cfg: &DecayConfig) -> DecayReport {
    let sweep = radii.iter().map(|&r| (r, data_decay_estimator(u0, r, cfg))).collect();
    report(Condition::DataA0, sweep, None, false, "")
}

/// T·|B₁|·(k+1)⁴/2^{3k}: bound on (C) for the dyadic-ball field at 2^k ≤ R < 2^{k+1}.
pub fn dyadic_c_envelope(k: u32, t_end: f64) -> f64 {
    t_end * 4.0 * PI / 3.0 * ((k + 1) as f64).powi(4) / 2f64.powi(3 * k as i32)
}

/// Condition (B) at (R, x₀) = (k, x̂_k) for the dyadic-ball field.
pub fn dyadic_b_at_centres(u: &AnalyticField, ks: &[u32], cfg: &DecayConfig) -> DecayReport {
    let sweep = ks
        .iter()
        .map(|&k| {
            let r = k as f64;
            (r, space_time_sq(u, DyadicBalls::center(k), r, cfg.t_end, cfg) / r.powi(3))
        })
        .collect();
    report(Condition::B, sweep, None, true, "centres x_k = (2^k,0,0)")
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldVerdicts {
    pub field: String,
    pub reports: Vec<DecayReport>,
}

impl FieldVerdicts {
    pub fn verdict(&self, c: Condition) -> Option<Verdict> {
        self.reports.iter().find(|r| r.condition == c).map(|r| r.verdict)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplicationMatrix {
    pub fields: Vec<FieldVerdicts>,
    /// (statement, reproduced)
    pub bullets: Vec<(String, bool)>,
}

impl ImplicationMatrix {
    pub fn all_pass(&self) -> bool {
        self.bullets.iter().all(|b| b.1)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, config_hash: Option<&str>) -> std::io::Result<()> {
        if let Some(h) = config_hash {
            writeln!(w, "# config_hash={h}")?;
        }
        writeln!(w, "field,condition,verdict,exponent,residual")?;
        for f in &self.fields {
            for r in &f.reports {
                let (e, res) = r.fit.map_or(("".into(), "".into()), |(a, b)| (format!("{a:.6}"), format!("{b:.3e}")));
                writeln!(w, "{},{},{},{e},{res}", f.field, r.condition, r.verdict)?;
            }
        }
        writeln!(w, "statement,reproduced")?;
        for (s, ok) in &self.bullets {
            writeln!(w, "\"{s}\",{ok}")?;
        }
        Ok(())
    }
}

/// Verdicts for the cylinder, the dyadic balls and a Gaussian control, and the
/// four implication statements checked against them.
pub fn implication_matrix(cfg: &DecayConfig) -> Result<ImplicationMatrix> {
    let none = |_r: f64| Vec::new();
    let cyl = AnalyticField::Scalar(make_cylinder_indicator());
    let cyl_v = FieldVerdicts {
        field: "cylinder".into(),
        reports: vec![
            cond_a_sweep(&cyl, 1.0, &[4.0, 8.0, 16.0, 32.0], cfg),
            cond_b_sweep(&cyl, &[8.0, 16.0, 32.0, 64.0], &none, cfg),
            cond_c_sweep(&cyl, &[8.0, 16.0, 32.0, 64.0], None, cfg),
        ],
    };
    let dy = AnalyticField::Scalar(make_dyadic_balls(12)?);
    let ks: Vec<u32> = (3..=8).collect();
    let radii: Vec<f64> = ks.iter().map(|&k| 2f64.powi(k as i32)).collect();
    let env: Vec<f64> = ks.iter().map(|&k| dyadic_c_envelope(k, cfg.t_end)).collect();
    let dy_v = FieldVerdicts {
        field: "dyadic-balls".into(),
        reports: vec![cond_c_sweep(&dy, &radii, Some(&env), cfg), dyadic_b_at_centres(&dy, &ks, cfg)],
    };
    let g = AnalyticField::Vector(make_gaussian_vortex_at(1.0, 1.0, [0.0; 3], 0.0)?);
    let g_v = FieldVerdicts {
        field: "gaussian-vortex".into(),
        reports: vec![
            cond_a_sweep(&g, 1.0, &[4.0, 8.0, 12.0, 16.0], cfg),
            cond_b_sweep(&g, &[8.0, 16.0, 32.0, 64.0], &none, cfg),
            cond_c_sweep(&g, &[8.0, 16.0, 32.0, 64.0], None, cfg),
        ],
    };
    let fields = vec![cyl_v, dy_v, g_v];
    let is = |f: &FieldVerdicts, c, v| f.verdict(c) == Some(v);
    // implications hold on every field where both verdicts are decided
    let a_b = fields.iter().all(|f| !(is(f, Condition::A, Verdict::Vanishes) && is(f, Condition::B, Verdict::Persists)));
    let b_c = fields.iter().all(|f| !(is(f, Condition::B, Verdict::Vanishes) && is(f, Condition::C, Verdict::Persists)));
    let (c, d, gg) = (&fields[0], &fields[1], &fields[2]);
    let b_not_a = is(c, Condition::B, Verdict::Vanishes) && is(c, Condition::A, Verdict::Persists);
    let c_not_b = is(d, Condition::C, Verdict::Vanishes) && is(d, Condition::B, Verdict::Persists);
    let control = [Condition::A, Condition::B, Condition::C].iter().all(|&k| is(gg, k, Verdict::Vanishes));
    let bullets = vec![
        ("(A) implies (B): no field with A vanishing and B persisting".to_string(), a_b),
        ("(B) implies (C): no field with B vanishing and C persisting".to_string(), b_c),
        ("(B) does not imply (A): cylinder".to_string(), b_not_a),
        ("(C) does not imply (B): dyadic balls".to_string(), c_not_b),
        ("Gaussian control: A, B, C all vanish".to_string(), control),
    ];
    Ok(ImplicationMatrix { fields, bullets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_constant, make_gaussian_vortex, make_taylor_green, make_zero_vector};

    #[test]
    fn fit_exact_power_law_and_constant() {
        let s: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0].iter().map(|&r| (r, 3.0 / (r * r))).collect();
        let (e, res) = scaling_fit(&s).unwrap();
        assert!((e + 2.0).abs() < 1e-12 && res < 1e-12);
        let s: Vec<(f64, f64)> = [2.0, 4.0, 8.0].iter().map(|&r| (r, 5.0)).collect();
        assert!(scaling_fit(&s).unwrap().0.abs() < 1e-14);
        assert!(matches!(scaling_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]), Err(Error::NonPositiveSweep(1))));
    }

    #[test]
    fn zero_field_estimators() {
        let z = AnalyticField::Vector(make_zero_vector());
        let cfg = DecayConfig::default();
        assert_eq!(cond_a_estimator(&z, [3.0, 0.0, 0.0], 1.0, &cfg).0, 0.0);
        assert_eq!(cond_b_estimator(&z, 4.0, &default_candidates(&z, 4.0), &cfg), 0.0);
        assert_eq!(cond_c_estimator(&z, 4.0, &cfg), 0.0);
        assert_eq!(data_decay_estimator(&z, 4.0, &cfg), 0.0);
    }

    #[test]
    fn constant_data_estimator_is_volume() {
        let c = [0.3, -0.4, 1.2];
        let u = AnalyticField::Vector(make_constant(c));
        let want = norm(c) * 4.0 * PI / 3.0;
        for r in [1.0, 5.0] {
            assert!((data_decay_estimator(&u, r, &DecayConfig::default()) - want).abs() < 1e-10 * want);
        }
    }

    #[test]
    fn gaussian_data_slope_minus_three() {
        let u = AnalyticField::Vector(make_gaussian_vortex(1.0, 1.0).unwrap());
        let rep = data_sweep(&u, &[8.0, 16.0, 32.0, 64.0], &DecayConfig::default());
        let (e, _) = rep.fit.unwrap();
        assert!((e + 3.0).abs() < 0.1, "{e}");
        assert_eq!(rep.verdict, Verdict::Vanishes);
    }

    #[test]
    fn gaussian_cond_a_decays_fast() {
        let u = AnalyticField::Vector(make_gaussian_vortex(1.0, 1.0).unwrap());
        let rep = cond_a_sweep(&u, 1.0, &[2.0, 3.0, 4.0], &DecayConfig::default());
        let v: Vec<f64> = rep.sweep.iter().map(|p| p.1).collect();
        assert!(v[1] < 1e-2 * v[0] && v[2] < 1e-3 * v[1], "{v:?}");
    }

    #[test]
    fn cylinder_axis_value_and_b_slope() {
        let cyl = AnalyticField::Scalar(make_cylinder_indicator());
        let cfg = DecayConfig::default();
        let (a, _) = cond_a_estimator(&cyl, [40.0, 0.0, 0.0], 1.0, &cfg);
        assert!((a - 4.0 * PI / 3.0).abs() < 1e-12);
        let rep = cond_b_sweep(&cyl, &[8.0, 16.0, 32.0, 64.0], &|_| Vec::new(), &cfg);
        let (e, _) = rep.fit.unwrap();
        assert!((e + 2.0).abs() < 0.1, "{e}");
    }

    #[test]
    fn c_never_exceeds_b() {
        let cfg = DecayConfig::default();
        let u = AnalyticField::Vector(make_gaussian_vortex_at(1.0, 1.0, [1.0, 0.0, 0.0], 0.0).unwrap());
        for r in [2.0, 6.0] {
            assert!(cond_c_estimator(&u, r, &cfg) <= cond_b_estimator(&u, r, &default_candidates(&u, r), &cfg));
        }
    }

    #[test]
    fn taylor_green_c_tends_to_mean() {
        // mean of |u|² over a period is 1/2 at t = 0; decays like e^{-4νt}
        let (u, _) = make_taylor_green(1.0).unwrap();
        let u = AnalyticField::Vector(u);
        let cfg = DecayConfig { n_time: 8, ..Default::default() };
        let want = 4.0 * PI / 3.0 * 0.5 * (1.0 - (-4.0f64).exp()) / 4.0;
        let v = cond_c_estimator(&u, 24.0, &cfg);
        assert!((v - want).abs() < 0.02 * want, "{v} vs {want}");
    }

    #[test]
    fn verdict_rules() {
        let flat: Vec<(f64, f64)> = [1.0, 2.0, 4.0].iter().map(|&r| (r, 2.0)).collect();
        assert_eq!(verdict(&flat, None).0, Verdict::Persists);
        let zero: Vec<(f64, f64)> = [1.0, 2.0, 4.0].iter().map(|&r| (r, 0.0)).collect();
        assert_eq!(verdict(&zero, None).0, Verdict::Vanishes);
        let decay: Vec<(f64, f64)> = [1.0, 2.0, 4.0].iter().map(|&r| (r, 1.0 / r)).collect();
        assert_eq!(verdict(&decay, None).0, Verdict::Vanishes);
    }

    #[test]
    fn implication_matrix_bullets() {
        let m = implication_matrix(&DecayConfig::default()).unwrap();
        for f in &m.fields {
            for r in &f.reports {
                eprintln!("{} {}", f.field, r.summary());
            }
        }
        for (b, ok) in &m.bullets {
            eprintln!("{ok} {b}");
        }
        assert!(m.all_pass());
    }

    #[test]
    fn cap_rule_matches_full_ball() {
        let u = AnalyticField::Vector(make_gaussian_vortex_at(1.0, 0.7, [0.5, 0.2, -0.1], 0.0).unwrap());
        let s = 6.0 * 0.7;
        for (c, r) in [([3.0, 0.0, 0.0], 2.5), ([0.0, 1.0, 0.0], 1.5), ([-2.0, 1.0, 3.0], 4.0)] {
            let cap: f64 = cap_nodes(c, [0.5, 0.2, -0.1], s, r, 10.0 / 0.7, 48).iter().map(|&(x, w)| w * u.sq(x, 0.0)).sum();
            let full: f64 = ball_nodes(c, r, 10.0 / 0.7, 96, &[]).iter().map(|&(x, w)| w * u.sq(x, 0.0)).sum();
            assert!((cap - full).abs() < 1e-9 * full.max(1e-3), "{cap} {full}");
        }
    }
}
