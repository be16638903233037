use crate::error::{Error, Result};
use crate::geom::{norm, Vec3};
use std::sync::Arc;

/// A drift φ(t) with its derivative and its integral Φ(t) = ∫₀ᵗ φ.
pub trait DriftSpec: Send + Sync {
    fn phi(&self, t: f64) -> Vec3;
    fn dphi(&self, t: f64) -> Vec3;
    fn big_phi(&self, t: f64) -> Vec3;
    fn sup_bound(&self) -> f64;
    fn name(&self) -> String;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroDrift;

impl DriftSpec for ZeroDrift {
    fn phi(&self, _t: f64) -> Vec3 {
        [0.0; 3]
    }
    fn dphi(&self, _t: f64) -> Vec3 {
        [0.0; 3]
    }
    fn big_phi(&self, _t: f64) -> Vec3 {
        [0.0; 3]
    }
    fn sup_bound(&self) -> f64 {
        0.0
    }
    fn name(&self) -> String {
        "zero".into()
    }
}

/// φ(t) = a · sin(ωt).
#[derive(Debug, Clone, Copy)]
pub struct SinDrift {
    pub amp: Vec3,
    pub omega: f64,
}

impl SinDrift {
    pub fn new(amp: Vec3, omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidArgument(format!("drift frequency must be positive, got {omega}")));
        }
        Ok(Self { amp, omega })
    }
}

impl DriftSpec for SinDrift {
    fn phi(&self, t: f64) -> Vec3 {
        let s = (self.omega * t).sin();
        self.amp.map(|a| a * s)
    }
    fn dphi(&self, t: f64) -> Vec3 {
        let c = self.omega * (self.omega * t).cos();
        self.amp.map(|a| a * c)
    }
    fn big_phi(&self, t: f64) -> Vec3 {
        let c = (1.0 - (self.omega * t).cos()) / self.omega;
        self.amp.map(|a| a * c)
    }
    fn sup_bound(&self) -> f64 {
        norm(self.amp)
    }
    fn name(&self) -> String {
        format!("sin(amp={:?},omega={})", self.amp, self.omega)
    }
}

/// Piecewise-linear interpolant of drift samples; Φ is its exact integral.
/// Outside the sample range φ is held at the end values.
#[derive(Debug, Clone)]
pub struct PiecewiseLinearDrift {
    times: Vec<f64>,
    values: Vec<Vec3>,
    cumulative: Vec<Vec3>,
}

impl PiecewiseLinearDrift {
    pub fn new(times: Vec<f64>, values: Vec<Vec3>) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::InvalidArgument(
                "piecewise drift needs at least two samples and matching lengths".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("drift sample times must increase".into()));
        }
        let mut cumulative = vec![[0.0; 3]; times.len()];
        for n in 1..times.len() {
            let dt = times[n] - times[n - 1];
            for c in 0..3 {
                cumulative[n][c] = cumulative[n - 1][c] + 0.5 * dt * (values[n][c] + values[n - 1][c]);
            }
        }
        Ok(Self { times, values, cumulative })
    }

    /// Segment index and local coordinate for t (clamped to the sample range).
    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.times.len();
        let t = t.clamp(self.times[0], self.times[n - 1]);
        let i = match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        (i, t - self.times[i])
    }

    fn slope(&self, i: usize) -> Vec3 {
        let dt = self.times[i + 1] - self.times[i];
        [0, 1, 2].map(|c| (self.values[i + 1][c] - self.values[i][c]) / dt)
    }
}

impl DriftSpec for PiecewiseLinearDrift {
    fn phi(&self, t: f64) -> Vec3 {
        let (i, s) = self.locate(t);
        let m = self.slope(i);
        [0, 1, 2].map(|c| self.values[i][c] + m[c] * s)
    }

    fn dphi(&self, t: f64) -> Vec3 {
        let n = self.times.len();
        if t < self.times[0] || t > self.times[n - 1] {
            return [0.0; 3];
        }
        self.slope(self.locate(t).0)
    }

    fn big_phi(&self, t: f64) -> Vec3 {
        let n = self.times.len();
        let t0 = self.times[0];
        let t1 = self.times[n - 1];
        if t <= t0 {
            return self.values[0].map(|v| v * (t - t0));
        }
        if t >= t1 {
            return [0, 1, 2].map(|c| self.cumulative[n - 1][c] + self.values[n - 1][c] * (t - t1));
        }
        let (i, s) = self.locate(t);
        let m = self.slope(i);
        [0, 1, 2].map(|c| self.cumulative[i][c] + self.values[i][c] * s + 0.5 * m[c] * s * s)
    }

    fn sup_bound(&self) -> f64 {
        self.values.iter().map(|v| norm(*v)).fold(0.0, f64::max)
    }

    fn name(&self) -> String {
        format!("piecewise-linear({} samples)", self.times.len())
    }
}

/// −φ with Φ ↦ −Φ: the inverse transgalilean shift.
#[derive(Clone)]
pub struct NegatedDrift(pub Arc<dyn DriftSpec>);

impl DriftSpec for NegatedDrift {
    fn phi(&self, t: f64) -> Vec3 {
        self.0.phi(t).map(|v| -v)
    }
    fn dphi(&self, t: f64) -> Vec3 {
        self.0.dphi(t).map(|v| -v)
    }
    fn big_phi(&self, t: f64) -> Vec3 {
        self.0.big_phi(t).map(|v| -v)
    }
    fn sup_bound(&self) -> f64 {
        self.0.sup_bound()
    }
    fn name(&self) -> String {
        format!("-({})", self.0.name())
    }
}

/// Checks Φ(0) = 0, finiteness, and Φ′ = φ by central differences on [0, t_end].
pub fn validate_drift(d: &dyn DriftSpec, t_end: f64) -> Result<()> {
    let p0 = d.big_phi(0.0);
    if norm(p0) > 1e-12 * (1.0 + d.sup_bound()) {
        return Err(Error::InconsistentDrift(format!("Phi(0) = {p0:?} is not zero")));
    }
    if !d.sup_bound().is_finite() {
        return Err(Error::InconsistentDrift("unbounded drift".into()));
    }
    let h = 1e-5 * t_end.max(1e-3);
    let n = 64;
    let dphi_sup = (0..=n)
        .map(|k| norm(d.dphi(t_end * k as f64 / n as f64)))
        .fold(0.0, f64::max);
    let tol = 1e-6 * (1.0 + d.sup_bound()) + h * dphi_sup;
    for k in 1..n {
        let t = t_end * (k as f64 + 0.37) / n as f64;
        let a = d.big_phi(t + h);
        let b = d.big_phi(t - h);
        let phi = d.phi(t);
        for c in 0..3 {
            let fd = (a[c] - b[c]) / (2.0 * h);
            if !phi[c].is_finite() || (fd - phi[c]).abs() > tol {
                return Err(Error::InconsistentDrift(format!(
                    "Phi' = {fd} but phi = {} at t = {t}, component {c}",
                    phi[c]
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// φ = (1, 0, 0) but Φ = 0: inconsistent.
    struct Broken;
    impl DriftSpec for Broken {
        fn phi(&self, _t: f64) -> Vec3 {
            [1.0, 0.0, 0.0]
        }
        fn dphi(&self, _t: f64) -> Vec3 {
            [0.0; 3]
        }
        fn big_phi(&self, _t: f64) -> Vec3 {
            [0.0; 3]
        }
        fn sup_bound(&self) -> f64 {
            1.0
        }
        fn name(&self) -> String {
            "broken".into()
        }
    }

    #[test]
    fn sin_drift_is_consistent() {
        let d = SinDrift::new([0.3, 0.0, 0.0], 1.0).unwrap();
        validate_drift(&d, 1.0).unwrap();
        assert!((d.big_phi(1.0)[0] - 0.3 * (1.0 - 1f64.cos())).abs() < 1e-15);
    }

    #[test]
    fn inconsistent_drift_rejected() {
        assert!(matches!(validate_drift(&Broken, 1.0), Err(Error::InconsistentDrift(_))));
    }

    #[test]
    fn piecewise_matches_trapezoid_and_is_consistent() {
        let times: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let vals: Vec<Vec3> = times.iter().map(|&t| [t.sin(), 2.0 * t, 0.0]).collect();
        let d = PiecewiseLinearDrift::new(times.clone(), vals.clone()).unwrap();
        validate_drift(&d, 1.0).unwrap();
        let mut acc = 0.0;
        for n in 1..times.len() {
            acc += 0.05 * (vals[n][0] + vals[n - 1][0]);
            assert!((d.big_phi(times[n])[0] - acc).abs() < 1e-14);
        }
        assert!((d.phi(0.25)[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn negation_flips_everything() {
        let d: Arc<dyn DriftSpec> = Arc::new(SinDrift::new([0.3, -0.1, 0.2], 2.0).unwrap());
        let n = NegatedDrift(d.clone());
        for t in [0.1, 0.7] {
            for c in 0..3 {
                assert_eq!(n.phi(t)[c], -d.phi(t)[c]);
                assert_eq!(n.big_phi(t)[c], -d.big_phi(t)[c]);
            }
        }
    }
}
