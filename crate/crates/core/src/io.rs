//! Field files (binary payload + TOML sidecar), run configuration with a
//! stable hash, and named generators.

use crate::error::{Error, Result};
use crate::fields::{
    inject_drift, make_constant, make_cylinder_indicator, make_dyadic_balls, make_gaussian_vortex_at,
    make_nondivfree_bump, make_taylor_green, make_zero_scalar, make_zero_vector, AnalyticField, DecayClass, DriftSpec,
    FieldMeta, Grid3, Rank, SField, SampledField, SinDrift, TimeGrid, VField,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const MAGIC: &[u8; 5] = b"NSPG1";
/// Written as little-endian; reads back as 0x0201 from a big-endian file.
pub const ENDIAN_MARKER: u16 = 0x0102;
/// magic + marker + rank + 3 dims + n_t + h + dt + t_start + origin
pub const HEADER_LEN: usize = 5 + 2 + 1 + 8 * 4 + 8 * 3 + 8 * 3;

/// Decoded binary header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Header {
    pub rank: Rank,
    pub dims: [usize; 3],
    pub n_t: usize,
    pub h: f64,
    pub dt: f64,
    pub t_start: f64,
    pub origin: [f64; 3],
}

impl Header {
    pub fn of(f: &SampledField) -> Self {
        Self {
            rank: f.rank,
            dims: f.grid.dims,
            n_t: f.times.n_t,
            h: f.grid.h,
            dt: f.times.dt(),
            t_start: f.times.t_start,
            origin: f.grid.origin,
        }
    }

    /// Number of f64 values in the payload, or `DimOverflow`.
    pub fn value_count(&self) -> Result<usize> {
        let mut n = self.rank.components().checked_mul(self.n_t).ok_or(Error::DimOverflow)?;
        for d in self.dims {
            n = n.checked_mul(d).ok_or(Error::DimOverflow)?;
        }
        n.checked_mul(8).ok_or(Error::DimOverflow)?;
        Ok(n)
    }

    fn time_grid(&self) -> Result<TimeGrid> {
        if self.n_t == 1 {
            Ok(TimeGrid::snapshot(self.t_start))
        } else {
            TimeGrid::new(self.t_start, self.t_start + self.dt * (self.n_t - 1) as f64, self.n_t)
        }
    }
}

/// Serialize header and payload, little-endian.
pub fn encode(f: &SampledField) -> Vec<u8> {
    let h = Header::of(f);
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * f.values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&ENDIAN_MARKER.to_le_bytes());
    out.push(f.rank.components() as u8);
    for d in h.dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.extend_from_slice(&(h.n_t as u64).to_le_bytes());
    for v in [h.h, h.dt, h.t_start] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in h.origin {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in &f.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    big: bool,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        if end > self.buf.len() {
            return Err(Error::Truncated { expected: HEADER_LEN as u64, found: self.buf.len() as u64 });
        }
        let mut a = [0u8; N];
        a.copy_from_slice(&self.buf[self.pos..end]);
        self.pos = end;
        Ok(a)
    }

    fn u64(&mut self) -> Result<u64> {
        let b = self.take::<8>()?;
        Ok(if self.big { u64::from_be_bytes(b) } else { u64::from_le_bytes(b) })
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
}

/// Parse header and payload; big-endian files are byte-swapped transparently.
pub fn decode(buf: &[u8]) -> Result<(Header, Vec<f64>)> {
    if buf.len() < MAGIC.len() || &buf[..5] != MAGIC {
        return Err(Error::BadMagic);
    }
    let mut r = Reader { buf, pos: 5, big: false };
    let marker = u16::from_le_bytes(r.take::<2>()?);
    r.big = match marker {
        ENDIAN_MARKER => false,
        m if m == ENDIAN_MARKER.swap_bytes() => true,
        m => return Err(Error::BadEndianness(m)),
    };
    let rank = match r.take::<1>()?[0] {
        1 => Rank::Scalar,
        3 => Rank::Vector,
        k => return Err(Error::InvalidArgument(format!("field file: rank byte {k} is not 1 or 3"))),
    };
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = usize::try_from(r.u64()?).map_err(|_| Error::DimOverflow)?;
    }
    let n_t = usize::try_from(r.u64()?).map_err(|_| Error::DimOverflow)?;
    let (h, dt, t_start) = (r.f64()?, r.f64()?, r.f64()?);
    let origin = [r.f64()?, r.f64()?, r.f64()?];
    let header = Header { rank, dims, n_t, h, dt, t_start, origin };
    let n = header.value_count()?;
    let expected = (HEADER_LEN + 8 * n) as u64;
    if (buf.len() as u64) < expected {
        return Err(Error::Truncated { expected, found: buf.len() as u64 });
    }
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(r.f64()?);
    }
    Ok((header, values))
}

/// Text metadata stored next to a field file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub generator: GeneratorSpec,
    pub decay_class: DecayClass,
    pub divergence_free: bool,
    pub config_hash: String,
    /// set for derived fields (e.g. normalized); such files cannot be regenerated from `generator`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<String>,
    pub meta: FieldMeta,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".toml");
    PathBuf::from(s)
}

/// A field file as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub field: SampledField,
    pub sidecar: Option<Sidecar>,
}

pub fn write_field(path: &Path, field: &SampledField, sidecar: Option<&Sidecar>) -> Result<()> {
    fs::write(path, encode(field))?;
    if let Some(s) = sidecar {
        let text = toml::to_string(s).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(sidecar_path(path), text)?;
    }
    Ok(())
}

pub fn read_field(path: &Path) -> Result<FieldFile> {
    let buf = fs::read(path)?;
    let (h, values) = decode(&buf)?;
    let sp = sidecar_path(path);
    let sidecar: Option<Sidecar> = if sp.exists() {
        let text = fs::read_to_string(&sp)?;
        Some(toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", sp.display())))?)
    } else {
        None
    };
    let meta = sidecar.as_ref().map_or_else(|| FieldMeta::new("unknown", DecayClass::UlocOnly), |s| s.meta.clone());
    let grid = Grid3::new(h.origin, h.h, h.dims)?;
    let field = SampledField::new(grid, h.time_grid()?, h.rank, values, meta)?;
    Ok(FieldFile { field, sidecar })
}

fn one() -> f64 {
    1.0
}

fn default_k_max() -> u32 {
    12
}

fn default_drift_amp() -> [f64; 3] {
    [0.3, 0.0, 0.0]
}

fn default_generator_name() -> String {
    "taylor-green".into()
}

/// A named field generator with its parameters; unused parameters are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    #[serde(default = "default_generator_name")]
    pub name: String,
    #[serde(default = "one")]
    pub nu: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default)]
    pub center: [f64; 3],
    #[serde(default)]
    pub decay_rate: f64,
    #[serde(default)]
    pub value: [f64; 3],
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "default_k_max")]
    pub k_max: u32,
    #[serde(default = "default_drift_amp")]
    pub drift_amp: [f64; 3],
    #[serde(default = "one")]
    pub drift_omega: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

pub const GENERATOR_NAMES: &[&str] = &[
    "taylor-green",
    "parasitic-taylor-green",
    "gaussian-vortex",
    "constant",
    "zero",
    "nondivfree-bump",
    "cylinder",
    "dyadic-balls",
];

/// A generated field, its exact pressure when known, and its initial datum.
#[derive(Clone)]
pub struct Generated {
    pub field: AnalyticField,
    pub pressure: Option<SField>,
    pub initial: Option<VField>,
    pub drift: Option<Arc<dyn DriftSpec>>,
}

impl GeneratorSpec {
    pub fn named(name: &str) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn build(&self) -> Result<Generated> {
        let vec = |u: VField| Generated { field: AnalyticField::Vector(u.clone()), pressure: None, initial: Some(u), drift: None };
        Ok(match self.name.as_str() {
            "taylor-green" => {
                let (u, p) = make_taylor_green(self.nu)?;
                Generated { field: AnalyticField::Vector(u.clone()), pressure: Some(p), initial: Some(u), drift: None }
            }
            "parasitic-taylor-green" => {
                let (u, p) = make_taylor_green(self.nu)?;
                let d: Arc<dyn DriftSpec> = Arc::new(SinDrift::new(self.drift_amp, self.drift_omega)?);
                let (pu, pp) = inject_drift(u.clone(), p, d.clone())?;
                Generated { field: AnalyticField::Vector(pu), pressure: Some(pp), initial: Some(u), drift: Some(d) }
            }
            "gaussian-vortex" => vec(make_gaussian_vortex_at(self.amplitude, self.width, self.center, self.decay_rate)?),
            "constant" => vec(make_constant(self.value)),
            "zero" => {
                let u = make_zero_vector();
                Generated { field: AnalyticField::Vector(u.clone()), pressure: Some(make_zero_scalar()), initial: Some(u), drift: None }
            }
            "nondivfree-bump" => vec(make_nondivfree_bump(self.radius)?),
            "cylinder" => Generated { field: AnalyticField::Scalar(make_cylinder_indicator()), pressure: None, initial: None, drift: None },
            "dyadic-balls" => Generated { field: AnalyticField::Scalar(make_dyadic_balls(self.k_max)?), pressure: None, initial: None, drift: None },
            other => {
                return Err(Error::Config(format!(
                    "generator.name: unknown generator `{other}` (one of {})",
                    GENERATOR_NAMES.join(", ")
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// far-field quadrature tolerance
    pub tol_far: f64,
    /// relative tolerance of the drift round trip
    pub drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { tol_far: 1e-6, drift: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Quadrature {
    /// highest multipole order of the modal far field
    pub l_max: usize,
    /// lattice spacing of spectral near fields; 0 picks it from the ball and bandwidth
    pub lattice_h: f64,
    /// Gauss nodes in time for decay estimators
    pub decay_time_nodes: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { l_max: 60, lattice_h: 0.0, decay_time_nodes: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// nodes per axis
    pub n: usize,
    /// lower corner on every axis
    pub lo: f64,
    /// spacing; 0 means 2π/n (one period for the periodic generators)
    pub h: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub n_t: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: 32, lo: -std::f64::consts::PI, h: 0.0, t_start: 0.0, t_end: 1.0, n_t: 2 }
    }
}

impl GridSpec {
    pub fn grid(&self) -> Result<Grid3> {
        let h = if self.h > 0.0 { self.h } else { 2.0 * std::f64::consts::PI / self.n as f64 };
        Grid3::new([self.lo; 3], h, [self.n; 3])
    }

    pub fn times(&self) -> Result<TimeGrid> {
        if self.n_t == 1 {
            Ok(TimeGrid::snapshot(self.t_start))
        } else {
            TimeGrid::new(self.t_start, self.t_end, self.n_t)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BallConfig {
    pub center: [f64; 3],
    pub radius: f64,
}

impl Default for BallConfig {
    fn default() -> Self {
        Self { center: [0.0; 3], radius: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftConfigSpec {
    pub beta_center: [f64; 3],
    pub beta_radius: f64,
    pub nu: f64,
    /// time samples on [0, t_end]
    pub time_samples: usize,
    pub t_end: f64,
}

impl Default for DriftConfigSpec {
    fn default() -> Self {
        Self { beta_center: [0.0; 3], beta_radius: 1.0, nu: 1.0, time_samples: 64, t_end: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    /// A, B, C or data-A0
    pub condition: String,
    /// radii (B, C, data-A0) or distances along e₁ (A)
    pub params: Vec<f64>,
    /// ball radius for condition A
    pub radius: f64,
    pub t_end: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { condition: "C".into(), params: vec![8.0, 16.0, 32.0, 64.0], radius: 1.0, t_end: 1.0 }
    }
}

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub generator: GeneratorSpec,
    pub tolerances: Tolerances,
    pub quadrature: Quadrature,
    pub grid: GridSpec,
    pub ball: BallConfig,
    pub drift: DriftConfigSpec,
    pub sweep: SweepSpec,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML serialization, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tolerances.tol_far", self.tolerances.tol_far),
            ("tolerances.drift", self.tolerances.drift),
            ("ball.radius", self.ball.radius),
            ("drift.beta_radius", self.drift.beta_radius),
            ("drift.t_end", self.drift.t_end),
            ("sweep.radius", self.sweep.radius),
            ("sweep.t_end", self.sweep.t_end),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        let counts = [
            ("grid.n", self.grid.n),
            ("grid.n_t", self.grid.n_t),
            ("quadrature.l_max", self.quadrature.l_max),
            ("quadrature.decay_time_nodes", self.quadrature.decay_time_nodes),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.drift.time_samples < 2 {
            return Err(Error::Config(format!("drift.time_samples must be at least 2, got {}", self.drift.time_samples)));
        }
        if !(self.grid.h >= 0.0) || !(self.quadrature.lattice_h >= 0.0) || !(self.drift.nu >= 0.0) {
            return Err(Error::Config("grid.h, quadrature.lattice_h and drift.nu must be nonnegative".into()));
        }
        if !GENERATOR_NAMES.contains(&self.generator.name.as_str()) {
            return Err(Error::Config(format!(
                "generator.name: unknown generator `{}` (one of {})",
                self.generator.name,
                GENERATOR_NAMES.join(", ")
            )));
        }
        if !["A", "B", "C", "data-A0"].contains(&self.sweep.condition.as_str()) {
            return Err(Error::Config(format!("sweep.condition must be A, B, C or data-A0, got `{}`", self.sweep.condition)));
        }
        Ok(())
    }

    pub fn pressure(&self) -> crate::pressure::PressureConfig {
        crate::pressure::PressureConfig {
            tol_far: self.tolerances.tol_far,
            l_max: self.quadrature.l_max,
            h: (self.quadrature.lattice_h > 0.0).then_some(self.quadrature.lattice_h),
        }
    }
}

/// Sidecar for a field produced by `spec` under `cfg_hash`.
pub fn sidecar_for(spec: &GeneratorSpec, meta: &FieldMeta, cfg_hash: &str) -> Sidecar {
    Sidecar {
        generator: spec.clone(),
        decay_class: meta.decay_class,
        divergence_free: meta.divergence_free,
        config_hash: cfg_hash.to_string(),
        transform: None,
        meta: meta.clone(),
    }
}
