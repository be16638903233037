use super::{AnalyticField, FieldMeta, SField, VField};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Uniform isotropic grid. `dims` counts sample nodes per axis; the box spans
/// `origin .. origin + h·(dims − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    pub origin: Vec3,
    pub h: f64,
    pub dims: [usize; 3],
}

impl Grid3 {
    pub fn new(origin: Vec3, h: f64, dims: [usize; 3]) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {h}")));
        }
        if dims.iter().any(|&n| n < 2) {
            return Err(Error::InvalidArgument(format!("grid needs at least 2 nodes per axis, got {dims:?}")));
        }
        Ok(Self { origin, h, dims })
    }

    /// n³ nodes covering the cube [lo, lo + L) periodically (spacing L/n).
    pub fn periodic_cube(lo: f64, length: f64, n: usize) -> Result<Self> {
        Self::new([lo; 3], length / n as f64, [n; 3])
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn extent(&self) -> (Vec3, Vec3) {
        let hi = [0, 1, 2].map(|d| self.origin[d] + self.h * (self.dims[d] - 1) as f64);
        (self.origin, hi)
    }

    #[inline]
    pub fn node(&self, i: [usize; 3]) -> Vec3 {
        [0, 1, 2].map(|d| self.origin[d] + self.h * i[d] as f64)
    }

    /// Flat node index with x₁ fastest.
    #[inline]
    pub fn flat(&self, i: [usize; 3]) -> usize {
        (i[2] * self.dims[1] + i[1]) * self.dims[0] + i[0]
    }

    #[inline]
    pub fn unflat(&self, n: usize) -> [usize; 3] {
        let i0 = n % self.dims[0];
        let r = n / self.dims[0];
        [i0, r % self.dims[1], r / self.dims[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_t: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_t: usize) -> Result<Self> {
        if !(t_start >= 0.0 && t_end > t_start && t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("need 0 <= t_start < t_end, got [{t_start}, {t_end}]")));
        }
        if n_t < 2 {
            return Err(Error::InvalidArgument(format!("time grid needs n_t >= 2, got {n_t}")));
        }
        Ok(Self { t_start, t_end, n_t })
    }

    /// Single time level.
    pub fn snapshot(t: f64) -> Self {
        Self { t_start: t, t_end: t, n_t: 1 }
    }

    pub fn dt(&self) -> f64 {
        if self.n_t < 2 {
            0.0
        } else {
            (self.t_end - self.t_start) / (self.n_t - 1) as f64
        }
    }

    pub fn time(&self, n: usize) -> f64 {
        if n + 1 == self.n_t {
            self.t_end
        } else {
            self.t_start + n as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_t).map(|n| self.time(n)).collect()
    }

    /// Index of the sample equal to t within rounding, if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * (1.0 + self.t_end.abs());
        (0..self.n_t).find(|&n| (self.time(n) - t).abs() <= tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rank {
    Scalar,
    Vector,
}

impl Rank {
    pub fn components(&self) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => 3,
        }
    }
}

/// Field values on a grid at discrete times, indexed (t, x₃, x₂, x₁, component)
/// with the component fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: Grid3,
    pub times: TimeGrid,
    pub rank: Rank,
    pub values: Vec<f64>,
    pub meta: FieldMeta,
}

impl SampledField {
    pub fn new(grid: Grid3, times: TimeGrid, rank: Rank, values: Vec<f64>, meta: FieldMeta) -> Result<Self> {
        let expected = grid.len() * times.n_t * rank.components();
        if values.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "sampled field has {} values, grid/times/rank require {expected}",
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            let per_t = grid.len() * rank.components();
            let node = grid.unflat((k % per_t) / rank.components());
            return Err(Error::NonFinite { name: meta.name.clone(), at: grid.node(node), t: times.time(k / per_t) });
        }
        Ok(Self { grid, times, rank, values, meta })
    }

    #[inline]
    pub fn index(&self, t: usize, i: [usize; 3], c: usize) -> usize {
        (t * self.grid.len() + self.grid.flat(i)) * self.rank.components() + c
    }

    #[inline]
    pub fn get(&self, t: usize, i: [usize; 3], c: usize) -> f64 {
        self.values[self.index(t, i, c)]
    }

    /// Values of one time level.
    pub fn slice(&self, t: usize) -> &[f64] {
        let n = self.grid.len() * self.rank.components();
        &self.values[t * n..(t + 1) * n]
    }

    /// Trilinear interpolation of component `c` at time level `t`; None outside the box.
    pub fn interpolate(&self, t: usize, x: Vec3, c: usize) -> Option<f64> {
        let g = &self.grid;
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for d in 0..3 {
            let s = (x[d] - g.origin[d]) / g.h;
            let top = (g.dims[d] - 1) as f64;
            if !(s >= -1e-12 && s <= top + 1e-12) {
                return None;
            }
            let s = s.clamp(0.0, top);
            let i = (s.floor() as usize).min(g.dims[d] - 2);
            base[d] = i;
            frac[d] = s - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..8 {
            let mut w = 1.0;
            let mut idx = base;
            for d in 0..3 {
                if corner >> d & 1 == 1 {
                    idx[d] += 1;
                    w *= frac[d];
                } else {
                    w *= 1.0 - frac[d];
                }
            }
            if w != 0.0 {
                acc += w * self.get(t, idx, c);
            }
        }
        Some(acc)
    }
}

fn sample_with<F>(grid: Grid3, times: TimeGrid, rank: Rank, meta: FieldMeta, f: F) -> Result<SampledField>
where
    F: Fn(Vec3, f64, &mut [f64]) + Sync,
{
    let nc = rank.components();
    let per_t = grid.len() * nc;
    let mut values = vec![0.0; per_t * times.n_t];
    values
        .par_chunks_mut(grid.dims[0] * nc)
        .enumerate()
        .for_each(|(row, out)| {
            let t = times.time(row / (grid.dims[1] * grid.dims[2]));
            let r = row % (grid.dims[1] * grid.dims[2]);
            let (i1, i2) = (r % grid.dims[1], r / grid.dims[1]);
            for i0 in 0..grid.dims[0] {
                f(grid.node([i0, i1, i2]), t, &mut out[i0 * nc..(i0 + 1) * nc]);
            }
        });
    SampledField::new(grid, times, rank, values, meta)
}

pub fn sample_vector(u: &VField, grid: Grid3, times: TimeGrid) -> Result<SampledField> {
    sample_with(grid, times, Rank::Vector, u.meta().clone(), |x, t, out| {
        out.copy_from_slice(&u.eval(x, t));
    })
}

pub fn sample_scalar(f: &SField, grid: Grid3, times: TimeGrid) -> Result<SampledField> {
    sample_with(grid, times, Rank::Scalar, f.meta().clone(), |x, t, out| {
        out[0] = f.eval(x, t);
    })
}

/// Pointwise evaluation of an analytic field on a grid at each time level.
pub fn sample(field: &AnalyticField, grid: Grid3, times: TimeGrid) -> Result<SampledField> {
    match field {
        AnalyticField::Vector(u) => sample_vector(u, grid, times),
        AnalyticField::Scalar(f) => sample_scalar(f, grid, times),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_constant, ScalarField};
    use std::sync::Arc;

    struct Bad(FieldMeta);
    impl ScalarField for Bad {
        fn eval(&self, x: Vec3, _t: f64) -> f64 {
            if x[0] > 0.5 {
                f64::NAN
            } else {
                0.0
            }
        }
        fn meta(&self) -> &FieldMeta {
            &self.0
        }
    }

    #[test]
    fn constant_and_roundtrip_interp() {
        let g = Grid3::new([-1.0, 0.0, 0.5], 0.25, [5, 4, 3]).unwrap();
        let tg = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let s = sample_vector(&make_constant([1.5, -2.0, 0.25]), g, tg).unwrap();
        assert!(s.values.chunks(3).all(|v| v == [1.5, -2.0, 0.25]));
        for n in 0..g.len() {
            let x = g.node(g.unflat(n));
            assert_eq!(s.interpolate(1, x, 1), Some(-2.0));
        }
    }

    #[test]
    fn non_finite_reported_with_point() {
        let g = Grid3::new([0.0; 3], 0.5, [3, 2, 2]).unwrap();
        let f: SField = Arc::new(Bad(FieldMeta::new("bad", super::super::DecayClass::UlocOnly)));
        match sample_scalar(&f, g, TimeGrid::snapshot(0.0)) {
            Err(Error::NonFinite { at, .. }) => assert_eq!(at[0], 1.0),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }
}
