//! Small fixed-size vector and symmetric-tensor helpers.

pub type Vec3 = [f64; 3];

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn axpy(a: Vec3, s: f64, b: Vec3) -> Vec3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

/// Orthonormal frame whose third axis is `e` (unit).
pub fn frame_from_axis(e: Vec3) -> [Vec3; 3] {
    let helper = if e[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let t = dot(helper, e);
    let a = sub(helper, scale(e, t));
    let a = scale(a, 1.0 / norm(a));
    let b = [
        e[1] * a[2] - e[2] * a[1],
        e[2] * a[0] - e[0] * a[2],
        e[0] * a[1] - e[1] * a[0],
    ];
    [a, b, e]
}

/// Symmetric 3x3 tensor stored as (xx, yy, zz, xy, xz, yz).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym3(pub [f64; 6]);

impl Sym3 {
    pub const ZERO: Sym3 = Sym3([0.0; 6]);

    pub fn outer(a: Vec3, b: Vec3) -> Sym3 {
        Sym3([
            a[0] * b[0],
            a[1] * b[1],
            a[2] * b[2],
            0.5 * (a[0] * b[1] + a[1] * b[0]),
            0.5 * (a[0] * b[2] + a[2] * b[0]),
            0.5 * (a[1] * b[2] + a[2] * b[1]),
        ])
    }

    /// Symmetric part of a general 3x3 matrix.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Sym3 {
        Sym3([
            m[0][0],
            m[1][1],
            m[2][2],
            0.5 * (m[0][1] + m[1][0]),
            0.5 * (m[0][2] + m[2][0]),
            0.5 * (m[1][2] + m[2][1]),
        ])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.0[0],
            (1, 1) => self.0[1],
            (2, 2) => self.0[2],
            (0, 1) | (1, 0) => self.0[3],
            (0, 2) | (2, 0) => self.0[4],
            _ => self.0[5],
        }
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    #[inline]
    pub fn apply(&self, v: Vec3) -> Vec3 {
        let s = &self.0;
        [
            s[0] * v[0] + s[3] * v[1] + s[4] * v[2],
            s[3] * v[0] + s[1] * v[1] + s[5] * v[2],
            s[4] * v[0] + s[5] * v[1] + s[2] * v[2],
        ]
    }

    #[inline]
    pub fn quad(&self, v: Vec3) -> f64 {
        dot(v, self.apply(v))
    }

    #[inline]
    pub fn scaled(&self, s: f64) -> Sym3 {
        let mut o = self.0;
        o.iter_mut().for_each(|x| *x *= s);
        Sym3(o)
    }

    #[inline]
    pub fn add_assign_scaled(&mut self, other: &Sym3, s: f64) {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += s * b;
        }
    }

    /// Frobenius contraction A:B.
    #[inline]
    pub fn contract(&self, o: &Sym3) -> f64 {
        let a = &self.0;
        let b = &o.0;
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + 2.0 * (a[3] * b[3] + a[4] * b[4] + a[5] * b[5])
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Index pairs (i, j) in `Sym3` storage order.
pub const SYM_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
