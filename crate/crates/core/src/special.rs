//! Spherical Bessel functions and Legendre polynomials with derivatives.

/// j_0(x) … j_nmax(x) by Miller's backward recurrence, normalized against
/// whichever of j_0, j_1 has the larger closed-form magnitude.
pub fn spherical_jn_all(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    if ax < 1e-6 {
        // leading term x^n / (2n+1)!!
        let mut v = 1.0;
        for (n, o) in out.iter_mut().enumerate() {
            if n > 0 {
                v *= ax / (2 * n + 1) as f64;
            }
            *o = v * (1.0 - ax * ax / (2.0 * (2 * n + 3) as f64));
        }
        return sign_fix(out, x);
    }
    let big = nmax.max(ax.ceil() as usize);
    let start = big + 20 + ((40 * big) as f64).sqrt() as usize;
    let mut v = vec![0.0; start + 2];
    v[start] = 1e-300;
    for n in (1..=start).rev() {
        v[n - 1] = (2 * n + 1) as f64 / ax * v[n] - v[n + 1];
        if v[n - 1].abs() > 1e250 {
            v[n - 1..].iter_mut().for_each(|e| *e *= 1e-250);
        }
    }
    out.copy_from_slice(&v[..=nmax]);
    let (s, c) = ax.sin_cos();
    let j0 = s / ax;
    let j1 = s / (ax * ax) - c / ax;
    let scale = if j0.abs() >= j1.abs() || nmax == 0 {
        j0 / out[0]
    } else {
        j1 / out[1]
    };
    for o in out.iter_mut() {
        *o *= scale;
    }
    sign_fix(out, x)
}

/// j_n(−x) = (−1)^n j_n(x).
fn sign_fix(mut v: Vec<f64>, x: f64) -> Vec<f64> {
    if x < 0.0 {
        for (n, o) in v.iter_mut().enumerate() {
            if n % 2 == 1 {
                *o = -*o;
            }
        }
    }
    v
}

/// (P_l, P_l′, P_l″) at μ for l = 0..=lmax.
pub fn legendre_table(lmax: usize, mu: f64) -> Vec<[f64; 3]> {
    let mut t = vec![[0.0; 3]; lmax + 1];
    t[0] = [1.0, 0.0, 0.0];
    if lmax == 0 {
        return t;
    }
    t[1] = [mu, 1.0, 0.0];
    for l in 2..=lmax {
        let lf = l as f64;
        let p = ((2.0 * lf - 1.0) * mu * t[l - 1][0] - (lf - 1.0) * t[l - 2][0]) / lf;
        let dp = t[l - 2][1] + (2.0 * lf - 1.0) * t[l - 1][0];
        let ddp = t[l - 2][2] + (2.0 * lf - 1.0) * t[l - 1][1];
        t[l] = [p, dp, ddp];
    }
    t
}
