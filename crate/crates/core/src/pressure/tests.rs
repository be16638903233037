use super::*;
use crate::fields::{make_constant, make_gaussian_vortex, make_taylor_green, make_zero_vector, FnSource};
use crate::fields::{DecayClass, Support};

fn tg_src() -> Quadratic {
    let (u, _) = make_taylor_green(0.0).unwrap();
    Quadratic::new(u)
}

fn gauss_src() -> Quadratic {
    Quadratic::new(make_gaussian_vortex(1.0, 1.0).unwrap())
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    max - min
}

const PROBES: [Vec3; 5] = [[0.0, 0.0, 0.0], [0.4, -0.3, 0.2], [-0.6, 0.1, 0.5], [0.2, 0.7, -0.4], [0.0, -0.5, -0.6]];

#[test]
fn modal_expansion_matches_classical_up_to_constant() {
    let src = tg_src();
    let ball = BallSpec::new([0.0; 3], 1.0).unwrap();
    let cfg = PressureConfig::default();
    let (vals, tail) = expansion_at_points(&src, &ball, &PROBES, 0.0, &cfg).unwrap();
    assert!(tail < 1e-10, "tail {tail}");
    let diffs: Vec<f64> =
        PROBES.iter().zip(&vals).map(|(x, v)| v - modal_classical_at(&src, *x, 0.0).unwrap()).collect();
    let range = spread(&PROBES.iter().map(|x| modal_classical_at(&src, *x, 0.0).unwrap()).collect::<Vec<_>>());
    assert!(spread(&diffs) < 1e-8 * range.max(1.0), "diffs {diffs:?}");
}

#[test]
fn modal_expansion_on_offset_ball() {
    let src = tg_src();
    let ball = BallSpec::new([1.0, 0.3, -0.2], 1.5).unwrap();
    let cfg = PressureConfig::default();
    let xs: Vec<Vec3> = PROBES.iter().map(|p| [p[0] + 1.0, p[1] + 0.3, p[2] - 0.2]).collect();
    let (vals, _) = expansion_at_points(&src, &ball, &xs, 0.0, &cfg).unwrap();
    let diffs: Vec<f64> = xs.iter().zip(&vals).map(|(x, v)| v - modal_classical_at(&src, *x, 0.0).unwrap()).collect();
    assert!(spread(&diffs) < 1e-8, "diffs {diffs:?}");
}

#[test]
fn decaying_expansion_matches_whole_space_pv() {
    // with R = 8 the support (radius 6) sits inside B_2R, so p̄ there is the plain PV integral
    let src = gauss_src();
    let cfg = PressureConfig::default();
    let small = BallSpec::new([0.5, 0.0, 0.0], 1.0).unwrap();
    let big = BallSpec::new([0.0; 3], 8.0).unwrap();
    let xs: Vec<Vec3> = PROBES.iter().map(|p| [p[0] + 0.5, p[1], p[2]]).collect();
    let (vals, _) = expansion_at_points(&src, &small, &xs, 0.0, &cfg).unwrap();
    let (refs, tail) = expansion_at_points(&src, &big, &xs, 0.0, &cfg).unwrap();
    assert!(tail < 1e-8);
    let diffs: Vec<f64> = vals.iter().zip(&refs).map(|(a, b)| a - b).collect();
    assert!(spread(&diffs) < 1e-6 * spread(&refs), "diffs {diffs:?} range {}", spread(&refs));
}

#[test]
fn glue_telescopes_modal_and_decaying() {
    let cfg = PressureConfig::default();
    let x = [0.3, -0.4, 0.2];
    for src in [&tg_src() as &dyn TensorSource, &gauss_src()] {
        for n in [2usize, 3] {
            let bn = BallSpec::new([0.0; 3], n as f64).unwrap();
            let bm = BallSpec::new([0.0; 3], (n - 1) as f64).unwrap();
            let lhs = expansion_at(src, &bn, x, 0.0, &cfg).unwrap() + glue_constant(src, n, 0.0, &cfg).unwrap();
            let rhs = expansion_at(src, &bm, x, 0.0, &cfg).unwrap();
            assert!((lhs - rhs).abs() < 1e-6, "{} n={n}: {lhs} vs {rhs}", src.meta().name);
        }
    }
}

#[test]
fn glue_vanishes_for_small_support() {
    let meta = {
        let mut m = FieldMeta::new("blob", DecayClass::CompactSupport);
        m.support = Some(Support { center: [0.0; 3], radius: 1.0 });
        m.envelope = Some(crate::fields::Envelope::Compact { amp: 1.0 });
        m.bandwidth = 8.0;
        m
    };
    let src = FnSource {
        f: |y: Vec3, _t: f64| {
            let r2 = dot(y, y);
            if r2 >= 1.0 {
                Sym3::default()
            } else {
                Sym3::outer([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]).scaled((-1.0 / (1.0 - r2)).exp())
            }
        },
        meta,
    };
    let cfg = PressureConfig::default();
    for n in 2..5 {
        assert_eq!(glue_constant(&src, n, 0.0, &cfg).unwrap(), 0.0);
    }
    // supported inside B_2R: far part is exactly zero
    let ball = BallSpec::new([0.0; 3], 1.0).unwrap();
    let (v, _) = far_pressure(&src, &ball, [0.2, 0.1, 0.0], 0.0, &cfg).unwrap();
    assert_eq!(v, 0.0);
}

#[test]
fn zero_field_gives_zero() {
    let src = Quadratic::new(make_zero_vector());
    let cfg = PressureConfig::default();
    let ball = BallSpec::new([0.0; 3], 1.0).unwrap();
    assert_eq!(expansion_at(&src, &ball, [0.1, 0.2, 0.3], 0.0, &cfg).unwrap(), 0.0);
    assert_eq!(global_expansion(&src, [2.5, 0.0, 0.0], 0.0, &cfg).unwrap(), 0.0);
}

#[test]
fn constant_field_has_flat_expansion() {
    let src = Quadratic::new(make_constant([0.7, -0.2, 0.4]));
    let cfg = PressureConfig::default();
    let ball = BallSpec::new([0.0; 3], 1.0).unwrap();
    let (vals, _) = expansion_at_points(&src, &ball, &PROBES, 0.0, &cfg).unwrap();
    assert!(spread(&vals) < 1e-10, "{vals:?}");
}

#[test]
fn classical_taylor_green_on_torus() {
    let (u, p) = make_taylor_green(0.0).unwrap();
    let src = Quadratic::new(u);
    let grid = Grid3::periodic_cube(0.0, 2.0 * PI, 16).unwrap();
    let times = TimeGrid::snapshot(0.0);
    let cp = classical_pressure(&src, &grid, &times).unwrap();
    for n in 0..grid.len() {
        let x = grid.node(grid.unflat(n));
        assert!((cp.values[n] - p.eval(x, 0.0)).abs() < 1e-12, "{x:?}: {} vs {}", cp.values[n], p.eval(x, 0.0));
    }
    // off-period grid goes through the mode sum
    let g2 = Grid3::new([0.1, 0.2, 0.3], 0.37, [5, 4, 3]).unwrap();
    let cp2 = classical_pressure(&src, &g2, &times).unwrap();
    for n in 0..g2.len() {
        let x = g2.node(g2.unflat(n));
        assert!((cp2.values[n] - p.eval(x, 0.0)).abs() < 1e-12);
    }
}

#[test]
fn classical_refuses_uloc_only() {
    let mut meta = FieldMeta::new("rough", DecayClass::UlocOnly);
    meta.bandwidth = 1.0;
    let src = FnSource { f: |_y: Vec3, _t: f64| Sym3::default(), meta };
    let grid = Grid3::new([0.0; 3], 0.5, [4, 4, 4]).unwrap();
    assert!(matches!(classical_pressure(&src, &grid, &TimeGrid::snapshot(0.0)), Err(Error::NoDecay(_))));
    let ball = BallSpec::new([0.0; 3], 1.0).unwrap();
    assert!(matches!(
        far_pressure(&src, &ball, [0.0; 3], 0.0, &PressureConfig::default()),
        Err(Error::NoTailBound(_))
    ));
}

#[test]
fn lattice_expansion_matches_pointwise() {
    let src = gauss_src();
    let ball = BallSpec::new([0.0; 3], 1.0).unwrap();
    let cfg = PressureConfig { h: Some(0.125), ..Default::default() };
    let exp = local_expansion(&src, &ball, &TimeGrid::snapshot(0.0), &cfg).unwrap();
    let nodes = exp.inside_nodes();
    let picks = [nodes[0], nodes[nodes.len() / 3], nodes[nodes.len() / 2], nodes[nodes.len() - 1]];
    let xs: Vec<Vec3> = picks.iter().map(|&n| exp.grid().node(exp.grid().unflat(n))).collect();
    let (pw, _) = expansion_at_points(&src, &ball, &xs, 0.0, &cfg).unwrap();
    let lat: Vec<f64> = picks.iter().map(|&n| exp.near.values[n] + exp.far.values[n]).collect();
    let d: Vec<f64> = pw.iter().zip(&lat).map(|(a, b)| a - b).collect();
    assert!(spread(&d) < 1e-5 * spread(&pw).max(1e-3), "{d:?} {pw:?}");
}

#[test]
fn classical_gaussian_matches_pointwise_pv() {
    let src = gauss_src();
    let grid = Grid3::new([-0.5, -0.25, 0.0], 0.25, [5, 3, 2]).unwrap();
    let cp = classical_pressure(&src, &grid, &TimeGrid::snapshot(0.0)).unwrap();
    let big = BallSpec::new([0.0; 3], 8.0).unwrap();
    for n in [0, 7, grid.len() - 1] {
        let x = grid.node(grid.unflat(n));
        let pv = near_pointwise(&src, &big, x, 0.0);
        assert!((pv - cp.values[n]).abs() < 1e-6, "{pv} vs {}", cp.values[n]);
    }
}

#[test]
fn pairing_modal_matches_grid_quadrature() {
    let src = tg_src();
    let bump = TestBump::new([0.3, -0.2, 0.1], 1.0).unwrap();
    let cfg = PressureConfig::default();
    let v = pair_with_bump_gradient(&src, &bump, 0.0, &cfg).unwrap();
    // ∫ p ∂_kβ with p from the mode sum, midpoint rule on the bump's cube
    let n = 96;
    let h = 2.0 / n as f64;
    let mut acc = [0.0; 3];
    for i in 0..n * n * n {
        let idx = [i % n, (i / n) % n, i / (n * n)];
        let x = [0, 1, 2].map(|d| bump.center[d] - 1.0 + (idx[d] as f64 + 0.5) * h);
        let g = bump.gradient(x);
        let p = modal_classical_at(&src, x, 0.0).unwrap();
        for d in 0..3 {
            acc[d] += p * g[d];
        }
    }
    let w = h * h * h;
    for d in 0..3 {
        assert!((acc[d] * w - v[d]).abs() < 1e-8, "d={d}: {} vs {}", acc[d] * w, v[d]);
    }
}

#[test]
fn pairing_decaying_matches_grid_quadrature() {
    let src = Quadratic::new(make_gaussian_vortex(1.0, 0.5).unwrap());
    let bump = TestBump::new([0.4, 0.1, 0.0], 1.5).unwrap();
    let cfg = PressureConfig { tol_far: 1e-9, ..Default::default() };
    let v = pair_with_bump_gradient(&src, &bump, 0.0, &cfg).unwrap();
    let n = 30;
    let h = 3.0 / n as f64;
    let origin = [0, 1, 2].map(|d| bump.center[d] - 1.5 + 0.5 * h);
    let grid = Grid3::new(origin, h, [n, n, n]).unwrap();
    let cp = classical_pressure(&src, &grid, &TimeGrid::snapshot(0.0)).unwrap();
    let mut acc = [0.0; 3];
    for m in 0..grid.len() {
        let g = bump.gradient(grid.node(grid.unflat(m)));
        for d in 0..3 {
            acc[d] += cp.values[m] * g[d] * h * h * h;
        }
    }
    for d in 0..3 {
        assert!((acc[d] - v[d]).abs() < 1e-6 * (1.0 + v[d].abs()), "d={d}: {} vs {}", acc[d], v[d]);
    }
}

#[test]
fn far_part_below_dyadic_shell_bound() {
    let src = tg_src();
    let ball = BallSpec::new([0.0; 3], 1.0).unwrap();
    let bound = far_shell_bound(1.0, uloc_sq_bound(src.u.meta()));
    let cfg = PressureConfig::default();
    for x in PROBES {
        let (v, _) = far_pressure(&src, &ball, x, 0.0, &cfg).unwrap();
        assert!(v.abs() <= bound, "{v} > {bound}");
    }
}
