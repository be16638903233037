use nspg::decay::{cond_b_estimator, cond_c_estimator, default_candidates, scaling_fit, DecayConfig};
use nspg::drift::{drift_record, integrate_Phi, DriftConfig};
use nspg::fields::{
    drifted_velocity, make_gaussian_vortex_at, make_taylor_green, max_divergence, AnalyticField, DriftSpec, FieldMeta,
    DecayClass, Grid3, NegatedDrift, Quadratic, Rank, SampledField, SinDrift, TimeGrid,
};
use nspg::geom::{norm, sub};
use nspg::io::{decode, encode, RunConfig};
use nspg::kernels::kernel_k;
use nspg::pressure::{far_pressure, far_shell_bound, uloc_sq_bound, PressureConfig};
use nspg::spectral::{riesz_combine, Embedding};
use nspg::verify::CheckReport;
use nspg::{bump::TestBump, BallSpec, CutoffSpec, Vec3};
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

fn point(lo: f64, hi: f64) -> impl Strategy<Value = Vec3> {
    [lo..hi, lo..hi, lo..hi]
}

fn nonzero_point() -> impl Strategy<Value = Vec3> {
    point(-5.0, 5.0).prop_filter("away from the origin", |y| norm(*y) > 1e-3)
}

proptest! {
    #[test]
    fn kernel_symmetric(y in nonzero_point(), i in 0usize..3, j in 0usize..3) {
        prop_assert_eq!(kernel_k(i, j, y).unwrap(), kernel_k(j, i, y).unwrap());
    }

    #[test]
    fn kernel_homogeneous(y in nonzero_point(), lam in 0.01f64..100.0, i in 0usize..3, j in 0usize..3) {
        let a = kernel_k(i, j, y.map(|c| c * lam)).unwrap();
        let b = kernel_k(i, j, y).unwrap() / lam.powi(3);
        let scale = 1.0 / (4.0 * PI * (lam * norm(y)).powi(3));
        prop_assert!((a - b).abs() <= 1e-13 * scale, "{} vs {}", a, b);
    }

    #[test]
    fn kernel_trace_free(y in nonzero_point()) {
        let tr: f64 = (0..3).map(|i| kernel_k(i, i, y).unwrap()).sum();
        let scale = 1.0 / (4.0 * PI * norm(y).powi(3));
        prop_assert!(tr.abs() <= 1e-14 * scale, "trace {}", tr);
    }

    #[test]
    fn cutoff_sandwich(x in point(-20.0, 20.0), r in 0.1f64..4.0) {
        let c = CutoffSpec::new(r).unwrap();
        let th = c.theta(x);
        let rho = norm(x);
        prop_assert!((0.0..=1.0).contains(&th));
        if rho <= 2.0 * r {
            prop_assert_eq!(th, 1.0);
        }
        if rho >= 4.0 * r {
            prop_assert_eq!(th, 0.0);
        }
        prop_assert!(c.theta_radial_derivative(rho).abs() <= c.gradient_bound() * (1.0 + 1e-12));
    }

    #[test]
    fn drift_spec_consistent(a in point(-1.0, 1.0), omega in 0.1f64..5.0, t in 0.05f64..2.0) {
        let d = SinDrift::new(a, omega).unwrap();
        prop_assert_eq!(d.big_phi(0.0), [0.0; 3]);
        let h = 1e-5;
        for k in 0..3 {
            let fd = (d.big_phi(t + h)[k] - d.big_phi(t - h)[k]) / (2.0 * h);
            prop_assert!((fd - d.phi(t)[k]).abs() < 1e-7);
        }
        prop_assert!(norm(d.phi(t)) <= d.sup_bound() * (1.0 + 1e-12));
    }

    #[test]
    fn trapezoid_big_phi_bounded_by_l1(phi in prop::collection::vec(point(-2.0, 2.0), 2..40), dt in 0.001f64..0.5) {
        let big = integrate_Phi(&phi, dt);
        prop_assert_eq!(big[0], [0.0; 3]);
        let mut l1 = 0.0;
        for n in 1..phi.len() {
            l1 += 0.5 * dt * (norm(phi[n - 1]) + norm(phi[n]));
            for k in 0..3 {
                let step = big[n][k] - big[n - 1][k];
                prop_assert!((step - 0.5 * dt * (phi[n - 1][k] + phi[n][k])).abs() < 1e-12);
            }
            prop_assert!(norm(big[n]) <= l1 * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn scaling_fit_exact_on_power_laws(c in 0.01f64..100.0, alpha in -4.0f64..1.0, n in 3usize..8) {
        let sweep: Vec<(f64, f64)> = (0..n).map(|k| {
            let r = 2f64.powi(k as i32 + 1);
            (r, c * r.powf(alpha))
        }).collect();
        let (slope, rms) = scaling_fit(&sweep).unwrap();
        prop_assert!((slope - alpha).abs() < 1e-10, "{} vs {}", slope, alpha);
        prop_assert!(rms < 1e-10);
    }

    #[test]
    fn check_report_pass_iff_within_tolerance(res in prop::collection::vec(0.0f64..2.0, 1..10), tol in 0.0f64..2.0) {
        let named = res.iter().enumerate().map(|(k, v)| (format!("r{k}"), *v)).collect();
        let r = CheckReport::new("p", named, tol, String::new());
        prop_assert_eq!(r.pass, res.iter().all(|v| *v <= tol));
    }

    #[test]
    fn config_hash_deterministic(n in 4usize..128, radius in 0.1f64..10.0, nu in 0.01f64..3.0) {
        let mut c = RunConfig::default();
        c.grid.n = n;
        c.ball.radius = radius;
        c.generator.nu = nu;
        let back = RunConfig::parse(&c.to_toml()).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.hash(), c.hash());
        let mut d = c.clone();
        d.ball.radius = radius * 1.5;
        prop_assert_ne!(d.hash(), c.hash());
    }
}

fn sampled(dims: [usize; 3], n_t: usize, vector: bool, seed_vals: &[f64]) -> SampledField {
    let grid = Grid3::new([-1.0, 0.5, 2.0], 0.25, dims).unwrap();
    let times = TimeGrid::new(0.0, 1.0, n_t).unwrap();
    let rank = if vector { Rank::Vector } else { Rank::Scalar };
    let len = dims.iter().product::<usize>() * n_t * rank.components();
    let values = (0..len).map(|k| seed_vals[k % seed_vals.len()] * (1.0 + k as f64)).collect();
    SampledField::new(grid, times, rank, values, FieldMeta::new("p", DecayClass::CompactSupport)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_file_round_trip(
        dims in [2usize..6, 2usize..6, 2usize..6],
        n_t in 2usize..4,
        vector in any::<bool>(),
        vals in prop::collection::vec(-1e6f64..1e6, 1..16),
    ) {
        let f = sampled(dims, n_t, vector, &vals);
        let (h, v) = decode(&encode(&f)).unwrap();
        prop_assert_eq!(h.dims, dims);
        prop_assert_eq!(h.n_t, n_t);
        prop_assert_eq!(v.len(), f.values.len());
        prop_assert!(v.iter().zip(&f.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn divergence_free_generators(amp in 0.1f64..3.0, width in 0.5f64..2.0, c in point(-2.0, 2.0), nu in 0.1f64..2.0, seed in any::<u64>()) {
        let g = make_gaussian_vortex_at(amp, width, c, 0.5).unwrap();
        let (d, at) = max_divergence(g.as_ref(), 200, seed);
        prop_assert!(d < 1e-8, "gaussian divergence {} at {:?}", d, at);
        let (u, _) = make_taylor_green(nu).unwrap();
        let (d, at) = max_divergence(u.as_ref(), 200, seed);
        prop_assert!(d < 1e-8, "taylor-green divergence {} at {:?}", d, at);
    }

    #[test]
    fn inject_then_remove_drift_recovers_field(a in point(-1.0, 1.0), omega in 0.1f64..4.0, x in point(-3.0, 3.0), t in 0.0f64..2.0) {
        let (u, _) = make_taylor_green(1.0).unwrap();
        let d: Arc<dyn DriftSpec> = Arc::new(SinDrift::new(a, omega).unwrap());
        let there = drifted_velocity(u.clone(), d.clone());
        let back = drifted_velocity(there, Arc::new(NegatedDrift(d)));
        let e = norm(sub(back.eval(x, t), u.eval(x, t)));
        prop_assert!(e < 1e-12, "{}", e);
    }

    #[test]
    fn riesz_trace_is_minus_identity(vals in prop::collection::vec(-1.0f64..1.0, 512)) {
        let dims = [8, 8, 8];
        let terms: Vec<(usize, usize, f64, &[f64])> = (0..3).map(|i| (i, i, 1.0, vals.as_slice())).collect();
        let out = riesz_combine(&terms, dims, 0.3, Embedding::Torus).unwrap();
        let err = out.iter().zip(&vals).map(|(o, v)| (o + v).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-8, "{}", err);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn cond_c_below_cond_b(c in point(-3.0, 3.0), r in 1.0f64..8.0) {
        let u = AnalyticField::Vector(make_gaussian_vortex_at(1.0, 1.0, c, 0.0).unwrap());
        let cfg = DecayConfig::default();
        let cc = cond_c_estimator(&u, r, &cfg);
        let cb = cond_b_estimator(&u, r, &default_candidates(&u, r), &cfg);
        prop_assert!(cc <= cb * (1.0 + 1e-12), "{} > {}", cc, cb);
    }

    #[test]
    fn cond_c_stable_under_refinement(c in point(-3.0, 3.0), r in 1.0f64..8.0) {
        let u = AnalyticField::Vector(make_gaussian_vortex_at(1.0, 1.0, c, 0.0).unwrap());
        let coarse = DecayConfig::default();
        let fine = DecayConfig { n_radial: 2 * coarse.n_radial, n_time: 2 * coarse.n_time, ..coarse };
        let a = cond_c_estimator(&u, r, &coarse);
        let b = cond_c_estimator(&u, r, &fine);
        prop_assert!((a - b).abs() <= 1e-3 * b, "{} vs {}", a, b);
    }

    #[test]
    fn far_part_within_shell_bound(x0 in point(-2.0, 2.0), r in 0.5f64..2.0, dir in point(-1.0, 1.0), t in 0.0f64..1.0) {
        let (u, _) = make_taylor_green(1.0).unwrap();
        let src = Quadratic::new(u.clone());
        let ball = BallSpec::new(x0, r).unwrap();
        let x = if norm(dir) > 1.0 { x0 } else { [x0[0] + r * dir[0], x0[1] + r * dir[1], x0[2] + r * dir[2]] };
        let (v, tail) = far_pressure(&src, &ball, x, t, &PressureConfig::default()).unwrap();
        prop_assert!(tail >= 0.0);
        prop_assert!(v.abs() <= far_shell_bound(r, uloc_sq_bound(u.meta())));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2))]

    #[test]
    fn drift_independent_of_bump(c in point(-0.5, 0.5), radius in 0.8f64..1.5) {
        let (u, _) = make_taylor_green(1.0).unwrap();
        let d: Arc<dyn DriftSpec> = Arc::new(SinDrift::new([0.3, 0.0, 0.0], 1.0).unwrap());
        let ut = drifted_velocity(u, d.clone());
        let times = TimeGrid::new(0.0, 1.0, 17).unwrap();
        let cfg = DriftConfig::default();
        let a = drift_record(&ut, &ut, &TestBump::standard(), &times, &cfg).unwrap();
        let b = drift_record(&ut, &ut, &TestBump::new(c, radius).unwrap(), &times, &cfg).unwrap();
        for (n, t) in times.times().into_iter().enumerate() {
            if t < 0.25 {
                continue;
            }
            let rel = norm(sub(a.phi[n], b.phi[n])) / norm(d.phi(t));
            prop_assert!(rel < 2e-2, "t={}: {:?} vs {:?}", t, a.phi[n], b.phi[n]);
        }
    }
}
