use contact_stokes::kernels::*;
use contact_stokes::quadrature::GaussRule;
use contact_stokes::Error;
use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

/// Integral form of the remainder: ∫₀^z 3(s−z)(s+y)/(1+(y+s)²)^{5/2} ds, by 8 Gauss panels.
fn r_oracle(y: f64, z: f64) -> f64 {
    let rule = GaussRule::new(20);
    let panels = 8;
    let mut s = 0.0;
    for p in 0..panels {
        let a = z * p as f64 / panels as f64;
        let b = z * (p + 1) as f64 / panels as f64;
        s += rule.integrate(a, b, |t| {
            3.0 * (t - z) * (t + y) / (1.0 + (y + t) * (y + t)).powf(2.5)
        });
    }
    s
}

#[test]
fn remainder_matches_integral_form_on_grid() {
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        for j in 0..50 {
            let y = -2.0 + 4.0 * i as f64 / 49.0;
            let z = -2.0 + 4.0 * j as f64 / 49.0;
            worst = worst.max((r_eval(y, z) - r_oracle(y, z)).abs());
        }
    }
    assert!(worst <= 1e-10, "max gap {worst:e}");
}

#[test]
fn remainder_examples() {
    assert!((r_eval(0.0, 1.0) - (0.5f64.sqrt() - 1.0)).abs() < 1e-15);
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..100 {
        let y = rng.gen_range(-10.0..10.0);
        assert_eq!(r_eval(y, 0.0), 0.0);
        assert_eq!(r_dz(y, 0.0), 0.0);
    }
}

proptest! {
    #[test]
    fn taylor_identity(y in -5.0f64..5.0, z in -3.0f64..3.0) {
        let lhs = (y + z) / (1.0 + (y + z) * (y + z)).sqrt();
        let rhs = y / (1.0 + y * y).sqrt() + z / (1.0 + y * y).powf(1.5) + r_eval(y, z);
        prop_assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn remainder_derivatives_match_differences(y in -3.0f64..3.0, z in -1.5f64..1.5) {
        let h = 1e-5;
        let dz = (r_eval(y, z + h) - r_eval(y, z - h)) / (2.0 * h);
        let dy = (r_eval(y + h, z) - r_eval(y - h, z)) / (2.0 * h);
        prop_assert!((dz - r_dz(y, z)).abs() < 1e-8);
        prop_assert!((dy - r_dy(y, z)).abs() < 1e-8);
    }
}

#[test]
fn potential_differentiates_to_remainder() {
    let h = 1e-4;
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..50 {
        let y = rng.gen_range(-3.0..3.0);
        let z = rng.gen_range(-1.0..1.0);
        assert_eq!(q_eval(y, 0.0).unwrap(), 0.0);
        let fd = (q_eval(y, z + h).unwrap() - q_eval(y, z - h).unwrap()) / (2.0 * h);
        assert!((fd - r_eval(y, z)).abs() <= 1e-7, "y={y} z={z}");
    }
}

#[test]
fn remainder_bounds_on_compact() {
    // sup of |ℛ|/z², |∂_zℛ|/|z|, |𝒬|/|z|³ over y ∈ [−5,5], 0 < |z| ≤ 1
    let (mut kr, mut kd, mut kq) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..=40 {
        let y = -5.0 + 10.0 * i as f64 / 40.0;
        for j in 1..=40 {
            for sgn in [-1.0, 1.0] {
                let z = sgn * j as f64 / 40.0;
                kr = kr.max(r_eval(y, z).abs() / (z * z));
                kd = kd.max(r_dz(y, z).abs() / z.abs());
                kq = kq.max(q_eval(y, z).unwrap().abs() / z.abs().powi(3));
            }
        }
    }
    // |f″| ≤ 0.86 and |f‴| ≤ 3 for f(y) = y/√(1+y²), which caps each ratio
    assert!(kr.is_finite() && kr < 1.0, "R/z^2 {kr}");
    assert!(kd.is_finite() && kd < 2.0, "dR/z {kd}");
    assert!(kq.is_finite() && kq < 1.0, "Q/z^3 {kq}");
    // small |z| does not blow the ratios up
    let tiny = r_eval(0.3, 1e-6).abs() / 1e-12;
    assert!(tiny <= kr * 1.01);
}

#[test]
fn w_hat_is_quadratic_for_sinh() {
    let r = ResponseFunction::sinh(2.0, 3.0).unwrap();
    assert_eq!(r.w_hat(0.0).unwrap(), 0.0);
    assert!(r.w_hat_prime(0.0).unwrap().abs() < 1e-15);
    let mut k: f64 = 0.0;
    for i in 1..=100 {
        let z = 0.5 * i as f64 / 100.0;
        for v in [z, -z] {
            k = k.max(r.w_hat(v).unwrap().abs() / (v * v));
        }
    }
    // Ŵ is odd, so the z² bound holds with room: |Ŵ(z)| ≈ z³/(6A²)
    assert!(k < 0.05, "fitted K = {k}");
}

#[test]
fn linear_response_has_no_remainder() {
    let r = ResponseFunction::linear(0.7).unwrap();
    for v in [-1.0, -0.1, 0.0, 0.3, 2.0] {
        assert_eq!(r.w_hat(v).unwrap(), 0.0);
    }
    assert_eq!(kappa_of(&r), 0.7);
    assert!(matches!(
        ResponseFunction::linear(0.0),
        Err(Error::NonPositiveKappa(_))
    ));
}

#[test]
fn kappa_examples() {
    let r = ResponseFunction::sinh(2.0, 3.0).unwrap();
    assert!((kappa_of(&r) - 1.0 / 6.0).abs() < 1e-15);
    let z: Vec<f64> = (-40..=40).map(|i| i as f64 / 40.0).collect();
    let v: Vec<f64> = z.iter().map(|z| z + z * z * z).collect();
    let t = ResponseFunction::Tabulated(TabulatedResponse::new(z, v).unwrap());
    assert!((kappa_of(&t) - 1.0).abs() <= 1e-6, "kappa {}", kappa_of(&t));
}

#[test]
fn tabulated_inverse_round_trip() {
    let z: Vec<f64> = (-60..=60).map(|i| i as f64 / 30.0).collect();
    let v: Vec<f64> = z.iter().map(|z| 0.5 * (1.3 * z).sinh() + 0.1 * z).collect();
    let r = ResponseFunction::Tabulated(TabulatedResponse::new(z, v.clone()).unwrap());
    let (lo, hi) = (v[0], *v.last().unwrap());
    for i in 0..=200 {
        let s = lo + (hi - lo) * i as f64 / 200.0;
        let back = r.v(r.w(s).unwrap()).unwrap();
        assert!((back - s).abs() <= 1e-9, "v={s} -> {back}");
    }
    assert!(matches!(r.w(hi + 1.0), Err(Error::OutOfRange { .. })));
}

#[test]
fn sinh_inverse_round_trip() {
    let r = ResponseFunction::sinh(0.8, 1.7).unwrap();
    for i in -50..=50 {
        let s = i as f64 / 10.0;
        assert!((r.v(r.w(s).unwrap()).unwrap() - s).abs() <= 1e-9 * s.abs().max(1.0));
    }
}

#[test]
fn non_monotone_table_is_rejected() {
    let z = vec![-1.0, -0.5, 0.0, 0.5, 1.0, 1.5];
    let v = vec![-1.0, -0.5, 0.0, 0.6, 0.4, 1.0];
    assert!(matches!(
        TabulatedResponse::new(z, v),
        Err(Error::NonMonotoneResponse(_))
    ));
}

#[test]
fn table_loads_from_csv() {
    let dir = std::env::temp_dir().join(format!("cs-kernels-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("response.csv");
    let mut text = String::from("z,V\n");
    for i in -20..=20 {
        let z = i as f64 / 20.0;
        text.push_str(&format!("{z},{}\n", 2.0 * z + z * z * z));
    }
    std::fs::write(&path, text).unwrap();
    let t = TabulatedResponse::from_csv(&path).unwrap();
    assert_eq!(t.samples().0.len(), 41);
    assert!((kappa_of(&ResponseFunction::Tabulated(t)) - 0.5).abs() < 1e-6);
    std::fs::write(&path, "0,0\n1,x\n").unwrap();
    assert!(TabulatedResponse::from_csv(&path).is_err());
    std::fs::remove_dir_all(dir).ok();
}
