use contact_stokes::equilibrium::{build_equilibrium, PhysicalParams};
use contact_stokes::fem::element_point;
use contact_stokes::kernels::kappa_of;
use contact_stokes::mesh::{build_mesh, Mesh};
use contact_stokes::norms::*;
use contact_stokes::quadrature::{integrate, TriangleRule};
use contact_stokes::stepper::{Simulation, StepRecord};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn unit_square(n: usize) -> Mesh {
    Mesh::rectangle(0.0, 1.0, 0.0, 1.0, n, n).unwrap()
}

fn nodal(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    mesh.nodes.iter().map(|x| f(x[0], x[1])).collect()
}

/// Plain degree-5 quadrature of Σ|∂^α u|² for an analytic field.
fn direct(mesh: &Mesh, f: impl Fn(f64, f64) -> [f64; 6], k: usize) -> f64 {
    let rule = TriangleRule::degree5();
    let mut s = 0.0;
    for t in 0..mesh.triangles.len() {
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let ep = element_point(mesh, t, p[0], p[1]);
            let v = f(ep.x[0], ep.x[1]);
            let mut d = v[0] * v[0];
            if k >= 1 {
                d += v[1] * v[1] + v[2] * v[2];
            }
            if k >= 2 {
                d += v[3] * v[3] + 2.0 * v[4] * v[4] + v[5] * v[5];
            }
            s += w * ep.det * d;
        }
    }
    s.sqrt()
}

#[test]
fn weighted_constant_matches_polar_oracle() {
    let mesh = unit_square(4);
    let one = vec![1.0; mesh.n_nodes()];
    for delta in [0.3, 0.7, -0.4] {
        let spec = WeightedNormSpec::new(0, delta, vec![[0.0, 0.0]]);
        let got = weighted_norm(&mesh, &one, &spec).unwrap().powi(2);
        // ∫∫ r^{2δ} over the square in polar form, split along the diagonal
        let p = 2.0 * delta + 2.0;
        let oracle = 2.0
            * integrate(
                |th: f64| th.cos().powf(-p) / p,
                0.0,
                std::f64::consts::FRAC_PI_4,
            )
            .unwrap();
        assert!(
            (got - oracle).abs() < 1e-8,
            "delta={delta} got={got} oracle={oracle}"
        );
    }
}

#[test]
fn unweighted_norms_match_plain_quadrature() {
    let mesh = unit_square(6);
    let u = |x: f64, y: f64| {
        [
            x * x + 3.0 * x * y - y * y,
            2.0 * x + 3.0 * y,
            3.0 * x - 2.0 * y,
            2.0,
            3.0,
            -2.0,
        ]
    };
    let vals = nodal(&mesh, |x, y| u(x, y)[0]);
    for k in 0..=2 {
        let spec = WeightedNormSpec::new(k, 0.0, vec![[0.0, 0.0]]);
        let got = weighted_norm(&mesh, &vals, &spec).unwrap();
        let want = direct(&mesh, u, k);
        assert!(
            (got - want).abs() < 1e-12 * want,
            "k={k} got={got} want={want}"
        );
    }
}

#[test]
fn orders_beyond_two_are_rejected() {
    let mesh = unit_square(4);
    let vals = vec![0.0; mesh.n_nodes()];
    assert!(weighted_norm(
        &mesh,
        &vals,
        &WeightedNormSpec::new(3, 0.5, vec![[0.0, 0.0]])
    )
    .is_err());
    assert!(weighted_norm(
        &mesh,
        &vals[1..],
        &WeightedNormSpec::new(0, 0.5, vec![[0.0, 0.0]])
    )
    .is_err());
}

#[test]
fn patch_recovery_is_exact_for_quadratics() {
    let mesh = unit_square(5);
    let vals = nodal(&mesh, |x, y| {
        1.0 + x - 2.0 * y + 0.5 * x * x - 1.5 * x * y + 2.5 * y * y
    });
    for h in recover_hessian(&mesh, &vals) {
        assert!(
            (h[0] - 1.0).abs() < 1e-9 && (h[1] + 1.5).abs() < 1e-9 && (h[2] - 5.0).abs() < 1e-9,
            "{h:?}"
        );
    }
}

#[test]
fn hardy_embedding_holds_with_one_constant() {
    let mesh = unit_square(12);
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let delta = 0.4;
    let corner = vec![[0.0, 0.0]];
    let mut ratios = Vec::new();
    for _ in 0..30 {
        let c = [rng.gen_range(0.0..0.6), rng.gen_range(0.0..0.6)];
        let w: f64 = rng.gen_range(0.15..0.4);
        let bump = |x: f64, y: f64| {
            let r2 = ((x - c[0]).powi(2) + (y - c[1]).powi(2)) / (w * w);
            if r2 < 1.0 {
                (1.0 - r2).powi(3)
            } else {
                0.0
            }
        };
        let vals = nodal(&mesh, bump);
        let lhs = weighted_norm(
            &mesh,
            &vals,
            &WeightedNormSpec::new(0, delta - 1.0, corner.clone()),
        )
        .unwrap();
        let rhs = weighted_norm(
            &mesh,
            &vals,
            &WeightedNormSpec::new(1, delta, corner.clone()),
        )
        .unwrap();
        ratios.push(lhs / rhs);
    }
    let c = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(ratios.iter().all(|r| r.is_finite() && *r > 0.0));
    // 1/(1−δ)-type Hardy constant plus the L² part on a unit domain
    assert!(c < 4.0, "fitted constant {c}");
}

fn samples(n: usize, ell: f64, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..n)
        .map(|i| f(-ell + 2.0 * ell * i as f64 / (n - 1) as f64))
        .collect()
}

/// ∫∫ |f(x)−f(y)|²/|x−y|² by nested adaptive quadrature of the difference quotient.
fn gagliardo_oracle(
    f: impl Fn(f64) -> f64 + Copy,
    df: impl Fn(f64) -> f64 + Copy,
    ell: f64,
) -> f64 {
    integrate(
        |x| {
            integrate(
                |y| {
                    if (x - y).abs() < 1e-7 {
                        df(x).powi(2)
                    } else {
                        ((f(x) - f(y)) / (x - y)).powi(2)
                    }
                },
                -ell,
                ell,
            )
            .unwrap()
        },
        -ell,
        ell,
    )
    .unwrap()
}

#[test]
fn half_order_seminorm_of_linear_and_smooth_functions() {
    let ell = 0.8;
    let lin = gagliardo_seminorm(&samples(257, ell, |x| x), ell, 0.0).unwrap();
    let oracle = gagliardo_oracle(|x| x, |_| 1.0, ell).sqrt();
    assert!((oracle - 2.0 * ell).abs() < 1e-8);
    assert!((lin - oracle).abs() < 1e-4, "{lin} vs {oracle}");

    let f = |x: f64| (2.0 * x).sin() + 0.3 * x * x;
    let df = |x: f64| 2.0 * (2.0 * x).cos() + 0.6 * x;
    let got = gagliardo_seminorm(&samples(257, ell, f), ell, 0.0).unwrap();
    let oracle = gagliardo_oracle(f, df, ell).sqrt();
    assert!((got - oracle).abs() < 1e-4, "{got} vs {oracle}");
}

#[test]
fn three_halves_norm_adds_derivative_seminorm() {
    let ell = 0.5;
    let f = samples(257, ell, |x| x * x);
    let got = fractional_norm(&f, ell, 1.5, 0.0).unwrap().powi(2);
    // ‖x²‖² + ‖2x‖² + [2x]² with [2x] = 2·2ℓ
    let l2 = 2.0 * ell.powi(5) / 5.0;
    let h1 = 8.0 * ell.powi(3) / 3.0;
    let want = l2 + h1 + (4.0 * ell).powi(2);
    assert!((got - want).abs() < 1e-4 * want, "{got} vs {want}");
}

#[test]
fn fractional_norm_rejects_short_input_and_unknown_orders() {
    assert!(matches!(
        fractional_norm(&[1.0; 7], 0.5, 0.5, 0.0),
        Err(contact_stokes::Error::GridTooCoarse { got: 7, need: 8 })
    ));
    assert!(fractional_norm(&[1.0; 16], 0.5, 1.0, 0.0).is_err());
}

#[test]
fn weighted_seminorm_vanishes_only_for_constants() {
    let ell = 0.5;
    assert!(gagliardo_seminorm(&vec![3.0; 33], ell, 0.4).unwrap() < 1e-12);
    assert!(gagliardo_seminorm(&samples(33, ell, |x| x), ell, 0.4).unwrap() > 0.1);
}

#[test]
fn bracket_of_unit_values_is_two_kappa() {
    for kappa in [0.3, 1.0, 4.5] {
        assert_eq!(bracket(kappa, [1.0, 1.0], [1.0, 1.0]), 2.0 * kappa);
    }
    assert_eq!(bracket(2.0, [1.0, -1.0], [1.0, 1.0]), 0.0);
}

#[test]
fn decay_fit_rejects_bad_series() {
    let t: Vec<f64> = (0..20).map(|i| i as f64).collect();
    let mut v: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
    v[15] = 0.0;
    assert!(decay_fit(&t, &v).is_err());
    assert!(decay_fit(&t[..8], &v[..8]).is_err());
    assert!(decay_fit(&t, &v[..19]).is_err());
}

proptest! {
    #[test]
    fn decay_fit_recovers_exponential_rates(lambda in 0.01f64..5.0, amp in 1e-6f64..1e3, n in 13usize..200) {
        let t: Vec<f64> = (0..n).map(|i| 0.05 * i as f64).collect();
        let v: Vec<f64> = t.iter().map(|t| amp * (-lambda * t).exp()).collect();
        let fit = decay_fit(&t, &v).unwrap();
        prop_assert!((fit.lambda - lambda).abs() < 1e-9 * lambda.max(1.0));
        prop_assert!(fit.r_squared > 1.0 - 1e-12);
        prop_assert_eq!(fit.samples, n - n / 5);
    }

    #[test]
    fn weighted_norm_is_homogeneous(scale in -10.0f64..10.0, delta in 0.05f64..0.95) {
        let mesh = unit_square(4);
        let vals = nodal(&mesh, |x, y| (x + 0.3) * (1.0 - y) + x * y);
        let spec = WeightedNormSpec::new(1, delta, vec![[0.0, 0.0], [1.0, 1.0]]);
        let base = weighted_norm(&mesh, &vals, &spec).unwrap();
        let scaled: Vec<f64> = vals.iter().map(|v| scale * v).collect();
        let got = weighted_norm(&mesh, &scaled, &spec).unwrap();
        prop_assert!((got - scale.abs() * base).abs() < 1e-12 * base.max(1.0) * scale.abs().max(1.0));
    }
}

#[test]
fn parallel_energy_of_exponential_decay_decays_at_twice_the_rate() {
    let params = PhysicalParams {
        gamma_jump: 0.3,
        ..Default::default()
    };
    let eq = build_equilibrium(&params).unwrap();
    let mesh = build_mesh(&eq, 8, 0.5, None).unwrap();
    let sim = Simulation::new(&params, &eq, &mesh);
    let eta0 = sim.mode_profile(2, 1e-3);
    let (lambda, dt) = (0.7, 0.05);
    let at = |t: f64| {
        eta0.iter()
            .map(|e| e * (-lambda * t).exp())
            .collect::<Vec<f64>>()
    };
    let records: Vec<StepRecord> = (1..=30)
        .map(|i| {
            let t = i as f64 * dt;
            StepRecord {
                time: t,
                dt,
                eta_old: at(t - dt),
                eta_new: at(t),
                u: vec![[0.0; 2]; mesh.n_nodes()],
                p: vec![0.0; mesh.n_pressure()],
                contact_velocities: [0.0; 2],
                w_hat: [0.0; 2],
                mass_drift: 0.0,
                newton_iterations: 0,
            }
        })
        .collect();
    assert!(functionals(&sim, &records[..2], 0.5).is_err());
    let mut times = Vec::new();
    let mut e = Vec::new();
    for i in 2..records.len() {
        let f = functionals(&sim, &records[i - 2..=i], 0.5).unwrap();
        times.push(records[i].time);
        e.push(f.e_parallel);
        assert!(f.d_parallel >= f.d_bar && f.d_full >= f.d_parallel);
    }
    let fit = decay_fit(&times, &e).unwrap();
    assert!((fit.lambda - 2.0 * lambda).abs() < 1e-9, "{}", fit.lambda);
    assert!(kappa_of(&params.response) > 0.0);
}
