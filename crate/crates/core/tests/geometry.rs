use contact_stokes::equilibrium::{build_equilibrium_with, EquilibriumSurface, PhysicalParams};
use contact_stokes::fem::nodal_gradient;
use contact_stokes::geometry::*;
use contact_stokes::mesh::{build_mesh, BoundaryTag, Mesh};
use rand::{rngs::StdRng, Rng, SeedableRng};

fn surface(gamma: f64) -> EquilibriumSurface {
    let p = PhysicalParams {
        gamma_jump: gamma,
        m_top: 3.0,
        ..Default::default()
    };
    build_equilibrium_with(&p, 1025).unwrap()
}

fn series(ell: f64, coeffs: &[(usize, f64)]) -> CosineSeries {
    let mut s = CosineSeries::zero(ell, coeffs.iter().map(|c| c.0).max().unwrap_or(0));
    for &(k, a) in coeffs {
        s.coeffs[k] = a;
    }
    s
}

fn random_series(ell: f64, seed: u64, sup: f64) -> CosineSeries {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut s = CosineSeries::zero(ell, 4);
    for k in 1..=4 {
        s.coeffs[k] = rng.gen_range(-1.0..1.0) / (k * k * k) as f64;
    }
    let max = (0..=400)
        .map(|i| s.eval(-ell + 2.0 * ell * i as f64 / 400.0).0.abs())
        .fold(0.0, f64::max);
    s.coeffs.iter_mut().for_each(|a| *a *= sup / max);
    s
}

#[test]
fn zero_perturbation_gives_identity_fields() {
    let eq = surface(0.5);
    let mesh = build_mesh(&eq, 16, 0.5, None).unwrap();
    let ext = Extension::new(&eq, CosineSeries::zero(eq.ell, 8));
    let f = coefficient_fields(&ext, &mesh).unwrap();
    for (x, pf) in mesh.nodes.iter().zip(&f.nodes) {
        assert_eq!(*pf, PointFields::identity(*x));
        assert_eq!(pf.m_mat(), [[1.0, 0.0], [0.0, 1.0]]);
    }
    assert_eq!(f.n_vec, f.n0_vec);
    // the fields are exact; discrete gradients of the coordinates carry roundoff only
    assert!(piola_residual(&f, &mesh) < 1e-13);
    assert!(inverse_transpose_residual(&f, &mesh) < 1e-13);
    let st = validate_geometry(&f);
    assert!(st.ok && st.worst_j_dev == 0.0 && st.worst_a == 0.0);
    assert!(poisson_extend(&ext.series, &eq, &mesh)
        .unwrap()
        .iter()
        .all(|&v| v == 0.0));
}

#[test]
fn single_even_mode_matches_kernel() {
    let eq = surface(0.5);
    let mesh = build_mesh(&eq, 16, 0.5, Some(1.0)).unwrap();
    let ell = eq.ell;
    for k in [2usize, 4, 6] {
        let al = std::f64::consts::PI * k as f64 / (2.0 * ell);
        let eta: Vec<f64> = mesh.surface_x().iter().map(|x| (al * x).cos()).collect();
        let s = CosineSeries::from_surface_nodes(&mesh, &eta).unwrap();
        let bar = poisson_extend(&s, &eq, &mesh).unwrap();
        for (p, v) in mesh.nodes.iter().zip(&bar) {
            let want = (al * (p[1] - eq.eval(p[0])[0])).exp() * (al * p[0]).cos();
            assert!((v - want).abs() < 1e-12, "k={k} at {p:?}");
        }
        // decays monotonically in depth along each column
        let col: Vec<f64> = mesh
            .nodes
            .iter()
            .zip(&bar)
            .filter(|(p, _)| p[0] == 0.0)
            .map(|(_, v)| v.abs())
            .collect();
        assert!(col.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn trace_reproduces_surface_values() {
    let eq = surface(0.3);
    let mesh = build_mesh(&eq, 32, 0.5, Some(1.0)).unwrap();
    let mut rng = StdRng::seed_from_u64(17);
    for _ in 0..5 {
        let (a, b, c) = (
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.5..3.0),
            rng.gen_range(-1.0..1.0),
        );
        let eta: Vec<f64> = mesh
            .surface_x()
            .iter()
            .map(|x| a * (b * x + c).sin() * 1e-2)
            .collect();
        let s = CosineSeries::from_surface_nodes(&mesh, &eta).unwrap();
        let bar = poisson_extend(&s, &eq, &mesh).unwrap();
        for (i, &n) in mesh.surface_nodes.iter().enumerate() {
            assert!((bar[n] - eta[i]).abs() <= 1e-8);
        }
    }
}

#[test]
fn trace_on_graded_surface_is_interpolation_accurate() {
    let eq = surface(-0.8);
    let f = |x: f64| 1e-2 * (1.7 * x + 0.3).cos();
    let err = |n: usize| {
        let mesh = build_mesh(&eq, n, 0.5, None).unwrap();
        assert!(!mesh.surface_is_uniform());
        let eta: Vec<f64> = mesh.surface_x().iter().map(|&x| f(x)).collect();
        let s = CosineSeries::from_surface_nodes(&mesh, &eta).unwrap();
        mesh.surface_x()
            .iter()
            .map(|&x| (s.eval(x).0 - f(x)).abs())
            .fold(0.0, f64::max)
    };
    // the reflected profile has a slope kink at ±ℓ, so off-grid trigonometric
    // interpolation is first order next to the corners
    let (e1, e2) = (err(16), err(32));
    assert!(e2 < 5e-3 * 1e-2 && e1 / e2 > 1.8, "{e1:e} -> {e2:e}");
}

#[test]
fn cutoff_properties() {
    let m = 0.8;
    assert_eq!(cutoff_phi(0.0, m), (0.0, 0.0));
    assert_eq!(cutoff_phi(m, m).0, m);
    let h = 1e-7;
    for z0 in [m / 4.0, m / 2.0] {
        let left = (cutoff_phi(z0, m).0 - cutoff_phi(z0 - h, m).0) / h;
        let right = (cutoff_phi(z0 + h, m).0 - cutoff_phi(z0, m).0) / h;
        assert!((left - right).abs() <= 1e-6, "z0={z0}");
    }
    for i in 0..=200 {
        let z = m / 4.0 + (m / 4.0) * i as f64 / 200.0;
        let (_, d) = cutoff_phi(z, m);
        assert!(d >= 0.0);
        let fd = (cutoff_phi(z + 1e-7, m).0 - cutoff_phi(z - 1e-7, m).0) / 2e-7;
        assert!((fd - d).abs() < 1e-6);
    }
}

#[test]
fn boundary_identity_holds_per_node() {
    let eq = surface(-0.8);
    let mesh = build_mesh(&eq, 24, 0.5, None).unwrap();
    let ext = Extension::new(&eq, random_series(eq.ell, 2, 2e-2));
    let f = coefficient_fields(&ext, &mesh).unwrap();
    for (i, &n) in mesh.surface_nodes.iter().enumerate() {
        let pf = &f.nodes[n];
        let dz = eq.eval(mesh.nodes[n][0])[1];
        let s = (1.0 + dz * dz).sqrt();
        let nu = [-dz / s, 1.0 / s];
        let ja = [
            pf.j * (pf.acal[0][0] * nu[0] + pf.acal[0][1] * nu[1]),
            pf.j * (pf.acal[1][0] * nu[0] + pf.acal[1][1] * nu[1]),
        ];
        for c in 0..2 {
            assert!(
                (ja[c] - f.n_vec[i][c] / s).abs() <= 1e-8,
                "surface node {n}"
            );
        }
    }
    for e in mesh
        .boundary_edges
        .iter()
        .filter(|e| matches!(e.tag, BoundaryTag::LeftWall | BoundaryTag::RightWall))
    {
        let sgn = if e.tag == BoundaryTag::LeftWall {
            -1.0
        } else {
            1.0
        };
        for &n in &e.nodes {
            let pf = &f.nodes[n];
            let ja = [pf.j * pf.acal[0][0] * sgn, pf.j * pf.acal[1][0] * sgn];
            assert!((ja[0] - pf.j * sgn).abs() <= 1e-8 && ja[1].abs() <= 1e-8);
        }
    }
}

fn rate(e: &[f64]) -> f64 {
    (e[e.len() - 2] / e[e.len() - 1]).log2()
}

#[test]
fn piola_and_inverse_residuals_converge_at_second_order() {
    let eq = surface(0.5);
    let ext = Extension::new(&eq, random_series(eq.ell, 9, 1e-2));
    let (mut piola, mut inv) = (Vec::new(), Vec::new());
    for n in [64, 128, 256] {
        let mesh = build_mesh(&eq, n, 0.5, None).unwrap();
        let f = coefficient_fields(&ext, &mesh).unwrap();
        piola.push(piola_residual(&f, &mesh));
        inv.push(inverse_transpose_residual(&f, &mesh));
    }
    eprintln!("piola {piola:?} inverse {inv:?}");
    assert!(rate(&piola) >= 1.9, "piola {piola:?}");
    assert!(rate(&inv) >= 1.9, "inverse transpose {inv:?}");
}

#[test]
fn single_mode_piola_residual_is_small_at_128() {
    let eq = surface(0.5);
    let mesh = build_mesh(&eq, 128, 0.0, Some(1.0)).unwrap();
    let ext = Extension::new(&eq, series(eq.ell, &[(2, 1e-2)]));
    let r = piola_residual_pointwise(&ext, &mesh, 1e-5);
    assert!(r <= 1e-6, "{r:e}");
}

/// div_𝒜(Mu) = K div u for the quadratic interpolants of smooth fields.
#[test]
fn divergence_transfers_through_m() {
    let eq = surface(0.3);
    let ext = Extension::new(&eq, random_series(eq.ell, 4, 1e-2));
    let u = |p: [f64; 2]| {
        [
            (1.3 * p[0]).sin() * p[1].cos(),
            (0.7 * p[1]).sin() + p[0] * p[0],
        ]
    };
    let div = |p: [f64; 2]| 1.3 * (1.3 * p[0]).cos() * p[1].cos() + 0.7 * (0.7 * p[1]).cos();
    let mut errs = Vec::new();
    for n in [32, 64, 128] {
        let mesh = build_mesh(&eq, n, 0.5, None).unwrap();
        let f = coefficient_fields(&ext, &mesh).unwrap();
        let mu: Vec<[f64; 2]> = mesh
            .nodes
            .iter()
            .zip(&f.nodes)
            .map(|(p, pf)| {
                let m = pf.m_mat();
                let v = u(*p);
                [
                    m[0][0] * v[0] + m[0][1] * v[1],
                    m[1][0] * v[0] + m[1][1] * v[1],
                ]
            })
            .collect();
        let g0 = nodal_gradient(&mesh, &mu.iter().map(|v| v[0]).collect::<Vec<_>>());
        let g1 = nodal_gradient(&mesh, &mu.iter().map(|v| v[1]).collect::<Vec<_>>());
        let boundary = mesh.boundary_node_mask();
        let mut worst: f64 = 0.0;
        for (i, pf) in f.nodes.iter().enumerate().filter(|(i, _)| !boundary[*i]) {
            let a = pf.acal;
            let d =
                a[0][0] * g0[i][0] + a[0][1] * g0[i][1] + a[1][0] * g1[i][0] + a[1][1] * g1[i][1];
            worst = worst.max((d - pf.k * div(mesh.nodes[i])).abs());
        }
        errs.push(worst);
    }
    assert!(errs[2] <= 1e-6 || rate(&errs) >= 1.9, "{errs:?}");
    assert!(rate(&errs) >= 1.5, "{errs:?}");
}

#[test]
fn gate_flips_at_threshold() {
    let eq = surface(0.5);
    let mesh = build_mesh(&eq, 16, 0.5, None).unwrap();
    let base = series(eq.ell, &[(1, 1.0), (3, 0.5)]);
    let at = |scale: f64| {
        let mut s = base.clone();
        s.coeffs.iter_mut().for_each(|a| *a *= scale);
        validate_geometry(&coefficient_fields(&Extension::new(&eq, s), &mesh).unwrap())
    };
    let unit = at(1e-3);
    let worst = unit.worst_j_dev.max(unit.worst_a) / 1e-3;
    let critical = GATE_THRESHOLD / worst;
    assert!(at(critical * (1.0 - 1e-9)).ok);
    assert!(!at(critical * (1.0 + 1e-9)).ok);
}

#[test]
fn nodes_above_graph_are_rejected() {
    let eq = surface(0.5);
    let mut mesh: Mesh = build_mesh(&eq, 8, 0.5, None).unwrap();
    let top = mesh.surface_nodes[4];
    mesh.nodes[top][1] += 0.1;
    assert!(poisson_extend(&CosineSeries::zero(eq.ell, 2), &eq, &mesh).is_err());
}

#[test]
fn fields_csv_dump() {
    let eq = surface(0.5);
    let mesh = build_mesh(&eq, 8, 0.5, None).unwrap();
    let f = coefficient_fields(&Extension::new(&eq, series(eq.ell, &[(2, 1e-2)])), &mesh).unwrap();
    let path = std::env::temp_dir().join(format!("cs-fields-{}.csv", std::process::id()));
    dump_fields_csv(&f, &mesh, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), mesh.n_nodes() + 1);
    std::fs::remove_file(path).ok();
}
