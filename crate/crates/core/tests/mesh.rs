use contact_stokes::equilibrium::{build_equilibrium, PhysicalParams};
use contact_stokes::mesh::{build_mesh, BoundaryTag};
use std::collections::HashMap;

fn flat_params() -> PhysicalParams {
    PhysicalParams {
        ell: 0.5,
        m_top: 1.0,
        ..Default::default()
    }
}

#[test]
fn flat_equilibrium_gives_equal_areas() {
    let eq = build_equilibrium(&flat_params()).unwrap();
    let m = build_mesh(&eq, 8, 0.0, None).unwrap();
    let a0 = m.vertex_area(0);
    for t in 0..m.triangles.len() {
        assert!((m.vertex_area(t) - a0).abs() < 1e-14 * a0.max(1.0));
    }
    assert_eq!(m.nx, 8);
    assert_eq!(m.ny, 8);
}

#[test]
fn boundary_tags_cover_the_boundary_once() {
    for gamma in [-0.6, 0.0, 0.5] {
        let p = PhysicalParams {
            gamma_jump: gamma,
            ..Default::default()
        };
        let eq = build_equilibrium(&p).unwrap();
        let m = build_mesh(&eq, 12, 0.5, None).unwrap();
        let min_area = (0..m.triangles.len())
            .map(|t| m.vertex_area(t))
            .fold(f64::INFINITY, f64::min);
        assert!(min_area > 0.0);
        // every vertex-vertex edge used by exactly one triangle is a boundary edge, once
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &m.triangles {
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                let key = (tri[a].min(tri[b]), tri[a].max(tri[b]));
                *count.entry(key).or_default() += 1;
            }
        }
        let mut free: Vec<(usize, usize)> = count
            .into_iter()
            .filter(|e| e.1 == 1)
            .map(|e| e.0)
            .collect();
        let mut tagged: Vec<(usize, usize)> = m
            .boundary_edges
            .iter()
            .map(|e| (e.nodes[0].min(e.nodes[2]), e.nodes[0].max(e.nodes[2])))
            .collect();
        free.sort_unstable();
        tagged.sort_unstable();
        assert_eq!(free, tagged);
        let per_tag = |t: BoundaryTag| m.boundary_edges.iter().filter(|e| e.tag == t).count();
        assert_eq!(per_tag(BoundaryTag::Surface), 12);
        assert_eq!(per_tag(BoundaryTag::Bottom), 12);
        assert_eq!(
            per_tag(BoundaryTag::LeftWall),
            per_tag(BoundaryTag::RightWall)
        );
        // surface nodes sit on ζ₀ and the corners are the contact points
        for &n in &m.surface_nodes {
            let x = m.nodes[n];
            assert!((x[1] - eq.eval(x[0])[0]).abs() < 1e-12);
        }
        assert_eq!(m.nodes[m.corners[0]][0], -eq.ell);
        assert_eq!(m.nodes[m.corners[1]][0], eq.ell);
    }
}

#[test]
fn grading_shrinks_corner_edges() {
    let eq = build_equilibrium(&PhysicalParams::default()).unwrap();
    for n in [8usize, 16, 32] {
        let m = build_mesh(&eq, n, 0.5, Some(2.0)).unwrap();
        let (lo, _) = m.surface_edge_extremes();
        let uniform = 2.0 * eq.ell / n as f64;
        // the per-half grading gives (2/n)^{g−1} for g = 2
        let ratio = lo / uniform;
        assert!(
            (ratio - 2.0 / n as f64).abs() < 1e-12,
            "n={n} ratio={ratio}"
        );
    }
}

#[test]
fn small_surface_counts_are_rejected() {
    let eq = build_equilibrium(&PhysicalParams::default()).unwrap();
    assert!(build_mesh(&eq, 6, 0.5, None).is_err());
    assert!(build_mesh(&eq, 9, 0.5, None).is_err());
    assert!(build_mesh(&eq, 8, 0.5, Some(0.5)).is_err());
}
