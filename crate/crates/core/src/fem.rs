//! Quadratic (P2) and linear (P1) Lagrange elements on curved triangles.

use crate::mesh::Mesh;

/// Reference coordinates of the six P2 nodes.
pub const TRIANGLE_NODE_REF: [[f64; 2]; 6] = [
    [0.0, 0.0],
    [1.0, 0.0],
    [0.0, 1.0],
    [0.5, 0.0],
    [0.5, 0.5],
    [0.0, 0.5],
];

/// P2 basis values and reference gradients.
pub fn p2_shape(xi: f64, eta: f64) -> ([f64; 6], [[f64; 2]; 6]) {
    let l1 = 1.0 - xi - eta;
    let (l2, l3) = (xi, eta);
    let n = [
        l1 * (2.0 * l1 - 1.0),
        l2 * (2.0 * l2 - 1.0),
        l3 * (2.0 * l3 - 1.0),
        4.0 * l1 * l2,
        4.0 * l2 * l3,
        4.0 * l3 * l1,
    ];
    let d1 = 4.0 * l1 - 1.0;
    let dn = [
        [-d1, -d1],
        [4.0 * l2 - 1.0, 0.0],
        [0.0, 4.0 * l3 - 1.0],
        [4.0 * (l1 - l2), -4.0 * l2],
        [4.0 * l3, 4.0 * l2],
        [-4.0 * l3, 4.0 * (l1 - l3)],
    ];
    (n, dn)
}

/// P2 second derivatives in reference coordinates, `[∂ξξ, ∂ξη, ∂ηη]`.
pub fn p2_hessian_ref() -> [[f64; 3]; 6] {
    [
        [4.0, 4.0, 4.0],
        [4.0, 0.0, 0.0],
        [0.0, 0.0, 4.0],
        [-8.0, -4.0, 0.0],
        [0.0, 4.0, 0.0],
        [0.0, -4.0, -8.0],
    ]
}

pub fn p1_shape(xi: f64, eta: f64) -> [f64; 3] {
    [1.0 - xi - eta, xi, eta]
}

/// Quadratic edge basis on t ∈ [0, 1] for nodes (start, mid, end).
pub fn edge_shape(t: f64) -> ([f64; 3], [f64; 3]) {
    (
        [
            (1.0 - t) * (1.0 - 2.0 * t),
            4.0 * t * (1.0 - t),
            t * (2.0 * t - 1.0),
        ],
        [4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0],
    )
}

/// Mapped element data at one reference point.
#[derive(Debug, Clone, Copy)]
pub struct ElementPoint {
    pub x: [f64; 2],
    pub det: f64,
    pub phi: [f64; 6],
    /// Physical gradients of the P2 basis.
    pub grad: [[f64; 2]; 6],
    pub psi: [f64; 3],
    /// Physical gradients of the P1 basis.
    pub psi_grad: [[f64; 2]; 3],
}

pub fn element_point(mesh: &Mesh, t: usize, xi: f64, eta: f64) -> ElementPoint {
    let tri = &mesh.triangles[t];
    let (phi, dn) = p2_shape(xi, eta);
    let mut x = [0.0; 2];
    let mut jac = [[0.0; 2]; 2];
    for a in 0..6 {
        let p = mesh.nodes[tri[a]];
        for c in 0..2 {
            x[c] += phi[a] * p[c];
            for k in 0..2 {
                jac[c][k] += p[c] * dn[a][k];
            }
        }
    }
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    // rows of the inverse Jacobian: ∂ξ/∂x, ∂η/∂x
    let inv = [
        [jac[1][1] / det, -jac[0][1] / det],
        [-jac[1][0] / det, jac[0][0] / det],
    ];
    let mut grad = [[0.0; 2]; 6];
    for a in 0..6 {
        for c in 0..2 {
            grad[a][c] = dn[a][0] * inv[0][c] + dn[a][1] * inv[1][c];
        }
    }
    let dp = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    let mut psi_grad = [[0.0; 2]; 3];
    for a in 0..3 {
        for c in 0..2 {
            psi_grad[a][c] = dp[a][0] * inv[0][c] + dp[a][1] * inv[1][c];
        }
    }
    ElementPoint {
        x,
        det,
        phi,
        grad,
        psi: p1_shape(xi, eta),
        psi_grad,
    }
}

/// Gradient of a nodal P2 field at every node, averaged over adjacent elements.
pub fn nodal_gradient(mesh: &Mesh, values: &[f64]) -> Vec<[f64; 2]> {
    let mut sum = vec![[0.0; 2]; mesh.n_nodes()];
    let mut count = vec![0usize; mesh.n_nodes()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for (a, r) in TRIANGLE_NODE_REF.iter().enumerate() {
            let ep = element_point(mesh, t, r[0], r[1]);
            let mut g = [0.0; 2];
            for b in 0..6 {
                for c in 0..2 {
                    g[c] += values[tri[b]] * ep.grad[b][c];
                }
            }
            let n = tri[a];
            sum[n][0] += g[0];
            sum[n][1] += g[1];
            count[n] += 1;
        }
    }
    sum.iter()
        .zip(&count)
        .map(|(s, &c)| [s[0] / c as f64, s[1] / c as f64])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p2_partition_of_unity_and_nodal() {
        for (a, r) in TRIANGLE_NODE_REF.iter().enumerate() {
            let (n, _) = p2_shape(r[0], r[1]);
            for (b, v) in n.iter().enumerate() {
                assert!((v - if a == b { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
        let (n, dn) = p2_shape(0.3, 0.2);
        assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let gs = dn
            .iter()
            .fold([0.0, 0.0], |s, d| [s[0] + d[0], s[1] + d[1]]);
        assert!(gs[0].abs() < 1e-14 && gs[1].abs() < 1e-14);
    }

    #[test]
    fn p2_gradients_match_differences() {
        let h = 1e-6;
        let (x, y) = (0.27, 0.31);
        let (_, dn) = p2_shape(x, y);
        let (np, _) = p2_shape(x + h, y);
        let (nm, _) = p2_shape(x - h, y);
        let (nq, _) = p2_shape(x, y + h);
        let (nr, _) = p2_shape(x, y - h);
        for a in 0..6 {
            assert!(((np[a] - nm[a]) / (2.0 * h) - dn[a][0]).abs() < 1e-8);
            assert!(((nq[a] - nr[a]) / (2.0 * h) - dn[a][1]).abs() < 1e-8);
        }
    }

    #[test]
    fn quadratic_fields_have_exact_nodal_gradients() {
        let m = Mesh::rectangle(-1.0, 1.0, 0.0, 1.5, 4, 3).unwrap();
        let f: Vec<f64> = m
            .nodes
            .iter()
            .map(|p| p[0] * p[0] - 2.0 * p[0] * p[1] + p[1])
            .collect();
        let g = nodal_gradient(&m, &f);
        for (p, gi) in m.nodes.iter().zip(&g) {
            assert!((gi[0] - (2.0 * p[0] - 2.0 * p[1])).abs() < 1e-12);
            assert!((gi[1] - (-2.0 * p[0] + 1.0)).abs() < 1e-12);
        }
    }
}
