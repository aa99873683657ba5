//! Structured quadratic triangulation of the fluid domain under the graph of ζ₀.

use crate::equilibrium::EquilibriumSurface;
use crate::error::{Error, Result};
use crate::fem::{p2_shape, TRIANGLE_NODE_REF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Surface,
    LeftWall,
    RightWall,
    Bottom,
}

/// A quadratic boundary edge: endpoints `nodes[0]`, `nodes[2]`, midpoint `nodes[1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 3],
    pub tag: BoundaryTag,
}

/// Six-node triangles: vertices 0..3 counter-clockwise, then midpoints of edges 01, 12, 20.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 6]>,
    /// Pressure index of each node, `None` for edge midpoints.
    pub pressure_index: Vec<Option<usize>>,
    /// Node id of each pressure unknown.
    pub pressure_nodes: Vec<usize>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Surface nodes ordered by x₁, `2 * nx + 1` of them.
    pub surface_nodes: Vec<usize>,
    /// Surface edges ordered by x₁, as indices into `boundary_edges`.
    pub surface_edges: Vec<usize>,
    /// Top-left and top-right contact nodes.
    pub corners: [usize; 2],
    pub nx: usize,
    pub ny: usize,
    pub grading: f64,
    pub ell: f64,
    pub depth: f64,
}

/// Graded parameterization of [0, 1] symmetric about 1/2.
fn symmetric_grading(t: f64, g: f64) -> f64 {
    if t <= 0.5 {
        0.5 * (2.0 * t).powf(g)
    } else {
        1.0 - 0.5 * (2.0 * (1.0 - t)).powf(g)
    }
}

/// Vertex positions graded as given, midpoints placed halfway.
fn fine_grid(n: usize, map: impl Fn(f64) -> f64) -> Vec<f64> {
    let verts: Vec<f64> = (0..=n).map(|i| map(i as f64 / n as f64)).collect();
    let mut fine = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        fine.push(verts[i]);
        fine.push(0.5 * (verts[i] + verts[i + 1]));
    }
    fine.push(verts[n]);
    fine
}

/// Default grading exponent resolving a corner with critical weight `delta_omega`.
pub fn default_grading(delta_omega: f64) -> f64 {
    (1.0 / (1.0 - delta_omega)).max(1.0)
}

impl Mesh {
    /// Structured mesh over `x₁ ∈ xs` with vertical fraction `s ∈ [0,1]` between `bottom` and `top(x₁)`.
    fn structured(
        xs: &[f64],
        ss: &[f64],
        bottom: f64,
        top: impl Fn(f64) -> f64,
        grading: f64,
        depth: f64,
    ) -> Result<Self> {
        let fx = xs.len();
        let fy = ss.len();
        let nx = (fx - 1) / 2;
        let ny = (fy - 1) / 2;
        let id = |i: usize, j: usize| j * fx + i;
        let mut nodes = Vec::with_capacity(fx * fy);
        for &s in ss.iter() {
            for &x in xs.iter() {
                let t = top(x);
                nodes.push([x, bottom + s * (t - bottom)]);
            }
        }
        let mut pressure_index = vec![None; nodes.len()];
        let mut pressure_nodes = Vec::new();
        for j in (0..fy).step_by(2) {
            for i in (0..fx).step_by(2) {
                pressure_index[id(i, j)] = Some(pressure_nodes.len());
                pressure_nodes.push(id(i, j));
            }
        }
        let xmid = 0.5 * (xs[0] + xs[fx - 1]);
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for cj in 0..ny {
            for ci in 0..nx {
                let (i, j) = (2 * ci, 2 * cj);
                let a = id(i, j);
                let b = id(i + 2, j);
                let c = id(i + 2, j + 2);
                let d = id(i, j + 2);
                let ab = id(i + 1, j);
                let bc = id(i + 2, j + 1);
                let cd = id(i + 1, j + 2);
                let da = id(i, j + 1);
                let ctr = id(i + 1, j + 1);
                if xs[i + 1] < xmid {
                    triangles.push([a, b, c, ab, bc, ctr]);
                    triangles.push([a, c, d, ctr, cd, da]);
                } else {
                    triangles.push([a, b, d, ab, ctr, da]);
                    triangles.push([b, c, d, bc, cd, ctr]);
                }
            }
        }
        let mut boundary_edges = Vec::new();
        for ci in 0..nx {
            let i = 2 * ci;
            boundary_edges.push(BoundaryEdge {
                nodes: [id(i, 0), id(i + 1, 0), id(i + 2, 0)],
                tag: BoundaryTag::Bottom,
            });
        }
        for cj in 0..ny {
            let j = 2 * cj;
            boundary_edges.push(BoundaryEdge {
                nodes: [id(fx - 1, j), id(fx - 1, j + 1), id(fx - 1, j + 2)],
                tag: BoundaryTag::RightWall,
            });
        }
        let mut surface_edges = Vec::new();
        for ci in 0..nx {
            let i = 2 * ci;
            surface_edges.push(boundary_edges.len());
            boundary_edges.push(BoundaryEdge {
                nodes: [id(i, fy - 1), id(i + 1, fy - 1), id(i + 2, fy - 1)],
                tag: BoundaryTag::Surface,
            });
        }
        for cj in 0..ny {
            let j = 2 * cj;
            boundary_edges.push(BoundaryEdge {
                nodes: [id(0, j), id(0, j + 1), id(0, j + 2)],
                tag: BoundaryTag::LeftWall,
            });
        }
        let surface_nodes: Vec<usize> = (0..fx).map(|i| id(i, fy - 1)).collect();
        let mesh = Mesh {
            corners: [surface_nodes[0], surface_nodes[fx - 1]],
            nodes,
            triangles,
            pressure_index,
            pressure_nodes,
            boundary_edges,
            surface_nodes,
            surface_edges,
            nx,
            ny,
            grading,
            ell: 0.5 * (xs[fx - 1] - xs[0]),
            depth,
        };
        mesh.check_orientation()?;
        Ok(mesh)
    }

    /// Uniform mesh of a rectangle; the top side is tagged as the surface.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || !(x1 > x0 && y1 > y0) {
            return Err(Error::InvalidMesh("empty rectangle".into()));
        }
        let xs = fine_grid(nx, |t| x0 + (x1 - x0) * t);
        let ss = fine_grid(ny, |t| t);
        Self::structured(&xs, &ss, y0, |_| y1, 1.0, 0.0)
    }

    /// Positive minimum of the isoparametric Jacobian over each element's nodes.
    fn check_orientation(&self) -> Result<()> {
        for (index, tri) in self.triangles.iter().enumerate() {
            let area = self.vertex_area(index);
            if !(area > 0.0) {
                return Err(Error::DegenerateTriangle { index, area });
            }
            for r in TRIANGLE_NODE_REF.iter() {
                let (_, dn) = p2_shape(r[0], r[1]);
                let mut jac = [[0.0; 2]; 2];
                for a in 0..6 {
                    let x = self.nodes[tri[a]];
                    for c in 0..2 {
                        for k in 0..2 {
                            jac[c][k] += x[c] * dn[a][k];
                        }
                    }
                }
                let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                if !(det > 0.0) {
                    return Err(Error::DegenerateTriangle {
                        index,
                        area: det / 2.0,
                    });
                }
            }
        }
        Ok(())
    }

    /// Area of the straight triangle through the three vertices.
    pub fn vertex_area(&self, t: usize) -> f64 {
        let tri = self.triangles[t];
        let [a, b, c] = [self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]];
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_pressure(&self) -> usize {
        self.pressure_nodes.len()
    }

    /// For each node, whether u₁ and u₂ are fixed by u·ν = 0 on the walls and bottom.
    pub fn fixed_components(&self) -> Vec<[bool; 2]> {
        let mut fixed = vec![[false; 2]; self.nodes.len()];
        for e in &self.boundary_edges {
            let comp = match e.tag {
                BoundaryTag::LeftWall | BoundaryTag::RightWall => 0,
                BoundaryTag::Bottom => 1,
                BoundaryTag::Surface => continue,
            };
            for &n in &e.nodes {
                fixed[n][comp] = true;
            }
        }
        fixed
    }

    pub fn surface_x(&self) -> Vec<f64> {
        self.surface_nodes
            .iter()
            .map(|&n| self.nodes[n][0])
            .collect()
    }

    /// Whether surface nodes are equally spaced in x₁ (to rounding).
    pub fn surface_is_uniform(&self) -> bool {
        let xs = self.surface_x();
        let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        xs.windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-12 * h.max(1.0))
    }

    /// Shortest and longest vertex-to-vertex surface edge lengths in x₁.
    pub fn surface_edge_extremes(&self) -> (f64, f64) {
        let xs = self.surface_x();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for k in (0..xs.len() - 1).step_by(2) {
            let h = xs[k + 2] - xs[k];
            lo = lo.min(h);
            hi = hi.max(h);
        }
        (lo, hi)
    }

    /// Elements adjacent to each node.
    pub fn node_elements(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &n in tri {
                adj[n].push(t);
            }
        }
        adj
    }

    /// Nodes lying on some boundary edge.
    pub fn boundary_node_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.nodes.len()];
        for e in &self.boundary_edges {
            for &n in &e.nodes {
                m[n] = true;
            }
        }
        m
    }
}

/// Mesh of the equilibrium domain (−ℓ,ℓ) × (−b, ζ₀(x₁)).
///
/// `grading = None` picks `default_grading(δ_ω)`.
pub fn build_mesh(
    eq: &EquilibriumSurface,
    n_surface: usize,
    depth: f64,
    grading: Option<f64>,
) -> Result<Mesh> {
    if n_surface < 8 {
        return Err(Error::InvalidMesh(format!(
            "n_surface = {n_surface} must be at least 8"
        )));
    }
    if !n_surface.is_multiple_of(2) {
        return Err(Error::InvalidMesh(format!(
            "n_surface = {n_surface} must be even"
        )));
    }
    if !(depth >= 0.0) {
        return Err(Error::InvalidMesh(format!(
            "depth = {depth} must be non-negative"
        )));
    }
    let g = grading.unwrap_or_else(|| default_grading(eq.delta_omega));
    if !(g >= 1.0 && g.is_finite()) {
        return Err(Error::InvalidMesh(format!(
            "grading = {g} must be at least 1"
        )));
    }
    let ell = eq.ell;
    let xs = fine_grid(n_surface, |t| {
        if t == 0.5 {
            0.0
        } else {
            -ell + 2.0 * ell * symmetric_grading(t, g)
        }
    });
    let mean_height = eq.zeta0.iter().sum::<f64>() / eq.zeta0.len() as f64;
    let ny = ((n_surface as f64 * (mean_height + depth) / (2.0 * ell)).ceil() as usize).max(2);
    let ss = fine_grid(ny, |t| 1.0 - (1.0 - t).powf(g));
    Mesh::structured(&xs, &ss, -depth, |x| eq.eval(x)[0], g, depth)
}
