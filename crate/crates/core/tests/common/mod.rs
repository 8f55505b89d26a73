//! Test-side oracles. Nothing here calls into the library's assembly or
//! solvers; matrices are only read, never trusted.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use hww_core::geometry::{FsiMesh, Triangle};
use hww_core::hspace::StateH;
use hww_core::sparse::CsrMatrix;
use hww_core::{build_default_geometry, Pencil, Region, Space};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn pencil(refinement: usize) -> Pencil {
    Pencil::new(Space::new(build_default_geometry(refinement).unwrap())).unwrap()
}

pub fn random_states(p: &Pencil, count: usize, seed: u64) -> Vec<StateH<f64>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| StateH::random(p.sizes(), &mut r))
        .collect()
}

/// `∫ ∇f·∇g` over one region from nodal values, P1 gradients per triangle.
pub fn grad_bilinear(mesh: &FsiMesh<f64>, region: Region, f: &[f64], g: &[f64]) -> f64 {
    let mut total = 0.0;
    for t in mesh.triangles_in(region) {
        let [a, b, c] = t.nodes.map(|v| mesh.node(v));
        let e1 = [b[0] - a[0], b[1] - a[1]];
        let e2 = [c[0] - a[0], c[1] - a[1]];
        let det = e1[0] * e2[1] - e1[1] * e2[0];
        let grad = |h: &[f64]| {
            let [ha, hb, hc] = t.nodes.map(|v| h[v]);
            let d1 = hb - ha;
            let d2 = hc - ha;
            [
                (d1 * e2[1] - d2 * e1[1]) / det,
                (d2 * e1[0] - d1 * e2[0]) / det,
            ]
        };
        let (gf, gg) = (grad(f), grad(g));
        total += (gf[0] * gg[0] + gf[1] * gg[1]) * det.abs() / 2.0;
    }
    total
}

/// `∫ f g` over one region; exact for P1 (edge-midpoint rule).
pub fn mass_bilinear(mesh: &FsiMesh<f64>, region: Region, f: &[f64], g: &[f64]) -> f64 {
    let mut total = 0.0;
    for t in mesh.triangles_in(region) {
        let area = mesh.triangle_area(t);
        let [i, j, k] = t.nodes;
        let mid = |a: usize, b: usize, h: &[f64]| 0.5 * (h[a] + h[b]);
        total += area / 3.0
            * (mid(i, j, f) * mid(i, j, g)
                + mid(j, k, f) * mid(j, k, g)
                + mid(k, i, f) * mid(k, i, g));
    }
    total
}

/// Interface integrals over every segment: `(∫ f' g', ∫ f g)` with nodal
/// values indexed by mesh node id.
pub fn edge_bilinear(mesh: &FsiMesh<f64>, f: &[f64], g: &[f64]) -> (f64, f64) {
    let (mut stiff, mut mass) = (0.0, 0.0);
    for (a, b) in mesh.interface().segments() {
        let (pa, pb) = (mesh.node(a), mesh.node(b));
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        stiff += (f[b] - f[a]) * (g[b] - g[a]) / len;
        // Simpson is exact for the quadratic product
        let fm = 0.5 * (f[a] + f[b]);
        let gm = 0.5 * (g[a] + g[b]);
        mass += len / 6.0 * (f[a] * g[a] + 4.0 * fm * gm + f[b] * g[b]);
    }
    (stiff, mass)
}

/// Nodal fields of a state, indexed by mesh node (zero off their region).
pub struct Fields {
    pub u: Vec<f64>,
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
}

pub fn fields(p: &Pencil, x: &StateH<f64>) -> Fields {
    let dofs = p.space().dofs();
    let n = p.mesh().num_nodes();
    let mut f = Fields {
        u: vec![0.0; n],
        w0: vec![0.0; n],
        w1: vec![0.0; n],
    };
    for (k, &v) in dofs.u_interior.iter().enumerate() {
        f.u[v] = x.u_interior()[k];
    }
    for (k, &v) in dofs.gamma.iter().enumerate() {
        f.u[v] = x.gamma()[k];
        f.w1[v] = x.gamma()[k];
    }
    for (k, &v) in dofs.w0_all.iter().enumerate() {
        f.w0[v] = x.w0()[k];
    }
    for (k, &v) in dofs.w1_interior.iter().enumerate() {
        f.w1[v] = x.w1_interior()[k];
    }
    f
}

/// `‖x‖²_H` summed term by term from the nodal fields.
pub fn energy_norm_sq(p: &Pencil, x: &StateH<f64>) -> f64 {
    let m = p.mesh();
    let f = fields(p, x);
    let (h0_s, h0_m) = edge_bilinear(m, &f.w0, &f.w0);
    let (_, h1_m) = edge_bilinear(m, &f.u, &f.u);
    mass_bilinear(m, Region::Fluid, &f.u, &f.u)
        + h0_s
        + h0_m
        + h1_m
        + grad_bilinear(m, Region::Solid, &f.w0, &f.w0)
        + mass_bilinear(m, Region::Solid, &f.w1, &f.w1)
}

pub fn heat_gradient_sq(p: &Pencil, x: &StateH<f64>) -> f64 {
    let f = fields(p, x);
    grad_bilinear(p.mesh(), Region::Fluid, &f.u, &f.u)
}

pub fn dense(a: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.iter() {
        d[(i, j)] += v;
    }
    d
}

/// `trace(M⁻¹K)` by one dense solve per column.
pub fn trace_minv_k(m: &CsrMatrix<f64>, k: &CsrMatrix<f64>) -> f64 {
    let lu = dense(m).lu();
    let kd = dense(k);
    (0..kd.ncols())
        .map(|j| {
            let col: DVector<f64> = kd.column(j).into_owned();
            lu.solve(&col).expect("M nonsingular")[j]
        })
        .sum()
}

/// `σ_min(iβM − K)` from a full complex SVD.
pub fn sigma_min_svd(m: &CsrMatrix<f64>, k: &CsrMatrix<f64>, beta: f64) -> f64 {
    let (md, kd) = (dense(m), dense(k));
    let c = DMatrix::from_fn(md.nrows(), md.ncols(), |i, j| {
        Complex::new(-kd[(i, j)], beta * md[(i, j)])
    });
    c.singular_values().min()
}

pub fn min_eigenvalue_sym(a: &CsrMatrix<f64>) -> f64 {
    dense(a).symmetric_eigen().eigenvalues.min()
}

pub fn spectral_norm(a: &CsrMatrix<f64>) -> f64 {
    dense(a).singular_values().max()
}

/// Triangle count by breadth-first walk over shared edges, interface
/// segment count as edges with one fluid and one solid neighbour.
pub struct WalkCounts {
    pub reached: usize,
    pub fluid: usize,
    pub solid: usize,
    pub interface_segments: usize,
    pub boundary_edges: usize,
}

pub fn walk(tris: &[Triangle]) -> WalkCounts {
    let mut by_edge: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (t, tri) in tris.iter().enumerate() {
        let [a, b, c] = tri.nodes;
        for (p, q) in [(a, b), (b, c), (c, a)] {
            by_edge.entry((p.min(q), p.max(q))).or_default().push(t);
        }
    }
    let mut seen = vec![false; tris.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let (mut reached, mut fluid, mut solid) = (0, 0, 0);
    while let Some(t) = queue.pop_front() {
        reached += 1;
        match tris[t].region {
            Region::Fluid => fluid += 1,
            Region::Solid => solid += 1,
        }
        let [a, b, c] = tris[t].nodes;
        for (p, q) in [(a, b), (b, c), (c, a)] {
            for &s in &by_edge[&(p.min(q), p.max(q))] {
                if !seen[s] {
                    seen[s] = true;
                    queue.push_back(s);
                }
            }
        }
    }
    let interface_segments = by_edge
        .values()
        .filter(|ts| ts.len() == 2 && tris[ts[0]].region != tris[ts[1]].region)
        .count();
    let boundary_edges = by_edge.values().filter(|ts| ts.len() == 1).count();
    WalkCounts {
        reached,
        fluid,
        solid,
        interface_segments,
        boundary_edges,
    }
}

/// Hand-built meshes on the 5 × 5 grid of spacing 1/4 (node `i + 5j` at
/// `(i/4, j/4)`), each cell split along its rising diagonal.
pub struct GridMesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<(usize, usize, usize, Region)>,
    pub outer: Vec<usize>,
    pub edges: Vec<Vec<usize>>,
}

impl GridMesh {
    pub fn new(solid_cells: &[(usize, usize)], edges: Vec<Vec<usize>>) -> Self {
        let id = |i: usize, j: usize| i + 5 * j;
        let nodes = (0..25)
            .map(|v| [(v % 5) as f64 / 4.0, (v / 5) as f64 / 4.0])
            .collect();
        let cells: BTreeSet<(usize, usize)> = solid_cells.iter().copied().collect();
        let mut triangles = Vec::new();
        for j in 0..4 {
            for i in 0..4 {
                let region = if cells.contains(&(i, j)) {
                    Region::Solid
                } else {
                    Region::Fluid
                };
                let (p00, p10, p01, p11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
                triangles.push((p00, p10, p11, region));
                triangles.push((p00, p11, p01, region));
            }
        }
        let outer = (0..25)
            .filter(|v| v % 5 == 0 || v % 5 == 4 || v / 5 == 0 || v / 5 == 4)
            .collect();
        Self {
            nodes,
            triangles,
            outer,
            edges,
        }
    }

    /// The default square-in-square layout.
    pub fn square() -> Self {
        Self::new(
            &[(1, 1), (2, 1), (1, 2), (2, 2)],
            vec![
                vec![6, 7, 8],
                vec![8, 13, 18],
                vec![18, 17, 16],
                vec![16, 11, 6],
            ],
        )
    }

    /// Mesh file text in the documented line format.
    pub fn to_text(&self) -> String {
        let mut out = String::from("NODES\n");
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "{i} {:.17e} {:.17e}", p[0], p[1]);
        }
        out.push_str("TRIANGLES\n");
        for (t, &(a, b, c, r)) in self.triangles.iter().enumerate() {
            let _ = writeln!(out, "{t} {a} {b} {c} {}", r.as_str());
        }
        out.push_str("INTERFACE_EDGES\n");
        for (j, e) in self.edges.iter().enumerate() {
            let ids: Vec<String> = e.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{j} {}", ids.join(" "));
        }
        out.push_str("OUTER_BOUNDARY\n");
        let ids: Vec<String> = self.outer.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", ids.join(" "));
        out
    }
}
