//! Linear (P1) element matrices and region/edge assembly.
//!
//! All bilinear terms are integrated exactly. Element matrices are built
//! from their upper triangle and mirrored, so assembled matrices are
//! bitwise symmetric.

use crate::geometry::{FsiMesh, Region};
use crate::scalar::Real;
use crate::sparse::{CsrMatrix, Triplets};

pub fn triangle_stiffness<T: Real>(p: [[T; 2]; 3]) -> [[T; 3]; 3] {
    let area = crate::geometry::signed_area(p[0], p[1], p[2]);
    let two_area = area + area;
    let grad = |i: usize| {
        let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area]
    };
    let g = [grad(0), grad(1), grad(2)];
    let mut k = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let v = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}

pub fn triangle_mass<T: Real>(area: T) -> [[T; 3]; 3] {
    let diag = area / T::lit(6.0);
    let off = area / T::lit(12.0);
    let mut m = [[off; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = diag;
    }
    m
}

pub fn segment_stiffness<T: Real>(len: T) -> [[T; 2]; 2] {
    let s = T::one() / len;
    [[s, -s], [-s, s]]
}

pub fn segment_mass<T: Real>(len: T) -> [[T; 2]; 2] {
    let d = len / T::lit(3.0);
    let o = len / T::lit(6.0);
    [[d, o], [o, d]]
}

/// Stiffness and mass of one region, rows/columns mapped through `map`
/// (`None` drops a node, e.g. a homogeneous Dirichlet node).
pub fn assemble_region<T: Real>(
    mesh: &FsiMesh<T>,
    region: Region,
    dim: usize,
    map: impl Fn(usize) -> Option<usize>,
) -> (CsrMatrix<T>, CsrMatrix<T>) {
    let mut stiff = Triplets::new(dim, dim);
    let mut mass = Triplets::new(dim, dim);
    for tri in mesh.triangles_in(region) {
        let p = tri.nodes.map(|v| mesh.node(v));
        let ke = triangle_stiffness(p);
        let me = triangle_mass(mesh.triangle_area(tri));
        let idx = tri.nodes.map(&map);
        for a in 0..3 {
            let Some(i) = idx[a] else { continue };
            for b in 0..3 {
                let Some(j) = idx[b] else { continue };
                stiff.push(i, j, ke[a][b]);
                mass.push(i, j, me[a][b]);
            }
        }
    }
    (stiff.build(), mass.build())
}

/// 1-D stiffness and mass over interface segments. `edge = None` assembles
/// over all edges; `Some(j)` over edge `j` alone.
pub fn assemble_interface<T: Real>(
    mesh: &FsiMesh<T>,
    edge: Option<usize>,
    dim: usize,
    map: impl Fn(usize) -> Option<usize>,
) -> (CsrMatrix<T>, CsrMatrix<T>) {
    let mut stiff = Triplets::new(dim, dim);
    let mut mass = Triplets::new(dim, dim);
    for (j, e) in mesh.interface().edges().iter().enumerate() {
        if edge.is_some_and(|only| only != j) {
            continue;
        }
        for (w, &len) in e.nodes.windows(2).zip(&e.lengths) {
            let ke = segment_stiffness(len);
            let me = segment_mass(len);
            let idx = [map(w[0]), map(w[1])];
            for a in 0..2 {
                let Some(i) = idx[a] else { continue };
                for b in 0..2 {
                    let Some(k) = idx[b] else { continue };
                    stiff.push(i, k, ke[a][b]);
                    mass.push(i, k, me[a][b]);
                }
            }
        }
    }
    (stiff.build(), mass.build())
}
