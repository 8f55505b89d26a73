//! Two-region conforming triangulations: a convex solid polygon immersed in
//! a fluid region, sharing interface nodes.

mod interface;
mod io;

use std::collections::{BTreeMap, BTreeSet, HashMap};

pub use interface::{interface_graph, EdgeEnd, End, InterfaceEdge, InterfaceGraph, Junction};
pub use io::{load_mesh, save_mesh};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest refinement level accepted by [`build_default_geometry`].
pub const MAX_REFINEMENT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Fluid,
    Solid,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Fluid => "fluid",
            Region::Solid => "solid",
        }
    }
}

impl std::str::FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fluid" => Ok(Region::Fluid),
            "solid" => Ok(Region::Solid),
            other => Err(format!("unknown region `{other}`")),
        }
    }
}

/// Counterclockwise triangle tagged with the region it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    pub nodes: [usize; 3],
    pub region: Region,
}

/// Validated conforming mesh of the fluid and solid regions.
#[derive(Debug, Clone, PartialEq)]
pub struct FsiMesh<T> {
    nodes: Vec<[T; 2]>,
    triangles: Vec<Triangle>,
    outer_boundary: Vec<usize>,
    interface: InterfaceGraph<T>,
}

pub(crate) fn signed_area<T: Real>(a: [T; 2], b: [T; 2], c: [T; 2]) -> T {
    ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) * T::lit(0.5)
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Default, Clone, Copy)]
struct Incidence {
    fluid: usize,
    solid: usize,
}

impl<T: Real> FsiMesh<T> {
    /// Validates the raw mesh data and computes the interface graph.
    ///
    /// `interface_edges` lists the straight interface edges in cycle order,
    /// each as an ordered node polyline; `outer_boundary` lists the nodes of
    /// the outer fluid boundary.
    pub fn new(
        nodes: Vec<[T; 2]>,
        triangles: Vec<Triangle>,
        mut outer_boundary: Vec<usize>,
        interface_edges: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let n = nodes.len();
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.nodes.iter().find(|&&v| v >= n) {
                return Err(Error::Topology(format!(
                    "triangle {t} references unknown node {bad}"
                )));
            }
            let [a, b, c] = tri.nodes;
            let area = signed_area(nodes[a], nodes[b], nodes[c]);
            if !(area > T::zero()) {
                return Err(Error::DegenerateTriangle {
                    triangle: t,
                    area: area.as_f64(),
                });
            }
        }
        for &v in outer_boundary
            .iter()
            .chain(interface_edges.iter().flatten())
        {
            if v >= n {
                return Err(Error::Topology(format!(
                    "unknown node {v} in boundary lists"
                )));
            }
        }
        outer_boundary.sort_unstable();
        outer_boundary.dedup();

        let interface = InterfaceGraph::from_edges(&nodes, interface_edges)?;

        let mut incidence: HashMap<(usize, usize), Incidence> = HashMap::new();
        let mut fluid_nodes = BTreeSet::new();
        let mut solid_nodes = BTreeSet::new();
        for tri in &triangles {
            let [a, b, c] = tri.nodes;
            for (p, q) in [(a, b), (b, c), (c, a)] {
                let e = incidence.entry(edge_key(p, q)).or_default();
                match tri.region {
                    Region::Fluid => e.fluid += 1,
                    Region::Solid => e.solid += 1,
                }
            }
            let set = match tri.region {
                Region::Fluid => &mut fluid_nodes,
                Region::Solid => &mut solid_nodes,
            };
            set.extend(tri.nodes);
        }

        let cycle = interface.cycle_nodes();
        for &v in &cycle {
            let side = match (fluid_nodes.contains(&v), solid_nodes.contains(&v)) {
                (true, true) => continue,
                (false, _) => "no fluid triangle uses it",
                (_, false) => "no solid triangle uses it",
            };
            return Err(Error::HangingNode {
                node: v,
                detail: side.to_string(),
            });
        }
        let segments: BTreeSet<(usize, usize)> =
            interface.segments().map(|(a, b)| edge_key(a, b)).collect();
        for &(a, b) in &segments {
            let inc = incidence.get(&(a, b)).copied().unwrap_or_default();
            if inc.fluid != 1 || inc.solid != 1 {
                return Err(Error::NonconformingInterface {
                    a,
                    b,
                    fluid: inc.fluid,
                    solid: inc.solid,
                });
            }
        }

        let outer: BTreeSet<usize> = outer_boundary.iter().copied().collect();
        let cycle_set: BTreeSet<usize> = cycle.iter().copied().collect();
        if let Some(&v) = outer.intersection(&cycle_set).next() {
            return Err(Error::Topology(format!(
                "node {v} lies on both the outer boundary and the interface"
            )));
        }
        let mut boundary_touched = BTreeSet::new();
        for (&(a, b), inc) in &incidence {
            let total = inc.fluid + inc.solid;
            if total > 2 {
                return Err(Error::Topology(format!(
                    "edge ({a}, {b}) is shared by {total} triangles"
                )));
            }
            if inc.fluid == 1 && inc.solid == 1 && !segments.contains(&(a, b)) {
                return Err(Error::NonconformingInterface {
                    a,
                    b,
                    fluid: 1,
                    solid: 1,
                });
            }
            if total == 1 {
                if inc.solid == 1 {
                    return Err(Error::Topology(format!(
                        "solid edge ({a}, {b}) lies on the outer boundary; the solid must be immersed"
                    )));
                }
                if !outer.contains(&a) || !outer.contains(&b) {
                    return Err(Error::Topology(format!(
                        "boundary edge ({a}, {b}) is not declared in OUTER_BOUNDARY"
                    )));
                }
                boundary_touched.insert(a);
                boundary_touched.insert(b);
            }
        }
        if let Some(&v) = outer.difference(&boundary_touched).next() {
            return Err(Error::Topology(format!(
                "OUTER_BOUNDARY node {v} is not on the mesh boundary"
            )));
        }
        if let Some(&v) = solid_nodes.iter().find(|v| outer.contains(v)) {
            return Err(Error::Topology(format!(
                "solid node {v} lies on the outer boundary"
            )));
        }

        Ok(Self {
            nodes,
            triangles,
            outer_boundary,
            interface,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[T; 2]] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> [T; 2] {
        self.nodes[i]
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn triangles_in(&self, region: Region) -> impl Iterator<Item = &Triangle> + '_ {
        self.triangles.iter().filter(move |t| t.region == region)
    }

    /// Sorted node ids of `Γ_f`.
    pub fn outer_boundary(&self) -> &[usize] {
        &self.outer_boundary
    }

    pub fn interface(&self) -> &InterfaceGraph<T> {
        &self.interface
    }

    /// Sorted ids of nodes used by triangles of `region`.
    pub fn region_nodes(&self, region: Region) -> Vec<usize> {
        let set: BTreeSet<usize> = self.triangles_in(region).flat_map(|t| t.nodes).collect();
        set.into_iter().collect()
    }

    pub fn triangle_area(&self, t: &Triangle) -> T {
        let [a, b, c] = t.nodes;
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn region_area(&self, region: Region) -> T {
        self.triangles_in(region)
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Longest triangle edge.
    pub fn mesh_size(&self) -> T {
        let mut h = T::zero();
        for t in &self.triangles {
            let [a, b, c] = t.nodes;
            for (p, q) in [(a, b), (b, c), (c, a)] {
                let (x, y) = (self.nodes[p], self.nodes[q]);
                let d = ((x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1])).sqrt();
                h = h.max(d);
            }
        }
        h
    }

    /// Splits every triangle into four through its edge midpoints.
    pub fn refine(&self) -> Result<Self> {
        let mut boundary_edges: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            let [a, b, c] = t.nodes;
            for (p, q) in [(a, b), (b, c), (c, a)] {
                *boundary_edges.entry(edge_key(p, q)).or_default() += 1;
            }
        }
        let mut nodes = self.nodes.clone();
        let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let half = T::lit(0.5);
        let mut midpoint = |p: usize, q: usize, nodes: &mut Vec<[T; 2]>| -> usize {
            *midpoints.entry(edge_key(p, q)).or_insert_with(|| {
                let (x, y) = (nodes[p], nodes[q]);
                nodes.push([(x[0] + y[0]) * half, (x[1] + y[1]) * half]);
                nodes.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for t in &self.triangles {
            let [a, b, c] = t.nodes;
            let ab = midpoint(a, b, &mut nodes);
            let bc = midpoint(b, c, &mut nodes);
            let ca = midpoint(c, a, &mut nodes);
            for tri in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
                triangles.push(Triangle {
                    nodes: tri,
                    region: t.region,
                });
            }
        }
        let mut outer = self.outer_boundary.clone();
        for (&(p, q), &count) in &boundary_edges {
            if count == 1 {
                outer.push(midpoint(p, q, &mut nodes));
            }
        }
        let edges = self
            .interface
            .edges()
            .iter()
            .map(|edge| {
                let mut refined = vec![edge.nodes[0]];
                for w in edge.nodes.windows(2) {
                    refined.push(midpoint(w[0], w[1], &mut nodes));
                    refined.push(w[1]);
                }
                refined
            })
            .collect();
        FsiMesh::new(nodes, triangles, outer, edges)
    }
}

/// The default square-in-square geometry: solid `[0.25, 0.75]²` inside the
/// fluid `[0,1]² \ [0.25,0.75]²`, coarsest level a 4×4 grid of diagonally
/// split cells, refined uniformly `refinement` times.
pub fn build_default_geometry<T: Real>(refinement: usize) -> Result<FsiMesh<T>> {
    if refinement > MAX_REFINEMENT {
        return Err(Error::Bounds {
            what: "refinement",
            value: refinement.to_string(),
            range: "0..=8",
        });
    }
    let cells = 4usize;
    let id = |i: usize, j: usize| j * (cells + 1) + i;
    let spacing = T::lit(0.25);
    let mut nodes = Vec::with_capacity((cells + 1) * (cells + 1));
    for j in 0..=cells {
        for i in 0..=cells {
            nodes.push([T::from_count(i) * spacing, T::from_count(j) * spacing]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let region = if (1..3).contains(&i) && (1..3).contains(&j) {
                Region::Solid
            } else {
                Region::Fluid
            };
            let (p00, p10, p11, p01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push(Triangle {
                nodes: [p00, p10, p11],
                region,
            });
            triangles.push(Triangle {
                nodes: [p00, p11, p01],
                region,
            });
        }
    }
    let mut outer = Vec::new();
    for j in 0..=cells {
        for i in 0..=cells {
            if i == 0 || j == 0 || i == cells || j == cells {
                outer.push(id(i, j));
            }
        }
    }
    let edges = vec![
        vec![id(1, 1), id(2, 1), id(3, 1)],
        vec![id(3, 1), id(3, 2), id(3, 3)],
        vec![id(3, 3), id(2, 3), id(1, 3)],
        vec![id(1, 3), id(1, 2), id(1, 1)],
    ];
    let mut mesh = FsiMesh::new(nodes, triangles, outer, edges)?;
    for _ in 0..refinement {
        mesh = mesh.refine()?;
    }
    Ok(mesh)
}
