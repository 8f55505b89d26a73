use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::FsiMesh;

/// One straight interface edge, as an ordered node polyline running
/// counterclockwise around the solid.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceEdge<T> {
    pub nodes: Vec<usize>,
    /// Unit tangent from the first node to the last.
    pub tangent: [T; 2],
    /// Unit normal of every segment, pointing from the fluid into the solid.
    pub nu: Vec<[T; 2]>,
    /// Length of every segment.
    pub lengths: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum End {
    Start,
    End,
}

/// An endpoint of an interface edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeEnd {
    pub edge: usize,
    pub end: End,
}

/// A polygon corner where the edge `incoming` ends and `outgoing` starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Junction {
    pub node: usize,
    pub incoming: usize,
    pub outgoing: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceGraph<T> {
    edges: Vec<InterfaceEdge<T>>,
    junctions: Vec<Junction>,
}

fn sub<T: Real>(a: [T; 2], b: [T; 2]) -> [T; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[1] - a[1] * b[0]
}

fn norm<T: Real>(a: [T; 2]) -> T {
    (a[0] * a[0] + a[1] * a[1]).sqrt()
}

impl<T: Real> InterfaceGraph<T> {
    /// Builds the graph from edge polylines given in cycle order.
    pub fn from_edges(coords: &[[T; 2]], edges: Vec<Vec<usize>>) -> Result<Self> {
        let k = edges.len();
        if k < 3 {
            return Err(Error::Topology(format!(
                "interface needs at least 3 edges, found {k}"
            )));
        }
        for (j, e) in edges.iter().enumerate() {
            if e.len() < 2 {
                return Err(Error::Topology(format!(
                    "interface edge {j} has fewer than 2 nodes"
                )));
            }
        }
        for j in 0..k {
            let next = (j + 1) % k;
            let (a, b) = (*edges[j].last().unwrap(), edges[next][0]);
            if a != b {
                return Err(Error::Topology(format!(
                    "open interface cycle: edge {j} ends at node {a} but edge {next} starts at node {b}"
                )));
            }
        }
        let mut seen = BTreeSet::new();
        for e in &edges {
            for &v in &e[..e.len() - 1] {
                if !seen.insert(v) {
                    return Err(Error::Topology(format!(
                        "interface node {v} appears more than once in the cycle"
                    )));
                }
            }
        }

        let tol = T::lit(1e3) * T::eps();
        let mut built = Vec::with_capacity(k);
        for (j, nodes) in edges.into_iter().enumerate() {
            let p0 = coords[nodes[0]];
            let chord = sub(coords[*nodes.last().unwrap()], p0);
            let len = norm(chord);
            if !(len > T::zero()) {
                return Err(Error::Topology(format!(
                    "interface edge {j} has zero length"
                )));
            }
            let tangent = [chord[0] / len, chord[1] / len];
            let mut along_prev = T::zero();
            let mut nu = Vec::with_capacity(nodes.len() - 1);
            let mut lengths = Vec::with_capacity(nodes.len() - 1);
            for (s, w) in nodes.windows(2).enumerate() {
                let q = sub(coords[w[1]], p0);
                if cross(tangent, q).abs() > tol * len {
                    return Err(Error::Topology(format!(
                        "interface edge {j} is not straight at node {}",
                        w[1]
                    )));
                }
                let along = tangent[0] * q[0] + tangent[1] * q[1];
                if !(along > along_prev) {
                    return Err(Error::Topology(format!(
                        "interface edge {j} doubles back at segment {s}"
                    )));
                }
                along_prev = along;
                let d = sub(coords[w[1]], coords[w[0]]);
                let l = norm(d);
                nu.push([-d[1] / l, d[0] / l]);
                lengths.push(l);
            }
            built.push(InterfaceEdge {
                nodes,
                tangent,
                nu,
                lengths,
            });
        }

        let mut twice_area = T::zero();
        for e in &built {
            for w in e.nodes.windows(2) {
                twice_area += cross(coords[w[0]], coords[w[1]]);
            }
        }
        if !(twice_area > T::zero()) {
            return Err(Error::Topology(
                "interface cycle must run counterclockwise around the solid".into(),
            ));
        }

        let mut junctions = Vec::with_capacity(k);
        let mut turning = 0.0f64;
        for j in 0..k {
            let next = (j + 1) % k;
            let node = built[next].nodes[0];
            let (tin, tout) = (built[j].tangent, built[next].tangent);
            let c = cross(tin, tout);
            let d = tin[0] * tout[0] + tin[1] * tout[1];
            if c < T::zero() {
                return Err(Error::NonconvexSolid { node });
            }
            if !(c > tol) {
                return Err(Error::Topology(format!(
                    "edges {j} and {next} are collinear at junction node {node}"
                )));
            }
            turning += c.as_f64().atan2(d.as_f64());
            junctions.push(Junction {
                node,
                incoming: j,
                outgoing: next,
            });
        }
        if (turning - std::f64::consts::TAU).abs() > 1e-6 {
            return Err(Error::NonconvexSolid {
                node: junctions[0].node,
            });
        }

        Ok(Self {
            edges: built,
            junctions,
        })
    }

    pub fn edges(&self) -> &[InterfaceEdge<T>] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn junctions(&self) -> &[Junction] {
        &self.junctions
    }

    /// Every interface node once, in cycle order starting at the first node
    /// of edge 0.
    pub fn cycle_nodes(&self) -> Vec<usize> {
        self.edges
            .iter()
            .flat_map(|e| e.nodes_without_last())
            .collect()
    }

    /// Consecutive node pairs of all edges, in cycle order.
    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .flat_map(|e| e.nodes.windows(2).map(|w| (w[0], w[1])))
    }

    pub fn endpoint_node(&self, at: EdgeEnd) -> usize {
        let nodes = &self.edges[at.edge].nodes;
        match at.end {
            End::Start => nodes[0],
            End::End => *nodes.last().unwrap(),
        }
    }

    /// The other edge endpoint meeting at the same junction.
    pub fn pair(&self, at: EdgeEnd) -> EdgeEnd {
        let k = self.edges.len();
        match at.end {
            End::End => EdgeEnd {
                edge: (at.edge + 1) % k,
                end: End::Start,
            },
            End::Start => EdgeEnd {
                edge: (at.edge + k - 1) % k,
                end: End::End,
            },
        }
    }

    /// Outward unit "normal" of the 1-D edge at one of its endpoints: the
    /// edge tangent at the end, its negative at the start.
    pub fn endpoint_normal(&self, at: EdgeEnd) -> [T; 2] {
        let t = self.edges[at.edge].tangent;
        match at.end {
            End::End => t,
            End::Start => [-t[0], -t[1]],
        }
    }

    /// Arc-length orientation of the endpoint normal: `+1` at the end of an
    /// edge, `-1` at its start.
    pub fn endpoint_sign(at: EdgeEnd) -> T {
        match at.end {
            End::End => T::one(),
            End::Start => -T::one(),
        }
    }

    /// All edge endpoints, two per edge.
    pub fn edge_ends(&self) -> impl Iterator<Item = EdgeEnd> + '_ {
        (0..self.edges.len()).flat_map(|edge| {
            [End::Start, End::End]
                .into_iter()
                .map(move |end| EdgeEnd { edge, end })
        })
    }

    pub fn length(&self) -> T {
        self.edges
            .iter()
            .flat_map(|e| e.lengths.iter().copied())
            .sum()
    }
}

impl<T> InterfaceEdge<T> {
    pub fn nodes_without_last(&self) -> Vec<usize> {
        self.nodes[..self.nodes.len() - 1].to_vec()
    }
}

/// Rebuilds and returns the interface graph of a mesh.
pub fn interface_graph<T: Real>(mesh: &FsiMesh<T>) -> Result<InterfaceGraph<T>> {
    let edges = mesh
        .interface()
        .edges()
        .iter()
        .map(|e| e.nodes.clone())
        .collect();
    InterfaceGraph::from_edges(mesh.nodes(), edges)
}
