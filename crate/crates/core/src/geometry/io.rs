//! Line-oriented mesh text format.
//!
//! ```text
//! NODES
//! <id> <x> <y>
//! TRIANGLES
//! <id> <n1> <n2> <n3> <fluid|solid>
//! INTERFACE_EDGES
//! <edge_id> <node> <node> ...
//! OUTER_BOUNDARY
//! <node> <node> ...
//! ```
//!
//! Blank lines and `#` comments are ignored. Floats are written with 17
//! significant digits, so a save/load round trip is exact.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::{fmt17, parse_real, Real};

use super::{FsiMesh, Region, Triangle};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Nodes,
    Triangles,
    InterfaceEdges,
    OuterBoundary,
}

impl Section {
    fn header(self) -> &'static str {
        match self {
            Section::Nodes => "NODES",
            Section::Triangles => "TRIANGLES",
            Section::InterfaceEdges => "INTERFACE_EDGES",
            Section::OuterBoundary => "OUTER_BOUNDARY",
        }
    }

    fn parse(line: &str) -> Option<Self> {
        [
            Section::Nodes,
            Section::Triangles,
            Section::InterfaceEdges,
            Section::OuterBoundary,
        ]
        .into_iter()
        .find(|s| s.header() == line)
    }
}

pub fn save_mesh<T: Real>(mesh: &FsiMesh<T>) -> String {
    let mut out = String::new();
    out.push_str("NODES\n");
    for (i, p) in mesh.nodes().iter().enumerate() {
        let _ = writeln!(out, "{i} {} {}", fmt17(p[0]), fmt17(p[1]));
    }
    out.push_str("TRIANGLES\n");
    for (i, t) in mesh.triangles().iter().enumerate() {
        let [a, b, c] = t.nodes;
        let _ = writeln!(out, "{i} {a} {b} {c} {}", t.region.as_str());
    }
    out.push_str("INTERFACE_EDGES\n");
    for (j, e) in mesh.interface().edges().iter().enumerate() {
        let ids: Vec<String> = e.nodes.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{j} {}", ids.join(" "));
    }
    out.push_str("OUTER_BOUNDARY\n");
    for chunk in mesh.outer_boundary().chunks(16) {
        let ids: Vec<String> = chunk.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{}", ids.join(" "));
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_index(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| {
        parse_err(
            line,
            format!("expected a nonnegative integer, found `{tok}`"),
        )
    })
}

pub fn load_mesh<T: Real>(text: &str) -> Result<FsiMesh<T>> {
    let mut section = None;
    let mut seen = Vec::new();
    let mut nodes: Vec<(usize, [T; 2])> = Vec::new();
    let mut triangles: Vec<(usize, Triangle)> = Vec::new();
    let mut edges: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut outer = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(s) = Section::parse(line) {
            if seen.contains(&s) {
                return Err(parse_err(
                    line_no,
                    format!("duplicate section {}", s.header()),
                ));
            }
            seen.push(s);
            section = Some(s);
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match section {
            None => return Err(parse_err(line_no, "data before the first section header")),
            Some(Section::Nodes) => {
                if toks.len() != 3 {
                    return Err(parse_err(line_no, "NODES rows are `id x y`"));
                }
                let id = parse_index(toks[0], line_no)?;
                let coord = |t: &str| {
                    parse_real::<T>(t)
                        .ok_or_else(|| parse_err(line_no, format!("bad coordinate `{t}`")))
                };
                nodes.push((id, [coord(toks[1])?, coord(toks[2])?]));
            }
            Some(Section::Triangles) => {
                if toks.len() != 5 {
                    return Err(parse_err(
                        line_no,
                        "TRIANGLES rows are `id n1 n2 n3 region`",
                    ));
                }
                let id = parse_index(toks[0], line_no)?;
                let mut tri = [0; 3];
                for (slot, tok) in tri.iter_mut().zip(&toks[1..4]) {
                    *slot = parse_index(tok, line_no)?;
                }
                let region: Region = toks[4].parse().map_err(|m: String| parse_err(line_no, m))?;
                triangles.push((id, Triangle { nodes: tri, region }));
            }
            Some(Section::InterfaceEdges) => {
                if toks.len() < 3 {
                    return Err(parse_err(
                        line_no,
                        "INTERFACE_EDGES rows are `edge_id n0 n1 ...` with at least two nodes",
                    ));
                }
                let id = parse_index(toks[0], line_no)?;
                let list = toks[1..]
                    .iter()
                    .map(|t| parse_index(t, line_no))
                    .collect::<Result<Vec<_>>>()?;
                edges.push((id, list));
            }
            Some(Section::OuterBoundary) => {
                for t in toks {
                    outer.push(parse_index(t, line_no)?);
                }
            }
        }
    }
    for s in [
        Section::Nodes,
        Section::Triangles,
        Section::InterfaceEdges,
        Section::OuterBoundary,
    ] {
        if !seen.contains(&s) {
            return Err(parse_err(0, format!("missing section {}", s.header())));
        }
    }

    let nodes = into_dense(nodes, "node")?;
    let triangles = into_dense(triangles, "triangle")?;
    let edges = into_dense(edges, "interface edge")?;
    FsiMesh::new(nodes, triangles, outer, edges)
}

/// Orders rows by id and requires the ids to be exactly `0..n`.
fn into_dense<V>(mut rows: Vec<(usize, V)>, what: &str) -> Result<Vec<V>> {
    rows.sort_by_key(|(id, _)| *id);
    for (expect, (id, _)) in rows.iter().enumerate() {
        if *id != expect {
            return Err(Error::Topology(format!(
                "{what} ids must be 0..{} without gaps or repeats; found {id} at position {expect}",
                rows.len()
            )));
        }
    }
    Ok(rows.into_iter().map(|(_, v)| v).collect())
}
