//! The planar graph of an `F_3` tree diagram and membership in the oriented
//! subgroup of `F`.
//!
//! Leaves sit on the axis at `0..m`. The axis gap left of leaf `0` has
//! left endpoint `-1`, the gap right of leaf `k` has left endpoint `k`;
//! gaps with odd left endpoint are black, so the leftmost region is black.
//! Every internal vertex of either tree touches four regions at the corner
//! gaps `L-1, r1, r2, R` (span `[L, R]`, right ends `r1 < r2` of its first two
//! children). Ternary subtrees have an odd number of leaves, so exactly two
//! corners are black; the vertex contributes one edge joining them.

use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

use crate::diagram::{eval_word, DiagramError, Node, PAryTree, TreeDiagram};
use crate::embed::iota_word;
use crate::word::Word;

/// Multigraph on the black regions of a ternary tree diagram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanarGraph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("planar graph is not connected")]
    NotConnected,
}

impl PlanarGraph {
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize)>) -> Self {
        assert!(edges.iter().all(|&(a, b)| a < vertex_count && b < vertex_count));
        PlanarGraph { vertex_count, edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// x-coordinate of vertex `j` in the strip picture.
    pub fn vertex_x(j: usize) -> f64 {
        -0.5 + 2.0 * j as f64
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.vertex_count];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    reached += 1;
                    queue.push_back(u);
                }
            }
        }
        reached == self.vertex_count
    }

    /// Proper 2-colouring with vertex 0 coloured `true`, if one exists.
    /// Loops make the graph uncolourable; parallel edges are harmless.
    pub fn two_coloring(&self) -> Option<Vec<bool>> {
        if self.edges.iter().any(|&(a, b)| a == b) {
            return None;
        }
        let adj = self.adjacency();
        let mut color: Vec<Option<bool>> = vec![None; self.vertex_count];
        for start in 0..self.vertex_count {
            if color[start].is_some() {
                continue;
            }
            color[start] = Some(true);
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                let c = color[v].unwrap();
                for &u in &adj[v] {
                    match color[u] {
                        None => {
                            color[u] = Some(!c);
                            queue.push_back(u);
                        }
                        Some(cu) if cu == c => return None,
                        Some(_) => {}
                    }
                }
            }
        }
        Some(color.into_iter().map(Option::unwrap).collect())
    }

    /// Chromatic polynomial at 2 of a connected graph: 2 when bipartite,
    /// otherwise 0.
    pub fn chromatic_at_two(&self) -> Result<u32, GraphError> {
        if !self.is_connected() {
            return Err(GraphError::NotConnected);
        }
        Ok(if self.two_coloring().is_some() { 2 } else { 0 })
    }

    /// Undirected multigraph in DOT syntax.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph planar {\n");
        for j in 0..self.vertex_count {
            let _ = writeln!(out, "  v{j}; // x = {}", PlanarGraph::vertex_x(j));
        }
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "  v{a} -- v{b};");
        }
        out.push_str("}\n");
        out
    }
}

/// Planar graph of a ternary tree diagram (reduced or not).
pub fn planar_graph(d: &TreeDiagram) -> Result<PlanarGraph, DiagramError> {
    d.require_arity(3)?;
    let vertex_count = d.leaf_count().div_ceil(2);
    let mut edges = Vec::with_capacity(d.top().caret_count() + d.bottom().caret_count());
    for tree in [d.top(), d.bottom()] {
        collect_vertex_edges(tree, &mut edges);
    }
    Ok(PlanarGraph { vertex_count, edges })
}

fn collect_vertex_edges(tree: &PAryTree, edges: &mut Vec<(usize, usize)>) {
    let ann = tree.annotate();
    for (i, &node) in tree.nodes().iter().enumerate() {
        if node != Node::Caret {
            continue;
        }
        let first = i + 1;
        let second = ann.end[first];
        let (lo, hi) = ann.span[i];
        let corners = [i64::from(lo) - 1, i64::from(ann.span[first].1), i64::from(ann.span[second].1), i64::from(hi)];
        let mut black = corners.iter().filter(|&&g| g.rem_euclid(2) == 1).map(|&g| ((g + 1) / 2) as usize);
        let (a, b) = (black.next().unwrap(), black.next().unwrap());
        debug_assert!(black.next().is_none());
        edges.push((a, b));
    }
}

/// `Chr(2) / 2` for the planar graph of a ternary diagram: 1 when the element
/// lies in the oriented subgroup of `F_3`, otherwise 0.
pub fn ternary_theta(d: &TreeDiagram) -> Result<u8, DiagramError> {
    let graph = planar_graph(d)?;
    let chr = graph.chromatic_at_two().expect("planar graphs of tree diagrams are connected");
    Ok((chr / 2) as u8)
}

/// The state `theta` on a word of `F`: 1 iff its value lies in the oriented
/// subgroup.
pub fn theta(w: &Word) -> Result<u8, DiagramError> {
    ternary_theta(&eval_word(&iota_word(w)?))
}

/// Whether an element of `F` maps the dyadics of even digit sum to
/// themselves: every leaf has the same right-edge parity in both trees.
pub fn parity_membership(d: &TreeDiagram) -> Result<bool, DiagramError> {
    d.require_arity(2)?;
    let d = d.reduce();
    let top = d.top().leaf_digit_sums();
    let bottom = d.bottom().leaf_digit_sums();
    Ok(top.iter().zip(&bottom).all(|(a, b)| a % 2 == b % 2))
}
