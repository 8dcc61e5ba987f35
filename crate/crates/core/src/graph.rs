//! Multigraphs with an explicit edge involution.
//!
//! A [`Graph`] is a list of directed edges together with an involution `ι`
//! pairing each directed edge with its opposite. An edge fixed by `ι` is a
//! half-loop; a self-loop whose opposite is a different directed edge is a
//! whole-loop. Everything downstream (Hashimoto matrices, covers, random
//! models) is expressed in terms of this representation.

use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge list has {edges} entries but involution has {involution}")]
    LengthMismatch { edges: usize, involution: usize },
    #[error("index {index} out of range (limit {limit}) at directed edge {edge}")]
    IndexOutOfRange {
        edge: usize,
        index: usize,
        limit: usize,
    },
    #[error("invalid involution at directed edge {edge}: {reason}")]
    InvalidInvolution { edge: usize, reason: &'static str },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A finite multigraph `(V, E^dir, t, h, ι)`.
///
/// Directed edges are indexed `0..directed_edge_count()` in a fixed order;
/// paired edges need not be adjacent in that order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    vertex_count: usize,
    tails: Vec<usize>,
    heads: Vec<usize>,
    involution: Vec<usize>,
}

/// Basic counts of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct GraphCounts {
    pub vertices: usize,
    pub undirected_edges: usize,
    pub half_loops: usize,
    pub pairs: usize,
    pub euler_characteristic: i64,
}

/// A directed graph without involution, as produced by [`Graph::directed_line_graph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize)>,
}

impl DirectedGraph {
    pub fn out_degrees(&self) -> Vec<usize> {
        let mut out = vec![0; self.vertex_count];
        for &(t, _) in &self.edges {
            out[t] += 1;
        }
        out
    }
}

impl Graph {
    /// Validates and builds a graph from `(tail, head)` pairs and the involution.
    pub fn new(
        vertex_count: usize,
        directed_edges: &[(usize, usize)],
        involution: &[usize],
    ) -> Result<Self, GraphError> {
        if directed_edges.len() != involution.len() {
            return Err(GraphError::LengthMismatch {
                edges: directed_edges.len(),
                involution: involution.len(),
            });
        }
        let m = directed_edges.len();
        for (e, &(t, h)) in directed_edges.iter().enumerate() {
            for index in [t, h] {
                if index >= vertex_count {
                    return Err(GraphError::IndexOutOfRange {
                        edge: e,
                        index,
                        limit: vertex_count,
                    });
                }
            }
            if involution[e] >= m {
                return Err(GraphError::IndexOutOfRange {
                    edge: e,
                    index: involution[e],
                    limit: m,
                });
            }
        }
        for (e, &(t, h)) in directed_edges.iter().enumerate() {
            let opp = involution[e];
            if involution[opp] != e {
                return Err(GraphError::InvalidInvolution {
                    edge: e,
                    reason: "involution does not square to the identity",
                });
            }
            if directed_edges[opp].0 != h {
                return Err(GraphError::InvalidInvolution {
                    edge: e,
                    reason: "tail of the opposite edge differs from the head",
                });
            }
            if opp == e && t != h {
                return Err(GraphError::InvalidInvolution {
                    edge: e,
                    reason: "fixed point of the involution is not a self-loop",
                });
            }
        }
        Ok(Self {
            vertex_count,
            tails: directed_edges.iter().map(|&(t, _)| t).collect(),
            heads: directed_edges.iter().map(|&(_, h)| h).collect(),
            involution: involution.to_vec(),
        })
    }

    /// Builds a graph from undirected edges `{u, v}`; each becomes the directed
    /// pair `2i: u→v`, `2i+1: v→u`. A pair with `u == v` is a whole-loop.
    pub fn from_undirected(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut directed = Vec::with_capacity(2 * edges.len());
        let mut involution = Vec::with_capacity(2 * edges.len());
        for (i, &(u, v)) in edges.iter().enumerate() {
            directed.push((u, v));
            directed.push((v, u));
            involution.push(2 * i + 1);
            involution.push(2 * i);
        }
        Self::new(vertex_count, &directed, &involution)
    }

    /// The complete graph on `n` vertices.
    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v));
            }
        }
        Self::from_undirected(n, &edges).expect("complete graph is valid")
    }

    /// The Petersen graph (outer 5-cycle, inner pentagram, spokes).
    pub fn petersen() -> Self {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
            edges.push((i, 5 + i));
        }
        Self::from_undirected(10, &edges).expect("petersen graph is valid")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn directed_edge_count(&self) -> usize {
        self.tails.len()
    }

    pub fn tail(&self, e: usize) -> usize {
        self.tails[e]
    }

    pub fn head(&self, e: usize) -> usize {
        self.heads[e]
    }

    pub fn opposite(&self, e: usize) -> usize {
        self.involution[e]
    }

    pub fn tails(&self) -> &[usize] {
        &self.tails
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn involution(&self) -> &[usize] {
        &self.involution
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.tails.iter().copied().zip(self.heads.iter().copied())
    }

    pub fn is_half_loop(&self, e: usize) -> bool {
        self.involution[e] == e
    }

    pub fn is_whole_loop(&self, e: usize) -> bool {
        self.involution[e] != e && self.tails[e] == self.heads[e]
    }

    pub fn half_loop_count(&self) -> usize {
        (0..self.directed_edge_count())
            .filter(|&e| self.is_half_loop(e))
            .count()
    }

    /// Number of whole-loops (each counted once, not per orientation).
    pub fn whole_loop_count(&self) -> usize {
        (0..self.directed_edge_count())
            .filter(|&e| self.is_whole_loop(e))
            .count()
            / 2
    }

    pub fn counts(&self) -> GraphCounts {
        let half_loops = self.half_loop_count();
        let pairs = (self.directed_edge_count() - half_loops) / 2;
        GraphCounts {
            vertices: self.vertex_count,
            undirected_edges: pairs + half_loops,
            half_loops,
            pairs,
            euler_characteristic: self.vertex_count as i64 - (pairs + half_loops) as i64,
        }
    }

    /// Out-degree of every vertex (equal to the in-degree).
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertex_count];
        for &t in &self.tails {
            deg[t] += 1;
        }
        deg
    }

    /// `Some(d)` when every vertex has degree `d`. The empty graph is not regular.
    pub fn regular_degree(&self) -> Option<usize> {
        let deg = self.degrees();
        let first = *deg.first()?;
        deg.iter().all(|&x| x == first).then_some(first)
    }

    /// Directed edges leaving each vertex, in edge order.
    pub fn out_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertex_count];
        for (e, &t) in self.tails.iter().enumerate() {
            out[t].push(e);
        }
        out
    }

    pub fn adjacency_matrix(&self) -> DMatrix<i64> {
        let n = self.vertex_count;
        let mut a = DMatrix::<i64>::zeros(n, n);
        for (t, h) in self.directed_edges() {
            a[(t, h)] += 1;
        }
        a
    }

    /// Successor lists of the directed line graph: `e2 ∈ succ[e1]` iff
    /// `h(e1) = t(e2)` and `e2 ≠ ι(e1)`.
    pub fn nonbacktracking_successors(&self) -> Vec<Vec<usize>> {
        let out = self.out_edges();
        (0..self.directed_edge_count())
            .map(|e1| {
                let back = self.involution[e1];
                out[self.heads[e1]]
                    .iter()
                    .copied()
                    .filter(|&e2| e2 != back)
                    .collect()
            })
            .collect()
    }

    pub fn directed_line_graph(&self) -> DirectedGraph {
        let succ = self.nonbacktracking_successors();
        let edges = succ
            .iter()
            .enumerate()
            .flat_map(|(e1, s)| s.iter().map(move |&e2| (e1, e2)))
            .collect();
        DirectedGraph {
            vertex_count: self.directed_edge_count(),
            edges,
        }
    }

    /// The Hashimoto (non-backtracking) matrix, indexed by directed edges.
    pub fn hashimoto_matrix(&self) -> DMatrix<i64> {
        let m = self.directed_edge_count();
        let mut h = DMatrix::<i64>::zeros(m, m);
        for (e1, s) in self.nonbacktracking_successors().iter().enumerate() {
            for &e2 in s {
                h[(e1, e2)] = 1;
            }
        }
        h
    }

    /// Connected component label of each vertex, labels numbered from 0 in
    /// order of first appearance.
    pub fn components(&self) -> Vec<usize> {
        let n = self.vertex_count;
        let out = self.out_edges();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &e in &out[v] {
                    let w = self.heads[e];
                    if label[w] == usize::MAX {
                        label[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn component_count(&self) -> usize {
        self.components().iter().max().map_or(0, |&m| m + 1)
    }

    /// Serialises in the `nbgraph v1` text format.
    pub fn to_nbgraph(&self) -> String {
        self.to_string()
    }

    pub fn parse_nbgraph(text: &str) -> Result<Self, GraphError> {
        text.parse()
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nbgraph v1")?;
        writeln!(f, "{} {}", self.vertex_count, self.directed_edge_count())?;
        for e in 0..self.directed_edge_count() {
            writeln!(f, "{} {} {}", self.tails[e], self.heads[e], self.involution[e])?;
        }
        Ok(())
    }
}

fn parse_fields<const N: usize>(line: &str, line_no: usize) -> Result<[usize; N], GraphError> {
    let err = |message: String| GraphError::Parse {
        line: line_no,
        message,
    };
    let parts: Vec<&str> = line.split(' ').collect();
    if parts.len() != N {
        return Err(err(format!("expected {N} fields, found {}", parts.len())));
    }
    let mut out = [0usize; N];
    for (slot, part) in out.iter_mut().zip(parts) {
        if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err(format!("not a base-10 integer: {part:?}")));
        }
        *slot = part
            .parse()
            .map_err(|e| err(format!("bad integer {part:?}: {e}")))?;
    }
    Ok(out)
}

impl std::str::FromStr for Graph {
    type Err = GraphError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, "nbgraph v1")) => {}
            Some((line, other)) => {
                return Err(GraphError::Parse {
                    line,
                    message: format!("expected header `nbgraph v1`, found {other:?}"),
                })
            }
            None => {
                return Err(GraphError::Parse {
                    line: 1,
                    message: "empty input".into(),
                })
            }
        }
        let (line, sizes) = lines.next().ok_or(GraphError::Parse {
            line: 2,
            message: "missing size line".into(),
        })?;
        let [vertex_count, edge_count] = parse_fields::<2>(sizes, line)?;
        let mut edges = Vec::with_capacity(edge_count);
        let mut involution = Vec::with_capacity(edge_count);
        for i in 0..edge_count {
            let (line, text) = lines.next().ok_or_else(|| GraphError::Parse {
                line: 3 + i,
                message: format!("expected {edge_count} edge lines, found {i}"),
            })?;
            let [t, h, inv] = parse_fields::<3>(text, line)?;
            edges.push((t, h));
            involution.push(inv);
        }
        if let Some((line, extra)) = lines.find(|(_, l)| !l.is_empty()) {
            return Err(GraphError::Parse {
                line,
                message: format!("unexpected trailing content {extra:?} (edge count is {edge_count})"),
            });
        }
        Graph::new(vertex_count, &edges, &involution).map_err(|e| GraphError::Parse {
            line: 2,
            message: e.to_string(),
        })
    }
}

impl serde::Serialize for Graph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_nbgraph())
    }
}

impl<'de> serde::Deserialize<'de> for Graph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = <String as serde::Deserialize>::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bouquet(whole: usize, half: usize) -> Graph {
        crate::models::build_bouquet(whole, half)
    }

    #[test]
    fn k4_counts_and_adjacency() {
        let k4 = Graph::complete(4);
        assert_eq!(k4.directed_edge_count(), 12);
        assert_eq!(
            k4.counts(),
            GraphCounts {
                vertices: 4,
                undirected_edges: 6,
                half_loops: 0,
                pairs: 6,
                euler_characteristic: -2
            }
        );
        let a = k4.adjacency_matrix();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a[(i, j)], if i == j { 0 } else { 1 });
            }
        }
    }

    #[test]
    fn single_half_loop_is_valid() {
        let g = Graph::new(1, &[(0, 0)], &[0]).unwrap();
        assert_eq!(g.half_loop_count(), 1);
        assert_eq!(g.counts().euler_characteristic, 0);
    }

    #[test]
    fn rejects_bad_involutions() {
        let err = Graph::new(2, &[(0, 1), (0, 1)], &[1, 0]).unwrap_err();
        assert!(matches!(err, GraphError::InvalidInvolution { .. }));
        // not an involution
        let err = Graph::new(1, &[(0, 0), (0, 0), (0, 0)], &[1, 2, 0]).unwrap_err();
        assert!(matches!(err, GraphError::InvalidInvolution { .. }));
        // fixed point that is not a loop
        let err = Graph::new(2, &[(0, 1)], &[0]).unwrap_err();
        assert!(matches!(err, GraphError::InvalidInvolution { .. }));
        let err = Graph::new(2, &[(0, 2)], &[0]).unwrap_err();
        assert!(matches!(err, GraphError::IndexOutOfRange { .. }));
        let err = Graph::new(2, &[(0, 1)], &[]).unwrap_err();
        assert!(matches!(err, GraphError::LengthMismatch { .. }));
    }

    #[test]
    fn bouquet_counts() {
        assert_eq!(
            bouquet(2, 0).counts(),
            GraphCounts {
                vertices: 1,
                undirected_edges: 2,
                half_loops: 0,
                pairs: 2,
                euler_characteristic: -1
            }
        );
        assert_eq!(
            bouquet(1, 1).counts(),
            GraphCounts {
                vertices: 1,
                undirected_edges: 2,
                half_loops: 1,
                pairs: 1,
                euler_characteristic: -1
            }
        );
        assert_eq!(bouquet(2, 0).adjacency_matrix()[(0, 0)], 4);
        assert_eq!(bouquet(0, 3).adjacency_matrix()[(0, 0)], 3);
    }

    #[test]
    fn line_graph_examples() {
        let b = bouquet(0, 3);
        let l = b.directed_line_graph();
        assert_eq!(l.vertex_count, 3);
        assert_eq!(l.edges.len(), 6);
        assert!(l.edges.iter().all(|&(a, b)| a != b));

        let k4 = Graph::complete(4).directed_line_graph();
        assert_eq!(k4.vertex_count, 12);
        assert!(k4.out_degrees().iter().all(|&d| d == 2));

        let single = bouquet(0, 1).directed_line_graph();
        assert_eq!(single.vertex_count, 1);
        assert!(single.edges.is_empty());
    }

    #[test]
    fn hashimoto_examples() {
        let h = bouquet(0, 3).hashimoto_matrix();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h[(i, j)], if i == j { 0 } else { 1 });
            }
        }
        assert_eq!(bouquet(2, 0).hashimoto_matrix().trace(), 4);
        let h = Graph::complete(4).hashimoto_matrix();
        assert_eq!(h.trace(), 0);
        for row in h.row_iter() {
            assert_eq!(row.sum(), 2);
        }
    }

    #[test]
    fn empty_graph_is_valid() {
        let g = Graph::new(0, &[], &[]).unwrap();
        assert_eq!(g.adjacency_matrix().nrows(), 0);
        assert_eq!(g.hashimoto_matrix().nrows(), 0);
        assert_eq!(g.regular_degree(), None);
        assert_eq!(g.component_count(), 0);
        let back: Graph = g.to_nbgraph().parse().unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn nbgraph_round_trip_and_errors() {
        let k4 = Graph::complete(4);
        let text = k4.to_nbgraph();
        assert_eq!(Graph::parse_nbgraph(&text).unwrap(), k4);

        let hl = bouquet(0, 1);
        let text = hl.to_nbgraph();
        assert_eq!(text, "nbgraph v1\n1 1\n0 0 0\n");
        assert_eq!(text.lines().count(), 3);
        assert_eq!(Graph::parse_nbgraph(&text).unwrap(), hl);

        let short = "nbgraph v1\n4 13\n".to_string() + &text_body(&k4);
        let err = Graph::parse_nbgraph(&short).unwrap_err();
        assert!(matches!(err, GraphError::Parse { .. }), "{err}");
        let long = "nbgraph v1\n4 11\n".to_string() + &text_body(&k4);
        let err = Graph::parse_nbgraph(&long).unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 14, .. }), "{err}");

        let err = Graph::parse_nbgraph("nbgraph v2\n0 0\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 1, .. }));
        let err = Graph::parse_nbgraph("nbgraph v1\n1 1\n0  0 0\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 3, .. }));
        let err = Graph::parse_nbgraph("nbgraph v1\n2 1\n0 1 0\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { .. }));
    }

    fn text_body(g: &Graph) -> String {
        g.to_nbgraph().lines().skip(2).map(|l| format!("{l}\n")).collect()
    }

    #[test]
    fn petersen_is_cubic_and_connected() {
        let p = Graph::petersen();
        assert_eq!(p.regular_degree(), Some(3));
        assert_eq!(p.component_count(), 1);
        assert_eq!(p.counts().undirected_edges, 15);
    }
}
