//! Small simple undirected graphs as adjacency bitmasks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poset::bits;

pub const MAX_VERTICES: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct Graph {
    adj: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphJson> for Graph {
    type Error = Error;

    fn try_from(json: GraphJson) -> Result<Self> {
        Graph::from_edges(json.n, &json.edges)
    }
}

impl From<Graph> for GraphJson {
    fn from(g: Graph) -> Self {
        GraphJson {
            n: g.len(),
            edges: g.edges(),
        }
    }
}

impl Graph {
    pub fn empty(n: usize) -> Result<Self> {
        if n > MAX_VERTICES {
            return Err(Error::Capacity {
                what: "graph",
                size: n,
                cap: MAX_VERTICES,
            });
        }
        Ok(Graph { adj: vec![0; n] })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n)?;
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Graph::empty(n)?;
        for u in 0..n {
            g.adj[u] = g.mask() & !(1 << u);
        }
        Ok(g)
    }

    /// The cycle 0 - 1 - ... - (n-1) - 0.
    pub fn cycle(n: usize) -> Result<Self> {
        let mut g = Graph::empty(n)?;
        if n >= 3 {
            for u in 0..n {
                g.add_edge(u, (u + 1) % n)?;
            }
        }
        Ok(g)
    }

    /// The path 0 - 1 - ... - (n-1).
    pub fn path(n: usize) -> Result<Self> {
        let mut g = Graph::empty(n)?;
        for u in 1..n {
            g.add_edge(u - 1, u)?;
        }
        Ok(g)
    }

    /// The `k`-clique on `0..k` plus `n - k` isolated vertices.
    pub fn clique_plus_isolated(n: usize, k: usize) -> Result<Self> {
        let mut g = Graph::empty(n)?;
        for u in 0..k.min(n) {
            for v in u + 1..k.min(n) {
                g.add_edge(u, v)?;
            }
        }
        Ok(g)
    }

    /// Edge `{i, j}` present iff bit `index` of `code` is set, with pairs
    /// enumerated as `(0,1), (0,2), ..., (1,2), ...`.
    pub fn from_code(n: usize, code: u64) -> Result<Self> {
        let mut g = Graph::empty(n)?;
        let mut index = 0;
        for u in 0..n {
            for v in u + 1..n {
                if code >> index & 1 == 1 {
                    g.add_edge(u, v)?;
                }
                index += 1;
            }
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    fn mask(&self) -> u32 {
        if self.len() == 32 {
            u32::MAX
        } else {
            (1u32 << self.len()) - 1
        }
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        let n = self.len();
        if u >= n || v >= n {
            return Err(Error::invalid(format!(
                "edge ({u}, {v}) out of range for {n} vertices"
            )));
        }
        if u == v {
            return Err(Error::invalid(format!("self-loop at vertex {u}")));
        }
        self.adj[u] |= 1 << v;
        self.adj[v] |= 1 << u;
        Ok(())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u] >> v & 1 == 1
    }

    pub fn neighbors(&self, u: usize) -> u32 {
        self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].count_ones() as usize
    }

    pub fn edge_count(&self) -> usize {
        self.adj
            .iter()
            .map(|a| a.count_ones() as usize)
            .sum::<usize>()
            / 2
    }

    /// Edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|u| bits(self.adj[u] >> u >> 1).map(move |d| (u, u + 1 + d)))
            .collect()
    }

    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        vertices.iter().enumerate().all(|(i, &u)| {
            vertices[i + 1..]
                .iter()
                .all(|&v| u != v && u < self.len() && v < self.len() && self.has_edge(u, v))
        })
    }
}

/// Disjoint sets with union by size and path halving.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true if `a` and `b` were in different sets.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.components -= 1;
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    pub fn component_count(&self) -> usize {
        self.components
    }

    pub fn component_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_shapes() {
        assert_eq!(Graph::cycle(5).unwrap().edge_count(), 5);
        assert_eq!(Graph::path(3).unwrap().edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(Graph::complete(4).unwrap().edge_count(), 6);
        let g = Graph::clique_plus_isolated(5, 3).unwrap();
        assert!(g.is_clique(&[0, 1, 2]));
        assert!(!g.is_clique(&[0, 3]));
        assert_eq!(
            Graph::from_code(3, 0b101).unwrap().edges(),
            vec![(0, 1), (1, 2)]
        );
    }

    #[test]
    fn json_round_trip() {
        let g = Graph::from_edges(4, &[(2, 1), (0, 3)]).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        assert_eq!(text, r#"{"n":4,"edges":[[0,3],[1,2]]}"#);
        assert_eq!(serde_json::from_str::<Graph>(&text).unwrap(), g);
        assert!(serde_json::from_str::<Graph>(r#"{"n":2,"edges":[[0,2]]}"#).is_err());
        assert!(serde_json::from_str::<Graph>(r#"{"n":2,"edges":[[1,1]]}"#).is_err());
    }

    #[test]
    fn union_find_counts_components() {
        let mut uf = UnionFind::new(5);
        assert!(uf.union(0, 1));
        assert!(uf.union(3, 4));
        assert!(!uf.union(1, 0));
        assert!(uf.union(1, 4));
        assert_eq!(uf.component_count(), 2);
        assert!(uf.same(0, 3));
        assert!(!uf.same(0, 2));
        assert_eq!(uf.component_size(4), 4);
    }
}
