use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest edge count accepted; the normalizing constant enumerates all
/// `2^E` edge subsets.
pub const MAX_EDGES: usize = 16;

/// Directed acyclic dependence graph over `views` data views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphSpec", into = "GraphSpec")]
pub struct DirectionalGraph {
    views: usize,
    edges: Vec<(usize, usize)>,
    /// Per edge subset (bitmask index), the component id of every view.
    #[serde(skip)]
    components: Vec<Vec<usize>>,
    #[serde(skip)]
    component_counts: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct GraphSpec {
    views: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphSpec> for DirectionalGraph {
    type Error = Error;

    fn try_from(s: GraphSpec) -> Result<Self> {
        DirectionalGraph::new(s.views, s.edges)
    }
}

impl From<DirectionalGraph> for GraphSpec {
    fn from(g: DirectionalGraph) -> Self {
        GraphSpec {
            views: g.views,
            edges: g.edges,
        }
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

impl DirectionalGraph {
    pub fn new(views: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if views == 0 {
            return Err(Error::InvalidGraph("graph needs at least one view".into()));
        }
        if edges.len() > MAX_EDGES {
            return Err(Error::InvalidGraph(format!(
                "{} edges exceed the supported maximum of {MAX_EDGES}",
                edges.len()
            )));
        }
        for (idx, &(a, b)) in edges.iter().enumerate() {
            if a >= views || b >= views {
                return Err(Error::InvalidGraph(format!(
                    "edge {a} -> {b} references a view outside 0..{views}"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-edge on view {a}")));
            }
            if edges[..idx].contains(&(a, b)) {
                return Err(Error::InvalidGraph(format!("duplicate edge {a} -> {b}")));
            }
        }
        // Kahn's algorithm.
        let mut indegree = vec![0usize; views];
        for &(_, b) in &edges {
            indegree[b] += 1;
        }
        let mut stack: Vec<usize> = (0..views).filter(|&v| indegree[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for &(a, b) in &edges {
                if a == v {
                    indegree[b] -= 1;
                    if indegree[b] == 0 {
                        stack.push(b);
                    }
                }
            }
        }
        if seen != views {
            return Err(Error::InvalidGraph("edges form a cycle".into()));
        }

        let subsets = 1usize << edges.len();
        let mut components = Vec::with_capacity(subsets);
        let mut component_counts = Vec::with_capacity(subsets);
        for mask in 0..subsets {
            let mut parent: Vec<usize> = (0..views).collect();
            for (e, &(a, b)) in edges.iter().enumerate() {
                if mask >> e & 1 == 1 {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    parent[ra] = rb;
                }
            }
            let mut ids = vec![usize::MAX; views];
            let mut comp = vec![0; views];
            let mut count = 0;
            for v in 0..views {
                let r = find(&mut parent, v);
                if ids[r] == usize::MAX {
                    ids[r] = count;
                    count += 1;
                }
                comp[v] = ids[r];
            }
            components.push(comp);
            component_counts.push(count);
        }
        Ok(DirectionalGraph {
            views,
            edges,
            components,
            component_counts,
        })
    }

    /// A graph with no edges.
    pub fn empty(views: usize) -> Result<Self> {
        Self::new(views, Vec::new())
    }

    pub fn views(&self) -> usize {
        self.views
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_index(&self, source: usize, target: usize) -> Option<usize> {
        self.edges.iter().position(|&e| e == (source, target))
    }

    /// Edges touching `view`, with the view at the other end.
    pub fn incident(&self, view: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().enumerate().filter_map(move |(e, &(a, b))| {
            if a == view {
                Some((e, b))
            } else if b == view {
                Some((e, a))
            } else {
                None
            }
        })
    }

    /// Views with no outgoing edge.
    pub fn sinks(&self) -> Vec<usize> {
        (0..self.views)
            .filter(|&v| self.edges.iter().all(|&(a, _)| a != v))
            .collect()
    }

    /// The same views with every edge reversed.
    pub fn reversed(&self) -> Self {
        Self::new(self.views, self.edges.iter().map(|&(a, b)| (b, a)).collect())
            .expect("reversing a DAG yields a DAG")
    }

    pub(crate) fn subset_count(&self) -> usize {
        self.components.len()
    }

    pub(crate) fn subset_components(&self, mask: usize) -> (&[usize], usize) {
        (&self.components[mask], self.component_counts[mask])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_cycles_and_malformed_edges() {
        assert!(DirectionalGraph::new(2, vec![(0, 1), (1, 0)]).is_err());
        assert!(DirectionalGraph::new(3, vec![(0, 1), (1, 2), (2, 0)]).is_err());
        assert!(DirectionalGraph::new(2, vec![(0, 0)]).is_err());
        assert!(DirectionalGraph::new(2, vec![(0, 1), (0, 1)]).is_err());
        assert!(DirectionalGraph::new(2, vec![(0, 2)]).is_err());
        assert!(DirectionalGraph::new(3, vec![(0, 1), (0, 2), (1, 2)]).is_ok());
    }

    #[test]
    fn subset_components() {
        let g = DirectionalGraph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.subset_count(), 4);
        assert_eq!(g.subset_components(0).1, 3);
        let (comp, n) = g.subset_components(0b01);
        assert_eq!(n, 2);
        assert_eq!(comp[0], comp[1]);
        assert_ne!(comp[0], comp[2]);
        assert_eq!(g.subset_components(0b11).1, 1);
        assert_eq!(g.sinks(), vec![2]);
        assert_eq!(g.reversed().sinks(), vec![0]);
    }

    #[test]
    fn serde_validates() {
        let g: DirectionalGraph = serde_json::from_str(r#"{"views":2,"edges":[[0,1]]}"#).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        assert!(serde_json::from_str::<DirectionalGraph>(r#"{"views":2,"edges":[[0,1],[1,0]]}"#).is_err());
    }
}
