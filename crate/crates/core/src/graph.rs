//! Certificate graphs and the structural reductions between them.
//!
//! Vertices are the dense labels `1..=k`. A [`CertGraph`] is directed and may
//! carry self-loops; an [`UndirectedGraph`] is simple. Isolated vertices are
//! part of the graph in both cases.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GraphError;

/// Largest vertex count accepted by [`canonical_form`]-style exhaustive searches.
pub const MAX_CANONICAL_K: usize = 8;

/// A directed graph, self-loops allowed, describing the index set of a 1-certificate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CertGraph {
    k: usize,
    edges: BTreeSet<(usize, usize)>,
}

/// A simple undirected graph; edges are stored as `(i, j)` with `i < j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UndirectedGraph {
    k: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl CertGraph {
    pub fn new(k: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            for v in [i, j] {
                if v == 0 || v > k {
                    return Err(GraphError::VertexOutOfRange { vertex: v, k });
                }
            }
            if !set.insert((i, j)) {
                return Err(GraphError::DuplicateEdge(i, j));
            }
        }
        Ok(CertGraph { k, edges: set })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i, j))
    }

    /// Every undirected edge stored in both directions.
    pub fn bidirected(u: &UndirectedGraph) -> Self {
        CertGraph { k: u.k, edges: u.edges.iter().flat_map(|&(i, j)| [(i, j), (j, i)]).collect() }
    }

    /// Applies a relabeling `perm[i-1] = new label of i`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        CertGraph { k: self.k, edges: self.edges.iter().map(|&(i, j)| (perm[i - 1], perm[j - 1])).collect() }
    }

    pub fn is_subgraph_of(&self, other: &CertGraph) -> Result<bool, GraphError> {
        if self.k != other.k {
            return Err(GraphError::VertexCountMismatch(self.k, other.k));
        }
        Ok(self.edges.is_subset(&other.edges))
    }
}

impl UndirectedGraph {
    /// Builds a simple graph; each pair may be given in either orientation but only once.
    pub fn new(k: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            for v in [i, j] {
                if v == 0 || v > k {
                    return Err(GraphError::VertexOutOfRange { vertex: v, k });
                }
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            if !set.insert((i.min(j), i.max(j))) {
                return Err(GraphError::DuplicateEdge(i, j));
            }
        }
        Ok(UndirectedGraph { k, edges: set })
    }

    pub fn empty(k: usize) -> Self {
        UndirectedGraph { k, edges: BTreeSet::new() }
    }

    pub fn complete(k: usize) -> Self {
        let edges = (1..=k).flat_map(|i| (i + 1..=k).map(move |j| (i, j))).collect();
        UndirectedGraph { k, edges }
    }

    pub fn path(k: usize) -> Self {
        UndirectedGraph { k, edges: (1..k).map(|i| (i, i + 1)).collect() }
    }

    pub fn cycle(k: usize) -> Self {
        let mut g = Self::path(k);
        if k >= 3 {
            g.edges.insert((1, k));
        }
        g
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(i, j)| {
                if i == v {
                    Some(j)
                } else if j == v {
                    Some(i)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(i, j)| i == v || j == v).count()
    }

    pub fn is_connected(&self) -> bool {
        if self.k == 0 {
            return true;
        }
        let mut seen = vec![false; self.k + 1];
        let mut stack = vec![1];
        seen[1] = true;
        while let Some(v) = stack.pop() {
            for w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen[1..].iter().all(|&s| s)
    }

    pub fn relabel(&self, perm: &[usize]) -> Self {
        UndirectedGraph {
            k: self.k,
            edges: self
                .edges
                .iter()
                .map(|&(i, j)| {
                    let (a, b) = (perm[i - 1], perm[j - 1]);
                    (a.min(b), a.max(b))
                })
                .collect(),
        }
    }

    pub fn is_subgraph_of(&self, other: &UndirectedGraph) -> Result<bool, GraphError> {
        if self.k != other.k {
            return Err(GraphError::VertexCountMismatch(self.k, other.k));
        }
        Ok(self.edges.is_subset(&other.edges))
    }

    /// Graph with the given edge subset (labels unchanged).
    pub fn with_edges(&self, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        UndirectedGraph::new(self.k, edges)
    }
}

/// `U(H)`: drop self-loops, forget orientation, merge antiparallel pairs.
pub fn undirected_version(h: &CertGraph) -> UndirectedGraph {
    UndirectedGraph {
        k: h.k,
        edges: h.edges.iter().filter(|(i, j)| i != j).map(|&(i, j)| (i.min(j), i.max(j))).collect(),
    }
}

/// Vertex contraction: vertex `i` is sent to `assignment[i-1]`.
///
/// The assignment must map onto `1..=k'` for some `k' <= k`. Merged endpoints
/// of an edge become a self-loop.
pub fn contract(h: &CertGraph, assignment: &[usize]) -> Result<CertGraph, GraphError> {
    if assignment.len() != h.k {
        return Err(GraphError::BadAssignment(format!(
            "assignment has {} entries for {} vertices",
            assignment.len(),
            h.k
        )));
    }
    let target = assignment.iter().copied().max().unwrap_or(0);
    let mut hit = vec![false; target + 1];
    for &z in assignment {
        if z == 0 {
            return Err(GraphError::BadAssignment("label 0 is out of range".into()));
        }
        hit[z] = true;
    }
    if let Some(missing) = (1..=target).find(|&z| !hit[z]) {
        return Err(GraphError::BadAssignment(format!("label {missing} is never hit")));
    }
    Ok(CertGraph { k: target, edges: h.edges.iter().map(|&(i, j)| (assignment[i - 1], assignment[j - 1])).collect() })
}

/// Key identifying a graph up to isomorphism.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey {
    pub k: usize,
    pub directed: bool,
    pub edges: Vec<(usize, usize)>,
}

/// Calls `f` on every permutation of `0..n` (Heap's algorithm).
pub(crate) fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            f(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

fn minimal_relabeling(k: usize, edges: &[(usize, usize)], directed: bool) -> Vec<(usize, usize)> {
    let mut best: Option<Vec<(usize, usize)>> = None;
    let mut buf = Vec::with_capacity(edges.len());
    for_each_permutation(k, |p| {
        buf.clear();
        buf.extend(edges.iter().map(|&(i, j)| {
            let (a, b) = (p[i - 1] + 1, p[j - 1] + 1);
            if directed {
                (a, b)
            } else {
                (a.min(b), a.max(b))
            }
        }));
        buf.sort_unstable();
        if best.as_ref().is_none_or(|b| buf < *b) {
            best = Some(buf.clone());
        }
    });
    best.unwrap_or_default()
}

pub trait Canonical {
    /// Isomorphism-invariant key, computed by trying all `k!` relabelings.
    fn canonical_form(&self) -> Result<CanonicalKey, GraphError>;
}

impl Canonical for CertGraph {
    fn canonical_form(&self) -> Result<CanonicalKey, GraphError> {
        if self.k > MAX_CANONICAL_K {
            return Err(GraphError::TooLarge { k: self.k, max: MAX_CANONICAL_K });
        }
        let edges: Vec<_> = self.edges().collect();
        Ok(CanonicalKey { k: self.k, directed: true, edges: minimal_relabeling(self.k, &edges, true) })
    }
}

impl Canonical for UndirectedGraph {
    fn canonical_form(&self) -> Result<CanonicalKey, GraphError> {
        if self.k > MAX_CANONICAL_K {
            return Err(GraphError::TooLarge { k: self.k, max: MAX_CANONICAL_K });
        }
        let edges: Vec<_> = self.edges().collect();
        Ok(CanonicalKey { k: self.k, directed: false, edges: minimal_relabeling(self.k, &edges, false) })
    }
}

/// True if `small` is isomorphic to a subgraph of `big` (injective vertex map,
/// edges preserved; `small` may have fewer vertices).
pub fn embeds_into(small: &UndirectedGraph, big: &UndirectedGraph) -> bool {
    if small.k > big.k || small.edge_count() > big.edge_count() {
        return false;
    }
    let mut map = vec![0usize; small.k + 1];
    let mut used = vec![false; big.k + 1];
    fn go(v: usize, small: &UndirectedGraph, big: &UndirectedGraph, map: &mut [usize], used: &mut [bool]) -> bool {
        if v > small.k {
            return true;
        }
        for w in 1..=big.k {
            if used[w] {
                continue;
            }
            let ok = small.neighbors(v).into_iter().filter(|&u| u < v).all(|u| big.has_edge(map[u], w));
            if ok {
                map[v] = w;
                used[w] = true;
                if go(v + 1, small, big, map, used) {
                    return true;
                }
                used[w] = false;
            }
        }
        false
    }
    go(1, small, big, &mut map, &mut used)
}

/// All set partitions of `1..=k`, as restricted-growth assignments onto `1..=k'`.
pub fn surjective_assignments(k: usize) -> Vec<Vec<usize>> {
    fn go(i: usize, k: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == k {
            out.push(cur.clone());
            return;
        }
        for z in 1..=max + 1 {
            cur.push(z);
            go(i + 1, k, max.max(z), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Every vertex contraction of `h`, one per set partition of its vertices.
pub fn all_contractions(h: &CertGraph) -> Vec<CertGraph> {
    surjective_assignments(h.k)
        .into_iter()
        .map(|z| contract(h, &z).expect("restricted-growth strings are surjective"))
        .collect()
}

impl fmt::Display for CertGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={} edges=[", self.k)?;
        for (n, (i, j)) in self.edges.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({i},{j})")?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for UndirectedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={} edges=[", self.k)?;
        for (n, (i, j)) in self.edges.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{{{i},{j}}}")?;
        }
        write!(f, "]")
    }
}

/// On-disk graph document: `{"k": 3, "edges": [[1,2],[2,3]], "directed": false}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct GraphFile {
    pub k: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub directed: bool,
}

/// A graph read from a [`GraphFile`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnyGraph {
    Directed(CertGraph),
    Undirected(UndirectedGraph),
}

impl AnyGraph {
    /// The graph handed to the cost framework: `U(H)` for directed input.
    pub fn to_undirected(&self) -> UndirectedGraph {
        match self {
            AnyGraph::Directed(h) => undirected_version(h),
            AnyGraph::Undirected(u) => u.clone(),
        }
    }
}

impl GraphFile {
    pub fn parse(text: &str) -> Result<AnyGraph, GraphError> {
        let doc: GraphFile = serde_json::from_str(text).map_err(|e| GraphError::Format(e.to_string()))?;
        doc.into_graph()
    }

    pub fn into_graph(self) -> Result<AnyGraph, GraphError> {
        let pairs = self.edges.iter().map(|e| (e[0], e[1]));
        if self.directed {
            Ok(AnyGraph::Directed(CertGraph::new(self.k, pairs)?))
        } else {
            for e in &self.edges {
                if e[0] >= e[1] {
                    return Err(GraphError::Format(format!(
                        "undirected edge [{}, {}] must be written with i < j",
                        e[0], e[1]
                    )));
                }
            }
            Ok(AnyGraph::Undirected(UndirectedGraph::new(self.k, pairs)?))
        }
    }

    pub fn from_undirected(u: &UndirectedGraph) -> Self {
        GraphFile { k: u.k, edges: u.edges().map(|(i, j)| [i, j]).collect(), directed: false }
    }

    pub fn from_directed(h: &CertGraph) -> Self {
        GraphFile { k: h.k, edges: h.edges().map(|(i, j)| [i, j]).collect(), directed: true }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assoc() -> CertGraph {
        CertGraph::new(5, [(2, 1), (2, 3), (3, 4), (5, 4)]).unwrap()
    }

    #[test]
    fn undirected_version_of_assoc_graph_is_a_path() {
        let u = undirected_version(&assoc());
        assert_eq!(u, UndirectedGraph::new(5, [(1, 2), (2, 3), (3, 4), (4, 5)]).unwrap());
    }

    #[test]
    fn undirected_version_drops_loops_and_merges_pairs() {
        let loop_only = CertGraph::new(1, [(1, 1)]).unwrap();
        assert_eq!(undirected_version(&loop_only), UndirectedGraph::empty(1));
        let pair = CertGraph::new(2, [(1, 2), (2, 1)]).unwrap();
        assert_eq!(undirected_version(&pair), UndirectedGraph::complete(2));
    }

    #[test]
    fn rejects_malformed_graphs() {
        assert!(matches!(CertGraph::new(2, [(1, 3)]), Err(GraphError::VertexOutOfRange { .. })));
        assert!(matches!(CertGraph::new(2, [(1, 2), (1, 2)]), Err(GraphError::DuplicateEdge(1, 2))));
        assert!(matches!(UndirectedGraph::new(2, [(1, 1)]), Err(GraphError::SelfLoop(1))));
        assert!(matches!(UndirectedGraph::new(2, [(1, 2), (2, 1)]), Err(GraphError::DuplicateEdge(..))));
    }

    #[test]
    fn contraction_examples() {
        // 2 and 5 merge
        let c = contract(&assoc(), &[1, 2, 3, 4, 2]).unwrap();
        assert_eq!(c, CertGraph::new(4, [(2, 1), (2, 3), (3, 4), (2, 4)]).unwrap());
        assert_eq!(contract(&assoc(), &[1, 2, 3, 4, 5]).unwrap(), assoc());
        let e = CertGraph::new(2, [(1, 2)]).unwrap();
        assert_eq!(contract(&e, &[1, 1]).unwrap(), CertGraph::new(1, [(1, 1)]).unwrap());
    }

    #[test]
    fn contraction_rejects_bad_assignments() {
        let e = CertGraph::new(2, [(1, 2)]).unwrap();
        assert!(contract(&e, &[1, 3]).is_err());
        assert!(contract(&e, &[0, 1]).is_err());
        assert!(contract(&e, &[1]).is_err());
    }

    #[test]
    fn subgraph_examples() {
        let k2 = UndirectedGraph::new(3, [(1, 2)]).unwrap();
        let k3 = UndirectedGraph::complete(3);
        assert!(k2.is_subgraph_of(&k3).unwrap());
        assert!(!k3.is_subgraph_of(&k2).unwrap());
        assert!(UndirectedGraph::path(5).is_subgraph_of(&UndirectedGraph::cycle(5)).unwrap());
        assert!(k3.is_subgraph_of(&UndirectedGraph::complete(4)).is_err());
    }

    #[test]
    fn canonical_form_examples() {
        let p1 = UndirectedGraph::new(3, [(1, 2), (2, 3)]).unwrap();
        let p2 = UndirectedGraph::new(3, [(2, 1), (1, 3)]).unwrap();
        assert_eq!(p1.canonical_form().unwrap(), p2.canonical_form().unwrap());
        assert_ne!(p1.canonical_form().unwrap(), UndirectedGraph::complete(3).canonical_form().unwrap());
        assert!(UndirectedGraph::empty(9).canonical_form().is_err());
    }

    #[test]
    fn three_vertex_graphs_have_four_classes() {
        let pairs = [(1, 2), (1, 3), (2, 3)];
        let keys: BTreeSet<_> = (0..8u32)
            .map(|mask| {
                let edges = pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &e)| e);
                UndirectedGraph::new(3, edges).unwrap().canonical_form().unwrap()
            })
            .collect();
        assert_eq!(keys.len(), 4);
    }

    #[test]
    fn four_vertex_graph_classes_match_known_count() {
        // 11 unlabeled simple graphs on 4 vertices
        let pairs: Vec<_> = UndirectedGraph::complete(4).edges().collect();
        let keys: BTreeSet<_> = (0..64u32)
            .map(|mask| {
                let edges = pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &e)| e);
                UndirectedGraph::new(4, edges).unwrap().canonical_form().unwrap()
            })
            .collect();
        assert_eq!(keys.len(), 11);
    }

    #[test]
    fn set_partitions_of_five() {
        assert_eq!(surjective_assignments(5).len(), 52);
        assert_eq!(all_contractions(&assoc()).len(), 52);
    }

    #[test]
    fn embedding_allows_fewer_vertices() {
        let p3 = UndirectedGraph::path(3);
        assert!(embeds_into(&p3, &UndirectedGraph::path(5)));
        assert!(embeds_into(&UndirectedGraph::path(2), &UndirectedGraph::complete(3)));
        assert!(!embeds_into(&UndirectedGraph::complete(3), &UndirectedGraph::path(5)));
    }

    #[test]
    fn graph_file_parsing() {
        let g = GraphFile::parse(r#"{"k":3,"edges":[[1,2],[2,3],[1,3]],"directed":false}"#).unwrap();
        assert_eq!(g.to_undirected(), UndirectedGraph::complete(3));
        let d = GraphFile::parse(r#"{"k":2,"edges":[[2,1],[1,1]],"directed":true}"#).unwrap();
        assert_eq!(d.to_undirected(), UndirectedGraph::complete(2));
        assert!(GraphFile::parse(r#"{"k":2,"edges":[[2,1]],"directed":false}"#).is_err());
        assert!(GraphFile::parse("not json").is_err());
    }

    fn arb_cert_graph() -> impl Strategy<Value = (CertGraph, Vec<usize>)> {
        (1usize..=5).prop_flat_map(|k| {
            let edges = proptest::collection::btree_set((1..=k, 1..=k), 0..=k * k);
            let perm = Just((1..=k).collect::<Vec<_>>()).prop_shuffle();
            (edges, perm).prop_map(move |(e, p)| (CertGraph::new(k, e).unwrap(), p))
        })
    }

    proptest! {
        #[test]
        fn canonical_form_is_relabeling_invariant((h, perm) in arb_cert_graph()) {
            prop_assert_eq!(h.canonical_form().unwrap(), h.relabel(&perm).canonical_form().unwrap());
            let u = undirected_version(&h);
            prop_assert_eq!(u.canonical_form().unwrap(), u.relabel(&perm).canonical_form().unwrap());
        }

        #[test]
        fn identity_contraction_is_noop((h, _p) in arb_cert_graph()) {
            let id: Vec<usize> = (1..=h.k()).collect();
            prop_assert_eq!(contract(&h, &id).unwrap(), h);
        }

        #[test]
        fn undirected_version_idempotent_on_bidirected((h, _p) in arb_cert_graph()) {
            let u = undirected_version(&h);
            prop_assert_eq!(undirected_version(&CertGraph::bidirected(&u)), u);
        }

        #[test]
        fn subgraph_is_reflexive_and_transitive((h, _p) in arb_cert_graph(), a in any::<u32>(), b in any::<u32>()) {
            let all: Vec<_> = h.edges().collect();
            let mid: Vec<_> = all.iter().enumerate().filter(|(i, _)| a >> (i % 32) & 1 == 1).map(|(_, &e)| e).collect();
            let low: Vec<_> = mid.iter().enumerate().filter(|(i, _)| b >> (i % 32) & 1 == 1).map(|(_, &e)| e).collect();
            let mid = CertGraph::new(h.k(), mid).unwrap();
            let low = CertGraph::new(h.k(), low).unwrap();
            prop_assert!(h.is_subgraph_of(&h).unwrap());
            prop_assert!(low.is_subgraph_of(&mid).unwrap() && mid.is_subgraph_of(&h).unwrap());
            prop_assert!(low.is_subgraph_of(&h).unwrap());
        }
    }
}
