//! Certificates for concrete inputs: subgraph containment and non-associativity.
//!
//! An input is an `n x n` table of colors; table indices are 0-based. A
//! partial assignment fixes some entries, and its certificate graph has an arc
//! `i -> j` for every fixed entry `(i, j)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::CertificateError;
use crate::graph::{CertGraph, UndirectedGraph};

type Result<T> = std::result::Result<T, CertificateError>;

pub const MAX_SUBGRAPH_N: usize = 8;
pub const MAX_ASSOCIATIVITY_N: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColoredInput {
    n: usize,
    q: u32,
    table: Vec<u32>,
}

impl ColoredInput {
    pub fn new(q: u32, rows: Vec<Vec<u32>>) -> Result<ColoredInput> {
        let n = rows.len();
        let mut table = Vec::with_capacity(n * n);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(CertificateError::Shape { n });
            }
            for (col, &value) in r.iter().enumerate() {
                if value >= q {
                    return Err(CertificateError::EntryOutOfRange { row, col, value, q });
                }
                table.push(value);
            }
        }
        Ok(ColoredInput { n, q, table })
    }

    /// An operation table on `0..n`: colors are elements, so `q = n`.
    pub fn operation(rows: Vec<Vec<u32>>) -> Result<ColoredInput> {
        let q = rows.len() as u32;
        ColoredInput::new(q, rows)
    }

    pub fn from_fn(n: usize, q: u32, f: impl Fn(usize, usize) -> u32) -> Result<ColoredInput> {
        ColoredInput::new(q, (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect())
    }

    /// Parses `n` on the first line, then `n` rows of `n` integers. Colors must
    /// lie in `0..q`, with `q = n` unless given.
    pub fn parse(text: &str, q: Option<u32>) -> Result<ColoredInput> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let n: usize = lines
            .next()
            .ok_or_else(|| CertificateError::Format("empty input".into()))?
            .parse()
            .map_err(|_| CertificateError::Format("first line must be n".into()))?;
        let mut rows = Vec::with_capacity(n);
        for line in lines {
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<u32>().map_err(|_| CertificateError::Format(format!("bad entry `{t}`"))))
                .collect::<Result<Vec<u32>>>()?;
            rows.push(row);
        }
        if rows.len() != n {
            return Err(CertificateError::Shape { n });
        }
        ColoredInput::new(q.unwrap_or(n as u32), rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.table[i * self.n + j]
    }

    /// Same table with one entry replaced.
    pub fn with_entry(&self, i: usize, j: usize, value: u32) -> Result<ColoredInput> {
        if value >= self.q {
            return Err(CertificateError::EntryOutOfRange { row: i, col: j, value, q: self.q });
        }
        let mut t = self.clone();
        t.table[i * self.n + j] = value;
        Ok(t)
    }
}

impl fmt::Display for ColoredInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Fixed entries of a table; everything else is unknown.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialAssignment {
    pub n: usize,
    pub entries: BTreeMap<(usize, usize), u32>,
}

impl PartialAssignment {
    pub fn new(n: usize) -> PartialAssignment {
        PartialAssignment { n, entries: BTreeMap::new() }
    }

    /// Restriction of `x` to the given positions.
    pub fn restrict(x: &ColoredInput, positions: impl IntoIterator<Item = (usize, usize)>) -> PartialAssignment {
        let entries = positions.into_iter().map(|(i, j)| ((i, j), x.get(i, j))).collect();
        PartialAssignment { n: x.n, entries }
    }

    pub fn get(&self, i: usize, j: usize) -> Option<u32> {
        self.entries.get(&(i, j)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn without(&self, key: (usize, usize)) -> PartialAssignment {
        let mut p = self.clone();
        p.entries.remove(&key);
        p
    }

    pub fn agrees_with(&self, x: &ColoredInput) -> bool {
        self.n == x.n && self.entries.iter().all(|(&(i, j), &c)| i < x.n && j < x.n && x.get(i, j) == c)
    }
}

impl fmt::Display for PartialAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, ((i, j), c)) in self.entries.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({i},{j})={c}")?;
        }
        write!(f, "}}")
    }
}

/// Lexicographically first map `a` (0-based images of vertices `1..=k`) with
/// `present(a_i, a_j)` for every arc `(i, j)` of `h`.
fn first_embedding(
    n: usize,
    h: &CertGraph,
    distinct: bool,
    present: impl Fn(usize, usize) -> bool,
) -> Option<Vec<usize>> {
    let mut found = None;
    all_embeddings_until(n, h, distinct, &present, &mut |a| {
        found = Some(a.to_vec());
        false
    });
    found
}

/// Calls `visit` on embeddings in lexicographic order while it returns true.
fn all_embeddings_until(
    n: usize,
    h: &CertGraph,
    distinct: bool,
    present: &impl Fn(usize, usize) -> bool,
    visit: &mut impl FnMut(&[usize]) -> bool,
) {
    let k = h.k();
    // arcs checked when their later endpoint is placed
    let mut checks: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
    for (i, j) in h.edges() {
        checks[i.max(j) - 1].push((i - 1, j - 1));
    }
    fn rec(
        pos: usize,
        n: usize,
        distinct: bool,
        checks: &[Vec<(usize, usize)>],
        a: &mut Vec<usize>,
        present: &impl Fn(usize, usize) -> bool,
        visit: &mut impl FnMut(&[usize]) -> bool,
    ) -> bool {
        if pos == checks.len() {
            return visit(a);
        }
        for x in 0..n {
            if distinct && a.contains(&x) {
                continue;
            }
            a.push(x);
            let ok = checks[pos].iter().all(|&(i, j)| present(a[i], a[j]));
            if ok && !rec(pos + 1, n, distinct, checks, a, present, visit) {
                return false;
            }
            a.pop();
        }
        true
    }
    let mut a = Vec::with_capacity(k);
    rec(0, n, distinct, &checks, &mut a, present, visit);
}

/// Backtracking search for an injective map of `h` into the arcs of `x`
/// (nonzero entries). Returns 0-based table indices.
pub fn find_subgraph_embedding(x: &ColoredInput, h: &CertGraph) -> Option<Vec<usize>> {
    first_embedding(x.n, h, true, |i, j| x.get(i, j) != 0)
}

/// Undirected version: the pair `{i, j}` is read from entry `(min, max)`.
pub fn find_undirected_embedding(x: &ColoredInput, h: &UndirectedGraph) -> Option<Vec<usize>> {
    let arcs = CertGraph::new(h.k(), h.edges()).expect("simple graph");
    first_embedding(x.n, &arcs, true, |i, j| x.get(i.min(j), i.max(j)) != 0)
}

/// Like [`find_subgraph_embedding`] but vertices of `h` may share an image.
pub fn find_homomorphism(x: &ColoredInput, h: &CertGraph) -> Option<Vec<usize>> {
    first_embedding(x.n, h, false, |i, j| x.get(i, j) != 0)
}

/// First triple `(a, b, c)` in lexicographic order with `a(bc) != (ab)c`, or
/// `None` if the operation is associative.
pub fn check_associativity(x: &ColoredInput) -> Result<Option<(usize, usize, usize)>> {
    let n = x.n;
    if x.q as usize != n {
        return Err(CertificateError::Format(format!("an operation table on {n} elements needs q = {n}")));
    }
    for a in 0..n {
        for b in 0..n {
            let ab = x.get(a, b) as usize;
            for c in 0..n {
                let bc = x.get(b, c) as usize;
                if x.get(a, bc) != x.get(ab, c) {
                    return Ok(Some((a, b, c)));
                }
            }
        }
    }
    Ok(None)
}

/// The five elements `(a1, a2, a3, a4, a5)` behind the witness `(a2, a3, a4)`:
/// `a1 = a3 a4` and `a5 = a2 a3`.
pub fn witness_elements(x: &ColoredInput, witness: (usize, usize, usize)) -> [usize; 5] {
    let (a2, a3, a4) = witness;
    [x.get(a3, a4) as usize, a2, a3, a4, x.get(a2, a3) as usize]
}

/// The four products read by the witness: `a3 a4`, `a2 a1`, `a2 a3`, `a5 a4`.
pub fn associativity_certificate(x: &ColoredInput, witness: (usize, usize, usize)) -> PartialAssignment {
    let [a1, a2, a3, a4, a5] = witness_elements(x, witness);
    PartialAssignment::restrict(x, [(a3, a4), (a2, a1), (a2, a3), (a5, a4)])
}

/// Certificate graph on the touched indices, relabeled `1..=k` in increasing
/// index order; `mapping[v - 1]` is the original index of vertex `v`.
pub fn certificate_graph_of(alpha: &PartialAssignment) -> Result<(CertGraph, Vec<usize>)> {
    if alpha.is_empty() {
        return Err(CertificateError::EmptyAssignment);
    }
    let touched: BTreeSet<usize> = alpha.entries.keys().flat_map(|&(i, j)| [i, j]).collect();
    let mapping: Vec<usize> = touched.into_iter().collect();
    let label = |i: usize| mapping.binary_search(&i).expect("touched") + 1;
    let arcs: Vec<(usize, usize)> = alpha.entries.keys().map(|&(i, j)| (label(i), label(j))).collect();
    let g = CertGraph::new(mapping.len(), arcs).expect("entries are distinct");
    Ok((g, mapping))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Problem {
    /// Does the input contain `h`? Pairs are read from the upper triangle.
    Subgraph(UndirectedGraph),
    /// Directed containment, arcs as nonzero entries.
    DirectedSubgraph(CertGraph),
    Associativity,
}

/// True if `alpha` alone forces the answer 1. For subgraphs the unknown
/// entries are taken absent; for associativity some triple must have all four
/// of its products fixed by `alpha` and disagree.
pub fn certifies(problem: &Problem, alpha: &PartialAssignment) -> bool {
    match problem {
        Problem::Subgraph(h) => {
            let arcs = CertGraph::new(h.k(), h.edges()).expect("simple graph");
            let present = |i: usize, j: usize| alpha.get(i.min(j), i.max(j)).is_some_and(|c| c != 0);
            first_embedding(alpha.n, &arcs, true, present).is_some()
        }
        Problem::DirectedSubgraph(h) => {
            first_embedding(alpha.n, h, true, |i, j| alpha.get(i, j).is_some_and(|c| c != 0)).is_some()
        }
        Problem::Associativity => {
            for (&(b, c), &bc) in &alpha.entries {
                for (&(a, b2), &ab) in &alpha.entries {
                    if b2 != b {
                        continue;
                    }
                    let left = alpha.get(a, bc as usize);
                    let right = alpha.get(ab as usize, c);
                    if let (Some(l), Some(r)) = (left, right) {
                        if l != r {
                            return true;
                        }
                    }
                }
            }
            false
        }
    }
}

/// `alpha` certifies and no single-entry restriction does.
pub fn is_minimal(problem: &Problem, alpha: &PartialAssignment) -> bool {
    certifies(problem, alpha) && alpha.entries.keys().all(|&k| !certifies(problem, &alpha.without(k)))
}

/// Natural certificates of every witness that pass the minimality check,
/// deduplicated and sorted. A 0-input gives an empty list.
pub fn minimal_certificates(x: &ColoredInput, problem: &Problem) -> Result<Vec<PartialAssignment>> {
    let mut found: BTreeSet<PartialAssignment> = BTreeSet::new();
    match problem {
        Problem::Subgraph(_) | Problem::DirectedSubgraph(_) => {
            if x.n > MAX_SUBGRAPH_N {
                return Err(CertificateError::TooLarge(format!("n = {} > {MAX_SUBGRAPH_N}", x.n)));
            }
            let (arcs, undirected) = match problem {
                Problem::Subgraph(h) => (CertGraph::new(h.k(), h.edges()).expect("simple graph"), true),
                Problem::DirectedSubgraph(h) => (h.clone(), false),
                Problem::Associativity => unreachable!(),
            };
            let slot = |i: usize, j: usize| if undirected { (i.min(j), i.max(j)) } else { (i, j) };
            let present = |i: usize, j: usize| {
                let (a, b) = slot(i, j);
                x.get(a, b) != 0
            };
            all_embeddings_until(x.n, &arcs, true, &present, &mut |a| {
                found.insert(PartialAssignment::restrict(x, arcs.edges().map(|(i, j)| slot(a[i - 1], a[j - 1]))));
                true
            });
        }
        Problem::Associativity => {
            if x.n > MAX_ASSOCIATIVITY_N {
                return Err(CertificateError::TooLarge(format!("n = {} > {MAX_ASSOCIATIVITY_N}", x.n)));
            }
            check_associativity(x)?;
            let n = x.n;
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let ab = x.get(a, b) as usize;
                        let bc = x.get(b, c) as usize;
                        if x.get(a, bc) != x.get(ab, c) {
                            found.insert(associativity_certificate(x, (a, b, c)));
                        }
                    }
                }
            }
        }
    }
    Ok(found.into_iter().filter(|alpha| is_minimal(problem, alpha)).collect())
}
