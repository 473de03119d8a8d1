//! Loading schedules: orderings of the vertices and edges of a graph in which
//! every edge comes after both of its endpoints.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::ScheduleError;
use crate::graph::{for_each_permutation, UndirectedGraph};

/// Default bound on `k + m` for exhaustive schedule enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 12;

/// One schedule step. Edges are normalized to `i < j`.
///
/// Vertices order before edges, so sorting a set of items puts all vertex loads first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScheduleItem {
    Vertex(usize),
    Edge(usize, usize),
}

impl ScheduleItem {
    pub fn edge(i: usize, j: usize) -> Self {
        ScheduleItem::Edge(i.min(j), i.max(j))
    }
}

impl fmt::Display for ScheduleItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleItem::Vertex(v) => write!(f, "{v}"),
            ScheduleItem::Edge(i, j) => write!(f, "e({i},{j})"),
        }
    }
}

/// Loaded vertices and loaded edges.
pub type PrefixSets = (BTreeSet<usize>, BTreeSet<(usize, usize)>);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LoadingSchedule {
    items: Vec<ScheduleItem>,
}

/// First position (1-based) at which a schedule breaks the rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub position: usize,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "position {}: {}", self.position, self.reason)
    }
}

impl LoadingSchedule {
    pub fn new(items: Vec<ScheduleItem>) -> Self {
        LoadingSchedule { items }
    }

    pub fn items(&self) -> &[ScheduleItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// The item at 1-based position `t`.
    pub fn at(&self, t: usize) -> Result<ScheduleItem, ScheduleError> {
        self.check_position(t)?;
        Ok(self.items[t - 1])
    }

    fn check_position(&self, t: usize) -> Result<(), ScheduleError> {
        if t == 0 || t > self.items.len() {
            return Err(ScheduleError::PositionOutOfRange { t, len: self.items.len() });
        }
        Ok(())
    }

    /// Checks the schedule against `h`; `Err` names the first bad position.
    pub fn validate(&self, h: &UndirectedGraph) -> Result<(), Violation> {
        let mut loaded_v = vec![false; h.k() + 1];
        let mut loaded_e = BTreeSet::new();
        for (idx, item) in self.items.iter().enumerate() {
            let position = idx + 1;
            let bad = |reason: String| Err(Violation { position, reason });
            match *item {
                ScheduleItem::Vertex(v) => {
                    if v == 0 || v > h.k() {
                        return bad(format!("vertex {v} is not in the graph"));
                    }
                    if loaded_v[v] {
                        return bad(format!("vertex {v} loaded twice"));
                    }
                    loaded_v[v] = true;
                }
                ScheduleItem::Edge(i, j) => {
                    if !h.has_edge(i, j) {
                        return bad(format!("{{{i},{j}}} is not an edge of the graph"));
                    }
                    if !loaded_v[i] || !loaded_v[j] {
                        return bad(format!("edge {{{i},{j}}} loaded before its endpoints"));
                    }
                    if !loaded_e.insert((i, j)) {
                        return bad(format!("edge {{{i},{j}}} loaded twice"));
                    }
                }
            }
        }
        let end = self.items.len() + 1;
        if let Some(v) = (1..=h.k()).find(|&v| !loaded_v[v]) {
            return Err(Violation { position: end, reason: format!("vertex {v} never loaded") });
        }
        if let Some((i, j)) = h.edges().find(|e| !loaded_e.contains(e)) {
            return Err(Violation { position: end, reason: format!("edge {{{i},{j}}} never loaded") });
        }
        Ok(())
    }

    /// `(VS_t, ES_t)`: vertices and edges strictly before 1-based position `t`.
    pub fn prefix_sets(&self, t: usize) -> Result<PrefixSets, ScheduleError> {
        self.check_position(t)?;
        let mut vs = BTreeSet::new();
        let mut es = BTreeSet::new();
        for item in &self.items[..t - 1] {
            match *item {
                ScheduleItem::Vertex(v) => {
                    vs.insert(v);
                }
                ScheduleItem::Edge(i, j) => {
                    es.insert((i, j));
                }
            }
        }
        Ok((vs, es))
    }

    /// Applies a vertex relabeling `perm[i-1]`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        LoadingSchedule {
            items: self
                .items
                .iter()
                .map(|it| match *it {
                    ScheduleItem::Vertex(v) => ScheduleItem::Vertex(perm[v - 1]),
                    ScheduleItem::Edge(i, j) => ScheduleItem::edge(perm[i - 1], perm[j - 1]),
                })
                .collect(),
        }
    }
}

impl fmt::Display for LoadingSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, item) in self.items.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{item}")?;
        }
        Ok(())
    }
}

impl FromStr for LoadingSchedule {
    type Err = ScheduleError;

    /// Parses `1,2,e(1,2),3,e(2,3),e(1,3)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut items = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            let (tok, tail) = if rest.starts_with('e') || rest.starts_with('E') {
                let close = rest.find(')').ok_or_else(|| ScheduleError::Parse(rest.to_string()))?;
                (&rest[..=close], &rest[close + 1..])
            } else {
                match rest.find(',') {
                    Some(c) => (&rest[..c], &rest[c..]),
                    None => (rest, ""),
                }
            };
            items.push(parse_item(tok.trim())?);
            rest = tail.trim_start();
            if let Some(t) = rest.strip_prefix(',') {
                rest = t.trim_start();
                if rest.is_empty() {
                    return Err(ScheduleError::Parse("trailing comma".into()));
                }
            } else if !rest.is_empty() {
                return Err(ScheduleError::Parse(rest.to_string()));
            }
        }
        Ok(LoadingSchedule { items })
    }
}

fn parse_item(tok: &str) -> Result<ScheduleItem, ScheduleError> {
    let err = || ScheduleError::Parse(tok.to_string());
    if let Some(body) = tok.strip_prefix("e(").or_else(|| tok.strip_prefix("E(")) {
        let body = body.strip_suffix(')').ok_or_else(err)?;
        let (a, b) = body.split_once(',').ok_or_else(err)?;
        let i: usize = a.trim().parse().map_err(|_| err())?;
        let j: usize = b.trim().parse().map_err(|_| err())?;
        if i == j {
            return Err(err());
        }
        Ok(ScheduleItem::edge(i, j))
    } else {
        tok.parse().map(ScheduleItem::Vertex).map_err(|_| err())
    }
}

/// All items of `h` in canonical order: vertices ascending, then edges.
pub fn items_of(h: &UndirectedGraph) -> Vec<ScheduleItem> {
    (1..=h.k()).map(ScheduleItem::Vertex).chain(h.edges().map(|(i, j)| ScheduleItem::Edge(i, j))).collect()
}

/// Depth-first stream of every loading schedule of a graph, in lexicographic
/// order of item sequences.
pub struct ScheduleEnumerator {
    items: Vec<ScheduleItem>,
    /// prerequisite bitmask (over item indices) for each item
    needs: Vec<u32>,
    stack: Vec<usize>,
    used: u32,
    started: bool,
    done: bool,
}

impl ScheduleEnumerator {
    fn new(h: &UndirectedGraph, cap: usize) -> Result<Self, ScheduleError> {
        let items = items_of(h);
        if items.len() > cap || items.len() > 31 {
            return Err(ScheduleError::CapExceeded { size: items.len(), cap });
        }
        let needs = items
            .iter()
            .map(|it| match *it {
                ScheduleItem::Vertex(_) => 0,
                ScheduleItem::Edge(i, j) => (1u32 << (i - 1)) | (1u32 << (j - 1)),
            })
            .collect();
        Ok(ScheduleEnumerator { items, needs, stack: Vec::new(), used: 0, started: false, done: false })
    }

    fn available(&self, idx: usize) -> bool {
        self.used >> idx & 1 == 0 && self.needs[idx] & self.used == self.needs[idx]
    }

    /// Extends the current prefix greedily with the smallest available items.
    fn fill_from(&mut self, mut start: usize) -> bool {
        while self.stack.len() < self.items.len() {
            match (start..self.items.len()).find(|&i| self.available(i)) {
                Some(i) => {
                    self.stack.push(i);
                    self.used |= 1 << i;
                    start = 0;
                }
                None => return false,
            }
        }
        true
    }

    fn advance(&mut self) -> bool {
        // Backtrack to the deepest position that has a larger alternative.
        while let Some(last) = self.stack.pop() {
            self.used &= !(1 << last);
            if (last + 1..self.items.len()).any(|i| self.available(i)) && self.fill_from(last + 1) {
                return true;
            }
        }
        false
    }

    fn current(&self) -> LoadingSchedule {
        LoadingSchedule { items: self.stack.iter().map(|&i| self.items[i]).collect() }
    }
}

impl Iterator for ScheduleEnumerator {
    type Item = LoadingSchedule;

    fn next(&mut self) -> Option<LoadingSchedule> {
        if self.done {
            return None;
        }
        let ok = if !self.started {
            self.started = true;
            self.fill_from(0)
        } else {
            self.advance()
        };
        if ok {
            Some(self.current())
        } else {
            self.done = true;
            None
        }
    }
}

/// Every valid schedule for `h`, lazily, with the default size cap.
pub fn enumerate_schedules(h: &UndirectedGraph) -> Result<ScheduleEnumerator, ScheduleError> {
    ScheduleEnumerator::new(h, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_schedules_with_cap(h: &UndirectedGraph, cap: usize) -> Result<ScheduleEnumerator, ScheduleError> {
    ScheduleEnumerator::new(h, cap)
}

/// Label permutations mapping `h` onto itself (`perm[i-1]` is the image of `i`).
pub fn automorphisms(h: &UndirectedGraph) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for_each_permutation(h.k(), |p| {
        let perm: Vec<usize> = p.iter().map(|x| x + 1).collect();
        if h.relabel(&perm) == *h {
            out.push(perm);
        }
    });
    out
}

/// Keeps only the lexicographically smallest schedule of each automorphism orbit.
pub fn dedup_by_automorphism(h: &UndirectedGraph, schedules: Vec<LoadingSchedule>) -> Vec<LoadingSchedule> {
    let autos = automorphisms(h);
    schedules.into_iter().filter(|s| autos.iter().all(|p| s.relabel(p) >= *s)).collect()
}
