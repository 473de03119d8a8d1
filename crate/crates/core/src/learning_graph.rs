//! Explicit learning graphs for triangle detection at small `n`.
//!
//! [`build_triangle_lg`] materializes the seven-level construction: the root,
//! then complete bipartite graphs between disjoint sets `A1, A2` of growing size,
//! then an extra vertex `v` with edges into `A2` and finally one edge into `A1`.
//! A label's slot set `S` is the set of vertex pairs it has queried. Per-input
//! flows ([`triangle_flow`]) are stored sparsely and checked exactly.
//!
//! Ground-set elements are `1..=n`; `n` is limited to 16 so labels fit in
//! bitmasks.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fmt::Write as _;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::LearningGraphError;
use crate::rational::Rational;

pub const MAX_VERTICES: u128 = 1_000_000;
pub const MAX_N: usize = 16;
pub const MIN_SAMPLES: usize = 10_000;
pub const DEFAULT_SEED: u64 = 2013;

type Result<T> = std::result::Result<T, LearningGraphError>;

/// Bit index of the pair `{a, b}` of 0-based elements.
fn pair_bit(n: usize, a: usize, b: usize) -> u32 {
    let (a, b) = (a.min(b), a.max(b));
    (a * (2 * n - a - 1) / 2 + (b - a - 1)) as u32
}

fn bits(mask: u16) -> impl Iterator<Item = usize> {
    (0..16).filter(move |&i| mask >> i & 1 == 1)
}

/// All `size`-subsets of `universe`, in increasing numeric order.
fn subsets(universe: u16, size: usize) -> Vec<u16> {
    let elems: Vec<usize> = bits(universe).collect();
    let mut out = Vec::new();
    let mut pick = Vec::with_capacity(size);
    fn rec(elems: &[usize], start: usize, size: usize, pick: &mut Vec<usize>, out: &mut Vec<u16>) {
        if pick.len() == size {
            out.push(pick.iter().fold(0u16, |m, &i| m | 1 << i));
            return;
        }
        for i in start..elems.len() {
            pick.push(elems[i]);
            rec(elems, i + 1, size, pick, out);
            pick.pop();
        }
    }
    rec(&elems, 0, size, &mut pick, &mut out);
    out.sort_unstable();
    out
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn fmt_set(f: &mut impl fmt::Write, mask: u16) -> fmt::Result {
    write!(f, "{{")?;
    for (n, i) in bits(mask).enumerate() {
        if n > 0 {
            write!(f, ",")?;
        }
        write!(f, "{}", i + 1)?;
    }
    write!(f, "}}")
}

/// Label of an L-vertex. Bit `i` of a mask stands for element `i + 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LgLabel {
    pub a1: u16,
    pub a2: u16,
    /// The extra vertex, 0-based.
    pub v: Option<u8>,
    /// Neighbors of `v`, a subset of `a1 | a2`.
    pub v_edges: u16,
}

impl LgLabel {
    pub fn is_valid(&self, n: usize) -> bool {
        let full = if n >= 16 { u16::MAX } else { (1u16 << n) - 1 };
        let sets_ok = self.a1 & self.a2 == 0 && (self.a1 | self.a2) & !full == 0;
        let v_ok = match self.v {
            None => self.v_edges == 0,
            Some(v) => {
                (v as usize) < n && (self.a1 | self.a2) >> v & 1 == 0 && self.v_edges & !(self.a1 | self.a2) == 0
            }
        };
        sets_ok && v_ok
    }

    pub fn slots(&self, n: usize) -> u128 {
        let mut s = 0u128;
        for a in bits(self.a1) {
            for b in bits(self.a2) {
                s |= 1 << pair_bit(n, a, b);
            }
        }
        if let Some(v) = self.v {
            for u in bits(self.v_edges) {
                s |= 1 << pair_bit(n, v as usize, u);
            }
        }
        s
    }

    /// Image under `perm`, where `perm[i]` is the 0-based image of element `i`.
    pub fn permuted(&self, perm: &[usize]) -> LgLabel {
        let map = |m: u16| bits(m).fold(0u16, |acc, i| acc | 1 << perm[i]);
        LgLabel {
            a1: map(self.a1),
            a2: map(self.a2),
            v: self.v.map(|v| perm[v as usize] as u8),
            v_edges: map(self.v_edges),
        }
    }
}

impl fmt::Display for LgLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A1=")?;
        fmt_set(f, self.a1)?;
        write!(f, " A2=")?;
        fmt_set(f, self.a2)?;
        match self.v {
            None => write!(f, " v=-"),
            Some(v) => {
                write!(f, " v={} N(v)=", v + 1)?;
                fmt_set(f, self.v_edges)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LgVertex {
    pub level: usize,
    pub label: LgLabel,
    pub slots: u128,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LgEdge {
    pub from: usize,
    pub to: usize,
    pub weight: Rational,
    /// `|S(to) \ S(from)|`.
    pub length: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TriangleParams {
    pub n: usize,
    pub r1: usize,
    pub r2: usize,
    pub lambda: usize,
}

impl TriangleParams {
    pub fn validate(&self) -> Result<()> {
        let TriangleParams { n, r1, r2, lambda } = *self;
        let bad = |m: String| Err(LearningGraphError::Parameters(m));
        if r1 == 0 || r1 >= r2 {
            return bad(format!("need 1 <= r1 < r2, got r1={r1}, r2={r2}"));
        }
        if r2 % r1 != 0 {
            return bad(format!("r2/r1 = {r2}/{r1} is not an integer"));
        }
        if lambda == 0 || lambda >= r2 {
            return bad(format!("need 1 <= lambda <= r2-1, got {lambda}"));
        }
        if n < r1 + r2 + 3 {
            return bad(format!("need n >= r1+r2+3, got n={n}"));
        }
        if n > MAX_N {
            return bad(format!("n={n} exceeds {MAX_N}"));
        }
        Ok(())
    }

    /// Sizes of levels 1 through 7.
    pub fn level_sizes(&self) -> [u128; 7] {
        let TriangleParams { n, r1, r2, lambda } = *self;
        let v4 = binomial(n, r1) * binomial(n - r1, r2);
        let free = (n - r1 - r2) as u128;
        let v6 = v4 * free * binomial(r2, lambda + 1);
        [
            1,
            binomial(n, r1 - 1) * binomial(n - r1 + 1, r2 - 1),
            binomial(n, r1) * binomial(n - r1, r2 - 1),
            v4,
            v4 * free * binomial(r2, lambda),
            v6,
            v6 * r1 as u128,
        ]
    }
}

/// A leveled learning graph. Vertices are stored level by level and edges
/// grouped by source vertex, so every level and every stage is a contiguous range.
#[derive(Clone, Debug)]
pub struct LGraph {
    n: usize,
    params: Option<TriangleParams>,
    vertices: Vec<LgVertex>,
    edges: Vec<LgEdge>,
    level_start: Vec<usize>,
    out_start: Vec<usize>,
    index: HashMap<(usize, LgLabel), usize>,
}

impl LGraph {
    /// Builds a graph from explicit parts. Vertex 0 must be the root (level 1,
    /// empty label); levels must be nondecreasing and edges must go from level `i` to `i + 1`.
    pub fn from_parts(n: usize, vertices: Vec<(usize, LgLabel)>, edges: Vec<(usize, usize)>) -> Result<LGraph> {
        let bad = |m: String| Err(LearningGraphError::Parameters(m));
        if n > MAX_N {
            return bad(format!("n={n} exceeds {MAX_N}"));
        }
        if vertices.first() != Some(&(1, LgLabel::default())) {
            return bad("vertex 0 must be the root with an empty label at level 1".into());
        }
        let mut level_start = vec![0, 0];
        let mut index = HashMap::with_capacity(vertices.len());
        let mut vs = Vec::with_capacity(vertices.len());
        for (id, &(level, label)) in vertices.iter().enumerate() {
            let last = level_start.len() - 1;
            if level < last || level > last + 1 {
                return bad(format!("vertex {id} at level {level} breaks the level order"));
            }
            if level == last + 1 {
                level_start.push(id);
            }
            if !label.is_valid(n) {
                return bad(format!("vertex {id} has an invalid label {label}"));
            }
            if index.insert((level, label), id).is_some() {
                return bad(format!("duplicate label {label} at level {level}"));
            }
            vs.push(LgVertex { level, label, slots: label.slots(n) });
        }
        level_start.push(vs.len());
        let mut es: Vec<LgEdge> = Vec::with_capacity(edges.len());
        for &(from, to) in &edges {
            if from >= vs.len() || to >= vs.len() {
                return bad(format!("edge ({from},{to}) has an unknown endpoint"));
            }
            let (u, w) = (&vs[from], &vs[to]);
            if w.level != u.level + 1 {
                return bad(format!("edge ({from},{to}) does not join consecutive levels"));
            }
            if u.slots & !w.slots != 0 {
                return bad(format!("edge ({from},{to}) loses slots"));
            }
            es.push(LgEdge { from, to, weight: Rational::one(), length: (w.slots & !u.slots).count_ones() });
        }
        es.sort_by_key(|e| (e.from, e.to));
        let mut out_start = vec![0; vs.len() + 1];
        for e in &es {
            out_start[e.from + 1] += 1;
        }
        for i in 0..vs.len() {
            out_start[i + 1] += out_start[i];
        }
        Ok(LGraph { n, params: None, vertices: vs, edges: es, level_start, out_start, index })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> Option<TriangleParams> {
        self.params
    }

    pub fn vertices(&self) -> &[LgVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[LgEdge] {
        &self.edges
    }

    pub fn num_levels(&self) -> usize {
        self.level_start.len() - 2
    }

    /// Vertex ids of a level (1-based); empty past the last level.
    pub fn level(&self, level: usize) -> Range<usize> {
        if level == 0 || level > self.num_levels() {
            return self.vertices.len()..self.vertices.len();
        }
        self.level_start[level]..self.level_start[level + 1]
    }

    pub fn out_edges(&self, vertex: usize) -> Range<usize> {
        self.out_start[vertex]..self.out_start[vertex + 1]
    }

    /// Edge ids leaving the given level.
    pub fn stage_edges(&self, stage: usize) -> Range<usize> {
        let lv = self.level(stage);
        self.out_start[lv.start]..self.out_start[lv.end]
    }

    pub fn vertex_id(&self, level: usize, label: &LgLabel) -> Option<usize> {
        self.index.get(&(level, *label)).copied()
    }

    pub fn edge_between(&self, from: usize, to: usize) -> Option<usize> {
        self.out_edges(from).find(|&e| self.edges[e].to == to)
    }

    pub fn set_weight(&mut self, edge: usize, weight: Rational) {
        self.edges[edge].weight = weight;
    }

    pub fn describe_vertex(&self, id: usize) -> String {
        let v = &self.vertices[id];
        format!("vertex {id} (level {}, {})", v.level, v.label)
    }

    fn fmt_slots(&self, out: &mut String, slots: u128) {
        let mut first = true;
        out.push('[');
        for a in 0..self.n {
            for b in a + 1..self.n {
                if slots >> pair_bit(self.n, a, b) & 1 == 1 {
                    if !first {
                        out.push(',');
                    }
                    first = false;
                    let _ = write!(out, "{{{},{}}}", a + 1, b + 1);
                }
            }
        }
        out.push(']');
    }

    /// Text dump of the given levels: `v id level label S=[...]` lines, then
    /// `e from to length` lines for edges leaving those levels.
    pub fn dump_levels(&self, levels: Range<usize>) -> String {
        let mut out = String::new();
        match self.params {
            Some(p) => {
                let _ = writeln!(out, "# n={} r1={} r2={} lambda={}", p.n, p.r1, p.r2, p.lambda);
            }
            None => {
                let _ = writeln!(out, "# n={}", self.n);
            }
        }
        for level in levels.clone() {
            for id in self.level(level) {
                let v = &self.vertices[id];
                let _ = write!(out, "v {id} {} {} S=", v.level, v.label);
                self.fmt_slots(&mut out, v.slots);
                out.push('\n');
            }
        }
        for level in levels {
            for e in &self.edges[self.stage_edges(level)] {
                let _ = writeln!(out, "e {} {} {}", e.from, e.to, e.length);
            }
        }
        out
    }

    pub fn dump(&self) -> String {
        self.dump_levels(1..self.num_levels() + 1)
    }
}

fn children(p: &TriangleParams, full: u16, level: usize, l: &LgLabel) -> Vec<LgLabel> {
    let free = full & !(l.a1 | l.a2);
    match level {
        2 => bits(free).map(|x| LgLabel { a1: l.a1 | 1 << x, ..*l }).collect(),
        3 => bits(free).map(|x| LgLabel { a2: l.a2 | 1 << x, ..*l }).collect(),
        4 => {
            let nb = subsets(l.a2, p.lambda);
            bits(free).flat_map(|v| nb.iter().map(move |&s| LgLabel { v: Some(v as u8), v_edges: s, ..*l })).collect()
        }
        5 => bits(l.a2 & !l.v_edges).map(|x| LgLabel { v_edges: l.v_edges | 1 << x, ..*l }).collect(),
        6 => bits(l.a1).map(|x| LgLabel { v_edges: l.v_edges | 1 << x, ..*l }).collect(),
        _ => Vec::new(),
    }
}

/// Materializes the triangle learning graph with all weights 1.
pub fn build_triangle_lg(n: usize, r1: usize, r2: usize, lambda: usize) -> Result<LGraph> {
    let p = TriangleParams { n, r1, r2, lambda };
    p.validate()?;
    let sizes = p.level_sizes();
    let count: u128 = sizes.iter().sum();
    if count > MAX_VERTICES {
        return Err(LearningGraphError::TooLarge { count, limit: MAX_VERTICES });
    }
    let full: u16 = ((1u32 << n) - 1) as u16;
    let mut labels: Vec<Vec<LgLabel>> = vec![vec![LgLabel::default()]];
    for (r1_, r2_) in [(r1 - 1, r2 - 1), (r1, r2 - 1), (r1, r2)] {
        let mut level = Vec::new();
        for a1 in subsets(full, r1_) {
            for a2 in subsets(full & !a1, r2_) {
                level.push(LgLabel { a1, a2, v: None, v_edges: 0 });
            }
        }
        labels.push(level);
    }
    let v4 = labels[3].clone();
    let mut l5 = Vec::new();
    let mut l6 = Vec::new();
    for l in &v4 {
        for v in bits(full & !(l.a1 | l.a2)) {
            for s in subsets(l.a2, lambda) {
                l5.push(LgLabel { v: Some(v as u8), v_edges: s, ..*l });
            }
            for s in subsets(l.a2, lambda + 1) {
                l6.push(LgLabel { v: Some(v as u8), v_edges: s, ..*l });
            }
        }
    }
    let l7: Vec<LgLabel> =
        l6.iter().flat_map(|l| bits(l.a1).map(move |x| LgLabel { v_edges: l.v_edges | 1 << x, ..*l })).collect();
    labels.extend([l5, l6, l7]);
    for (t, level) in labels.iter().enumerate() {
        debug_assert_eq!(level.len() as u128, sizes[t]);
    }

    let mut vertices = Vec::with_capacity(count as usize);
    let mut index = HashMap::with_capacity(count as usize);
    let mut level_start = vec![0];
    for (t, level) in labels.iter().enumerate() {
        level_start.push(vertices.len());
        for &label in level {
            index.insert((t + 1, label), vertices.len());
            vertices.push(LgVertex { level: t + 1, label, slots: label.slots(n) });
        }
    }
    level_start.push(vertices.len());

    let mut edges = Vec::new();
    let mut out_start = Vec::with_capacity(vertices.len() + 1);
    for u in 0..vertices.len() {
        out_start.push(edges.len());
        let (level, label, slots) = (vertices[u].level, vertices[u].label, vertices[u].slots);
        let kids: Vec<usize> = if level == 1 {
            labels[1].iter().map(|l| index[&(2, *l)]).collect()
        } else {
            children(&p, full, level, &label).iter().map(|l| index[&(level + 1, *l)]).collect()
        };
        for w in kids {
            let ws = vertices[w].slots;
            debug_assert_eq!(slots & !ws, 0);
            edges.push(LgEdge { from: u, to: w, weight: Rational::one(), length: (ws & !slots).count_ones() });
        }
    }
    out_start.push(edges.len());
    Ok(LGraph { n, params: Some(p), vertices, edges, level_start, out_start, index })
}

/// A flow for one positive input, stored on flow-carrying edges only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flow {
    /// Slots every sink must contain.
    pub certificate: u128,
    values: BTreeMap<usize, Rational>,
}

impl Flow {
    pub fn new(certificate: u128) -> Flow {
        Flow { certificate, values: BTreeMap::new() }
    }

    pub fn get(&self, edge: usize) -> Rational {
        self.values.get(&edge).cloned().unwrap_or_default()
    }

    /// Sets an edge value; zero removes the edge from the support.
    pub fn set(&mut self, edge: usize, value: Rational) {
        if value.is_zero() {
            self.values.remove(&edge);
        } else {
            self.values.insert(edge, value);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Rational)> {
        self.values.iter().map(|(&e, v)| (e, v))
    }

    pub fn support_size(&self) -> usize {
        self.values.len()
    }

    /// Net inflow per vertex touched by the flow.
    pub fn inflows(&self, g: &LGraph) -> BTreeMap<usize, Rational> {
        let mut m: BTreeMap<usize, Rational> = BTreeMap::new();
        for (e, v) in self.iter() {
            *m.entry(g.edges[e].to).or_default() += v;
        }
        m
    }

    /// The same flow moved along a relabeling of the ground set. `perm[i]` is
    /// the 0-based image of element `i`; `g` must be closed under relabeling.
    pub fn relabel(&self, g: &LGraph, perm: &[usize]) -> Option<Flow> {
        let mut cert = 0u128;
        for a in 0..g.n {
            for b in a + 1..g.n {
                if self.certificate >> pair_bit(g.n, a, b) & 1 == 1 {
                    cert |= 1 << pair_bit(g.n, perm[a], perm[b]);
                }
            }
        }
        let image = |id: usize| {
            let v = &g.vertices[id];
            g.vertex_id(v.level, &v.label.permuted(perm))
        };
        let mut out = Flow::new(cert);
        for (e, val) in self.iter() {
            let edge = &g.edges[e];
            let ne = g.edge_between(image(edge.from)?, image(edge.to)?)?;
            out.set(ne, val.clone());
        }
        Some(out)
    }
}

/// Certificate slots of the triangle on 1-based `t`.
pub fn triangle_slots(n: usize, t: (usize, usize, usize)) -> u128 {
    let (a, b, c) = (t.0 - 1, t.1 - 1, t.2 - 1);
    1 << pair_bit(n, a, b) | 1 << pair_bit(n, b, c) | 1 << pair_bit(n, a, c)
}

/// The flow for the triangle `(a1, a2, a3)` (1-based): each stage spreads the
/// incoming flow uniformly over all continuations consistent with the triangle.
pub fn triangle_flow(g: &LGraph, triangle: (usize, usize, usize)) -> Result<Flow> {
    let n = g.n;
    let (a1, a2, a3) = triangle;
    if [a1, a2, a3].iter().any(|&a| a == 0 || a > n) {
        return Err(LearningGraphError::Triangle(format!("vertices must lie in 1..={n}")));
    }
    if a1 == a2 || a2 == a3 || a1 == a3 {
        return Err(LearningGraphError::Triangle(format!("vertices {a1},{a2},{a3} are not distinct")));
    }
    if g.params.is_none() {
        return Err(LearningGraphError::Parameters("not a triangle learning graph".into()));
    }
    let (b1, b2, b3) = (1u16 << (a1 - 1), 1u16 << (a2 - 1), 1u16 << (a3 - 1));
    let keep = |stage: usize, l: &LgLabel| match stage {
        1 => (l.a1 | l.a2) & (b1 | b2 | b3) == 0,
        2 => l.a1 & b1 != 0,
        3 => l.a2 & b2 != 0,
        4 => l.v == Some((a3 - 1) as u8) && l.v_edges & b2 == 0,
        5 => l.v_edges & b2 != 0,
        _ => l.v_edges & b1 != 0,
    };
    let mut flow = Flow::new(triangle_slots(n, triangle));
    let mut current: BTreeMap<usize, Rational> = BTreeMap::from([(0, Rational::one())]);
    for stage in 1..=6 {
        let mut next: BTreeMap<usize, Rational> = BTreeMap::new();
        for (u, amount) in current {
            let chosen: Vec<usize> =
                g.out_edges(u).filter(|&e| keep(stage, &g.vertices[g.edges[e].to].label)).collect();
            if chosen.is_empty() {
                return Err(LearningGraphError::Triangle(format!(
                    "no continuation at stage {stage} from {}",
                    g.describe_vertex(u)
                )));
            }
            let share = &amount / &Rational::from(chosen.len());
            for e in chosen {
                *next.entry(g.edges[e].to).or_default() += &share;
                flow.set(e, share.clone());
            }
        }
        current = next;
    }
    Ok(flow)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FlowViolation {
    UnknownEdge(usize),
    Negative { edge: usize, value: Rational },
    Source { total: Rational },
    Conservation { vertex: usize, name: String, inflow: Rational, outflow: Rational },
    Certificate { vertex: usize, name: String },
}

impl fmt::Display for FlowViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowViolation::UnknownEdge(e) => write!(f, "flow on unknown edge {e}"),
            FlowViolation::Negative { edge, value } => write!(f, "negative flow {value} on edge {edge}"),
            FlowViolation::Source { total } => write!(f, "flow out of the root is {total}, not 1"),
            FlowViolation::Conservation { name, inflow, outflow, .. } => {
                write!(f, "conservation fails at {name}: in {inflow}, out {outflow}")
            }
            FlowViolation::Certificate { name, .. } => write!(f, "sink {name} misses a certificate slot"),
        }
    }
}

impl std::error::Error for FlowViolation {}

/// Checks nonnegativity, a unit source, exact conservation at interior
/// vertices and certificate containment at every sink reached by the flow.
#[allow(clippy::result_large_err)]
pub fn verify_flow(g: &LGraph, f: &Flow) -> std::result::Result<(), FlowViolation> {
    for (e, v) in f.iter() {
        if e >= g.edges.len() {
            return Err(FlowViolation::UnknownEdge(e));
        }
        if v.is_negative() {
            return Err(FlowViolation::Negative { edge: e, value: v.clone() });
        }
    }
    let mut inflow: BTreeMap<usize, Rational> = BTreeMap::new();
    let mut outflow: BTreeMap<usize, Rational> = BTreeMap::new();
    for (e, v) in f.iter() {
        *inflow.entry(g.edges[e].to).or_default() += v;
        *outflow.entry(g.edges[e].from).or_default() += v;
    }
    let total = outflow.get(&0).cloned().unwrap_or_default();
    if total != Rational::one() {
        return Err(FlowViolation::Source { total });
    }
    let touched: BTreeSet<usize> = inflow.keys().chain(outflow.keys()).copied().filter(|&v| v != 0).collect();
    for v in touched {
        let is_sink = g.out_edges(v).is_empty();
        let i = inflow.get(&v).cloned().unwrap_or_default();
        if is_sink {
            if g.vertices[v].slots & f.certificate != f.certificate {
                return Err(FlowViolation::Certificate { vertex: v, name: g.describe_vertex(v) });
            }
            continue;
        }
        let o = outflow.get(&v).cloned().unwrap_or_default();
        if i != o {
            return Err(FlowViolation::Conservation { vertex: v, name: g.describe_vertex(v), inflow: i, outflow: o });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageComplexity {
    pub c0: Rational,
    pub c1: Rational,
    pub c_squared: Rational,
    /// `sqrt(c_squared)` in double precision.
    pub c: f64,
}

/// `C0 = sum l(e) w(e)` and `C1 = sum l(e) p(e)^2 / w(e)` over the edges leaving `stage`.
pub fn stage_complexity(g: &LGraph, f: &Flow, stage: usize) -> Result<StageComplexity> {
    let range = g.stage_edges(stage);
    if range.is_empty() {
        return Err(LearningGraphError::EmptyStage(stage..stage + 1));
    }
    let mut c0 = Rational::zero();
    for e in &g.edges[range.clone()] {
        if e.length > 0 {
            c0 += &e.weight * &Rational::from(e.length as i64);
        }
    }
    let mut c1 = Rational::zero();
    for (id, p) in f.values.range(range) {
        let e = &g.edges[*id];
        if e.length > 0 {
            c1 += &(&(p * p) * &Rational::from(e.length as i64)) / &e.weight;
        }
    }
    let c_squared = &c0 * &c1;
    let c = c_squared.to_f64().sqrt();
    Ok(StageComplexity { c0, c1, c_squared, c })
}

/// Per-stage complexities and their sum, which bounds the complexity of the whole graph.
pub fn graph_complexity(g: &LGraph, f: &Flow) -> Result<(Vec<StageComplexity>, f64)> {
    let stages = (1..g.num_levels())
        .filter(|&t| !g.stage_edges(t).is_empty())
        .map(|t| stage_complexity(g, f, t))
        .collect::<Result<Vec<_>>>()?;
    let total = stages.iter().map(|s| s.c).sum();
    Ok((stages, total))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LemmaCheck {
    /// `C^2 = l^2 d |V| / (g |W|)` holds exactly.
    Equal {
        ell: u32,
        d: usize,
        v: usize,
        g: usize,
        w: usize,
        c_squared: Rational,
    },
    Mismatch {
        predicted: Rational,
        actual: Rational,
    },
    /// The stage does not satisfy the lemma's hypotheses.
    Hypothesis(String),
}

/// Checks the closed form for a stage with unit weights, uniform degree `d`,
/// uniform length `l`, and flow spread evenly over `g` out-edges of each of `|W|` vertices.
pub fn lemma_simple_cost_check(g: &LGraph, f: &Flow, stage: usize) -> Result<LemmaCheck> {
    let range = g.stage_edges(stage);
    if range.is_empty() {
        return Err(LearningGraphError::EmptyStage(stage..stage + 1));
    }
    let hyp = |m: String| Ok(LemmaCheck::Hypothesis(m));
    let ell = g.edges[range.start].length;
    for (id, e) in g.edges[range.clone()].iter().enumerate() {
        if e.weight != Rational::one() {
            return hyp(format!("edge {} has weight {}", range.start + id, e.weight));
        }
        if e.length != ell {
            return hyp(format!("edge {} has length {} instead of {ell}", range.start + id, e.length));
        }
    }
    let sources = g.level(stage);
    let d = g.out_edges(sources.start).len();
    if let Some(u) = sources.clone().find(|&u| g.out_edges(u).len() != d) {
        return hyp(format!("{} has degree {} instead of {d}", g.describe_vertex(u), g.out_edges(u).len()));
    }
    let mut per_source: BTreeMap<usize, usize> = BTreeMap::new();
    let mut flow_edges = 0usize;
    for (id, _) in f.values.range(range.clone()) {
        *per_source.entry(g.edges[*id].from).or_default() += 1;
        flow_edges += 1;
    }
    let w = per_source.len();
    let Some(&fanout) = per_source.values().next() else {
        return hyp("no flow through the stage".into());
    };
    if let Some((u, k)) = per_source.iter().find(|(_, &k)| k != fanout) {
        return hyp(format!("{} sends flow along {k} edges instead of {fanout}", g.describe_vertex(*u)));
    }
    let share = Rational::from(flow_edges).recip();
    if let Some((id, p)) = f.values.range(range).find(|(_, p)| **p != share) {
        return hyp(format!("edge {id} carries {p} instead of {share}"));
    }
    let actual = stage_complexity(g, f, stage)?.c_squared;
    let ell_r = Rational::from(ell as i64);
    let predicted = &(&(&ell_r * &ell_r) * &Rational::from(d * sources.len())) / &Rational::from(fanout * w);
    if predicted == actual {
        Ok(LemmaCheck::Equal { ell, d, v: sources.len(), g: fanout, w, c_squared: actual })
    } else {
        Ok(LemmaCheck::Mismatch { predicted, actual })
    }
}

/// Probability that a fixed pair `(y1, y2)` is an edge of a uniformly random
/// copy of a bipartite graph with `l` left vertices of degree `d` and `g` right
/// vertices of degree `l d / g`, computed by enumerating every copy.
pub fn uniform_edge_probability(l: usize, g: usize, d: usize) -> Result<Rational> {
    if l == 0 || g == 0 || d > g || !(l * d).is_multiple_of(g) || l * g > 64 {
        return Err(LearningGraphError::NoSuchType { l, g, d });
    }
    let bit = |i: usize, j: usize| 1u64 << (i * g + j);
    // circulant representative: left i joins right (i*d + j) mod g
    let mut k = 0u64;
    for i in 0..l {
        for j in 0..d {
            k |= bit(i, (i * d + j) % g);
        }
    }
    let mut copies: BTreeSet<u64> = BTreeSet::new();
    crate::graph::for_each_permutation(l, |pl| {
        crate::graph::for_each_permutation(g, |pg| {
            let mut img = 0u64;
            for i in 0..l {
                for j in 0..g {
                    if k & bit(i, j) != 0 {
                        img |= bit(pl[i], pg[j]);
                    }
                }
            }
            copies.insert(img);
        });
    });
    let containing = copies.iter().filter(|&&c| c & bit(0, 0) != 0).count();
    // every copy has l*d edges and each of the l*g pairs lies in the same number of copies
    debug_assert!((0..l).all(|i| (0..g).all(|j| copies.iter().filter(|&&c| c & bit(i, j) != 0).count() == containing)));
    debug_assert_eq!(copies.len() * l * d, containing * l * g);
    Ok(Rational::new(containing as i64, copies.len() as i64))
}

#[derive(Clone, Debug, PartialEq)]
pub struct VertexRatio {
    pub level: usize,
    pub vertex: usize,
    /// Fraction of the level carrying flow; the level is one orbit under relabeling.
    pub exact: Rational,
    pub estimate: f64,
    pub std_error: f64,
    /// Product of `r_j / n` over loaded vertices and `d / max(r_u, r_v)` over loaded edges.
    pub bound: Rational,
    pub samples: usize,
}

impl VertexRatio {
    pub fn within_three_se(&self) -> bool {
        (self.estimate - self.exact.to_f64()).abs() <= 3.0 * self.std_error + 1e-12
    }

    pub fn above_bound(&self) -> bool {
        self.estimate >= self.bound.to_f64() / 16.0
    }
}

/// Lower bound on the flow-carrying fraction of a level, from the loaded vertices and edges.
pub fn vertex_ratio_bound(p: &TriangleParams, level: usize) -> Rational {
    let (n, r1, r2, lambda) = (p.n as i64, p.r1 as i64, p.r2 as i64, p.lambda as i64);
    let factors = [
        Rational::one(),
        Rational::one(),
        Rational::new(r1, n),
        Rational::new(r2, n),
        Rational::new(1, n),
        Rational::new(lambda, r2),
        Rational::new(1, r1),
    ];
    factors.iter().take(level.min(7)).fold(Rational::one(), |acc, f| &acc * f)
}

/// Monte Carlo estimate of `Pr[sigma(P) carries flow]` for the first vertex `P`
/// of a level, over uniformly random relabelings `sigma` of the ground set.
pub fn vertex_ratio_estimate(g: &LGraph, f: &Flow, level: usize, samples: usize, seed: u64) -> Result<VertexRatio> {
    let Some(params) = g.params else {
        return Err(LearningGraphError::Parameters("not a triangle learning graph".into()));
    };
    if samples < MIN_SAMPLES {
        return Err(LearningGraphError::Parameters(format!("need at least {MIN_SAMPLES} samples")));
    }
    let ids = g.level(level);
    if ids.is_empty() {
        return Err(LearningGraphError::EmptyStage(level..level + 1));
    }
    let inflow = f.inflows(g);
    let carries = |id: usize| id == 0 || inflow.get(&id).is_some_and(|v| v.is_positive());
    let carrying = ids.clone().filter(|&id| carries(id)).count();
    let exact = Rational::new(carrying as i64, ids.len() as i64);
    let p = g.vertices[ids.start].clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..g.n).collect();
    let mut hits = 0usize;
    for _ in 0..samples {
        perm.shuffle(&mut rng);
        let id = g.vertex_id(level, &p.label.permuted(&perm)).expect("levels are closed under relabeling");
        if carries(id) {
            hits += 1;
        }
    }
    let estimate = hits as f64 / samples as f64;
    let pe = exact.to_f64();
    Ok(VertexRatio {
        level,
        vertex: ids.start,
        exact,
        estimate,
        std_error: (pe * (1.0 - pe) / samples as f64).sqrt(),
        bound: vertex_ratio_bound(&params, level),
        samples,
    })
}
