//! Stage costs of a loading schedule in exponent space.
//!
//! Parameters are written as powers of the input size: `r_i = n^rho_i`,
//! `d_ij = n^delta_ij`. Every stage cost is then `n^e` for an exponent `e`
//! that is a piecewise-affine function of `(rho, delta)`; constant factors are
//! dropped and a sum of powers of `n` is represented by its largest exponent.
//!
//! A stage's exponent is `global + local`, where `global` is the sum of the
//! `contribution`s of every earlier stage:
//!
//! | stage            | contribution            | local                                   |
//! |------------------|-------------------------|-----------------------------------------|
//! | setup            | 0                       | `max_uv min(rho_u, rho_v) + delta_uv`   |
//! | vertex `i`       | `(1 - rho_i) / 2`       | `1/2 + max_j lambda_ij`                 |
//! | dense edge `ij`  | `(max rho - delta) / 2` | `max(rho_i, rho_j)`                     |
//! | sparse edge `ij` | `(max rho - delta) / 2` | `(rho_i + rho_j) / 2`                   |
//!
//! with `lambda_ij = delta_ij` when `rho_i <= rho_j` and
//! `delta_ij + rho_j - rho_i` otherwise.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::CostError;
use crate::graph::UndirectedGraph;
use crate::rational::{q, Rational};
use crate::schedule::{LoadingSchedule, ScheduleItem};

/// Exponents of the set sizes (`rho`, indexed by vertex) and degrees (`delta`, by edge `i < j`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExponentAssignment {
    pub rho: Vec<Rational>,
    pub delta: BTreeMap<(usize, usize), Rational>,
}

impl ExponentAssignment {
    pub fn new(rho: Vec<Rational>, delta: impl IntoIterator<Item = ((usize, usize), Rational)>) -> Self {
        ExponentAssignment { rho, delta: delta.into_iter().map(|((i, j), d)| ((i.min(j), i.max(j)), d)).collect() }
    }

    pub fn rho(&self, v: usize) -> &Rational {
        &self.rho[v - 1]
    }

    pub fn delta(&self, i: usize, j: usize) -> &Rational {
        &self.delta[&(i.min(j), i.max(j))]
    }

    fn covers(&self, h: &UndirectedGraph) -> Result<(), CostError> {
        if self.rho.len() < h.k() {
            return Err(CostError::Missing(format!("rho for vertex {}", self.rho.len() + 1)));
        }
        if let Some((i, j)) = h.edges().find(|e| !self.delta.contains_key(e)) {
            return Err(CostError::Missing(format!("delta for edge ({i},{j})")));
        }
        Ok(())
    }
}

impl fmt::Display for ExponentAssignment {
    /// `rho = [4/7, 5/7, 0]` and `delta = {"(1,2)": 5/7, ...}` on two lines.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rho = [")?;
        for (n, r) in self.rho.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "]\ndelta = {{")?;
        for (n, ((i, j), d)) in self.delta.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "\"({i},{j})\": {d}")?;
        }
        write!(f, "}}")
    }
}

impl FromStr for ExponentAssignment {
    type Err = CostError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: &str| CostError::Format(m.to_string());
        let mut rho = None;
        let mut delta = None;
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, value) = line.split_once('=').ok_or_else(|| bad(line))?;
            let value = value.trim();
            match key.trim() {
                "rho" => {
                    let body = value
                        .strip_prefix('[')
                        .and_then(|v| v.strip_suffix(']'))
                        .ok_or_else(|| bad("rho must be a [...] list"))?;
                    let vals = body
                        .split(',')
                        .map(str::trim)
                        .filter(|t| !t.is_empty())
                        .map(|t| t.parse::<Rational>().map_err(|e| bad(&e.to_string())))
                        .collect::<Result<Vec<_>, _>>()?;
                    rho = Some(vals);
                }
                "delta" => {
                    let body = value
                        .strip_prefix('{')
                        .and_then(|v| v.strip_suffix('}'))
                        .ok_or_else(|| bad("delta must be a {...} map"))?;
                    let mut map = BTreeMap::new();
                    let mut rest = body.trim();
                    while !rest.is_empty() {
                        let open = rest.find("\"(").ok_or_else(|| bad(rest))?;
                        let close = rest.find(")\"").ok_or_else(|| bad(rest))?;
                        let (a, b) = rest[open + 2..close].split_once(',').ok_or_else(|| bad(rest))?;
                        let i: usize = a.trim().parse().map_err(|_| bad(a))?;
                        let j: usize = b.trim().parse().map_err(|_| bad(b))?;
                        let after = rest[close + 2..].trim_start().strip_prefix(':').ok_or_else(|| bad(rest))?;
                        let (val, tail) = match after.find(',') {
                            Some(c) => (&after[..c], &after[c + 1..]),
                            None => (after, ""),
                        };
                        let d: Rational =
                            val.parse().map_err(|e: crate::rational::ParseRationalError| bad(&e.to_string()))?;
                        map.insert((i.min(j), i.max(j)), d);
                        rest = tail.trim();
                    }
                    delta = Some(map);
                }
                other => return Err(bad(&format!("unknown key `{other}`"))),
            }
        }
        Ok(ExponentAssignment { rho: rho.ok_or_else(|| bad("missing rho"))?, delta: delta.unwrap_or_default() })
    }
}

/// The two edge-loading cases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    Dense,
    Sparse,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Dense => "dense",
            Regime::Sparse => "sparse",
        })
    }
}

/// Dense iff the smaller side's edges cover the larger side: `min + delta >= max`.
pub fn classify_regime(rho_i: &Rational, rho_j: &Rational, delta: &Rational) -> Regime {
    let (lo, hi) = if rho_i <= rho_j { (rho_i, rho_j) } else { (rho_j, rho_i) };
    if lo + delta >= *hi {
        Regime::Dense
    } else {
        Regime::Sparse
    }
}

/// Checks the admissibility bounds: `0 <= rho <= 1`, `0 <= delta <= max rho`,
/// and for every non-isolated vertex a neighbor `j` with `delta_ij + rho_j >= rho_i`.
pub fn check_admissible(h: &UndirectedGraph, a: &ExponentAssignment) -> Result<(), CostError> {
    a.covers(h)?;
    let zero = Rational::zero();
    let one = Rational::one();
    for v in 1..=h.k() {
        let r = a.rho(v);
        if *r < zero || *r > one {
            return Err(CostError::Inadmissible(format!("rho_{v} = {r} is outside [0,1]")));
        }
    }
    for (i, j) in h.edges() {
        let d = a.delta(i, j);
        let hi = a.rho(i).clone().max(a.rho(j).clone());
        if *d < zero || *d > hi {
            return Err(CostError::Inadmissible(format!(
                "delta_{i}{j} = {d} is outside [0, max(rho_{i}, rho_{j}) = {hi}]"
            )));
        }
    }
    for v in 1..=h.k() {
        let nbrs = h.neighbors(v);
        if nbrs.is_empty() {
            continue;
        }
        if !nbrs.iter().any(|&j| a.delta(v, j) + a.rho(j) >= *a.rho(v)) {
            return Err(CostError::Inadmissible(format!(
                "vertex {v} has no neighbor j with delta_{v}j + rho_j >= rho_{v}"
            )));
        }
    }
    Ok(())
}

/// The factor a stage passes on to every later stage.
pub fn contribution(a: &ExponentAssignment, item: ScheduleItem) -> Rational {
    match item {
        ScheduleItem::Vertex(v) => (Rational::one() - a.rho(v)) * q(1, 2),
        ScheduleItem::Edge(i, j) => {
            let hi = a.rho(i).clone().max(a.rho(j).clone());
            (hi - a.delta(i, j)) * q(1, 2)
        }
    }
}

/// Sum of contributions of the items strictly before 1-based position `t`.
pub fn global_exponent(
    h: &UndirectedGraph,
    s: &LoadingSchedule,
    a: &ExponentAssignment,
    t: usize,
) -> Result<Rational, CostError> {
    a.covers(h)?;
    let (vs, es) = s.prefix_sets(t)?;
    let from_vertices: Rational = vs.iter().map(|&v| contribution(a, ScheduleItem::Vertex(v))).sum();
    let from_edges: Rational = es.iter().map(|&(i, j)| contribution(a, ScheduleItem::Edge(i, j))).sum();
    Ok(from_vertices + from_edges)
}

pub fn setup_exponent(h: &UndirectedGraph, a: &ExponentAssignment) -> Result<Rational, CostError> {
    a.covers(h)?;
    Ok(h.edges()
        .map(|(i, j)| a.rho(i).clone().min(a.rho(j).clone()) + a.delta(i, j))
        .max()
        .unwrap_or_else(Rational::zero))
}

/// Exponent of `d_ij` for vertices of `A_i` (i.e. the `lambda_ij` of the module docs).
pub fn degree_toward(a: &ExponentAssignment, i: usize, j: usize) -> Rational {
    if a.rho(i) <= a.rho(j) {
        a.delta(i, j).clone()
    } else {
        a.delta(i, j) + a.rho(j) - a.rho(i)
    }
}

/// Local exponent of loading vertex `i`, or `None` for an isolated vertex.
pub fn vertex_local(h: &UndirectedGraph, a: &ExponentAssignment, i: usize) -> Option<Rational> {
    let best = h.neighbors(i).into_iter().map(|j| degree_toward(a, i, j)).max()?;
    Some(q(1, 2) + best)
}

pub fn edge_local(a: &ExponentAssignment, i: usize, j: usize) -> (Regime, Rational) {
    let (ri, rj) = (a.rho(i), a.rho(j));
    match classify_regime(ri, rj, a.delta(i, j)) {
        Regime::Dense => (Regime::Dense, ri.clone().max(rj.clone())),
        Regime::Sparse => (Regime::Sparse, (ri + rj) * q(1, 2)),
    }
}

/// Cost exponent of the vertex load at position `t`; `None` when the vertex is isolated.
pub fn vertex_load_exponent(
    h: &UndirectedGraph,
    s: &LoadingSchedule,
    a: &ExponentAssignment,
    t: usize,
) -> Result<Option<Rational>, CostError> {
    match s.at(t)? {
        ScheduleItem::Vertex(i) => {
            let global = global_exponent(h, s, a, t)?;
            Ok(vertex_local(h, a, i).map(|l| global + l))
        }
        other => Err(CostError::WrongItemKind { t, expected: "a vertex", found: other.to_string() }),
    }
}

pub fn edge_load_exponent(
    h: &UndirectedGraph,
    s: &LoadingSchedule,
    a: &ExponentAssignment,
    t: usize,
) -> Result<Rational, CostError> {
    match s.at(t)? {
        ScheduleItem::Edge(i, j) => {
            let global = global_exponent(h, s, a, t)?;
            Ok(global + edge_local(a, i, j).1)
        }
        other => Err(CostError::WrongItemKind { t, expected: "an edge", found: other.to_string() }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StageKind {
    Setup,
    VertexLoad,
    EdgeLoadDense,
    EdgeLoadSparse,
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StageKind::Setup => "setup",
            StageKind::VertexLoad => "vertex-load",
            StageKind::EdgeLoadDense => "edge-load-dense",
            StageKind::EdgeLoadSparse => "edge-load-sparse",
        })
    }
}

/// One row of a stage breakdown. `global` is the accumulated prefactor from
/// earlier stages; `contribution` is what this stage adds for later ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageCost {
    /// 0 for setup, otherwise the 1-based schedule position.
    pub index: usize,
    pub kind: StageKind,
    pub item: Option<ScheduleItem>,
    pub global: Rational,
    /// `None` for a zero-length stage (isolated vertex).
    pub local: Option<Rational>,
    pub total: Option<Rational>,
    pub contribution: Rational,
}

/// Maximum stage exponent together with the full breakdown (setup first).
pub fn total_exponent(
    h: &UndirectedGraph,
    s: &LoadingSchedule,
    a: &ExponentAssignment,
) -> Result<(Rational, Vec<StageCost>), CostError> {
    if let Err(v) = s.validate(h) {
        return Err(CostError::Schedule(crate::error::ScheduleError::Invalid(v.to_string())));
    }
    check_admissible(h, a)?;
    let setup = setup_exponent(h, a)?;
    let mut stages = vec![StageCost {
        index: 0,
        kind: StageKind::Setup,
        item: None,
        global: Rational::zero(),
        local: Some(setup.clone()),
        total: Some(setup.clone()),
        contribution: Rational::zero(),
    }];
    let mut worst = setup;
    let mut global = Rational::zero();
    for (idx, &item) in s.items().iter().enumerate() {
        let (kind, local) = match item {
            ScheduleItem::Vertex(v) => (StageKind::VertexLoad, vertex_local(h, a, v)),
            ScheduleItem::Edge(i, j) => match edge_local(a, i, j) {
                (Regime::Dense, l) => (StageKind::EdgeLoadDense, Some(l)),
                (Regime::Sparse, l) => (StageKind::EdgeLoadSparse, Some(l)),
            },
        };
        let total = local.as_ref().map(|l| &global + l);
        if let Some(t) = &total {
            if *t > worst {
                worst = t.clone();
            }
        }
        let contribution = contribution(a, item);
        stages.push(StageCost {
            index: idx + 1,
            kind,
            item: Some(item),
            global: global.clone(),
            local,
            total,
            contribution: contribution.clone(),
        });
        global += contribution;
    }
    Ok((worst, stages))
}
