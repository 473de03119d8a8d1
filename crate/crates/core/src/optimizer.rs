//! Minimizing the worst stage exponent over admissible parameters.
//!
//! The stage exponents are maxima of affine functions once three things are
//! fixed: which endpoint of every edge has the smaller `rho`, the regime of
//! every edge, and a witness neighbor for admissibility. A [`Branch`] fixes
//! all three; inside a branch the problem `min t s.t. t >= every stage term`
//! is a linear program. The optimum over a schedule is the minimum over
//! branches, and the optimum over a graph is the minimum over schedules.
//!
//! [`optimize_graph`] does not solve one LP per (schedule, branch) pair. It
//! keeps one branch per automorphism orbit of the graph and runs a branch and
//! bound that builds schedules from the end. Placing item `z` last among the
//! remaining set `R` fixes its stage exactly, `t >= G(R - z) + local(z)`; an
//! item still in `R` is bounded by `t >= G(prerequisites) + local`, which is
//! valid because every global contribution is nonnegative on admissible
//! parameters. The `Search` docs describe the ordering constraint that prunes most
//! of the tree.

use std::collections::BTreeMap;
use std::fmt;

use crate::cost::{total_exponent, ExponentAssignment, Regime, StageCost};
use crate::error::{OptimizeError, ScheduleError};
use crate::graph::{all_contractions, embeds_into, undirected_version, CertGraph, UndirectedGraph};
use crate::lp::{solve_lp, LinearProgram, LpOutcome, WarmLp};
use crate::rational::{q, Rational};
use crate::schedule::{automorphisms, items_of, LoadingSchedule, ScheduleItem, DEFAULT_ENUMERATION_CAP};

type Edge = (usize, usize);

/// One linear piece of the cost model.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Branch {
    /// Pairs `(a, b)` meaning `rho_a <= rho_b`. Every edge must be ordered by
    /// the transitive closure of these pairs.
    pub order: Vec<(usize, usize)>,
    pub regimes: BTreeMap<Edge, Regime>,
    /// Vertex `i` to the neighbor `j` with `delta_ij + rho_j >= rho_i`.
    pub witnesses: BTreeMap<usize, usize>,
}

impl Branch {
    /// Branch whose ordering is the chain `rho_{c0} <= rho_{c1} <= ...`.
    pub fn from_chain(
        chain: &[usize],
        regimes: impl IntoIterator<Item = (Edge, Regime)>,
        witnesses: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        Branch {
            order: chain.windows(2).map(|w| (w[0], w[1])).collect(),
            regimes: regimes.into_iter().map(|((i, j), r)| ((i.min(j), i.max(j)), r)).collect(),
            witnesses: witnesses.into_iter().collect(),
        }
    }

    /// Resolves every edge to `(lo, hi, regime)` in edge order.
    fn resolve(&self, h: &UndirectedGraph) -> Result<Vec<(usize, usize, Regime)>, OptimizeError> {
        let k = h.k();
        let mut reach = vec![vec![false; k + 1]; k + 1];
        for &(a, b) in &self.order {
            if a == 0 || b == 0 || a > k || b > k {
                return Err(OptimizeError::Branch(format!("ordering mentions vertex outside 1..={k}")));
            }
            reach[a][b] = true;
        }
        for v in 1..=k {
            reach[v][v] = true;
        }
        for m in 1..=k {
            for a in 1..=k {
                if reach[a][m] {
                    for b in 1..=k {
                        if reach[m][b] {
                            reach[a][b] = true;
                        }
                    }
                }
            }
        }
        if self.regimes.len() != h.edge_count() {
            return Err(OptimizeError::Branch("regimes must cover exactly the edges".into()));
        }
        let mut out = Vec::with_capacity(h.edge_count());
        for (i, j) in h.edges() {
            let regime = *self
                .regimes
                .get(&(i, j))
                .ok_or_else(|| OptimizeError::Branch(format!("no regime for edge {{{i},{j}}}")))?;
            let (lo, hi) = if reach[i][j] {
                (i, j)
            } else if reach[j][i] {
                (j, i)
            } else {
                return Err(OptimizeError::Branch(format!("ordering does not compare rho_{i} and rho_{j}")));
            };
            out.push((lo, hi, regime));
        }
        for v in 1..=k {
            let deg = h.degree(v);
            match self.witnesses.get(&v) {
                None if deg > 0 => return Err(OptimizeError::Branch(format!("no witness for vertex {v}"))),
                Some(&j) if !h.has_edge(v, j) => {
                    return Err(OptimizeError::Branch(format!("witness {v}->{j} is not an edge")))
                }
                _ => {}
            }
        }
        if self.witnesses.keys().any(|&v| v == 0 || v > k) {
            return Err(OptimizeError::Branch("witness for a vertex outside the graph".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let order: Vec<String> = self.order.iter().map(|(a, b)| format!("rho{a} <= rho{b}")).collect();
        let regimes: Vec<String> = self.regimes.iter().map(|((i, j), r)| format!("{{{i},{j}}} {r}")).collect();
        let witnesses: Vec<String> = self.witnesses.iter().map(|(i, j)| format!("{i}->{j}")).collect();
        write!(f, "order: {}; regimes: {}; witnesses: {}", order.join(", "), regimes.join(", "), witnesses.join(", "))
    }
}

/// Every branch that can contain an admissible point, in a fixed order.
///
/// Edge orientations are enumerated instead of total orders of `rho`: an
/// orientation is all the stage formulas depend on, and every total order
/// induces one. Cyclic orientations are skipped; they only admit points
/// with equal `rho` around the cycle, which every acyclic orientation of
/// the same edges also admits. The witness of `i` is its smallest neighbor
/// `j` for which the witness inequality is implied by the branch (`i` is the
/// lower endpoint, or the edge is dense); a branch where some vertex has no
/// such neighbor is dropped, since its witness would pin a sparse edge to
/// the dense boundary, which belongs to the dense branch.
pub fn enumerate_branches(h: &UndirectedGraph) -> Vec<Branch> {
    let edges: Vec<Edge> = h.edges().collect();
    let m = edges.len();
    assert!(m < 32, "too many edges to enumerate branches");
    let mut out = Vec::new();
    for orient in 0u32..(1 << m) {
        let oriented: Vec<(usize, usize)> =
            edges.iter().enumerate().map(|(e, &(i, j))| if orient >> e & 1 == 0 { (i, j) } else { (j, i) }).collect();
        if has_cycle(h.k(), &oriented) {
            continue;
        }
        'regimes: for regime_mask in 0u32..(1 << m) {
            let regime = |e: usize| if regime_mask >> e & 1 == 0 { Regime::Dense } else { Regime::Sparse };
            let mut witnesses = BTreeMap::new();
            for v in 1..=h.k() {
                if h.degree(v) == 0 {
                    continue;
                }
                let w = h.neighbors(v).into_iter().find(|&j| {
                    let e = edges.iter().position(|&x| x == (v.min(j), v.max(j))).expect("edge");
                    oriented[e].0 == v || regime(e) == Regime::Dense
                });
                match w {
                    Some(j) => {
                        witnesses.insert(v, j);
                    }
                    None => continue 'regimes,
                }
            }
            out.push(Branch {
                order: oriented.clone(),
                regimes: edges.iter().enumerate().map(|(e, &x)| (x, regime(e))).collect(),
                witnesses,
            });
        }
    }
    out
}

fn has_cycle(k: usize, arcs: &[(usize, usize)]) -> bool {
    let mut indeg = vec![0usize; k + 1];
    for &(_, b) in arcs {
        indeg[b] += 1;
    }
    let mut stack: Vec<usize> = (1..=k).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = stack.pop() {
        seen += 1;
        for &(a, b) in arcs {
            if a == v {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    stack.push(b);
                }
            }
        }
    }
    seen < k
}

/// `coef · vars + constant`.
#[derive(Clone, Debug)]
struct Affine {
    coef: Vec<Rational>,
    constant: Rational,
}

impl Affine {
    fn zero(n: usize) -> Self {
        Affine { coef: vec![Rational::zero(); n], constant: Rational::zero() }
    }

    fn add(&self, other: &Affine) -> Affine {
        Affine {
            coef: self.coef.iter().zip(&other.coef).map(|(a, b)| a + b).collect(),
            constant: &self.constant + &other.constant,
        }
    }

    fn eval(&self, x: &[Rational]) -> Rational {
        crate::lp::dot(&self.coef, x) + &self.constant
    }
}

/// A graph and branch compiled to affine pieces over `[t, rho_1..rho_k, delta_e..]`.
struct Model {
    k: usize,
    nvars: usize,
    /// `(lo, hi, regime)` per edge, in edge order.
    edges: Vec<(usize, usize, Regime)>,
    items: Vec<ScheduleItem>,
    /// Bitmask of item indices that must precede each item.
    needs: Vec<u32>,
    contrib: Vec<Affine>,
    local: Vec<Vec<Affine>>,
    setup: Vec<Affine>,
    /// Branch constraints `form <= 0`.
    base: Vec<Affine>,
    names: Vec<String>,
}

const T: usize = 0;

impl Model {
    fn new(h: &UndirectedGraph, branch: &Branch) -> Result<Model, OptimizeError> {
        let edges = branch.resolve(h)?;
        let k = h.k();
        let m = edges.len();
        let nvars = 1 + k + m;
        let edge_list: Vec<Edge> = h.edges().collect();
        let eidx =
            |i: usize, j: usize| k + 1 + edge_list.iter().position(|&e| e == (i.min(j), i.max(j))).expect("edge");
        let unit = |pairs: &[(usize, Rational)], c: Rational| {
            let mut a = Affine::zero(nvars);
            for (v, w) in pairs {
                a.coef[*v] += w;
            }
            a.constant = c;
            a
        };
        let one = Rational::one;
        let half = || q(1, 2);
        let lo_hi = |i: usize, j: usize| {
            let e = edge_list.iter().position(|&x| x == (i.min(j), i.max(j))).expect("edge");
            (edges[e].0, edges[e].1, edges[e].2)
        };

        let items = items_of(h);
        let needs = items
            .iter()
            .map(|it| match *it {
                ScheduleItem::Vertex(_) => 0,
                ScheduleItem::Edge(i, j) => (1u32 << (i - 1)) | (1u32 << (j - 1)),
            })
            .collect();
        let mut contrib = Vec::new();
        let mut local = Vec::new();
        for &it in &items {
            match it {
                ScheduleItem::Vertex(v) => {
                    contrib.push(unit(&[(v, -half())], half()));
                    let forms = h
                        .neighbors(v)
                        .into_iter()
                        .map(|j| {
                            let (lo, _, _) = lo_hi(v, j);
                            if lo == v {
                                unit(&[(eidx(v, j), one())], half())
                            } else {
                                unit(&[(eidx(v, j), one()), (j, one()), (v, -one())], half())
                            }
                        })
                        .collect();
                    local.push(forms);
                }
                ScheduleItem::Edge(i, j) => {
                    let (_, hi, regime) = lo_hi(i, j);
                    contrib.push(unit(&[(hi, half()), (eidx(i, j), -half())], Rational::zero()));
                    let form = match regime {
                        Regime::Dense => unit(&[(hi, one())], Rational::zero()),
                        Regime::Sparse => unit(&[(i, half()), (j, half())], Rational::zero()),
                    };
                    local.push(vec![form]);
                }
            }
        }
        let setup = edge_list
            .iter()
            .map(|&(i, j)| {
                let (lo, _, _) = lo_hi(i, j);
                unit(&[(lo, one()), (eidx(i, j), one())], Rational::zero())
            })
            .collect();

        let mut base = Vec::new();
        for (&(i, j), &(lo, hi, regime)) in edge_list.iter().zip(&edges) {
            let d = eidx(i, j);
            // delta <= rho_hi
            base.push(unit(&[(d, one()), (hi, -one())], Rational::zero()));
            // rho_lo <= rho_hi
            base.push(unit(&[(lo, one()), (hi, -one())], Rational::zero()));
            match regime {
                Regime::Dense => base.push(unit(&[(hi, one()), (lo, -one()), (d, -one())], Rational::zero())),
                Regime::Sparse => base.push(unit(&[(lo, one()), (d, one()), (hi, -one())], Rational::zero())),
            }
        }
        for (&a, &b) in branch.order.iter().map(|(a, b)| (a, b)) {
            if !h.has_edge(a, b) {
                base.push(unit(&[(a, one()), (b, -one())], Rational::zero()));
            }
        }
        for (&i, &j) in &branch.witnesses {
            base.push(unit(&[(i, one()), (j, -one()), (eidx(i, j), -one())], Rational::zero()));
        }

        let mut names = vec!["t".to_string()];
        names.extend((1..=k).map(|v| format!("rho{v}")));
        names.extend(edge_list.iter().map(|(i, j)| format!("delta{i}{j}")));
        Ok(Model { k, nvars, edges, items, needs, contrib, local, setup, base, names })
    }

    fn item_index(&self, item: ScheduleItem) -> usize {
        self.items.iter().position(|&x| x == item).expect("item of the graph")
    }

    /// `t >= form` rows for a complete schedule, setup first.
    fn schedule_rows(&self, s: &LoadingSchedule) -> Vec<Affine> {
        let mut rows = self.setup.clone();
        let mut global = Affine::zero(self.nvars);
        for &item in s.items() {
            let x = self.item_index(item);
            rows.extend(self.local[x].iter().map(|l| global.add(l)));
            global = global.add(&self.contrib[x]);
        }
        rows
    }

    /// LP `min t` over the branch constraints and `t >= row` for each row.
    /// With `slack = Some(v)` it instead maximizes a common margin `eps` on
    /// every sparse inequality subject to `t <= v`.
    fn program(&self, rows: &[Affine], slack: Option<&Rational>) -> LinearProgram {
        let n = self.nvars + usize::from(slack.is_some());
        let mut names = self.names.clone();
        if slack.is_some() {
            names.push("eps".into());
        }
        let mut lp = LinearProgram::new(names);
        let widen = |a: &Affine| {
            let mut c = a.coef.clone();
            c.resize(n, Rational::zero());
            c
        };
        let mut obj = vec![Rational::zero(); n];
        match slack {
            None => obj[T] = Rational::one(),
            Some(_) => obj[n - 1] = -Rational::one(),
        }
        lp.set_objective(obj);
        for v in 1..=self.k {
            lp.set_bounds(v, Some(Rational::zero()), Some(Rational::one()));
        }
        let sparse_rows: Vec<usize> =
            self.edges.iter().enumerate().filter(|(_, e)| e.2 == Regime::Sparse).map(|(e, _)| 3 * e + 2).collect();
        for (r, b) in self.base.iter().enumerate() {
            let mut c = widen(b);
            if slack.is_some() && sparse_rows.contains(&r) {
                c[n - 1] = Rational::one();
            }
            lp.add_le(c, -b.constant.clone());
        }
        for row in rows {
            let mut c = widen(row);
            c[T] -= Rational::one();
            lp.add_le(c, -row.constant.clone());
        }
        if let Some(v) = slack {
            let mut c = vec![Rational::zero(); n];
            c[T] = Rational::one();
            lp.add_le(c, v.clone());
            lp.set_bounds(n - 1, Some(Rational::zero()), Some(Rational::one()));
        }
        lp
    }

    fn has_sparse(&self) -> bool {
        self.edges.iter().any(|e| e.2 == Regime::Sparse)
    }

    /// A point of value `v` strictly inside every sparse region, if one exists.
    fn polish(&self, rows: &[Affine], v: &Rational, x: Vec<Rational>) -> Result<Option<Vec<Rational>>, OptimizeError> {
        if !self.has_sparse() {
            return Ok(Some(x));
        }
        match solve_lp(&self.program(rows, Some(v)))? {
            LpOutcome::Optimal { mut x, .. } if x.last().is_some_and(Rational::is_positive) => {
                x.pop();
                Ok(Some(x))
            }
            _ => Ok(None),
        }
    }

    fn assignment(&self, h: &UndirectedGraph, x: &[Rational]) -> ExponentAssignment {
        ExponentAssignment::new(
            x[1..=self.k].to_vec(),
            h.edges().enumerate().map(|(e, edge)| (edge, x[self.k + 1 + e].clone())),
        )
    }
}

/// Parameters minimizing the worst stage exponent of one schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OptimizationResult {
    pub exponent: Rational,
    pub assignment: ExponentAssignment,
    pub schedule: LoadingSchedule,
    pub branch: Branch,
    pub stages: Vec<StageCost>,
}

fn validated(h: &UndirectedGraph, s: &LoadingSchedule) -> Result<(), OptimizeError> {
    s.validate(h).map_err(|v| OptimizeError::Schedule(ScheduleError::Invalid(v.to_string())))
}

/// The LP of one branch: `min t` subject to the branch's constraints and
/// `t >=` every affine stage term of `s`.
pub fn build_branch_lp(h: &UndirectedGraph, s: &LoadingSchedule, b: &Branch) -> Result<LinearProgram, OptimizeError> {
    validated(h, s)?;
    let model = Model::new(h, b)?;
    Ok(model.program(&model.schedule_rows(s), None))
}

fn finish(
    h: &UndirectedGraph,
    s: LoadingSchedule,
    branch: Branch,
    assignment: ExponentAssignment,
    value: Rational,
) -> Result<OptimizationResult, OptimizeError> {
    let (exponent, stages) = total_exponent(h, &s, &assignment)?;
    assert_eq!(exponent, value, "cost model disagrees with branch LP at {assignment}");
    Ok(OptimizationResult { exponent, assignment, schedule: s, branch, stages })
}

/// Best parameters for `s`, over all branches. Ties go to the earliest branch
/// in [`enumerate_branches`] order.
pub fn optimize_schedule(h: &UndirectedGraph, s: &LoadingSchedule) -> Result<OptimizationResult, OptimizeError> {
    validated(h, s)?;
    let mut best: Option<(Rational, Branch, Vec<Rational>, usize)> = None;
    for branch in enumerate_branches(h) {
        let model = Model::new(h, &branch)?;
        let rows = model.schedule_rows(s);
        let LpOutcome::Optimal { x, value } = solve_lp(&model.program(&rows, None))? else { continue };
        if best.as_ref().is_some_and(|b| value >= b.0) {
            continue;
        }
        if let Some(x) = model.polish(&rows, &value, x)? {
            best = Some((value, branch, x, model.k));
        }
    }
    let (value, branch, x, _) = best.ok_or(OptimizeError::Infeasible)?;
    let model = Model::new(h, &branch)?;
    let assignment = model.assignment(h, &x);
    finish(h, s.clone(), branch, assignment, value)
}

/// Minimum of [`optimize_schedule`] over an explicit list; ties go to the
/// earliest schedule, then the earliest branch.
///
/// Every schedule is visited in order. Per branch, the programs for the
/// current schedule's prefixes are kept, so consecutive schedules with a
/// common prefix share that work; a prefix whose bound already reaches the
/// best value is not extended again.
pub fn optimize_schedules(
    h: &UndirectedGraph,
    schedules: impl IntoIterator<Item = LoadingSchedule>,
) -> Result<OptimizationResult, OptimizeError> {
    struct Lane {
        branch: Branch,
        model: Model,
        /// `stack[d]`: branch and setup rows plus the rows of the first `d` items.
        stack: Vec<WarmLp>,
        globals: Vec<Affine>,
        /// Prefix length at which the bound reached the best value.
        dead_at: Option<usize>,
    }
    let mut lanes = Vec::new();
    for branch in enumerate_branches(h) {
        let model = Model::new(h, &branch)?;
        let lp = WarmLp::solve(&model.program(&model.setup, None))?;
        if lp.value().is_some() {
            let g = Affine::zero(model.nvars);
            lanes.push(Lane { branch, model, stack: vec![lp], globals: vec![g], dead_at: None });
        }
    }
    let mut best: Option<(Rational, LoadingSchedule, usize)> = None;
    let mut prev: Vec<ScheduleItem> = Vec::new();
    for s in schedules {
        validated(h, &s)?;
        let items = s.items();
        let common = items.iter().zip(&prev).take_while(|(a, b)| a == b).count();
        for (b, lane) in lanes.iter_mut().enumerate() {
            if lane.dead_at.is_some_and(|d| d <= common) {
                continue;
            }
            lane.dead_at = None;
            lane.stack.truncate(common + 1);
            lane.globals.truncate(common + 1);
            let beaten = |lp: &WarmLp, best: &Option<(Rational, LoadingSchedule, usize)>| match lp.value() {
                None => true,
                Some(v) => best.as_ref().is_some_and(|(bv, ..)| v >= *bv),
            };
            if beaten(&lane.stack[common], &best) {
                lane.dead_at = Some(common);
                continue;
            }
            for d in common..items.len() {
                let x = lane.model.item_index(items[d]);
                let mut lp = lane.stack[d].clone();
                for l in &lane.model.local[x] {
                    let r = lane.globals[d].add(l);
                    let mut c = r.coef;
                    c[T] -= Rational::one();
                    lp.add_le(&c, &-r.constant)?;
                }
                let dead = beaten(&lp, &best);
                lane.globals.push(lane.globals[d].add(&lane.model.contrib[x]));
                lane.stack.push(lp);
                if dead {
                    lane.dead_at = Some(d + 1);
                    break;
                }
            }
            if lane.dead_at.is_some() {
                continue;
            }
            let LpOutcome::Optimal { x, value } = lane.stack[items.len()].outcome() else { continue };
            let rows = lane.model.schedule_rows(&s);
            if lane.model.polish(&rows, &value, x)?.is_some() {
                best = Some((value, s.clone(), b));
            }
        }
        prev = items.to_vec();
    }
    let (value, s, b) = best.ok_or(OptimizeError::Infeasible)?;
    let lane = &lanes[b];
    // the warm-started vertex depends on visiting order; re-solve cold so the
    // point matches optimize_schedule
    let rows = lane.model.schedule_rows(&s);
    let LpOutcome::Optimal { x, .. } = solve_lp(&lane.model.program(&rows, None))? else { unreachable!() };
    let x = lane.model.polish(&rows, &value, x)?.expect("polished before");
    let assignment = lane.model.assignment(h, &x);
    finish(h, s, lane.branch.clone(), assignment, value)
}

struct Incumbent {
    value: Rational,
    branch: usize,
    schedule: LoadingSchedule,
    x: Vec<Rational>,
}

/// Backward search over schedules of one branch.
///
/// For fixed parameters, picking the schedule is the single-machine problem
/// of minimizing `max_x (start_x + local_x)` under precedence constraints,
/// where the processing time of `x` is its contribution. Building the
/// schedule from the end and always placing last an eligible item with the
/// smallest `local - contribution` is optimal there. The search follows the
/// same construction and adds that choice as a linear constraint against
/// every other eligible item whose local term is a single affine form, so
/// only schedules that are greedy-optimal somewhere in the branch survive.
struct Search<'a> {
    model: &'a Model,
    branch: usize,
    /// Items with a local term; isolated vertices are appended at the very end.
    active: u32,
    /// `t >= G(prerequisites of x) + local(x)`, a bound for any position of `x`.
    relaxed: Vec<Vec<Affine>>,
    incumbent: &'a mut Option<Incumbent>,
    lp_solves: u64,
}

impl<'a> Search<'a> {
    fn new(model: &'a Model, branch: usize, incumbent: &'a mut Option<Incumbent>) -> Self {
        let mut active = 0u32;
        let mut relaxed = Vec::new();
        for (x, locals) in model.local.iter().enumerate() {
            if !locals.is_empty() {
                active |= 1 << x;
            }
            let mut g = Affine::zero(model.nvars);
            let mut need = model.needs[x];
            while need != 0 {
                g = g.add(&model.contrib[need.trailing_zeros() as usize]);
                need &= need - 1;
            }
            relaxed.push(locals.iter().map(|l| g.add(l)).collect());
        }
        Search { model, branch, active, relaxed, incumbent, lp_solves: 0 }
    }

    fn beaten(&self, lb: &Rational) -> bool {
        self.incumbent.as_ref().is_some_and(|inc| *lb >= inc.value)
    }

    /// Items of `remaining` that no remaining item must follow.
    fn eligible(&self, remaining: u32) -> Vec<usize> {
        (0..self.model.items.len())
            .filter(|&x| remaining >> x & 1 == 1)
            .filter(|&x| {
                !(0..self.model.items.len()).any(|y| remaining >> y & 1 == 1 && self.model.needs[y] >> x & 1 == 1)
            })
            .collect()
    }

    /// `local - contribution` of `x` at `p`.
    fn key(&self, x: usize, p: &[Rational]) -> Rational {
        let model = self.model;
        model.local[x].iter().map(|l| l.eval(p)).max().expect("active item") - model.contrib[x].eval(p)
    }

    /// Re-optimizes `parent` with the rows `t >= row` and `tie <= 0` added.
    /// When `x` already satisfies all of them no pivot happens.
    fn extend(
        &mut self,
        parent: &WarmLp,
        x: &[Rational],
        rows: &[Affine],
        ties: &[Affine],
    ) -> Result<WarmLp, OptimizeError> {
        let mut lp = parent.clone();
        let mut violated = false;
        for r in rows {
            violated |= r.eval(x) > x[T];
            let mut c = r.coef.clone();
            c[T] -= Rational::one();
            lp.add_le(&c, &-&r.constant)?;
        }
        for tie in ties {
            violated |= tie.eval(x).is_positive();
            lp.add_le(&tie.coef, &-&tie.constant)?;
        }
        if violated {
            self.lp_solves += 1;
        }
        Ok(lp)
    }

    /// `remaining`: items not yet placed; `suffix`: placed items, last item first.
    /// `lp` holds the bound of this node and `x`, `lb` its optimum.
    fn node(
        &mut self,
        remaining: u32,
        global: &Affine,
        suffix: &mut Vec<usize>,
        lp: &WarmLp,
        x: &[Rational],
        lb: &Rational,
    ) -> Result<(), OptimizeError> {
        let model = self.model;
        if remaining == 0 {
            let mut order: Vec<usize> = suffix.iter().rev().copied().collect();
            order.extend((0..model.items.len()).filter(|&i| self.active >> i & 1 == 0));
            let schedule = LoadingSchedule::new(order.iter().map(|&i| model.items[i]).collect());
            let rows = model.schedule_rows(&schedule);
            if let Some(x) = model.polish(&rows, lb, x.to_vec())? {
                *self.incumbent = Some(Incumbent { value: lb.clone(), branch: self.branch, schedule, x });
            }
            return Ok(());
        }
        let eligible = self.eligible(remaining);
        let mut choices = eligible.clone();
        choices.sort_by(|&a, &b| self.key(a, x).cmp(&self.key(b, x)).then(a.cmp(&b)));
        for &z in &choices {
            let before_z = global.add(&Affine {
                coef: model.contrib[z].coef.iter().map(|c| -c).collect(),
                constant: -&model.contrib[z].constant,
            });
            let rows: Vec<Affine> = model.local[z].iter().map(|l| before_z.add(l)).collect();
            let mut ties = Vec::new();
            for &w in &eligible {
                if w == z || model.local[w].len() != 1 {
                    continue;
                }
                // local_z,r - c_z <= local_w - c_w for every piece r of z
                let rhs = model.local[w][0].add(&model.contrib[z]);
                for l in &model.local[z] {
                    let lhs = l.add(&model.contrib[w]);
                    ties.push(Affine {
                        coef: lhs.coef.iter().zip(&rhs.coef).map(|(a, b)| a - b).collect(),
                        constant: &lhs.constant - &rhs.constant,
                    });
                }
            }
            let child = self.extend(lp, x, &rows, &ties)?;
            if let LpOutcome::Optimal { x: cx, value } = child.outcome() {
                if !self.beaten(&value) {
                    suffix.push(z);
                    self.node(remaining & !(1 << z), &before_z, suffix, &child, &cx, &value)?;
                    suffix.pop();
                }
            }
            if self.beaten(lb) {
                break;
            }
        }
        Ok(())
    }
}

/// Search statistics for [`optimize_graph_with_stats`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Branches left after removing automorphic copies.
    pub branches: usize,
    pub branches_searched: usize,
    pub lp_solves: u64,
}

/// One branch per orbit of the automorphism group of `h`, keeping the first of each orbit.
fn branch_representatives(h: &UndirectedGraph, branches: Vec<Branch>) -> Vec<Branch> {
    type Key = (Vec<(usize, usize)>, Vec<(Edge, Regime)>);
    let key = |b: &Branch, perm: &[usize]| -> Key {
        let mut order: Vec<(usize, usize)> = b.order.iter().map(|&(a, c)| (perm[a - 1], perm[c - 1])).collect();
        order.sort();
        let mut regimes: Vec<(Edge, Regime)> = b
            .regimes
            .iter()
            .map(|(&(i, j), &r)| {
                let (a, c) = (perm[i - 1], perm[j - 1]);
                ((a.min(c), a.max(c)), r)
            })
            .collect();
        regimes.sort();
        (order, regimes)
    };
    let autos = automorphisms(h);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for b in branches {
        let identity: Vec<usize> = (1..=h.k()).collect();
        if seen.contains(&key(&b, &identity)) {
            continue;
        }
        for perm in &autos {
            seen.insert(key(&b, perm));
        }
        out.push(b);
    }
    out
}

/// Best schedule and parameters for `h`: the minimum of [`optimize_schedule`]
/// over every valid schedule, found by branch and bound.
pub fn optimize_graph(h: &UndirectedGraph) -> Result<OptimizationResult, OptimizeError> {
    optimize_graph_with_stats(h).map(|(r, _)| r)
}

pub fn optimize_graph_with_stats(h: &UndirectedGraph) -> Result<(OptimizationResult, SearchStats), OptimizeError> {
    let size = h.k() + h.edge_count();
    if size > DEFAULT_ENUMERATION_CAP {
        return Err(ScheduleError::CapExceeded { size, cap: DEFAULT_ENUMERATION_CAP }.into());
    }
    let branches = branch_representatives(h, enumerate_branches(h));
    let mut stats = SearchStats { branches: branches.len(), ..SearchStats::default() };
    let models = branches.iter().map(|b| Model::new(h, b)).collect::<Result<Vec<_>, _>>()?;

    // Root bounds decide the branch order; ties keep enumeration order.
    let mut roots = Vec::new();
    for (idx, model) in models.iter().enumerate() {
        let mut none = None;
        let search = Search::new(model, idx, &mut none);
        let mut rows = model.setup.clone();
        rows.extend(search.relaxed.iter().flatten().cloned());
        stats.lp_solves += 1;
        let lp = WarmLp::solve(&model.program(&rows, None))?;
        if let LpOutcome::Optimal { x, value } = lp.outcome() {
            roots.push((value, idx, x, lp));
        }
    }
    roots.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut incumbent: Option<Incumbent> = None;
    for (lb, idx, x, lp) in &roots {
        if incumbent.as_ref().is_some_and(|inc| *lb >= inc.value) {
            break;
        }
        stats.branches_searched += 1;
        let model = &models[*idx];
        let mut search = Search::new(model, *idx, &mut incumbent);
        let remaining = search.active;
        let mut global = Affine::zero(model.nvars);
        for i in 0..model.items.len() {
            if remaining >> i & 1 == 1 {
                global = global.add(&model.contrib[i]);
            }
        }
        search.node(remaining, &global, &mut Vec::new(), lp, x, lb)?;
        stats.lp_solves += search.lp_solves;
    }

    let inc = incumbent.ok_or(OptimizeError::Infeasible)?;
    let model = &models[inc.branch];
    let assignment = model.assignment(h, &inc.x);
    let result = finish(h, inc.schedule, branches[inc.branch].clone(), assignment, inc.value)?;
    Ok((result, stats))
}

/// True if `small` is isomorphic to a subgraph of some vertex contraction of `big`
/// (the identity contraction included).
pub fn dominated_by(small: &UndirectedGraph, big: &UndirectedGraph) -> bool {
    all_contractions(&CertGraph::bidirected(big)).iter().map(undirected_version).any(|c| embeds_into(small, &c))
}

/// Drops every graph whose undirected version is dominated (see [`dominated_by`])
/// by another listed graph. Of several mutually dominating graphs the first is kept.
pub fn prune_certificates(graphs: &[CertGraph]) -> Vec<CertGraph> {
    let und: Vec<UndirectedGraph> = graphs.iter().map(undirected_version).collect();
    let n = graphs.len();
    let mut dom = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                dom[i][j] = dominated_by(&und[i], &und[j]);
            }
        }
    }
    (0..n)
        .filter(|&i| !(0..n).any(|j| j != i && dom[i][j] && (!dom[j][i] || j < i)))
        .map(|i| graphs[i].clone())
        .collect()
}

/// Bound for a function whose minimal certificates have the given graphs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionResult {
    pub exponent: Rational,
    /// Graphs left after pruning, with their results in the same order.
    pub kept: Vec<CertGraph>,
    pub results: Vec<OptimizationResult>,
}

/// Maximum over the pruned certificate graphs of [`optimize_graph`] on their undirected versions.
pub fn optimize_function(certs: &[CertGraph]) -> Result<FunctionResult, OptimizeError> {
    if certs.is_empty() {
        return Err(OptimizeError::EmptyFamily);
    }
    let kept = prune_certificates(certs);
    let results = kept.iter().map(|g| optimize_graph(&undirected_version(g))).collect::<Result<Vec<_>, _>>()?;
    let exponent = results.iter().map(|r| r.exponent.clone()).max().expect("nonempty");
    Ok(FunctionResult { exponent, kept, results })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::schedule::enumerate_schedules;

    #[test]
    fn reference_branch_for_the_triangle() {
        let h = presets::triangle();
        let b = Branch::from_chain(
            &[3, 1, 2],
            [((1, 2), Regime::Dense), ((2, 3), Regime::Sparse), ((1, 3), Regime::Sparse)],
            [(1, 2), (2, 1), (3, 2)],
        );
        let lp = build_branch_lp(&h, &presets::triangle_schedule(), &b).unwrap();
        let LpOutcome::Optimal { value, .. } = solve_lp(&lp).unwrap() else { panic!() };
        assert_eq!(value, q(9, 7));
        // the reference point is feasible for this branch at t = 9/7
        let a = presets::triangle_assignment();
        let mut x = vec![q(9, 7)];
        x.extend(a.rho.iter().cloned());
        x.extend(h.edges().map(|(i, j)| a.delta(i, j).clone()));
        assert!(lp.is_feasible(&x));
    }

    #[test]
    fn contradictory_branch_is_infeasible() {
        // rho1 <= rho2 with both a dense and a sparse requirement that cannot meet:
        // dense forces rho1 + delta >= rho2, the extra stage rows pin delta = 0 and rho2 = 1, rho1 = 0.
        let h = UndirectedGraph::complete(2);
        let b = Branch::from_chain(&[1, 2], [((1, 2), Regime::Dense)], [(1, 2), (2, 1)]);
        let s: LoadingSchedule = "1,2,e(1,2)".parse().unwrap();
        let mut lp = build_branch_lp(&h, &s, &b).unwrap();
        let n = lp.num_vars();
        let var = |i: usize| {
            let mut c = vec![Rational::zero(); n];
            c[i] = Rational::one();
            c
        };
        lp.add_le(var(3), Rational::zero());
        lp.add_ge(var(2), Rational::one());
        lp.add_le(var(1), Rational::zero());
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn malformed_branches_are_rejected() {
        let h = UndirectedGraph::complete(2);
        let s: LoadingSchedule = "1,2,e(1,2)".parse().unwrap();
        let no_order = Branch::from_chain(&[], [((1, 2), Regime::Dense)], [(1, 2), (2, 1)]);
        assert!(matches!(build_branch_lp(&h, &s, &no_order), Err(OptimizeError::Branch(_))));
        let no_witness = Branch::from_chain(&[1, 2], [((1, 2), Regime::Dense)], [(1, 2)]);
        assert!(matches!(build_branch_lp(&h, &s, &no_witness), Err(OptimizeError::Branch(_))));
        let bad: LoadingSchedule = "1,e(1,2),2".parse().unwrap();
        let ok = Branch::from_chain(&[1, 2], [((1, 2), Regime::Dense)], [(1, 2), (2, 1)]);
        assert!(matches!(build_branch_lp(&h, &bad, &ok), Err(OptimizeError::Schedule(_))));
    }

    #[test]
    fn edgeless_graph() {
        let h = UndirectedGraph::empty(2);
        let s: LoadingSchedule = "2,1".parse().unwrap();
        let b = Branch::from_chain(&[], [], []);
        let lp = build_branch_lp(&h, &s, &b).unwrap();
        assert_eq!(solve_lp(&lp).unwrap().value(), Some(&Rational::zero()));
        assert_eq!(optimize_graph(&h).unwrap().exponent, Rational::zero());
    }

    #[test]
    fn triangle_reference_schedule() {
        let r = optimize_schedule(&presets::triangle(), &presets::triangle_schedule()).unwrap();
        assert_eq!(r.exponent, q(9, 7));
    }

    #[test]
    fn single_edge() {
        let h = UndirectedGraph::complete(2);
        let s: LoadingSchedule = "1,2,e(1,2)".parse().unwrap();
        assert_eq!(optimize_schedule(&h, &s).unwrap().exponent, Rational::one());
        assert_eq!(optimize_graph(&h).unwrap().exponent, Rational::one());
    }

    #[test]
    fn branch_and_bound_matches_exhaustive_search_on_the_triangle() {
        let h = presets::triangle();
        let all = optimize_schedules(&h, enumerate_schedules(&h).unwrap()).unwrap();
        let bb = optimize_graph(&h).unwrap();
        assert_eq!(all.exponent, bb.exponent);
        assert_eq!(bb.exponent, q(9, 7));
    }

    #[test]
    fn branch_enumeration_counts() {
        // K2: two orientations, two regimes, one sparse case leaves the upper vertex without a witness
        assert_eq!(enumerate_branches(&UndirectedGraph::complete(2)).len(), 2);
        assert_eq!(enumerate_branches(&UndirectedGraph::empty(3)).len(), 1);
    }

    #[test]
    fn pruning() {
        let k3 = CertGraph::bidirected(&UndirectedGraph::complete(3));
        let k2_plus = CertGraph::new(3, [(1, 2)]).unwrap();
        assert_eq!(prune_certificates(&[k3.clone(), k2_plus.clone()]), vec![k3.clone()]);
        assert_eq!(prune_certificates(&[k2_plus, k3.clone()]), vec![k3.clone()]);
        assert_eq!(prune_certificates(std::slice::from_ref(&k3)), vec![k3]);

        let h = presets::associativity_certificate();
        let mut family = vec![h.clone()];
        family.extend(all_contractions(&h));
        assert_eq!(prune_certificates(&family), vec![h]);
    }

    #[test]
    fn self_loop_function() {
        let g = CertGraph::new(1, [(1, 1)]).unwrap();
        assert_eq!(optimize_function(&[g]).unwrap().exponent, Rational::zero());
        assert_eq!(optimize_function(&[]), Err(OptimizeError::EmptyFamily));
    }
}
