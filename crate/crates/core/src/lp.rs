//! Exact linear programming over [`Rational`].
//!
//! Dense dictionary simplex with Bland's rule. Infeasible starts go through a
//! phase with one auxiliary variable. Programs are small (tens of variables and
//! constraints), so no attempt is made at sparsity.

use std::fmt;

use crate::error::LpError;
use crate::rational::Rational;

/// `coeffs · x <= rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub rhs: Rational,
}

/// Bounds on one variable; `None` means unbounded on that side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

impl Default for Bounds {
    /// Nonnegative.
    fn default() -> Self {
        Bounds { lower: Some(Rational::zero()), upper: None }
    }
}

/// Minimize `objective · x` subject to `constraints` and `bounds`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearProgram {
    pub variables: Vec<String>,
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bounds>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rational>, value: Rational },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<&Rational> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }
}

impl LinearProgram {
    /// Program over the named variables, all nonnegative, with a zero objective.
    pub fn new<S: Into<String>>(variables: impl IntoIterator<Item = S>) -> Self {
        let variables: Vec<String> = variables.into_iter().map(Into::into).collect();
        let n = variables.len();
        LinearProgram {
            variables,
            objective: vec![Rational::zero(); n],
            constraints: Vec::new(),
            bounds: vec![Bounds::default(); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn set_objective(&mut self, c: Vec<Rational>) {
        self.objective = c;
    }

    pub fn add_le(&mut self, coeffs: Vec<Rational>, rhs: Rational) {
        self.constraints.push(Constraint { coeffs, rhs });
    }

    pub fn add_ge(&mut self, coeffs: Vec<Rational>, rhs: Rational) {
        self.constraints.push(Constraint { coeffs: coeffs.into_iter().map(|c| -c).collect(), rhs: -rhs });
    }

    pub fn add_eq(&mut self, coeffs: Vec<Rational>, rhs: Rational) {
        self.add_ge(coeffs.clone(), rhs.clone());
        self.add_le(coeffs, rhs);
    }

    pub fn set_bounds(&mut self, var: usize, lower: Option<Rational>, upper: Option<Rational>) {
        self.bounds[var] = Bounds { lower, upper };
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.variables.len();
        if self.objective.len() != n {
            return Err(LpError::Dimension(format!(
                "objective has {} entries for {n} variables",
                self.objective.len()
            )));
        }
        if self.bounds.len() != n {
            return Err(LpError::Dimension(format!("{} bounds for {n} variables", self.bounds.len())));
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::Dimension(format!(
                    "constraint {r} has {} coefficients for {n} variables",
                    c.coeffs.len()
                )));
            }
        }
        Ok(())
    }

    /// Whether `x` satisfies every constraint and bound exactly.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars()
            && self
                .bounds
                .iter()
                .zip(x)
                .all(|(b, v)| b.lower.as_ref().is_none_or(|l| v >= l) && b.upper.as_ref().is_none_or(|u| v <= u))
            && self.constraints.iter().all(|c| dot(&c.coeffs, x) <= c.rhs)
    }

    pub fn objective_at(&self, x: &[Rational]) -> Rational {
        dot(&self.objective, x)
    }
}

pub(crate) fn dot(a: &[Rational], x: &[Rational]) -> Rational {
    a.iter().zip(x).filter(|(c, _)| !c.is_zero()).map(|(c, v)| c * v).sum()
}

fn write_linear(f: &mut fmt::Formatter<'_>, coeffs: &[Rational], names: &[String]) -> fmt::Result {
    let mut first = true;
    for (c, name) in coeffs.iter().zip(names) {
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        let sign = if c.is_negative() { "-" } else { "+" };
        if first {
            if c.is_negative() {
                write!(f, "-")?;
            }
        } else {
            write!(f, " {sign} ")?;
        }
        if mag == Rational::one() {
            write!(f, "{name}")?;
        } else {
            write!(f, "{mag} {name}")?;
        }
        first = false;
    }
    if first {
        write!(f, "0")?;
    }
    Ok(())
}

impl fmt::Display for LinearProgram {
    /// One line per constraint, e.g. `c3: rho1 + delta12 - rho2 >= 0` written in `<=` form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "minimize ")?;
        write_linear(f, &self.objective, &self.variables)?;
        writeln!(f)?;
        writeln!(f, "subject to")?;
        for (r, c) in self.constraints.iter().enumerate() {
            write!(f, "  c{}: ", r + 1)?;
            write_linear(f, &c.coeffs, &self.variables)?;
            writeln!(f, " <= {}", c.rhs)?;
        }
        writeln!(f, "bounds")?;
        for (b, name) in self.bounds.iter().zip(&self.variables) {
            match (&b.lower, &b.upper) {
                (Some(l), Some(u)) => writeln!(f, "  {l} <= {name} <= {u}")?,
                (Some(l), None) => writeln!(f, "  {name} >= {l}")?,
                (None, Some(u)) => writeln!(f, "  {name} <= {u}")?,
                (None, None) => writeln!(f, "  {name} free")?,
            }
        }
        Ok(())
    }
}

/// How an original variable is expressed in nonnegative columns.
#[derive(Clone)]
enum Column {
    /// `x = offset + y`
    Shifted { y: usize, offset: Rational },
    /// `x = offset - y`
    Mirrored { y: usize, offset: Rational },
    /// `x = y_plus - y_minus`
    Split { plus: usize, minus: usize },
}

/// Dictionary: `x_{basis[r]} = rows[r][0] + sum_c rows[r][c+1] * x_{nonbasis[c]}`.
#[derive(Clone)]
struct Dictionary {
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    nonbasis: Vec<usize>,
    /// `z = obj[0] + sum_c obj[c+1] * x_{nonbasis[c]}`, maximized.
    obj: Vec<Rational>,
}

impl Dictionary {
    fn pivot(&mut self, r: usize, c: usize) {
        let a = self.rows[r][c + 1].clone();
        debug_assert!(!a.is_zero());
        let inv = -a.recip();
        // Solve row r for the entering variable.
        let mut new_row: Vec<Rational> = self.rows[r].iter().map(|v| v * &inv).collect();
        new_row[c + 1] = a.recip();
        std::mem::swap(&mut self.basis[r], &mut self.nonbasis[c]);

        let substitute = |row: &mut Vec<Rational>| {
            let b = std::mem::take(&mut row[c + 1]);
            if b.is_zero() {
                return;
            }
            for (dst, src) in row.iter_mut().zip(&new_row) {
                if !src.is_zero() {
                    *dst += &b * src;
                }
            }
        };
        for (s, row) in self.rows.iter_mut().enumerate() {
            if s != r {
                substitute(row);
            }
        }
        substitute(&mut self.obj);
        self.rows[r] = new_row;
    }

    /// Dual simplex from a dual feasible dictionary: the leaving row is the
    /// infeasible one with the smallest basic index, the entering column the
    /// one with the smallest ratio, ties to the smallest index. `Err` means the
    /// primal is infeasible.
    fn run_dual(&mut self) -> Result<(), ()> {
        loop {
            let leaving =
                (0..self.rows.len()).filter(|&r| self.rows[r][0].is_negative()).min_by_key(|&r| self.basis[r]);
            let Some(r) = leaving else { return Ok(()) };
            let mut best: Option<(usize, Rational)> = None;
            for c in 0..self.nonbasis.len() {
                let a = &self.rows[r][c + 1];
                if !a.is_positive() {
                    continue;
                }
                let ratio = -&self.obj[c + 1] / a;
                let better = match &best {
                    None => true,
                    Some((bc, bv)) => ratio < *bv || (ratio == *bv && self.nonbasis[c] < self.nonbasis[*bc]),
                };
                if better {
                    best = Some((c, ratio));
                }
            }
            match best {
                Some((c, _)) => self.pivot(r, c),
                None => return Err(()),
            }
        }
    }

    /// Bland's rule: smallest-index improving column; ratio ties to the smallest basic index.
    fn run(&mut self) -> Result<(), ()> {
        loop {
            let entering =
                (0..self.nonbasis.len()).filter(|&c| self.obj[c + 1].is_positive()).min_by_key(|&c| self.nonbasis[c]);
            let Some(c) = entering else { return Ok(()) };
            let mut best: Option<(usize, Rational)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if !row[c + 1].is_negative() {
                    continue;
                }
                let ratio = &row[0] / &(-&row[c + 1]);
                let better = match &best {
                    None => true,
                    Some((br, bv)) => ratio < *bv || (ratio == *bv && self.basis[r] < self.basis[*br]),
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return Err(()),
            }
        }
    }
}

/// Solves `lp` exactly. Identical programs give identical outcomes.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    WarmLp::solve(lp).map(|w| w.outcome())
}

/// A solved program that accepts further `<=` constraints and re-optimizes
/// from the current basis with dual simplex steps.
#[derive(Clone)]
pub struct WarmLp {
    n: usize,
    columns: Vec<Column>,
    ny: usize,
    cy: Vec<Rational>,
    c0: Rational,
    dict: Dictionary,
    next_id: usize,
    status: Status,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

impl WarmLp {
    pub fn solve(lp: &LinearProgram) -> Result<WarmLp, LpError> {
        lp.check()?;
        let n = lp.num_vars();

        let mut columns = Vec::with_capacity(n);
        let mut ny = 0usize;
        let mut extra: Vec<(usize, Rational)> = Vec::new();
        let mut empty_box = false;
        for b in &lp.bounds {
            match (&b.lower, &b.upper) {
                (Some(l), u) => {
                    if let Some(u) = u {
                        empty_box |= u < l;
                        extra.push((ny, u - l));
                    }
                    columns.push(Column::Shifted { y: ny, offset: l.clone() });
                    ny += 1;
                }
                (None, Some(u)) => {
                    columns.push(Column::Mirrored { y: ny, offset: u.clone() });
                    ny += 1;
                }
                (None, None) => {
                    columns.push(Column::Split { plus: ny, minus: ny + 1 });
                    ny += 2;
                }
            }
        }

        let mut cy = vec![Rational::zero(); ny];
        let mut c0 = Rational::zero();
        for (coef, col) in lp.objective.iter().zip(&columns) {
            match col {
                Column::Shifted { y, offset } => {
                    cy[*y] += coef;
                    c0 += coef * offset;
                }
                Column::Mirrored { y, offset } => {
                    cy[*y] -= coef;
                    c0 += coef * offset;
                }
                Column::Split { plus, minus } => {
                    cy[*plus] += coef;
                    cy[*minus] -= coef;
                }
            }
        }
        let mut w = WarmLp {
            n,
            columns,
            ny,
            cy,
            c0,
            dict: Dictionary { rows: Vec::new(), basis: Vec::new(), nonbasis: (0..ny).collect(), obj: Vec::new() },
            next_id: ny,
            status: Status::Optimal,
        };
        if empty_box {
            w.status = Status::Infeasible;
            return Ok(w);
        }

        // Rewrite constraints over y >= 0.
        let mut a_rows: Vec<(Vec<Rational>, Rational)> =
            lp.constraints.iter().map(|c| w.to_y(&c.coeffs, &c.rhs)).collect();
        for (y, cap) in extra {
            let mut row = vec![Rational::zero(); ny];
            row[y] = Rational::one();
            a_rows.push((row, cap));
        }

        let m = a_rows.len();
        let aux = ny + m;
        w.next_id = aux + 1;
        let needs_phase_one = a_rows.iter().any(|(_, b)| b.is_negative());
        let dict = &mut w.dict;
        dict.rows = a_rows
            .iter()
            .map(|(row, b)| {
                let mut r = Vec::with_capacity(ny + 2);
                r.push(b.clone());
                r.extend(row.iter().map(|v| -v));
                if needs_phase_one {
                    r.push(Rational::one());
                }
                r
            })
            .collect();
        dict.basis = (ny..ny + m).collect();
        if needs_phase_one {
            dict.nonbasis.push(aux);
            dict.obj = vec![Rational::zero(); ny + 2];
            dict.obj[ny + 1] = -Rational::one();
            let leave = (0..m)
                .min_by(|&a, &b| dict.rows[a][0].cmp(&dict.rows[b][0]).then(dict.basis[a].cmp(&dict.basis[b])))
                .expect("a negative row exists");
            dict.pivot(leave, ny);
            dict.run().expect("auxiliary problem is bounded");
            if dict.obj[0].is_negative() {
                w.status = Status::Infeasible;
                return Ok(w);
            }
            if let Some(r) = dict.basis.iter().position(|&v| v == aux) {
                let c = (0..dict.nonbasis.len())
                    .filter(|&c| !dict.rows[r][c + 1].is_zero())
                    .min_by_key(|&c| dict.nonbasis[c]);
                match c {
                    Some(c) => dict.pivot(r, c),
                    None => {
                        // The row is identically zero; drop it.
                        dict.rows.remove(r);
                        dict.basis.remove(r);
                    }
                }
            }
            let c = dict.nonbasis.iter().position(|&v| v == aux).expect("auxiliary is nonbasic");
            dict.nonbasis.remove(c);
            for row in &mut dict.rows {
                row.remove(c + 1);
            }
        }

        // Maximize -cy·y, expressed over the current nonbasis.
        let mut obj = vec![Rational::zero(); dict.nonbasis.len() + 1];
        let var_cost = |v: usize| if v < ny { -&w.cy[v] } else { Rational::zero() };
        for (c, &v) in dict.nonbasis.iter().enumerate() {
            obj[c + 1] += var_cost(v);
        }
        for (row, &v) in dict.rows.iter().zip(&dict.basis) {
            let wv = var_cost(v);
            if wv.is_zero() {
                continue;
            }
            for (dst, src) in obj.iter_mut().zip(row) {
                *dst += &wv * src;
            }
        }
        dict.obj = obj;
        if dict.run().is_err() {
            w.status = Status::Unbounded;
        }
        Ok(w)
    }

    fn to_y(&self, coeffs: &[Rational], rhs: &Rational) -> (Vec<Rational>, Rational) {
        let mut row = vec![Rational::zero(); self.ny];
        let mut rhs = rhs.clone();
        for (coef, col) in coeffs.iter().zip(&self.columns) {
            if coef.is_zero() {
                continue;
            }
            match col {
                Column::Shifted { y, offset } => {
                    row[*y] += coef;
                    rhs -= coef * offset;
                }
                Column::Mirrored { y, offset } => {
                    row[*y] -= coef;
                    rhs -= coef * offset;
                }
                Column::Split { plus, minus } => {
                    row[*plus] += coef;
                    row[*minus] -= coef;
                }
            }
        }
        (row, rhs)
    }

    /// Adds `coeffs · x <= rhs` and re-optimizes. Only an optimal program can be
    /// extended; an infeasible one stays infeasible.
    pub fn add_le(&mut self, coeffs: &[Rational], rhs: &Rational) -> Result<(), LpError> {
        if coeffs.len() != self.n {
            return Err(LpError::Dimension(format!(
                "constraint has {} coefficients for {} variables",
                coeffs.len(),
                self.n
            )));
        }
        match self.status {
            Status::Infeasible => return Ok(()),
            Status::Unbounded => return Err(LpError::Unbounded),
            Status::Optimal => {}
        }
        let (a, b) = self.to_y(coeffs, rhs);
        // slack = b - a·y, with basic y replaced by their rows
        let dict = &mut self.dict;
        let mut row = vec![Rational::zero(); dict.nonbasis.len() + 1];
        row[0] = b;
        let pos_in_nonbasis = |v: usize| dict.nonbasis.iter().position(|&x| x == v);
        for (v, coef) in a.iter().enumerate() {
            if coef.is_zero() {
                continue;
            }
            if let Some(c) = pos_in_nonbasis(v) {
                row[c + 1] -= coef;
            } else {
                let r = dict.basis.iter().position(|&x| x == v).expect("variable is basic");
                for (dst, src) in row.iter_mut().zip(&dict.rows[r]) {
                    *dst -= coef * src;
                }
            }
        }
        dict.rows.push(row);
        dict.basis.push(self.next_id);
        self.next_id += 1;
        if dict.run_dual().is_err() {
            self.status = Status::Infeasible;
        }
        Ok(())
    }

    /// Optimal value, without building the solution vector.
    pub fn value(&self) -> Option<Rational> {
        (self.status == Status::Optimal).then(|| &self.c0 - &self.dict.obj[0])
    }

    pub fn outcome(&self) -> LpOutcome {
        match self.status {
            Status::Infeasible => LpOutcome::Infeasible,
            Status::Unbounded => LpOutcome::Unbounded,
            Status::Optimal => {
                let mut y = vec![Rational::zero(); self.ny];
                for (row, &v) in self.dict.rows.iter().zip(&self.dict.basis) {
                    if v < self.ny {
                        y[v] = row[0].clone();
                    }
                }
                let x: Vec<Rational> = self
                    .columns
                    .iter()
                    .map(|col| match col {
                        Column::Shifted { y: i, offset } => offset + &y[*i],
                        Column::Mirrored { y: i, offset } => offset - &y[*i],
                        Column::Split { plus, minus } => &y[*plus] - &y[*minus],
                    })
                    .collect();
                let value = &self.c0 - &self.dict.obj[0];
                LpOutcome::Optimal { x, value }
            }
        }
    }
}
