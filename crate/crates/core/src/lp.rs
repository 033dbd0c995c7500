//! Exact rational linear programming.
//!
//! A dense two-phase primal simplex with Bland's rule. Instances here are tiny
//! (a handful of variables, at most a few dozen rows), so every pivot is done
//! in exact arithmetic and the returned point satisfies each constraint exactly.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::rational::{fmt_rational, int, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn lhs(&self, x: &[Rational]) -> Rational {
        dot(&self.coeffs, x)
    }

    pub fn holds(&self, x: &[Rational]) -> bool {
        let l = self.lhs(x);
        match self.relation {
            Relation::Le => l <= self.rhs,
            Relation::Eq => l == self.rhs,
            Relation::Ge => l >= self.rhs,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bound {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

/// `minimize/maximize c·x` subject to linear rows and per-variable bounds.
/// Variables default to `x ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bound>,
    pub names: Vec<String>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<Rational>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            constraints: Vec::new(),
            bounds: vec![Bound { lower: Some(int(0)), upper: None }; n],
            names: (1..=n).map(|i| format!("x{i}")).collect(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.num_vars(), "one name per variable");
        self.names = names;
        self
    }

    pub fn constrain(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) -> &mut Self {
        assert_eq!(coeffs.len(), self.num_vars(), "coefficient vector length");
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: Option<Rational>, upper: Option<Rational>) -> &mut Self {
        self.bounds[var] = Bound { lower, upper };
        self
    }

    pub fn set_lower(&mut self, var: usize, lower: Rational) -> &mut Self {
        self.bounds[var].lower = Some(lower);
        self
    }

    pub fn set_upper(&mut self, var: usize, upper: Rational) -> &mut Self {
        self.bounds[var].upper = Some(upper);
        self
    }

    /// Pins `var` to `value`.
    pub fn fix(&mut self, var: usize, value: Rational) -> &mut Self {
        self.bounds[var] = Bound { lower: Some(value.clone()), upper: Some(value) };
        self
    }

    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        dot(&self.objective, x)
    }

    /// True iff `x` satisfies every row and bound exactly.
    pub fn is_feasible_point(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars()
            && self.constraints.iter().all(|c| c.holds(x))
            && self
                .bounds
                .iter()
                .zip(x)
                .all(|(b, v)| b.lower.as_ref().is_none_or(|l| v >= l) && b.upper.as_ref().is_none_or(|u| v <= u))
    }

    /// Every bound rewritten as an explicit row (`x_j ≥ l`, `x_j ≤ u`).
    pub fn bound_rows(&self) -> Vec<Constraint> {
        let n = self.num_vars();
        let mut rows = Vec::new();
        for (j, b) in self.bounds.iter().enumerate() {
            let unit = || (0..n).map(|k| int((k == j) as i64)).collect::<Vec<_>>();
            if let Some(l) = &b.lower {
                rows.push(Constraint { coeffs: unit(), relation: Relation::Ge, rhs: l.clone() });
            }
            if let Some(u) = &b.upper {
                rows.push(Constraint { coeffs: unit(), relation: Relation::Le, rhs: u.clone() });
            }
        }
        rows
    }

    pub fn solve(&self) -> LpSolution {
        solve(self)
    }
}

fn dot(a: &[Rational], x: &[Rational]) -> Rational {
    a.iter().zip(x).filter(|(c, _)| !c.is_zero()).map(|(c, v)| c * v).sum()
}

fn fmt_linear(f: &mut fmt::Formatter<'_>, coeffs: &[Rational], names: &[String]) -> fmt::Result {
    let mut first = true;
    for (c, name) in coeffs.iter().zip(names) {
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        let sign = if c.is_negative() { "-" } else { "+" };
        if first {
            if c.is_negative() {
                f.write_str("-")?;
            }
        } else {
            write!(f, " {sign} ")?;
        }
        first = false;
        if mag == int(1) {
            f.write_str(name)?;
        } else {
            write!(f, "{} {}", fmt_rational(&mag), name)?;
        }
    }
    if first {
        f.write_str("0")?;
    }
    Ok(())
}

/// Plain-text dump: `minimize …` / `subject to` / rows / `bounds`.
impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sense = match self.sense {
            Sense::Minimize => "minimize",
            Sense::Maximize => "maximize",
        };
        write!(f, "{sense} ")?;
        fmt_linear(f, &self.objective, &self.names)?;
        writeln!(f)?;
        writeln!(f, "subject to")?;
        for c in &self.constraints {
            f.write_str("  ")?;
            fmt_linear(f, &c.coeffs, &self.names)?;
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            writeln!(f, " {rel} {}", fmt_rational(&c.rhs))?;
        }
        writeln!(f, "bounds")?;
        for (b, name) in self.bounds.iter().zip(&self.names) {
            let lo = b.lower.as_ref().map_or("-inf".to_string(), fmt_rational);
            let hi = b.upper.as_ref().map_or("+inf".to_string(), fmt_rational);
            writeln!(f, "  {lo} <= {name} <= {hi}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: Option<Rational>,
    pub point: Option<Vec<Rational>>,
}

impl LpSolution {
    fn infeasible() -> Self {
        Self { status: LpStatus::Infeasible, value: None, point: None }
    }

    fn unbounded() -> Self {
        Self { status: LpStatus::Unbounded, value: None, point: None }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// How an original variable is expressed through nonnegative tableau columns.
struct VarMap {
    offset: Rational,
    cols: Vec<(usize, bool)>, // (column, negated)
}

struct Tableau {
    rows: Vec<Vec<Rational>>, // last entry is the rhs
    basis: Vec<usize>,
    num_cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Rational {
        &self.rows[i][self.num_cols]
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [Rational]) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v /= &p;
            }
        }
        let pivot_row = self.rows[r].clone();
        let nz: Vec<usize> = (0..pivot_row.len()).filter(|&k| !pivot_row[k].is_zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for &k in &nz {
                row[k] -= &factor * &pivot_row[k];
            }
        }
        if !obj[c].is_zero() {
            let factor = obj[c].clone();
            for &k in &nz {
                obj[k] -= &factor * &pivot_row[k];
            }
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row for `cost` (length `num_cols`), with `-z` in the last slot.
    fn priced(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut obj: Vec<Rational> = cost.to_vec();
        obj.push(Rational::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (k, v) in self.rows[i].iter().enumerate() {
                if !v.is_zero() {
                    obj[k] -= cb * v;
                }
            }
        }
        obj
    }

    /// Minimizes the priced objective over columns `< allowed`. Returns false if unbounded.
    fn run(&mut self, obj: &mut [Rational], allowed: usize) -> bool {
        loop {
            let Some(enter) = (0..allowed).find(|&j| obj[j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, enter, obj),
            }
        }
    }
}

/// Solves `lp` exactly. Deterministic for a fixed input.
pub fn solve(lp: &LinearProgram) -> LpSolution {
    let n = lp.num_vars();
    let mut maps = Vec::with_capacity(n);
    let mut num_struct = 0usize;
    // extra rows from two-sided bounds: (column, width)
    let mut range_rows: Vec<(usize, Rational)> = Vec::new();
    for b in &lp.bounds {
        match (&b.lower, &b.upper) {
            (Some(l), u) => {
                if let Some(u) = u {
                    if u < l {
                        return LpSolution::infeasible();
                    }
                    range_rows.push((num_struct, u - l));
                }
                maps.push(VarMap { offset: l.clone(), cols: vec![(num_struct, false)] });
                num_struct += 1;
            }
            (None, Some(u)) => {
                maps.push(VarMap { offset: u.clone(), cols: vec![(num_struct, true)] });
                num_struct += 1;
            }
            (None, None) => {
                maps.push(VarMap { offset: Rational::zero(), cols: vec![(num_struct, false), (num_struct + 1, true)] });
                num_struct += 2;
            }
        }
    }

    // rows over structural columns: (coeffs, relation, rhs)
    let mut rows: Vec<(Vec<Rational>, Relation, Rational)> = Vec::new();
    for c in &lp.constraints {
        let mut coeffs = vec![Rational::zero(); num_struct];
        let mut rhs = c.rhs.clone();
        for (j, a) in c.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            rhs -= a * &maps[j].offset;
            for &(col, neg) in &maps[j].cols {
                if neg {
                    coeffs[col] -= a;
                } else {
                    coeffs[col] += a;
                }
            }
        }
        rows.push((coeffs, c.relation, rhs));
    }
    for (col, width) in range_rows {
        let mut coeffs = vec![Rational::zero(); num_struct];
        coeffs[col] = int(1);
        rows.push((coeffs, Relation::Le, width));
    }
    for (coeffs, rel, rhs) in rows.iter_mut() {
        if rhs.is_negative() {
            for v in coeffs.iter_mut() {
                *v = -v.clone();
            }
            *rhs = -rhs.clone();
            *rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let num_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let num_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let art_start = num_struct + num_slack;
    let num_cols = art_start + num_art;

    let mut tab = Tableau { rows: Vec::with_capacity(rows.len()), basis: Vec::new(), num_cols };
    let (mut next_slack, mut next_art) = (num_struct, art_start);
    for (coeffs, rel, rhs) in rows {
        let mut row = coeffs;
        row.resize(num_cols + 1, Rational::zero());
        row[num_cols] = rhs;
        match rel {
            Relation::Le => {
                row[next_slack] = int(1);
                tab.basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = int(-1);
                next_slack += 1;
                row[next_art] = int(1);
                tab.basis.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = int(1);
                tab.basis.push(next_art);
                next_art += 1;
            }
        }
        tab.rows.push(row);
    }

    // phase 1
    if num_art > 0 {
        let cost: Vec<Rational> = (0..num_cols).map(|j| int((j >= art_start) as i64)).collect();
        let mut obj = tab.priced(&cost);
        tab.run(&mut obj, num_cols);
        if !obj[num_cols].is_zero() {
            return LpSolution::infeasible();
        }
        // drive zero-level artificials out of the basis
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= art_start {
                match (0..art_start).find(|&j| !tab.rows[i][j].is_zero()) {
                    Some(j) => {
                        let mut dummy = vec![Rational::zero(); num_cols + 1];
                        tab.pivot(i, j, &mut dummy);
                    }
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    // phase 2
    let mut cost = vec![Rational::zero(); num_cols];
    for (j, c) in lp.objective.iter().enumerate() {
        let c = match lp.sense {
            Sense::Minimize => c.clone(),
            Sense::Maximize => -c.clone(),
        };
        for &(col, neg) in &maps[j].cols {
            if neg {
                cost[col] -= &c;
            } else {
                cost[col] += &c;
            }
        }
    }
    let mut obj = tab.priced(&cost);
    if !tab.run(&mut obj, art_start) {
        return LpSolution::unbounded();
    }

    let mut y = vec![Rational::zero(); num_cols];
    for (i, &b) in tab.basis.iter().enumerate() {
        y[b] = tab.rhs(i).clone();
    }
    let point: Vec<Rational> = maps
        .iter()
        .map(|m| {
            m.cols.iter().fold(m.offset.clone(), |acc, &(col, neg)| if neg { acc - &y[col] } else { acc + &y[col] })
        })
        .collect();
    let value = lp.objective_value(&point);
    debug_assert!(lp.is_feasible_point(&point), "simplex returned an infeasible point");
    LpSolution { status: LpStatus::Optimal, value: Some(value), point: Some(point) }
}

/// Decides emptiness of `{x : rows and bounds of region}` by minimizing a
/// uniform slack `s` in `f_i(x) ≤ c_i + s`; the set is empty iff `min s > 0`.
pub fn nonstrict_region_empty(region: &LinearProgram) -> bool {
    let n = region.num_vars();
    let s = n;
    let mut lp = LinearProgram::new(Sense::Minimize, {
        let mut c = vec![Rational::zero(); n + 1];
        c[s] = int(1);
        c
    });
    for j in 0..=n {
        lp.set_bounds(j, None, None);
    }
    let mut push_le = |coeffs: &[Rational], rhs: &Rational| {
        let mut row = coeffs.to_vec();
        row.push(int(-1));
        lp.constrain(row, Relation::Le, rhs.clone());
    };
    let neg = |v: &[Rational]| v.iter().map(|x| -x.clone()).collect::<Vec<_>>();
    for c in region.constraints.iter().cloned().chain(region.bound_rows()) {
        match c.relation {
            Relation::Le => push_le(&c.coeffs, &c.rhs),
            Relation::Ge => push_le(&neg(&c.coeffs), &-c.rhs.clone()),
            Relation::Eq => {
                push_le(&c.coeffs, &c.rhs);
                push_le(&neg(&c.coeffs), &-c.rhs.clone());
            }
        }
    }
    let sol = solve(&lp);
    match sol.status {
        LpStatus::Optimal => sol.value.expect("optimal has value").is_positive(),
        LpStatus::Unbounded => false,
        LpStatus::Infeasible => unreachable!("slack LP is always feasible"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrictRelation {
    Lt,
    Gt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrictConstraint {
    pub coeffs: Vec<Rational>,
    pub relation: StrictRelation,
    pub rhs: Rational,
}

impl StrictConstraint {
    pub fn holds(&self, x: &[Rational]) -> bool {
        let l = dot(&self.coeffs, x);
        match self.relation {
            StrictRelation::Lt => l < self.rhs,
            StrictRelation::Gt => l > self.rhs,
        }
    }
}

/// True iff some point satisfies `base` (rows and bounds) and every `strict`
/// inequality strictly. Maximizes a shared margin `ε` (capped at 1) in
/// `a·x + ε ≤ b` / `a·x − ε ≥ b` and tests `ε > 0`.
pub fn strict_interior_nonempty(base: &LinearProgram, strict: &[StrictConstraint]) -> bool {
    strict_margin(base, strict).is_some_and(|e| e.is_positive() || strict.is_empty())
}

/// The largest common margin (capped at 1), or `None` if even the closure is infeasible.
pub fn strict_margin(base: &LinearProgram, strict: &[StrictConstraint]) -> Option<Rational> {
    let n = base.num_vars();
    let eps = n;
    let mut obj = vec![Rational::zero(); n + 1];
    obj[eps] = int(1);
    let mut lp = LinearProgram::new(Sense::Maximize, obj);
    for (j, b) in base.bounds.iter().enumerate() {
        lp.set_bounds(j, b.lower.clone(), b.upper.clone());
    }
    lp.set_bounds(eps, Some(int(0)), Some(int(1)));
    for c in &base.constraints {
        let mut row = c.coeffs.clone();
        row.push(Rational::zero());
        lp.constrain(row, c.relation, c.rhs.clone());
    }
    for c in strict {
        let mut row = c.coeffs.clone();
        match c.relation {
            StrictRelation::Lt => {
                row.push(int(1));
                lp.constrain(row, Relation::Le, c.rhs.clone());
            }
            StrictRelation::Gt => {
                row.push(int(-1));
                lp.constrain(row, Relation::Ge, c.rhs.clone());
            }
        }
    }
    let sol = solve(&lp);
    sol.is_optimal().then(|| sol.value.expect("optimal has value"))
}
