//! Slow, obviously-correct reference implementations used to cross-check the library.
#![allow(dead_code)]

pub mod props;

use iag_core::lp::{Constraint, LinearProgram, Relation, Sense};
use iag_core::rational::{frac, half, int};
use iag_core::{Rational, TruthTable};
use num_traits::{Signed, Zero};

/// An ordered test-outcome sequence: `(variable, observed value)`.
pub type Seq = Vec<(usize, bool)>;

pub struct Model {
    pub n: usize,
    pub prior: Vec<Rational>,
    pub alpha: Vec<Rational>,
}

impl Model {
    pub fn uniform(n: usize, alpha: Rational) -> Self {
        Self { n, prior: vec![half(); n], alpha: vec![alpha; n] }
    }

    fn value(a: u32, i: usize) -> bool {
        (a >> i) & 1 == 1
    }

    /// `Pr(A) · Pr(seq | A)`, multiplying one factor per observation.
    pub fn joint(&self, a: u32, seq: &[(usize, bool)]) -> Rational {
        let mut w = int(1);
        for i in 0..self.n {
            w *= if Self::value(a, i) { self.prior[i].clone() } else { int(1) - &self.prior[i] };
        }
        for &(i, b) in seq {
            w *= if Self::value(a, i) == b { half() + &self.alpha[i] } else { half() - &self.alpha[i] };
        }
        w
    }

    pub fn evidence(&self, seq: &[(usize, bool)]) -> Rational {
        (0..1u32 << self.n).map(|a| self.joint(a, seq)).sum()
    }

    pub fn posterior(&self, tt: &TruthTable, seq: &[(usize, bool)]) -> Rational {
        let sat: Rational = (0..1u32 << self.n).filter(|&a| tt.get(a)).map(|a| self.joint(a, seq)).sum();
        sat / self.evidence(seq)
    }

    /// Every ordered sequence of length `k`.
    pub fn sequences(&self, k: u32) -> Vec<Seq> {
        let mut out = vec![Vec::new()];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|s| {
                    (0..self.n).flat_map(move |i| {
                        let s = s.clone();
                        [true, false].into_iter().map(move |b| {
                            let mut t = s.clone();
                            t.push((i, b));
                            t
                        })
                    })
                })
                .collect();
        }
        out
    }
}

fn final_value(p: &Rational, g: &Rational, b: &Rational) -> Rational {
    let t = p * g + (int(1) - p) * b;
    let f = (int(1) - p) * g + p * b;
    Rational::zero().max(t).max(f)
}

/// Optimal expected payoff by full expansion of the game tree over ordered histories.
pub fn game_tree_value(tt: &TruthTable, m: &Model, k: u32, g: &Rational, b: &Rational) -> Rational {
    fn go(tt: &TruthTable, m: &Model, seq: &mut Seq, left: u32, g: &Rational, b: &Rational) -> Rational {
        if left == 0 {
            return final_value(&m.posterior(tt, seq), g, b);
        }
        let here = m.evidence(seq);
        let mut best: Option<Rational> = None;
        for i in 0..m.n {
            let mut v = Rational::zero();
            for obs in [true, false] {
                seq.push((i, obs));
                let p = m.evidence(seq) / &here;
                v += p * go(tt, m, seq, left - 1, g, b);
                seq.pop();
            }
            best = Some(best.map_or(v.clone(), |x: Rational| x.max(v)));
        }
        best.expect("n >= 1")
    }
    go(tt, m, &mut Vec::new(), k, g, b)
}

/// Expected payoff of "test `order[t]` at step t, then guess by best action".
pub fn fixed_order_value(tt: &TruthTable, m: &Model, order: &[usize], g: &Rational, b: &Rational) -> Rational {
    let mut total = Rational::zero();
    for bits in 0..1u32 << order.len() {
        let seq: Seq = order.iter().enumerate().map(|(t, &i)| (i, (bits >> t) & 1 == 1)).collect();
        total += m.evidence(&seq) * final_value(&m.posterior(tt, &seq), g, b);
    }
    total
}

/// Best `|Pr(φ | S) − 1/2|` over all `(2n)^k` ordered sequences, contradictory ones included.
pub fn brute_force_certainty(tt: &TruthTable, m: &Model, k: u32) -> Rational {
    m.sequences(k).iter().map(|s| (m.posterior(tt, s) - half()).abs()).max().expect("nonempty")
}

// ---------------------------------------------------------------------------
// Vertex enumeration
// ---------------------------------------------------------------------------

/// Solves the square system `rows · x = rhs`; `None` if singular.
pub fn solve_square(rows: &[Vec<Rational>], rhs: &[Rational]) -> Option<Vec<Rational>> {
    let n = rows.len();
    let mut a: Vec<Vec<Rational>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, v)| {
            let mut row = r.clone();
            row.push(v.clone());
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x /= &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, p) in a[r].iter_mut().zip(&pivot_row).skip(col) {
                    *x -= &f * p;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n].clone()).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Every vertex of the feasible region (rows plus bounds) of a bounded LP.
pub fn vertices(lp: &LinearProgram) -> Vec<Vec<Rational>> {
    let n = lp.num_vars();
    let mut rows: Vec<Constraint> = lp.constraints.clone();
    rows.extend(lp.bound_rows());
    let mut out: Vec<Vec<Rational>> = Vec::new();
    for active in combinations(rows.len(), n) {
        let a: Vec<Vec<Rational>> = active.iter().map(|&r| rows[r].coeffs.clone()).collect();
        let b: Vec<Rational> = active.iter().map(|&r| rows[r].rhs.clone()).collect();
        if let Some(x) = solve_square(&a, &b) {
            if rows.iter().all(|c| c.holds(&x)) && !out.contains(&x) {
                out.push(x);
            }
        }
    }
    out
}

/// Optimal value over the vertices, or `None` when the region is empty.
pub fn vertex_optimum(lp: &LinearProgram) -> Option<Rational> {
    let vals = vertices(lp).into_iter().map(|x| lp.objective_value(&x));
    match lp.sense {
        Sense::Minimize => vals.min(),
        Sense::Maximize => vals.max(),
    }
}

/// The conflict LP of `A` built directly from its definition: variables
/// `c_1..c_n, m`; one row per assignment `B` with `φ(B) ≠ φ(A)`.
pub fn conflict_lp_by_definition(tt: &TruthTable, a: u32) -> LinearProgram {
    let n = tt.num_vars();
    let mut obj = vec![Rational::zero(); n + 1];
    obj[n] = int(1);
    let mut lp = LinearProgram::new(Sense::Minimize, obj);
    for b in 0..tt.size() {
        if tt.get(b) != tt.get(a) {
            let mut row: Vec<Rational> = (0..n).map(|i| int((((a ^ b) >> i) & 1 == 0) as i64)).collect();
            row.push(int(-1));
            lp.constrain(row, Relation::Le, Rational::zero());
        }
    }
    let mut sum = vec![int(1); n];
    sum.push(Rational::zero());
    lp.constrain(sum, Relation::Eq, int(1));
    lp.set_upper(n, int(1));
    lp
}

/// Assignments whose only conflicting assignment is their complement.
pub fn vacuous(tt: &TruthTable, a: u32) -> bool {
    let all = tt.size() - 1;
    (0..tt.size()).all(|b| tt.get(b) == tt.get(a) || b == a ^ all)
}

/// Vertex-enumeration facts about `L_A`: its minimum and whether its optimal
/// face has a point with every `c_j > 0` (the barycenter of the optimal vertices).
pub fn conflict_facts(tt: &TruthTable, a: u32) -> (Rational, bool) {
    let lp = conflict_lp_by_definition(tt, a);
    let vs = vertices(&lp);
    let n = tt.num_vars();
    let min = vs.iter().map(|x| x[n].clone()).min().expect("L_A is feasible");
    let opt: Vec<&Vec<Rational>> = vs.iter().filter(|x| x[n] == min).collect();
    let count = int(opt.len() as i64);
    let positive = (0..n).all(|j| {
        let mean: Rational = opt.iter().map(|x| x[j].clone()).sum::<Rational>() / &count;
        mean.is_positive()
    });
    (min, positive)
}

pub fn r(num: i64, den: i64) -> Rational {
    frac(num, den)
}
