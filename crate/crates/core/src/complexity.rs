//! Optimal test-outcome sequences and `(D, q, α)`-test complexity.
//!
//! An observation of `v_i ≈ T` and one of `v_i ≈ F` cancel in the posterior, so
//! a length-`k` sequence behaves like a contradiction-free profile of length
//! `k`, `k − 2`, …. The best certainty at `k` is therefore the best over
//! contradiction-free profiles of those lengths, which is what the scan below
//! enumerates (polarity is forced to `T` for untested variables).

use std::collections::BTreeMap;

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{enumerate_truth_tables, TruthTable};
use crate::prob::{certainty, AccuracyVector, BeliefModel, OutcomeCounts, ProductPrior};
use crate::rational::{fmt_rational, half, Rational};

pub const DEFAULT_K_MAX: u32 = 64;
/// Cap on contradiction-free profiles enumerated for one length.
pub const DEFAULT_PROFILE_CAP: u128 = 20_000_000;

#[derive(Debug, Clone)]
pub struct ComplexitySpec {
    pub tt: TruthTable,
    pub model: BeliefModel,
    pub q: Rational,
    pub k_max: u32,
}

impl ComplexitySpec {
    pub fn new(tt: TruthTable, prior: ProductPrior, alpha: AccuracyVector, q: Rational, k_max: u32) -> Result<Self> {
        let n = tt.num_vars();
        for got in [prior.len(), alpha.len()] {
            if got != n {
                return Err(Error::DimensionMismatch { expected: n, got });
            }
        }
        check_q(&q)?;
        Ok(Self { tt, model: BeliefModel::new(prior, alpha)?, q, k_max })
    }

    pub fn uniform(tt: TruthTable, alpha: Rational, q: Rational) -> Result<Self> {
        let n = tt.num_vars();
        Self::new(tt, ProductPrior::uniform(n), AccuracyVector::uniform(n, alpha)?, q, DEFAULT_K_MAX)
    }
}

fn check_q(q: &Rational) -> Result<()> {
    if *q <= Rational::zero() || *q > half() {
        return Err(Error::invalid(format!("threshold q must satisfy 0 < q <= 1/2, got {}", fmt_rational(q))));
    }
    Ok(())
}

/// Best certainty `|Pr(φ | S) − 1/2|` over sequences of length `k`, with the
/// reduced profiles attaining it (each of length `k`, `k − 2`, …).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimalSequenceSet {
    pub k: u32,
    #[serde(with = "crate::rational::serde_rational")]
    pub certainty: Rational,
    pub members: Vec<OutcomeCounts>,
}

fn profile_count(n: usize, len: u32) -> u128 {
    if len == 0 {
        return 1;
    }
    // Σ_j C(n, j) · C(len − 1, j − 1) · 2^j
    let choose = |a: u128, b: u128| -> u128 {
        if b > a {
            return 0;
        }
        let mut r: u128 = 1;
        for i in 0..b {
            r = r.saturating_mul(a - i) / (i + 1);
        }
        r
    };
    (1..=n as u128)
        .map(|j| choose(n as u128, j).saturating_mul(choose(len as u128 - 1, j - 1)).saturating_mul(1u128 << j))
        .fold(0u128, |a, b| a.saturating_add(b))
}

/// Calls `f` on every contradiction-free profile of total length `len`.
fn for_each_profile(n: usize, len: u32, f: &mut impl FnMut(&OutcomeCounts)) {
    fn rec(i: usize, left: u32, pairs: &mut Vec<(u32, u32)>, f: &mut impl FnMut(&OutcomeCounts)) {
        let n = pairs.len();
        if i + 1 == n {
            let options: &[(u32, u32)] = if left == 0 { &[(0, 0)] } else { &[(left, 0), (0, left)] };
            for &p in options {
                pairs[i] = p;
                f(&OutcomeCounts::from_pairs(pairs.clone()));
            }
            return;
        }
        for c in 0..=left {
            let options: Vec<(u32, u32)> = if c == 0 { vec![(0, 0)] } else { vec![(c, 0), (0, c)] };
            for p in options {
                pairs[i] = p;
                rec(i + 1, left - c, pairs, f);
            }
        }
    }
    if n == 0 {
        if len == 0 {
            f(&OutcomeCounts::empty(0));
        }
        return;
    }
    rec(0, len, &mut vec![(0, 0); n], f);
}

/// Best certainty over contradiction-free profiles of exactly `len` tests.
fn best_exact(tt: &TruthTable, model: &BeliefModel, len: u32, cap: u128) -> Result<(Rational, Vec<OutcomeCounts>)> {
    let n = tt.num_vars();
    let needed = profile_count(n, len);
    if needed > cap {
        return Err(Error::ResourceCap { what: "outcome profiles", needed, cap });
    }
    if n == 0 && len > 0 {
        return Ok((Rational::from_integer((-1).into()), Vec::new()));
    }
    let mut best: Option<Rational> = None;
    let mut members = Vec::new();
    for_each_profile(n, len, &mut |c| {
        let p = model.posterior_formula(tt, c).expect("sized profile");
        let v = certainty(&p);
        match best.as_ref().map(|b| v.cmp(b)) {
            None | Some(std::cmp::Ordering::Greater) => {
                best = Some(v);
                members = vec![c.clone()];
            }
            Some(std::cmp::Ordering::Equal) => members.push(c.clone()),
            Some(std::cmp::Ordering::Less) => {}
        }
    });
    Ok((best.expect("at least one profile"), members))
}

/// Incremental scan producing the optimal sequence set for `k = 0, 1, 2, …`.
pub struct CertaintyScan<'a> {
    tt: &'a TruthTable,
    model: &'a BeliefModel,
    cap: u128,
    next_k: u32,
    back: [Option<OptimalSequenceSet>; 2],
}

impl<'a> CertaintyScan<'a> {
    pub fn new(tt: &'a TruthTable, model: &'a BeliefModel) -> Self {
        Self::with_cap(tt, model, DEFAULT_PROFILE_CAP)
    }

    pub fn with_cap(tt: &'a TruthTable, model: &'a BeliefModel, cap: u128) -> Self {
        Self { tt, model, cap, next_k: 0, back: [None, None] }
    }

    pub fn next_set(&mut self) -> Result<OptimalSequenceSet> {
        let k = self.next_k;
        let (v, mut members) = best_exact(self.tt, self.model, k, self.cap)?;
        let set = match self.back[0].take() {
            Some(prev) if prev.certainty > v => OptimalSequenceSet { k, ..prev },
            Some(prev) if prev.certainty == v => {
                let mut all = prev.members;
                all.append(&mut members);
                all.sort();
                OptimalSequenceSet { k, certainty: v, members: all }
            }
            _ => OptimalSequenceSet { k, certainty: v, members },
        };
        self.back[0] = self.back[1].take();
        self.back[1] = Some(set.clone());
        self.next_k += 1;
        Ok(set)
    }
}

pub fn max_certainty(tt: &TruthTable, model: &BeliefModel, k: u32) -> Result<OptimalSequenceSet> {
    if model.num_vars() != tt.num_vars() {
        return Err(Error::DimensionMismatch { expected: tt.num_vars(), got: model.num_vars() });
    }
    let mut scan = CertaintyScan::new(tt, model);
    let mut last = scan.next_set()?;
    for _ in 0..k {
        last = scan.next_set()?;
    }
    Ok(last)
}

/// Least budget at which some strategy has positive expected payoff at threshold `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "k", rename_all = "lowercase")]
pub enum Complexity {
    Finite(u32),
    /// No budget up to the cap works.
    Unbounded(u32),
}

impl std::fmt::Display for Complexity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Complexity::Finite(k) => write!(f, "{k}"),
            Complexity::Unbounded(k) => write!(f, ">{k}"),
        }
    }
}

/// Least `k ≤ k_max` whose best certainty strictly exceeds `q`.
pub fn test_complexity(spec: &ComplexitySpec) -> Result<Complexity> {
    check_q(&spec.q)?;
    let mut scan = CertaintyScan::new(&spec.tt, &spec.model);
    for k in 0..=spec.k_max {
        if scan.next_set()?.certainty > spec.q {
            return Ok(Complexity::Finite(k));
        }
    }
    Ok(Complexity::Unbounded(spec.k_max))
}

/// Best certainty for every `k` in `0..=k_max`.
pub fn certainty_curve(tt: &TruthTable, model: &BeliefModel, k_max: u32) -> Result<Vec<Rational>> {
    let mut scan = CertaintyScan::new(tt, model);
    (0..=k_max).map(|_| scan.next_set().map(|s| s.certainty)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableComplexity {
    pub table: String,
    pub cpl: Complexity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CplCount {
    pub cpl: Complexity,
    pub tables: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct XorReport {
    pub schema_version: u32,
    pub n: usize,
    #[serde(with = "crate::rational::serde_rational")]
    pub alpha: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub q: Rational,
    pub k_max: u32,
    pub xor_cpl: Complexity,
    pub not_xor_cpl: Complexity,
    /// Number of tables per `cpl` value, ascending.
    pub distribution: Vec<CplCount>,
    /// Tables whose complexity exceeds that of XOR.
    pub violations: Vec<String>,
    pub holds: bool,
    pub tables: Vec<TableComplexity>,
}

/// Computes `cpl` for every `n`-variable table under the uniform prior and
/// checks that `XOR_n` and its negation attain the maximum.
pub fn xor_maximality_check(n: usize, alpha: &Rational, q: &Rational, k_max: u32, jobs: usize) -> Result<XorReport> {
    check_q(q)?;
    if n > 4 {
        return Err(Error::TooManyVars { got: n, limit: 4 });
    }
    let model = BeliefModel::uniform(n, alpha.clone())?;
    let tables: Vec<TruthTable> = enumerate_truth_tables(n)?.collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let cpls: Vec<Complexity> = pool.install(|| {
        tables
            .par_iter()
            .map(|tt| {
                let spec = ComplexitySpec { tt: tt.clone(), model: model.clone(), q: q.clone(), k_max };
                test_complexity(&spec)
            })
            .collect::<Result<_>>()
    })?;
    let xor = TruthTable::xor_all(n)?;
    let at = |t: &TruthTable| cpls[t.as_u64().expect("small table") as usize];
    let (xor_cpl, not_xor_cpl) = (at(&xor), at(&xor.complement()));
    let mut distribution = BTreeMap::new();
    let mut violations = Vec::new();
    for (tt, c) in tables.iter().zip(&cpls) {
        *distribution.entry(*c).or_insert(0u64) += 1;
        if *c > xor_cpl || *c > not_xor_cpl {
            violations.push(tt.to_hex());
        }
    }
    Ok(XorReport {
        schema_version: crate::ri::SCHEMA_VERSION,
        n,
        alpha: alpha.clone(),
        q: q.clone(),
        k_max,
        xor_cpl,
        not_xor_cpl,
        holds: violations.is_empty() && xor_cpl == not_xor_cpl,
        distribution: distribution.into_iter().map(|(cpl, tables)| CplCount { cpl, tables }).collect(),
        violations,
        tables: tables.iter().zip(cpls).map(|(t, cpl)| TableComplexity { table: t.to_hex(), cpl }).collect(),
    })
}
