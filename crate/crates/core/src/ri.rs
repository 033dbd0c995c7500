//! Conflict LPs and the LP-based sufficient condition for rational inattention.
//!
//! For a formula `φ` and assignment `A`, the conflict LP `L_A(φ)` minimizes the
//! max-power `m` over mixtures `c` (one weight per variable, summing to 1):
//! every assignment `B` with `φ(B) ≠ φ(A)` contributes a row
//! `Σ_{i: A_i = B_i} c_i ≤ m`. LP variables are laid out as `c_1 … c_n, m`.
//!
//! A formula is certified at margin `C` when
//!
//! 1. the inattentive LPs `L⁺_{A,i,j}` (`c_j = 0`, `c_i ≥ C`, `v_i ≤_φ v_j`) reach the
//!    minimax power `MIN*(φ)` (their minimum is `m⁺_C`),
//! 2. every region `T⁻_{A,i}` of points with `m ≤ m⁺_C`, `c_j < C` on
//!    `I_i = {j : v_j ≤_φ v_i}` and `c_j > 0` elsewhere is empty.
//!
//! The `T⁻` regions cover the optimal points that have some zero coordinate.
//! Optimal points with every coordinate positive also violate the property
//! being certified, so `ExhibitsRI` additionally requires that no relevant
//! conflict LP has a strictly positive optimal mixture. Vacuous conflict LPs,
//! whose only conflicting assignment is the antipode `¬A` (every mixture is
//! optimal), are exempt from that check. A formula that passes 1 and 2 but
//! fails it is reported through [`RiVerdict::positive_optimum_c`] and stays
//! `Unknown`. Constant formulas have no conflicting assignments and are always
//! `Unknown`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{npn_orbits, Assignment, TruthTable};
use crate::lp::{
    nonstrict_region_empty, strict_interior_nonempty, LinearProgram, LpStatus, Relation, Sense, StrictConstraint,
    StrictRelation,
};
use crate::rational::{fmt_rational, frac, int, Rational};

pub const SCHEMA_VERSION: u32 = 1;

/// How the strict inequalities of `T⁻` are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TMinusMode {
    /// `c_j < C`, `c_j > 0`: emptiness of the strict region.
    #[default]
    Strict,
    /// `c_j ≤ C`, `c_j ≥ 0`: emptiness of the closure.
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RiParams {
    /// Margins to try, largest first.
    pub c_grid: Vec<Rational>,
    pub mode: TMinusMode,
}

impl RiParams {
    /// `{1/(2n), 1/(4n), 1/(8n), 1/(16n)}` with strict `T⁻`.
    pub fn default_for(num_vars: usize) -> Self {
        let n = num_vars.max(1) as i64;
        Self::new([2, 4, 8, 16].iter().map(|d| frac(1, d * n)).collect(), TMinusMode::Strict)
    }

    pub fn new(mut c_grid: Vec<Rational>, mode: TMinusMode) -> Self {
        c_grid.sort_by(|a, b| b.cmp(a));
        c_grid.dedup();
        Self { c_grid, mode }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_grid.is_empty() {
            return Err(Error::invalid("C grid is empty"));
        }
        if self.c_grid.iter().any(|c| !c.is_positive()) {
            return Err(Error::invalid("every C must be positive"));
        }
        Ok(())
    }
}

fn check_assignment(tt: &TruthTable, a: &Assignment) -> Result<()> {
    if a.num_vars() != tt.num_vars() {
        return Err(Error::DimensionMismatch { expected: tt.num_vars(), got: a.num_vars() });
    }
    Ok(())
}

/// Agreement masks `¬(A ⊕ B)` of every conflicting `B`, in `B` order.
fn agreement_masks(tt: &TruthTable, a: u32) -> Vec<u32> {
    let full = (1u32 << tt.num_vars()) - 1;
    let fa = tt.get(a);
    (0..tt.size()).filter(|&b| tt.get(b) != fa).map(|b| !(a ^ b) & full).collect()
}

/// Drops masks contained in another mask; their rows are implied.
fn maximal_masks(mut masks: Vec<u32>) -> Vec<u32> {
    masks.sort_unstable();
    masks.dedup();
    let keep: Vec<u32> = masks.iter().copied().filter(|&m| !masks.iter().any(|&o| o != m && o & m == m)).collect();
    keep
}

fn lp_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("c{i}")).chain(std::iter::once("m".to_string())).collect()
}

fn unit_row(n: usize, j: usize) -> Vec<Rational> {
    (0..=n).map(|k| int((k == j) as i64)).collect()
}

fn build_conflict_lp(n: usize, masks: &[u32]) -> LinearProgram {
    let mut obj = vec![Rational::zero(); n + 1];
    obj[n] = int(1);
    let mut lp = LinearProgram::new(Sense::Minimize, obj).with_names(lp_names(n));
    for &mask in masks {
        let mut row: Vec<Rational> = (0..n).map(|i| int(((mask >> i) & 1) as i64)).collect();
        row.push(int(-1));
        lp.constrain(row, Relation::Le, Rational::zero());
    }
    let mut sum: Vec<Rational> = vec![int(1); n];
    sum.push(Rational::zero());
    lp.constrain(sum, Relation::Eq, int(1));
    lp.set_bounds(n, Some(int(0)), Some(int(1)));
    lp
}

/// `L_A(φ)`: one row per conflicting assignment `B` (duplicates kept).
pub fn conflict_lp(tt: &TruthTable, a: &Assignment) -> Result<LinearProgram> {
    check_assignment(tt, a)?;
    Ok(build_conflict_lp(tt.num_vars(), &agreement_masks(tt, a.bits())))
}

/// `max_{B: φ(B)≠φ(A)} Σ_{i: A_i = B_i} c_i`, or 0 without conflicting assignments.
pub fn maxpower(tt: &TruthTable, a: &Assignment, c: &[Rational]) -> Result<Rational> {
    check_assignment(tt, a)?;
    if c.len() != tt.num_vars() {
        return Err(Error::DimensionMismatch { expected: tt.num_vars(), got: c.len() });
    }
    Ok(agreement_masks(tt, a.bits())
        .into_iter()
        .map(|mask| (0..c.len()).filter(|i| (mask >> i) & 1 == 1).map(|i| c[i].clone()).sum())
        .max()
        .unwrap_or_else(Rational::zero))
}

fn admissible(rel: &[u64], i: usize, j: usize) -> bool {
    i != j && rel[i] <= rel[j]
}

/// `L⁺_{A,i,j}(φ, C) = L_A(φ) ∪ {c_j = 0, c_i ≥ C}`; requires `i ≠ j` and `v_i ≤_φ v_j`.
pub fn inattentive_lp(tt: &TruthTable, a: &Assignment, i: usize, j: usize, c: &Rational) -> Result<LinearProgram> {
    check_assignment(tt, a)?;
    let n = tt.num_vars();
    for k in [i, j] {
        if k >= n {
            return Err(Error::VarOutOfRange { index: k, num_vars: n });
        }
    }
    if !admissible(&tt.relevance_counts(), i, j) {
        return Err(Error::invalid(format!(
            "pair (v{}, v{}) is not admissible: need i != j and v{} <= v{} in relevance",
            i + 1,
            j + 1,
            i + 1,
            j + 1
        )));
    }
    let mut lp = conflict_lp(tt, a)?;
    add_inattention(&mut lp, n, i, j, c);
    Ok(lp)
}

fn add_inattention(lp: &mut LinearProgram, n: usize, i: usize, j: usize, c: &Rational) {
    lp.constrain(unit_row(n, j), Relation::Eq, Rational::zero());
    lp.constrain(unit_row(n, i), Relation::Ge, c.clone());
}

/// Per-formula cache of relevance counts, reduced conflict rows and LP minima.
struct Analyzer<'a> {
    tt: &'a TruthTable,
    n: usize,
    rel: Vec<u64>,
    masks: Vec<Vec<u32>>,
    minima: Vec<Rational>,
}

impl<'a> Analyzer<'a> {
    fn new(tt: &'a TruthTable) -> Self {
        let n = tt.num_vars();
        let masks: Vec<Vec<u32>> = (0..tt.size()).map(|a| maximal_masks(agreement_masks(tt, a))).collect();
        let minima = masks
            .iter()
            .map(|m| build_conflict_lp(n, m).solve().value.expect("conflict LPs are feasible and bounded"))
            .collect();
        Self { tt, n, rel: tt.relevance_counts(), masks, minima }
    }

    fn min_star(&self) -> Rational {
        self.minima.iter().min().cloned().unwrap_or_else(Rational::zero)
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (0..self.n).map(move |j| (i, j))).filter(|&(i, j)| admissible(&self.rel, i, j))
    }

    fn inattentive_min(&self, a: u32, i: usize, j: usize, c: &Rational) -> Option<Rational> {
        let mut lp = build_conflict_lp(self.n, &self.masks[a as usize]);
        add_inattention(&mut lp, self.n, i, j, c);
        let sol = lp.solve();
        (sol.status == LpStatus::Optimal).then(|| sol.value.expect("optimal"))
    }

    fn m_plus(&self, c: &Rational) -> Option<Rational> {
        let mut best: Option<Rational> = None;
        for a in 0..self.tt.size() {
            if best.as_ref().is_some_and(|b| self.minima[a as usize] >= *b) {
                continue;
            }
            for (i, j) in self.pairs() {
                if let Some(v) = self.inattentive_min(a, i, j, c) {
                    if best.as_ref().is_none_or(|b| v < *b) {
                        best = Some(v);
                    }
                }
            }
        }
        best
    }

    /// True iff some relevant assignment and pair reach `MIN*`, i.e. `m⁺_C = MIN*`.
    fn m_plus_reaches(&self, c: &Rational, min_star: &Rational) -> bool {
        (0..self.tt.size())
            .filter(|&a| self.minima[a as usize] == *min_star)
            .any(|a| self.pairs().any(|(i, j)| self.inattentive_min(a, i, j, c).as_ref() == Some(min_star)))
    }

    fn class_of(&self, i: usize) -> Vec<bool> {
        (0..self.n).map(|j| self.rel[j] <= self.rel[i]).collect()
    }

    fn t_minus_empty(&self, a: u32, in_class: &[bool], c: &Rational, m_plus: &Rational, mode: TMinusMode) -> bool {
        if self.minima[a as usize] > *m_plus {
            return true;
        }
        let n = self.n;
        let mut base = build_conflict_lp(n, &self.masks[a as usize]);
        if *m_plus < int(1) {
            base.set_upper(n, m_plus.clone());
        }
        match mode {
            TMinusMode::Strict => {
                let strict: Vec<StrictConstraint> = (0..n)
                    .map(|j| {
                        if in_class[j] {
                            StrictConstraint { coeffs: unit_row(n, j), relation: StrictRelation::Lt, rhs: c.clone() }
                        } else {
                            StrictConstraint {
                                coeffs: unit_row(n, j),
                                relation: StrictRelation::Gt,
                                rhs: Rational::zero(),
                            }
                        }
                    })
                    .collect();
                !strict_interior_nonempty(&base, &strict)
            }
            TMinusMode::Closed => {
                for (j, &inside) in in_class.iter().enumerate() {
                    if inside {
                        base.constrain(unit_row(n, j), Relation::Le, c.clone());
                    }
                }
                nonstrict_region_empty(&base)
            }
        }
    }

    /// Distinct `I_i` sets with a representative index.
    fn classes(&self) -> Vec<(usize, Vec<bool>)> {
        let mut seen = BTreeSet::new();
        (0..self.n)
            .filter_map(|i| {
                let cls = self.class_of(i);
                seen.insert(cls.clone()).then_some((i, cls))
            })
            .collect()
    }

    /// The only conflicting assignment is `¬A`, so every mixture has max-power 0.
    fn vacuous(&self, a: u32) -> bool {
        self.masks[a as usize] == [0]
    }

    /// Some optimal point of `L_A` has every `c_j > 0`.
    fn positive_optimum(&self, a: u32, min_star: &Rational) -> bool {
        let n = self.n;
        let mut base = build_conflict_lp(n, &self.masks[a as usize]);
        base.set_upper(n, min_star.clone());
        let strict: Vec<StrictConstraint> = (0..n)
            .map(|j| StrictConstraint { coeffs: unit_row(n, j), relation: StrictRelation::Gt, rhs: Rational::zero() })
            .collect();
        strict_interior_nonempty(&base, &strict)
    }

    /// Relevant, non-vacuous assignments whose conflict LP has a strictly positive optimum.
    fn positive_optima(&self, min_star: &Rational) -> Vec<u32> {
        (0..self.tt.size())
            .filter(|&a| self.minima[a as usize] == *min_star && !self.vacuous(a))
            .filter(|&a| self.positive_optimum(a, min_star))
            .collect()
    }

    fn all_t_minus_empty(&self, c: &Rational, m_plus: &Rational, mode: TMinusMode) -> bool {
        let classes = self.classes();
        (0..self.tt.size()).all(|a| classes.iter().all(|(_, cls)| self.t_minus_empty(a, cls, c, m_plus, mode)))
    }
}

/// `MIN*(φ)` and the relevant assignments attaining it.
pub fn minimax_power(tt: &TruthTable) -> (Rational, Vec<Assignment>) {
    let an = Analyzer::new(tt);
    let ms = an.min_star();
    let relevant = Assignment::all(tt.num_vars()).filter(|a| an.minima[a.bits() as usize] == ms).collect();
    (ms, relevant)
}

/// `m⁺_C = min_{A,i,j} MIN(L⁺_{A,i,j}(φ, C))`; `None` without admissible feasible pairs.
pub fn m_plus(tt: &TruthTable, c: &Rational) -> Option<Rational> {
    Analyzer::new(tt).m_plus(c)
}

/// Emptiness of `T⁻_{A,i}(φ, C, m⁺)`.
pub fn t_minus_empty(
    tt: &TruthTable,
    a: &Assignment,
    i: usize,
    c: &Rational,
    m_plus: &Rational,
    mode: TMinusMode,
) -> Result<bool> {
    check_assignment(tt, a)?;
    if i >= tt.num_vars() {
        return Err(Error::VarOutOfRange { index: i, num_vars: tt.num_vars() });
    }
    let an = Analyzer::new(tt);
    let cls = an.class_of(i);
    Ok(an.t_minus_empty(a.bits(), &cls, c, m_plus, mode))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    ExhibitsRI,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InattentiveMin {
    pub assignment: String,
    pub i: usize,
    pub j: usize,
    #[serde(with = "crate::rational::serde_rational::opt")]
    pub min: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TMinusCheck {
    pub assignment: String,
    pub i: usize,
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictMin {
    pub assignment: String,
    #[serde(with = "crate::rational::serde_rational")]
    pub min: Rational,
}

/// Per-LP detail for one margin `C` (variable indices are one-based here).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(with = "crate::rational::serde_rational")]
    pub c: Rational,
    pub conflict: Vec<ConflictMin>,
    pub inattentive: Vec<InattentiveMin>,
    pub t_minus: Vec<TMinusCheck>,
    /// Relevant non-vacuous assignments with a strictly positive optimal mixture.
    pub positive_optima: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiVerdict {
    pub verdict: Verdict,
    #[serde(with = "crate::rational::serde_rational::opt")]
    pub witness_c: Option<Rational>,
    #[serde(with = "crate::rational::serde_rational::opt")]
    pub m_plus: Option<Rational>,
    #[serde(with = "crate::rational::serde_rational")]
    pub min_star: Rational,
    /// Margin at which the `m⁺`/`T⁻` test passed although some relevant
    /// conflict LP has a strictly positive optimal mixture.
    #[serde(with = "crate::rational::serde_rational::opt")]
    pub positive_optimum_c: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostics: Option<Diagnostics>,
}

impl RiVerdict {
    pub fn exhibits_ri(&self) -> bool {
        self.verdict == Verdict::ExhibitsRI
    }
}

/// Runs the LP sufficient condition over the margins in `params.c_grid`.
pub fn exhibits_ri(tt: &TruthTable, params: &RiParams) -> RiVerdict {
    analyze(tt, params, false)
}

/// As [`exhibits_ri`], also recording every LP minimum and region test for the
/// witness margin (or the first margin when there is none).
pub fn exhibits_ri_explained(tt: &TruthTable, params: &RiParams) -> RiVerdict {
    analyze(tt, params, true)
}

fn analyze(tt: &TruthTable, params: &RiParams, explain: bool) -> RiVerdict {
    let an = Analyzer::new(tt);
    let min_star = an.min_star();
    let mut out = RiVerdict {
        verdict: Verdict::Unknown,
        witness_c: None,
        m_plus: None,
        min_star: min_star.clone(),
        positive_optimum_c: None,
        diagnostics: None,
    };
    if !tt.is_constant() {
        for c in &params.c_grid {
            if !an.m_plus_reaches(c, &min_star) {
                continue;
            }
            if !an.all_t_minus_empty(c, &min_star, params.mode) {
                continue;
            }
            out.m_plus = Some(min_star.clone());
            if an.positive_optima(&min_star).is_empty() {
                out.verdict = Verdict::ExhibitsRI;
                out.witness_c = Some(c.clone());
            } else {
                out.positive_optimum_c = Some(c.clone());
            }
            break;
        }
    }
    if explain {
        let c =
            out.witness_c.clone().or_else(|| out.positive_optimum_c.clone()).or_else(|| params.c_grid.first().cloned());
        if let Some(c) = c {
            out.diagnostics = Some(diagnose(&an, &c, params.mode));
            if out.m_plus.is_none() {
                out.m_plus = an.m_plus(&c);
            }
        }
    }
    out
}

fn diagnose(an: &Analyzer<'_>, c: &Rational, mode: TMinusMode) -> Diagnostics {
    let n = an.n;
    let name = |a: u32| Assignment::new(n, a).expect("in range").to_string();
    let conflict =
        (0..an.tt.size()).map(|a| ConflictMin { assignment: name(a), min: an.minima[a as usize].clone() }).collect();
    let mut inattentive = Vec::new();
    for a in 0..an.tt.size() {
        for (i, j) in an.pairs() {
            inattentive.push(InattentiveMin {
                assignment: name(a),
                i: i + 1,
                j: j + 1,
                min: an.inattentive_min(a, i, j, c),
            });
        }
    }
    let mp = an.m_plus(c);
    let mut t_minus = Vec::new();
    if let Some(mp) = &mp {
        for a in 0..an.tt.size() {
            for i in 0..n {
                let cls = an.class_of(i);
                t_minus.push(TMinusCheck {
                    assignment: name(a),
                    i: i + 1,
                    empty: an.t_minus_empty(a, &cls, c, mp, mode),
                });
            }
        }
    }
    let positive_optima = an.positive_optima(&an.min_star()).into_iter().map(name).collect();
    Diagnostics { c: c.clone(), conflict, inattentive, t_minus, positive_optima }
}

// ---------------------------------------------------------------------------
// Census and sampling
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusParams {
    pub c_grid: Vec<String>,
    pub mode: TMinusMode,
    pub symmetry: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub fraction: f64,
    pub lower: f64,
    pub upper: f64,
    /// Worst-case (p = 1/2) half-width `z·sqrt(1/(4N))`.
    pub worst_case_half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableVerdict {
    pub table: String,
    pub ri: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunStats {
    pub runtime_ms: u64,
    pub jobs: usize,
    pub evaluated: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub schema_version: u32,
    pub n: usize,
    pub total: u64,
    pub ri: u64,
    pub unknown: u64,
    /// Unknown tables that passed the `m⁺`/`T⁻` test but have a strictly positive optimum.
    pub positive_optimum: u64,
    pub params: CensusParams,
    pub mode: TMinusMode,
    /// Witness margin → number of RI tables certified at it.
    pub witness_histogram: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ci: Option<ConfidenceInterval>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub verdicts: Option<Vec<TableVerdict>>,
    #[serde(default)]
    pub stats: RunStats,
}

impl CensusReport {
    /// The report with run statistics cleared, for determinism comparisons.
    pub fn without_stats(&self) -> Self {
        Self { stats: RunStats::default(), ..self.clone() }
    }

    pub fn csv_row(&self) -> (usize, u64, u64) {
        (self.n, self.ri, self.unknown)
    }
}

#[derive(Debug, Clone, Default)]
struct Tally {
    ri: u64,
    unknown: u64,
    positive_optimum: u64,
    witness: BTreeMap<String, u64>,
}

impl Tally {
    fn add(&mut self, v: &RiVerdict, weight: u64) {
        if let Some(c) = &v.witness_c {
            self.ri += weight;
            *self.witness.entry(fmt_rational(c)).or_default() += weight;
        } else {
            self.unknown += weight;
            if v.positive_optimum_c.is_some() {
                self.positive_optimum += weight;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CensusOptions {
    pub jobs: usize,
    /// Evaluate one table per permutation/negation/complement orbit (verdicts
    /// are invariant under those maps).
    pub symmetry: bool,
    pub keep_verdicts: bool,
}

impl Default for CensusOptions {
    fn default() -> Self {
        Self { jobs: 1, symmetry: true, keep_verdicts: false }
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))
}

fn census_params(params: &RiParams, symmetry: bool) -> CensusParams {
    CensusParams { c_grid: params.c_grid.iter().map(fmt_rational).collect(), mode: params.mode, symmetry }
}

/// Verdict counts over all `2^(2^n)` tables, `n ≤ 4`.
pub fn census(num_vars: usize, params: &RiParams, opts: &CensusOptions) -> Result<CensusReport> {
    params.validate()?;
    if num_vars > 4 {
        return Err(Error::TooManyVars { got: num_vars, limit: 4 });
    }
    let started = std::time::Instant::now();
    let total = 1u64 << (1u64 << num_vars);
    let pool = pool(opts.jobs)?;
    let table = |bits: u64| TruthTable::from_u64(num_vars, bits).expect("bits in range");

    let (tally, evaluated, verdicts) = if opts.symmetry {
        let orbits = npn_orbits(num_vars)?;
        let results: Vec<(u64, u64, RiVerdict)> = pool
            .install(|| orbits.par_iter().map(|&(rep, size)| (rep, size, exhibits_ri(&table(rep), params))).collect());
        let tally = results.iter().fold(Tally::default(), |mut t, (_, size, v)| {
            t.add(v, *size);
            t
        });
        let verdicts = opts.keep_verdicts.then(|| expand_orbit_verdicts(num_vars, &results));
        (tally, orbits.len() as u64, verdicts)
    } else {
        let results: Vec<RiVerdict> =
            pool.install(|| (0..total).into_par_iter().map(|bits| exhibits_ri(&table(bits), params)).collect());
        let tally = results.iter().fold(Tally::default(), |mut t, v| {
            t.add(v, 1);
            t
        });
        let verdicts = opts.keep_verdicts.then(|| {
            results
                .iter()
                .enumerate()
                .map(|(bits, v)| TableVerdict { table: table(bits as u64).to_hex(), ri: v.exhibits_ri() })
                .collect()
        });
        (tally, total, verdicts)
    };

    Ok(CensusReport {
        schema_version: SCHEMA_VERSION,
        n: num_vars,
        total,
        ri: tally.ri,
        unknown: tally.unknown,
        positive_optimum: tally.positive_optimum,
        params: census_params(params, opts.symmetry),
        mode: params.mode,
        witness_histogram: tally.witness,
        seed: None,
        ci: None,
        verdicts,
        stats: RunStats { runtime_ms: started.elapsed().as_millis() as u64, jobs: opts.jobs, evaluated },
    })
}

fn expand_orbit_verdicts(num_vars: usize, results: &[(u64, u64, RiVerdict)]) -> Vec<TableVerdict> {
    let by_rep: BTreeMap<u64, bool> = results.iter().map(|(r, _, v)| (*r, v.exhibits_ri())).collect();
    let total = 1u64 << (1u64 << num_vars);
    let canon = canonical_map(num_vars);
    (0..total)
        .map(|bits| TableVerdict {
            table: TruthTable::from_u64(num_vars, bits).expect("in range").to_hex(),
            ri: by_rep[&canon[bits as usize]],
        })
        .collect()
}

/// Orbit representative of every table, `n ≤ 4`.
fn canonical_map(num_vars: usize) -> Vec<u64> {
    let total = 1usize << (1usize << num_vars);
    let mut canon = vec![u64::MAX; total];
    let n = num_vars;
    let mut perms = Vec::new();
    permute_all(&mut (0..n).collect(), 0, &mut perms);
    let size = 1u32 << n;
    let mask = if size == 64 { u64::MAX } else { (1u64 << size) - 1 };
    for rep in 0..total as u64 {
        if canon[rep as usize] != u64::MAX {
            continue;
        }
        let t = TruthTable::from_u64(n, rep).expect("in range");
        for perm in &perms {
            let p = t.permute(perm).expect("valid permutation");
            for neg in 0..1u32 << n {
                let mut u = p.clone();
                for i in 0..n {
                    if (neg >> i) & 1 == 1 {
                        u = u.negate_input(i).expect("in range");
                    }
                }
                let bits = u.as_u64().expect("small table");
                for b in [bits, !bits & mask] {
                    if canon[b as usize] == u64::MAX {
                        canon[b as usize] = rep;
                    }
                }
            }
        }
    }
    canon
}

fn permute_all(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute_all(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Draws `samples` tables uniformly (with replacement) from a ChaCha8 stream
/// seeded with `seed`; table words are filled low word first.
pub fn sample_tables(num_vars: usize, samples: usize, seed: u64) -> Result<Vec<TruthTable>> {
    if num_vars > 10 {
        return Err(Error::TooManyVars { got: num_vars, limit: 10 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = 1usize << num_vars;
    let words = size.div_ceil(64);
    (0..samples)
        .map(|_| {
            let mut w: Vec<u64> = (0..words).map(|_| rng.gen::<u64>()).collect();
            if size < 64 {
                w[0] &= (1u64 << size) - 1;
            }
            TruthTable::from_words(num_vars, w)
        })
        .collect()
}

/// z for a two-sided 95% interval.
pub const Z95: f64 = 1.959964;

pub fn confidence_interval(successes: u64, trials: u64) -> ConfidenceInterval {
    let n = trials as f64;
    let p = successes as f64 / n;
    let half = Z95 * (p * (1.0 - p) / n).sqrt();
    ConfidenceInterval {
        fraction: p,
        lower: (p - half).max(0.0),
        upper: (p + half).min(1.0),
        worst_case_half_width: Z95 * (0.25 / n).sqrt(),
    }
}

/// Census over a seeded uniform sample of tables.
pub fn sample(
    num_vars: usize,
    samples: usize,
    seed: u64,
    params: &RiParams,
    opts: &CensusOptions,
) -> Result<CensusReport> {
    params.validate()?;
    if samples == 0 {
        return Err(Error::invalid("samples must be positive"));
    }
    let started = std::time::Instant::now();
    let tables = sample_tables(num_vars, samples, seed)?;
    let pool = pool(opts.jobs)?;
    let results: Vec<RiVerdict> = pool.install(|| tables.par_iter().map(|t| exhibits_ri(t, params)).collect());
    let tally = results.iter().fold(Tally::default(), |mut t, v| {
        t.add(v, 1);
        t
    });
    let verdicts = opts.keep_verdicts.then(|| {
        tables.iter().zip(&results).map(|(t, v)| TableVerdict { table: t.to_hex(), ri: v.exhibits_ri() }).collect()
    });
    Ok(CensusReport {
        schema_version: SCHEMA_VERSION,
        n: num_vars,
        total: samples as u64,
        ri: tally.ri,
        unknown: tally.unknown,
        positive_optimum: tally.positive_optimum,
        params: census_params(params, false),
        mode: params.mode,
        witness_histogram: tally.witness,
        seed: Some(seed),
        ci: Some(confidence_interval(tally.ri, samples as u64)),
        verdicts,
        stats: RunStats {
            runtime_ms: started.elapsed().as_millis() as u64,
            jobs: opts.jobs,
            evaluated: samples as u64,
        },
    })
}
