//! Exact posteriors over product priors with noisy variable tests.
//!
//! Every quantity here depends on a test-outcome sequence only through its
//! per-variable counts of `T` and `F` observations. The un-normalized weight of an
//! assignment `A` is `Pr(A) · Π o_i^{n⁺_i}`, where `o_i` is the odds of a correct
//! observation of `v_i` and `n⁺_i` counts observations agreeing with `A(v_i)`.

use std::fmt;

use num_traits::{Pow, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{Assignment, TruthTable};
use crate::rational::{fmt_rational, frac, half, int, Rational};

/// Independent prior, `p[i] = Pr(v_i = T)`, open-minded (`0 < p_i < 1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductPrior {
    p: Vec<Rational>,
}

impl ProductPrior {
    pub fn new(p: Vec<Rational>) -> Result<Self> {
        for (i, pi) in p.iter().enumerate() {
            if !pi.is_positive() || *pi >= int(1) {
                return Err(Error::invalid(format!(
                    "prior for v{} must lie strictly between 0 and 1, got {}",
                    i + 1,
                    fmt_rational(pi)
                )));
            }
        }
        Ok(Self { p })
    }

    pub fn uniform(num_vars: usize) -> Self {
        Self { p: vec![half(); num_vars] }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn get(&self, i: usize) -> &Rational {
        &self.p[i]
    }

    pub fn is_uniform(&self) -> bool {
        self.p.iter().all(|p| *p == half())
    }

    pub fn probability(&self, a: &Assignment) -> Rational {
        (0..self.len()).map(|i| if a.value(i) { self.p[i].clone() } else { int(1) - &self.p[i] }).product()
    }
}

/// Per-variable accuracies; a test of `v_i` is correct with probability `1/2 + α_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccuracyVector {
    alpha: Vec<Rational>,
}

impl AccuracyVector {
    pub fn new(alpha: Vec<Rational>) -> Result<Self> {
        for (i, a) in alpha.iter().enumerate() {
            if a.is_negative() || *a >= half() {
                return Err(Error::invalid(format!(
                    "accuracy for v{} must satisfy 0 <= alpha < 1/2, got {}",
                    i + 1,
                    fmt_rational(a)
                )));
            }
        }
        Ok(Self { alpha })
    }

    pub fn uniform(num_vars: usize, alpha: Rational) -> Result<Self> {
        Self::new(vec![alpha; num_vars])
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn get(&self, i: usize) -> &Rational {
        &self.alpha[i]
    }
}

/// Canonical, order-free record of a test-outcome sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct OutcomeCounts {
    counts: Vec<(u32, u32)>,
}

impl OutcomeCounts {
    pub fn empty(num_vars: usize) -> Self {
        Self { counts: vec![(0, 0); num_vars] }
    }

    pub fn from_pairs(pairs: Vec<(u32, u32)>) -> Self {
        Self { counts: pairs }
    }

    /// Builds counts from an ordered list of `(variable, observed value)` pairs.
    pub fn from_observations(num_vars: usize, obs: &[(usize, bool)]) -> Result<Self> {
        let mut c = Self::empty(num_vars);
        for &(i, b) in obs {
            if i >= num_vars {
                return Err(Error::VarOutOfRange { index: i, num_vars });
            }
            c.record(i, b);
        }
        Ok(c)
    }

    pub fn num_vars(&self) -> usize {
        self.counts.len()
    }

    pub fn record(&mut self, i: usize, observed: bool) {
        if observed {
            self.counts[i].0 += 1;
        } else {
            self.counts[i].1 += 1;
        }
    }

    pub fn with(&self, i: usize, observed: bool) -> Self {
        let mut c = self.clone();
        c.record(i, observed);
        c
    }

    pub fn trues(&self, i: usize) -> u32 {
        self.counts[i].0
    }

    pub fn falses(&self, i: usize) -> u32 {
        self.counts[i].1
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.counts
    }

    pub fn tests_of(&self, i: usize) -> u32 {
        self.counts[i].0 + self.counts[i].1
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().map(|(t, f)| t + f).sum()
    }

    /// Observations of `v_i` agreeing with `a(v_i)`.
    pub fn agreeing(&self, i: usize, a: &Assignment) -> u32 {
        if a.value(i) {
            self.counts[i].0
        } else {
            self.counts[i].1
        }
    }

    pub fn is_contradiction_free(&self) -> bool {
        self.counts.iter().all(|&(t, f)| t == 0 || f == 0)
    }
}

impl fmt::Display for OutcomeCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        f.write_str("{")?;
        for (i, &(t, fl)) in self.counts.iter().enumerate() {
            for (n, ch) in [(t, 'T'), (fl, 'F')] {
                if n > 0 {
                    if !first {
                        f.write_str(",")?;
                    }
                    first = false;
                    write!(f, "v{}:{}", i + 1, ch)?;
                    if n > 1 {
                        write!(f, "*{n}")?;
                    }
                }
            }
        }
        f.write_str("}")
    }
}

/// Removes cancelling `T`/`F` pairs per variable; posteriors are unchanged.
pub fn cancel_contradictions(counts: &OutcomeCounts) -> OutcomeCounts {
    OutcomeCounts {
        counts: counts
            .counts
            .iter()
            .map(|&(t, f)| {
                let m = t.min(f);
                (t - m, f - m)
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payoffs {
    #[serde(with = "crate::rational::serde_rational")]
    pub g: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub b: Rational,
}

impl Payoffs {
    pub fn new(g: Rational, b: Rational) -> Result<Self> {
        if !g.is_positive() || !b.is_negative() {
            return Err(Error::invalid("payoffs need g > 0 > b"));
        }
        Ok(Self { g, b })
    }
}

/// Final move of the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Guess {
    NoGuess,
    GuessT,
    GuessF,
}

impl fmt::Display for Guess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Guess::NoGuess => "NoGuess",
            Guess::GuessT => "GuessT",
            Guess::GuessF => "GuessF",
        })
    }
}

/// `(1/2 + α)/(1/2 − α)`.
pub fn odds(alpha: &Rational) -> Result<Rational> {
    if alpha.is_negative() || *alpha >= half() {
        return Err(Error::invalid(format!("odds need 0 <= alpha < 1/2, got {}", fmt_rational(alpha))));
    }
    Ok((half() + alpha) / (half() - alpha))
}

/// Prior and accuracies with the odds precomputed.
#[derive(Debug, Clone)]
pub struct BeliefModel {
    prior: ProductPrior,
    alpha: AccuracyVector,
    odds: Vec<Rational>,
}

impl BeliefModel {
    pub fn new(prior: ProductPrior, alpha: AccuracyVector) -> Result<Self> {
        if prior.len() != alpha.len() {
            return Err(Error::DimensionMismatch { expected: prior.len(), got: alpha.len() });
        }
        let odds = alpha.alpha.iter().map(odds).collect::<Result<_>>()?;
        Ok(Self { prior, alpha, odds })
    }

    pub fn uniform(num_vars: usize, alpha: Rational) -> Result<Self> {
        Self::new(ProductPrior::uniform(num_vars), AccuracyVector::uniform(num_vars, alpha)?)
    }

    pub fn num_vars(&self) -> usize {
        self.prior.len()
    }

    pub fn prior(&self) -> &ProductPrior {
        &self.prior
    }

    pub fn alpha(&self) -> &AccuracyVector {
        &self.alpha
    }

    pub fn odds(&self, i: usize) -> &Rational {
        &self.odds[i]
    }

    fn check(&self, counts: &OutcomeCounts) -> Result<()> {
        if counts.num_vars() != self.num_vars() {
            return Err(Error::DimensionMismatch { expected: self.num_vars(), got: counts.num_vars() });
        }
        Ok(())
    }

    fn check_table(&self, tt: &TruthTable) -> Result<()> {
        if tt.num_vars() != self.num_vars() {
            return Err(Error::DimensionMismatch { expected: self.num_vars(), got: tt.num_vars() });
        }
        Ok(())
    }

    /// Per-variable factors `(F-factor, T-factor)`: `(1−p)·o^f` and `p·o^t`.
    fn factors(&self, counts: &OutcomeCounts) -> Vec<(Rational, Rational)> {
        (0..self.num_vars())
            .map(|i| {
                let o = &self.odds[i];
                let p = &self.prior.p[i];
                let t = o.clone().pow(counts.trues(i));
                let f = o.clone().pow(counts.falses(i));
                ((int(1) - p) * f, p * t)
            })
            .collect()
    }

    /// Un-normalized weights of all `2^n` assignments, indexed by assignment bits.
    pub fn weights(&self, counts: &OutcomeCounts) -> Result<Vec<Rational>> {
        self.check(counts)?;
        let mut w = vec![int(1)];
        for (i, (f, t)) in self.factors(counts).into_iter().enumerate() {
            let half_len = 1usize << i;
            let mut next = Vec::with_capacity(half_len * 2);
            next.extend(w.iter().map(|x| x * &f));
            next.extend(w.iter().map(|x| x * &t));
            w = next;
        }
        Ok(w)
    }

    pub fn weight(&self, counts: &OutcomeCounts, a: &Assignment) -> Result<Rational> {
        self.check(counts)?;
        if a.num_vars() != self.num_vars() {
            return Err(Error::DimensionMismatch { expected: self.num_vars(), got: a.num_vars() });
        }
        Ok(self.factors(counts).into_iter().enumerate().map(|(i, (f, t))| if a.value(i) { t } else { f }).product())
    }

    pub fn posterior_assignment(&self, counts: &OutcomeCounts, a: &Assignment) -> Result<Rational> {
        let w = self.weights(counts)?;
        let total: Rational = w.iter().sum();
        Ok(&w[a.bits() as usize] / total)
    }

    /// `(Σ_{φ(A)=T} w(A), Σ_{φ(A)=F} w(A))`.
    pub fn split_weights(&self, tt: &TruthTable, counts: &OutcomeCounts) -> Result<(Rational, Rational)> {
        self.check_table(tt)?;
        let w = self.weights(counts)?;
        let mut sat = Rational::zero();
        let mut unsat = Rational::zero();
        for (a, wa) in w.into_iter().enumerate() {
            if tt.get(a as u32) {
                sat += wa;
            } else {
                unsat += wa;
            }
        }
        Ok((sat, unsat))
    }

    pub fn posterior_formula(&self, tt: &TruthTable, counts: &OutcomeCounts) -> Result<Rational> {
        let (sat, unsat) = self.split_weights(tt, counts)?;
        Ok(&sat / (&sat + unsat))
    }

    /// Falsifying weight over satisfying weight.
    pub fn characteristic_fraction(&self, tt: &TruthTable, counts: &OutcomeCounts) -> Result<Rational> {
        let (sat, unsat) = self.split_weights(tt, counts)?;
        if sat.is_zero() {
            return Err(Error::UndefinedFraction);
        }
        Ok(unsat / sat)
    }

    /// `Pr(v_i = T | S)`; the posterior stays a product distribution.
    pub fn marginal(&self, counts: &OutcomeCounts, i: usize) -> Rational {
        let o = &self.odds[i];
        let p = &self.prior.p[i];
        let t = p * o.clone().pow(counts.trues(i));
        let f = (int(1) - p) * o.clone().pow(counts.falses(i));
        &t / (&t + f)
    }

    /// Probability that the next test of `v_i` reports `observed`.
    pub fn outcome_probability(&self, counts: &OutcomeCounts, i: usize, observed: bool) -> Result<Rational> {
        self.check(counts)?;
        if i >= self.num_vars() {
            return Err(Error::VarOutOfRange { index: i, num_vars: self.num_vars() });
        }
        let pt = self.marginal(counts, i);
        let right = half() + &self.alpha.alpha[i];
        let wrong = half() - &self.alpha.alpha[i];
        let pf = int(1) - &pt;
        Ok(if observed { pt * right + pf * wrong } else { pt * wrong + pf * right })
    }
}

pub fn weight(
    prior: &ProductPrior,
    alpha: &AccuracyVector,
    counts: &OutcomeCounts,
    a: &Assignment,
) -> Result<Rational> {
    BeliefModel::new(prior.clone(), alpha.clone())?.weight(counts, a)
}

pub fn posterior_assignment(
    prior: &ProductPrior,
    alpha: &AccuracyVector,
    counts: &OutcomeCounts,
    a: &Assignment,
) -> Result<Rational> {
    BeliefModel::new(prior.clone(), alpha.clone())?.posterior_assignment(counts, a)
}

pub fn posterior_formula(
    tt: &TruthTable,
    prior: &ProductPrior,
    alpha: &AccuracyVector,
    counts: &OutcomeCounts,
) -> Result<Rational> {
    BeliefModel::new(prior.clone(), alpha.clone())?.posterior_formula(tt, counts)
}

pub fn characteristic_fraction(
    tt: &TruthTable,
    prior: &ProductPrior,
    alpha: &AccuracyVector,
    counts: &OutcomeCounts,
) -> Result<Rational> {
    BeliefModel::new(prior.clone(), alpha.clone())?.characteristic_fraction(tt, counts)
}

/// `q(b, g) = (b + g) / (2(b − g))`; a guess pays in expectation iff `|p − 1/2| > q`.
pub fn threshold(payoffs: &Payoffs) -> Rational {
    (&payoffs.b + &payoffs.g) / (int(2) * (&payoffs.b - &payoffs.g))
}

pub fn guess_value(p: &Rational, payoffs: &Payoffs, guess_true: bool) -> Rational {
    let q = int(1) - p;
    if guess_true {
        &payoffs.g * p + &payoffs.b * q
    } else {
        &payoffs.g * q + &payoffs.b * p
    }
}

/// Best final move at posterior `p`. Abstains unless some guess is strictly
/// profitable; equal positive guesses go to `GuessT`.
pub fn best_action(p: &Rational, payoffs: &Payoffs) -> (Guess, Rational) {
    let t = guess_value(p, payoffs, true);
    let f = guess_value(p, payoffs, false);
    if !t.is_positive() && !f.is_positive() {
        (Guess::NoGuess, Rational::zero())
    } else if t >= f {
        (Guess::GuessT, t)
    } else {
        (Guess::GuessF, f)
    }
}

pub fn action_value(guess: Guess, p: &Rational, payoffs: &Payoffs) -> Rational {
    match guess {
        Guess::NoGuess => Rational::zero(),
        Guess::GuessT => guess_value(p, payoffs, true),
        Guess::GuessF => guess_value(p, payoffs, false),
    }
}

/// `|p − 1/2|`.
pub fn certainty(p: &Rational) -> Rational {
    (p - half()).abs()
}

/// Fractions of observations agreeing with `a`, per variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace(#[serde(with = "crate::rational::serde_rational::vec")] pub Vec<Rational>);

impl Trace {
    pub fn entries(&self) -> &[Rational] {
        &self.0
    }

    pub fn sum(&self) -> Rational {
        self.0.iter().sum()
    }
}

/// The `a`-trace of a sequence: entry `i` is `n⁺_i / |S|`.
pub fn trace_of(counts: &OutcomeCounts, a: &Assignment) -> Result<Trace> {
    if a.num_vars() != counts.num_vars() {
        return Err(Error::DimensionMismatch { expected: counts.num_vars(), got: a.num_vars() });
    }
    let total = counts.total();
    if total == 0 {
        return Err(Error::invalid("trace of an empty sequence is undefined"));
    }
    Ok(Trace((0..counts.num_vars()).map(|i| frac(counts.agreeing(i, a) as i64, total as i64)).collect()))
}
