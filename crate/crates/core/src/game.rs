//! Information-acquisition games `G(φ, D, k, α, g, b)` solved exactly.
//!
//! Posteriors depend only on per-variable outcome counts, so every solver here
//! works over [`OutcomeCounts`] states instead of ordered histories.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formula::{Assignment, TruthTable};
use crate::prob::{
    action_value, best_action, AccuracyVector, BeliefModel, Guess, OutcomeCounts, Payoffs, ProductPrior,
};
use crate::rational::{fmt_rational, int, to_f64, Rational};

/// Default cap on the number of count states a solver may visit.
pub const DEFAULT_STATE_CAP: u128 = 5_000_000;

#[derive(Debug, Clone)]
pub struct GameSpec {
    tt: TruthTable,
    model: BeliefModel,
    budget: u32,
    payoffs: Payoffs,
}

impl GameSpec {
    pub fn new(
        tt: TruthTable,
        prior: ProductPrior,
        alpha: AccuracyVector,
        budget: u32,
        payoffs: Payoffs,
    ) -> Result<Self> {
        let n = tt.num_vars();
        for got in [prior.len(), alpha.len()] {
            if got != n {
                return Err(Error::DimensionMismatch { expected: n, got });
            }
        }
        if n == 0 && budget > 0 {
            return Err(Error::invalid("a game over zero variables cannot have tests"));
        }
        Ok(Self { tt, model: BeliefModel::new(prior, alpha)?, budget, payoffs })
    }

    /// Uniform prior and a single accuracy for every variable.
    pub fn uniform(tt: TruthTable, alpha: Rational, budget: u32, payoffs: Payoffs) -> Result<Self> {
        let n = tt.num_vars();
        Self::new(tt, ProductPrior::uniform(n), AccuracyVector::uniform(n, alpha)?, budget, payoffs)
    }

    pub fn tt(&self) -> &TruthTable {
        &self.tt
    }

    pub fn model(&self) -> &BeliefModel {
        &self.model
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn payoffs(&self) -> &Payoffs {
        &self.payoffs
    }

    pub fn num_vars(&self) -> usize {
        self.tt.num_vars()
    }

    /// Number of count states with at most `k` tests, `C(k + 2n, 2n)`.
    pub fn state_bound(&self) -> u128 {
        binomial(self.budget as u64 + 2 * self.num_vars() as u64, 2 * self.num_vars() as u64)
    }

    fn check_cap(&self, cap: u128) -> Result<()> {
        let needed = self.state_bound();
        if needed > cap {
            return Err(Error::ResourceCap { what: "game states", needed, cap });
        }
        Ok(())
    }

    fn posterior(&self, counts: &OutcomeCounts) -> Rational {
        self.model.posterior_formula(&self.tt, counts).expect("counts sized to the game")
    }

    fn leaf(&self, counts: &OutcomeCounts) -> (Guess, Rational) {
        best_action(&self.posterior(counts), &self.payoffs)
    }

    fn step(&self, counts: &OutcomeCounts, i: usize, observed: bool) -> Rational {
        self.model.outcome_probability(counts, i, observed).expect("index in range")
    }
}

fn binomial(n: u64, r: u64) -> u128 {
    let mut acc = BigUint::from(1u32);
    for j in 0..r {
        acc = acc * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    acc.to_u128().unwrap_or(u128::MAX)
}

/// `Pr(next test of v_i reports observed | counts)`.
pub fn outcome_probability(game: &GameSpec, counts: &OutcomeCounts, i: usize, observed: bool) -> Result<Rational> {
    game.model.outcome_probability(counts, i, observed)
}

/// Deterministic strategy over canonical histories.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Strategy {
    tests: HashMap<OutcomeCounts, usize>,
    actions: HashMap<OutcomeCounts, Guess>,
}

impl Strategy {
    /// Tabulates `test` and `act` over every history reachable in `game`.
    pub fn from_fn(
        game: &GameSpec,
        test: impl Fn(&OutcomeCounts) -> usize,
        act: impl Fn(&OutcomeCounts) -> Guess,
    ) -> Result<Self> {
        let mut s = Strategy::default();
        let mut stack = vec![OutcomeCounts::empty(game.num_vars())];
        while let Some(h) = stack.pop() {
            if h.total() == game.budget {
                s.actions.insert(h.clone(), act(&h));
                continue;
            }
            if s.tests.contains_key(&h) {
                continue;
            }
            let i = test(&h);
            if i >= game.num_vars() {
                return Err(Error::VarOutOfRange { index: i, num_vars: game.num_vars() });
            }
            stack.push(h.with(i, true));
            stack.push(h.with(i, false));
            s.tests.insert(h, i);
        }
        Ok(s)
    }

    /// Tests `v1` every step and never guesses.
    pub fn never_guess(game: &GameSpec) -> Result<Self> {
        Self::from_fn(game, |_| 0, |_| Guess::NoGuess)
    }

    pub fn test_at(&self, counts: &OutcomeCounts) -> Option<usize> {
        self.tests.get(counts).copied()
    }

    pub fn action_at(&self, counts: &OutcomeCounts) -> Option<Guess> {
        self.actions.get(counts).copied()
    }

    pub fn set_test(&mut self, counts: OutcomeCounts, i: usize) {
        self.tests.insert(counts, i);
    }

    pub fn set_action(&mut self, counts: OutcomeCounts, guess: Guess) {
        self.actions.insert(counts, guess);
    }

    pub fn num_decisions(&self) -> usize {
        self.tests.len() + self.actions.len()
    }

    /// Decisions in canonical order, for printing.
    pub fn decisions(&self) -> Vec<Decision> {
        let mut out: Vec<Decision> = self
            .tests
            .iter()
            .map(|(h, &i)| Decision { history: h.clone(), choice: Choice::Test(i) })
            .chain(self.actions.iter().map(|(h, &g)| Decision { history: h.clone(), choice: Choice::Final(g) }))
            .collect();
        out.sort_by(|a, b| (a.history.total(), &a.history).cmp(&(b.history.total(), &b.history)));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Test(usize),
    Final(Guess),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub history: OutcomeCounts,
    pub choice: Choice,
}

/// Per-history value and chosen move.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HistoryNote {
    pub history: String,
    pub value: String,
    pub action: String,
}

/// Optimal value with the strategy that attains it.
#[derive(Debug, Clone)]
pub struct Solution {
    pub value: Rational,
    pub strategy: Strategy,
    values: HashMap<OutcomeCounts, Rational>,
}

impl Solution {
    pub fn value_at(&self, counts: &OutcomeCounts) -> Option<&Rational> {
        self.values.get(counts)
    }

    /// Value of testing each variable next at `counts`, or `None` for a final
    /// or unvisited history.
    pub fn move_values(&self, game: &GameSpec, counts: &OutcomeCounts) -> Option<Vec<Rational>> {
        if counts.total() >= game.budget {
            return None;
        }
        self.values.get(counts)?;
        (0..game.num_vars())
            .map(|i| {
                let mut v = Rational::zero();
                for b in [true, false] {
                    v += game.step(counts, i, b) * self.values.get(&counts.with(i, b))?;
                }
                Some(v)
            })
            .collect()
    }

    /// Every variable whose test at the root attains the optimum.
    pub fn first_moves(&self, game: &GameSpec) -> Vec<usize> {
        let root = OutcomeCounts::empty(game.num_vars());
        match self.move_values(game, &root) {
            Some(vals) => (0..vals.len()).filter(|&i| vals[i] == self.value).collect(),
            None => Vec::new(),
        }
    }

    /// One note per reachable history, shortest histories first.
    pub fn annotations(&self) -> Vec<HistoryNote> {
        self.strategy
            .decisions()
            .into_iter()
            .map(|d| HistoryNote {
                value: fmt_rational(&self.values[&d.history]),
                history: d.history.to_string(),
                action: match d.choice {
                    Choice::Test(i) => format!("test v{}", i + 1),
                    Choice::Final(g) => g.to_string(),
                },
            })
            .collect()
    }
}

struct Backward<'a> {
    game: &'a GameSpec,
    memo: HashMap<OutcomeCounts, (Rational, Choice)>,
}

impl Backward<'_> {
    fn value(&mut self, h: &OutcomeCounts) -> Rational {
        if let Some((v, _)) = self.memo.get(h) {
            return v.clone();
        }
        let (v, choice) = if h.total() == self.game.budget {
            let (g, v) = self.game.leaf(h);
            (v, Choice::Final(g))
        } else {
            let mut best: Option<(Rational, usize)> = None;
            for i in 0..self.game.num_vars() {
                let mut v = Rational::zero();
                for b in [true, false] {
                    v += self.game.step(h, i, b) * self.value(&h.with(i, b));
                }
                if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                    best = Some((v, i));
                }
            }
            let (v, i) = best.expect("at least one variable");
            (v, Choice::Test(i))
        };
        self.memo.insert(h.clone(), (v.clone(), choice));
        v
    }
}

/// Backward induction over count states, refusing games above `cap` states.
pub fn solve_with_cap(game: &GameSpec, cap: u128) -> Result<Solution> {
    game.check_cap(cap)?;
    let mut bw = Backward { game, memo: HashMap::new() };
    let value = bw.value(&OutcomeCounts::empty(game.num_vars()));
    let mut strategy = Strategy::default();
    let mut values = HashMap::new();
    for (h, (v, c)) in bw.memo {
        match c {
            Choice::Test(i) => strategy.set_test(h.clone(), i),
            Choice::Final(g) => strategy.set_action(h.clone(), g),
        }
        values.insert(h, v);
    }
    Ok(Solution { value, strategy, values })
}

pub fn solve(game: &GameSpec) -> Result<Solution> {
    solve_with_cap(game, DEFAULT_STATE_CAP)
}

pub fn optimal_value(game: &GameSpec) -> Result<Rational> {
    Ok(solve(game)?.value)
}

/// Ties go to the lowest variable index; final moves follow [`best_action`].
pub fn optimal_strategy(game: &GameSpec) -> Result<Strategy> {
    Ok(solve(game)?.strategy)
}

/// Exact expected payoff of `strategy`.
pub fn evaluate_strategy(game: &GameSpec, strategy: &Strategy) -> Result<Rational> {
    fn go(
        game: &GameSpec,
        s: &Strategy,
        h: &OutcomeCounts,
        memo: &mut HashMap<OutcomeCounts, Rational>,
    ) -> Result<Rational> {
        if let Some(v) = memo.get(h) {
            return Ok(v.clone());
        }
        let v = if h.total() == game.budget {
            let g = s.action_at(h).ok_or_else(|| Error::invalid(format!("strategy has no final move at {h}")))?;
            action_value(g, &game.posterior(h), &game.payoffs)
        } else {
            let i = s.test_at(h).ok_or_else(|| Error::invalid(format!("strategy has no test at {h}")))?;
            if i >= game.num_vars() {
                return Err(Error::VarOutOfRange { index: i, num_vars: game.num_vars() });
            }
            let mut v = Rational::zero();
            for b in [true, false] {
                v += game.step(h, i, b) * go(game, s, &h.with(i, b), memo)?;
            }
            v
        };
        memo.insert(h.clone(), v.clone());
        Ok(v)
    }
    game.check_cap(DEFAULT_STATE_CAP)?;
    go(game, strategy, &OutcomeCounts::empty(game.num_vars()), &mut HashMap::new())
}

/// Expected payoff when every test picks a variable uniformly at random and the
/// final move is [`best_action`].
pub fn random_test_value(game: &GameSpec) -> Result<Rational> {
    fn go(game: &GameSpec, h: &OutcomeCounts, memo: &mut HashMap<OutcomeCounts, Rational>) -> Rational {
        if let Some(v) = memo.get(h) {
            return v.clone();
        }
        let v = if h.total() == game.budget {
            game.leaf(h).1
        } else {
            let n = game.num_vars();
            let mut v = Rational::zero();
            for i in 0..n {
                for b in [true, false] {
                    v += game.step(h, i, b) * go(game, &h.with(i, b), memo);
                }
            }
            v / int(n as i64)
        };
        memo.insert(h.clone(), v.clone());
        v
    }
    game.check_cap(DEFAULT_STATE_CAP)?;
    Ok(go(game, &OutcomeCounts::empty(game.num_vars()), &mut HashMap::new()))
}

/// Strategy testing `v1` `k/n` times, then `v2` `k/n` times, and so on; final move by [`best_action`].
pub fn uniform_split_strategy(game: &GameSpec) -> Result<Strategy> {
    let n = game.num_vars() as u32;
    if n == 0 || !game.budget.is_multiple_of(n) {
        return Err(Error::invalid(format!(
            "uniform split needs the variable count to divide the budget (k = {}, n = {n})",
            game.budget
        )));
    }
    let per = game.budget / n;
    Strategy::from_fn(
        game,
        |h| (0..game.num_vars()).find(|&i| h.tests_of(i) < per).expect("budget left"),
        |h| game.leaf(h).0,
    )
}

pub fn uniform_split_value(game: &GameSpec) -> Result<Rational> {
    evaluate_strategy(game, &uniform_split_strategy(game)?)
}

/// How the simulated agent picks tests.
#[derive(Debug, Clone, Copy)]
pub enum Policy<'a> {
    Fixed(&'a Strategy),
    RandomTest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Simulates the game `samples` times with a ChaCha8 stream seeded by `seed`.
/// Random-test play uses [`best_action`] for the final move.
pub fn monte_carlo(game: &GameSpec, policy: Policy<'_>, samples: u64, seed: u64) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return Err(Error::invalid("samples must be positive"));
    }
    let n = game.num_vars();
    let prior: Vec<f64> = (0..n).map(|i| to_f64(game.model.prior().get(i))).collect();
    let right: Vec<f64> = (0..n).map(|i| 0.5 + to_f64(game.model.alpha().get(i))).collect();
    let g = to_f64(&game.payoffs.g);
    let b = to_f64(&game.payoffs.b);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut leaf_cache: HashMap<OutcomeCounts, Guess> = HashMap::new();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let truth: Vec<bool> = prior.iter().map(|&p| rng.gen::<f64>() < p).collect();
        let a = Assignment::from_values(&truth)?;
        let mut h = OutcomeCounts::empty(n);
        for _ in 0..game.budget {
            let i = match policy {
                Policy::Fixed(s) => {
                    s.test_at(&h).ok_or_else(|| Error::invalid(format!("strategy has no test at {h}")))?
                }
                Policy::RandomTest => rng.gen_range(0..n),
            };
            let correct = rng.gen::<f64>() < right[i];
            h.record(i, if correct { truth[i] } else { !truth[i] });
        }
        let guess = match policy {
            Policy::Fixed(s) => {
                s.action_at(&h).ok_or_else(|| Error::invalid(format!("strategy has no final move at {h}")))?
            }
            Policy::RandomTest => *leaf_cache.entry(h.clone()).or_insert_with(|| game.leaf(&h).0),
        };
        let phi = game.tt.eval(&a)?;
        let payoff = match guess {
            Guess::NoGuess => 0.0,
            Guess::GuessT => {
                if phi {
                    g
                } else {
                    b
                }
            }
            Guess::GuessF => {
                if phi {
                    b
                } else {
                    g
                }
            }
        };
        sum += payoff;
        sum_sq += payoff * payoff;
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = (sum_sq / m - mean * mean).max(0.0);
    Ok(MonteCarloEstimate { mean, std_err: (var / m).sqrt(), samples, seed })
}
