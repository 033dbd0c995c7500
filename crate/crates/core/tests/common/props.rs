//! Property checks shared by the proptest suites and the acceptance run. Each
//! takes a seed, builds a small random instance from it and returns `Err` with
//! a description on the first violation.

use iag_core::complexity::max_certainty;
use iag_core::formula::{enumerate_truth_tables, npn_orbits};
use iag_core::game::{optimal_value, random_test_value, solve, GameSpec};
use iag_core::lp::{LinearProgram, LpStatus, Relation, Sense};
use iag_core::prob::{
    best_action, cancel_contradictions, AccuracyVector, BeliefModel, OutcomeCounts, Payoffs, ProductPrior,
};
use iag_core::rational::{frac, int};
use iag_core::ri::{self, CensusOptions, RiParams};
use iag_core::{Assignment, Rational, TruthTable};
use num_traits::One;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{brute_force_certainty, vertex_optimum, Model};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

pub struct Instance {
    pub tt: TruthTable,
    pub prior: Vec<Rational>,
    pub alpha: Vec<Rational>,
    pub model: BeliefModel,
    pub rng: ChaCha8Rng,
}

fn open_unit(rng: &mut ChaCha8Rng) -> Rational {
    let d = rng.gen_range(2..=9i64);
    frac(rng.gen_range(1..d), d)
}

fn accuracy(rng: &mut ChaCha8Rng) -> Rational {
    let d = rng.gen_range(3..=12i64);
    // numerator below d/2 keeps α < 1/2
    frac(rng.gen_range(1..=(d - 1) / 2), d)
}

pub fn instance(seed: u64, max_vars: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_vars);
    let bits: u64 = rng.gen::<u64>() & ((1u64 << (1u32 << n)) - 1);
    let tt = TruthTable::from_u64(n, bits).expect("fits");
    let prior: Vec<Rational> = (0..n).map(|_| open_unit(&mut rng)).collect();
    let alpha: Vec<Rational> = (0..n).map(|_| accuracy(&mut rng)).collect();
    let model =
        BeliefModel::new(ProductPrior::new(prior.clone()).unwrap(), AccuracyVector::new(alpha.clone()).unwrap())
            .unwrap();
    Instance { tt, prior, alpha, model, rng }
}

impl Instance {
    fn n(&self) -> usize {
        self.tt.num_vars()
    }

    fn sequence(&mut self, max_len: usize) -> Vec<(usize, bool)> {
        let len = self.rng.gen_range(0..=max_len);
        let n = self.n();
        (0..len).map(|_| (self.rng.gen_range(0..n), self.rng.gen())).collect()
    }

    fn counts(&mut self, max_len: usize) -> OutcomeCounts {
        let seq = self.sequence(max_len);
        OutcomeCounts::from_observations(self.n(), &seq).unwrap()
    }

    fn oracle(&self) -> Model {
        Model { n: self.n(), prior: self.prior.clone(), alpha: self.alpha.clone() }
    }
}

pub fn posterior_normalization(seed: u64) -> Check {
    let mut x = instance(seed, 4);
    let s = x.counts(6);
    let total: Rational = Assignment::all(x.n()).map(|a| x.model.posterior_assignment(&s, &a).unwrap()).sum();
    ensure!(total.is_one(), "posteriors over assignments sum to {total}");
    let p = x.model.posterior_formula(&x.tt, &s).unwrap();
    let q = x.model.posterior_formula(&x.tt.complement(), &s).unwrap();
    ensure!((&p + &q).is_one(), "Pr(φ|S) + Pr(¬φ|S) = {}", p + q);
    Ok(())
}

pub fn cf_inversion(seed: u64) -> Check {
    let mut x = instance(seed, 3);
    if x.tt.count_ones() == 0 {
        return Ok(());
    }
    let (s, t) = (x.counts(6), x.counts(6));
    let (ps, pt) = (x.model.posterior_formula(&x.tt, &s).unwrap(), x.model.posterior_formula(&x.tt, &t).unwrap());
    let (cs, ct) =
        (x.model.characteristic_fraction(&x.tt, &s).unwrap(), x.model.characteristic_fraction(&x.tt, &t).unwrap());
    ensure!((ps > pt) == (cs < ct), "order of Pr and cf not inverted for {s} vs {t}");
    ensure!(ps == (int(1) + &cs).recip(), "Pr(φ|S) != 1/(1+cf) at {s}");
    Ok(())
}

pub fn contradiction_cancellation(seed: u64) -> Check {
    let mut x = instance(seed, 3);
    let s = x.counts(8);
    let c = cancel_contradictions(&s);
    ensure!(c.is_contradiction_free(), "{c} still contradictory");
    let (a, b) = (x.model.posterior_formula(&x.tt, &s).unwrap(), x.model.posterior_formula(&x.tt, &c).unwrap());
    ensure!(a == b, "cancellation changed the posterior at {s}: {a} vs {b}");
    Ok(())
}

pub fn projection_conditioning(seed: u64) -> Check {
    let mut x = instance(seed, 4);
    let s = x.counts(6);
    let n = x.n();
    for i in 0..n {
        for b in [true, false] {
            let lit = TruthTable::var(n, i).unwrap();
            let lit = if b { lit } else { lit.complement() };
            let joint = x.model.posterior_formula(&x.tt.and(&lit).unwrap(), &s).unwrap();
            let cond = joint / x.model.posterior_formula(&lit, &s).unwrap();
            let proj = x.model.posterior_formula(&x.tt.project(i, b).unwrap(), &s).unwrap();
            ensure!(cond == proj, "Pr(φ|S,v{}={b}) = {cond} but Pr(φ[v{}↦{b}]|S) = {proj}", i + 1, i + 1);
        }
    }
    Ok(())
}

pub fn order_insensitivity(seed: u64) -> Check {
    let mut x = instance(seed, 3);
    let mut seq = x.sequence(6);
    let counts = OutcomeCounts::from_observations(x.n(), &seq).unwrap();
    let p = x.model.posterior_formula(&x.tt, &counts).unwrap();
    let oracle = x.oracle();
    ensure!(oracle.posterior(&x.tt, &seq) == p, "sequence-level posterior differs at {counts}");
    seq.shuffle(&mut x.rng);
    ensure!(oracle.posterior(&x.tt, &seq) == p, "posterior depends on order at {counts}");
    let again = OutcomeCounts::from_observations(x.n(), &seq).unwrap();
    ensure!(again == counts, "counts depend on order");
    Ok(())
}

pub fn flipped_marginal(seed: u64) -> Check {
    let mut x = instance(seed, 3);
    let n = x.n();
    let model = BeliefModel::new(ProductPrior::uniform(n), AccuracyVector::new(x.alpha.clone()).unwrap()).unwrap();
    let s = x.counts(6);
    let flipped = OutcomeCounts::from_pairs(s.pairs().iter().map(|&(t, f)| (f, t)).collect());
    for i in 0..n {
        let (p, q) = (model.marginal(&s, i), model.marginal(&flipped, i));
        ensure!(&p + &q == int(1), "marginals {p} and {q} of v{} do not sum to 1", i + 1);
    }
    Ok(())
}

pub fn certainty_monotone(seed: u64) -> Check {
    let x = instance(seed, 3);
    let mut last = Rational::from_integer((-1).into());
    for k in 0..=5 {
        let c = max_certainty(&x.tt, &x.model, k).unwrap().certainty;
        ensure!(c >= last, "max certainty drops from {last} to {c} at k = {k} for {}", x.tt.to_hex());
        last = c;
    }
    Ok(())
}

pub fn certainty_oracle(seed: u64) -> Check {
    let x = instance(seed, 2);
    let oracle = x.oracle();
    for k in 0..=4 {
        let got = max_certainty(&x.tt, &x.model, k).unwrap().certainty;
        let want = brute_force_certainty(&x.tt, &oracle, k);
        ensure!(got == want, "k = {k}, {}: {got} vs brute force {want}", x.tt.to_hex());
    }
    Ok(())
}

pub fn random_lp(seed: u64) -> LinearProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=4);
    let small = |rng: &mut ChaCha8Rng| int(rng.gen_range(-3..=3));
    let sense = if rng.gen() { Sense::Minimize } else { Sense::Maximize };
    let obj = (0..n).map(|_| small(&mut rng)).collect();
    let mut lp = LinearProgram::new(sense, obj);
    for j in 0..n {
        let lower = if rng.gen_bool(0.3) { int(-2) } else { int(0) };
        lp.set_bounds(j, Some(lower), Some(int(rng.gen_range(1..=5))));
    }
    for _ in 0..rng.gen_range(1..=5) {
        let row = (0..n).map(|_| small(&mut rng)).collect();
        let rel = [Relation::Le, Relation::Ge, Relation::Eq][rng.gen_range(0..3)];
        let rhs = int(rng.gen_range(-4..=8));
        lp.constrain(row, rel, rhs);
    }
    lp
}

pub fn lp_vertex_agreement(seed: u64) -> Check {
    let lp = random_lp(seed);
    let sol = lp.solve();
    let want = vertex_optimum(&lp);
    match (&sol.status, &want) {
        (LpStatus::Optimal, Some(v)) => {
            ensure!(sol.value.as_ref() == Some(v), "simplex {:?} vs vertices {v}", sol.value);
            let x = sol.point.as_ref().ok_or("optimal without a point")?;
            ensure!(lp.is_feasible_point(x), "returned point infeasible");
            ensure!(&lp.objective_value(x) == v, "point does not attain the value");
        }
        (LpStatus::Infeasible, None) => {}
        (s, w) => return Err(format!("simplex says {s:?}, vertex enumeration says {w:?}")),
    }
    ensure!(lp.solve() == sol, "solver is not deterministic");
    Ok(())
}

/// Same counts for every worker count and with or without symmetry.
pub fn census_determinism(n: usize) -> Check {
    let params = RiParams::default_for(n);
    let base = ri::census(n, &params, &CensusOptions { jobs: 1, symmetry: true, keep_verdicts: false }).unwrap();
    for (jobs, symmetry) in [(2, true), (5, true), (3, false)] {
        let other = ri::census(n, &params, &CensusOptions { jobs, symmetry, keep_verdicts: false }).unwrap();
        ensure!(
            (other.ri, other.unknown, other.positive_optimum, &other.witness_histogram)
                == (base.ri, base.unknown, base.positive_optimum, &base.witness_histogram),
            "census n = {n} differs with {jobs} jobs (symmetry {symmetry})"
        );
    }
    Ok(())
}

pub fn sample_determinism(n: usize, samples: usize, seed: u64) -> Check {
    let params = RiParams::default_for(n);
    let opts = |jobs| CensusOptions { jobs, symmetry: false, keep_verdicts: true };
    let a = ri::sample(n, samples, seed, &params, &opts(1)).unwrap();
    let b = ri::sample(n, samples, seed, &params, &opts(3)).unwrap();
    ensure!(a.without_stats() == b.without_stats(), "sample differs across worker counts");
    Ok(())
}

/// Folding antisymmetrization over every variable ends in XOR or its negation.
pub fn xor_fold(n: usize) -> Check {
    let xor = TruthTable::xor_all(n).unwrap();
    let not_xor = xor.complement();
    for tt in enumerate_truth_tables(n).unwrap() {
        let mut t = tt.clone();
        for i in 0..n {
            t = t.antisymmetrize(i).unwrap();
        }
        ensure!(t.v_count() == 0, "{} folds to {} with V ≠ ∅", tt.to_hex(), t.to_hex());
        ensure!(t == xor || t == not_xor, "{} folds to {}", tt.to_hex(), t.to_hex());
    }
    Ok(())
}

pub fn min_star_complement(n: usize) -> Check {
    for tt in enumerate_truth_tables(n).unwrap() {
        let (a, b) = (ri::minimax_power(&tt).0, ri::minimax_power(&tt.complement()).0);
        ensure!(a == b, "MIN* of {} is {a} but {b} for its complement", tt.to_hex());
    }
    Ok(())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Verdicts agree across permutations and complements of `tables`.
pub fn verdict_invariance(tables: &[TruthTable]) -> Check {
    for tt in tables {
        let n = tt.num_vars();
        let params = RiParams::default_for(n);
        let v = ri::exhibits_ri(tt, &params).verdict;
        let c = ri::exhibits_ri(&tt.complement(), &params).verdict;
        ensure!(v == c, "{} and its complement disagree", tt.to_hex());
        for p in permutations(n) {
            let w = ri::exhibits_ri(&tt.permute(&p).unwrap(), &params).verdict;
            ensure!(v == w, "{} changes verdict under permutation {p:?}", tt.to_hex());
        }
    }
    Ok(())
}

/// One representative per symmetry orbit on four variables, for spot checks.
pub fn orbit_representatives(n: usize, every: usize) -> Vec<TruthTable> {
    npn_orbits(n).unwrap().into_iter().step_by(every).map(|(bits, _)| TruthTable::from_u64(n, bits).unwrap()).collect()
}

/// Optimal value nondecreasing in k, optimum ≥ random ≥ 0, random > 0 when the
/// optimum is, and leaves follow the best action.
pub fn game_properties(seed: u64) -> Check {
    let mut x = instance(seed, 2);
    let g = int(x.rng.gen_range(1..=4));
    let b = -int(x.rng.gen_range(1..=20));
    let payoffs = Payoffs::new(g, b).unwrap();
    let mut last = None;
    for k in 0..=3 {
        let game = GameSpec::new(
            x.tt.clone(),
            ProductPrior::new(x.prior.clone()).unwrap(),
            AccuracyVector::new(x.alpha.clone()).unwrap(),
            k,
            payoffs.clone(),
        )
        .unwrap();
        let sol = solve(&game).unwrap();
        let rnd = random_test_value(&game).unwrap();
        ensure!(sol.value >= rnd && rnd >= int(0), "k = {k}: optimum {} random {rnd}", sol.value);
        ensure!(sol.value <= int(0) || rnd > int(0), "k = {k}: optimum positive but random {rnd}");
        if let Some(prev) = &last {
            ensure!(&sol.value >= prev, "value drops at k = {k}");
        }
        for d in sol.strategy.decisions() {
            if let iag_core::game::Choice::Final(guess) = d.choice {
                let p = x.model.posterior_formula(&x.tt, &d.history).unwrap();
                let (want, v) = best_action(&p, &payoffs);
                ensure!(guess == want, "leaf {} plays {guess}, best is {want}", d.history);
                ensure!(sol.value_at(&d.history) == Some(&v), "leaf value mismatch at {}", d.history);
            }
        }
        ensure!(optimal_value(&game).unwrap() == sol.value, "solve and optimal_value disagree");
        last = Some(sol.value);
    }
    Ok(())
}
