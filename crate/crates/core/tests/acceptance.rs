//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{game_tree_value, props, Model};
use iag_core::complexity::{max_certainty, test_complexity, xor_maximality_check, Complexity, ComplexitySpec};
use iag_core::formula::enumerate_truth_tables;
use iag_core::game::{evaluate_strategy, optimal_value, random_test_value, GameSpec, Strategy};
use iag_core::prob::{BeliefModel, Guess, OutcomeCounts, Payoffs};
use iag_core::rational::{fmt_rational, frac, int};
use iag_core::ri::{self, CensusOptions, RiParams, Verdict};
use iag_core::{Rational, TruthTable};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
type SeededCheck = (&'static str, fn(u64) -> props::Check, u64);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

fn obs(n: usize, list: &[(usize, bool)]) -> OutcomeCounts {
    OutcomeCounts::from_observations(n, list).unwrap()
}

fn posterior_goldens() -> Outcome {
    let tt = TruthTable::parse("v1 | v2", 2).unwrap();
    let m = BeliefModel::uniform(2, frac(1, 4)).unwrap();
    let cases: [(&[(usize, bool)], Rational); 5] = [
        (&[], frac(3, 4)),
        (&[(0, false)], frac(5, 8)),
        (&[(0, false), (0, false)], frac(11, 20)),
        (&[(0, true), (0, true)], frac(19, 20)),
        (&[(0, true), (1, true)], frac(15, 16)),
    ];
    for (seq, want) in cases {
        let got = m.posterior_formula(&tt, &obs(2, seq)).unwrap();
        ensure!(got == want, "Pr(φ | {seq:?}) = {got}, expected {want}");
    }
    Ok("3/4, 5/8, 11/20, 19/20, 15/16".into())
}

fn example_game() -> Outcome {
    let tt = TruthTable::parse("v1 | v2", 2).unwrap();
    let game = GameSpec::uniform(tt.clone(), frac(1, 4), 2, Payoffs::new(int(1), int(-16)).unwrap()).unwrap();
    let best = optimal_value(&game).unwrap();
    ensure!(best > int(0), "optimal value {best} is not positive");
    let twice =
        Strategy::from_fn(&game, |_| 0, |h| if h.trues(0) == 2 { Guess::GuessT } else { Guess::NoGuess }).unwrap();
    let twice_value = evaluate_strategy(&game, &twice).unwrap();
    ensure!(best == twice_value, "optimum {best} but testing v1 twice gives {twice_value}");
    let split = Strategy::from_fn(
        &game,
        |h| if h.total() == 0 { 0 } else { 1 },
        |h| if h.trues(0) == 1 && h.trues(1) == 1 { Guess::GuessT } else { Guess::NoGuess },
    )
    .unwrap();
    let split_value = evaluate_strategy(&game, &split).unwrap();
    ensure!(split_value < int(0), "v1-then-v2 strategy evaluates to {split_value}");
    let oracle = game_tree_value(&tt, &Model::uniform(2, frac(1, 4)), 2, &int(1), &int(-16));
    ensure!(oracle == best, "tree oracle {oracle} vs solver {best}");
    Ok(format!(
        "optimum {} = test-one-twice, v1-then-v2 {}, tree oracle agrees",
        fmt_rational(&best),
        fmt_rational(&split_value)
    ))
}

fn random_test_grid() -> Outcome {
    let payoffs = [(1, -16), (1, -4), (3, -1)];
    let (mut games, mut positive) = (0, 0);
    for tt in enumerate_truth_tables(2).unwrap() {
        for k in 1..=3 {
            for alpha in [frac(1, 8), frac(1, 4)] {
                for (g, b) in payoffs {
                    let game =
                        GameSpec::uniform(tt.clone(), alpha.clone(), k, Payoffs::new(int(g), int(b)).unwrap()).unwrap();
                    let opt = optimal_value(&game).unwrap();
                    let rnd = random_test_value(&game).unwrap();
                    games += 1;
                    if opt > int(0) {
                        positive += 1;
                        ensure!(rnd > int(0), "{} k={k} α={alpha} ({g},{b}): optimum {opt}, random {rnd}", tt.to_hex());
                    }
                }
            }
        }
    }
    Ok(format!("{games} games, {positive} with positive optimum, random positive on all of them"))
}

fn complexity_goldens() -> Outcome {
    let q = frac(15, 34);
    let cpl = |f: &str| {
        let spec = ComplexitySpec::uniform(TruthTable::parse(f, 2).unwrap(), frac(1, 4), q.clone()).unwrap();
        test_complexity(&spec).unwrap()
    };
    for (f, want) in [("T", 0), ("v1", 3), ("v1 ^ v2", 7), ("v1 | v2", 2)] {
        let got = cpl(f);
        ensure!(got == Complexity::Finite(want), "cpl({f}) = {got}, expected {want}");
    }
    let model = BeliefModel::uniform(2, frac(1, 4)).unwrap();
    let v1 = TruthTable::var(2, 0).unwrap();
    for (k, want) in [(2, frac(2, 5)), (3, frac(13, 28))] {
        let got = max_certainty(&v1, &model, k).unwrap().certainty;
        ensure!(got == want, "certainty of v1 at k={k} is {got}, expected {want}");
    }
    Ok("cpl 0, 3, 7, 2; v1 certainty 2/5 at k=2 and 13/28 at k=3".into())
}

fn xor_maximality() -> Outcome {
    let mut parts = Vec::new();
    for n in [2, 3] {
        for q in [frac(15, 34), frac(1, 3)] {
            let rep = xor_maximality_check(n, &frac(1, 4), &q, 64, 1).unwrap();
            ensure!(rep.xor_cpl == rep.not_xor_cpl, "n={n} q={q}: XOR {} vs ¬XOR {}", rep.xor_cpl, rep.not_xor_cpl);
            ensure!(rep.holds, "n={n} q={q}: exceeded by {:?}", rep.violations);
            ensure!(matches!(rep.xor_cpl, Complexity::Finite(_)), "n={n} q={q}: XOR hit the cap");
            parts.push(format!("n={n} q={}: XOR {}", fmt_rational(&q), rep.xor_cpl));
        }
    }
    Ok(parts.join("; "))
}

fn ri_goldens() -> Outcome {
    let verdict =
        |f: &str, n: usize| ri::exhibits_ri(&TruthTable::parse(f, n).unwrap(), &RiParams::default_for(n)).verdict;
    let mut ri_cases = Vec::new();
    for (a, b) in [("v1", "v2"), ("!v1", "v2"), ("v1", "!v2"), ("!v1", "!v2")] {
        ri_cases.push((format!("{a} | {b}"), 2));
        ri_cases.push((format!("{a} & {b}"), 2));
    }
    ri_cases.push(("(v1 | v2) & (v2 ^ v3 ^ v4)".into(), 4));
    let mut unknown_cases: Vec<(String, usize)> = Vec::new();
    for n in 1..=2 {
        for f in ["v1", "!v1", "T", "F"] {
            unknown_cases.push((f.into(), n));
        }
    }
    for n in 1..=4 {
        let xor = (1..=n).map(|i| format!("v{i}")).collect::<Vec<_>>().join(" ^ ");
        unknown_cases.push((xor.clone(), n));
        unknown_cases.push((format!("!({xor})"), n));
    }
    unknown_cases.push(("v1 | (!v1 & v2 & v3)".into(), 3));
    for (f, n) in &ri_cases {
        ensure!(verdict(f, *n) == Verdict::ExhibitsRI, "{f} (n={n}) not certified");
    }
    for (f, n) in &unknown_cases {
        ensure!(verdict(f, *n) == Verdict::Unknown, "{f} (n={n}) certified");
    }
    Ok(format!("{} ExhibitsRI, {} Unknown as expected", ri_cases.len(), unknown_cases.len()))
}

fn census_rows() -> Outcome {
    let opts = CensusOptions { jobs: 1, symmetry: true, keep_verdicts: false };
    for (n, ri_want, unknown_want) in [(1, 0, 4), (2, 8, 8), (3, 40, 216)] {
        let rep = ri::census(n, &RiParams::default_for(n), &opts).unwrap();
        ensure!((rep.ri, rep.unknown) == (ri_want, unknown_want), "n={n}: ({}, {})", rep.ri, rep.unknown);
    }
    let started = Instant::now();
    let rep = ri::census(4, &RiParams::default_for(4), &opts).unwrap();
    let target = 9952.0;
    let dev = (rep.ri as f64 - target).abs() / target;
    let hist: Vec<String> = rep.witness_histogram.iter().map(|(c, k)| format!("C={c}: {k}")).collect();
    let detail = format!(
        "n=1..3 exact; n=4 ri={} unknown={} ({:.2}% from 9952) witness [{}] in {:.1}s",
        rep.ri,
        rep.unknown,
        dev * 100.0,
        hist.join(", "),
        started.elapsed().as_secs_f64()
    );
    ensure!(dev.le(&0.05), "{detail}");
    Ok(detail)
}

fn sampling() -> Outcome {
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let opts = CensusOptions { jobs, symmetry: false, keep_verdicts: false };
    let started = Instant::now();
    let rep = ri::sample(5, 4000, 1, &RiParams::default_for(5), &opts).unwrap();
    let frac_ri = rep.ri as f64 / 4000.0;
    let target = 585.0 / 4000.0;
    let ci = rep.ci.as_ref().expect("sample reports a CI");
    let detail = format!(
        "n=5 seed 1: {}/4000 = {:.4} (target {:.4} ± 0.025), CI [{:.4}, {:.4}], {:.0}s on {jobs} worker(s)",
        rep.ri,
        frac_ri,
        target,
        ci.lower,
        ci.upper,
        started.elapsed().as_secs_f64()
    );
    ensure!((frac_ri - target).abs().le(&0.025), "{detail}");
    Ok(detail)
}

fn property_suites() -> Outcome {
    let seeded: [SeededCheck; 10] = [
        ("posterior normalization", props::posterior_normalization, 300),
        ("cf inversion", props::cf_inversion, 300),
        ("contradiction cancellation", props::contradiction_cancellation, 300),
        ("projection-conditioning", props::projection_conditioning, 300),
        ("order insensitivity", props::order_insensitivity, 300),
        ("flipped marginals", props::flipped_marginal, 300),
        ("certainty monotone in k", props::certainty_monotone, 60),
        ("certainty oracle n<=2 k<=4", props::certainty_oracle, 60),
        ("LP vs vertices", props::lp_vertex_agreement, 300),
        ("game value properties", props::game_properties, 40),
    ];
    let mut names = Vec::new();
    for (name, check, cases) in seeded {
        for seed in 0..cases {
            check(seed).map_err(|e| format!("{name}, seed {seed}: {e}"))?;
        }
        names.push(name);
    }
    for n in 1..=3 {
        props::census_determinism(n).map_err(|e| format!("census determinism: {e}"))?;
    }
    props::sample_determinism(4, 60, 3).map_err(|e| format!("sample determinism: {e}"))?;
    names.push("census determinism");
    for n in 1..=4 {
        props::xor_fold(n).map_err(|e| format!("antisymmetrization fold: {e}"))?;
    }
    names.push("XOR fold n<=4");
    Ok(names.join(", "))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("posterior goldens", posterior_goldens),
        ("example game", example_game),
        ("random-test heuristic grid", random_test_grid),
        ("test-complexity goldens", complexity_goldens),
        ("XOR maximality", xor_maximality),
        ("RI verdict goldens", ri_goldens),
        ("RI census", census_rows),
        ("RI sampling", sampling),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {}. {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {}. {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
