use anyhow::{bail, Result};
use iag_core::complexity::{xor_maximality_check, CertaintyScan, Complexity, XorReport};
use iag_core::game::{
    evaluate_strategy, monte_carlo, random_test_value, solve, uniform_split_strategy, GameSpec, MonteCarloEstimate,
    Policy, Strategy,
};
use iag_core::prob::{best_action, threshold, BeliefModel, Guess, OutcomeCounts, Payoffs};
use iag_core::rational::{fmt_rational, to_f64};
use iag_core::ri::{self, CensusOptions, CensusReport, RiVerdict, SCHEMA_VERSION};
use iag_core::{Rational, TruthTable};
use serde::Serialize;

use crate::args::{
    parse_observations, CensusArgs, Cli, Command, ComplexityArgs, Heuristic, PosteriorArgs, RiArgs, SampleArgs,
    SolveArgs,
};
use crate::render::{csv, emit, exact, json, pick};
use crate::InvariantViolation;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Posterior(a) => posterior(&a),
        Command::Solve(a) => solve_cmd(&a),
        Command::Ri(a) => ri_cmd(&a),
        Command::Census(a) => census_cmd(&a),
        Command::Sample(a) => sample_cmd(&a),
        Command::Complexity(a) => complexity_cmd(&a),
    }
}

fn r(x: &Rational) -> String {
    fmt_rational(x)
}

#[derive(Serialize)]
struct PayoffReport {
    g: String,
    b: String,
}

impl From<&Payoffs> for PayoffReport {
    fn from(p: &Payoffs) -> Self {
        Self { g: r(&p.g), b: r(&p.b) }
    }
}

// ---------------------------------------------------------------------------
// posterior
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PosteriorReport {
    schema_version: u32,
    table: String,
    n: usize,
    observations: String,
    posterior: String,
    posterior_decimal: f64,
    threshold: String,
    action: Guess,
    value: String,
    value_decimal: f64,
}

fn posterior(a: &PosteriorArgs) -> Result<()> {
    let tt = a.formula.table()?;
    let n = tt.num_vars();
    let model = BeliefModel::new(a.model.prior(n)?, a.model.accuracy(n)?)?;
    let payoffs = a.payoffs.payoffs()?;
    let counts = parse_observations(&a.obs, n)?;
    let p = model.posterior_formula(&tt, &counts)?;
    let (action, value) = best_action(&p, &payoffs);
    let q = threshold(&payoffs);
    let report = PosteriorReport {
        schema_version: SCHEMA_VERSION,
        table: tt.to_hex(),
        n,
        observations: counts.to_string(),
        posterior: r(&p),
        posterior_decimal: to_f64(&p),
        threshold: r(&q),
        action,
        value: r(&value),
        value_decimal: to_f64(&value),
    };
    let body = pick(
        a.out.format,
        || {
            format!(
                "observations   {}\nPr(phi | S)    {}\nthreshold q    {}\nbest action    {}\nexpected value {}\n",
                report.observations,
                exact(&p),
                exact(&q),
                action,
                exact(&value)
            )
        },
        || json(&report),
        Some(&|| {
            csv(
                &["table_bits", "observations", "posterior", "action", "value"],
                &[vec![
                    report.table.clone(),
                    report.observations.clone(),
                    report.posterior.clone(),
                    action.to_string(),
                    report.value.clone(),
                ]],
            )
        }),
    )?;
    emit(&a.out, &body)
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct StrategyLine {
    depth: u32,
    history: String,
    action: String,
    value: String,
}

#[derive(Serialize)]
struct SolveReport {
    schema_version: u32,
    table: String,
    n: usize,
    k: u32,
    alpha: Vec<String>,
    prior: Vec<String>,
    payoffs: PayoffReport,
    /// `optimal`, `random` or `uniform`.
    policy: &'static str,
    value: String,
    value_decimal: f64,
    /// One-based variables whose first test attains the optimum.
    #[serde(skip_serializing_if = "Option::is_none")]
    first_moves: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chosen_first_move: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    strategy: Vec<StrategyLine>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<MonteCarloEstimate>,
}

/// Histories reachable under `strategy`, depth first with `T` before `F`.
fn render_strategy(
    game: &GameSpec,
    strategy: &Strategy,
    value_at: &dyn Fn(&OutcomeCounts) -> Option<Rational>,
    max_depth: u32,
) -> Vec<StrategyLine> {
    fn go(
        s: &Strategy,
        value_at: &dyn Fn(&OutcomeCounts) -> Option<Rational>,
        h: OutcomeCounts,
        max_depth: u32,
        out: &mut Vec<StrategyLine>,
    ) {
        let depth = h.total();
        if depth > max_depth {
            return;
        }
        let value = value_at(&h).map_or_else(|| "?".to_string(), |v| r(&v));
        if let Some(i) = s.test_at(&h) {
            out.push(StrategyLine { depth, history: h.to_string(), action: format!("test v{}", i + 1), value });
            for b in [true, false] {
                go(s, value_at, h.with(i, b), max_depth, out);
            }
        } else if let Some(g) = s.action_at(&h) {
            out.push(StrategyLine { depth, history: h.to_string(), action: g.to_string(), value });
        }
    }
    let mut out = Vec::new();
    go(strategy, value_at, OutcomeCounts::empty(game.num_vars()), max_depth, &mut out);
    out
}

fn solve_cmd(a: &SolveArgs) -> Result<()> {
    let tt = a.formula.table()?;
    let n = tt.num_vars();
    let prior = a.model.prior(n)?;
    let alpha = a.model.accuracy(n)?;
    let payoffs = a.payoffs.payoffs()?;
    let game = GameSpec::new(tt.clone(), prior.clone(), alpha.clone(), a.budget, payoffs.clone())?;

    let mut report = SolveReport {
        schema_version: SCHEMA_VERSION,
        table: tt.to_hex(),
        n,
        k: a.budget,
        alpha: (0..n).map(|i| r(alpha.get(i))).collect(),
        prior: (0..n).map(|i| r(prior.get(i))).collect(),
        payoffs: (&payoffs).into(),
        policy: "optimal",
        value: String::new(),
        value_decimal: 0.0,
        first_moves: None,
        chosen_first_move: None,
        strategy: Vec::new(),
        monte_carlo: None,
    };

    let value = match a.heuristic {
        None => {
            let sol = solve(&game)?;
            if evaluate_strategy(&game, &sol.strategy)? != sol.value {
                return Err(InvariantViolation("optimal strategy does not attain the optimal value".into()).into());
            }
            if a.budget > 0 {
                report.first_moves = Some(sol.first_moves(&game).into_iter().map(|i| i + 1).collect());
                report.chosen_first_move = sol.strategy.test_at(&OutcomeCounts::empty(n)).map(|i| i + 1);
            }
            report.strategy = render_strategy(&game, &sol.strategy, &|h| sol.value_at(h).cloned(), a.depth);
            if let Some(seed) = a.seed {
                report.monte_carlo = Some(monte_carlo(&game, Policy::Fixed(&sol.strategy), a.samples, seed)?);
            }
            sol.value
        }
        Some(Heuristic::Random) => {
            report.policy = "random";
            if let Some(seed) = a.seed {
                report.monte_carlo = Some(monte_carlo(&game, Policy::RandomTest, a.samples, seed)?);
            }
            random_test_value(&game)?
        }
        Some(Heuristic::Uniform) => {
            report.policy = "uniform";
            let s = uniform_split_strategy(&game)?;
            let value = evaluate_strategy(&game, &s)?;
            report.strategy = render_strategy(&game, &s, &|_| None, a.depth);
            for line in &mut report.strategy {
                line.value = String::new();
            }
            if let Some(seed) = a.seed {
                report.monte_carlo = Some(monte_carlo(&game, Policy::Fixed(&s), a.samples, seed)?);
            }
            value
        }
    };
    report.value = r(&value);
    report.value_decimal = to_f64(&value);

    let body = pick(
        a.out.format,
        || {
            let mut s = format!("policy         {}\nvalue          {}\n", report.policy, exact(&value));
            if let (Some(moves), Some(chosen)) = (&report.first_moves, report.chosen_first_move) {
                let names: Vec<String> = moves.iter().map(|i| format!("v{i}")).collect();
                s += &format!("first moves    {{{}}} (chosen v{chosen})\n", names.join(", "));
            }
            if let Some(mc) = &report.monte_carlo {
                s += &format!(
                    "monte carlo    {:.6} ± {:.6} ({} plays, seed {})\n",
                    mc.mean, mc.std_err, mc.samples, mc.seed
                );
            }
            if !report.strategy.is_empty() {
                s += &format!("strategy (depth <= {})\n", a.depth);
                for line in &report.strategy {
                    let value = if line.value.is_empty() { String::new() } else { format!("  [{}]", line.value) };
                    s += &format!(
                        "{}{} -> {}{}\n",
                        "  ".repeat(line.depth as usize + 1),
                        line.history,
                        line.action,
                        value
                    );
                }
            }
            s
        },
        || json(&report),
        Some(&|| {
            csv(
                &["table_bits", "k", "policy", "value", "first_moves"],
                &[vec![
                    report.table.clone(),
                    report.k.to_string(),
                    report.policy.to_string(),
                    report.value.clone(),
                    report
                        .first_moves
                        .as_ref()
                        .map(|m| m.iter().map(|i| format!("v{i}")).collect::<Vec<_>>().join(" "))
                        .unwrap_or_default(),
                ]],
            )
        }),
    )?;
    emit(&a.out, &body)
}

// ---------------------------------------------------------------------------
// ri
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RiReport<'a> {
    schema_version: u32,
    table: String,
    n: usize,
    c_grid: Vec<String>,
    mode: ri::TMinusMode,
    #[serde(flatten)]
    verdict: &'a RiVerdict,
}

fn opt(x: &Option<Rational>) -> String {
    x.as_ref().map_or_else(|| "-".to_string(), exact)
}

fn ri_text(tt: &TruthTable, v: &RiVerdict) -> String {
    let mut s = format!(
        "table          {} (n = {})\nverdict        {:?}\nwitness C      {}\nm+             {}\nMIN*           {}\n",
        tt.to_hex(),
        tt.num_vars(),
        v.verdict,
        opt(&v.witness_c),
        opt(&v.m_plus),
        exact(&v.min_star)
    );
    if let Some(c) = &v.positive_optimum_c {
        s += &format!(
            "note           m+ and T- tests pass at C = {}, but a relevant conflict LP has an optimum with every c_j > 0\n",
            r(c)
        );
    }
    if let Some(d) = &v.diagnostics {
        s += &format!("diagnostics at C = {}\n  conflict LP minima\n", r(&d.c));
        for m in &d.conflict {
            s += &format!("    A = {}  min = {}\n", m.assignment, r(&m.min));
        }
        s += "  inattentive LP minima\n";
        for m in &d.inattentive {
            let min = m.min.as_ref().map_or_else(|| "infeasible".to_string(), r);
            s += &format!("    A = {}  i = v{}  j = v{}  min = {}\n", m.assignment, m.i, m.j, min);
        }
        s += "  T- regions\n";
        for t in &d.t_minus {
            s += &format!("    A = {}  i = v{}  {}\n", t.assignment, t.i, if t.empty { "empty" } else { "nonempty" });
        }
        if !d.positive_optima.is_empty() {
            s += &format!("  positive optima at {}\n", d.positive_optima.join(", "));
        }
    }
    s
}

fn ri_cmd(a: &RiArgs) -> Result<()> {
    let tt = a.formula.table()?;
    let params = a.ri.params(tt.num_vars())?;
    let v = if a.explain { ri::exhibits_ri_explained(&tt, &params) } else { ri::exhibits_ri(&tt, &params) };
    let report = RiReport {
        schema_version: SCHEMA_VERSION,
        table: tt.to_hex(),
        n: tt.num_vars(),
        c_grid: params.c_grid.iter().map(r).collect(),
        mode: params.mode,
        verdict: &v,
    };
    let body = pick(
        a.out.format,
        || ri_text(&tt, &v),
        || json(&report),
        Some(&|| {
            csv(
                &["table_bits", "n", "verdict", "witness_c", "m_plus", "min_star"],
                &[vec![
                    report.table.clone(),
                    report.n.to_string(),
                    format!("{:?}", v.verdict),
                    v.witness_c.as_ref().map(r).unwrap_or_default(),
                    v.m_plus.as_ref().map(r).unwrap_or_default(),
                    r(&v.min_star),
                ]],
            )
        }),
    )?;
    emit(&a.out, &body)
}

// ---------------------------------------------------------------------------
// census / sample
// ---------------------------------------------------------------------------

fn census_text(rep: &CensusReport) -> String {
    let frac = rep.ri as f64 / rep.total as f64;
    let mut s = format!(
        "n              {}\ntables         {}\nExhibitsRI     {} ({:.6})\nUnknown        {} (positive optimum: {})\nT- mode        {:?}\nC grid         {}\n",
        rep.n,
        rep.total,
        rep.ri,
        frac,
        rep.unknown,
        rep.positive_optimum,
        rep.mode,
        rep.params.c_grid.join(", ")
    );
    if let Some(seed) = rep.seed {
        s += &format!("seed           {seed}\n");
    }
    if let Some(ci) = &rep.ci {
        s += &format!(
            "95% CI         [{:.4}, {:.4}] (worst-case half-width {:.4})\n",
            ci.lower, ci.upper, ci.worst_case_half_width
        );
    }
    for (c, count) in &rep.witness_histogram {
        s += &format!("witness C={c:<8}{count}\n");
    }
    s
}

fn census_csv(rep: &CensusReport) -> Result<String> {
    let mut header = vec!["n", "total", "ri", "unknown", "positive_optimum", "fraction", "mode"];
    let mut row = vec![
        rep.n.to_string(),
        rep.total.to_string(),
        rep.ri.to_string(),
        rep.unknown.to_string(),
        rep.positive_optimum.to_string(),
        format!("{:.6}", rep.ri as f64 / rep.total as f64),
        format!("{:?}", rep.mode).to_lowercase(),
    ];
    if let (Some(seed), Some(ci)) = (rep.seed, &rep.ci) {
        header.extend(["seed", "ci_lower", "ci_upper"]);
        row.extend([seed.to_string(), format!("{:.6}", ci.lower), format!("{:.6}", ci.upper)]);
    }
    csv(&header, &[row])
}

fn emit_census(out: &crate::args::OutputArgs, rep: &CensusReport) -> Result<()> {
    let body = pick(out.format, || census_text(rep), || json(rep), Some(&|| census_csv(rep)))?;
    emit(out, &body)
}

fn census_cmd(a: &CensusArgs) -> Result<()> {
    let params = a.ri.params(a.n)?;
    let opts = CensusOptions { jobs: a.jobs.get()?, symmetry: !a.no_symmetry, keep_verdicts: a.verdicts };
    eprintln!("census: n = {}, {} tables, {} jobs", a.n, 1u128 << (1u32 << a.n.min(7)), opts.jobs);
    let rep = ri::census(a.n, &params, &opts)?;
    eprintln!("census: {} tables evaluated in {} ms", rep.stats.evaluated, rep.stats.runtime_ms);
    if rep.ri + rep.unknown != rep.total {
        return Err(InvariantViolation("census counts do not add up".into()).into());
    }
    emit_census(&a.out, &rep)
}

fn sample_cmd(a: &SampleArgs) -> Result<()> {
    let params = a.ri.params(a.n)?;
    let opts = CensusOptions { jobs: a.jobs.get()?, symmetry: false, keep_verdicts: a.verdicts };
    eprintln!("sample: n = {}, {} tables, seed {}, {} jobs", a.n, a.samples, a.seed, opts.jobs);
    let rep = ri::sample(a.n, a.samples, a.seed, &params, &opts)?;
    eprintln!("sample: done in {} ms", rep.stats.runtime_ms);
    emit_census(&a.out, &rep)
}

// ---------------------------------------------------------------------------
// complexity
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ComplexityReport {
    schema_version: u32,
    table: String,
    n: usize,
    alpha: Vec<String>,
    prior: Vec<String>,
    q: String,
    k_max: u32,
    cpl: Complexity,
    /// Best certainty `|Pr(φ | S) − 1/2|` for each length up to `cpl`.
    certainty: Vec<String>,
    /// Reduced count profiles attaining the certainty at the last length.
    optimal_sequences: Vec<String>,
}

fn complexity_cmd(a: &ComplexityArgs) -> Result<()> {
    let q = a.threshold()?;
    if a.all {
        return complexity_all(a, q);
    }
    let tt = a.formula_args()?.table()?;
    let n = tt.num_vars();
    let prior = a.model.prior(n)?;
    let alpha = a.model.accuracy(n)?;
    // Validates q and the model.
    let spec = iag_core::complexity::ComplexitySpec::new(tt.clone(), prior.clone(), alpha.clone(), q.clone(), a.k_max)?;

    let mut scan = CertaintyScan::new(&spec.tt, &spec.model);
    let mut certainty = Vec::new();
    let mut cpl = Complexity::Unbounded(a.k_max);
    let mut last = None;
    for k in 0..=a.k_max {
        let set = scan.next_set()?;
        certainty.push(r(&set.certainty));
        let done = set.certainty > q;
        last = Some(set);
        if done {
            cpl = Complexity::Finite(k);
            break;
        }
    }
    let report = ComplexityReport {
        schema_version: SCHEMA_VERSION,
        table: tt.to_hex(),
        n,
        alpha: (0..n).map(|i| r(alpha.get(i))).collect(),
        prior: (0..n).map(|i| r(prior.get(i))).collect(),
        q: r(&q),
        k_max: a.k_max,
        cpl,
        certainty,
        optimal_sequences: last.map(|s| s.members.iter().map(ToString::to_string).collect()).unwrap_or_default(),
    };
    let body = pick(
        a.out.format,
        || {
            let mut s = format!(
                "table          {} (n = {})\nq              {}\ncpl            {}\n",
                report.table,
                n,
                exact(&q),
                cpl
            );
            for (k, c) in report.certainty.iter().enumerate() {
                s += &format!("  k = {k:<3} best certainty {c}\n");
            }
            if !report.optimal_sequences.is_empty() {
                s += &format!("attained by    {}\n", report.optimal_sequences.join(" "));
            }
            s
        },
        || json(&report),
        Some(&|| csv(&["table_bits", "cpl"], &[vec![report.table.clone(), cpl.to_string()]])),
    )?;
    emit(&a.out, &body)
}

fn complexity_all(a: &ComplexityArgs, q: Rational) -> Result<()> {
    if a.model.prior.is_some() {
        bail!("--all uses the uniform prior; drop --prior");
    }
    let Some(n) = a.n else { bail!("--all needs -n") };
    let alpha = a.model.uniform_alpha()?;
    let jobs = a.jobs.get()?;
    eprintln!("complexity: all {} tables on n = {n}, {jobs} jobs", 1u128 << (1u32 << n.min(7)));
    let rep: XorReport = xor_maximality_check(n, &alpha, &q, a.k_max, jobs)?;
    let body = pick(
        a.out.format,
        || {
            let mut s = format!(
                "n              {}\nq              {}\ncpl(XOR)       {}\ncpl(!XOR)      {}\nXOR maximal    {}\ndistribution\n",
                n,
                exact(&q),
                rep.xor_cpl,
                rep.not_xor_cpl,
                rep.holds
            );
            for d in &rep.distribution {
                s += &format!("  cpl = {:<5} {}\n", d.cpl.to_string(), d.tables);
            }
            s
        },
        || json(&rep),
        Some(&|| {
            let rows: Vec<Vec<String>> = rep.tables.iter().map(|t| vec![t.table.clone(), t.cpl.to_string()]).collect();
            csv(&["table_bits", "cpl"], &rows)
        }),
    )?;
    emit(&a.out, &body)?;
    if !rep.holds {
        return Err(InvariantViolation(format!(
            "XOR does not attain the maximal complexity; exceeded by {}",
            rep.violations.join(", ")
        ))
        .into());
    }
    Ok(())
}
