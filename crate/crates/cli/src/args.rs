use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use iag_core::formula::parse_formula;
use iag_core::prob::{AccuracyVector, OutcomeCounts, Payoffs, ProductPrior};
use iag_core::rational::parse_rational;
use iag_core::ri::{RiParams, TMinusMode};
use iag_core::{Rational, TruthTable};

const AFTER_HELP: &str = "\
Rationals are written a/b or as integers. Formulas use v1..vn, T, F, !, &, ^, |
(loosest to tightest: |, ^, &, !). Exit codes: 0 success, 1 usage or validation
error, 2 resource cap exceeded, 3 internal invariant violated.";

#[derive(Debug, Parser)]
#[command(name = "iag", version, about = "Exact analysis of information-acquisition games", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Posterior of the formula after some observations, with the best final move.
    Posterior(PosteriorArgs),
    /// Optimal expected payoff and strategy by backward induction.
    Solve(SolveArgs),
    /// Rational-inattention verdict for one formula.
    Ri(RiArgs),
    /// Verdict counts over every truth table on n <= 4 variables.
    #[command(after_help = "CSV columns: n,total,ri,unknown,positive_optimum,fraction,mode")]
    Census(CensusArgs),
    /// Verdict counts over a seeded uniform sample of truth tables.
    #[command(after_help = "CSV columns: n,total,ri,unknown,positive_optimum,fraction,mode,seed,ci_lower,ci_upper")]
    Sample(SampleArgs),
    /// Test complexity of a formula, or of every table with --all.
    #[command(after_help = "CSV columns (--all): table_bits,cpl. Single formula: table_bits,cpl.")]
    Complexity(ComplexityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct FormulaSource {
    /// Formula text, e.g. "v1|v2".
    #[arg(short = 'f', long)]
    pub formula: Option<String>,
    /// Truth table as hex, bit a = value at assignment a (v1 is the low bit); needs -n.
    #[arg(long)]
    pub table: Option<String>,
}

#[derive(Debug, Args)]
pub struct FormulaArgs {
    #[command(flatten)]
    pub source: FormulaSource,
    /// Number of variables [default: largest index in the formula].
    #[arg(short = 'n', long = "vars")]
    pub n: Option<usize>,
}

impl FormulaArgs {
    pub fn table(&self) -> Result<TruthTable> {
        if let Some(text) = &self.source.formula {
            let ast = parse_formula(text).with_context(|| format!("parsing formula {text:?}"))?;
            let n = match self.n {
                Some(n) => n,
                None => ast.max_var().map_or(0, |i| i + 1),
            };
            Ok(iag_core::formula::lower(&ast, n)?)
        } else {
            let hex = self.source.table.as_deref().expect("clap group requires one source");
            let Some(n) = self.n else { bail!("--table needs -n") };
            Ok(TruthTable::from_hex(n, hex)?)
        }
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Prior Pr(vi = T): one rational for every variable or a comma-separated list [default: 1/2].
    #[arg(long)]
    pub prior: Option<String>,
    /// Test accuracy α in (0, 1/2): one rational or a comma-separated list.
    #[arg(long, default_value = "1/4")]
    pub alpha: String,
}

impl ModelArgs {
    pub fn prior(&self, n: usize) -> Result<ProductPrior> {
        match &self.prior {
            None => Ok(ProductPrior::uniform(n)),
            Some(s) => Ok(ProductPrior::new(per_variable(s, n, "--prior")?)?),
        }
    }

    pub fn accuracy(&self, n: usize) -> Result<AccuracyVector> {
        Ok(AccuracyVector::new(per_variable(&self.alpha, n, "--alpha")?)?)
    }

    /// The accuracy when it must be the same for every variable.
    pub fn uniform_alpha(&self) -> Result<Rational> {
        let v = rational_list(&self.alpha)?;
        match v.as_slice() {
            [a] => Ok(a.clone()),
            _ => bail!("--alpha must be a single value here"),
        }
    }
}

#[derive(Debug, Args)]
pub struct PayoffArgs {
    /// Payoffs g,b for a right and a wrong guess (g > 0 > b).
    #[arg(long, default_value = "1,-16", allow_hyphen_values = true)]
    pub payoffs: String,
}

impl PayoffArgs {
    pub fn payoffs(&self) -> Result<Payoffs> {
        parse_payoffs(&self.payoffs)
    }
}

#[derive(Debug, Args)]
pub struct PosteriorArgs {
    #[command(flatten)]
    pub formula: FormulaArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub payoffs: PayoffArgs,
    /// Observations, e.g. "v1:T,v2:F" or "v1:T*3"; empty for none.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    pub obs: String,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Heuristic {
    /// Test a uniformly random variable each time.
    Random,
    /// Test each variable k/n times in index order.
    Uniform,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub formula: FormulaArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub payoffs: PayoffArgs,
    /// Number of tests.
    #[arg(short = 'k', long, default_value_t = 2)]
    pub budget: u32,
    /// Report a heuristic's exact value instead of the optimum.
    #[arg(long, value_enum)]
    pub heuristic: Option<Heuristic>,
    /// Strategy rendering depth.
    #[arg(long, default_value_t = 3)]
    pub depth: u32,
    /// Seed for a Monte-Carlo cross-check of the reported value (skipped without it).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte-Carlo plays.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RiFlags {
    /// Comma-separated margins C to try [default: 1/(2n),1/(4n),1/(8n),1/(16n)].
    #[arg(long)]
    pub c_grid: Option<String>,
    /// Read T⁻ with closed inequalities instead of strict ones.
    #[arg(long)]
    pub closed_tminus: bool,
}

impl RiFlags {
    pub fn params(&self, n: usize) -> Result<RiParams> {
        let mode = if self.closed_tminus { TMinusMode::Closed } else { TMinusMode::Strict };
        let params = match &self.c_grid {
            None => RiParams { mode, ..RiParams::default_for(n) },
            Some(s) => RiParams::new(rational_list(s)?, mode),
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Args)]
pub struct RiArgs {
    #[command(flatten)]
    pub formula: FormulaArgs,
    #[command(flatten)]
    pub ri: RiFlags,
    /// Include every LP minimum and region test.
    #[arg(long)]
    pub explain: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct JobsArg {
    /// Worker threads [default: available parallelism].
    #[arg(long, env = "IAG_JOBS")]
    pub jobs: Option<usize>,
}

impl JobsArg {
    pub fn get(&self) -> Result<usize> {
        match self.jobs {
            Some(0) => bail!("--jobs must be positive"),
            Some(j) => Ok(j),
            None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

#[derive(Debug, Args)]
pub struct CensusArgs {
    /// Number of variables (at most 4).
    #[arg(short = 'n', long = "vars")]
    pub n: usize,
    #[command(flatten)]
    pub ri: RiFlags,
    /// Evaluate every table instead of one per symmetry orbit.
    #[arg(long)]
    pub no_symmetry: bool,
    /// Include the per-table verdicts (JSON only).
    #[arg(long)]
    pub verdicts: bool,
    #[command(flatten)]
    pub jobs: JobsArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Number of variables (at most 10).
    #[arg(short = 'n', long = "vars")]
    pub n: usize,
    /// Number of tables to draw.
    #[arg(long, default_value_t = 4000)]
    pub samples: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub ri: RiFlags,
    /// Include the per-table verdicts (JSON only).
    #[arg(long)]
    pub verdicts: bool,
    #[command(flatten)]
    pub jobs: JobsArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    #[arg(short = 'f', long, conflicts_with_all = ["table", "all"])]
    pub formula: Option<String>,
    /// Truth table as hex; needs -n.
    #[arg(long, conflicts_with = "all")]
    pub table: Option<String>,
    /// Every table on n variables, checking that XOR attains the maximum.
    #[arg(long)]
    pub all: bool,
    /// Number of variables.
    #[arg(short = 'n', long = "vars")]
    pub n: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Certainty threshold q in (0, 1/2] [default: derived from --payoffs].
    #[arg(short = 'q', long)]
    pub q: Option<String>,
    /// Payoffs g,b used to derive q = (b+g)/(2(b-g)).
    #[arg(long, default_value = "1,-16", allow_hyphen_values = true)]
    pub payoffs: String,
    /// Largest budget searched.
    #[arg(long, default_value_t = iag_core::complexity::DEFAULT_K_MAX)]
    pub k_max: u32,
    #[command(flatten)]
    pub jobs: JobsArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

impl ComplexityArgs {
    pub fn threshold(&self) -> Result<Rational> {
        match &self.q {
            Some(q) => Ok(parse_rational(q)?),
            None => Ok(iag_core::prob::threshold(&parse_payoffs(&self.payoffs)?)),
        }
    }

    pub fn formula_args(&self) -> Result<FormulaArgs> {
        if self.formula.is_none() && self.table.is_none() {
            bail!("give -f, --table or --all");
        }
        Ok(FormulaArgs {
            source: FormulaSource { formula: self.formula.clone(), table: self.table.clone() },
            n: self.n,
        })
    }
}

pub fn rational_list(s: &str) -> Result<Vec<Rational>> {
    s.split(',')
        .map(|t| parse_rational(t).map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()
        .with_context(|| format!("parsing {s:?}"))
}

/// One value broadcast to `n` variables, or exactly `n` values.
fn per_variable(s: &str, n: usize, flag: &str) -> Result<Vec<Rational>> {
    let v = rational_list(s)?;
    match v.len() {
        1 => Ok(vec![v[0].clone(); n]),
        len if len == n => Ok(v),
        len => bail!("{flag} has {len} values but there are {n} variables"),
    }
}

pub fn parse_payoffs(s: &str) -> Result<Payoffs> {
    let v = rational_list(s)?;
    let [g, b] = v.as_slice() else { bail!("--payoffs needs two values g,b") };
    Ok(Payoffs::new(g.clone(), b.clone())?)
}

/// Parses `v1:T,v2:F*3`-style observation lists.
pub fn parse_observations(s: &str, n: usize) -> Result<OutcomeCounts> {
    let mut counts = OutcomeCounts::empty(n);
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let bad = || anyhow::anyhow!("bad observation {item:?}; expected vK:T, vK:F or vK:T*m");
        let (var, rest) = item.split_once(':').ok_or_else(bad)?;
        let index: usize = var.strip_prefix('v').ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if index == 0 || index > n {
            bail!("observation {item:?} names a variable outside v1..v{n}");
        }
        let (value, times) = match rest.split_once('*') {
            Some((v, m)) => (v, m.parse::<u32>().map_err(|_| bad())?),
            None => (rest, 1),
        };
        let value = match value {
            "T" | "t" => true,
            "F" | "f" => false,
            _ => return Err(bad()),
        };
        for _ in 0..times {
            counts.record(index - 1, value);
        }
    }
    Ok(counts)
}
