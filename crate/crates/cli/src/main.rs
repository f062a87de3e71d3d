//! `startreemix`: exact decisions about tropical mixtures of star trees.

mod report;

use std::fs;
use std::io::Read;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use startreemix::io::{parse_input, IoError, MetricDoc, QuartetDoc, TopologyDoc};
use startreemix::metric::quadruples;
use startreemix::mixture::{
    decide_two_star_mixture, enumerate_fiber_cases, sample_decomposition, CaseId, DecideOptions, MixtureError,
};
use startreemix::oracle::pattern::DEFAULT_BUDGET;
use startreemix::oracle::secant::find_cut_obstruction;
use startreemix::oracle::{k_star_feasible, secant_membership, star_rank_bounds, OracleConfig, OracleError, SignMode};
use startreemix::rational::{parse_rational, Rational};
use startreemix::tree::{classify_topology, Regime};
use startreemix::DissimilarityMap;

use report::{Envelope, Format};

#[derive(Parser, Debug)]
#[command(name = "startreemix", version, about = "Exact tests for tropical mixtures of star trees")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Weight regime: strict (> 0) or closed (>= 0).
    #[arg(long, global = true, value_enum, default_value_t = RegimeArg::Strict)]
    regime: RegimeArg,
    /// Cap on the oracle pattern space k^C(n,2).
    #[arg(long, global = true, env = "STARTREEMIX_BUDGET", default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Oracle worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for commands that sample.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also render every rational with N decimal digits.
    #[arg(long, global = true, value_name = "N")]
    decimals: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RegimeArg {
    Strict,
    Closed,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Strict => Regime::Strict,
            RegimeArg::Closed => Regime::Closed,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SignArg {
    Positive,
    Nonnegative,
    Signed,
}

impl From<SignArg> for SignMode {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Positive => SignMode::Positive,
            SignArg::Nonnegative => SignMode::Nonnegative,
            SignArg::Signed => SignMode::Signed,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Metric, tree metric and topology of the input.
    Classify {
        input: String,
        /// Report the four-point sums of every 4-subset.
        #[arg(long)]
        quartets: bool,
    },
    /// Is the input a mixture of two star trees?
    Decide {
        input: String,
        /// Also run the exhaustive oracle; it takes precedence.
        #[arg(long)]
        cross_check: bool,
    },
    /// Parametrized families of star pairs mixing to the input.
    Fibers { input: String },
    /// One star pair of a family, at (u, w) or at a seeded grid point.
    Sample {
        input: String,
        #[arg(long)]
        case: String,
        #[arg(long, requires = "w", allow_hyphen_values = true)]
        u: Option<String>,
        #[arg(long, requires = "u", allow_hyphen_values = true)]
        w: Option<String>,
    },
    /// Entrywise maximum of two inputs.
    Mix { first: String, second: String },
    /// Exhaustive k-star mixture test.
    Oracle {
        input: String,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = SignArg::Positive)]
        sign: SignArg,
    },
    /// Membership in the k-th tropical secant of the star span or cone.
    Secant {
        input: String,
        #[arg(long)]
        k: usize,
        /// Use the cone of positive combinations.
        #[arg(long)]
        positive: bool,
    },
    /// Smallest number of stars whose mixture is the input.
    Rank {
        input: String,
        #[arg(long, value_enum, default_value_t = SignArg::Positive)]
        sign: SignArg,
        #[arg(long, default_value_t = 3)]
        max_k: usize,
    },
    /// Two disjoint zero pairs with a positive cross distance.
    Obstruction { input: String },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classify { .. } => "classify",
            Command::Decide { .. } => "decide",
            Command::Fibers { .. } => "fibers",
            Command::Sample { .. } => "sample",
            Command::Mix { .. } => "mix",
            Command::Oracle { .. } => "oracle",
            Command::Secant { .. } => "secant",
            Command::Rank { .. } => "rank",
            Command::Obstruction { .. } => "obstruction",
        }
    }
}

#[derive(Error, Debug)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Budget(OracleError),
    #[error(transparent)]
    Domain(MixtureError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Budget(_) => 2,
            CliError::Domain(_) => 3,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BudgetExceeded { .. } => CliError::Budget(e),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<MixtureError> for CliError {
    fn from(e: MixtureError) -> Self {
        match e {
            MixtureError::Oracle(o) => o.into(),
            MixtureError::Metric(_) | MixtureError::Tree(_) | MixtureError::UnknownCase(_) => {
                CliError::Input(e.to_string())
            }
            other => CliError::Domain(other),
        }
    }
}

fn read_source(path: &str) -> Result<String, CliError> {
    let mut text = String::new();
    let result = if path == "-" {
        std::io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        fs::read_to_string(path).map(|t| text = t)
    };
    result.map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    Ok(text)
}

fn load(path: &str, regime: Regime) -> Result<DissimilarityMap, CliError> {
    let input = parse_input(&read_source(path)?, regime).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    Ok(input.metric())
}

fn rational_arg(name: &str, text: &str) -> Result<Rational, CliError> {
    parse_rational(text).map_err(|e| CliError::Input(format!("--{name}: {e}")))
}

fn to_value<T: serde::Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("report types serialize")
}

fn run(cli: &Cli) -> Result<Value, CliError> {
    let g = &cli.global;
    let regime: Regime = g.regime.into();
    let oracle = OracleConfig {
        budget: g.budget,
        threads: g.threads,
    };
    match &cli.command {
        Command::Classify { input, quartets } => {
            let d = load(input, regime)?;
            let mut out = json!({
                "n": d.n(),
                "metric": d.is_metric(),
                "tree_metric": d.is_tree_metric(),
                "topology": to_value(&TopologyDoc::from(&classify_topology(&d))),
            });
            if *quartets {
                let rows: Vec<QuartetDoc> = quadruples(d.n())
                    .map(|[i, j, k, l]| QuartetDoc::from(&d.quartet_pairing(i, j, k, l).expect("distinct taxa")))
                    .collect();
                out["quartets"] = to_value(&rows);
            }
            Ok(out)
        }
        Command::Decide { input, cross_check } => {
            let d = load(input, regime)?;
            let opts = DecideOptions {
                regime,
                cross_check: *cross_check,
                oracle,
            };
            Ok(to_value(&decide_two_star_mixture(&d, &opts)?))
        }
        Command::Fibers { input } => {
            let d = load(input, regime)?;
            Ok(to_value(&enumerate_fiber_cases(&d, regime)?))
        }
        Command::Sample { input, case, u, w } => {
            let d = load(input, regime)?;
            let case: CaseId = case.parse()?;
            let (u, w) = match (u, w) {
                (Some(u), Some(w)) => (rational_arg("u", u)?, rational_arg("w", w)?),
                _ => {
                    let families = enumerate_fiber_cases(&d, regime)?;
                    let family = families.iter().find(|f| f.id == case).ok_or_else(|| {
                        MixtureError::CaseNotApplicable {
                            case,
                            reason: "the weight condition for this family fails".into(),
                        }
                    })?;
                    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
                    family
                        .grid()
                        .choose(&mut rng)
                        .cloned()
                        .ok_or(MixtureError::UnboundedDomain)?
                }
            };
            Ok(to_value(&sample_decomposition(&d, case, &u, &w, regime)?))
        }
        Command::Mix { first, second } => {
            let a = load(first, regime)?;
            let b = load(second, regime)?;
            let m = a.tropical_mix(&b).map_err(|e| CliError::Input(e.to_string()))?;
            Ok(json!({
                "metric": to_value(&MetricDoc::from(&m)),
                "topology": to_value(&TopologyDoc::from(&classify_topology(&m))),
            }))
        }
        Command::Oracle { input, k, sign } => {
            let d = load(input, regime)?;
            Ok(to_value(&k_star_feasible(&d, *k, (*sign).into(), &oracle)?))
        }
        Command::Secant { input, k, positive } => {
            let d = load(input, regime)?;
            let f = secant_membership(d.n(), d.entries(), *k, *positive, &oracle)?;
            Ok(json!({ "k": k, "positive": positive, "membership": to_value(&f) }))
        }
        Command::Rank { input, sign, max_k } => {
            let d = load(input, regime)?;
            if *max_k == 0 {
                return Err(CliError::Input("--max-k must be at least 1".into()));
            }
            Ok(to_value(&star_rank_bounds(&d, (*sign).into(), *max_k, &oracle)))
        }
        Command::Obstruction { input } => {
            let d = load(input, regime)?;
            let one = |(a, b): (usize, usize)| [a + 1, b + 1];
            Ok(match find_cut_obstruction(&d) {
                Some(o) => json!({
                    "obstructed": true,
                    "zero_pairs": [one(o.zero_pairs[0]), one(o.zero_pairs[1])],
                    "cross": one(o.cross),
                }),
                None => json!({ "obstructed": false }),
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(result) => {
            let envelope = Envelope::new(cli.command.name(), cli.global.seed, result, cli.global.decimals);
            print!("{}", envelope.render(cli.global.format));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
