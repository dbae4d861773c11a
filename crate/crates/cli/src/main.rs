use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use noisy_ea::chain::{
    dominance_check_estimated, estimate_rows, lemma4_fuzz, DominanceReport, EfhtVector, LumpedChain,
};
use noisy_ea::lab::{
    cover_time_path_from, efht_report, emit_csv, ert_sweep, gap_sweep, pnt_scan, write_csv, CoverReport,
    ExperimentConfig, PntConfig, Report,
};
use noisy_ea::{
    dominance_check, efht_partition, efht_solve, noiseless_chain, noisy_chain_reeval, noisy_chain_singleeval,
    AlgoConfig, EvalPolicy, NoiseModel, ProblemSpec, Rational, Scalar, SelectionRule,
};

const RUN_WARNING: u64 = 1 << 20;

#[derive(Parser)]
#[command(name = "noisy-ea", version, about = "Noisy evolutionary algorithm experiments and exact chain analysis")]
struct Cli {
    /// Master seed; overrides any seed in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimated running time per starting point.
    Ert {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative running-time gap between a noisy and a noiseless setting.
    Gap {
        /// Noisy experiment.
        #[arg(long)]
        config: PathBuf,
        /// Noiseless experiment; defaults to `--config` with the noise removed.
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Running time over a grid of problem sizes and noise levels.
    PntScan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean cover time of random walks on path graphs.
    CoverTime {
        #[arg(long, value_delimiter = ',', required = true)]
        vertices: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        walks: u64,
        /// Start vertex; uniformly random if omitted.
        #[arg(long)]
        start: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact expected hitting time of every chain state.
    ChainEfht {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Easier/harder dominance of a noisy chain against the noiseless one.
    CheckDominance {
        #[command(flatten)]
        chain: ChainArgs,
        /// Simulated steps per state when lambda > 1.
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
        #[arg(long, default_value_t = 4.0)]
        sigmas: f64,
    },
    /// Random instances of the weighted-sum comparison lemma.
    Lemma4Fuzz {
        #[arg(long, default_value_t = 100_000)]
        instances: u64,
        #[arg(long, default_value_t = 20)]
        max_m: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    #[value(name = "onemax")]
    OneMax,
    Trap,
    Jump,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Reeval,
    Single,
}

#[derive(Args)]
struct ChainArgs {
    /// Experiment config to take problem, algorithm and noise from.
    #[arg(long, conflicts_with_all = ["problem", "n", "m", "lambda", "p", "noise", "rule", "policy"])]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    problem: Option<FamilyArg>,
    #[arg(long, required_unless_present = "config")]
    n: Option<usize>,
    /// Gap width for jump.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 1)]
    lambda: usize,
    /// Mutation probability; 1/n if omitted.
    #[arg(long)]
    p: Option<f64>,
    /// `none`, `additive:D1:D2`, `multiplicative:D1:D2` or `one-bit:PN`.
    #[arg(long, default_value = "none", value_parser = parse_noise)]
    noise: NoiseModel,
    /// `standard`, `hard:TAU` or `smooth`.
    #[arg(long, default_value = "standard", value_parser = parse_rule)]
    rule: SelectionRule,
    #[arg(long, value_enum, default_value_t = PolicyArg::Reeval)]
    policy: PolicyArg,
    /// Solve in exact rational arithmetic.
    #[arg(long)]
    exact: bool,
    /// EFHT values closer than this share a partition class.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

struct Setup {
    spec: ProblemSpec,
    lambda: usize,
    p: f64,
    rule: SelectionRule,
    policy: EvalPolicy,
    noise: NoiseModel,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Check(String),
    Output(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Output(_) => 1,
            Self::Config(_) => 2,
            Self::Check(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Check(m) => write!(f, "check failed: {m}"),
            Self::Output(m) => write!(f, "output error: {m}"),
        }
    }
}

impl From<noisy_ea::Error> for Failure {
    fn from(e: noisy_ea::Error) -> Self {
        Self::Config(e.to_string())
    }
}

fn parse_pair(rest: &str) -> Result<(f64, f64), String> {
    let (a, b) = rest.split_once(':').ok_or("expected two values D1:D2")?;
    let a = a.parse::<f64>().map_err(|e| format!("{a}: {e}"))?;
    let b = b.parse::<f64>().map_err(|e| format!("{b}: {e}"))?;
    Ok((a, b))
}

fn parse_noise(s: &str) -> Result<NoiseModel, String> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let model = match kind {
        "none" => Ok(NoiseModel::Noiseless),
        "additive" => {
            let (a, b) = parse_pair(rest)?;
            NoiseModel::additive(a, b)
        }
        "multiplicative" => {
            let (a, b) = parse_pair(rest)?;
            NoiseModel::multiplicative(a, b)
        }
        "one-bit" => NoiseModel::one_bit(rest.parse().map_err(|e| format!("{rest}: {e}"))?),
        _ => return Err(format!("unknown noise {kind:?}")),
    };
    model.map_err(|e| e.to_string())
}

fn parse_rule(s: &str) -> Result<SelectionRule, String> {
    match s.split_once(':') {
        None if s == "standard" => Ok(SelectionRule::Standard),
        None if s == "smooth" => Ok(SelectionRule::SmoothThreshold),
        Some(("hard", tau)) => {
            SelectionRule::hard(tau.parse().map_err(|e| format!("{tau}: {e}"))?).map_err(|e| e.to_string())
        }
        _ => Err(format!("unknown rule {s:?}")),
    }
}

impl ChainArgs {
    fn setup(&self) -> Result<Setup, Failure> {
        if let Some(path) = &self.config {
            let cfg = ExperimentConfig::from_path(path)?;
            return Ok(Setup {
                spec: cfg.problem,
                lambda: cfg.algo.lambda,
                p: cfg.algo.p,
                rule: cfg.algo.rule,
                policy: cfg.algo.policy,
                noise: cfg.noise,
            });
        }
        let n = self.n.expect("clap requires n");
        let spec = match self.problem.expect("clap requires problem") {
            FamilyArg::OneMax => ProblemSpec::one_max(n)?,
            FamilyArg::Trap => ProblemSpec::trap(n)?,
            FamilyArg::Jump => {
                ProblemSpec::jump(n, self.m.ok_or_else(|| Failure::Config("jump requires --m".into()))?)?
            }
        };
        let policy = match self.policy {
            PolicyArg::Reeval => EvalPolicy::ReEvaluation,
            PolicyArg::Single => EvalPolicy::SingleEvaluation,
        };
        Ok(Setup {
            spec,
            lambda: self.lambda,
            p: self.p.unwrap_or(1.0 / n as f64),
            rule: self.rule,
            policy,
            noise: self.noise,
        })
    }
}

impl Setup {
    fn noiseless<T: Scalar>(&self) -> Result<LumpedChain<T>, Failure> {
        Ok(noiseless_chain(&self.spec, self.lambda, &T::lit(self.p))?)
    }

    fn chain<T: Scalar>(&self) -> Result<LumpedChain<T>, Failure> {
        let p = T::lit(self.p);
        if self.noise.is_noiseless() && self.rule == SelectionRule::Standard {
            return self.noiseless();
        }
        match (self.policy, self.noise) {
            (EvalPolicy::ReEvaluation, _) => {
                Ok(noisy_chain_reeval(&self.spec, &self.noise, &self.rule, self.lambda, &p)?)
            }
            (EvalPolicy::SingleEvaluation, NoiseModel::OneBit { pn })
                if self.lambda == 1 && self.rule == SelectionRule::Standard =>
            {
                Ok(noisy_chain_singleeval(&self.spec, pn, &p)?)
            }
            _ => Err(Failure::Config(
                "single evaluation has an exact chain only for lambda = 1, the standard rule and one-bit noise".into(),
            )),
        }
    }
}

fn write_report<R: Report>(report: &R, out: Option<&Path>) -> Result<(), Failure> {
    let written = match out {
        Some(path) => emit_csv(report, path),
        None => write_csv(report, io::stdout().lock()),
    };
    written.map_err(|e| Failure::Output(e.to_string()))
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    if cfg.total_runs() > RUN_WARNING {
        eprintln!("warning: {} runs requested ({} points x {})", cfg.total_runs(), cfg.points(), cfg.runs_per_point);
    }
    Ok(cfg)
}

fn chain_efht(args: &ChainArgs, out: Option<&Path>) -> Result<(), Failure> {
    let setup = args.setup()?;
    let efht = if args.exact {
        efht_solve(&setup.chain::<Rational>()?)?.to_f64()
    } else {
        efht_solve(&setup.chain::<f64>()?)?
    };
    write_report(&efht_report(&efht), out)
}

/// Statewise EFHT ordering implied by the verdict, or the first state where
/// it fails.
fn consistency<T: Scalar>(
    report: &DominanceReport<T>,
    noisy: &EfhtVector<T>,
    noiseless: &EfhtVector<T>,
) -> Option<String> {
    for (k, state) in noiseless.states().iter().enumerate() {
        let (a, b) = (noisy.values()[k].to_f64_lossy(), noiseless.values()[k].to_f64_lossy());
        let slack = 1e-9 * (1.0 + b.abs());
        if report.easier() && a > b + slack {
            return Some(format!("verdict {} but noisy EFHT {a} > noiseless {b} at state {state}", report.verdict));
        }
        if report.harder() && a < b - slack {
            return Some(format!("verdict {} but noisy EFHT {a} < noiseless {b} at state {state}", report.verdict));
        }
    }
    None
}

fn print_report<T: Scalar>(report: &DominanceReport<T>) {
    println!("verdict: {}", report.verdict);
    let show = |w: &Option<noisy_ea::chain::Witness<T>>| w.as_ref().map_or("none".to_string(), ToString::to_string);
    println!("easier_witness: {}", show(&report.easier_violation));
    println!("harder_witness: {}", show(&report.harder_violation));
}

fn exact_dominance<T: Scalar>(setup: &Setup, tol: f64) -> Result<(), Failure> {
    let plain = setup.noiseless::<T>()?;
    let noisy = setup.chain::<T>()?;
    let e_plain = efht_solve(&plain)?;
    let e_noisy = efht_solve(&noisy)?;
    let report = dominance_check(&noisy, &plain, &efht_partition(&e_plain, &T::lit(tol)))?;
    print_report(&report);
    match consistency(&report, &e_noisy, &e_plain) {
        Some(msg) => Err(Failure::Check(msg)),
        None => {
            println!("consistency: ok");
            Ok(())
        }
    }
}

fn check_dominance(args: &ChainArgs, steps: u64, sigmas: f64, seed: u64) -> Result<(), Failure> {
    let setup = args.setup()?;
    if setup.lambda == 1 {
        return if args.exact {
            exact_dominance::<Rational>(&setup, args.tol)
        } else {
            exact_dominance::<f64>(&setup, args.tol)
        };
    }
    let algo = AlgoConfig::new(setup.lambda, setup.p, setup.rule, setup.policy)?;
    let plain = setup.noiseless::<f64>()?;
    let partition = efht_partition(&efht_solve(&plain)?, &args.tol);
    let est = estimate_rows(&algo, &setup.spec, &setup.noise, steps, seed)?;
    let report = dominance_check_estimated(&est, &plain, &partition, sigmas)?;
    print_report(&report);
    println!("consistency: not checked (rows estimated from {steps} steps per state)");
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let seed = cli.seed;
    match cli.command {
        Command::Ert { config, out } => {
            let cfg = load_config(&config, seed)?;
            write_report(&ert_sweep(&cfg)?, out.as_deref())
        }
        Command::Gap { config, baseline, out } => {
            let noisy = load_config(&config, seed)?;
            let plain = match baseline {
                Some(path) => load_config(&path, seed)?,
                None => ExperimentConfig { noise: NoiseModel::Noiseless, ..noisy.clone() },
            };
            write_report(&gap_sweep(&noisy, &plain)?, out.as_deref())
        }
        Command::PntScan { config, out } => {
            let text =
                fs::read_to_string(&config).map_err(|e| Failure::Config(format!("{}: {e}", config.display())))?;
            let mut cfg: PntConfig = serde_json::from_str(&text).map_err(|e| Failure::Config(e.to_string()))?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            write_report(&pnt_scan(&cfg)?, out.as_deref())
        }
        Command::CoverTime { vertices, walks, start, out } => {
            let rows = vertices
                .iter()
                .map(|&v| cover_time_path_from(v, walks, seed.unwrap_or(0), start))
                .collect::<Result<Vec<_>, _>>()?;
            write_report(&CoverReport { rows }, out.as_deref())
        }
        Command::ChainEfht { chain, out } => chain_efht(&chain, out.as_deref()),
        Command::CheckDominance { chain, steps, sigmas } => check_dominance(&chain, steps, sigmas, seed.unwrap_or(0)),
        Command::Lemma4Fuzz { instances, max_m } => {
            let report = lemma4_fuzz(instances, max_m, seed.unwrap_or(0))?;
            println!("instances: {}", report.instances);
            println!("violations: {}", report.violations);
            println!("min_margin: {:e}", report.min_margin);
            match report.first_violation {
                Some(inst) => Err(Failure::Check(format!("violation: {inst:?}"))),
                None => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("noisy-ea: {e}");
            ExitCode::from(e.code())
        }
    }
}
