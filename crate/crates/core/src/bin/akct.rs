//! `akct`: command-line front end for the `A_k` closeness tester.
//!
//! Exit codes: 0 accept (or success), 1 reject (or failed checks), 2 usage,
//! parse or runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ak_closeness::experiment::{format_summary, run_experiment, summarize, write_results, ExperimentConfig};
use ak_closeness::hardness::gen_hard_instance;
use ak_closeness::oracle::{ak_distance_1d, ak_distance_bruteforce};
use ak_closeness::spec_file::{read_spec, write_hard_instance};
use ak_closeness::tester::ak_closeness_test;
use ak_closeness::verify::{run_suite, Suite};
use ak_closeness::{rng_from_seed, Error, Mode, TesterConfig, TesterConstants};

#[derive(Parser)]
#[command(name = "akct", version, about = "Closeness testing of multidimensional distributions under the A_k distance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Constant set for the budget and threshold formulas.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// TOML file overriding the mode's constants.
    #[arg(long, global = true)]
    constants: Option<PathBuf>,
    /// Output path (file or directory, per command).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Trials per sweep point (experiment).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Paper,
    Practical,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Paper => Mode::Paper,
            ModeArg::Practical => Mode::Practical,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Equal,
    Far,
}

#[derive(Subcommand)]
enum Command {
    /// Test p = q against ||p - q||_{A_k} >= eps from two distribution files.
    Test {
        p: PathBuf,
        q: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
    },
    /// Exact A_k distance between two small distribution files.
    Oracle {
        p: PathBuf,
        q: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Write a heavy/light diagonal instance as p.json, q.json, meta.json.
    GenHard {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long, value_enum)]
        case: CaseArg,
        /// Grid cells per unit length for the rounded distribution files.
        #[arg(long, default_value_t = 16)]
        resolution: usize,
    },
    /// Run a sweep from a TOML config and write a results CSV.
    Experiment { config: PathBuf },
    /// Run a named invariant suite.
    Verify { suite: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn constants(common: &Common, mode: Mode) -> Result<TesterConstants, Error> {
    match &common.constants {
        Some(path) => TesterConstants::from_toml_file(path),
        None => Ok(TesterConstants::for_mode(mode)),
    }
}

fn emit(common: &Common, line: &str) -> Result<(), Error> {
    println!("{line}");
    if let Some(out) = &common.out {
        std::fs::write(out, format!("{line}\n"))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Error> {
    let common = &cli.common;
    let seed = common.seed.unwrap_or(0);
    let mode = common.mode.map(Mode::from).unwrap_or_default();
    match cli.command {
        Command::Test { p, q, k, eps } => cmd_test(common, &p, &q, k, eps, seed, mode),
        Command::Oracle { p, q, k } => {
            let (pd, qd) = (read_spec(&p)?, read_spec(&q)?);
            if pd.dim() != qd.dim() {
                return Err(Error::DimensionMismatch { expected: pd.dim(), got: qd.dim() });
            }
            let (pd, qd) = (pd.normalized()?, qd.normalized()?);
            let out = if pd.dim() == 1 {
                let value = ak_distance_1d(&pd, &qd, k)?;
                let family = ak_distance_bruteforce(&pd, &qd, k).ok().map(|(_, f)| rects_json(&f.rects));
                json!({ "k": k, "value": value, "rects": family })
            } else {
                let (value, family) = ak_distance_bruteforce(&pd, &qd, k)?;
                json!({ "k": k, "value": value, "rects": rects_json(&family.rects) })
            };
            emit(common, &out.to_string())?;
            Ok(0)
        }
        Command::GenHard { k, m, eps, case, resolution } => {
            let equal = matches!(case, CaseArg::Equal);
            let inst = gen_hard_instance(k, m, eps, equal, &mut rng_from_seed(seed))?;
            let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let files = write_hard_instance(&dir, &inst, seed, resolution)?;
            println!(
                "{}",
                json!({
                    "p": files.p, "q": files.q, "meta": files.meta,
                    "heavy": inst.heavy_count(), "light": inst.light_count(),
                })
            );
            Ok(0)
        }
        Command::Experiment { config } => {
            let mut exp = ExperimentConfig::from_toml_file(&config)?;
            if let Some(s) = common.seed {
                exp.seed = s;
            }
            if let Some(t) = common.trials {
                exp.trials = t;
            }
            if let Some(m) = common.mode {
                exp.mode = m.into();
            }
            if let Some(path) = &common.constants {
                exp.constants = Some(TesterConstants::from_toml_file(path)?);
            }
            exp.validate()?;
            let out = common.out.clone().unwrap_or_else(|| config.with_extension("csv"));
            let (rows, errors) = run_experiment(&exp, common.jobs)?;
            for (trial, msg) in &errors {
                eprintln!("trial {trial}: {msg}");
            }
            write_results(&out, &exp, &rows)?;
            print!("{}", format_summary(&summarize(&rows)));
            println!("wrote {} rows to {}", rows.len(), out.display());
            Ok(0)
        }
        Command::Verify { suite } => {
            let suite: Suite = suite.parse()?;
            let report = run_suite(suite, seed)?;
            println!("{report}");
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}

fn rects_json(rects: &[ak_closeness::AxisRectangle]) -> serde_json::Value {
    rects.iter().map(|r| json!({ "lo": r.lo(), "hi": r.hi() })).collect()
}

fn cmd_test(common: &Common, p: &Path, q: &Path, k: usize, eps: f64, seed: u64, mode: Mode) -> Result<u8, Error> {
    let (pd, qd) = (read_spec(p)?, read_spec(q)?);
    if pd.dim() != qd.dim() {
        return Err(Error::DimensionMismatch { expected: pd.dim(), got: qd.dim() });
    }
    let cfg = TesterConfig { k, d: pd.dim(), eps, mode, constants: constants(common, mode)?, seed };
    cfg.validate()?;
    let (ps, qs) = (pd.sampler()?, qd.sampler()?);
    let mut pa = |r: &mut dyn rand::RngCore| Some(ps.sample(r));
    let mut qa = |r: &mut dyn rand::RngCore| Some(qs.sample(r));
    let v = ak_closeness_test(&mut pa, &mut qa, &cfg)?;
    let line = json!({
        "decision": v.decision,
        "statistic": v.statistic,
        "threshold": v.threshold,
        "samples_used": v.samples_used,
        "kappa": v.kappa,
        "k": k,
        "d": cfg.d,
        "eps": eps,
        "mode": mode,
        "seed": seed,
    });
    emit(common, &line.to_string())?;
    Ok(if v.rejected() { 1 } else { 0 })
}
