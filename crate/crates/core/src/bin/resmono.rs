use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use resmono::catalysis::{self, CatalysisOptions, CatalystMode, SearchOptions};
use resmono::harness::{self, monotone, state_file, HarnessError, ReportFormat, Suite, SuiteConfig, SuiteStatus};

#[derive(Parser)]
#[command(name = "resmono", version, about = "Entanglement and coherence monotones and their verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate monotones on a state file.
    Measures {
        state: PathBuf,
        /// One of ree, mree, cr, q, cf, sq, cemi; all applicable ones when omitted.
        #[arg(long)]
        monotone: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Run a verification suite.
    Verify {
        suite: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// e.g. `2..5` or `2x2,2x3`.
        #[arg(long)]
        dims: Option<String>,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Config file with one section per suite.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the per-trial CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Catalytic transformation tools.
    Catalysis {
        #[command(subcommand)]
        action: CatalysisCommand,
    },
    /// Convert a JSON report.
    Report {
        input: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CatalysisCommand {
    /// Singlet fidelity over the default catalyst set, then a catalyst search.
    Sweep {
        state: PathBuf,
        /// Local catalyst dimension (catalysts are D x D).
        #[arg(long, default_value_t = 2)]
        cat_dim: usize,
        /// Rounds of the catalyst search; 0 skips it.
        #[arg(long, default_value_t = 0)]
        rounds: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value = "correlated")]
        mode: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<catalysis::CatalysisError> for Failure {
    fn from(e: catalysis::CatalysisError) -> Self {
        HarnessError::from(e).into()
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Measures { state, monotone, seed, json } => measures(&state, monotone.as_deref(), seed.unwrap_or_else(harness::default_seed), json),
        Command::Verify { suite, trials, seed, dims, tolerance, config, out, csv } => {
            verify(&suite, trials, seed, dims, tolerance, config.as_deref(), out.as_deref(), csv.as_deref())
        }
        Command::Catalysis { action: CatalysisCommand::Sweep { state, cat_dim, rounds, k, mode, seed, out } } => {
            sweep(&state, cat_dim, rounds, k, &mode, seed.unwrap_or_else(harness::default_seed), out.as_deref())
        }
        Command::Report { input, format, out } => report(&input, &format, out.as_deref()),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn measures(path: &Path, name: Option<&str>, seed: u64, json: bool) -> Result<u8, Failure> {
    let rho = state_file::read_state(path)?;
    let names: Vec<&str> = match name {
        Some(n) => vec![n],
        None => monotone::NAMES.to_vec(),
    };
    let mut rows = Vec::new();
    for n in names {
        let m = monotone::by_name(n).ok_or_else(|| Failure::Config(format!("unknown monotone {n:?}; expected one of {}", monotone::NAMES.join(", "))))?;
        if m.bipartite() && rho.cut().is_none() {
            if name.is_some() {
                return Err(Failure::Config(format!("{n} needs a state with a cut")));
            }
            continue;
        }
        rows.push(m.evaluate(&rho, seed)?);
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&rows).expect("plain data"));
    } else {
        println!("{:<6} {:>14} {:>14}  note", "name", "lower", "upper");
        for r in &rows {
            println!("{:<6} {:>14.9} {:>14.9}  {}", r.monotone, r.lower, r.upper, r.note);
        }
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn verify(
    suite: &str,
    trials: Option<usize>,
    seed: Option<u64>,
    dims: Option<String>,
    tolerance: Option<f64>,
    config: Option<&Path>,
    out: Option<&Path>,
    csv: Option<&Path>,
) -> Result<u8, Failure> {
    let suite: Suite = suite.parse()?;
    let mut cfg = match config {
        Some(p) => harness::load_config(p)?
            .into_iter()
            .find(|c| c.suite == suite)
            .ok_or_else(|| Failure::Config(format!("{} has no [{}] section", p.display(), suite.name())))?,
        None => SuiteConfig::defaults(suite),
    };
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(d) = dims {
        cfg.dims = d;
    }
    if let Some(t) = tolerance {
        cfg.tolerance = t;
    }
    cfg.validate()?;
    let report = harness::run_suite_with(&cfg, |i, n| log::info!("trial {i}/{n}"))?;
    if suite == Suite::Normalization {
        println!("{:>3} {:>16} {:>16} {:>16}  status", "d", "log2(d+1)-1", "D2(1||2/(d+1))", "measured lower");
        for t in &report.trials {
            let c = &t.checks[0];
            let d = t.x;
            println!("{:>3} {:>16.12} {:>16.12} {:>16.12}  {:?}", d, (d + 1.0).log2() - 1.0, c.rhs_upper(), c.lhs.lower, t.status);
        }
    }
    let s = &report.summary;
    println!(
        "{}: {} trials, {} pass, {} fail, {} inconclusive, max violation {:.3e}, min slack {:.3e} -> {:?}",
        suite.name(),
        s.trials,
        s.pass,
        s.fail,
        s.inconclusive,
        s.max_violation,
        s.min_slack,
        s.status
    );
    for t in report.trials.iter().filter(|t| t.status == resmono::record::CheckStatus::Fail) {
        println!("  failed trial {} (seed {}, inputs {}): {}", t.index, t.seed, &t.inputs_digest[..16], t.label);
    }
    if let Some(p) = out {
        harness::emit_report(&report, p, ReportFormat::Json)?;
    }
    if let Some(p) = csv {
        harness::emit_report(&report, p, ReportFormat::Csv)?;
    }
    Ok(if s.status == SuiteStatus::Pass { 0 } else { 2 })
}

#[derive(Serialize)]
struct SweepRow {
    catalyst: String,
    lower: Option<f64>,
    upper: f64,
    status: String,
    iterations: usize,
}

fn sweep(path: &Path, cat_dim: usize, rounds: usize, k: usize, mode: &str, seed: u64, out: Option<&Path>) -> Result<u8, Failure> {
    let rho = state_file::read_state(path)?;
    let mode = match mode {
        "correlated" => CatalystMode::Correlated,
        "strict" => CatalystMode::Strict,
        _ => return Err(Failure::Config(format!("mode {mode:?}; expected correlated or strict"))),
    };
    if rho.cut().is_none() {
        return Err(Failure::Config("the state needs a cut".into()));
    }
    let opts = CatalysisOptions { build_choi: false, ..Default::default() };
    let row = |name: String, f: &catalysis::FidelityResult| SweepRow { catalyst: name, lower: f.lower, upper: f.upper, status: format!("{:?}", f.status), iterations: f.iterations };
    let mut rows = vec![row("none".into(), &catalysis::ppt_ops_fidelity(&rho, k, &opts)?)];
    let cats = catalysis::catalysts_of_dim(cat_dim, seed)?;
    for e in catalysis::catalyst_sweep(&rho, &cats, k, mode, &opts)? {
        rows.push(row(e.catalyst, &e.fidelity));
    }
    if rounds > 0 {
        let s = catalysis::catalyst_search(&rho, k, &SearchOptions { rounds, cat_dims: (cat_dim, cat_dim), seed, fidelity: opts })?;
        rows.push(row(format!("search-best-of-{rounds}"), &s.fidelity));
    }
    println!("{:<22} {:>12} {:>12} {:>6}  status", "catalyst", "lower", "upper", "iters");
    for r in &rows {
        let lower = r.lower.map_or("-".to_string(), |v| format!("{v:.8}"));
        println!("{:<22} {:>12} {:>12.8} {:>6}  {}", r.catalyst, lower, r.upper, r.iterations, r.status);
    }
    let max_upper = rows.iter().map(|r| r.upper).fold(f64::NEG_INFINITY, f64::max);
    println!("max upper bound {max_upper:.8}");
    if let Some(p) = out {
        let text = serde_json::to_string_pretty(&rows).expect("plain data");
        harness::write_atomic(p, text.as_bytes())?;
    }
    Ok(0)
}

fn report(input: &Path, format: &str, out: Option<&Path>) -> Result<u8, Failure> {
    let format: ReportFormat = format.parse()?;
    let text = std::fs::read_to_string(input).map_err(|e| Failure::Runtime(format!("{}: {e}", input.display())))?;
    let report = harness::Report::from_json(&text)?;
    match out {
        Some(p) => harness::emit_report(&report, p, format)?,
        None => match format {
            ReportFormat::Json => println!("{}", report.to_json()),
            ReportFormat::Csv => print!("{}", report.to_csv()),
        },
    }
    Ok(0)
}
