//! The `poulsen` command line.
//!
//! Every run produces an [`ExperimentRecord`]. In JSON mode the record goes to
//! stdout; in CSV mode stdout carries the command's table. With `--out-dir`
//! the record and all artifacts are also written to that directory.
//!
//! Exit codes: 0 when every pass flag holds, 1 when a check fails (failure
//! list as JSON on stderr), 2 on usage or input errors.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bfree::BSet;
use crate::bitseq::{BitWindow, Block};
use crate::counterexample::{
    cylinder_separation, entropy_estimate, hereditary_language_size, midpoint_unreachable_demo,
    mme_candidate, PeriodicSystem, ORBIT_A, ORBIT_A_PRIME, ORBIT_B,
};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::markov::{
    build_doubled_chain, build_single_chain, check_aperiodic, sample_schedule, MarkovChain,
};
use crate::measures::BlockSet;
use crate::midpoint::{approximate_midpoint, MidpointRequest, N0Choice, DEFAULT_N0_CAP};

#[derive(Debug, Parser)]
#[command(name = "poulsen", version, about = "Hereditary subshift experiments")]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
    /// Directory for the experiment record and artifacts.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Density of the B-free set on growing windows.
    Density(DensityArgs),
    /// log2 |L_n| / n for a B-free system or a union of periodic orbits.
    Entropy(EntropyArgs),
    /// Ergodic approximant of the midpoint of two measures.
    Midpoint(MidpointArgs),
    /// The periodic non-Poulsen example and its intrinsic variant.
    Counterexample(CounterexampleArgs),
    /// Exact checks on the ladder chains.
    MarkovCheck(MarkovArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Density(_) => "density",
            Command::Entropy(_) => "entropy",
            Command::Midpoint(_) => "midpoint",
            Command::Counterexample(_) => "counterexample",
            Command::MarkovCheck(_) => "markov-check",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct DensityArgs {
    /// `2,3,25`, `squares-of-primes` or `primitive-abundant`.
    #[arg(long)]
    pub bset: String,
    #[arg(long)]
    pub limit: Option<u64>,
    /// Window lengths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1000000")]
    pub window: Vec<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct EntropyArgs {
    #[arg(long, conflicts_with = "periodic")]
    pub bset: Option<String>,
    #[arg(long)]
    pub limit: Option<u64>,
    /// Periods of the orbits in the union, e.g. `101001000,101000100`.
    #[arg(long, value_delimiter = ',')]
    pub periodic: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "12,24,36")]
    pub n: Vec<usize>,
    /// Length of the eta window the B-free language is read from.
    #[arg(long, default_value_t = 1_000_000)]
    pub window: u64,
}

/// Where a generic window for a measure comes from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NuSource {
    Eta,
    Bernoulli(f64),
    Zeros,
    File(PathBuf),
}

impl FromStr for NuSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "eta" => Ok(NuSource::Eta),
            "zeros" => Ok(NuSource::Zeros),
            _ => {
                if let Some(p) = s.strip_prefix("bernoulli:") {
                    let p: f64 = p.parse().map_err(|_| format!("bad probability in {s:?}"))?;
                    if !(0.0..=1.0).contains(&p) {
                        return Err(format!("probability out of [0,1] in {s:?}"));
                    }
                    Ok(NuSource::Bernoulli(p))
                } else if let Some(path) = s.strip_prefix("file:") {
                    Ok(NuSource::File(path.into()))
                } else {
                    Err(format!(
                        "expected eta, zeros, bernoulli:P or file:PATH, got {s:?}"
                    ))
                }
            }
        }
    }
}

impl fmt::Display for NuSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NuSource::Eta => write!(f, "eta"),
            NuSource::Zeros => write!(f, "zeros"),
            NuSource::Bernoulli(p) => write!(f, "bernoulli:{p}"),
            NuSource::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum N0Arg {
    Auto,
    Fixed(usize),
}

impl FromStr for N0Arg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(N0Arg::Auto);
        }
        s.parse()
            .map(N0Arg::Fixed)
            .map_err(|_| format!("expected auto or an integer, got {s:?}"))
    }
}

#[derive(Debug, Args, Serialize)]
pub struct MidpointArgs {
    #[arg(long, default_value = "2,3")]
    pub bset: String,
    #[arg(long)]
    pub limit: Option<u64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub window: u64,
    #[arg(long, default_value_t = 1)]
    pub k0: usize,
    #[arg(long, default_value_t = 0.05)]
    pub eps0: f64,
    /// Block-selection tolerance (default eps0 / 2).
    #[arg(long)]
    pub eps: Option<f64>,
    /// `auto` or a fixed block length.
    #[arg(long, default_value = "auto")]
    pub n0: N0Arg,
    #[arg(long, default_value = "eta")]
    pub nu1: NuSource,
    #[arg(long, default_value = "bernoulli:0.5")]
    pub nu2: NuSource,
    /// Block list (one literal per line) used instead of the language of eta.
    #[arg(long)]
    pub language: Option<PathBuf>,
    /// Where to write eta_bar (default: `eta_bar.txt` in the output directory).
    #[arg(long)]
    pub eta_bar: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Original,
    Intrinsic,
}

#[derive(Debug, Args, Serialize)]
pub struct CounterexampleArgs {
    #[arg(long, value_enum, default_value_t = Variant::Original)]
    pub variant: Variant,
    #[arg(long, default_value_t = 1_000_000)]
    pub window: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,1")]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "9,18,27,36")]
    pub entropy_n: Vec<usize>,
    /// Largest block length for the empirical entropies of the intrinsic variant.
    #[arg(long, default_value_t = 18)]
    pub max_k: usize,
    /// Allowed deviation of the intrinsic variant's one-frequency.
    #[arg(long, default_value_t = 1e-3)]
    pub tolerance: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct MarkovArgs {
    #[arg(long)]
    pub n0: usize,
    /// Also sample a schedule covering this many positions and export it as CSV.
    #[arg(long)]
    pub schedule_length: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct ExperimentRecord {
    pub command: String,
    pub params: Value,
    pub version: String,
    pub outputs: Value,
    /// Artifacts written next to the record.
    pub files: Vec<String>,
    pub pass: bool,
    pub failures: Vec<String>,
    pub duration_secs: f64,
}

/// What a command hands back to the driver.
struct Outcome {
    outputs: Value,
    csv: Option<String>,
    /// `(file name, contents)` written to the output directory.
    artifacts: Vec<(String, String)>,
    failures: Vec<String>,
}

impl Outcome {
    fn new(outputs: Value) -> Self {
        Outcome {
            outputs,
            csv: None,
            artifacts: Vec::new(),
            failures: Vec::new(),
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Parse(e.to_string()))
}

fn io_error(e: std::io::Error) -> Error {
    Error::BitFile(e.to_string())
}

fn density(args: &DensityArgs) -> Result<Outcome> {
    let bset = BSet::parse(&args.bset, args.limit)?;
    let mut csv = String::from("n,count,density\n");
    let mut rows = Vec::new();
    for &n in &args.window {
        let est = bset.upper_density(n)?;
        let count = est.count.unwrap_or(0);
        csv.push_str(&format!("{n},{count},{}\n", est.value));
        rows.push(json!({ "n": n, "count": count, "density": est.value }));
    }
    let exact = if bset.len() <= 24 {
        bset.inclusion_exclusion_density().ok().map(|d| d.value)
    } else {
        None
    };
    let mut out = Outcome::new(json!({
        "bset": bset.to_string(),
        "rows": rows,
        "inclusion_exclusion": exact,
    }));
    out.artifacts.push(("density.csv".into(), csv.clone()));
    out.csv = Some(csv);
    Ok(out)
}

fn periodic_systems(literals: &[String]) -> Result<Vec<PeriodicSystem>> {
    literals.iter().map(|s| PeriodicSystem::parse(s)).collect()
}

fn entropy(args: &EntropyArgs) -> Result<Outcome> {
    let mut csv = String::from("n,language_size,estimate\n");
    let mut rows = Vec::new();
    let source;
    if let Some(spec) = &args.bset {
        let bset = BSet::parse(spec, args.limit)?;
        source = json!({ "bset": bset.to_string(), "window": args.window });
        for &n in &args.n {
            let est = bset.hereditary_entropy_estimate(n, args.window)?;
            csv.push_str(&format!("{n},{},{}\n", est.language_size, est.value));
            rows.push(to_value(&est)?);
        }
    } else {
        if args.periodic.is_empty() {
            return Err(Error::Parameter(
                "entropy needs --bset or --periodic".into(),
            ));
        }
        let systems = periodic_systems(&args.periodic)?;
        source = json!({ "periodic": args.periodic });
        for &n in &args.n {
            let size = hereditary_language_size(&systems, n)?;
            let value = (size as f64).log2() / n as f64;
            csv.push_str(&format!("{n},{size},{value}\n"));
            rows.push(json!({ "n": n, "language_size": size, "value": value }));
        }
    }
    let mut out = Outcome::new(json!({ "source": source, "rows": rows }));
    out.artifacts.push(("entropy.csv".into(), csv.clone()));
    out.csv = Some(csv);
    Ok(out)
}

fn nu_window(src: &NuSource, eta: &BitWindow, seed: u64) -> Result<BitWindow> {
    match src {
        NuSource::Eta => Ok(eta.clone()),
        NuSource::Zeros => Ok(BitWindow::zeros(eta.start(), eta.len())),
        NuSource::Bernoulli(p) => {
            eta.multiply(&BitWindow::bernoulli(eta.start(), eta.len(), *p, seed)?)
        }
        NuSource::File(path) => {
            BitWindow::parse_bitstring_file(&fs::read_to_string(path).map_err(io_error)?)
        }
    }
}

fn midpoint(args: &MidpointArgs, seed: u64) -> Result<Outcome> {
    let bset = BSet::parse(&args.bset, args.limit)?;
    let eta = bset.sieve_window(args.window);
    let x1 = nu_window(&args.nu1, &eta, derive_seed(seed, 1))?;
    let x2 = nu_window(&args.nu2, &eta, derive_seed(seed, 2))?;
    let mut req = MidpointRequest::new(eta, x1, x2, args.k0, args.eps0, derive_seed(seed, 3));
    if let Some(eps) = args.eps {
        req.eps = eps;
    }
    req.n0 = match args.n0 {
        N0Arg::Auto => N0Choice::Auto {
            cap: DEFAULT_N0_CAP,
        },
        N0Arg::Fixed(n) => N0Choice::Fixed(n),
    };
    if let Some(path) = &args.language {
        req.language = Some(BlockSet::parse_lines(
            &fs::read_to_string(path).map_err(io_error)?,
        )?);
    }
    let result = approximate_midpoint(&req)?;
    let mut out = Outcome::new(to_value(&result)?);
    out.failures = result
        .checks
        .failures()
        .into_iter()
        .map(String::from)
        .collect();
    let bits = result.eta_bar.to_bitstring_file();
    match &args.eta_bar {
        Some(path) => fs::write(path, &bits).map_err(io_error)?,
        None => out.artifacts.push(("eta_bar.txt".into(), bits)),
    }
    let mut csv = String::from("block,target1,target2,midpoint,achieved\n");
    let blocks: std::collections::BTreeSet<String> =
        [&result.target1, &result.target2, &result.achieved]
            .iter()
            .flat_map(|m| m.iter().map(|(b, _)| b.to_string()))
            .collect();
    for lit in blocks {
        let b: Block = lit.parse()?;
        csv.push_str(&format!(
            "{lit},{},{},{},{}\n",
            result.target1.weight(&b),
            result.target2.weight(&b),
            result.midpoint.weight(&b),
            result.achieved.weight(&b)
        ));
    }
    out.csv = Some(csv);
    Ok(out)
}

fn entropy_rows(systems: &[PeriodicSystem], ns: &[usize]) -> Result<Vec<Value>> {
    ns.iter()
        .map(|&n| Ok(json!({ "n": n, "value": entropy_estimate(systems, n)? })))
        .collect()
}

fn counterexample(args: &CounterexampleArgs, seed: u64) -> Result<Outcome> {
    match args.variant {
        Variant::Original => {
            let a: Block = ORBIT_A.parse()?;
            let b: Block = ORBIT_B.parse()?;
            let sep = cylinder_separation(&a, &b)?;
            let demo = midpoint_unreachable_demo(&a, &b, &args.p, args.window, seed)?;
            let systems = [PeriodicSystem::new(a), PeriodicSystem::new(b)];
            let mut out = Outcome::new(json!({
                "separation": to_value(&sep)?,
                "demo": to_value(&demo)?,
                "entropy": entropy_rows(&systems, &args.entropy_n)?,
            }));
            if !sep.separated {
                out.failures.push("separation".into());
            }
            if !demo.pass {
                out.failures.push("demo".into());
            }
            let csv = demo.to_csv();
            out.artifacts.push(("demo.csv".into(), csv.clone()));
            out.csv = Some(csv);
            Ok(out)
        }
        Variant::Intrinsic => {
            let a: Block = ORBIT_A_PRIME.parse()?;
            let report = mme_candidate(&a, args.window, seed, args.max_k)?;
            let expected = a.count_ones() as f64 / a.len() as f64 / 2.0;
            let systems = [PeriodicSystem::new(a)];
            let mut out = Outcome::new(json!({
                "mme": to_value(&report)?,
                "expected_one_frequency": expected,
                "entropy": entropy_rows(&systems, &args.entropy_n)?,
            }));
            if (report.one_frequency - expected).abs() > args.tolerance {
                out.failures.push("one_frequency".into());
            }
            let mut csv = String::from("k,entropy_per_symbol\n");
            for (k, h) in &report.block_entropies {
                csv.push_str(&format!("{k},{h}\n"));
            }
            out.artifacts.push(("mme.csv".into(), csv.clone()));
            out.csv = Some(csv);
            Ok(out)
        }
    }
}

fn chain_report(chain: &MarkovChain, power: usize) -> Result<(Value, bool)> {
    let strings = |v: &[num_rational::BigRational]| -> Vec<String> {
        v.iter().map(ToString::to_string).collect()
    };
    let stochastic = chain.is_row_stochastic();
    let stationary = chain.is_stationary();
    let positive_at_power = check_aperiodic(chain, power)?;
    let exponent = chain.primitivity_exponent();
    let value = json!({
        "states": chain.states().iter().map(ToString::to_string).collect::<Vec<_>>(),
        "transitions": chain.transitions().iter().map(|r| strings(r)).collect::<Vec<_>>(),
        "stationary": strings(chain.stationary()),
        "row_stochastic": stochastic,
        "stationary_holds": stationary,
        "power": power,
        "power_positive": positive_at_power,
        "primitivity_exponent": exponent,
        "aperiodic": exponent.is_some(),
        "rendered": chain.render(),
    });
    Ok((value, stochastic && stationary && exponent.is_some()))
}

fn markov_check(args: &MarkovArgs, seed: u64) -> Result<Outcome> {
    let single = build_single_chain(args.n0)?;
    let doubled = build_doubled_chain(args.n0)?;
    let (sv, s_ok) = chain_report(&single, args.n0 + 1)?;
    let (dv, d_ok) = chain_report(&doubled, 2 * (args.n0 + 1))?;
    let mut outputs = json!({ "single": sv, "doubled": dv });
    let mut csv = String::from("chain,from,to,probability\n");
    for (name, chain) in [("single", &single), ("doubled", &doubled)] {
        for (i, row) in chain.transitions().iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                csv.push_str(&format!(
                    "{name},{},{},{x}\n",
                    chain.states()[i],
                    chain.states()[j]
                ));
            }
        }
    }
    let mut artifacts = vec![("transitions.csv".to_string(), csv.clone())];
    if let Some(len) = args.schedule_length {
        let schedule = sample_schedule(&doubled, len, seed);
        outputs["schedule"] = to_value(&schedule.stats())?;
        csv = schedule.to_csv();
        artifacts.push(("schedule.csv".into(), csv.clone()));
    }
    let mut out = Outcome::new(outputs);
    out.csv = Some(csv);
    out.artifacts = artifacts;
    if !s_ok {
        out.failures.push("single_chain".into());
    }
    if !d_ok {
        out.failures.push("doubled_chain".into());
    }
    Ok(out)
}

fn params(cli: &Cli) -> Result<Value> {
    let mut p = match &cli.command {
        Command::Density(a) => to_value(a)?,
        Command::Entropy(a) => to_value(a)?,
        Command::Midpoint(a) => to_value(a)?,
        Command::Counterexample(a) => to_value(a)?,
        Command::MarkovCheck(a) => to_value(a)?,
    };
    p["seed"] = json!(cli.seed);
    p["output"] = to_value(&cli.output)?;
    Ok(p)
}

fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Density(a) => density(a),
        Command::Entropy(a) => entropy(a),
        Command::Midpoint(a) => midpoint(a, cli.seed),
        Command::Counterexample(a) => counterexample(a, cli.seed),
        Command::MarkovCheck(a) => markov_check(a, cli.seed),
    }
}

fn run_parsed(cli: &Cli, stdout: &mut dyn Write) -> Result<ExperimentRecord> {
    let started = Instant::now();
    let params = params(cli)?;
    let outcome = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Parameter(e.to_string()))?
            .install(|| execute(cli))?,
        None => execute(cli)?,
    };
    let mut files = Vec::new();
    if let Some(dir) = &cli.out_dir {
        fs::create_dir_all(dir).map_err(io_error)?;
        for (name, contents) in &outcome.artifacts {
            fs::write(dir.join(name), contents).map_err(io_error)?;
            files.push(name.clone());
        }
    }
    let record = ExperimentRecord {
        command: cli.command.name().into(),
        params,
        version: env!("CARGO_PKG_VERSION").into(),
        outputs: outcome.outputs,
        files,
        pass: outcome.failures.is_empty(),
        failures: outcome.failures,
        duration_secs: started.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&record).map_err(|e| Error::Parse(e.to_string()))?;
    if let Some(dir) = &cli.out_dir {
        let name = format!("{}.record.json", record.command);
        fs::write(dir.join(name), format!("{text}\n")).map_err(io_error)?;
    }
    let printed = match (cli.output, &outcome.csv) {
        (OutputFormat::Csv, Some(csv)) => csv.clone(),
        _ => format!("{text}\n"),
    };
    stdout.write_all(printed.as_bytes()).map_err(io_error)?;
    Ok(record)
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match run_parsed(&cli, stdout) {
        Ok(record) if record.pass => 0,
        Ok(record) => {
            let _ = writeln!(stderr, "{}", json!({ "failures": record.failures }));
            1
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}", json!({ "error": e.to_string() }));
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("poulsen").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn nu_source_parsing() {
        assert_eq!("eta".parse::<NuSource>(), Ok(NuSource::Eta));
        assert_eq!(
            "bernoulli:0.5".parse::<NuSource>(),
            Ok(NuSource::Bernoulli(0.5))
        );
        assert_eq!(
            "file:a/b.txt".parse::<NuSource>(),
            Ok(NuSource::File("a/b.txt".into()))
        );
        assert!("bernoulli:2".parse::<NuSource>().is_err());
        assert!("poisson".parse::<NuSource>().is_err());
        assert_eq!("auto".parse::<N0Arg>(), Ok(N0Arg::Auto));
        assert_eq!("17".parse::<N0Arg>(), Ok(N0Arg::Fixed(17)));
    }

    #[test]
    fn density_of_the_unit_modulus_is_zero() {
        let (code, out, _) = call(&[
            "--output", "csv", "density", "--bset", "1", "--window", "10",
        ]);
        assert_eq!(code, 0);
        assert_eq!(out, "n,count,density\n10,0,0\n");
    }

    #[test]
    fn malformed_bset_is_a_usage_error() {
        let (code, _, err) = call(&["density", "--bset", "2,x"]);
        assert_eq!(code, 2);
        assert!(err.contains("error"));
        let (code, _, _) = call(&["density"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn markov_check_passes() {
        let (code, out, _) = call(&["markov-check", "--n0", "3"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["outputs"]["single"]["stationary"][0], "2/7");
        assert_eq!(v["pass"], true);
    }
}
