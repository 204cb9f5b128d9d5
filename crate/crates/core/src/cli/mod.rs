//! Command-line front end. Every subcommand computes an [`Outcome`] first
//! and only then writes `result.json`, any CSV or JSON Lines artifacts and
//! `manifest.json` into `--output-dir`. Exit status: 0 when every check
//! passes, 1 when a check fails or the computation breaks down, 2 for
//! usage errors (nothing is written).

pub mod commands;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::yamabe::Scheme;
pub use output::{Check, Outcome};

#[derive(Debug, Parser)]
#[command(name = "conforma", version, about = "Experiments for conformally invariant fully nonlinear equations")]
pub struct Cli {
    #[arg(long, global = true, default_value = "conforma-out")]
    pub output_dir: PathBuf,
    /// Seed for the PCG64 sampler.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Also write the per-center moving-sphere sweep as CSV.
    #[arg(long, global = true)]
    pub emit_sweep_csv: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        self != Format::Json
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the structural hypotheses of an operator.
    ValidateOperator(ValidateArgs),
    /// Closed-form bubbles in ℝⁿ, the half-space and the unit ball.
    VerifyLiouville(LiouvilleArgs),
    /// Radial ODE shooting against the matched bubble.
    RadialShoot(RadialArgs),
    /// Critical radii and the gradient lemma.
    MovingSphere(MovingSphereArgs),
    /// Harnack products against the explicit constant.
    Harnack(HarnackArgs),
    /// Degree-one homogenization of σ_k.
    Homogenize(HomogenizeArgs),
    /// Continuation solve on S¹(L) × S^{n−1}.
    SolveYamabe(YamabeArgs),
    /// Möbius covariance of the eigenvalues of A^u.
    ConjugationTest(ConjugationArgs),
    /// Run an experiment described by a JSON file.
    Run(RunArgs),
    /// Every acceptance experiment, one subdirectory each.
    Suite,
}

#[derive(Clone, Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value = "sigma2-root")]
    pub op: String,
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
}

#[derive(Clone, Debug, Args)]
pub struct LiouvilleArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![3, 4, 5, 6])]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub cases: usize,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RadialSuite {
    /// All `(n, k, v0)` cases plus the step-halving order test.
    Uniqueness,
}

#[derive(Clone, Debug, Args)]
pub struct RadialArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub v0: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub h: f64,
    #[arg(long, default_value_t = 0.9)]
    pub r_max: f64,
    /// Bound asserted on the sup deviation from the bubble.
    #[arg(long, default_value_t = commands::RADIAL_SINGLE_TOL)]
    pub tol: f64,
    #[arg(long, value_enum)]
    pub suite: Option<RadialSuite>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SphereSuite {
    /// `λ̄` and `λ̄^{n−2}u` for bubbles of several widths.
    Invariant,
    /// The one-dimensional lemma and the gradient bound.
    GradientLemma,
}

#[derive(Clone, Debug, Args)]
pub struct MovingSphereArgs {
    #[arg(long, value_enum, default_value_t = SphereSuite::Invariant)]
    pub suite: SphereSuite,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 1.0, 4.0])]
    pub betas: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub h_functions: usize,
}

#[derive(Clone, Debug, Args)]
pub struct HarnackArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
}

#[derive(Clone, Debug, Args)]
pub struct HomogenizeArgs {
    #[arg(long, default_value = "sigma2")]
    pub op: String,
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 500)]
    pub triples: usize,
}

#[derive(Clone, Debug, Args)]
pub struct YamabeArgs {
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub length: f64,
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
    #[arg(long, default_value_t = 11)]
    pub t_steps: usize,
    /// Relative amplitude of the sinusoidal start.
    #[arg(long, default_value_t = 0.1)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value = "spectral", value_parser = parse_scheme)]
    pub scheme: Scheme,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    match s {
        "spectral" => Ok(Scheme::Spectral),
        "fd4" => Ok(Scheme::FiniteDifference4),
        other => Err(format!("unknown scheme {other:?}; expected spectral or fd4")),
    }
}

#[derive(Clone, Debug, Args)]
pub struct ConjugationArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 20)]
    pub words: usize,
    #[arg(long, default_value_t = 10)]
    pub points: usize,
    /// Finest difference step; the order fit also uses 2h and 4h.
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
}

#[derive(Clone, Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub spec: PathBuf,
}

/// A JSON experiment description for `run --spec`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub command: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

const RUNNABLE: [&str; 8] = [
    "validate-operator",
    "verify-liouville",
    "radial-shoot",
    "moving-sphere",
    "harnack",
    "homogenize",
    "solve-yamabe",
    "conjugation-test",
];

impl ExperimentSpec {
    /// The equivalent command line, so experiment files go through the same parser.
    pub fn to_argv(&self, fallback_dir: &Path, fallback_seed: u64) -> Result<Vec<String>, String> {
        if !RUNNABLE.contains(&self.command.as_str()) {
            return Err(format!("unknown command {:?}", self.command));
        }
        let seed = self.seed.unwrap_or(fallback_seed);
        let dir = self.output_dir.clone().unwrap_or_else(|| fallback_dir.to_path_buf());
        let mut argv = vec![
            "conforma".to_string(),
            "--seed".into(),
            seed.to_string(),
            "--output-dir".into(),
            dir.to_string_lossy().into_owned(),
            self.command.clone(),
        ];
        for (key, value) in &self.params {
            let flag = format!("--{}", key.replace('_', "-"));
            match value {
                serde_json::Value::Bool(true) => argv.push(flag),
                serde_json::Value::Bool(false) => {}
                serde_json::Value::Number(x) => argv.extend([flag, x.to_string()]),
                serde_json::Value::String(s) => argv.extend([flag, s.clone()]),
                serde_json::Value::Array(items) => {
                    let parts: Result<Vec<String>, String> = items
                        .iter()
                        .map(|v| match v {
                            serde_json::Value::Number(x) => Ok(x.to_string()),
                            serde_json::Value::String(s) => Ok(s.clone()),
                            _ => Err(format!("parameter {key:?} must hold numbers or strings")),
                        })
                        .collect();
                    argv.extend([flag, parts?.join(",")]);
                }
                _ => return Err(format!("parameter {key:?} has an unsupported type")),
            }
        }
        Ok(argv)
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

fn is_usage(e: &Error) -> bool {
    matches!(e, Error::Domain(_) | Error::Inadmissible(_) | Error::Unsupported(_))
}

#[derive(Serialize)]
struct Manifest<'a> {
    name: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    format: Format,
    rng: &'static str,
    threads: Option<String>,
    elapsed_seconds: f64,
    files: Vec<String>,
}

fn write_manifest(dir: &Path, command: &str, cli: &Cli, elapsed: f64, mut files: Vec<String>) -> std::io::Result<()> {
    files.push("manifest.json".into());
    let m = Manifest {
        name: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cli.seed,
        format: cli.format,
        rng: "PCG64 (rand_pcg::Pcg64, seed_from_u64)",
        threads: std::env::var(crate::parallel::THREADS_ENV).ok(),
        elapsed_seconds: elapsed,
        files,
    };
    std::fs::write(dir.join("manifest.json"), output::to_json_bytes(&m))
}

/// Compute one experiment without writing anything.
pub fn compute(cli: &Cli) -> crate::Result<Outcome> {
    let seed = cli.seed;
    match &cli.command {
        Command::ValidateOperator(a) => commands::validate(a, seed),
        Command::VerifyLiouville(a) => commands::liouville(a, seed),
        Command::RadialShoot(a) => commands::radial(a, seed, cli.format.csv()),
        Command::MovingSphere(a) => commands::moving_sphere(a, seed, cli.emit_sweep_csv || cli.format.csv()),
        Command::Harnack(a) => commands::harnack(a, seed),
        Command::Homogenize(a) => commands::homogenize_cmd(a, seed),
        Command::SolveYamabe(a) => commands::yamabe(a, seed, cli.format.csv()),
        Command::ConjugationTest(a) => commands::conjugation(a, seed),
        Command::Run(_) | Command::Suite => Err(Error::Unsupported("run and suite dispatch through execute".into())),
    }
}

/// The argument vectors `suite` runs, keyed by subdirectory name.
pub fn suite_invocations() -> Vec<(&'static str, Vec<&'static str>)> {
    vec![
        ("conjugation", vec!["conjugation-test"]),
        ("liouville", vec!["verify-liouville"]),
        ("radial", vec!["radial-shoot", "--suite", "uniqueness"]),
        ("moving_sphere", vec!["moving-sphere", "--suite", "invariant"]),
        ("gradient_lemma", vec!["moving-sphere", "--suite", "gradient-lemma"]),
        ("harnack", vec!["harnack"]),
        ("homogenize", vec!["homogenize", "--op", "sigma2", "--samples", "100"]),
        ("yamabe", vec!["solve-yamabe"]),
        ("validate", vec!["validate-operator", "--op", "sigma2-root"]),
    ]
}

#[derive(Serialize)]
struct SuiteEntry {
    name: &'static str,
    pass: bool,
    failed_checks: Vec<String>,
}

fn report_failures(out: &Outcome) {
    for c in out.failures() {
        eprintln!("{}: check {} failed: {:e} {} {:e}", out.command, c.name, c.value, c.relation, c.limit);
    }
}

fn run_single(cli: &Cli, name: &str) -> i32 {
    let start = Instant::now();
    match compute(cli) {
        Ok(out) => {
            let files = match out.write_to(&cli.output_dir) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("{name}: cannot write {}: {e}", cli.output_dir.display());
                    return EXIT_FAIL;
                }
            };
            if let Err(e) = write_manifest(&cli.output_dir, name, cli, start.elapsed().as_secs_f64(), files) {
                eprintln!("{name}: cannot write manifest: {e}");
                return EXIT_FAIL;
            }
            report_failures(&out);
            if out.pass() {
                EXIT_OK
            } else {
                EXIT_FAIL
            }
        }
        Err(e) if is_usage(&e) => {
            eprintln!("{name}: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("{name}: {e}");
            #[derive(Serialize)]
            struct Failed<'a> {
                command: &'a str,
                seed: u64,
                pass: bool,
                error: String,
            }
            let doc = Failed { command: name, seed: cli.seed, pass: false, error: e.to_string() };
            let written = std::fs::create_dir_all(&cli.output_dir)
                .and_then(|_| std::fs::write(cli.output_dir.join("result.json"), output::to_json_bytes(&doc)));
            if written.is_ok() {
                let _ = write_manifest(&cli.output_dir, name, cli, start.elapsed().as_secs_f64(), vec!["result.json".into()]);
            }
            EXIT_FAIL
        }
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::ValidateOperator(_) => "validate-operator",
        Command::VerifyLiouville(_) => "verify-liouville",
        Command::RadialShoot(_) => "radial-shoot",
        Command::MovingSphere(_) => "moving-sphere",
        Command::Harnack(_) => "harnack",
        Command::Homogenize(_) => "homogenize",
        Command::SolveYamabe(_) => "solve-yamabe",
        Command::ConjugationTest(_) => "conjugation-test",
        Command::Run(_) => "run",
        Command::Suite => "suite",
    }
}

fn run_suite(cli: &Cli) -> i32 {
    let start = Instant::now();
    let mut entries = Vec::new();
    let mut status = EXIT_OK;
    for (name, args) in suite_invocations() {
        let dir = cli.output_dir.join(name);
        let mut argv: Vec<String> = vec!["conforma".into(), "--seed".into(), cli.seed.to_string()];
        argv.extend(["--output-dir".into(), dir.to_string_lossy().into_owned()]);
        argv.extend(["--format".into(), cli.format.to_possible_value().unwrap().get_name().to_string()]);
        if cli.emit_sweep_csv {
            argv.push("--emit-sweep-csv".into());
        }
        argv.extend(args.iter().map(|s| s.to_string()));
        let sub = Cli::try_parse_from(&argv).expect("suite invocations parse");
        let code = run_single(&sub, subcommand_name(&sub.command));
        let failed_checks = std::fs::read(dir.join("result.json"))
            .ok()
            .and_then(|b| serde_json::from_slice::<serde_json::Value>(&b).ok())
            .and_then(|v| v.get("checks").cloned())
            .and_then(|c| c.as_array().cloned())
            .map(|cs| {
                cs.iter()
                    .filter(|c| c.get("pass") == Some(&serde_json::Value::Bool(false)))
                    .filter_map(|c| c.get("name").and_then(|n| n.as_str()).map(String::from))
                    .collect()
            })
            .unwrap_or_default();
        if code != EXIT_OK {
            status = EXIT_FAIL;
        }
        entries.push(SuiteEntry { name, pass: code == EXIT_OK, failed_checks });
    }
    #[derive(Serialize)]
    struct SuiteDoc<'a> {
        command: &'static str,
        seed: u64,
        pass: bool,
        entries: &'a [SuiteEntry],
    }
    let doc = SuiteDoc { command: "suite", seed: cli.seed, pass: status == EXIT_OK, entries: &entries };
    let written = std::fs::write(cli.output_dir.join("result.json"), output::to_json_bytes(&doc));
    let names = entries.iter().map(|e| format!("{}/result.json", e.name)).chain(["result.json".into()]).collect();
    if written.is_err() || write_manifest(&cli.output_dir, "suite", cli, start.elapsed().as_secs_f64(), names).is_err() {
        eprintln!("suite: cannot write summary into {}", cli.output_dir.display());
        return EXIT_FAIL;
    }
    status
}

fn parse(argv: &[String]) -> Result<Cli, i32> {
    Cli::try_parse_from(argv).map_err(|e| {
        let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        let _ = e.print();
        code
    })
}

/// Entry point shared by the binary and the integration tests.
pub fn execute<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<String> = args.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    let cli = match parse(&argv) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match &cli.command {
        Command::Suite => run_suite(&cli),
        Command::Run(r) => {
            let spec: ExperimentSpec = match std::fs::read(&r.spec)
                .map_err(|e| e.to_string())
                .and_then(|b| serde_json::from_slice(&b).map_err(|e| e.to_string()))
            {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("run: invalid spec {}: {e}", r.spec.display());
                    return EXIT_USAGE;
                }
            };
            let argv = match spec.to_argv(&cli.output_dir, cli.seed) {
                Ok(a) => a,
                Err(e) => {
                    eprintln!("run: {e}");
                    return EXIT_USAGE;
                }
            };
            match parse(&argv) {
                Ok(inner) => run_single(&inner, &spec.command),
                Err(code) => code,
            }
        }
        c => run_single(&cli, subcommand_name(c)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_to_argv() {
        let spec: ExperimentSpec = serde_json::from_str(
            r#"{"command":"moving-sphere","params":{"suite":"gradient-lemma","h_functions":7,"betas":[1,4]},"seed":3}"#,
        )
        .unwrap();
        // parameters come out in key order
        let argv = spec.to_argv(Path::new("out"), 0).unwrap();
        assert_eq!(
            argv,
            [
                "conforma", "--seed", "3", "--output-dir", "out", "moving-sphere", "--betas", "1,4",
                "--h-functions", "7", "--suite", "gradient-lemma"
            ]
        );
        let cli = Cli::try_parse_from(&argv).unwrap();
        match cli.command {
            Command::MovingSphere(a) => {
                assert_eq!(a.suite, SphereSuite::GradientLemma);
                assert_eq!(a.h_functions, 7);
                assert_eq!(a.betas, vec![1.0, 4.0]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spec_rejects_unknown_command() {
        let spec = ExperimentSpec { command: "suite".into(), params: Default::default(), seed: None, output_dir: None };
        assert!(spec.to_argv(Path::new("x"), 0).is_err());
    }

    #[test]
    fn operator_names() {
        assert_eq!(commands::parse_operator("sigma2-root", 4).unwrap().homogeneous_degree(), Some(1.0));
        assert_eq!(commands::parse_operator("sigma3", 4).unwrap().homogeneous_degree(), Some(3.0));
        for bad in ["sigma0", "sigma5", "sig2", "sigma", "sigma2-rot"] {
            assert!(matches!(commands::parse_operator(bad, 4), Err(Error::Domain(_))), "{bad}");
        }
    }

    #[test]
    fn global_flags_after_subcommand() {
        let cli = Cli::try_parse_from(["conforma", "harnack", "--seed", "4", "--format", "both"]).unwrap();
        assert_eq!(cli.seed, 4);
        assert_eq!(cli.format, Format::Both);
    }
}
