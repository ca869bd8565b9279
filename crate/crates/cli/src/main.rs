use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use qdisc::ensemble::{random_ensemble, validate};
use qdisc::optimal::SolveOptions;
use qdisc::sim::simulate;
use qdisc::vnm::{verify, PROJECTIVE_TOL};
use qdisc::{certify, compute_lsm, prob_correct, solve_optimal, ComplexMatrix, Ensemble, Error, Povm, Priors};

#[derive(Parser)]
#[command(name = "qdisc", version, about = "Optimal and square-root measurements for mixed-state discrimination")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check priors, traces, positivity and span of an ensemble.
    Validate { ensemble: PathBuf },
    /// Generate a seeded random ensemble.
    Gen {
        #[arg(long)]
        dim: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        ranks: Vec<usize>,
        /// Comma-separated priors, `uniform` or `random`.
        #[arg(long, default_value = "uniform")]
        priors: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        independent: bool,
    },
    /// Compute the least-squares (square-root) measurement.
    Lsm {
        ensemble: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for the minimum-error measurement.
    Solve {
        ensemble: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    /// Check a measurement against a dual certificate.
    Certify {
        ensemble: PathBuf,
        povm: PathBuf,
        cert: PathBuf,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Probability of correct detection.
    Pd { ensemble: PathBuf, povm: PathBuf },
    /// Check whether a measurement is Von Neumann with matching ranks.
    CheckVnm {
        ensemble: PathBuf,
        povm: PathBuf,
        #[arg(long, default_value_t = PROJECTIVE_TOL)]
        tol: f64,
    },
    /// Monte Carlo detection experiment.
    Simulate {
        ensemble: PathBuf,
        povm: PathBuf,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
}

/// Only `x_hat` is needed from a certificate file; other fields are ignored.
#[derive(Deserialize)]
struct CertInput {
    x_hat: ComplexMatrix,
}

#[derive(Serialize)]
struct PdOutput {
    pd: f64,
}

#[derive(Serialize)]
struct ErrorOutput {
    error: String,
}

enum Failure {
    /// Bad input or arguments: exit 2, reason on stderr.
    Usage(String),
    /// Well-formed input the computation rejects: exit 1, JSON on stdout.
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type Outcome = Result<bool, Failure>;

fn read_input(path: &PathBuf) -> Result<String, Failure> {
    let mut s = String::new();
    if path.as_os_str() == "-" {
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Usage(format!("stdin: {e}")))?;
    } else {
        s = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    Ok(s)
}

fn load<T: DeserializeOwned>(path: &PathBuf) -> Result<T, Failure> {
    let text = read_input(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

fn emit<T: Serialize>(value: &T) {
    println!("{}", to_json(value));
}

fn write_file<T: Serialize>(path: &PathBuf, value: &T) -> Result<(), Failure> {
    fs::write(path, to_json(value) + "\n").map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn parse_priors(s: &str) -> Result<Priors, Failure> {
    match s {
        "uniform" => Ok(Priors::Uniform),
        "random" => Ok(Priors::Random),
        _ => s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map(Priors::Given)
            .map_err(|e| Failure::Usage(format!("--priors: {e}"))),
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Validate { ensemble } => {
            let e: Ensemble = load(&ensemble)?;
            let report = validate(&e);
            emit(&report);
            Ok(report.pass)
        }
        Command::Gen {
            dim,
            ranks,
            priors,
            seed,
            independent,
        } => {
            let priors = parse_priors(&priors)?;
            let e = random_ensemble(dim, &ranks, &priors, seed, independent)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            emit(&e);
            Ok(true)
        }
        Command::Lsm { ensemble, out } => {
            let e: Ensemble = load(&ensemble)?;
            let p = compute_lsm(&e)?;
            if let Some(path) = out {
                write_file(&path, &p)?;
            }
            emit(&p);
            Ok(true)
        }
        Command::Solve {
            ensemble,
            tol,
            max_iter,
            out,
            cert,
        } => {
            let e: Ensemble = load(&ensemble)?;
            let opts = SolveOptions {
                tol,
                max_iter,
                ..SolveOptions::default()
            };
            let (solution, converged) = match solve_optimal(&e, &opts) {
                Ok(s) => (s, true),
                Err(Error::NotConverged(s)) => {
                    eprintln!("solver did not converge in {max_iter} iterations; reporting best iterate");
                    (*s, false)
                }
                Err(err) => return Err(err.into()),
            };
            if let Some(path) = out {
                write_file(&path, &solution.povm)?;
            }
            if let Some(path) = cert {
                write_file(&path, &solution.certificate)?;
            }
            emit(&solution);
            Ok(converged)
        }
        Command::Certify {
            ensemble,
            povm,
            cert,
            tol,
        } => {
            let e: Ensemble = load(&ensemble)?;
            let p: Povm = load(&povm)?;
            let c: CertInput = load(&cert)?;
            let report = certify(&e, &p, &c.x_hat, tol)?;
            emit(&report);
            Ok(report.is_optimal())
        }
        Command::Pd { ensemble, povm } => {
            let e: Ensemble = load(&ensemble)?;
            let p: Povm = load(&povm)?;
            emit(&PdOutput {
                pd: prob_correct(&e, &p)?,
            });
            Ok(true)
        }
        Command::CheckVnm { ensemble, povm, tol } => {
            let e: Ensemble = load(&ensemble)?;
            let p: Povm = load(&povm)?;
            let report = verify(&e, &p, tol)?;
            emit(&report);
            Ok(report.is_von_neumann)
        }
        Command::Simulate {
            ensemble,
            povm,
            trials,
            seed,
        } => {
            let e: Ensemble = load(&ensemble)?;
            let p: Povm = load(&povm)?;
            emit(&simulate(&e, &p, trials, seed)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    let code = match run(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Failure::Domain(e)) => {
            eprintln!("{e}");
            emit(&ErrorOutput { error: e.to_string() });
            1
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("{}", msg.lines().next().unwrap_or_default());
            2
        }
    };
    let _ = io::stdout().flush();
    ExitCode::from(code)
}
