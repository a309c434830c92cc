use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use smmt_core::netbench::{self, BenchEntry, NetParams};
use smmt_core::{
    check_drat, eager_encode, parse_dimacs, parse_instance, prove, read_certificate, solve_instance,
    write_certificate, write_dimacs, write_instance, Instance, ProveConfig, ProveOutcome, SolveOutcome,
};

const EXIT_SAT: u8 = 10;
const EXIT_UNSAT: u8 = 20;
const EXIT_USAGE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "smmt", version, about = "SAT modulo monotonic theories with DRAT proofs")]
struct Cli {
    /// Print statistics and reports to stderr.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide an instance; exits 10 (SAT) or 20 (UNSAT).
    Solve {
        instance: PathBuf,
        /// On UNSAT, write the raw certificate (with theory lemmas) here.
        #[arg(long)]
        proof: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Decide an instance and, if UNSAT, write a checkable proof.
    Prove {
        instance: PathBuf,
        #[arg(short = 'o', long = "out")]
        out_dir: PathBuf,
        /// Output file stem; defaults to the instance file stem.
        #[arg(long)]
        name: Option<String>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Check a plain DRAT proof; exits 0 (verified) or 1 (rejected).
    Check { cnf: PathBuf, drat: PathBuf },
    /// Generate network-reachability benchmarks and a manifest.
    GenBench {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        layers: usize,
        #[arg(long, default_value_t = 3)]
        per_layer: usize,
        #[arg(long, default_value_t = 8)]
        width: usize,
        /// Number of instances, with consecutive seeds.
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Add a reachability query the refutation does not need.
        #[arg(long)]
        irrelevant: bool,
        /// Write a predefined suite instead of the parameters above.
        #[arg(long, value_enum)]
        suite: Option<Suite>,
        #[arg(short = 'o', long = "out")]
        out_dir: PathBuf,
    },
    /// Replace every predicate by its CNF definitions.
    Bitblast {
        instance: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Suite {
    Oracle,
    Stress,
}

#[derive(Args, Debug)]
struct RunFlags {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    conflict_budget: Option<u64>,
    /// Keep every emitted lemma instead of trimming to the refutation core.
    #[arg(long)]
    no_backward_check: bool,
    /// Trim further until no single proof step can be dropped (slow).
    #[arg(long)]
    minimize: bool,
    /// Worker threads for lemma discharge.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl RunFlags {
    fn config(&self) -> ProveConfig {
        ProveConfig {
            backward_check: !self.no_backward_check,
            minimize: self.minimize,
            seed: self.seed,
            conflict_budget: self.conflict_budget,
            jobs: self.jobs.max(1),
            log_proof: false,
        }
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    parse_instance(&read_input(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))
}

fn internal<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Internal(e.to_string())
}

fn print_model(model: &[bool], num_vars: u32) {
    let mut line = String::from("v");
    for v in 1..=num_vars as usize {
        let lit = if model.get(v).copied().unwrap_or(false) {
            v as i64
        } else {
            -(v as i64)
        };
        let tok = format!(" {lit}");
        if line.len() + tok.len() > 78 {
            println!("{line}");
            line = String::from("v");
        }
        line.push_str(&tok);
    }
    println!("{line} 0");
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Solve { instance, proof, run } => {
            let inst = load_instance(&instance)?;
            let config = ProveConfig {
                log_proof: proof.is_some(),
                ..run.config()
            };
            let (outcome, stats) = solve_instance(&inst, &config).map_err(internal)?;
            if cli.verbose > 0 {
                eprintln!("c {stats:?}");
            }
            Ok(match outcome {
                SolveOutcome::Sat(model) => {
                    println!("s SATISFIABLE");
                    print_model(&model, inst.num_vars());
                    EXIT_SAT
                }
                SolveOutcome::Unsat(cert) => {
                    if let (Some(path), Some(cert)) = (&proof, cert) {
                        write_output(path, &write_certificate(&cert))?;
                    }
                    println!("s UNSATISFIABLE");
                    EXIT_UNSAT
                }
                SolveOutcome::Unknown => {
                    println!("s UNKNOWN");
                    0
                }
            })
        }
        Command::Prove {
            instance,
            out_dir,
            name,
            run,
        } => {
            let inst = load_instance(&instance)?;
            ensure_dir(&out_dir)?;
            let stem = match name {
                Some(n) => n,
                None => instance
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .ok_or_else(|| CliError::Usage(format!("no file name in {}", instance.display())))?,
            };
            match prove(&inst, &run.config()).map_err(internal)? {
                ProveOutcome::Sat(model) => {
                    println!("s SATISFIABLE");
                    print_model(&model, inst.num_vars());
                    Ok(EXIT_SAT)
                }
                ProveOutcome::Unknown => {
                    println!("s UNKNOWN");
                    Ok(0)
                }
                ProveOutcome::Unsat(proof) => {
                    let path = |ext: &str| out_dir.join(format!("{stem}.{ext}"));
                    write_output(&path("final.cnf"), &write_dimacs(&proof.final_cnf))?;
                    write_output(&path("drat"), &write_certificate(&proof.drat))?;
                    write_output(&path("cert"), &write_certificate(&proof.certificate))?;
                    write_output(&path("report"), &format!("{}\n", proof.report))?;
                    if cli.verbose > 0 {
                        eprintln!("{}", proof.report);
                    }
                    println!("s UNSATISFIABLE");
                    Ok(EXIT_UNSAT)
                }
            }
        }
        Command::Check { cnf, drat } => {
            let f = parse_dimacs(&read_input(&cnf)?).map_err(|e| CliError::Usage(format!("{}: {e}", cnf.display())))?;
            let text = read_input(&drat)?;
            let proof = match read_certificate(&text) {
                Ok(p) => p,
                Err(e) => {
                    println!("s REJECTED");
                    eprintln!("{}: {e}", drat.display());
                    return Ok(1);
                }
            };
            let verdict = check_drat(&f, &proof);
            if verdict.is_verified() {
                println!("s VERIFIED");
                Ok(0)
            } else {
                println!("s REJECTED");
                eprintln!("{verdict:?}");
                Ok(1)
            }
        }
        Command::GenBench {
            seed,
            layers,
            per_layer,
            width,
            count,
            irrelevant,
            suite,
            out_dir,
        } => {
            let entries: Vec<BenchEntry> = match suite {
                Some(Suite::Oracle) => netbench::oracle_suite(),
                Some(Suite::Stress) => netbench::stress_suite(),
                None => {
                    if layers == 0 || per_layer == 0 {
                        return Err(CliError::Usage("--layers and --per-layer must be at least 1".into()));
                    }
                    if !(2..=32).contains(&width) {
                        return Err(CliError::Usage("--width must be in 2..=32".into()));
                    }
                    let params = NetParams {
                        layers,
                        per_layer,
                        width,
                        irrelevant,
                    };
                    (seed..seed + count)
                        .map(|s| BenchEntry {
                            name: format!("net_s{s}"),
                            seed: s,
                            params,
                        })
                        .collect()
                }
            };
            ensure_dir(&out_dir)?;
            for e in &entries {
                let (inst, _) = netbench::encode(&netbench::generate(e.seed, e.params));
                write_output(&out_dir.join(format!("{}.smmt", e.name)), &write_instance(&inst))?;
            }
            write_output(&out_dir.join("manifest.txt"), &netbench::manifest(&entries))?;
            if cli.verbose > 0 {
                eprintln!("c wrote {} instances to {}", entries.len(), out_dir.display());
            }
            Ok(0)
        }
        Command::Bitblast { instance, out } => {
            let inst = load_instance(&instance)?;
            let cnf = eager_encode(&inst).map_err(internal)?;
            write_output(&out, &write_dimacs(&cnf))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("smmt: {e}");
            ExitCode::from(e.code())
        }
    }
}
