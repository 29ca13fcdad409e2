use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use linkstab::experiment::{self, Artifact, ExperimentError, ExperimentSpec};
use linkstab::explorer::{ExploreError, Verdict};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_EMPTY_LEGIT: u8 = 3;
const EXIT_SIZE_CAP: u8 = 4;

#[derive(Parser)]
#[command(name = "linkstab", version, about = "Simulate, check and explore self-stabilizing link protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment, check its trace and write the artifacts
    Run(SpecArgs),
    /// Re-check an existing trace file
    Check {
        trace: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustively explore a small instance
    Explore(SpecArgs),
    /// Rounds-to-stabilize table over a range of process counts
    Bench(SpecArgs),
}

#[derive(Args)]
struct SpecArgs {
    /// key = value file; flags given on the command line override it
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    protocol: Option<String>,
    /// ring:N, line:N, star:N, complete:N, gnp:N:P:SEED, or an edge-list file
    #[arg(long)]
    topology: Option<String>,
    #[arg(long)]
    alphabet: Option<String>,
    /// WORD for every source, or P=WORD for process P; repeatable
    #[arg(long)]
    script: Vec<String>,
    /// round-robin, random, adversary:K or script:PATH
    #[arg(long)]
    scheduler: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    /// FRACTION or FRACTION:SEED
    #[arg(long)]
    corrupt: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// node cap for explore
    #[arg(long)]
    cap: Option<String>,
    /// process counts for bench, N or LO..HI
    #[arg(long)]
    n: Option<String>,
    /// seeds per process count for bench
    #[arg(long)]
    seeds: Option<String>,
}

impl SpecArgs {
    fn spec(&self) -> Result<ExperimentSpec, ExperimentError> {
        let mut spec = match &self.spec {
            Some(path) => ExperimentSpec::parse(&read(path)?)?,
            None => ExperimentSpec::default(),
        };
        let flags = [
            ("protocol", &self.protocol),
            ("topology", &self.topology),
            ("alphabet", &self.alphabet),
            ("scheduler", &self.scheduler),
            ("seed", &self.seed),
            ("steps", &self.steps),
            ("corrupt", &self.corrupt),
            ("cap", &self.cap),
            ("n", &self.n),
            ("seeds", &self.seeds),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                spec.set(key, v)?;
            }
        }
        for s in &self.script {
            spec.set("script", s)?;
        }
        if let Some(o) = &self.out {
            spec.out = Some(o.clone());
        }
        Ok(spec)
    }
}

fn read(path: &Path) -> Result<String, ExperimentError> {
    std::fs::read_to_string(path).map_err(|e| ExperimentError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_artifacts(dir: Option<&Path>, artifacts: &[Artifact]) -> Result<(), ExperimentError> {
    let Some(dir) = dir else { return Ok(()) };
    let io = |e: std::io::Error| ExperimentError::Io {
        path: dir.to_path_buf(),
        message: e.to_string(),
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    for a in artifacts {
        std::fs::write(dir.join(&a.name), &a.contents).map_err(io)?;
    }
    Ok(())
}

fn status(ok: bool) -> u8 {
    if ok {
        0
    } else {
        EXIT_FAIL
    }
}

fn execute(command: Command) -> Result<u8, ExperimentError> {
    match command {
        Command::Run(args) => {
            let spec = args.spec()?;
            let out = experiment::run_experiment(&spec)?;
            write_artifacts(spec.out.as_deref(), &out.artifacts)?;
            print_check(&out);
            Ok(status(out.ok()))
        }
        Command::Check { trace, out } => {
            let outcome = experiment::check_trace_text(&read(&trace)?)?;
            write_artifacts(out.as_deref(), &outcome.artifacts)?;
            print_check(&outcome);
            Ok(status(outcome.ok()))
        }
        Command::Explore(args) => {
            let spec = args.spec()?;
            let out = experiment::explore(&spec)?;
            write_artifacts(spec.out.as_deref(), &out.artifacts)?;
            print!("{}", out.artifacts[0].contents);
            if let Verdict::Counterexample(_) = out.verdict {
                if spec.out.is_none() {
                    println!("(pass --out DIR to save the counterexample)");
                }
            }
            Ok(status(out.verified()))
        }
        Command::Bench(args) => {
            let spec = args.spec()?;
            let table = experiment::bench(&spec)?;
            let artifacts = [
                Artifact {
                    name: "bench.txt".into(),
                    contents: table.to_text(),
                },
                Artifact {
                    name: "bench.csv".into(),
                    contents: table.to_csv(),
                },
            ];
            write_artifacts(spec.out.as_deref(), &artifacts)?;
            print!("{}", table.to_text());
            Ok(status(table.rows.iter().all(|r| r.converged == r.runs)))
        }
    }
}

fn print_check(out: &experiment::CheckOutcome) {
    let s = &out.summary;
    println!("protocol {} processes {} steps {}", s.protocol, s.processes, s.steps);
    println!("violations {}", out.violations.len());
    for (property, count) in &s.violations {
        println!("  {property} {count}");
    }
    match s.stabilization.global_step {
        Some(step) => println!(
            "stabilized at step {step} (round {})",
            s.stabilization.rounds_to_stabilize.unwrap_or(0)
        ),
        None => println!(
            "not stabilized: last violation at step {}",
            s.stabilization.global_raw_step.saturating_sub(1)
        ),
    }
    println!("liveness {}", if s.live { "ok" } else { "FAILED" });
    println!("{}", if s.ok { "ok" } else { "FAILED" });
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("linkstab: {e}");
            let code = match e {
                ExperimentError::Explore(ExploreError::EmptyLegitimateSet) => EXIT_EMPTY_LEGIT,
                ExperimentError::Explore(_) => EXIT_SIZE_CAP,
                _ => EXIT_USAGE,
            };
            ExitCode::from(code)
        }
    }
}
