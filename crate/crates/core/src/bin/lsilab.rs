use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lsilab::quadrature::DEFAULT_ORDER;
use lsilab::report::{self, DEFAULT_OUT_DIR, OUT_ENV};

#[derive(Parser)]
#[command(name = "lsilab", version, about = "Gaussian log-Sobolev stability laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print mass, barycenter, entropy, Fisher information and deficit of one density.
    Functionals {
        /// Density specification, e.g. "family=quadratic a=0.5 dim=1".
        spec: String,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[arg(long, env = OUT_ENV, default_value = DEFAULT_OUT_DIR)]
        out: PathBuf,
    },
    /// Run every check on a corpus and write report.csv, report.json and timings.csv.
    Verify {
        config: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, env = OUT_ENV, default_value = DEFAULT_OUT_DIR)]
        out: PathBuf,
    },
    /// Closed-form sweep of the rescaled Gaussian family.
    Sharpness {
        #[arg(long)]
        a_min: f64,
        #[arg(long)]
        a_max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> lsilab::Result<bool> {
    match cli.command {
        Command::Functionals { spec, order, out } => {
            let (_, text, path) = report::cmd_functionals(&spec, order, &out)?;
            print!("{text}");
            println!("wrote {}", path.display());
            Ok(true)
        }
        Command::Verify { config, jobs, out } => {
            let outcome = report::cmd_verify(&config, jobs, &out)?;
            for case in &outcome.report.cases {
                for r in case.records.iter().filter(|r| !r.passed()) {
                    println!(
                        "FAIL {} {} [{}]: lhs {:e} rhs {:e} slack {:e} {}",
                        case.id,
                        r.name,
                        case.density,
                        r.lhs,
                        r.rhs,
                        r.slack,
                        r.notes.join("; ")
                    );
                }
            }
            let s = &outcome.report.summary;
            println!(
                "{} cases, {} rows, {} passed, {} failed",
                s.cases, s.rows, s.passed, s.failed
            );
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            Ok(outcome.report.passed())
        }
        Command::Sharpness {
            a_min,
            a_max,
            steps,
            dim,
            out,
        } => {
            let rows = report::cmd_sharpness(a_min, a_max, steps, dim, &out)?;
            for r in &rows {
                println!("a={:<12.6e} ratio={:.6}", r.a, r.ratio);
            }
            println!("wrote {}", out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
