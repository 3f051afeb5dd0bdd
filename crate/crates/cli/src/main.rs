use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plateau_cli::export;
use plateau_cli::run::{run, Overrides};
use plateau_cli::scenario::{Format, Scenario};
use plateau_cli::{init_threads, CliError};
use plateau_core::identities::{self, parse_selector, IdentityConfig, Operators};

#[derive(Parser)]
#[command(name = "plateau", version, about = "Spanning certification and discrete area minimization")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Grid spacing h, overriding the scenario.
    #[arg(long, global = true)]
    grid: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for `run`, output file for `export` and `identities`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Squash constant K_n.
    #[arg(long, global = true)]
    kn: Option<f64>,
    /// Certify ℓ-spanning instead of the scenario's ℓ list.
    #[arg(long, global = true)]
    ell: Option<i64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a scenario file and write report.json plus artifacts.
    Run { file: PathBuf },
    /// Run the operator identity suites and print a pass/fail table.
    Identities {
        #[arg(long, default_value = "all")]
        suite: String,
        /// Negative control: run against a deliberately broken boundary operator.
        #[arg(long, hide = true)]
        corrupt: bool,
    },
    /// Export a JSON object file or `fixture:<name>` as obj, off, csv or txt.
    Export {
        object: String,
        #[arg(long)]
        format: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    init_threads()?;
    match cli.cmd {
        Cmd::Run { file } => {
            let (s, base) = Scenario::load(&file)?;
            let ov = Overrides { grid: cli.grid, seed: cli.seed, out: cli.out, kn: cli.kn, ell: cli.ell };
            let r = run(s, &base, &ov)?;
            for sys in &r.systems {
                for st in &sys.stages {
                    println!("{} {}", sys.label, serde_json::to_string(st).expect("stage serializes"));
                }
            }
            if !r.certified {
                return Err(CliError::Certification("a certification expectation failed; see report.json".into()));
            }
            Ok(0)
        }
        Cmd::Identities { suite, corrupt } => {
            let suites = parse_selector(&suite).map_err(|e| CliError::Schema(e.to_string()))?;
            let cfg = IdentityConfig::with_seed(cli.seed.unwrap_or(42));
            let ops = if corrupt { Operators::corrupted() } else { Operators::default() };
            let rep = identities::run(&suites, &cfg, &ops);
            print!("{}", rep.table());
            for c in rep.checks.iter().filter(|c| !c.passed()) {
                println!("{}", serde_json::to_string(c).expect("check serializes"));
            }
            if let Some(out) = cli.out {
                let body = serde_json::to_string_pretty(&rep).expect("report serializes");
                std::fs::write(&out, body + "\n").map_err(|e| CliError::Run(format!("{}: {e}", out.display())))?;
            }
            Ok(if rep.passed() { 0 } else { plateau_cli::EXIT_CERTIFICATION })
        }
        Cmd::Export { object, format } => {
            let format: Format = format.parse()?;
            let body = export::export(&export::load(&object)?, format)?;
            match cli.out {
                Some(p) => std::fs::write(&p, body).map_err(|e| CliError::Run(format!("{}: {e}", p.display())))?,
                None => print!("{body}"),
            }
            Ok(0)
        }
    }
}
