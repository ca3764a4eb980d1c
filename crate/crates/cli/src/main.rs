use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use compser_cli::config::{resolve, ConfigError, Overrides, SuiteName, TableKind, Target};
use compser_cli::report::write_file;
use compser_cli::suites::run_suite;
use compser_cli::tables::emit_table;
use compser_core::rates::{rate_report, RateInput};

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "compser-lab",
    version,
    about = "Numerical lab for complementary series of SO°(d+1,1)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and write <out>/<suite>.json plus CSV tables.
    Suite {
        name: SuiteName,
        #[command(flatten)]
        common: Common,
    },
    /// Write a CSV table to <out>/<kind>.csv.
    Table {
        kind: TableKind,
        #[command(flatten)]
        common: Common,
    },
    /// Decay exponents from spectral data; prints the JSON report.
    Rates(RatesArgs),
}

#[derive(Args)]
struct Common {
    /// JSON document with any subset of the configuration fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    /// One value or a comma-separated grid.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    s: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    upsilon: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    cutoff: Option<i64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    show_config: bool,
}

#[derive(Args)]
struct RatesArgs {
    /// JSON spectral data: {d, delta, s1?, eigenvalues?, r?, xi?, no_nonspherical_above?}.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    s1: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    /// Also write <out>/rates.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            d: self.d,
            s: self.s.clone(),
            upsilon: self.upsilon,
            cutoff: self.cutoff,
            out: self.out.clone(),
        }
    }
}

fn config_error(e: ConfigError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_CONFIG)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Suite { name, common } => {
            let cfg = match resolve(
                Target::Suite(name),
                common.config.as_deref(),
                &common.overrides(),
            ) {
                Ok(c) => c,
                Err(e) => return config_error(e),
            };
            if common.show_config {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&cfg).expect("config serializes")
                );
                return ExitCode::SUCCESS;
            }
            let (report, tables) = run_suite(name, &cfg);
            for c in &report.cases {
                let mark = if c.pass { "PASS" } else { "FAIL" };
                println!(
                    "{mark} {}: measured {:.6e}, target {:.6e}, tolerance {:.1e}",
                    c.name, c.measured, c.target, c.tolerance
                );
            }
            let mut files = vec![(format!("{name}.json"), report.to_json())];
            files.extend(
                tables
                    .iter()
                    .map(|t| (format!("{}.csv", t.name), t.to_csv())),
            );
            for (file, text) in files {
                if let Err(e) = write_file(&cfg.out, &file, &text) {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_RUNTIME);
                }
            }
            println!("{name}: {}", if report.pass { "pass" } else { "FAIL" });
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAIL)
            }
        }
        Command::Table { kind, common } => {
            let cfg = match resolve(
                Target::Table(kind),
                common.config.as_deref(),
                &common.overrides(),
            ) {
                Ok(c) => c,
                Err(e) => return config_error(e),
            };
            if common.show_config {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&cfg).expect("config serializes")
                );
                return ExitCode::SUCCESS;
            }
            let table = match emit_table(kind, &cfg) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_RUNTIME);
                }
            };
            match write_file(&cfg.out, &format!("{}.csv", kind.as_str()), &table.to_csv()) {
                Ok(p) => {
                    println!("{}", p.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
        Command::Rates(args) => rates(args),
    }
}

fn rates(args: RatesArgs) -> ExitCode {
    let mut input = match &args.config {
        Some(p) => {
            let parsed = std::fs::read_to_string(p)
                .map_err(|e| e.to_string())
                .and_then(|t| serde_json::from_str::<RateInput>(&t).map_err(|e| e.to_string()));
            match parsed {
                Ok(i) => i,
                Err(e) => {
                    eprintln!("error: {}: {e}", p.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            }
        }
        None => RateInput {
            d: 1,
            delta: 0.9,
            s1: Some(0.6),
            eigenvalues: None,
            r: Some(0.05),
            xi: Some(0.05),
            no_nonspherical_above: false,
        },
    };
    if let Some(d) = args.d {
        if d != input.d {
            // s1 from the base input belongs to the old dimension; fall back to d/2.
            input.s1 = None;
        }
        input.d = d;
    }
    if let Some(x) = args.delta {
        input.delta = x;
    }
    if args.s1.is_some() {
        input.s1 = args.s1;
    }
    if args.r.is_some() {
        input.r = args.r;
    }
    if args.xi.is_some() {
        input.xi = args.xi;
    }
    let report = match rate_report(&input) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    print!("{text}");
    if let Some(dir) = &args.out {
        if let Err(e) = write_file(dir, "rates.json", &text) {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    ExitCode::SUCCESS
}
