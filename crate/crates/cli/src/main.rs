use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gennum::dsl::{parse_cnet, parse_expression};
use gennum::geometry::check_condition_e;
use gennum::scenario::{
    parse_scenario, run_file, run_scenario, CheckSpec, FixpointSpec, Flags, IntersectSpec,
    MapSpec, Scenario, SequenceSpec,
};
use gennum::{distance, sharp_norm, Error};

/// Exact computation with generalized numbers under the sharp norm.
#[derive(Parser)]
#[command(name = "gennum", version)]
struct Cli {
    #[command(flatten)]
    windows: Windows,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Windows {
    /// Verification window K (grid indices 1..=K) [default: 256]
    #[arg(long, global = true)]
    check_k: Option<u32>,
    /// Number of balls n for intersections [default: 20]
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Certify the diagonal witness for balls 1..=N
    #[arg(long, global = true, value_name = "N")]
    certify: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the normal form, valuation and sharp norm of an expression
    Eval { expr: String },
    /// Print the sharp distance |x - y|_e
    Dist { x: String, y: String },
    /// Certify condition (E) for a scaling net, or name the failing clause
    CheckE { cnet: String },
    /// Build a euclidean model of the dressed ball (center, e^-rho)
    Model {
        center: String,
        rho: String,
        /// Scaling net
        #[arg(long, default_value = "const(1)")]
        cnet: String,
    },
    /// Intersect a nested ball sequence (a preset or a scenario file)
    Intersect {
        /// `geometric` or `dense`
        #[arg(long, conflicts_with = "file")]
        preset: Option<String>,
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Run a Hahn-Banach extension scenario file
    Hb { file: PathBuf },
    /// Iterate an affine map x -> a*x + b, or run a fixpoint scenario file
    Fixpoint {
        #[arg(long, conflicts_with_all = ["a", "b"])]
        file: Option<PathBuf>,
        #[arg(long, default_value = "e^(1)")]
        a: String,
        #[arg(long, default_value = "1")]
        b: String,
        #[arg(long, default_value = "0")]
        seed: String,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Neumann series truncation order
        #[arg(long)]
        order: Option<u32>,
        #[arg(long)]
        second_seed: Option<String>,
    },
    /// Run any scenario file
    Run { file: PathBuf },
}

fn input_error(e: Error) -> ExitCode {
    eprintln!("error: {}", e);
    ExitCode::from(2)
}

fn emit(report: gennum::Result<gennum::scenario::Report>) -> ExitCode {
    match report {
        Ok(r) => {
            print!("{}", r);
            ExitCode::from(r.exit_code() as u8)
        }
        Err(e) => input_error(e),
    }
}

fn file_of_kind(path: &PathBuf, kind: &str, flags: &Flags) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {}", path.display(), e);
            return ExitCode::from(2);
        }
    };
    let s = match parse_scenario(&text) {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    let actual = match &s {
        Scenario::Intersect(_) => "intersect",
        Scenario::Hb(_) => "hb",
        Scenario::Fixpoint(_) => "fixpoint",
        Scenario::Check(_) => "check",
    };
    if actual != kind {
        return input_error(Error::Parse {
            pos: 0,
            msg: format!("expected a `{}` scenario, found `{}`", kind, actual),
        });
    }
    emit(run_scenario(&s, flags))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let flags = Flags {
        check_k: cli.windows.check_k,
        depth: cli.windows.depth,
        certify: cli.windows.certify,
    };
    match cli.command {
        Command::Eval { expr } => match parse_expression(&expr) {
            Ok(x) => {
                println!("normal_form: {}", x);
                match x.valuation() {
                    Some(v) => println!("valuation: {}", gennum::rational::fmt_rational(&v)),
                    None => println!("valuation: +inf"),
                }
                println!("norm: {}", sharp_norm(&x));
                ExitCode::SUCCESS
            }
            Err(e) => input_error(e),
        },
        Command::Dist { x, y } => match (parse_expression(&x), parse_expression(&y)) {
            (Ok(x), Ok(y)) => {
                println!("{}", distance(&x, &y));
                ExitCode::SUCCESS
            }
            (Err(e), _) | (_, Err(e)) => input_error(e),
        },
        Command::CheckE { cnet } => {
            let c = match parse_cnet(&cnet) {
                Ok(c) => c,
                Err(e) => return input_error(e),
            };
            match check_condition_e(&c, flags.check_k.unwrap_or(gennum::scenario::DEFAULT_CHECK_K)) {
                Ok(cert) => {
                    println!("PASS: {}", cert);
                    ExitCode::SUCCESS
                }
                Err(Error::ConditionE(f)) => {
                    println!("FAIL: {}", f);
                    ExitCode::from(1)
                }
                Err(e) => input_error(e),
            }
        }
        Command::Model { center, rho, cnet } => {
            let s = Scenario::Check(CheckSpec {
                kind: "check".into(),
                cnet,
                center: Some(center),
                rho: Some(rho),
                window: None,
            });
            emit(run_scenario(&s, &flags))
        }
        Command::Intersect { preset, file } => match (preset, file) {
            (_, Some(path)) => file_of_kind(&path, "intersect", &flags),
            (preset, None) => {
                let s = Scenario::Intersect(IntersectSpec {
                    kind: "intersect".into(),
                    sequence: SequenceSpec::Preset {
                        preset: preset.unwrap_or_else(|| "geometric".into()),
                    },
                    depth: None,
                    check_k: None,
                    certify: None,
                });
                emit(run_scenario(&s, &flags))
            }
        },
        Command::Hb { file } => file_of_kind(&file, "hb", &flags),
        Command::Fixpoint {
            file,
            a,
            b,
            seed,
            steps,
            order,
            second_seed,
        } => match file {
            Some(path) => file_of_kind(&path, "fixpoint", &flags),
            None => {
                let s = Scenario::Fixpoint(FixpointSpec {
                    kind: "fixpoint".into(),
                    map: MapSpec::Affine { a, b },
                    seed,
                    steps,
                    second_seed,
                    order,
                });
                emit(run_scenario(&s, &flags))
            }
        },
        Command::Run { file } => {
            let (out, code) = run_file(&file, &flags);
            if code == 2 {
                eprint!("{}", out);
            } else {
                print!("{}", out);
            }
            ExitCode::from(code as u8)
        }
    }
}
