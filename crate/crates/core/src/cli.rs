//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::check::{check, CheckEnv, CheckError, UsageError};
use crate::defs::TypeDefs;
use crate::graph::delinearize;
use crate::linearize::{graph_stats, linearize};
use crate::syntax::{parse_type_defs, parse_type_scheme, parse_value_literal, print_expr, ParseError};
use crate::types::univ;
use crate::value::translate;
use crate::wire::{decode, encode};

pub const EXIT_ACCEPT: i32 = 0;
pub const EXIT_REJECT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "umv", version, about = "Check untyped serialized values against type schemes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Serialize a value literal.
    Encode {
        #[arg(long)]
        defs: PathBuf,
        value: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Verify a serialized value against a type scheme.
    Check {
        #[arg(long)]
        defs: PathBuf,
        #[arg(long = "type")]
        scheme: String,
        input: PathBuf,
    },
    /// Verify, then print the value as a literal.
    Decode {
        #[arg(long)]
        defs: PathBuf,
        #[arg(long = "type")]
        scheme: String,
        input: PathBuf,
    },
    /// Report the shape of a serialized value without checking it.
    Lint { input: PathBuf },
}

/// An error already formatted for standard error, with its exit code.
struct Exit(i32, String);

fn read_text(path: &Path) -> Result<String, Exit> {
    fs::read_to_string(path).map_err(|e| Exit(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, Exit> {
    fs::read(path).map_err(|e| Exit(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn located(file: &str, e: ParseError) -> Exit {
    Exit(EXIT_INPUT, format!("{file}:{e}"))
}

fn load_defs(path: &Path) -> Result<TypeDefs, Exit> {
    let text = read_text(path)?;
    parse_type_defs(&text).map_err(|e| located(&path.display().to_string(), e))
}

/// Runs one command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_ACCEPT };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(Exit(code, message)) => {
            let _ = writeln!(err, "{message}");
            code
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32, Exit> {
    let io = |e: std::io::Error| Exit(EXIT_INPUT, e.to_string());
    match command {
        Command::Encode { defs, value, output } => {
            let defs = load_defs(&defs)?;
            let text = read_text(&value)?;
            let e = parse_value_literal(&text, &defs).map_err(|e| located(&value.display().to_string(), e))?;
            let term = translate(&e, &defs).map_err(|e| Exit(EXIT_INPUT, format!("{}: {e}", value.display())))?;
            let graph = delinearize(&term).map_err(|e| Exit(EXIT_INPUT, format!("{}: {e}", value.display())))?;
            fs::write(&output, encode(&graph)).map_err(|e| Exit(EXIT_INPUT, format!("{}: {e}", output.display())))?;
            Ok(EXIT_ACCEPT)
        }
        Command::Check { defs, scheme, input } => verify(&defs, &scheme, &input, false, out),
        Command::Decode { defs, scheme, input } => verify(&defs, &scheme, &input, true, out),
        Command::Lint { input } => {
            let bytes = read_bytes(&input)?;
            let graph = decode(&bytes).map_err(|e| Exit(EXIT_INPUT, format!("{}: {e}", input.display())))?;
            let s = graph_stats(&graph);
            writeln!(
                out,
                "nodes: {}\nblocks: {}\nshared nodes: {}\ncyclic components: {}\nmax fix depth: {}",
                s.nodes, s.blocks, s.shared_nodes, s.scc_count, s.max_fix_depth
            )
            .map_err(io)?;
            Ok(EXIT_ACCEPT)
        }
    }
}

fn verify(defs: &Path, scheme: &str, input: &Path, print: bool, out: &mut dyn Write) -> Result<i32, Exit> {
    let defs = load_defs(defs)?;
    let scheme = parse_type_scheme(scheme, &defs).map_err(|e| located("--type", e))?;
    let bytes = read_bytes(input)?;
    let graph = decode(&bytes).map_err(|e| Exit(EXIT_INPUT, format!("{}: {e}", input.display())))?;
    let term = linearize(&graph);
    let goal = univ(&scheme);
    let io = |e: std::io::Error| Exit(EXIT_INPUT, e.to_string());
    let result = defs
        .check_ground(&goal)
        .map_err(|e| CheckError::from(UsageError::from(e)))
        .and_then(|()| check(&defs, CheckEnv::new(), &goal, &term));
    match result {
        Ok((expr, _)) => {
            if print {
                writeln!(out, "{}", print_expr(&expr)).map_err(io)?;
            } else {
                writeln!(out, "ACCEPT").map_err(io)?;
            }
            Ok(EXIT_ACCEPT)
        }
        Err(CheckError::Failure(f)) => {
            writeln!(out, "REJECT").map_err(io)?;
            Err(Exit(EXIT_REJECT, format!("{}: {f}", input.display())))
        }
        Err(CheckError::Usage(u)) => Err(Exit(EXIT_USAGE, format!("{}: {u}", input.display()))),
    }
}
