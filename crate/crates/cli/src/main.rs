mod commands;
mod output;
mod spec;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use commands::{condition, is_numeric, Failure};
use spec::JobArgs;

/// Theta-spherical functions, transforms and diagnostics on root systems.
#[derive(Parser)]
#[command(name = "thetasph", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate phi_Theta, Phi, c-functions, delta or Delta on lists or grids.
    Eval(JobArgs),
    /// Theta-spherical transform of a test function.
    Transform(JobArgs),
    /// Reconstruct a test function from its transform.
    Invert(JobArgs),
    /// Calibrate kappa on a reference bump and report the reconstruction error.
    Roundtrip(JobArgs),
    /// Paley-Wiener diagnostics for the transform of a test function.
    PwCheck(JobArgs),
    /// Query the symmetric-pair atlas.
    Atlas(JobArgs),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    module: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    condition: Option<&'a str>,
    message: String,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    schema_version: u32,
    error: ErrorBody<'a>,
}

fn fail(kind: &str, module: &str, cond: Option<&str>, message: String, code: u8) -> ExitCode {
    let report = ErrorReport {
        schema_version: output::SCHEMA_VERSION,
        error: ErrorBody { kind, module, condition: cond, message },
    };
    println!("{}", output::to_json_line(&report));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match cli.cmd {
        Cmd::Eval(a) => ("eval", a),
        Cmd::Transform(a) => ("transform", a),
        Cmd::Invert(a) => ("invert", a),
        Cmd::Roundtrip(a) => ("roundtrip", a),
        Cmd::PwCheck(a) => ("pw-check", a),
        Cmd::Atlas(a) => ("atlas", a),
    };
    let result = args.resolve().map_err(Failure::from).and_then(|a| match name {
        "eval" => commands::eval(&a),
        "transform" => commands::transform(&a),
        "invert" => commands::invert(&a),
        "roundtrip" => commands::roundtrip_cmd(&a),
        "pw-check" => commands::pw_check_cmd(&a),
        _ => commands::atlas_cmd(&a),
    });
    match result {
        Ok(out) => match output::emit(out.path.as_deref(), &out.text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail("invalid_spec", "cli", None, format!("cannot write output: {e}"), 1),
        },
        Err(Failure::Spec(msg)) => fail("invalid_spec", "cli", None, msg, 1),
        Err(Failure::Core(e)) if is_numeric(&e) => {
            fail("numeric", e.module(), Some(condition(&e)), e.to_string(), 2)
        }
        Err(Failure::Core(e)) => fail("invalid_spec", e.module(), None, e.to_string(), 1),
    }
}
