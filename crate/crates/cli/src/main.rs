// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde::Serialize;
use walkmax_core::{Error, IncrementModel, Result};

use args::{Cli, Command, OutputArgs};
use output::{emit, Outcome, OutputPaths, RunManifest, SCHEMA_VERSION};

const EXIT_PASS: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_FAIL: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::from(EXIT_PASS),
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Usage errors (bad flags, malformed specs, inconsistent parameters) exit
/// with 1; computational refusals with 2.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Spec { .. } | Error::Param { .. } | Error::StepMismatch(..) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

fn run(command: Command) -> Result<bool> {
    let start = Instant::now();
    let name = command.name();
    match &command {
        Command::VerifyClass(a) => finish(name, &a.model.model, a, &a.output, start, commands::verify_class(a)),
        Command::Constants(a) => finish(name, &a.model.model, a, &a.output, start, commands::constants(a)),
        Command::TailReport(a) => finish(name, &a.model.model, a, &a.output, start, commands::tail_report(a)),
        Command::LocalReport(a) => finish(name, &a.model.model, a, &a.output, start, commands::local_report(a)),
        Command::Finite(a) => finish(name, &a.model.model, a, &a.output, start, commands::finite(a)),
        Command::Stopped(a) => finish(name, &a.model.model, a, &a.output, start, commands::stopped(a)),
        Command::Bigjump(a) => finish(name, &a.model.model, a, &a.output, start, commands::bigjump(a)),
        Command::RenewalDiag(a) => finish(name, &a.model.model, a, &a.output, start, commands::renewal(a)),
        Command::ConvolutionCheck(a) => finish(
            name,
            &a.model.model,
            a,
            &a.output,
            start,
            commands::convolution_check(a),
        ),
    }
}

fn finish<A: Serialize>(
    command: &'static str,
    model: &str,
    args: &A,
    out: &OutputArgs,
    start: Instant,
    outcome: Result<Outcome>,
) -> Result<bool> {
    let outcome = outcome?;
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        tool_version: walkmax_core::VERSION,
        command,
        model: model.to_string(),
        model_canonical: model.parse::<IncrementModel>().ok().map(|m| m.to_string()),
        params: serde_json::to_value(args)?,
        resolved: outcome.resolved.clone(),
        outputs: OutputPaths {
            json: out.json.clone(),
            csv: out.csv.clone(),
        },
    };
    for notice in &outcome.notices {
        eprintln!("notice: {notice}");
    }
    emit(&manifest, out, &outcome, Some(start.elapsed().as_millis() as u64))?;
    eprintln!("{command}: {}", if outcome.passed { "pass" } else { "fail" });
    Ok(outcome.passed)
}
