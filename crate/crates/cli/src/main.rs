//! `qcond` command-line frontend.
//!
//! Every command writes one output file (CSV for tables and curves, JSON for
//! reports) and a manifest next to it that echoes the resolved configuration.
//! The output goes to `--out`, or to `$QCOND_OUT_DIR/<command>.<ext>`, or to
//! `./<command>.<ext>`. Failures print `{"error": {"code", "message"}}` on
//! stderr and exit nonzero.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::commands::Cli;
use crate::output::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return CliError::Usage(e.to_string().trim().to_string()).report();
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
