//! `sfflab` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;

/// Bad flags or values detected before any computation starts.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// A numerical stage failed.
#[derive(Debug)]
pub struct NumericalFailure {
    pub stage: &'static str,
    pub message: String,
}

impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)
    }
}

impl std::error::Error for NumericalFailure {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Tag core errors with the stage they came from.
pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> anyhow::Result<T>;
}

impl<T, E: std::fmt::Display> Stage<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> anyhow::Result<T> {
        self.map_err(|e| {
            NumericalFailure {
                stage,
                message: e.to_string(),
            }
            .into()
        })
    }
}

fn workers_from_env() -> anyhow::Result<Option<usize>> {
    match std::env::var("SFFLAB_WORKERS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(usage(format!("SFFLAB_WORKERS must be a positive integer, got '{v}'"))),
        },
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        2
    } else if err.downcast_ref::<NumericalFailure>().is_some() {
        3
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = workers_from_env().and_then(|workers| match workers {
        Some(n) => sfflab::par::with_workers(n, || commands::run(&cli)),
        None => commands::run(&cli),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
