mod args;
mod commands;
mod manifest;

use args::{Cli, Command};
use clap::Parser;
use commands::{write_file, CliError, CliResult, Output};
use manifest::{manifest_path, Recorder};
use std::path::PathBuf;
use std::process::ExitCode;

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("FPL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Threads(raw.clone()))?;
    // only fails if a pool already exists, which cannot happen this early
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    configure_threads()?;
    let (name, explicit_manifest) = match &cli.command {
        Command::Kernel(a) => ("kernel", a.common.manifest.clone()),
        Command::Asympt(a) => ("asympt", a.common.manifest.clone()),
        Command::Mass(a) => ("mass", a.common.manifest.clone()),
        Command::Converge(a) => ("converge", a.manifest.clone()),
        Command::Counterexample(a) => ("counterexample", a.common.manifest.clone()),
        Command::Accept(a) => ("accept", a.manifest.clone()),
    };
    let mut rec = Recorder::new(name);
    let result = match &cli.command {
        Command::Kernel(a) => commands::kernel(a, &mut rec).map(Some),
        Command::Asympt(a) => commands::asympt(a, &mut rec).map(Some),
        Command::Mass(a) => commands::mass(a, &mut rec).map(Some),
        Command::Converge(a) => commands::converge(a, &mut rec).map(Some),
        Command::Counterexample(a) => commands::counterexample(a, &mut rec).map(Some),
        Command::Accept(a) => commands::accept(a, &mut rec),
    };
    let failure = match result {
        Ok(out) => {
            let out_path: Option<PathBuf> = out.as_ref().and_then(|o| o.out.clone());
            if let Some(Output { text, out }) = out {
                match &out {
                    Some(path) => {
                        write_file(path, &text)?;
                        rec.output(path);
                    }
                    None => print!("{text}"),
                }
            }
            emit_manifest(rec, explicit_manifest.as_deref(), out_path.as_deref())?;
            None
        }
        // accept failures still get a manifest; input and numerical errors do not
        Err(e @ CliError::Failed(_)) => {
            emit_manifest(rec, explicit_manifest.as_deref(), None)?;
            Some(e)
        }
        Err(e) => Some(e),
    };
    failure.map_or(Ok(()), Err)
}

fn emit_manifest(rec: Recorder, explicit: Option<&std::path::Path>, out: Option<&std::path::Path>) -> CliResult<()> {
    let target = manifest_path(explicit, out);
    let mut m = rec.finish();
    if let Some(p) = &target {
        m.outputs.push(p.display().to_string());
    }
    let json = serde_json::to_string_pretty(&m).expect("manifest serializes");
    match target {
        Some(p) => write_file(&p, &format!("{json}\n")),
        None => {
            eprintln!("{json}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fpl: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
