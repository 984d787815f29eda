//! `qfilter`: filter functions, analytic fidelities and Monte-Carlo checks from the
//! command line. Output is CSV or JSON only.

mod commands;
mod config;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use config::{defaults, Format, Options, Resolved};
use output::{Csv, Outputs};

#[derive(Parser)]
#[command(name = "qfilter", version, about = "Filter-function analysis of single-qubit gates under dephasing noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Run {
    #[command(flatten)]
    options: Options,
    /// JSON config file; flags take precedence over it
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Print the merged configuration, defaults included, and exit
    #[arg(long)]
    show_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// First-order filter F1(ω) and its components on a log grid
    Filter1(Run),
    /// Fourth-order filter terms on the F2 grid
    Filter2(Run),
    /// Analytic fidelity report for one sequence
    Fidelity(Run),
    /// Errors of preset variants over a range of π-pulse durations
    Sweep(Run),
    /// Monte-Carlo ensemble fidelity
    Mc(Run),
    /// Analytic errors next to Monte-Carlo errors
    Compare(Run),
    /// Run the built-in invariant suite
    Validate(Run),
    /// List the named control presets
    PresetList(Run),
}

fn run(cli: Cli) -> Result<()> {
    let (name, run) = match &cli.command {
        Command::Filter1(r) => ("filter1", r),
        Command::Filter2(r) => ("filter2", r),
        Command::Fidelity(r) => ("fidelity", r),
        Command::Sweep(r) => ("sweep", r),
        Command::Mc(r) => ("mc", r),
        Command::Compare(r) => ("compare", r),
        Command::Validate(r) => ("validate", r),
        Command::PresetList(r) => ("preset-list", r),
    };
    let file = match &run.config {
        Some(p) => Options::from_file(p)?,
        None => Options::default(),
    };
    let merged = run.options.clone().or(file);
    if run.show_config {
        let mut shown = merged.or(defaults());
        if shown.freq_points.is_none() {
            shown.freq_points =
                Some(if name == "filter1" { config::FILTER1_POINTS } else { qfilter::filters::F2_DEFAULT_POINTS });
        }
        let mut v = serde_json::to_value(&shown)?;
        if let Some(m) = v.as_object_mut() {
            m.insert("command".into(), name.into());
        }
        println!("{}", serde_json::to_string_pretty(&v)?);
        return Ok(());
    }
    if let Some(n) = merged.threads {
        if n == 0 {
            bail!("threads must be at least 1");
        }
        std::env::set_var("RAYON_NUM_THREADS", n.to_string());
    }
    let r = Resolved::new(merged)?;
    let outputs = match &cli.command {
        Command::Filter1(_) => commands::filter1(&r)?,
        Command::Filter2(_) => commands::filter2(&r)?,
        Command::Fidelity(_) => commands::fidelity_cmd(&r)?,
        Command::Sweep(_) => commands::sweep(&r)?,
        Command::Mc(_) => commands::mc(&r)?,
        Command::Compare(_) => commands::compare(&r)?,
        Command::PresetList(_) => commands::preset_list(&r)?,
        Command::Validate(_) => validate_cmd(&r)?,
    };
    outputs.commit()
}

fn validate_cmd(r: &Resolved) -> Result<Outputs> {
    let checks = validate::run();
    let failed = checks.iter().filter(|c| !c.pass).count();
    for c in &checks {
        eprintln!("{} {} | {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    eprintln!("{} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        bail!("{failed} of {} validation checks failed", checks.len());
    }
    let body = match r.format() {
        Format::Json => {
            let v = serde_json::json!({ "passed": checks.len(), "failed": 0, "checks": checks });
            serde_json::to_string_pretty(&v)? + "\n"
        }
        Format::Csv => {
            let mut csv = Csv::new("validate", &["check", "pass", "detail"]);
            for c in &checks {
                csv.row(&[format!("\"{}\"", c.name), c.pass.to_string(), format!("\"{}\"", c.detail)]);
            }
            csv.finish()
        }
    };
    let mut out = Outputs::default();
    out.push(r.o.out.clone(), body);
    Ok(out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
