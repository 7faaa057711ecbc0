use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use regrad::fixtures::{fixture, FIXTURES};
use regrad::pipeline::run;
use regrad::report::{exit, Report};
use regrad::scenario::{parse_scenario_file, Scenario, ScenarioFile};
use regrad::verify::verify_report;

#[derive(Parser)]
#[command(name = "regrad", version, about = "Representation, associativity and regraduation checks for amplitude theories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or the name of a shipped fixture).
    Run {
        scenario: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the sampler seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override a tolerance, e.g. `--tol representation=1e-8`.
        #[arg(long = "tol", value_name = "NAME=VALUE")]
        tol: Vec<String>,
    },
    /// List the shipped scenarios.
    Fixtures {
        /// Also write them as JSON files into this directory.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Re-check every witness in a JSON report from scratch.
    VerifyWitness { report: PathBuf },
}

fn read_scenario(arg: &str) -> Result<ScenarioFile> {
    let path = Path::new(arg);
    let text = if path.exists() {
        std::fs::read_to_string(path).with_context(|| format!("cannot read {arg}"))?
    } else if let Some(f) = fixture(arg) {
        f.json.to_string()
    } else {
        bail!("no such file or shipped fixture: {arg}");
    };
    Ok(parse_scenario_file(&text)?)
}

fn parse_tol(spec: &str) -> Result<(String, f64)> {
    let (name, value) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("--tol expects NAME=VALUE, got `{spec}`"))?;
    let value: f64 = value
        .trim()
        .parse()
        .with_context(|| format!("--tol {name}: `{value}` is not a number"))?;
    Ok((name.trim().to_string(), value))
}

fn cmd_run(scenario: &str, format: Format, out: Option<PathBuf>, seed: Option<u64>, tol: &[String]) -> Result<i32> {
    let mut file = read_scenario(scenario)?;
    if let Some(seed) = seed {
        file.sampler.set_seed(seed);
    }
    for spec in tol {
        let (name, value) = parse_tol(spec)?;
        file.tolerances.insert(name, value);
    }
    let scenario = Scenario::from_file(&file)?;
    let report = run(&scenario);
    let rendered = match format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json(),
    };
    match out {
        Some(path) => {
            std::fs::write(&path, rendered).with_context(|| format!("cannot write {}", path.display()))?;
            println!("{}", report.headline);
        }
        None => print!("{rendered}"),
    }
    Ok(report.exit_code())
}

fn cmd_fixtures(export: Option<PathBuf>) -> Result<i32> {
    for f in &FIXTURES {
        println!("{:<32} {}", format!("{}.json", f.name), f.summary);
    }
    if let Some(dir) = export {
        std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for f in &FIXTURES {
            let path = dir.join(format!("{}.json", f.name));
            std::fs::write(&path, f.json).with_context(|| format!("cannot write {}", path.display()))?;
        }
    }
    Ok(exit::SUCCESS)
}

fn cmd_verify(path: &Path) -> Result<i32> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let report = Report::from_json(&text).with_context(|| format!("{} is not a report", path.display()))?;
    let checks = verify_report(&report);
    if checks.is_empty() {
        println!("no witnesses in report");
    }
    for c in &checks {
        let verdict = if c.valid { "VALID" } else { "INVALID" };
        println!("[{}] {} {verdict}: {}", c.task, c.what, c.detail);
    }
    Ok(if checks.iter().all(|c| c.valid) {
        exit::SUCCESS
    } else {
        exit::NEGATIVE
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            format,
            out,
            seed,
            tol,
        } => cmd_run(&scenario, format, out, seed, &tol),
        Command::Fixtures { export } => cmd_fixtures(export),
        Command::VerifyWitness { report } => cmd_verify(&report),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::ERROR as u8)
        }
    }
}
