use std::path::PathBuf;
use std::process::ExitCode;

use affordance_core::runner::{run, verify_replay, write_outputs, ExperimentConfig};
use affordance_core::simworld::{Action, Scenario};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "affordance",
    version,
    about = "Interactive affordance learning in a simulated tabletop world"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its artifacts.
    Run {
        /// Scenario file; the bundled standard scenario when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Policy-driven interactions per affordance.
        #[arg(long, default_value_t = 200)]
        interactions: usize,
        /// Comma-separated affordances, in order.
        #[arg(long, default_value = "push,button,lift", value_delimiter = ',')]
        schedule: Vec<Action>,
        #[arg(long, default_value_t = 10)]
        checkpoint_every: usize,
        /// Display threshold of the merged affordance map.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Scenario override as `table.key=value` (TOML value syntax), repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Re-train from a run's history log and check every checkpoint.
    Replay {
        /// Output directory of an earlier run.
        dir: PathBuf,
    },
    /// Print the bundled standard scenario.
    ExampleScenario,
}

fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec.split_once('=').context("override must look like key=value")?;
    let value: toml::Value = format!("v = {raw}")
        .parse::<toml::Table>()
        .map(|mut t| t.remove("v").expect("just inserted"))
        .or_else(|_| Ok::<_, anyhow::Error>(toml::Value::String(raw.to_string())))?;
    let mut parts: Vec<&str> = key.trim().split('.').collect();
    let last = parts.pop().context("empty override key")?;
    let mut table = doc;
    for p in parts {
        table = table
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .with_context(|| format!("{p} is not a table"))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn load_scenario(path: Option<&PathBuf>, overrides: &[String]) -> Result<Scenario> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => Scenario::standard_toml().to_string(),
    };
    let mut doc: toml::Table = text.parse().context("scenario is not valid TOML")?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    Ok(Scenario::from_toml(&toml::to_string(&doc)?)?)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            scenario,
            out,
            seed,
            interactions,
            schedule,
            checkpoint_every,
            threshold,
            overrides,
        } => {
            let scenario = load_scenario(scenario.as_ref(), &overrides)?;
            let mut config = ExperimentConfig::new(scenario);
            if let Some(s) = seed {
                config.seed = s;
            }
            config.interactions = interactions;
            config.schedule = schedule;
            config.checkpoint_every = checkpoint_every;
            config.threshold = threshold;
            let output = run(&config)?;
            write_outputs(&out, &config, &output)?;
            for r in &output.runs {
                if let Some(row) = r.final_row() {
                    println!(
                        "{}: {} interactions, precision {:.3} recall {:.3} accuracy {:.3}",
                        r.action, r.state.interaction_count, row.scores.precision, row.scores.recall, row.scores.accuracy
                    );
                }
            }
            println!("wrote {}", out.display());
        }
        Command::Replay { dir } => {
            let n = verify_replay(&dir)?;
            if n == 0 {
                bail!("no checkpoints found in {}", dir.join("checkpoints").display());
            }
            println!("{n} checkpoints reproduced");
        }
        Command::ExampleScenario => print!("{}", Scenario::standard_toml()),
    }
    Ok(())
}
