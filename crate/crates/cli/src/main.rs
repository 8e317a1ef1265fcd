use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use netmeter::scenario::report::{self, Format, Manifest};
use netmeter::scenario::synth::{write_bundle, SynthOptions};
use netmeter::scenario::{payback_table, run_long_runs, run_short_run_sweep, RunStatus, Study};

#[derive(Parser)]
#[command(name = "netmeter", version, about = "Net-metering tariff, rate-setting and DER adoption simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Output table format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Restricts the run to these policies (repeatable).
    #[arg(long = "policy", global = true)]
    policies: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    JsonLines,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::JsonLines => Format::JsonLines,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Long-run rate-setting and adoption study.
    Run { config: PathBuf },
    /// Short-run sweep over adoption levels.
    Sweep {
        config: PathBuf,
        /// Adoption grid as lo:hi:step; defaults to the config grid.
        #[arg(long)]
        gamma: Option<String>,
    },
    /// Year-0 payback time and market potential per policy.
    Payback { config: PathBuf },
    /// Checks a config and its traces without running anything.
    Validate { config: PathBuf },
    /// Writes the synthetic trace bundle.
    Synth {
        /// Target directory for the traces.
        dir: PathBuf,
        #[arg(long, default_value_t = 90)]
        days: u32,
    },
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("invalid grid {text:?}"))?;
    let [lo, hi, step] = parts[..] else {
        bail!("grid must be lo:hi:step, got {text:?}");
    };
    if !(step > 0.0 && hi >= lo) {
        bail!("grid {text:?} needs step > 0 and hi >= lo");
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| ((lo + k as f64 * step) * 1e9).round() / 1e9).collect())
}

fn policy_names(cli: &[String], config: &[String]) -> Vec<String> {
    if cli.is_empty() {
        config.to_vec()
    } else {
        cli.to_vec()
    }
}

fn finish(study: &Study, command: &str, config: &Path, out: &Path, outputs: Vec<PathBuf>) -> Result<()> {
    let t = &study.config.traces;
    let manifest = Manifest::new(command, study.seed, config, &[&t.load, &t.solar, &t.prices], &outputs)?;
    manifest.write(out)?;
    for p in &outputs {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let format: Format = cli.format.into();
    match &cli.command {
        Command::Synth { dir, days } => {
            let opts = SynthOptions {
                days: *days,
                seed: cli.seed.unwrap_or(SynthOptions::default().seed),
                ..SynthOptions::default()
            };
            for p in write_bundle(dir, &opts)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Validate { config } => {
            let study = Study::load(config, cli.seed).with_context(|| format!("loading {}", config.display()))?;
            println!(
                "ok: {} devices, {} net-billing periods, {} classes, J = {}, {} policies",
                study.series.devices.len(),
                study.series.len(),
                study.set.classes().len(),
                study.set.periods_per_year(),
                study.config.policy_rules().len()
            );
        }
        Command::Run { config } => {
            let study = Study::load(config, cli.seed).with_context(|| format!("loading {}", config.display()))?;
            let rules = study.config.select_policies(&policy_names(&cli.policies, &study.config.long_run.policies))?;
            let results = run_long_runs(&study, &rules)?;
            std::fs::create_dir_all(&cli.out)?;
            let outputs = vec![
                report::long_run_table(&results).write(&cli.out, "long_run", format)?,
                report::cost_shift_table(&results).write(&cli.out, "cost_shift", format)?,
                report::adoption_table(&results).write(&cli.out, "adoption", format)?,
            ];
            for r in &results {
                match r.status {
                    RunStatus::Completed => println!("{}: completed {} years", r.policy, r.records.len()),
                    RunStatus::DeathSpiral { year } => println!("{}: death spiral in year {year}", r.policy),
                }
            }
            finish(&study, "run", config, &cli.out, outputs)?;
        }
        Command::Sweep { config, gamma } => {
            let study = Study::load(config, cli.seed).with_context(|| format!("loading {}", config.display()))?;
            let gammas = match gamma {
                Some(text) => parse_grid(text)?,
                None => study.config.sweep.gammas.clone(),
            };
            let rules = study.config.select_policies(&policy_names(&cli.policies, &study.config.sweep.policies))?;
            let sweep = run_short_run_sweep(&study, &gammas, &rules)?;
            std::fs::create_dir_all(&cli.out)?;
            let outputs = vec![
                report::sweep_table(&sweep).write(&cli.out, "sweep", format)?,
                report::market_potential_table(&sweep).write(&cli.out, "market_potential", format)?,
            ];
            finish(&study, "sweep", config, &cli.out, outputs)?;
        }
        Command::Payback { config } => {
            let study = Study::load(config, cli.seed).with_context(|| format!("loading {}", config.display()))?;
            let rules = study.config.select_policies(&cli.policies)?;
            let rows = payback_table(&study, &rules)?;
            std::fs::create_dir_all(&cli.out)?;
            let table = report::payback_report(&rows);
            print!("{}", table.render(Format::Csv)?);
            let outputs = vec![table.write(&cli.out, "payback", format)?];
            finish(&study, "payback", config, &cli.out, outputs)?;
        }
    }
    Ok(())
}
