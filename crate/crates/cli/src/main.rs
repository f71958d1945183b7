use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use byzalloc::config::parse_config;
use byzalloc::experiment::{self, RunOptions, CONFIG_FILE};
use clap::{Parser, Subcommand};

/// Byzantine-resilient decentralized online resource allocation simulator.
#[derive(Parser)]
#[command(name = "byzalloc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config and write trace.csv, metrics.csv, meta.json.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the config's output_dir, else out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Abort on the first invariant monitor failure.
        #[arg(long)]
        strict_monitors: bool,
    },
    /// Run every *.toml in a directory, writing to <out>/<config stem>.
    Sweep {
        config_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        strict_monitors: bool,
    },
    /// Check a config and report every problem found.
    Validate { config: PathBuf },
    /// Recompute metrics from a trace.csv.
    Metrics {
        trace: PathBuf,
        /// Config the trace was produced with (default: config.toml next to the trace).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            strict_monitors,
        } => {
            let options = RunOptions {
                seed,
                out,
                strict_monitors,
            };
            let (dir, outcome) = experiment::run_experiment(&config, &options)
                .with_context(|| format!("running {}", config.display()))?;
            let meta = &outcome.meta;
            println!("wrote {}", dir.display());
            if let Some(f) = &meta.final_metrics {
                println!(
                    "t={} cumulative_regret={} cumulative_violation={}",
                    f.t, f.cumulative_regret, f.cumulative_violation
                );
            }
            if !meta.monitor_violations.is_empty() {
                eprintln!(
                    "warning: {} monitor violations recorded in meta.json",
                    meta.monitor_violations.len()
                );
            }
            Ok(())
        }
        Command::Sweep {
            config_dir,
            seed,
            out,
            strict_monitors,
        } => {
            let options = RunOptions {
                seed,
                out: None,
                strict_monitors,
            };
            let results = experiment::run_sweep(&config_dir, &out, &options)?;
            if results.is_empty() {
                bail!("no *.toml configs in {}", config_dir.display());
            }
            let mut failed = 0;
            for (path, result) in &results {
                match result {
                    Ok(dir) => println!("ok    {} -> {}", path.display(), dir.display()),
                    Err(e) => {
                        failed += 1;
                        println!("FAIL  {}: {e}", path.display());
                    }
                }
            }
            if failed > 0 {
                bail!("{failed} of {} runs failed", results.len());
            }
            Ok(())
        }
        Command::Validate { config } => {
            let (_, exp) = parse_config(&config)?;
            println!(
                "{}: valid ({} agents, {} byzantine, T={}, algorithm {})",
                config.display(),
                exp.network.agent_count(),
                exp.network.byzantine.len(),
                exp.run.horizon,
                exp.run.algorithm.label()
            );
            Ok(())
        }
        Command::Metrics { trace, config, out } => metrics(&trace, config.as_deref(), out.as_deref()),
    }
}

fn metrics(trace_path: &Path, config: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let trace = experiment::read_trace(trace_path).with_context(|| format!("reading {}", trace_path.display()))?;
    let sibling = trace_path.parent().unwrap_or(Path::new(".")).join(CONFIG_FILE);
    let config_path = config
        .map(Path::to_path_buf)
        .or_else(|| sibling.exists().then_some(sibling));
    let exp = match &config_path {
        Some(p) => Some(parse_config(p).with_context(|| format!("loading {}", p.display()))?.1),
        None => {
            eprintln!("note: no config found; recomputing cumulative_violation only");
            None
        }
    };
    let m = experiment::metrics_from_trace(&trace, exp.as_ref())?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        if m.cumulative_regret.is_some() {
            w.write_record(experiment::METRICS_HEADER)?;
        } else {
            w.write_record(["t", "cumulative_violation"])?;
        }
        for k in 0..m.t.len() {
            let mut rec = vec![m.t[k].to_string()];
            if let Some(r) = &m.cumulative_regret {
                rec.push(r[k].to_string());
            }
            rec.push(m.cumulative_violation[k].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    match out {
        Some(path) => std::fs::write(path, &buf).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}
