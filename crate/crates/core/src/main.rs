use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use xxz_squeeze::config::{preset, RunConfig, Scenario, PRESET_NAMES};
use xxz_squeeze::{runner, Error, Result};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Params,
    Oracle,
    Dtwa,
    Analyze,
    ImagingDemo,
}

impl From<Command> for Scenario {
    fn from(c: Command) -> Self {
        match c {
            Command::Params => Scenario::Params,
            Command::Oracle => Scenario::Oracle,
            Command::Dtwa => Scenario::Dtwa,
            Command::Analyze => Scenario::Analyze,
            Command::ImagingDemo => Scenario::ImagingDemo,
        }
    }
}

/// Spin-squeezing simulator for XXZ magnets with mobile holes.
///
/// Settings are layered: preset, then config file, then XXZSQ_* environment
/// variables, then command line flags.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Scenario to run; defaults to the preset's or config's scenario.
    command: Option<Command>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (does not change results).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trajectory count M.
    #[arg(long)]
    trajectories: Option<usize>,
    /// Raw per-trajectory dump to analyze.
    #[arg(long)]
    input: Option<PathBuf>,
    /// θ grid size for the variance scan (0 = closed form).
    #[arg(long)]
    theta_grid: Option<usize>,
    /// Report jackknife errors.
    #[arg(long)]
    jackknife: Option<bool>,
    /// Phase noise to inject: none, quasi-static or fast.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    noise_rms: Option<f64>,
    /// Whether the echo pulse acts on injected noise.
    #[arg(long)]
    echo: Option<bool>,
    /// Additional `key=value` overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
    /// List preset names and exit.
    #[arg(long)]
    list_presets: bool,
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.preset {
        Some(name) => preset(name)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    cfg.apply_env(|k| std::env::var(k).ok())?;
    if let Some(c) = cli.command {
        cfg.scenario = c.into();
    }
    let mut flags: Vec<(&str, String)> = Vec::new();
    if let Some(v) = cli.seed {
        flags.push(("seed", v.to_string()));
    }
    if let Some(v) = cli.threads {
        flags.push(("threads", v.to_string()));
    }
    if let Some(v) = &cli.out {
        flags.push(("output.dir", v.display().to_string()));
    }
    if let Some(v) = cli.trajectories {
        flags.push(("ensemble.trajectories", v.to_string()));
    }
    if let Some(v) = &cli.input {
        flags.push(("analyze.input", v.display().to_string()));
    }
    if let Some(v) = cli.theta_grid {
        flags.push(("analyze.theta_grid", v.to_string()));
    }
    if let Some(v) = cli.jackknife {
        flags.push(("analyze.jackknife", v.to_string()));
    }
    if let Some(v) = &cli.noise {
        flags.push(("analyze.noise", v.clone()));
    }
    if let Some(v) = cli.noise_rms {
        flags.push(("analyze.noise_rms", v.to_string()));
    }
    if let Some(v) = cli.echo {
        flags.push(("analyze.echo", v.to_string()));
    }
    for (k, v) in flags {
        cfg.set(k, &v)?;
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v)?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_presets {
        for p in PRESET_NAMES {
            println!("{p}");
        }
        return ExitCode::SUCCESS;
    }
    let result = build_config(&cli).and_then(|cfg| {
        if cli.print_config {
            print!("{}", cfg.serialize());
            return Ok(());
        }
        for f in runner::run(&cfg)? {
            println!("{}", f.display());
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
