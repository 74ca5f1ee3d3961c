//! Thin CLI over the `syncsampler` library.
//!
//! Exit codes: 0 success, 2 usage error, 3 invalid configuration,
//! 4 runtime/numerical/remote failure, 5 I/O failure.

use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use syncsampler::config::{EmitFlags, RunConfig, Task};
use syncsampler::error::Result;

#[derive(Parser, Debug)]
#[command(
    name = "syncsampler",
    version,
    about = "Projection-synchronized diffusion sampling over analytic Gaussian-mixture denoisers",
    disable_help_subcommand = true
)]
struct Cli {
    /// Task to run: panorama, inpaint, ring, divergence, ablation.
    #[arg(long, value_name = "NAME")]
    task: Option<String>,

    /// Full run configuration as a JSON file (flags below override fields).
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<std::path::PathBuf>,

    /// Named preset: paper-default, fast, toy.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    /// Base RNG seed (experiment tasks use seed..seed+n_seeds).
    #[arg(long)]
    seed: Option<u64>,

    /// Output root; each run gets a fresh subdirectory.
    #[arg(long, value_name = "DIR")]
    out: Option<std::path::PathBuf>,

    /// Comma-separated artifact groups to write: images,csv,trace.
    #[arg(long, value_name = "LIST")]
    emit: Option<String>,

    /// Gaussian-mixture definition JSON (overrides the task default).
    #[arg(long, value_name = "PATH")]
    gmm: Option<std::path::PathBuf>,

    /// View layout: "preset:tiling" or a JSON view-list file.
    #[arg(long, value_name = "SPEC")]
    views: Option<String>,

    /// Remote denoiser endpoint (http://host:port/...).
    #[arg(long, value_name = "URL")]
    remote: Option<String>,

    /// Conditioning label restricting the mixture to matching components.
    #[arg(long, value_name = "LABEL")]
    condition: Option<String>,

    /// Number of seeds for experiment tasks.
    #[arg(long, value_name = "N")]
    n_seeds: Option<u64>,

    /// Print the fully-resolved configuration as canonical JSON and exit.
    #[arg(long)]
    print_config: bool,
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => RunConfig::preset(cli.preset.as_deref().unwrap_or("paper-default"))?,
    };
    if let Some(t) = &cli.task {
        cfg.task = Task::parse(t)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(e) = &cli.emit {
        cfg.emit = EmitFlags::parse(e)?;
    }
    if let Some(g) = &cli.gmm {
        cfg.gmm = Some(g.clone());
    }
    if let Some(v) = &cli.views {
        cfg.views = v.clone();
    }
    if let Some(r) = &cli.remote {
        cfg.remote = Some(r.clone());
    }
    if let Some(c) = &cli.condition {
        cfg.condition = Some(c.clone());
    }
    if let Some(n) = cli.n_seeds {
        cfg.n_seeds = Some(n);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn real_main(cli: Cli) -> Result<Option<String>> {
    let cfg = resolve_config(&cli)?;
    if cli.print_config {
        print!("{}", cfg.to_canonical_json());
        return Ok(None);
    }
    let summary = syncsampler::run::run(&cfg)?;
    Ok(Some(summary.line(cfg.task.name())))
}

fn main() -> ExitCode {
    if std::env::args_os().len() <= 1 {
        let mut cmd = Cli::command();
        eprintln!("{}", cmd.render_long_help());
        return ExitCode::from(2);
    }
    let cli = Cli::parse(); // unknown flags / bad values exit 2 via clap
    match real_main(cli) {
        Ok(Some(line)) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
