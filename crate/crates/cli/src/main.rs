//! `simulate`: runs Monte Carlo sweeps and writes CSV results, gnuplot
//! scripts and wall-time sidecars.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use isac_core::experiment::{sweep, write_plot_script, write_results, write_timing, Preset, Profile, ScenarioConfig};
use isac_core::Error;

#[derive(Debug, Parser)]
#[command(name = "simulate", version, about = "Uplink OFDM ISAC localization and CSI enhancement experiments")]
struct Args {
    /// TOML file overriding the profile defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Sweep preset to run; repeat or pass `all`. Without a preset the
    /// sweep axes of the configuration are used.
    #[arg(long)]
    preset: Vec<String>,

    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Trials per sweep point.
    #[arg(long)]
    trials: Option<usize>,

    #[arg(long)]
    seed: Option<u64>,

    /// `desk` (64 subcarriers) or `paper` (256 subcarriers).
    #[arg(long, default_value = "desk")]
    profile: String,

    /// Skip the gnuplot script next to each CSV.
    #[arg(long)]
    no_plot: bool,
}

fn presets(names: &[String]) -> Result<Vec<Preset>, Error> {
    let mut out = Vec::new();
    for name in names {
        if name == "all" {
            out.extend(Preset::ALL);
        } else {
            out.push(name.parse()?);
        }
    }
    out.dedup();
    Ok(out)
}

fn run_one(cfg: &ScenarioConfig, preset: Option<Preset>, out: &Path, plot: bool) -> Result<(), Error> {
    let stem = preset.map_or("results", Preset::name);
    log::info!("running {stem}: {} points x {} trials", cfg.points().len(), cfg.trials);
    let series = sweep(cfg)?;
    let csv = out.join(format!("{stem}.csv"));
    write_results(&series, &csv)?;
    write_timing(&series, &out.join(format!("{stem}.timing.csv")))?;
    if plot {
        write_plot_script(preset, &format!("{stem}.csv"), &out.join(format!("{stem}.gp")))?;
    }
    let flagged = series.rows.iter().filter(|r| r.sanity_flag).count();
    if flagged > 0 {
        log::warn!("{stem}: {flagged} point(s) raised the localization sanity flag");
    }
    println!("wrote {}", csv.display());
    Ok(())
}

fn run(args: Args) -> Result<(), Error> {
    let profile: Profile = args.profile.parse()?;
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::from_file(path, profile)?,
        None => ScenarioConfig::for_profile(profile),
    };
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let presets = presets(&args.preset)?;
    std::fs::create_dir_all(&args.out).map_err(|source| Error::Io { path: args.out.clone(), source })?;

    if presets.is_empty() {
        return run_one(&cfg, None, &args.out, !args.no_plot);
    }
    for p in presets {
        run_one(&cfg.clone().with_preset(p), Some(p), &args.out, !args.no_plot)?;
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Contract { .. } => 3,
        Error::Trial { source, .. } => exit_code(source),
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
