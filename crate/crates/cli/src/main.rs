mod config;
mod error;
mod gain_grid;
mod presets;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::Experiment;
use crate::error::{CliError, Result};

#[derive(Parser)]
#[command(name = "leocov", version, about = "Downlink coverage of LEO satellite networks")]
struct Cli {
    /// Directory with the shipped presets.
    #[arg(long, global = true, env = "LEOCOV_PRESETS")]
    presets: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file, or a preset by name.
    Run {
        config: String,
        /// Overrides the seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the Monte Carlo trial count of the config.
        #[arg(long)]
        trials: Option<usize>,
        /// Output CSV; the metadata sidecar goes next to it. Defaults to
        /// `<config name>.csv` in the working directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the shipped presets.
    ListPresets {
        /// Also validate every preset.
        #[arg(long)]
        check: bool,
    },
    /// Write the normalised beam gain on the ground around the
    /// sub-satellite point for one or more altitudes.
    GainGrid {
        #[arg(long, value_delimiter = ',', default_value = "500,1000")]
        altitudes: Vec<f64>,
        #[arg(long, default_value_t = 20.0)]
        g_max_db: f64,
        #[arg(long, default_value_t = 10.0)]
        theta_3db_deg: f64,
        /// Half width of the square grid along the ground.
        #[arg(long, default_value_t = 2500.0)]
        extent_km: f64,
        #[arg(long, default_value_t = 50.0)]
        step_km: f64,
        #[arg(long, default_value = "gain_grid.csv")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    let preset_dir = cli.presets.unwrap_or_else(presets::default_dir);
    match cli.command {
        Command::Run { config, seed, trials, out, threads } => {
            if let Some(n) = threads {
                if n == 0 {
                    return Err(CliError::Usage("--threads must be positive".into()));
                }
                leocov::parallel::configure_threads(n).map_err(CliError::Usage)?;
            }
            let path = presets::resolve(&config, &preset_dir)?;
            let mut exp = Experiment::load(&path)?;
            if let Some(s) = seed {
                exp.seed = s;
            }
            if let Some(t) = trials {
                if t == 0 {
                    return Err(CliError::Usage("--trials must be positive".into()));
                }
                exp.trials = t;
            }
            let out = out.unwrap_or_else(|| {
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or("results".into());
                PathBuf::from(format!("{stem}.csv"))
            });
            let start = Instant::now();
            let output = run::execute(&exp)?;
            run::write_csv(&out, &output.rows)?;
            let meta = run::sidecar_path(&out);
            run::write_sidecar(&meta, &exp, &output)?;
            eprintln!(
                "wrote {} rows to {} ({}) in {:.1} s",
                output.rows.len(),
                out.display(),
                meta.display(),
                start.elapsed().as_secs_f64()
            );
        }
        Command::ListPresets { check } => {
            let mut stdout = std::io::stdout().lock();
            for (name, path) in presets::list(&preset_dir)? {
                if check {
                    Experiment::load(&path)?;
                }
                // a closed pipe (`| head`) just ends the listing
                if writeln!(stdout, "{name:<28} {}", presets::description(&path)).is_err() {
                    break;
                }
            }
        }
        Command::GainGrid { altitudes, g_max_db, theta_3db_deg, extent_km, step_km, out } => {
            gain_grid::write(&out, &altitudes, g_max_db, theta_3db_deg, extent_km, step_km)?;
            eprintln!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
