use std::env;
use std::path::PathBuf;
use std::process::ExitCode;

use axibilayer::assembly::Variant;
use axibilayer::verification::LadderOptions;
use axibilayer_cli::commands::{
    compare_command, converge_command, export3d_command, load_snapshot_mesh, parse_rows, residuals_command,
    resolve_output_dir, run_command, termination_exit_code, OutputDir,
};
use axibilayer_cli::{parse_config, CliError, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "axibilayer", version, about = "Two-phase axisymmetric membrane flows")]
struct Cli {
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration file (key=value lines).
    #[arg(long)]
    config: PathBuf,
    /// Replace one configuration entry.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        Ok(parse_config(&self.config, &self.overrides)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a shape and write the time series and snapshots.
    Run(ConfigArgs),
    /// Sphere convergence study against the exact radius.
    Converge {
        /// Resolutions as J1xJ2 pairs.
        #[arg(long, default_value = "16x8,32x16,64x32")]
        rows: String,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        kbar: f64,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        /// Time step as a multiple of the squared initial mesh size.
        #[arg(long, default_value_t = 1e-3)]
        dt_factor: f64,
        /// Use a C0 junction instead of C1.
        #[arg(long)]
        c0: bool,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the schemes with and without the junction unknown side by side.
    Compare(ConfigArgs),
    /// Evaluate the junction conditions at the end of a run.
    Residuals(ConfigArgs),
    /// Write the surface of revolution as OBJ.
    Export3d {
        #[arg(long, conflicts_with = "snapshot", required_unless_present = "snapshot")]
        config: Option<PathBuf>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Snapshot file to revolve instead of the configured initial shape.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Number of azimuthal segments.
        #[arg(long, default_value_t = 64)]
        azimuthal: usize,
        /// Output file.
        #[arg(long, default_value = "surface.obj")]
        output: PathBuf,
    },
}

fn claim(cfg: &RunConfig) -> Result<OutputDir, CliError> {
    OutputDir::claim(&resolve_output_dir(&cfg.output_dir, env::var_os("AXIBILAYER_OUT")))
}

fn execute(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Run(a) => {
            let cfg = a.load()?;
            let out = claim(&cfg)?;
            let t = run_command(&cfg, &out)?;
            if !cli.quiet {
                println!("run finished: {t:?}; output in {}", out.path().display());
            }
            Ok(termination_exit_code(&t))
        }
        Command::Converge {
            rows,
            kbar,
            t_end,
            dt_factor,
            c0,
            out,
        } => {
            let rows = parse_rows(&rows)?;
            let opts = LadderOptions {
                kbar,
                t_end,
                dt_factor,
                c1: !c0,
                variant: Variant::WithBeta,
            };
            let out = OutputDir::claim(&resolve_output_dir(&out, env::var_os("AXIBILAYER_OUT")))?;
            let p = converge_command(&rows, &opts, &out)?;
            if !cli.quiet {
                println!("{}", std::fs::read_to_string(&p).unwrap_or_default());
            }
            Ok(0)
        }
        Command::Compare(a) => {
            let cfg = a.load()?;
            let out = claim(&cfg)?;
            let (ratio, code) = compare_command(&cfg, &out)?;
            if !cli.quiet {
                println!("junction displacement ratio (with beta / sideh): {ratio:.6e}");
            }
            Ok(code)
        }
        Command::Residuals(a) => {
            let cfg = a.load()?;
            let out = claim(&cfg)?;
            let t = residuals_command(&cfg, &out)?;
            if !cli.quiet {
                println!("residuals written to {}", out.path().join("residuals.csv").display());
            }
            Ok(termination_exit_code(&t))
        }
        Command::Export3d {
            config,
            overrides,
            snapshot,
            azimuthal,
            output,
        } => {
            let mesh = match (snapshot, config) {
                (Some(s), _) => load_snapshot_mesh(&s)?,
                (None, Some(c)) => parse_config(&c, &overrides)?.mesh()?,
                (None, None) => unreachable!("clap requires one source"),
            };
            export3d_command(&mesh, azimuthal, &output)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
