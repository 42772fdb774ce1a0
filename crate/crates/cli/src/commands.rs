//! Subcommand implementations. Each writes its files into an output directory
//! that no other process may use at the same time.

use std::ffi::OsString;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use axibilayer::driver::{run, run_observed, Termination};
use axibilayer::newton::MultiplierState;
use axibilayer::verification::{compare_variants, convergence_ladder, junction_residuals, LadderOptions};
use axibilayer::{Error, Mesh};
use log::info;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::output::{
    compare_energy_csv, compare_summary_csv, convergence_csv, read_snapshot, residuals_csv, revolve_obj,
    termination_label, timeseries_row, write_snapshot, TIMESERIES_HEADER,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
    #[error("output directory {0} is in use by another run")]
    Busy(PathBuf),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    /// Process exit status: 1 configuration, 2 degenerated run, 3 violated
    /// mesh assumption, 4 solver failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } | CliError::Busy(_) => 1,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

pub fn core_exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::Infeasible(_) | Error::NonFiniteInput(_) => 1,
        Error::Degenerated { .. } | Error::DegenerateMesh(_) => 2,
        Error::AssumptionViolated { .. } => 3,
        _ => 4,
    }
}

/// Exit status for a finished run.
pub fn termination_exit_code(t: &Termination) -> u8 {
    match t {
        Termination::EndTime | Termination::Stationary => 0,
        Termination::Degenerated { .. } => 2,
        Termination::Failed { error, .. } => core_exit_code(error),
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

/// `AXIBILAYER_OUT` wins over the configured directory.
pub fn resolve_output_dir(configured: &Path, env: Option<OsString>) -> PathBuf {
    match env {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => configured.to_path_buf(),
    }
}

/// Exclusive claim on an output directory, released on drop.
pub struct OutputDir {
    path: PathBuf,
    lock: PathBuf,
}

impl OutputDir {
    pub fn claim(path: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(path).map_err(io_err(format!("creating {}", path.display())))?;
        let lock = path.join(".axibilayer.lock");
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => Ok(Self {
                path: path.to_path_buf(),
                lock,
            }),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(CliError::Busy(path.to_path_buf())),
            Err(e) => Err(io_err(format!("locking {}", path.display()))(e)),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let p = self.path.join(name);
        File::create(&p)
            .map(BufWriter::new)
            .map_err(io_err(format!("creating {}", p.display())))
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let p = self.path.join(name);
        fs::write(&p, contents).map_err(io_err(format!("writing {}", p.display())))?;
        Ok(p)
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

/// Runs the flow, streaming `timeseries.csv` and snapshots so that partial
/// output survives a degenerated run.
pub fn run_command(cfg: &RunConfig, out: &OutputDir) -> Result<Termination, CliError> {
    let mesh = cfg.mesh()?;
    let flow = cfg.flow();
    fs::create_dir_all(out.path().join("snapshots")).map_err(io_err("creating snapshots/"))?;
    let mut ts = out.create("timeseries.csv")?;
    writeln!(ts, "{TIMESERIES_HEADER}").map_err(io_err("writing timeseries.csv"))?;
    let mut step = 0usize;
    let mut failure: Option<CliError> = None;
    let traj = run_observed(&flow, &cfg.params, &mesh, &mut |state, diag| {
        if failure.is_some() {
            return;
        }
        let res = (|| -> Result<(), CliError> {
            writeln!(ts, "{}", timeseries_row(diag)).map_err(io_err("writing timeseries.csv"))?;
            if step == 0 || (cfg.snapshot_every > 0 && step.is_multiple_of(cfg.snapshot_every)) {
                let mut w = out.create(&format!("snapshots/step_{step:08}.txt"))?;
                write_snapshot(&mut w, state).map_err(io_err("writing snapshot"))?;
                w.flush().map_err(io_err("writing snapshot"))?;
            }
            Ok(())
        })();
        if let Err(e) = res {
            failure = Some(e);
        }
        step += 1;
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    ts.flush().map_err(io_err("writing timeseries.csv"))?;
    let mut w = out.create("final.txt")?;
    write_snapshot(&mut w, &traj.final_state).map_err(io_err("writing final.txt"))?;
    w.flush().map_err(io_err("writing final.txt"))?;
    info!("{} steps, ended with {}", traj.steps, termination_label(&traj.termination));
    Ok(traj.termination)
}

/// Parses `16x8,32x16` into element-count pairs.
pub fn parse_rows(s: &str) -> Result<Vec<(usize, usize)>, ConfigError> {
    let bad = |reason: String| ConfigError::InvalidValue {
        key: "rows".into(),
        reason,
    };
    s.split(',')
        .map(|item| {
            let (a, b) = item
                .trim()
                .split_once('x')
                .ok_or_else(|| bad(format!("`{item}` is not of the form J1xJ2")))?;
            let a: usize = a.parse().map_err(|_| bad(format!("`{item}`: bad J1")))?;
            let b: usize = b.parse().map_err(|_| bad(format!("`{item}`: bad J2")))?;
            Ok((a, b))
        })
        .collect()
}

pub fn converge_command(
    rows: &[(usize, usize)],
    opts: &LadderOptions<f64>,
    out: &OutputDir,
) -> Result<PathBuf, CliError> {
    let table = convergence_ladder(rows, opts)?;
    out.write("convergence.csv", &convergence_csv(&table))
}

pub fn compare_command(cfg: &RunConfig, out: &OutputDir) -> Result<(f64, u8), CliError> {
    let mesh = cfg.mesh()?;
    let c = compare_variants(&mesh, &cfg.params, cfg.dt, cfg.t_end, cfg.mode)?;
    out.write("compare_summary.csv", &compare_summary_csv(&c))?;
    out.write("compare_energy.csv", &compare_energy_csv(&c, cfg.dt))?;
    let code = termination_exit_code(&c.with_beta.termination).max(termination_exit_code(&c.sideh.termination));
    Ok((c.displacement_ratio(), code))
}

/// Runs the flow and evaluates the junction conditions at the final state.
pub fn residuals_command(cfg: &RunConfig, out: &OutputDir) -> Result<Termination, CliError> {
    let traj = run(&cfg.flow(), &cfg.params, &cfg.mesh()?)?;
    let mut mult = MultiplierState::zeros(cfg.mode);
    if let Some(d) = traj.diagnostics.last() {
        mult.lambda_a = d.lambda_a;
        mult.lambda_v = d.lambda_v;
    }
    let diag = junction_residuals(&traj.final_state, &cfg.params, &mult)?;
    out.write("residuals.csv", &residuals_csv(traj.final_state.t, &diag))?;
    Ok(traj.termination)
}

/// Reads the generating curve of a snapshot file.
pub fn load_snapshot_mesh(path: &Path) -> Result<Mesh, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(format!("reading {}", path.display())))?;
    let snap = read_snapshot(&text).map_err(io_err(format!("parsing {}", path.display())))?;
    Ok(snap.mesh()?)
}

pub fn export3d_command(mesh: &Mesh, azimuthal: usize, path: &Path) -> Result<(), CliError> {
    if azimuthal < 3 {
        return Err(ConfigError::InvalidValue {
            key: "azimuthal".into(),
            reason: format!("at least 3 segments needed, got {azimuthal}"),
        }
        .into());
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;
    }
    fs::write(path, revolve_obj(mesh, azimuthal)).map_err(io_err(format!("writing {}", path.display())))
}
