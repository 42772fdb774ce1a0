//! Plain-text `key=value` run configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use axibilayer::assembly::{ConservationMode, Variant};
use axibilayer::driver::FlowConfig;
use axibilayer::newton::NewtonOptions;
use axibilayer::shapes::{capped_cylinder, perturbed_sphere, quarter_pair, split_sphere, spheroid};
use axibilayer::{Mesh, Params};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config file {0} not found or unreadable")]
    MissingFile(PathBuf),
    #[error("unknown key `{name}` on line {line}")]
    UnknownKey { name: String, line: usize },
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("line {line} is not of the form key=value")]
    Malformed { line: usize },
}

const KEYS: &[&str] = &[
    "junction",
    "mode",
    "variant",
    "alpha1",
    "alpha2",
    "alphaG1",
    "alphaG2",
    "kbar1",
    "kbar2",
    "varsigma",
    "J1",
    "J2",
    "dt",
    "t_end",
    "shape",
    "radius",
    "area_ratio",
    "v_r",
    "height",
    "output_dir",
    "snapshot_every",
    "newton_tol",
    "newton_max_iters",
    "stationarity_tol",
    "pinch_fraction",
    "max_steps",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Sphere,
    PerturbedSphere,
    Spheroid,
    QuarterPair,
    Cylinder,
}

/// A validated run configuration.
///
/// Defaults: `junction=c1`, `mode=free`, `variant=with_beta`, `alpha1=alpha2=1`,
/// `alphaG1=alphaG2=0`, `kbar1=kbar2=0`, `varsigma=0`, `J1=J2=32`,
/// `shape=sphere`, `radius=1`, `area_ratio=0.5`, `v_r=0.9`, `height=2`,
/// `output_dir=out`, `snapshot_every=0`, `newton_tol=1e-10`,
/// `newton_max_iters=20`, `stationarity_tol=1e-6`, `pinch_fraction=1e-4`.
/// `dt` and `t_end` are required.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: Params,
    pub mode: ConservationMode,
    pub variant: Variant,
    pub j1: usize,
    pub j2: usize,
    pub dt: f64,
    pub t_end: f64,
    pub shape: Shape,
    pub radius: f64,
    pub area_ratio: f64,
    pub v_r: f64,
    pub height: f64,
    pub output_dir: PathBuf,
    pub snapshot_every: usize,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub stationarity_tol: f64,
    pub pinch_fraction: f64,
    pub max_steps: Option<usize>,
}

type Entries = BTreeMap<String, (String, usize)>;

fn parse_lines(text: &str) -> Result<Entries, ConfigError> {
    let mut out = Entries::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Malformed { line: i + 1 })?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(ConfigError::UnknownKey {
                name: k.to_string(),
                line: i + 1,
            });
        }
        out.insert(k.to_string(), (v.trim().to_string(), i + 1));
    }
    Ok(out)
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

struct Reader<'a>(&'a Entries);

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|(v, _)| v.as_str())
    }

    fn float(&self, key: &str, default: Option<f64>) -> Result<f64, ConfigError> {
        match self.raw(key) {
            None => default.ok_or_else(|| invalid(key, "required")),
            Some(v) => {
                let x: f64 = v.parse().map_err(|_| invalid(key, format!("`{v}` is not a number")))?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(invalid(key, "must be finite"))
                }
            }
        }
    }

    fn positive(&self, key: &str, default: Option<f64>) -> Result<f64, ConfigError> {
        let x = self.float(key, default)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(invalid(key, format!("must be positive, got {x}")))
        }
    }

    fn count(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| invalid(key, format!("`{v}` is not a non-negative integer"))),
        }
    }

    fn choice<T: Copy>(&self, key: &str, default: T, options: &[(&str, T)]) -> Result<T, ConfigError> {
        let Some(v) = self.raw(key) else {
            return Ok(default);
        };
        options.iter().find(|(name, _)| *name == v).map(|&(_, x)| x).ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            invalid(key, format!("`{v}` is not one of {}", names.join("|")))
        })
    }
}

impl RunConfig {
    /// Parses configuration text, applying `overrides` (each `key=value`) on top.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut entries = parse_lines(text)?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| invalid(o, "override must be key=value"))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey {
                    name: k.to_string(),
                    line: 0,
                });
            }
            entries.insert(k.to_string(), (v.trim().to_string(), 0));
        }
        Self::from_entries(&entries)
    }

    fn from_entries(e: &Entries) -> Result<Self, ConfigError> {
        let r = Reader(e);
        let c1 = r.choice("junction", true, &[("c1", true), ("c0", false)])?;
        let params = Params {
            alpha: [r.positive("alpha1", Some(1.0))?, r.positive("alpha2", Some(1.0))?],
            alpha_g: [r.float("alphaG1", Some(0.0))?, r.float("alphaG2", Some(0.0))?],
            kbar: [r.float("kbar1", Some(0.0))?, r.float("kbar2", Some(0.0))?],
            varsigma: r.float("varsigma", Some(0.0))?,
            c1,
        };
        params.validate().map_err(|err| invalid("params", err.to_string()))?;
        let mode = r.choice(
            "mode",
            ConservationMode::Free,
            &[
                ("free", ConservationMode::Free),
                ("area", ConservationMode::Area),
                ("volume", ConservationMode::Volume),
                ("area_volume", ConservationMode::AreaVolume),
            ],
        )?;
        let variant = r.choice(
            "variant",
            Variant::WithBeta,
            &[("with_beta", Variant::WithBeta), ("sideh", Variant::Sideh)],
        )?;
        if variant == Variant::Sideh && !c1 {
            return Err(invalid("variant", "sideh needs junction=c1"));
        }
        let shape = r.choice(
            "shape",
            Shape::Sphere,
            &[
                ("sphere", Shape::Sphere),
                ("perturbed_sphere", Shape::PerturbedSphere),
                ("spheroid", Shape::Spheroid),
                ("quarter_pair", Shape::QuarterPair),
                ("cylinder", Shape::Cylinder),
            ],
        )?;
        let j1 = r.count("J1", 32)?;
        let j2 = r.count("J2", 32)?;
        for (k, j) in [("J1", j1), ("J2", j2)] {
            if j < 3 {
                return Err(invalid(k, format!("at least 3 elements needed, got {j}")));
            }
        }
        let area_ratio = r.positive("area_ratio", Some(0.5))?;
        if area_ratio >= 1.0 {
            return Err(invalid("area_ratio", "must lie in (0, 1)"));
        }
        let v_r = r.positive("v_r", Some(0.9))?;
        if v_r >= 1.0 {
            return Err(invalid("v_r", "must lie in (0, 1)"));
        }
        let max_steps = match r.raw("max_steps") {
            None => None,
            Some(_) => Some(r.count("max_steps", 0)?),
        };
        Ok(Self {
            params,
            mode,
            variant,
            j1,
            j2,
            dt: r.positive("dt", None)?,
            t_end: r.positive("t_end", None)?,
            shape,
            radius: r.positive("radius", Some(1.0))?,
            area_ratio,
            v_r,
            height: r.positive("height", Some(2.0))?,
            output_dir: PathBuf::from(r.raw("output_dir").unwrap_or("out")),
            snapshot_every: r.count("snapshot_every", 0)?,
            newton_tol: r.positive("newton_tol", Some(1e-10))?,
            newton_max_iters: r.count("newton_max_iters", 20)?,
            stationarity_tol: r.float("stationarity_tol", Some(1e-6))?,
            pinch_fraction: r.positive("pinch_fraction", Some(1e-4))?,
            max_steps,
        })
    }

    /// Time-stepping options for the driver.
    pub fn flow(&self) -> FlowConfig<f64> {
        let mut f = FlowConfig::new(self.dt, self.t_end);
        f.mode = self.mode;
        f.variant = self.variant;
        f.stationarity_tol = self.stationarity_tol;
        f.max_steps = self.max_steps;
        f.pinch_fraction = self.pinch_fraction;
        f.newton = NewtonOptions {
            tol: self.newton_tol,
            max_iters: self.newton_max_iters,
        };
        f
    }

    /// The initial mesh.
    pub fn mesh(&self) -> axibilayer::Result<Mesh> {
        match self.shape {
            Shape::Sphere => split_sphere(self.j1, self.j2, self.radius, self.area_ratio),
            Shape::PerturbedSphere => perturbed_sphere(self.j1, self.j2),
            Shape::Spheroid => spheroid(self.j1, self.j2, self.v_r, self.area_ratio),
            Shape::QuarterPair => quarter_pair(self.j1, self.j2, self.radius),
            Shape::Cylinder => capped_cylinder(self.j1, self.j2, self.radius, self.height),
        }
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|_| ConfigError::MissingFile(path.to_path_buf()))?;
    RunConfig::parse(&text, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "junction=c1\nJ1=64\nJ2=64\ndt=1e-4\nt_end=1\nshape=sphere\n";

    #[test]
    fn minimal_file_gets_defaults() {
        let c = RunConfig::parse(MINIMAL, &[]).unwrap();
        assert_eq!((c.j1, c.j2), (64, 64));
        assert_eq!(c.newton_tol, 1e-10);
        assert_eq!(c.stationarity_tol, 1e-6);
        assert_eq!(c.mode, ConservationMode::Free);
        assert_eq!(c.params, Params::default());
        assert_eq!(c.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn rejects_bad_values() {
        let bad = |extra: &str| RunConfig::parse(&format!("{MINIMAL}{extra}\n"), &[]).unwrap_err();
        assert!(matches!(bad("alpha1=0"), ConfigError::InvalidValue { key, .. } if key == "alpha1"));
        assert!(matches!(bad("junction=c2"), ConfigError::InvalidValue { key, .. } if key == "junction"));
        assert_eq!(
            bad("colour=red"),
            ConfigError::UnknownKey {
                name: "colour".into(),
                line: 7
            }
        );
        assert!(matches!(bad("varsigma=-1"), ConfigError::InvalidValue { .. }));
        assert!(matches!(bad("J2=2"), ConfigError::InvalidValue { .. }));
        assert!(matches!(bad("just words"), ConfigError::Malformed { line: 7 }));
        assert!(matches!(
            RunConfig::parse("t_end=1", &[]).unwrap_err(),
            ConfigError::InvalidValue { key, .. } if key == "dt"
        ));
    }

    #[test]
    fn overrides_win_and_comments_are_skipped() {
        let text = format!("# comment\n{MINIMAL}kbar1 = -1 # inline\n");
        let c = RunConfig::parse(&text, &["kbar1=-2".into(), "mode=area_volume".into()]).unwrap();
        assert_eq!(c.params.kbar[0], -2.0);
        assert_eq!(c.mode, ConservationMode::AreaVolume);
        assert!(matches!(
            RunConfig::parse(MINIMAL, &["nope=1".into()]),
            Err(ConfigError::UnknownKey { .. })
        ));
    }
}
