//! Strict `key = value` configuration with layered overrides.
//!
//! Sources are merged with precedence command line > environment
//! (`FEL1D_*`) > config file > built-in defaults. Unknown keys, duplicate
//! keys, and malformed values are errors; every error names the offending
//! key. Angle-valued keys accept pi notation (`pi`, `2pi`, `pi/3`, `0.5pi`).

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use fel1d_core::nbody::IntegratorConfig;
use fel1d_core::types::{Sampling, WaterbagSpec};

use crate::CliError;

/// Every recognized configuration key, in emission order.
pub const KEYS: [&str; 13] = [
    "alpha",
    "delta_p",
    "i0_norm",
    "n_particles",
    "sampling",
    "seed",
    "k_max",
    "dt",
    "t_end",
    "stride",
    "drift_tolerance",
    "d_branch_threshold",
    "n_markers",
];

/// Keys that must be present in some layer; everything else has a default.
pub const REQUIRED_KEYS: [&str; 4] = ["alpha", "delta_p", "i0_norm", "n_particles"];

/// Environment variable prefix for per-key overrides (`FEL1D_ALPHA`, ...).
pub const ENV_PREFIX: &str = "FEL1D_";

/// Particle layout selector as spelled in config files.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplingKind {
    /// Deterministic quiet-start lattice (`sampling = quiet`). Default.
    Quiet,
    /// Seeded pseudo-random placement (`sampling = pseudo`).
    Pseudo,
}

impl SamplingKind {
    fn as_str(self) -> &'static str {
        match self {
            SamplingKind::Quiet => "quiet",
            SamplingKind::Pseudo => "pseudo",
        }
    }
}

/// Fully resolved configuration: one field per key.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Config {
    /// Half-width of the initial phase interval, radians.
    pub alpha: f64,
    /// Full momentum spread.
    pub delta_p: f64,
    /// Normalized seed intensity.
    pub i0_norm: f64,
    /// Number of particles.
    pub n_particles: usize,
    /// Initial layout.
    pub sampling: SamplingKind,
    /// Stream seed, used only by pseudo-random sampling.
    pub seed: u64,
    /// Highest recorded bunching harmonic.
    pub k_max: u32,
    /// Integrator timestep.
    pub dt: f64,
    /// Final time.
    pub t_end: f64,
    /// Observables are sampled every this many steps.
    pub stride: usize,
    /// Maximum allowed relative drift of the invariants.
    pub drift_tolerance: f64,
    /// Seed-intensity threshold between the two dispersion-prediction
    /// branches.
    pub d_branch_threshold: f64,
    /// Boundary markers per box edge for `contour`.
    pub n_markers: usize,
}

impl Config {
    /// Initial-condition parameters for the core crate.
    pub fn spec(&self) -> WaterbagSpec {
        WaterbagSpec {
            alpha: self.alpha,
            delta_p: self.delta_p,
            i0_norm: self.i0_norm,
            n_particles: self.n_particles,
            sampling: match self.sampling {
                SamplingKind::Quiet => Sampling::QuietLattice,
                SamplingKind::Pseudo => Sampling::PseudoRandom { seed: self.seed },
            },
        }
    }

    /// Integration parameters for the core crate.
    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.dt,
            t_end: self.t_end,
            observer_stride: self.stride,
            drift_tolerance: self.drift_tolerance,
            k_max: self.k_max,
            disable_coupling: false,
        }
    }

    /// Canonical `key = value` text; re-parsing it reproduces `self` exactly.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let value = match key {
                "alpha" => self.alpha.to_string(),
                "delta_p" => self.delta_p.to_string(),
                "i0_norm" => self.i0_norm.to_string(),
                "n_particles" => self.n_particles.to_string(),
                "sampling" => self.sampling.as_str().to_string(),
                "seed" => self.seed.to_string(),
                "k_max" => self.k_max.to_string(),
                "dt" => self.dt.to_string(),
                "t_end" => self.t_end.to_string(),
                "stride" => self.stride.to_string(),
                "drift_tolerance" => self.drift_tolerance.to_string(),
                "d_branch_threshold" => self.d_branch_threshold.to_string(),
                "n_markers" => self.n_markers.to_string(),
                _ => unreachable!(),
            };
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        }
        out
    }
}

/// One source of settings; `None` means the source does not mention the key.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overlay {
    /// See [`Config::alpha`].
    pub alpha: Option<f64>,
    /// See [`Config::delta_p`].
    pub delta_p: Option<f64>,
    /// See [`Config::i0_norm`].
    pub i0_norm: Option<f64>,
    /// See [`Config::n_particles`].
    pub n_particles: Option<usize>,
    /// See [`Config::sampling`].
    pub sampling: Option<SamplingKind>,
    /// See [`Config::seed`].
    pub seed: Option<u64>,
    /// See [`Config::k_max`].
    pub k_max: Option<u32>,
    /// See [`Config::dt`].
    pub dt: Option<f64>,
    /// See [`Config::t_end`].
    pub t_end: Option<f64>,
    /// See [`Config::stride`].
    pub stride: Option<usize>,
    /// See [`Config::drift_tolerance`].
    pub drift_tolerance: Option<f64>,
    /// See [`Config::d_branch_threshold`].
    pub d_branch_threshold: Option<f64>,
    /// See [`Config::n_markers`].
    pub n_markers: Option<usize>,
}

impl Overlay {
    /// Parses and stores one `key = value` assignment.
    ///
    /// `source` names the layer for error messages (`"config"`,
    /// `"environment override"`, ...). Setting a key twice in one overlay is
    /// an error.
    pub fn set(&mut self, key: &str, value: &str, source: &str) -> Result<(), CliError> {
        let dup = |taken: bool| {
            if taken {
                Err(CliError::Usage(format!("duplicate {source} key '{key}'")))
            } else {
                Ok(())
            }
        };
        match key {
            "alpha" => {
                dup(self.alpha.is_some())?;
                self.alpha = Some(parse_pi_float(value).map_err(|e| bad(source, key, &e))?);
            }
            "delta_p" => {
                dup(self.delta_p.is_some())?;
                self.delta_p = Some(parse_pi_float(value).map_err(|e| bad(source, key, &e))?);
            }
            "i0_norm" => {
                dup(self.i0_norm.is_some())?;
                self.i0_norm = Some(parse_pi_float(value).map_err(|e| bad(source, key, &e))?);
            }
            "n_particles" => {
                dup(self.n_particles.is_some())?;
                self.n_particles = Some(parse_int(value).map_err(|e| bad(source, key, &e))?);
            }
            "sampling" => {
                dup(self.sampling.is_some())?;
                self.sampling = Some(match value.trim() {
                    "quiet" => SamplingKind::Quiet,
                    "pseudo" => SamplingKind::Pseudo,
                    other => {
                        return Err(bad(
                            source,
                            key,
                            &format!("expected 'quiet' or 'pseudo', got '{other}'"),
                        ));
                    }
                });
            }
            "seed" => {
                dup(self.seed.is_some())?;
                self.seed = Some(parse_int(value).map_err(|e| bad(source, key, &e))?);
            }
            "k_max" => {
                dup(self.k_max.is_some())?;
                self.k_max = Some(parse_int(value).map_err(|e| bad(source, key, &e))?);
            }
            "dt" => {
                dup(self.dt.is_some())?;
                self.dt = Some(parse_pi_float(value).map_err(|e| bad(source, key, &e))?);
            }
            "t_end" => {
                dup(self.t_end.is_some())?;
                self.t_end = Some(parse_pi_float(value).map_err(|e| bad(source, key, &e))?);
            }
            "stride" => {
                dup(self.stride.is_some())?;
                self.stride = Some(parse_int(value).map_err(|e| bad(source, key, &e))?);
            }
            "drift_tolerance" => {
                dup(self.drift_tolerance.is_some())?;
                self.drift_tolerance =
                    Some(parse_pi_float(value).map_err(|e| bad(source, key, &e))?);
            }
            "d_branch_threshold" => {
                dup(self.d_branch_threshold.is_some())?;
                self.d_branch_threshold =
                    Some(parse_pi_float(value).map_err(|e| bad(source, key, &e))?);
            }
            "n_markers" => {
                dup(self.n_markers.is_some())?;
                self.n_markers = Some(parse_int(value).map_err(|e| bad(source, key, &e))?);
            }
            unknown => {
                return Err(CliError::Usage(format!("unknown {source} key '{unknown}'")));
            }
        }
        Ok(())
    }

    /// Writes every key present in `self` over `base`.
    fn apply_over(&self, base: &mut Overlay) {
        macro_rules! take {
            ($($f:ident),*) => { $( if self.$f.is_some() { base.$f = self.$f; } )* };
        }
        take!(
            alpha,
            delta_p,
            i0_norm,
            n_particles,
            sampling,
            seed,
            k_max,
            dt,
            t_end,
            stride,
            drift_tolerance,
            d_branch_threshold,
            n_markers
        );
    }
}

fn bad(source: &str, key: &str, msg: &str) -> CliError {
    CliError::Usage(format!("{source} key '{key}': {msg}"))
}

/// Parses a float, accepting pi notation: an optional coefficient, the
/// literal `pi`, and an optional `/divisor` (`pi`, `2pi`, `pi/3`, `-pi/2`,
/// `0.5pi`, `2pi/3`).
pub fn parse_pi_float(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let Some(idx) = t.find("pi") else {
        return t
            .parse::<f64>()
            .map_err(|_| format!("expected a number, got '{t}'"));
    };
    let coef = match t[..idx].trim() {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c
            .parse::<f64>()
            .map_err(|_| format!("expected a coefficient before 'pi', got '{c}'"))?,
    };
    let div = match t[idx + 2..].trim() {
        "" => 1.0,
        rest => {
            let d = rest
                .strip_prefix('/')
                .ok_or_else(|| format!("expected '/divisor' after 'pi', got '{rest}'"))?
                .trim()
                .parse::<f64>()
                .map_err(|_| format!("expected a divisor after 'pi/', got '{rest}'"))?;
            if d == 0.0 {
                return Err("division by zero".into());
            }
            d
        }
    };
    Ok(coef * PI / div)
}

fn parse_int<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    let t = s.trim();
    t.parse::<T>()
        .map_err(|_| format!("expected a non-negative integer, got '{t}'"))
}

/// Parses config-file text: `key = value` lines, `#` comments, blank lines.
pub fn parse_config_text(text: &str) -> Result<Overlay, CliError> {
    let mut overlay = Overlay::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        overlay.set(key.trim(), value.trim(), "config")?;
    }
    Ok(overlay)
}

/// Reads and parses a config file.
pub fn parse_config_file(path: &Path) -> Result<Overlay, CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Usage(format!("cannot read config file '{}': {e}", path.display()))
    })?;
    parse_config_text(&text)
}

/// Builds an overlay from `FEL1D_*` variables in `vars`; unrelated variables
/// are ignored, unknown `FEL1D_*` names are errors.
pub fn env_overlay<I>(vars: I) -> Result<Overlay, CliError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut overlay = Overlay::default();
    for (name, value) in vars {
        let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        let key = rest.to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown environment override '{name}'"
            )));
        }
        overlay.set(&key, &value, "environment override")?;
    }
    Ok(overlay)
}

/// Merges `file` < `env` < `cli`, fills defaults, checks required keys, and
/// validates the result against the core-crate bounds.
pub fn resolve(file: Option<Overlay>, env: Overlay, cli: Overlay) -> Result<Config, CliError> {
    let mut merged = file.unwrap_or_default();
    env.apply_over(&mut merged);
    cli.apply_over(&mut merged);

    for key in REQUIRED_KEYS {
        let present = match key {
            "alpha" => merged.alpha.is_some(),
            "delta_p" => merged.delta_p.is_some(),
            "i0_norm" => merged.i0_norm.is_some(),
            "n_particles" => merged.n_particles.is_some(),
            _ => unreachable!(),
        };
        if !present {
            return Err(CliError::Usage(format!(
                "missing required config key '{key}'"
            )));
        }
    }

    let config = Config {
        alpha: merged.alpha.unwrap(),
        delta_p: merged.delta_p.unwrap(),
        i0_norm: merged.i0_norm.unwrap(),
        n_particles: merged.n_particles.unwrap(),
        sampling: merged.sampling.unwrap_or(SamplingKind::Quiet),
        seed: merged.seed.unwrap_or(0),
        k_max: merged.k_max.unwrap_or(3),
        dt: merged.dt.unwrap_or(1e-3),
        t_end: merged.t_end.unwrap_or(2.0),
        stride: merged.stride.unwrap_or(10),
        drift_tolerance: merged.drift_tolerance.unwrap_or(1e-6),
        d_branch_threshold: merged
            .d_branch_threshold
            .unwrap_or(fel1d_core::perturb::D_BRANCH_THRESHOLD),
        n_markers: merged.n_markers.unwrap_or(16),
    };

    config
        .spec()
        .validate()
        .map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))?;
    config
        .integrator()
        .validate()
        .map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))?;
    if !(config.d_branch_threshold >= 0.0) || !config.d_branch_threshold.is_finite() {
        return Err(CliError::Usage(
            "invalid configuration: d_branch_threshold must be non-negative and finite".into(),
        ));
    }
    Ok(config)
}
