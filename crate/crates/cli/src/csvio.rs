//! CSV emission and parsing.
//!
//! Every emitted CSV starts with a commented metadata block (`# key = value`)
//! echoing the full effective configuration, so any output file is enough to
//! reconstruct the run that produced it. Floats are written with the shortest
//! representation that parses back to the identical bits.

use fel1d_core::nbody::{RunMetadata, SimulationSeries};
use fel1d_core::perturb::{validity, PredictionSample, PredictionSeries};
use fel1d_core::types::ObservableSample;

use crate::config::{parse_config_text, resolve, Config, Overlay};
use crate::CliError;

/// Column names of the simulate/predict schema for a given `k_max`.
pub fn series_header(k_max: u32) -> Vec<String> {
    let mut h = vec!["t".into(), "ax".into(), "ay".into(), "intensity".into()];
    for k in 1..=k_max {
        h.push(format!("b{k}_mag"));
        h.push(format!("b{k}_phase"));
    }
    h.extend(["dispersion".into(), "energy".into(), "momentum".into()]);
    h
}

/// Flattens one simulated sample into the schema of [`series_header`].
pub fn observable_row(s: &ObservableSample) -> Vec<f64> {
    let mut row = vec![s.t, s.a_x, s.a_y, s.intensity];
    for &(mag, phase) in &s.b {
        row.push(mag);
        row.push(phase);
    }
    row.extend([s.dispersion, s.energy, s.momentum]);
    row
}

/// Flattens one predicted sample into the schema of [`series_header`].
pub fn prediction_row(s: &PredictionSample) -> Vec<f64> {
    let mut row = vec![s.t, s.a_x, s.a_y, s.intensity];
    for &(mag, phase) in &s.b {
        row.push(mag);
        row.push(phase);
    }
    row.extend([s.dispersion, s.energy, s.momentum]);
    row
}

/// Commented configuration block placed at the top of every emitted CSV.
pub fn metadata_block(config: &Config) -> String {
    let mut out = String::new();
    for line in config.emit().lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// Renders a CSV: metadata block from `config`, header, numeric rows, and an
/// optional non-numeric trailer line.
pub fn render_csv(
    config: &Config,
    header: &[String],
    rows: &[Vec<f64>],
    trailer: Option<&str>,
) -> String {
    let mut out = metadata_block(config);
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    if let Some(t) = trailer {
        out.push_str(t);
        out.push('\n');
    }
    out
}

/// A parsed series CSV: the reconstructed configuration, the header, and the
/// numeric rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedCsv {
    /// Configuration rebuilt from the metadata block.
    pub config: Config,
    /// Column names.
    pub header: Vec<String>,
    /// One numeric row per line.
    pub rows: Vec<Vec<f64>>,
}

/// Parses a CSV produced by [`render_csv`] (without trailer lines).
pub fn parse_csv(text: &str, what: &str) -> Result<ParsedCsv, CliError> {
    let mut meta = String::new();
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            meta.push_str(rest.trim_start());
            meta.push('\n');
            continue;
        }
        let Some(header) = &header else {
            header = Some(line.split(',').map(|s| s.to_string()).collect());
            continue;
        };
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.parse::<f64>().map_err(|_| {
                    CliError::Usage(format!(
                        "{what} line {}: expected a number, got '{cell}'",
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<_, _>>()?;
        if row.len() != header.len() {
            return Err(CliError::Usage(format!(
                "{what} line {}: expected {} columns, got {}",
                lineno + 1,
                header.len(),
                row.len()
            )));
        }
        rows.push(row);
    }
    let header = header.ok_or_else(|| CliError::Usage(format!("{what}: no header line")))?;
    let config = resolve(
        Some(parse_config_text(&meta)?),
        Overlay::default(),
        Overlay::default(),
    )
    .map_err(|e| CliError::Usage(format!("{what} metadata: {e}")))?;
    Ok(ParsedCsv {
        config,
        header,
        rows,
    })
}

fn check_schema(parsed: &ParsedCsv, what: &str) -> Result<u32, CliError> {
    let k_max = parsed.config.k_max;
    let expected = series_header(k_max);
    if parsed.header != expected {
        return Err(CliError::Usage(format!(
            "{what}: header does not match the simulate/predict schema for k_max = {k_max}"
        )));
    }
    Ok(k_max)
}

/// `(t, ax, ay, intensity, b, dispersion, energy, momentum)`.
type SplitRow = (f64, f64, f64, f64, Vec<(f64, f64)>, f64, f64, f64);

fn split_row(row: &[f64], k_max: u32) -> SplitRow {
    let k = k_max as usize;
    let b = (0..k).map(|i| (row[4 + 2 * i], row[5 + 2 * i])).collect();
    (
        row[0],
        row[1],
        row[2],
        row[3],
        b,
        row[4 + 2 * k],
        row[5 + 2 * k],
        row[6 + 2 * k],
    )
}

/// Rebuilds a simulation series from a parsed `simulate` CSV.
pub fn to_simulation_series(parsed: &ParsedCsv, what: &str) -> Result<SimulationSeries, CliError> {
    let k_max = check_schema(parsed, what)?;
    let samples = parsed
        .rows
        .iter()
        .map(|row| {
            let (t, a_x, a_y, intensity, b, dispersion, energy, momentum) = split_row(row, k_max);
            ObservableSample {
                t,
                a_x,
                a_y,
                intensity,
                b,
                dispersion,
                energy,
                momentum,
            }
        })
        .collect();
    Ok(SimulationSeries {
        samples,
        flip_time: None,
        metadata: RunMetadata {
            spec: parsed.config.spec(),
            config: parsed.config.integrator(),
        },
    })
}

/// Rebuilds a prediction series from a parsed `predict` CSV.
pub fn to_prediction_series(parsed: &ParsedCsv, what: &str) -> Result<PredictionSeries, CliError> {
    let k_max = check_schema(parsed, what)?;
    let samples = parsed
        .rows
        .iter()
        .map(|row| {
            let (t, a_x, a_y, intensity, b, dispersion, energy, momentum) = split_row(row, k_max);
            PredictionSample {
                t,
                a_x,
                a_y,
                intensity,
                b,
                dispersion,
                energy,
                momentum,
            }
        })
        .collect();
    let spec = parsed.config.spec();
    Ok(PredictionSeries {
        samples,
        warning: validity(&spec),
        metadata: RunMetadata {
            spec,
            config: parsed.config.integrator(),
        },
    })
}
