//! Argument parsing and subcommand execution.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fel1d_core::diag::{self, Tolerances, Window};
use fel1d_core::lintheory::{solve_dispersion, EquilibriumProfile, Stability};
use fel1d_core::{contour, nbody, perturb};

use crate::config::{env_overlay, parse_config_file, parse_pi_float, resolve, Config, Overlay};
use crate::{csvio, map_run_error, svg, CliError};

/// Self-consistent 1D wave-particle simulator with closed-form short-time
/// predictions and CSV regression gates.
#[derive(Debug, Parser)]
#[command(name = "fel1d", version)]
pub struct Cli {
    /// Configuration file (`key = value`; see README for keys and defaults).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; without it the primary CSV goes to stdout.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Override the integrator timestep.
    #[arg(long, global = true, value_name = "DT")]
    pub dt: Option<f64>,
    /// Override the final time.
    #[arg(long = "t-end", global = true, value_name = "T")]
    pub t_end: Option<f64>,
    /// Override the observation stride (steps between samples).
    #[arg(long, global = true, value_name = "N")]
    pub stride: Option<usize>,
    /// Worker threads for the ensemble reductions; default all cores.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Accepted for interface stability: reductions use a fixed combination
    /// order, so output is byte-identical for any worker count regardless.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Also render SVG plots next to the CSVs (requires --out).
    #[arg(long, global = true)]
    pub svg: bool,
    /// Subcommand to run.
    #[command(subcommand)]
    pub command: Command,
}

/// One subcommand per artifact family.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the N-body system and emit the observable series.
    Simulate,
    /// Evaluate the short-time closed forms on the same observation grid.
    Predict,
    /// Solve the linear dispersion relation for the configured spread.
    Dispersion,
    /// Track the waterbag boundary with passive markers.
    Contour,
    /// Gate a simulation CSV against a prediction CSV.
    Compare(CompareArgs),
}

/// Inputs and gates of the `compare` subcommand.
#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Simulation CSV (output of `simulate`).
    #[arg(long, value_name = "PATH")]
    pub sim: PathBuf,
    /// Prediction CSV (output of `predict`).
    #[arg(long, value_name = "PATH")]
    pub pred: PathBuf,
    /// Linearly interpolate the prediction onto the simulation grid.
    #[arg(long)]
    pub interpolate: bool,
    /// Per-observable tolerance override, `NAME=VALUE`; repeatable. Names
    /// match the report rows: intensity, ax, ay, b1_mag, dispersion, energy,
    /// momentum.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
    /// Comparison window `START:END`; repeatable. Default: the leading half
    /// characteristic time of the configured spec (through t = 0.5 when the
    /// spec is unseeded).
    #[arg(long = "window", value_name = "START:END")]
    pub window: Vec<String>,
}

/// Runs one parsed command line to completion.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    if cli.svg && cli.out.is_none() {
        return Err(CliError::Usage("--svg requires --out".into()));
    }
    if let Some(w) = cli.workers {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global();
    }
    match &cli.command {
        Command::Simulate => simulate(cli),
        Command::Predict => predict(cli),
        Command::Dispersion => dispersion(cli),
        Command::Contour => contour_cmd(cli),
        Command::Compare(args) => compare(cli, args),
    }
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let file = match &cli.config {
        Some(p) => Some(parse_config_file(p)?),
        None => None,
    };
    let env = env_overlay(std::env::vars())?;
    let overlay = Overlay {
        dt: cli.dt,
        t_end: cli.t_end,
        stride: cli.stride,
        ..Overlay::default()
    };
    resolve(file, env, overlay)
}

fn emit_artifact(cli: &Cli, name: &str, text: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_effective_config(cli: &Cli, config: &Config) -> Result<(), CliError> {
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("effective_config.txt"), config.emit())?;
    }
    Ok(())
}

fn column(parsed: &csvio::ParsedCsv, name: &str) -> Result<Vec<f64>, CliError> {
    let idx = parsed
        .header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Usage(format!("emitted csv lacks column '{name}'")))?;
    Ok(parsed.rows.iter().map(|r| r[idx]).collect())
}

fn series_svg(csv_text: &str, title: &str) -> Result<String, CliError> {
    let parsed = csvio::parse_csv(csv_text, "emitted csv")?;
    let xs = column(&parsed, "t")?;
    let intensity = column(&parsed, "intensity")?;
    let ay = column(&parsed, "ay")?;
    Ok(svg::line_plot(
        title,
        "t",
        "observable",
        &xs,
        &[("intensity", intensity), ("ay", ay)],
    ))
}

fn simulate(cli: &Cli) -> Result<(), CliError> {
    let config = load_config(cli)?;
    let series = nbody::run(&config.spec(), &config.integrator()).map_err(map_run_error)?;
    let rows: Vec<Vec<f64>> = series.samples.iter().map(csvio::observable_row).collect();
    let text = csvio::render_csv(&config, &csvio::series_header(config.k_max), &rows, None);
    emit_artifact(cli, "simulate.csv", &text)?;
    emit_effective_config(cli, &config)?;
    if cli.svg {
        emit_artifact(
            cli,
            "simulate.svg",
            &series_svg(&text, "simulated observables")?,
        )?;
    }
    Ok(())
}

fn predict(cli: &Cli) -> Result<(), CliError> {
    let config = load_config(cli)?;
    let series = perturb::prediction_series(
        &config.spec(),
        &config.integrator(),
        config.d_branch_threshold,
    );
    if let Some(w) = &series.warning {
        eprintln!("warning: {w}");
    }
    let rows: Vec<Vec<f64>> = series.samples.iter().map(csvio::prediction_row).collect();
    let text = csvio::render_csv(&config, &csvio::series_header(config.k_max), &rows, None);
    emit_artifact(cli, "predict.csv", &text)?;
    emit_effective_config(cli, &config)?;
    if cli.svg {
        emit_artifact(
            cli,
            "predict.svg",
            &series_svg(&text, "predicted observables")?,
        )?;
    }
    Ok(())
}

fn dispersion(cli: &Cli) -> Result<(), CliError> {
    let config = load_config(cli)?;
    let profile = if config.delta_p == 0.0 {
        EquilibriumProfile::ColdBeam
    } else {
        EquilibriumProfile::Waterbag {
            delta_p: config.delta_p,
        }
    };
    let roots = solve_dispersion(&profile, 1e-12).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut text = csvio::metadata_block(&config);
    text.push_str("re,im,residual,class\n");
    for r in &roots {
        let class = match r.classification {
            Stability::Unstable => "unstable",
            Stability::Neutral => "neutral",
            Stability::Damped => "damped",
        };
        text.push_str(&format!(
            "{},{},{},{class}\n",
            r.omega.re, r.omega.im, r.residual
        ));
    }
    emit_artifact(cli, "dispersion.csv", &text)?;
    emit_effective_config(cli, &config)?;
    Ok(())
}

fn map_contour_error(e: contour::ContourError) -> CliError {
    match e {
        contour::ContourError::DegenerateFit => CliError::Numerical(e.to_string()),
        other => CliError::Usage(other.to_string()),
    }
}

fn contour_cmd(cli: &Cli) -> Result<(), CliError> {
    let config = load_config(cli)?;
    let spec = config.spec();
    let markers = contour::seed_markers(&spec, config.n_markers).map_err(map_contour_error)?;
    let (_, history) =
        nbody::run_with_history(&spec, &config.integrator()).map_err(map_run_error)?;
    let (boundary, traj) =
        contour::track_boundary(&markers, &history, config.stride).map_err(map_contour_error)?;

    let header: Vec<String> = ["t", "u_fit", "v_plus", "v_minus", "rms_residual"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<f64>> = boundary
        .times
        .iter()
        .zip(&boundary.fits)
        .map(|(&t, f)| vec![t, f.u, f.v_plus, f.v_minus, f.rms_residual])
        .collect();
    let trailer = format!(
        "flip_time,{}",
        boundary
            .flip_time
            .map_or_else(|| "none".to_string(), |t| t.to_string())
    );
    let text = csvio::render_csv(&config, &header, &rows, Some(&trailer));
    emit_artifact(cli, "contour.csv", &text)?;

    if cli.out.is_some() {
        let stride = config.stride.max(1);
        let last = traj.len() - 1;
        let mut mheader = vec!["t".to_string()];
        for m in 0..markers.len() {
            mheader.push(format!("theta{m}"));
            mheader.push(format!("p{m}"));
        }
        let mut mrows = Vec::new();
        for it in 0..traj.len() {
            if it % stride == 0 || it == last {
                let mut row = Vec::with_capacity(mheader.len());
                row.push(traj.times[it]);
                for m in 0..markers.len() {
                    row.push(traj.theta[it][m]);
                    row.push(traj.p[it][m]);
                }
                mrows.push(row);
            }
        }
        let mtext = csvio::render_csv(&config, &mheader, &mrows, None);
        emit_artifact(cli, "markers.csv", &mtext)?;
        if cli.svg {
            emit_artifact(cli, "contour.svg", &markers_svg(&mtext)?)?;
        }
    }
    emit_effective_config(cli, &config)?;
    Ok(())
}

fn markers_svg(markers_csv: &str) -> Result<String, CliError> {
    let parsed = csvio::parse_csv(markers_csv, "emitted csv")?;
    let n_rows = parsed.rows.len();
    if n_rows == 0 {
        return Err(CliError::Usage("emitted csv has no marker rows".into()));
    }
    let picks = [0, n_rows / 3, 2 * n_rows / 3, n_rows - 1];
    let mut frames = Vec::new();
    let mut seen = Vec::new();
    for &i in &picks {
        if seen.contains(&i) {
            continue;
        }
        seen.push(i);
        let row = &parsed.rows[i];
        let points: Vec<(f64, f64)> = row[1..].chunks_exact(2).map(|c| (c[0], c[1])).collect();
        frames.push((format!("t={}", row[0]), points));
    }
    Ok(svg::scatter_plot("boundary markers", "theta", "p", &frames))
}

fn parse_window(s: &str) -> Result<Window, CliError> {
    let err = || {
        CliError::Usage(format!(
            "window '{s}': expected START:END with START <= END"
        ))
    };
    let (a, b) = s.split_once(':').ok_or_else(err)?;
    let t_start = parse_pi_float(a).map_err(|_| err())?;
    let t_end = parse_pi_float(b).map_err(|_| err())?;
    if !t_start.is_finite() || !t_end.is_finite() || t_start > t_end {
        return Err(err());
    }
    Ok(Window { t_start, t_end })
}

fn apply_tol(tol: &mut Tolerances, s: &str) -> Result<(), CliError> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("tolerance '{s}': expected NAME=VALUE")))?;
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("tolerance '{s}': expected a number")))?;
    if !(v >= 0.0) || !v.is_finite() {
        return Err(CliError::Usage(format!(
            "tolerance '{s}': must be non-negative and finite"
        )));
    }
    match name.trim() {
        "intensity" => tol.intensity = v,
        "ax" => tol.a_x = v,
        "ay" => tol.a_y = v,
        "b1_mag" => tol.b1 = v,
        "dispersion" => tol.dispersion = v,
        "energy" => tol.energy = v,
        "momentum" => tol.momentum = v,
        other => {
            return Err(CliError::Usage(format!(
                "unknown tolerance name '{other}' (expected intensity, ax, ay, b1_mag, dispersion, energy, or momentum)"
            )));
        }
    }
    Ok(())
}

fn compare(cli: &Cli, args: &CompareArgs) -> Result<(), CliError> {
    let read = |p: &PathBuf, what: &str| -> Result<String, CliError> {
        fs::read_to_string(p)
            .map_err(|e| CliError::Usage(format!("cannot read {what} '{}': {e}", p.display())))
    };
    let sim_parsed = csvio::parse_csv(&read(&args.sim, "simulation csv")?, "simulation csv")?;
    let pred_parsed = csvio::parse_csv(&read(&args.pred, "prediction csv")?, "prediction csv")?;
    let sim = csvio::to_simulation_series(&sim_parsed, "simulation csv")?;
    let pred = csvio::to_prediction_series(&pred_parsed, "prediction csv")?;

    let windows: Vec<Window> = if args.window.is_empty() {
        diag::default_windows(&sim.metadata.spec, sim.metadata.config.t_end)
    } else {
        args.window
            .iter()
            .map(|w| parse_window(w))
            .collect::<Result<_, _>>()?
    };
    let mut tol = Tolerances::for_spec(&sim.metadata.spec);
    for t in &args.tol {
        apply_tol(&mut tol, t)?;
    }

    let report = diag::compare_series(&sim, &pred, &windows, &tol, args.interpolate)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let mut text = csvio::metadata_block(&sim_parsed.config);
    text.push_str("observable,t_start,t_end,max_rel_err,mean_rel_err,exponent,tolerance,pass\n");
    for row in &report.rows {
        let exponent = row
            .exponent
            .map_or_else(|| "none".to_string(), |e| e.to_string());
        text.push_str(&format!(
            "{},{},{},{},{},{exponent},{},{}\n",
            row.observable,
            row.window.t_start,
            row.window.t_end,
            row.max_rel_err,
            row.mean_rel_err,
            row.tolerance,
            row.pass
        ));
    }
    emit_artifact(cli, "compare.csv", &text)?;
    emit_effective_config(cli, &sim_parsed.config)?;
    println!("{}", if report.pass { "PASS" } else { "FAIL" });
    if report.pass {
        Ok(())
    } else {
        Err(CliError::CompareFailed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_parse_and_reject_misorderings() {
        let w = parse_window("0.05:0.5").unwrap();
        assert_eq!((w.t_start, w.t_end), (0.05, 0.5));
        let w = parse_window("0:pi/2").unwrap();
        assert_eq!(w.t_end, std::f64::consts::FRAC_PI_2);
        assert!(parse_window("0.5:0.1").is_err());
        assert!(parse_window("0.5").is_err());
    }

    #[test]
    fn tolerance_overrides_hit_the_named_field() {
        let mut t = Tolerances::default();
        apply_tol(&mut t, "ay=0.2").unwrap();
        apply_tol(&mut t, "intensity=0.01").unwrap();
        assert_eq!(t.a_y, 0.2);
        assert_eq!(t.intensity, 0.01);
        assert!(apply_tol(&mut t, "b7=0.1").is_err());
        assert!(apply_tol(&mut t, "ax=-1").is_err());
    }

    #[test]
    fn cli_accepts_the_documented_global_flags() {
        let cli = Cli::try_parse_from([
            "fel1d",
            "simulate",
            "--config",
            "run.cfg",
            "--out",
            "outdir",
            "--dt",
            "0.0005",
            "--t-end",
            "1.5",
            "--stride",
            "5",
            "--workers",
            "2",
            "--deterministic",
            "--svg",
        ])
        .unwrap();
        assert_eq!(cli.dt, Some(0.0005));
        assert_eq!(cli.t_end, Some(1.5));
        assert_eq!(cli.stride, Some(5));
        assert_eq!(cli.workers, Some(2));
        assert!(cli.deterministic && cli.svg);
        assert!(matches!(cli.command, Command::Simulate));
    }

    #[test]
    fn svg_without_out_is_a_usage_error() {
        let cli = Cli::try_parse_from(["fel1d", "simulate", "--svg"]).unwrap();
        let err = execute(&cli).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("--svg"), "{err}");
    }
}
