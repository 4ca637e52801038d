//! Command-line front end: `check`, `field`, `kmatrices`, `gramian`, `steer`.
//!
//! Every command renders its whole output into memory and writes it once at
//! the end, either to stdout or to `--output`. Numbers in CSV files carry 17
//! significant digits. The exit status reports whether the analysis ran, not
//! what it concluded.

pub mod config;

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::controllability::{
    analyze, gramian, k_matrices, rank_test, ControllabilityError, ControllabilityReport,
};
use crate::maneuver::{simulate_maneuver, ManeuverError, ManeuverResult};
use crate::model::{magnetic_field, StateVector};

pub use config::{AnalysisConfig, ConfigError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Controllability(#[from] ControllabilityError),
    #[error(transparent)]
    Maneuver(#[from] ManeuverError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Parser)]
#[command(
    name = "magctl",
    version,
    about = "Controllability analysis of magnetically actuated spacecraft attitude"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// JSON configuration file; built-in defaults are used when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Write the command's primary output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Relative singular-value cutoff for rank decisions.
    #[arg(long, global = true)]
    pub rank_tol: Option<f64>,
    #[arg(long, global = true)]
    pub steps_per_orbit: Option<usize>,
    /// Simpson nodes for the Gramian and the sampled control (odd).
    #[arg(long, global = true)]
    pub gramian_nodes: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Full controllability report and verdict.
    Check {
        /// Print the machine-readable report instead of the summary.
        #[arg(long)]
        json: bool,
    },
    /// Dipole field along the orbit as CSV.
    Field {
        /// Samples per orbit.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        orbits: usize,
    },
    /// Singular values and rank of [K0|K1|K2] as CSV.
    Kmatrices {
        /// Single evaluation time in seconds (default: quarter orbit).
        #[arg(long, conflicts_with = "sweep")]
        time: Option<f64>,
        /// Evaluate at N+1 equally spaced times over one orbit.
        #[arg(long)]
        sweep: Option<usize>,
    },
    /// One-orbit controllability Gramian as JSON.
    Gramian,
    /// Minimum-energy steering of x0 to the origin over one orbit.
    Steer {
        /// q1 q2 q3 w1 w2 w3
        #[arg(
            long,
            num_args = 6,
            allow_hyphen_values = true,
            required = true
        )]
        x0: Vec<f64>,
    },
}

/// Text produced by a command: the primary output and an optional summary
/// line that is kept out of machine-readable files.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommandOutput {
    pub body: String,
    pub summary: Option<String>,
}

pub fn resolve_config(global: &GlobalArgs) -> Result<AnalysisConfig, CliError> {
    let mut cfg = match &global.config {
        Some(path) => AnalysisConfig::load(path)?,
        None => AnalysisConfig::default(),
    };
    if let Some(v) = global.rank_tol {
        cfg.numerics.rank_tol = v;
    }
    if let Some(v) = global.steps_per_orbit {
        cfg.numerics.steps_per_orbit = v;
    }
    if let Some(v) = global.gramian_nodes {
        cfg.numerics.gramian_nodes = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let row: Vec<String> = values.into_iter().map(sci).collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

pub fn cmd_check(cfg: &AnalysisConfig) -> Result<ControllabilityReport, CliError> {
    let j = cfg.inertia_tensor()?;
    let orbit = cfg.orbit_config()?;
    Ok(analyze(&j, &orbit, &cfg.settings())?)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a (sin(i_m) cos(i_m) = 0)".to_string(), |v| format!("{v:.6e}"))
}

pub fn render_report(cfg: &AnalysisConfig, r: &ControllabilityReport) -> String {
    let holds = |b: bool| if b { "holds" } else { "VIOLATED" };
    let [j1, j2, j3] = cfg.inertia;
    let mut s = String::new();
    let _ = writeln!(s, "inertia         diag({j1}, {j2}, {j3}) kg m^2");
    let _ = writeln!(
        s,
        "orbit           a = {:.6e} m, omega0 = {:.6e} rad/s, i_m = {:.6} rad",
        cfg.orbit.semi_major_axis,
        cfg.orbit.omega0.unwrap_or(f64::NAN),
        cfg.orbit.inclination_mag
    );
    let _ = writeln!(
        s,
        "condition 1     J33 != J22                              {} (residual {:.3e})",
        holds(r.cond1_holds),
        r.cond1_residual
    );
    let _ = writeln!(
        s,
        "condition 2     J22(J11 - J22 + J33) != 6 J33(J33 - J11) {} (residual {:.3e})",
        holds(r.cond2_holds),
        r.cond2_residual
    );
    let _ = writeln!(s, "equatorial      {}", if r.equatorial { "yes" } else { "no" });
    let sv: Vec<String> = r
        .k_rank
        .singular_values
        .iter()
        .map(|v| format!("{v:.3e}"))
        .collect();
    let _ = writeln!(
        s,
        "rank [K0|K1|K2] {} at t_c = {:.6e} s (sigma: {})",
        r.k_rank.rank,
        r.t_c,
        sv.join(", ")
    );
    let _ = writeln!(s, "submatrix det   {}", opt(r.submatrix_det));
    let _ = writeln!(s, "factored det    {}", opt(r.factored_det));
    let _ = writeln!(s, "condition 1 val {:.6e}", r.condition1_value);
    let _ = writeln!(s, "gramian ratio   {:.6e} (lambda_min / lambda_max)", r.gramian_ratio);
    let _ = writeln!(s, "verdict         {}", r.verdict);
    s
}

pub fn cmd_field(cfg: &AnalysisConfig, samples: usize, orbits: usize) -> Result<String, CliError> {
    if samples < 2 {
        return Err(CliError::Usage(format!("--samples must be at least 2, got {samples}")));
    }
    let orbit = cfg.orbit_config()?;
    let period = orbit.period();
    let rows = samples * orbits;
    let mut out = String::from("t,b1,b2,b3\n");
    for i in 0..=rows {
        let t = period * i as f64 / samples as f64;
        let b = magnetic_field(&orbit, t);
        csv_row(&mut out, [t, b.b1, b.b2, b.b3]);
    }
    Ok(out)
}

pub fn cmd_kmatrices(
    cfg: &AnalysisConfig,
    time: Option<f64>,
    sweep: Option<usize>,
) -> Result<String, CliError> {
    let j = cfg.inertia_tensor()?;
    let orbit = cfg.orbit_config()?;
    let times: Vec<f64> = match (time, sweep) {
        (_, Some(0)) => return Err(CliError::Usage("--sweep must be at least 1".into())),
        (_, Some(n)) => (0..=n)
            .map(|i| orbit.period() * i as f64 / n as f64)
            .collect(),
        (Some(t), None) if t.is_finite() => vec![t],
        (Some(t), None) => return Err(CliError::Usage(format!("--time must be finite, got {t}"))),
        (None, None) => vec![orbit.quarter_orbit_time()],
    };
    let mut out = String::from("t,s1,s2,s3,s4,s5,s6,rank\n");
    for t in times {
        let r = rank_test(&k_matrices(&j, &orbit, t)?, cfg.numerics.rank_tol);
        let mut row: Vec<String> = std::iter::once(t)
            .chain(r.singular_values.iter().copied())
            .map(sci)
            .collect();
        row.push(r.rank.to_string());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramianReport {
    pub t0: f64,
    pub tf: f64,
    pub nodes: usize,
    pub matrix: [[f64; 6]; 6],
    /// Descending.
    pub eigenvalues: [f64; 6],
    pub ratio: f64,
}

pub fn cmd_gramian(cfg: &AnalysisConfig) -> Result<GramianReport, CliError> {
    let j = cfg.inertia_tensor()?;
    let orbit = cfg.orbit_config()?;
    let nodes = cfg.numerics.gramian_nodes;
    let w = gramian(&j, &orbit, 0.0, orbit.period(), nodes)?;
    Ok(GramianReport {
        t0: w.t0,
        tf: w.tf,
        nodes,
        matrix: std::array::from_fn(|r| std::array::from_fn(|c| w.matrix[(r, c)])),
        eigenvalues: w.eigenvalues,
        ratio: w.condition_ratio(),
    })
}

pub fn cmd_steer(cfg: &AnalysisConfig, x0: &[f64]) -> Result<ManeuverResult, CliError> {
    let x0: [f64; 6] = x0
        .try_into()
        .map_err(|_| CliError::Usage(format!("--x0 needs 6 values, got {}", x0.len())))?;
    let x0 = StateVector::from_array(x0);
    if !x0.is_finite() {
        return Err(CliError::Usage("--x0 values must be finite".into()));
    }
    let j = cfg.inertia_tensor()?;
    let orbit = cfg.orbit_config()?;
    Ok(simulate_maneuver(
        &j,
        &orbit,
        &x0,
        0.0,
        orbit.period(),
        cfg.numerics.steps_per_orbit,
        cfg.numerics.gramian_nodes,
    )?)
}

pub fn maneuver_csv(r: &ManeuverResult) -> String {
    let mut out = String::from("t,q1,q2,q3,w1,w2,w3,m1,m2,m3\n");
    for ((t, x), m) in r.times.iter().zip(&r.states).zip(&r.controls) {
        csv_row(
            &mut out,
            std::iter::once(*t)
                .chain(x.to_vector().iter().copied())
                .chain(m.iter().copied()),
        );
    }
    out
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports always serialize");
    s.push('\n');
    s
}

/// Runs one command and returns its rendered output.
pub fn execute(global: &GlobalArgs, command: &Command) -> Result<CommandOutput, CliError> {
    let cfg = resolve_config(global)?;
    let out = match command {
        Command::Check { json } => {
            let report = cmd_check(&cfg)?;
            // A file always receives the machine-readable report.
            if *json || global.output.is_some() {
                CommandOutput {
                    body: to_json(&report),
                    summary: Some(format!("verdict: {}", report.verdict)),
                }
            } else {
                CommandOutput {
                    body: render_report(&cfg, &report),
                    summary: None,
                }
            }
        }
        Command::Field { samples, orbits } => CommandOutput {
            body: cmd_field(&cfg, *samples, *orbits)?,
            summary: None,
        },
        Command::Kmatrices { time, sweep } => CommandOutput {
            body: cmd_kmatrices(&cfg, *time, *sweep)?,
            summary: None,
        },
        Command::Gramian => CommandOutput {
            body: to_json(&cmd_gramian(&cfg)?),
            summary: None,
        },
        Command::Steer { x0 } => {
            let r = cmd_steer(&cfg, x0)?;
            CommandOutput {
                body: maneuver_csv(&r),
                summary: Some(format!(
                    "final_norm_ratio={} energy={}",
                    sci(r.final_norm_ratio),
                    sci(r.energy)
                )),
            }
        }
    };
    Ok(out)
}

/// Executes the parsed command line and writes the results. With
/// `--output` the body goes to the file and the summary to stdout;
/// otherwise the body goes to stdout and the summary to stderr.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let out = execute(&cli.global, &cli.command)?;
    match &cli.global.output {
        Some(path) => {
            std::fs::write(path, &out.body).map_err(|source| CliError::Write {
                path: path.display().to_string(),
                source,
            })?;
            if let Some(s) = out.summary {
                println!("{s}");
            }
        }
        None => {
            print!("{}", out.body);
            if let Some(s) = out.summary {
                eprintln!("{s}");
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_with(im: f64) -> AnalysisConfig {
        let mut c = AnalysisConfig::default();
        c.orbit.inclination_mag = im;
        c.numerics.gramian_nodes = 401;
        c.numerics.steps_per_orbit = 800;
        c
    }

    fn rows(csv: &str) -> Vec<Vec<f64>> {
        csv.lines()
            .skip(1)
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect()
    }

    #[test]
    fn field_row_count_and_periodicity() {
        let c = cfg_with(0.6);
        let csv = cmd_field(&c, 4, 1).unwrap();
        assert_eq!(csv.lines().next(), Some("t,b1,b2,b3"));
        let r = rows(&csv);
        assert_eq!(r.len(), 5);
        let scale = r[0][1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        for (first, last) in r[0][1..].iter().zip(&r[4][1..]) {
            assert!((first - last).abs() <= 1e-12 * scale);
        }
        assert_eq!(rows(&cmd_field(&c, 10, 3).unwrap()).len(), 31);
        assert!(cmd_field(&c, 1, 1).is_err());
    }

    #[test]
    fn equatorial_field_is_constant() {
        let r = rows(&cmd_field(&cfg_with(0.0), 16, 1).unwrap());
        assert!(r.iter().all(|row| row[1] == 0.0 && row[3] == 0.0));
        assert!(r.iter().all(|row| row[2] == r[0][2]));
    }

    #[test]
    fn csv_uses_full_precision() {
        let csv = cmd_field(&cfg_with(0.6), 3, 1).unwrap();
        let second = csv.lines().nth(2).unwrap();
        let t: f64 = second.split(',').next().unwrap().parse().unwrap();
        let period = cfg_with(0.6).orbit_config().unwrap().period();
        assert_eq!(t, period / 3.0);
    }

    #[test]
    fn kmatrices_default_time_has_full_rank() {
        let r = rows(&cmd_kmatrices(&cfg_with(std::f64::consts::FRAC_PI_4), None, None).unwrap());
        assert_eq!(r.len(), 1);
        assert_eq!(r[0][7], 6.0);
    }

    #[test]
    fn kmatrices_equatorial_sweep_is_deficient() {
        let r = rows(&cmd_kmatrices(&cfg_with(0.0), None, Some(12)).unwrap());
        assert_eq!(r.len(), 13);
        for row in &r {
            assert!(row[7] <= 5.0);
            let s = &row[1..7];
            assert!(s.iter().all(|v| *v >= 0.0));
            assert!(s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn check_verdicts() {
        use crate::controllability::Verdict;
        let r = cmd_check(&cfg_with(std::f64::consts::FRAC_PI_4)).unwrap();
        assert_eq!(r.verdict, Verdict::Controllable);
        let r = cmd_check(&cfg_with(0.0)).unwrap();
        assert_eq!(r.verdict, Verdict::NotControllableEquatorial);
        let mut c = cfg_with(std::f64::consts::FRAC_PI_4);
        c.inertia = [1.0, 2.0, 1.0];
        assert_eq!(cmd_check(&c).unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn json_report_has_every_field() {
        let r = cmd_check(&cfg_with(0.7)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&to_json(&r)).unwrap();
        for key in [
            "cond1_residual",
            "cond2_residual",
            "cond1_holds",
            "cond2_holds",
            "equatorial",
            "t_c",
            "k_rank",
            "submatrix_det",
            "factored_det",
            "closed_form_det_factor",
            "condition1_value",
            "gramian_eigs",
            "gramian_ratio",
            "verdict",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn steer_zero_state_is_all_zero() {
        let r = cmd_steer(&cfg_with(0.7), &[0.0; 6]).unwrap();
        for row in rows(&maneuver_csv(&r)) {
            assert!(row[1..].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn steer_equatorial_fails() {
        let err = cmd_steer(&cfg_with(0.0), &[0.01, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("singular"), "{err}");
    }

    #[test]
    fn overrides_are_validated() {
        let g = GlobalArgs {
            gramian_nodes: Some(10),
            ..Default::default()
        };
        assert!(matches!(resolve_config(&g), Err(CliError::Config(_))));
        let g = GlobalArgs {
            rank_tol: Some(1e-6),
            ..Default::default()
        };
        assert_eq!(resolve_config(&g).unwrap().numerics.rank_tol, 1e-6);
    }

    #[test]
    fn parses_negative_x0() {
        let cli = Cli::try_parse_from([
            "magctl", "steer", "--x0", "-0.01", "0.02", "0", "1e-5", "-1e-5", "0",
        ])
        .unwrap();
        match cli.command {
            Command::Steer { x0 } => assert_eq!(x0[0], -0.01),
            _ => panic!(),
        }
        assert!(Cli::try_parse_from(["magctl", "steer", "--x0", "0.1", "0"]).is_err());
    }
}
