//! Command-line front end.
//!
//! Every command is a pure function of its parsed flags; CSV output starts
//! with a `#` line holding the full [`RunSpec`] as JSON.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::MechanismConfig;
use crate::error::Error;
use crate::gaussian_baseline::{compare_mechanisms, ComparisonRow, DiscreteGaussianPmf, COMPARISON_HEADER};
use crate::lp_oracle::solve_general_lp;
use crate::noise_family::MechanismMatrix;
use crate::optimal_solver::{optimal_alphas, OptimalSolution};
use crate::sampler::empirical_audit;
use crate::verification::run_verification;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;

pub const SWEEP_EPS_HEADER: &str = "epsilon,D,regime,delta_star,dp_delta";
pub const SWEEP_ETA_HEADER: &str = "eta,D,epsilon,regime,delta_star,dp_delta";
pub const FIG1_HEADER: &str = "z,ours,gaussian";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Closed-form optimal noise for one configuration.
    Solve,
    /// (2D+1) delta* over an epsilon grid, for each D.
    SweepEps,
    /// (2D+1) delta* over an eta grid, for each D.
    SweepEta,
    /// Optimal mechanism against the matched-variance discrete Gaussian.
    CompareGaussian,
    /// Closed form against the LP oracle, plus delta audits.
    Verify,
    /// Empirical audit of the sampler.
    Sample,
    /// Data behind the four figures.
    FigureData,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

#[derive(Debug, Parser)]
#[command(name = "count-dp", version, about = "Optimal bounded integer noise for count queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, global = true)]
    eta: Option<f64>,
    /// Noise half-width; sweeps accept a comma-separated list.
    #[arg(long = "D", global = true, value_delimiter = ',')]
    d: Vec<u64>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Largest true count, for the data-dependent program.
    #[arg(long = "N", global = true)]
    max_count: Option<u64>,
    #[arg(long, global = true)]
    grid_start: Option<f64>,
    #[arg(long, global = true)]
    grid_stop: Option<f64>,
    #[arg(long, global = true)]
    grid_points: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = GridScale::Linear)]
    grid_scale: GridScale,
    #[arg(long, global = true, default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; a directory for figure-data.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// True count for `sample` (default D).
    #[arg(long, global = true)]
    n: Option<u64>,
    /// Half-width of the in-range window for `sample`.
    #[arg(long, global = true, default_value_t = 3)]
    window: u64,
    /// Random configurations checked by `verify`.
    #[arg(long, global = true, default_value_t = 500)]
    configs: usize,
    /// JSON mechanism matrix to audit in `verify`.
    #[arg(long, global = true)]
    matrix: Option<PathBuf>,
    /// Single figure for `figure-data` (default: all four).
    #[arg(long, global = true, value_enum)]
    figure: Option<Figure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub scale: GridScale,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err("grid bounds must be finite".into());
        }
        if self.start >= self.stop {
            return Err(format!("grid start {} must be below stop {}", self.start, self.stop));
        }
        if self.points < 2 {
            return Err(format!("grid needs at least 2 points, got {}", self.points));
        }
        if self.scale == GridScale::Log && self.start <= 0.0 {
            return Err("log grid needs a positive start".into());
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / last;
                match self.scale {
                    GridScale::Linear => self.start + t * (self.stop - self.start),
                    GridScale::Log => (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

/// Everything that determines a command's output.
#[derive(Debug, Clone, Serialize)]
pub struct RunSpec {
    pub command: Command,
    pub eta: Option<f64>,
    #[serde(rename = "D")]
    pub d: Vec<u64>,
    pub epsilon: Option<f64>,
    #[serde(rename = "N")]
    pub max_count: Option<u64>,
    pub grid: Option<GridSpec>,
    /// Grid density for figure-data, whose ranges are fixed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure_points: Option<usize>,
    pub trials: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub n: Option<u64>,
    pub window: u64,
    pub configs: usize,
    pub matrix: Option<PathBuf>,
    pub figure: Option<Figure>,
}

enum Failure {
    Usage(String),
    Verification,
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.into())
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

/// Ten significant digits.
fn num(x: f64) -> String {
    format!("{x:.9e}")
}

fn default_grid(command: Command) -> Option<(f64, f64, usize)> {
    match command {
        Command::SweepEps | Command::CompareGaussian => Some((0.5, 4.0, 36)),
        Command::SweepEta => Some((0.05, 0.95, 19)),
        _ => None,
    }
}

impl RunSpec {
    fn from_cli(cli: Cli) -> Outcome<Self> {
        let given = cli.grid_start.is_some() || cli.grid_stop.is_some() || cli.grid_points.is_some();
        let grid = match (default_grid(cli.command), given) {
            (Some((start, stop, points)), _) => Some(GridSpec {
                start: cli.grid_start.unwrap_or(start),
                stop: cli.grid_stop.unwrap_or(stop),
                points: cli.grid_points.unwrap_or(points),
                scale: cli.grid_scale,
            }),
            // figure-data only takes a point count.
            (None, true) if cli.command == Command::FigureData => {
                if cli.grid_start.is_some() || cli.grid_stop.is_some() {
                    return Err(Failure::Usage("figure-data ranges are fixed; only --grid-points applies".into()));
                }
                None
            }
            (None, true) => return Err(Failure::Usage("this command takes no grid".into())),
            (None, false) => None,
        };
        if let Some(g) = &grid {
            g.validate().map_err(Failure::Usage)?;
        }
        if let Some(p) = cli.grid_points {
            if p < 2 {
                return Err(Failure::Usage(format!("grid needs at least 2 points, got {p}")));
            }
        }
        if cli.d.contains(&0) {
            return Err(Failure::Usage("D must be at least 1".into()));
        }
        Ok(RunSpec {
            command: cli.command,
            eta: cli.eta,
            d: cli.d,
            epsilon: cli.eps,
            max_count: cli.max_count,
            figure_points: if cli.command == Command::FigureData { cli.grid_points } else { None },
            grid,
            trials: cli.trials,
            seed: cli.seed,
            out: cli.out,
            format: cli.format,
            n: cli.n,
            window: cli.window,
            configs: cli.configs,
            matrix: cli.matrix,
            figure: cli.figure,
        })
    }

    fn need_eta(&self) -> Outcome<f64> {
        self.eta.ok_or_else(|| Failure::Usage("--eta is required".into()))
    }

    fn need_eps(&self) -> Outcome<f64> {
        self.epsilon.ok_or_else(|| Failure::Usage("--eps is required".into()))
    }

    fn need_ds(&self) -> Outcome<&[u64]> {
        if self.d.is_empty() {
            return Err(Failure::Usage("--D is required".into()));
        }
        Ok(&self.d)
    }

    fn need_single_d(&self) -> Outcome<u64> {
        match self.d.as_slice() {
            [d] => Ok(*d),
            [] => Err(Failure::Usage("--D is required".into())),
            _ => Err(Failure::Usage("this command takes a single --D".into())),
        }
    }

    fn grid_values(&self) -> Vec<f64> {
        self.grid.as_ref().map(GridSpec::values).unwrap_or_default()
    }

    fn provenance(&self) -> String {
        format!(
            "# count-dp {} {}\n",
            env!("CARGO_PKG_VERSION"),
            serde_json::to_string(self).expect("run spec serializes")
        )
    }
}

/// A finished command: CSV text (without provenance) and the JSON value.
struct Rendered {
    csv: String,
    json: serde_json::Value,
}

fn csv_table(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Results go to `out` (or `--out`); diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    let result = RunSpec::from_cli(cli).and_then(|spec| dispatch(&spec, out, err));
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
        Err(Failure::Verification) => {
            let _ = writeln!(err, "verification failed");
            EXIT_VERIFY
        }
    }
}

fn dispatch(spec: &RunSpec, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    if spec.command == Command::FigureData {
        return cmd_figure_data(spec, out);
    }
    let (rendered, verdict) = match spec.command {
        Command::Solve => (cmd_solve(spec, err)?, Ok(())),
        Command::SweepEps => (cmd_sweep_eps(spec)?, Ok(())),
        Command::SweepEta => (cmd_sweep_eta(spec)?, Ok(())),
        Command::CompareGaussian => (cmd_compare_gaussian(spec)?, Ok(())),
        Command::Verify => cmd_verify(spec)?,
        Command::Sample => (cmd_sample(spec, err)?, Ok(())),
        Command::FigureData => unreachable!("handled above"),
    };
    let text = match spec.format {
        Format::Csv => format!("{}{}", spec.provenance(), rendered.csv),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&json!({ "spec": spec, "result": rendered.json }))?;
            s.push('\n');
            s
        }
    };
    match &spec.out {
        Some(path) => fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    verdict
}

fn cmd_solve(spec: &RunSpec, err: &mut dyn Write) -> Outcome<Rendered> {
    let mut config = MechanismConfig::new(spec.need_eta()?, spec.need_single_d()?, spec.need_eps()?)?;
    if let Some(n) = spec.max_count {
        config = config.with_max_count(n)?;
    }
    let sol = optimal_alphas(&config);
    if sol.dp_delta >= 1.0 {
        writeln!(err, "warning: (2D+1) delta* >= 1, the guarantee is vacuous")?;
    }
    let full = sol.mechanism_singular_delta();
    if full > sol.delta_star * (1.0 + 1e-9) + 1e-15 {
        writeln!(
            err,
            "warning: the z=1 upward constraint is not met; full singular delta is {}",
            num(full)
        )?;
    }
    let general = match spec.max_count {
        Some(n) => {
            let g = solve_general_lp(n, &config)?;
            if !g.solution.is_optimal() {
                return Err(Failure::Usage(format!("general program status {:?}", g.solution.status)));
            }
            Some(g.optimum())
        }
        None => None,
    };

    let mut rows = vec![
        format!("regime,{}", sol.regime),
        format!("delta_star,{}", num(sol.delta_star)),
        format!("dp_delta,{}", num(sol.dp_delta)),
        format!("variance,{}", num(sol.variance)),
    ];
    rows.extend(sol.alphas.iter().enumerate().map(|(i, a)| format!("alpha_{},{}", i + 1, num(*a))));
    if let Some(g) = general {
        rows.push(format!("general_lp_delta,{}", num(g)));
    }
    let mut value = serde_json::to_value(&sol)?;
    if let Some(g) = general {
        value["general_lp_delta"] = json!(g);
    }
    Ok(Rendered {
        csv: csv_table("field,value", rows),
        json: value,
    })
}

fn sweep_eps_rows(eta: f64, ds: &[u64], grid: &[f64]) -> Outcome<Vec<(u64, f64, OptimalSolution)>> {
    let points: Vec<(u64, f64)> = ds.iter().flat_map(|&d| grid.iter().map(move |&e| (d, e))).collect();
    points
        .par_iter()
        .map(|&(d, e)| Ok((d, e, optimal_alphas(&MechanismConfig::new(eta, d, e)?))))
        .collect()
}

fn sweep_eps_csv(rows: &[(u64, f64, OptimalSolution)]) -> String {
    csv_table(
        SWEEP_EPS_HEADER,
        rows.iter().map(|(d, e, s)| {
            format!("{},{d},{},{},{}", num(*e), s.regime, num(s.delta_star), num(s.dp_delta))
        }),
    )
}

fn sweep_json(rows: &[(u64, f64, OptimalSolution)]) -> serde_json::Value {
    json!(rows
        .iter()
        .map(|(_, _, s)| json!({
            "eta": s.config.eta(),
            "D": s.config.d(),
            "epsilon": s.config.epsilon(),
            "regime": s.regime,
            "delta_star": s.delta_star,
            "dp_delta": s.dp_delta,
        }))
        .collect::<Vec<_>>())
}

fn cmd_sweep_eps(spec: &RunSpec) -> Outcome<Rendered> {
    let rows = sweep_eps_rows(spec.need_eta()?, spec.need_ds()?, &spec.grid_values())?;
    Ok(Rendered {
        csv: sweep_eps_csv(&rows),
        json: sweep_json(&rows),
    })
}

fn sweep_eta_rows(eps: f64, ds: &[u64], grid: &[f64]) -> Outcome<Vec<(u64, f64, OptimalSolution)>> {
    let points: Vec<(u64, f64)> = ds.iter().flat_map(|&d| grid.iter().map(move |&h| (d, h))).collect();
    points
        .par_iter()
        .map(|&(d, eta)| Ok((d, eta, optimal_alphas(&MechanismConfig::new(eta, d, eps)?))))
        .collect()
}

fn sweep_eta_csv(rows: &[(u64, f64, OptimalSolution)]) -> String {
    csv_table(
        SWEEP_ETA_HEADER,
        rows.iter().map(|(d, eta, s)| {
            format!(
                "{},{d},{},{},{},{}",
                num(*eta),
                num(s.config.epsilon()),
                s.regime,
                num(s.delta_star),
                num(s.dp_delta)
            )
        }),
    )
}

fn cmd_sweep_eta(spec: &RunSpec) -> Outcome<Rendered> {
    let rows = sweep_eta_rows(spec.need_eps()?, spec.need_ds()?, &spec.grid_values())?;
    Ok(Rendered {
        csv: sweep_eta_csv(&rows),
        json: sweep_json(&rows),
    })
}

fn comparison_csv(rows: &[ComparisonRow]) -> String {
    csv_table(
        COMPARISON_HEADER,
        rows.iter().map(|r| {
            format!(
                "{},{},{},{},{}",
                num(r.epsilon),
                num(r.our_dp_delta),
                num(r.gaussian_delta),
                num(r.sigma2),
                r.regime
            )
        }),
    )
}

fn cmd_compare_gaussian(spec: &RunSpec) -> Outcome<Rendered> {
    let rows = compare_mechanisms(spec.need_eta()?, spec.need_single_d()?, &spec.grid_values())?;
    Ok(Rendered {
        csv: comparison_csv(&rows),
        json: serde_json::to_value(&rows)?,
    })
}

fn read_matrix(path: &Path) -> Outcome<MechanismMatrix> {
    let text = fs::read_to_string(path)?;
    let m: MechanismMatrix = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    // Re-validate through the checked constructor.
    Ok(MechanismMatrix::from_columns(m.d, m.first_count, m.y_min, m.columns)?)
}

fn cmd_verify(spec: &RunSpec) -> Outcome<(Rendered, Outcome)> {
    let extra: Vec<MechanismMatrix> = spec.matrix.iter().map(|p| read_matrix(p)).collect::<Outcome<_>>()?;
    let report = run_verification(spec.seed, spec.configs, &extra, spec.epsilon.unwrap_or(0.0));
    let mut rows = vec![
        format!("configs,{}", report.configs),
        format!("seed,{}", report.seed),
        format!("max_delta_gap,{}", num(report.max_delta_gap)),
        format!("max_alpha_gap,{}", num(report.max_alpha_gap)),
        format!("boundary_configs,{}", report.boundary_configs),
        format!("max_feasibility_violation,{}", num(report.max_feasibility_violation)),
        format!("sandwich_failures,{}", report.sandwich_failures),
        format!("example1_status,{}", serde_json::to_value(report.example1_status)?.as_str().unwrap_or("")),
        format!("example1_optimum,{}", num(report.example1_optimum)),
        format!("example1_columns_valid,{}", report.example1_columns_valid),
    ];
    for (i, (a, ok)) in report.extra_audits.iter().enumerate() {
        rows.push(format!("matrix{i}_singular_delta,{}", num(a.singular_delta)));
        rows.push(format!("matrix{i}_event_delta,{}", num(a.event_delta)));
        rows.push(format!("matrix{i}_bound_2d1,{}", num(a.bound_2d1)));
        rows.push(format!("matrix{i}_sandwich,{ok}"));
    }
    rows.push(format!("passed,{}", report.passed));
    let verdict = if report.passed { Ok(()) } else { Err(Failure::Verification) };
    Ok((
        Rendered {
            csv: csv_table("field,value", rows),
            json: serde_json::to_value(&report)?,
        },
        verdict,
    ))
}

fn cmd_sample(spec: &RunSpec, err: &mut dyn Write) -> Outcome<Rendered> {
    let d = spec.need_single_d()?;
    let config = MechanismConfig::new(spec.need_eta()?, d, spec.need_eps()?)?;
    let n = spec.n.unwrap_or(d);
    let report = empirical_audit(&config, n, spec.trials, spec.window, spec.seed)?;
    let sol = optimal_alphas(&config);
    let pmf = sol.noise_pmf();
    let analytic_in_range = sol.in_range_probability(spec.window);
    writeln!(
        err,
        "trials {}  tv {}  correct {} (analytic {})  in-range {} (analytic {})",
        report.trials,
        num(report.tv_distance),
        num(report.empirical_correct_rate),
        num(config.eta()),
        num(report.in_range_rate),
        num(analytic_in_range)
    )?;
    let rows = pmf.iter().map(|(z, p)| {
        let c = report.counts.get(&z).copied().unwrap_or(0);
        let e = report.empirical_mass.get(&z).copied().unwrap_or(0.0);
        format!("{z},{c},{},{}", num(e), num(p))
    });
    let csv = csv_table("offset,count,empirical_mass,analytic_mass", rows);
    let mut value = serde_json::to_value(&report)?;
    value["analytic_in_range"] = json!(analytic_in_range);
    value["analytic_correct_rate"] = json!(config.eta());
    Ok(Rendered { csv, json: value })
}

const FIG_EPS_RANGE: (f64, f64) = (0.5, 4.0);
const FIG_ETA_RANGE: (f64, f64) = (0.05, 0.95);
const FIG2_DS: [u64; 4] = [2, 4, 6, 8];
const FIG3_DS: [u64; 3] = [4, 6, 8];
const FIG3_EPS: [f64; 2] = [1.1, 2.2];

fn figure_grid(range: (f64, f64), points: Option<usize>, default: usize) -> Vec<f64> {
    GridSpec {
        start: range.0,
        stop: range.1,
        points: points.unwrap_or(default),
        scale: GridScale::Linear,
    }
    .values()
}

fn figure(fig: Figure, points: Option<usize>) -> Outcome<Rendered> {
    match fig {
        Figure::Fig1 => {
            let sol = optimal_alphas(&MechanismConfig::new(0.8, 6, 2.18)?);
            let ours = sol.noise_pmf();
            let gauss = DiscreteGaussianPmf::new(sol.variance)?;
            let d = sol.config.d() as i64;
            let rows: Vec<(i64, f64, f64)> = (-d..=d).map(|z| (z, ours.mass_at(z), gauss.mass(z))).collect();
            Ok(Rendered {
                csv: csv_table(
                    FIG1_HEADER,
                    rows.iter().map(|(z, o, g)| format!("{z},{},{}", num(*o), num(*g))),
                ),
                json: json!(rows
                    .iter()
                    .map(|(z, o, g)| json!({"z": z, "ours": o, "gaussian": g}))
                    .collect::<Vec<_>>()),
            })
        }
        Figure::Fig2 => {
            let rows = sweep_eps_rows(0.5, &FIG2_DS, &figure_grid(FIG_EPS_RANGE, points, 36))?;
            Ok(Rendered {
                csv: sweep_eps_csv(&rows),
                json: sweep_json(&rows),
            })
        }
        Figure::Fig3 => {
            let grid = figure_grid(FIG_ETA_RANGE, points, 19);
            let mut rows = Vec::new();
            for eps in FIG3_EPS {
                rows.extend(sweep_eta_rows(eps, &FIG3_DS, &grid)?);
            }
            Ok(Rendered {
                csv: sweep_eta_csv(&rows),
                json: sweep_json(&rows),
            })
        }
        Figure::Fig4 => {
            let rows = compare_mechanisms(0.5, 6, &figure_grid(FIG_EPS_RANGE, points, 36))?;
            Ok(Rendered {
                csv: comparison_csv(&rows),
                json: serde_json::to_value(&rows)?,
            })
        }
    }
}

fn figure_name(fig: Figure) -> &'static str {
    match fig {
        Figure::Fig1 => "fig1",
        Figure::Fig2 => "fig2",
        Figure::Fig3 => "fig3",
        Figure::Fig4 => "fig4",
    }
}

/// With `--out DIR` writes one file per figure; otherwise prints them in
/// order, each preceded by a `# figN` line.
fn cmd_figure_data(spec: &RunSpec, out: &mut dyn Write) -> Outcome {
    let figs: Vec<Figure> = match spec.figure {
        Some(f) => vec![f],
        None => vec![Figure::Fig1, Figure::Fig2, Figure::Fig3, Figure::Fig4],
    };
    let points = spec.figure_points;
    let rendered: Vec<(Figure, Rendered)> = figs
        .into_iter()
        .map(|f| figure(f, points).map(|r| (f, r)))
        .collect::<Outcome<_>>()?;
    let ext = match spec.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    match &spec.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for (f, r) in &rendered {
                let text = match spec.format {
                    Format::Csv => format!("{}{}", spec.provenance(), r.csv),
                    Format::Json => serde_json::to_string_pretty(&json!({"spec": spec, "result": r.json}))? + "\n",
                };
                fs::write(dir.join(format!("{}.{ext}", figure_name(*f))), text)?;
            }
        }
        None => match spec.format {
            Format::Csv => {
                out.write_all(spec.provenance().as_bytes())?;
                for (f, r) in &rendered {
                    writeln!(out, "# {}", figure_name(*f))?;
                    out.write_all(r.csv.as_bytes())?;
                }
            }
            Format::Json => {
                let mut result = serde_json::Map::new();
                for (f, r) in rendered {
                    result.insert(figure_name(f).into(), r.json);
                }
                let text = serde_json::to_string_pretty(&json!({"spec": spec, "result": result}))?;
                writeln!(out, "{text}")?;
            }
        },
    }
    Ok(())
}
