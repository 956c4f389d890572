//! `igradeloc` command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 invalid input (flags, scenario
//! file, infeasible plan), 4 runtime failure (I/O, empty results).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use igradeloc::engine::{run_replicates, run_scenario};
use igradeloc::geometry::{connectivity_graph, grid_positions, GridConfig, Point2D};
use igradeloc::planner::{
    derive_timing, fine_cnt_limit_bound, min_ntl_range_bound, monte_carlo_analytical_mae,
    region_area_fraction, theoretical_mae, ModelWarning, RangeBound, TimingPlan,
};
use igradeloc::report::{
    pooled_metrics, require_sweep_types, simulation_report, sweep_report, write_sweep_csv,
    write_trace_csv, SimulationReport, REPORT_SCHEMA_VERSION,
};
use igradeloc::scenario::{paper_defaults_file, ScenarioFile};
use igradeloc::Error;
use serde::Serialize;

const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser)]
#[command(name = "igradeloc", version, about = "Graded-precision localization planner and simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive deployment parameters for a cell side and walker speed.
    Plan(PlanArgs),
    /// Run one scenario and write its trace and per-NTL report.
    Simulate(SimulateArgs),
    /// Compare the analytical coarse error with Monte Carlo and simulation.
    VerifyTheory(VerifyArgs),
    /// Run paired replicates of all five NTL types and tabulate them.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct PlanArgs {
    /// Cell side in meters.
    #[arg(long = "L")]
    cell_side: f64,
    /// Maximum walker speed in m/s.
    #[arg(long = "S", default_value_t = 1.0)]
    speed: f64,
    /// Target granularity p/P.
    #[arg(long = "G", default_value_t = 0.1)]
    granularity: f64,
    /// Beacon threshold ratio.
    #[arg(long = "T", default_value_t = 0.9)]
    threshold: f64,
    /// Grid rows and columns for the connectivity check.
    #[arg(long, default_value_t = 5)]
    grid: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory.
    #[arg(long, env = "IGRADELOC_OUT_DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    scenario: PathBuf,
    /// Overrides the scenario's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// NTL against which fine-grained overhead is reported.
    #[arg(long, default_value = "FG-NTL")]
    baseline: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Cell sides in meters, comma separated.
    #[arg(long = "L", value_delimiter = ',', required = true)]
    cell_side: Vec<f64>,
    /// Radio ranges matching `--L`; defaults to L·√5/2.
    #[arg(long = "R", value_delimiter = ',')]
    range: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Replicates of the coarse-grained simulation per row; 0 skips it.
    #[arg(long, default_value_t = 4)]
    sim_replicates: usize,
    /// Scenario supplying the reception model and walk; the shipped defaults if omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    scenario: PathBuf,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[command(flatten)]
    output: OutputArgs,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_)
            | Error::Domain(_)
            | Error::Planning(_)
            | Error::Schema(_)
            | Error::FineUnavailable { .. } => EXIT_VALIDATION,
            Error::Contract(_) | Error::EmptyTrace(_) | Error::UndefinedOverhead | Error::Io(_) => {
                EXIT_RUNTIME
            }
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            error,
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        error: anyhow::anyhow!(msg.into()),
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => plan(a),
        Command::Simulate(a) => simulate(a),
        Command::VerifyTheory(a) => verify_theory(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

#[derive(Serialize)]
struct PlanReport {
    schema_version: u32,
    cell_side_m: f64,
    range: RangeBound,
    timing: TimingPlan,
    fine_cnt_limit_bound: Option<u32>,
    theoretical_mae_m: f64,
    region_area_fraction: f64,
    grid: usize,
    connected: bool,
    hops_to_gateway_max: Option<u32>,
}

fn plan(a: PlanArgs) -> CmdResult {
    let range = min_ntl_range_bound(a.cell_side)?;
    let timing = derive_timing(a.cell_side, a.speed, a.granularity, a.threshold)?;
    let bound = fine_cnt_limit_bound(a.cell_side / 2.0, timing.centroid_interval_s, a.speed).ok();
    let mae = theoretical_mae(a.cell_side, range.raw_m)?.mae_m;
    let fraction = region_area_fraction(a.cell_side, range.raw_m)?;
    let grid = GridConfig::new(a.grid, a.grid, a.cell_side, Point2D::ORIGIN)?;
    let conn = connectivity_graph(&grid_positions(&grid)?, range.rounded_m, 0)?;
    let report = PlanReport {
        schema_version: REPORT_SCHEMA_VERSION,
        cell_side_m: a.cell_side,
        range,
        timing,
        fine_cnt_limit_bound: bound,
        theoretical_mae_m: mae,
        region_area_fraction: fraction,
        grid: a.grid,
        connected: conn.connected,
        hops_to_gateway_max: conn.hops.iter().flatten().copied().max(),
    };
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report).context("serializing plan")?);
        return Ok(());
    }
    let t = &report.timing;
    let mut out = String::new();
    let _ = writeln!(out, "cell side            {:.2} m", a.cell_side);
    let _ = writeln!(out, "min NTL range        {:.4} m -> {:.0} m", range.raw_m, range.rounded_m);
    let _ = writeln!(
        out,
        "centroid interval P  {:.2} s -> {} s",
        t.centroid_interval_raw_s, t.centroid_interval_s
    );
    let _ = writeln!(out, "beacon interval p    {} s", t.beacon_interval_s);
    let _ = writeln!(out, "maxBeacons           {}", t.max_beacons);
    let _ = writeln!(out, "required count       {}", t.required_count());
    match bound {
        Some(b) => {
            let _ = writeln!(out, "fineCntLimit bound   {b}");
        }
        None => {
            let _ = writeln!(out, "fineCntLimit bound   none (2*r1/(P*S) < 1)");
        }
    }
    let _ = writeln!(out, "theoretical MAE      {:.1} m ({:.4} L)", mae, mae / a.cell_side);
    let _ = writeln!(out, "region area fraction {fraction:.4}");
    let _ = writeln!(
        out,
        "{0}x{0} grid           {1}",
        a.grid,
        if conn.connected { "connected" } else { "not connected" }
    );
    print!("{out}");
    Ok(())
}

fn load(path: &Path, seed: Option<u64>) -> Result<ScenarioFile, Failure> {
    let mut file = ScenarioFile::load(path)?;
    if let Some(seed) = seed {
        file.master_seed = seed;
    }
    Ok(file)
}

fn scenario_name(file: &ScenarioFile, path: &Path) -> String {
    file.name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into())
    })
}

fn create_out_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
        .map_err(Into::into)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).context("serializing report")?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn print_metrics(report: &SimulationReport) {
    println!(
        "{:<20} {:>9} {:>9} {:>9} {:>10} {:>6}",
        "ntl", "samples", "mae_m", "rmse_m", "within10m", "fgl"
    );
    for r in &report.reports {
        println!(
            "{:<20} {:>9} {:>9.3} {:>9.3} {:>10.4} {:>6}",
            r.label,
            r.n_samples,
            r.mae,
            r.rmse,
            r.within_10m(),
            r.fgl_count
        );
    }
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let file = load(&a.scenario, a.seed)?;
    let name = scenario_name(&file, &a.scenario);
    let scenario = file.to_scenario()?;
    let trace = run_scenario(&scenario)?;
    let report = simulation_report(&trace, &name, Some(&a.baseline))?;

    let dir = &a.output.out;
    create_out_dir(dir)?;
    let csv_path = dir.join("trace.csv");
    let f = fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    write_trace_csv(&trace, std::io::BufWriter::new(f))?;
    write_json(&dir.join("report.json"), &report)?;

    print_metrics(&report);
    println!("wrote {} and {}", csv_path.display(), dir.join("report.json").display());
    Ok(())
}

#[derive(Serialize)]
struct TheoryRow {
    cell_side_m: f64,
    range_m: f64,
    theory_mae_m: f64,
    theory_mae_over_l: f64,
    monte_carlo_mae_m: f64,
    monte_carlo_delta: f64,
    simulated_cg_mae_m: Option<f64>,
    simulated_delta: Option<f64>,
    warning: Option<ModelWarning>,
}

#[derive(Serialize)]
struct TheoryReport {
    schema_version: u32,
    samples: usize,
    seed: u64,
    sim_replicates: usize,
    rows: Vec<TheoryRow>,
}

fn verify_theory(a: VerifyArgs) -> CmdResult {
    if a.samples < 100_000 {
        return Err(usage("--samples must be at least 100000"));
    }
    let ranges: Vec<f64> = match a.range.len() {
        0 => a.cell_side.iter().map(|l| l * 5f64.sqrt() / 2.0).collect(),
        n if n == a.cell_side.len() => a.range.clone(),
        _ => return Err(usage("--R needs one value per --L value")),
    };
    let base = match &a.scenario {
        Some(p) => ScenarioFile::load(p)?,
        None => paper_defaults_file()?,
    };

    let mut rows = Vec::new();
    for (&l, &r) in a.cell_side.iter().zip(&ranges) {
        let theory = theoretical_mae(l, r)?;
        let mc = monte_carlo_analytical_mae(l, r, a.samples, a.seed)?;
        let simulated = if a.sim_replicates > 0 {
            let mut file = base.with_geometry(l, r).coarse_only();
            file.master_seed = a.seed;
            let scenario = file.to_scenario()?;
            let label = scenario
                .ntls
                .first()
                .map(|n| n.label.clone())
                .ok_or_else(|| Error::Config("scenario has no coarse-grained NTL".into()))?;
            let traces = run_replicates(&scenario, a.sim_replicates)?;
            Some(pooled_metrics(&traces, &label)?.mae)
        } else {
            None
        };
        rows.push(TheoryRow {
            cell_side_m: l,
            range_m: r,
            theory_mae_m: theory.mae_m,
            theory_mae_over_l: theory.mae_m / l,
            monte_carlo_mae_m: mc,
            monte_carlo_delta: (mc - theory.mae_m) / theory.mae_m,
            simulated_cg_mae_m: simulated,
            simulated_delta: simulated.map(|s| (s - theory.mae_m) / theory.mae_m),
            warning: theory.warning,
        });
    }
    let report = TheoryReport {
        schema_version: REPORT_SCHEMA_VERSION,
        samples: a.samples,
        seed: a.seed,
        sim_replicates: a.sim_replicates,
        rows,
    };
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report).context("serializing report")?);
        return Ok(());
    }
    println!(
        "{:>8} {:>9} {:>10} {:>7} {:>10} {:>8} {:>10} {:>8}",
        "L_m", "R_m", "theory_m", "/L", "mc_m", "mc_d", "sim_cg_m", "sim_d"
    );
    for r in &report.rows {
        let opt = |v: Option<f64>, prec: usize| v.map_or("-".to_string(), |v| format!("{v:.prec$}"));
        println!(
            "{:>8.2} {:>9.4} {:>10.4} {:>7.4} {:>10.4} {:>+8.4} {:>10} {:>8}",
            r.cell_side_m,
            r.range_m,
            r.theory_mae_m,
            r.theory_mae_over_l,
            r.monte_carlo_mae_m,
            r.monte_carlo_delta,
            opt(r.simulated_cg_mae_m, 4),
            opt(r.simulated_delta, 4),
        );
        if r.warning.is_some() {
            println!("         warning: range exceeds L*sqrt(5)/2; corner regions outgrow the model");
        }
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> CmdResult {
    if a.replicates == 0 {
        return Err(usage("--replicates must be at least 1"));
    }
    let file = load(&a.scenario, a.seed)?;
    let name = scenario_name(&file, &a.scenario);
    let labels: Vec<String> = file.ntl.iter().map(|n| n.label.clone()).collect();
    require_sweep_types(&labels)?;
    let scenario = file.to_scenario()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .context("starting worker pool")?;
    let traces = pool.install(|| run_replicates(&scenario, a.replicates))?;
    let report = sweep_report(&traces, &name, scenario.master_seed)?;

    let dir = &a.output.out;
    create_out_dir(dir)?;
    let csv_path = dir.join("sweep.csv");
    let f = fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    write_sweep_csv(&report, std::io::BufWriter::new(f))?;
    write_json(&dir.join("sweep.json"), &report)?;

    println!(
        "{:<20} {:>9} {:>9} {:>10} {:>8}",
        "ntl", "mae_m", "rmse_m", "within10m", "fgl"
    );
    for row in &report.rows {
        let r = &row.pooled;
        println!(
            "{:<20} {:>9.3} {:>9.3} {:>10.4} {:>8}",
            r.label,
            r.mae,
            r.rmse,
            r.within_10m(),
            r.fgl_count
        );
    }
    if let Some(o) = report.improved_vs_fg_overhead {
        println!("FG-NTL-Improved overhead vs FG-NTL: {:.2}%", 100.0 * o);
    }
    println!("wrote {} and {}", csv_path.display(), dir.join("sweep.json").display());
    Ok(())
}
