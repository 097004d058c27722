//! `pbit-osc`: simulate tick-random p-bit dynamics and predict the critical
//! synchrony threshold, emitting CSV.

mod settings;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pbit_osc::dynamics::{run, SimParams};
use pbit_osc::graph::build_couplings;
use pbit_osc::harness::{
    compare_from_sweep, csv_string, run_sweep_on, sensitivity_report, ComparisonRow, GraphSource, I0Mode,
};
use pbit_osc::observables::ObservableReport;
use pbit_osc::theory::boundary_curve;
use pbit_osc::{Error, ErrorClass, Graph};

use settings::{Options, Settings};

#[derive(Debug, Parser)]
#[command(name = "pbit-osc", version, about = "Period-2 oscillations in tick-random p-bit annealing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate graphs and print their size and temperature scale.
    Parse(Options),
    /// Run one trajectory and write its energy trace.
    Simulate(Options),
    /// Sweep the synchrony parameter over seeds.
    Sweep(Options),
    /// Theory threshold c*(I0) over an inverse-temperature grid.
    Predict(Options),
    /// Simulation versus theory thresholds, one row per graph.
    Compare(Options),
    /// Theory thresholds for several amplification factors R.
    Sensitivity(Options),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    Io(PathBuf, std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::InputData => 2,
                ErrorClass::Numerical => 3,
            },
            CliError::Io(..) => 2,
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e)),
    }
}

fn load(source: &GraphSource) -> Result<Graph, CliError> {
    Ok(source.load()?)
}

fn cmd_parse(s: &Settings) -> Result<(), CliError> {
    let mut text = String::from("graph,nodes,edges,weight_type,s_j,sigma_h_sq,i0_min,i0_max\n");
    for source in s.graph_sources()? {
        let g = load(&source)?;
        let j = build_couplings(&g);
        let (lo, hi) = match j.i0_range() {
            Ok((lo, hi)) => (lo.to_string(), hi.to_string()),
            Err(_) => ("undefined".into(), "undefined".into()),
        };
        text.push_str(&format!(
            "{},{},{},{},{},{},{lo},{hi}\n",
            g.name(),
            g.n_nodes(),
            g.edges().len(),
            g.weight_type(),
            j.s_j(),
            j.sigma_h_sq()
        ));
    }
    emit(s.out()?.as_deref(), &text)
}

fn cmd_simulate(s: &Settings) -> Result<(), CliError> {
    let g = load(&s.single_graph()?)?;
    let j = build_couplings(&g);
    let i0 = s.i0_mode()?.resolve(&j)?;
    let params = SimParams::new(i0, s.single_c()?, s.ticks()?, s.master_seed()?);
    let traj = run(&j, &params, None, g.name())?;
    emit(s.out()?.as_deref(), &traj.to_csv_string())?;
    if let Some(path) = &s.opts.spins {
        std::fs::write(path, traj.spin_dump()).map_err(|e| CliError::Io(path.clone(), e))?;
    }
    let burn_energy = s.opts.burn_in_energy.unwrap_or(params.ticks / 2);
    match ObservableReport::from_trajectory(&traj, &g, s.burn_in_c1()?, burn_energy) {
        Ok(r) => eprintln!(
            "{}: i0 = {i0}, c = {}, C(1) = {}, oscillatory = {}, final energy = {}, cut = {}",
            g.name(),
            params.c,
            r.c1,
            r.oscillatory,
            r.final_energy,
            r.cut
        ),
        Err(e) => eprintln!("{}: observables unavailable: {e}", g.name()),
    }
    Ok(())
}

fn cmd_sweep(s: &Settings) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for source in s.graph_sources()? {
        let g = load(&source)?;
        let sweep = run_sweep_on(&g, &s.sweep_config(source)?)?;
        rows.extend(sweep.rows);
    }
    emit(s.out()?.as_deref(), &csv_string(&rows))
}

fn cmd_predict(s: &Settings) -> Result<(), CliError> {
    let g = load(&s.single_graph()?)?;
    let j = build_couplings(&g);
    let params = s.theory_params()?;
    let grid = if s.opts.i0_max {
        vec![j.i0_max()?]
    } else if let I0Mode::Explicit(x) = s.i0_mode()? {
        vec![x]
    } else {
        let (lo, hi) = j.i0_range()?;
        let n = s.points()?;
        if n < 2 {
            return Err(CliError::Usage("--points must be at least 2".into()));
        }
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    };
    let mut buf = Vec::new();
    for (k, v) in s.variants()?.into_iter().enumerate() {
        let curve = boundary_curve(&j, &grid, &params, v)?;
        curve
            .write_csv_to(&mut buf, k == 0)
            .map_err(|e| CliError::Io(PathBuf::from("<csv>"), std::io::Error::other(e)))?;
    }
    emit(s.out()?.as_deref(), &String::from_utf8(buf).expect("utf-8 csv"))
}

fn cmd_compare(s: &Settings) -> Result<(), CliError> {
    let theory = s.theory_params()?;
    let mut rows: Vec<ComparisonRow> = Vec::new();
    for source in s.graph_sources()? {
        let g = load(&source)?;
        let j = build_couplings(&g);
        if j.s_j().is_nan() || j.s_j() <= 0.0 {
            return Err(Error::Degenerate(format!("{}: field scale s_J is zero", g.name())).into());
        }
        let sweep = run_sweep_on(&g, &s.sweep_config(source)?)?;
        let row = compare_from_sweep(&g, &sweep, &theory)?;
        if row.c_star_sim.is_none() {
            eprintln!("{}: simulation threshold unresolved on this grid", row.graph);
        }
        rows.push(row);
    }
    emit(s.out()?.as_deref(), &csv_string(&rows))
}

fn cmd_sensitivity(s: &Settings) -> Result<(), CliError> {
    let g = load(&s.single_graph()?)?;
    let j = build_couplings(&g);
    let i0 = s.i0_mode()?.resolve(&j)?;
    let report = sensitivity_report(&j, i0, &s.r_values()?, &s.theory_params()?)?;
    for (ra, rb, v) in &report.violations {
        eprintln!("warning: {v} threshold increases from R = {ra} to R = {rb}");
    }
    emit(s.out()?.as_deref(), &csv_string(&report.rows))
}

type Handler = fn(&Settings) -> Result<(), CliError>;

fn dispatch(command: Command) -> Result<(), CliError> {
    let (opts, f): (Options, Handler) = match command {
        Command::Parse(o) => (o, cmd_parse),
        Command::Simulate(o) => (o, cmd_simulate),
        Command::Sweep(o) => (o, cmd_sweep),
        Command::Predict(o) => (o, cmd_predict),
        Command::Compare(o) => (o, cmd_compare),
        Command::Sensitivity(o) => (o, cmd_sensitivity),
    };
    f(&Settings::load(opts)?)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
