//! Seeded c-sweeps, theory-vs-simulation comparison and CSV export.

mod config;

pub use config::{parse_key_values, KeyValues};

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::dynamics::{run, SimParams};
use crate::error::{Error, Result};
use crate::graph::{build_couplings, generate_toy, load_gset, CouplingMatrix, Graph, ToyKind};
use crate::observables::{detect_sim_threshold, ObservableReport, ThresholdEstimate};
use crate::theory::{critical_c_with_spectrum, CouplingSpectrum, TheoryParams, Threshold, Variant};

/// Where a sweep gets its graph.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    File(PathBuf),
    Toy { kind: ToyKind, seed: u64 },
}

impl GraphSource {
    pub fn load(&self) -> Result<Graph> {
        match self {
            GraphSource::File(path) => load_gset(path),
            GraphSource::Toy { kind, seed } => Ok(generate_toy(*kind, *seed)),
        }
    }
}

/// Evenly spaced, inclusive grid of `c` values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for CGrid {
    fn default() -> Self {
        CGrid {
            start: 1.0,
            stop: 5.0,
            step: 0.05,
        }
    }
}

impl CGrid {
    pub fn single(c: f64) -> Self {
        CGrid {
            start: c,
            stop: c,
            step: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start >= 1.0 && self.start.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "c grid must start at or above 1, got {}",
                self.start
            )));
        }
        if !(self.stop >= self.start && self.stop.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "c grid stop {} is below start {}",
                self.stop, self.start
            )));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "c grid step must be positive, got {}",
                self.step
            )));
        }
        Ok(())
    }

    /// Grid values `start + k step` up to `stop`, rounded to 1e-9 so that
    /// decimal steps land on their decimal values.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| ((self.start + k as f64 * self.step) * 1e9).round() / 1e9)
            .collect()
    }
}

impl FromStr for CGrid {
    type Err = Error;

    /// `START:STOP:STEP`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad number {t:?} in c grid {s:?}")))
        };
        match parts.as_slice() {
            [a, b, step] => {
                let grid = CGrid {
                    start: num(a)?,
                    stop: num(b)?,
                    step: num(step)?,
                };
                grid.validate()?;
                Ok(grid)
            }
            _ => Err(Error::InvalidParameter(format!(
                "c grid must be START:STOP:STEP, got {s:?}"
            ))),
        }
    }
}

/// Inverse temperature used by a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum I0Mode {
    /// `10 / s_J` of the graph.
    I0Max,
    Explicit(f64),
}

impl I0Mode {
    pub fn resolve(self, j: &CouplingMatrix) -> Result<f64> {
        match self {
            I0Mode::I0Max => j.i0_max(),
            I0Mode::Explicit(x) if x > 0.0 && x.is_finite() => Ok(x),
            I0Mode::Explicit(x) => Err(Error::InvalidParameter(format!("I0 must be positive, got {x}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub graph_source: GraphSource,
    pub c_grid: CGrid,
    pub i0_mode: I0Mode,
    pub ticks: usize,
    pub seeds: usize,
    pub master_seed: u64,
    pub burn_in_c1: usize,
    /// Defaults to `ticks / 2`.
    pub burn_in_energy: Option<usize>,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl SweepConfig {
    pub fn new(graph_source: GraphSource) -> Self {
        SweepConfig {
            graph_source,
            c_grid: CGrid::default(),
            i0_mode: I0Mode::I0Max,
            ticks: 40,
            seeds: 5,
            master_seed: 0,
            burn_in_c1: 0,
            burn_in_energy: None,
            jobs: None,
        }
    }

    pub fn burn_in_energy(&self) -> usize {
        self.burn_in_energy.unwrap_or(self.ticks / 2)
    }

    pub fn validate(&self) -> Result<()> {
        self.c_grid.validate()?;
        if self.seeds == 0 {
            return Err(Error::InvalidParameter("at least one seed is required".into()));
        }
        if self.ticks < self.burn_in_c1 + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} ticks leave no C(1) window after a burn-in of {}",
                self.ticks, self.burn_in_c1
            )));
        }
        if self.ticks < self.burn_in_energy() + 2 {
            return Err(Error::InvalidParameter(format!(
                "{} ticks leave no energy window after a burn-in of {}",
                self.ticks,
                self.burn_in_energy()
            )));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidParameter("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Replicate seed `sha256(master, name, c_index, replicate)`, first 8 bytes.
pub fn derive_seed(master_seed: u64, graph_name: &str, c_index: usize, replicate: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update((graph_name.len() as u64).to_le_bytes());
    h.update(graph_name.as_bytes());
    h.update((c_index as u64).to_le_bytes());
    h.update((replicate as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("32-byte digest"))
}

/// One `(c, seed)` run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub graph: String,
    pub c: f64,
    pub seed: u64,
    pub i0: f64,
    pub c1: f64,
    pub final_energy: f64,
    pub cut: f64,
    /// `cut` over the largest cut in the sweep.
    pub cut_normalized: f64,
    pub second_diff: f64,
    pub oscillatory: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub graph: String,
    pub i0: f64,
    /// Ordered by grid index, then replicate.
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn threshold(&self) -> Result<ThresholdEstimate> {
        let rows: Vec<(f64, u64, f64)> = self.rows.iter().map(|r| (r.c, r.seed, r.c1)).collect();
        detect_sim_threshold(&rows)
    }

    /// Seed-averaged `C(1)` at grid value `c`.
    pub fn mean_c1_at(&self, c: f64) -> Option<f64> {
        let vals: Vec<f64> = self.rows.iter().filter(|r| r.c == c).map(|r| r.c1).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Loads the configured graph and sweeps it.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    let graph = cfg.graph_source.load()?;
    run_sweep_on(&graph, cfg)
}

/// Runs every `(c, replicate)` pair of the configuration on `graph`.
pub fn run_sweep_on(graph: &Graph, cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let j = build_couplings(graph);
    let i0 = cfg.i0_mode.resolve(&j)?;
    let grid = cfg.c_grid.values();
    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|ci| (0..cfg.seeds).map(move |r| (ci, r)))
        .collect();
    let name = graph.name();
    log::info!(
        "sweeping {name}: {} c values x {} seeds at I0 = {i0}",
        grid.len(),
        cfg.seeds
    );

    let results: Result<Vec<SweepRow>> = with_pool(cfg.jobs, || {
        tasks
            .par_iter()
            .map(|&(ci, rep)| {
                let seed = derive_seed(cfg.master_seed, name, ci, rep);
                let params = SimParams::new(i0, grid[ci], cfg.ticks, seed);
                let traj = run(&j, &params, None, name)?;
                let obs = ObservableReport::from_trajectory(&traj, graph, cfg.burn_in_c1, cfg.burn_in_energy())?;
                Ok(SweepRow {
                    graph: name.to_string(),
                    c: grid[ci],
                    seed,
                    i0,
                    c1: obs.c1,
                    final_energy: obs.final_energy,
                    cut: obs.cut,
                    cut_normalized: 0.0,
                    second_diff: obs.second_diff_norm,
                    oscillatory: obs.oscillatory,
                })
            })
            .collect()
    })?;
    let mut rows = results?;
    let best = rows.iter().map(|r| r.cut).fold(f64::NEG_INFINITY, f64::max);
    for r in &mut rows {
        r.cut_normalized = if best > 0.0 { r.cut / best } else { 0.0 };
    }
    Ok(SweepResult {
        graph: name.to_string(),
        i0,
        rows,
    })
}

/// Simulation and theory thresholds for one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub graph: String,
    pub i0_max_sim: f64,
    /// `None` when no grid point reaches `C(1) >= 0.5`.
    pub c_star_sim: Option<f64>,
    pub c_star_non_ipr: Threshold,
    pub c_star_ipr: Threshold,
}

/// Theory thresholds of both variants at `i0`.
pub fn theory_thresholds(j: &CouplingMatrix, i0: f64, theory: &TheoryParams) -> Result<(Threshold, Threshold)> {
    let params = theory.with_i0(i0);
    params.validate()?;
    if j.s_j().is_nan() || j.s_j() <= 0.0 {
        return Err(Error::Degenerate("field scale s_J is zero".into()));
    }
    let spectrum = CouplingSpectrum::compute(j, params.n_modes_k.min(j.n()), params.gamma)?;
    let eval = |v| critical_c_with_spectrum(j, &spectrum, &params, v).c_star;
    Ok((eval(Variant::NonIpr), eval(Variant::IprCorrected)))
}

/// Assembles a comparison row from a finished sweep.
pub fn compare_from_sweep(graph: &Graph, sweep: &SweepResult, theory: &TheoryParams) -> Result<ComparisonRow> {
    let j = build_couplings(graph);
    let (non_ipr, ipr) = theory_thresholds(&j, sweep.i0, theory)?;
    let estimate = sweep.threshold()?;
    if estimate.c_star.is_none() {
        log::warn!("{}: simulation threshold unresolved on this grid", graph.name());
    }
    Ok(ComparisonRow {
        graph: graph.name().to_string(),
        i0_max_sim: sweep.i0,
        c_star_sim: estimate.c_star,
        c_star_non_ipr: non_ipr,
        c_star_ipr: ipr,
    })
}

/// Sweeps the configured graph and compares with theory at the sweep's `I0`.
pub fn compare(cfg: &SweepConfig, theory: &TheoryParams) -> Result<ComparisonRow> {
    let graph = cfg.graph_source.load()?;
    let j = build_couplings(&graph);
    if j.s_j().is_nan() || j.s_j() <= 0.0 {
        return Err(Error::Degenerate(format!("{}: field scale s_J is zero", graph.name())));
    }
    let sweep = run_sweep_on(&graph, cfg)?;
    compare_from_sweep(&graph, &sweep, theory)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub r: f64,
    pub c_star_non_ipr: Threshold,
    pub c_star_ipr: Threshold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub i0: f64,
    /// In the order of the requested `R` values.
    pub rows: Vec<SensitivityRow>,
    /// `(R_a, R_b, variant)` with `R_a < R_b` but `c*(R_a) < c*(R_b)`.
    pub violations: Vec<(f64, f64, Variant)>,
}

impl SensitivityReport {
    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `c*` of both variants for each `R`, with a monotonicity check.
pub fn sensitivity_report(
    j: &CouplingMatrix,
    i0: f64,
    r_values: &[f64],
    theory: &TheoryParams,
) -> Result<SensitivityReport> {
    if r_values.is_empty() {
        return Err(Error::EmptyInput("no R values"));
    }
    let base = theory.with_i0(i0);
    let mut rows = Vec::with_capacity(r_values.len());
    let spectrum = {
        let mut probe = base.clone();
        probe.threshold_r = r_values[0];
        probe.validate()?;
        if j.s_j().is_nan() || j.s_j() <= 0.0 {
            return Err(Error::Degenerate("field scale s_J is zero".into()));
        }
        CouplingSpectrum::compute(j, base.n_modes_k.min(j.n()), base.gamma)?
    };
    for &r in r_values {
        let params = TheoryParams {
            threshold_r: r,
            ..base.clone()
        };
        params.validate()?;
        let eval = |v| critical_c_with_spectrum(j, &spectrum, &params, v).c_star;
        rows.push(SensitivityRow {
            r,
            c_star_non_ipr: eval(Variant::NonIpr),
            c_star_ipr: eval(Variant::IprCorrected),
        });
    }
    let mut sorted: Vec<&SensitivityRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.r.total_cmp(&b.r));
    let mut violations = Vec::new();
    for pair in sorted.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.c_star_non_ipr.as_f64() < b.c_star_non_ipr.as_f64() {
            violations.push((a.r, b.r, Variant::NonIpr));
        }
        if a.c_star_ipr.as_f64() < b.c_star_ipr.as_f64() {
            violations.push((a.r, b.r, Variant::IprCorrected));
        }
    }
    for (ra, rb, v) in &violations {
        log::warn!("{v}: c* increases from R = {ra} to R = {rb}");
    }
    Ok(SensitivityReport { i0, rows, violations })
}

/// A row type with a fixed CSV layout.
pub trait CsvRow {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

struct Unresolved(Option<f64>);

impl fmt::Display for Unresolved {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("unresolved"),
        }
    }
}

impl CsvRow for SweepRow {
    const HEADER: &'static [&'static str] = &[
        "graph",
        "c",
        "seed",
        "i0",
        "c1",
        "final_energy",
        "cut",
        "cut_normalized",
        "second_diff",
        "oscillatory",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.graph.clone(),
            self.c.to_string(),
            self.seed.to_string(),
            self.i0.to_string(),
            self.c1.to_string(),
            self.final_energy.to_string(),
            self.cut.to_string(),
            self.cut_normalized.to_string(),
            self.second_diff.to_string(),
            self.oscillatory.to_string(),
        ]
    }
}

impl CsvRow for ComparisonRow {
    const HEADER: &'static [&'static str] = &["graph", "i0_max", "c_star_sim", "c_star_non_ipr", "c_star_ipr"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.graph.clone(),
            self.i0_max_sim.to_string(),
            Unresolved(self.c_star_sim).to_string(),
            self.c_star_non_ipr.to_string(),
            self.c_star_ipr.to_string(),
        ]
    }
}

impl CsvRow for SensitivityRow {
    const HEADER: &'static [&'static str] = &["R", "c_star_non_ipr", "c_star_ipr"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.r.to_string(),
            self.c_star_non_ipr.to_string(),
            self.c_star_ipr.to_string(),
        ]
    }
}

/// Header plus rows to any writer.
pub fn write_csv_to<R: CsvRow, W: std::io::Write>(rows: &[R], w: W) -> std::result::Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(R::HEADER)?;
    for r in rows {
        out.write_record(r.fields())?;
    }
    out.flush()?;
    Ok(())
}

pub fn csv_string<R: CsvRow>(rows: &[R]) -> String {
    let mut buf = Vec::new();
    write_csv_to(rows, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8 csv")
}

/// Writes header and rows to `path`.
pub fn emit_csv<R: CsvRow>(rows: &[R], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv_to(rows, file).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_cfg(kind: ToyKind) -> SweepConfig {
        SweepConfig::new(GraphSource::Toy { kind, seed: 0 })
    }

    #[test]
    fn default_grid() {
        let v = CGrid::default().values();
        assert_eq!(v.len(), 81);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[1], 1.05);
        assert_eq!(v[21], 2.05);
        assert_eq!(v[80], 5.0);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn grid_parsing() {
        let g: CGrid = "1:2:0.5".parse().unwrap();
        assert_eq!(g.values(), vec![1.0, 1.5, 2.0]);
        assert_eq!(CGrid::single(3.0).values(), vec![3.0]);
        assert!("0.5:2:0.1".parse::<CGrid>().is_err());
        assert!("2:1:0.1".parse::<CGrid>().is_err());
        assert!("1:2:0".parse::<CGrid>().is_err());
        assert!("1:2".parse::<CGrid>().is_err());
        assert!("1:x:0.1".parse::<CGrid>().is_err());
    }

    #[test]
    fn seeds_depend_on_every_input() {
        let base = derive_seed(7, "G1", 3, 2);
        assert_eq!(base, derive_seed(7, "G1", 3, 2));
        assert_ne!(base, derive_seed(8, "G1", 3, 2));
        assert_ne!(base, derive_seed(7, "G2", 3, 2));
        assert_ne!(base, derive_seed(7, "G1", 4, 2));
        assert_ne!(base, derive_seed(7, "G1", 3, 3));
    }

    #[test]
    fn default_sweep_size() {
        let res = run_sweep(&toy_cfg(ToyKind::Toy1)).unwrap();
        assert_eq!(res.rows.len(), 405);
        assert!((res.i0 - 11.547005383792516).abs() < 1e-12);
        let best = res.rows.iter().map(|r| r.cut_normalized).fold(0.0, f64::max);
        assert_eq!(best, 1.0);
    }

    #[test]
    fn single_point_sweep() {
        let mut cfg = toy_cfg(ToyKind::Toy3);
        cfg.c_grid = CGrid::single(1.0);
        cfg.seeds = 1;
        assert_eq!(run_sweep(&cfg).unwrap().rows.len(), 1);
    }

    #[test]
    fn sweep_is_deterministic_across_pool_sizes() {
        let mut cfg = toy_cfg(ToyKind::Toy6);
        cfg.c_grid = "1:2:0.25".parse().unwrap();
        cfg.jobs = Some(1);
        let a = csv_string(&run_sweep(&cfg).unwrap().rows);
        cfg.jobs = Some(4);
        let b = csv_string(&run_sweep(&cfg).unwrap().rows);
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_validation() {
        let mut cfg = toy_cfg(ToyKind::Toy1);
        cfg.seeds = 0;
        assert!(matches!(run_sweep(&cfg), Err(Error::InvalidParameter(_))));
        let mut cfg = toy_cfg(ToyKind::Toy1);
        cfg.ticks = 2;
        assert!(run_sweep(&cfg).is_err());
    }

    #[test]
    fn csv_headers() {
        assert_eq!(
            csv_string::<SweepRow>(&[]),
            "graph,c,seed,i0,c1,final_energy,cut,cut_normalized,second_diff,oscillatory\n"
        );
        assert_eq!(
            csv_string::<ComparisonRow>(&[]),
            "graph,i0_max,c_star_sim,c_star_non_ipr,c_star_ipr\n"
        );
    }

    #[test]
    fn comparison_on_toy2() {
        let mut cfg = toy_cfg(ToyKind::Toy2);
        cfg.c_grid = "1:2:0.5".parse().unwrap();
        let row = compare(&cfg, &TheoryParams::default()).unwrap();
        assert_eq!(row.c_star_non_ipr, Threshold::Critical(1.0));
        assert_eq!(row.c_star_ipr, Threshold::Critical(1.0));
        assert!((row.i0_max_sim - 40.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn comparison_rejects_zero_couplings() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.txt");
        std::fs::write(&path, "3 0\n").unwrap();
        let cfg = SweepConfig::new(GraphSource::File(path));
        assert!(matches!(compare(&cfg, &TheoryParams::default()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn sensitivity_consistency() {
        let j = build_couplings(&generate_toy(ToyKind::Toy6, 0));
        let theory = TheoryParams::default();
        let i0 = 3.0;
        let report = sensitivity_report(&j, i0, &[5.0, 10.0, 20.0], &theory).unwrap();
        assert!(report.is_monotone());
        let (a, b) = theory_thresholds(&j, i0, &theory).unwrap();
        assert_eq!(report.rows[1].c_star_non_ipr, a);
        assert_eq!(report.rows[1].c_star_ipr, b);
        assert!(sensitivity_report(&j, i0, &[], &theory).is_err());
        assert!(sensitivity_report(&j, i0, &[0.5], &theory).is_err());
    }

    #[test]
    fn emit_writes_header_only_for_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        emit_csv::<SensitivityRow>(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "R,c_star_non_ipr,c_star_ipr\n");
        let err = emit_csv::<SensitivityRow>(&[], &dir.path().join("no/such/dir.csv")).unwrap_err();
        assert!(err.to_string().contains("dir.csv"));
    }
}
