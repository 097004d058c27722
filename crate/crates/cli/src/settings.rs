//! Command-line flags merged with an optional key-value config file.

use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use pbit_osc::harness::{parse_key_values, CGrid, GraphSource, I0Mode, KeyValues, SweepConfig};
use pbit_osc::theory::{TheoryParams, Variant};
use pbit_osc::ToyKind;

use crate::CliError;

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// G-set graph file (repeatable).
    #[arg(long = "graph", value_name = "PATH")]
    pub graphs: Vec<PathBuf>,
    /// Built-in graph toy1..toy7 (repeatable).
    #[arg(long = "toy", value_name = "KIND")]
    pub toys: Vec<String>,
    /// Seed for the random toy graphs.
    #[arg(long, value_name = "S")]
    pub toy_seed: Option<u64>,
    /// Inverse temperature.
    #[arg(long, value_name = "X", conflicts_with = "i0_max")]
    pub i0: Option<f64>,
    /// Use the graph's largest inverse temperature 10/s_J (default).
    #[arg(long)]
    pub i0_max: bool,
    /// Single synchrony parameter.
    #[arg(long = "c", value_name = "X", conflicts_with = "c_grid")]
    pub c: Option<f64>,
    /// Synchrony grid START:STOP:STEP.
    #[arg(long, value_name = "A:B:STEP")]
    pub c_grid: Option<String>,
    #[arg(long, value_name = "N")]
    pub ticks: Option<usize>,
    /// Replicates per grid point.
    #[arg(long, value_name = "K")]
    pub seeds: Option<usize>,
    /// Master seed.
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Required amplification factor.
    #[arg(long = "R", value_name = "X")]
    pub r: Option<f64>,
    /// Observation horizon in ticks.
    #[arg(long = "T", value_name = "N")]
    pub t: Option<u32>,
    /// IPR exponent of the mode score.
    #[arg(long, value_name = "X")]
    pub gamma: Option<f64>,
    /// Number of low-lying modes inspected.
    #[arg(long, value_name = "K")]
    pub modes: Option<usize>,
    /// non-ipr or ipr; both when omitted.
    #[arg(long, value_name = "V")]
    pub variant: Option<String>,
    /// Worker threads.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Key-value config file; flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Comma-separated R values for `sensitivity`.
    #[arg(long, value_name = "LIST")]
    pub r_values: Option<String>,
    /// Number of I0 grid points for `predict`.
    #[arg(long, value_name = "N")]
    pub points: Option<usize>,
    /// Also write a run-length spin dump (`simulate`).
    #[arg(long, value_name = "PATH")]
    pub spins: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub burn_in_c1: Option<usize>,
    #[arg(long, value_name = "N")]
    pub burn_in_energy: Option<usize>,
}

pub struct Settings {
    pub opts: Options,
    file: KeyValues,
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.parse()
        .map_err(|_| CliError::Usage(format!("invalid value {raw:?} for {key}")))
}

impl Settings {
    pub fn load(opts: Options) -> Result<Self, CliError> {
        let file = match &opts.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.clone(), e))?;
                parse_key_values(&text)?
            }
            None => KeyValues::new(),
        };
        const KNOWN: &[&str] = &[
            "graph",
            "toy",
            "toy_seed",
            "i0",
            "c",
            "c_grid",
            "ticks",
            "seeds",
            "seed",
            "r",
            "t",
            "gamma",
            "modes",
            "variant",
            "jobs",
            "out",
            "r_values",
            "points",
            "burn_in_c1",
            "burn_in_energy",
        ];
        if let Some(k) = file.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(CliError::Usage(format!("unknown config key {k:?}")));
        }
        Ok(Settings { opts, file })
    }

    /// Flag value, else config value, else `None`.
    fn pick<T: FromStr + Clone>(&self, flag: &Option<T>, key: &str) -> Result<Option<T>, CliError> {
        match (flag, self.file.get(key)) {
            (Some(v), _) => Ok(Some(v.clone())),
            (None, Some(raw)) => parse_value(key, raw).map(Some),
            (None, None) => Ok(None),
        }
    }

    fn list(&self, flag: &[String], key: &str) -> Vec<String> {
        if !flag.is_empty() {
            return flag.to_vec();
        }
        self.file
            .get(key)
            .map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
            .unwrap_or_default()
    }

    pub fn graph_sources(&self) -> Result<Vec<GraphSource>, CliError> {
        let toy_seed = self.pick(&self.opts.toy_seed, "toy_seed")?.unwrap_or(0);
        let flag_paths: Vec<String> = self.opts.graphs.iter().map(|p| p.display().to_string()).collect();
        let mut sources: Vec<GraphSource> = self
            .list(&flag_paths, "graph")
            .into_iter()
            .map(|p| GraphSource::File(PathBuf::from(p)))
            .collect();
        for kind in self.list(&self.opts.toys, "toy") {
            sources.push(GraphSource::Toy {
                kind: kind.parse::<ToyKind>()?,
                seed: toy_seed,
            });
        }
        if sources.is_empty() {
            return Err(CliError::Usage("no graph given; use --graph PATH or --toy KIND".into()));
        }
        Ok(sources)
    }

    pub fn single_graph(&self) -> Result<GraphSource, CliError> {
        let mut sources = self.graph_sources()?;
        if sources.len() > 1 {
            return Err(CliError::Usage("this command takes exactly one graph".into()));
        }
        Ok(sources.remove(0))
    }

    pub fn i0_mode(&self) -> Result<I0Mode, CliError> {
        if self.opts.i0_max {
            return Ok(I0Mode::I0Max);
        }
        if let Some(x) = self.opts.i0 {
            return Ok(I0Mode::Explicit(x));
        }
        match self.file.get("i0").map(String::as_str) {
            None | Some("max") | Some("i0_max") => Ok(I0Mode::I0Max),
            Some(raw) => parse_value("i0", raw).map(I0Mode::Explicit),
        }
    }

    pub fn c_grid(&self) -> Result<CGrid, CliError> {
        if let Some(c) = self.pick(&self.opts.c, "c")? {
            if self.opts.c_grid.is_none() {
                return Ok(CGrid::single(c));
            }
        }
        match self.pick(&self.opts.c_grid, "c_grid")? {
            Some(g) => Ok(g.parse()?),
            None => Ok(CGrid::default()),
        }
    }

    pub fn single_c(&self) -> Result<f64, CliError> {
        Ok(self.pick(&self.opts.c, "c")?.unwrap_or(1.0))
    }

    pub fn ticks(&self) -> Result<usize, CliError> {
        Ok(self.pick(&self.opts.ticks, "ticks")?.unwrap_or(40))
    }

    pub fn master_seed(&self) -> Result<u64, CliError> {
        Ok(self.pick(&self.opts.seed, "seed")?.unwrap_or(0))
    }

    pub fn jobs(&self) -> Result<Option<usize>, CliError> {
        self.pick(&self.opts.jobs, "jobs")
    }

    pub fn out(&self) -> Result<Option<PathBuf>, CliError> {
        self.pick(&self.opts.out, "out")
    }

    pub fn points(&self) -> Result<usize, CliError> {
        Ok(self.pick(&self.opts.points, "points")?.unwrap_or(50))
    }

    pub fn burn_in_c1(&self) -> Result<usize, CliError> {
        Ok(self.pick(&self.opts.burn_in_c1, "burn_in_c1")?.unwrap_or(0))
    }

    pub fn sweep_config(&self, source: GraphSource) -> Result<SweepConfig, CliError> {
        let mut cfg = SweepConfig::new(source);
        cfg.c_grid = self.c_grid()?;
        cfg.i0_mode = self.i0_mode()?;
        cfg.ticks = self.ticks()?;
        cfg.seeds = self.pick(&self.opts.seeds, "seeds")?.unwrap_or(5);
        cfg.master_seed = self.master_seed()?;
        cfg.burn_in_c1 = self.burn_in_c1()?;
        cfg.burn_in_energy = self.pick(&self.opts.burn_in_energy, "burn_in_energy")?;
        cfg.jobs = self.jobs()?;
        Ok(cfg)
    }

    pub fn theory_params(&self) -> Result<TheoryParams, CliError> {
        let mut p = TheoryParams::default();
        if let Some(r) = self.pick(&self.opts.r, "r")? {
            p.threshold_r = r;
        }
        if let Some(t) = self.pick(&self.opts.t, "t")? {
            p.horizon_t = t;
        }
        if let Some(g) = self.pick(&self.opts.gamma, "gamma")? {
            p.gamma = g;
        }
        if let Some(k) = self.pick(&self.opts.modes, "modes")? {
            p.n_modes_k = k;
        }
        Ok(p)
    }

    /// Requested variants; both when unspecified.
    pub fn variants(&self) -> Result<Vec<Variant>, CliError> {
        match self.pick(&self.opts.variant, "variant")? {
            Some(v) => Ok(vec![v.parse()?]),
            None => Ok(Variant::ALL.to_vec()),
        }
    }

    pub fn r_values(&self) -> Result<Vec<f64>, CliError> {
        match self.pick(&self.opts.r_values, "r_values")? {
            Some(list) => list
                .split(',')
                .map(|s| parse_value("r_values", s.trim()))
                .collect(),
            None => Ok(vec![5.0, 10.0, 20.0]),
        }
    }
}
