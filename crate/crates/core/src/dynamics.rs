//! Tick-random synchronous p-bit dynamics.
//!
//! At every tick each spin is selected independently with probability
//! `p = 1/c`. Selected spins resample from `Pr(+1) = (1 + tanh(I0 * field)) / 2`
//! using the pre-tick configuration for every local field; unselected spins
//! keep their value.
//!
//! Random draws come from one ChaCha stream per run in a fixed order: all
//! `n` mask draws for a tick, then one state draw per selected spin in index
//! order. The initial configuration, when random, comes from a separate
//! stream of the same seed, so trajectories are a pure function of
//! `(couplings, params)`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::CouplingMatrix;

const DYNAMICS_STREAM: u64 = 0;
const INIT_STREAM: u64 = 1;

/// Largest system for which [`exact_chain`] builds the `2^n x 2^n` matrix.
pub const EXACT_CHAIN_MAX_SPINS: usize = 12;

/// Parameters of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    /// Inverse-temperature gain.
    pub i0: f64,
    /// Parallelism parameter; the per-tick update probability is `1/c`.
    pub c: f64,
    pub ticks: usize,
    pub seed: u64,
    /// External field; `None` means zero everywhere.
    pub bias: Option<Vec<f64>>,
}

impl SimParams {
    pub fn new(i0: f64, c: f64, ticks: usize, seed: u64) -> Self {
        SimParams {
            i0,
            c,
            ticks,
            seed,
            bias: None,
        }
    }

    pub fn with_bias(mut self, bias: Vec<f64>) -> Self {
        self.bias = Some(bias);
        self
    }

    /// Update probability `1/c`.
    pub fn p(&self) -> f64 {
        1.0 / self.c
    }

    pub fn bias_at(&self, i: usize) -> f64 {
        self.bias.as_ref().map_or(0.0, |h| h[i])
    }

    /// Checks parameter ranges and that the bias length matches `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.i0 > 0.0 && self.i0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "i0 must be positive and finite, got {}",
                self.i0
            )));
        }
        if self.c.is_nan() || self.c < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "c must be at least 1, got {}",
                self.c
            )));
        }
        if let Some(h) = &self.bias {
            if h.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: h.len(),
                });
            }
        }
        Ok(())
    }
}

/// A +-1 spin configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinState {
    spins: Vec<i8>,
}

impl SpinState {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(k) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter(format!(
                "spin {k} has value {}, expected +1 or -1",
                spins[k]
            )));
        }
        Ok(SpinState { spins })
    }

    pub fn uniform(n: usize, value: i8) -> Self {
        assert!(value == 1 || value == -1);
        SpinState {
            spins: vec![value; n],
        }
    }

    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        SpinState {
            spins: (0..n)
                .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
                .collect(),
        }
    }

    /// Decodes a basis index: bit `i` set means spin `i` is +1.
    pub fn from_index(index: usize, n: usize) -> Self {
        SpinState {
            spins: (0..n)
                .map(|i| if index >> i & 1 == 1 { 1 } else { -1 })
                .collect(),
        }
    }

    pub fn index(&self) -> usize {
        self.spins
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 1)
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn flipped(&self) -> SpinState {
        SpinState {
            spins: self.spins.iter().map(|s| -s).collect(),
        }
    }

    pub fn magnetization(&self) -> f64 {
        self.spins.iter().map(|&s| f64::from(s)).sum::<f64>() / self.len() as f64
    }

    /// Number of sites where `self` and `other` differ.
    pub fn hamming(&self, other: &SpinState) -> usize {
        self.spins
            .iter()
            .zip(&other.spins)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// Recorded states and energies of one run, `ticks + 1` entries each.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<SpinState>,
    pub energies: Vec<f64>,
    pub params: SimParams,
    pub graph_name: String,
}

impl Trajectory {
    pub fn final_state(&self) -> &SpinState {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Spins that changed between tick `t - 1` and `t` (0 at `t = 0`).
    pub fn flips(&self, t: usize) -> usize {
        if t == 0 {
            0
        } else {
            self.states[t].hamming(&self.states[t - 1])
        }
    }

    /// CSV with columns `tick,energy,flips_this_tick`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("tick,energy,flips_this_tick\n");
        for (t, e) in self.energies.iter().enumerate() {
            let _ = writeln!(out, "{t},{e},{}", self.flips(t));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Run-length spin dump: one line per tick, `t runs`, where each run is
    /// a count followed by `+` or `-`. For example `3 2+1-` is tick 3 with
    /// spins `(+1, +1, -1)`.
    pub fn spin_dump(&self) -> String {
        let mut out = String::new();
        for (t, s) in self.states.iter().enumerate() {
            let _ = write!(out, "{t} ");
            let spins = s.spins();
            let mut k = 0;
            while k < spins.len() {
                let v = spins[k];
                let run = spins[k..].iter().take_while(|&&x| x == v).count();
                let _ = write!(out, "{run}{}", if v > 0 { '+' } else { '-' });
                k += run;
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the output of [`Trajectory::spin_dump`] back into states.
pub fn parse_spin_dump(text: &str) -> Result<Vec<SpinState>> {
    let mut states = Vec::new();
    for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = |message: String| Error::Parse {
            line: k + 1,
            message,
        };
        let (tick, runs) = line
            .trim()
            .split_once(' ')
            .ok_or_else(|| bad("expected \"tick runs\"".into()))?;
        let tick: usize = tick.parse().map_err(|_| bad(format!("bad tick {tick:?}")))?;
        if tick != states.len() {
            return Err(bad(format!("expected tick {}, found {tick}", states.len())));
        }
        let mut spins = Vec::new();
        let mut count = String::new();
        for ch in runs.chars() {
            match ch {
                '0'..='9' => count.push(ch),
                '+' | '-' => {
                    let run: usize = count
                        .parse()
                        .map_err(|_| bad(format!("missing run length before {ch:?}")))?;
                    spins.extend(std::iter::repeat_n(if ch == '+' { 1 } else { -1 }, run));
                    count.clear();
                }
                _ => return Err(bad(format!("unexpected character {ch:?}"))),
            }
        }
        if !count.is_empty() {
            return Err(bad("dangling run length".into()));
        }
        states.push(SpinState { spins });
    }
    Ok(states)
}

fn check_dims(s: &SpinState, j: &CouplingMatrix) -> Result<()> {
    if s.len() != j.n() {
        return Err(Error::DimensionMismatch {
            expected: j.n(),
            found: s.len(),
        });
    }
    Ok(())
}

/// Ising energy `H = -(1/2) s^T J s - h^T s`.
pub fn energy(s: &SpinState, j: &CouplingMatrix, bias: Option<&[f64]>) -> Result<f64> {
    check_dims(s, j)?;
    let spins = s.spins();
    let mut pair = 0.0;
    for (i, &si) in spins.iter().enumerate() {
        pair += f64::from(si) * j.local_field(i, spins);
    }
    let field = match bias {
        Some(h) => {
            if h.len() != s.len() {
                return Err(Error::DimensionMismatch {
                    expected: s.len(),
                    found: h.len(),
                });
            }
            h.iter().zip(spins).map(|(h, &s)| h * f64::from(s)).sum()
        }
        None => 0.0,
    };
    // `+ 0.0` turns a negative zero into zero.
    Ok(-0.5 * pair - field + 0.0)
}

/// Probability that a selected spin resamples to +1 given its total field.
#[inline]
pub fn up_probability(i0: f64, field: f64) -> f64 {
    0.5 * (1.0 + (i0 * field).tanh())
}

/// Advances one tick. `rng` must be the run's dynamics stream.
pub fn tick<R: Rng>(
    s: &SpinState,
    j: &CouplingMatrix,
    params: &SimParams,
    rng: &mut R,
) -> SpinState {
    let p = params.p();
    let spins = s.spins();
    let mask: Vec<bool> = (0..spins.len()).map(|_| rng.random::<f64>() < p).collect();
    let mut next = spins.to_vec();
    for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        let field = params.bias_at(i) + j.local_field(i, spins);
        next[i] = if rng.random::<f64>() < up_probability(params.i0, field) {
            1
        } else {
            -1
        };
    }
    SpinState { spins: next }
}

/// The dynamics stream for a seed.
pub fn dynamics_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(DYNAMICS_STREAM);
    rng
}

/// The uniformly random initial configuration derived from a seed.
pub fn random_initial_state(n: usize, seed: u64) -> SpinState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INIT_STREAM);
    SpinState::random(n, &mut rng)
}

/// Runs `params.ticks` ticks from `initial` (or a seeded random state) and
/// records every state and its energy.
pub fn run(
    j: &CouplingMatrix,
    params: &SimParams,
    initial: Option<SpinState>,
    graph_name: &str,
) -> Result<Trajectory> {
    params.validate(j.n())?;
    let initial = match initial {
        Some(s) => {
            check_dims(&s, j)?;
            s
        }
        None => random_initial_state(j.n(), params.seed),
    };
    let bias = params.bias.as_deref();
    let mut rng = dynamics_rng(params.seed);
    let mut states = Vec::with_capacity(params.ticks + 1);
    let mut energies = Vec::with_capacity(params.ticks + 1);
    energies.push(energy(&initial, j, bias)?);
    states.push(initial);
    for _ in 0..params.ticks {
        let next = tick(states.last().unwrap(), j, params, &mut rng);
        energies.push(energy(&next, j, bias)?);
        states.push(next);
    }
    Ok(Trajectory {
        states,
        energies,
        params: params.clone(),
        graph_name: graph_name.to_string(),
    })
}

/// Exact one-tick transition matrix over all `2^n` configurations, indexed
/// by [`SpinState::index`]; entry `(a, b)` is `Pr(a -> b)`.
pub fn exact_chain(j: &CouplingMatrix, params: &SimParams) -> Result<DMatrix<f64>> {
    let n = j.n();
    if n > EXACT_CHAIN_MAX_SPINS {
        return Err(Error::TooLarge {
            what: "exact transition matrix",
            n,
            limit: EXACT_CHAIN_MAX_SPINS,
        });
    }
    params.validate(n)?;
    let p = params.p();
    let size = 1usize << n;
    let mut m = DMatrix::zeros(size, size);
    // Per-site probability of landing on +1 / -1 from the current state.
    let mut up = vec![0.0; n];
    let mut down = vec![0.0; n];
    for a in 0..size {
        let s = SpinState::from_index(a, n);
        for i in 0..n {
            let q = up_probability(params.i0, params.bias_at(i) + j.local_field(i, s.spins()));
            let stay_up = if s.spins()[i] == 1 { 1.0 - p } else { 0.0 };
            up[i] = p * q + stay_up;
            down[i] = p * (1.0 - q) + (1.0 - p) - stay_up;
        }
        for b in 0..size {
            let mut prob = 1.0;
            for i in 0..n {
                prob *= if b >> i & 1 == 1 { up[i] } else { down[i] };
            }
            m[(a, b)] = prob;
        }
    }
    Ok(m)
}
