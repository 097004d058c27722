//! Finite-time oscillation indicators and optimization metrics.

use crate::dynamics::{SpinState, Trajectory};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Runs with one-step autocorrelation strictly below this are oscillatory.
pub const OSCILLATION_THRESHOLD: f64 = 0.5;

/// Per-run observables.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableReport {
    pub c1: f64,
    pub second_diff_norm: f64,
    pub cut: f64,
    pub final_energy: f64,
    pub oscillatory: bool,
}

impl ObservableReport {
    /// Evaluates every observable on a finished trajectory.
    pub fn from_trajectory(
        traj: &Trajectory,
        graph: &Graph,
        burn_in_c1: usize,
        burn_in_energy: usize,
    ) -> Result<Self> {
        let c1 = autocorrelation_c1(traj, burn_in_c1)?;
        Ok(ObservableReport {
            c1,
            second_diff_norm: second_difference_amplitude(&traj.energies, burn_in_energy)?,
            cut: cut_value(traj.final_state(), graph)?,
            final_energy: *traj.energies.last().expect("non-empty trajectory"),
            oscillatory: classify(c1),
        })
    }
}

/// `C(1) = (1/N) sum_i <s_i(t) s_i(t+1)>_t`, averaged over consecutive pairs
/// with `t >= burn_in`.
pub fn autocorrelation_c1(traj: &Trajectory, burn_in: usize) -> Result<f64> {
    let states = &traj.states;
    if states.len() < burn_in + 2 {
        return Err(Error::WindowTooShort {
            needed: burn_in + 2,
            available: states.len(),
        });
    }
    let n = states[0].len();
    if n == 0 {
        return Err(Error::EmptyInput("trajectory has no spins"));
    }
    let mut total: i64 = 0;
    for pair in states[burn_in..].windows(2) {
        total += pair[0]
            .spins()
            .iter()
            .zip(pair[1].spins())
            .map(|(&a, &b)| i64::from(a * b))
            .sum::<i64>();
    }
    let pairs = (states.len() - 1 - burn_in) as f64;
    Ok(total as f64 / (pairs * n as f64))
}

/// Mean absolute second difference of the energy trace after `burn_in`,
/// divided by the energy range over the same window (0 for a flat trace).
pub fn second_difference_amplitude(energies: &[f64], burn_in: usize) -> Result<f64> {
    let available = energies.len().saturating_sub(burn_in);
    if available < 3 {
        return Err(Error::WindowTooShort {
            needed: burn_in + 3,
            available: energies.len(),
        });
    }
    let window = &energies[burn_in..];
    let (lo, hi) = window
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    let range = hi - lo;
    if range == 0.0 {
        return Ok(0.0);
    }
    let mean = window
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs())
        .sum::<f64>()
        / (window.len() - 2) as f64;
    Ok(mean / range)
}

/// Cut weight `sum_{(i,j,w)} w (1 - s_i s_j) / 2`.
pub fn cut_value(s: &SpinState, g: &Graph) -> Result<f64> {
    if s.len() != g.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: g.n_nodes(),
            found: s.len(),
        });
    }
    let spins = s.spins();
    Ok(g
        .edges()
        .iter()
        .filter(|e| spins[e.i] != spins[e.j])
        .fold(0.0, |acc, e| acc + e.w))
}

/// Oscillatory iff `c1 < 0.5` (strict).
pub fn classify(c1: f64) -> bool {
    c1 < OSCILLATION_THRESHOLD
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdCriterion {
    Autocorrelation,
}

/// Simulation-side critical synchrony parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdEstimate {
    /// Smallest grid value whose seed-averaged `C(1)` reaches 0.5; `None`
    /// when no grid point does.
    pub c_star: Option<f64>,
    pub criterion: ThresholdCriterion,
    /// Largest number of seeds seen at any grid point.
    pub n_seeds: usize,
    /// Seed-averaged `C(1)` per grid value, ascending in `c`.
    pub mean_c1: Vec<(f64, f64)>,
}

impl ThresholdEstimate {
    pub fn is_resolved(&self) -> bool {
        self.c_star.is_some()
    }
}

/// Averages `C(1)` over seeds at each `c` and returns the smallest `c` whose
/// mean is at least 0.5. Rows are `(c, seed, c1)` in any order.
pub fn detect_sim_threshold(rows: &[(f64, u64, f64)]) -> Result<ThresholdEstimate> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("no sweep rows"));
    }
    let mut sorted: Vec<(f64, f64)> = rows.iter().map(|&(c, _, c1)| (c, c1)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut mean_c1 = Vec::new();
    let mut n_seeds = 0;
    for group in sorted.chunk_by(|a, b| a.0 == b.0) {
        let mean = group.iter().map(|r| r.1).sum::<f64>() / group.len() as f64;
        n_seeds = n_seeds.max(group.len());
        mean_c1.push((group[0].0, mean));
    }
    let c_star = mean_c1
        .iter()
        .find(|(_, m)| !classify(*m))
        .map(|&(c, _)| c);
    Ok(ThresholdEstimate {
        c_star,
        criterion: ThresholdCriterion::Autocorrelation,
        n_seeds,
        mean_c1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SimParams;
    use crate::graph::{generate_toy, Edge, ToyKind};

    fn traj(states: Vec<Vec<i8>>) -> Trajectory {
        let energies = vec![0.0; states.len()];
        Trajectory {
            states: states.into_iter().map(|s| SpinState::new(s).unwrap()).collect(),
            energies,
            params: SimParams::new(1.0, 1.0, 1, 0),
            graph_name: "t".into(),
        }
    }

    #[test]
    fn c1_limits() {
        let constant = traj(vec![vec![1, -1, 1, 1]; 5]);
        assert_eq!(autocorrelation_c1(&constant, 0).unwrap(), 1.0);

        let alternating = traj((0..6).map(|t| vec![if t % 2 == 0 { 1 } else { -1 }; 4]).collect());
        assert_eq!(autocorrelation_c1(&alternating, 0).unwrap(), -1.0);

        let half = traj(
            (0..6)
                .map(|t| {
                    let a = if t % 2 == 0 { 1 } else { -1 };
                    vec![a, a, 1, -1]
                })
                .collect(),
        );
        assert_eq!(autocorrelation_c1(&half, 0).unwrap(), 0.0);
    }

    #[test]
    fn c1_respects_burn_in() {
        // One flip at the start, then frozen.
        let t = traj(vec![vec![1, 1], vec![-1, -1], vec![-1, -1], vec![-1, -1]]);
        assert!((autocorrelation_c1(&t, 0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(autocorrelation_c1(&t, 1).unwrap(), 1.0);
        assert!(matches!(
            autocorrelation_c1(&t, 3),
            Err(Error::WindowTooShort { .. })
        ));
    }

    #[test]
    fn second_difference_examples() {
        assert_eq!(second_difference_amplitude(&[2.0; 10], 0).unwrap(), 0.0);
        let a = 3.5;
        let alt: Vec<f64> = (0..20).map(|t| if t % 2 == 0 { a } else { -a }).collect();
        assert_eq!(second_difference_amplitude(&alt, 0).unwrap(), 2.0);
        let ramp: Vec<f64> = (0..20).map(|t| 0.25 * t as f64).collect();
        assert_eq!(second_difference_amplitude(&ramp, 5).unwrap(), 0.0);
        assert!(second_difference_amplitude(&[1.0, 2.0, 3.0], 1).is_err());
    }

    #[test]
    fn cut_examples() {
        let c4 = generate_toy(ToyKind::Toy1, 0);
        let alt = SpinState::new(vec![1, -1, 1, -1]).unwrap();
        assert_eq!(cut_value(&alt, &c4).unwrap(), 4.0);
        assert_eq!(cut_value(&SpinState::uniform(4, -1), &c4).unwrap(), 0.0);

        let edge = Graph::new("e", 2, vec![Edge { i: 0, j: 1, w: 1.0 }]).unwrap();
        assert_eq!(cut_value(&SpinState::new(vec![1, -1]).unwrap(), &edge).unwrap(), 1.0);
        assert!(cut_value(&SpinState::uniform(3, 1), &edge).is_err());
    }

    #[test]
    fn classification_boundary() {
        assert!(classify(0.3));
        assert!(!classify(0.5));
        assert!(!classify(0.9));
    }

    #[test]
    fn threshold_detection() {
        let mut rows = Vec::new();
        let grid = [1.95, 2.0, 2.05, 2.1];
        let means = [0.1, 0.45, 0.55, 0.8];
        for (&c, &m) in grid.iter().zip(&means) {
            rows.push((c, 0, m - 0.05));
            rows.push((c, 1, m + 0.05));
        }
        let est = detect_sim_threshold(&rows).unwrap();
        assert_eq!(est.c_star, Some(2.05));
        assert_eq!(est.n_seeds, 2);

        let never = detect_sim_threshold(&[(1.0, 0, 0.9), (1.05, 0, 0.95)]).unwrap();
        assert_eq!(never.c_star, Some(1.0));

        let always = detect_sim_threshold(&[(1.0, 0, 0.1), (2.0, 0, 0.2)]).unwrap();
        assert_eq!(always.c_star, None);

        assert!(detect_sim_threshold(&[]).is_err());
    }

    #[test]
    fn threshold_ignores_rows_below_estimate() {
        let rows = vec![(1.0, 0, 0.2), (1.5, 0, 0.7), (1.2, 0, 0.3), (2.0, 0, 0.4), (2.5, 0, 0.9)];
        let est = detect_sim_threshold(&rows).unwrap().c_star.unwrap();
        let trimmed: Vec<_> = rows.iter().copied().filter(|r| r.0 >= est).collect();
        assert_eq!(detect_sim_threshold(&trimmed).unwrap().c_star, Some(est));
    }
}
