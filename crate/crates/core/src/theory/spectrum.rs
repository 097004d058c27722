//! Extreme eigenpairs of the coupling matrix and participation ratios.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Variant;
use crate::error::{Error, Result};
use crate::graph::CouplingMatrix;

/// Largest size handled by the dense decomposition under [`EigenMethod::Auto`].
pub const DENSE_EIGEN_LIMIT: usize = 2048;
/// Ritz-value tolerance of the Krylov solver, relative to `||J||`.
pub const KRYLOV_TOLERANCE: f64 = 1e-8;
/// Acceptance bound on `||Jv - lambda v||`, relative to `||J||`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;
/// Hard cap on the Krylov subspace dimension.
pub const MAX_KRYLOV_DIM: usize = 2000;

const LANCZOS_SEED: u64 = 0x5eed_1a2c;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    /// Dense up to [`DENSE_EIGEN_LIMIT`], Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

impl EigenMethod {
    fn resolve(self, n: usize) -> EigenMethod {
        match self {
            EigenMethod::Auto if n <= DENSE_EIGEN_LIMIT => EigenMethod::Dense,
            EigenMethod::Auto => EigenMethod::Lanczos,
            m => m,
        }
    }
}

/// One eigenpair with its localization measures.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeInfo {
    pub eigenvalue: f64,
    /// Unit eigenvector; sign fixed so the largest-magnitude entry is positive.
    pub eigenvector: Vec<f64>,
    /// `sum_i v_i^4`, in `[1/n, 1]`.
    pub ipr: f64,
    /// `|eigenvalue| / ipr^gamma`.
    pub score: f64,
}

impl ModeInfo {
    /// Normalizes `eigenvector` and fills in IPR and score.
    pub fn new(eigenvalue: f64, mut eigenvector: Vec<f64>, gamma: f64) -> Self {
        let norm = eigenvector.iter().map(|x| x * x).sum::<f64>().sqrt();
        let pivot = eigenvector
            .iter()
            .copied()
            .fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        let scale = if pivot < 0.0 { -1.0 / norm } else { 1.0 / norm };
        eigenvector.iter_mut().for_each(|x| *x *= scale);
        let ipr = ipr(&eigenvector);
        ModeInfo {
            eigenvalue,
            eigenvector,
            ipr,
            score: mode_score(eigenvalue, ipr, gamma),
        }
    }
}

/// Inverse participation ratio `sum v_i^4 / (sum v_i^2)^2`.
pub fn ipr(v: &[f64]) -> f64 {
    let (s2, s4) = v
        .iter()
        .fold((0.0, 0.0), |(s2, s4), &x| (s2 + x * x, s4 + x * x * x * x));
    s4 / (s2 * s2)
}

/// Observability score `|lambda| / ipr^gamma`.
pub fn mode_score(eigenvalue: f64, ipr: f64, gamma: f64) -> f64 {
    eigenvalue.abs() / ipr.powf(gamma)
}

/// The parts of the coupling spectrum the threshold theory needs. It does not
/// depend on `I0`, so one instance serves a whole boundary curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpectrum {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// The `K` algebraically smallest eigenpairs, ascending.
    pub modes: Vec<ModeInfo>,
    pub gamma: f64,
}

impl CouplingSpectrum {
    pub fn compute(j: &CouplingMatrix, k: usize, gamma: f64) -> Result<Self> {
        Self::compute_with(j, k, gamma, EigenMethod::Auto)
    }

    pub fn compute_with(j: &CouplingMatrix, k: usize, gamma: f64, method: EigenMethod) -> Result<Self> {
        let n = j.n();
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!(
                "mode count K = {k} must lie in 1..={n}"
            )));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        match method.resolve(n) {
            EigenMethod::Dense => {
                let eig = SymmetricEigen::new(j.to_dense());
                let order = ascending_order(eig.eigenvalues.as_slice());
                let modes = order[..k]
                    .iter()
                    .map(|&c| {
                        ModeInfo::new(eig.eigenvalues[c], eig.eigenvectors.column(c).iter().copied().collect(), gamma)
                    })
                    .collect();
                Ok(CouplingSpectrum {
                    lambda_min: eig.eigenvalues[order[0]],
                    lambda_max: eig.eigenvalues[order[n - 1]],
                    modes,
                    gamma,
                })
            }
            _ => {
                let low = lanczos_lowest(j, k, 1.0)?;
                let high = lanczos_lowest(j, 1, -1.0)?;
                let modes: Vec<ModeInfo> = low
                    .into_iter()
                    .map(|(lambda, v)| ModeInfo::new(lambda, v, gamma))
                    .collect();
                Ok(CouplingSpectrum {
                    lambda_min: modes[0].eigenvalue,
                    lambda_max: -high[0].0,
                    modes,
                    gamma,
                })
            }
        }
    }

    /// Mode that drives the period-2 instability, or `None` when `J` has no
    /// negative eigenvalue among the inspected modes.
    pub fn oscillatory_mode(&self, variant: Variant) -> Option<&ModeInfo> {
        let mut negative = self.modes.iter().filter(|m| m.eigenvalue < 0.0);
        match variant {
            Variant::NonIpr => negative.next(),
            Variant::IprCorrected => negative.fold(None, |best: Option<&ModeInfo>, m| match best {
                Some(b) if b.score >= m.score => Some(b),
                _ => Some(m),
            }),
        }
    }
}

/// The `k` algebraically smallest eigenpairs of `J`, ascending.
pub fn extreme_modes(j: &CouplingMatrix, k: usize, gamma: f64) -> Result<Vec<ModeInfo>> {
    CouplingSpectrum::compute(j, k, gamma).map(|s| s.modes)
}

/// `(lambda_min, lambda_max)` of `J`.
pub fn extreme_eigenvalues(j: &CouplingMatrix) -> Result<(f64, f64)> {
    let s = CouplingSpectrum::compute(j, 1, 1.0)?;
    Ok((s.lambda_min, s.lambda_max))
}

fn ascending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let d = dot(w, b);
            axpy(-d, b, w);
        }
    }
}

fn random_unit_orthogonal(n: usize, basis: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        orthogonalize(&mut v, basis);
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            return v;
        }
    }
}

/// Lowest `k` eigenpairs of `sign * J` by Lanczos with full
/// reorthogonalization. The Krylov space is grown by doubling until every
/// wanted Ritz pair passes both the Ritz estimate and an explicit residual
/// check. Eigenvalues are returned for `sign * J`.
fn lanczos_lowest(j: &CouplingMatrix, k: usize, sign: f64) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = j.n();
    let scale = j.norm_bound().max(f64::MIN_POSITIVE);
    let ritz_tol = KRYLOV_TOLERANCE * scale;
    let accept = RESIDUAL_TOLERANCE * scale;
    let cap = n.min(MAX_KRYLOV_DIM);

    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut v = random_unit_orthogonal(n, &basis, &mut rng);
    let mut w = vec![0.0; n];
    let mut target = (4 * k + 40).min(cap);
    let mut worst: f64;

    loop {
        while basis.len() < target {
            j.matvec(&v, &mut w);
            w.iter_mut().for_each(|x| *x *= sign);
            alpha.push(dot(&w, &v));
            basis.push(std::mem::take(&mut v));
            orthogonalize(&mut w, &basis);
            if basis.len() == n {
                break;
            }
            let b = dot(&w, &w).sqrt();
            if b <= 1e-10 * scale {
                beta.push(0.0);
                v = random_unit_orthogonal(n, &basis, &mut rng);
            } else {
                beta.push(b);
                v = w.iter().map(|x| x / b).collect();
            }
        }

        let m = basis.len();
        let mut t = DMatrix::zeros(m, m);
        for r in 0..m {
            t[(r, r)] = alpha[r];
            if r + 1 < m {
                t[(r, r + 1)] = beta[r];
                t[(r + 1, r)] = beta[r];
            }
        }
        let eig = SymmetricEigen::new(t);
        let order = ascending_order(eig.eigenvalues.as_slice());
        let wanted = &order[..k.min(m)];
        let tail = if m < n { beta[m - 1] } else { 0.0 };
        let estimate = wanted
            .iter()
            .map(|&c| (tail * eig.eigenvectors[(m - 1, c)]).abs())
            .fold(0.0, f64::max);

        if estimate <= ritz_tol || m == n {
            let mut pairs = Vec::with_capacity(wanted.len());
            worst = 0.0_f64;
            for &c in wanted {
                let lambda = eig.eigenvalues[c];
                let mut y = vec![0.0; n];
                for (r, b) in basis.iter().enumerate() {
                    axpy(eig.eigenvectors[(r, c)], b, &mut y);
                }
                let norm = dot(&y, &y).sqrt();
                y.iter_mut().for_each(|x| *x /= norm);
                j.matvec(&y, &mut w);
                let res = w
                    .iter()
                    .zip(&y)
                    .map(|(jy, y)| (sign * jy - lambda * y).powi(2))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(res);
                pairs.push((lambda, y));
            }
            if worst <= accept && pairs.len() == k {
                return Ok(pairs);
            }
        } else {
            worst = estimate;
        }

        if m >= cap {
            return Err(Error::EigenNonConvergence {
                iterations: m,
                residual: worst,
                tolerance: accept,
            });
        }
        log::debug!("Lanczos: {m} vectors, Ritz estimate {estimate:.2e}; extending");
        target = (2 * m).min(cap);
    }
}
