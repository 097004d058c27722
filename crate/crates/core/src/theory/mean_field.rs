//! Mean-field magnetization map and its linearization.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::CouplingMatrix;

pub const FIXED_POINT_DAMPING: f64 = 0.5;
pub const FIXED_POINT_TOLERANCE: f64 = 1e-10;
pub const FIXED_POINT_MAX_ITERATIONS: usize = 10_000;

/// Converged damped iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub m: Vec<f64>,
    pub iterations: usize,
    /// `max_i |F(m)_i - m_i|` at the returned point.
    pub residual: f64,
}

fn check_dims(n: usize, m: &[f64], h: Option<&[f64]>) -> Result<()> {
    if m.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.len(),
        });
    }
    if let Some(h) = h {
        if h.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: h.len(),
            });
        }
    }
    Ok(())
}

fn local_fields(m: &[f64], j: &CouplingMatrix, h: Option<&[f64]>) -> Vec<f64> {
    let mut field = vec![0.0; m.len()];
    j.matvec(m, &mut field);
    if let Some(h) = h {
        field.iter_mut().zip(h).for_each(|(f, h)| *f += h);
    }
    field
}

/// `m' = (1 - p) m + p tanh(I0 (h + J m))`.
pub fn mean_field_step(
    m: &[f64],
    j: &CouplingMatrix,
    h: Option<&[f64]>,
    p: f64,
    i0: f64,
) -> Result<Vec<f64>> {
    check_dims(j.n(), m, h)?;
    Ok(local_fields(m, j, h)
        .into_iter()
        .zip(m)
        .map(|(f, &mi)| (1.0 - p) * mi + p * (i0 * f).tanh())
        .collect())
}

/// Damped iteration `m <- (1 - d) m + d F(m)` from `m0` until the fixed-point
/// residual drops below [`FIXED_POINT_TOLERANCE`].
pub fn mean_field_fixed_point(
    m0: &[f64],
    j: &CouplingMatrix,
    h: Option<&[f64]>,
    p: f64,
    i0: f64,
) -> Result<FixedPoint> {
    let mut m = m0.to_vec();
    let mut residual = f64::INFINITY;
    for iterations in 0..=FIXED_POINT_MAX_ITERATIONS {
        let next = mean_field_step(&m, j, h, p, i0)?;
        residual = next
            .iter()
            .zip(&m)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual < FIXED_POINT_TOLERANCE {
            return Ok(FixedPoint {
                m,
                iterations,
                residual,
            });
        }
        m.iter_mut()
            .zip(&next)
            .for_each(|(mi, ni)| *mi = (1.0 - FIXED_POINT_DAMPING) * *mi + FIXED_POINT_DAMPING * ni);
    }
    Err(Error::NoConvergence {
        what: "mean-field fixed point",
        iterations: FIXED_POINT_MAX_ITERATIONS,
        residual,
    })
}

/// `A = (1 - p) I + p D I0 J` with `D = diag(sech^2(I0 (h + J m*)))`.
pub fn jacobian(
    m_star: &[f64],
    j: &CouplingMatrix,
    h: Option<&[f64]>,
    p: f64,
    i0: f64,
) -> Result<DMatrix<f64>> {
    check_dims(j.n(), m_star, h)?;
    let n = j.n();
    let mut a = DMatrix::identity(n, n) * (1.0 - p);
    for (i, f) in local_fields(m_star, j, h).into_iter().enumerate() {
        let t = (i0 * f).tanh();
        let gain = p * (1.0 - t * t) * i0;
        for (c, v) in j.row(i) {
            a[(i, c)] += gain * v;
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> CouplingMatrix {
        CouplingMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap()
    }

    #[test]
    fn zero_is_fixed_at_zero_field() {
        let j = pair();
        assert_eq!(mean_field_step(&[0.0, 0.0], &j, None, 0.7, 3.0).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn no_update_when_p_is_zero() {
        let j = pair();
        let m = [0.3, -0.8];
        assert_eq!(mean_field_step(&m, &j, Some(&[1.0, 2.0]), 0.0, 5.0).unwrap(), m.to_vec());
    }

    #[test]
    fn ferromagnetic_pair() {
        let j = pair();
        let next = mean_field_step(&[0.9, 0.9], &j, None, 1.0, 2.0).unwrap();
        for x in next {
            assert!((x - 0.9468060128462683).abs() < 1e-15);
        }
        let fp = mean_field_fixed_point(&[0.9, 0.9], &j, None, 1.0, 2.0).unwrap();
        for x in &fp.m {
            assert!((x - 0.9575040240772688).abs() < 1e-9);
        }
        assert!(fp.residual < FIXED_POINT_TOLERANCE);
    }

    #[test]
    fn dimension_checks() {
        let j = pair();
        assert!(mean_field_step(&[0.0], &j, None, 1.0, 1.0).is_err());
        assert!(mean_field_step(&[0.0, 0.0], &j, Some(&[1.0]), 1.0, 1.0).is_err());
        assert!(jacobian(&[0.0; 3], &j, None, 1.0, 1.0).is_err());
    }

    #[test]
    fn jacobian_limits() {
        let j = pair();
        let a = jacobian(&[0.0, 0.0], &j, None, 0.25, 2.0).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.75, 0.5, 0.5, 0.75]);
        assert!((a - want).abs().max() < 1e-15);

        let a = jacobian(&[0.0, 0.0], &j, None, 1.0, 2.0).unwrap();
        assert!((a - j.to_dense() * 2.0).abs().max() < 1e-15);

        // Saturated: the map forgets the coupling.
        let a = jacobian(&[1.0, 1.0], &j, None, 0.5, 100.0).unwrap();
        let want = DMatrix::identity(2, 2) * 0.5;
        assert!((a - want).abs().max() < 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let j = CouplingMatrix::from_dense(&DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 1.0, -0.5, 1.0, 0.0, 2.0, -0.5, 2.0, 0.0],
        ))
        .unwrap();
        let h = [0.1, -0.2, 0.3];
        let m = [0.2, -0.4, 0.1];
        let a = jacobian(&m, &j, Some(&h), 0.6, 0.8).unwrap();
        let eps = 1e-6;
        for c in 0..3 {
            let mut up = m;
            let mut dn = m;
            up[c] += eps;
            dn[c] -= eps;
            let fu = mean_field_step(&up, &j, Some(&h), 0.6, 0.8).unwrap();
            let fd = mean_field_step(&dn, &j, Some(&h), 0.6, 0.8).unwrap();
            for r in 0..3 {
                let fd_val = (fu[r] - fd[r]) / (2.0 * eps);
                assert!((a[(r, c)] - fd_val).abs() < 1e-8);
            }
        }
    }
}
