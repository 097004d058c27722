//! Linearized mean-field theory of period-2 oscillations and the critical
//! synchrony parameter `c*(I0)`.
//!
//! With a scalar effective gain `alpha`, the Jacobian of the mean-field map is
//! `A_eff = (1 - p) I + p alpha I0 J`, so every eigenvalue of `J` maps to
//! `(1 - 1/c) + (alpha I0 / c) lambda(J)`. An oscillation is observable within
//! `T` ticks when a negative eigenvalue of `A_eff` satisfies `|lambda|^T >= R`.
//! `c*` is the smallest `c` for which that fails.

mod gain;
mod mean_field;
mod spectrum;

pub use gain::{
    alpha_eff, alpha_eff_asymptotic, alpha_eff_gauss_hermite, even_hermite_rule, HalfRule,
    QuadratureEstimate, ASYMPTOTIC_SWITCH,
};
pub use mean_field::{jacobian, mean_field_fixed_point, mean_field_step, FixedPoint};
pub use spectrum::{
    extreme_eigenvalues, extreme_modes, ipr, mode_score, CouplingSpectrum, EigenMethod, ModeInfo,
    DENSE_EIGEN_LIMIT,
};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::CouplingMatrix;

/// Size limit of [`finite_time_norm_growth`].
pub const NORM_GROWTH_MAX_DIM: usize = 256;

/// Parameters of the finite-time criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryParams {
    pub i0: f64,
    pub c: f64,
    pub horizon_t: u32,
    pub threshold_r: f64,
    pub gamma: f64,
    pub n_modes_k: usize,
    /// Upper end of the bisection bracket for `c*`.
    pub c_max: f64,
    /// Bisection width for `c*`.
    pub c_tolerance: f64,
}

impl Default for TheoryParams {
    fn default() -> Self {
        TheoryParams {
            i0: 1.0,
            c: 1.0,
            horizon_t: 40,
            threshold_r: 10.0,
            gamma: 1.0,
            n_modes_k: 8,
            c_max: 20.0,
            c_tolerance: 1e-3,
        }
    }
}

impl TheoryParams {
    pub fn new(i0: f64) -> Self {
        TheoryParams {
            i0,
            ..Default::default()
        }
    }

    pub fn with_i0(&self, i0: f64) -> Self {
        TheoryParams { i0, ..self.clone() }
    }

    pub fn p(&self) -> f64 {
        1.0 / self.c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.i0 > 0.0 && self.i0.is_finite()) {
            return bad(format!("I0 must be positive and finite, got {}", self.i0));
        }
        if self.c.is_nan() || self.c < 1.0 {
            return bad(format!("c must be at least 1, got {}", self.c));
        }
        if self.horizon_t < 1 {
            return bad("horizon T must be at least 1".into());
        }
        if !(self.threshold_r > 1.0 && self.threshold_r.is_finite()) {
            return bad(format!("R must exceed 1, got {}", self.threshold_r));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if self.n_modes_k < 1 {
            return bad("mode count K must be at least 1".into());
        }
        if !(self.c_max > 1.0 && self.c_max.is_finite()) {
            return bad(format!("c_max must exceed 1, got {}", self.c_max));
        }
        if self.c_tolerance.is_nan() || self.c_tolerance <= 0.0 {
            return bad(format!("c tolerance must be positive, got {}", self.c_tolerance));
        }
        Ok(())
    }
}

/// How the oscillatory eigenvalue is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `lambda_min(J)`.
    NonIpr,
    /// Highest-scoring negative mode among the `K` lowest.
    IprCorrected,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::NonIpr, Variant::IprCorrected];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::NonIpr => "non_ipr",
            Variant::IprCorrected => "ipr_corrected",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "non_ipr" | "nonipr" | "plain" => Ok(Variant::NonIpr),
            "ipr" | "ipr_corrected" => Ok(Variant::IprCorrected),
            _ => Err(Error::InvalidParameter(format!(
                "unknown variant {s:?}; expected non-ipr or ipr"
            ))),
        }
    }
}

/// Outcome of the `c*` search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Smallest `c >= 1` at which the oscillation is no longer observable.
    Critical(f64),
    /// Still observable at the top of the bracket.
    NeverSuppressed { c_max: f64 },
}

impl Threshold {
    pub fn value(self) -> Option<f64> {
        match self {
            Threshold::Critical(c) => Some(c),
            Threshold::NeverSuppressed { .. } => None,
        }
    }

    /// The threshold with `+inf` standing in for the sentinel.
    pub fn as_f64(self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Critical(c) => write!(f, "{c}"),
            Threshold::NeverSuppressed { .. } => f.write_str("inf"),
        }
    }
}

/// One grid point of a boundary curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub i0: f64,
    pub c_star: Threshold,
    /// Eigenvalue of the selected mode; `None` if `J` has no negative mode.
    pub lambda_osc: Option<f64>,
    pub ipr: Option<f64>,
    pub alpha_eff: f64,
}

/// `c*(I0)` over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    pub variant: Variant,
    pub points: Vec<BoundaryPoint>,
}

impl BoundaryCurve {
    pub const CSV_HEADER: [&'static str; 6] = ["i0", "c_star", "variant", "lambda_osc", "ipr", "alpha_eff"];

    pub fn write_csv_to<W: std::io::Write>(&self, w: W, header: bool) -> std::result::Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        if header {
            out.write_record(Self::CSV_HEADER)?;
        }
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for p in &self.points {
            out.write_record([
                p.i0.to_string(),
                p.c_star.to_string(),
                self.variant.to_string(),
                opt(p.lambda_osc),
                opt(p.ipr),
                p.alpha_eff.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv_to(&mut buf, true).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8 csv")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv_to(file, true).map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// `lambda_abs^T`, evaluated as `exp(T ln lambda_abs)`.
pub fn growth_factor(lambda_abs: f64, t: u32) -> f64 {
    if lambda_abs == 0.0 {
        0.0
    } else {
        log_growth_factor(lambda_abs, t).exp()
    }
}

/// `T ln lambda_abs` (`-inf` for zero).
pub fn log_growth_factor(lambda_abs: f64, t: u32) -> f64 {
    f64::from(t) * lambda_abs.ln()
}

/// `ln G >= ln R`.
pub fn is_observable(g: f64, r: f64) -> bool {
    g.ln() >= r.ln()
}

/// Whether a negative Jacobian eigenvalue produces an observable period-2
/// oscillation within `T` ticks.
pub fn oscillation_observable(lambda: f64, t: u32, r: f64) -> bool {
    lambda < 0.0 && log_growth_factor(lambda.abs(), t) >= r.ln()
}

/// Eigenvalues `(min, max)` of `A_eff = (1 - p) I + p alpha I0 J`.
pub fn effective_jacobian_spectrum(j: &CouplingMatrix, p: f64, i0: f64, alpha: f64) -> Result<(f64, f64)> {
    let (lo, hi) = extreme_eigenvalues(j)?;
    let map = |l: f64| (1.0 - p) + p * alpha * i0 * l;
    let (a, b) = (map(lo), map(hi));
    Ok((a.min(b), a.max(b)))
}

/// Dense `A_eff = (1 - p) I + p alpha I0 J`.
pub fn effective_jacobian(j: &CouplingMatrix, p: f64, i0: f64, alpha: f64) -> DMatrix<f64> {
    let n = j.n();
    DMatrix::identity(n, n) * (1.0 - p) + j.to_dense() * (p * alpha * i0)
}

/// `max_{|x| = 1} |A^T x|`, the largest singular value of the explicit power.
pub fn finite_time_norm_growth(a: &DMatrix<f64>, t: u32) -> Result<f64> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    if n > NORM_GROWTH_MAX_DIM {
        return Err(Error::TooLarge {
            what: "finite-time norm growth",
            n,
            limit: NORM_GROWTH_MAX_DIM,
        });
    }
    let mut power = DMatrix::identity(n, n);
    let mut base = a.clone();
    let mut e = t;
    while e > 0 {
        if e & 1 == 1 {
            power = &power * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    Ok(power.singular_values().max())
}

/// `c*` for a scalar mode with `q = -alpha I0 lambda_osc`: the smallest
/// `c >= 1` where `(1 - 1/c) - q/c` stops being observably negative.
pub fn suppression_threshold(q: f64, params: &TheoryParams) -> Threshold {
    let (t, r) = (params.horizon_t, params.threshold_r);
    let observable = |c: f64| oscillation_observable((1.0 - 1.0 / c) - q / c, t, r);
    if !observable(1.0) {
        return Threshold::Critical(1.0);
    }
    if observable(params.c_max) {
        return Threshold::NeverSuppressed {
            c_max: params.c_max,
        };
    }
    let (mut lo, mut hi) = (1.0, params.c_max);
    while hi - lo > params.c_tolerance {
        let mid = 0.5 * (lo + hi);
        if observable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Threshold::Critical(hi)
}

/// Closed form `(1 + q) / (1 + R^{1/T})` of [`suppression_threshold`],
/// without clamping.
pub fn closed_form_threshold(q: f64, t: u32, r: f64) -> f64 {
    (1.0 + q) / (1.0 + r.powf(1.0 / f64::from(t)))
}

/// `c*` for a supplied oscillatory eigenvalue and gain.
pub fn critical_c_for_mode(lambda_osc: f64, alpha: f64, params: &TheoryParams) -> Threshold {
    suppression_threshold(-alpha * params.i0 * lambda_osc, params)
}

fn boundary_point(
    spectrum: &CouplingSpectrum,
    sigma_h: f64,
    i0: f64,
    params: &TheoryParams,
    variant: Variant,
) -> BoundaryPoint {
    let alpha = alpha_eff(i0, sigma_h);
    let mode = spectrum.oscillatory_mode(variant);
    let c_star = match mode {
        Some(m) => critical_c_for_mode(m.eigenvalue, alpha, &params.with_i0(i0)),
        None => Threshold::Critical(1.0),
    };
    BoundaryPoint {
        i0,
        c_star,
        lambda_osc: mode.map(|m| m.eigenvalue),
        ipr: mode.map(|m| m.ipr),
        alpha_eff: alpha,
    }
}

fn checked_spectrum(couplings: &CouplingMatrix, params: &TheoryParams) -> Result<CouplingSpectrum> {
    params.validate()?;
    if couplings.s_j().is_nan() || couplings.s_j() <= 0.0 {
        return Err(Error::Degenerate("field scale s_J is zero".into()));
    }
    let k = params.n_modes_k.min(couplings.n());
    CouplingSpectrum::compute(couplings, k, params.gamma)
}

/// Critical synchrony parameter at `params.i0`.
pub fn critical_c(couplings: &CouplingMatrix, params: &TheoryParams, variant: Variant) -> Result<Threshold> {
    let spectrum = checked_spectrum(couplings, params)?;
    Ok(critical_c_with_spectrum(couplings, &spectrum, params, variant).c_star)
}

/// [`critical_c`] with a precomputed spectrum, returning the full record.
pub fn critical_c_with_spectrum(
    couplings: &CouplingMatrix,
    spectrum: &CouplingSpectrum,
    params: &TheoryParams,
    variant: Variant,
) -> BoundaryPoint {
    boundary_point(spectrum, couplings.sigma_h_sq().sqrt(), params.i0, params, variant)
}

/// `c*` over an `I0` grid; the spectrum of `J` is computed once.
pub fn boundary_curve(
    couplings: &CouplingMatrix,
    i0_grid: &[f64],
    params: &TheoryParams,
    variant: Variant,
) -> Result<BoundaryCurve> {
    if let Some(bad) = i0_grid.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidParameter(format!("grid I0 must be positive, got {bad}")));
    }
    let spectrum = checked_spectrum(couplings, params)?;
    let sigma_h = couplings.sigma_h_sq().sqrt();
    let points = i0_grid
        .par_iter()
        .map(|&i0| boundary_point(&spectrum, sigma_h, i0, params, variant))
        .collect();
    Ok(BoundaryCurve { variant, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_couplings, generate_toy, ToyKind};

    fn toy(kind: ToyKind) -> CouplingMatrix {
        build_couplings(&generate_toy(kind, 0))
    }

    #[test]
    fn growth_examples() {
        assert_eq!(growth_factor(1.0, 17), 1.0);
        assert_eq!(growth_factor(0.0, 40), 0.0);
        assert!((growth_factor(1.1, 40) - 45.25925556817609).abs() < 1e-9);
        assert!(growth_factor(1e10, 1000).is_infinite());
        assert!(log_growth_factor(1e10, 1000).is_finite());
    }

    #[test]
    fn observability_examples() {
        assert!(is_observable(10.0, 10.0));
        assert!(!is_observable(1.0, 10.0));
        assert!(is_observable(45.26, 10.0));
        assert!(!is_observable(0.0, 10.0));
        assert!(!oscillation_observable(1.5, 40, 10.0));
        assert!(oscillation_observable(-1.1, 40, 10.0));
    }

    #[test]
    fn norm_growth_examples() {
        assert!((finite_time_norm_growth(&DMatrix::identity(5, 5), 40).unwrap() - 1.0).abs() < 1e-14);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.1, 0.5]));
        let g = finite_time_norm_growth(&d, 40).unwrap();
        assert!((g / 45.25925556817609 - 1.0).abs() < 1e-12);
        assert!(finite_time_norm_growth(&DMatrix::zeros(300, 300), 2).is_err());
        assert!(finite_time_norm_growth(&DMatrix::zeros(2, 3), 2).is_err());
    }

    #[test]
    fn closed_form_example() {
        let c = closed_form_threshold(3.0, 40, 10.0);
        assert!((c - 1.9424512633360054).abs() < 1e-12);
        let params = TheoryParams::default();
        let bis = suppression_threshold(3.0, &params).value().unwrap();
        assert!((bis - c).abs() <= 1e-3);
        assert!(bis >= c);
    }

    #[test]
    fn clamp_and_sentinel() {
        let params = TheoryParams::default();
        assert_eq!(suppression_threshold(1.05, &params), Threshold::Critical(1.0));
        assert_eq!(suppression_threshold(0.0, &params), Threshold::Critical(1.0));
        assert_eq!(
            suppression_threshold(100.0, &params),
            Threshold::NeverSuppressed { c_max: 20.0 }
        );
        assert_eq!(Threshold::NeverSuppressed { c_max: 20.0 }.to_string(), "inf");
        assert!(Threshold::NeverSuppressed { c_max: 20.0 }.as_f64().is_infinite());
    }

    #[test]
    fn effective_spectrum_on_toys() {
        let (p, i0, alpha) = (0.5, 2.0, 0.3);
        let (lo, hi) = effective_jacobian_spectrum(&toy(ToyKind::Toy1), p, i0, alpha).unwrap();
        assert!((lo - ((1.0 - p) - 2.0 * p * alpha * i0)).abs() < 1e-12);
        assert!((hi - ((1.0 - p) + 2.0 * p * alpha * i0)).abs() < 1e-12);
        let (lo, hi) = effective_jacobian_spectrum(&toy(ToyKind::Toy2), p, i0, alpha).unwrap();
        assert!((lo - ((1.0 - p) - p * alpha * i0)).abs() < 1e-12);
        assert!((hi - ((1.0 - p) + 3.0 * p * alpha * i0)).abs() < 1e-12);
        let (lo, hi) = effective_jacobian_spectrum(&toy(ToyKind::Toy2), 0.0, i0, alpha).unwrap();
        assert_eq!((lo, hi), (1.0, 1.0));
    }

    #[test]
    fn toy2_follows_scalar_form() {
        let j = toy(ToyKind::Toy2);
        let sigma = j.sigma_h_sq().sqrt();
        for i0 in [0.5, 5.0, 13.0, 40.0] {
            let params = TheoryParams::new(i0);
            let got = critical_c(&j, &params, Variant::NonIpr).unwrap();
            let q = alpha_eff(i0, sigma) * i0;
            assert_eq!(got, suppression_threshold(q, &params));
        }
    }

    #[test]
    fn toy2_clamps_at_max_temperature() {
        let j = toy(ToyKind::Toy2);
        let params = TheoryParams::new(j.i0_max().unwrap());
        for v in Variant::ALL {
            assert_eq!(critical_c(&j, &params, v).unwrap(), Threshold::Critical(1.0));
        }
    }

    #[test]
    fn high_temperature_limit() {
        let j = toy(ToyKind::Toy5);
        let curve = boundary_curve(&j, &[1e-4, 1e-3, 1e-2], &TheoryParams::default(), Variant::NonIpr).unwrap();
        assert!(curve.points.iter().all(|p| p.c_star == Threshold::Critical(1.0)));
    }

    #[test]
    fn boundary_curve_matches_pointwise() {
        let j = toy(ToyKind::Toy6);
        let grid: Vec<f64> = (1..=10).map(|k| k as f64 * 0.5).collect();
        let params = TheoryParams::default();
        for v in Variant::ALL {
            let curve = boundary_curve(&j, &grid, &params, v).unwrap();
            assert_eq!(curve.variant, v);
            for (pt, &i0) in curve.points.iter().zip(&grid) {
                assert_eq!(pt.i0, i0);
                assert_eq!(pt.c_star, critical_c(&j, &params.with_i0(i0), v).unwrap());
                assert!(pt.c_star.as_f64() >= 1.0);
            }
        }
    }

    #[test]
    fn boundary_csv_layout() {
        let j = toy(ToyKind::Toy1);
        let curve = boundary_curve(&j, &[1.0, 100.0], &TheoryParams::default(), Variant::IprCorrected).unwrap();
        let text = curve.to_csv_string();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "i0,c_star,variant,lambda_osc,ipr,alpha_eff");
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "1");
        assert_eq!(first[2], "ipr_corrected");
        assert_eq!(first[3].parse::<f64>().unwrap(), -2.0);
    }

    #[test]
    fn parameter_validation() {
        let j = toy(ToyKind::Toy1);
        let mut p = TheoryParams::new(1.0);
        p.threshold_r = 1.0;
        assert!(matches!(critical_c(&j, &p, Variant::NonIpr), Err(Error::InvalidParameter(_))));
        assert!(critical_c(&j, &TheoryParams::new(-1.0), Variant::NonIpr).is_err());
        assert!(boundary_curve(&j, &[0.0], &TheoryParams::default(), Variant::NonIpr).is_err());
    }

    #[test]
    fn degenerate_couplings() {
        let j = CouplingMatrix::from_dense(&DMatrix::zeros(3, 3)).unwrap();
        assert!(matches!(
            critical_c(&j, &TheoryParams::new(1.0), Variant::NonIpr),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("non-ipr".parse::<Variant>().unwrap(), Variant::NonIpr);
        assert_eq!("IPR".parse::<Variant>().unwrap(), Variant::IprCorrected);
        assert_eq!("ipr_corrected".parse::<Variant>().unwrap(), Variant::IprCorrected);
        assert!("x".parse::<Variant>().is_err());
    }
}
