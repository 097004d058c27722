//! Gaussian effective gain `alpha_eff = E_{h ~ N(0, sigma^2)}[sech^2(I0 h)]`.
//!
//! The expectation depends only on `a = I0 * sigma`. For moderate `a` it is
//! evaluated by Gauss-Hermite quadrature with node doubling. The integrand
//! has poles a distance `pi / (2a)` from the real axis, so the node count
//! needed for a fixed accuracy grows like `a^2` (tens of thousands of nodes
//! at `a ~ 20`). Above [`ASYMPTOTIC_SWITCH`] the large-`a` expansion
//!
//! ```text
//! alpha = 1/(a sqrt(2 pi)) * sum_k (-1)^k M_2k / (2^k k! a^2k),
//! M_2k = integral of u^2k sech^2(u) du
//! ```
//!
//! is used instead; with eight terms it is accurate to ~1e-14 there.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// `I0 * sigma_h` at and above which the asymptotic expansion is used.
pub const ASYMPTOTIC_SWITCH: f64 = 8.0;
/// First Gauss-Hermite node count tried.
pub const INITIAL_NODES: usize = 64;
/// Node counts are doubled up to this limit.
pub const MAX_NODES: usize = 1 << 14;
/// Successive estimates must agree to this absolute tolerance.
pub const DOUBLING_TOLERANCE: f64 = 1e-8;

/// `|B_2k|` for `k = 1..=7`.
const BERNOULLI_ABS: [f64; 7] = [
    1.0 / 6.0,
    1.0 / 30.0,
    1.0 / 42.0,
    1.0 / 30.0,
    5.0 / 66.0,
    691.0 / 2730.0,
    7.0 / 6.0,
];

/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureEstimate {
    pub value: f64,
    /// Gauss-Hermite node count of the returned estimate.
    pub nodes: usize,
    /// Difference to the estimate with half as many nodes.
    pub last_change: f64,
    pub converged: bool,
}

/// `E[sech^2(I0 h)]` for `h ~ N(0, sigma_h^2)`; in `(0, 1]`.
pub fn alpha_eff(i0: f64, sigma_h: f64) -> f64 {
    let a = (i0 * sigma_h).abs();
    if a == 0.0 {
        1.0
    } else if a >= ASYMPTOTIC_SWITCH {
        alpha_eff_asymptotic(i0, sigma_h)
    } else {
        let est = alpha_eff_gauss_hermite(i0, sigma_h, MAX_NODES);
        if !est.converged {
            log::warn!(
                "alpha_eff quadrature unconverged at I0*sigma = {a}: change {:.2e} with {} nodes",
                est.last_change,
                est.nodes
            );
        }
        est.value
    }
}

/// Gauss-Hermite evaluation, doubling from [`INITIAL_NODES`] until two
/// successive estimates differ by less than [`DOUBLING_TOLERANCE`] or
/// `max_nodes` is reached.
pub fn alpha_eff_gauss_hermite(i0: f64, sigma_h: f64, max_nodes: usize) -> QuadratureEstimate {
    let a = (i0 * sigma_h).abs();
    let eval = |nodes: usize| {
        let rule = even_hermite_rule(nodes);
        rule.t
            .iter()
            .zip(&rule.w)
            .map(|(&t, &w)| w * sech_sq(a * (2.0 * t).sqrt()))
            .sum::<f64>()
            / std::f64::consts::PI.sqrt()
    };
    let mut nodes = INITIAL_NODES;
    let mut prev = eval(nodes);
    let mut last_change = f64::INFINITY;
    while nodes < max_nodes {
        nodes *= 2;
        let next = eval(nodes);
        last_change = (next - prev).abs();
        prev = next;
        if last_change < DOUBLING_TOLERANCE {
            return QuadratureEstimate {
                value: next,
                nodes,
                last_change,
                converged: true,
            };
        }
    }
    QuadratureEstimate {
        value: prev,
        nodes,
        last_change,
        converged: false,
    }
}

/// Large-`I0 sigma_h` expansion of the effective gain.
pub fn alpha_eff_asymptotic(i0: f64, sigma_h: f64) -> f64 {
    let a = (i0 * sigma_h).abs();
    let inv_a2 = 1.0 / (a * a);
    let mut sum = 2.0; // M_0
    let mut scale = 1.0; // 1 / (2^k k! a^2k)
    let pi_sq = std::f64::consts::PI * std::f64::consts::PI;
    let mut pi_pow = 1.0;
    let mut two_pow = 1.0;
    for (idx, b) in BERNOULLI_ABS.iter().enumerate() {
        let k = (idx + 1) as f64;
        scale *= inv_a2 / (2.0 * k);
        pi_pow *= pi_sq;
        two_pow *= 4.0;
        let moment = (two_pow - 2.0) * pi_pow * b / (two_pow / 2.0);
        let sign = if idx % 2 == 0 { -1.0 } else { 1.0 };
        sum += sign * moment * scale;
    }
    sum / (a * (2.0 * std::f64::consts::PI).sqrt())
}

#[inline]
fn sech_sq(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// The positive half of an even-order Gauss-Hermite rule, in the squared
/// variable: `integral e^{-x^2} f(x) dx = sum_k w_k f(sqrt(t_k))` for even
/// `f`. This is the generalized Gauss-Laguerre rule with exponent -1/2, which
/// needs only half as many nodes as the full symmetric rule.
#[derive(Debug)]
pub struct HalfRule {
    pub t: Vec<f64>,
    pub w: Vec<f64>,
}

/// Cached half rule equivalent to the `nodes`-point Gauss-Hermite rule.
pub fn even_hermite_rule(nodes: usize) -> Arc<HalfRule> {
    assert!(nodes >= 2 && nodes.is_multiple_of(2), "node count must be even");
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<HalfRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(rule) = cache.lock().unwrap().get(&nodes) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(half_rule(nodes / 2));
    cache
        .lock()
        .unwrap()
        .entry(nodes)
        .or_insert(rule)
        .clone()
}

fn half_rule(m: usize) -> HalfRule {
    const ALPHA: f64 = -0.5;
    let mut d: Vec<f64> = (0..m).map(|k| 2.0 * k as f64 + ALPHA + 1.0).collect();
    let mut e: Vec<f64> = (1..=m)
        .map(|k| {
            if k < m {
                (k as f64 * (k as f64 + ALPHA)).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut z = vec![0.0; m];
    z[0] = 1.0;
    let ok = tridiagonal_ql_first_components(&mut d, &mut e, &mut z);
    assert!(ok, "QL iteration failed for the {m}-node Laguerre rule");

    let mu0 = std::f64::consts::PI.sqrt(); // Gamma(1/2)
    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z.iter().map(|z| mu0 * z * z)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    HalfRule {
        t: pairs.iter().map(|p| p.0).collect(),
        w: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix (Golub-Welsch). On
/// return `d` holds the eigenvalues and `z` the first component of each
/// normalized eigenvector, given `z = e_1` on entry. `e[i]` couples rows `i`
/// and `i + 1`; the last entry is workspace.
fn tridiagonal_ql_first_components(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> bool {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return false;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    true
}
