//! Searching the GSE rate `nu` for maximal Gram-matrix variance.
//!
//! Kernel entries saturate at 1 for tiny `nu` and collapse to 0 for large
//! `nu`; in between they spread out. The variance of the off-diagonal
//! entries, as a function of `nu`, is maximized by gradient ascent with a
//! step derived from the Lipschitz constant of its derivative,
//! `L = 2 (D - 1) / D * d_max`.
//!
//! The variance depends on `nu * d` only, so its curvature grows with
//! `d_max^2`. The automatic step therefore applies `1 / L` on distances
//! measured in units of `d_max`, which keeps the ascent monotone at any
//! distance scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::DistanceMatrix;
use crate::toolkit::AutoOr;

const MAX_STEP_GROWTH: f64 = 1e12;

/// Lower bound `nu` is projected onto during the search.
pub const NU_FLOOR: f64 = 1e-12;

/// Unordered pairwise distances `d_k`, `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSet {
    distances: Vec<f64>,
    d_max: f64,
}

impl DistanceSet {
    pub fn new(distances: Vec<f64>) -> Result<Self> {
        if let Some(bad) = distances.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::invalid(format!("distance {bad} is not a finite nonnegative number")));
        }
        let d_max = distances.iter().copied().fold(0.0, f64::max);
        Ok(Self { distances, d_max })
    }

    pub fn from_matrix(dm: &DistanceMatrix) -> Self {
        let distances = dm.upper_triangle();
        let d_max = distances.iter().copied().fold(0.0, f64::max);
        Self { distances, d_max }
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    fn positive_median(&self) -> Option<f64> {
        let mut pos: Vec<f64> = self.distances.iter().copied().filter(|d| *d > 0.0).collect();
        if pos.is_empty() {
            return None;
        }
        pos.sort_by(f64::total_cmp);
        let n = pos.len();
        Some(if n % 2 == 1 { pos[n / 2] } else { 0.5 * (pos[n / 2 - 1] + pos[n / 2]) })
    }

    fn has_distinct(&self) -> bool {
        self.distances.first().is_some_and(|first| self.distances.iter().any(|d| d != first))
    }
}

/// Empirical variance of `exp(-nu d_k)` over the set.
pub fn kernel_variance(ds: &DistanceSet, nu: f64) -> f64 {
    let n = ds.len();
    if n < 2 {
        return 0.0;
    }
    let k: Vec<f64> = ds.distances.iter().map(|d| (-nu * d).exp()).collect();
    let mean = k.iter().sum::<f64>() / n as f64;
    k.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64
}

/// `d/dnu` of [`kernel_variance`]:
/// `mean(-2 d e^{-2 nu d}) - 2 mean(e^{-nu d}) mean(-d e^{-nu d})`,
/// evaluated as `2 mean((k - mean k) * (-d k))`.
pub fn variance_gradient(ds: &DistanceSet, nu: f64) -> f64 {
    let n = ds.len();
    if n < 2 {
        return 0.0;
    }
    let k: Vec<f64> = ds.distances.iter().map(|d| (-nu * d).exp()).collect();
    let mean = k.iter().sum::<f64>() / n as f64;
    2.0 * ds.distances.iter().zip(&k).map(|(d, v)| (v - mean) * (-d * v)).sum::<f64>() / n as f64
}

/// `D / (2 (D - 1) d_max)`, the reciprocal of the Lipschitz constant.
pub fn lipschitz_rate(ds: &DistanceSet) -> Result<f64> {
    let d = ds.len();
    if d < 2 {
        return Err(Error::Degenerate(format!("D < 2: need at least two pairwise distances, got {d}")));
    }
    if ds.d_max <= 0.0 {
        return Err(Error::Degenerate("d_max = 0: all graphs coincide".into()));
    }
    let d = d as f64;
    Ok(d / (2.0 * (d - 1.0) * ds.d_max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    #[default]
    GradientAscent,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NuSearchConfig {
    pub optimizer: Optimizer,
    /// Gradient ascent: `auto` is the Lipschitz step; a number is a raw step
    /// in `nu` units. ADAM: step in units of `1 / d_max` (`auto` = 0.05).
    pub learning_rate: AutoOr,
    pub max_iters: usize,
    pub tolerance: f64,
    /// `auto` = `1 / median(positive d)`.
    pub nu_init: AutoOr,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Gradient ascent tries longer steps than the configured one and keeps
    /// them only when the variance rises; the base step is always the
    /// fallback.
    pub step_growth: bool,
}

impl Default for NuSearchConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::GradientAscent,
            learning_rate: AutoOr::Auto,
            max_iters: 100_000,
            tolerance: 1e-15,
            nu_init: AutoOr::Auto,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step_growth: true,
        }
    }
}

impl NuSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if let AutoOr::Value(lr) = self.learning_rate {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::Config(format!("learning_rate must be positive, got {lr}")));
            }
        }
        if let AutoOr::Value(nu) = self.nu_init {
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(Error::Config(format!("nu_init must be positive, got {nu}")));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub nu: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuSearchResult {
    pub nu_star: f64,
    pub variance: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TracePoint>,
}

/// Maximizes [`kernel_variance`] over `nu > 0`.
///
/// Running out of iterations is an error carrying the partial result.
pub fn find_nu_star(ds: &DistanceSet, cfg: &NuSearchConfig) -> Result<NuSearchResult> {
    cfg.validate()?;
    let base_rate = lipschitz_rate(ds)?;
    if !ds.has_distinct() {
        return Err(Error::Degenerate("no distinct distances: variance is identically 0".into()));
    }
    let nu0 = match cfg.nu_init {
        AutoOr::Value(v) => v,
        AutoOr::Auto => 1.0 / ds.positive_median().expect("d_max > 0"),
    };
    let result = match cfg.optimizer {
        Optimizer::GradientAscent => {
            let step = match cfg.learning_rate {
                AutoOr::Value(v) => v,
                AutoOr::Auto => base_rate / ds.d_max,
            };
            gradient_ascent(ds, nu0, step, cfg)
        }
        Optimizer::Adam => {
            let lr = match cfg.learning_rate {
                AutoOr::Value(v) => v,
                AutoOr::Auto => 0.05,
            };
            adam(ds, nu0, lr, cfg)
        }
    };
    if result.converged {
        Ok(result)
    } else {
        Err(Error::NuSearchStalled(Box::new(result)))
    }
}

fn gradient_ascent(ds: &DistanceSet, nu0: f64, step: f64, cfg: &NuSearchConfig) -> NuSearchResult {
    let mut nu = nu0.max(NU_FLOOR);
    let mut var = kernel_variance(ds, nu);
    let mut trace = vec![TracePoint { nu, variance: var }];
    // Multiplier on the safe step, grown while larger steps keep improving.
    let mut mult = 1.0f64;
    for it in 1..=cfg.max_iters {
        let g = variance_gradient(ds, nu);
        let at = |m: f64| {
            let next = (nu + step * m * g).max(NU_FLOOR);
            (next, kernel_variance(ds, next))
        };
        let (next, next_var) = if cfg.step_growth {
            let long = at(mult * 2.0);
            if long.1 > var {
                mult = (mult * 2.0).min(MAX_STEP_GROWTH);
                long
            } else {
                let same = at(mult);
                if mult > 1.0 && same.1 > var {
                    same
                } else {
                    mult = (mult / 4.0).max(1.0);
                    at(1.0)
                }
            }
        } else {
            at(1.0)
        };
        let delta = next_var - var;
        nu = next;
        var = next_var;
        trace.push(TracePoint { nu, variance: var });
        if delta.abs() < cfg.tolerance {
            return NuSearchResult { nu_star: nu, variance: var, iterations: it, converged: true, trace };
        }
    }
    NuSearchResult { nu_star: nu, variance: var, iterations: cfg.max_iters, converged: false, trace }
}

fn adam(ds: &DistanceSet, nu0: f64, lr: f64, cfg: &NuSearchConfig) -> NuSearchResult {
    let mut nu = nu0.max(NU_FLOOR);
    let mut var = kernel_variance(ds, nu);
    let mut best = (nu, var);
    let mut trace = vec![TracePoint { nu, variance: var }];
    let (mut m, mut v) = (0.0, 0.0);
    // ADAM never settles exactly; require a short run of small changes.
    let mut quiet = 0;
    for it in 1..=cfg.max_iters {
        // Gradient in d_max-normalized coordinates.
        let g = variance_gradient(ds, nu) / ds.d_max;
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        let m_hat = m / (1.0 - cfg.beta1.powi(it as i32));
        let v_hat = v / (1.0 - cfg.beta2.powi(it as i32));
        nu = (nu + lr * m_hat / (v_hat.sqrt() + cfg.epsilon) / ds.d_max).max(NU_FLOOR);
        let next_var = kernel_variance(ds, nu);
        let delta = next_var - var;
        var = next_var;
        trace.push(TracePoint { nu, variance: var });
        if var > best.1 {
            best = (nu, var);
        }
        quiet = if delta.abs() < cfg.tolerance { quiet + 1 } else { 0 };
        if quiet >= 10 {
            return NuSearchResult { nu_star: best.0, variance: best.1, iterations: it, converged: true, trace };
        }
    }
    NuSearchResult { nu_star: best.0, variance: best.1, iterations: cfg.max_iters, converged: false, trace }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn set(d: &[f64]) -> DistanceSet {
        DistanceSet::new(d.to_vec()).unwrap()
    }

    #[test]
    fn variance_examples() {
        assert_eq!(kernel_variance(&set(&[2.0]), 0.3), 0.0);
        assert!(kernel_variance(&set(&[1.5, 1.5, 1.5]), 0.7).abs() < 1e-18);
        // variance of {e^-0.5, e^-4} = ((e^-0.5 - e^-4) / 2)^2
        let expected = ((-0.5f64).exp() - (-4.0f64).exp()).powi(2) / 4.0;
        assert_relative_eq!(kernel_variance(&set(&[0.5, 4.0]), 1.0), expected, epsilon = 1e-15);
        assert_relative_eq!(expected, 0.086499, epsilon = 1e-5);
    }

    #[test]
    fn gradient_vanishes_for_constant_and_large_nu() {
        assert_eq!(variance_gradient(&set(&[2.0, 2.0]), 0.4), 0.0);
        let ds = set(&[0.3, 1.0, 2.5]);
        assert!(variance_gradient(&ds, 1e6 / 0.3).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_printed_formula() {
        let ds = set(&[0.2, 0.9, 1.7, 3.1]);
        let nu = 0.6;
        let n = ds.len() as f64;
        let mean: f64 = ds.distances().iter().map(|d| (-nu * d).exp()).sum::<f64>() / n;
        let a: f64 = ds.distances().iter().map(|d| -2.0 * d * (-2.0 * nu * d).exp()).sum::<f64>() / n;
        let b: f64 = ds.distances().iter().map(|d| -d * (-nu * d).exp()).sum::<f64>() / n;
        assert_relative_eq!(variance_gradient(&ds, nu), a - 2.0 * mean * b, epsilon = 1e-14);
    }

    #[test]
    fn lipschitz_examples() {
        assert_relative_eq!(lipschitz_rate(&set(&[1.0, 0.5])).unwrap(), 1.0);
        let big = set(&vec![1.0; 1_000_000]);
        assert_relative_eq!(lipschitz_rate(&big).unwrap(), 0.5, epsilon = 1e-6);
        let mut ten = vec![1.0; 10];
        ten[3] = 4.0;
        assert_relative_eq!(lipschitz_rate(&set(&ten)).unwrap(), 10.0 / 72.0, epsilon = 1e-15);
        assert!(lipschitz_rate(&set(&[1.0])).is_err());
        assert!(lipschitz_rate(&set(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn degenerate_search() {
        let err = find_nu_star(&set(&[1.0, 1.0, 1.0]), &NuSearchConfig::default());
        assert!(matches!(err, Err(Error::Degenerate(_))));
        let err = find_nu_star(&set(&[]), &NuSearchConfig::default());
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }

    #[test]
    fn two_point_search_finds_the_peak() {
        let ds = set(&[0.5, 4.0]);
        let r = find_nu_star(&ds, &NuSearchConfig::default()).unwrap();
        // Stationary point of (e^-0.5nu - e^-4nu)^2: 0.5 e^-0.5nu = 4 e^-4nu.
        let exact = (8.0f64).ln() / 3.5;
        assert!((r.nu_star - exact).abs() < 1e-5, "{} vs {exact}", r.nu_star);
        assert!(r.variance >= r.trace[0].variance);
    }

    #[test]
    fn adam_reaches_same_peak() {
        let ds = set(&[0.5, 4.0, 1.2, 2.2]);
        let ga = find_nu_star(&ds, &NuSearchConfig::default()).unwrap();
        let cfg = NuSearchConfig { optimizer: Optimizer::Adam, tolerance: 1e-13, ..Default::default() };
        let ad = find_nu_star(&ds, &cfg).unwrap();
        assert!((ga.variance - ad.variance).abs() < 1e-9);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let ds = set(&[0.5, 4.0]);
        let cfg = NuSearchConfig { max_iters: 1, nu_init: AutoOr::Value(1e-4), ..Default::default() };
        match find_nu_star(&ds, &cfg) {
            Err(Error::NuSearchStalled(r)) => assert_eq!(r.trace.len(), 2),
            other => panic!("expected stall, got {other:?}"),
        }
    }

    #[test]
    fn outlier_distance_still_converges() {
        // One distance far above the rest makes the safe step tiny.
        let mut d: Vec<f64> = (1..200).map(|k| 1.0 + (k as f64 * 0.37).sin().abs()).collect();
        d.push(5000.0);
        let ds = set(&d);
        let r = find_nu_star(&ds, &NuSearchConfig::default()).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1].variance >= w[0].variance - 1e-15));
        let grid_best = (1..4000).map(|k| k as f64 * 1e-3).map(|nu| kernel_variance(&ds, nu)).fold(0.0, f64::max);
        assert!(r.variance >= grid_best - 1e-9);

        let fixed = NuSearchConfig { step_growth: false, ..Default::default() };
        assert!(matches!(find_nu_star(&ds, &fixed), Err(Error::NuSearchStalled(_))));
    }

    #[test]
    fn result_json_shape() {
        let r = find_nu_star(&set(&[0.5, 4.0]), &NuSearchConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["nu_star", "variance", "iterations", "trace"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
