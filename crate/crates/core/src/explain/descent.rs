//! Even Descent: walk away from an instance along the black-box gradient,
//! drawing step sizes so consecutive outputs differ by roughly `tau`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampler::{even_sample, PiecewiseDensity};
use crate::error::{Error, Result};
use crate::graph::{EdgeWeightTransform, InstanceGraph, InteractionNetwork};
use crate::toolkit::AutoOr;

const MAX_LAMBDA_EXPONENT: f64 = 600.0;

/// Black-box model: input vector in, scalar out.
pub trait Scorer: Sync {
    fn score(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Sync> Scorer for F {
    fn score(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    /// Target gap between consecutive outputs.
    pub tau: f64,
    /// Rate of the exponential factor at the instance; `auto` is `4 / b`.
    pub lambda0: AutoOr,
    pub theta_a: f64,
    /// Plateau start; `auto` is twice the first step scale.
    pub b: AutoOr,
    pub c_l: f64,
    pub m_min: usize,
    /// Bandwidth of `lambda(d) = lambda0 e^{d / sigma2}`, `d` the squared
    /// distance to the instance: steps shrink as the walk moves away.
    /// `auto` is `(m_min b)^2`.
    pub sigma2_dist: AutoOr,
    pub fd_step: f64,
    pub phi: EdgeWeightTransform,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            tau: 0.05,
            lambda0: AutoOr::Auto,
            theta_a: 0.5,
            b: AutoOr::Auto,
            c_l: 2.5,
            m_min: 10,
            sigma2_dist: AutoOr::Auto,
            fd_step: 1e-5,
            phi: EdgeWeightTransform::Identity,
            seed: 7,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("tau", self.tau)?;
        positive("fd_step", self.fd_step)?;
        for (name, v) in [("lambda0", self.lambda0), ("b", self.b), ("sigma2_dist", self.sigma2_dist)] {
            if let AutoOr::Value(v) = v {
                positive(name, v)?;
            }
        }
        if !(self.theta_a >= 0.0 && self.theta_a.is_finite()) {
            return Err(Error::Config(format!("theta_a must be nonnegative, got {}", self.theta_a)));
        }
        if !(self.c_l > 2.0 && self.c_l.is_finite()) {
            return Err(Error::Config(format!("c_l must exceed 2, got {}", self.c_l)));
        }
        if self.m_min == 0 {
            return Err(Error::Config("m_min must be at least 1".into()));
        }
        Ok(())
    }
}

/// Sampler parameters with every `auto` resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSampler {
    pub tau: f64,
    pub lambda0: f64,
    pub theta_a: f64,
    pub b: f64,
    pub c_l: f64,
    pub m_min: usize,
    pub sigma2_dist: f64,
}

impl ResolvedSampler {
    pub fn resolve(cfg: &SamplerConfig, first_scale: f64) -> Self {
        let b = cfg.b.value_or(2.0 * first_scale);
        Self {
            tau: cfg.tau,
            lambda0: cfg.lambda0.value_or(4.0 / b),
            theta_a: cfg.theta_a,
            b,
            c_l: cfg.c_l,
            m_min: cfg.m_min,
            sigma2_dist: cfg.sigma2_dist.value_or((cfg.m_min as f64 * b).powi(2)),
        }
    }
}

/// Central-difference gradient with per-coordinate step
/// `fd_step * (1 + |x_i|)`.
pub fn gradient_fd<S: Scorer + ?Sized>(f: &S, x: &[f64], fd_step: f64) -> Result<Vec<f64>> {
    (0..x.len())
        .into_par_iter()
        .map(|i| {
            let h = fd_step * (1.0 + x[i].abs());
            let mut probe = x.to_vec();
            probe[i] = x[i] + h;
            let up = f.score(&probe);
            probe[i] = x[i] - h;
            let down = f.score(&probe);
            if !(up.is_finite() && down.is_finite()) {
                return Err(Error::Numerical(format!("scorer returned a non-finite value probing coordinate {i}")));
            }
            Ok((up - down) / (2.0 * h))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tau0 {
    /// `tau / (N' g_i)` where `g_i != 0`, `None` elsewhere.
    pub steps: Vec<Option<f64>>,
    /// Number of nonzero gradient entries.
    pub n_defined: usize,
    /// Euclidean norm over the defined entries.
    pub norm: f64,
}

/// Per-coordinate steps that would each move a linearized `f` by
/// `tau / N'`. `None` when the gradient is identically zero.
pub fn tau0(grad: &[f64], tau: f64) -> Option<Tau0> {
    let n_defined = grad.iter().filter(|&&g| g != 0.0).count();
    if n_defined == 0 {
        return None;
    }
    let steps: Vec<Option<f64>> = grad.iter().map(|&g| (g != 0.0).then(|| tau / (n_defined as f64 * g))).collect();
    let norm = steps.iter().flatten().map(|s| s * s).sum::<f64>().sqrt();
    Some(Tau0 { steps, n_defined, norm })
}

/// Step along the unit gradient that moves a linearized `f` by `tau`.
pub fn step_scale(grad: &[f64], tau: f64) -> Option<f64> {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    (norm > 0.0).then(|| tau / norm)
}

/// Density for iteration `i` (1-based). Returns a warning when `a` had to
/// be clamped below `b`.
pub fn update_ps(
    iteration: usize,
    scale: f64,
    tau0_norm: f64,
    running_mean_tau0: f64,
    p: &ResolvedSampler,
    dist_to_origin: f64,
) -> Result<(PiecewiseDensity, Option<String>)> {
    if iteration == 0 {
        return Err(Error::invalid("iterations are counted from 1"));
    }
    let m = p.m_min as f64;
    let mut a = (scale * (1.0 + p.theta_a * (m - iteration as f64) / m)).max(0.0);
    let mut warning = None;
    if a >= p.b {
        let clamped = p.b * (1.0 - 1e-6);
        warning = Some(format!("iteration {iteration}: a = {a:.6e} >= b = {:.6e}, clamped", p.b));
        a = clamped;
    }
    let balance = if running_mean_tau0 + tau0_norm > 0.0 {
        (running_mean_tau0 - tau0_norm) / (running_mean_tau0 + tau0_norm)
    } else {
        0.0
    };
    let c = p.b * (p.c_l + balance);
    let lambda = p.lambda0 * (dist_to_origin / p.sigma2_dist).min(MAX_LAMBDA_EXPONENT).exp();
    Ok((PiecewiseDensity::new(a, p.b, c, lambda)?, warning))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Perturbed inputs: the descent branch reversed, then the instance,
    /// then the ascent branch.
    pub samples: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
    /// `+1` ascent, `-1` descent, `0` for the instance itself.
    pub directions: Vec<i8>,
    pub graphs: Vec<InstanceGraph>,
    /// Position of the instance in `samples`.
    pub origin: usize,
    pub params: Option<ResolvedSampler>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn origin_graph(&self) -> &InstanceGraph {
        &self.graphs[self.origin]
    }

    /// Outputs in trajectory order for one branch, starting next to the
    /// instance.
    pub fn branch_outputs(&self, direction: i8) -> Vec<f64> {
        let mut out: Vec<f64> =
            (0..self.len()).filter(|&i| self.directions[i] == direction).map(|i| self.outputs[i]).collect();
        if direction < 0 {
            out.reverse();
        }
        out
    }
}

struct Branch {
    samples: Vec<Vec<f64>>,
    outputs: Vec<f64>,
    warnings: Vec<String>,
}

fn branch<S: Scorer + ?Sized>(
    f: &S,
    x0: &[f64],
    f0: f64,
    sign: f64,
    grad0: &[f64],
    p: &ResolvedSampler,
    cfg: &SamplerConfig,
) -> Result<Branch> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(if sign > 0.0 { 0 } else { 1 });
    let cap = 10 * cfg.m_min;
    let mut out = Branch { samples: Vec::new(), outputs: Vec::new(), warnings: Vec::new() };
    let mut x = x0.to_vec();
    let mut f_prev = f0;
    let mut norm_sum = 0.0;
    let mut grad = grad0.to_vec();
    for i in 1..=cap {
        if i > 1 {
            grad = gradient_fd(f, &x, cfg.fd_step)?;
        }
        let Some(t0) = tau0(&grad, p.tau) else {
            return Ok(out);
        };
        let g_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let scale = p.tau / g_norm;
        // The density sees the running mean of earlier iterations only.
        let running_mean = if i > 1 { norm_sum / (i - 1) as f64 } else { 0.0 };
        let dist: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
        let (pd, warning) = update_ps(i, scale, t0.norm, running_mean, p, dist)?;
        norm_sum += t0.norm;
        out.warnings.extend(warning);
        let delta = even_sample(&pd, &mut rng)?;
        for (xi, gi) in x.iter_mut().zip(&grad) {
            *xi += sign * delta * gi / g_norm;
        }
        let fx = f.score(&x);
        if !fx.is_finite() {
            return Err(Error::Numerical(format!("scorer returned a non-finite value at step {i}")));
        }
        out.samples.push(x.clone());
        out.outputs.push(fx);
        if (fx - f_prev).abs() < p.tau {
            return Ok(out);
        }
        f_prev = fx;
    }
    Err(Error::NonConvergence {
        iterations: cap,
        detail: format!(
            "{} branch did not reach an output gap below tau = {} within {cap} steps",
            if sign > 0.0 { "ascent" } else { "descent" },
            p.tau
        ),
    })
}

/// Runs the ascent and descent branches from `x0` and joins them.
pub fn even_descent<S: Scorer + ?Sized>(
    f: &S,
    x0: &[f64],
    net: &InteractionNetwork,
    cfg: &SamplerConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if x0.len() != net.n_features() {
        return Err(Error::DimensionMismatch { expected: net.n_features(), got: x0.len() });
    }
    let f0 = f.score(x0);
    if !f0.is_finite() {
        return Err(Error::Numerical("scorer is not finite at the instance".into()));
    }
    let grad0 = gradient_fd(f, x0, cfg.fd_step)?;
    let origin_only = |params| -> Result<Trajectory> {
        Ok(Trajectory {
            samples: vec![x0.to_vec()],
            outputs: vec![f0],
            directions: vec![0],
            graphs: vec![net.instance_graph(x0, cfg.phi)?],
            origin: 0,
            params,
            warnings: Vec::new(),
        })
    };
    let Some(first_scale) = step_scale(&grad0, cfg.tau) else {
        return origin_only(None);
    };
    let p = ResolvedSampler::resolve(cfg, first_scale);
    let (up, down) =
        rayon::join(|| branch(f, x0, f0, 1.0, &grad0, &p, cfg), || branch(f, x0, f0, -1.0, &grad0, &p, cfg));
    let (up, down) = (up?, down?);

    let mut samples: Vec<Vec<f64>> = down.samples.into_iter().rev().collect();
    let mut outputs: Vec<f64> = down.outputs.into_iter().rev().collect();
    let mut directions = vec![-1i8; samples.len()];
    let origin = samples.len();
    samples.push(x0.to_vec());
    outputs.push(f0);
    directions.push(0);
    directions.extend(std::iter::repeat_n(1i8, up.samples.len()));
    samples.extend(up.samples);
    outputs.extend(up.outputs);
    let graphs = net.instance_graphs(&samples, cfg.phi)?;
    let mut warnings = down.warnings;
    warnings.extend(up.warnings);
    Ok(Trajectory { samples, outputs, directions, graphs, origin, params: Some(p), warnings })
}
