//! Step-size density for Even Descent.
//!
//! `p_T` ramps linearly from zero at `a` to a plateau on `(b, c]`:
//!
//! ```text
//! p_T(d) = (2/v) (d - a) / u   on (a, b]
//!        = 2/v                 on (b, c]
//! u = b - a,  v = 2c - a - b
//! ```
//!
//! and the sampling density is `p_S = p_T * lambda e^{-lambda d} / Z`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid points for the numeric inverse CDF.
pub const CDF_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseDensity {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub lambda: f64,
}

/// `(1 - e^{-x}(1 + x)) / x^2`, i.e. `int_0^1 t e^{-x t} dt`.
fn ramp_integral(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        0.5 - x / 3.0 + x * x / 8.0 - x.powi(3) / 30.0 + x.powi(4) / 144.0
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / (x * x)
    }
}

/// `(1 - e^{-x}) / x`, i.e. `int_0^1 e^{-x t} dt`.
fn flat_integral(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0 - x / 2.0
    } else {
        -(-x).exp_m1() / x
    }
}

impl PiecewiseDensity {
    pub fn new(a: f64, b: f64, c: f64, lambda: f64) -> Result<Self> {
        let pd = Self { a, b, c, lambda };
        pd.validate()?;
        Ok(pd)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { a, b, c, lambda } = *self;
        if ![a, b, c, lambda].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("density parameters must be finite"));
        }
        if !(a < b && b < c) {
            return Err(Error::Degenerate(format!("density needs a < b < c, got a={a}, b={b}, c={c}")));
        }
        if !(lambda > 0.0) {
            return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
        }
        Ok(())
    }

    pub fn u(&self) -> f64 {
        self.b - self.a
    }

    pub fn v(&self) -> f64 {
        2.0 * self.c - self.a - self.b
    }

    pub fn p_t(&self, d: f64) -> f64 {
        if d <= self.a || d > self.c {
            0.0
        } else if d <= self.b {
            2.0 / self.v() * (d - self.a) / self.u()
        } else {
            2.0 / self.v()
        }
    }

    /// Closed-form `int p_T`; equals 1 up to rounding.
    pub fn p_t_mass(&self) -> f64 {
        2.0 / self.v() * (self.u() / 2.0 + (self.c - self.b))
    }

    /// Closed-form mean of `p_T` alone.
    pub fn p_t_mean(&self) -> f64 {
        let (a, b, c, u) = (self.a, self.b, self.c, self.u());
        // int_a^b d (d - a)/u dd = u (a/2 + u/3)
        let ramp = u * (a / 2.0 + u / 3.0);
        let flat = (c * c - b * b) / 2.0;
        2.0 / self.v() * (ramp + flat)
    }

    /// `int_a^x p_T(d) lambda e^{-lambda d} dd`, scaled by `e^{lambda a}`.
    fn scaled_mass_below(&self, x: f64) -> f64 {
        let (a, b, lam) = (self.a, self.b, self.lambda);
        let v = self.v();
        let u = self.u();
        if x <= a {
            return 0.0;
        }
        let t = x.min(b) - a;
        let mut mass = 2.0 / v / u * lam * t * t * ramp_integral(lam * t);
        if x > b {
            let s = x.min(self.c) - b;
            mass += 2.0 / v * lam * (-lam * u).exp() * s * flat_integral(lam * s);
        }
        mass
    }

    /// Normalization constant `Z = int p_T(d) lambda e^{-lambda d} dd`.
    pub fn normalizer(&self) -> f64 {
        (-self.lambda * self.a).exp() * self.scaled_mass_below(self.c)
    }

    pub fn pdf(&self, d: f64) -> f64 {
        if d <= self.a || d > self.c {
            return 0.0;
        }
        self.p_t(d) * self.lambda * (-self.lambda * (d - self.a)).exp() / self.scaled_mass_below(self.c)
    }

    /// Closed-form CDF of `p_S`.
    pub fn cdf(&self, d: f64) -> f64 {
        if d <= self.a {
            0.0
        } else if d >= self.c {
            1.0
        } else {
            (self.scaled_mass_below(d) / self.scaled_mass_below(self.c)).min(1.0)
        }
    }

    /// CDF tabulated at `CDF_GRID` equally spaced points over `[a, c]`.
    pub fn cdf_grid(&self) -> (Vec<f64>, Vec<f64>) {
        let n = CDF_GRID;
        let step = (self.c - self.a) / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|k| if k == n - 1 { self.c } else { self.a + step * k as f64 }).collect();
        let total = self.scaled_mass_below(self.c);
        let mut ps: Vec<f64> = xs.iter().map(|&x| self.scaled_mass_below(x) / total).collect();
        ps[0] = 0.0;
        ps[n - 1] = 1.0;
        for k in 1..n {
            ps[k] = ps[k].max(ps[k - 1]);
        }
        (xs, ps)
    }

    /// The piecewise-linear CDF that [`even_sample`] inverts.
    pub fn grid_cdf(&self, d: f64) -> f64 {
        let (xs, ps) = self.cdf_grid();
        interpolate(&xs, &ps, d)
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let k = xs.partition_point(|&g| g <= x) - 1;
    let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + w * (ys[k + 1] - ys[k])
}

/// Draws one step size from `p_S` by inverting the tabulated CDF.
pub fn even_sample<R: Rng + ?Sized>(pd: &PiecewiseDensity, rng: &mut R) -> Result<f64> {
    pd.validate()?;
    let (xs, ps) = pd.cdf_grid();
    Ok(invert(&xs, &ps, pd, rng))
}

/// Draws `n` step sizes, tabulating the CDF once.
pub fn even_sample_n<R: Rng + ?Sized>(pd: &PiecewiseDensity, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    pd.validate()?;
    let (xs, ps) = pd.cdf_grid();
    Ok((0..n).map(|_| invert(&xs, &ps, pd, rng)).collect())
}

fn invert<R: Rng + ?Sized>(xs: &[f64], ps: &[f64], pd: &PiecewiseDensity, rng: &mut R) -> f64 {
    // In (0, 1], so the draw lands in (a, c].
    let p = 1.0 - rng.random::<f64>();
    let k = ps.partition_point(|&q| q < p).clamp(1, ps.len() - 1);
    let (p0, p1) = (ps[k - 1], ps[k]);
    let w = if p1 > p0 { (p - p0) / (p1 - p0) } else { 1.0 };
    let d = xs[k - 1] + w * (xs[k] - xs[k - 1]);
    if d <= pd.a {
        pd.a + f64::EPSILON * pd.a.abs().max(f64::MIN_POSITIVE)
    } else {
        d.min(pd.c)
    }
}
