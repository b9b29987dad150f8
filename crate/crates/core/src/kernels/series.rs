//! Multinomial-series evaluation of the GSE kernel.
//!
//! `exp(-nu d) = c * exp(2 nu <G, G'>)` with `c = exp(-nu ||G||^2) exp(-nu ||G'||^2)`.
//! Expanding the exponential and each power `<G, G'>^n` with the multinomial
//! theorem gives
//!
//! ```text
//! k = c * sum_n (2 nu)^n * sum_{|alpha| = n} prod_e (G_e G'_e)^alpha_e / prod_e Gamma(alpha_e + 1)
//! ```
//!
//! Every multi-index is enumerated explicitly. This is an exponential-cost
//! reference used to check the closed form, never a production path.

use crate::error::{Error, Result};
use crate::graph::InstanceGraph;

pub const SERIES_MAX_EDGES: usize = 6;
pub const SERIES_MAX_TERMS: usize = 25;

/// Order-`n` inner sum: all `alpha` with `sum(alpha) = n` over the edges.
pub fn multinomial_term(g: &InstanceGraph, h: &InstanceGraph, n: usize) -> Result<f64> {
    check(g, h, n)?;
    let products: Vec<f64> = g.values.iter().zip(&h.values).map(|(a, b)| a * b).collect();
    let fact = factorials(n);
    let mut alpha = vec![0usize; products.len()];
    let mut total = 0.0;
    compositions(&mut alpha, 0, n, &mut |a| {
        let mut term = 1.0;
        for (p, &k) in products.iter().zip(a) {
            term *= p.powi(k as i32) / fact[k];
        }
        total += term;
    });
    Ok(total)
}

/// Truncated series through order `n_trunc`.
pub fn gse_series_reference(g: &InstanceGraph, h: &InstanceGraph, nu: f64, n_trunc: usize) -> Result<f64> {
    check(g, h, n_trunc)?;
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let c = (-nu * norm(&g.values)).exp() * (-nu * norm(&h.values)).exp();
    let mut sum = 0.0;
    let mut shrink = 1.0;
    for n in 0..=n_trunc {
        sum += shrink * multinomial_term(g, h, n)?;
        shrink *= 2.0 * nu;
    }
    Ok(c * sum)
}

fn check(g: &InstanceGraph, h: &InstanceGraph, n: usize) -> Result<()> {
    if g.network_id != h.network_id {
        return Err(Error::NetworkMismatch);
    }
    if g.len() > SERIES_MAX_EDGES || n > SERIES_MAX_TERMS {
        return Err(Error::invalid(format!(
            "series reference limited to {SERIES_MAX_EDGES} edges and order {SERIES_MAX_TERMS}, got {} edges and order {n}",
            g.len()
        )));
    }
    Ok(())
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for k in 1..=n {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

fn compositions(alpha: &mut [usize], pos: usize, remaining: usize, visit: &mut impl FnMut(&[usize])) {
    if alpha.is_empty() {
        if remaining == 0 {
            visit(alpha);
        }
        return;
    }
    if pos == alpha.len() - 1 {
        alpha[pos] = remaining;
        visit(alpha);
        return;
    }
    for k in 0..=remaining {
        alpha[pos] = k;
        compositions(alpha, pos + 1, remaining - k, visit);
    }
    alpha[pos] = 0;
}
