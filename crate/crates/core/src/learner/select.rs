use crate::error::{Error, Result};

/// One-way ANOVA F statistic between the two label groups.
///
/// `F = 0` when the class means coincide; `+inf` when the classes separate
/// with zero within-class variance.
pub fn f_statistic<R: AsRef<[f64]>>(rows: &[R], y: &[i8], feature: usize) -> f64 {
    let (mut n1, mut n2, mut s1, mut s2) = (0usize, 0usize, 0.0, 0.0);
    for (row, &label) in rows.iter().zip(y) {
        let v = row.as_ref()[feature];
        if label > 0 {
            n1 += 1;
            s1 += v;
        } else {
            n2 += 1;
            s2 += v;
        }
    }
    let n = n1 + n2;
    if n1 == 0 || n2 == 0 {
        return 0.0;
    }
    let (m1, m2) = (s1 / n1 as f64, s2 / n2 as f64);
    let grand = (s1 + s2) / n as f64;
    let between = n1 as f64 * (m1 - grand).powi(2) + n2 as f64 * (m2 - grand).powi(2);
    let within: f64 = rows
        .iter()
        .zip(y)
        .map(|(row, &label)| {
            let mu = if label > 0 { m1 } else { m2 };
            (row.as_ref()[feature] - mu).powi(2)
        })
        .sum();
    // Rounding can leave a tiny positive `between` for equal means.
    if between <= f64::EPSILON * within.max(f64::MIN_POSITIVE) || between == 0.0 {
        return 0.0;
    }
    if within == 0.0 || n <= 2 {
        return f64::INFINITY;
    }
    between / (within / (n - 2) as f64)
}

/// Indices of the `k` features with the largest F statistic, best first.
/// Equal scores keep the lower index first.
pub fn f_statistic_select<R: AsRef<[f64]>>(rows: &[R], y: &[i8], k: usize) -> Result<Vec<usize>> {
    let n = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
    if k == 0 || k > n {
        return Err(Error::Config(format!("cannot select {k} of {n} features")));
    }
    if !(y.iter().any(|&l| l > 0) && y.iter().any(|&l| l < 0)) {
        return Err(Error::Degenerate("feature selection needs both classes".into()));
    }
    let scores: Vec<f64> = (0..n).map(|j| f_statistic(rows, y, j)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(order)
}
