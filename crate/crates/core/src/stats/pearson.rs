use crate::error::StatsError;

use super::special::t_two_sided_p;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided p-value of `r = 0` from the t distribution with `n - 2` df.
    pub p: f64,
    /// Pairs used.
    pub n: usize,
    /// Pairs dropped because either side was missing or non-finite.
    pub dropped: usize,
}

/// Pearson product-moment correlation with its t-test p-value.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<(f64, f64), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch { left: x.len(), right: y.len() });
    }
    let c = correlate(x.iter().copied().zip(y.iter().copied()), 0)?;
    Ok((c.r, c.p))
}

/// [`pearson_r`] over the pairs where both values are present and finite.
pub fn pearson_pairwise(x: &[Option<f64>], y: &[Option<f64>]) -> Result<Correlation, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch { left: x.len(), right: y.len() });
    }
    let valid = |v: &Option<f64>| v.filter(|f| f.is_finite());
    let pairs = x.iter().zip(y).filter_map(|(a, b)| Some((valid(a)?, valid(b)?)));
    let kept = pairs.clone().count();
    correlate(pairs, x.len() - kept)
}

fn correlate<I: Iterator<Item = (f64, f64)> + Clone>(pairs: I, dropped: usize) -> Result<Correlation, StatsError> {
    let (mut n, mut sx, mut sy) = (0usize, 0.0, 0.0);
    for (a, b) in pairs.clone() {
        if !a.is_finite() || !b.is_finite() {
            return Err(StatsError::DegenerateInput("non-finite value"));
        }
        n += 1;
        sx += a;
        sy += b;
    }
    if n < 3 {
        return Err(StatsError::DegenerateInput("fewer than three pairs"));
    }
    let (mx, my) = (sx / n as f64, sy / n as f64);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in pairs {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateInput("constant input"));
    }
    let r = (sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if r.abs() == 1.0 { 0.0 } else { t_two_sided_p(r * libm::sqrt(df / (1.0 - r * r)), df) };
    Ok(Correlation { r, p, n, dropped })
}
