//! Least-squares lines and sequence aggregates shared by the norm and exponent code.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub points: usize,
}

/// Ordinary least squares `y = slope * x + intercept`; `None` below two distinct abscissae.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let k = xs.len().min(ys.len());
    if k < 2 {
        return None;
    }
    let mx = xs[..k].iter().sum::<f64>() / k as f64;
    let my = ys[..k].iter().sum::<f64>() / k as f64;
    let sxx: f64 = xs[..k].iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs[..k].iter().zip(&ys[..k]).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs[..k].iter().zip(&ys[..k]).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    Some(LineFit { slope, intercept, residual: (rss / k as f64).sqrt(), points: k })
}

/// Slope of `log_base(values)` against `levels`, skipping non-positive values.
pub fn log_slope(levels: &[usize], values: &[f64], base: f64) -> Option<LineFit> {
    let lb = base.ln();
    let (xs, ys): (Vec<f64>, Vec<f64>) = levels
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(&l, v)| (l as f64, v.ln() / lb))
        .unzip();
    line_fit(&xs, &ys)
}

/// `(sum |t|^q)^{1/q}`, with `q = inf` as the maximum.
pub fn lq_sum(terms: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        terms.iter().fold(0.0, |a, t| a.max(t.abs()))
    } else {
        terms.iter().map(|t| t.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}
