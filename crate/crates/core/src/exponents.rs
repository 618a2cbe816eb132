//! Scaling-exponent estimates from per-level data, digit functionals and bound audits.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcrep::SeriesSpec;
use crate::grid::{GridFunction, GridSpace};
use crate::littlewood_paley::{self, LpDecomposition};
use crate::localapprox::{self, Boundary};
use crate::mra::{self, GeneratorSet};
use crate::stats::{line_fit, log_slope, LineFit};
use crate::tiling::TilingSpec;

/// Minimum number of levels in a regression window.
pub const MIN_LEVELS: usize = 4;
/// Estimates within this distance of the ceiling are flagged.
pub const SATURATION_BAND: f64 = 0.1;
/// Estimates below this are flagged as indistinguishable from zero.
pub const FLOOR: f64 = 0.05;
/// Per-level values below this fraction of the sup norm count as zero.
const ZERO_FRACTION: f64 = 1e-12;
/// Sliding sub-window length for the limsup/liminf surrogates.
const TAIL_WINDOW: usize = 4;
/// Bound on `Delta_l / Delta_{l+1}` above which the ratio is treated as unbounded.
pub const RATIO_BOUND: f64 = 16.0;
pub const AUDIT_TOL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Osc,
    Diff,
    LpBand,
    Sigma,
    Residue,
    Coeff,
    Wavelet,
    DoubleLimit,
}

impl Route {
    pub const ALL: [Route; 8] = [
        Route::Osc,
        Route::Diff,
        Route::LpBand,
        Route::Sigma,
        Route::Residue,
        Route::Coeff,
        Route::Wavelet,
        Route::DoubleLimit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Route::Osc => "osc",
            Route::Diff => "diff",
            Route::LpBand => "lp-band",
            Route::Sigma => "sigma",
            Route::Residue => "residue",
            Route::Coeff => "coeff",
            Route::Wavelet => "wavelet",
            Route::DoubleLimit => "double-limit",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Route::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::BadParameters(format!("unknown route `{s}`")))
    }

    pub fn needs_generators(self) -> bool {
        matches!(self, Route::Sigma | Route::Residue | Route::Coeff | Route::Wavelet)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentReport {
    pub estimate: f64,
    pub route: Route,
    pub level_window: [usize; 2],
    /// RMS residual of the log-linear fit, in exponent units.
    pub fit_quality: f64,
    pub saturation_flag: bool,
    pub floor_flag: bool,
    pub ceiling: f64,
    /// Smallest and largest slopes over sliding sub-windows of the fit window.
    pub tail_min: f64,
    pub tail_max: f64,
    pub levels: Vec<usize>,
    pub values: Vec<f64>,
    pub reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form: Option<DoubleLimitForm>,
}

impl ExponentReport {
    pub fn with_reference(mut self, r: Option<f64>) -> Self {
        self.reference = r;
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `-slope` of `log_lambda(values)` against the level, clipped at `ceiling`.
pub fn regress(
    route: Route,
    levels: &[usize],
    values: &[f64],
    lambda: f64,
    ceiling: f64,
    scale: f64,
) -> Result<ExponentReport> {
    if levels.len() < MIN_LEVELS {
        return Err(Error::InsufficientLevels(levels.len()));
    }
    let window = [levels[0], *levels.last().expect("nonempty")];
    let zero = ZERO_FRACTION * scale.max(f64::MIN_POSITIVE);
    let (lv, vv): (Vec<usize>, Vec<f64>) =
        levels.iter().zip(values).filter(|(_, v)| **v > zero).map(|(l, v)| (*l, *v)).unzip();
    let base = ExponentReport {
        estimate: ceiling,
        route,
        level_window: window,
        fit_quality: 0.0,
        saturation_flag: true,
        floor_flag: false,
        ceiling,
        tail_min: ceiling,
        tail_max: ceiling,
        levels: levels.to_vec(),
        values: values.to_vec(),
        reference: None,
        form: None,
    };
    if lv.len() < MIN_LEVELS.min(levels.len()) || lv.len() * 2 < levels.len() {
        return Ok(base);
    }
    let fit: LineFit = log_slope(&lv, &vv, lambda).ok_or(Error::InsufficientLevels(lv.len()))?;
    let raw = -fit.slope;
    let mut tails = vec![];
    if lv.len() >= TAIL_WINDOW {
        for i in 0..=lv.len() - TAIL_WINDOW {
            if let Some(f) = log_slope(&lv[i..i + TAIL_WINDOW], &vv[i..i + TAIL_WINDOW], lambda) {
                tails.push(-f.slope);
            }
        }
    }
    let estimate = raw.min(ceiling);
    Ok(ExponentReport {
        estimate,
        fit_quality: fit.residual,
        saturation_flag: estimate >= ceiling - SATURATION_BAND,
        floor_flag: estimate < FLOOR,
        tail_min: tails.iter().copied().fold(f64::INFINITY, f64::min).min(ceiling),
        tail_max: tails.iter().copied().fold(f64::NEG_INFINITY, f64::max).min(ceiling),
        ..base
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentOptions {
    #[serde(serialize_with = "crate::besov::serialize_index", deserialize_with = "crate::besov::deserialize_index")]
    pub p: f64,
    pub k: usize,
    pub window: [usize; 2],
    pub boundary: Boundary,
}

impl ExponentOptions {
    pub fn new(p: f64, k: usize, lo: usize, hi: usize) -> Self {
        Self { p, k, window: [lo, hi], boundary: Boundary::Periodic }
    }

    fn levels(&self) -> Result<Vec<usize>> {
        let [lo, hi] = self.window;
        if hi < lo || hi + 1 - lo < MIN_LEVELS {
            return Err(Error::InsufficientLevels(hi.saturating_sub(lo) + 1));
        }
        if !(self.p >= 1.0) {
            return Err(Error::BadParameters(format!("p = {} must lie in [1, inf]", self.p)));
        }
        Ok((lo..=hi).collect())
    }
}

/// Global exponent along one route; the generator routes need `gens`.
pub fn global_exponent(f: &GridFunction, route: Route, opts: &ExponentOptions, gens: Option<&GeneratorSet>) -> Result<ExponentReport> {
    let levels = opts.levels()?;
    let grid = f.grid();
    let lambda = grid.spec().lambda0();
    let scale = f.norm(f64::INFINITY);
    let poly_ceiling = opts.k as f64 + 1.0;
    let hi = opts.window[1];
    match route {
        Route::Osc => {
            let vals = levels
                .iter()
                .map(|&l| {
                    let lo = localapprox::level_oscillation(f, l, opts.k, opts.p, opts.boundary)?;
                    Ok(lo.norms(grid, opts.p).0)
                })
                .collect::<Result<Vec<_>>>()?;
            regress(route, &levels, &vals, lambda, poly_ceiling, scale)
        }
        Route::Diff => {
            let mut used = vec![];
            let mut vals = vec![];
            for &l in &levels {
                match localapprox::difference_norm(f, l, opts.k, opts.p, opts.boundary) {
                    Ok(d) => {
                        used.push(l);
                        vals.push(d.value);
                    }
                    Err(Error::EmptyStepSet(_)) => break,
                    Err(e) => return Err(e),
                }
            }
            regress(route, &used, &vals, lambda, poly_ceiling, scale)
        }
        Route::LpBand => {
            let d = littlewood_paley::lp_decompose(f, hi)?;
            let vals: Vec<f64> = levels.iter().map(|&l| d.pieces()[l].norm(opts.p)).collect();
            regress(route, &levels, &vals, d.lambda0() as f64, poly_ceiling, scale)
        }
        Route::Sigma | Route::Residue | Route::Coeff | Route::Wavelet => {
            let gens = gens.ok_or_else(|| Error::BadParameters(format!("route {} needs a generator set", route.name())))?;
            let ceiling = gens.order() as f64;
            let vals: Vec<f64> = if route == Route::Wavelet {
                let wv = mra::haar_wavelets(gens)?;
                let wc = mra::wavelet_coeffs(f, &wv, hi)?;
                levels.iter().map(|&l| wc.level_norm(l, opts.p)).collect()
            } else {
                let py = mra::pyramid(f, gens, hi, opts.p)?;
                match route {
                    Route::Sigma => levels.iter().map(|&l| py.sigma[l]).collect(),
                    Route::Residue => levels.iter().map(|&l| py.residue_norms[l]).collect(),
                    _ => levels.iter().map(|&l| py.coeff_norms[l]).collect(),
                }
            };
            regress(route, &levels, &vals, lambda, ceiling, scale)
        }
        Route::DoubleLimit => Err(Error::BadParameters("the double-limit route is pointwise".into())),
    }
}

/// Pointwise exponent from the oscillation (or difference) sequence at `x`.
pub fn pointwise_exponent(f: &GridFunction, x: &[f64], route: Route, opts: &ExponentOptions) -> Result<ExponentReport> {
    let levels = opts.levels()?;
    let grid = f.grid();
    let lambda = grid.spec().lambda0();
    let rows = localapprox::pointwise_sequences(f, x, opts.k, opts.p, opts.window[1])?;
    let scale = f.norm(f64::INFINITY);
    let ceiling = opts.k as f64 + 1.0;
    match route {
        Route::Osc => {
            let vals: Vec<f64> = levels.iter().map(|&l| rows[l].osc).collect();
            regress(route, &levels, &vals, lambda, ceiling, scale)
        }
        Route::Diff => {
            let (used, vals): (Vec<usize>, Vec<f64>) =
                levels.iter().filter_map(|&l| rows[l].diff.map(|d| (l, d))).unzip();
            regress(route, &used, &vals, lambda, ceiling, scale)
        }
        Route::DoubleLimit => double_limit_alpha(f, x, opts.window, opts.k),
        other => Err(Error::BadParameters(format!("route {} is not pointwise", other.name()))),
    }
}

/// Levels summed past the finest sampled level in [`pointwise_series_exponent`].
const SERIES_EXTRA_DEPTH: usize = 16;
/// Sample budget of one zoomed cell.
const ZOOM_SAMPLES: usize = 4096;

/// Local resolution used by [`pointwise_series_exponent`]: the largest `r` with `m^r <= 4096`.
pub fn default_zoom(spec: &TilingSpec) -> usize {
    let m = spec.m();
    let mut r = 0;
    while m.pow(r as u32 + 1) <= ZOOM_SAMPLES {
        r += 1;
    }
    r
}

/// Pointwise oscillation exponent of a series, with every cell `Q_l(x)` resampled at the same relative resolution.
pub fn pointwise_series_exponent(
    series: &SeriesSpec,
    spec: &Arc<TilingSpec>,
    x: &[f64],
    opts: &ExponentOptions,
    zoom: usize,
) -> Result<ExponentReport> {
    let levels = opts.levels()?;
    if x.len() != spec.n() {
        return Err(Error::ShapeMismatch(format!("point has dimension {}, expected {}", x.len(), spec.n())));
    }
    let local = Arc::new(GridSpace::new(spec.clone(), zoom, &vec![1; spec.n()])?);
    let n = spec.n();
    let c = spec.probe();
    let mut vals = Vec::with_capacity(levels.len());
    let mut scale = 0.0f64;
    let mut y = vec![0.0; n];
    let stencil = localapprox::Stencil::new(&local, local.offsets(zoom), opts.k)?;
    let mut scratch = Vec::new();
    for &l in &levels {
        let inv = spec.dilation().inverse_pow(l);
        let depth = l + zoom + SERIES_EXTRA_DEPTH;
        let mut samples = Vec::with_capacity(local.len());
        for s in 0..local.len() {
            let z = local.point(s);
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = x[i] + (0..n).map(|j| inv[(i, j)] * (z[j] - c[j])).sum::<f64>();
            }
            let v = series.eval(spec, &y, depth)?;
            scale = scale.max(v.abs());
            samples.push(v);
        }
        vals.push(stencil.oscillation(&samples, opts.p, &mut scratch).0);
    }
    regress(Route::Osc, &levels, &vals, spec.lambda0(), opts.k as f64 + 1.0, scale)
}

/// Which per-level field enters the double-limit ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DoubleLimitForm {
    /// `f - S_l f`.
    Remainder,
    /// `f_l`, valid when the global exponent is positive.
    Band,
}

/// Double-limit exponent: slope in `t` of `sup {|g_l(y)| : lambda0^{-l} + |x - y| <= lambda0^{-t}}`.
pub fn double_limit_alpha(f: &GridFunction, x: &[f64], window: [usize; 2], k: usize) -> Result<ExponentReport> {
    let grid = f.grid();
    let d = littlewood_paley::lp_decompose(f, grid.level() - 1)?;
    let form = auto_form(&d, f, window)?;
    double_limit_from(&d, f, x, window, k, form)
}

/// The band form when the band-route global exponent is above the floor, otherwise the remainder form.
pub fn auto_form(d: &LpDecomposition, f: &GridFunction, window: [usize; 2]) -> Result<DoubleLimitForm> {
    let levels: Vec<usize> = (window[0]..=window[1].min(d.lmax())).collect();
    let vals: Vec<f64> = levels.iter().map(|&l| d.pieces()[l].norm(f64::INFINITY)).collect();
    let g = regress(Route::LpBand, &levels, &vals, d.lambda0() as f64, f64::INFINITY, f.norm(f64::INFINITY))?;
    Ok(if g.estimate >= FLOOR { DoubleLimitForm::Band } else { DoubleLimitForm::Remainder })
}

pub fn double_limit_from(
    d: &LpDecomposition,
    f: &GridFunction,
    x: &[f64],
    window: [usize; 2],
    k: usize,
    form: DoubleLimitForm,
) -> Result<ExponentReport> {
    let grid = f.grid();
    let a = d.lambda0() as f64;
    let [lo, hi] = window;
    if hi < lo || hi + 1 - lo < MIN_LEVELS {
        return Err(Error::InsufficientLevels(hi.saturating_sub(lo) + 1));
    }
    let seq = match form {
        DoubleLimitForm::Remainder => d.remainders(),
        DoubleLimitForm::Band => d.pieces(),
    };
    if hi >= seq.len() {
        return Err(Error::LevelBeyondNyquist { level: hi });
    }
    let dist: Vec<f64> = (0..grid.len()).map(|s| torus_distance(grid.window(), x, grid.point(s))).collect();
    let levels: Vec<usize> = (lo..=hi).collect();
    let mut sups = Vec::with_capacity(levels.len());
    let mut ratio_min = f64::INFINITY;
    for &t in &levels {
        let eps = a.powi(-(t as i32));
        let mut sup = 0.0f64;
        for (l, r) in seq.iter().enumerate().skip(t) {
            let h0 = a.powi(-(l as i32));
            for (s, &v) in r.samples().iter().enumerate() {
                let h = h0 + dist[s];
                if h <= eps * (1.0 + 1e-12) {
                    sup = sup.max(v.abs());
                    if t == hi && v != 0.0 {
                        ratio_min = ratio_min.min(v.abs().ln() / h.ln());
                    }
                }
            }
        }
        sups.push(sup);
    }
    let mut rep = regress(Route::DoubleLimit, &levels, &sups, a, k as f64 + 1.0, f.norm(f64::INFINITY))?;
    rep.form = Some(form);
    if ratio_min.is_finite() {
        rep.tail_min = rep.tail_min.min(ratio_min);
    }
    Ok(rep)
}

fn torus_distance(window: &[i64], x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(window)
        .map(|((a, b), &w)| {
            let w = w as f64;
            let d = (a - b).rem_euclid(w);
            d.min(w - d).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Cumulative `-log|mu_{Q_l,x}|` for `l = 1..=lmax` along the cells containing `x`.
fn digit_logs(series: &SeriesSpec, spec: &TilingSpec, x: &[f64], lmax: usize) -> Result<(Vec<f64>, crate::tiling::CellAddress)> {
    if series.multipliers.len() != spec.m() {
        return Err(Error::WrongCount { expected: spec.m() as u64, got: series.multipliers.len() });
    }
    if lmax < 2 * MIN_LEVELS {
        return Err(Error::InsufficientLevels(lmax));
    }
    let cell = spec.locate(x, lmax)?;
    let mut acc = 0.0;
    let logs = cell
        .digits
        .iter()
        .map(|&d| {
            acc -= series.multipliers[d].norm().ln();
            acc
        })
        .collect();
    Ok((logs, cell))
}

/// Slope of `ys` against `xs` over the second half of the levels.
fn tail_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let start = xs.len() / 2;
    line_fit(&xs[start..], &ys[start..]).map(|f| f.slope).ok_or(Error::InsufficientLevels(xs.len() - start))
}

/// Liminf surrogate of `log|mu_{Q_l,x}| / log lambda0^{-l}`: tail slope of the cumulative digit logs.
pub fn tau0(series: &SeriesSpec, spec: &TilingSpec, x: &[f64], lmax: usize) -> Result<f64> {
    let (logs, _) = digit_logs(series, spec, x, lmax)?;
    let ll = spec.lambda0().ln();
    let xs: Vec<f64> = (1..=lmax).map(|l| l as f64 * ll).collect();
    tail_slope(&xs, &logs)
}

#[derive(Debug, Clone, Serialize)]
pub struct Tau1Report {
    /// Digit formula, equal to `tau0` when the boundary-distance ratio is bounded.
    pub tau1: f64,
    /// Tail slope of `log|mu_Q|` against `log Delta_l(x)`.
    pub direct: f64,
    pub tau0: f64,
    /// `max_l Delta_l(x) / Delta_{l+1}(x)`.
    pub ratio_sup: f64,
    pub bounded: bool,
    pub distances: Vec<f64>,
}

pub fn tau1(series: &SeriesSpec, spec: &TilingSpec, x: &[f64], lmax: usize) -> Result<Tau1Report> {
    let (logs, cell) = digit_logs(series, spec, x, lmax)?;
    let mut distances = Vec::with_capacity(lmax + 1);
    for l in 0..=lmax {
        let c = crate::tiling::CellAddress { level: l, digits: cell.digits[..l].to_vec(), tile: cell.tile.clone() };
        let d = spec.boundary_distance(x, &c)?;
        if !(d > 0.0) {
            return Err(Error::DegenerateBoundaryDistance(l));
        }
        distances.push(d);
    }
    let ratio_sup = distances.windows(2).map(|w| w[0] / w[1]).fold(0.0, f64::max);
    let ll = spec.lambda0().ln();
    let xs0: Vec<f64> = (1..=lmax).map(|l| l as f64 * ll).collect();
    let xs1: Vec<f64> = distances[1..].iter().map(|d| -d.ln()).collect();
    let t0 = tail_slope(&xs0, &logs)?;
    let direct = tail_slope(&xs1, &logs)?;
    let bounded = ratio_sup <= RATIO_BOUND;
    Ok(Tau1Report { tau1: if bounded { t0 } else { direct }, direct, tau0: t0, ratio_sup, bounded, distances })
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub x: Vec<f64>,
    pub alpha_hat: f64,
    pub alpha_phi: Option<f64>,
    pub tau0: f64,
    pub tau1: Option<f64>,
    pub lower: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub pass: bool,
    pub estimate: ExponentReport,
}

/// Checks `min(alpha(phi), tau0) - tol <= alpha_hat <= tau0 + tol` at `x`.
pub fn sandwich_audit(
    series: &SeriesSpec,
    spec: &Arc<TilingSpec>,
    x: &[f64],
    opts: &ExponentOptions,
    lmax_digits: usize,
) -> Result<SandwichReport> {
    let est = pointwise_series_exponent(series, spec, x, opts, default_zoom(spec))?;
    let t0 = tau0(series, spec, x, lmax_digits)?;
    let t1 = tau1(series, spec, x, lmax_digits).ok().map(|r| r.tau1);
    let alpha_phi = series.profile.alpha();
    let lower = alpha_phi.map_or(t0, |a| a.min(t0));
    let a = est.estimate;
    let lower_ok = a >= lower - AUDIT_TOL;
    let upper_ok = a <= t0 + AUDIT_TOL;
    Ok(SandwichReport {
        x: x.to_vec(),
        alpha_hat: a,
        alpha_phi,
        tau0: t0,
        tau1: t1,
        lower,
        lower_ok,
        upper_ok,
        pass: lower_ok && upper_ok,
        estimate: est,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainLink {
    pub label: String,
    pub estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderingReport {
    pub x: Vec<f64>,
    /// Global, pointwise sup-norm, then pointwise `L^p` for decreasing finite `p`.
    pub chain: Vec<ChainLink>,
    pub violations: Vec<String>,
    pub pass: bool,
}

/// Ordering `alpha(f) <= alpha(f,x) <= alpha_p(f,x) <= alpha_q(f,x)` for `q <= p`, within tolerance.
pub fn ordering_audit(f: &GridFunction, x: &[f64], ps: &[f64], opts: &ExponentOptions) -> Result<OrderingReport> {
    let inf = ExponentOptions { p: f64::INFINITY, ..*opts };
    let mut chain = vec![
        ChainLink { label: "global".into(), estimate: global_exponent(f, Route::Osc, &inf, None)?.estimate },
        ChainLink { label: "pointwise".into(), estimate: pointwise_exponent(f, x, Route::Osc, &inf)?.estimate },
    ];
    let mut finite: Vec<f64> = ps.iter().copied().filter(|p| p.is_finite()).collect();
    finite.sort_by(|a, b| b.total_cmp(a));
    finite.dedup();
    for p in finite {
        let o = ExponentOptions { p, ..*opts };
        chain.push(ChainLink { label: format!("pointwise_p{p}"), estimate: pointwise_exponent(f, x, Route::Osc, &o)?.estimate });
    }
    let violations: Vec<String> = chain
        .windows(2)
        .filter(|w| w[0].estimate > w[1].estimate + AUDIT_TOL)
        .map(|w| format!("{} = {:.4} > {} = {:.4}", w[0].label, w[0].estimate, w[1].label, w[1].estimate))
        .collect();
    Ok(OrderingReport { x: x.to_vec(), pass: violations.is_empty(), chain, violations })
}

/// `1/3` followed by golden-ratio rotations of it; none is a dyadic rational.
pub fn default_probe_points(count: usize) -> Vec<f64> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    (0..count).map(|i| (1.0 / 3.0 + i as f64 * golden).fract()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BatteryRow {
    pub function: String,
    pub route: String,
    pub x: Option<String>,
    pub estimate: f64,
    pub reference: Option<f64>,
}

pub fn write_battery_csv(path: &Path, rows: &[BatteryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["function", "route", "x", "estimate", "reference"])?;
    for r in rows {
        w.write_record([
            r.function.clone(),
            r.route.clone(),
            r.x.clone().unwrap_or_default(),
            format!("{:e}", r.estimate),
            r.reference.map(|v| format!("{v:e}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcrep::{sample_series, Profile};

    fn grid(level: usize) -> Arc<GridSpace> {
        Arc::new(GridSpace::new(Arc::new(TilingSpec::dyadic()), level, &[1]).unwrap())
    }

    #[test]
    fn regression_basics() {
        let levels: Vec<usize> = (4..=10).collect();
        let v: Vec<f64> = levels.iter().map(|&l| 2f64.powf(-0.5 * l as f64)).collect();
        let r = regress(Route::Osc, &levels, &v, 2.0, 2.0, 1.0).unwrap();
        assert!((r.estimate - 0.5).abs() < 1e-12 && !r.saturation_flag && !r.floor_flag);
        let z = regress(Route::Osc, &levels, &[0.0; 7], 2.0, 2.0, 1.0).unwrap();
        assert!(z.saturation_flag && z.estimate == 2.0);
        assert!(matches!(regress(Route::Osc, &levels[..3], &v[..3], 2.0, 2.0, 1.0), Err(Error::InsufficientLevels(3))));
    }

    #[test]
    fn route_names_round_trip() {
        for r in Route::ALL {
            assert_eq!(Route::from_name(r.name()).unwrap(), r);
        }
        let js = serde_json::to_string(&Route::LpBand).unwrap();
        assert_eq!(js, "\"lp-band\"");
    }

    #[test]
    fn tau_digit_functionals() {
        let spec = TilingSpec::dyadic();
        let uni = SeriesSpec::takagi(2, 0.5f64.sqrt());
        for x in [0.1, 1.0 / 3.0, 0.77] {
            assert!((tau0(&uni, &spec, &[x], 20).unwrap() - 0.5).abs() < 1e-12);
        }
        let two = SeriesSpec::real(&[0.5, 0.25], Profile::Tent);
        let t = tau0(&two, &spec, &[1.0 / 3.0], 40).unwrap();
        assert!((t - 1.5).abs() < 5e-3, "{t}");
        assert!((tau0(&two, &spec, &[0.0], 20).unwrap() - 1.0).abs() < 1e-12);
        let r = tau1(&uni, &spec, &[1.0 / 3.0], 30).unwrap();
        assert!(r.bounded && (r.ratio_sup - 2.0).abs() < 1e-6, "{r:?}");
        assert_eq!(r.tau1, r.tau0);
        assert!((r.direct - 0.5).abs() < 1e-3, "{r:?}");
        let levy = tau1(&SeriesSpec::levy(), &spec, &[1.0 / 3.0], 40).unwrap();
        assert!((levy.tau1 - 1.0).abs() < 1e-12 && (levy.direct - 1.0).abs() < 1e-6);
        assert!(matches!(tau1(&uni, &spec, &[0.0], 10), Err(Error::DegenerateBoundaryDistance(_))));
    }

    #[test]
    fn takagi_routes() {
        let g = grid(14);
        let f = sample_series(&SeriesSpec::takagi(2, 0.5f64.sqrt()), &g).unwrap().function;
        let opts = ExponentOptions::new(f64::INFINITY, 1, 4, 11);
        let osc = global_exponent(&f, Route::Osc, &opts, None).unwrap();
        assert!((osc.estimate - 0.5).abs() < 0.05, "{osc:?}");
        let haar = GeneratorSet::haar(g.spec().clone());
        let sg = global_exponent(&f, Route::Sigma, &opts, Some(&haar)).unwrap();
        assert!((sg.estimate - 0.5).abs() < 0.05, "{sg:?}");
        let wv = global_exponent(&f, Route::Wavelet, &opts, Some(&haar)).unwrap();
        let rs = global_exponent(&f, Route::Residue, &opts, Some(&haar)).unwrap();
        assert!((wv.estimate - rs.estimate).abs() < 1e-9 && !wv.saturation_flag);
        let pw = pointwise_exponent(&f, &[1.0 / 3.0], Route::Osc, &opts).unwrap();
        assert!((pw.estimate - 0.5).abs() < 0.1, "{pw:?}");
    }

    #[test]
    fn polynomials_saturate() {
        let g = grid(12);
        let f = GridFunction::from_fn(g, |x| 1.0 + 2.0 * x[0]).unwrap();
        let opts = ExponentOptions { boundary: Boundary::Interior, ..ExponentOptions::new(f64::INFINITY, 1, 3, 8) };
        let r = global_exponent(&f, Route::Osc, &opts, None).unwrap();
        assert!(r.saturation_flag && r.estimate == 2.0);
        let c = GridFunction::from_fn(grid(10), |_| 3.0).unwrap();
        let d = double_limit_alpha(&c, &[0.3], [3, 8], 1).unwrap();
        assert!(d.saturation_flag);
    }

    #[test]
    fn zoomed_series_estimates() {
        let spec = Arc::new(TilingSpec::dyadic());
        let opts = ExponentOptions::new(f64::INFINITY, 1, 4, 12);
        let z = default_zoom(&spec);
        assert_eq!(z, 12);
        let levy = pointwise_series_exponent(&SeriesSpec::levy(), &spec, &[1.0 / 3.0], &opts, z).unwrap();
        assert!((levy.estimate - 1.0).abs() < 0.02, "{}", levy.estimate);
        let tent = SeriesSpec::real(&[0.9, 0.9], Profile::Tent);
        let a = sandwich_audit(&tent, &spec, &[2.0 / 3.0], &opts, 40).unwrap();
        assert!(a.pass && (a.alpha_hat - a.tau0).abs() < 0.02, "{a:?}");
    }

    #[test]
    fn weierstrass_double_limit() {
        let g = grid(14);
        let mu = 2f64.powf(-0.7);
        let f = crate::funcrep::sample_weierstrass(mu, &g, 13).unwrap().function;
        let d = double_limit_alpha(&f, &[0.3], [4, 11], 1).unwrap();
        assert!((d.estimate - 0.7).abs() < 0.07, "{d:?}");
        let band = global_exponent(&f, Route::LpBand, &ExponentOptions::new(f64::INFINITY, 1, 4, 11), None).unwrap();
        assert!((band.estimate - 0.7).abs() < 0.01);
    }

    #[test]
    fn invariant_under_scaling() {
        let g = grid(12);
        let f = sample_series(&SeriesSpec::takagi(2, 0.6), &g).unwrap().function;
        let opts = ExponentOptions::new(2.0, 1, 4, 9);
        let a = global_exponent(&f, Route::Osc, &opts, None).unwrap();
        let b = global_exponent(&f.scaled(-7.5), Route::Osc, &opts, None).unwrap();
        assert!((a.estimate - b.estimate).abs() < 1e-12);
    }
}
