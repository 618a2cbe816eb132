//! Function samples on refinement grids: digit-product series, lacunary
//! Weierstrass sums, simple analytic builtins and CSV exchange.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpace};
use crate::intmat::IntMatrix;
use crate::tiling::TilingSpec;

/// Profile `phi` of a digit-product series; zero outside the open tile.
#[derive(Debug, Clone)]
pub enum Profile {
    /// `x` on `(0, 1/2]`, `1 - x` on `[1/2, 1)` in the first coordinate.
    Tent,
    /// `x - 1/2` on `(0, 1)` in the first coordinate.
    Levy,
    /// `1` on `(0, 1/2)` in the first coordinate.
    Step,
    Zero,
    /// Samples on a one-tile grid; evaluated at the sample of the same digit string.
    Sampled(GridFunction),
}

impl Profile {
    pub fn name(&self) -> &'static str {
        match self {
            Profile::Tent => "tent",
            Profile::Levy => "levy",
            Profile::Step => "step",
            Profile::Zero => "zero",
            Profile::Sampled(_) => "sampled",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "tent" => Ok(Profile::Tent),
            "levy" => Ok(Profile::Levy),
            "step" => Ok(Profile::Step),
            "zero" => Ok(Profile::Zero),
            other => Err(Error::UnsupportedProfile(other.into())),
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            Profile::Tent | Profile::Levy => 0.5,
            Profile::Step => 1.0,
            Profile::Zero => 0.0,
            Profile::Sampled(g) => g.norm(f64::INFINITY),
        }
    }

    /// Global Hoelder exponent of the profile when it is known in closed form.
    pub fn alpha(&self) -> Option<f64> {
        match self {
            Profile::Tent => Some(1.0),
            Profile::Levy | Profile::Step => Some(0.0),
            Profile::Zero => Some(f64::INFINITY),
            Profile::Sampled(_) => None,
        }
    }

    fn analytic(&self, x: &[f64]) -> f64 {
        if x.iter().any(|&v| v <= 0.0 || v >= 1.0) {
            return 0.0;
        }
        let t = x[0];
        match self {
            Profile::Tent => {
                if t <= 0.5 {
                    t
                } else {
                    1.0 - t
                }
            }
            Profile::Levy => t - 0.5,
            Profile::Step => {
                if t < 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Zero | Profile::Sampled(_) => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeriesSpec {
    pub multipliers: Vec<Complex64>,
    pub profile: Profile,
    /// Truncation level; `None` means the grid level.
    pub depth: Option<usize>,
}

impl SeriesSpec {
    pub fn real(multipliers: &[f64], profile: Profile) -> Self {
        Self { multipliers: multipliers.iter().map(|&v| Complex64::new(v, 0.0)).collect(), profile, depth: None }
    }

    pub fn takagi(m: usize, mu: f64) -> Self {
        Self::real(&vec![mu; m], Profile::Tent)
    }

    pub fn levy() -> Self {
        Self::real(&[0.5, 0.5], Profile::Levy)
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = Some(depth);
        self
    }

    pub fn is_real(&self) -> bool {
        self.multipliers.iter().all(|z| z.im == 0.0)
    }

    pub fn max_modulus(&self) -> f64 {
        self.multipliers.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Value of the real part at `x`, summed over levels `0..=depth`.
    ///
    /// Needs an analytic profile on a cube tiling.
    pub fn eval(&self, spec: &TilingSpec, x: &[f64], depth: usize) -> Result<f64> {
        self.validate(spec.m())?;
        let a = match (&self.profile, spec.cube_side()) {
            (Profile::Sampled(_), _) => {
                return Err(Error::UnsupportedProfile("point evaluation needs an analytic profile".into()))
            }
            (_, None) => {
                return Err(Error::UnsupportedProfile(format!(
                    "analytic profile '{}' needs a cube tiling",
                    self.profile.name()
                )))
            }
            (_, Some(a)) => a as f64,
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadParameters("non-finite evaluation point".into()));
        }
        let mut local: Vec<f64> = x.iter().map(|v| v.rem_euclid(1.0)).collect();
        let mut digit = vec![0i64; local.len()];
        let mut prefix = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for l in 0..=depth {
            let phi = self.profile.analytic(&local);
            if phi != 0.0 {
                acc += prefix * phi;
            }
            if l < depth {
                for (d, v) in digit.iter_mut().zip(local.iter_mut()) {
                    let y = *v * a;
                    *d = (y.floor() as i64).clamp(0, a as i64 - 1);
                    *v = y - *d as f64;
                }
                prefix *= self.multipliers[spec.residue_index(&digit)];
            }
        }
        Ok(acc.re)
    }

    fn validate(&self, m: usize) -> Result<()> {
        if self.multipliers.len() != m {
            return Err(Error::WrongCount { expected: m as u64, got: self.multipliers.len() });
        }
        if let Some(z) = self.multipliers.iter().find(|z| !(z.norm() > 0.0 && z.norm() < 1.0)) {
            return Err(Error::BadParameters(format!("multiplier {z} must have modulus in (0, 1)")));
        }
        Ok(())
    }
}

/// Sampled function together with the sup-norm bound of the dropped tail.
#[derive(Debug, Clone)]
pub struct Sampled<T> {
    pub function: T,
    pub truncation_bound: f64,
}

pub fn sample_series(s: &SeriesSpec, grid: &Arc<GridSpace>) -> Result<Sampled<GridFunction>> {
    if !s.is_real() {
        return Err(Error::BadParameters("complex multipliers need sample_series_complex".into()));
    }
    let out = sample_series_complex(s, grid)?;
    let function = GridFunction::new(grid.clone(), out.function.0.into_samples())?;
    Ok(Sampled { function, truncation_bound: out.truncation_bound })
}

/// Real and imaginary parts of a series with complex multipliers.
pub fn sample_series_complex(
    s: &SeriesSpec,
    grid: &Arc<GridSpace>,
) -> Result<Sampled<(GridFunction, GridFunction)>> {
    let spec = grid.spec();
    let m = spec.m();
    let n = spec.n();
    let big_l = grid.level();
    s.validate(m)?;
    let depth = s.depth.unwrap_or(big_l);
    if depth > big_l {
        return Err(Error::DepthExceedsGrid { depth, level: big_l });
    }
    if let Profile::Sampled(g) = &s.profile {
        if g.grid().tiles() != 1 || g.grid().m() != m || g.grid().n() != n {
            return Err(Error::ShapeMismatch("sampled profile must live on a one-tile grid of the same tiling".into()));
        }
    } else if spec.cube_side().is_none() {
        return Err(Error::UnsupportedProfile(format!(
            "analytic profile '{}' needs a cube tiling; use a sampled profile",
            s.profile.name()
        )));
    }
    // powers M^r and M^{-r} for the local coordinates of suffix strings
    let mat = spec.dilation().matrix();
    let pows: Vec<IntMatrix> = (0..=big_l).map(|r| mat.pow(r)).collect();
    let inv: Vec<_> = (0..=big_l).map(|r| spec.dilation().inverse_pow(r)).collect();
    let anchor = spec.anchor();
    let per_tile = grid.block_len(0);
    let mut re = vec![0.0; grid.len()];
    let mut im = vec![0.0; grid.len()];
    let mut digits = vec![0usize; big_l];
    let mut suffix = vec![0i64; n];
    let mut tmp = vec![0i64; n];
    let mut local = vec![0.0; n];
    let mut prefix = vec![Complex64::new(1.0, 0.0); big_l + 1];
    for s_idx in 0..grid.len() {
        let mut rem = s_idx % per_tile;
        for j in (0..big_l).rev() {
            digits[j] = rem % m;
            rem /= m;
        }
        for l in 0..big_l {
            prefix[l + 1] = prefix[l] * s.multipliers[digits[l]];
        }
        let mut acc = Complex64::new(0.0, 0.0);
        suffix.iter_mut().for_each(|v| *v = 0);
        // walk l from L down to 0, growing the suffix digit string
        for l in (0..=big_l).rev() {
            let r = big_l - l;
            if r > 0 {
                pows[r - 1].mul_vec_into(spec.digits().get(digits[l]), &mut tmp);
                for (a, b) in suffix.iter_mut().zip(&tmp) {
                    *a += b;
                }
            }
            if l > depth {
                continue;
            }
            let phi = match &s.profile {
                Profile::Sampled(g) => sampled_profile(g, &digits[l..], m),
                p => {
                    for i in 0..n {
                        local[i] = (0..n).map(|j| inv[r][(i, j)] * (suffix[j] as f64 + anchor[j])).sum();
                    }
                    p.analytic(&local)
                }
            };
            if phi != 0.0 {
                acc += prefix[l] * phi;
            }
        }
        re[s_idx] = acc.re;
        im[s_idx] = acc.im;
    }
    let q = s.max_modulus();
    let truncation_bound = q.powi(depth as i32 + 1) / (1.0 - q) * s.profile.sup();
    Ok(Sampled {
        function: (GridFunction::new(grid.clone(), re)?, GridFunction::new(grid.clone(), im)?),
        truncation_bound,
    })
}

fn sampled_profile(g: &GridFunction, suffix: &[usize], m: usize) -> f64 {
    let lp = g.grid().level();
    let mut idx = 0usize;
    for j in 0..lp {
        idx = idx * m + suffix.get(j).copied().unwrap_or(0);
    }
    g.samples()[idx]
}

/// `sum_{l <= depth} mu^l sin(2 pi 2^l x_1)` on a grid of `M = 2 Id`.
pub fn sample_weierstrass(mu: f64, grid: &Arc<GridSpace>, depth: usize) -> Result<Sampled<GridFunction>> {
    let spec = grid.spec();
    let mat = spec.dilation().matrix();
    let n = spec.n();
    if !(mat.is_diagonal() && (0..n).all(|i| mat.get(i, i) == 2)) {
        return Err(Error::WrongDilation("the Weierstrass builtin requires M = 2 Id".into()));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::BadParameters(format!("mu = {mu} must lie in (0, 1)")));
    }
    if depth > grid.level() {
        return Err(Error::DepthExceedsGrid { depth, level: grid.level() });
    }
    let samples = (0..grid.len())
        .map(|s| {
            let x = grid.point(s)[0];
            let mut acc = 0.0;
            let mut w = 1.0;
            let mut freq = 1.0;
            for _ in 0..=depth {
                // reduce the phase exactly before scaling by 2 pi
                let ph = (freq * x).rem_euclid(1.0);
                acc += w * (2.0 * PI * ph).sin();
                w *= mu;
                freq *= 2.0;
            }
            acc
        })
        .collect();
    Ok(Sampled {
        function: GridFunction::new(grid.clone(), samples)?,
        truncation_bound: mu.powi(depth as i32 + 1) / (1.0 - mu),
    })
}

/// Analytic test functions of the first coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Builtin {
    Takagi { mu: f64 },
    Weierstrass { mu: f64 },
    Levy,
    Series { multipliers: Vec<f64>, profile: String },
    Sine { frequency: f64 },
    Step { at: f64 },
    Polynomial { coefficients: Vec<f64> },
    AbsPower { center: f64, exponent: f64 },
    Zero,
}

impl Builtin {
    pub fn sample(&self, grid: &Arc<GridSpace>) -> Result<Sampled<GridFunction>> {
        let m = grid.m();
        let exact = |f: GridFunction| Sampled { function: f, truncation_bound: 0.0 };
        match self {
            Builtin::Takagi { mu } => sample_series(&SeriesSpec::takagi(m, *mu), grid),
            Builtin::Weierstrass { mu } => sample_weierstrass(*mu, grid, grid.level()),
            Builtin::Levy => sample_series(&SeriesSpec::levy(), grid),
            Builtin::Series { multipliers, profile } => {
                sample_series(&SeriesSpec::real(multipliers, Profile::from_name(profile)?), grid)
            }
            Builtin::Sine { frequency } => {
                let k = *frequency;
                GridFunction::from_fn(grid.clone(), move |x| (2.0 * PI * (k * x[0]).rem_euclid(1.0)).sin()).map(exact)
            }
            Builtin::Step { at } => {
                let a = *at;
                GridFunction::from_fn(grid.clone(), move |x| if x[0].rem_euclid(1.0) < a { 1.0 } else { 0.0 })
                    .map(exact)
            }
            Builtin::Polynomial { coefficients } => {
                let c = coefficients.clone();
                GridFunction::from_fn(grid.clone(), move |x| c.iter().rev().fold(0.0, |acc, a| acc * x[0] + a))
                    .map(exact)
            }
            Builtin::AbsPower { center, exponent } => {
                let (c, e) = (*center, *exponent);
                GridFunction::from_fn(grid.clone(), move |x| (x[0] - c).abs().powf(e)).map(exact)
            }
            Builtin::Zero => Ok(exact(GridFunction::zeros(grid.clone()))),
        }
    }

    /// Closed-form global exponent under `p = inf`, where one is known.
    pub fn reference_global(&self, lambda0: f64) -> Option<f64> {
        match self {
            Builtin::Takagi { mu } | Builtin::Weierstrass { mu } => Some(mu.ln() / (1.0 / lambda0).ln()),
            _ => None,
        }
    }

    /// Closed-form pointwise exponent at a generic point, where one is known.
    pub fn reference_pointwise(&self, lambda0: f64) -> Option<f64> {
        match self {
            Builtin::Levy => Some(1.0),
            other => other.reference_global(lambda0),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Builtin::Takagi { mu } => format!("takagi(mu={mu})"),
            Builtin::Weierstrass { mu } => format!("weierstrass(mu={mu})"),
            Builtin::Levy => "levy".into(),
            Builtin::Series { multipliers, profile } => format!("series({profile},{multipliers:?})"),
            Builtin::Sine { frequency } => format!("sine(k={frequency})"),
            Builtin::Step { at } => format!("step(at={at})"),
            Builtin::Polynomial { coefficients } => format!("polynomial({coefficients:?})"),
            Builtin::AbsPower { center, exponent } => format!("abs_power(c={center},e={exponent})"),
            Builtin::Zero => "zero".into(),
        }
    }
}

/// Read samples from CSV rows `nu_0, .., nu_{n-1}, value`.
pub fn ingest_csv(path: &Path, grid: &Arc<GridSpace>) -> Result<GridFunction> {
    let n = grid.n();
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let mut samples = vec![f64::NAN; grid.len()];
    let mut filled = vec![false; grid.len()];
    let mut rows = 0usize;
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != n + 1 {
            return Err(Error::ShapeMismatch(format!("row {rows} has {} fields, expected {}", rec.len(), n + 1)));
        }
        let nu = (0..n)
            .map(|k| rec[k].parse::<i64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::ShapeMismatch(format!("row {rows}: bad index ({e})")))?;
        let value: f64 = rec[n].parse().map_err(|_| Error::NonFiniteValue(rows))?;
        if !value.is_finite() {
            return Err(Error::NonFiniteValue(rows));
        }
        if rows >= grid.len() {
            return Err(Error::ShapeMismatch(format!("more than {} rows", grid.len())));
        }
        let s = grid.index_of(&nu);
        if filled[s] {
            return Err(Error::ShapeMismatch(format!("row {rows} repeats grid point {nu:?}")));
        }
        filled[s] = true;
        samples[s] = value;
        rows += 1;
    }
    if rows != grid.len() {
        return Err(Error::ShapeMismatch(format!("{rows} rows for a grid of {} points", grid.len())));
    }
    GridFunction::new(grid.clone(), samples)
}

pub fn emit_csv(f: &GridFunction, path: &Path) -> Result<()> {
    let grid = f.grid();
    let n = grid.n();
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..n).map(|k| format!("nu{k}")).collect();
    header.push("value".into());
    w.write_record(&header)?;
    for (s, v) in f.samples().iter().enumerate() {
        let mut row: Vec<String> = grid.nu(s).iter().map(|x| x.to_string()).collect();
        row.push(format!("{v:e}"));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tiling::TilingSpec;
    use proptest::prelude::*;

    fn dyadic(level: usize) -> Arc<GridSpace> {
        Arc::new(GridSpace::new(Arc::new(TilingSpec::dyadic()), level, &[1]).unwrap())
    }

    /// Direct evaluation of the Takagi sum from binary expansions.
    fn takagi_direct(x: f64, mu: f64, depth: usize) -> f64 {
        (0..=depth)
            .map(|l| {
                let y = (x * 2f64.powi(l as i32)).rem_euclid(1.0);
                let phi = if y > 0.0 && y <= 0.5 { y } else if y > 0.5 { 1.0 - y } else { 0.0 };
                mu.powi(l as i32) * phi
            })
            .sum()
    }

    #[test]
    fn point_evaluation_matches_grid_samples() {
        let g = dyadic(9);
        for s in [SeriesSpec::real(&[0.5, 0.25], Profile::Step), SeriesSpec::levy(), SeriesSpec::takagi(2, 0.7)] {
            let f = sample_series(&s, &g).unwrap().function;
            for i in (0..g.len()).step_by(37) {
                let v = s.eval(g.spec(), g.point(i), 9).unwrap();
                assert!((v - f.samples()[i]).abs() < 1e-12, "{} at {i}", s.profile.name());
            }
        }
        let y = SeriesSpec::takagi(2, 0.7).eval(g.spec(), &[0.3], 30).unwrap();
        assert!((y - takagi_direct(0.3, 0.7, 30)).abs() < 1e-12);
    }

    #[test]
    fn point_evaluation_needs_a_cube() {
        let td = TilingSpec::twin_dragon();
        let err = SeriesSpec::takagi(2, 0.7).eval(&td, &[0.1, 0.1], 4).unwrap_err();
        assert!(matches!(err, Error::UnsupportedProfile(_)));
    }

    #[test]
    fn takagi_matches_direct_sum() {
        let g = dyadic(10);
        let mu = 0.5f64.sqrt();
        let f = sample_series(&SeriesSpec::takagi(2, mu), &g).unwrap();
        for s in 0..g.len() {
            let x = g.point(s)[0];
            assert!((f.function.samples()[s] - takagi_direct(x, mu, 10)).abs() < 1e-13);
        }
        assert!(f.truncation_bound > 0.0);
    }

    #[test]
    fn takagi_self_similarity() {
        let g = dyadic(12);
        let mu = 0.5;
        let f = sample_series(&SeriesSpec::takagi(2, mu), &g).unwrap();
        let v = f.function.samples();
        // f(x) = phi(x) + mu f(2x mod 1) up to the tail of the finer grid
        for s in 0..g.len() {
            let x = g.point(s)[0];
            let phi = if x > 0.0 && x <= 0.5 { x } else if x > 0.5 { 1.0 - x } else { 0.0 };
            let rhs = phi + mu * v[(2 * s) % g.len()];
            assert!((v[s] - rhs).abs() <= f.truncation_bound + 1e-12);
        }
    }

    #[test]
    fn levy_and_zero_profiles() {
        let g = dyadic(8);
        let f = sample_series(&SeriesSpec::levy(), &g).unwrap().function;
        // at x = 1/4: phi(1/4) + 1/2 phi(1/2) = -1/4
        assert!((f.samples()[64] + 0.25).abs() < 1e-15);
        let z = sample_series(&SeriesSpec::real(&[0.3, 0.9], Profile::Zero), &g).unwrap().function;
        assert!(z.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn depth_beyond_grid_is_rejected() {
        let g = dyadic(6);
        let s = SeriesSpec::takagi(2, 0.5).with_depth(7);
        assert!(matches!(sample_series(&s, &g), Err(Error::DepthExceedsGrid { depth: 7, level: 6 })));
    }

    #[test]
    fn weierstrass_bounds() {
        let g = dyadic(16);
        let mu = 2f64.powf(-0.7);
        let w = sample_weierstrass(mu, &g, 16).unwrap();
        assert!(w.function.norm(f64::INFINITY) <= 1.0 / (1.0 - mu));
        assert_eq!(w.function.samples()[0], 0.0);
        let t3 = Arc::new(TilingSpec::new(&[vec![3]], &[vec![0], vec![1], vec![2]]).unwrap());
        let g3 = Arc::new(GridSpace::new(t3, 4, &[1]).unwrap());
        assert!(matches!(sample_weierstrass(mu, &g3, 4), Err(Error::WrongDilation(_))));
    }

    #[test]
    fn complex_multipliers_split_into_parts() {
        let g = dyadic(8);
        let s = SeriesSpec {
            multipliers: vec![Complex64::new(0.0, 0.5), Complex64::new(0.5, 0.0)],
            profile: Profile::Tent,
            depth: None,
        };
        let out = sample_series_complex(&s, &g).unwrap();
        assert!(out.function.1.norm(f64::INFINITY) > 0.0);
        assert!(sample_series(&s, &g).is_err());
    }

    #[test]
    fn sampled_profile_on_twin_dragon() {
        let spec = Arc::new(TilingSpec::twin_dragon());
        let pg = Arc::new(GridSpace::new(spec.clone(), 6, &[1, 1]).unwrap());
        let phi = GridFunction::from_fn(pg, |x| x[0] * x[1]).unwrap();
        let g = Arc::new(GridSpace::new(spec, 6, &[1, 1]).unwrap());
        let f = sample_series(&SeriesSpec::real(&[0.5, 0.25], Profile::Sampled(phi.clone())), &g).unwrap();
        // the level-0 term reproduces phi and the rest is bounded by the tail estimate
        let diff: f64 =
            f.function.samples().iter().zip(phi.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff <= 0.5 / 0.5 * phi.norm(f64::INFINITY) + 1e-12);
        assert!(matches!(
            sample_series(&SeriesSpec::takagi(2, 0.5), &g),
            Err(Error::UnsupportedProfile(_))
        ));
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let g = dyadic(6);
        let f = sample_series(&SeriesSpec::takagi(2, 0.7), &g).unwrap().function;
        let path = dir.path().join("f.csv");
        emit_csv(&f, &path).unwrap();
        let back = ingest_csv(&path, &g).unwrap();
        assert_eq!(back.samples(), f.samples());

        let short = dir.path().join("short.csv");
        std::fs::write(&short, "nu0,value\n0,1.0\n1,2.0\n").unwrap();
        assert!(matches!(ingest_csv(&short, &g), Err(Error::ShapeMismatch(_))));

        let mut text = String::from("nu0,value\n");
        for i in 0..64 {
            text.push_str(&format!("{i},{}\n", if i == 5 { "NaN".to_string() } else { "0.5".to_string() }));
        }
        let bad = dir.path().join("nan.csv");
        std::fs::write(&bad, text).unwrap();
        assert!(matches!(ingest_csv(&bad, &g), Err(Error::NonFiniteValue(5))));
    }

    proptest! {
        #[test]
        fn series_is_linear_in_the_profile(a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let g = dyadic(7);
            let spec = Arc::new(TilingSpec::dyadic());
            let pg = Arc::new(GridSpace::new(spec, 7, &[1]).unwrap());
            let p1 = sample_series(&SeriesSpec::takagi(2, 0.5), &pg).unwrap().function;
            let p2 = GridFunction::from_fn(pg.clone(), |x| (x[0] * 7.0).sin()).unwrap();
            let mix = p1.combine(a, &p2, b).unwrap();
            let mu = [0.6, 0.3];
            let f1 = sample_series(&SeriesSpec::real(&mu, Profile::Sampled(p1)), &g).unwrap().function;
            let f2 = sample_series(&SeriesSpec::real(&mu, Profile::Sampled(p2)), &g).unwrap().function;
            let fm = sample_series(&SeriesSpec::real(&mu, Profile::Sampled(mix)), &g).unwrap().function;
            for s in 0..g.len() {
                let lhs = fm.samples()[s];
                let rhs = a * f1.samples()[s] + b * f2.samples()[s];
                prop_assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }
}
