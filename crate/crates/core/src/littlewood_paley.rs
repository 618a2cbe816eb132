//! Frequency-band decomposition for scalar dilations `M = a Id` on the periodized window.

use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::besov::VariantValue;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpace};

/// Radial low-pass profile: 1 on `t <= 1/a`, 0 on `t >= 1`, raised cosine between.
pub fn mask(t: f64, a: f64) -> f64 {
    let lo = 1.0 / a;
    if t <= lo {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (t - lo) / (1.0 - lo)).cos())
    }
}

/// The integer `a` when the dilation is `a Id`.
pub fn scalar_dilation(grid: &GridSpace) -> Result<usize> {
    let m = grid.spec().dilation().matrix();
    let a = m.get(0, 0);
    let n = m.dim();
    let ok = a >= 2 && (0..n).all(|i| (0..n).all(|j| m.get(i, j) == if i == j { a } else { 0 }));
    if ok {
        Ok(a as usize)
    } else {
        Err(Error::WrongDilation(format!("expected a multiple of the identity, got {:?}", m.rows())))
    }
}

/// Row-major lattice layout of a scalar-dilation grid and its discrete spectrum.
struct Spectrum {
    dims: Vec<usize>,
    /// Storage index to row-major position.
    position: Vec<usize>,
    /// `|xi|` at each row-major position, in cycles per unit length.
    radius: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    fn new(f: &GridFunction, a: usize) -> Self {
        let grid = f.grid();
        let n = grid.n();
        let side = a.pow(grid.level() as u32);
        let dims: Vec<usize> = grid.window().iter().map(|&w| side * w as usize).collect();
        let position: Vec<usize> = (0..grid.len())
            .map(|s| {
                let mut idx = 0;
                let mut stride = 1;
                for (v, &d) in grid.nu(s).iter().zip(&dims) {
                    idx += v.rem_euclid(d as i64) as usize * stride;
                    stride *= d;
                }
                idx
            })
            .collect();
        let total: usize = dims.iter().product();
        let mut radius = vec![0.0; total];
        for (idx, r) in radius.iter_mut().enumerate() {
            let mut rest = idx;
            let mut acc = 0.0;
            for i in 0..n {
                let j = rest % dims[i];
                rest /= dims[i];
                let k = if j <= dims[i] / 2 { j as f64 } else { j as f64 - dims[i] as f64 };
                acc += (k / grid.window()[i] as f64).powi(2);
            }
            *r = acc.sqrt();
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); total];
        for (s, &pos) in position.iter().enumerate() {
            coeffs[pos] = Complex64::new(f.samples()[s], 0.0);
        }
        fft_nd(&mut coeffs, &dims, false);
        Self { dims, position, radius, coeffs }
    }

    /// Inverse transform of the spectrum multiplied by `filter(|xi|)`, in storage order.
    fn filtered(&self, filter: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut buf: Vec<Complex64> = self.coeffs.iter().zip(&self.radius).map(|(c, &r)| c * filter(r)).collect();
        fft_nd(&mut buf, &self.dims, true);
        let scale = 1.0 / buf.len() as f64;
        self.position.iter().map(|&p| buf[p].re * scale).collect()
    }
}

fn fft_nd(data: &mut [Complex64], dims: &[usize], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let mut stride = 1;
    for &d in dims {
        let fft = if inverse { planner.plan_fft_inverse(d) } else { planner.plan_fft_forward(d) };
        let mut line = vec![Complex64::new(0.0, 0.0); d];
        let block = stride * d;
        for start in (0..data.len()).step_by(block) {
            for off in 0..stride {
                for (j, c) in line.iter_mut().enumerate() {
                    *c = data[start + off + j * stride];
                }
                fft.process(&mut line);
                for (j, c) in line.iter().enumerate() {
                    data[start + off + j * stride] = *c;
                }
            }
        }
        stride *= d;
    }
}

#[derive(Debug, Clone)]
pub struct LpDecomposition {
    lambda0: usize,
    low: GridFunction,
    pieces: Vec<GridFunction>,
    remainders: Vec<GridFunction>,
}

impl LpDecomposition {
    pub fn lambda0(&self) -> usize {
        self.lambda0
    }

    pub fn lmax(&self) -> usize {
        self.pieces.len() - 1
    }

    /// `S_0 f`.
    pub fn low(&self) -> &GridFunction {
        &self.low
    }

    /// `f_l` for `l = 0..=lmax`.
    pub fn pieces(&self) -> &[GridFunction] {
        &self.pieces
    }

    /// `f - S_l f` for `l = 0..=lmax + 1`.
    pub fn remainders(&self) -> &[GridFunction] {
        &self.remainders
    }

    /// `S_0 f + sum_{l <= lmax} f_l`.
    pub fn reconstruction(&self) -> GridFunction {
        let mut acc = self.low.samples().to_vec();
        for p in &self.pieces {
            for (a, v) in acc.iter_mut().zip(p.samples()) {
                *a += v;
            }
        }
        GridFunction::new(self.low.grid().clone(), acc).expect("finite sums of finite samples")
    }
}

/// `S_0 f` and the band pieces `f_l = S_{l+1} f - S_l f` for `l = 0..=lmax`.
pub fn lp_decompose(f: &GridFunction, lmax: usize) -> Result<LpDecomposition> {
    let grid = f.grid();
    let a = scalar_dilation(grid)?;
    let nyquist = (a as f64).powi(grid.level() as i32) / 2.0;
    if (a as f64).powi(lmax as i32) > nyquist {
        return Err(Error::LevelBeyondNyquist { level: lmax });
    }
    let spec = Spectrum::new(f, a);
    let af = a as f64;
    let wrap = |v: Vec<f64>, g: &Arc<GridSpace>| GridFunction::new(g.clone(), v);
    let low = wrap(spec.filtered(|r| mask(r, af)), grid)?;
    let mut pieces = Vec::with_capacity(lmax + 1);
    for l in 0..=lmax {
        let (lo, hi) = (af.powi(l as i32), af.powi(l as i32 + 1));
        pieces.push(wrap(spec.filtered(|r| mask(r / hi, af) - mask(r / lo, af)), grid)?);
    }
    let mut remainders = Vec::with_capacity(lmax + 2);
    for l in 0..=lmax + 1 {
        let sc = af.powi(l as i32);
        remainders.push(wrap(spec.filtered(|r| 1.0 - mask(r / sc, af)), grid)?);
    }
    Ok(LpDecomposition { lambda0: a, low, pieces, remainders })
}

#[derive(Debug, Clone, Serialize)]
pub struct LpNormReport {
    pub s: f64,
    #[serde(serialize_with = "crate::besov::serialize_index")]
    pub p: f64,
    #[serde(serialize_with = "crate::besov::serialize_index")]
    pub q: f64,
    pub lmax: usize,
    pub lambda0: usize,
    /// `||S_0 f||_p + (sum (lambda0^{ls} ||f_l||_p)^q)^{1/q}`.
    pub band: VariantValue,
    /// `||f||_p + (sum (lambda0^{ls} ||f - S_l f||_p)^q)^{1/q}`.
    pub partial: VariantValue,
}

impl LpNormReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["level", "band", "remainder"])?;
        for (i, l) in self.band.levels.iter().enumerate() {
            w.write_record([l.to_string(), format!("{:e}", self.band.raw[i]), format!("{:e}", self.partial.raw[i])])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn lp_besov_norm(f: &GridFunction, s: f64, p: f64, q: f64, lmax: usize) -> Result<LpNormReport> {
    if !(p >= 1.0 && q >= 1.0) {
        return Err(Error::BadParameters(format!("p = {p}, q = {q} must lie in [1, inf]")));
    }
    let d = lp_decompose(f, lmax)?;
    Ok(lp_norm_from(&d, f, s, p, q))
}

pub fn lp_norm_from(d: &LpDecomposition, f: &GridFunction, s: f64, p: f64, q: f64) -> LpNormReport {
    let a = d.lambda0 as f64;
    let levels: Vec<usize> = (0..=d.lmax()).collect();
    let band_raw: Vec<f64> = d.pieces.iter().map(|g| g.norm(p)).collect();
    let rem_raw: Vec<f64> = d.remainders[..=d.lmax()].iter().map(|g| g.norm(p)).collect();
    LpNormReport {
        s,
        p,
        q,
        lmax: d.lmax(),
        lambda0: d.lambda0,
        band: VariantValue::new(d.low.norm(p), levels.clone(), band_raw, a, s, q),
        partial: VariantValue::new(f.norm(p), levels, rem_raw, a, s, q),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointwiseAudit {
    pub x: Vec<f64>,
    pub s: f64,
    /// `sup_y |f(y) - S_l f(y)| / (lambda0^{-l} + |x - y|)^s` for each level.
    pub per_level: Vec<f64>,
    /// Running maximum of `per_level`: the smallest constant valid up to each level.
    pub constant: Vec<f64>,
    pub s_prime: Option<f64>,
    /// `sup_y |f_l(y)| lambda0^{ls} / (1 + lambda0^l |x - y|)^{s'}` for each level.
    pub band_per_level: Option<Vec<f64>>,
}

impl PointwiseAudit {
    pub fn c(&self) -> f64 {
        self.constant.last().copied().unwrap_or(0.0)
    }
}

fn torus_distance(grid: &GridSpace, x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(grid.window())
        .map(|((a, b), &w)| {
            let w = w as f64;
            let d = (a - b).rem_euclid(w);
            d.min(w - d).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Smallest constants in the pointwise remainder and band bounds at `x`, level by level.
pub fn pointwise_lp_audit(f: &GridFunction, x: &[f64], s: f64, s_prime: Option<f64>, lmax: usize) -> Result<PointwiseAudit> {
    let d = lp_decompose(f, lmax)?;
    Ok(pointwise_audit_from(&d, x, s, s_prime))
}

pub fn pointwise_audit_from(d: &LpDecomposition, x: &[f64], s: f64, s_prime: Option<f64>) -> PointwiseAudit {
    let grid = d.low.grid();
    let a = d.lambda0 as f64;
    let dist: Vec<f64> = (0..grid.len()).map(|i| torus_distance(grid, x, grid.point(i))).collect();
    let per_level: Vec<f64> = (0..=d.lmax())
        .map(|l| {
            let h = a.powi(-(l as i32));
            d.remainders[l]
                .samples()
                .iter()
                .zip(&dist)
                .map(|(v, r)| v.abs() / (h + r).powf(s))
                .fold(0.0, f64::max)
        })
        .collect();
    let mut constant = per_level.clone();
    for i in 1..constant.len() {
        constant[i] = constant[i].max(constant[i - 1]);
    }
    let band_per_level = s_prime.map(|sp| {
        d.pieces
            .iter()
            .enumerate()
            .map(|(l, g)| {
                let sc = a.powi(l as i32);
                g.samples()
                    .iter()
                    .zip(&dist)
                    .map(|(v, r)| v.abs() * sc.powf(s) / (1.0 + sc * r).powf(sp))
                    .fold(0.0, f64::max)
            })
            .collect()
    });
    PointwiseAudit { x: x.to_vec(), s, per_level, constant, s_prime, band_per_level }
}
