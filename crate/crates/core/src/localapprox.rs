//! Cell-wise polynomial fits, oscillations and higher-order difference norms.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{lp_mean, lp_norm_weighted, GridFunction, GridSpace};
use crate::tiling::CellAddress;

/// Seed for the random part of the difference-step probe set.
pub const PROBE_SEED: u64 = 0x7ab1_e5ee_d000_0001;
const MAX_STEPS: usize = 64;
const REFINE_ITERS: usize = 60;
const RANK_TOL: f64 = 1e-10;

/// How cells and steps that leave the window are treated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Wrap around the window.
    #[default]
    Periodic,
    /// Drop cells and steps that would wrap.
    Interior,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    n: usize,
    k: usize,
    exponents: Vec<Vec<u32>>,
}

impl MonomialBasis {
    pub fn new(n: usize, k: usize) -> Self {
        let mut exponents = Vec::new();
        for deg in 0..=k as u32 {
            let mut cur = vec![0u32; n];
            collect_degree(&mut exponents, &mut cur, 0, deg);
        }
        Self { n, k, exponents }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    pub fn eval_into(&self, u: &[f64], out: &mut [f64]) {
        for (o, a) in out.iter_mut().zip(&self.exponents) {
            *o = u.iter().zip(a).map(|(x, &e)| x.powi(e as i32)).product();
        }
    }
}

fn collect_degree(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, axis: usize, left: u32) {
    if axis + 1 == cur.len() {
        cur[axis] = left;
        out.push(cur.clone());
        return;
    }
    for e in (0..=left).rev() {
        cur[axis] = e;
        collect_degree(out, cur, axis + 1, left - e);
    }
    cur[axis] = 0;
}

/// Best-fit polynomial on one cell, in coordinates rescaled to the cell's bounding box.
#[derive(Debug, Clone, Serialize)]
pub struct PolynomialPatch {
    pub cell: CellAddress,
    pub exponents: Vec<Vec<u32>>,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    pub coefficients: Vec<f64>,
    /// Normalized `L^2` residual of the fit on the cell samples.
    pub residual: f64,
}

impl PolynomialPatch {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(&self.coefficients)
            .map(|(a, c)| {
                c * x
                    .iter()
                    .zip(&self.center)
                    .zip(&self.scale)
                    .zip(a)
                    .map(|(((v, m), s), &e)| ((v - m) / s).powi(e as i32))
                    .product::<f64>()
            })
            .sum()
    }
}

/// Least-squares machinery for a fixed set of sample offsets.
#[derive(Debug, Clone)]
pub struct Stencil {
    basis: MonomialBasis,
    offsets: Vec<i64>,
    center: Vec<f64>,
    scale: Vec<f64>,
    /// Orthonormal basis of the column space, `N x b` row-major.
    q: Vec<f64>,
    /// Maps samples to monomial coefficients.
    pinv: DMatrix<f64>,
}

impl Stencil {
    pub fn new(grid: &GridSpace, offsets: Vec<i64>, k: usize) -> Result<Self> {
        let n = grid.n();
        let basis = MonomialBasis::new(n, k);
        let b = basis.len();
        let count = offsets.len() / n;
        if count < b {
            return Err(Error::RankDeficient { samples: count, basis: b });
        }
        let inv = grid.spec().dilation().inverse_pow(grid.level());
        let mut coords = vec![0.0; offsets.len()];
        for (c, o) in coords.chunks_mut(n).zip(offsets.chunks(n)) {
            for i in 0..n {
                c[i] = (0..n).map(|j| inv[(i, j)] * o[j] as f64).sum();
            }
        }
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for c in coords.chunks(n) {
            for i in 0..n {
                lo[i] = lo[i].min(c[i]);
                hi[i] = hi[i].max(c[i]);
            }
        }
        let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let scale: Vec<f64> =
            lo.iter().zip(&hi).map(|(a, b)| if b > a { 0.5 * (b - a) } else { 1.0 }).collect();
        let mut a = DMatrix::<f64>::zeros(count, b);
        let mut u = vec![0.0; n];
        let mut row = vec![0.0; b];
        for (r, c) in coords.chunks(n).enumerate() {
            for i in 0..n {
                u[i] = (c[i] - center[i]) / scale[i];
            }
            basis.eval_into(&u, &mut row);
            for j in 0..b {
                a[(r, j)] = row[j];
            }
        }
        let qr = a.col_piv_qr();
        let r = qr.r();
        let r00 = r[(0, 0)].abs();
        if (0..b).any(|i| r[(i, i)].abs() <= RANK_TOL * r00.max(f64::MIN_POSITIVE)) {
            return Err(Error::RankDeficient { samples: count, basis: b });
        }
        let qm = qr.q();
        let mut pinv = r
            .solve_upper_triangular(&qm.transpose())
            .ok_or(Error::RankDeficient { samples: count, basis: b })?;
        qr.p().inv_permute_rows(&mut pinv);
        let mut q = vec![0.0; count * b];
        for i in 0..count {
            for j in 0..b {
                q[i * b + j] = qm[(i, j)];
            }
        }
        Ok(Self { basis, offsets, center, scale, q, pinv })
    }

    pub fn len(&self) -> usize {
        self.q.len() / self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn coefficients(&self, y: &[f64]) -> Vec<f64> {
        (&self.pinv * DVector::from_column_slice(y)).iter().copied().collect()
    }

    /// `y - P y` for the orthogonal projection `P` onto the polynomials.
    pub fn residual(&self, y: &[f64], out: &mut [f64]) {
        let b = self.basis.len();
        let mut proj = vec![0.0; b];
        for (i, &v) in y.iter().enumerate() {
            let row = &self.q[i * b..(i + 1) * b];
            for j in 0..b {
                proj[j] += row[j] * v;
            }
        }
        for (i, &v) in y.iter().enumerate() {
            let row = &self.q[i * b..(i + 1) * b];
            out[i] = v - row.iter().zip(&proj).map(|(a, c)| a * c).sum::<f64>();
        }
    }

    /// `(osc, omega)` of the samples `y` in the normalized `L^p` sense.
    pub fn oscillation(&self, y: &[f64], p: f64, scratch: &mut Vec<f64>) -> (f64, f64) {
        scratch.resize(y.len(), 0.0);
        self.residual(y, scratch);
        let omega = lp_mean(scratch, p);
        if omega == 0.0 || p == 2.0 {
            return (omega, omega);
        }
        let b = self.basis.len();
        let osc = if b == 1 {
            if p.is_infinite() {
                let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), &v| (a.min(v), c.max(v)));
                0.5 * (hi - lo)
            } else if p == 1.0 {
                let mut s = y.to_vec();
                s.sort_by(f64::total_cmp);
                let med = s[s.len() / 2];
                y.iter().map(|v| (v - med).abs()).sum::<f64>() / y.len() as f64
            } else {
                omega
            }
        } else if p.is_infinite() || p == 1.0 {
            self.reweighted(y, p, omega)
        } else {
            omega
        };
        (osc.min(omega), omega)
    }

    /// Iteratively reweighted fits: Lawson updates for `p = inf`, inverse residual weights for `p = 1`.
    fn reweighted(&self, y: &[f64], p: f64, start: f64) -> f64 {
        let b = self.basis.len();
        let count = y.len();
        let mut w = vec![1.0 / count as f64; count];
        let mut r = vec![0.0; count];
        self.residual(y, &mut r);
        let mut best = start;
        let floor = 1e-12 * y.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        for _ in 0..REFINE_ITERS {
            if p.is_infinite() {
                let s: f64 = w.iter().zip(&r).map(|(a, e)| a * e.abs()).sum();
                if s <= 0.0 {
                    break;
                }
                for (a, e) in w.iter_mut().zip(&r) {
                    *a *= e.abs() / s;
                }
            } else {
                for (a, e) in w.iter_mut().zip(&r) {
                    *a = 1.0 / e.abs().max(floor);
                }
            }
            let mut g = DMatrix::<f64>::zeros(b, b);
            let mut h = DVector::<f64>::zeros(b);
            for i in 0..count {
                let row = &self.q[i * b..(i + 1) * b];
                for j in 0..b {
                    h[j] += w[i] * y[i] * row[j];
                    for l in 0..=j {
                        g[(j, l)] += w[i] * row[j] * row[l];
                    }
                }
            }
            for j in 0..b {
                for l in 0..j {
                    g[(l, j)] = g[(j, l)];
                }
            }
            let Some(chol) = g.cholesky() else { break };
            let a = chol.solve(&h);
            for i in 0..count {
                let row = &self.q[i * b..(i + 1) * b];
                r[i] = y[i] - row.iter().zip(a.iter()).map(|(x, c)| x * c).sum::<f64>();
            }
            best = best.min(lp_mean(&r, p));
        }
        best
    }
}

/// Discrete `L^2` fit of degree `k` on a window cell.
pub fn project_cell(f: &GridFunction, cell: &CellAddress, k: usize) -> Result<PolynomialPatch> {
    let grid = f.grid();
    let l = cell.level;
    if l > grid.level() {
        return Err(Error::LevelTooFine { level: l, grid_level: grid.level() });
    }
    let c = grid
        .cell_index(cell)
        .ok_or_else(|| Error::BadParameters(format!("cell {cell:?} is outside the window")))?;
    let block = grid.block(l, c);
    let n = grid.n();
    let base = grid.nu(block.start).to_vec();
    let mut offsets = Vec::with_capacity(block.len() * n);
    for s in block.clone() {
        offsets.extend(grid.nu(s).iter().zip(&base).map(|(a, b)| a - b));
    }
    let stencil = Stencil::new(grid, offsets, k)?;
    let y = &f.samples()[block.clone()];
    let coefficients = stencil.coefficients(y);
    let mut r = vec![0.0; y.len()];
    stencil.residual(y, &mut r);
    let origin = grid.point(block.start);
    Ok(PolynomialPatch {
        cell: cell.clone(),
        exponents: stencil.basis.exponents.clone(),
        center: origin.iter().zip(&stencil.center).map(|(a, b)| a + b).collect(),
        scale: stencil.scale.clone(),
        coefficients,
        residual: lp_mean(&r, 2.0),
    })
}

/// Samples of `f` at `s + offsets`, or `None` when a sample wraps and wrapping is excluded.
fn gather(f: &GridFunction, s: usize, offsets: &[i64], boundary: Boundary, out: &mut Vec<f64>) -> bool {
    let grid = f.grid();
    let n = grid.n();
    let mut buf = vec![0i64; n];
    out.clear();
    for o in offsets.chunks(n) {
        if boundary == Boundary::Interior {
            let nu: Vec<i64> = grid.nu(s).iter().zip(o).map(|(a, b)| a + b).collect();
            if !grid.in_window(&nu) {
                return false;
            }
        }
        out.push(f.samples()[grid.offset_index(s, o, &mut buf)]);
    }
    true
}

/// Per-cell oscillations at one level.
#[derive(Debug, Clone)]
pub struct LevelOscillation {
    pub level: usize,
    /// Indices of the level-`l` cells whose representative points were used.
    pub cells: Vec<usize>,
    pub osc: Vec<f64>,
    pub omega: Vec<f64>,
}

impl LevelOscillation {
    /// `(||osc(., l)||_p, ||omega(., l)||_p)` with cell measure `m^{-l}`.
    pub fn norms(&self, grid: &GridSpace, p: f64) -> (f64, f64) {
        let w = (grid.m() as f64).powi(-(self.level as i32));
        (lp_norm_weighted(&self.osc, p, w), lp_norm_weighted(&self.omega, p, w))
    }
}

pub fn check_level(grid: &GridSpace, l: usize, k: usize) -> Result<()> {
    if l >= grid.level() {
        return Err(Error::LevelTooFine { level: l, grid_level: grid.level() });
    }
    let b = MonomialBasis::new(grid.n(), k).len();
    if grid.block_len(l) < b {
        return Err(Error::RankDeficient { samples: grid.block_len(l), basis: b });
    }
    Ok(())
}

/// `osc` and `omega` on `Q_l(x)` at the representative point `x` of every level-`l` cell.
pub fn level_oscillation(f: &GridFunction, l: usize, k: usize, p: f64, boundary: Boundary) -> Result<LevelOscillation> {
    let grid = f.grid();
    check_level(grid, l, k)?;
    let stencil = Stencil::new(grid, grid.centered_offsets(l), k)?;
    let mut y = Vec::with_capacity(stencil.len());
    let mut scratch = Vec::new();
    let mut out = LevelOscillation { level: l, cells: vec![], osc: vec![], omega: vec![] };
    for c in 0..grid.cells(l) {
        let s = grid.block(l, c).start;
        if !gather(f, s, stencil.offsets(), boundary, &mut y) {
            continue;
        }
        let (o, w) = stencil.oscillation(&y, p, &mut scratch);
        out.cells.push(c);
        out.osc.push(o);
        out.omega.push(w);
    }
    Ok(out)
}

/// `Omega^k_p f(x, l)`.
pub fn omega(f: &GridFunction, x: &[f64], l: usize, k: usize, p: f64) -> Result<f64> {
    Ok(local_oscillation(f, x, l, k, p)?.1)
}

/// `osc^k_p f(x, l)`.
pub fn osc(f: &GridFunction, x: &[f64], l: usize, k: usize, p: f64) -> Result<f64> {
    Ok(local_oscillation(f, x, l, k, p)?.0)
}

fn local_oscillation(f: &GridFunction, x: &[f64], l: usize, k: usize, p: f64) -> Result<(f64, f64)> {
    check_p(p)?;
    let grid = f.grid();
    check_level(grid, l, k)?;
    let s = grid.snap(x)?;
    let stencil = Stencil::new(grid, grid.centered_offsets(l), k)?;
    let mut y = Vec::new();
    gather(f, s, stencil.offsets(), Boundary::Periodic, &mut y);
    let mut scratch = Vec::new();
    Ok(stencil.oscillation(&y, p, &mut scratch))
}

pub fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::BadParameters(format!("p = {p} must satisfy 1 <= p <= inf")))
    }
}

/// Deterministic probe steps `v` (grid units) with `(k+1)|M^{l-L} v| < r/2`.
pub fn probe_steps(grid: &GridSpace, l: usize, k: usize) -> Vec<Vec<i64>> {
    let n = grid.n();
    let big_l = grid.level();
    if l >= big_l {
        return vec![];
    }
    let inv = grid.spec().dilation().inverse_pow(big_l - l);
    let bound = grid.spec().geometry().inradius / (2.0 * (k as f64 + 1.0));
    let size = |v: &[i64]| -> f64 {
        (0..n).map(|i| (0..n).map(|j| inv[(i, j)] * v[j] as f64).sum::<f64>().powi(2)).sum::<f64>().sqrt()
    };
    let mut steps: Vec<Vec<i64>> = Vec::new();
    let push = |v: Vec<i64>, steps: &mut Vec<Vec<i64>>| {
        let neg: Vec<i64> = v.iter().map(|x| -x).collect();
        if v.iter().any(|&x| x != 0) && !steps.contains(&v) && !steps.contains(&neg) {
            steps.push(v);
        }
    };
    let per_axis = (MAX_STEPS - 2 * n) / n;
    for axis in 0..n {
        let mut e = vec![0i64; n];
        e[axis] = 1;
        let unit = size(&e);
        let mut jmax = (bound / unit).ceil() as i64 - 1;
        while jmax >= 1 && size(&e.iter().map(|x| x * jmax).collect::<Vec<_>>()) >= bound {
            jmax -= 1;
        }
        if jmax < 1 {
            continue;
        }
        let mut ladder = vec![jmax];
        if jmax > 2 {
            ladder.push(jmax * 3 / 4);
        }
        let mut j = 1;
        while j < jmax && ladder.len() < per_axis {
            ladder.push(j);
            j *= 2;
        }
        ladder.sort_unstable();
        ladder.dedup();
        for j in ladder {
            push(e.iter().map(|x| x * j).collect(), &mut steps);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED.wrapping_add(l as u64));
    for _ in 0..2 * n {
        let mut theta: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        theta.iter_mut().for_each(|v| *v /= norm);
        let unit: f64 = {
            let t: Vec<f64> = (0..n).map(|i| (0..n).map(|j| inv[(i, j)] * theta[j]).sum()).collect();
            t.iter().map(|v| v * v).sum::<f64>().sqrt()
        };
        let mut t = (bound / unit).floor();
        while t >= 1.0 {
            let v: Vec<i64> = theta.iter().map(|c| (c * t).round() as i64).collect();
            if v.iter().any(|&x| x != 0) && size(&v) < bound {
                push(v, &mut steps);
                break;
            }
            t -= 1.0;
        }
        if steps.len() >= MAX_STEPS {
            break;
        }
    }
    steps.truncate(MAX_STEPS);
    steps
}

fn binomial_weights(k: usize) -> Vec<f64> {
    let order = k + 1;
    let mut c = vec![1.0f64; order + 1];
    for j in 1..=order {
        c[j] = c[j - 1] * (order + 1 - j) as f64 / j as f64;
    }
    // coefficient of f(x + j u) in the forward difference of order k+1
    (0..=order).map(|j| if (order - j) % 2 == 0 { c[j] } else { -c[j] }).collect()
}

/// `Delta_v^{k+1} f` on the whole grid, with `None` where a wrapped sample is excluded.
pub fn difference(f: &GridFunction, v: &[i64], k: usize, boundary: Boundary) -> Vec<Option<f64>> {
    let grid = f.grid();
    let wts = binomial_weights(k);
    let maps: Vec<Vec<u32>> = (1..wts.len())
        .map(|j| grid.shift_map(&v.iter().map(|x| x * j as i64).collect::<Vec<_>>()))
        .collect();
    let y = f.samples();
    (0..grid.len())
        .map(|s| {
            if boundary == Boundary::Interior {
                for j in 1..wts.len() {
                    let nu: Vec<i64> = grid.nu(s).iter().zip(v).map(|(a, b)| a + b * j as i64).collect();
                    if !grid.in_window(&nu) {
                        return None;
                    }
                }
            }
            let mut acc = wts[0] * y[s];
            for (j, map) in maps.iter().enumerate() {
                acc += wts[j + 1] * y[map[s] as usize];
            }
            Some(acc)
        })
        .collect()
}

/// `||Delta_v^{k+1} f||_p` for one step.
pub fn difference_step_norm(f: &GridFunction, v: &[i64], k: usize, p: f64, boundary: Boundary) -> f64 {
    let vals: Vec<f64> = difference(f, v, k, boundary).into_iter().flatten().collect();
    f.grid().lp_norm(&vals, p)
}

#[derive(Debug, Clone, Serialize)]
pub struct DifferenceNorm {
    pub level: usize,
    pub value: f64,
    pub steps: usize,
}

/// Largest `||Delta_u^{k+1} f||_p` over the probe steps of level `l`.
pub fn difference_norm(f: &GridFunction, l: usize, k: usize, p: f64, boundary: Boundary) -> Result<DifferenceNorm> {
    check_p(p)?;
    let steps = probe_steps(f.grid(), l, k);
    if steps.is_empty() {
        return Err(Error::EmptyStepSet(l));
    }
    let value = steps
        .iter()
        .map(|v| difference_step_norm(f, v, k, p, boundary))
        .fold(0.0, f64::max);
    Ok(DifferenceNorm { level: l, value, steps: steps.len() })
}

/// Coarsest and finest levels with a nonempty probe set.
pub fn admissible_levels(grid: &GridSpace, k: usize) -> Option<(usize, usize)> {
    let hi = (0..grid.level()).rev().find(|&l| !probe_steps(grid, l, k).is_empty())?;
    Some((0, hi))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PointwiseLevel {
    pub level: usize,
    pub osc: f64,
    pub omega: f64,
    /// Local difference quantity; absent where no admissible step exists.
    pub diff: Option<f64>,
}

/// The three pointwise per-level quantities at `x` for `l = 0..=lmax`.
pub fn pointwise_sequences(f: &GridFunction, x: &[f64], k: usize, p: f64, lmax: usize) -> Result<Vec<PointwiseLevel>> {
    check_p(p)?;
    let grid = f.grid();
    let s = grid.snap(x)?;
    let n = grid.n();
    let mut out = Vec::with_capacity(lmax + 1);
    let mut y = Vec::new();
    let mut scratch = Vec::new();
    let wts = binomial_weights(k);
    let mut buf = vec![0i64; n];
    for l in 0..=lmax {
        check_level(grid, l, k)?;
        let stencil = Stencil::new(grid, grid.centered_offsets(l), k)?;
        gather(f, s, stencil.offsets(), Boundary::Periodic, &mut y);
        let (o, w) = stencil.oscillation(&y, p, &mut scratch);
        let steps = probe_steps(grid, l, k);
        let diff = if steps.is_empty() {
            None
        } else {
            let cell: Vec<usize> =
                stencil.offsets().chunks(n).map(|o| grid.offset_index(s, o, &mut buf)).collect();
            let mut best = 0.0f64;
            let mut vals = vec![0.0; cell.len()];
            for v in &steps {
                for (val, &c) in vals.iter_mut().zip(&cell) {
                    let mut acc = wts[0] * f.samples()[c];
                    for (j, wj) in wts.iter().enumerate().skip(1) {
                        let jv: Vec<i64> = v.iter().map(|x| x * j as i64).collect();
                        acc += wj * f.samples()[grid.offset_index(c, &jv, &mut buf)];
                    }
                    *val = acc;
                }
                best = best.max(lp_mean(&vals, p));
            }
            Some(best)
        };
        out.push(PointwiseLevel { level: l, osc: o, omega: w, diff });
    }
    Ok(out)
}

/// Plot-ready table with columns `level, osc, omega, diff`.
pub fn write_levels_csv(path: &Path, rows: &[PointwiseLevel]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["level", "osc", "omega", "diff"])?;
    for r in rows {
        w.write_record([
            r.level.to_string(),
            format!("{:e}", r.osc),
            format!("{:e}", r.omega),
            r.diff.map(|d| format!("{d:e}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcrep::SeriesSpec;
    use crate::tiling::TilingSpec;
    use proptest::prelude::{prop_assert, proptest};
    use std::sync::Arc;

    fn grid(level: usize, w: i64) -> Arc<GridSpace> {
        Arc::new(GridSpace::new(Arc::new(TilingSpec::dyadic()), level, &[w]).unwrap())
    }

    fn func(g: &Arc<GridSpace>, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_fn(g.clone(), |x| f(x[0])).unwrap()
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(MonomialBasis::new(1, 3).len(), 4);
        assert_eq!(MonomialBasis::new(2, 2).len(), 6);
        assert_eq!(MonomialBasis::new(3, 2).len(), 10);
    }

    #[test]
    fn linear_fit_is_reproduced() {
        let g = grid(8, 1);
        let f = func(&g, |x| 3.0 * x + 1.0);
        let patch = project_cell(&f, &g.spec().root(), 1).unwrap();
        assert!(patch.residual < 1e-13);
        for x in [0.0, 0.25, 0.9] {
            assert!((patch.eval(&[x]) - (3.0 * x + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn indicator_fits() {
        let g = grid(8, 1);
        let f = func(&g, |x| if x < 0.5 { 1.0 } else { 0.0 });
        let patch = project_cell(&f, &g.spec().root(), 0).unwrap();
        assert!((patch.coefficients[0] - 0.5).abs() < 1e-15);
        assert!((omega(&f, &[0.5], 0, 0, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((osc(&f, &[0.5], 0, 0, f64::INFINITY).unwrap() - 0.5).abs() < 1e-15);
        let v = func(&g, |x| (x - 0.5).abs());
        let o = osc(&v, &[0.5], 0, 0, f64::INFINITY).unwrap();
        // samples reach 1/2 at x = 0 and 0 at x = 1/2
        assert!((o - 0.25).abs() < 1e-15);
    }

    #[test]
    fn takagi_fit_beats_coefficient_search() {
        let g = grid(10, 1);
        let f = crate::funcrep::sample_series(&SeriesSpec::takagi(2, 0.5), &g).unwrap().function;
        let patch = project_cell(&f, &g.spec().root(), 1).unwrap();
        let xs: Vec<f64> = (0..g.len()).map(|s| g.point(s)[0]).collect();
        let y = f.samples();
        let rms = |a: f64, b: f64| {
            (xs.iter().zip(y).map(|(x, v)| (v - a - b * x).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
        };
        let mut best = f64::INFINITY;
        for i in 0..=200 {
            for j in 0..=200 {
                best = best.min(rms(0.3 + 0.002 * i as f64, -0.2 + 0.002 * j as f64));
            }
        }
        assert!(patch.residual <= best + 1e-12);
        assert!(best - patch.residual < 2e-3);
    }

    #[test]
    fn sine_difference_closed_form() {
        let g = grid(12, 1);
        let f = func(&g, |x| (2.0 * std::f64::consts::PI * x).sin());
        let v = [16i64];
        let got = difference_step_norm(&f, &v, 0, f64::INFINITY, Boundary::Periodic);
        let want = 2.0 * (std::f64::consts::PI / 256.0).sin();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn polynomials_are_annihilated() {
        let g = grid(10, 2);
        let f = func(&g, |x| 0.5 - 2.0 * x + 0.75 * x * x);
        for l in 1..6 {
            let lo = level_oscillation(&f, l, 2, f64::INFINITY, Boundary::Interior).unwrap();
            assert!(lo.osc.iter().chain(&lo.omega).all(|&v| v < 1e-12));
        }
        for v in probe_steps(&g, 3, 2) {
            assert!(difference_step_norm(&f, &v, 2, f64::INFINITY, Boundary::Interior) < 1e-12);
        }
    }

    #[test]
    fn step_set_runs_out_at_fine_levels() {
        let g = grid(16, 1);
        assert!(!probe_steps(&g, 12, 1).is_empty());
        assert!(probe_steps(&g, 13, 1).is_empty());
        assert!(matches!(
            difference_norm(&GridFunction::zeros(g.clone()), 13, 1, 2.0, Boundary::Periodic),
            Err(Error::EmptyStepSet(13))
        ));
        assert!(probe_steps(&g, 4, 1).len() <= MAX_STEPS);
    }

    #[test]
    fn twin_dragon_steps_and_oscillation() {
        let spec = Arc::new(TilingSpec::twin_dragon());
        let g = Arc::new(GridSpace::new(spec, 10, &[2, 2]).unwrap());
        let steps = probe_steps(&g, 2, 0);
        assert!(steps.len() >= 2);
        let f = GridFunction::from_fn(g.clone(), |x| 2.0 * x[0] - x[1]).unwrap();
        let lo = level_oscillation(&f, 3, 1, 2.0, Boundary::Interior).unwrap();
        assert!(!lo.cells.is_empty());
        assert!(lo.omega.iter().all(|&v| v < 1e-12));
    }

    #[test]
    fn takagi_pointwise_slope() {
        let g = grid(16, 1);
        let f = crate::funcrep::sample_series(&SeriesSpec::takagi(2, 0.5f64.sqrt()), &g).unwrap().function;
        let rows = pointwise_sequences(&f, &[1.0 / 3.0], 1, f64::INFINITY, 12).unwrap();
        let pts: Vec<(f64, f64)> = rows[4..].iter().map(|r| (r.level as f64, r.osc.log2())).collect();
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let k = pts.len() as f64;
        let (mx, my) = (sx / k, sy / k);
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope + 0.5).abs() < 0.1, "slope {slope}");
    }

    proptest! {
        #[test]
        fn osc_bounded_by_omega_and_monotone_in_p(seed in 0u64..500, l in 0usize..5) {
            let g = grid(8, 1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = GridFunction::new(g.clone(), vals).unwrap();
            let lo1 = level_oscillation(&f, l, 1, 1.0, Boundary::Periodic).unwrap();
            let lo2 = level_oscillation(&f, l, 1, 2.0, Boundary::Periodic).unwrap();
            let loi = level_oscillation(&f, l, 1, f64::INFINITY, Boundary::Periodic).unwrap();
            for i in 0..lo1.osc.len() {
                prop_assert!(lo1.osc[i] <= lo1.omega[i] + 1e-15);
                prop_assert!(loi.osc[i] <= loi.omega[i] + 1e-15);
                prop_assert!(lo1.omega[i] <= lo2.omega[i] + 1e-12);
                prop_assert!(lo2.omega[i] <= loi.omega[i] + 1e-12);
            }
        }

        #[test]
        fn differences_annihilate_integer_polynomials(a in -5i64..5, b in -5i64..5, c in -5i64..5) {
            let g = grid(9, 1);
            let f = GridFunction::from_fn(g.clone(), |x| {
                let t = x[0] * 512.0;
                (a as f64) + (b as f64) * t + (c as f64) * t * t
            }).unwrap();
            for v in probe_steps(&g, 2, 2) {
                let d = difference(&f, &v, 2, Boundary::Interior);
                prop_assert!(d.into_iter().flatten().all(|x| x == 0.0));
            }
        }
    }
}
