//! Level-`L` refinement grids over a periodized window of base tiles.
//!
//! Samples are stored in digit order: index `s = tile * m^L + sum_j i_j m^{L-j}`,
//! so every level-`l` cell occupies a contiguous block of `m^{L-l}` samples.

use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::intmat::{IntMatrix, LatticeReducer};
use crate::tiling::{CellAddress, TilingSpec};

#[derive(Debug)]
pub struct GridSpace {
    spec: Arc<TilingSpec>,
    level: usize,
    window: Vec<i64>,
    tiles: usize,
    coords: Vec<i64>,
    points: Vec<f64>,
    reducer: LatticeReducer,
    table: Vec<u32>,
}

impl GridSpace {
    pub fn new(spec: Arc<TilingSpec>, level: usize, window: &[i64]) -> Result<Self> {
        let n = spec.n();
        if window.len() != n || window.iter().any(|&w| w < 1) {
            return Err(Error::ShapeMismatch(format!("window {window:?} must have {n} positive extents")));
        }
        let tiles: usize = window.iter().map(|&w| w as usize).product();
        let requested = (spec.m() as u128).checked_pow(level as u32).unwrap_or(u128::MAX) * tiles as u128;
        let cap = (spec.budget() as u128).min(u32::MAX as u128);
        if requested > cap {
            return Err(Error::BudgetExceeded { requested, budget: cap as u64 });
        }
        let mut coords = Vec::with_capacity(requested as usize * n);
        for t in 0..tiles {
            coords.extend(tile_coords(window, t));
        }
        let mat = spec.dilation().matrix();
        let mut tmp = vec![0i64; n];
        for _ in 0..level {
            let mut next = Vec::with_capacity(coords.len() * spec.m());
            for v in coords.chunks(n) {
                mat.mul_vec_into(v, &mut tmp);
                for g in spec.digits().digits() {
                    next.extend(tmp.iter().zip(g).map(|(a, b)| a + b));
                }
            }
            coords = next;
        }
        let inv = spec.dilation().inverse_pow(level);
        let anchor = spec.anchor().to_vec();
        let mut points = Vec::with_capacity(coords.len());
        for v in coords.chunks(n) {
            for i in 0..n {
                points.push((0..n).map(|j| inv[(i, j)] * (v[j] as f64 + anchor[j])).sum::<f64>());
            }
        }
        let period = mat.pow(level).mul(&IntMatrix::diagonal(window));
        let reducer = LatticeReducer::new(&period);
        debug_assert_eq!(reducer.count(), coords.len() / n);
        let mut table = vec![u32::MAX; reducer.count()];
        let mut v = vec![0i64; n];
        for (s, c) in coords.chunks(n).enumerate() {
            v.copy_from_slice(c);
            reducer.reduce(&mut v);
            table[reducer.linear(&v)] = s as u32;
        }
        Ok(Self { spec, level, window: window.to_vec(), tiles, coords, points, reducer, table })
    }

    pub fn spec(&self) -> &Arc<TilingSpec> {
        &self.spec
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn window(&self) -> &[i64] {
        &self.window
    }

    pub fn tiles(&self) -> usize {
        self.tiles
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn m(&self) -> usize {
        self.spec.m()
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.n()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Quadrature weight of one sample, `m^{-L}`.
    pub fn weight(&self) -> f64 {
        (self.m() as f64).powi(-(self.level as i32))
    }

    /// Integer coordinate `nu` of sample `s`; its point is `M^{-L}(nu + anchor)`.
    #[inline]
    pub fn nu(&self, s: usize) -> &[i64] {
        let n = self.n();
        &self.coords[s * n..(s + 1) * n]
    }

    #[inline]
    pub fn point(&self, s: usize) -> &[f64] {
        let n = self.n();
        &self.points[s * n..(s + 1) * n]
    }

    /// Sample index of the grid point `nu`, periodized.
    #[inline]
    pub fn index_of(&self, nu: &[i64]) -> usize {
        let mut v = nu.to_vec();
        self.reducer.reduce(&mut v);
        self.table[self.reducer.linear(&v)] as usize
    }

    /// Sample index of `nu(s) + v`, using `buf` as scratch.
    #[inline]
    pub fn offset_index(&self, s: usize, v: &[i64], buf: &mut [i64]) -> usize {
        let n = self.n();
        for k in 0..n {
            buf[k] = self.coords[s * n + k] + v[k];
        }
        self.reducer.reduce(buf);
        self.table[self.reducer.linear(buf)] as usize
    }

    #[inline]
    pub fn shift(&self, s: usize, v: &[i64]) -> usize {
        let nu = self.nu(s);
        let w: Vec<i64> = nu.iter().zip(v).map(|(a, b)| a + b).collect();
        self.index_of(&w)
    }

    /// Index map `s -> shift(s, v)` over the whole grid.
    pub fn shift_map(&self, v: &[i64]) -> Vec<u32> {
        let n = self.n();
        let mut w = vec![0i64; n];
        (0..self.len())
            .map(|s| {
                for (k, x) in w.iter_mut().enumerate() {
                    *x = self.coords[s * n + k] + v[k];
                }
                self.reducer.reduce(&mut w);
                self.table[self.reducer.linear(&w)]
            })
            .collect()
    }

    /// Base tile (unreduced) containing the grid point `nu`.
    pub fn tile_of(&self, nu: &[i64]) -> Vec<i64> {
        self.spec.expand(nu, self.level).0
    }

    /// Whether `nu` lies in the window without periodic wrapping.
    pub fn in_window(&self, nu: &[i64]) -> bool {
        if let Some(a) = self.spec.cube_side() {
            let side = a.pow(self.level as u32);
            return nu.iter().zip(&self.window).all(|(&v, &w)| v >= 0 && v < side * w);
        }
        self.tile_of(nu).iter().zip(&self.window).all(|(&t, &w)| (0..w).contains(&t))
    }

    /// Nearest grid point to `x`.
    pub fn snap(&self, x: &[f64]) -> Result<usize> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::ShapeMismatch(format!("point has dimension {}, expected {n}", x.len())));
        }
        let f = self.spec.dilation().pow_f64(self.level);
        let nu: Vec<i64> = (0..n)
            .map(|i| ((0..n).map(|j| f[(i, j)] * x[j]).sum::<f64>() - self.spec.anchor()[i]).round() as i64)
            .collect();
        Ok(self.index_of(&nu))
    }

    /// Number of level-`l` cells in the window.
    pub fn cells(&self, l: usize) -> usize {
        self.m().pow(l as u32) * self.tiles
    }

    pub fn block_len(&self, l: usize) -> usize {
        self.m().pow((self.level - l) as u32)
    }

    pub fn block(&self, l: usize, c: usize) -> Range<usize> {
        let b = self.block_len(l);
        c * b..(c + 1) * b
    }

    pub fn cell_of(&self, s: usize, l: usize) -> usize {
        s / self.block_len(l)
    }

    pub fn cell_address(&self, l: usize, c: usize) -> CellAddress {
        let per_tile = self.m().pow(l as u32);
        let tile = tile_coords(&self.window, c / per_tile);
        let mut rem = c % per_tile;
        let mut digits = vec![0usize; l];
        for j in (0..l).rev() {
            digits[j] = rem % self.m();
            rem /= self.m();
        }
        CellAddress { level: l, digits, tile }
    }

    /// Position of `cell` inside the window, if it lies there.
    pub fn cell_index(&self, cell: &CellAddress) -> Option<usize> {
        if cell.tile.len() != self.n() || cell.level > self.level {
            return None;
        }
        let mut t = 0usize;
        let mut stride = 1usize;
        for (&x, &w) in cell.tile.iter().zip(&self.window) {
            if !(0..w).contains(&x) {
                return None;
            }
            t += x as usize * stride;
            stride *= w as usize;
        }
        let c = cell.digits.iter().fold(0usize, |c, &d| c * self.m() + d);
        Some(t * self.m().pow(cell.level as u32) + c)
    }

    /// Digit strings of length `r` as offsets, in block order.
    pub fn offsets(&self, r: usize) -> Vec<i64> {
        self.spec.digit_strings(r)
    }

    /// Offsets of the grid points of `Q_l(x)` relative to the snapped point `x`.
    pub fn centered_offsets(&self, l: usize) -> Vec<i64> {
        let n = self.n();
        let r = self.level - l;
        let f = self.spec.dilation().pow_f64(r);
        let c = self.spec.probe();
        let t = self.spec.anchor();
        let dc: Vec<i64> =
            (0..n).map(|i| ((0..n).map(|j| f[(i, j)] * c[j]).sum::<f64>() - t[i]).round() as i64).collect();
        let mut d = self.offsets(r);
        for v in d.chunks_mut(n) {
            for (a, b) in v.iter_mut().zip(&dc) {
                *a -= b;
            }
        }
        d
    }

    /// Discrete `L^p` norm over the window, `p = inf` as a maximum.
    pub fn lp_norm(&self, values: &[f64], p: f64) -> f64 {
        lp_norm_weighted(values, p, self.weight())
    }
}

/// `(w * sum |v|^p)^{1/p}`, or `max |v|` for infinite `p`.
pub fn lp_norm_weighted(values: &[f64], p: f64, w: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    } else if p == 1.0 {
        w * values.iter().map(|v| v.abs()).sum::<f64>()
    } else if p == 2.0 {
        (w * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    } else {
        (w * values.iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
    }
}

/// Normalized `L^p` mean `(mean |v|^p)^{1/p}`.
pub fn lp_mean(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    lp_norm_weighted(values, p, 1.0 / values.len() as f64)
}

fn tile_coords(window: &[i64], mut t: usize) -> Vec<i64> {
    window
        .iter()
        .map(|&w| {
            let v = (t % w as usize) as i64;
            t /= w as usize;
            v
        })
        .collect()
}

/// Samples of a real function on a [`GridSpace`].
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<GridSpace>,
    samples: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<GridSpace>, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!("{} samples for a grid of {}", samples.len(), grid.len())));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(i));
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: Arc<GridSpace>) -> Self {
        let samples = vec![0.0; grid.len()];
        Self { grid, samples }
    }

    pub fn from_fn(grid: Arc<GridSpace>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let samples = (0..grid.len()).map(|s| f(grid.point(s))).collect();
        Self::new(grid, samples)
    }

    pub fn grid(&self) -> &Arc<GridSpace> {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn norm(&self, p: f64) -> f64 {
        self.grid.lp_norm(&self.samples, p)
    }

    /// Sample at the grid point nearest to `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.samples[self.grid.snap(x)?])
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid.clone(), samples: self.samples.iter().map(|v| c * v).collect() }
    }

    /// Pointwise `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && self.grid.len() != other.grid.len() {
            return Err(Error::ShapeMismatch("functions live on different grids".into()));
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { grid: self.grid.clone(), samples })
    }
}
