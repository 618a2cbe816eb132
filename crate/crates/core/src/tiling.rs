//! Self-affine lattice tilings generated by an expanding integer matrix and a
//! complete residue system of digits.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intmat::IntMatrix;

const EXPANDING_EPS: f64 = 1e-12;

/// Number of digit strings used for cached tile geometry.
const GEOMETRY_POINTS: u128 = 1 << 16;

#[derive(Debug, Clone)]
pub struct DilationMatrix {
    mat: IntMatrix,
    adj: IntMatrix,
    det: i64,
    lambda0: f64,
    inv: DMatrix<f64>,
}

impl DilationMatrix {
    pub fn new(rows: &[Vec<i64>]) -> Result<Self> {
        let mat = IntMatrix::from_rows(rows)?;
        let det = mat.det();
        if det == 0 {
            return Err(Error::NotExpanding(0.0));
        }
        let eig = mat.to_f64().complex_eigenvalues();
        let lambda0 = eig.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        if lambda0 <= 1.0 + EXPANDING_EPS {
            return Err(Error::NotExpanding(lambda0));
        }
        let adj = mat.adjugate();
        let inv = mat.inverse_f64();
        Ok(Self { mat, adj, det, lambda0, inv })
    }

    pub fn n(&self) -> usize {
        self.mat.dim()
    }

    /// `|det M|`, the number of digits.
    pub fn m(&self) -> usize {
        self.det.unsigned_abs() as usize
    }

    pub fn det(&self) -> i64 {
        self.det
    }

    /// Least eigenvalue modulus.
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.mat
    }

    pub fn adjugate(&self) -> &IntMatrix {
        &self.adj
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inv
    }

    /// `M^{-e}` in floating point.
    pub fn inverse_pow(&self, e: usize) -> DMatrix<f64> {
        let mut acc = DMatrix::identity(self.n(), self.n());
        for _ in 0..e {
            acc = &self.inv * acc;
        }
        acc
    }

    /// `M^e` in floating point.
    pub fn pow_f64(&self, e: usize) -> DMatrix<f64> {
        let m = self.mat.to_f64();
        let mut acc = DMatrix::identity(self.n(), self.n());
        for _ in 0..e {
            acc = &m * acc;
        }
        acc
    }

    /// Residue key of `v` modulo `M Z^n`.
    fn residue_key(&self, v: &[i64]) -> Vec<i64> {
        let d = self.det.abs();
        self.adj.mul_vec(v).into_iter().map(|x| x.rem_euclid(d)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitSet {
    digits: Vec<Vec<i64>>,
}

impl DigitSet {
    pub fn digits(&self) -> &[Vec<i64>] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn get(&self, i: usize) -> &[i64] {
        &self.digits[i]
    }
}

pub fn validate_digit_set(m: &DilationMatrix, digits: &[Vec<i64>]) -> Result<DigitSet> {
    if digits.len() != m.m() {
        return Err(Error::WrongCount { expected: m.m() as u64, got: digits.len() });
    }
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    for (j, g) in digits.iter().enumerate() {
        if g.len() != m.n() {
            return Err(Error::ShapeMismatch(format!(
                "digit {j} has dimension {}, expected {}",
                g.len(),
                m.n()
            )));
        }
        if let Some(&i) = seen.get(&m.residue_key(g)) {
            return Err(Error::DuplicateResidue(i, j));
        }
        seen.insert(m.residue_key(g), j);
    }
    Ok(DigitSet { digits: digits.to_vec() })
}

/// Key-value description of a tiling.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TilingConfig {
    pub matrix: Vec<Vec<i64>>,
    pub digits: Vec<Vec<i64>>,
    /// Radix depth of exported tile point clouds.
    pub depth: usize,
    /// Largest admissible point count for tile approximations.
    pub budget: u64,
    /// Interior probe `c` with `Q0 = T - c`; defaults to the tile centroid.
    pub probe: Option<Vec<f64>>,
}

impl Default for TilingConfig {
    fn default() -> Self {
        Self {
            matrix: vec![vec![2]],
            digits: vec![vec![0], vec![1]],
            depth: 12,
            budget: 1 << 22,
            probe: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TileGeometry {
    /// Inradius of `Q0` around the origin.
    pub inradius: f64,
    /// Circumradius of `Q0` around the origin.
    pub circumradius: f64,
    /// `circumradius / inradius`.
    pub ratio: f64,
    /// Upper bound on `diam T`.
    pub diameter: f64,
}

#[derive(Debug)]
pub struct TilingSpec {
    dilation: DilationMatrix,
    digits: DigitSet,
    residues: HashMap<Vec<i64>, usize>,
    anchor: Vec<f64>,
    probe: Vec<f64>,
    cube: Option<i64>,
    cube_index: Vec<usize>,
    budget: u64,
    depth: usize,
    geometry: OnceLock<TileGeometry>,
    locator: OnceLock<Result<TileLocator>>,
}

impl TilingSpec {
    pub fn new(matrix: &[Vec<i64>], digits: &[Vec<i64>]) -> Result<Self> {
        Self::from_config(&TilingConfig {
            matrix: matrix.to_vec(),
            digits: digits.to_vec(),
            ..TilingConfig::default()
        })
    }

    pub fn from_config(cfg: &TilingConfig) -> Result<Self> {
        let dilation = DilationMatrix::new(&cfg.matrix)?;
        let digits = validate_digit_set(&dilation, &cfg.digits)?;
        let n = dilation.n();
        let residues = digits
            .digits
            .iter()
            .enumerate()
            .map(|(i, g)| (dilation.residue_key(g), i))
            .collect();
        let id = DMatrix::<f64>::identity(n, n);
        let shifted = (dilation.matrix().to_f64() - id)
            .try_inverse()
            .ok_or_else(|| Error::BadMatrix("M - I is singular".into()))?;
        let g0 = nalgebra::DVector::from_iterator(n, digits.get(0).iter().map(|&v| v as f64));
        let anchor: Vec<f64> = (&shifted * g0).iter().copied().collect();
        let probe = match &cfg.probe {
            Some(p) if p.len() != n => {
                return Err(Error::ShapeMismatch(format!("probe has dimension {}, expected {n}", p.len())))
            }
            Some(p) => p.clone(),
            None => {
                let m = digits.len() as f64;
                let mean = nalgebra::DVector::from_iterator(
                    n,
                    (0..n).map(|k| digits.digits.iter().map(|g| g[k] as f64).sum::<f64>() / m),
                );
                (&shifted * mean).iter().copied().collect()
            }
        };
        let (cube, cube_index) = detect_cube(&dilation, &digits);
        if cfg.depth == 0 {
            return Err(Error::BadParameters("tile depth must be at least 1".into()));
        }
        Ok(Self {
            dilation,
            digits,
            residues,
            anchor,
            probe,
            cube,
            cube_index,
            budget: cfg.budget,
            depth: cfg.depth,
            geometry: OnceLock::new(),
            locator: OnceLock::new(),
        })
    }

    /// `M = [2]`, digits `{0, 1}`.
    pub fn dyadic() -> Self {
        Self::new(&[vec![2]], &[vec![0], vec![1]]).expect("dyadic tiling")
    }

    /// `M = a Id_n` with digits `{0..a-1}^n`.
    pub fn cube(n: usize, a: i64) -> Result<Self> {
        let rows: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| if i == j { a } else { 0 }).collect()).collect();
        let mut digits = vec![vec![]];
        for _ in 0..n {
            digits = digits
                .into_iter()
                .flat_map(|d: Vec<i64>| {
                    (0..a).map(move |v| {
                        let mut e = d.clone();
                        e.push(v);
                        e
                    })
                })
                .collect();
        }
        // first axis varies slowest in the digit order above; reverse so it varies fastest
        for d in digits.iter_mut() {
            d.reverse();
        }
        Self::new(&rows, &digits)
    }

    pub fn twin_dragon() -> Self {
        Self::new(&[vec![1, 1], vec![-1, 1]], &[vec![0, 0], vec![1, 0]]).expect("twin dragon tiling")
    }

    pub fn dilation(&self) -> &DilationMatrix {
        &self.dilation
    }

    pub fn digits(&self) -> &DigitSet {
        &self.digits
    }

    pub fn n(&self) -> usize {
        self.dilation.n()
    }

    pub fn m(&self) -> usize {
        self.dilation.m()
    }

    pub fn lambda0(&self) -> f64 {
        self.dilation.lambda0()
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Fixed point `(M - I)^{-1} gamma_1` of the first digit map; the
    /// representative point of every cell is its image.
    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn probe(&self) -> &[f64] {
        &self.probe
    }

    /// Side `a` when `M = a Id` and the digits are `{0..a-1}^n`.
    pub fn cube_side(&self) -> Option<i64> {
        self.cube
    }

    /// Index of the digit congruent to `v` modulo `M Z^n`.
    #[inline]
    pub fn residue_index(&self, v: &[i64]) -> usize {
        self.residues[&self.dilation.residue_key(v)]
    }

    /// Split `v = M v' + gamma_i`, returning `(i, v')`.
    pub fn split(&self, v: &[i64]) -> (usize, Vec<i64>) {
        let i = self.residue_index(v);
        let diff: Vec<i64> = v.iter().zip(self.digits.get(i)).map(|(a, b)| a - b).collect();
        let det = self.dilation.det();
        let q = self.dilation.adjugate().mul_vec(&diff).into_iter().map(|x| x / det).collect();
        (i, q)
    }

    /// `M^l tile + M^{l-1} gamma_{i_1} + ... + gamma_{i_l}`.
    pub fn translate(&self, tile: &[i64], digits: &[usize]) -> Vec<i64> {
        let mut v = tile.to_vec();
        let mut tmp = vec![0; v.len()];
        for &i in digits {
            self.dilation.matrix().mul_vec_into(&v, &mut tmp);
            for (a, (b, g)) in v.iter_mut().zip(tmp.iter().zip(self.digits.get(i))) {
                *a = b + g;
            }
        }
        v
    }

    /// Inverse of [`translate`](Self::translate) for strings of length `level`.
    pub fn expand(&self, nu: &[i64], level: usize) -> (Vec<i64>, Vec<usize>) {
        let mut digits = vec![0usize; level];
        let mut v = nu.to_vec();
        for j in (0..level).rev() {
            let (i, rest) = self.split(&v);
            digits[j] = i;
            v = rest;
        }
        (v, digits)
    }

    /// `M^{-level}(nu + anchor)`.
    pub fn point(&self, nu: &[i64], level: usize) -> Vec<f64> {
        let inv = self.dilation.inverse_pow(level);
        let v = nalgebra::DVector::from_iterator(
            self.n(),
            nu.iter().zip(&self.anchor).map(|(&a, &t)| a as f64 + t),
        );
        (inv * v).iter().copied().collect()
    }

    pub fn root(&self) -> CellAddress {
        CellAddress { level: 0, digits: vec![], tile: vec![0; self.n()] }
    }

    pub fn subdivide(&self, cell: &CellAddress) -> Vec<CellAddress> {
        (0..self.m())
            .map(|i| {
                let mut digits = cell.digits.clone();
                digits.push(i);
                CellAddress { level: cell.level + 1, digits, tile: cell.tile.clone() }
            })
            .collect()
    }

    pub fn cell_measure(&self, cell: &CellAddress) -> f64 {
        (self.m() as f64).powi(-(cell.level as i32))
    }

    /// All partial radix sums of length `depth`, in digit-string order.
    pub fn tile_points(&self, depth: usize) -> Result<TileApproximation> {
        if depth == 0 {
            return Err(Error::BadParameters("depth must be at least 1".into()));
        }
        let requested = (self.m() as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
        if requested > self.budget as u128 {
            return Err(Error::BudgetExceeded { requested, budget: self.budget });
        }
        let ints = self.digit_strings(depth);
        let n = self.n();
        let inv = self.dilation.inverse_pow(depth);
        let count = ints.len() / n;
        let mut points = Vec::with_capacity(ints.len());
        for p in ints.chunks(n) {
            for i in 0..n {
                points.push((0..n).map(|j| inv[(i, j)] * p[j] as f64).sum::<f64>());
            }
        }
        let cloud = Cloud::new(self, depth, &ints);
        let (inradius, circumradius) = cloud.radii(self, &self.probe);
        let measure = raster_measure(n, &points, (self.m() as f64).powf(-(depth as f64) / n as f64));
        Ok(TileApproximation {
            depth,
            count,
            n,
            points,
            inradius,
            circumradius,
            ratio: circumradius / inradius,
            measure,
        })
    }

    /// Integer digit strings `M^{d-1} g_1 + ... + g_d` of length `depth`,
    /// flattened, in lexicographic order of the digit indices.
    pub fn digit_strings(&self, depth: usize) -> Vec<i64> {
        let n = self.n();
        let mut cur = vec![0i64; n];
        let mut tmp = vec![0i64; n];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(cur.len() * self.m());
            for v in cur.chunks(n) {
                self.dilation.matrix().mul_vec_into(v, &mut tmp);
                for g in self.digits.digits() {
                    next.extend(tmp.iter().zip(g).map(|(a, b)| a + b));
                }
            }
            cur = next;
        }
        cur
    }

    /// Inradius and circumradius of `Q0 = T - c`, exact for cube systems.
    pub fn geometry(&self) -> TileGeometry {
        *self.geometry.get_or_init(|| {
            let n = self.n();
            if self.cube.is_some() {
                let c = &self.probe;
                let inradius = c.iter().map(|&x| x.min(1.0 - x)).fold(f64::INFINITY, f64::min).max(0.0);
                let circumradius = c.iter().map(|&x| x.max(1.0 - x).powi(2)).sum::<f64>().sqrt();
                return TileGeometry {
                    inradius,
                    circumradius,
                    ratio: circumradius / inradius,
                    diameter: (n as f64).sqrt(),
                };
            }
            let depth = self.geometry_depth();
            let ints = self.digit_strings(depth);
            let cloud = Cloud::new(self, depth, &ints);
            let (inradius, circumradius) = cloud.radii(self, &self.probe);
            TileGeometry { inradius, circumradius, ratio: circumradius / inradius, diameter: cloud.diameter }
        })
    }

    fn geometry_depth(&self) -> usize {
        let mut d = 1;
        while (self.m() as u128).pow(d as u32 + 1) <= GEOMETRY_POINTS.min(self.budget as u128) {
            d += 1;
        }
        d
    }

    /// Level-`l` cell containing `x`; boundary points take the smallest digit string.
    pub fn locate(&self, x: &[f64], l: usize) -> Result<CellAddress> {
        if x.len() != self.n() {
            return Err(Error::ShapeMismatch(format!("point has dimension {}, expected {}", x.len(), self.n())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotLocated { level: l, reason: "non-finite coordinate".into() });
        }
        match self.cube {
            Some(a) => self.locate_cube(a, x, l),
            None => {
                let loc = self.locator.get_or_init(|| TileLocator::new(self, self.geometry_depth()));
                match loc {
                    Ok(loc) => loc.locate(self, x, l),
                    Err(e) => Err(Error::NotLocated { level: l, reason: e.to_string() }),
                }
            }
        }
    }

    fn locate_cube(&self, a: i64, x: &[f64], l: usize) -> Result<CellAddress> {
        let scale = (a as i128)
            .checked_pow(l as u32)
            .ok_or_else(|| Error::NotLocated { level: l, reason: "level too deep for exact arithmetic".into() })?;
        let mut axes: Vec<Vec<i128>> = Vec::with_capacity(x.len());
        for &xi in x {
            let (k, boundary) = scaled_floor(xi, scale)
                .ok_or_else(|| Error::NotLocated { level: l, reason: "coordinate out of exact range".into() })?;
            axes.push(if boundary { vec![k - 1, k] } else { vec![k] });
        }
        let mut best: Option<(Vec<usize>, Vec<i64>)> = None;
        let total: usize = axes.iter().map(|c| c.len()).product();
        for combo in 0..total {
            let mut rem = combo;
            let mut tile = Vec::with_capacity(x.len());
            let mut local = Vec::with_capacity(x.len());
            for cands in &axes {
                let k = cands[rem % cands.len()];
                rem /= cands.len();
                tile.push(k.div_euclid(scale) as i64);
                local.push(k.rem_euclid(scale));
            }
            let mut digits = vec![0usize; l];
            for j in (0..l).rev() {
                let mut key = 0usize;
                for (axis, v) in local.iter_mut().enumerate() {
                    key += (v.rem_euclid(a as i128) as usize) * (a as usize).pow(axis as u32);
                    *v = v.div_euclid(a as i128);
                }
                digits[j] = self.cube_index[key];
            }
            let cand = (digits, tile);
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
        let (digits, tile) = best.expect("at least one candidate");
        Ok(CellAddress { level: l, digits, tile })
    }

    /// Distance from `x` to the boundary of its level-`l` cell.
    pub fn boundary_distance(&self, x: &[f64], cell: &CellAddress) -> Result<f64> {
        match self.cube {
            Some(a) => {
                let h = (a as f64).powi(-(cell.level as i32));
                let nu = self.translate(&cell.tile, &cell.digits);
                Ok(x.iter()
                    .zip(&nu)
                    .map(|(&xi, &v)| {
                        let lo = v as f64 * h;
                        (xi - lo).min(lo + h - xi)
                    })
                    .fold(f64::INFINITY, f64::min)
                    .max(0.0))
            }
            None => {
                let loc = self.locator.get_or_init(|| TileLocator::new(self, self.geometry_depth()));
                match loc {
                    Ok(loc) => Ok(loc.boundary_distance(self, x, cell)),
                    Err(e) => Err(Error::NotLocated { level: cell.level, reason: e.to_string() }),
                }
            }
        }
    }
}

fn detect_cube(m: &DilationMatrix, digits: &DigitSet) -> (Option<i64>, Vec<usize>) {
    let mat = m.matrix();
    let n = mat.dim();
    let a = mat.get(0, 0);
    if a < 2 || !mat.is_diagonal() || (0..n).any(|i| mat.get(i, i) != a) {
        return (None, vec![]);
    }
    let mut index = vec![usize::MAX; digits.len()];
    for (i, g) in digits.digits().iter().enumerate() {
        if g.iter().any(|&v| v < 0 || v >= a) {
            return (None, vec![]);
        }
        let key: usize = g.iter().enumerate().map(|(k, &v)| v as usize * (a as usize).pow(k as u32)).sum();
        index[key] = i;
    }
    (Some(a), index)
}

/// `floor(x * scale)` exactly, plus whether `x * scale` is an integer.
fn scaled_floor(x: f64, scale: i128) -> Option<(i128, bool)> {
    if x == 0.0 {
        return Some((0, true));
    }
    let bits = x.to_bits();
    let sign: i128 = if bits >> 63 == 0 { 1 } else { -1 };
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i128;
    let (mut mant, mut exp) = if exp_bits == 0 { (frac, -1074) } else { (frac | (1 << 52), exp_bits - 1075) };
    while mant & 1 == 0 {
        mant >>= 1;
        exp += 1;
    }
    let num = sign * mant.checked_mul(scale)?;
    if exp >= 0 {
        if exp > 60 {
            return None;
        }
        return Some((num.checked_mul(1i128 << exp)?, true));
    }
    let sh = -exp;
    if sh > 126 {
        // far below the grid: never an integer unless the scale cancels it, which cannot fit
        let v = (x * scale as f64).floor();
        return Some((v as i128, false));
    }
    let den = 1i128 << sh;
    Some((num.div_euclid(den), num.rem_euclid(den) == 0))
}

fn raster_measure(n: usize, points: &[f64], h: f64) -> f64 {
    let mut cells: HashSet<Vec<i64>> = HashSet::with_capacity(points.len() / n);
    for p in points.chunks(n) {
        cells.insert(p.iter().map(|&v| (v / h + 1e-9).floor() as i64).collect());
    }
    cells.len() as f64 * h.powi(n as i32)
}

#[derive(Debug, Clone)]
pub struct TileApproximation {
    pub depth: usize,
    pub count: usize,
    pub n: usize,
    /// Flattened partial sums, `n` coordinates per point.
    pub points: Vec<f64>,
    pub inradius: f64,
    pub circumradius: f64,
    pub ratio: f64,
    /// Raster measure of the cloud on a grid with `m^{-depth}` cells.
    pub measure: f64,
}

impl TileApproximation {
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.n..(i + 1) * self.n]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let header: Vec<String> = (0..self.n).map(|k| format!("x{k}")).collect();
        w.write_record(&header)?;
        for p in self.points.chunks(self.n) {
            w.write_record(p.iter().map(|v| format!("{v:.17e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Level-`depth` digit strings and helpers for nearest-point queries against
/// their representative points.
#[derive(Debug)]
struct Cloud {
    depth: usize,
    members: HashSet<Vec<i64>>,
    lo: Vec<i64>,
    hi: Vec<i64>,
    inv: DMatrix<f64>,
    fwd: DMatrix<f64>,
    /// Diameter bound for a level-`depth` cell.
    delta: f64,
    diameter: f64,
    /// Integer search radius covering a `delta` ball in digit coordinates.
    reach: i64,
}

impl Cloud {
    fn new(spec: &TilingSpec, depth: usize, ints: &[i64]) -> Self {
        let n = spec.n();
        let mut lo = vec![i64::MAX; n];
        let mut hi = vec![i64::MIN; n];
        let mut members = HashSet::with_capacity(ints.len() / n);
        for p in ints.chunks(n) {
            for k in 0..n {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
            members.insert(p.to_vec());
        }
        let inv = spec.dilation().inverse_pow(depth);
        let fwd = spec.dilation().pow_f64(depth);
        let inv_norm = inv.clone().svd(false, false).singular_values.max();
        let fwd_norm = fwd.clone().svd(false, false).singular_values.max();
        let bbox = inv_norm * (0..n).map(|k| ((hi[k] - lo[k]) as f64).powi(2)).sum::<f64>().sqrt();
        let diameter = if inv_norm < 1.0 { bbox / (1.0 - inv_norm) } else { bbox };
        let delta = inv_norm * diameter;
        let reach = (fwd_norm * delta).ceil() as i64 + 1;
        Self { depth, members, lo, hi, inv, fwd, delta, diameter, reach }
    }

    fn rep(&self, spec: &TilingSpec, eta: &[i64]) -> Vec<f64> {
        let n = eta.len();
        let v: Vec<f64> = eta.iter().zip(spec.anchor()).map(|(&a, &t)| a as f64 + t).collect();
        (0..n).map(|i| (0..n).map(|j| self.inv[(i, j)] * v[j]).sum()).collect()
    }

    fn radii(&self, spec: &TilingSpec, c: &[f64]) -> (f64, f64) {
        let mut outside = f64::INFINITY;
        let mut inside: f64 = 0.0;
        let lo: Vec<i64> = self.lo.iter().map(|v| v - self.reach).collect();
        let hi: Vec<i64> = self.hi.iter().map(|v| v + self.reach).collect();
        for_each_in_box(&lo, &hi, |eta| {
            let r = self.rep(spec, eta);
            let d = dist(&r, c);
            if self.members.contains(eta) {
                inside = inside.max(d);
            } else {
                outside = outside.min(d);
            }
        });
        ((outside - self.delta).max(0.0), inside + self.delta)
    }

    /// `Some(true)` inside the tile, `Some(false)` outside, `None` if undecided.
    fn classify(&self, spec: &TilingSpec, z: &[f64]) -> Option<bool> {
        let n = z.len();
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| self.fwd[(i, j)] * z[j]).sum::<f64>()).collect();
        let lo: Vec<i64> = w.iter().zip(spec.anchor()).map(|(v, t)| (v - t).floor() as i64 - self.reach).collect();
        let hi: Vec<i64> = w.iter().zip(spec.anchor()).map(|(v, t)| (v - t).ceil() as i64 + self.reach).collect();
        let mut near_in = false;
        let mut near_out = false;
        for_each_in_box(&lo, &hi, |eta| {
            if dist(&self.rep(spec, eta), z) <= self.delta {
                if self.members.contains(eta) {
                    near_in = true;
                } else {
                    near_out = true;
                }
            }
        });
        match (near_in, near_out) {
            (true, false) => Some(true),
            (false, _) => Some(false),
            (true, true) => None,
        }
    }

    fn distance_outside(&self, spec: &TilingSpec, z: &[f64], radius: i64) -> f64 {
        let n = z.len();
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| self.fwd[(i, j)] * z[j]).sum::<f64>()).collect();
        let lo: Vec<i64> = w.iter().map(|v| v.floor() as i64 - radius).collect();
        let hi: Vec<i64> = w.iter().map(|v| v.ceil() as i64 + radius).collect();
        let mut best = f64::INFINITY;
        for_each_in_box(&lo, &hi, |eta| {
            if !self.members.contains(eta) {
                best = best.min(dist(&self.rep(spec, eta), z));
            }
        });
        best
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn for_each_in_box(lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64])) {
    let n = lo.len();
    let mut cur = lo.to_vec();
    loop {
        f(&cur);
        let mut k = 0;
        loop {
            if k == n {
                return;
            }
            if cur[k] < hi[k] {
                cur[k] += 1;
                break;
            }
            cur[k] = lo[k];
            k += 1;
        }
    }
}

/// Membership oracle for general tiles based on a fixed-depth point cloud.
#[derive(Debug)]
pub struct TileLocator {
    cloud: Cloud,
    circumradius: f64,
    center: Vec<f64>,
}

impl TileLocator {
    pub fn new(spec: &TilingSpec, depth: usize) -> Result<Self> {
        let requested = (spec.m() as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
        if requested > spec.budget() as u128 {
            return Err(Error::BudgetExceeded { requested, budget: spec.budget() });
        }
        let ints = spec.digit_strings(depth);
        let cloud = Cloud::new(spec, depth, &ints);
        let (_, circumradius) = cloud.radii(spec, spec.probe());
        Ok(Self { cloud, circumradius, center: spec.probe().to_vec() })
    }

    pub fn depth(&self) -> usize {
        self.cloud.depth
    }

    /// Tile membership, `None` when the cloud cannot decide.
    pub fn contains(&self, spec: &TilingSpec, z: &[f64]) -> Option<bool> {
        self.cloud.classify(spec, z)
    }

    pub fn locate(&self, spec: &TilingSpec, x: &[f64], l: usize) -> Result<CellAddress> {
        let n = spec.n();
        let y: Vec<f64> = {
            let f = spec.dilation().pow_f64(l);
            (0..n).map(|i| (0..n).map(|j| f[(i, j)] * x[j]).sum()).collect()
        };
        let r = self.circumradius.ceil() as i64 + 1;
        let lo: Vec<i64> = y.iter().zip(&self.center).map(|(v, c)| (v - c).floor() as i64 - r).collect();
        let hi: Vec<i64> = y.iter().zip(&self.center).map(|(v, c)| (v - c).ceil() as i64 + r).collect();
        let mut found: Vec<Vec<i64>> = Vec::new();
        let mut undecided = false;
        for_each_in_box(&lo, &hi, |nu| {
            let z: Vec<f64> = y.iter().zip(nu).map(|(a, &b)| a - b as f64).collect();
            if dist(&z, &self.center) > self.circumradius {
                return;
            }
            match self.cloud.classify(spec, &z) {
                Some(true) => found.push(nu.to_vec()),
                Some(false) => {}
                None => undecided = true,
            }
        });
        if undecided || found.len() != 1 {
            return Err(Error::NotLocated {
                level: l,
                reason: format!(
                    "membership inconclusive at depth {} ({} candidates)",
                    self.cloud.depth,
                    found.len()
                ),
            });
        }
        let (tile, digits) = spec.expand(&found[0], l);
        Ok(CellAddress { level: l, digits, tile })
    }

    pub fn boundary_distance(&self, spec: &TilingSpec, x: &[f64], cell: &CellAddress) -> f64 {
        let n = spec.n();
        let nu = spec.translate(&cell.tile, &cell.digits);
        let f = spec.dilation().pow_f64(cell.level);
        let z: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| f[(i, j)] * x[j]).sum::<f64>() - nu[i] as f64)
            .collect();
        let radius = self.cloud.reach + (self.cloud.fwd.norm() * self.circumradius).ceil() as i64;
        let d = (self.cloud.distance_outside(spec, &z, radius) - self.cloud.delta).max(0.0);
        // back to x coordinates through the smallest contraction of M^{-l}
        let inv = spec.dilation().inverse_pow(cell.level);
        let smin = inv.svd(false, false).singular_values.min();
        d * smin
    }
}

/// Address of the cell `M^{-l}(T + M^l tile + nu_Q)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CellAddress {
    pub level: usize,
    pub digits: Vec<usize>,
    pub tile: Vec<i64>,
}

impl CellAddress {
    pub fn translate(&self, spec: &TilingSpec) -> Vec<i64> {
        spec.translate(&self.tile, &self.digits)
    }

    /// Lower-left corner for cube systems, representative point in general.
    pub fn origin(&self, spec: &TilingSpec) -> Vec<f64> {
        let nu = self.translate(spec);
        let inv = spec.dilation().inverse_pow(self.level);
        let n = nu.len();
        (0..n).map(|i| (0..n).map(|j| inv[(i, j)] * nu[j] as f64).sum()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn digit_set_validation() {
        let m = DilationMatrix::new(&[vec![2]]).unwrap();
        assert_eq!(validate_digit_set(&m, &[vec![0], vec![1]]).unwrap().len(), 2);
        assert!(matches!(validate_digit_set(&m, &[vec![0], vec![2]]), Err(Error::DuplicateResidue(0, 1))));
        assert!(matches!(validate_digit_set(&m, &[vec![0]]), Err(Error::WrongCount { expected: 2, got: 1 })));
        let td = DilationMatrix::new(&[vec![1, 1], vec![-1, 1]]).unwrap();
        assert_eq!(td.m(), 2);
        assert!((td.lambda0() - 2f64.sqrt()).abs() < 1e-12);
        assert!(validate_digit_set(&td, &[vec![0, 0], vec![1, 0]]).is_ok());
        assert!(matches!(DilationMatrix::new(&[vec![1, 0], vec![0, 2]]), Err(Error::NotExpanding(_))));
    }

    #[test]
    fn tile_points_counts_and_measure() {
        let t = TilingSpec::dyadic();
        let a = t.tile_points(8).unwrap();
        assert_eq!(a.count, 256);
        assert!((a.measure - 1.0).abs() < 1e-12);
        for i in 0..256 {
            assert!((a.point(i)[0] - i as f64 / 256.0).abs() < 1e-15);
        }
        let t3 = TilingSpec::new(&[vec![3]], &[vec![0], vec![1], vec![2]]).unwrap();
        let b = t3.tile_points(5).unwrap();
        assert_eq!(b.count, 243);
        assert!(b.points.iter().all(|&x| (0.0..1.0).contains(&x)));
        let td = TilingSpec::twin_dragon();
        let c = td.tile_points(16).unwrap();
        assert_eq!(c.count, 65536);
        assert!((c.measure - 1.0).abs() < 0.05);
        assert!(c.inradius > 0.0);
    }

    #[test]
    fn budget_is_enforced() {
        let cfg = TilingConfig { budget: 100, ..TilingConfig::default() };
        let t = TilingSpec::from_config(&cfg).unwrap();
        assert!(matches!(t.tile_points(7), Err(Error::BudgetExceeded { requested: 128, budget: 100 })));
    }

    #[test]
    fn subdivision_translates() {
        let t = TilingSpec::dyadic();
        let kids = t.subdivide(&t.root());
        assert_eq!(kids.len(), 2);
        assert_eq!(kids[1].origin(&t), vec![0.5]);
        let c = CellAddress { level: 1, digits: vec![1], tile: vec![0] };
        let tr: Vec<Vec<i64>> = t.subdivide(&c).iter().map(|k| k.translate(&t)).collect();
        assert_eq!(tr, vec![vec![2], vec![3]]);
        let td = TilingSpec::twin_dragon();
        let tr: Vec<Vec<i64>> = td.subdivide(&td.root()).iter().map(|k| k.translate(&td)).collect();
        assert_eq!(tr, vec![vec![0, 0], vec![1, 0]]);
    }

    #[test]
    fn cell_measures() {
        let t = TilingSpec::dyadic();
        assert_eq!(t.cell_measure(&t.root()), 1.0);
        let c = CellAddress { level: 3, digits: vec![0, 1, 1], tile: vec![0] };
        assert_eq!(t.cell_measure(&c), 0.125);
        let td = TilingSpec::twin_dragon();
        let c = CellAddress { level: 4, digits: vec![0; 4], tile: vec![0, 0] };
        assert_eq!(td.cell_measure(&c), 1.0 / 16.0);
    }

    #[test]
    fn locate_examples() {
        let t = TilingSpec::dyadic();
        assert_eq!(t.locate(&[0.3], 2).unwrap().digits, vec![0, 1]);
        assert_eq!(t.locate(&[0.5], 1).unwrap().digits, vec![0]);
        let t3 = TilingSpec::new(&[vec![3]], &[vec![0], vec![1], vec![2]]).unwrap();
        let c = t3.locate(&[7.0 / 9.0], 2).unwrap();
        assert_eq!(c.digits, vec![2, 1]);
        assert!((c.origin(&t3)[0] - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn geometry_of_unit_interval() {
        let g = TilingSpec::dyadic().geometry();
        assert_eq!(g.inradius, 0.5);
        assert_eq!(g.circumradius, 0.5);
        let td = TilingSpec::twin_dragon();
        assert_eq!(td.probe(), &[0.0, 0.5]);
        let g = td.geometry();
        assert!(g.inradius > 0.05 && g.inradius < g.circumradius);
    }

    #[test]
    fn twin_dragon_locate_interior_points() {
        let td = TilingSpec::twin_dragon();
        let c = td.locate(td.probe(), 0).unwrap();
        assert_eq!(c.tile, vec![0, 0]);
        // the image of the probe under a cell map lies deep inside that cell
        for digits in [vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 1]] {
            let nu = td.translate(&[0, 0], &digits);
            let v: Vec<f64> = nu.iter().zip(td.probe()).map(|(&a, &p)| a as f64 + p).collect();
            let inv = td.dilation().inverse_pow(3);
            let x = [inv[(0, 0)] * v[0] + inv[(0, 1)] * v[1], inv[(1, 0)] * v[0] + inv[(1, 1)] * v[1]];
            let cell = td.locate(&x, 3).unwrap();
            assert_eq!(cell.digits, digits);
            assert!(td.boundary_distance(&x, &cell).unwrap() > 0.0);
        }
    }

    #[test]
    fn cube_hausdorff_bound() {
        let t = TilingSpec::cube(2, 2).unwrap();
        let a = t.tile_points(5).unwrap();
        let bound = 2f64.sqrt() * 2f64.powi(-5) + 1e-12;
        // every cube point is within the bound of the cloud
        for corner in [[0.0, 0.0], [1.0, 1.0], [0.5, 0.999]] {
            let d = (0..a.count).map(|i| dist(a.point(i), &corner)).fold(f64::INFINITY, f64::min);
            assert!(d <= bound);
        }
    }

    proptest! {
        #[test]
        fn locate_then_subdivide_partitions(x in 0.0f64..1.0, l in 0usize..12) {
            let t = TilingSpec::dyadic();
            let cell = t.locate(&[x], l).unwrap();
            let hits = t.subdivide(&cell).iter().filter(|k| {
                let lo = k.origin(&t)[0];
                let h = 0.5f64.powi(k.level as i32);
                lo <= x && x < lo + h
            }).count();
            prop_assert_eq!(hits, 1);
            let child_sum: f64 = t.subdivide(&cell).iter().map(|k| t.cell_measure(k)).sum();
            prop_assert_eq!(child_sum, t.cell_measure(&cell));
        }

        #[test]
        fn translate_round_trip(d in proptest::collection::vec(0usize..2, 0..10), tx in -3i64..3, ty in -3i64..3) {
            let td = TilingSpec::twin_dragon();
            let nu = td.translate(&[tx, ty], &d);
            let (tile, back) = td.expand(&nu, d.len());
            prop_assert_eq!(tile, vec![tx, ty]);
            prop_assert_eq!(back, d);
        }

        #[test]
        fn radix_nesting(depth in 1usize..6) {
            let t = TilingSpec::new(&[vec![3]], &[vec![0], vec![1], vec![2]]).unwrap();
            let a = t.tile_points(depth).unwrap();
            let b = t.tile_points(depth + 1).unwrap();
            // appending digit 0 maps level-depth sums onto level-(depth+1) sums
            for i in 0..a.count {
                prop_assert!((a.point(i)[0] - b.point(3 * i)[0]).abs() < 1e-14);
            }
        }
    }
}
