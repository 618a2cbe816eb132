//! Shift-invariant generator systems: stability, duals, refinement masks, projectors,
//! residue pyramids, Haar wavelets and the associated norm variants.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::besov::{NormParams, NormReport, VariantValue};
use crate::error::{Error, Result};
use crate::grid::{lp_norm_weighted, GridFunction, GridSpace};
use crate::localapprox::MonomialBasis;
use crate::tiling::TilingSpec;

pub const STABILITY_TOL: f64 = 1e-8;
pub const REFINE_TOL: f64 = 1e-6;
pub const STRANG_FIX_TOL: f64 = 1e-8;
const CG_TOL: f64 = 1e-14;
const CG_MAX_ITERS: usize = 5000;
const MASK_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone)]
enum Kind {
    Haar,
    Monomials { basis: MonomialBasis },
    BSpline { order: usize, a: i64 },
    Sampled { members: Vec<GridFunction>, order: usize },
}

/// A finite generator set `{phi_1, ..., phi_N}` tied to a tiling.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    spec: Arc<TilingSpec>,
    kind: Kind,
}

impl GeneratorSet {
    /// Indicator of the tile.
    pub fn haar(spec: Arc<TilingSpec>) -> Self {
        Self { spec, kind: Kind::Haar }
    }

    /// `x^alpha` on the tile for `|alpha| <= k`.
    pub fn monomials(spec: Arc<TilingSpec>, k: usize) -> Self {
        let basis = MonomialBasis::new(spec.n(), k);
        Self { spec, kind: Kind::Monomials { basis } }
    }

    /// Tensor cardinal B-spline of the given order, supported on `[0, order]^n`.
    pub fn bspline(spec: Arc<TilingSpec>, order: usize) -> Result<Self> {
        let a = spec
            .cube_side()
            .ok_or_else(|| Error::WrongGenerator("B-splines need a cube tiling with M = a Id".into()))?;
        if order == 0 {
            return Err(Error::WrongGenerator("B-spline order must be at least 1".into()));
        }
        Ok(Self { spec, kind: Kind::BSpline { order, a } })
    }

    /// Tile-supported generators given by samples on a one-tile grid of the same tiling.
    pub fn sampled(spec: Arc<TilingSpec>, members: Vec<GridFunction>, order: usize) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::WrongGenerator("no members".into()));
        }
        for g in &members {
            let gr = g.grid();
            if gr.tiles() != 1 || gr.m() != spec.m() || gr.n() != spec.n() {
                return Err(Error::WrongGenerator("members must be sampled on one tile of the same tiling".into()));
            }
        }
        Ok(Self { spec, kind: Kind::Sampled { members, order } })
    }

    pub fn spec(&self) -> &Arc<TilingSpec> {
        &self.spec
    }

    pub fn name(&self) -> String {
        match &self.kind {
            Kind::Haar => "haar".into(),
            Kind::Monomials { basis } => format!("monomials{}", basis.degree()),
            Kind::BSpline { order, .. } => format!("bspline{order}"),
            Kind::Sampled { members, .. } => format!("sampled{}", members.len()),
        }
    }

    pub fn is_haar(&self) -> bool {
        matches!(self.kind, Kind::Haar)
    }

    fn is_tile_local(&self) -> bool {
        !matches!(self.kind, Kind::BSpline { .. })
    }

    /// Number of members `N`.
    pub fn len(&self) -> usize {
        match &self.kind {
            Kind::Haar | Kind::BSpline { .. } => 1,
            Kind::Monomials { basis } => basis.len(),
            Kind::Sampled { members, .. } => members.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Approximation order: polynomials of degree below it are reproduced.
    pub fn order(&self) -> usize {
        match &self.kind {
            Kind::Haar => 1,
            Kind::Monomials { basis } => basis.degree() + 1,
            Kind::BSpline { order, .. } => *order,
            Kind::Sampled { order, .. } => *order,
        }
    }

    /// Levels kept between the finest projection level and the grid level.
    pub fn margin(&self) -> usize {
        match &self.kind {
            Kind::Haar | Kind::Sampled { .. } => 1,
            Kind::Monomials { basis } => {
                let m = self.spec.m();
                let mut r = 1;
                while m.pow(r as u32) < 2 * basis.len() {
                    r += 1;
                }
                r
            }
            Kind::BSpline { .. } => 3,
        }
    }

    pub fn support_radius(&self) -> f64 {
        match &self.kind {
            Kind::BSpline { order, .. } => *order as f64 * (self.spec.n() as f64).sqrt(),
            _ => {
                let g = self.spec.geometry();
                g.circumradius + self.spec.probe().iter().map(|v| v * v).sum::<f64>().sqrt()
            }
        }
    }

    fn check_grid(&self, grid: &GridSpace) -> Result<()> {
        if grid.m() != self.spec.m() || grid.n() != self.spec.n() || grid.spec().dilation().matrix() != self.spec.dilation().matrix()
        {
            return Err(Error::ShapeMismatch("grid and generators use different tilings".into()));
        }
        Ok(())
    }

    fn check_level(&self, grid: &GridSpace, l: usize) -> Result<()> {
        if l + self.margin() > grid.level() {
            return Err(Error::LevelTooFine { level: l, grid_level: grid.level() });
        }
        Ok(())
    }

    /// Values of every member at the points of one level-`l` block, `[offset * N + j]`.
    fn local_table(&self, grid: &GridSpace, l: usize) -> Vec<f64> {
        let r = grid.level() - l;
        let bl = grid.block_len(l);
        let nm = self.len();
        match &self.kind {
            Kind::Haar => vec![1.0; bl],
            Kind::Monomials { basis } => {
                let n = grid.n();
                let inv = self.spec.dilation().inverse_pow(r);
                let t1 = self.spec.anchor();
                let offs = grid.offsets(r);
                let mut out = vec![0.0; bl * nm];
                let mut y = vec![0.0; n];
                for (o, d) in offs.chunks(n).enumerate() {
                    for i in 0..n {
                        y[i] = (0..n).map(|j| inv[(i, j)] * (d[j] as f64 + t1[j])).sum();
                    }
                    basis.eval_into(&y, &mut out[o * nm..(o + 1) * nm]);
                }
                out
            }
            Kind::Sampled { members, .. } => {
                let m = grid.m();
                let mut out = vec![0.0; bl * nm];
                for (j, g) in members.iter().enumerate() {
                    let lg = g.grid().level();
                    for o in 0..bl {
                        let idx = if r >= lg { o / m.pow((r - lg) as u32) } else { o * m.pow((lg - r) as u32) };
                        out[o * nm + j] = g.samples()[idx];
                    }
                }
                out
            }
            Kind::BSpline { .. } => unreachable!("B-splines are not tile-local"),
        }
    }
}

/// Cardinal B-spline of order `k` on `[0, k]`.
pub fn cardinal_bspline(k: usize, t: f64) -> f64 {
    if !(0.0..k as f64).contains(&t) {
        return 0.0;
    }
    if k == 1 {
        return 1.0;
    }
    let km = (k - 1) as f64;
    (t * cardinal_bspline(k - 1, t) + (k as f64 - t) * cardinal_bspline(k - 1, t - 1.0)) / km
}

/// Synthesis operator `coefficients -> samples` of one level.
#[derive(Debug, Clone)]
enum Synthesis {
    /// Tile-local members: every block carries the same table.
    Local { nm: usize, block: usize, table: Vec<f64> },
    /// Fixed number of entries per sample.
    Ell { width: usize, cols: Vec<u32>, vals: Vec<f64> },
}

/// The space `V_l` on a grid.
#[derive(Debug, Clone)]
pub struct LevelSystem {
    level: usize,
    columns: usize,
    /// Quadrature weight times `m^l`.
    scale: f64,
    synthesis: Synthesis,
    /// Dense local Gram inverse for tile-local systems.
    local_inverse: Option<DMatrix<f64>>,
    diag: Vec<f64>,
    dims: Vec<usize>,
}

impl LevelSystem {
    pub fn new(gens: &GeneratorSet, grid: &GridSpace, l: usize) -> Result<Self> {
        gens.check_grid(grid)?;
        if l > grid.level() {
            return Err(Error::LevelTooFine { level: l, grid_level: grid.level() });
        }
        let scale = (grid.m() as f64).powi(l as i32) * grid.weight();
        if gens.is_tile_local() {
            let nm = gens.len();
            let block = grid.block_len(l);
            let table = gens.local_table(grid, l);
            let mut g = DMatrix::<f64>::zeros(nm, nm);
            for row in table.chunks(nm) {
                for i in 0..nm {
                    for j in 0..nm {
                        g[(i, j)] += scale * row[i] * row[j];
                    }
                }
            }
            let min_eig = SymmetricEigen::new(g.clone()).eigenvalues.min();
            if !(min_eig > STABILITY_TOL) {
                return Err(Error::Unstable(min_eig));
            }
            let inv = g.clone().try_inverse().ok_or(Error::Unstable(min_eig))?;
            let diag = (0..grid.cells(l) * nm).map(|c| g[(c % nm, c % nm)]).collect();
            Ok(Self {
                level: l,
                columns: grid.cells(l) * nm,
                scale,
                synthesis: Synthesis::Local { nm, block, table },
                local_inverse: Some(inv),
                diag,
                dims: vec![],
            })
        } else {
            let Kind::BSpline { order, a } = gens.kind else { unreachable!() };
            let n = grid.n();
            let big = a.pow((grid.level() - l) as u32);
            let dims: Vec<usize> = grid.window().iter().map(|&w| a.pow(l as u32) as usize * w as usize).collect();
            let width = order.pow(n as u32);
            let mut cols = Vec::with_capacity(grid.len() * width);
            let mut vals = Vec::with_capacity(grid.len() * width);
            let mut axis_vals = vec![vec![0.0; order]; n];
            let mut axis_cols = vec![vec![0usize; order]; n];
            for s in 0..grid.len() {
                let nu = grid.nu(s);
                for i in 0..n {
                    let t = nu[i] as f64 / big as f64;
                    let fl = nu[i].div_euclid(big);
                    for r in 0..order {
                        let mu = fl - r as i64;
                        axis_vals[i][r] = cardinal_bspline(order, t - mu as f64);
                        axis_cols[i][r] = mu.rem_euclid(dims[i] as i64) as usize;
                    }
                }
                for e in 0..width {
                    let mut rest = e;
                    let mut col = 0usize;
                    let mut stride = 1usize;
                    let mut v = 1.0;
                    for i in 0..n {
                        let r = rest % order;
                        rest /= order;
                        col += axis_cols[i][r] * stride;
                        stride *= dims[i];
                        v *= axis_vals[i][r];
                    }
                    cols.push(col as u32);
                    vals.push(v);
                }
            }
            let columns: usize = dims.iter().product();
            let mut diag = vec![0.0; columns];
            for (c, v) in cols.iter().zip(&vals) {
                diag[*c as usize] += scale * v * v;
            }
            if let Some(&d) = diag.iter().min_by(|a, b| a.total_cmp(b)) {
                if !(d > STABILITY_TOL) {
                    return Err(Error::Unstable(d));
                }
            }
            Ok(Self {
                level: l,
                columns,
                scale,
                synthesis: Synthesis::Ell { width, cols, vals },
                local_inverse: None,
                diag,
                dims,
            })
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn synthesize(&self, a: &[f64]) -> Vec<f64> {
        match &self.synthesis {
            Synthesis::Local { nm, block, table } => {
                let cells = a.len() / nm;
                let mut out = vec![0.0; cells * block];
                for c in 0..cells {
                    let coef = &a[c * nm..(c + 1) * nm];
                    for o in 0..*block {
                        let row = &table[o * nm..(o + 1) * nm];
                        out[c * block + o] = row.iter().zip(coef).map(|(x, y)| x * y).sum();
                    }
                }
                out
            }
            Synthesis::Ell { width, cols, vals } => cols
                .chunks(*width)
                .zip(vals.chunks(*width))
                .map(|(cs, vs)| cs.iter().zip(vs).map(|(&c, v)| v * a[c as usize]).sum())
                .collect(),
        }
    }

    /// `m^l <y, phi_j(M^l . - nu)>` for every column.
    pub fn analyze(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.columns];
        match &self.synthesis {
            Synthesis::Local { nm, block, table } => {
                for (s, &v) in y.iter().enumerate() {
                    let (c, o) = (s / block, s % block);
                    for j in 0..*nm {
                        out[c * nm + j] += self.scale * table[o * nm + j] * v;
                    }
                }
            }
            Synthesis::Ell { width, cols, vals } => {
                for (s, &v) in y.iter().enumerate() {
                    for e in s * width..(s + 1) * width {
                        out[cols[e] as usize] += self.scale * vals[e] * v;
                    }
                }
            }
        }
        out
    }

    /// Gram matrix applied to `a`.
    pub fn gram_apply(&self, a: &[f64]) -> Vec<f64> {
        self.analyze(&self.synthesize(a))
    }

    /// Coefficients `G^{-1} b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        if let (Some(inv), Synthesis::Local { nm, .. }) = (&self.local_inverse, &self.synthesis) {
            let mut out = vec![0.0; b.len()];
            for (o, chunk) in out.chunks_mut(*nm).zip(b.chunks(*nm)) {
                for i in 0..*nm {
                    o[i] = (0..*nm).map(|j| inv[(i, j)] * chunk[j]).sum();
                }
            }
            return out;
        }
        conjugate_gradient(|x| self.gram_apply(x), b, &self.diag)
    }

    /// Canonical coefficients of the orthogonal projection of `y` onto `V_l`.
    pub fn coefficients(&self, y: &[f64]) -> Vec<f64> {
        self.solve(&self.analyze(y))
    }

    /// Dense Gram matrix; intended for small setup grids.
    pub fn gram_dense(&self) -> DMatrix<f64> {
        let k = self.columns;
        let mut g = DMatrix::zeros(k, k);
        let mut e = vec![0.0; k];
        for j in 0..k {
            e[j] = 1.0;
            let col = self.gram_apply(&e);
            e[j] = 0.0;
            for i in 0..k {
                g[(i, j)] = col[i];
            }
        }
        g
    }

    /// Member index and lattice translate of a column.
    pub fn column_position(&self, grid: &GridSpace, col: usize) -> (usize, Vec<i64>) {
        match &self.synthesis {
            Synthesis::Local { nm, .. } => (col % nm, grid.cell_address(self.level, col / nm).translate(grid.spec())),
            Synthesis::Ell { .. } => {
                let mut rest = col;
                let nu = self
                    .dims
                    .iter()
                    .map(|&d| {
                        let v = rest % d;
                        rest /= d;
                        v as i64
                    })
                    .collect();
                (0, nu)
            }
        }
    }

    fn column_of(&self, grid: &GridSpace, j: usize, nu: &[i64]) -> Option<usize> {
        match &self.synthesis {
            Synthesis::Local { nm, .. } => {
                let (tile, digits) = grid.spec().expand(nu, self.level);
                let cell = crate::tiling::CellAddress { level: self.level, digits, tile };
                grid.cell_index(&cell).map(|c| c * nm + j)
            }
            Synthesis::Ell { .. } => {
                let mut col = 0usize;
                let mut stride = 1usize;
                for (&v, &d) in nu.iter().zip(&self.dims) {
                    col += v.rem_euclid(d as i64) as usize * stride;
                    stride *= d;
                }
                Some(col)
            }
        }
    }
}

fn conjugate_gradient(apply: impl Fn(&[f64]) -> Vec<f64>, b: &[f64], diag: &[f64]) -> Vec<f64> {
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let bnorm = dot(b, b).sqrt();
    let mut x: Vec<f64> = b.iter().zip(diag).map(|(v, d)| v / d).collect();
    if bnorm == 0.0 {
        return vec![0.0; b.len()];
    }
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(v, d)| v / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..CG_MAX_ITERS {
        if dot(&r, &r).sqrt() <= CG_TOL * bnorm {
            break;
        }
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..z.len() {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}

/// Small grid on which generator-level facts are computed.
fn setup_grid(gens: &GeneratorSet, tiles_per_axis: i64) -> Result<Arc<GridSpace>> {
    let spec = gens.spec.clone();
    let n = spec.n();
    let target: f64 = match n {
        1 => 256.0,
        2 => 16.0,
        _ => 4.0,
    };
    let per_axis = (spec.m() as f64).powf(1.0 / n as f64);
    let mut level = 1;
    while per_axis.powi(level as i32) < target {
        level += 1;
    }
    let level = level.max(gens.margin() + 1);
    Ok(Arc::new(GridSpace::new(spec, level, &vec![tiles_per_axis; n])?))
}

fn stability_window(gens: &GeneratorSet) -> i64 {
    match gens.kind {
        Kind::BSpline { order, .. } => 2 * order as i64 + 1,
        _ => 1,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StabilityCertificate {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub size: usize,
}

/// Extreme eigenvalues of the Gram matrix of the window shifts.
pub fn check_stability(gens: &GeneratorSet) -> Result<StabilityCertificate> {
    let grid = setup_grid(gens, stability_window(gens))?;
    let sys = match LevelSystem::new(gens, &grid, 0) {
        Err(Error::Unstable(v)) => return Err(Error::Unstable(v)),
        other => other?,
    };
    let g = if gens.is_tile_local() {
        // every tile carries the same block
        let nm = gens.len();
        let mut e = vec![0.0; sys.columns()];
        let mut g = DMatrix::zeros(nm, nm);
        for j in 0..nm {
            e[j] = 1.0;
            let col = sys.gram_apply(&e);
            e[j] = 0.0;
            for i in 0..nm {
                g[(i, j)] = col[i];
            }
        }
        g
    } else {
        sys.gram_dense()
    };
    let eig = SymmetricEigen::new(g.clone()).eigenvalues;
    let (min, max) = (eig.min(), eig.max());
    if !(min > STABILITY_TOL) {
        return Err(Error::Unstable(min));
    }
    Ok(StabilityCertificate { min_eigenvalue: min, max_eigenvalue: max, size: g.nrows() })
}

/// Duals of the shifts at the origin, as window-shift combinations of the members.
#[derive(Debug, Clone)]
pub struct DualSet {
    pub gram_inverse: DMatrix<f64>,
    /// `phi~_j` sampled on the setup grid.
    pub duals: Vec<GridFunction>,
    /// `max |<phi_j(. - mu), phi~_k(. - nu)> - delta|` over the window.
    pub biorthogonality_residual: f64,
}

pub fn dual_set(gens: &GeneratorSet) -> Result<DualSet> {
    check_stability(gens)?;
    let grid = setup_grid(gens, stability_window(gens))?;
    let sys = LevelSystem::new(gens, &grid, 0)?;
    let g = sys.gram_dense();
    let ginv = g.clone().try_inverse().ok_or(Error::Unstable(0.0))?;
    let nm = gens.len();
    let mut duals = Vec::with_capacity(nm);
    let mut residual = 0.0f64;
    for j in 0..nm {
        let col = sys.column_of(&grid, j, &vec![0; grid.n()]).expect("origin lies in the window");
        let coeffs: Vec<f64> = (0..sys.columns()).map(|i| ginv[(i, col)]).collect();
        let samples = sys.synthesize(&coeffs);
        let pair = sys.analyze(&samples);
        for (i, v) in pair.iter().enumerate() {
            let want = if i == col { 1.0 } else { 0.0 };
            residual = residual.max((v - want).abs());
        }
        duals.push(GridFunction::new(grid.clone(), samples)?);
    }
    Ok(DualSet { gram_inverse: ginv, duals, biorthogonality_residual: residual })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaskEntry {
    pub j: usize,
    pub k: usize,
    pub nu: Vec<i64>,
    pub c: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementMask {
    pub entries: Vec<MaskEntry>,
    /// Sup-norm residual of the two-scale relation on the setup grid.
    pub residual: f64,
    /// Largest gap to the closed-form mask, where one exists.
    pub closed_form_gap: Option<f64>,
}

impl RefinementMask {
    pub fn get(&self, j: usize, k: usize, nu: &[i64]) -> f64 {
        self.entries.iter().find(|e| e.j == j && e.k == k && e.nu == nu).map_or(0.0, |e| e.c)
    }
}

/// Coefficients `c_jk(nu)` of `phi_j(x) = sum_k sum_nu c_jk(nu) phi_k(Mx - nu)`.
pub fn refinement_mask(gens: &GeneratorSet) -> Result<RefinementMask> {
    check_stability(gens)?;
    let grid = setup_grid(gens, stability_window(gens))?;
    let coarse = LevelSystem::new(gens, &grid, 0)?;
    let fine = LevelSystem::new(gens, &grid, 1)?;
    let n = grid.n();
    let origin = vec![0i64; n];
    let mut entries = Vec::new();
    let mut residual = 0.0f64;
    for j in 0..gens.len() {
        let col = coarse.column_of(&grid, j, &origin).expect("origin lies in the window");
        let mut e = vec![0.0; coarse.columns()];
        e[col] = 1.0;
        let target = coarse.synthesize(&e);
        let c = fine.coefficients(&target);
        let back = fine.synthesize(&c);
        residual = residual.max(target.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        for (i, &v) in c.iter().enumerate() {
            if v.abs() > MASK_CUTOFF {
                let (k, nu) = fine.column_position(&grid, i);
                entries.push(MaskEntry { j, k, nu, c: v });
            }
        }
    }
    if residual > REFINE_TOL {
        return Err(Error::NotRefinable(residual));
    }
    entries.sort_by(|a, b| (a.j, a.k, &a.nu).cmp(&(b.j, b.k, &b.nu)));
    let closed = match &gens.kind {
        Kind::Monomials { basis } => Some(monomial_mask(&gens.spec, basis)),
        Kind::Haar => Some(
            gens.spec.digits().digits().iter().map(|g| MaskEntry { j: 0, k: 0, nu: g.clone(), c: 1.0 }).collect::<Vec<_>>(),
        ),
        _ => None,
    };
    let closed_form_gap = closed.map(|cf| {
        let a = cf.iter().map(|e| (e.c - lookup(&entries, e)).abs());
        let b = entries.iter().map(|e| (e.c - lookup(&cf, e)).abs());
        a.chain(b).fold(0.0, f64::max)
    });
    Ok(RefinementMask { entries, residual, closed_form_gap })
}

fn lookup(entries: &[MaskEntry], e: &MaskEntry) -> f64 {
    entries.iter().find(|x| x.j == e.j && x.k == e.k && x.nu == e.nu).map_or(0.0, |x| x.c)
}

type Poly = HashMap<Vec<u32>, f64>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            *out.entry(e).or_insert(0.0) += ca * cb;
        }
    }
    out
}

/// Mask of the monomial family from `x^alpha = (M^{-1}(y + gamma))^alpha`, `y = Mx - gamma`.
pub fn monomial_mask(spec: &TilingSpec, basis: &MonomialBasis) -> Vec<MaskEntry> {
    let n = spec.n();
    let inv = spec.dilation().inverse();
    let index: HashMap<&Vec<u32>, usize> = basis.exponents().iter().enumerate().map(|(i, e)| (e, i)).collect();
    let mut out = Vec::new();
    for gamma in spec.digits().digits() {
        let linear: Vec<Poly> = (0..n)
            .map(|i| {
                let mut p = Poly::new();
                let shift: f64 = (0..n).map(|j| inv[(i, j)] * gamma[j] as f64).sum();
                p.insert(vec![0; n], shift);
                for j in 0..n {
                    let mut e = vec![0u32; n];
                    e[j] = 1;
                    *p.entry(e).or_insert(0.0) += inv[(i, j)];
                }
                p
            })
            .collect();
        for (j, alpha) in basis.exponents().iter().enumerate() {
            let mut acc: Poly = [(vec![0u32; n], 1.0)].into_iter().collect();
            for (i, &a) in alpha.iter().enumerate() {
                for _ in 0..a {
                    acc = poly_mul(&acc, &linear[i]);
                }
            }
            for (e, c) in acc {
                if c.abs() > MASK_CUTOFF {
                    out.push(MaskEntry { j, k: index[&e], nu: gamma.clone(), c });
                }
            }
        }
    }
    out.sort_by(|a, b| (a.j, a.k, &a.nu).cmp(&(b.j, b.k, &b.nu)));
    out
}

/// Orthogonal projection onto `V_l`, the canonical dual-pairing projector.
pub fn project(f: &GridFunction, l: usize, gens: &GeneratorSet) -> Result<GridFunction> {
    gens.check_level(f.grid(), l)?;
    let sys = LevelSystem::new(gens, f.grid(), l)?;
    let a = sys.coefficients(f.samples());
    GridFunction::new(f.grid().clone(), sys.synthesize(&a))
}

/// `||f - P_l f||_p`.
pub fn sigma(f: &GridFunction, l: usize, p: f64, gens: &GeneratorSet) -> Result<f64> {
    let pf = project(f, l, gens)?;
    Ok(f.combine(1.0, &pf, -1.0)?.norm(p))
}

#[derive(Debug, Clone, Serialize)]
pub struct StrangFixReport {
    pub k: usize,
    pub residuals: Vec<(Vec<u32>, f64)>,
    pub max_residual: f64,
    pub pass: bool,
}

/// `max |q - P_0 q|` over monomials of degree below `k`, away from the periodization seam.
pub fn strang_fix_check(gens: &GeneratorSet, k: usize) -> Result<StrangFixReport> {
    let spec = gens.spec.clone();
    let n = spec.n();
    let (window, level, half) = match gens.kind {
        Kind::BSpline { .. } => (48i64, if n == 1 { 4 } else { 2 }, 4.0),
        _ => (5i64, gens.margin().max(if n == 1 { 6 } else { 4 }), 0.5),
    };
    let grid = Arc::new(GridSpace::new(spec, level, &vec![window; n])?);
    let center = window as f64 / 2.0;
    let keep: Vec<usize> = (0..grid.len())
        .filter(|&s| match gens.kind {
            Kind::BSpline { .. } => grid.point(s).iter().all(|x| (x - center).abs() < half),
            _ => grid.tile_of(grid.nu(s)).iter().all(|&t| t == window / 2),
        })
        .collect();
    let sys = LevelSystem::new(gens, &grid, 0)?;
    let mut residuals = Vec::new();
    for deg in 0..k {
        for alpha in MonomialBasis::new(n, deg).exponents().iter().filter(|a| a.iter().sum::<u32>() as usize == deg) {
            let q: Vec<f64> = (0..grid.len())
                .map(|s| grid.point(s).iter().zip(alpha).map(|(x, &e)| (x - center).powi(e as i32)).product())
                .collect();
            let pq = sys.synthesize(&sys.coefficients(&q));
            let r = keep.iter().map(|&s| (q[s] - pq[s]).abs()).fold(0.0, f64::max);
            residuals.push((alpha.clone(), r));
        }
    }
    let max_residual = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(StrangFixReport { k, residuals, max_residual, pass: max_residual <= STRANG_FIX_TOL })
}

/// Residues and canonical coefficients `P_0 f + sum_l R_l f = P_{lmax+1} f`.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientPyramid {
    pub lmax: usize,
    #[serde(serialize_with = "crate::besov::serialize_index")]
    pub p: f64,
    pub members: usize,
    /// `a_{j0}`, `[cell * N + j]`.
    pub a0: Vec<f64>,
    /// `a_{j(l+1)}` of `R_l f` for `l = 0..=lmax`.
    pub residue_coeffs: Vec<Vec<f64>>,
    /// `||P_0 f||_p`.
    pub p0_norm: f64,
    /// `||R_l f||_p`.
    pub residue_norms: Vec<f64>,
    /// `m^{-l/p} sum_j ||a_{jl}||_p` for `l = 0..=lmax + 1`.
    pub coeff_norms: Vec<f64>,
    /// `||f - P_l f||_p` for `l = 0..=lmax`.
    pub sigma: Vec<f64>,
    /// Sup-norm gap of the telescoping identity.
    pub telescoping_error: f64,
    #[serde(skip)]
    positions: Vec<Vec<(usize, Vec<i64>)>>,
}

fn member_lp_sum(a: &[f64], nm: usize, p: f64) -> f64 {
    (0..nm)
        .map(|j| {
            let v: Vec<f64> = a.iter().skip(j).step_by(nm).copied().collect();
            lp_norm_weighted(&v, p, 1.0)
        })
        .sum()
}

pub fn pyramid(f: &GridFunction, gens: &GeneratorSet, lmax: usize, p: f64) -> Result<CoefficientPyramid> {
    let grid = f.grid();
    gens.check_level(grid, lmax + 1)?;
    let nm = gens.len();
    let m = grid.m() as f64;
    let wp = |l: usize| if p.is_infinite() { 1.0 } else { m.powf(-(l as f64) / p) };
    let systems: Vec<LevelSystem> = (0..=lmax + 1).map(|l| LevelSystem::new(gens, grid, l)).collect::<Result<_>>()?;
    let mut proj = Vec::with_capacity(lmax + 2);
    let mut coeffs = Vec::with_capacity(lmax + 2);
    for sys in &systems {
        let a = sys.coefficients(f.samples());
        proj.push(sys.synthesize(&a));
        coeffs.push(a);
    }
    let wnorm = |v: &[f64]| grid.lp_norm(v, p);
    let a0 = coeffs[0].clone();
    let mut residue_coeffs = Vec::with_capacity(lmax + 1);
    let mut residue_norms = Vec::with_capacity(lmax + 1);
    let mut coeff_norms = vec![member_lp_sum(&a0, nm, p)];
    let mut sigma = Vec::with_capacity(lmax + 1);
    let mut positions = vec![(0..systems[0].columns()).map(|c| systems[0].column_position(grid, c)).collect()];
    let mut recon = proj[0].clone();
    for l in 0..=lmax {
        let r: Vec<f64> = proj[l + 1].iter().zip(&proj[l]).map(|(a, b)| a - b).collect();
        let lifted = systems[l + 1].coefficients(&proj[l]);
        let ar: Vec<f64> = coeffs[l + 1].iter().zip(&lifted).map(|(a, b)| a - b).collect();
        residue_norms.push(wnorm(&r));
        coeff_norms.push(wp(l + 1) * member_lp_sum(&ar, nm, p));
        let diff: Vec<f64> = f.samples().iter().zip(&proj[l]).map(|(a, b)| a - b).collect();
        sigma.push(wnorm(&diff));
        for (x, v) in recon.iter_mut().zip(&r) {
            *x += v;
        }
        residue_coeffs.push(ar);
        positions.push((0..systems[l + 1].columns()).map(|c| systems[l + 1].column_position(grid, c)).collect());
    }
    let telescoping_error = recon.iter().zip(&proj[lmax + 1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(CoefficientPyramid {
        lmax,
        p,
        members: nm,
        p0_norm: wnorm(&proj[0]),
        a0,
        residue_coeffs,
        residue_norms,
        coeff_norms,
        sigma,
        telescoping_error,
        positions,
    })
}

impl CoefficientPyramid {
    /// Rows `level, j, epsilon, nu, coefficient`; residue coefficients carry `epsilon = 0`.
    pub fn write_csv(&self, path: &Path, wavelets: Option<&WaveletCoefficients>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["level", "j", "epsilon", "nu", "coefficient"])?;
        let fmt_nu = |nu: &[i64]| nu.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";");
        for (l, a) in std::iter::once(&self.a0).chain(&self.residue_coeffs).enumerate() {
            for (c, v) in a.iter().enumerate() {
                let (j, nu) = &self.positions[l][c];
                w.write_record([l.to_string(), j.to_string(), "0".into(), fmt_nu(nu), format!("{v:e}")])?;
            }
        }
        if let Some(wc) = wavelets {
            for (l, b) in wc.b.iter().enumerate() {
                for (i, v) in b.iter().enumerate() {
                    let (c, e) = (i / (wc.m - 1), i % (wc.m - 1));
                    let nu = fmt_nu(&wc.positions[l][c]);
                    w.write_record([l.to_string(), "0".into(), (e + 1).to_string(), nu, format!("{v:e}")])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Piecewise-constant wavelets `psi^e = m^{1/2} sum_g h_{e g} 1_T(M . - gamma_g)`.
#[derive(Debug, Clone, Serialize)]
pub struct HaarWavelets {
    pub m: usize,
    /// `(m - 1) x m` rows, orthonormal and orthogonal to the constant row.
    pub rows: Vec<Vec<f64>>,
}

pub fn haar_wavelets(gens: &GeneratorSet) -> Result<HaarWavelets> {
    if !gens.is_haar() {
        return Err(Error::WrongGenerator(format!("Haar wavelets need the indicator generator, got {}", gens.name())));
    }
    let m = gens.spec.m();
    let rows = if gens.spec.n() == 1 { fourier_rows(m) } else { gram_schmidt_rows(m) };
    Ok(HaarWavelets { m, rows })
}

fn fourier_rows(m: usize) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    let mf = m as f64;
    let mut rows = Vec::with_capacity(m - 1);
    for j in 1..m.div_ceil(2) {
        let w = 2.0 * PI * j as f64 / mf;
        rows.push((0..m).map(|g| (2.0 / mf).sqrt() * (w * g as f64).cos()).collect());
        rows.push((0..m).map(|g| (2.0 / mf).sqrt() * (w * g as f64).sin()).collect());
    }
    if m % 2 == 0 {
        rows.push((0..m).map(|g| if g % 2 == 0 { 1.0 } else { -1.0 } / mf.sqrt()).collect());
    }
    rows
}

fn gram_schmidt_rows(m: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = vec![vec![1.0 / (m as f64).sqrt(); m]];
    for i in 0..m {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 1e-8 {
            basis.push(v.into_iter().map(|x| x / nrm).collect());
        }
        if basis.len() == m {
            break;
        }
    }
    basis.remove(0);
    basis
}

#[derive(Debug, Clone, Serialize)]
pub struct WaveletCoefficients {
    pub m: usize,
    /// `<f, 1_T(. - nu)>` per level-0 cell.
    pub a0: Vec<f64>,
    /// `b^e_l(nu)` for `l = 0..=lmax`, `[cell * (m - 1) + e - 1]`.
    pub b: Vec<Vec<f64>>,
    #[serde(skip)]
    positions: Vec<Vec<Vec<i64>>>,
}

impl WaveletCoefficients {
    /// `m^{l(1/2 - 1/p)} sum_e ||b^e_l||_p`.
    pub fn level_norm(&self, l: usize, p: f64) -> f64 {
        let k = self.m - 1;
        let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
        let sum: f64 = (0..k)
            .map(|e| {
                let v: Vec<f64> = self.b[l].iter().skip(e).step_by(k).copied().collect();
                lp_norm_weighted(&v, p, 1.0)
            })
            .sum();
        (self.m as f64).powf(l as f64 * (0.5 - inv_p)) * sum
    }

    /// `sum |a0|^2 + sum |b|^2`.
    pub fn energy(&self) -> f64 {
        self.a0.iter().chain(self.b.iter().flatten()).map(|v| v * v).sum()
    }
}

/// Quadrature pairings of `f` with the wavelets on levels `0..=lmax`.
pub fn wavelet_coeffs(f: &GridFunction, wavelets: &HaarWavelets, lmax: usize) -> Result<WaveletCoefficients> {
    let grid = f.grid();
    let m = wavelets.m;
    if grid.m() != m {
        return Err(Error::ShapeMismatch("wavelet family and grid use different tilings".into()));
    }
    if lmax >= grid.level() {
        return Err(Error::LevelTooFine { level: lmax, grid_level: grid.level() });
    }
    // cell means from the finest level up
    let mut means: Vec<Vec<f64>> = vec![vec![]; lmax + 2];
    let mut cur = f.samples().to_vec();
    for l in (0..grid.level()).rev() {
        let next: Vec<f64> = cur.chunks(m).map(|c| c.iter().sum::<f64>() / m as f64).collect();
        if l <= lmax {
            means[l + 1] = std::mem::take(&mut cur);
        }
        cur = next;
    }
    means[0] = cur;
    let mut b = Vec::with_capacity(lmax + 1);
    let mut positions = Vec::with_capacity(lmax + 1);
    for l in 0..=lmax {
        let scale = (m as f64).powf(-(l as f64 + 1.0) / 2.0);
        let mut out = Vec::with_capacity(means[l].len() * (m - 1));
        for children in means[l + 1].chunks(m) {
            for row in &wavelets.rows {
                out.push(scale * row.iter().zip(children).map(|(h, v)| h * v).sum::<f64>());
            }
        }
        b.push(out);
        positions.push((0..grid.cells(l)).map(|c| grid.cell_address(l, c).translate(grid.spec())).collect());
    }
    Ok(WaveletCoefficients { m, a0: means[0].clone(), b, positions })
}

/// MRA norm variants from one pyramid: approximation error, residues,
/// canonical coefficients and, for the indicator generator, wavelet coefficients.
pub fn mra_norm_variants(f: &GridFunction, params: &NormParams, gens: &GeneratorSet) -> Result<NormReport> {
    if !(params.s > 0.0) || !(params.p >= 1.0) || !(params.q >= 1.0) {
        return Err(Error::BadParameters("need s > 0 and p, q in [1, inf]".into()));
    }
    let grid = f.grid();
    let lambda = grid.spec().lambda0();
    let (s, p, q) = (params.s, params.p, params.q);
    let py = pyramid(f, gens, params.lmax, p)?;
    let levels: Vec<usize> = (0..=params.lmax).collect();
    let base = f.norm(p);
    let mut variants = BTreeMap::new();
    variants.insert("sigma".into(), VariantValue::new(base, levels.clone(), py.sigma.clone(), lambda, s, q));
    variants.insert("residue".into(), VariantValue::new(py.p0_norm, levels.clone(), py.residue_norms.clone(), lambda, s, q));
    variants.insert(
        "coeff".into(),
        VariantValue::new(0.0, levels.clone(), py.coeff_norms[..=params.lmax].to_vec(), lambda, s, q),
    );
    if gens.is_haar() {
        let wv = haar_wavelets(gens)?;
        let wc = wavelet_coeffs(f, &wv, params.lmax)?;
        let raw: Vec<f64> = levels.iter().map(|&l| wc.level_norm(l, p)).collect();
        let base_w = lp_norm_weighted(&wc.a0, p, 1.0);
        variants.insert("wavelet".into(), VariantValue::new(base_w, levels, raw, lambda, s, q));
    }
    Ok(NormReport::new(*params, lambda, base, variants))
}
