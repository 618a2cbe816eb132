//! Small exact integer matrices: products, powers, determinants, adjugates and
//! Hermite normal forms for lattice bookkeeping.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    n: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::BadMatrix("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::BadMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0; n * n];
        for i in 0..n {
            data[i * n + i] = 1;
        }
        Self { n, data }
    }

    pub fn diagonal(d: &[i64]) -> Self {
        let n = d.len();
        let mut m = Self { n, data: vec![0; n * n] };
        for (i, &v) in d.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let n = self.n;
        let mut data = vec![0i64; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        IntMatrix { n, data }
    }

    pub fn pow(&self, e: usize) -> IntMatrix {
        let mut acc = IntMatrix::identity(self.n);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    #[inline]
    pub fn mul_vec(&self, v: &[i64]) -> Vec<i64> {
        let mut out = vec![0i64; self.n];
        self.mul_vec_into(v, &mut out);
        out
    }

    #[inline]
    pub fn mul_vec_into(&self, v: &[i64], out: &mut [i64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.get(i, j) == 0))
    }

    /// Determinant by fraction-free Gaussian elimination.
    pub fn det(&self) -> i64 {
        bareiss(self.n, self.data.iter().map(|&v| v as i128).collect()) as i64
    }

    /// Adjugate, so that `self * adj = det * I`.
    pub fn adjugate(&self) -> IntMatrix {
        let n = self.n;
        if n == 1 {
            return IntMatrix { n, data: vec![1] };
        }
        let mut data = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut minor = Vec::with_capacity((n - 1) * (n - 1));
                for r in 0..n {
                    if r == i {
                        continue;
                    }
                    for c in 0..n {
                        if c == j {
                            continue;
                        }
                        minor.push(self.get(r, c) as i128);
                    }
                }
                let cof = bareiss(n - 1, minor);
                let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                // adj is the transposed cofactor matrix
                data[j * n + i] = (sign * cof) as i64;
            }
        }
        IntMatrix { n, data }
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data.iter().map(|&v| v as f64).collect::<Vec<_>>())
    }

    /// Exact inverse as floating point: adj / det.
    pub fn inverse_f64(&self) -> DMatrix<f64> {
        let det = self.det() as f64;
        self.adjugate().to_f64() / det
    }

    /// Lower-triangular column Hermite form of the lattice spanned by the columns.
    pub fn column_hnf(&self) -> IntMatrix {
        let n = self.n;
        // work on columns as i128 vectors
        let mut cols: Vec<Vec<i128>> =
            (0..n).map(|j| (0..n).map(|i| self.get(i, j) as i128).collect()).collect();
        for i in 0..n {
            for j in (i + 1)..n {
                while cols[j][i] != 0 {
                    let a = cols[i][i];
                    let b = cols[j][i];
                    let (g, x, y) = ext_gcd(a, b);
                    let (ai, bj) = (a / g, b / g);
                    let ci = cols[i].clone();
                    let cj = cols[j].clone();
                    for r in 0..n {
                        cols[i][r] = x * ci[r] + y * cj[r];
                        cols[j][r] = ai * cj[r] - bj * ci[r];
                    }
                }
            }
            if cols[i][i] < 0 {
                for v in cols[i].iter_mut() {
                    *v = -*v;
                }
            }
        }
        let mut data = vec![0i64; n * n];
        for (j, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                data[i * n + j] = v as i64;
            }
        }
        IntMatrix { n, data }
    }
}

fn bareiss(n: usize, mut a: Vec<i128>) -> i128 {
    if n == 0 {
        return 1;
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n.saturating_sub(1) {
        if a[k * n + k] == 0 {
            let Some(p) = ((k + 1)..n).find(|&r| a[r * n + k] != 0) else {
                return 0;
            };
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
            sign = -sign;
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                a[i * n + j] = (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
            }
        }
        prev = a[k * n + k];
    }
    sign * a[n * n - 1]
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Canonical representatives of `Z^n / H Z^n` for a lower-triangular column HNF `H`.
#[derive(Debug, Clone)]
pub struct LatticeReducer {
    hnf: IntMatrix,
    extents: Vec<i64>,
    strides: Vec<usize>,
}

impl LatticeReducer {
    pub fn new(basis: &IntMatrix) -> Self {
        let hnf = basis.column_hnf();
        let n = hnf.dim();
        let extents: Vec<i64> = (0..n).map(|i| hnf.get(i, i)).collect();
        let mut strides = vec![1usize; n];
        for i in 1..n {
            strides[i] = strides[i - 1] * extents[i - 1] as usize;
        }
        Self { hnf, extents, strides }
    }

    /// Number of cosets.
    pub fn count(&self) -> usize {
        self.extents.iter().map(|&e| e as usize).product()
    }

    pub fn extents(&self) -> &[i64] {
        &self.extents
    }

    /// Reduce `v` in place into the box `0 <= v_i < H_ii`.
    #[inline]
    pub fn reduce(&self, v: &mut [i64]) {
        let n = self.extents.len();
        for i in 0..n {
            let q = v[i].div_euclid(self.extents[i]);
            if q != 0 {
                for r in i..n {
                    v[r] -= q * self.hnf.get(r, i);
                }
            }
        }
    }

    /// Linear index of a reduced vector, first axis fastest.
    #[inline]
    pub fn linear(&self, v: &[i64]) -> usize {
        v.iter().zip(&self.strides).map(|(&a, &s)| a as usize * s).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_adjugate() {
        let m = IntMatrix::from_rows(&[vec![1, 1], vec![-1, 1]]).unwrap();
        assert_eq!(m.det(), 2);
        let adj = m.adjugate();
        assert_eq!(m.mul(&adj), IntMatrix::diagonal(&[2, 2]));
        let m3 = IntMatrix::from_rows(&[vec![2, 1, 0], vec![0, 3, 1], vec![1, 0, 2]]).unwrap();
        assert_eq!(m3.det(), 13);
        assert_eq!(m3.mul(&m3.adjugate()), IntMatrix::diagonal(&[13, 13, 13]));
    }

    #[test]
    fn hnf_spans_same_lattice() {
        let m = IntMatrix::from_rows(&[vec![1, 1], vec![-1, 1]]).unwrap().pow(5);
        let h = m.column_hnf();
        assert_eq!(h.det().abs(), m.det().abs());
        assert_eq!(h.get(0, 1), 0);
        // every column of m reduces to zero modulo h
        let red = LatticeReducer::new(&m);
        for j in 0..2 {
            let mut col = vec![m.get(0, j), m.get(1, j)];
            red.reduce(&mut col);
            assert_eq!(col, vec![0, 0]);
        }
        assert_eq!(red.count(), 32);
    }
}
