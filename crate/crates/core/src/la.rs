//! Small dense matrices for element-local computations.
//!
//! Element matrices in this crate are tiny (at most a few dozen rows), so a
//! row-major `Vec<f64>` with partial-pivoting LU is all we need. The global
//! sparse systems live in [`crate::system`] and use a different backend.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LaError {
    #[error("singular matrix: no usable pivot in column {col} (|pivot| = {pivot:.3e})")]
    Singular { col: usize, pivot: f64 },
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DMat {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![0.0; nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = if nrows == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { nrows, ncols, data }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn transpose(&self) -> DMat {
        DMat::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    /// `self * other`
    pub fn matmul(&self, other: &DMat) -> DMat {
        assert_eq!(self.ncols, other.nrows, "matmul shape");
        let mut out = DMat::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.ncols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// `selfᵀ * other`
    pub fn tr_matmul(&self, other: &DMat) -> DMat {
        assert_eq!(self.nrows, other.nrows, "tr_matmul shape");
        let mut out = DMat::zeros(self.ncols, other.ncols);
        for k in 0..self.nrows {
            for i in 0..self.ncols {
                let a = self[(k, i)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.ncols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// `self * x` for a vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.ncols, x.len(), "matvec shape");
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let mut s = 0.0;
            for j in 0..self.ncols {
                s += self[(i, j)] * x[j];
            }
            y[i] = s;
        }
        y
    }

    /// `selfᵀ * x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.nrows, x.len(), "tr_matvec shape");
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..self.ncols {
                y[j] += self[(i, j)] * xi;
            }
        }
        y
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn add_assign(&mut self, other: &DMat) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    pub fn add_scaled(&mut self, s: f64, other: &DMat) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * *b;
        }
    }

    /// Largest absolute asymmetry `|A - Aᵀ|`, for sanity checks.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Solve `self * X = B` for possibly many right-hand sides (columns of `B`)
    /// by LU with partial pivoting.
    pub fn solve(&self, b: &DMat) -> Result<DMat, LaError> {
        let n = self.nrows;
        if self.ncols != n {
            return Err(LaError::Shape(format!("solve on {}x{} matrix", n, self.ncols)));
        }
        if b.nrows != n {
            return Err(LaError::Shape(format!("rhs rows {} != {}", b.nrows, n)));
        }
        let mut lu = self.clone();
        let mut x = b.clone();
        let m = x.ncols;
        for col in 0..n {
            // pivot
            let mut piv = col;
            let mut best = lu[(col, col)].abs();
            for r in col + 1..n {
                let v = lu[(r, col)].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(LaError::Singular { col, pivot: best });
            }
            if piv != col {
                for j in 0..n {
                    let t = lu[(col, j)];
                    lu[(col, j)] = lu[(piv, j)];
                    lu[(piv, j)] = t;
                }
                for j in 0..m {
                    let t = x[(col, j)];
                    x[(col, j)] = x[(piv, j)];
                    x[(piv, j)] = t;
                }
            }
            let d = lu[(col, col)];
            for r in col + 1..n {
                let f = lu[(r, col)] / d;
                if f == 0.0 {
                    continue;
                }
                lu[(r, col)] = 0.0;
                for j in col + 1..n {
                    lu[(r, j)] -= f * lu[(col, j)];
                }
                for j in 0..m {
                    x[(r, j)] -= f * x[(col, j)];
                }
            }
        }
        // back substitution
        for col in (0..n).rev() {
            let d = lu[(col, col)];
            for j in 0..m {
                let mut s = x[(col, j)];
                for k in col + 1..n {
                    s -= lu[(col, k)] * x[(k, j)];
                }
                x[(col, j)] = s / d;
            }
        }
        Ok(x)
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>, LaError> {
        let rhs = DMat::from_fn(b.len(), 1, |i, _| b[i]);
        let x = self.solve(&rhs)?;
        Ok((0..x.nrows).map(|i| x[(i, 0)]).collect())
    }
}

impl std::ops::Index<(usize, usize)> for DMat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.ncols + j]
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
///
/// Used for conditioning diagnostics of small Gram matrices; returns the
/// eigenvalues in ascending order.
pub fn sym_eigenvalues(a: &DMat) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut m = a.clone();
    for _sweep in 0..100 {
        let mut off = 0.0_f64;
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(m[(i, j)].abs());
            }
        }
        if off < 1e-14 * m.max_abs().max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}

/// Spectral condition number of a symmetric positive definite matrix.
pub fn spd_condition(a: &DMat) -> f64 {
    let eigs = sym_eigenvalues(a);
    let min = eigs.first().copied().unwrap_or(0.0);
    let max = eigs.last().copied().unwrap_or(0.0);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
