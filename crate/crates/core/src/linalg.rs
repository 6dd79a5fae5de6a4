//! Small dense linear algebra.
//!
//! The largest singular value used for Lipschitz estimation is computed here
//! with a cyclic Jacobi eigenvalue iteration on `JᵀJ`. Eigen-decomposition of
//! non-symmetric matrices (spectral abscissa, eigenvector conditioning) and
//! the matrix exponential are delegated to `nalgebra`.

use std::ops::{Index, IndexMut};

use nalgebra::{Complex, DMatrix};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix rows");
        Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// `AᵀA`.
    pub fn gram(&self) -> Matrix {
        self.transpose().matmul(self)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn from_nalgebra(m: &DMatrix<f64>) -> Matrix {
        let mut out = Matrix::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }

    /// `exp(self * t)` for a square matrix.
    pub fn exp_scaled(&self, t: f64) -> Matrix {
        assert!(self.is_square());
        Matrix::from_nalgebra(&(self.to_nalgebra() * t).exp())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Relative off-diagonal tolerance of the Jacobi iteration.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(sym: &Matrix) -> Vec<f64> {
    assert!(sym.is_square(), "Jacobi iteration needs a square matrix");
    let n = sym.rows();
    let mut a = sym.clone();
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return vec![0.0; n];
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)] * a[(p, q)])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOLERANCE * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Largest singular value, `sqrt(λ_max(JᵀJ))`.
pub fn largest_singular_value(m: &Matrix) -> f64 {
    let eig = symmetric_eigenvalues(&m.gram());
    eig.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Constants `(α, β)` with `‖exp(At)‖ ≤ β e^{αt}` for `t ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthBound {
    /// Spectral abscissa: the largest real part of an eigenvalue.
    pub alpha: f64,
    /// 1 for normal matrices, otherwise the eigenvector condition number.
    pub beta: f64,
    /// Condition number of the (column-normalized) eigenvector matrix;
    /// 1 for normal matrices and infinite for defective ones.
    pub eigenvector_condition: f64,
    pub normal: bool,
}

/// Spectral abscissa of a square matrix.
pub fn spectral_abscissa(a: &Matrix) -> f64 {
    assert!(a.is_square());
    a.to_nalgebra()
        .complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// True when `AᵀA = AAᵀ` up to rounding.
pub fn is_normal(a: &Matrix) -> bool {
    let ata = a.gram();
    let aat = a.matmul(&a.transpose());
    let diff: f64 = ata
        .as_slice()
        .iter()
        .zip(aat.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let scale = a.frobenius_norm().powi(2).max(1.0);
    diff <= 1e-12 * scale
}

pub fn growth_bound(a: &Matrix) -> GrowthBound {
    let alpha = spectral_abscissa(a);
    if is_normal(a) {
        return GrowthBound {
            alpha,
            beta: 1.0,
            eigenvector_condition: 1.0,
            normal: true,
        };
    }
    let cond = eigenvector_condition(a);
    GrowthBound {
        alpha,
        beta: cond,
        eigenvector_condition: cond,
        normal: false,
    }
}

/// Condition number of the matrix of unit eigenvectors, infinite when the
/// eigenvectors do not span the space.
pub fn eigenvector_condition(a: &Matrix) -> f64 {
    let n = a.rows();
    let na = a.to_nalgebra();
    let norm = a.frobenius_norm().max(1.0);
    let eig = na.complex_eigenvalues();
    let ca: DMatrix<Complex<f64>> = na.map(|x| Complex::new(x, 0.0));

    // Group numerically equal eigenvalues so repeated ones get a basis of
    // their eigenspace rather than the same vector twice.
    let mut clusters: Vec<(Complex<f64>, usize)> = Vec::new();
    for &l in eig.iter() {
        match clusters
            .iter_mut()
            .find(|(c, _)| (c - l).norm() <= 1e-8 * (1.0 + l.norm()))
        {
            Some((_, m)) => *m += 1,
            None => clusters.push((l, 1)),
        }
    }

    let mut columns: Vec<nalgebra::DVector<Complex<f64>>> = Vec::with_capacity(n);
    for (lambda, mult) in clusters {
        let shifted = &ca - DMatrix::<Complex<f64>>::identity(n, n) * lambda;
        let svd = shifted.svd(false, true);
        let v_t = match svd.v_t {
            Some(v) => v,
            None => return f64::INFINITY,
        };
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        for &k in order.iter().take(mult) {
            if svd.singular_values[k] > 1e-7 * norm {
                return f64::INFINITY;
            }
            let v = v_t.row(k).adjoint();
            let vn = v.norm();
            columns.push(v / Complex::new(vn, 0.0));
        }
    }
    if columns.len() != n {
        return f64::INFINITY;
    }
    let vmat = DMatrix::from_columns(&columns);
    let sv = vmat.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
