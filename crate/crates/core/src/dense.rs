//! Dense Hermitian matrices used as the brute-force side of every check.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Entrywise Hermiticity tolerance, relative to the largest entry (floored at 1).
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Environment variable that overrides the dense-size budget.
pub const DENSE_BUDGET_ENV: &str = "NGA_DENSE_BUDGET";

/// Largest matrix dimension any dense synthesis may produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseBudget(pub usize);

impl Default for DenseBudget {
    fn default() -> Self {
        DenseBudget(4096)
    }
}

impl DenseBudget {
    /// Reads `NGA_DENSE_BUDGET`, falling back to the default of 4096.
    pub fn from_env() -> Self {
        std::env::var(DENSE_BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v > 0)
            .map(DenseBudget)
            .unwrap_or_default()
    }

    pub fn check(&self, dim: usize) -> Result<()> {
        if dim > self.0 {
            Err(Error::SizeLimit {
                dim,
                budget: self.0,
            })
        } else {
            Ok(())
        }
    }
}

/// `base^exp`, or `None` on overflow.
pub fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseHermitian {
    mat: CMatrix,
}

impl DenseHermitian {
    /// Validates Hermiticity and stores the exactly symmetrized matrix.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::InvalidDimension(format!(
                "matrix is {}x{}, expected square",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let dev = hermitian_deviation(&mat);
        let scale = mat.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        if !dev.is_finite() || dev > HERMITIAN_TOL * scale {
            return Err(Error::InvalidInput(format!(
                "matrix is not Hermitian (deviation {dev:.3e})"
            )));
        }
        Ok(Self::symmetrized(mat))
    }

    /// Stores `(M + M^dagger)/2` without any tolerance check.
    pub fn symmetrized(mat: CMatrix) -> Self {
        let adj = mat.adjoint();
        DenseHermitian {
            mat: (mat + adj) * Complex64::new(0.5, 0.0),
        }
    }

    pub fn identity(dim: usize) -> Self {
        DenseHermitian {
            mat: CMatrix::identity(dim, dim),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut mat = CMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            mat[(i, i)] = Complex64::new(d, 0.0);
        }
        DenseHermitian { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    /// Eigenvalues in ascending order with matching eigenvector columns.
    pub fn eigh(&self) -> (Vec<f64>, CMatrix) {
        let eig = nalgebra::SymmetricEigen::new(self.mat.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = CMatrix::zeros(self.dim(), self.dim());
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        (values, vectors)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = nalgebra::SymmetricEigen::new(self.mat.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Applies `f` to the spectrum: `U diag(f(lambda)) U^dagger`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> DenseHermitian {
        let (values, vectors) = self.eigh();
        let n = self.dim();
        let mut scaled = vectors.clone();
        for (j, &v) in values.iter().enumerate() {
            let s = Complex64::new(f(v), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        DenseHermitian::symmetrized(scaled * vectors.adjoint())
    }

    /// Squared Frobenius norm (un-normalized).
    pub fn frobenius_sq(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn sub(&self, other: &DenseHermitian) -> DenseHermitian {
        DenseHermitian {
            mat: &self.mat - &other.mat,
        }
    }

    pub fn add(&self, other: &DenseHermitian) -> DenseHermitian {
        DenseHermitian {
            mat: &self.mat + &other.mat,
        }
    }

    pub fn scale(&self, s: f64) -> DenseHermitian {
        DenseHermitian {
            mat: &self.mat * Complex64::new(s, 0.0),
        }
    }

    /// `A B A` for Hermitian `A`, `B`.
    pub fn sandwich(outer: &DenseHermitian, inner: &DenseHermitian) -> DenseHermitian {
        DenseHermitian::symmetrized(&outer.mat * &inner.mat * &outer.mat)
    }

    pub fn kron(&self, other: &DenseHermitian) -> DenseHermitian {
        DenseHermitian {
            mat: self.mat.kronecker(&other.mat),
        }
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &DenseHermitian) -> f64 {
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub fn hermitian_deviation(mat: &CMatrix) -> f64 {
    let n = mat.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    dev
}
