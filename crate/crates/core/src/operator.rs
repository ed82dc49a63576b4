//! Dense complex operators and spectral decompositions.

use std::ops::{Add, Deref, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;
pub type Vector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `e^{iθ}`
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Square complex matrix acting on a Hilbert (or Liouville) space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix(Matrix);

impl OperatorMatrix {
    pub fn new(m: Matrix) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "operator matrix must be square");
        Self(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(Matrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(Matrix::from_fn(dim, dim, f))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |i, j| if i == j { c(diag[i], 0.0) } else { ZERO })
    }

    /// `|a⟩⟨b|`
    pub fn outer(a: &Vector, b: &Vector) -> Self {
        Self(a * b.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Spectral (operator 2-) norm.
    pub fn norm(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        self.0
            .clone()
            .singular_values()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        &self.0 * v
    }

    /// `⟨a|A|b⟩`
    pub fn element(&self, a: &Vector, b: &Vector) -> C64 {
        a.dotc(&(&self.0 * b))
    }

    pub fn scale(&self, z: C64) -> Self {
        Self(&self.0 * z)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self - &self.adjoint()).norm() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let prod = &self.adjoint() * self;
        (&prod - &Self::identity(self.dim())).norm() <= tol
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        (&(self * self) - self).norm() <= tol
    }

    /// Trace over the second tensor factor of an `(a ⊗ b)`-ordered operator.
    pub fn partial_trace_second(&self, dim_a: usize, dim_b: usize) -> Self {
        assert_eq!(dim_a * dim_b, self.dim());
        Self::from_fn(dim_a, |i, j| {
            (0..dim_b)
                .map(|k| self.0[(i * dim_b + k, j * dim_b + k)])
                .sum()
        })
    }

    /// `V† A V`
    pub fn conjugate_by(&self, v: &Matrix) -> Self {
        Self(v.adjoint() * &self.0 * v)
    }
}

impl Deref for OperatorMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl From<Matrix> for OperatorMatrix {
    fn from(m: Matrix) -> Self {
        Self::new(m)
    }
}

impl<'a> Mul<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: f64) -> OperatorMatrix {
        OperatorMatrix(&self.0 * c(rhs, 0.0))
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        OperatorMatrix(-&self.0)
    }
}

/// A list of `(eigenvalue, projector)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub terms: Vec<(C64, OperatorMatrix)>,
}

impl SpectralDecomposition {
    pub fn new(terms: Vec<(C64, OperatorMatrix)>) -> Self {
        Self { terms }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.terms.iter().map(|(e, _)| *e).collect()
    }

    /// `Σ λ P`
    pub fn assemble(&self) -> OperatorMatrix {
        let dim = self.terms.first().map(|(_, p)| p.dim()).unwrap_or(0);
        let mut acc = Matrix::zeros(dim, dim);
        for (e, p) in &self.terms {
            acc += p.matrix() * *e;
        }
        OperatorMatrix(acc)
    }

    /// Largest `‖P_ν P_μ‖` over distinct pairs.
    pub fn max_cross_overlap(&self) -> f64 {
        let mut worst = 0.0f64;
        for (a, (_, p)) in self.terms.iter().enumerate() {
            for (_, q) in self.terms.iter().skip(a + 1) {
                worst = worst.max((p * q).norm()).max((q * p).norm());
            }
        }
        worst
    }

    /// `‖Σ P − I‖`
    pub fn completeness_defect(&self) -> f64 {
        let dim = self.terms.first().map(|(_, p)| p.dim()).unwrap_or(0);
        let mut acc = Matrix::zeros(dim, dim);
        for (_, p) in &self.terms {
            acc += p.matrix();
        }
        (OperatorMatrix(acc) - OperatorMatrix::identity(dim)).norm()
    }

    pub fn is_orthogonal(&self, tol: f64) -> bool {
        self.max_cross_overlap() <= tol
    }

    pub fn is_complete(&self, tol: f64) -> bool {
        self.completeness_defect() <= tol
    }
}

impl Sub for OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(self.0 - rhs.0)
    }
}

impl Add for OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(self.0 + rhs.0)
    }
}

/// Largest entry modulus.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Hermitian eigendecomposition with ascending real eigenvalues.
pub(crate) fn hermitian_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.nrows();
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}
