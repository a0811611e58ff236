//! Hermitian and Hermitian positive-definite (HPD) matrices.
//!
//! Every matrix function here goes through one Hermitian eigendecomposition
//! `X = V diag(λ) V^H`, cached write-once on the value. Logarithm, exponential,
//! square root and inverse are all spectral maps of that decomposition, so a
//! value produced by one of them (e.g. `exp(H)`) already carries the spectrum
//! of the result and never needs a second solve.

mod quadrature;

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use quadrature::{gauss_legendre, Quadrature, GAUSS_LEGENDRE_ORDER};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Hermitian deviation allowed relative to the Frobenius norm of the input.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Minimum eigenvalue allowed relative to the trace.
pub const PD_TOL: f64 = 1e-12;

/// Eigenvalues in ascending order with the matching unitary eigenvector matrix.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    /// `V diag(f(λ)) V^H`, symmetrized.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        let d: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        self.reconstruct_with(&d)
    }

    fn reconstruct_with(&self, d: &[f64]) -> CMatrix {
        let v = &self.vectors;
        let mut scaled = v.clone();
        for (j, &dj) in d.iter().enumerate() {
            scaled.column_mut(j).scale_mut(dj);
        }
        hermitian_part(&(scaled * v.adjoint()))
    }

    /// Spectrum mapped through `f`, keeping the same eigenvectors. `f` must
    /// be monotone on the spectrum; decreasing maps are re-sorted.
    fn mapped<F: Fn(f64) -> f64>(&self, f: F) -> Eigen {
        let values: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        sort_ascending(values, self.vectors.clone())
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

fn sort_ascending(values: Vec<f64>, vectors: CMatrix) -> Eigen {
    if values.windows(2).all(|w| w[0] <= w[1]) {
        return Eigen { values, vectors };
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted = order.iter().map(|&i| values[i]).collect();
    let cols: Vec<_> = order.iter().map(|&i| vectors.column(i).into_owned()).collect();
    Eigen {
        values: sorted,
        vectors: CMatrix::from_columns(&cols),
    }
}

/// `(M + M^H) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

fn check_same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(a, b));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eig(h: &Hermitian) -> Result<Eigen> {
    eig_of(&h.m)
}

fn eig_of(m: &CMatrix) -> Result<Eigen> {
    let sym = hermitian_part(m);
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(Error::ConvergenceFailure)?;
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(*bad));
    }
    Ok(sort_ascending(values, eig.eigenvectors))
}

/// A Hermitian matrix with a write-once spectral cache.
#[derive(Clone, Debug)]
pub struct Hermitian {
    m: CMatrix,
    eig: OnceLock<Eigen>,
}

impl Hermitian {
    /// Accepts `m` if it is Hermitian within `HERMITIAN_TOL * ‖m‖` and stores
    /// its Hermitian part.
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square(&m)?;
        let tolerance = HERMITIAN_TOL * m.norm();
        let deviation = hermitian_deviation(&m);
        if deviation > tolerance {
            return Err(Error::NotHermitian {
                deviation,
                tolerance,
            });
        }
        Ok(Self::from_hermitian_part(&m))
    }

    /// Takes the Hermitian part of `m` without checking the deviation.
    pub fn from_hermitian_part(m: &CMatrix) -> Self {
        Self::wrap(hermitian_part(m))
    }

    fn wrap(m: CMatrix) -> Self {
        Hermitian {
            m,
            eig: OnceLock::new(),
        }
    }

    fn with_eigen(m: CMatrix, eig: Eigen) -> Self {
        let cell = OnceLock::new();
        let _ = cell.set(eig);
        Hermitian { m, eig: cell }
    }

    pub fn zeros(n: usize) -> Self {
        Self::wrap(CMatrix::zeros(n, n))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let m = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(d[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::wrap(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn eigen(&self) -> Result<&Eigen> {
        if let Some(e) = self.eig.get() {
            return Ok(e);
        }
        let e = eig_of(&self.m)?;
        Ok(self.eig.get_or_init(|| e))
    }

    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn scale(&self, a: f64) -> Hermitian {
        Hermitian::wrap(self.m.scale(a))
    }

    pub fn exp(&self) -> Result<Hpd> {
        matrix_exp(self)
    }
}

/// A validated Hermitian positive-definite matrix.
#[derive(Clone, Debug)]
pub struct Hpd {
    inner: Hermitian,
}

/// Accepts `m` as HPD when it is Hermitian (see [`HERMITIAN_TOL`]) and its
/// smallest eigenvalue exceeds `tol * trace`. The stored value is the
/// Hermitian part `(M + M^H)/2`.
pub fn validate_hpd(m: &CMatrix, tol: f64) -> Result<Hpd> {
    let h = Hermitian::new(m.clone())?;
    Hpd::from_hermitian(h, tol)
}

impl Hpd {
    pub fn new(m: CMatrix) -> Result<Self> {
        let h = Hermitian::new(m)?;
        Self::from_hermitian(h, PD_TOL)
    }

    pub fn from_hermitian(h: Hermitian, tol: f64) -> Result<Self> {
        let eig = h.eigen()?;
        let min = eig.values[0];
        let trace: f64 = eig.values.iter().sum();
        let floor = tol * trace.abs();
        if !(min > floor) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min,
                floor,
            });
        }
        Ok(Hpd { inner: h })
    }

    fn from_eigen(eig: Eigen) -> Result<Self> {
        let m = eig.map(|l| l);
        let h = Hermitian::with_eigen(m, eig);
        Self::from_hermitian(h, PD_TOL)
    }

    pub fn identity(n: usize) -> Self {
        let eig = Eigen {
            values: vec![1.0; n],
            vectors: CMatrix::identity(n, n),
        };
        Hpd {
            inner: Hermitian::with_eigen(CMatrix::identity(n, n), eig),
        }
    }

    pub fn from_real_diagonal(d: &[f64]) -> Result<Self> {
        Self::from_hermitian(Hermitian::from_real_diagonal(d), PD_TOL)
    }

    pub fn as_hermitian(&self) -> &Hermitian {
        &self.inner
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.inner.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.inner.m
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn eigen(&self) -> &Eigen {
        // validated on construction, so the cache is always populated
        self.inner.eig.get().expect("HPD spectrum cached at validation")
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen().values
    }

    pub fn norm(&self) -> f64 {
        self.inner.norm()
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace()
    }

    pub fn log_det(&self) -> f64 {
        self.eigenvalues().iter().map(|l| l.ln()).sum()
    }

    pub fn condition_number(&self) -> f64 {
        let v = self.eigenvalues();
        v[v.len() - 1] / v[0]
    }

    pub fn log(&self) -> Hermitian {
        matrix_log(self)
    }

    pub fn sqrt(&self) -> Hpd {
        matrix_sqrt(self)
    }

    pub fn inverse(&self) -> Hpd {
        self.spectral(|l| 1.0 / l)
    }

    pub fn inv_sqrt(&self) -> Hpd {
        self.spectral(|l| 1.0 / l.sqrt())
    }

    /// `X^p` for real `p`.
    pub fn powf(&self, p: f64) -> Hpd {
        self.spectral(|l| l.powf(p))
    }

    fn spectral<F: Fn(f64) -> f64>(&self, f: F) -> Hpd {
        let eig = self.eigen().mapped(f);
        let m = eig.map(|l| l);
        Hpd {
            inner: Hermitian::with_eigen(m, eig),
        }
    }

    pub fn scale(&self, a: f64) -> Result<Hpd> {
        if !(a > 0.0) {
            return Err(Error::InvalidParameter(format!("HPD scale factor {a} must be positive")));
        }
        let eig = self.eigen().mapped(|l| a * l);
        let m = self.matrix().scale(a);
        Ok(Hpd {
            inner: Hermitian::with_eigen(m, eig),
        })
    }

    /// `A X A^H` for invertible `A`.
    pub fn congruence(&self, a: &CMatrix) -> Result<Hpd> {
        check_same_dim(a.ncols(), self.dim())?;
        Hpd::new(hermitian_part(&(a * self.matrix() * a.adjoint())))
    }

    /// Quadratic form `u^H X^{-1} v` via the cached spectrum.
    pub fn inv_quadratic(&self, u: &CVector, v: &CVector) -> Complex64 {
        let e = self.eigen();
        let uu = e.vectors.adjoint() * u;
        let vv = e.vectors.adjoint() * v;
        uu.iter()
            .zip(vv.iter())
            .zip(e.values.iter())
            .map(|((a, b), l)| a.conj() * b / *l)
            .sum()
    }
}

/// Principal logarithm `V diag(ln λ) V^H`.
pub fn matrix_log(x: &Hpd) -> Hermitian {
    let eig = x.eigen().mapped(f64::ln);
    let m = eig.map(|l| l);
    Hermitian::with_eigen(m, eig)
}

/// `V diag(e^λ) V^H`, validated HPD.
pub fn matrix_exp(h: &Hermitian) -> Result<Hpd> {
    let eig = h.eigen()?;
    let top = eig.values[eig.dim() - 1];
    if top > f64::MAX.ln() {
        return Err(Error::Overflow(top));
    }
    Hpd::from_eigen(eig.mapped(f64::exp))
}

/// Spectral square root.
pub fn matrix_sqrt(x: &Hpd) -> Hpd {
    x.spectral(f64::sqrt)
}

/// `tr(X^H Y)`.
pub fn frobenius_inner(x: &CMatrix, y: &CMatrix) -> Result<Complex64> {
    if x.shape() != y.shape() {
        return Err(Error::DimensionMismatch(x.len(), y.len()));
    }
    Ok(x.dotc(y))
}

pub fn frobenius_norm(x: &CMatrix) -> f64 {
    x.norm()
}

/// Directional derivative of the principal logarithm,
/// `d/dε Log(A + εH)|_{ε=0} = ∫₀¹ [(A−I)s+I]⁻¹ H [(A−I)s+I]⁻¹ ds`,
/// evaluated by Gauss–Legendre quadrature in the eigenbasis of `A`.
pub fn log_derivative(a: &Hpd, h: &Hermitian) -> Result<Hermitian> {
    check_same_dim(a.dim(), h.dim())?;
    let eig = a.eigen();
    let n = eig.dim();
    let rule = Quadrature::for_spectrum(&eig.values);
    let mut kernel = DMatrix::<f64>::zeros(n, n);
    let mut resolvent = vec![0.0; n];
    for (s, w) in rule.iter() {
        for (r, &l) in resolvent.iter_mut().zip(&eig.values) {
            *r = 1.0 / ((l - 1.0) * s + 1.0);
        }
        for j in 0..n {
            for i in 0..n {
                kernel[(i, j)] += w * resolvent[i] * resolvent[j];
            }
        }
    }
    let v = &eig.vectors;
    let mut rotated = v.adjoint() * h.matrix() * v;
    for j in 0..n {
        for i in 0..n {
            rotated[(i, j)] *= kernel[(i, j)];
        }
    }
    Ok(Hermitian::from_hermitian_part(&(v * rotated * v.adjoint())))
}

/// Relative residual `‖∫₀¹[(X−I)s+I]⁻² ds − X⁻¹‖ / ‖X⁻¹‖`, with the integral
/// by quadrature and `X⁻¹` by LU factorization.
pub fn integral_identity_residual(x: &Hpd) -> Result<f64> {
    let eig = x.eigen();
    let rule = Quadrature::for_spectrum(&eig.values);
    let integral: Vec<f64> = eig
        .values
        .iter()
        .map(|&l| {
            rule.iter()
                .map(|(s, w)| {
                    let r = 1.0 / ((l - 1.0) * s + 1.0);
                    w * r * r
                })
                .sum()
        })
        .collect();
    let quad = eig.reconstruct_with(&integral);
    let inv = x
        .matrix()
        .clone()
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite {
            min_eigenvalue: eig.values[0],
            floor: 0.0,
        })?;
    Ok((quad - &inv).norm() / inv.norm())
}
