//! Dense complex helpers shared by the spectral and transform layers.
//!
//! Complex products are split into four real `f64` products so they go through
//! the blocked real GEMM kernel instead of the generic scalar loop.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn split(m: &CMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

pub fn join(re: &DMatrix<f64>, im: &DMatrix<f64>) -> CMatrix {
    re.zip_map(im, Complex64::new)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// `a * b` for complex matrices.
pub fn cmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows());
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    join(&re, &im)
}

/// `a * b` with a real left factor.
pub fn rmul(a: &DMatrix<f64>, b: &CMatrix) -> CMatrix {
    let (br, bi) = split(b);
    join(&(a * &br), &(a * &bi))
}

/// `a * b^H`.
pub fn cmul_adjoint(a: &CMatrix, b: &CMatrix) -> CMatrix {
    cmul(a, &b.adjoint())
}

/// `q * diag(d) * q^H`.
pub fn spectral_product(q: &CMatrix, d: &[Complex64]) -> CMatrix {
    let mut qd = q.clone();
    for (j, dj) in d.iter().enumerate() {
        for z in qd.column_mut(j).iter_mut() {
            *z *= dj;
        }
    }
    cmul_adjoint(&qd, q)
}

/// `q * x`, column-oriented.
pub fn matvec(q: &CMatrix, x: &[Complex64]) -> Vec<Complex64> {
    let mut y = vec![ZERO; q.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == ZERO {
            continue;
        }
        for (yi, qij) in y.iter_mut().zip(q.column(j).iter()) {
            *yi += qij * xj;
        }
    }
    y
}

/// `q^H * x`.
pub fn adjoint_matvec(q: &CMatrix, x: &[Complex64]) -> Vec<Complex64> {
    (0..q.ncols())
        .map(|k| {
            q.column(k)
                .iter()
                .zip(x)
                .fold(ZERO, |acc, (qik, xi)| acc + qik.conj() * xi)
        })
        .collect()
}

fn split_vec(x: &[Complex64]) -> (DVector<f64>, DVector<f64>) {
    (
        DVector::from_iterator(x.len(), x.iter().map(|z| z.re)),
        DVector::from_iterator(x.len(), x.iter().map(|z| z.im)),
    )
}

fn join_vec(re: &DVector<f64>, im: &DVector<f64>) -> Vec<Complex64> {
    re.iter().zip(im.iter()).map(|(r, i)| Complex64::new(*r, *i)).collect()
}

/// `a * x` for a real matrix.
pub fn real_matvec(a: &DMatrix<f64>, x: &[Complex64]) -> Vec<Complex64> {
    let (xr, xi) = split_vec(x);
    join_vec(&(a * xr), &(a * xi))
}

/// `a^T * x` for a real matrix.
pub fn real_transpose_matvec(a: &DMatrix<f64>, x: &[Complex64]) -> Vec<Complex64> {
    let (xr, xi) = split_vec(x);
    join_vec(&a.tr_mul(&xr), &a.tr_mul(&xi))
}

/// A complex matrix stored as separate real and imaginary parts, for
/// matrix-vector products on the real kernels.
#[derive(Debug, Clone)]
pub struct SplitMatrix {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl SplitMatrix {
    pub fn new(m: &CMatrix) -> Self {
        let (re, im) = split(m);
        SplitMatrix { re, im }
    }

    /// `m * x`.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let (xr, xi) = split_vec(x);
        let re = &self.re * &xr - &self.im * &xi;
        let im = &self.re * &xi + &self.im * &xr;
        join_vec(&re, &im)
    }

    /// `m^H * x`.
    pub fn adjoint_matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let (xr, xi) = split_vec(x);
        let re = self.re.tr_mul(&xr) + self.im.tr_mul(&xi);
        let im = self.re.tr_mul(&xi) - self.im.tr_mul(&xr);
        join_vec(&re, &im)
    }
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_real(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `max |(O O^H - I)_{ij}|`.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let mut g = cmul_adjoint(m, m);
    for i in 0..g.nrows() {
        g[(i, i)] -= ONE;
    }
    max_abs(&g)
}

pub fn norm_sqr(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

pub fn diff_norm_sqr(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}
