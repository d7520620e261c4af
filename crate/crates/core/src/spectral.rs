//! Unitary diagonalization of the GFT matrix and the operators built on it.
//!
//! `F = Vᵀ` is real orthogonal, so its eigenvalues lie on the unit circle and
//! its eigenvectors are generally complex. We take the complex Schur form of
//! `F`; for a normal matrix the triangular factor is diagonal up to round-off,
//! which gives a unitary `Q` and `F = Q diag(λ) Qᴴ`. Every fractional power
//! uses the principal branch `λ^p = exp(i p Arg λ)` with `Arg λ ∈ (-π, π]`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GlctError, Result};
use crate::graph::{gft_matrix, AdjacencySpectrum, Graph};
use crate::linalg::{self, CMatrix, SplitMatrix, ZERO};

/// Eigenvalues this close to `-1` are assigned `Arg = π`.
pub const NEG_ONE_SNAP: f64 = 1e-12;
pub const UNIT_MODULUS_TOL: f64 = 1e-8;

/// How the graph chirp multiplication `C(ξ)` is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum ChirpStrategy {
    /// `F^ξ = Q diag(λ^ξ) Qᴴ`.
    #[default]
    SpectralPowerOfF,
    /// `diag(λ_k^ξ)` applied in the vertex domain.
    DiagonalLambdaOfF,
    /// `diag(exp(iπ k ξ / n))`, `k` the rank of the k-th adjacency eigenvalue.
    /// Kept for comparison only.
    DiagonalLambdaOfA,
}

impl std::str::FromStr for ChirpStrategy {
    type Err = GlctError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "spectralpoweroff" | "spectral" => Ok(ChirpStrategy::SpectralPowerOfF),
            "diagonallambdaoff" | "diagf" => Ok(ChirpStrategy::DiagonalLambdaOfF),
            "diagonallambdaofa" | "diaga" => Ok(ChirpStrategy::DiagonalLambdaOfA),
            _ => Err(GlctError::Parse(format!("unknown chirp strategy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GftSpectrum {
    pub adjacency: Arc<AdjacencySpectrum>,
    /// The real GFT matrix `F = Vᵀ`.
    pub f: DMatrix<f64>,
    /// Unitary eigenvectors of `F` as columns.
    pub q: CMatrix,
    /// `q` split into real and imaginary parts.
    pub q_split: SplitMatrix,
    /// Unit-modulus eigenvalues of `F`, sorted by principal argument.
    pub lambda: Vec<Complex64>,
    /// Principal arguments of `lambda`.
    pub args: Vec<f64>,
    pub fingerprint: [u8; 32],
}

pub fn principal_arg(z: Complex64) -> f64 {
    if (z + 1.0).norm() <= NEG_ONE_SNAP {
        PI
    } else {
        z.arg()
    }
}

pub fn frac_power_unit(lambda: Complex64, p: f64) -> Result<Complex64> {
    if (lambda.norm() - 1.0).abs() > UNIT_MODULUS_TOL {
        return Err(GlctError::NotUnitModulus {
            re: lambda.re,
            im: lambda.im,
        });
    }
    Ok(Complex64::from_polar(1.0, p * principal_arg(lambda)))
}

pub fn diagonalize_gft(adj: &Arc<AdjacencySpectrum>) -> Result<GftSpectrum> {
    let n = adj.n();
    let f = gft_matrix(adj);
    let (z, t) = linalg::to_complex(&f).schur().unpack();

    let mut order: Vec<usize> = (0..n).collect();
    let raw: Vec<Complex64> = (0..n).map(|k| t[(k, k)]).collect();
    let max_dev = raw
        .iter()
        .fold(0.0f64, |m, l| m.max((l.norm() - 1.0).abs()));
    if max_dev > 1e-10 {
        return Err(GlctError::NumericalFailure(format!(
            "GFT eigenvalue modulus deviates from 1 by {max_dev:e}"
        )));
    }
    let args_raw: Vec<f64> = raw.iter().map(|&l| principal_arg(l)).collect();
    order.sort_by(|&i, &j| {
        args_raw[i]
            .total_cmp(&args_raw[j])
            .then(raw[i].re.total_cmp(&raw[j].re))
            .then(i.cmp(&j))
    });

    let mut q = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        q.set_column(dst, &z.column(src));
    }
    let lambda: Vec<Complex64> = order
        .iter()
        .map(|&k| raw[k] / raw[k].norm())
        .collect();
    let args: Vec<f64> = lambda.iter().map(|&l| principal_arg(l)).collect();

    let recon = linalg::spectral_product(&q, &lambda);
    let err = recon
        .iter()
        .zip(f.iter())
        .fold(0.0f64, |m, (r, x)| m.max((r - x).norm()));
    if err > 1e-9 * n as f64 {
        return Err(GlctError::NumericalFailure(format!(
            "GFT diagonalization residual {err:e} exceeds tolerance"
        )));
    }

    let mut h = Sha256::new();
    h.update(adj.adjacency_fingerprint);
    for l in &lambda {
        h.update(l.re.to_bits().to_le_bytes());
        h.update(l.im.to_bits().to_le_bytes());
    }
    for z in q.iter() {
        h.update(z.re.to_bits().to_le_bytes());
        h.update(z.im.to_bits().to_le_bytes());
    }
    let mut fingerprint = [0u8; 32];
    fingerprint.copy_from_slice(&h.finalize());

    Ok(GftSpectrum {
        adjacency: adj.clone(),
        f,
        q_split: SplitMatrix::new(&q),
        q,
        lambda,
        args,
        fingerprint,
    })
}

impl GftSpectrum {
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    /// `λ_k^p` for every eigenvalue.
    pub fn powers(&self, p: f64) -> Vec<Complex64> {
        self.args
            .iter()
            .map(|&a| Complex64::from_polar(1.0, p * a))
            .collect()
    }

    /// Diagonal used by the diagonal chirp strategies.
    fn chirp_diagonal(&self, xi: f64, strategy: ChirpStrategy) -> Vec<Complex64> {
        match strategy {
            ChirpStrategy::DiagonalLambdaOfA => {
                let n = self.n() as f64;
                (0..self.n())
                    .map(|k| Complex64::from_polar(1.0, PI * k as f64 * xi / n))
                    .collect()
            }
            _ => self.powers(xi),
        }
    }

    /// `F^p x` without forming `F^p`.
    pub fn apply_power(&self, p: f64, x: &[Complex64]) -> Vec<Complex64> {
        if p == 0.0 {
            return x.to_vec();
        }
        let mut y = self.q_split.adjoint_matvec(x);
        for (yk, &a) in y.iter_mut().zip(&self.args) {
            *yk *= Complex64::from_polar(1.0, p * a);
        }
        self.q_split.matvec(&y)
    }

    /// `C(ξ) x` without forming `C(ξ)`.
    pub fn apply_chirp(&self, xi: f64, strategy: ChirpStrategy, x: &[Complex64]) -> Vec<Complex64> {
        if xi == 0.0 {
            return x.to_vec();
        }
        match strategy {
            ChirpStrategy::SpectralPowerOfF => self.apply_power(xi, x),
            _ => x
                .iter()
                .zip(self.chirp_diagonal(xi, strategy))
                .map(|(a, b)| a * b)
                .collect(),
        }
    }
}

/// `F^p = Q diag(λ^p) Qᴴ`; `p = 0` gives the exact identity.
pub fn gft_power(gs: &GftSpectrum, p: f64) -> CMatrix {
    if p == 0.0 {
        return linalg::identity(gs.n());
    }
    linalg::spectral_product(&gs.q, &gs.powers(p))
}

/// Dense graph chirp multiplication `C(ξ)`; `ξ = 0` gives the exact identity.
pub fn graph_chirp_mul(gs: &GftSpectrum, xi: f64, strategy: ChirpStrategy) -> CMatrix {
    if xi == 0.0 {
        return linalg::identity(gs.n());
    }
    match strategy {
        ChirpStrategy::SpectralPowerOfF => gft_power(gs, xi),
        _ => {
            let d = gs.chirp_diagonal(xi, strategy);
            let mut m = CMatrix::from_element(gs.n(), gs.n(), ZERO);
            for (k, dk) in d.into_iter().enumerate() {
                m[(k, k)] = dk;
            }
            m
        }
    }
}

/// Exponent of `F` realizing a rotation by `alpha` radians: `2α/π`.
pub fn angle_to_exponent(alpha: f64) -> f64 {
    2.0 * alpha / PI
}

/// Graph fractional Fourier transform for rotation angle `alpha`.
pub fn gfrft(gs: &GftSpectrum, alpha: f64) -> CMatrix {
    gft_power(gs, angle_to_exponent(alpha))
}

#[derive(Debug, Clone)]
pub struct ScalingStage {
    pub delta: f64,
    pub q_delta: DMatrix<f64>,
    pub lambda_s: Vec<f64>,
}

/// Eigensystem of `S = A / δ`.
///
/// For `δ > 0` the adjacency eigenvectors are eigenvectors of `S` with
/// eigenvalues `Λ_A / δ`, in the same ascending order and under the same sign
/// rule, so the cached adjacency spectrum is reused.
pub fn scaling_stage(g: &Graph, delta: f64) -> Result<ScalingStage> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(GlctError::InvalidDelta(delta));
    }
    let spec = g.spectrum()?;
    let lambda_s: Vec<f64> = spec.eigenvalues.iter().map(|l| l / delta).collect();
    Ok(ScalingStage {
        delta,
        q_delta: spec.eigenvectors.clone(),
        lambda_s,
    })
}

impl ScalingStage {
    /// `max |(A/δ) Q_δ - Q_δ diag(Λ_S)|`.
    pub fn residual(&self, g: &Graph) -> f64 {
        let s = g.adjacency() / self.delta;
        let lhs = s * &self.q_delta;
        let mut rhs = self.q_delta.clone();
        for (j, l) in self.lambda_s.iter().enumerate() {
            rhs.column_mut(j).scale_mut(*l);
        }
        linalg::max_abs_real(&(lhs - rhs))
    }
}
