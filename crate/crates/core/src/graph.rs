//! Undirected weighted graphs, adjacency eigendecomposition and the GFT pair.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GlctError, Result};
use crate::linalg::{real_matvec, real_transpose_matvec};
use crate::spectral::{diagonalize_gft, GftSpectrum};

pub const SYMMETRY_TOL: f64 = 1e-12;
/// Relative magnitude gap below which two eigenvector entries tie for the sign rule.
const SIGN_TIE_TOL: f64 = 1e-12;

#[derive(Debug)]
pub struct Graph {
    adjacency: DMatrix<f64>,
    coords: Option<DMatrix<f64>>,
    fingerprint: [u8; 32],
    spectrum: OnceLock<Arc<AdjacencySpectrum>>,
    gft: OnceLock<Arc<GftSpectrum>>,
}

impl Clone for Graph {
    fn clone(&self) -> Self {
        Graph {
            adjacency: self.adjacency.clone(),
            coords: self.coords.clone(),
            fingerprint: self.fingerprint,
            spectrum: self.spectrum.clone(),
            gft: self.gft.clone(),
        }
    }
}

impl Graph {
    /// Validates symmetry, zero diagonal and `n >= 2`. Directed input is rejected.
    pub fn new(adjacency: DMatrix<f64>, coords: Option<DMatrix<f64>>) -> Result<Self> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n {
            return Err(GlctError::InvalidGraph(format!(
                "adjacency is {}x{}, not square",
                n,
                adjacency.ncols()
            )));
        }
        if n < 2 {
            return Err(GlctError::InvalidGraph(format!("need at least 2 nodes, got {n}")));
        }
        if adjacency.iter().any(|w| !w.is_finite()) {
            return Err(GlctError::InvalidGraph("non-finite weight".into()));
        }
        if let Some(i) = (0..n).find(|&i| adjacency[(i, i)] != 0.0) {
            return Err(GlctError::InvalidGraph(format!("nonzero diagonal at node {i}")));
        }
        let max_deviation = symmetry_deviation(&adjacency);
        if max_deviation > SYMMETRY_TOL {
            return Err(GlctError::NotSymmetric { max_deviation });
        }
        if let Some(c) = &coords {
            if c.nrows() != n {
                return Err(GlctError::DimensionMismatch {
                    expected: n,
                    actual: c.nrows(),
                });
            }
        }
        let fingerprint = fingerprint_matrix(&adjacency);
        Ok(Graph {
            adjacency,
            coords,
            fingerprint,
            spectrum: OnceLock::new(),
            gft: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn coords(&self) -> Option<&DMatrix<f64>> {
        self.coords.as_ref()
    }

    /// SHA-256 of the adjacency entries.
    pub fn fingerprint(&self) -> [u8; 32] {
        self.fingerprint
    }

    pub fn nonzeros(&self) -> usize {
        self.adjacency.iter().filter(|w| **w != 0.0).count()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && self.adjacency[(i, j)] != 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Adjacency eigensystem, computed once and shared.
    pub fn spectrum(&self) -> Result<Arc<AdjacencySpectrum>> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s.clone());
        }
        let s = Arc::new(eigendecompose_adjacency(self)?);
        Ok(self.spectrum.get_or_init(|| s).clone())
    }

    /// Unitary eigensystem of the GFT matrix, computed once and shared.
    pub fn gft_spectrum(&self) -> Result<Arc<GftSpectrum>> {
        if let Some(s) = self.gft.get() {
            return Ok(s.clone());
        }
        let s = Arc::new(diagonalize_gft(&self.spectrum()?)?);
        Ok(self.gft.get_or_init(|| s).clone())
    }
}

pub fn symmetry_deviation(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            dev = dev.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    dev
}

pub(crate) fn fingerprint_matrix(m: &DMatrix<f64>) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((m.nrows() as u64).to_le_bytes());
    h.update((m.ncols() as u64).to_le_bytes());
    for x in m.iter() {
        h.update(x.to_bits().to_le_bytes());
    }
    let out = h.finalize();
    let mut arr = [0u8; 32];
    arr.copy_from_slice(&out);
    arr
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencySpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub(crate) adjacency_fingerprint: [u8; 32],
}

impl AdjacencySpectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Symmetric eigendecomposition `A = V diag(Λ) Vᵀ`.
///
/// Eigenvalues are sorted ascending (index order on ties) and each
/// eigenvector is signed so its largest-magnitude entry is positive, taking
/// the lowest index among entries tied in magnitude.
pub fn eigendecompose_adjacency(g: &Graph) -> Result<AdjacencySpectrum> {
    let a = g.adjacency();
    let max_deviation = symmetry_deviation(a);
    if max_deviation > SYMMETRY_TOL {
        return Err(GlctError::NotSymmetric { max_deviation });
    }
    let n = a.nrows();
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .total_cmp(&eig.eigenvalues[j])
            .then(i.cmp(&j))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut v = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).clone_owned();
        if sign_anchor(col.as_slice()) < 0.0 {
            col.neg_mut();
        }
        v.set_column(dst, &col);
    }

    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let residual = a * &v - &v * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&eigenvalues));
    let res = residual.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if res > 1e-9 * scale * n as f64 && res > 0.0 {
        return Err(GlctError::NumericalFailure(format!(
            "adjacency eigen-residual {res:e} exceeds tolerance"
        )));
    }
    Ok(AdjacencySpectrum {
        eigenvalues,
        eigenvectors: v,
        adjacency_fingerprint: g.fingerprint(),
    })
}

/// Value of the entry that decides the column sign.
fn sign_anchor(col: &[f64]) -> f64 {
    let max = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    col.iter()
        .copied()
        .find(|x| x.abs() >= max * (1.0 - SIGN_TIE_TOL))
        .unwrap_or(0.0)
}

/// `F = Vᵀ`.
pub fn gft_matrix(spec: &AdjacencySpectrum) -> DMatrix<f64> {
    spec.eigenvectors.transpose()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSignal {
    pub values: Vec<Complex64>,
}

impl GraphSignal {
    pub fn new(values: Vec<Complex64>) -> Self {
        GraphSignal { values }
    }

    pub fn from_real(values: &[f64]) -> Self {
        GraphSignal {
            values: values.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        GraphSignal {
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        crate::linalg::norm_sqr(&self.values)
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(GlctError::DimensionMismatch {
                expected: n,
                actual: self.len(),
            });
        }
        Ok(())
    }
}

/// `x̂ = F x = Vᵀ x`.
pub fn gft(spec: &AdjacencySpectrum, x: &GraphSignal) -> Result<GraphSignal> {
    x.check_len(spec.n())?;
    Ok(GraphSignal::new(real_transpose_matvec(
        &spec.eigenvectors,
        &x.values,
    )))
}

/// `x = F⁻¹ x̂ = V x̂`.
pub fn igft(spec: &AdjacencySpectrum, xhat: &GraphSignal) -> Result<GraphSignal> {
    xhat.check_len(spec.n())?;
    Ok(GraphSignal::new(real_matvec(&spec.eigenvectors, &xhat.values)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diff_norm_sqr;
    use proptest::prelude::*;

    pub(crate) fn path(n: usize) -> Graph {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i + 1)] = 1.0;
            a[(i + 1, i)] = 1.0;
        }
        Graph::new(a, None).unwrap()
    }

    #[test]
    fn rejects_invalid_adjacency() {
        let mut a = DMatrix::zeros(3, 3);
        a[(0, 1)] = 1.0;
        assert!(matches!(Graph::new(a.clone(), None), Err(GlctError::NotSymmetric { .. })));
        a[(1, 0)] = 1.0;
        a[(2, 2)] = 1.0;
        assert!(matches!(Graph::new(a, None), Err(GlctError::InvalidGraph(_))));
        assert!(Graph::new(DMatrix::zeros(1, 1), None).is_err());
        assert!(Graph::new(DMatrix::zeros(2, 3), None).is_err());
    }

    #[test]
    fn two_node_path() {
        let s = eigendecompose_adjacency(&path(2)).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // λ = -1: (1, -1)/√2, first entry wins the magnitude tie. λ = 1: (1, 1)/√2.
        assert!((s.eigenvectors[(0, 0)] - h).abs() < 1e-14);
        assert!((s.eigenvectors[(1, 0)] + h).abs() < 1e-14);
        assert!((s.eigenvectors[(0, 1)] - h).abs() < 1e-14);
        assert!((s.eigenvectors[(1, 1)] - h).abs() < 1e-14);

        let f = gft_matrix(&s);
        assert_eq!(f, s.eigenvectors.transpose());
        let x = GraphSignal::from_real(&[h, h]);
        let xh = gft(&s, &x).unwrap();
        assert!(xh.values[0].norm() < 1e-15);
        assert!((xh.values[1].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_graph_gives_identity_basis() {
        let g = Graph::new(DMatrix::zeros(3, 3), None).unwrap();
        let s = eigendecompose_adjacency(&g).unwrap();
        assert_eq!(s.eigenvalues, vec![0.0, 0.0, 0.0]);
        assert_eq!(s.eigenvectors, DMatrix::identity(3, 3));
        assert_eq!(gft_matrix(&s), DMatrix::identity(3, 3));
    }

    #[test]
    fn three_node_path() {
        let s = eigendecompose_adjacency(&path(3)).unwrap();
        let r2 = 2f64.sqrt();
        for (got, want) in s.eigenvalues.iter().zip([-r2, 0.0, r2]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn decomposition_is_deterministic_and_cached() {
        let g = path(17);
        let a = eigendecompose_adjacency(&g).unwrap();
        let b = eigendecompose_adjacency(&g).unwrap();
        assert_eq!(a.eigenvectors, b.eigenvectors);
        assert_eq!(a.eigenvalues, b.eigenvalues);
        assert!(Arc::ptr_eq(&g.spectrum().unwrap(), &g.spectrum().unwrap()));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let s = eigendecompose_adjacency(&path(4)).unwrap();
        assert!(matches!(
            gft(&s, &GraphSignal::zeros(3)),
            Err(GlctError::DimensionMismatch { expected: 4, actual: 3 })
        ));
        assert!(igft(&s, &GraphSignal::zeros(5)).is_err());
        let z = gft(&s, &GraphSignal::zeros(4)).unwrap();
        assert!(z.values.iter().all(|v| v.norm() == 0.0));
    }

    fn random_graph(seed: u64, n: usize) -> Graph {
        let mut a = DMatrix::zeros(n, n);
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        for i in 0..n {
            for j in (i + 1)..n {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                if (state >> 33) % 3 == 0 {
                    let w = 0.5 + ((state >> 40) % 100) as f64 / 100.0;
                    a[(i, j)] = w;
                    a[(j, i)] = w;
                }
            }
        }
        Graph::new(a, None).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn spectrum_invariants(seed in any::<u64>(), n in 2usize..24) {
            let g = random_graph(seed, n);
            let s = eigendecompose_adjacency(&g).unwrap();
            let v = &s.eigenvectors;
            prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            let ortho = v.transpose() * v - DMatrix::identity(n, n);
            prop_assert!(ortho.iter().all(|x| x.abs() <= 1e-10));
            let recon = v * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&s.eigenvalues)) * v.transpose();
            let amax = g.adjacency().iter().fold(0.0f64, |m, x| m.max(x.abs()));
            prop_assert!((recon - g.adjacency()).iter().all(|x| x.abs() <= 1e-9 * amax.max(1e-300) * n as f64));
            let fv = gft_matrix(&s) * v - DMatrix::identity(n, n);
            prop_assert!(fv.iter().all(|x| x.abs() < 1e-10));
        }

        #[test]
        fn parseval_and_round_trip(seed in any::<u64>(), n in 2usize..24) {
            let g = random_graph(seed, n);
            let s = eigendecompose_adjacency(&g).unwrap();
            let x = GraphSignal::new((0..n).map(|k| Complex64::new(((seed as usize + k) % 7) as f64 - 3.0, (k % 3) as f64)).collect());
            let xh = gft(&s, &x).unwrap();
            let nx = x.norm_sqr().sqrt();
            prop_assert!((xh.norm_sqr().sqrt() - nx).abs() <= 1e-10 * nx.max(1e-300));
            let back = igft(&s, &xh).unwrap();
            prop_assert!(diff_norm_sqr(&back.values, &x.values) <= 1e-20 * x.norm_sqr().max(1e-300));
        }
    }
}
