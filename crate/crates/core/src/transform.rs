//! GLCT operators.
//!
//! An operator is kept in staged form: a list of factors in application
//! order (the rightmost matrix factor first). [`GlctOperator::apply`] runs the
//! stages on a vector in `O(n²)` per stage; [`GlctOperator::matrix`] composes
//! them into the dense `n × n` matrix on first use.
//!
//! Recipes:
//!
//! * `CmccmBnz`: `C(ξ1) F⁻¹ C(ξ2) F C(ξ3)` for `|b| ≥ B0_THRESHOLD`.
//! * `CmccmB0Eta`: `e^{-iπ/4} F C(η1) F⁻¹ C(η2) F C(η3)`.
//! * `CmccmB0Mu`: `e^{iπ/4} C(μ1) F⁻¹ C(μ2) F C(μ3) F⁻¹`.
//! * `Cddhfs`: `C(ξ) Q_δ diag(λ^{2α/π}) Qᴴ` from the shear/scale/rotation
//!   factorization. `Q_δ` is real and `Q` complex, so this operator does not
//!   reduce to a power of `F` and is not additive.
//! * `SpecialDispatch`: identity, `F`, `F⁻¹` and pure chirps.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_4;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::error::{GlctError, Result};
use crate::graph::{Graph, GraphSignal};
use crate::linalg::{self, CMatrix, ONE};
use crate::params::{
    decompose_b0, decompose_cmccm, decompose_iwasawa, inverse, B0Kind, B0Params, CmCcCmParams,
    IwasawaParams, ParamMatrix,
};
use crate::spectral::{angle_to_exponent, scaling_stage, ChirpStrategy, GftSpectrum};

/// Entry-wise tolerance for recognizing the special-case matrices.
pub const DISPATCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Recipe {
    Cddhfs,
    CmccmBnz,
    CmccmB0Eta,
    CmccmB0Mu,
    SpecialDispatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DispatchKind {
    Identity,
    Gft,
    Igft,
    Chirp(f64),
}

/// Which construction to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "CDDHFs")]
    Cddhfs,
    #[serde(rename = "CMCCM")]
    Cmccm,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Cddhfs => "CDDHFs",
            Method::Cmccm => "CMCCM",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = GlctError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "cddhfs" | "iwasawa" => Ok(Method::Cddhfs),
            "cmccm" | "cmcccm" => Ok(Method::Cmccm),
            _ => Err(GlctError::Parse(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decomposition {
    None,
    CmCcCm(CmCcCmParams),
    B0(B0Params),
    Iwasawa(IwasawaParams),
}

/// One factor of a staged operator.
#[derive(Debug, Clone)]
pub enum Stage {
    Phase(Complex64),
    /// `F = Vᵀ`.
    Gft,
    /// `F⁻¹ = V`.
    Igft,
    /// `C(ξ)` under the operator's strategy.
    Chirp(f64),
    Diagonal(Vec<Complex64>),
    /// Real dense factor, e.g. the scaling-stage basis `Q_δ`.
    Real(Arc<DMatrix<f64>>),
    /// `Qᴴ`, adjoint of the unitary eigenbasis of `F`.
    QAdjoint,
}

impl Stage {
    pub fn label(&self) -> String {
        match self {
            Stage::Phase(z) => format!("phase({:.6}{:+.6}i)", z.re, z.im),
            Stage::Gft => "F".into(),
            Stage::Igft => "F^-1".into(),
            Stage::Chirp(xi) => format!("C({xi})"),
            Stage::Diagonal(_) => "diag".into(),
            Stage::Real(_) => "Q_delta".into(),
            Stage::QAdjoint => "Q^H".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub b0_kind: B0Kind,
    pub dispatch: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            b0_kind: B0Kind::Eta,
            dispatch: true,
        }
    }
}

#[derive(Debug)]
pub struct GlctOperator {
    spectrum: Arc<GftSpectrum>,
    pub recipe: Recipe,
    pub params: ParamMatrix,
    pub strategy: ChirpStrategy,
    pub phase: Complex64,
    pub decomposition: Decomposition,
    pub dispatch: Option<DispatchKind>,
    stages: Vec<Stage>,
    dense: OnceLock<CMatrix>,
}

/// JSON sidecar describing how an operator was built.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorMetadata {
    pub recipe: Recipe,
    pub params: ParamMatrix,
    pub strategy: ChirpStrategy,
    pub phase: [f64; 2],
    pub decomposition: Decomposition,
    pub dispatch: Option<DispatchKind>,
    /// Factors from left to right, as the matrix product is written.
    pub stages: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotation_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub spectrum_fingerprint: String,
}

impl GlctOperator {
    fn new(
        spectrum: Arc<GftSpectrum>,
        recipe: Recipe,
        params: ParamMatrix,
        strategy: ChirpStrategy,
        decomposition: Decomposition,
        stages: Vec<Stage>,
    ) -> Self {
        let phase = stages
            .iter()
            .filter_map(|s| match s {
                Stage::Phase(z) => Some(*z),
                _ => None,
            })
            .fold(ONE, |acc, z| acc * z);
        GlctOperator {
            spectrum,
            recipe,
            params,
            strategy,
            phase,
            decomposition,
            dispatch: None,
            stages,
            dense: OnceLock::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.spectrum.n()
    }

    pub fn spectrum(&self) -> &Arc<GftSpectrum> {
        &self.spectrum
    }

    /// Factors in application order (first applied first).
    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Dense operator matrix, composed from the stages on first call.
    pub fn matrix(&self) -> &CMatrix {
        self.dense.get_or_init(|| {
            let mut acc: Option<CMatrix> = None;
            for stage in &self.stages {
                acc = Some(self.left_multiply(stage, acc));
            }
            acc.unwrap_or_else(|| linalg::identity(self.n()))
        })
    }

    /// Dense matrix of every stage, in application order.
    pub fn stage_matrices(&self) -> Vec<CMatrix> {
        self.stages
            .iter()
            .map(|s| self.left_multiply(s, None))
            .collect()
    }

    /// `O x`, evaluated stage by stage.
    pub fn apply(&self, x: &GraphSignal) -> Result<GraphSignal> {
        x.check_len(self.n())?;
        let mut v = x.values.clone();
        for stage in &self.stages {
            v = self.apply_stage(stage, &v);
        }
        Ok(GraphSignal::new(v))
    }

    fn apply_stage(&self, stage: &Stage, x: &[Complex64]) -> Vec<Complex64> {
        let gs = &self.spectrum;
        match stage {
            Stage::Phase(z) => x.iter().map(|v| v * z).collect(),
            Stage::Gft => linalg::real_transpose_matvec(&gs.adjacency.eigenvectors, x),
            Stage::Igft => linalg::real_matvec(&gs.adjacency.eigenvectors, x),
            Stage::Chirp(xi) => gs.apply_chirp(*xi, self.strategy, x),
            Stage::Diagonal(d) => x.iter().zip(d).map(|(a, b)| a * b).collect(),
            Stage::Real(m) => linalg::real_matvec(m, x),
            Stage::QAdjoint => gs.q_split.adjoint_matvec(x),
        }
    }

    /// `stage · acc`, with `None` standing for the identity.
    fn left_multiply(&self, stage: &Stage, acc: Option<CMatrix>) -> CMatrix {
        let gs = &self.spectrum;
        let n = self.n();
        let scale_rows = |mut m: CMatrix, d: &[Complex64]| {
            for (i, di) in d.iter().enumerate() {
                for z in m.row_mut(i).iter_mut() {
                    *z *= di;
                }
            }
            m
        };
        match stage {
            Stage::Phase(z) => acc.unwrap_or_else(|| linalg::identity(n)) * *z,
            Stage::Gft => match acc {
                None => linalg::to_complex(&gs.f),
                Some(m) => linalg::rmul(&gs.f, &m),
            },
            Stage::Igft => match acc {
                None => linalg::to_complex(&gs.adjacency.eigenvectors),
                Some(m) => linalg::rmul(&gs.adjacency.eigenvectors, &m),
            },
            Stage::Chirp(xi) => {
                if *xi == 0.0 {
                    return acc.unwrap_or_else(|| linalg::identity(n));
                }
                match self.strategy {
                    ChirpStrategy::SpectralPowerOfF => {
                        let powers = gs.powers(*xi);
                        match acc {
                            None => linalg::spectral_product(&gs.q, &powers),
                            Some(m) => {
                                let inner = scale_rows(linalg::cmul(&gs.q.adjoint(), &m), &powers);
                                linalg::cmul(&gs.q, &inner)
                            }
                        }
                    }
                    s => {
                        let d = crate::spectral::graph_chirp_mul(gs, *xi, s).diagonal();
                        scale_rows(acc.unwrap_or_else(|| linalg::identity(n)), d.as_slice())
                    }
                }
            }
            Stage::Diagonal(d) => scale_rows(acc.unwrap_or_else(|| linalg::identity(n)), d),
            Stage::Real(r) => match acc {
                None => linalg::to_complex(r),
                Some(m) => linalg::rmul(r, &m),
            },
            Stage::QAdjoint => match acc {
                None => gs.q.adjoint(),
                Some(m) => linalg::cmul(&gs.q.adjoint(), &m),
            },
        }
    }

    pub fn metadata(&self) -> OperatorMetadata {
        let (rotation_exponent, note) = match (self.recipe, self.decomposition) {
            (Recipe::Cddhfs, Decomposition::Iwasawa(p)) => (
                Some(angle_to_exponent(p.alpha)),
                Some(
                    "rotation stage uses exponent 2*alpha/pi; literal form C(xi) Q_delta diag(lambda^e) Q^H, \
                     Q_delta real and Q complex, generally not additive"
                        .to_string(),
                ),
            ),
            (Recipe::CmccmB0Mu, _) => (
                None,
                Some("mu form uses phase sqrt(i) = exp(i*pi/4)".to_string()),
            ),
            _ => (None, None),
        };
        OperatorMetadata {
            recipe: self.recipe,
            params: self.params,
            strategy: self.strategy,
            phase: [self.phase.re, self.phase.im],
            decomposition: self.decomposition,
            dispatch: self.dispatch,
            stages: self.stages.iter().rev().map(Stage::label).collect(),
            rotation_exponent,
            note,
            spectrum_fingerprint: crate::graph::hex(&self.spectrum.fingerprint),
        }
    }
}

/// Recognizes identity, `F`, `F⁻¹` and pure chirps `(1, 0, ξ, 1)`.
pub fn special_dispatch(m: &ParamMatrix) -> Option<DispatchKind> {
    let close = |x: f64, y: f64| (x - y).abs() <= DISPATCH_TOL;
    let e = m.entries();
    let is = |t: [f64; 4]| e.iter().zip(t).all(|(x, y)| close(*x, y));
    if is([1.0, 0.0, 0.0, 1.0]) {
        Some(DispatchKind::Identity)
    } else if is([0.0, 1.0, -1.0, 0.0]) {
        Some(DispatchKind::Gft)
    } else if is([0.0, -1.0, 1.0, 0.0]) {
        Some(DispatchKind::Igft)
    } else if close(m.a, 1.0) && close(m.b, 0.0) && close(m.d, 1.0) {
        Some(DispatchKind::Chirp(m.c))
    } else {
        None
    }
}

fn dispatched(
    gs: &Arc<GftSpectrum>,
    m: &ParamMatrix,
    strategy: ChirpStrategy,
    kind: DispatchKind,
) -> GlctOperator {
    let stages = match kind {
        DispatchKind::Identity => vec![],
        DispatchKind::Gft => vec![Stage::Gft],
        DispatchKind::Igft => vec![Stage::Igft],
        DispatchKind::Chirp(xi) => vec![Stage::Chirp(xi)],
    };
    let mut op = GlctOperator::new(
        gs.clone(),
        Recipe::SpecialDispatch,
        *m,
        strategy,
        Decomposition::None,
        stages,
    );
    op.dispatch = Some(kind);
    op
}

fn cmccm_stages(p: &CmCcCmParams) -> Vec<Stage> {
    vec![
        Stage::Chirp(p.xi3),
        Stage::Gft,
        Stage::Chirp(p.xi2),
        Stage::Igft,
        Stage::Chirp(p.xi1),
    ]
}

pub fn build_cmccm(gs: &Arc<GftSpectrum>, m: &ParamMatrix, strategy: ChirpStrategy) -> Result<GlctOperator> {
    build_cmccm_with(gs, m, strategy, BuildOptions::default())
}

pub fn build_cmccm_with(
    gs: &Arc<GftSpectrum>,
    m: &ParamMatrix,
    strategy: ChirpStrategy,
    opts: BuildOptions,
) -> Result<GlctOperator> {
    if opts.dispatch {
        if let Some(kind) = special_dispatch(m) {
            return Ok(dispatched(gs, m, strategy, kind));
        }
    }
    if !m.is_b0() {
        let p = decompose_cmccm(m)?;
        return Ok(GlctOperator::new(
            gs.clone(),
            Recipe::CmccmBnz,
            *m,
            strategy,
            Decomposition::CmCcCm(p),
            cmccm_stages(&p),
        ));
    }
    let p = decompose_b0(m, opts.b0_kind)?;
    let (recipe, stages) = match opts.b0_kind {
        B0Kind::Eta => (
            Recipe::CmccmB0Eta,
            vec![
                Stage::Chirp(p.p3),
                Stage::Gft,
                Stage::Chirp(p.p2),
                Stage::Igft,
                Stage::Chirp(p.p1),
                Stage::Gft,
                Stage::Phase(Complex64::from_polar(1.0, -FRAC_PI_4)),
            ],
        ),
        B0Kind::Mu => (
            Recipe::CmccmB0Mu,
            vec![
                Stage::Igft,
                Stage::Chirp(p.p3),
                Stage::Gft,
                Stage::Chirp(p.p2),
                Stage::Igft,
                Stage::Chirp(p.p1),
                Stage::Phase(Complex64::from_polar(1.0, FRAC_PI_4)),
            ],
        ),
    };
    Ok(GlctOperator::new(
        gs.clone(),
        recipe,
        *m,
        strategy,
        Decomposition::B0(p),
        stages,
    ))
}

pub fn build_cddhfs(
    g: &Graph,
    gs: &Arc<GftSpectrum>,
    m: &ParamMatrix,
    strategy: ChirpStrategy,
) -> Result<GlctOperator> {
    if special_dispatch(m) == Some(DispatchKind::Identity) {
        return Ok(dispatched(gs, m, strategy, DispatchKind::Identity));
    }
    let p = decompose_iwasawa(m);
    let scaling = scaling_stage(g, p.delta)?;
    let rotation = gs.powers(angle_to_exponent(p.alpha));
    let stages = vec![
        Stage::QAdjoint,
        Stage::Diagonal(rotation),
        Stage::Real(Arc::new(scaling.q_delta)),
        Stage::Chirp(p.xi),
    ];
    Ok(GlctOperator::new(
        gs.clone(),
        Recipe::Cddhfs,
        *m,
        strategy,
        Decomposition::Iwasawa(p),
        stages,
    ))
}

/// Builds the operator for `method`.
pub fn build(
    method: Method,
    g: &Graph,
    gs: &Arc<GftSpectrum>,
    m: &ParamMatrix,
    strategy: ChirpStrategy,
) -> Result<GlctOperator> {
    match method {
        Method::Cddhfs => build_cddhfs(g, gs, m, strategy),
        Method::Cmccm => build_cmccm(gs, m, strategy),
    }
}

pub fn apply(op: &GlctOperator, x: &GraphSignal) -> Result<GraphSignal> {
    op.apply(x)
}

/// Factor-wise inverse `C(-ξ3) F⁻¹ C(-ξ2) F C(-ξ1)` of a `b ≠ 0` operator.
pub fn inverse_by_negation(op: &GlctOperator) -> Result<GlctOperator> {
    let p = match (op.recipe, op.decomposition) {
        (Recipe::CmccmBnz, Decomposition::CmCcCm(p)) => p,
        (r, _) => return Err(GlctError::UnsupportedRecipe(format!("{r:?}"))),
    };
    let neg = p.negated();
    Ok(GlctOperator::new(
        op.spectrum.clone(),
        Recipe::CmccmBnz,
        inverse(&op.params),
        op.strategy,
        Decomposition::CmCcCm(neg),
        cmccm_stages(&neg),
    ))
}

/// Inverse built as the forward transform of `(d, -b, -c, a)`.
pub fn inverse_by_params(
    gs: &Arc<GftSpectrum>,
    m: &ParamMatrix,
    strategy: ChirpStrategy,
) -> Result<GlctOperator> {
    build_cmccm(gs, &inverse(m), strategy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FresnelParams {
    pub wavelength: f64,
    pub distance: f64,
}

impl FresnelParams {
    pub fn param_matrix(&self) -> Result<ParamMatrix> {
        if !(self.wavelength > 0.0) || !(self.wavelength * self.distance).is_finite() {
            return Err(GlctError::Config(format!(
                "invalid Fresnel parameters: wavelength {}, distance {}",
                self.wavelength, self.distance
            )));
        }
        Ok(ParamMatrix {
            a: 1.0,
            b: self.wavelength * self.distance,
            c: 0.0,
            d: 1.0,
        })
    }
}

/// `(1, λz, 0, 1)` through the general path: `F⁻¹ C(-λz) F`.
pub fn fresnel(gs: &Arc<GftSpectrum>, fp: &FresnelParams, strategy: ChirpStrategy) -> Result<GlctOperator> {
    build_cmccm(gs, &fp.param_matrix()?, strategy)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub fingerprint: [u8; 32],
    pub params: [u64; 4],
    pub strategy: ChirpStrategy,
    pub method: Method,
    pub options: (B0Kind, bool),
}

impl CacheKey {
    pub fn new(gs: &GftSpectrum, m: &ParamMatrix, strategy: ChirpStrategy, method: Method, opts: BuildOptions) -> Self {
        CacheKey {
            fingerprint: gs.fingerprint,
            params: m.entries().map(f64::to_bits),
            strategy,
            method,
            options: (opts.b0_kind, opts.dispatch),
        }
    }
}

/// Shared operator cache keyed on spectrum fingerprint, parameters, strategy
/// and construction. Concurrent builders of the same key may both build; the
/// later insert wins and both results are identical.
#[derive(Debug, Default)]
pub struct OperatorCache {
    map: RwLock<HashMap<CacheKey, Arc<GlctOperator>>>,
}

impl OperatorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_build<F>(&self, key: CacheKey, build: F) -> Result<Arc<GlctOperator>>
    where
        F: FnOnce() -> Result<GlctOperator>,
    {
        if let Some(op) = self.map.read().get(&key) {
            return Ok(op.clone());
        }
        let op = Arc::new(build()?);
        self.map.write().insert(key, op.clone());
        Ok(op)
    }

    pub fn clear(&self) {
        self.map.write().clear();
    }
}
