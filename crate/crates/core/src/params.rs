//! Unimodular 2×2 parameter matrices and their factorizations.
//!
//! A [`ParamMatrix`] `(a, b, c, d)` with `ad - bc = 1` selects one transform.
//! The factorizations here map it onto the stage parameters consumed by the
//! transform builders:
//!
//! * shear · scale · rotation (`xi`, `delta`, `alpha`),
//! * chirp · convolution · chirp (`xi1`, `xi2`, `xi3`) for `b ≠ 0`,
//! * the two six-factor forms (`eta`, `mu`) for `b = 0`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GlctError, Result};

/// Tolerance on `|ad - bc - 1|` accepted at construction.
pub const UNIMODULAR_TOL: f64 = 1e-9;
/// Below this `|b|` the `b = 0` factorizations are used.
pub const B0_THRESHOLD: f64 = 1e-8;
/// Rejection bound on `|a|` and `|b|` for randomly sampled matrices.
pub const SAMPLE_MIN_ABS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ParamMatrix {
    #[serde(serialize_with = "crate::io::ser_f64_17")]
    pub a: f64,
    #[serde(serialize_with = "crate::io::ser_f64_17")]
    pub b: f64,
    #[serde(serialize_with = "crate::io::ser_f64_17")]
    pub c: f64,
    #[serde(serialize_with = "crate::io::ser_f64_17")]
    pub d: f64,
}

#[derive(Deserialize)]
struct RawParams {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl TryFrom<RawParams> for ParamMatrix {
    type Error = GlctError;

    fn try_from(r: RawParams) -> Result<Self> {
        make_param_matrix(r.a, r.b, r.c, r.d)
    }
}

impl std::fmt::Display for ParamMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {}, {})", self.a, self.b, self.c, self.d)
    }
}

pub fn make_param_matrix(a: f64, b: f64, c: f64, d: f64) -> Result<ParamMatrix> {
    let det = a * d - b * c;
    if !det.is_finite() || (det - 1.0).abs() > UNIMODULAR_TOL {
        return Err(GlctError::NotUnimodular { det });
    }
    Ok(ParamMatrix { a, b, c, d })
}

impl ParamMatrix {
    pub const IDENTITY: ParamMatrix = ParamMatrix {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };
    /// `(0, 1, -1, 0)`, the graph Fourier transform.
    pub const FOURIER: ParamMatrix = ParamMatrix {
        a: 0.0,
        b: 1.0,
        c: -1.0,
        d: 0.0,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        make_param_matrix(a, b, c, d)
    }

    pub fn rotation(alpha: f64) -> Self {
        let (s, c) = alpha.sin_cos();
        ParamMatrix {
            a: c,
            b: s,
            c: -s,
            d: c,
        }
    }

    /// Lower shear `(1, 0, xi, 1)`.
    pub fn chirp(xi: f64) -> Self {
        ParamMatrix {
            a: 1.0,
            b: 0.0,
            c: xi,
            d: 1.0,
        }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn max_abs_diff(&self, other: &ParamMatrix) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries())
            .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
    }

    pub fn is_b0(&self) -> bool {
        self.b.abs() < B0_THRESHOLD
    }

    /// Plain 2×2 product without the unimodularity check.
    fn product(m2: &ParamMatrix, m1: &ParamMatrix) -> ParamMatrix {
        ParamMatrix {
            a: m2.a * m1.a + m2.b * m1.c,
            b: m2.a * m1.b + m2.b * m1.d,
            c: m2.c * m1.a + m2.d * m1.c,
            d: m2.c * m1.b + m2.d * m1.d,
        }
    }
}

/// `m2 · m1`: the matrix of applying `m1` first, then `m2`.
pub fn multiply(m2: &ParamMatrix, m1: &ParamMatrix) -> ParamMatrix {
    ParamMatrix::product(m2, m1)
}

pub fn inverse(m: &ParamMatrix) -> ParamMatrix {
    ParamMatrix {
        a: m.d,
        b: -m.b,
        c: -m.c,
        d: m.a,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IwasawaParams {
    /// Chirp rate of the leading shear.
    pub xi: f64,
    /// Scaling factor, always positive.
    pub delta: f64,
    /// Rotation angle in radians, in `(-π, π]`.
    pub alpha: f64,
}

pub fn decompose_iwasawa(m: &ParamMatrix) -> IwasawaParams {
    let r2 = m.a * m.a + m.b * m.b;
    IwasawaParams {
        xi: (m.a * m.c + m.b * m.d) / r2,
        delta: r2.sqrt(),
        alpha: m.b.atan2(m.a),
    }
}

impl IwasawaParams {
    /// Multiplies the shear, scale and rotation factors back together.
    pub fn recompose(&self) -> ParamMatrix {
        let shear = ParamMatrix::chirp(self.xi);
        let scale = ParamMatrix {
            a: self.delta,
            b: 0.0,
            c: 0.0,
            d: 1.0 / self.delta,
        };
        let rot = ParamMatrix::rotation(self.alpha);
        ParamMatrix::product(&ParamMatrix::product(&shear, &scale), &rot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmCcCmParams {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
}

impl CmCcCmParams {
    pub fn sum(&self) -> f64 {
        self.xi1 + self.xi2 + self.xi3
    }

    /// Parameters of the factor-wise inverse: `(-xi3, -xi2, -xi1)`.
    pub fn negated(&self) -> CmCcCmParams {
        CmCcCmParams {
            xi1: -self.xi3,
            xi2: -self.xi2,
            xi3: -self.xi1,
        }
    }

    /// Product of the five factors `shear(xi1) · J⁻¹ · shear(xi2) · J · shear(xi3)`
    /// with `J = (0, 1, -1, 0)`.
    pub fn recompose(&self) -> ParamMatrix {
        let j = ParamMatrix::FOURIER;
        let j_inv = inverse(&j);
        [
            ParamMatrix::chirp(self.xi1),
            j_inv,
            ParamMatrix::chirp(self.xi2),
            j,
            ParamMatrix::chirp(self.xi3),
        ]
        .iter()
        .fold(ParamMatrix::IDENTITY, |acc, f| ParamMatrix::product(&acc, f))
    }
}

pub fn decompose_cmccm(m: &ParamMatrix) -> Result<CmCcCmParams> {
    if m.is_b0() {
        return Err(GlctError::BZero { b: m.b });
    }
    Ok(CmCcCmParams {
        xi1: (m.d - 1.0) / m.b,
        xi2: -m.b,
        xi3: (m.a - 1.0) / m.b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum B0Kind {
    Eta,
    Mu,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct B0Params {
    pub kind: B0Kind,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

pub fn decompose_b0(m: &ParamMatrix, kind: B0Kind) -> Result<B0Params> {
    if !m.is_b0() {
        return Err(GlctError::NotB0Case { b: m.b });
    }
    let (p1, p2, p3) = match kind {
        B0Kind::Eta => (1.0 / m.d, m.d, (m.c + 1.0) / m.d),
        B0Kind::Mu => ((m.c - 1.0) / m.a, -m.a, -1.0 / m.a),
    };
    Ok(B0Params { kind, p1, p2, p3 })
}

impl B0Params {
    /// Multiplies the six factors of the chosen form back together.
    pub fn recompose(&self) -> ParamMatrix {
        let j = ParamMatrix::FOURIER;
        let j_inv = inverse(&j);
        let factors = match self.kind {
            B0Kind::Eta => [
                j,
                ParamMatrix::chirp(self.p1),
                j_inv,
                ParamMatrix::chirp(self.p2),
                j,
                ParamMatrix::chirp(self.p3),
            ],
            B0Kind::Mu => [
                ParamMatrix::chirp(self.p1),
                j_inv,
                ParamMatrix::chirp(self.p2),
                j,
                ParamMatrix::chirp(self.p3),
                j_inv,
            ],
        };
        factors
            .iter()
            .fold(ParamMatrix::IDENTITY, |acc, f| ParamMatrix::product(&acc, f))
    }
}

/// `xi1 + xi2 + xi3 = (a + d - 2 - b²) / b`.
pub fn chirp_exponent_sum(m: &ParamMatrix) -> Result<f64> {
    if m.is_b0() {
        return Err(GlctError::BZero { b: m.b });
    }
    Ok((m.a + m.d - 2.0 - m.b * m.b) / m.b)
}

/// Closed interval the free entries `a`, `b`, `c` are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
}

impl Default for ParamRange {
    fn default() -> Self {
        ParamRange { lo: -2.0, hi: 2.0 }
    }
}

impl ParamRange {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(GlctError::Config(format!(
                "empty parameter range [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.lo.abs().max(self.hi.abs()) < SAMPLE_MIN_ABS {
            return Err(GlctError::Config(format!(
                "parameter range [{}, {}] never reaches |x| >= {SAMPLE_MIN_ABS}",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Draws `a, b, c` uniformly from `range` and solves `d = (1 + bc) / a`,
/// redrawing while `|a|` or `|b|` is below [`SAMPLE_MIN_ABS`].
pub fn sample_with<R: Rng + ?Sized>(rng: &mut R, range: ParamRange) -> ParamMatrix {
    loop {
        let a = rng.gen_range(range.lo..=range.hi);
        let b = rng.gen_range(range.lo..=range.hi);
        let c = rng.gen_range(range.lo..=range.hi);
        if a.abs() < SAMPLE_MIN_ABS || b.abs() < SAMPLE_MIN_ABS {
            continue;
        }
        let d = (1.0 + b * c) / a;
        return ParamMatrix { a, b, c, d };
    }
}

pub fn sample_random(seed: u64, range: ParamRange) -> Result<ParamMatrix> {
    range.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_with(&mut rng, range))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn pm(a: f64, b: f64, c: f64, d: f64) -> ParamMatrix {
        make_param_matrix(a, b, c, d).unwrap()
    }

    #[test]
    fn construction_checks_determinant() {
        assert_eq!(pm(1.0, 0.0, 0.0, 1.0), ParamMatrix::IDENTITY);
        assert!(make_param_matrix(0.0, 1.0, -1.0, 0.0).is_ok());
        assert!(matches!(
            make_param_matrix(1.0, 1.0, 1.0, 1.0),
            Err(GlctError::NotUnimodular { .. })
        ));
        assert!(make_param_matrix(f64::NAN, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn products() {
        let i = ParamMatrix::IDENTITY;
        assert_eq!(multiply(&i, &i), i);
        assert_eq!(
            multiply(&pm(1.0, 1.0, 0.0, 1.0), &pm(1.0, 0.0, 1.0, 1.0)),
            pm(2.0, 1.0, 1.0, 1.0)
        );
        assert_eq!(
            multiply(&pm(1.0, 1.0, 0.0, 1.0), &ParamMatrix::FOURIER),
            pm(-1.0, 1.0, -1.0, 0.0)
        );
    }

    #[test]
    fn inverses() {
        assert_eq!(inverse(&ParamMatrix::IDENTITY), ParamMatrix::IDENTITY);
        assert_eq!(
            inverse(&ParamMatrix::FOURIER).entries(),
            [0.0, -1.0, 1.0, 0.0]
        );
        assert_eq!(
            inverse(&pm(2.0, 1.0, 1.0, 1.0)).entries(),
            [1.0, -1.0, -1.0, 2.0]
        );
    }

    #[test]
    fn iwasawa_values() {
        let p = decompose_iwasawa(&ParamMatrix::IDENTITY);
        assert_eq!((p.xi, p.delta, p.alpha), (0.0, 1.0, 0.0));
        let p = decompose_iwasawa(&ParamMatrix::FOURIER);
        assert_eq!((p.xi, p.delta), (0.0, 1.0));
        assert!((p.alpha - FRAC_PI_2).abs() < 1e-15);
        let p = decompose_iwasawa(&pm(2.0, 0.0, 1.0, 0.5));
        assert_eq!((p.xi, p.delta, p.alpha), (0.5, 2.0, 0.0));
        // atan2 keeps the angle single valued on the far side of the circle.
        let p = decompose_iwasawa(&ParamMatrix::rotation(PI));
        assert!((p.alpha - PI).abs() < 1e-15);
    }

    #[test]
    fn cmccm_values() {
        let p = decompose_cmccm(&pm(1.0, 1.0, 0.0, 1.0)).unwrap();
        assert_eq!((p.xi1, p.xi2, p.xi3), (0.0, -1.0, 0.0));
        let p = decompose_cmccm(&ParamMatrix::FOURIER).unwrap();
        assert_eq!((p.xi1, p.xi2, p.xi3), (-1.0, -1.0, -1.0));
        assert!(matches!(
            decompose_cmccm(&ParamMatrix::IDENTITY),
            Err(GlctError::BZero { .. })
        ));
        for alpha in [0.3, 1.2, -2.0, 3.0] {
            let p = decompose_cmccm(&ParamMatrix::rotation(alpha)).unwrap();
            let t = -(alpha / 2.0).tan();
            assert!((p.xi1 - t).abs() < 1e-12);
            assert!((p.xi2 + alpha.sin()).abs() < 1e-12);
            assert!((p.xi3 - t).abs() < 1e-12);
        }
    }

    #[test]
    fn b0_values() {
        let i = ParamMatrix::IDENTITY;
        let e = decompose_b0(&i, B0Kind::Eta).unwrap();
        assert_eq!((e.p1, e.p2, e.p3), (1.0, 1.0, 1.0));
        let u = decompose_b0(&i, B0Kind::Mu).unwrap();
        assert_eq!((u.p1, u.p2, u.p3), (-1.0, -1.0, -1.0));
        let e = decompose_b0(&pm(2.0, 0.0, 1.0, 0.5), B0Kind::Eta).unwrap();
        assert_eq!((e.p1, e.p2, e.p3), (2.0, 0.5, 4.0));
        assert!(matches!(
            decompose_b0(&ParamMatrix::FOURIER, B0Kind::Eta),
            Err(GlctError::NotB0Case { .. })
        ));
    }

    #[test]
    fn b0_recompositions() {
        for m in [pm(2.0, 0.0, 1.0, 0.5), pm(-0.5, 0.0, 3.0, -2.0), ParamMatrix::IDENTITY] {
            for kind in [B0Kind::Eta, B0Kind::Mu] {
                let p = decompose_b0(&m, kind).unwrap();
                assert!(p.recompose().max_abs_diff(&m) < 1e-12, "{kind:?} {m}");
                match kind {
                    B0Kind::Eta => assert!((p.p1 * p.p2 - 1.0).abs() < 1e-9),
                    B0Kind::Mu => assert!((p.p2 * p.p3 - 1.0).abs() < 1e-9),
                }
            }
        }
    }

    #[test]
    fn exponent_sums() {
        assert_eq!(chirp_exponent_sum(&pm(1.0, 1.0, 0.0, 1.0)).unwrap(), -1.0);
        assert_eq!(chirp_exponent_sum(&ParamMatrix::FOURIER).unwrap(), -3.0);
        assert_eq!(chirp_exponent_sum(&pm(2.0, 1.0, 1.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn exponent_sum_is_not_additive_in_general() {
        let m1 = ParamMatrix::FOURIER;
        let m2 = pm(2.0, 0.5, 2.0, 1.0);
        // m2·m1 = (-0.5, 2, -1, 2): (-0.5 + 2 - 2 - 4) / 2 = -2.25.
        let total = chirp_exponent_sum(&multiply(&m2, &m1)).unwrap();
        // -3 + (2 + 1 - 2 - 0.25) / 0.5 = -1.5.
        let parts = chirp_exponent_sum(&m1).unwrap() + chirp_exponent_sum(&m2).unwrap();
        assert_eq!(total, -2.25);
        assert_eq!(parts, -1.5);
    }

    #[test]
    fn sampling_is_deterministic_and_bounded() {
        let r = ParamRange::default();
        assert_eq!(sample_random(7, r).unwrap(), sample_random(7, r).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let m = sample_with(&mut rng, r);
            assert!((m.det() - 1.0).abs() < 1e-12);
            assert!(m.b.abs() >= SAMPLE_MIN_ABS && m.a.abs() >= SAMPLE_MIN_ABS);
        }
        assert!(sample_random(1, ParamRange { lo: 1.0, hi: 1.0 }).is_err());
    }

    #[test]
    fn json_uses_seventeen_digits() {
        let m = pm(2.0, 1.0, 1.0, 1.0);
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("2.0000000000000000e0"), "{s}");
        let back: ParamMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ParamMatrix>(r#"{"a":1,"b":1,"c":1,"d":1}"#).is_err());
    }

    fn arb_matrix() -> impl Strategy<Value = ParamMatrix> {
        (any::<u64>()).prop_map(|s| sample_random(s, ParamRange::default()).unwrap())
    }

    proptest! {
        #[test]
        fn recompositions_reproduce_matrix(m in arb_matrix()) {
            prop_assert!(decompose_cmccm(&m).unwrap().recompose().max_abs_diff(&m) < 1e-9);
            prop_assert!(decompose_iwasawa(&m).recompose().max_abs_diff(&m) < 1e-9);
        }

        #[test]
        fn inverse_round_trip(m in arb_matrix()) {
            prop_assert!(multiply(&inverse(&m), &m).max_abs_diff(&ParamMatrix::IDENTITY) < 1e-12 * (1.0 + m.entries().iter().map(|x| x * x).sum::<f64>()));
        }

        #[test]
        fn inverse_negates_chirp_exponents(m in arb_matrix()) {
            let fwd = decompose_cmccm(&m).unwrap();
            let inv = decompose_cmccm(&inverse(&m)).unwrap();
            let neg = fwd.negated();
            prop_assert!((inv.xi1 - neg.xi1).abs() <= 1e-12);
            prop_assert!((inv.xi2 - neg.xi2).abs() <= 1e-12);
            prop_assert!((inv.xi3 - neg.xi3).abs() <= 1e-12);
        }

        #[test]
        fn exponent_sum_is_additive_on_upper_shears(b1 in 0.05f64..2.0, b2 in 0.05f64..2.0) {
            // (1, b, 0, 1) commute and their sums are -b, so the sum is additive there.
            let m1 = pm(1.0, b1, 0.0, 1.0);
            let m2 = pm(1.0, b2, 0.0, 1.0);
            let total = chirp_exponent_sum(&multiply(&m2, &m1)).unwrap();
            let parts = chirp_exponent_sum(&m1).unwrap() + chirp_exponent_sum(&m2).unwrap();
            prop_assert!((total - parts).abs() <= 1e-12 * (1.0 + total.abs()));
        }
    }
}
