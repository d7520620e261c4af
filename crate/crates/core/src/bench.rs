//! NMSE experiments and the operation-count model.
//!
//! Every run `r` draws its parameter matrices from a ChaCha stream selected by
//! `(seed, r)`, so a run sees the same matrices on every graph and for every
//! method, and results do not depend on scheduling.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GlctError, Result};
use crate::generators::{bipolar_rectangular, generate, GeneratorSpec, GraphKind};
use crate::graph::{Graph, GraphSignal};
use crate::io::fmt17;
use crate::linalg;
use crate::params::{inverse, multiply, B0Kind, sample_with, ParamMatrix, ParamRange, SAMPLE_MIN_ABS};
use crate::spectral::{ChirpStrategy, GftSpectrum};
use crate::transform::{
    build, build_cmccm_with, inverse_by_negation, BuildOptions, GlctOperator, Method, Recipe,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Additivity,
    Reversibility,
    /// Disagreement between the eta and mu `b = 0` forms on `(a, 0, c, 1/a)`.
    B0Forms,
}

/// Where the parameter matrices come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    Random,
    Identity,
}

/// A corpus graph by kind (default spec) or a full generator spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSel {
    Kind(GraphKind),
    Spec(GeneratorSpec),
}

impl GraphSel {
    pub fn spec(&self) -> GeneratorSpec {
        match self {
            GraphSel::Kind(k) => GeneratorSpec::corpus_default(*k),
            GraphSel::Spec(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(Method),
    Many(Vec<Method>),
}

fn one_or_many<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<Method>, D::Error> {
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(m) => vec![m],
        OneOrMany::Many(v) => v,
    })
}

fn all_graphs() -> Vec<GraphSel> {
    GraphKind::ALL.into_iter().map(GraphSel::Kind).collect()
}

fn all_methods() -> Vec<Method> {
    vec![Method::Cddhfs, Method::Cmccm]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub experiment: Experiment,
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "all_graphs")]
    pub graphs: Vec<GraphSel>,
    #[serde(default = "all_methods", alias = "method", deserialize_with = "one_or_many")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub strategy: ChirpStrategy,
    #[serde(default)]
    pub range: ParamRange,
    #[serde(default)]
    pub sampling: Sampling,
}

impl BenchConfig {
    pub fn new(experiment: Experiment, runs: usize, seed: u64) -> Self {
        BenchConfig {
            experiment,
            runs,
            seed,
            graphs: all_graphs(),
            methods: all_methods(),
            strategy: ChirpStrategy::default(),
            range: ParamRange::default(),
            sampling: Sampling::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(GlctError::Config("runs must be at least 1".into()));
        }
        if self.graphs.is_empty() || self.methods.is_empty() {
            return Err(GlctError::Config("graphs and methods must be nonempty".into()));
        }
        self.range.validate()
    }
}

/// Matrices drawn for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub run: usize,
    pub m1: ParamMatrix,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m2: Option<ParamMatrix>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Series {
    pub graph: String,
    pub n: usize,
    pub method: Method,
    /// NMSE per run, in run order.
    pub nmse: Vec<f64>,
    pub sorted: Vec<f64>,
    pub mean: f64,
    /// Additivity: the swapped pairing. Reversibility: the factor-negation
    /// inverse (CM-CC-CM only). Empty when not applicable.
    pub diagnostic: Vec<f64>,
    pub diagnostic_mean: Option<f64>,
    /// Wall-clock seconds; excluded from every CSV.
    #[serde(skip)]
    pub seconds: f64,
}

/// Equality ignores timings.
impl PartialEq for Series {
    fn eq(&self, o: &Self) -> bool {
        (&self.graph, self.n, self.method, &self.nmse, &self.sorted, self.mean, &self.diagnostic, self.diagnostic_mean)
            == (&o.graph, o.n, o.method, &o.nmse, &o.sorted, o.mean, &o.diagnostic, o.diagnostic_mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub config: BenchConfig,
    pub params: Vec<RunParams>,
    pub series: Vec<Series>,
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `Σ|reference − estimate|² / Σ|reference|²`.
pub fn nmse(reference: &[num_complex::Complex64], estimate: &[num_complex::Complex64]) -> Result<f64> {
    let den = linalg::norm_sqr(reference);
    if !(den > 0.0) {
        return Err(GlctError::DegenerateDenominator);
    }
    Ok(linalg::diff_norm_sqr(reference, estimate) / den)
}

/// Builds the forward operator for a parameter matrix.
pub trait TransformBuilder {
    fn build(&self, m: &ParamMatrix) -> Result<GlctOperator>;
}

/// `method` on a fixed graph and strategy.
pub struct MethodBuilder<'a> {
    pub method: Method,
    pub graph: &'a Graph,
    pub spectrum: &'a Arc<GftSpectrum>,
    pub strategy: ChirpStrategy,
}

impl TransformBuilder for MethodBuilder<'_> {
    fn build(&self, m: &ParamMatrix) -> Result<GlctOperator> {
        build(self.method, self.graph, self.spectrum, m, self.strategy)
    }
}

/// Additivity NMSE: reference `O^{M1·M2} x` against `O^{M1}(O^{M2} x)`.
pub fn nmse_additivity<T: TransformBuilder + ?Sized>(
    t: &T,
    m1: &ParamMatrix,
    m2: &ParamMatrix,
    x: &GraphSignal,
) -> Result<f64> {
    let composed = t.build(m1)?.apply(&t.build(m2)?.apply(x)?)?;
    let reference = t.build(&multiply(m1, m2))?.apply(x)?;
    nmse(&reference.values, &composed.values)
}

/// Reversibility NMSE: `x` against `O^{M⁻¹}(O^{M} x)`.
pub fn nmse_reversibility<T: TransformBuilder + ?Sized>(t: &T, m: &ParamMatrix, x: &GraphSignal) -> Result<f64> {
    let back = t.build(&inverse(m))?.apply(&t.build(m)?.apply(x)?)?;
    nmse(&x.values, &back.values)
}

fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

fn passes(m: &ParamMatrix) -> bool {
    m.a.abs() >= SAMPLE_MIN_ABS && m.b.abs() >= SAMPLE_MIN_ABS
}

/// Parameter matrices for run `run`.
pub fn run_params(cfg: &BenchConfig, run: usize) -> RunParams {
    let two = cfg.experiment == Experiment::Additivity;
    if cfg.sampling == Sampling::Identity {
        return RunParams {
            run,
            m1: ParamMatrix::IDENTITY,
            m2: two.then_some(ParamMatrix::IDENTITY),
        };
    }
    let mut rng = run_rng(cfg.seed, run);
    match cfg.experiment {
        Experiment::Reversibility => RunParams {
            run,
            m1: sample_with(&mut rng, cfg.range),
            m2: None,
        },
        Experiment::Additivity => loop {
            let m1 = sample_with(&mut rng, cfg.range);
            let m2 = sample_with(&mut rng, cfg.range);
            if passes(&multiply(&m1, &m2)) {
                break RunParams { run, m1, m2: Some(m2) };
            }
        },
        Experiment::B0Forms => loop {
            let a: f64 = rng.gen_range(cfg.range.lo..=cfg.range.hi);
            let c: f64 = rng.gen_range(cfg.range.lo..=cfg.range.hi);
            if a.abs() >= SAMPLE_MIN_ABS {
                let m1 = ParamMatrix { a, b: 0.0, c, d: 1.0 / a };
                break RunParams { run, m1, m2: None };
            }
        },
    }
}

/// Primary and diagnostic NMSE for one run.
fn measure(
    cfg: &BenchConfig,
    method: Method,
    g: &Graph,
    gs: &Arc<GftSpectrum>,
    p: &RunParams,
    x: &GraphSignal,
) -> Result<(f64, Option<f64>)> {
    let t = MethodBuilder {
        method,
        graph: g,
        spectrum: gs,
        strategy: cfg.strategy,
    };
    match cfg.experiment {
        Experiment::Additivity => {
            let m2 = p.m2.expect("additivity runs carry two matrices");
            let composed = t.build(&p.m1)?.apply(&t.build(&m2)?.apply(x)?)?;
            let reference = t.build(&multiply(&p.m1, &m2))?.apply(x)?;
            let swapped = t.build(&multiply(&m2, &p.m1))?.apply(x)?;
            Ok((
                nmse(&reference.values, &composed.values)?,
                Some(nmse(&swapped.values, &composed.values)?),
            ))
        }
        Experiment::Reversibility => {
            let forward = t.build(&p.m1)?;
            let y = forward.apply(x)?;
            let back = t.build(&inverse(&p.m1))?.apply(&y)?;
            let primary = nmse(&x.values, &back.values)?;
            let diag = if forward.recipe == Recipe::CmccmBnz {
                let back = inverse_by_negation(&forward)?.apply(&y)?;
                Some(nmse(&x.values, &back.values)?)
            } else {
                None
            };
            Ok((primary, diag))
        }
        Experiment::B0Forms => {
            let opts = |b0_kind| BuildOptions { b0_kind, dispatch: true };
            let eta = build_cmccm_with(gs, &p.m1, cfg.strategy, opts(B0Kind::Eta))?.apply(x)?;
            let mu = build_cmccm_with(gs, &p.m1, cfg.strategy, opts(B0Kind::Mu))?.apply(x)?;
            Ok((nmse(&eta.values, &mu.values)?, None))
        }
    }
}

/// Runs `cfg` over pre-built graphs (`(label, graph)` pairs).
pub fn run_on_graphs(cfg: &BenchConfig, graphs: &[(String, Graph)]) -> Result<BenchResult> {
    cfg.validate()?;
    let params: Vec<RunParams> = (0..cfg.runs).map(|r| run_params(cfg, r)).collect();
    let methods: Vec<Method> = if cfg.experiment == Experiment::B0Forms {
        vec![Method::Cmccm]
    } else {
        cfg.methods.clone()
    };
    let mut series = Vec::new();
    for (label, g) in graphs {
        let gs = g.gft_spectrum()?;
        let x = bipolar_rectangular(g);
        for &method in &methods {
            let start = Instant::now();
            let out: Vec<(f64, Option<f64>)> = params
                .par_iter()
                .map(|p| measure(cfg, method, g, &gs, p, &x))
                .collect::<Result<_>>()?;
            let nmse: Vec<f64> = out.iter().map(|o| o.0).collect();
            let diagnostic: Vec<f64> = out.iter().filter_map(|o| o.1).collect();
            let mut sorted = nmse.clone();
            sorted.sort_by(f64::total_cmp);
            series.push(Series {
                graph: label.clone(),
                n: g.n(),
                method,
                mean: mean(&nmse),
                sorted,
                diagnostic_mean: (!diagnostic.is_empty()).then(|| mean(&diagnostic)),
                diagnostic,
                nmse,
                seconds: start.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(BenchResult {
        config: cfg.clone(),
        params,
        series,
    })
}

/// Generates the configured graphs and runs the experiment.
pub fn run_experiment(cfg: &BenchConfig) -> Result<BenchResult> {
    cfg.validate()?;
    let graphs = cfg
        .graphs
        .iter()
        .map(|sel| {
            let spec = sel.spec();
            Ok((spec.kind.name().to_string(), generate(&spec)?))
        })
        .collect::<Result<Vec<_>>>()?;
    run_on_graphs(cfg, &graphs)
}

impl BenchResult {
    pub fn series(&self, graph: &str, method: Method) -> Option<&Series> {
        self.series.iter().find(|s| s.graph == graph && s.method == method)
    }

    /// `rank,run,nmse,diagnostic`, ascending in NMSE.
    pub fn write_curve<W: Write>(&self, s: &Series, w: W) -> Result<()> {
        let mut order: Vec<usize> = (0..s.nmse.len()).collect();
        order.sort_by(|&i, &j| s.nmse[i].total_cmp(&s.nmse[j]).then(i.cmp(&j)));
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["rank", "run", "nmse", "diagnostic"]).map_err(csv_io)?;
        for (rank, &i) in order.iter().enumerate() {
            let diag = s.diagnostic.get(i).map(|d| fmt17(*d)).unwrap_or_default();
            wr.write_record([rank.to_string(), i.to_string(), fmt17(s.nmse[i]), diag])
                .map_err(csv_io)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "graph", "n", "method", "experiment", "strategy", "mean", "runs", "seed", "diagnostic_mean",
        ])
        .map_err(csv_io)?;
        for s in &self.series {
            wr.write_record([
                s.graph.clone(),
                s.n.to_string(),
                s.method.name().to_string(),
                serde_json::to_value(self.config.experiment)?.as_str().unwrap_or_default().to_string(),
                format!("{:?}", self.config.strategy),
                fmt17(s.mean),
                self.config.runs.to_string(),
                self.config.seed.to_string(),
                s.diagnostic_mean.map(fmt17).unwrap_or_default(),
            ])
            .map_err(csv_io)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_params<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["run", "a1", "b1", "c1", "d1", "a2", "b2", "c2", "d2"]).map_err(csv_io)?;
        for p in &self.params {
            let mut row = vec![p.run.to_string()];
            row.extend(p.m1.entries().map(fmt17));
            match p.m2 {
                Some(m2) => row.extend(m2.entries().map(fmt17)),
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
            wr.write_record(row).map_err(csv_io)?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> GlctError {
    GlctError::Io(e.to_string())
}

/// Operation-count formulas (real multiplications, eigendecomposition excluded).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpcountMethod {
    #[serde(rename = "CDDHFs")]
    Cddhfs,
    #[serde(rename = "CMCCM_bnz")]
    CmccmBnz,
    #[serde(rename = "CMCCM_b0")]
    CmccmB0,
}

impl OpcountMethod {
    pub const ALL: [OpcountMethod; 3] = [OpcountMethod::Cddhfs, OpcountMethod::CmccmBnz, OpcountMethod::CmccmB0];

    pub fn name(&self) -> &'static str {
        match self {
            OpcountMethod::Cddhfs => "CDDHFs",
            OpcountMethod::CmccmBnz => "CMCCM_bnz",
            OpcountMethod::CmccmB0 => "CMCCM_b0",
        }
    }
}

/// `4n²+8n`, `12n+4n·log₂n`, `12n+6n·log₂n`. Powers of two use the exact
/// integer logarithm; other `n` use the real logarithm, ceiled at the end.
pub fn opcount(method: OpcountMethod, n: u64) -> u64 {
    assert!(n >= 1, "opcount needs n >= 1");
    let log_coeff = match method {
        OpcountMethod::Cddhfs => return 4 * n * n + 8 * n,
        OpcountMethod::CmccmBnz => 4,
        OpcountMethod::CmccmB0 => 6,
    };
    if n.is_power_of_two() {
        12 * n + log_coeff * n * u64::from(n.trailing_zeros())
    } else {
        let nf = n as f64;
        (12.0 * nf + log_coeff as f64 * nf * nf.log2()).ceil() as u64
    }
}

/// Smallest power of two `n ≤ 2^max_exp` with `CMCCM_bnz < CDDHFs`.
pub fn crossover(max_exp: u32) -> Option<u64> {
    (0..=max_exp)
        .map(|e| 1u64 << e)
        .find(|&n| opcount(OpcountMethod::CmccmBnz, n) < opcount(OpcountMethod::Cddhfs, n))
}

/// `n,CDDHFs,CMCCM_bnz,CMCCM_b0` for `nmin..=nmax`.
pub fn write_opcount_table<W: Write>(w: W, nmin: u64, nmax: u64) -> Result<()> {
    if nmin < 1 || nmin > nmax {
        return Err(GlctError::Config(format!("need 1 <= nmin <= nmax, got {nmin}..{nmax}")));
    }
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["n"];
    header.extend(OpcountMethod::ALL.iter().map(OpcountMethod::name));
    wr.write_record(header).map_err(csv_io)?;
    for n in nmin..=nmax {
        let mut row = vec![n.to_string()];
        row.extend(OpcountMethod::ALL.iter().map(|m| opcount(*m, n).to_string()));
        wr.write_record(row).map_err(csv_io)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::GeneratorParams;

    fn small_cfg(experiment: Experiment, runs: usize) -> BenchConfig {
        let mut cfg = BenchConfig::new(experiment, runs, 7);
        cfg.graphs = vec![
            GraphSel::Spec(GeneratorSpec::with_overrides(GraphKind::Path, Some(12), GeneratorParams::default(), None)),
            GraphSel::Spec(GeneratorSpec::with_overrides(GraphKind::Sensor, Some(30), GeneratorParams { radius: Some(0.4), ..Default::default() }, Some(3))),
        ];
        cfg
    }

    #[test]
    fn opcount_values() {
        assert_eq!(opcount(OpcountMethod::Cddhfs, 64), 16896);
        assert_eq!(opcount(OpcountMethod::CmccmBnz, 64), 2304);
        assert_eq!(opcount(OpcountMethod::CmccmB0, 64), 3072);
        for m in OpcountMethod::ALL {
            assert_eq!(opcount(m, 1), 12);
        }
        // 12·3 + 4·3·log₂3 = 55.02 → 56
        assert_eq!(opcount(OpcountMethod::CmccmBnz, 3), 56);
        assert_eq!(crossover(14), Some(4));
        assert_eq!(opcount(OpcountMethod::CmccmBnz, 2), opcount(OpcountMethod::Cddhfs, 2));
    }

    #[test]
    fn opcount_table_is_monotone() {
        let mut buf = Vec::new();
        write_opcount_table(&mut buf, 1, 70).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\n64,16896,2304,3072\n"));
        assert!(text.contains("\n1,12,12,12\n"));
        let rows: Vec<Vec<u64>> = text.lines().skip(1).map(|l| l.split(',').map(|f| f.parse().unwrap()).collect()).collect();
        for w in rows.windows(2) {
            assert!((1..4).all(|c| w[1][c] > w[0][c]));
        }
        assert!(write_opcount_table(Vec::new(), 5, 4).is_err());
    }

    #[test]
    fn identity_runs_are_zero() {
        for e in [Experiment::Additivity, Experiment::Reversibility] {
            let mut cfg = small_cfg(e, 1);
            cfg.sampling = Sampling::Identity;
            let res = run_experiment(&cfg).unwrap();
            assert_eq!(res.series.len(), 4);
            assert!(res.series.iter().all(|s| s.nmse == vec![0.0]));
        }
    }

    #[test]
    fn sampling_rejects_small_entries() {
        let cfg = small_cfg(Experiment::Additivity, 200);
        for r in 0..200 {
            let p = run_params(&cfg, r);
            let m2 = p.m2.unwrap();
            assert!(passes(&p.m1) && passes(&m2) && passes(&multiply(&p.m1, &m2)));
            assert!((p.m1.det() - 1.0).abs() < 1e-9);
            assert_eq!(p, run_params(&cfg, r));
        }
        assert_ne!(run_params(&cfg, 0), run_params(&cfg, 1));
    }

    #[test]
    fn results_are_deterministic() {
        let cfg = small_cfg(Experiment::Reversibility, 12);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        for s in &a.series {
            assert!(s.nmse.iter().all(|v| *v >= 0.0));
            assert!((s.mean - mean(&s.nmse)).abs() <= 1e-15 * s.mean.abs());
            let mut p = s.nmse.clone();
            p.sort_by(f64::total_cmp);
            assert_eq!(p, s.sorted);
        }
        let cm = a.series("path", Method::Cmccm).unwrap();
        assert!(cm.nmse.iter().all(|v| *v < 1e-20));
        assert!(cm.diagnostic.iter().all(|v| *v < 1e-20));
        assert!(a.series("path", Method::Cddhfs).unwrap().diagnostic.is_empty());
    }

    #[test]
    fn additivity_with_inverse_matches_reversibility() {
        let g = generate(&GeneratorSpec::with_overrides(GraphKind::Path, Some(10), GeneratorParams::default(), None)).unwrap();
        let gs = g.gft_spectrum().unwrap();
        let x = bipolar_rectangular(&g);
        let t = MethodBuilder { method: Method::Cmccm, graph: &g, spectrum: &gs, strategy: ChirpStrategy::default() };
        let m = ParamMatrix { a: 1.5, b: 0.5, c: -0.4, d: (1.0 - 0.2) / 1.5 };
        // M·M⁻¹ = I dispatches to the identity, so the reference is x itself.
        let add = nmse_additivity(&t, &m, &inverse(&m), &x).unwrap();
        let rev = nmse_reversibility(&t, &inverse(&m), &x).unwrap();
        assert!((add - rev).abs() < 1e-25);
        assert_eq!(nmse_additivity(&t, &ParamMatrix::IDENTITY, &ParamMatrix::IDENTITY, &x).unwrap(), 0.0);
        assert_eq!(nmse(&[num_complex::Complex64::new(0.0, 0.0)], &[num_complex::Complex64::new(1.0, 0.0)]), Err(GlctError::DegenerateDenominator));
    }

    #[test]
    fn config_json() {
        let cfg: BenchConfig = serde_json::from_str(r#"{"experiment":"additivity","runs":50,"seed":1,"method":"CMCCM","graphs":["path",{"kind":"comet","n":20,"params":{"star_degree":5}}]}"#).unwrap();
        assert_eq!(cfg.methods, vec![Method::Cmccm]);
        assert_eq!(cfg.graphs[0], GraphSel::Kind(GraphKind::Path));
        assert_eq!(cfg.graphs[1].spec().n, 20);
        assert_eq!(cfg.range, ParamRange::default());
        assert!(serde_json::from_str::<BenchConfig>(r#"{"experiment":"additivity","runs":1,"bogus":1}"#).is_err());
        let mut bad = cfg.clone();
        bad.runs = 0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn csv_outputs() {
        let res = run_experiment(&small_cfg(Experiment::Additivity, 3)).unwrap();
        let mut buf = Vec::new();
        res.write_summary(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().nth(1).unwrap().starts_with("path,12,CDDHFs,additivity,SpectralPowerOfF,"));
        let mut buf = Vec::new();
        res.write_curve(&res.series[0], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
        let mut buf = Vec::new();
        res.write_params(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }

    #[test]
    fn b0_forms_are_reported() {
        let res = run_experiment(&small_cfg(Experiment::B0Forms, 4)).unwrap();
        assert_eq!(res.series.len(), 2);
        assert!(res.params.iter().all(|p| p.m1.b == 0.0));
        assert!(res.series.iter().all(|s| s.nmse.iter().all(|v| v.is_finite() && *v >= 0.0)));
    }
}
