//! Deterministic builders for the eight-graph benchmark corpus.
//!
//! Point-cloud kinds draw their geometry from a ChaCha8 stream seeded by the
//! spec seed; random kinds are re-drawn from derived seeds (bounded retries) until the graph
//! is connected. Connection constants below are fixed so that the default
//! corpus lands on the target nonzero counts.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{GlctError, Result};
use crate::graph::{Graph, GraphSignal};

const MAX_CONNECT_ATTEMPTS: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    RandomRegularKnn,
    Spiral,
    Community,
    Sphere,
    Sensor,
    SwissRoll,
    Comet,
    Path,
}

impl GraphKind {
    pub const ALL: [GraphKind; 8] = [
        GraphKind::RandomRegularKnn,
        GraphKind::Spiral,
        GraphKind::Community,
        GraphKind::Sphere,
        GraphKind::Sensor,
        GraphKind::SwissRoll,
        GraphKind::Comet,
        GraphKind::Path,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GraphKind::RandomRegularKnn => "random_regular_knn",
            GraphKind::Spiral => "spiral",
            GraphKind::Community => "community",
            GraphKind::Sphere => "sphere",
            GraphKind::Sensor => "sensor",
            GraphKind::SwissRoll => "swiss_roll",
            GraphKind::Comet => "comet",
            GraphKind::Path => "path",
        }
    }

    /// Whether the geometry depends on the seed.
    pub fn is_random(&self) -> bool {
        matches!(
            self,
            GraphKind::RandomRegularKnn
                | GraphKind::Community
                | GraphKind::Sensor
                | GraphKind::SwissRoll
        )
    }

    /// Corpus node count and nonzero-count target (`None` where no count is published).
    pub fn corpus_counts(&self) -> (usize, Option<usize>) {
        match self {
            GraphKind::RandomRegularKnn => (260, None),
            GraphKind::Spiral => (160, Some(930)),
            GraphKind::Community => (440, Some(8774)),
            GraphKind::Sphere => (280, Some(3182)),
            GraphKind::Sensor => (260, Some(1854)),
            GraphKind::SwissRoll => (200, Some(1444)),
            GraphKind::Comet => (60, Some(118)),
            GraphKind::Path => (50, Some(98)),
        }
    }
}

impl std::str::FromStr for GraphKind {
    type Err = GlctError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        GraphKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| GlctError::InvalidSpec(format!("unknown graph kind {s:?}")))
    }
}

/// Kind-specific knobs; unset fields take the corpus defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GeneratorParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub star_degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GraphKind,
    pub n: usize,
    #[serde(default)]
    pub params: GeneratorParams,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 2024;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl GeneratorSpec {
    pub fn corpus_default(kind: GraphKind) -> Self {
        let (n, _) = kind.corpus_counts();
        let params = match kind {
            GraphKind::RandomRegularKnn => GeneratorParams {
                k: Some(3),
                ..Default::default()
            },
            GraphKind::Spiral => GeneratorParams {
                k: Some(SPIRAL_K),
                turns: Some(4.0),
                ..Default::default()
            },
            GraphKind::Community => GeneratorParams {
                radius: Some(COMMUNITY_RADIUS),
                ..Default::default()
            },
            GraphKind::Sphere => GeneratorParams {
                k: Some(SPHERE_K),
                ..Default::default()
            },
            GraphKind::Sensor => GeneratorParams {
                radius: Some(SENSOR_RADIUS),
                ..Default::default()
            },
            GraphKind::SwissRoll => GeneratorParams {
                k: Some(SWISS_ROLL_K),
                ..Default::default()
            },
            GraphKind::Comet => GeneratorParams {
                star_degree: Some(30),
                ..Default::default()
            },
            GraphKind::Path => GeneratorParams::default(),
        };
        GeneratorSpec {
            kind,
            n,
            params,
            seed: DEFAULT_SEED,
        }
    }

    /// Corpus defaults for `kind` with `n` and explicitly set params overridden.
    pub fn with_overrides(kind: GraphKind, n: Option<usize>, params: GeneratorParams, seed: Option<u64>) -> Self {
        let mut spec = GeneratorSpec::corpus_default(kind);
        if let Some(n) = n {
            spec.n = n;
        }
        spec.params.k = params.k.or(spec.params.k);
        spec.params.star_degree = params.star_degree.or(spec.params.star_degree);
        spec.params.radius = params.radius.or(spec.params.radius);
        spec.params.turns = params.turns.or(spec.params.turns);
        if let Some(s) = seed {
            spec.seed = s;
        }
        spec
    }
}

pub const SPIRAL_K: usize = 5;
pub const SPHERE_K: usize = 11;
pub const SWISS_ROLL_K: usize = 6;
pub const SENSOR_RADIUS: f64 = 0.097;
pub const COMMUNITY_RADIUS: f64 = 0.1245;

/// The eight corpus specs, in corpus order `x1 .. x8`.
pub fn corpus() -> Vec<GeneratorSpec> {
    GraphKind::ALL
        .into_iter()
        .map(GeneratorSpec::corpus_default)
        .collect()
}

pub fn generate(spec: &GeneratorSpec) -> Result<Graph> {
    let n = spec.n;
    if n < 2 {
        return Err(GlctError::InvalidSpec(format!("n = {n} is below 2")));
    }
    let p = spec.params;
    match spec.kind {
        GraphKind::Path => {
            let mut a = DMatrix::zeros(n, n);
            for i in 0..n - 1 {
                link(&mut a, i, i + 1);
            }
            let coords = DMatrix::from_fn(n, 1, |i, _| i as f64);
            Graph::new(a, Some(coords))
        }
        GraphKind::Comet => {
            let k = p.star_degree.unwrap_or(30);
            if k == 0 || k >= n {
                return Err(GlctError::InvalidSpec(format!(
                    "star degree {k} must be in 1..{n}"
                )));
            }
            // Hub 0 with leaves 1..=k, then the tail 0 - k+1 - k+2 - ... - n-1.
            let mut a = DMatrix::zeros(n, n);
            for leaf in 1..=k {
                link(&mut a, 0, leaf);
            }
            let mut prev = 0;
            for t in (k + 1)..n {
                link(&mut a, prev, t);
                prev = t;
            }
            let mut coords = DMatrix::zeros(n, 2);
            for leaf in 1..=k {
                let th = 2.0 * PI * leaf as f64 / k as f64;
                coords[(leaf, 0)] = th.cos();
                coords[(leaf, 1)] = th.sin();
            }
            for (step, t) in ((k + 1)..n).enumerate() {
                coords[(t, 0)] = -(step as f64 + 1.0);
            }
            Graph::new(a, Some(coords))
        }
        GraphKind::Spiral => {
            let k = knn_k(p.k.unwrap_or(SPIRAL_K), n)?;
            let turns = p.turns.unwrap_or(4.0);
            if !(turns > 0.0) {
                return Err(GlctError::InvalidSpec("turns must be positive".into()));
            }
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let s = i as f64 / (n - 1) as f64;
                    let th = 2.0 * PI * turns * s;
                    vec![s * th.cos(), s * th.sin()]
                })
                .collect();
            let mut a = knn_adjacency(&pts, k);
            for i in 0..n - 1 {
                link(&mut a, i, i + 1);
            }
            Graph::new(a, Some(points_matrix(&pts)))
        }
        GraphKind::Sphere => {
            let k = knn_k(p.k.unwrap_or(SPHERE_K), n)?;
            let golden = PI * (3.0 - 5f64.sqrt());
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * i as f64;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect();
            let a = knn_adjacency(&pts, k);
            let g = Graph::new(a, Some(points_matrix(&pts)))?;
            if !g.is_connected() {
                return Err(GlctError::InvalidSpec(format!(
                    "sphere graph with k = {k} is disconnected"
                )));
            }
            Ok(g)
        }
        GraphKind::RandomRegularKnn => {
            let k = knn_k(p.k.unwrap_or(3), n)?;
            retry_connected(spec, |rng| {
                let pts = uniform_points(rng, n, 2);
                (knn_adjacency(&pts, k), pts)
            })
        }
        GraphKind::Sensor | GraphKind::Community => {
            let default_r = if spec.kind == GraphKind::Sensor {
                SENSOR_RADIUS
            } else {
                COMMUNITY_RADIUS
            };
            let r = p.radius.unwrap_or(default_r);
            if !(r > 0.0) {
                return Err(GlctError::InvalidSpec("radius must be positive".into()));
            }
            retry_connected(spec, |rng| {
                let pts = uniform_points(rng, n, 2);
                (radius_adjacency(&pts, r), pts)
            })
        }
        GraphKind::SwissRoll => {
            let k = knn_k(p.k.unwrap_or(SWISS_ROLL_K), n)?;
            retry_connected(spec, |rng| {
                let pts: Vec<Vec<f64>> = (0..n)
                    .map(|_| {
                        let t = 1.5 * PI * (1.0 + 2.0 * rng.gen::<f64>());
                        let h = 21.0 * rng.gen::<f64>();
                        vec![t * t.cos(), h, t * t.sin()]
                    })
                    .collect();
                (knn_adjacency(&pts, k), pts)
            })
        }
    }
}

fn knn_k(k: usize, n: usize) -> Result<usize> {
    if k == 0 || k >= n {
        return Err(GlctError::InvalidSpec(format!("k = {k} must be in 1..{n}")));
    }
    Ok(k)
}

fn retry_connected<F>(spec: &GeneratorSpec, mut build: F) -> Result<Graph>
where
    F: FnMut(&mut ChaCha8Rng) -> (DMatrix<f64>, Vec<Vec<f64>>),
{
    for attempt in 0..MAX_CONNECT_ATTEMPTS {
        let mut rng =
            ChaCha8Rng::seed_from_u64(spec.seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let (a, pts) = build(&mut rng);
        let g = Graph::new(a, Some(points_matrix(&pts)))?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GlctError::InvalidSpec(format!(
        "no connected {} graph after {MAX_CONNECT_ATTEMPTS} seeds",
        spec.kind.name()
    )))
}

fn link(a: &mut DMatrix<f64>, i: usize, j: usize) {
    a[(i, j)] = 1.0;
    a[(j, i)] = 1.0;
}

fn uniform_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect()
}

fn points_matrix(pts: &[Vec<f64>]) -> DMatrix<f64> {
    let dim = pts.first().map_or(0, |p| p.len());
    DMatrix::from_fn(pts.len(), dim, |i, j| pts[i][j])
}

fn dist2(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// k-nearest-neighbour graph, symmetrized by union. Distance ties go to the lower index.
fn knn_adjacency(pts: &[Vec<f64>], k: usize) -> DMatrix<f64> {
    let n = pts.len();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (dist2(&pts[i], &pts[j]), j))
            .collect();
        others.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        for &(_, j) in others.iter().take(k) {
            link(&mut a, i, j);
        }
    }
    a
}

fn radius_adjacency(pts: &[Vec<f64>], r: f64) -> DMatrix<f64> {
    let n = pts.len();
    let r2 = r * r;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if dist2(&pts[i], &pts[j]) < r2 {
                link(&mut a, i, j);
            }
        }
    }
    a
}

/// `+1` on the first `⌈n/2⌉` nodes, `-1` on the rest.
pub fn bipolar_rectangular(g: &Graph) -> GraphSignal {
    let n = g.n();
    let half = n.div_ceil(2);
    GraphSignal::from_real(
        &(0..n)
            .map(|i| if i < half { 1.0 } else { -1.0 })
            .collect::<Vec<_>>(),
    )
}
