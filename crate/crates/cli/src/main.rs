use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use glct::bench::{run_experiment, write_opcount_table, BenchConfig};
use glct::generators::{bipolar_rectangular, corpus, generate, GeneratorParams, GeneratorSpec, GraphKind};
use glct::graph::{hex, Graph};
use glct::io::{self, FileDigest, RunManifest};
use glct::params::{inverse, B0Kind, ParamMatrix};
use glct::spectral::ChirpStrategy;
use glct::transform::{build_cddhfs, build_cmccm_with, BuildOptions, GlctOperator, Method, OperatorMetadata};
use glct::{GlctError, Result};

#[derive(Parser)]
#[command(name = "glct", version, about = "Graph linear canonical transforms")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "GLCT_OUT_DIR", default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph (or the whole corpus) with its bipolar signal.
    Gen(GenArgs),
    /// Apply a GLCT to a signal on a graph.
    Transform(TransformArgs),
    /// Run an NMSE experiment from a JSON config.
    Bench { config: PathBuf },
    /// Tabulate the operation-count model.
    Opcount { nmin: u64, nmax: u64 },
}

#[derive(Args, Serialize)]
struct GenArgs {
    #[arg(long, required_unless_present = "corpus", conflicts_with = "corpus")]
    kind: Option<GraphKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    star_degree: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    turns: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// All eight corpus graphs with default seeds.
    #[arg(long)]
    corpus: bool,
}

#[derive(Args, Serialize)]
struct TransformArgs {
    /// Adjacency in Matrix Market format.
    graph: PathBuf,
    /// Signal CSV (one real column or `re,im`).
    signal: PathBuf,
    #[arg(allow_negative_numbers = true)]
    a: f64,
    #[arg(allow_negative_numbers = true)]
    b: f64,
    #[arg(allow_negative_numbers = true)]
    c: f64,
    #[arg(allow_negative_numbers = true)]
    d: f64,
    #[arg(long, default_value = "cmccm")]
    method: Method,
    #[arg(long, default_value = "spectral")]
    strategy: ChirpStrategy,
    #[arg(long, default_value = "eta")]
    b0_form: B0Form,
    /// Build identity/F/F⁻¹/chirp matrices through the general path.
    #[arg(long)]
    no_dispatch: bool,
    /// Output signal path; defaults to `transformed.csv` in the output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the dense operator as CSV.
    #[arg(long)]
    operator_csv: bool,
}

#[derive(Clone, Copy, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum B0Form {
    Eta,
    Mu,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let result = std::fs::create_dir_all(&cli.out)
        .map_err(|e| GlctError::Io(format!("{}: {e}", cli.out.display())))
        .and_then(|_| match &cli.command {
            Command::Gen(g) => cmd_gen(&cli.out, g, args),
            Command::Transform(t) => cmd_transform(&cli.out, t, args),
            Command::Bench { config } => cmd_bench(&cli.out, config, args),
            Command::Opcount { nmin, nmax } => cmd_opcount(&cli.out, *nmin, *nmax, args),
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn finish(out: &Path, name: &str, mut manifest: RunManifest, outputs: &[PathBuf]) -> Result<()> {
    for p in outputs {
        manifest.outputs.push(FileDigest::of(p)?);
    }
    let path = out.join(name);
    io::write_json(&path, &manifest)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_graph(out: &Path, name: &str, g: &Graph, outputs: &mut Vec<PathBuf>) -> Result<()> {
    let mtx = out.join(format!("{name}.mtx"));
    io::write_matrix_market(io::create(&mtx)?, g.adjacency())?;
    outputs.push(mtx);
    if let Some(c) = g.coords() {
        let p = out.join(format!("{name}_coords.csv"));
        io::write_coords_csv(io::create(&p)?, c)?;
        outputs.push(p);
    }
    let p = out.join(format!("{name}_signal.csv"));
    io::write_signal_csv(io::create(&p)?, &bipolar_rectangular(g))?;
    outputs.push(p);
    println!("{name}: n = {}, nonzeros = {}", g.n(), g.nonzeros());
    Ok(())
}

fn cmd_gen(out: &Path, a: &GenArgs, args: Vec<String>) -> Result<()> {
    let specs = match a.kind {
        None => corpus(),
        Some(kind) => {
            let params = GeneratorParams {
                k: a.k,
                star_degree: a.star_degree,
                radius: a.radius,
                turns: a.turns,
            };
            vec![GeneratorSpec::with_overrides(kind, a.n, params, a.seed)]
        }
    };
    let mut outputs = Vec::new();
    for spec in &specs {
        let g = generate(spec)?;
        write_graph(out, spec.kind.name(), &g, &mut outputs)?;
    }
    if a.corpus {
        let p = out.join("corpus.json");
        io::write_json(&p, &specs)?;
        outputs.push(p);
    }
    let seed = (specs.len() == 1).then(|| specs[0].seed);
    let name = match a.kind {
        Some(kind) => format!("{}_manifest.json", kind.name()),
        None => "corpus_manifest.json".to_string(),
    };
    let manifest = RunManifest::new("gen", args, &specs, seed)?;
    finish(out, &name, manifest, &outputs)
}

#[derive(Serialize)]
struct TransformSidecar {
    n: usize,
    method: Method,
    graph_fingerprint: String,
    operator: OperatorMetadata,
    inverse_params: ParamMatrix,
    /// `‖x − O^{M⁻¹} O^{M} x‖² / ‖x‖²` with the inverse built from `(d, −b, −c, a)`.
    round_trip_nmse: f64,
    strategy: ChirpStrategy,
}

fn build_op(g: &Graph, m: &ParamMatrix, t: &TransformArgs) -> Result<GlctOperator> {
    let gs = g.gft_spectrum()?;
    match t.method {
        Method::Cddhfs => build_cddhfs(g, &gs, m, t.strategy),
        Method::Cmccm => {
            let opts = BuildOptions {
                b0_kind: match t.b0_form {
                    B0Form::Eta => B0Kind::Eta,
                    B0Form::Mu => B0Kind::Mu,
                },
                dispatch: !t.no_dispatch,
            };
            build_cmccm_with(&gs, m, t.strategy, opts)
        }
    }
}

fn cmd_transform(out: &Path, t: &TransformArgs, args: Vec<String>) -> Result<()> {
    let m = ParamMatrix::new(t.a, t.b, t.c, t.d)?;
    let g = io::load_graph(&t.graph, None)?;
    let x = io::read_signal_csv(io::open(&t.signal)?)?;
    x.check_len(g.n())?;
    let op = build_op(&g, &m, t)?;
    let y = op.apply(&x)?;
    let back = build_op(&g, &inverse(&m), t)?.apply(&y)?;
    let round_trip_nmse = glct::bench::nmse(&x.values, &back.values)?;

    let output = t.output.clone().unwrap_or_else(|| out.join("transformed.csv"));
    io::write_signal_csv(io::create(&output)?, &y)?;
    let sidecar_path = output.with_extension("json");
    let sidecar = TransformSidecar {
        n: g.n(),
        method: t.method,
        graph_fingerprint: hex(&g.fingerprint()),
        operator: op.metadata(),
        inverse_params: inverse(&m),
        round_trip_nmse,
        strategy: t.strategy,
    };
    io::write_json(&sidecar_path, &sidecar)?;
    let mut outputs = vec![output.clone(), sidecar_path];
    if t.operator_csv {
        let p = output.with_file_name(format!(
            "{}_operator.csv",
            output.file_stem().and_then(|s| s.to_str()).unwrap_or("transformed")
        ));
        io::write_operator_csv(io::create(&p)?, op.matrix())?;
        outputs.push(p);
    }
    println!("recipe {:?}, round-trip NMSE {:e}", op.recipe, round_trip_nmse);

    let mut manifest = RunManifest::new("transform", args, t, None)?;
    manifest.inputs = vec![FileDigest::of(&t.graph)?, FileDigest::of(&t.signal)?];
    let name = format!(
        "{}_manifest.json",
        output.file_stem().and_then(|s| s.to_str()).unwrap_or("transformed")
    );
    finish(output.parent().unwrap_or(out), &name, manifest, &outputs)
}

fn cmd_bench(out: &Path, config: &Path, args: Vec<String>) -> Result<()> {
    let text = std::fs::read_to_string(config).map_err(|e| GlctError::Io(format!("{}: {e}", config.display())))?;
    let cfg: BenchConfig = serde_json::from_str(&text).map_err(|e| GlctError::Config(e.to_string()))?;
    cfg.validate()?;
    let start = Instant::now();
    let res = run_experiment(&cfg)?;
    let experiment = serde_json::to_value(cfg.experiment)?;
    let experiment = experiment.as_str().unwrap_or("bench");

    let curves = out.join("curves");
    std::fs::create_dir_all(&curves)?;
    let mut outputs = Vec::new();
    for s in &res.series {
        let p = curves.join(format!("{experiment}_{}_{}.csv", s.graph, s.method.name()));
        res.write_curve(s, io::create(&p)?)?;
        outputs.push(p);
    }
    let summary = out.join(format!("{experiment}_summary.csv"));
    res.write_summary(io::create(&summary)?)?;
    let params = out.join(format!("{experiment}_params.csv"));
    res.write_params(io::create(&params)?)?;
    outputs.extend([summary.clone(), params]);

    for s in &res.series {
        println!("{:<20} {:<7} mean NMSE {:.6e}", s.graph, s.method.name(), s.mean);
    }
    let mut manifest = RunManifest::new("bench", args, &cfg, Some(cfg.seed))?;
    manifest.inputs.push(FileDigest::of(config)?);
    manifest.timings.insert("total".into(), start.elapsed().as_secs_f64());
    for s in &res.series {
        manifest.timings.insert(format!("{}/{}", s.graph, s.method.name()), s.seconds);
    }
    finish(out, &format!("{experiment}_manifest.json"), manifest, &outputs)
}

fn cmd_opcount(out: &Path, nmin: u64, nmax: u64, args: Vec<String>) -> Result<()> {
    let p = out.join("opcount.csv");
    let mut buf = Vec::new();
    write_opcount_table(&mut buf, nmin, nmax)?;
    std::fs::write(&p, buf)?;
    #[derive(Serialize)]
    struct Range {
        nmin: u64,
        nmax: u64,
    }
    let manifest = RunManifest::new("opcount", args, &Range { nmin, nmax }, None)?;
    finish(out, "opcount_manifest.json", manifest, &[p])
}
