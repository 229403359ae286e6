//! `spherepack`: generate packings, measure cells and densities, classify
//! kissing-star graphs, run bounding demos, and self-verify.

mod manifest;
mod output;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::json;

use spherepack_core::constants::all_constants;
use spherepack_core::density::density_bound_check;
use spherepack_core::lp::face_score_demo;
use spherepack_core::packing::{cubic_packing, fcc_packing, hcp_packing, saturate, Window};
use spherepack_core::stargraph::{canonical_form, classify, local_star, star_graph, PlaneGraph, ReferenceSet};
use spherepack_core::verify::{run_all, VerifyOptions};
use spherepack_core::voronoi::VoronoiBuilder;
use spherepack_core::{Packing, Point3};

use manifest::RunManifest;

/// Environment variable fixing the worker thread count (default: all cores).
const THREADS_ENV: &str = "SPHEREPACK_THREADS";

#[derive(Parser)]
#[command(name = "spherepack", version, about = "Sphere-packing density and local-star toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print every named constant with its independent check.
    Constants(ConstantsArgs),
    /// Generate a packing file.
    Generate(GenerateArgs),
    /// Voronoi cells of the interior vertices of a packing.
    Voronoi(VoronoiArgs),
    /// Finite densities against the explicit bound, as CSV.
    Density(DensityArgs),
    /// Plane graph of a vertex's local star, or the reference graph file.
    Graph(GraphArgs),
    /// Branch and bound on the toy face score of a graph.
    BnbDemo(BnbDemoArgs),
    /// Run every self-check and print a pass/fail table.
    VerifyAll(VerifyAllArgs),
    /// Rerun a command from its manifest and compare outputs byte for byte.
    Replay(ReplayArgs),
}

/// A command that renders one text output.
trait Produce: Serialize + DeserializeOwned {
    const NAME: &'static str;
    fn out(&self) -> Option<&Path>;
    fn seed(&self) -> Option<u64> {
        None
    }
    /// Make every path absolute so a manifest can be replayed from anywhere.
    fn absolutize(&mut self) -> anyhow::Result<()>;
    fn produce(&self) -> anyhow::Result<String>;
}

fn absolute(p: &mut PathBuf) -> anyhow::Result<()> {
    if p.is_relative() {
        *p = std::env::current_dir()?.join(&*p);
    }
    Ok(())
}

fn absolute_opt(p: &mut Option<PathBuf>) -> anyhow::Result<()> {
    match p {
        Some(p) => absolute(p),
        None => Ok(()),
    }
}

fn load_packing(path: &Path) -> anyhow::Result<Packing> {
    let text = fs::read_to_string(path).with_context(|| format!("reading packing {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing packing {}", path.display()))
}

#[derive(Args, Serialize, Deserialize)]
struct ConstantsArgs {
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Produce for ConstantsArgs {
    const NAME: &'static str = "constants";
    fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }
    fn absolutize(&mut self) -> anyhow::Result<()> {
        absolute_opt(&mut self.out)
    }
    fn produce(&self) -> anyhow::Result<String> {
        let constants = all_constants();
        let rows: Vec<_> = constants
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "value": c.value,
                    "formula": c.formula,
                    "oracle": c.verification.as_ref().map(|v| v.oracle.clone()),
                    "oracle_value": c.verification.as_ref().map(|v| v.value),
                    "tolerance": c.verification.as_ref().map(|v| v.tolerance),
                    "passed": c.passes(),
                })
            })
            .collect();
        output::to_json(&json!({
            "constants": rows,
            "all_passed": constants.iter().all(|c| c.passes()),
        }))
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Fcc,
    Hcp,
    Cubic,
    /// Saturated packing grown from an empty window.
    Random,
}

#[derive(Args, Serialize, Deserialize)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Window radius around the origin.
    #[arg(long)]
    radius: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Candidate grid spacing used to saturate random packings.
    #[arg(long, default_value_t = 0.25)]
    spacing: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Produce for GenerateArgs {
    const NAME: &'static str = "generate";
    fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }
    fn seed(&self) -> Option<u64> {
        matches!(self.kind, Kind::Random).then_some(self.seed)
    }
    fn absolutize(&mut self) -> anyhow::Result<()> {
        absolute_opt(&mut self.out)
    }
    fn produce(&self) -> anyhow::Result<String> {
        let p = match self.kind {
            Kind::Fcc => fcc_packing(self.radius)?,
            Kind::Hcp => hcp_packing(self.radius)?,
            Kind::Cubic => cubic_packing(self.radius)?,
            Kind::Random => saturate(
                &Packing::empty(format!("saturated seed {}", self.seed), Window::origin(self.radius)?),
                self.seed,
                self.spacing,
            )?,
        };
        output::to_json(&p)
    }
}

#[derive(Args, Serialize, Deserialize)]
struct VoronoiArgs {
    #[arg(long)]
    packing: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Produce for VoronoiArgs {
    const NAME: &'static str = "voronoi";
    fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }
    fn absolutize(&mut self) -> anyhow::Result<()> {
        absolute(&mut self.packing)?;
        absolute_opt(&mut self.out)
    }
    fn produce(&self) -> anyhow::Result<String> {
        let p = load_packing(&self.packing)?;
        let cells = VoronoiBuilder::new(&p).interior_cells()?;
        let rows: Vec<_> = cells
            .iter()
            .map(|c| {
                json!({
                    "vertex": c.index,
                    "position": c.vertex,
                    "volume": c.volume,
                    "circumradius": c.circumradius,
                    "face_count": c.face_count(),
                })
            })
            .collect();
        output::to_json(&rows)
    }
}

fn parse_point(s: &str) -> Result<Point3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, z] => Ok(Point3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

#[derive(Args, Serialize, Deserialize)]
struct DensityArgs {
    #[arg(long)]
    packing: PathBuf,
    /// Ball center as `x,y,z`.
    #[arg(long, value_parser = parse_point, default_value = "0,0,0", allow_hyphen_values = true)]
    x: Point3,
    /// Comma-separated radii.
    #[arg(long, value_delimiter = ',', required = true)]
    radii: Vec<f64>,
    /// Constant of the quadratic correction term.
    #[arg(long = "C1", alias = "c1", default_value_t = 0.0)]
    c1: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Produce for DensityArgs {
    const NAME: &'static str = "density";
    fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }
    fn absolutize(&mut self) -> anyhow::Result<()> {
        absolute(&mut self.packing)?;
        absolute_opt(&mut self.out)
    }
    fn produce(&self) -> anyhow::Result<String> {
        let p = load_packing(&self.packing)?;
        let rows = density_bound_check(&p, self.x, &self.radii, self.c1)?;
        let mut csv = String::from("r,A,delta,bound,satisfied,fitted_C\n");
        for r in rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                output::real(r.r),
                output::real(r.report.covered),
                output::real(r.delta),
                output::real(r.bound),
                r.satisfied,
                output::real(r.fitted_c)
            ));
        }
        Ok(csv)
    }
}

#[derive(Args, Serialize, Deserialize)]
struct GraphArgs {
    #[arg(long, required_unless_present = "emit_references")]
    packing: Option<PathBuf>,
    #[arg(long, required_unless_present = "emit_references")]
    vertex: Option<usize>,
    /// Recompute the reference graphs (fcc, hcp, pentagonal) instead.
    #[arg(long, conflicts_with_all = ["packing", "vertex"])]
    emit_references: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Produce for GraphArgs {
    const NAME: &'static str = "graph";
    fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }
    fn absolutize(&mut self) -> anyhow::Result<()> {
        absolute_opt(&mut self.packing)?;
        absolute_opt(&mut self.out)
    }
    fn produce(&self) -> anyhow::Result<String> {
        if self.emit_references {
            return output::to_json(&ReferenceSet::compute()?);
        }
        let (Some(path), Some(vertex)) = (&self.packing, self.vertex) else {
            bail!("--packing and --vertex are required");
        };
        let p = load_packing(path)?;
        let g = star_graph(&local_star(&p, vertex)?)?;
        let form = canonical_form(&g);
        let class = classify(&g);
        let edges: Vec<[usize; 2]> = g.edges().map(|(a, b)| [a, b]).collect();
        output::to_json(&json!({
            "n": g.vertex_count(),
            "edges": edges,
            "faces": g.faces(),
            "class": class.kind,
            "certificate": class.certificate,
            "canonical_code_hex": form.hex(),
            "embedding_source": g.embedding_source(),
        }))
    }
}

#[derive(Args, Serialize, Deserialize)]
struct BnbDemoArgs {
    /// Graph JSON as written by `graph`.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    target: f64,
    #[arg(long, default_value_t = 100_000)]
    max_nodes: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Produce for BnbDemoArgs {
    const NAME: &'static str = "bnb-demo";
    fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }
    fn absolutize(&mut self) -> anyhow::Result<()> {
        absolute(&mut self.graph)?;
        absolute_opt(&mut self.out)
    }
    fn produce(&self) -> anyhow::Result<String> {
        let text = fs::read_to_string(&self.graph).with_context(|| format!("reading graph {}", self.graph.display()))?;
        let g: PlaneGraph = serde_json::from_str(&text).with_context(|| format!("parsing graph {}", self.graph.display()))?;
        output::to_json(&face_score_demo(&g, self.target, self.max_nodes)?)
    }
}

#[derive(Args)]
struct VerifyAllArgs {
    /// Print the results as JSON.
    #[arg(long)]
    json: bool,
    /// Reference graph file to classify against instead of the bundled one.
    #[arg(long)]
    references: Option<PathBuf>,
    /// Samples for the Monte-Carlo covered-volume check.
    #[arg(long, default_value_t = 10_000_000)]
    mc_samples: u64,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
}

fn emit<P: Produce>(mut args: P) -> anyhow::Result<ExitCode> {
    args.absolutize()?;
    let text = args.produce()?;
    let Some(out) = args.out() else {
        print!("{text}");
        return Ok(ExitCode::SUCCESS);
    };
    fs::write(out, &text).with_context(|| format!("writing {}", out.display()))?;
    let parameters: BTreeMap<String, serde_json::Value> = match serde_json::to_value(&args)? {
        serde_json::Value::Object(m) => m.into_iter().collect(),
        _ => unreachable!("argument structs serialize to objects"),
    };
    let manifest = RunManifest {
        command: P::NAME.into(),
        parameters,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: args.seed(),
        outputs: vec![out.to_path_buf()],
    };
    let mpath = RunManifest::path_for(out);
    fs::write(&mpath, output::to_json(&manifest)?).with_context(|| format!("writing {}", mpath.display()))?;
    eprintln!("wrote {} and {}", out.display(), mpath.display());
    Ok(ExitCode::SUCCESS)
}

fn replay_as<P: Produce>(m: &RunManifest) -> anyhow::Result<String> {
    let params = serde_json::Value::Object(m.parameters.clone().into_iter().collect());
    let args: P = serde_json::from_value(params).with_context(|| format!("parameters of {}", m.command))?;
    args.produce()
}

fn replay(args: ReplayArgs) -> anyhow::Result<ExitCode> {
    let m = RunManifest::load(&args.manifest)?;
    if m.tool_version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "warning: manifest written by version {}, replaying with {}",
            m.tool_version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let text = match m.command.as_str() {
        ConstantsArgs::NAME => replay_as::<ConstantsArgs>(&m)?,
        GenerateArgs::NAME => replay_as::<GenerateArgs>(&m)?,
        VoronoiArgs::NAME => replay_as::<VoronoiArgs>(&m)?,
        DensityArgs::NAME => replay_as::<DensityArgs>(&m)?,
        GraphArgs::NAME => replay_as::<GraphArgs>(&m)?,
        BnbDemoArgs::NAME => replay_as::<BnbDemoArgs>(&m)?,
        other => bail!("unknown command {other:?} in manifest"),
    };
    let [out] = &m.outputs[..] else {
        bail!("expected exactly one output in the manifest");
    };
    let recorded = fs::read(out).with_context(|| format!("reading recorded output {}", out.display()))?;
    if recorded == text.as_bytes() {
        println!("identical: {}", out.display());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("DIFFERS: {}", out.display());
        Ok(ExitCode::FAILURE)
    }
}

fn verify_all(args: VerifyAllArgs) -> anyhow::Result<ExitCode> {
    let mut opts = VerifyOptions {
        monte_carlo_samples: args.mc_samples,
        ..VerifyOptions::default()
    };
    if let Some(path) = &args.references {
        let parsed = fs::read_to_string(path)
            .map_err(anyhow::Error::from)
            .and_then(|t| Ok(ReferenceSet::from_json(&t)?));
        opts.references = parsed.unwrap_or_else(|e| {
            eprintln!("warning: reference file {} unusable ({e:#}); graph checks will fail", path.display());
            ReferenceSet { graphs: Vec::new() }
        });
    }
    let report = run_all(&opts);
    if args.json {
        print!("{}", output::to_json(&report)?);
    } else {
        let width = report.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &report.checks {
            println!(
                "{}  {:width$}  {:>7.2}s  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.seconds,
                c.detail
            );
        }
        println!(
            "{} of {} checks passed",
            report.checks.iter().filter(|c| c.passed).count(),
            report.checks.len()
        );
    }
    if report.all_passed {
        Ok(ExitCode::SUCCESS)
    } else {
        let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        eprintln!("failed checks: {}", failed.join(", "));
        Ok(ExitCode::FAILURE)
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .with_context(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    configure_threads()?;
    match cli.command {
        Command::Constants(a) => emit(a),
        Command::Generate(a) => emit(a),
        Command::Voronoi(a) => emit(a),
        Command::Density(a) => emit(a),
        Command::Graph(a) => emit(a),
        Command::BnbDemo(a) => emit(a),
        Command::VerifyAll(a) => verify_all(a),
        Command::Replay(a) => replay(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
