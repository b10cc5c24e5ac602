//! Command-line pipeline: generate → inspect → assemble → simulate.
//!
//! Every command reads JSON inputs and writes into `--out-dir` together with
//! a `manifest.json` listing content hashes of all inputs and outputs.

pub mod manifest;
pub mod vtk;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::chains::validate_complex;
use crate::dual::{build_dual, compute_geometry, GeometryTables};
use crate::error::{Error, Result};
use crate::lattice::{generate, LatticeSpec};
use crate::phassembly::{assemble_interconnection, build_model, MaterialParams, StateSpaceModel};
use crate::primal::{build_primal, split_incidence, FacetBcs, FoamGraph, KindCounts, PrimalComplex};
use crate::simulate::{fit_trace, run, SimConfig};
pub use manifest::RunManifest;

/// An error together with the pipeline stage that raised it.
#[derive(Debug)]
pub struct Failure {
    pub stage: &'static str,
    pub error: Error,
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        self.error.exit_code()
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.error)
    }
}

impl std::error::Error for Failure {}

trait At<T> {
    fn at(self, stage: &'static str) -> std::result::Result<T, Failure>;
}

impl<T> At<T> for Result<T> {
    fn at(self, stage: &'static str) -> std::result::Result<T, Failure> {
        self.map_err(|error| Failure { stage, error })
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Debug, Parser)]
#[command(name = "phfoam", version, about = "Two-phase heat transfer models of open-cell foams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a foam graph from a lattice spec.
    Generate(GenerateArgs),
    /// Build the complexes and report counts, validity and geometry totals.
    Inspect(InspectArgs),
    /// Assemble the state-space model and write it as a matrix bundle.
    Assemble(AssembleArgs),
    /// Run a transient simulation and write the probe trace.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Topology,
    Energy,
    Skew,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Vtk,
}

#[derive(Debug, Clone, Args)]
pub struct GraphSource {
    /// Foam graph JSON.
    #[arg(long, conflicts_with = "spec")]
    pub graph: Option<PathBuf>,
    /// Lattice spec JSON, generated on the fly.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Facet boundary conditions JSON overriding those of the input.
    #[arg(long)]
    pub bc: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Lattice spec JSON.
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory; the graph goes to stdout when omitted.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Also write per-edge and per-node geometry tables here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
    /// Extra checks; any failure exits with status 1.
    #[arg(long, value_enum)]
    pub check: Vec<Check>,
}

#[derive(Debug, Args)]
pub struct AssembleArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Material parameters JSON; the aluminium/air defaults when omitted.
    #[arg(long)]
    pub materials: Option<PathBuf>,
    /// Bundle directory.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Extra checks; any failure exits with status 1.
    #[arg(long, value_enum)]
    pub check: Vec<Check>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Model bundle directory written by `assemble`.
    #[arg(long, conflicts_with_all = ["graph", "spec", "materials", "bc"])]
    pub model: Option<PathBuf>,
    /// Material parameters JSON; the aluminium/air defaults when omitted.
    #[arg(long)]
    pub materials: Option<PathBuf>,
    /// Simulation config JSON.
    #[arg(long)]
    pub sim: PathBuf,
    /// Directory for the trace, fit and frames.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// `vtk` also writes one legacy VTK file per recorded frame.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Extra checks; any failure exits with status 1.
    #[arg(long, value_enum)]
    pub check: Vec<Check>,
}

/// Runs a parsed command line, printing reports to stdout.
pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Generate(a) => cli_generate(&a.spec, a.out_dir.as_deref()),
        Command::Inspect(a) => {
            let report = cli_inspect(a)?;
            if a.json {
                emit(&(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"));
            } else {
                emit(&report.to_string());
            }
            report.enforce(&a.check)
        }
        Command::Assemble(a) => cli_assemble(a).map(|s| emit(&s)),
        Command::Simulate(a) => cli_simulate(a).map(|s| emit(&s)),
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::File {
        path: dir.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn cli_generate(spec_path: &Path, out_dir: Option<&Path>) -> CliResult<()> {
    let mut manifest = RunManifest::new("generate");
    let spec = LatticeSpec::read(spec_path).at("spec")?;
    let graph = manifest.stage("generate", || generate(&spec)).at("generate")?;
    let json = graph.to_json_string();
    match out_dir {
        None => emit(&json),
        Some(dir) => {
            create_dir(dir).at("output")?;
            let path = dir.join("graph.json");
            write_file(&path, json.as_bytes()).at("output")?;
            manifest.input(spec_path).at("manifest")?;
            manifest.output(&path).at("manifest")?;
            manifest.finish(dir).at("manifest")?;
            emit(&format!("wrote {} ({} nodes, {} struts)\n", path.display(), graph.nodes.len(), graph.struts.len()));
        }
    }
    Ok(())
}

fn load_graph(src: &GraphSource, manifest: &mut RunManifest) -> CliResult<FoamGraph> {
    let bcs = match &src.bc {
        Some(path) => {
            manifest.input(path).at("bc")?;
            let text = fs::read_to_string(path)
                .map_err(|source| Error::File {
                    path: path.display().to_string(),
                    source,
                })
                .at("bc")?;
            let bcs: FacetBcs = serde_json::from_str(&text)
                .map_err(|source| Error::Json {
                    context: path.display().to_string(),
                    source,
                })
                .at("bc")?;
            Some(bcs)
        }
        None => None,
    };
    let mut graph = match (&src.graph, &src.spec) {
        (Some(path), None) => {
            manifest.input(path).at("graph")?;
            FoamGraph::read(path).at("graph")?
        }
        (None, Some(path)) => {
            manifest.input(path).at("spec")?;
            let mut spec = LatticeSpec::read(path).at("spec")?;
            if let Some(b) = bcs {
                spec.boundary_conditions = b;
            }
            manifest.stage("generate", || generate(&spec)).at("generate")?
        }
        _ => {
            return Err(Failure {
                stage: "input",
                error: Error::InvalidConfig("exactly one of --graph or --spec is required".into()),
            })
        }
    };
    if let Some(b) = bcs {
        graph.boundary_conditions = b;
    }
    Ok(graph)
}

fn build_all(graph: &FoamGraph, manifest: &mut RunManifest) -> CliResult<(PrimalComplex, GeometryTables)> {
    let primal = manifest.stage("primal", || build_primal(graph)).at("primal")?;
    let report = validate_complex(&primal.skeleton);
    if !report.is_valid() {
        return Err(Failure {
            stage: "topology",
            error: Error::Validation(report.to_string()),
        });
    }
    let geo = manifest
        .stage("dual", || build_dual(&primal).and_then(|d| compute_geometry(&primal, &d)))
        .at("dual")?;
    Ok((primal, geo))
}

#[derive(Debug, Serialize)]
pub struct InspectReport {
    pub empty: bool,
    /// Cell counts `[nodes, edges, faces, volumes]`.
    pub counts: [usize; 4],
    /// Per dimension: inner, border, additional border (volumes: inner, border).
    pub kinds: KindCounts,
    pub valid: bool,
    pub violations: usize,
    pub findings: String,
    pub inner_nodes: usize,
    /// Two phases per inner node.
    pub state_dimension: usize,
    pub box_volume: f64,
    pub dual_volume: f64,
    pub solid_volume: f64,
    pub fluid_volume: f64,
    pub porosity: f64,
    pub contact_area: f64,
}

impl InspectReport {
    fn enforce(&self, checks: &[Check]) -> CliResult<()> {
        if !self.valid || (checks.contains(&Check::Topology) && self.violations > 0) {
            return Err(Failure {
                stage: "topology",
                error: Error::Validation(self.findings.clone()),
            });
        }
        Ok(())
    }
}

impl fmt::Display for InspectReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.empty {
            return writeln!(f, "empty complex: no cells inside the domain");
        }
        let k = &self.kinds;
        writeln!(f, "cells            inner   border  add.border  total")?;
        for (name, row, total) in [
            ("nodes", k.nodes, self.counts[0]),
            ("edges", k.edges, self.counts[1]),
            ("faces", k.faces, self.counts[2]),
        ] {
            writeln!(f, "{name:<14} {:>7} {:>8} {:>11} {:>6}", row[0], row[1], row[2], total)?;
        }
        writeln!(f, "{:<14} {:>7} {:>8} {:>11} {:>6}", "volumes", k.volumes[0], k.volumes[1], "-", self.counts[3])?;
        writeln!(f, "{}", self.findings)?;
        writeln!(f, "inner nodes (per phase): {}", self.inner_nodes)?;
        writeln!(f, "state dimension (two phases): {}", self.state_dimension)?;
        writeln!(f, "box volume: {:.6} mm^3", self.box_volume)?;
        writeln!(f, "dual volume sum: {:.6} mm^3", self.dual_volume)?;
        writeln!(f, "solid volume: {:.6} mm^3", self.solid_volume)?;
        writeln!(f, "fluid volume: {:.6} mm^3", self.fluid_volume)?;
        writeln!(f, "porosity: {:.6}", self.porosity)?;
        writeln!(f, "contact area: {:.6} mm^2", self.contact_area)
    }
}

pub fn cli_inspect(a: &InspectArgs) -> CliResult<InspectReport> {
    let mut manifest = RunManifest::new("inspect");
    let graph = load_graph(&a.source, &mut manifest)?;
    let primal = manifest.stage("primal", || build_primal(&graph)).at("primal")?;
    let validation = validate_complex(&primal.skeleton);
    let counts = primal.skeleton.counts();
    let empty = counts.iter().all(|&c| c == 0);
    let geo = if validation.is_valid() {
        manifest
            .stage("dual", || build_dual(&primal).and_then(|d| compute_geometry(&primal, &d)))
            .at("dual")?
    } else {
        GeometryTables::default()
    };
    let box_volume = graph.domain.volume();
    let solid: f64 = geo.total_solid_volume();
    let fluid: f64 = geo.volume_fluid.iter().sum();
    let report = InspectReport {
        empty,
        counts,
        kinds: primal.kind_counts(),
        valid: validation.is_valid(),
        violations: validation.violation_count(),
        findings: validation.to_string(),
        inner_nodes: primal.inner_node_count(),
        state_dimension: 2 * primal.inner_node_count(),
        box_volume,
        dual_volume: geo.total_volume(),
        solid_volume: solid,
        fluid_volume: fluid,
        porosity: if box_volume > 0.0 { fluid / box_volume } else { 0.0 },
        contact_area: geo.contact_area.iter().sum(),
    };
    if let Some(dir) = &a.out_dir {
        create_dir(dir).at("output")?;
        for name in ["edges.csv", "nodes.csv"] {
            let mut buf = Vec::new();
            if name == "edges.csv" {
                geo.write_edge_csv(&primal, &mut buf)
            } else {
                geo.write_node_csv(&primal, &mut buf)
            }
            .map_err(Error::Io)
            .at("output")?;
            let path = dir.join(name);
            write_file(&path, &buf).at("output")?;
            manifest.output(&path).at("manifest")?;
        }
        let path = dir.join("report.json");
        write_file(&path, (serde_json::to_string_pretty(&report).expect("report serializes") + "\n").as_bytes())
            .at("output")?;
        manifest.output(&path).at("manifest")?;
        manifest.finish(dir).at("manifest")?;
    }
    Ok(report)
}

fn load_materials(path: Option<&Path>, manifest: &mut RunManifest) -> CliResult<MaterialParams> {
    match path {
        Some(p) => {
            manifest.input(p).at("materials")?;
            MaterialParams::read(p).at("materials")
        }
        None => Ok(MaterialParams::default()),
    }
}

/// Column sums of `A` vanish when no Dirichlet node and no border flux exist.
fn energy_check(model: &StateSpaceModel) -> CliResult<String> {
    let ones = vec![1.0; model.state_dim()];
    let col_sums = model.a.transpose().mul_vec(&ones);
    let scale = model.a.max_abs().max(f64::MIN_POSITIVE);
    let worst = col_sums.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
    let insulated = model.n_border_nodes() == 0;
    let mut out = String::new();
    if insulated {
        if worst > 1e-12 {
            return Err(Failure {
                stage: "energy",
                error: Error::Check(format!("insulated model loses energy: max |1ᵀA| / max|A| = {worst:e}")),
            });
        }
        out += &format!("energy check: insulated, max |1ᵀA| / max|A| = {worst:e}\n");
    } else {
        out += "energy check: Dirichlet nodes present, column sums carry boundary exchange\n";
    }
    if model.state_dim() <= 2000 {
        let ev = model.eigenvalues();
        let rate = ev.first().map_or(0.0, |v| v.abs()).max(f64::MIN_POSITIVE);
        let zero = ev.iter().filter(|v| v.abs() <= 1e-10 * rate).count();
        let max = ev.last().copied().unwrap_or(0.0);
        if max > 1e-10 * rate {
            return Err(Failure {
                stage: "energy",
                error: Error::Check(format!("unstable model: eigenvalue {max:e} 1/s")),
            });
        }
        out += &format!("eigenvalues: {} zero, slowest nonzero rate ", zero);
        let slowest = ev.iter().rev().find(|v| v.abs() > 1e-10 * rate).copied().unwrap_or(0.0);
        out += &format!("{slowest:e} 1/s, fastest {:e} 1/s\n", ev.first().copied().unwrap_or(0.0));
    }
    Ok(out)
}

pub fn cli_assemble(a: &AssembleArgs) -> CliResult<String> {
    let mut manifest = RunManifest::new("assemble");
    let graph = load_graph(&a.source, &mut manifest)?;
    let mat = load_materials(a.materials.as_deref(), &mut manifest)?;
    let (primal, geo) = build_all(&graph, &mut manifest)?;
    let model = manifest.stage("assemble", || build_model(&primal, &geo, &mat)).at("assemble")?;
    let mut out = format!(
        "state dimension {} ({} inner nodes), {} inputs\n",
        model.state_dim(),
        model.n_inner(),
        model.input_dim()
    );
    if a.check.contains(&Check::Topology) {
        out += "topology check: complex valid\n";
    }
    if a.check.contains(&Check::Skew) {
        let blocks = split_incidence(&primal).at("skew")?;
        let ic = assemble_interconnection(&blocks).at("skew")?;
        let defect = ic.skew_defect();
        if defect != 0 {
            return Err(Failure {
                stage: "skew",
                error: Error::Check(format!("max |J + Jᵀ| = {defect}")),
            });
        }
        out += &format!("skew check: J is {}x{}, max |J + Jᵀ| = 0\n", ic.j.nrows(), ic.j.ncols());
    }
    if a.check.contains(&Check::Energy) {
        out += &energy_check(&model)?;
    }
    create_dir(&a.out_dir).at("output")?;
    let written = model.write_bundle(&a.out_dir).at("output")?;
    for path in &written {
        manifest.output(path).at("manifest")?;
    }
    manifest.finish(&a.out_dir).at("manifest")?;
    out += &format!("wrote {} files to {}\n", written.len() + 1, a.out_dir.display());
    Ok(out)
}

pub fn cli_simulate(a: &SimulateArgs) -> CliResult<String> {
    let mut manifest = RunManifest::new("simulate");
    manifest.input(&a.sim).at("sim")?;
    let mut cfg = SimConfig::read(&a.sim).at("sim")?;
    let model = match &a.model {
        Some(dir) => {
            manifest.input(&dir.join("model.json")).at("model")?;
            StateSpaceModel::read_bundle(dir).at("model")?
        }
        None => {
            let graph = load_graph(&a.source, &mut manifest)?;
            let mat = load_materials(a.materials.as_deref(), &mut manifest)?;
            let (primal, geo) = build_all(&graph, &mut manifest)?;
            manifest.stage("assemble", || build_model(&primal, &geo, &mat)).at("assemble")?
        }
    };
    if a.format == Format::Vtk && cfg.frame_every == 0 {
        cfg.frame_every = cfg.steps();
    }
    let trace = manifest.stage("simulate", || run(&model, &cfg)).at("simulate")?;
    let mut out = format!(
        "{} steps of {} s, state dimension {}\n",
        trace.time.len() - 1,
        cfg.dt,
        model.state_dim()
    );
    let audit = trace.max_audit_residual();
    let scale = trace.total_energy(0).abs().max(1.0);
    out += &format!("max audit residual {audit:e} J ({:e} relative)\n", audit / scale);
    if a.check.contains(&Check::Energy) && audit > 1e-10 * scale {
        return Err(Failure {
            stage: "energy",
            error: Error::Check(format!("audit residual {audit:e} J exceeds 1e-10 of the stored energy")),
        });
    }

    create_dir(&a.out_dir).at("output")?;
    let path = a.out_dir.join("trace.csv");
    write_file(&path, trace.to_csv_string().as_bytes()).at("output")?;
    manifest.output(&path).at("manifest")?;
    if a.format == Format::Vtk {
        for (k, frame) in trace.frames.iter().enumerate() {
            let mut buf = Vec::new();
            vtk::write_frame(&mut buf, &model, frame).map_err(Error::Io).at("output")?;
            let path = a.out_dir.join(format!("frame_{k:05}.vtk"));
            write_file(&path, &buf).at("output")?;
            manifest.output(&path).at("manifest")?;
        }
        out += &format!("wrote {} VTK frames\n", trace.frames.len());
    }
    if let Some(fit) = manifest.stage("fit", || fit_trace(&model, &cfg, &trace)).at("fit")? {
        let path = a.out_dir.join("fit.json");
        let json = serde_json::json!({
            "a_eff_mm2_per_s": fit.a_eff,
            "rms_K": fit.rms,
            "order": fit.order,
        });
        write_file(&path, (serde_json::to_string_pretty(&json).expect("json") + "\n").as_bytes()).at("output")?;
        manifest.output(&path).at("manifest")?;
        out += &format!("fitted a_eff = {:.6} mm^2/s, rms {:.4} K\n", fit.a_eff, fit.rms);
    }
    manifest.finish(&a.out_dir).at("manifest")?;
    out += &format!("wrote {}\n", path.display());
    Ok(out)
}
