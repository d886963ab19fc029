use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use felab::bench::{self, RunConfig, TuneGrid, WallClock};
use felab::layout::{BatchLayout, ElementBatch, Scheme};
use felab::mesh::{generate_elements, generate_mesh, MeshSpec};
use felab::perfmodel::{self, ProcessorProfile};
use felab::report::{self, Format};
use felab::verify;
use felab::{ElementType, Error, GeometryPath, KernelDescriptor, ProblemClass, Variant};

const EXIT_VERIFY: u8 = 1;
const EXIT_ARGS: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;
const DEFAULT_PROFILE: &str = "xeon-e5-2620x2";

#[derive(Parser)]
#[command(name = "felab", version, about = "Finite element integration kernel lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every kernel against the reference integrators.
    Verify(VerifyArgs),
    /// Time one kernel configuration.
    Bench(BenchArgs),
    /// Time every layout, lane width and worker count.
    Tune(BenchArgs),
    /// Print the performance model for the selected kernels.
    Model(ModelArgs),
    /// Write a structured mesh batch file.
    Genmesh(GenmeshArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ElementArg {
    Tet,
    Prism,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Poisson,
    Convdiff,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Qss,
    Sqs,
    Ssq,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeoArg {
    Linear,
    Generic,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Major,
    Interleaved,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Table,
}

impl From<ElementArg> for ElementType {
    fn from(a: ElementArg) -> Self {
        match a {
            ElementArg::Tet => ElementType::Tetrahedron,
            ElementArg::Prism => ElementType::Prism,
        }
    }
}

impl From<ProblemArg> for ProblemClass {
    fn from(a: ProblemArg) -> Self {
        match a {
            ProblemArg::Poisson => ProblemClass::Poisson,
            ProblemArg::Convdiff => ProblemClass::ConvDiff,
        }
    }
}

impl From<VariantArg> for Variant {
    fn from(a: VariantArg) -> Self {
        match a {
            VariantArg::Qss => Variant::Qss,
            VariantArg::Sqs => Variant::Sqs,
            VariantArg::Ssq => Variant::Ssq,
        }
    }
}

impl From<GeoArg> for GeometryPath {
    fn from(a: GeoArg) -> Self {
        match a {
            GeoArg::Linear => GeometryPath::GeoLinear,
            GeoArg::Generic => GeometryPath::GeoGeneric,
        }
    }
}

impl From<LayoutArg> for Scheme {
    fn from(a: LayoutArg) -> Self {
        match a {
            LayoutArg::Major => Scheme::ElementMajor,
            LayoutArg::Interleaved => Scheme::LaneInterleaved,
        }
    }
}

impl From<FormatArg> for Format {
    fn from(a: FormatArg) -> Self {
        match a {
            FormatArg::Csv => Format::Csv,
            FormatArg::Table => Format::Table,
        }
    }
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long, value_enum)]
    element: Option<ElementArg>,
    #[arg(long, value_enum)]
    problem: Option<ProblemArg>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Defaults to linear for tetrahedra, generic for prisms.
    #[arg(long, value_enum)]
    geo: Option<GeoArg>,
}

impl KernelArgs {
    fn element(&self) -> ElementType {
        self.element.map_or(ElementType::Tetrahedron, Into::into)
    }

    fn problem(&self) -> ProblemClass {
        self.problem.map_or(ProblemClass::Poisson, Into::into)
    }

    fn descriptor(&self, element: ElementType, problem: ProblemClass) -> felab::Result<KernelDescriptor> {
        let geo = self.geo.map_or(KernelDescriptor::default_path(element), Into::into);
        KernelDescriptor::new(self.variant.map_or(Variant::Qss, Into::into), geo, problem, element)
    }

    /// Descriptors matching every given filter.
    fn matching(&self) -> Vec<KernelDescriptor> {
        KernelDescriptor::all()
            .into_iter()
            .filter(|d| self.element.is_none_or(|e| d.element == e.into()))
            .filter(|d| self.problem.is_none_or(|p| d.problem == p.into()))
            .filter(|d| self.variant.is_none_or(|v| d.variant == v.into()))
            .filter(|d| self.geo.is_none_or(|g| d.geometry_path == g.into()))
            .collect()
    }
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Write to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutputArgs {
    fn writer(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(io::stdout().lock()),
        })
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Random elements per (element, problem) case.
    #[arg(long, default_value_t = 1000)]
    elements: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, value_enum)]
    layout: Option<LayoutArg>,
    #[arg(long)]
    lane_width: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = bench::DEFAULT_ELEMENTS)]
    elements: usize,
    #[arg(long, default_value_t = bench::DEFAULT_REPEATS)]
    repeats: usize,
    /// Profile file, or one of the built-in profile names.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Batch file from `genmesh`; overrides --element, --problem and --elements.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Skip the verification gate; output is marked UNVERIFIED.
    #[arg(long)]
    no_verify: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    /// Profile file or built-in name; all built-in profiles by default.
    #[arg(long)]
    profile: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct GenmeshArgs {
    #[arg(long, value_enum, default_value = "tet")]
    element: ElementArg,
    #[arg(long, value_enum, default_value = "poisson")]
    problem: ProblemArg,
    /// Exact element count; ignored when --cells is given.
    #[arg(long, default_value_t = bench::DEFAULT_ELEMENTS)]
    elements: usize,
    /// Subdivisions per side of the unit cube.
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long, value_enum, default_value = "major")]
    layout: LayoutArg,
    #[arg(long)]
    lane_width: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Verification,
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn load_profile(arg: Option<&str>) -> felab::Result<ProcessorProfile> {
    let name = arg.unwrap_or(DEFAULT_PROFILE);
    if let Some(p) = ProcessorProfile::by_name(name) {
        return Ok(p);
    }
    ProcessorProfile::load(Path::new(name))
}

fn layout_for(scheme: Scheme, lane_width: Option<usize>) -> felab::Result<BatchLayout> {
    let default = match scheme {
        Scheme::ElementMajor => 1,
        Scheme::LaneInterleaved => 8,
    };
    BatchLayout::new(scheme, lane_width.unwrap_or(default))
}

fn run_gate(skip: bool) -> CliResult<bool> {
    if skip {
        eprintln!("warning: verification skipped, results are UNVERIFIED");
        return Ok(true);
    }
    let report = verify::run_suite(1000, 1)?;
    if !report.passed() {
        eprintln!("{report}");
        return Err(Failure::Verification);
    }
    Ok(false)
}

fn bench_input(args: &BenchArgs) -> CliResult<(ElementBatch, KernelDescriptor)> {
    let batch = match &args.input {
        Some(path) => ElementBatch::load(path)?,
        None => generate_elements(
            args.kernel.element(),
            args.kernel.problem(),
            args.elements,
            BatchLayout::element_major(),
            args.seed,
        )?,
    };
    let desc = args.kernel.descriptor(batch.element(), batch.problem())?;
    Ok((batch, desc))
}

fn cmd_verify(args: &VerifyArgs) -> CliResult {
    let report = verify::run_suite(args.elements, args.seed)?;
    println!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn cmd_bench(args: &BenchArgs) -> CliResult {
    let profile = load_profile(args.profile.as_deref())?;
    let (batch, desc) = bench_input(args)?;
    let unverified = run_gate(args.no_verify)?;
    let scheme = args.layout.map_or(Scheme::ElementMajor, Into::into);
    let workers = args.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let config = RunConfig { desc, layout: layout_for(scheme, args.lane_width)?, workers };
    let record = bench::run_benchmark(&batch, &config, args.repeats, &profile, &mut WallClock)?;
    report::write_records(&[record], args.output.format.into(), unverified, args.output.writer()?)?;
    Ok(())
}

fn cmd_tune(args: &BenchArgs) -> CliResult {
    let profile = load_profile(args.profile.as_deref())?;
    let (batch, desc) = bench_input(args)?;
    let unverified = run_gate(args.no_verify)?;
    let mut grid = TuneGrid::full();
    if let Some(l) = args.layout {
        grid.schemes = vec![l.into()];
    }
    if let Some(w) = args.lane_width {
        BatchLayout::interleaved(w)?;
        grid.lane_widths = vec![w];
    }
    if let Some(w) = args.workers {
        grid.workers = vec![w];
    }
    let result = bench::tune(&batch, desc, &grid, args.repeats, &profile, &mut WallClock)?;
    let best = result.best_record();
    let batch_ms = best.ns_per_element * best.n_elements as f64 * 1e-6;
    if batch_ms < 10.0 {
        eprintln!("warning: fastest batch ran in {batch_ms:.2} ms, below the 10 ms timing floor");
    }
    eprintln!(
        "best: layout={} lane_width={} workers={} {:.3} ns/element ({}%)",
        best.layout.scheme, best.layout.lane_width, best.workers, best.ns_per_element, best.efficiency_pct
    );
    report::write_records(&result.records, args.output.format.into(), unverified, args.output.writer()?)?;
    Ok(())
}

fn cmd_model(args: &ModelArgs) -> CliResult {
    let profiles = match &args.profile {
        Some(p) => vec![load_profile(Some(p))?],
        None => ProcessorProfile::builtin(),
    };
    let header = [
        "profile", "variant", "geo", "element", "problem", "accesses", "ops", "intensity", "limit", "memory_ns",
        "compute_ns", "bound_ns", "regime",
    ];
    let mut rows = Vec::new();
    for p in &profiles {
        for d in args.kernel.matching() {
            let cost = perfmodel::kernel_cost(&d);
            let t = perfmodel::time_bound(&d, p);
            rows.push([
                p.name.clone(),
                d.variant.to_string(),
                d.geometry_path.to_string(),
                d.element.to_string(),
                d.problem.to_string(),
                cost.global_accesses.to_string(),
                cost.op_count.to_string(),
                cost.arithmetic_intensity.to_string(),
                perfmodel::limiting_intensity(p, true).to_string(),
                format!("{:.2}", t.memory_ns),
                format!("{:.2}", t.compute_ns),
                format!("{:.2}", t.bound_ns()),
                t.regime().to_string(),
            ]);
        }
    }
    let mut out = args.output.writer()?;
    match Format::from(args.output.format) {
        Format::Csv => {
            writeln!(out, "{}", header.join(","))?;
            for r in &rows {
                writeln!(out, "{}", r.join(","))?;
            }
        }
        Format::Table => {
            let mut widths = header.map(str::len);
            for r in &rows {
                for (w, c) in widths.iter_mut().zip(r) {
                    *w = (*w).max(c.len());
                }
            }
            let line = |cells: Vec<&str>| {
                cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
            };
            writeln!(out, "{}", line(header.to_vec()))?;
            for r in &rows {
                writeln!(out, "{}", line(r.iter().map(String::as_str).collect()))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_genmesh(args: &GenmeshArgs) -> CliResult {
    let element = args.element.into();
    let problem = args.problem.into();
    let layout = layout_for(args.layout.into(), args.lane_width)?;
    let batch = match args.cells {
        Some(k) => generate_mesh(&MeshSpec::new(k, k, k, element)?, problem, layout, args.seed)?,
        None => generate_elements(element, problem, args.elements, layout, args.seed)?,
    };
    batch.save(&args.out)?;
    eprintln!("wrote {} {element}/{problem} elements to {}", batch.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Model(a) => cmd_model(a),
        Command::Genmesh(a) => cmd_genmesh(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => {
            eprintln!("error: verification failed");
            ExitCode::from(EXIT_VERIFY)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Element { .. } | Error::Geometry(_) => EXIT_DEGENERATE,
                Error::CounterMismatch { .. } => EXIT_VERIFY,
                _ => EXIT_ARGS,
            })
        }
    }
}

