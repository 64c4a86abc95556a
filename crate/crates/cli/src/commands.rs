use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use serde::Serialize;

use sphsep::ingest::{ingest, IngestConfig};
use sphsep::io::{self, FieldFormat, InputKind};
use sphsep::kernels::{KernelOrders, Part, ProfileKind, ZonalFunction};
use sphsep::multiscale::{rho_of_scale, SeparationConfig, TransformOptions};
use sphsep::synthetic::{compare_with_oracle, make_field, SyntheticSpec};
use sphsep::{Error, Field, Grid, Profile, Regularization, Separation};

use crate::{Command, Format, GridArgs, KernelChoice, OutputArgs, ScaleArgs};

pub const EXIT_PRECONDITION: u8 = 2;
pub const EXIT_UNDER_RESOLVED: u8 = 3;
pub const EXIT_IO: u8 = 4;

pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::UnderResolved { .. } | Error::Resolution(_) => EXIT_UNDER_RESOLVED,
                Error::Io(_) | Error::Format(_) => EXIT_IO,
                _ => EXIT_PRECONDITION,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
    }
    EXIT_PRECONDITION
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest { input, grid, output } => run_ingest(&input, &grid, &output),
        Command::Synthesize { terms, radius, grid, output } => run_synthesize(terms, radius, grid, &output),
        Command::Separate { input, scales, grid, truth, output } => {
            run_separate(&input, &scales, &grid, truth.as_deref(), &output)
        }
        Command::Pyramid { input, scales, grid, output } => run_pyramid(&input, &scales, &grid, &output),
        Command::KernelTable { kernel, scale, order, samples, t_min, t_max, output } => {
            run_kernel_table(kernel, scale, order, samples, (t_min, t_max), &output)
        }
        Command::OracleCompare { input, scales, lmax, truth, output } => {
            run_oracle_compare(&input, &scales, lmax, truth.as_deref(), &output)
        }
    }
}

fn field_format(f: Format) -> FieldFormat {
    match f {
        Format::Csv => FieldFormat::Csv,
        Format::Json => FieldFormat::Json,
    }
}

fn prepare_out(out: &OutputArgs) -> Result<()> {
    fs::create_dir_all(&out.out).map_err(Error::from).with_context(|| format!("creating {}", out.out.display()))
}

fn write_field(out: &OutputArgs, stem: &str, field: &Field) -> Result<String> {
    let fmt = field_format(out.format);
    let name = format!("{stem}.{}", fmt.extension());
    io::write_grid_field(&out.out.join(&name), field, fmt).with_context(|| format!("writing {name}"))?;
    Ok(name)
}

fn write_manifest<S: Serialize>(out: &OutputArgs, name: &str, value: &S) -> Result<()> {
    io::write_json(&out.out.join(name), value).with_context(|| format!("writing {name}"))
}

#[derive(Debug, Serialize)]
struct GridInfo {
    n_lat: usize,
    n_lon: usize,
    radius: f64,
    declared_degree: u32,
}

impl GridInfo {
    fn of(g: &Grid) -> Self {
        Self { n_lat: g.n_lat(), n_lon: g.n_lon(), radius: g.radius(), declared_degree: g.declared_degree() }
    }
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    records: usize,
    bin_deg: f64,
    huber_c: f64,
    filled_nodes: usize,
    /// Fewest and most records averaged into one node.
    records_per_node: (usize, usize),
    /// Node indices (row-major) whose values were interpolated.
    filled: Vec<usize>,
}

fn ingest_config(grid: &GridArgs) -> IngestConfig {
    IngestConfig { n_lat: grid.grid.0, n_lon: grid.grid.1, bin_deg: grid.bin_deg, huber_c: grid.huber_c }
}

/// Loads a grid field, ingesting scattered input first.
fn load_input(input: &Path, grid: Option<&GridArgs>) -> Result<(Field, Option<IngestSummary>)> {
    let kind = io::detect_input(input).with_context(|| format!("reading {}", input.display()))?;
    match kind {
        InputKind::Grid | InputKind::GridJson => {
            Ok((io::read_grid_field(input).with_context(|| format!("reading {}", input.display()))?, None))
        }
        InputKind::Scattered => {
            let grid = grid.context("scattered input needs binning parameters")?;
            let data = io::read_scattered(input).with_context(|| format!("reading {}", input.display()))?;
            let cfg = ingest_config(grid);
            let res = ingest(&data, &cfg)?;
            let summary = IngestSummary {
                records: data.records.len(),
                bin_deg: cfg.bin_deg,
                huber_c: cfg.huber_c,
                filled_nodes: res.filled_count(),
                records_per_node: (
                    res.counts.iter().copied().min().unwrap_or(0),
                    res.counts.iter().copied().max().unwrap_or(0),
                ),
                filled: res.filled.iter().enumerate().filter(|(_, f)| **f).map(|(i, _)| i).collect(),
            };
            Ok((res.field, Some(summary)))
        }
    }
}

fn run_ingest(input: &Path, grid: &GridArgs, out: &OutputArgs) -> Result<()> {
    if io::detect_input(input)? != InputKind::Scattered {
        return Err(Error::Format(format!("{} is not a scattered dataset", input.display())).into());
    }
    let (field, summary) = load_input(input, Some(grid))?;
    prepare_out(out)?;
    let file = write_field(out, "field", &field)?;
    #[derive(Serialize)]
    struct Manifest {
        input: String,
        field: String,
        grid: GridInfo,
        ingest: Option<IngestSummary>,
    }
    write_manifest(
        out,
        "ingest.json",
        &Manifest {
            input: input.display().to_string(),
            field: file,
            grid: GridInfo::of(field.grid()),
            ingest: summary,
        },
    )
}

#[derive(Debug, Serialize, serde::Deserialize)]
struct GroundTruth {
    field: String,
    grid: (usize, usize),
    spec: SyntheticSpec,
}

fn run_synthesize(
    terms: Vec<sphsep::SyntheticTerm>,
    radius: f64,
    grid: (usize, usize),
    out: &OutputArgs,
) -> Result<()> {
    let mut spec = SyntheticSpec::three_part_example();
    if !terms.is_empty() {
        spec.terms = terms;
    }
    spec.radius = radius;
    spec.validate()?;
    let g = Arc::new(Grid::new(grid.0, grid.1, radius)?);
    let synthetic = make_field(&spec, g)?;
    prepare_out(out)?;
    let file = write_field(out, "field", &synthetic.field)?;
    write_manifest(out, "ground_truth.json", &GroundTruth { field: file, grid, spec })
}

fn separation_config(s: &ScaleArgs) -> SeparationConfig {
    SeparationConfig {
        j0: s.j0,
        jmax: s.jmax,
        transform: TransformOptions {
            orders: KernelOrders { green: s.green_order, single_layer: s.single_layer_order },
            min_cap_nodes: s.min_cap_nodes,
        },
        radial_mean_factor: s.radial_tol,
    }
}

/// Ground truth for `field`, from an explicit manifest or one next to the input.
fn load_truth(input: &Path, explicit: Option<&Path>, field: &Field) -> Result<Option<[Field; 3]>> {
    let path: PathBuf = match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let candidate = input.parent().unwrap_or(Path::new(".")).join("ground_truth.json");
            if !candidate.exists() {
                return Ok(None);
            }
            candidate
        }
    };
    let truth: GroundTruth = io::read_json(&path).with_context(|| format!("reading {}", path.display()))?;
    let synthetic = make_field(&truth.spec, field.grid().clone())
        .with_context(|| format!("ground truth {} does not match the input grid", path.display()))?;
    Ok(Some(synthetic.truth))
}

#[derive(Debug, Serialize)]
struct ScaleRho {
    scale: u32,
    rho: f64,
}

#[derive(Debug, Serialize)]
struct PartValues {
    internal: f64,
    external: f64,
    toroidal: f64,
}

impl PartValues {
    fn from_fn(f: impl Fn(Part) -> f64) -> Self {
        Self { internal: f(Part::Internal), external: f(Part::External), toroidal: f(Part::Toroidal) }
    }
}

#[derive(Debug, Serialize)]
struct PartFiles {
    internal: String,
    external: String,
    toroidal: String,
}

#[derive(Debug, Serialize)]
struct ScaleFiles {
    scale: u32,
    files: PartFiles,
}

#[derive(Debug, Serialize)]
struct ScaleNorms {
    scale: u32,
    sup: PartValues,
}

#[derive(Debug, Serialize)]
struct Diagnostics {
    input_sup: f64,
    radial_mean: f64,
    radial_mean_tolerance: f64,
    residual_sup: f64,
    part_sup: PartValues,
    detail_sup: Vec<ScaleNorms>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sup_error_vs_truth: Option<PartValues>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_sup_error_vs_truth: Option<PartValues>,
}

#[derive(Debug, Serialize)]
struct SeparationManifest {
    input: String,
    j0: u32,
    jmax: u32,
    orders: KernelOrders,
    min_cap_nodes: usize,
    rho_schedule: Vec<ScaleRho>,
    grid: GridInfo,
    parts: PartFiles,
    residual: String,
    details: Vec<ScaleFiles>,
    diagnostics: Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    ingest: Option<IngestSummary>,
}

fn write_parts(out: &OutputArgs, prefix: &str, parts: &[Field; 3]) -> Result<PartFiles> {
    Ok(PartFiles {
        internal: write_field(out, &format!("{prefix}internal"), &parts[0])?,
        external: write_field(out, &format!("{prefix}external"), &parts[1])?,
        toroidal: write_field(out, &format!("{prefix}toroidal"), &parts[2])?,
    })
}

fn diagnostics(b: &Field, sep: &Separation, cfg: &SeparationConfig, truth: Option<&[Field; 3]>) -> Result<Diagnostics> {
    let sup_err = |t: &[Field; 3], p: Part| -> f64 {
        sep.part(p).sub(&t[p.index()]).map(|d| d.sup_norm()).unwrap_or(f64::NAN)
    };
    Ok(Diagnostics {
        input_sup: b.sup_norm(),
        radial_mean: sep.radial_mean,
        radial_mean_tolerance: cfg.radial_mean_factor * b.sup_norm() * 4.0 * std::f64::consts::PI,
        residual_sup: sep.residual(b)?.sup_norm(),
        part_sup: PartValues::from_fn(|p| sep.part(p).sup_norm()),
        detail_sup: sep
            .details
            .iter()
            .enumerate()
            .map(|(k, d)| ScaleNorms {
                scale: sep.j0 + k as u32,
                sup: PartValues::from_fn(|p| d[p.index()].sup_norm()),
            })
            .collect(),
        sup_error_vs_truth: truth.map(|t| PartValues::from_fn(|p| sup_err(t, p))),
        relative_sup_error_vs_truth: truth
            .map(|t| PartValues::from_fn(|p| sup_err(t, p) / t[p.index()].sup_norm())),
    })
}

fn run_separate(
    input: &Path,
    scales: &ScaleArgs,
    grid: &GridArgs,
    truth: Option<&Path>,
    out: &OutputArgs,
) -> Result<()> {
    let (b, ingest) = load_input(input, Some(grid))?;
    let cfg = separation_config(scales);
    let truth = if ingest.is_none() { load_truth(input, truth, &b)? } else { None };
    let sep = sphsep::separate(&b, &cfg)?;
    prepare_out(out)?;
    let parts = write_parts(out, "", &sep.parts)?;
    let residual = write_field(out, "residual", &b.sub(sep.internal())?)?;
    let details_dir = "details";
    fs::create_dir_all(out.out.join(details_dir)).map_err(Error::from)?;
    let details = sep
        .details
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let scale = sep.j0 + k as u32;
            Ok(ScaleFiles { scale, files: write_parts(out, &format!("{details_dir}/detail_{scale}_"), d)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = SeparationManifest {
        input: input.display().to_string(),
        j0: sep.j0,
        jmax: sep.jmax,
        orders: sep.orders,
        min_cap_nodes: cfg.transform.min_cap_nodes,
        rho_schedule: sep.rho_schedule().into_iter().map(|(scale, rho)| ScaleRho { scale, rho }).collect(),
        grid: GridInfo::of(b.grid()),
        parts,
        residual,
        details,
        diagnostics: diagnostics(&b, &sep, &cfg, truth.as_ref())?,
        ingest,
    };
    write_manifest(out, "manifest.json", &manifest)
}

fn run_pyramid(input: &Path, scales: &ScaleArgs, grid: &GridArgs, out: &OutputArgs) -> Result<()> {
    let (b, ingest) = load_input(input, Some(grid))?;
    let cfg = separation_config(scales);
    let sep = sphsep::separate(&b, &cfg)?;
    prepare_out(out)?;
    #[derive(Serialize)]
    struct Level {
        scale: u32,
        rho: f64,
        approximation: PartFiles,
        approximation_sup: PartValues,
        #[serde(skip_serializing_if = "Option::is_none")]
        detail: Option<PartFiles>,
    }
    let mut levels = Vec::new();
    for j in sep.j0..=sep.jmax {
        let p = sep.partial(j)?;
        let detail = sep.detail(j).map(|d| write_parts(out, &format!("R_{j}_"), d)).transpose()?;
        levels.push(Level {
            scale: j,
            rho: rho_of_scale(j),
            approximation: write_parts(out, &format!("P_{j}_"), &p)?,
            approximation_sup: PartValues::from_fn(|q| p[q.index()].sup_norm()),
            detail,
        });
    }
    #[derive(Serialize)]
    struct Manifest {
        input: String,
        j0: u32,
        jmax: u32,
        orders: KernelOrders,
        grid: GridInfo,
        levels: Vec<Level>,
        #[serde(skip_serializing_if = "Option::is_none")]
        ingest: Option<IngestSummary>,
    }
    write_manifest(
        out,
        "pyramid.json",
        &Manifest {
            input: input.display().to_string(),
            j0: sep.j0,
            jmax: sep.jmax,
            orders: sep.orders,
            grid: GridInfo::of(b.grid()),
            levels,
            ingest,
        },
    )
}

#[derive(Debug, Serialize)]
struct KernelRow {
    t: f64,
    value: f64,
    deriv1: f64,
    deriv2: f64,
}

fn run_kernel_table(
    kernel: KernelChoice,
    scale: Option<u32>,
    order: usize,
    samples: usize,
    (t_min, t_max): (f64, f64),
    out: &OutputArgs,
) -> Result<()> {
    if samples < 2 || !(t_min < t_max) || t_min < -1.0 || t_max > 1.0 {
        return Err(Error::Config(format!(
            "need ≥ 2 samples and -1 ≤ t_min < t_max ≤ 1, got {samples} on [{t_min}, {t_max}]"
        ))
        .into());
    }
    let kind = match kernel {
        KernelChoice::Green => ProfileKind::Green,
        KernelChoice::SingleLayer => ProfileKind::SingleLayer,
        KernelChoice::DinvGreen => ProfileKind::DinvGreen,
    };
    let reg = scale.map(|j| Regularization::from_scale(j, order)).transpose()?;
    let profile = Profile::new(kind, reg);
    let rows = (0..samples)
        .map(|i| t_min + (t_max - t_min) * i as f64 / (samples - 1) as f64)
        .filter_map(|t| match profile.sample(t) {
            Ok(s) => Some(Ok(KernelRow { t, value: s.value, deriv1: s.deriv1, deriv2: s.deriv2 })),
            Err(Error::Singularity { .. }) => None,
            Err(e) => Some(Err(e)),
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    prepare_out(out)?;
    let stem = match kernel {
        KernelChoice::Green => "green",
        KernelChoice::SingleLayer => "single_layer",
        KernelChoice::DinvGreen => "dinv_green",
    };
    match out.format {
        Format::Csv => {
            let path = out.out.join(format!("{stem}.csv"));
            let mut w = csv::Writer::from_path(&path).map_err(Error::from)?;
            for r in &rows {
                w.serialize(r).map_err(Error::from)?;
            }
            w.flush().map_err(Error::from)?;
            Ok(())
        }
        Format::Json => write_manifest(out, &format!("{stem}.json"), &rows),
    }
}

fn run_oracle_compare(
    input: &Path,
    scales: &ScaleArgs,
    lmax: Option<u32>,
    truth: Option<&Path>,
    out: &OutputArgs,
) -> Result<()> {
    let (b, _) = load_input(input, None)?;
    let cfg = separation_config(scales);
    let truth = load_truth(input, truth, &b)?;
    let lmax = lmax.unwrap_or_else(|| (b.grid().declared_degree() / 2).min(12));
    let sep = sphsep::separate(&b, &cfg)?;
    let (cmp, coeffs) = compare_with_oracle(&b, &sep.parts, lmax, truth.as_ref())?;
    prepare_out(out)?;
    let path = out.out.join("oracle_coefficients.csv");
    let mut w = csv::Writer::from_path(&path).map_err(Error::from)?;
    for e in &coeffs.entries {
        w.serialize(e).map_err(Error::from)?;
    }
    w.flush().map_err(Error::from)?;
    #[derive(Serialize)]
    struct Manifest<'a> {
        input: String,
        j0: u32,
        jmax: u32,
        orders: KernelOrders,
        grid: GridInfo,
        comparison: &'a sphsep::synthetic::OracleComparison,
    }
    for p in &cmp.parts {
        println!(
            "{:<9} multiscale-vs-oracle {:.6e}{}",
            p.part.name(),
            p.multiscale_vs_oracle,
            p.multiscale_vs_truth.map(|e| format!("  multiscale-vs-truth {e:.6e}")).unwrap_or_default()
        );
    }
    write_manifest(
        out,
        "oracle_compare.json",
        &Manifest {
            input: input.display().to_string(),
            j0: sep.j0,
            jmax: sep.jmax,
            orders: sep.orders,
            grid: GridInfo::of(b.grid()),
            comparison: &cmp,
        },
    )
}
