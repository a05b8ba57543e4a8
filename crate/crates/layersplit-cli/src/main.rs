//! Command-line front end: decompose compressed images or frame-directory
//! videos into intrinsic and artifact layers, synthesize block-compressed
//! test inputs, sweep solver parameters against a reference, and score
//! recovered images.
//!
//! Exit codes: 0 success (deblock: converged), 2 deblock hit the iteration
//! cap without converging, 1 any error.

mod io;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use layersplit::blocking::CompressionSimulator;
use layersplit::gradient::DerivativeFilter;
use layersplit::metrics;
use layersplit::pipeline::{self, PipelineSpec, Variant};
use layersplit::solver::SolverConfig;
use layersplit::tensor::DenseTensor;

use crate::io::LoadedImage;
use crate::manifest::{MetricsJson, RunManifest, SweepRow};

#[derive(Parser)]
#[command(
    name = "layersplit",
    about = "Two-layer decomposition of block-compressed images and videos",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a compressed image (or frame directory) into layers.
    Deblock(DeblockArgs),
    /// Block-compress a clean image (or frame directory) at a quality.
    Synthesize(SynthesizeArgs),
    /// Score one parameter grid against a clean reference.
    Sweep(SweepArgs),
    /// SSIM and gradient coherence of a recovered image vs a reference.
    Metrics(MetricsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Dslp,
    Vdslp,
    Tv,
    Idslp,
    Ivdslp,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Dslp => Variant::Dslp,
            VariantArg::Vdslp => Variant::Vdslp,
            VariantArg::Tv => Variant::Tv,
            VariantArg::Idslp => Variant::Idslp,
            VariantArg::Ivdslp => Variant::Ivdslp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DenoiserArg {
    Median,
    Bilateral,
}

/// Solver knobs shared by deblock and sweep; names mirror the library
/// configuration one to one.
#[derive(Args)]
struct SolverArgs {
    /// Intrinsic gradient sparsity weight. Defaults to 0.6, or 0.3 for the
    /// two-stage variants (their prefilter already removed the noise the
    /// larger value exists to fight).
    #[arg(long)]
    alpha: Option<f64>,
    /// Cross-layer gradient exclusivity weight.
    #[arg(long, default_value_t = 30.0)]
    beta: f64,
    /// Observation-gradient coupling weight.
    #[arg(long, default_value_t = 6.0)]
    gamma: f64,
    /// Initial penalty.
    #[arg(long, default_value_t = 0.01)]
    mu0: f64,
    /// Geometric penalty growth per iteration.
    #[arg(long, default_value_t = 1.3)]
    rho: f64,
    /// Relative layer-sum residual at which the solve stops.
    #[arg(long, default_value_t = 1e-7)]
    delta: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
}

impl SolverArgs {
    fn to_config(&self, variant: Variant) -> SolverConfig {
        let alpha = self.alpha.unwrap_or(if variant.is_two_stage() { 0.3 } else { 0.6 });
        SolverConfig {
            alpha,
            beta: self.beta,
            gamma: self.gamma,
            mu0: self.mu0,
            rho: self.rho,
            delta: self.delta,
            max_iters: self.max_iters,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct DeblockArgs {
    /// Compressed image, or a directory of numbered frames for video.
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::Dslp)]
    variant: VariantArg,
    #[command(flatten)]
    solver: SolverArgs,
    /// Disable the reflective boundary extension (the solver then sees the
    /// image as circular, and the frame border reads as an edge).
    #[arg(long)]
    no_mirror: bool,
    /// Prefilter kind for the two-stage variants.
    #[arg(long, value_enum)]
    denoiser: Option<DenoiserArg>,
    /// Prefilter strength.
    #[arg(long)]
    denoise_strength: Option<f64>,
    /// Clean reference; enables --metrics-json.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Where to write {ssim, gc, iterations, final_residual}.
    #[arg(long, requires = "reference")]
    metrics_json: Option<PathBuf>,
}

#[derive(Args)]
struct SynthesizeArgs {
    /// Clean image, or a directory of numbered frames.
    input: PathBuf,
    /// Compression quality, 1-100.
    #[arg(long)]
    quality: u8,
    /// Output image path (or directory for frame input).
    #[arg(long)]
    output: PathBuf,
    /// Manifest path; defaults next to the output.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Compressed image to decompose at every grid point.
    input: PathBuf,
    /// Clean reference the rows are scored against.
    #[arg(long)]
    reference: PathBuf,
    /// Which weight the grid varies.
    #[arg(long, default_value = "alpha")]
    param: String,
    /// Comma-separated grid. Defaults to 0.1..1.0 in steps of 0.1 for
    /// alpha; required for beta and gamma.
    #[arg(long)]
    values: Option<String>,
    #[command(flatten)]
    solver: SweepSolverArgs,
    /// csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Output path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Sweep-specific solver knobs: same names, but the iteration budget
/// defaults low. Grid points are compared against each other, and the
/// parameter response is strongest while the shrinkage thresholds are
/// still live; running every point to deep convergence mostly erases the
/// differences the sweep exists to show (and costs several times more).
#[derive(Args)]
struct SweepSolverArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 30.0)]
    beta: f64,
    #[arg(long, default_value_t = 6.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.01)]
    mu0: f64,
    #[arg(long, default_value_t = 1.3)]
    rho: f64,
    #[arg(long, default_value_t = 1e-7)]
    delta: f64,
    /// Iteration budget per grid point.
    #[arg(long, default_value_t = 30)]
    max_iters: usize,
}

#[derive(Args)]
struct MetricsArgs {
    /// Recovered image or frame directory.
    input: PathBuf,
    /// Reference image or frame directory.
    #[arg(long)]
    reference: PathBuf,
    /// Output path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    init_threads();
    // Usage problems exit 1 like any other error; 2 is reserved for a run
    // that finished without converging. Help and version exit 0.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let run = match cli.command {
        Command::Deblock(args) => cmd_deblock(&args),
        Command::Synthesize(args) => cmd_synthesize(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Metrics(args) => cmd_metrics(&args),
    };
    match run {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// LAYERSPLIT_THREADS caps the worker pool; unset means rayon's default.
fn init_threads() {
    if let Ok(v) = std::env::var("LAYERSPLIT_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn load_any(path: &Path) -> Result<LoadedImage> {
    if path.is_dir() {
        io::load_video(path)
    } else {
        io::load_image(path)
    }
}

/// Re-quantizes to the 8-bit grid the intrinsic layer is stored on.
fn quantize8(t: &DenseTensor) -> DenseTensor {
    t.map(|x| (x.clamp(0.0, 1.0) * 255.0).round() / 255.0)
        .expect("quantization keeps values finite")
}

fn cmd_deblock(args: &DeblockArgs) -> Result<ExitCode> {
    let total = Instant::now();
    let variant: Variant = args.variant.into();
    let mut spec = PipelineSpec {
        variant,
        solver: args.solver.to_config(variant),
        denoiser: None,
        mirror: !args.no_mirror,
    };
    if variant.is_two_stage() {
        let strength = args.denoise_strength.unwrap_or(25.0);
        spec.denoiser = Some(match args.denoiser {
            Some(DenoiserArg::Median) => layersplit::denoise::Denoiser::median(strength),
            Some(DenoiserArg::Bilateral) | None => {
                layersplit::denoise::Denoiser::bilateral(strength)
            }
        });
    } else if args.denoiser.is_some() || args.denoise_strength.is_some() {
        bail!("--denoiser/--denoise-strength only apply to the two-stage variants");
    }

    let decode_t = Instant::now();
    let input = load_any(&args.input)?;
    let reference = args
        .reference
        .as_ref()
        .map(|p| load_any(p))
        .transpose()?
        .map(|l| l.tensor);
    let decode_ms = decode_t.elapsed().as_millis();

    let solve_t = Instant::now();
    let outcome = pipeline::run(&input.tensor, &spec, reference.as_ref())?;
    let solve_ms = solve_t.elapsed().as_millis();

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let mut man = RunManifest::new("deblock");
    man.input("input", &args.input);
    if let Some(r) = &args.reference {
        man.input("reference", r);
    }
    man.spec = Some(spec.clone());
    man.iterations = Some(outcome.result.iterations);
    man.converged = Some(outcome.result.converged);
    man.final_residual = Some(outcome.result.final_residual);

    // The stored artifact is the complement of the stored intrinsic, so
    // decoding the two PNGs and summing reproduces the decoded input to
    // 16-bit rounding. The x10 view amplifies the solver's own artifact
    // layer around mid-gray for inspection.
    let encode_t = Instant::now();
    let intrinsic_stored = quantize8(&outcome.result.intrinsic);
    let artifact_stored = input
        .tensor
        .sub(&intrinsic_stored)?
        .map(|x| x + 0.5)?;
    let artifact_view = outcome.result.artifact.map(|x| 0.5 + 10.0 * x)?;
    if input.tensor.order() == 4 {
        let d = |n: &str| args.out_dir.join(n);
        io::save_video(&intrinsic_stored, &d("intrinsic"), input.color, false)?;
        io::save_video(&artifact_stored, &d("artifact"), input.color, true)?;
        io::save_video(&artifact_view, &d("artifact_x10"), input.color, false)?;
        man.output("intrinsic", &d("intrinsic"));
        man.output("artifact", &d("artifact"));
        man.output("artifact_x10", &d("artifact_x10"));
    } else {
        let intrinsic_path = args.out_dir.join("intrinsic.png");
        let artifact_path = args.out_dir.join("artifact.png");
        let view_path = args.out_dir.join("artifact_x10.png");
        io::save_image8(&intrinsic_stored, &intrinsic_path)?;
        io::save_image16(&artifact_stored, &artifact_path)?;
        io::save_image8(&artifact_view, &view_path)?;
        man.output("intrinsic", &intrinsic_path);
        man.output("artifact", &artifact_path);
        man.output("artifact_x10", &view_path);
    }
    let encode_ms = encode_t.elapsed().as_millis();

    if let Some(path) = &args.metrics_json {
        let m = outcome
            .metrics
            .as_ref()
            .expect("metrics exist whenever a reference was supplied");
        let payload = MetricsJson {
            ssim: m.ssim,
            gc: m.gc,
            iterations: Some(outcome.result.iterations),
            final_residual: Some(outcome.result.final_residual),
        };
        std::fs::write(path, serde_json::to_string_pretty(&payload)? + "\n")?;
        man.output("metrics", path);
    }

    man.timings_ms.insert("decode".into(), decode_ms);
    man.timings_ms.insert("solve".into(), solve_ms);
    man.timings_ms.insert("encode".into(), encode_ms);
    man.timings_ms.insert("total".into(), total.elapsed().as_millis());
    man.write(&args.out_dir.join("manifest.json"))?;

    Ok(if outcome.result.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn cmd_synthesize(args: &SynthesizeArgs) -> Result<ExitCode> {
    let total = Instant::now();
    let sim = CompressionSimulator::new(args.quality)?;
    let mut man = RunManifest::new("synthesize");
    man.input("input", &args.input);
    man.quality = Some(args.quality);

    if args.input.is_dir() {
        std::fs::create_dir_all(&args.output)?;
        for frame in io::list_frames(&args.input)? {
            let img = io::load_image(&frame)?;
            let blocked = sim.apply(&img.tensor)?;
            let name = frame.file_name().expect("listed frames have names");
            io::save_image8(&blocked, &args.output.join(name))?;
        }
    } else {
        let img = io::load_image(&args.input)?;
        let blocked = sim.apply(&img.tensor)?;
        if let Some(dir) = args.output.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        io::save_image8(&blocked, &args.output)?;
    }
    man.output("compressed", &args.output);
    man.timings_ms.insert("total".into(), total.elapsed().as_millis());
    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| args.output.with_extension("manifest.json"));
    man.write(&manifest_path)?;
    Ok(ExitCode::SUCCESS)
}

fn parse_values(raw: &str) -> Result<Vec<f64>> {
    let vals: Vec<f64> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("bad sweep value '{s}'")))
        .collect::<Result<_>>()?;
    if vals.is_empty() {
        bail!("the sweep value list is empty");
    }
    Ok(vals)
}

fn cmd_sweep(args: &SweepArgs) -> Result<ExitCode> {
    let values = match (&args.values, args.param.as_str()) {
        (Some(raw), _) => parse_values(raw)?,
        (None, "alpha") => (1..=10).map(|i| i as f64 / 10.0).collect(),
        (None, p) => bail!("--values is required for a {p} sweep"),
    };
    if !matches!(args.param.as_str(), "alpha" | "beta" | "gamma") {
        bail!("unknown sweep parameter '{}'", args.param);
    }

    let input = load_any(&args.input)?;
    let reference = load_any(&args.reference)?;
    let mut rows = Vec::with_capacity(values.len());
    for &v in &values {
        let mut spec = PipelineSpec::new(Variant::Dslp);
        spec.solver = SolverConfig {
            alpha: args.solver.alpha.unwrap_or(0.6),
            beta: args.solver.beta,
            gamma: args.solver.gamma,
            mu0: args.solver.mu0,
            rho: args.solver.rho,
            delta: args.solver.delta,
            max_iters: args.solver.max_iters,
            ..SolverConfig::default()
        };
        match args.param.as_str() {
            "alpha" => spec.solver.alpha = v,
            "beta" => spec.solver.beta = v,
            _ => spec.solver.gamma = v,
        }
        let outcome = pipeline::run(&input.tensor, &spec, Some(&reference.tensor))?;
        let m = outcome.metrics.expect("reference was supplied");
        rows.push(SweepRow {
            value: v,
            ssim: m.ssim,
            gc: m.gc,
            iterations: outcome.result.iterations,
        });
    }

    let body = match args.format.as_str() {
        "csv" => {
            let mut s = String::from("value,ssim,gc,iterations\n");
            for r in &rows {
                s.push_str(&format!("{},{},{},{}\n", r.value, r.ssim, r.gc, r.iterations));
            }
            s
        }
        "json" => {
            let payload = serde_json::json!({
                "param": args.param,
                "iteration_budget": args.solver.max_iters,
                "rows": rows,
            });
            serde_json::to_string_pretty(&payload)? + "\n"
        }
        other => bail!("unknown format '{other}' (expected csv or json)"),
    };
    match &args.output {
        Some(p) => std::fs::write(p, body)?,
        None => print!("{body}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_metrics(args: &MetricsArgs) -> Result<ExitCode> {
    let recovered = load_any(&args.input)?;
    let reference = load_any(&args.reference)?;
    let axes = if recovered.tensor.order() == 4 {
        vec![0, 1, 3]
    } else {
        vec![0, 1]
    };
    let filter = DerivativeFilter::forward_difference();
    let m = metrics::evaluate(&reference.tensor, &recovered.tensor, &axes, &filter)?;
    let payload = MetricsJson {
        ssim: m.ssim,
        gc: m.gc,
        iterations: None,
        final_residual: None,
    };
    let body = serde_json::to_string_pretty(&payload)? + "\n";
    match &args.output {
        Some(p) => std::fs::write(p, body)?,
        None => print!("{body}"),
    }
    Ok(ExitCode::SUCCESS)
}
