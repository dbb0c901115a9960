//! Command-line interface for differentially private span-based clustering.
//!
//! `run` ingests a CSV, spends the privacy budget once on a histogram
//! release, and writes span files; `evaluate` scores a span file against a
//! dataset; `generate` emits synthetic datasets; `plot-data` converts a span
//! file into plottable rectangles.

mod errors;
mod ingest;
mod spansfile;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use dp_dbscan::datagen::{self, SynthKind, SynthSpec};
use dp_dbscan::metrics;
use dp_dbscan::pipeline::{self, HistogramMode};
use dp_dbscan::{Labeling, PrivacyParams};

use errors::CliError;

#[derive(Parser)]
#[command(
    name = "dp-dbscan",
    about = "Differentially private density-based clustering, released as cell spans",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the private pipeline on a CSV dataset and write span files
    Run(RunArgs),
    /// Score a span file against a dataset (and optional ground-truth labels)
    Evaluate(EvaluateArgs),
    /// Generate a synthetic dataset as CSV
    Generate(GenerateArgs),
    /// Convert a span file into per-cell rectangles (CSV) for plotting
    PlotData(PlotDataArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HistArg {
    Auto,
    Naive,
    Linear,
}

impl From<HistArg> for HistogramMode {
    fn from(h: HistArg) -> Self {
        match h {
            HistArg::Auto => HistogramMode::Auto,
            HistArg::Naive => HistogramMode::Naive,
            HistArg::Linear => HistogramMode::Linear,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Input CSV path
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated zero-based column indices holding the coordinates
    #[arg(long, value_delimiter = ',', default_value = "0,1")]
    cols: Vec<usize>,
    /// Input file has a header row
    #[arg(long)]
    has_header: bool,
    /// Clustering radius in raw data units
    #[arg(long)]
    alpha: f64,
    /// Density threshold (non-private value; the pipeline shifts it by tau)
    #[arg(long, conflicts_with = "minpts_sweep")]
    minpts: Option<u64>,
    /// Several density thresholds over one histogram release, e.g. 5,7,9
    #[arg(long, value_delimiter = ',')]
    minpts_sweep: Option<Vec<u64>>,
    /// Privacy budget
    #[arg(long)]
    epsilon: f64,
    /// Failure probability of the accuracy guarantee
    #[arg(long, default_value_t = 1.0 / 3.0)]
    beta: f64,
    /// Cell-size constant in (0,1]
    #[arg(long, default_value_t = 1.0)]
    eta_prime: f64,
    /// Histogram truncation threshold override (forces the linear path)
    #[arg(long)]
    theta: Option<f64>,
    /// Histogram implementation
    #[arg(long, value_enum, default_value_t = HistArg::Auto)]
    hist: HistArg,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output span file (sweep outputs get a -minpts<k> suffix)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Span file produced by `run`
    #[arg(long)]
    spans: PathBuf,
    /// The dataset the spans were released for
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0,1")]
    cols: Vec<usize>,
    #[arg(long)]
    has_header: bool,
    /// Optional single-column CSV of ground-truth labels (0 = noise)
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Shape family
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Number of points
    #[arg(long)]
    n: usize,
    /// Jitter standard deviation (defaults depend on the shape)
    #[arg(long)]
    noise_sd: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV of normalized coordinates
    #[arg(long)]
    out: PathBuf,
    /// Optional output CSV of generative labels
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Circles,
    Moons,
    Blobs,
    Coincident,
    Uniform,
}

impl From<KindArg> for SynthKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Circles => SynthKind::Circles,
            KindArg::Moons => SynthKind::Moons,
            KindArg::Blobs => SynthKind::Blobs,
            KindArg::Coincident => SynthKind::Coincident,
            KindArg::Uniform => SynthKind::Uniform,
        }
    }
}

#[derive(Args)]
struct PlotDataArgs {
    #[arg(long)]
    spans: PathBuf,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn sweep_path(base: &Path, min_pts: u64) -> PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "spans".into());
    let ext = base
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "json".into());
    base.with_file_name(format!("{stem}-minpts{min_pts}.{ext}"))
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let minpts_values: Vec<u64> = match (&args.minpts, &args.minpts_sweep) {
        (Some(m), None) => vec![*m],
        (None, Some(sweep)) if !sweep.is_empty() => sweep.clone(),
        _ => {
            return Err(CliError::Config(
                "exactly one of --minpts or --minpts-sweep is required".into(),
            ))
        }
    };
    let (points, transform) = ingest::ingest(&args.input, &args.cols, args.has_header)?;
    let alpha_normalized = transform.normalize_radius(args.alpha);
    if !(alpha_normalized > 0.0 && alpha_normalized < 1.0) {
        return Err(CliError::Config(format!(
            "alpha {} maps to normalized {alpha_normalized}; it must land in (0,1) \
             (data extent is {})",
            args.alpha, transform.scale[0]
        )));
    }
    let privacy = PrivacyParams::new(args.epsilon, args.beta, args.theta.unwrap_or(0.0))?;
    let mut rng = ChaCha12Rng::seed_from_u64(args.seed);
    // one release: the budget is spent here, span extraction below is free
    let release = pipeline::release_histogram(
        &points,
        alpha_normalized,
        &privacy,
        args.eta_prime,
        args.hist.into(),
        &mut rng,
    )?;
    let sweeping = args.minpts_sweep.is_some();
    for &min_pts in &minpts_values {
        let span_set = release.spans(min_pts)?;
        let file = spansfile::build_file(&span_set, &release, &transform, args.alpha, args.seed)?;
        let path = if sweeping {
            sweep_path(&args.out, min_pts)
        } else {
            args.out.clone()
        };
        spansfile::save(&file, &path)?;
        println!(
            "wrote {} ({} spans, {} cells, histogram {})",
            path.display(),
            span_set.num_spans(),
            span_set.spans.iter().map(|s| s.cells.len()).sum::<usize>(),
            file.provenance.histogram_mode
        );
    }
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let file = spansfile::load(&args.spans)?;
    if file.grid.d != args.cols.len() {
        return Err(CliError::Config(format!(
            "span file is {}-dimensional but {} columns were selected",
            file.grid.d,
            args.cols.len()
        )));
    }
    let span_set = file.to_span_set()?;
    let raw = ingest::read_columns(&args.input, &args.cols, args.has_header)?;
    // evaluate in the frame the spans were released in
    let points: Vec<Vec<f64>> = raw.iter().map(|p| file.transform.to_normalized(p)).collect();
    for (i, p) in points.iter().enumerate() {
        if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(CliError::Data(format!(
                "row {} lies outside the span file's bounding box",
                i + 1
            )));
        }
    }
    let extracted = metrics::extract_labels(&span_set, &points)?;
    let covered = extracted.labels.iter().filter(|&&l| l > 0).count();
    let n = extracted.labels.len();
    println!("spans: {}", span_set.num_spans());
    println!("points: {n}");
    println!("covered_fraction: {:.6}", covered as f64 / n as f64);
    println!("noise_fraction: {:.6}", (n - covered) as f64 / n as f64);
    if let Some(labels_path) = &args.labels {
        let truth_raw = ingest::read_labels(labels_path, args.has_header)?;
        if truth_raw.len() != n {
            return Err(CliError::Config(format!(
                "label file has {} rows, dataset has {n}",
                truth_raw.len()
            )));
        }
        let truth = Labeling {
            num_clusters: truth_raw.iter().copied().max().unwrap_or(0),
            labels: truth_raw,
        };
        println!("ari: {:.6}", metrics::ari(&truth, &extracted)?);
        println!("ami: {:.6}", metrics::ami(&truth, &extracted)?);
    }
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let mut spec = SynthSpec::with_defaults(args.kind.into(), args.n, args.seed);
    if let Some(sd) = args.noise_sd {
        if sd < 0.0 {
            return Err(CliError::Config("noise-sd must be non-negative".into()));
        }
        spec.noise_sd = sd;
    }
    let data = datagen::generate(&spec);
    let mut out = String::new();
    for p in &data.points {
        let fields: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    std::fs::write(&args.out, out)?;
    if let Some(labels_path) = &args.labels_out {
        let mut out = String::new();
        for l in &data.labels.labels {
            out.push_str(&l.to_string());
            out.push('\n');
        }
        std::fs::write(labels_path, out)?;
    }
    println!(
        "wrote {} ({} points, scale {}): radii in generator units multiply by scale",
        args.out.display(),
        data.points.len(),
        data.scale
    );
    Ok(())
}

fn cmd_plot_data(args: &PlotDataArgs) -> Result<(), CliError> {
    let file = spansfile::load(&args.spans)?;
    match &args.out {
        Some(path) => {
            let mut buf = Vec::new();
            file.write_plot_data(&mut buf)?;
            std::fs::write(path, buf)?;
            println!("wrote {}", path.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            file.write_plot_data(&mut stdout)?;
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Generate(args) => cmd_generate(args),
        Command::PlotData(args) => cmd_plot_data(args),
    };
    if let Err(err) = result {
        eprintln!("{err}");
        std::process::exit(err.exit_code());
    }
}
