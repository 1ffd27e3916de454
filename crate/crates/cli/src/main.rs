use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ratapprox::aaa::{self, AaaOptions, AaaStart};
use ratapprox::analysis::{self, CompareConfig, Method};
use ratapprox::greedy::{self, GreedyOptions};
use ratapprox::io::{self as rio, Metadata};
use ratapprox::loewner::{self, PartitionScheme, TruncationMode};
use ratapprox::model::RationalModel;
use ratapprox::sampling::{self, Domain, SampleSet};
use ratapprox::special_fn::{h_of_s, J0_ZEROS};
use ratapprox::vectorfit::{self, Asymptote, VfOptions};
use ratapprox::Complex64;

/// Rational approximation of 1/J0(s) on [0,10] x [-1,1] with the Loewner
/// framework, recursive Loewner, AAA and Vector Fitting.
#[derive(Parser, Debug)]
#[command(name = "ratapprox", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample H(s) = 1/J0(s) on a structured or uniform random grid
    Sample(SampleArgs),
    /// Fit a rational model to a sample file
    Fit(FitArgs),
    /// Dense-grid error of a model: CSV surface, SVG heatmap, JSON summary
    Eval(EvalArgs),
    /// Print poles and zeros, cancellations and matches to zeros of J0
    Poles(PolesArgs),
    /// Projected interpolation points of a truncated Loewner model
    Project(ProjectArgs),
    /// Projected points on successively denser structured grids
    Trajectories(TrajectoryArgs),
    /// Compare the four methods on one or more sample files
    Compare(CompareArgs),
    /// Rebuild the full comparison: both grids, all four methods
    Repro(ReproArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GridKind {
    Structured,
    Uniform,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long, value_enum, default_value = "structured")]
    grid: GridKind,
    #[arg(long, default_value_t = 101)]
    nx: usize,
    #[arg(long, default_value_t = 21)]
    ny: usize,
    /// Number of upper-half points for the uniform grid (each gets its conjugate)
    #[arg(long, default_value_t = 1000)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// loewner, rloewner, aaa or vf
    #[arg(long)]
    method: Method,
    #[arg(long = "in")]
    input: PathBuf,
    /// Model order (loewner, rloewner, vf) or maximum order (aaa)
    #[arg(long)]
    order: Option<usize>,
    /// Singular value cutoff (loewner) or relative stopping tolerance (aaa)
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// AAA: add support points in conjugate pairs
    #[arg(long)]
    real_mode: bool,
    /// AAA: start from a sample drawn with --seed instead of the one farthest from the mean
    #[arg(long)]
    seed_random: bool,
    /// AAA: remove Froissart doublets with this pairing tolerance
    #[arg(long)]
    cleanup: Option<f64>,
    /// Left/right split for the Loewner pencil: alternating, half_split or epsilon_paired
    #[arg(long, default_value = "epsilon_paired")]
    scheme: PartitionScheme,
    /// Vector Fitting iterations
    #[arg(long, default_value_t = 20)]
    iters: usize,
    /// Vector Fitting: polynomial part fitted next to the partial fractions
    #[arg(long, value_enum, default_value = "linear")]
    asymptote: AsymptoteArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AsymptoteArg {
    /// Strictly proper
    None,
    /// Constant term d
    Constant,
    /// d + s h
    Linear,
}

impl From<AsymptoteArg> for Asymptote {
    fn from(a: AsymptoteArg) -> Self {
        match a {
            AsymptoteArg::None => Asymptote::None,
            AsymptoteArg::Constant => Asymptote::Constant,
            AsymptoteArg::Linear => Asymptote::Linear,
        }
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = analysis::DEFAULT_GRID)]
    nx: usize,
    #[arg(long, default_value_t = analysis::DEFAULT_GRID)]
    ny: usize,
    /// Writes P_error.csv, P_error.svg and P_summary.json
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Args, Debug)]
struct PolesArgs {
    #[arg(long)]
    model: PathBuf,
    /// Report the nearest pole to each tabulated zero of J0
    #[arg(long)]
    match_bessel: bool,
    #[arg(long, default_value_t = analysis::DEFAULT_CANCEL_TOL)]
    cancel_tol: f64,
    /// Also write poles and zeros as CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 11)]
    order: usize,
    #[arg(long, default_value = "epsilon_paired")]
    scheme: PartitionScheme,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrajectoryArgs {
    /// Grid step: step i samples an (i*a) x (i*a+1) grid
    #[arg(long, default_value_t = 10)]
    a: usize,
    #[arg(long, default_value_t = 5)]
    steps: usize,
    #[arg(long, default_value_t = 11)]
    order: usize,
    #[arg(long, default_value = "epsilon_paired")]
    scheme: PartitionScheme,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Orders for loewner, rloewner, aaa (maximum) and vf
    #[arg(long, value_name = "L,G,A,V", value_parser = parse_orders)]
    orders: Option<[usize; 4]>,
    #[arg(long, default_value_t = analysis::DEFAULT_GRID)]
    nx: usize,
    #[arg(long, default_value_t = analysis::DEFAULT_GRID)]
    ny: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReproArgs {
    #[arg(long, default_value = "repro")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = analysis::DEFAULT_GRID)]
    nx: usize,
    #[arg(long, default_value_t = analysis::DEFAULT_GRID)]
    ny: usize,
    #[arg(long, default_value_t = 1000)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            report_error("usage", &e.to_string());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.downcast_ref::<ratapprox::Error>().map_or("cli", ratapprox::Error::kind);
            report_error(kind, &format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}

fn report_error(kind: &str, message: &str) {
    let v = serde_json::json!({ "error": kind, "message": message.trim_end() });
    eprintln!("{v}");
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Ok(n) = std::env::var("RATAPPROX_THREADS") {
        let n: usize = n.trim().parse().ok().filter(|&n| n > 0).context("RATAPPROX_THREADS must be a positive integer")?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let command = std::env::args().collect::<Vec<_>>().join(" ");
    match cli.command {
        Command::Sample(a) => sample(a, &command),
        Command::Fit(a) => fit(a, &command),
        Command::Eval(a) => eval(a, &command),
        Command::Poles(a) => poles(a, &command),
        Command::Project(a) => project(a, &command),
        Command::Trajectories(a) => trajectories(a, &command),
        Command::Compare(a) => compare(a, &command),
        Command::Repro(a) => repro(a, &command),
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn read_samples(path: &Path) -> anyhow::Result<SampleSet> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(rio::read_samples_csv(f)?)
}

fn read_model(path: &Path) -> anyhow::Result<RationalModel> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(rio::read_model_json(f)?)
}

/// `model.json` -> `model.<suffix>.csv`
fn side_path(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(format!("{suffix}.csv"))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn build_samples(grid: GridKind, nx: usize, ny: usize, pairs: usize, seed: u64) -> anyhow::Result<(SampleSet, Option<u64>)> {
    let domain = Domain::omega();
    let (points, seed) = match grid {
        GridKind::Structured => (sampling::structured_grid(&domain, nx, ny, true)?, None),
        GridKind::Uniform => (sampling::uniform_random_grid(&domain, pairs, seed)?, Some(seed)),
    };
    Ok((sampling::sample_oracle(&points, h_of_s)?, seed))
}

fn sample(a: SampleArgs, command: &str) -> anyhow::Result<()> {
    let (samples, seed) = build_samples(a.grid, a.nx, a.ny, a.pairs, a.seed)?;
    let mut w = create(&a.out)?;
    rio::write_samples_csv(&mut w, &samples, &Metadata::new(seed, command))?;
    w.flush()?;
    println!("wrote {} samples to {}", samples.len(), a.out.display());
    Ok(())
}

fn fit(a: FitArgs, command: &str) -> anyhow::Result<()> {
    let samples = read_samples(&a.input)?;
    let seed = match a.method {
        Method::RecursiveLoewner => Some(a.seed),
        Method::Aaa if a.seed_random => Some(a.seed),
        _ => samples.seed,
    };
    let meta = Metadata::new(seed, command);
    let model = match a.method {
        Method::Loewner => {
            let mode = match (a.order, a.tol) {
                (Some(_), Some(_)) => bail!("give either --order or --tol for loewner, not both"),
                (None, Some(t)) => TruncationMode::ByTolerance(t),
                (order, None) => TruncationMode::ByOrder(order.unwrap_or(11)),
            };
            let (_, t) = loewner::fit_loewner(&samples, a.scheme, mode)?;
            let mut w = create(&side_path(&a.out, "sv"))?;
            rio::write_singular_values_csv(&mut w, &t.singular_values, &meta)?;
            w.flush()?;
            RationalModel::StateSpace(t.model)
        }
        Method::RecursiveLoewner => {
            let fit = greedy::fit_greedy(&samples, &GreedyOptions::new(a.order.unwrap_or(11), a.seed))?;
            let mut w = create(&side_path(&a.out, "history"))?;
            rio::write_greedy_history_csv(&mut w, &fit.history, &meta)?;
            w.flush()?;
            RationalModel::StateSpace(fit.model)
        }
        Method::Aaa => {
            let defaults = AaaOptions::default();
            let opts = AaaOptions {
                tol: a.tol.unwrap_or(defaults.tol),
                max_order: a.order.unwrap_or(defaults.max_order),
                real_mode: a.real_mode,
                start: if a.seed_random { AaaStart::Random(a.seed) } else { AaaStart::FarthestFromMean },
            };
            let fit = aaa::fit_aaa(&samples, &opts)?;
            let mut w = create(&side_path(&a.out, "history"))?;
            rio::write_aaa_history_csv(&mut w, &fit.history, &meta)?;
            w.flush()?;
            let model = match a.cleanup {
                Some(tol) => aaa::cleanup(&fit.model, &samples, tol)?,
                None => fit.model,
            };
            RationalModel::Barycentric(model)
        }
        Method::VectorFitting => {
            let opts = VfOptions { asymptote: a.asymptote.into(), ..VfOptions::new(a.order.unwrap_or(12), a.iters) };
            let fit = vectorfit::fit_vf(&samples, &opts)?;
            let mut w = create(&side_path(&a.out, "history"))?;
            rio::write_vf_history_csv(&mut w, &fit.history, &meta)?;
            w.flush()?;
            RationalModel::PoleResidue(fit.model)
        }
    };
    let mut w = create(&a.out)?;
    rio::write_model_json(&mut w, &model, &meta)?;
    w.flush()?;
    println!("{} model of order {} written to {}", model.kind(), model.order(), a.out.display());
    Ok(())
}

fn eval(a: EvalArgs, command: &str) -> anyhow::Result<()> {
    let model = read_model(&a.model)?;
    let report = analysis::error_grid(&model, h_of_s, &Domain::omega(), a.nx, a.ny)?.with_tag(model.kind(), model.order());
    let meta = Metadata::new(None, command);

    let mut w = create(&with_suffix(&a.out_prefix, "_error.csv"))?;
    analysis::write_error_surface_csv(&mut w, &report, &meta)?;
    w.flush()?;
    let mut w = create(&with_suffix(&a.out_prefix, "_error.svg"))?;
    analysis::write_heatmap_svg(&mut w, &report, &meta)?;
    w.flush()?;
    let summary = serde_json::json!({
        "max_error": report.max_error,
        "argmax": [report.argmax.re, report.argmax.im],
        "excluded": report.excluded,
        "nx": report.nx,
        "ny": report.ny,
        "model_type": model.kind(),
        "order": model.order(),
    });
    let mut w = create(&with_suffix(&a.out_prefix, "_summary.json"))?;
    rio::write_json(&mut w, summary, &meta)?;
    w.flush()?;
    println!("max error {:.3e} at {}", report.max_error, fmt_point(report.argmax, 6));
    Ok(())
}

fn fmt_point(z: Complex64, im_digits: usize) -> String {
    let re = if z.re == 0.0 { 0.0 } else { z.re };
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    format!("{re:.15} {im:+.im_digits$}i")
}

fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

fn poles(a: PolesArgs, command: &str) -> anyhow::Result<()> {
    let model = read_model(&a.model)?;
    let (poles, zeros) = model.poles_zeros()?;
    let (poles, zeros) = (sorted(poles), sorted(zeros));
    println!("{} model, order {}", model.kind(), model.order());
    println!("poles ({}):", poles.len());
    for p in &poles {
        println!("  {}", fmt_point(*p, 5));
    }
    println!("zeros ({}):", zeros.len());
    for z in &zeros {
        println!("  {}", fmt_point(*z, 5));
    }
    let pairs = analysis::detect_cancellations(&poles, &zeros, a.cancel_tol);
    println!("cancellations (relative tolerance {:e}): {}", a.cancel_tol, pairs.len());
    for c in &pairs {
        println!("  pole {}  zero {}  gap {:.3e}", fmt_point(c.pole, 5), fmt_point(c.zero, 5), c.gap);
    }
    if a.match_bessel {
        let remaining = analysis::surviving_poles(&poles, &pairs);
        println!("nearest poles to zeros of J0:");
        for m in analysis::match_known_zeros(&remaining, &J0_ZEROS) {
            println!("  {:.14}  pole {}  distance {:.3e}", m.reference, fmt_point(m.pole, 5), m.distance);
        }
    }
    if let Some(out) = a.out {
        let points: Vec<(String, Complex64)> = poles
            .iter()
            .map(|&p| ("pole".to_string(), p))
            .chain(zeros.iter().map(|&z| ("zero".to_string(), z)))
            .collect();
        let mut w = create(&out)?;
        rio::write_points_csv(&mut w, &points, &Metadata::new(None, command))?;
        w.flush()?;
    }
    Ok(())
}

fn project(a: ProjectArgs, command: &str) -> anyhow::Result<()> {
    let samples = read_samples(&a.input)?;
    let (pencil, t) = loewner::fit_loewner(&samples, a.scheme, TruncationMode::ByOrder(a.order))?;
    let pts = loewner::projected_points(&pencil, &t.y, &t.x)?;
    let (left, right) = (sorted(pts.mu_hat.clone()), sorted(pts.lambda_hat.clone()));
    println!("left projected points ({}):", left.len());
    for z in &left {
        println!("  {:.5} {:+.5}i", z.re, z.im);
    }
    println!("right projected points ({}):", right.len());
    for z in &right {
        println!("  {:.5} {:+.5}i", z.re, z.im);
    }
    println!("compressed {} \u{2192} {}", samples.len(), left.len() + right.len());
    if let Some(out) = a.out {
        let points: Vec<(String, Complex64)> = left
            .iter()
            .map(|&z| ("left".to_string(), z))
            .chain(right.iter().map(|&z| ("right".to_string(), z)))
            .collect();
        let mut w = create(&out)?;
        rio::write_points_csv(&mut w, &points, &Metadata::new(samples.seed, command))?;
        w.flush()?;
    }
    Ok(())
}

fn trajectories(a: TrajectoryArgs, command: &str) -> anyhow::Result<()> {
    let domain = Domain::omega();
    let steps = loewner::trajectory_study(h_of_s, &domain, a.a, a.steps, a.order, a.scheme)?;
    let mut rows = Vec::new();
    for s in &steps {
        let inside = s.points.lambda_hat.iter().chain(&s.points.mu_hat).all(|z| domain.contains(*z));
        println!(
            "step {}: {}x{} grid ({} samples), max |right - left| {:.3e}, all in domain: {inside}",
            s.step, s.nx, s.ny, s.grid_size, s.max_pair_gap
        );
        for (side, pts) in [("left", &s.points.mu_hat), ("right", &s.points.lambda_hat)] {
            for (i, z) in sorted(pts.clone()).iter().enumerate() {
                rows.push(vec![
                    s.step.to_string(),
                    s.nx.to_string(),
                    s.ny.to_string(),
                    s.grid_size.to_string(),
                    side.to_string(),
                    i.to_string(),
                    rio::fmt_f64(z.re),
                    rio::fmt_f64(z.im),
                ]);
            }
        }
    }
    let mut w = create(&a.out)?;
    rio::write_csv(&mut w, &Metadata::new(None, command), &["step", "nx", "ny", "grid_size", "side", "index", "re", "im"], rows)?;
    w.flush()?;
    Ok(())
}

fn parse_orders(text: &str) -> Result<[usize; 4], String> {
    let parsed: Vec<usize> =
        text.split(',').map(|t| t.trim().parse().map_err(|e| format!("{t:?}: {e}"))).collect::<Result<_, _>>()?;
    parsed.try_into().map_err(|v: Vec<usize>| format!("expected 4 comma-separated orders, got {}", v.len()))
}

fn compare_config(orders: Option<[usize; 4]>, nx: usize, ny: usize, seed: u64) -> CompareConfig {
    let mut cfg = CompareConfig { nx, ny, seed, ..Default::default() };
    if let Some([l, g, a, v]) = orders {
        cfg.loewner_order = l;
        cfg.greedy_order = g;
        cfg.aaa_max_order = a;
        cfg.vf_order = v;
    }
    cfg
}

fn label_of(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn compare(a: CompareArgs, command: &str) -> anyhow::Result<()> {
    let cfg = compare_config(a.orders, a.nx, a.ny, a.seed);
    let mut rows = Vec::new();
    for path in &a.input {
        let samples = read_samples(path)?;
        rows.push(analysis::compare_methods(&samples, &label_of(path), h_of_s, &cfg));
    }
    print!("{}", analysis::comparison_text(&rows));
    if let Some(out) = a.out {
        let mut w = create(&out)?;
        analysis::write_comparison_csv(&mut w, &rows, &Metadata::new(Some(a.seed), command))?;
        w.flush()?;
    }
    Ok(())
}

fn repro(a: ReproArgs, command: &str) -> anyhow::Result<()> {
    let cfg = compare_config(None, a.nx, a.ny, a.seed);
    let grids = [("structured", GridKind::Structured), ("uniform", GridKind::Uniform)];
    let mut rows = Vec::new();
    for (label, kind) in grids {
        let (samples, seed) = build_samples(kind, 101, 21, a.pairs, a.seed)?;
        let path = a.out_dir.join(format!("{label}.csv"));
        let mut w = create(&path)?;
        rio::write_samples_csv(&mut w, &samples, &Metadata::new(seed, command))?;
        w.flush()?;
        eprintln!("{label}: {} samples, fitting four methods", samples.len());
        rows.push(analysis::compare_methods(&samples, label, h_of_s, &cfg));
    }
    let meta = Metadata::new(Some(a.seed), command);
    let mut w = create(&a.out_dir.join("comparison.csv"))?;
    analysis::write_comparison_csv(&mut w, &rows, &meta)?;
    w.flush()?;
    let text = analysis::comparison_text(&rows);
    let mut w = create(&a.out_dir.join("comparison.txt"))?;
    writeln!(w, "{}", meta.comment_line())?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    print!("{text}");
    Ok(())
}
