//! Cross-method diagnostics: dense-grid error surfaces, pole/zero
//! cancellations, matching against known zeros and the method comparison.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::aaa::{self, AaaOptions};
use crate::error::{Error, Result};
use crate::greedy::{self, GreedyOptions};
use crate::io::{self, fmt_f64, Metadata};
use crate::loewner::{self, PartitionScheme, TruncationMode};
use crate::model::{Evaluate, RationalModel};
use crate::sampling::{linspace, Domain, SampleSet};
use crate::vectorfit::{self, VfOptions};

pub const DEFAULT_GRID: usize = 500;
pub const DEFAULT_CANCEL_TOL: f64 = 1e-6;
/// Largest number of heatmap cells per axis; finer surfaces are max-pooled.
const HEATMAP_CELLS: usize = 100;

/// `|H_r - H|` over an `nx x ny` grid, stored row by row from the lowest
/// imaginary part up. Oracle poles are excluded and stored as NaN.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub domain: Domain,
    pub nx: usize,
    pub ny: usize,
    pub max_error: f64,
    pub argmax: Complex64,
    pub surface: Vec<f64>,
    pub excluded: usize,
    pub method: String,
    pub order: usize,
}

impl ErrorReport {
    pub fn point(&self, ix: usize, iy: usize) -> Complex64 {
        grid_point(&self.domain, self.nx, self.ny, ix, iy)
    }

    pub fn with_tag(mut self, method: impl Into<String>, order: usize) -> Self {
        self.method = method.into();
        self.order = order;
        self
    }
}

fn grid_point(d: &Domain, nx: usize, ny: usize, ix: usize, iy: usize) -> Complex64 {
    let x = linspace(d.x_min, d.x_max, nx)[ix];
    let y = linspace(d.y_min, d.y_max, ny)[iy];
    Complex64::new(x, y)
}

/// Evaluates model and oracle on the dense grid. Grid points where the
/// oracle reports a pole are skipped and counted; points where the model
/// cannot be evaluated count as infinite error.
pub fn error_grid<M, O>(model: &M, oracle: O, domain: &Domain, nx: usize, ny: usize) -> Result<ErrorReport>
where
    M: Evaluate + Sync + ?Sized,
    O: Fn(Complex64) -> Result<Complex64> + Sync,
{
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument(format!("error grid needs nx, ny >= 2, got {nx} x {ny}")));
    }
    let xs = linspace(domain.x_min, domain.x_max, nx);
    let ys = linspace(domain.y_min, domain.y_max, ny);
    let surface: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let s = Complex64::new(xs[k % nx], ys[k / nx]);
            match oracle(s) {
                Ok(h) => Ok(match model.evaluate(s) {
                    Ok(v) => {
                        let e = (v - h).norm();
                        if e.is_nan() { f64::INFINITY } else { e }
                    }
                    Err(_) => f64::INFINITY,
                }),
                Err(Error::Pole(..)) => Ok(f64::NAN),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let excluded = surface.iter().filter(|e| e.is_nan()).count();
    let mut best = (0usize, f64::NEG_INFINITY);
    for (k, &e) in surface.iter().enumerate() {
        if e > best.1 {
            best = (k, e);
        }
    }
    Ok(ErrorReport {
        domain: *domain,
        nx,
        ny,
        max_error: best.1.max(0.0),
        argmax: Complex64::new(xs[best.0 % nx], ys[best.0 / nx]),
        surface,
        excluded,
        method: String::new(),
        order: 0,
    })
}

/// `re_s,im_s,abs_error`; excluded points are written as `NaN`.
pub fn write_error_surface_csv<W: Write>(w: &mut W, report: &ErrorReport, meta: &Metadata) -> Result<()> {
    let xs = linspace(report.domain.x_min, report.domain.x_max, report.nx);
    let ys = linspace(report.domain.y_min, report.domain.y_max, report.ny);
    let rows = report.surface.iter().enumerate().map(|(k, &e)| {
        vec![fmt_f64(xs[k % report.nx]), fmt_f64(ys[k / report.nx]), if e.is_nan() { "NaN".into() } else { fmt_f64(e) }]
    });
    io::write_csv(w, meta, &["re_s", "im_s", "abs_error"], rows)
}

/// Five-stop perceptual palette from dark blue (small) to yellow (large).
fn palette(t: f64) -> (u8, u8, u8) {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Heatmap of `log10 |H_r - H|` with a colour bar. Surfaces finer than 100
/// cells per axis are reduced by taking the maximum over blocks.
pub fn write_heatmap_svg<W: Write>(w: &mut W, report: &ErrorReport, meta: &Metadata) -> Result<()> {
    let cx = report.nx.min(HEATMAP_CELLS);
    let cy = report.ny.min(HEATMAP_CELLS);
    let mut cells = vec![f64::NAN; cx * cy];
    for iy in 0..report.ny {
        for ix in 0..report.nx {
            let e = report.surface[iy * report.nx + ix];
            let k = (iy * cy / report.ny) * cx + ix * cx / report.nx;
            if !e.is_nan() && (cells[k].is_nan() || e > cells[k]) {
                cells[k] = e;
            }
        }
    }
    let logs: Vec<f64> = cells.iter().map(|&e| if e.is_nan() { f64::NAN } else { e.max(1e-300).log10() }).collect();
    let finite: Vec<f64> = logs.iter().copied().filter(|v| v.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil();
    let (lo, hi) = if lo.is_finite() && hi.is_finite() { (lo, hi.max(lo + 1.0)) } else { (-16.0, 0.0) };

    let (width, height) = (640.0, 320.0);
    let (left, top) = (60.0, 40.0);
    let (cw, ch) = (width / cx as f64, height / cy as f64);
    let mut svg = String::new();
    let total_w = left + width + 110.0;
    let total_h = top + height + 60.0;
    writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(svg, "<!-- {} -->", meta.comment_line().trim_start_matches("# ").replace("--", "- -")).unwrap();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{total_h}" viewBox="0 0 {total_w} {total_h}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    let title = if report.method.is_empty() { "log10 |H_r(s) - H(s)|".to_string() } else { format!("{} (order {}): log10 |H_r(s) - H(s)|", report.method, report.order) };
    writeln!(svg, r#"<text x="{left}" y="24" font-size="14">{title}, max {:.3e}</text>"#, report.max_error).unwrap();
    writeln!(svg, r#"<g shape-rendering="crispEdges">"#).unwrap();
    for iy in 0..cy {
        for ix in 0..cx {
            let v = logs[iy * cx + ix];
            let fill = if v.is_finite() {
                let (r, g, b) = palette((v - lo) / (hi - lo));
                format!("#{r:02x}{g:02x}{b:02x}")
            } else {
                "#ffffff".into()
            };
            let x = left + ix as f64 * cw;
            let y = top + (cy - 1 - iy) as f64 * ch;
            writeln!(svg, r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#, cw + 0.05, ch + 0.05).unwrap();
        }
    }
    writeln!(svg, "</g>").unwrap();
    writeln!(svg, r#"<rect x="{left}" y="{top}" width="{width}" height="{height}" fill="none" stroke="black"/>"#).unwrap();
    let d = &report.domain;
    let by = top + height;
    writeln!(svg, r#"<text x="{left}" y="{}" text-anchor="middle">{}</text>"#, by + 16.0, d.x_min).unwrap();
    writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + width, by + 16.0, d.x_max).unwrap();
    writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">Re(s)</text>"#, left + width / 2.0, by + 34.0).unwrap();
    writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, left - 6.0, by, d.y_min).unwrap();
    writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, left - 6.0, top + 10.0, d.y_max).unwrap();
    writeln!(svg, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">Im(s)</text>"#, top + height / 2.0, top + height / 2.0).unwrap();

    let bx = left + width + 20.0;
    let steps = 64;
    for k in 0..steps {
        let t = k as f64 / (steps - 1) as f64;
        let (r, g, b) = palette(t);
        let y = top + height * (1.0 - (k + 1) as f64 / steps as f64);
        writeln!(svg, r##"<rect x="{bx}" y="{y:.2}" width="18" height="{:.2}" fill="#{r:02x}{g:02x}{b:02x}"/>"##, height / steps as f64 + 0.05).unwrap();
    }
    let span = (hi - lo) as i64;
    let stride = (span / 8).max(1);
    let mut tick = lo as i64;
    while tick <= hi as i64 {
        let y = top + height * (1.0 - (tick as f64 - lo) / (hi - lo));
        writeln!(svg, r#"<text x="{}" y="{:.2}" dominant-baseline="middle">1e{tick}</text>"#, bx + 24.0, y).unwrap();
        tick += stride;
    }
    writeln!(svg, "</svg>").unwrap();
    w.write_all(svg.as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CancellationPair {
    pub pole: Complex64,
    pub zero: Complex64,
    pub gap: f64,
}

/// Pole/zero pairs with `|p - z| <= rel_tol (1 + |p|)`. Candidates are taken
/// in order of increasing relative gap and each pole and zero is used once,
/// so shrinking `rel_tol` only ever removes pairs.
pub fn detect_cancellations(poles: &[Complex64], zeros: &[Complex64], rel_tol: f64) -> Vec<CancellationPair> {
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in poles.iter().enumerate() {
        for (j, z) in zeros.iter().enumerate() {
            let rel = (p - z).norm() / (1.0 + p.norm());
            if rel <= rel_tol {
                cand.push((rel, i, j));
            }
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut pole_used = vec![false; poles.len()];
    let mut zero_used = vec![false; zeros.len()];
    let mut out = Vec::new();
    for (_, i, j) in cand {
        if pole_used[i] || zero_used[j] {
            continue;
        }
        pole_used[i] = true;
        zero_used[j] = true;
        out.push(CancellationPair { pole: poles[i], zero: zeros[j], gap: (poles[i] - zeros[j]).norm() });
    }
    out
}

/// Poles left after removing the ones that take part in a cancellation.
pub fn surviving_poles(poles: &[Complex64], pairs: &[CancellationPair]) -> Vec<Complex64> {
    let mut out = poles.to_vec();
    for pair in pairs {
        if let Some(k) = out.iter().position(|p| *p == pair.pole) {
            out.remove(k);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroMatch {
    pub reference: f64,
    pub pole: Complex64,
    pub distance: f64,
}

/// Nearest model pole for each reference value. An empty pole list gives an
/// empty report.
pub fn match_known_zeros(poles: &[Complex64], reference: &[f64]) -> Vec<ZeroMatch> {
    if poles.is_empty() {
        return Vec::new();
    }
    reference
        .iter()
        .map(|&r| {
            let target = Complex64::new(r, 0.0);
            let pole = *poles
                .iter()
                .min_by(|a, b| (*a - target).norm().total_cmp(&(*b - target).norm()))
                .unwrap();
            ZeroMatch { reference: r, pole, distance: (pole - target).norm() }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Loewner,
    RecursiveLoewner,
    Aaa,
    VectorFitting,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Loewner, Method::RecursiveLoewner, Method::Aaa, Method::VectorFitting];

    /// Short name used on the command line and in CSV files.
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Loewner => "loewner",
            Method::RecursiveLoewner => "rloewner",
            Method::Aaa => "aaa",
            Method::VectorFitting => "vf",
        }
    }

    pub fn title(&self) -> &'static str {
        match self {
            Method::Loewner => "Loewner",
            Method::RecursiveLoewner => "Recursive Loewner",
            Method::Aaa => "AAA",
            Method::VectorFitting => "VF",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}' (expected loewner, rloewner, aaa or vf)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub loewner_order: usize,
    pub greedy_order: usize,
    /// Cap on the AAA order; AAA stops earlier once `aaa_tol` is met.
    pub aaa_max_order: usize,
    pub aaa_tol: f64,
    pub vf_order: usize,
    pub vf_iters: usize,
    pub scheme: PartitionScheme,
    pub seed: u64,
    pub domain: Domain,
    pub nx: usize,
    pub ny: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            loewner_order: 11,
            greedy_order: 11,
            aaa_max_order: 20,
            aaa_tol: aaa::DEFAULT_TOL,
            vf_order: 12,
            vf_iters: 20,
            scheme: PartitionScheme::default(),
            seed: 0,
            domain: Domain::omega(),
            nx: DEFAULT_GRID,
            ny: DEFAULT_GRID,
        }
    }
}

/// Fits one method with the settings of `cfg`.
pub fn fit_method(samples: &SampleSet, method: Method, cfg: &CompareConfig) -> Result<RationalModel> {
    Ok(match method {
        Method::Loewner => {
            let (_, t) = loewner::fit_loewner(samples, cfg.scheme, TruncationMode::ByOrder(cfg.loewner_order))?;
            RationalModel::StateSpace(t.model)
        }
        Method::RecursiveLoewner => {
            RationalModel::StateSpace(greedy::fit_greedy(samples, &GreedyOptions::new(cfg.greedy_order, cfg.seed))?.model)
        }
        Method::Aaa => {
            let opts = AaaOptions { tol: cfg.aaa_tol, max_order: cfg.aaa_max_order, ..Default::default() };
            RationalModel::Barycentric(aaa::fit_aaa(samples, &opts)?.model)
        }
        Method::VectorFitting => {
            RationalModel::PoleResidue(vectorfit::fit_vf(samples, &VfOptions::new(cfg.vf_order, cfg.vf_iters))?.model)
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method: Method,
    pub order: Option<usize>,
    pub max_error: Option<f64>,
    pub poles_in_domain: Option<usize>,
    pub seconds: f64,
    /// Why the method produced no model.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub n_samples: usize,
    pub results: Vec<MethodResult>,
}

/// Runs the four fitters on one sample set and measures each on the dense
/// grid. A method that fails is reported with its error instead of aborting
/// the table.
pub fn compare_methods<O>(samples: &SampleSet, label: &str, oracle: O, cfg: &CompareConfig) -> ComparisonRow
where
    O: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let results = Method::ALL
        .into_iter()
        .map(|method| {
            let start = Instant::now();
            let outcome = fit_method(samples, method, cfg).and_then(|model| {
                let report = error_grid(&model, &oracle, &cfg.domain, cfg.nx, cfg.ny)?;
                let (poles, _) = model.poles_zeros()?;
                let inside = poles.iter().filter(|p| cfg.domain.contains(**p)).count();
                Ok((model.order(), report.max_error, inside))
            });
            let seconds = start.elapsed().as_secs_f64();
            match outcome {
                Ok((order, err, inside)) => MethodResult {
                    method,
                    order: Some(order),
                    max_error: Some(err),
                    poles_in_domain: Some(inside),
                    seconds,
                    failure: None,
                },
                Err(e) => MethodResult { method, order: None, max_error: None, poles_in_domain: None, seconds, failure: Some(e.to_string()) },
            }
        })
        .collect();
    ComparisonRow { label: label.to_string(), n_samples: samples.len(), results }
}

/// `grid,n_samples,method,order,max_error,poles_in_domain,status`. Timings
/// are left out so the file is reproducible.
pub fn write_comparison_csv<W: Write>(w: &mut W, rows: &[ComparisonRow], meta: &Metadata) -> Result<()> {
    let mut out = Vec::new();
    for row in rows {
        for r in &row.results {
            out.push(vec![
                row.label.clone(),
                row.n_samples.to_string(),
                r.method.tag().to_string(),
                r.order.map_or_else(String::new, |o| o.to_string()),
                r.max_error.map_or_else(String::new, fmt_f64),
                r.poles_in_domain.map_or_else(String::new, |o| o.to_string()),
                r.failure.as_ref().map_or_else(|| "ok".to_string(), |f| format!("error: {}", f.replace([',', '\n'], ";"))),
            ]);
        }
    }
    io::write_csv(w, meta, &["grid", "n_samples", "method", "order", "max_error", "poles_in_domain", "status"], out)
}

/// Fixed-width table: one row per sample set, one column per method.
pub fn comparison_text(rows: &[ComparisonRow]) -> String {
    let label_w = rows.iter().map(|r| r.label.len() + 2 + digits(r.n_samples) + 1).max().unwrap_or(4).max(4);
    let col_w = 30;
    let mut s = String::new();
    write!(s, "{:<label_w$}", "grid").unwrap();
    for m in Method::ALL {
        write!(s, " | {:<col_w$}", m.title()).unwrap();
    }
    s.push('\n');
    s.push_str(&"-".repeat(label_w + Method::ALL.len() * (col_w + 3)));
    s.push('\n');
    for row in rows {
        write!(s, "{:<label_w$}", format!("{} ({})", row.label, row.n_samples)).unwrap();
        for m in Method::ALL {
            let cell = match row.results.iter().find(|r| r.method == m) {
                Some(MethodResult { order: Some(o), max_error: Some(e), seconds, .. }) => format!("{e:.2e} (r={o}, {seconds:.1}s)"),
                Some(MethodResult { failure: Some(f), .. }) => format!("failed: {}", f.chars().take(col_w - 8).collect::<String>()),
                _ => "-".into(),
            };
            write!(s, " | {cell:<col_w$}").unwrap();
        }
        s.push('\n');
    }
    s
}

fn digits(n: usize) -> usize {
    n.to_string().len()
}
