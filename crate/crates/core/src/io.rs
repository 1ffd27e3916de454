//! CSV and JSON file formats.
//!
//! Every file starts with one metadata comment line
//! `# ratapprox <version> seed=<seed|none> command=<command line>`; readers
//! skip lines beginning with `#`.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde_json::Value;

use crate::aaa::AaaStep;
use crate::error::{Error, Result};
use crate::greedy::GreedyStep;
use crate::model::RationalModel;
use crate::sampling::{self, ComplexSample, SampleSet};
use crate::vectorfit::VfIteration;

pub const SAMPLE_HEADER: [&str; 4] = ["re_s", "im_s", "re_f", "im_f"];

/// Provenance stamped into every output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metadata {
    pub version: String,
    pub seed: Option<u64>,
    pub command: String,
}

impl Metadata {
    pub fn new(seed: Option<u64>, command: impl Into<String>) -> Self {
        Metadata { version: env!("CARGO_PKG_VERSION").to_string(), seed, command: command.into() }
    }

    pub fn comment_line(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        let command = self.command.replace(['\n', '\r'], " ");
        format!("# ratapprox {} seed={seed} command={command}", self.version)
    }

    fn to_json(&self) -> Value {
        serde_json::json!({ "version": self.version, "seed": self.seed, "command": self.command })
    }
}

/// Round-trip float format (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a metadata line, a header and rows of preformatted fields.
pub fn write_csv<W: Write, I>(w: &mut W, meta: &Metadata, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    writeln!(w, "{}", meta.comment_line())?;
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::InvalidArgument(format!("row has {} fields, header has {}", row.len(), header.len())));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_samples_csv<W: Write>(w: &mut W, samples: &SampleSet, meta: &Metadata) -> Result<()> {
    let rows = samples.samples.iter().map(|s| {
        vec![fmt_f64(s.point.re), fmt_f64(s.point.im), fmt_f64(s.value.re), fmt_f64(s.value.im)]
    });
    write_csv(w, meta, &SAMPLE_HEADER, rows)
}

/// Parsed CSV: the seed found in the metadata line (if any), the header and
/// the numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub seed: Option<u64>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_numeric_csv<R: Read>(r: R) -> Result<NumericTable> {
    let mut text = String::new();
    let mut r = r;
    r.read_to_string(&mut text)?;
    let seed = text
        .lines()
        .filter(|l| l.starts_with('#'))
        .flat_map(|l| l.split_whitespace())
        .find_map(|tok| tok.strip_prefix("seed=").and_then(|v| v.parse().ok()));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: cannot parse \"{f}\"", i + 1))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(NumericTable { seed, header, rows })
}

pub fn read_samples_csv<R: Read>(r: R) -> Result<SampleSet> {
    let table = read_numeric_csv(r)?;
    if table.header != SAMPLE_HEADER {
        return Err(Error::Parse(format!("sample header must be {}, found {}", SAMPLE_HEADER.join(","), table.header.join(","))));
    }
    let samples: Vec<ComplexSample> = table
        .rows
        .iter()
        .map(|r| ComplexSample { point: Complex64::new(r[0], r[1]), value: Complex64::new(r[2], r[3]) })
        .collect();
    let mut set = SampleSet::from_samples(samples, table.seed);
    set.symmetric = sampling::is_conjugate_closed(&set.points());
    Ok(set)
}

/// Model JSON with a `"meta"` object next to the model fields.
pub fn write_model_json<W: Write>(w: &mut W, model: &RationalModel, meta: &Metadata) -> Result<()> {
    let mut v = model.to_json();
    if let Value::Object(map) = &mut v {
        map.insert("meta".into(), meta.to_json());
    }
    serde_json::to_writer_pretty(&mut *w, &v)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_model_json<R: Read>(r: R) -> Result<RationalModel> {
    let v: Value = serde_json::from_reader(r)?;
    RationalModel::from_json(&v)
}

/// A JSON document with the metadata merged in as `"meta"`.
pub fn write_json<W: Write>(w: &mut W, value: Value, meta: &Metadata) -> Result<()> {
    let mut v = value;
    if let Value::Object(map) = &mut v {
        map.insert("meta".into(), meta.to_json());
    }
    serde_json::to_writer_pretty(&mut *w, &v)?;
    writeln!(w)?;
    Ok(())
}

/// `index,sigma,sigma_normalized` with a 1-based index.
pub fn write_singular_values_csv<W: Write>(w: &mut W, sigma: &[f64], meta: &Metadata) -> Result<()> {
    let s1 = sigma.first().copied().unwrap_or(1.0);
    let rows = sigma.iter().enumerate().map(|(i, &s)| vec![(i + 1).to_string(), fmt_f64(s), fmt_f64(s / s1)]);
    write_csv(w, meta, &["index", "sigma", "sigma_normalized"], rows)
}

/// `label,re,im` rows, e.g. projected points or support points.
pub fn write_points_csv<W: Write>(w: &mut W, points: &[(String, Complex64)], meta: &Metadata) -> Result<()> {
    let rows = points.iter().map(|(label, z)| vec![label.clone(), fmt_f64(z.re), fmt_f64(z.im)]);
    write_csv(w, meta, &["label", "re", "im"], rows)
}

/// `step,n_left,n_right,max_error,chosen_re,chosen_im`, one row per chosen
/// point; a step that chose nothing leaves the last two fields empty.
pub fn write_greedy_history_csv<W: Write>(w: &mut W, history: &[GreedyStep], meta: &Metadata) -> Result<()> {
    let mut rows = Vec::new();
    for h in history {
        let base = vec![h.step.to_string(), h.n_left.to_string(), h.n_right.to_string(), fmt_f64(h.max_error)];
        if h.chosen.is_empty() {
            rows.push([base.clone(), vec![String::new(), String::new()]].concat());
        }
        for z in &h.chosen {
            rows.push([base.clone(), vec![fmt_f64(z.re), fmt_f64(z.im)]].concat());
        }
    }
    write_csv(w, meta, &["step", "n_left", "n_right", "max_error", "chosen_re", "chosen_im"], rows)
}

/// `iter,order,max_error`.
pub fn write_aaa_history_csv<W: Write>(w: &mut W, history: &[AaaStep], meta: &Metadata) -> Result<()> {
    let rows = history.iter().map(|h| vec![h.iter.to_string(), h.order.to_string(), fmt_f64(h.max_error)]);
    write_csv(w, meta, &["iter", "order", "max_error"], rows)
}

/// `iter,max_pole_move,linearized_residual`.
pub fn write_vf_history_csv<W: Write>(w: &mut W, history: &[VfIteration], meta: &Metadata) -> Result<()> {
    let rows = history
        .iter()
        .map(|h| vec![h.iter.to_string(), fmt_f64(h.max_pole_move), fmt_f64(h.linearized_residual)]);
    write_csv(w, meta, &["iter", "max_pole_move", "linearized_residual"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_oracle, structured_grid, Domain};
    use crate::special_fn::h_of_s;

    #[test]
    fn samples_round_trip_bit_exact() {
        let grid = structured_grid(&Domain::omega(), 7, 5, true).unwrap();
        let samples = sample_oracle(&grid, h_of_s).unwrap();
        let meta = Metadata::new(Some(3), "ratapprox sample");
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &samples, &meta).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# ratapprox "));
        assert_eq!(text.lines().nth(1), Some("re_s,im_s,re_f,im_f"));
        let back = read_samples_csv(buf.as_slice()).unwrap();
        assert_eq!(back.samples, samples.samples);
        assert_eq!(back.seed, Some(3));
        assert!(back.symmetric);
    }

    #[test]
    fn bad_header_is_rejected() {
        let text = "a,b,c,d\n1,2,3,4\n";
        assert!(matches!(read_samples_csv(text.as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn bad_number_is_rejected() {
        let text = "re_s,im_s,re_f,im_f\n1,2,x,4\n";
        assert!(matches!(read_samples_csv(text.as_bytes()), Err(Error::Parse(_))));
    }
}
