//! Command-line driver: runs query files, generates the synthetic
//! two-class text dataset, and writes LibSVM files.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use jqml_core::frame::{vector_column, Frame, FrameType};
use jqml_core::item::{canonical_serialize, parse_json, Atomic, AtomicKind};
use jqml_core::{CallContext, Error, ErrorCategory, ErrorCode, Item, ModePolicy, Query, Result, DEFAULT_CAP};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    JsonLines,
    Text,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json-lines" => Ok(OutputFormat::JsonLines),
            "text" => Ok(OutputFormat::Text),
            other => Err(format!("unknown format {other:?} (expected json-lines or text)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub query: PathBuf,
    pub vars: Vec<(String, String)>,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub mode: ModePolicy,
    pub cap: usize,
}

impl RunConfig {
    pub fn new(query: impl Into<PathBuf>) -> Self {
        RunConfig {
            query: query.into(),
            vars: Vec::new(),
            output: None,
            format: OutputFormat::JsonLines,
            mode: ModePolicy::Auto,
            cap: DEFAULT_CAP,
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.category() {
        ErrorCategory::Parse => 1,
        ErrorCategory::Resolve => 2,
        ErrorCategory::Dynamic => 3,
        ErrorCategory::Io => 4,
        ErrorCategory::Cap => 5,
    }
}

/// Splits `NAME=VALUE`.
pub fn parse_var(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((name, value)) if !name.is_empty() => Ok((name.trim_start_matches('$').to_string(), value.to_string())),
        _ => Err(format!("expected NAME=VALUE, got {s:?}")),
    }
}

/// A flag value is bound as the parsed item when it is valid JSON, and as
/// a string otherwise.
pub fn var_item(value: &str) -> Item {
    parse_json(value).unwrap_or_else(|_| Item::string(value))
}

fn render(item: &Item, format: OutputFormat) -> Result<String> {
    match (format, item) {
        (OutputFormat::Text, Item::Atomic(a)) => Ok(a.lexical()),
        _ => canonical_serialize(item),
    }
}

/// Runs a query text and writes one line per result item.
pub fn run_text(text: &str, config: &RunConfig, base_dir: &Path, out: &mut dyn Write) -> Result<()> {
    let query = Query::compile(text, config.mode)?;
    let externals: Vec<(String, Item)> = config.vars.iter().map(|(n, v)| (n.clone(), var_item(v))).collect();
    let cx = CallContext {
        policy: config.mode,
        cap: config.cap,
        base_dir: base_dir.to_path_buf(),
    };
    for item in query.run(&externals, &cx)?.into_iter() {
        let line = render(&item?, config.format)?;
        writeln!(out, "{line}").map_err(|e| Error::io("cannot write output", e))?;
    }
    out.flush().map_err(|e| Error::io("cannot write output", e))
}

/// Runs the configured query file. Relative paths inside the query resolve
/// against the current directory.
pub fn run(config: &RunConfig) -> Result<()> {
    let text = fs::read_to_string(&config.query).map_err(|e| Error::io(config.query.display(), e))?;
    let base = std::env::current_dir().unwrap_or_else(|_| PathBuf::from("."));
    match &config.output {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| Error::io(path.display(), e))?;
            let mut w = io::BufWriter::new(file);
            run_text(&text, config, &base, &mut w)
        }
        None => {
            let stdout = io::stdout();
            let mut w = io::BufWriter::new(stdout.lock());
            run_text(&text, config, &base, &mut w)
        }
    }
}

/// Shortest decimal that reads back as the same double; integral values
/// print without a fraction.
pub fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        let mut buf = ryu::Buffer::new();
        let s = buf.format(v);
        s.to_string()
    }
}

/// One LibSVM line: label then 1-based `index:value` pairs, zeros omitted.
pub fn libsvm_line(label: f64, features: &[f64]) -> String {
    let mut line = format_number(label);
    for (j, v) in features.iter().enumerate() {
        if *v != 0.0 {
            let _ = write!(line, " {}:{}", j + 1, format_number(*v));
        }
    }
    line
}

/// Writes the label and feature columns of a frame in LibSVM format.
pub fn write_libsvm(frame: &Frame, label_col: &str, features_col: &str, out: &mut dyn Write) -> Result<()> {
    let (_, labels) = frame.column(label_col)?;
    let (fty, features) = frame.column(features_col)?;
    if !matches!(fty, FrameType::Array(m) if m.is_numeric_scalar()) {
        return Err(Error::new(
            ErrorCode::NonNumericInput,
            format!("column {features_col:?} has type {fty}, expected an array of numbers"),
        ));
    }
    for i in 0..frame.len() {
        let label = labels
            .atomic_at(i)
            .and_then(|a| a.cast(AtomicKind::Double).ok())
            .and_then(|a| a.to_f64())
            .ok_or_else(|| {
                Error::new(ErrorCode::BadLabel, format!("row {i}: label is not numeric"))
            })?;
        let row: Vec<f64> = match features.item_at(i) {
            Item::Array(members) => members.iter().map(|m| m.as_atomic().and_then(Atomic::to_f64).unwrap_or(0.0)).collect(),
            _ => Vec::new(),
        };
        writeln!(out, "{}", libsvm_line(label, &row)).map_err(|e| Error::io("cannot write LibSVM output", e))?;
    }
    Ok(())
}

/// Parses one line of the raw text format: a comma-joined tag list, then
/// space-separated feature values. Label 0 when a tag mentions "indoor".
pub fn parse_text_line(line: &str) -> Result<(f64, Vec<f64>)> {
    let mut tokens = line.split(' ').filter(|t| !t.is_empty());
    let tags = tokens.next().unwrap_or("");
    let label = if tags.contains("indoor") { 0.0 } else { 1.0 };
    let features = tokens
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::new(ErrorCode::NonNumericInput, format!("{t:?} is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((label, features))
}

/// Frame with a `label` double column and a `features` vector column built
/// from raw text lines.
pub fn text_to_frame(text: &str) -> Result<Frame> {
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let (label, features) = parse_text_line(line).map_err(|e| Error {
            message: format!("line {}: {}", i + 1, e.message),
            ..e
        })?;
        labels.push(label);
        rows.push(features);
    }
    Frame::from_columns(
        vec![
            (Arc::from("label"), FrameType::Double),
            (Arc::from("features"), FrameType::array(FrameType::Double)),
        ],
        vec![
            Arc::new(jqml_core::frame::Column::Double(labels)),
            Arc::new(vector_column(rows.iter().map(Vec::as_slice))),
        ],
    )
}

/// Frame built from a file of JSON objects, one per line.
pub fn json_lines_to_frame(text: &str) -> Result<Frame> {
    let items = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(parse_json)
        .collect::<Result<Vec<_>>>()?;
    Frame::infer_from_items(&items)
}

const TAGS: [&str; 8] = ["animal", "pet", "white", "black", "sky", "tree", "people", "water"];

/// Settings for the synthetic two-class dataset.
#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub rows: usize,
    pub dim: usize,
    pub margin: f64,
    pub seed: u64,
}

/// Raw text lines of a linearly separable two-class dataset. Each point is
/// `s * (margin/2 + |z|) * u + (I - u u^T) g` for a random unit vector `u`,
/// class sign `s` and standard normal `z`, `g`, so the hyperplane through
/// the origin orthogonal to `u` separates the classes with the given margin.
pub fn generate_lines(cfg: GenConfig) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = cfg.dim;
    let mut u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        u.iter_mut().for_each(|v| *v /= norm);
    }
    let mut lines = Vec::with_capacity(cfg.rows);
    for _ in 0..cfg.rows {
        let class1 = rng.random_bool(0.5);
        let s = if class1 { 1.0 } else { -1.0 };
        let z: f64 = rng.sample(StandardNormal);
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let gu: f64 = g.iter().zip(&u).map(|(a, b)| a * b).sum();
        let along = s * (cfg.margin / 2.0 + z.abs());
        let x: Vec<f64> = (0..d).map(|j| along * u[j] + g[j] - gu * u[j]).collect();

        let mut tags: Vec<String> = Vec::new();
        let scene = if class1 { "outdoor" } else { "indoor" };
        let mut names: Vec<&str> = TAGS.iter().copied().filter(|_| rng.random_bool(0.4)).collect();
        let at = rng.random_range(0..=names.len());
        names.insert(at, scene);
        for name in names {
            let score: f64 = rng.random_range(0.0..1.0);
            tags.push(format!("{name}:{score:.4}"));
        }
        let mut line = tags.join(",");
        for v in x {
            let _ = write!(line, " {v:.3}");
        }
        lines.push(line);
    }
    lines
}

pub fn write_lines(lines: &[String], path: &Path) -> Result<()> {
    let mut text = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path.display(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn libsvm_line_matches_figure() {
        assert_eq!(libsvm_line(0.0, &[-4.893, -3.803, -25.799]), "0 1:-4.893 2:-3.803 3:-25.799");
        assert_eq!(libsvm_line(1.0, &[0.0, 0.0]), "1");
        assert_eq!(libsvm_line(1.0, &[0.0, 2.0, 0.1]), "1 2:2 3:0.1");
    }

    #[test]
    fn var_values_parse_as_json_when_possible() {
        assert_eq!(canonical_serialize(&var_item("train.txt")).unwrap(), "\"train.txt\"");
        assert_eq!(canonical_serialize(&var_item("[1, 2]")).unwrap(), "[1, 2]");
        assert_eq!(parse_var("a=b=c").unwrap(), ("a".to_string(), "b=c".to_string()));
        assert!(parse_var("novalue").is_err());
    }

    #[test]
    fn generated_lines_have_expected_shape() {
        let lines = generate_lines(GenConfig { rows: 2, dim: 3, margin: 1.0, seed: 7 });
        assert_eq!(lines.len(), 2);
        for l in &lines {
            let (label, x) = parse_text_line(l).unwrap();
            assert_eq!(x.len(), 3);
            let tags = l.split(' ').next().unwrap();
            assert!(tags.contains(if label == 0.0 { "indoor:" } else { "outdoor:" }));
        }
        assert!(generate_lines(GenConfig { rows: 0, dim: 3, margin: 1.0, seed: 7 }).is_empty());
    }
}
