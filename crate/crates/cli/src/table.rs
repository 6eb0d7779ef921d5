//! Result tables and their CSV / SVG renderings.
//!
//! CSV layout: `# key value` metadata lines, one header row, then rows of
//! numbers in `{:.16e}` (17 significant digits, bit-exact on re-read), LF
//! line endings. Nothing time-dependent is written, so identical inputs give
//! identical files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub const TOOL_VERSION: &str = concat!("infogap ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum TableError {
    #[error("row {row} has {got} values, header has {expected}")]
    Ragged {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("malformed CSV: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Hex SHA-256 of the configuration text.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub name: String,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    /// Ordered (key, value) pairs; keys must not contain whitespace.
    pub metadata: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new(name: impl Into<String>, columns: Vec<String>) -> Self {
        ResultTable {
            name: name.into(),
            columns,
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.push((key.into(), value.into()));
        self
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<(), TableError> {
        if row.len() != self.columns.len() {
            return Err(TableError::Ragged {
                row: self.rows.len(),
                got: row.len(),
                expected: self.columns.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, TableError> {
        let i = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| TableError::UnknownColumn(name.to_string()))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_csv(&self) -> Result<String, TableError> {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k} {v}");
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns)
            .map_err(|e| TableError::Malformed(e.to_string()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:.16e}")))
                .map_err(|e| TableError::Malformed(e.to_string()))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| TableError::Malformed(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).map_err(|e| TableError::Malformed(e.to_string()))?);
        Ok(out)
    }

    pub fn from_csv(name: impl Into<String>, text: &str) -> Result<Self, TableError> {
        let mut metadata = Vec::new();
        let mut body = String::new();
        for line in text.lines() {
            match line.strip_prefix("# ") {
                Some(meta) => {
                    let (k, v) = meta.split_once(' ').unwrap_or((meta, ""));
                    metadata.push((k.to_string(), v.to_string()));
                }
                None => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
        let columns: Vec<String> = reader
            .headers()
            .map_err(|e| TableError::Malformed(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut table = ResultTable {
            name: name.into(),
            columns,
            rows: Vec::new(),
            metadata,
        };
        for record in reader.records() {
            let record = record.map_err(|e| TableError::Malformed(e.to_string()))?;
            let row = record
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| TableError::Malformed(format!("`{s}`: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            table.push_row(row)?;
        }
        Ok(table)
    }

    pub fn emit_csv(&self, path: &Path) -> Result<(), TableError> {
        fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    pub fn emit_svg(&self, plot: &PlotSpec, path: &Path) -> Result<(), TableError> {
        fs::write(path, self.to_svg(plot)?)?;
        Ok(())
    }

    /// A standalone SVG line chart of `plot.y` against `plot.x`.
    pub fn to_svg(&self, plot: &PlotSpec) -> Result<String, TableError> {
        let xs = self.column(&plot.x)?;
        let groups: Vec<(String, Vec<usize>)> = match &plot.group_by {
            None => vec![(String::new(), (0..self.rows.len()).collect())],
            Some(g) => {
                let key = self.column(g)?;
                let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
                for (i, k) in key.iter().enumerate() {
                    match groups.iter_mut().find(|(v, _)| v.to_bits() == k.to_bits()) {
                        Some((_, rows)) => rows.push(i),
                        None => groups.push((*k, vec![i])),
                    }
                }
                groups
                    .into_iter()
                    .map(|(v, rows)| (format!(" ({g}={v})"), rows))
                    .collect()
            }
        };
        let mut series = Vec::new();
        for name in &plot.y {
            let ys = self.column(name)?;
            for (suffix, rows) in &groups {
                series.push((
                    format!("{name}{suffix}"),
                    rows.iter().map(|&i| (xs[i], ys[i])).collect::<Vec<_>>(),
                ));
            }
        }
        Ok(render_svg(plot, &series))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x: String,
    pub y: Vec<String>,
    pub log_x: bool,
    pub log_y: bool,
    /// Draw one curve per distinct value of this column.
    pub group_by: Option<String>,
}

impl PlotSpec {
    /// First column against every other column, linear axes.
    pub fn default_for(table: &ResultTable) -> Self {
        let mut cols = table.columns().iter().cloned();
        let x = cols.next().unwrap_or_default();
        PlotSpec {
            title: table.name.clone(),
            x,
            y: cols.collect(),
            log_x: false,
            log_y: false,
            group_by: None,
        }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 160.0, 40.0, 50.0); // left, right, top, bottom
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = values
            .filter(|v| v.is_finite() && (!log || *v > 0.0))
            .map(|v| if log { v.log10() } else { v })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            });
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-300 {
            let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
            (lo, hi) = (lo - pad, hi + pad);
        }
        Axis { lo, hi, log }
    }

    /// Fraction along the axis, or None for points a log axis cannot show.
    fn frac(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v > 0.0 {
                v.log10()
            } else {
                return None;
            }
        } else {
            v
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn label(&self, f: f64) -> String {
        let v = self.lo + f * (self.hi - self.lo);
        if self.log {
            format!("1e{v:.1}")
        } else {
            format!("{v:.3e}")
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn render_svg(plot: &PlotSpec, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (ml, mr, mt, mb) = MARGIN;
    let (pw, ph) = (WIDTH - ml - mr, HEIGHT - mt - mb);
    let x_axis = Axis::fit(
        series.iter().flat_map(|(_, v)| v.iter().map(|p| p.0)),
        plot.log_x,
    );
    let y_axis = Axis::fit(
        series.iter().flat_map(|(_, v)| v.iter().map(|p| p.1)),
        plot.log_y,
    );

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        ml + pw / 2.0,
        escape(&plot.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (x, y) = (ml + f * pw, mt + ph - f * ph);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            mt + ph,
            mt + ph + 5.0,
            mt + ph + 18.0,
            x_axis.label(f)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{ml}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            ml - 5.0,
            ml - 8.0,
            y + 4.0,
            y_axis.label(f)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        ml + pw / 2.0,
        HEIGHT - 12.0,
        escape(&plot.x)
    );
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = pts
            .iter()
            .filter_map(|(x, y)| Some((x_axis.frac(*x)?, y_axis.frac(*y)?)))
            .map(|(fx, fy)| format!("{:.2},{:.2}", ml + fx * pw, mt + ph - fy * ph))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = mt + 10.0 + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            ml + pw + 10.0,
            ml + pw + 30.0,
            ml + pw + 35.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cols(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = ResultTable::new("empty", cols(&["a", "b"]));
        assert_eq!(t.to_csv().unwrap(), "a,b\n");
    }

    #[test]
    fn ragged_rows_rejected() {
        let mut t = ResultTable::new("t", cols(&["a", "b"]));
        assert!(matches!(
            t.push_row(vec![1.0]),
            Err(TableError::Ragged { .. })
        ));
    }

    #[test]
    fn csv_format() {
        let mut t = ResultTable::new("t", cols(&["x", "y"])).with_metadata("version", TOOL_VERSION);
        t.push_row(vec![0.1, -2.0]).unwrap();
        let csv = t.to_csv().unwrap();
        assert!(!csv.contains('\r'));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], format!("# version {TOOL_VERSION}"));
        assert_eq!(lines[1], "x,y");
        assert_eq!(lines[2], "1.0000000000000001e-1,-2.0000000000000000e0");
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut t = ResultTable::new("t", cols(&["a", "b", "c"]))
            .with_metadata("config_sha256", config_hash("x = 1"))
            .with_metadata("note", "two words");
        for _ in 0..200 {
            let row = (0..3)
                .map(|_| {
                    let m: f64 = rng.random_range(-1.0..1.0);
                    m * 10f64.powi(rng.random_range(-300..300))
                })
                .collect();
            t.push_row(row).unwrap();
        }
        t.push_row(vec![0.0, -0.0, f64::MIN_POSITIVE]).unwrap();
        t.push_row(vec![f64::MAX, 5e-324, 1.0 / 3.0]).unwrap();
        let back = ResultTable::from_csv("t", &t.to_csv().unwrap()).unwrap();
        assert_eq!(back.columns(), t.columns());
        assert_eq!(back.metadata, t.metadata);
        for (r0, r1) in t.rows().iter().zip(back.rows()) {
            for (a, b) in r0.iter().zip(r1) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn config_hash_is_sha256() {
        assert_eq!(
            config_hash(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn svg_line_chart() {
        let mut t = ResultTable::new("decay", cols(&["t", "B"]));
        for i in 0..10 {
            let x = i as f64 * 0.1;
            t.push_row(vec![x, (-x).exp()]).unwrap();
        }
        let svg = t.to_svg(&PlotSpec::default_for(&t)).unwrap();
        assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        let pts = svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        assert_eq!(pts.split(' ').count(), 10);
    }

    #[test]
    fn svg_log_axis_drops_non_positive_points() {
        let mut t = ResultTable::new("log", cols(&["x", "y"]));
        for (x, y) in [(1.0, 0.0), (2.0, 1e-3), (3.0, 1e-1), (4.0, 10.0)] {
            t.push_row(vec![x, y]).unwrap();
        }
        let plot = PlotSpec {
            log_y: true,
            ..PlotSpec::default_for(&t)
        };
        let svg = t.to_svg(&plot).unwrap();
        let pts = svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        assert_eq!(pts.split(' ').count(), 3);
        assert!(svg.contains("1e-3.0"));
    }

    #[test]
    fn svg_groups_one_curve_per_value() {
        let mut t = ResultTable::new("sweep", cols(&["T", "t", "B"]));
        for temp in [1.0, 2.0] {
            for i in 0..4 {
                t.push_row(vec![temp, i as f64, 1.0 / (1.0 + temp * i as f64)])
                    .unwrap();
            }
        }
        let plot = PlotSpec {
            x: "t".into(),
            y: vec!["B".into()],
            group_by: Some("T".into()),
            ..PlotSpec::default_for(&t)
        };
        let svg = t.to_svg(&plot).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("B (T=2)"));
    }

    #[test]
    fn svg_unknown_column() {
        let t = ResultTable::new("t", cols(&["x"]));
        let plot = PlotSpec {
            title: "p".into(),
            x: "x".into(),
            y: vec!["nope".into()],
            log_x: false,
            log_y: false,
            group_by: None,
        };
        assert!(matches!(t.to_svg(&plot), Err(TableError::UnknownColumn(_))));
    }
}
