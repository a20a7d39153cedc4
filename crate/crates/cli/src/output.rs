use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use isoquant::geom2d::{ArcShape, BBox, Point};
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub const SCHEMA_LINE: &str = "# isoquant-schema v1";

/// Rounds to 12 significant digits; non-finite values pass through.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Number as written to CSV: 12 significant digits, empty for NaN.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        let r = round12(x);
        if r != 0.0 && (r.abs() < 1e-4 || r.abs() >= 1e15) {
            format!("{r:e}")
        } else {
            r.to_string()
        }
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                if let Some(r) = serde_json::Number::from_f64(round12(f)) {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 12 significant digits.
/// Non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("output serializes");
    round_value(&mut v);
    serde_json::to_string_pretty(&v).expect("value serializes")
}

pub fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source: e,
    }
}

pub fn write_text(path: &str, text: &str) -> Result<(), CliError> {
    let p = Path::new(path);
    std::fs::write(p, text).map_err(|e| io_err(p, e))
}

/// Writes `text` to `path`, or to stdout if no path is given.
pub fn emit(path: Option<&str>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// CSV table with the schema line, header and rows.
pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| CliError::Config(e.to_string()))?)
        .expect("csv output is utf-8");
    Ok(format!("{SCHEMA_LINE}\n{body}"))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Config(format!("csv: {e}"))
}

/// Append-only CSV used by resumable sweeps. Rows already present are
/// reported by their second (parameter) column so the caller can skip them.
pub struct ResumableCsv {
    file: File,
    pub done: Vec<String>,
}

impl ResumableCsv {
    pub fn open(path: &str, header: &[&str]) -> Result<Self, CliError> {
        let p = Path::new(path);
        let mut done = Vec::new();
        let existing = p.exists() && std::fs::metadata(p).map(|m| m.len() > 0).unwrap_or(false);
        if existing {
            let f = File::open(p).map_err(|e| io_err(p, e))?;
            let mut lines = BufReader::new(f).lines();
            let first = lines.next().transpose().map_err(|e| io_err(p, e))?;
            let second = lines.next().transpose().map_err(|e| io_err(p, e))?;
            if first.as_deref() != Some(SCHEMA_LINE) || second.as_deref() != Some(&header.join(",")[..]) {
                return Err(CliError::Config(format!(
                    "{path} exists but is not a sweep table with the expected columns"
                )));
            }
            let rest: Vec<String> = lines.collect::<Result<_, _>>().map_err(|e| io_err(p, e))?;
            // Rows are kept only if complete; a torn final line from an
            // interrupted run is dropped and redone.
            let mut text = format!("{SCHEMA_LINE}\n{}\n", header.join(","));
            for line in &rest {
                let rec = csv::ReaderBuilder::new()
                    .has_headers(false)
                    .from_reader(line.as_bytes())
                    .records()
                    .next()
                    .and_then(|r| r.ok());
                if let Some(rec) = rec.filter(|r| r.len() == header.len()) {
                    done.push(rec[1].to_string());
                    text.push_str(line);
                    text.push('\n');
                }
            }
            std::fs::write(p, text).map_err(|e| io_err(p, e))?;
        } else {
            std::fs::write(p, format!("{SCHEMA_LINE}\n{}\n", header.join(","))).map_err(|e| io_err(p, e))?;
        }
        let file = OpenOptions::new().append(true).open(p).map_err(|e| io_err(p, e))?;
        Ok(Self { file, done })
    }

    pub fn append(&mut self, row: &[String]) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(row).map_err(csv_err)?;
        let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
        self.file.write_all(&bytes).and_then(|_| self.file.flush()).map_err(|e| CliError::Io {
            path: "sweep output".into(),
            source: e,
        })
    }
}

/// One drawn layer of an SVG figure.
pub enum Layer<'a> {
    Shape { shape: &'a ArcShape, stroke: &'a str, fill: &'a str },
    Circle { center: Point, radius: f64, stroke: &'a str },
}

/// SVG figure in y-up coordinates, with the config hash as metadata.
pub fn svg(layers: &[Layer], config_hash: &str) -> String {
    let mut bb = BBox::empty();
    for l in layers {
        match l {
            Layer::Shape { shape, .. } => bb = bb.union(shape.bbox()),
            Layer::Circle { center, radius, .. } => {
                bb.include(Point::new(center.x - radius, center.y - radius));
                bb.include(Point::new(center.x + radius, center.y + radius));
            }
        }
    }
    let bb = bb.inflate(0.05 * bb.width().max(bb.height()));
    let sw = 0.004 * bb.width().max(bb.height());
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n<metadata>config-sha256: {config_hash}</metadata>\n<g transform=\"scale(1,-1)\">\n",
        num(bb.min.x),
        num(-bb.max.y),
        num(bb.width()),
        num(bb.height())
    );
    for l in layers {
        match l {
            Layer::Shape { shape, stroke, fill } => out.push_str(&format!(
                "<path d=\"{}\" fill=\"{fill}\" stroke=\"{stroke}\" stroke-width=\"{}\"/>\n",
                shape.svg_path(),
                num(sw)
            )),
            Layer::Circle { center, radius, stroke } => out.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-dasharray=\"{} {}\" stroke-width=\"{}\"/>\n",
                num(center.x),
                num(center.y),
                num(*radius),
                num(4.0 * sw),
                num(2.0 * sw),
                num(sw)
            )),
        }
    }
    out.push_str("</g>\n</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round12(0.1 + 0.2), 0.3);
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(f64::NAN), "");
        assert_eq!(num(-1.745294447163e-16), "-1.74529444716e-16");
        let j = to_json(&serde_json::json!({"a": [0.1 + 0.2, 3], "b": f64::NAN}));
        assert!(j.contains("0.3") && j.contains("null") && !j.contains("0.30000000000000004"));
    }

    #[test]
    fn resumable_csv_skips_done_rows_and_torn_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let ps = p.to_str().unwrap();
        let header = ["family", "parameter", "q"];
        {
            let mut w = ResumableCsv::open(ps, &header).unwrap();
            assert!(w.done.is_empty());
            w.append(&["oval".into(), "0.1".into(), "0.5".into()]).unwrap();
        }
        let mut text = std::fs::read_to_string(&p).unwrap();
        text.push_str("oval,0.2");
        std::fs::write(&p, text).unwrap();
        let w = ResumableCsv::open(ps, &header).unwrap();
        assert_eq!(w.done, vec!["0.1".to_string()]);
        assert_eq!(std::fs::read_to_string(&p).unwrap().lines().count(), 3);
        assert!(ResumableCsv::open(ps, &["other"]).is_err());
    }
}
