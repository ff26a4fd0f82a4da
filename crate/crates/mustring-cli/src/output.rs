//! CSV and JSON emission with a fixed float format.
//!
//! Floats are written with 17 significant digits in scientific notation, which
//! round-trips every f64. JSON goes through `serde_json::Value` and is printed
//! by hand so the same float format applies there too.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use mustring::model::StringParams;
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything that determines a run. Serialized into every output.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub subcommand: String,
    pub config: StringParams,
    pub config_path: Option<String>,
    pub count: Option<usize>,
    pub cutoff: Option<usize>,
    pub nmax: Option<u32>,
    pub preset: Option<String>,
    pub tol: Option<f64>,
    pub seed: u64,
    pub out: Option<String>,
    /// Subcommand-specific settings not covered by the shared flags.
    pub extra: Vec<(String, String)>,
}

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// A CSV cell.
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.into())
    }
}

/// CSV table: one `# manifest` comment line, a header row, then the rows.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, manifest: &RunManifest) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# manifest {}", to_json_compact(manifest));
        s.push_str(&self.header.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(i) => i.to_string(),
                    Cell::Float(x) => fmt_f64(*x),
                    Cell::Text(t) if t.contains([',', '"', '\n']) => format!("\"{}\"", t.replace('"', "\"\"")),
                    Cell::Text(t) => t.clone(),
                })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

fn write_value(out: &mut String, v: &Value, indent: Option<usize>) {
    let (nl, pad, inner) = match indent {
        Some(n) => ("\n", " ".repeat(n), Some(n + 2)),
        None => ("", String::new(), None),
    };
    let ipad = inner.map(|n| " ".repeat(n)).unwrap_or_default();
    let sep = if indent.is_some() { ": " } else { ":" };
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(i), _, _) if !n.is_f64() => out.push_str(&i.to_string()),
            (_, Some(u), _) if !n.is_f64() => out.push_str(&u.to_string()),
            (_, _, Some(x)) if x.is_finite() => out.push_str(&fmt_f64(x)),
            _ => out.push_str("null"),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(nl);
                out.push_str(&ipad);
                write_value(out, x, inner);
            }
            out.push_str(nl);
            out.push_str(&pad);
            out.push(']');
        }
        Value::Object(o) if o.is_empty() => out.push_str("{}"),
        Value::Object(o) => {
            out.push('{');
            for (i, (k, x)) in o.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(nl);
                out.push_str(&ipad);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(sep);
                write_value(out, x, inner);
            }
            out.push_str(nl);
            out.push_str(&pad);
            out.push('}');
        }
    }
}

fn to_value(v: &impl Serialize) -> Value {
    // non-finite floats become null; every type passed here serializes
    serde_json::to_value(v).unwrap_or(Value::Null)
}

pub fn to_json_compact(v: &impl Serialize) -> String {
    let mut s = String::new();
    write_value(&mut s, &to_value(v), None);
    s
}

pub fn to_json_pretty(v: &impl Serialize) -> String {
    let mut s = String::new();
    write_value(&mut s, &to_value(v), Some(0));
    s.push('\n');
    s
}

/// A JSON document: `schema_version`, the manifest, then the payload fields.
pub fn json_document(manifest: &RunManifest, payload: &impl Serialize) -> String {
    let mut obj = serde_json::Map::new();
    obj.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    obj.insert("manifest".into(), to_value(manifest));
    match to_value(payload) {
        Value::Object(m) => obj.extend(m),
        other => {
            obj.insert("result".into(), other);
        }
    }
    to_json_pretty(&Value::Object(obj))
}

/// Write to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> RunManifest {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            tool_version: "0",
            subcommand: "modes".into(),
            config: StringParams::default(),
            config_path: None,
            count: Some(3),
            cutoff: None,
            nmax: None,
            preset: None,
            tol: Some(1e-10),
            seed: 1,
            out: None,
            extra: vec![],
        }
    }

    #[test]
    fn floats_round_trip_at_17_digits() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.808675073391431] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn csv_has_manifest_and_header() {
        let mut t = Table::new(vec!["m", "omega"]);
        t.push(vec![1usize.into(), 0.5.into()]);
        let s = t.render(&manifest());
        let lines: Vec<&str> = s.lines().collect();
        let m: Value = serde_json::from_str(lines[0].strip_prefix("# manifest ").unwrap()).unwrap();
        assert_eq!(m["schema_version"], 1);
        assert_eq!(lines[1], "m,omega");
        assert_eq!(lines[2], "1,5.0000000000000000e-1");
    }

    #[test]
    fn json_document_parses() {
        #[derive(Serialize)]
        struct P {
            x: f64,
            n: usize,
            bad: f64,
        }
        let s = json_document(&manifest(), &P { x: 0.25, n: 7, bad: f64::NAN });
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["x"].as_f64(), Some(0.25));
        assert_eq!(v["n"], 7);
        assert!(v["bad"].is_null());
        assert_eq!(v["manifest"]["subcommand"], "modes");
        assert!(s.contains("2.5000000000000000e-1"));
    }
}
