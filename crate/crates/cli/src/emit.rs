//! Report serialization: canonical JSON, plain text and CSV.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde_json::Value;

use crate::run::{Cell, RunReport, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Text => "txt",
            Format::Csv => "csv",
        }
    }
}

/// Seventeen significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_json(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => out.push_str(&u.to_string()),
            (_, Some(i), _) => out.push_str(&i.to_string()),
            (_, _, Some(f)) => out.push_str(&format_float(f)),
            _ => out.push_str(&n.to_string()),
        },
        Value::Array(items) if items.iter().all(|x| !(x.is_array() || x.is_object())) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_json(item, indent, out);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                out.push_str(if i == 0 { "\n" } else { ",\n" });
                out.push_str(&pad(indent + 1));
                write_json(item, indent + 1, out);
            }
            out.push('\n');
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                out.push_str(if i == 0 { "\n" } else { ",\n" });
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_json(&map[k], indent + 1, out);
            }
            out.push('\n');
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Sorted keys, two-space indent, scalar arrays on one line, floats via
/// [`format_float`], trailing newline.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_json(v, 0, &mut out);
    out.push('\n');
    out
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("null".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

/// `[re, im]` pairs render as `a+bi`.
fn complex_text(v: &Value) -> Option<String> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => {
            let (re, im) = (re.as_f64()?, im.as_f64()?);
            Some(if im < 0.0 { format!("{re}-{}i", -im) } else { format!("{re}+{im}i") })
        }
        _ => None,
    }
}

fn inline(v: &Value) -> Option<String> {
    if let Some(s) = scalar_text(v) {
        return Some(s);
    }
    let items = v.as_array()?;
    let parts: Option<Vec<String>> = if items.iter().all(|x| complex_text(x).is_some()) && !items.is_empty() {
        items.iter().map(complex_text).collect()
    } else {
        items.iter().map(scalar_text).collect()
    };
    parts.map(|p| format!("[{}]", p.join(", ")))
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    if let Some(s) = inline(v) {
        let _ = writeln!(out, "  {prefix} = {s}");
        return;
    }
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for k in keys {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&p, &map[k], out);
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), item, out);
            }
        }
        _ => unreachable!("scalars are inlined"),
    }
}

fn text(r: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} report: {}", r.tool, r.kind);
    let _ = writeln!(out, "  status = {}", r.status);
    let _ = writeln!(out, "  seed = {}", r.seed);
    let _ = writeln!(out, "  wall clock = {:.3} s", r.wall_clock_seconds);
    if let Some(e) = &r.error {
        let _ = writeln!(out, "\nerror\n  {}: {}", e.name, e.message);
    }
    if !r.provenance.is_empty() {
        out.push_str("\nprovenance\n");
        for p in &r.provenance {
            let _ = writeln!(out, "  - {p}");
        }
    }
    out.push_str("\ninputs\n");
    flatten("", &r.inputs, &mut out);
    if !r.outputs.is_null() {
        out.push_str("\noutputs\n");
        flatten("", &r.outputs, &mut out);
    }
    for s in &r.sections {
        out.push('\n');
        out.push_str(s);
    }
    out
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Int(i) => i.to_string(),
        Cell::Num(x) => x.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

/// One header row naming the table, then its rows.
fn csv_table(name: &str, t: &Table) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["table".to_string()];
    header.extend(t.columns.iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for row in &t.rows {
        let mut rec = vec![name.to_string()];
        rec.extend(row.iter().map(cell_text));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn csv(r: &RunReport) -> String {
    r.tables.iter().map(|(name, t)| csv_table(name, t)).collect::<Vec<_>>().join("\n")
}

pub fn emit_report(r: &RunReport, format: Format) -> Vec<u8> {
    match format {
        Format::Json => canonical_json(&r.to_value()),
        Format::Text => text(r),
        Format::Csv => csv(r),
    }
    .into_bytes()
}
