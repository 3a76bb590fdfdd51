//! JSON and CSV output. Numbers carry 17 significant digits; non-finite
//! values become `null` (JSON) or an empty field (CSV).

use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde_json::{json, Map, Number, Value};

use super::suites::{Expect, Point, SuiteReport};
use crate::error::{FinslerError, Result};

pub const FORMAT_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = FinslerError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(FinslerError::Config(format!("unknown format '{other}'"))),
        }
    }
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Number::from_str(&fmt_num(x)).map_or(Value::Null, Value::Number)
}

fn complex_list(xs: &[Complex64]) -> Value {
    Value::Array(xs.iter().map(|c| json!([num(c.re), num(c.im)])).collect())
}

fn point(p: &Option<Point>) -> Value {
    match p {
        None => Value::Null,
        Some((z, v)) => json!({ "z": complex_list(z), "v": complex_list(v) }),
    }
}

fn report_json(r: &SuiteReport) -> Value {
    let details: Vec<Value> = r
        .details
        .iter()
        .map(|c| {
            let mut values = Map::new();
            for (k, v) in &c.values {
                values.insert(k.clone(), num(*v));
            }
            json!({
                "check": c.name,
                "residual": num(c.residual),
                "point": point(&c.point),
                "values": values,
            })
        })
        .collect();
    json!({
        "suite": r.suite.name(),
        "status": r.status.name(),
        "expect": match r.expect { Expect::Small => "small", Expect::Nonzero => "nonzero" },
        "worst_residual": num(r.worst_residual),
        "tolerance": num(r.tolerance),
        "worst_point": point(&r.worst_point),
        "reason": r.reason,
        "details": details,
        "wall_time": num(r.wall_time),
    })
}

pub fn to_json(config_echo: &Value, reports: &[SuiteReport]) -> Value {
    json!({
        "version": FORMAT_VERSION,
        "config_echo": config_echo,
        "reports": reports.iter().map(report_json).collect::<Vec<_>>(),
    })
}

fn point_field(xs: &[Complex64]) -> String {
    xs.iter()
        .map(|c| format!("{} {}", fmt_num(c.re), fmt_num(c.im)))
        .collect::<Vec<_>>()
        .join(";")
}

fn csv_num(x: f64) -> String {
    if x.is_finite() {
        fmt_num(x)
    } else {
        String::new()
    }
}

/// One row per check; suites without checks get a single row.
pub fn to_csv(reports: &[SuiteReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| FinslerError::Io(e.to_string());
    w.write_record(["suite", "status", "check", "residual", "tolerance", "z", "v", "values", "reason"])
        .map_err(io)?;
    for r in reports {
        let base = [r.suite.name(), r.status.name()];
        if r.details.is_empty() {
            w.write_record([
                base[0],
                base[1],
                "",
                &csv_num(r.worst_residual),
                &csv_num(r.tolerance),
                "",
                "",
                "",
                r.reason.as_deref().unwrap_or(""),
            ])
            .map_err(io)?;
        }
        for c in &r.details {
            let (z, v) = c.point.as_ref().map_or((String::new(), String::new()), |(z, v)| (point_field(z), point_field(v)));
            let values = c
                .values
                .iter()
                .map(|(k, x)| format!("{k}={}", csv_num(*x)))
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([
                base[0],
                base[1],
                &c.name,
                &csv_num(c.residual),
                &csv_num(r.tolerance),
                &z,
                &v,
                &values,
                r.reason.as_deref().unwrap_or(""),
            ])
            .map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| FinslerError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| FinslerError::Io(e.to_string()))
}

pub fn render(config_echo: &Value, reports: &[SuiteReport], format: Format) -> Result<String> {
    match format {
        Format::Json => serde_json::to_string_pretty(&to_json(config_echo, reports))
            .map(|s| s + "\n")
            .map_err(|e| FinslerError::Io(e.to_string())),
        Format::Csv => to_csv(reports),
    }
}

/// Writes the rendered reports to `path`, or stdout when `None`.
pub fn emit(config_echo: &Value, reports: &[SuiteReport], format: Format, path: Option<&Path>) -> Result<()> {
    let text = render(config_echo, reports, format)?;
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
