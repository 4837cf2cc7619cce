//! Plot-ready artifacts: rate CSV/JSON, T_peak tables and dataset dumps.
//!
//! Numbers are written in scientific notation with 10 significant digits
//! (17 for raw samples), independent of locale, so reruns are byte-identical.

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::mc_validate::Dataset;
use crate::rate_engine::RatePoint;

pub const RATE_CSV_HEADER: &str = "distance_km,T,V_A_opt,I_AB_bits,S_yE_bits,key_rate_bits,mode,variant";

/// 10 significant digits.
pub fn fmt10(x: f64) -> String {
    format!("{x:.9e}")
}

/// 17 significant digits: enough to round-trip an `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// The value a reader of [`fmt10`] output would recover.
fn rounded10(x: f64) -> f64 {
    fmt10(x).parse().unwrap_or(x)
}

fn number(x: f64) -> Value {
    serde_json::Number::from_f64(rounded10(x)).map_or(Value::Null, Value::Number)
}

pub fn rate_csv_row(p: &RatePoint) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        fmt10(p.distance_km),
        fmt10(p.transmittance),
        fmt10(p.va_opt),
        fmt10(p.i_ab),
        fmt10(p.s_ye),
        fmt10(p.key_rate),
        p.mode,
        p.variant
    )
}

pub fn rate_csv(points: &[RatePoint]) -> String {
    let mut out = String::with_capacity(100 * (points.len() + 1));
    out.push_str(RATE_CSV_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&rate_csv_row(p));
        out.push('\n');
    }
    out
}

/// Same fields and values as [`rate_csv`], one object per row.
pub fn rate_json(points: &[RatePoint]) -> String {
    let rows: Vec<Value> = points
        .iter()
        .map(|p| {
            json!({
                "distance_km": number(p.distance_km),
                "T": number(p.transmittance),
                "V_A_opt": number(p.va_opt),
                "I_AB_bits": number(p.i_ab),
                "S_yE_bits": number(p.s_ye),
                "key_rate_bits": number(p.key_rate),
                "mode": p.mode.as_str(),
                "variant": p.variant,
            })
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rows).unwrap_or_default();
    s.push('\n');
    s
}

/// Generic table with 10-significant-digit cells.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.iter().map(|&x| fmt10(x)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

pub fn table_json(header: &[&str], rows: &[Vec<f64>]) -> String {
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            let obj: Map<String, Value> = header.iter().zip(r).map(|(h, &x)| (h.to_string(), number(x))).collect();
            Value::Object(obj)
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rows).unwrap_or_default();
    s.push('\n');
    s
}

/// Header line `# <config echo joined by "; ">`, then `x<TAB>y` per sample.
pub fn dataset_dump(config_echo: &str, data: &Dataset) -> String {
    let header: Vec<&str> = config_echo.lines().filter(|l| !l.trim().is_empty()).collect();
    let mut out = String::with_capacity(50 * (data.len() + 1));
    out.push_str("# ");
    out.push_str(&header.join("; "));
    out.push('\n');
    for (x, y) in data.x.iter().zip(&data.y) {
        out.push_str(&fmt17(*x));
        out.push('\t');
        out.push_str(&fmt17(*y));
        out.push('\n');
    }
    out
}

/// Read a dump back. The header is returned as `key = value` lines.
pub fn parse_dataset_dump(text: &str) -> Result<(String, Dataset)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| Error::DegenerateInput("dataset dump lacks its header line".into()))?;
    let echo = header.split("; ").map(|l| format!("{l}\n")).collect::<String>();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let (a, b) = line
            .split_once('\t')
            .ok_or_else(|| Error::DegenerateInput(format!("line {}: expected two tab-separated values", i + 2)))?;
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::DegenerateInput(format!("line {}: `{s}` is not a number", i + 2)))
        };
        x.push(parse(a)?);
        y.push(parse(b)?);
    }
    Ok((echo, Dataset { x, y }))
}

/// Write `contents` to `dir/name`, creating `dir` if needed.
pub fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
