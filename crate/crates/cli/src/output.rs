//! Tables and their CSV / JSON encodings.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub samples: u64,
    pub streams: u64,
    pub constants: BTreeMap<String, f64>,
    pub output_format: OutputFormat,
    pub output_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// 17 significant digits; non-finite values as `inf`, `-inf`, `nan`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => json!(format_float(*v)),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write<W: Write + ?Sized>(&self, config: &RunConfig, w: &mut W) -> io::Result<()> {
        match config.output_format {
            OutputFormat::Csv => self.write_csv(config, w),
            OutputFormat::Json => self.write_json(config, w),
        }
    }

    fn write_csv<W: Write + ?Sized>(&self, config: &RunConfig, w: &mut W) -> io::Result<()> {
        writeln!(w, "# lplab {}", config.version)?;
        writeln!(w, "# schema_version = {SCHEMA_VERSION}")?;
        writeln!(w, "# command = {}", config.command)?;
        writeln!(w, "# seed = {}", config.seed)?;
        writeln!(w, "# samples = {}", config.samples)?;
        writeln!(w, "# streams = {}", config.streams)?;
        writeln!(w, "# output_format = {}", config.output_format.name())?;
        writeln!(w, "# output_path = {}", config.output_path.as_deref().unwrap_or("-"))?;
        for (k, v) in &config.constants {
            writeln!(w, "# constants.{k} = {v}")?;
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::to_csv))?;
        }
        out.flush()
    }

    fn write_json<W: Write + ?Sized>(&self, config: &RunConfig, w: &mut W) -> io::Result<()> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self.columns.iter().cloned().zip(row.iter().map(Cell::to_json)).collect();
                Value::Object(obj)
            })
            .collect();
        let doc = json!({ "config": config, "schema_version": SCHEMA_VERSION, "rows": rows });
        serde_json::to_writer_pretty(&mut *w, &doc)?;
        writeln!(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(format: OutputFormat) -> RunConfig {
        RunConfig {
            version: "0.0.0".into(),
            command: "test".into(),
            seed: 1,
            samples: 10,
            streams: 2,
            constants: BTreeMap::from([("c_a".to_string(), 0.25)]),
            output_format: format,
            output_path: None,
        }
    }

    #[test]
    fn floats_round_trip_through_text() {
        for x in [0.1, 1.0 / 3.0, 2.5e-300, -7.0, f64::MAX, 5e-324] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(f64::INFINITY), "inf");
        assert_eq!(format_float(f64::NAN), "nan");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["p", "regime", "ok"]);
        t.push(vec![2.0.into(), "LOW".into(), true.into()]);
        t.push(vec![f64::INFINITY.into(), "a,b".into(), false.into()]);
        let mut buf = Vec::new();
        t.write(&config(OutputFormat::Csv), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines, ["p,regime,ok", "2.0000000000000000e0,LOW,true", "inf,\"a,b\",false"]);
        assert!(text.starts_with("# lplab 0.0.0\n"));
        assert!(text.contains("# constants.c_a = 0.25\n"));
    }

    #[test]
    fn json_layout() {
        let mut t = Table::new(&["n", "v"]);
        t.push(vec![3u64.into(), f64::NEG_INFINITY.into()]);
        let mut buf = Vec::new();
        t.write(&config(OutputFormat::Json), &mut buf).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["rows"][0]["n"], 3);
        assert_eq!(v["rows"][0]["v"], "-inf");
        assert_eq!(v["config"]["seed"], 1);
    }
}
