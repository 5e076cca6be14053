//! CSV and JSONL serialization of grid paths.
//!
//! Numbers are written in Rust's shortest round-trip form, so reading a file
//! back reproduces every value bit-for-bit. CSV files may start with
//! `# key=value` metadata lines.

use std::io::{BufRead, Write};
use std::str::FromStr;

use serde_json::{Map, Value};

use super::{Partition, StepPath};
use crate::{Error, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(Error::config("format", format!("unknown format `{other}` (csv|jsonl)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => (if *b { "1" } else { "0" }).to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map(Value::Number).unwrap_or(Value::Null),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Flag(b) => Value::Bool(*b),
        }
    }
}

/// A rectangular table with optional metadata.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn write<W: Write>(&self, out: W, format: Format) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Jsonl => self.write_jsonl(out),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_csv))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        if !self.metadata.is_empty() {
            let meta: Map<String, Value> = self
                .metadata
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect();
            let mut rec = Map::new();
            rec.insert("meta".into(), Value::Object(meta));
            writeln!(out, "{}", Value::Object(rec))?;
        }
        for row in &self.rows {
            let rec: Map<String, Value> = self
                .columns
                .iter()
                .cloned()
                .zip(row.iter().map(Cell::to_json))
                .collect();
            writeln!(out, "{}", Value::Object(rec))?;
        }
        Ok(())
    }
}

fn value_columns(prefix: &str, d: usize) -> impl Iterator<Item = String> + '_ {
    (1..=d).map(move |i| format!("{prefix}_{i}"))
}

/// `time, v_1..v_d`.
pub fn step_path_table(path: &StepPath) -> Table {
    let columns = std::iter::once("time".to_string())
        .chain(value_columns("v", path.dimension()))
        .collect();
    let rows = path
        .times()
        .iter()
        .zip(path.values())
        .map(|(&t, v)| std::iter::once(Cell::Num(t)).chain(v.iter().map(|&x| Cell::Num(x))).collect())
        .collect();
    Table {
        metadata: Vec::new(),
        columns,
        rows,
    }
}

/// `time, component, v_1..v_d` with one block of rows per labelled path.
pub fn labelled_paths_table(paths: &[(&str, &StepPath)]) -> Table {
    let d = paths.first().map(|(_, p)| p.dimension()).unwrap_or(1);
    let columns = ["time".to_string(), "component".to_string()]
        .into_iter()
        .chain(value_columns("v", d))
        .collect();
    let mut rows = Vec::new();
    for (label, path) in paths {
        for (&t, v) in path.times().iter().zip(path.values()) {
            let mut row = vec![Cell::Num(t), Cell::Text((*label).to_string())];
            row.extend(v.iter().map(|&x| Cell::Num(x)));
            rows.push(row);
        }
    }
    Table {
        metadata: Vec::new(),
        columns,
        rows,
    }
}

pub fn write_step_path<W: Write>(path: &StepPath, out: W, format: Format) -> Result<()> {
    step_path_table(path).write(out, format)
}

fn build_path(times: Vec<f64>, values: Vec<Point>) -> Result<StepPath> {
    StepPath::new(Partition::new(times)?, values)
}

/// Reads a `time, v_1..v_d` file. Extra columns are ignored.
pub fn read_step_path<R: BufRead>(input: R, format: Format) -> Result<StepPath> {
    match format {
        Format::Csv => read_csv(input),
        Format::Jsonl => read_jsonl(input),
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("not a number: `{s}`")))
}

fn read_csv<R: BufRead>(input: R) -> Result<StepPath> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let headers = rdr.headers()?.clone();
    let time_col = headers
        .iter()
        .position(|h| h == "time")
        .ok_or_else(|| Error::Parse("missing `time` column".into()))?;
    let value_cols: Vec<usize> = (1..)
        .map_while(|i| headers.iter().position(|h| h == format!("v_{i}")))
        .collect();
    if value_cols.is_empty() {
        return Err(Error::Parse("missing `v_1` column".into()));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        times.push(parse_num(&rec[time_col])?);
        let v: Result<Vec<f64>> = value_cols.iter().map(|&c| parse_num(&rec[c])).collect();
        values.push(Point::from_vec(v?));
    }
    build_path(times, values)
}

fn read_jsonl<R: BufRead>(input: R) -> Result<StepPath> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Map<String, Value> = serde_json::from_str(&line)?;
        if rec.contains_key("meta") {
            continue;
        }
        let num = |key: &str| -> Result<f64> {
            rec.get(key)
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Parse(format!("record lacks numeric `{key}`")))
        };
        times.push(num("time")?);
        let v: Vec<f64> = (1..)
            .map_while(|i| rec.get(&format!("v_{i}")).and_then(Value::as_f64))
            .collect();
        if v.is_empty() {
            return Err(Error::Parse("record lacks `v_1`".into()));
        }
        values.push(Point::from_vec(v));
    }
    build_path(times, values)
}
