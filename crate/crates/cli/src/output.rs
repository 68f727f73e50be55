//! Tables and their CSV / JSON serialization.

use serde_json::{json, Map, Value};

use crate::config::{FormatArg, Settings};

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// `%.12g`-style rendering: 12 significant digits, trailing zeros dropped,
/// exponent form outside `[1e-5, 1e12)`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".into()
        } else {
            t.into()
        }
    } else {
        s.into()
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => num_value(*x),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Numbers go through the 12-digit text form so that JSON and CSV agree.
fn num_value(x: f64) -> Value {
    let text = fmt_num(x);
    match text
        .parse::<f64>()
        .ok()
        .and_then(serde_json::Number::from_f64)
    {
        Some(n) if x.is_finite() => Value::Number(n),
        _ => Value::String(text),
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn write_csv(&self, out: &mut String) {
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }

    fn json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let mut obj = Map::new();
                    for (c, v) in self.columns.iter().zip(row) {
                        obj.insert((*c).to_string(), v.json());
                    }
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// A command's result: the main table, an optional one-row summary and the
/// grid parameters recorded in JSON metadata.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub table: Table,
    pub summary: Option<Table>,
    pub grid: Vec<(&'static str, Cell)>,
}

impl Report {
    pub fn new(command: &'static str, table: Table) -> Self {
        Self {
            command,
            table,
            summary: None,
            grid: Vec::new(),
        }
    }

    /// CSV: the table, then (if any) a blank line and the summary table.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        self.table.write_csv(&mut out);
        if let Some(summary) = &self.summary {
            out.push('\n');
            summary.write_csv(&mut out);
        }
        out
    }

    pub fn to_json(&self, settings: &Settings) -> String {
        let mut config = Map::new();
        for (k, v) in settings.echo() {
            config.insert(k.to_string(), Value::String(v));
        }
        let mut grid = Map::new();
        for (k, v) in &self.grid {
            grid.insert((*k).to_string(), v.json());
        }
        let mut doc = Map::new();
        doc.insert(
            "metadata".into(),
            json!({
                "command": self.command,
                "version": env!("CARGO_PKG_VERSION"),
                "config": Value::Object(config),
                "grid": Value::Object(grid),
            }),
        );
        doc.insert("columns".into(), json!(self.table.columns));
        doc.insert("rows".into(), self.table.json_rows());
        if let Some(summary) = &self.summary {
            let rows = summary.json_rows();
            let first = rows.as_array().and_then(|r| r.first()).cloned();
            doc.insert("summary".into(), first.unwrap_or(Value::Null));
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable");
        text.push('\n');
        text
    }

    pub fn render(&self, settings: &Settings) -> String {
        match settings.format {
            FormatArg::Csv => self.to_csv(),
            FormatArg::Json => self.to_json(settings),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(2.0), "2");
        assert_eq!(fmt_num(-2.0), "-2");
        assert_eq!(fmt_num(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(2.0 * 3f64.sqrt()), "3.46410161514");
        assert_eq!(fmt_num(1e-7), "1e-07");
        assert_eq!(fmt_num(-1.234_567_890_123_4e-9), "-1.23456789012e-09");
        assert_eq!(fmt_num(1.5e13), "1.5e+13");
        assert_eq!(fmt_num(123_456.0), "123456");
        assert_eq!(fmt_num(0.0001), "0.0001");
        assert_eq!(fmt_num(-4.440892098500626e-16), "-4.4408920985e-16");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_with_summary() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![Cell::from(1usize), Cell::from(0.5)]);
        let mut s = Table::new(&["max"]);
        s.push(vec![Cell::from(2.0)]);
        let mut r = Report::new("x", t);
        r.summary = Some(s);
        assert_eq!(r.to_csv(), "a,b\n1,0.5\n\nmax\n2\n");
    }
}
